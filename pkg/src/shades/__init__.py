"""Parameterized session types: equation systems, automata and conversions."""

from importlib.resources import files

__version__ = "0.1.0"

NAMED_EXAMPLES = ("loop", "counter", "tree", "meta", "nest", "iter", "kh")


def corpus_text(name: str) -> str:
    """Contents of a bundled example file, e.g. ``corpus_text("loop.st")``."""
    return files(__name__).joinpath("corpus", name).read_text()


def corpus_names(suffix: str = ".st") -> list[str]:
    return sorted(p.name for p in files(__name__).joinpath("corpus").iterdir() if p.name.endswith(suffix))
