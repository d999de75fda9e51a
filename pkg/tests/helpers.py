"""Shared loaders and corpus groupings."""

from shades import corpus_names, corpus_text
from shades.surface import parse_automaton, parse_system


def load(name: str):
    return parse_system(corpus_text(f"{name}.st"))


def load_aut(name: str):
    return parse_automaton(corpus_text(f"{name}.aut"))


CONTRACTIVE = ["appd", "counter", "iter", "kh", "loop", "loop2", "meta", "meta_cf", "nest", "tree"]
NEGATIVE = ["bad_cf_left", "bad_cf_right", "bad_counter", "bad_cycle", "grow"]
ALL = [n[: -len(".st")] for n in corpus_names()]
# Systems the automata pipeline handles directly (no two-counter, no CF/nested).
COMPILABLE = ["counter", "kh", "loop", "loop2", "meta"]
