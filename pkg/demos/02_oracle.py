"""The oracle at work: a derivation for a gold graph, and what it allows in
the middle of a parse.

The oracle returns every transition after which the gold graph is still
reachable. Training follows a fixed preference among those, and the greedy
derivation below picks by the same kind of priority.
"""
import random

from dagparser.convert import ud_to_dag
from dagparser.fixtures import fixture
from dagparser.transitions import apply
from dagparser.oracle import Oracle, oracle_parse, random_trajectory, reachability_preserving, replay

for name in ("control-made", "nonproj-hearing"):
    gold = ud_to_dag(fixture(name).sentence)
    oracle = Oracle(gold)
    seq = oracle_parse(gold, oracle)
    state = replay(gold, [])
    print(f"== {name}: {len(seq)} transitions")
    for t in seq:
        print(f"  {state.describe():60}  {t}")
        state = apply(state, t)
    print("  rebuilt gold:", state.graph.same_structure(gold))
    print()

# On a short sentence the oracle can be compared with brute-force search
# at every state of a random gold-reachable walk.
gold = ud_to_dag(fixture("short-bark").sentence)
oracle = Oracle(gold)
cache = {}
for state in random_trajectory(gold, random.Random(0), oracle):
    allowed = sorted(map(str, oracle.optimal(state)))
    exhaustive = sorted(map(str, reachability_preserving(state, gold, cache)))
    mark = "agree" if allowed == exhaustive else "DIFFER"
    print(f"{state.describe():40} {mark}: {', '.join(allowed)}")
