"""From a CoNLL-U sentence with enhanced dependencies to the unified DAG
and back.

The sentence is "We were made to feel very welcome ." Its basic tree makes
"We" the subject of "made" only; the enhanced graph also makes it the
subject of "feel" and "welcome". In the DAG those two extra subjects become
remote edges.
"""
from dagparser.conllu import write_conllu
from dagparser.convert import dag_to_ud, strip_and_drop, ud_to_dag
from dagparser.fixtures import fixture

sentence = fixture("control-made").sentence
print(write_conllu([sentence]))

graph = ud_to_dag(sentence)
print(graph.to_text())

print("non-terminals, with the words they cover and their gap profile:")
for node in graph.nonterminals:
    head = graph.head_terminal_of(node.id)
    words = [graph[t].text for t in graph.terminal_yield(node.id)]
    print(f"  node {node.id:2d} headed by {graph[head].text!r:10} covers {' '.join(words)!r}"
          f" gaps {graph.gap_profile(node.id)}")

remote = [e for e in graph.edges if e.remote]
print(f"\n{len(remote)} remote edges:", ", ".join(f"{e.parent}->{e.child} {e.label}" for e in remote))

# The inverse conversion collapses head edges. Subtypes are gone, so the
# round trip matches the stripped sentence rather than the original.
back = dag_to_ud(graph, sentence.tokens, sentence.comments)
print()
print(write_conllu([back]))
assert write_conllu([back]) == write_conllu([strip_and_drop(sentence)])
print("round trip equals the subtype-stripped original")
