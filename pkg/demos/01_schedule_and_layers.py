"""Round-robin scheduling and the distance-layer decomposition.

Builds the rotation schedule, decomposes the graph into layers around node 1
by BFS, and cross-checks the result against the closed-form prediction,
including the overfull-tail regime where the farthest nodes sit one layer
deeper than the Euclidean quotient suggests.
"""

from lgmle import (
    build_schedule,
    compare_layer_structures,
    layer_decomposition,
    predicted_edge_counts,
    predicted_layers,
)

# First rounds of a small tournament: node 1 stays put, everyone else rotates.
g = build_schedule(20, 3)
for t, rnd in enumerate(g.rounds(), start=1):
    print(f"round {t}: {rnd}")

layers = layer_decomposition(g)
print(f"\nq_max={layers.q_max}, remainder={layers.remainder}")
for q, nodes in enumerate(layers.node_layers):
    print(f"  V_{q} = {nodes}")

# Interior layers hold 2(n-1) nodes and n(n-1) edges per chain block.
within, cross = predicted_edge_counts(g.n)
print(f"\npredicted interior counts: within={within}, cross={cross}")
for q in range(2, layers.division_quotient):
    print(f"  block {q}: {len(layers.block_edges(q))} edges")

# The closed form reproduces BFS exactly.
issues = compare_layer_structures(layers, predicted_layers(20, 3))
print(f"\nclosed-form check (N=20, n=3): {'ok' if not issues else issues}")

# Overfull tail: with N=18, n=4 the remainder r=2 satisfies 2r >= n, so the
# tail arc cannot be absorbed in one layer; node 15 is at distance 4 even
# though the quotient is 2.
layers18 = layer_decomposition(build_schedule(18, 4))
print(f"\nN=18, n=4: quotient={layers18.division_quotient}, q_max={layers18.q_max}")
print(f"  last layers: {layers18.node_layers[-2]} then {layers18.node_layers[-1]}")
print(f"  closed-form check: {'ok' if not compare_layer_structures(layers18, predicted_layers(18, 4)) else 'MISMATCH'}")
