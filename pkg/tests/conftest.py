import itertools
import math

import numpy as np
import pytest

from lgmle import (
    DiscreteDistribution,
    bradley_terry,
    bt_home_advantage,
    bt_ties,
    degree_model,
    simulate,
)


def kernel_variants():
    """The four closed-form kernel families, fixed parameters."""
    return [
        bradley_terry(),
        bt_home_advantage(1.5),
        bt_ties(2.0),
        degree_model(),
    ]


def random_distribution(rng, size, lo=0.5, hi=4.0):
    support = np.sort(rng.uniform(lo, hi, size=size))
    while np.any(np.diff(support) < 1e-3):
        support = np.sort(rng.uniform(lo, hi, size=size))
    probs = rng.dirichlet(np.ones(size))
    probs = np.maximum(probs, 0.05)
    probs /= probs.sum()
    return DiscreteDistribution(support, probs)


def small_instances(count, rng_seed=123, N_choices=(10, 12), n=2, s_choices=(2, 3)):
    """Randomized brute-forceable instances cycling through kernel variants."""
    rng = np.random.default_rng(rng_seed)
    kernels = kernel_variants()
    out = []
    for idx in range(count):
        kernel = kernels[idx % len(kernels)]
        N = int(rng.choice(N_choices))
        s = int(rng.choice(s_choices))
        pi = random_distribution(rng, s)
        ds = simulate(pi, kernel, N, n, seed=int(rng.integers(1, 2**31)))
        out.append((ds, pi, kernel))
    return out


def enumerate_window_logprob(ds, pi, kernel, a, b):
    """Independent enumeration of log P(X_a, ..., X_b): sums over every joint
    weight assignment of layers a..b+1.  Exponential; keep windows tiny."""
    layers = ds.layers
    if a > b:
        return 0.0
    widths = [len(layers.node_layers[q]) for q in range(a, b + 2)]
    nodes = [layers.node_layers[q] for q in range(a, b + 2)]
    sup = list(pi.support)
    total = 0.0
    for assign in itertools.product(
        *[list(itertools.product(range(pi.size), repeat=w)) for w in widths]
    ):
        weight_of = {}
        prob = 1.0
        for layer_nodes, idxs in zip(nodes, assign):
            for node, ai in zip(layer_nodes, idxs):
                weight_of[node] = sup[ai]
                prob *= pi.probs[ai]
        for q in range(a, b + 1):
            for (i, j) in layers.block_edges(q):
                prob *= kernel.prob(ds.outcomes[(i, j)], weight_of[i], weight_of[j])
        total += prob
    return math.log(total)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
