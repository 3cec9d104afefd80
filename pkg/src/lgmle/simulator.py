"""Synthetic data generation: i.i.d. latent weights, then independent edge outcomes.

Reproducibility: all draws come from numpy's Philox counter-based generator.
A run seed spawns two independent streams, one for the node weights and one
for the edge outcomes, so enlarging the graph never perturbs the weight draws
of the shared node prefix.  Sampling uses inverse-CDF lookups on the raw
uniform stream, which keeps the draws identical across platforms and numpy
versions.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .distributions import DiscreteDistribution
from .kernels import Kernel
from .rr_graph import (
    LayerStructure,
    RoundRobinGraph,
    build_schedule,
    build_schedule_unchecked,
    layer_decomposition,
)

_WEIGHTS_STREAM = 0
_OUTCOMES_STREAM = 1


def _stream(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), stream])))


def _inverse_cdf(probs: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    return np.searchsorted(cum, uniforms, side="right")


@dataclass
class Dataset:
    """Observed edge outcomes on a scheduled graph.

    ``outcomes`` maps each edge (i, j), i < j, to its outcome value.
    ``true_weights`` (index 0 = node 1) is kept for experiments and is None
    for blind datasets.
    """

    graph: RoundRobinGraph
    layers: LayerStructure
    outcomes: dict[tuple[int, int], object]
    true_weights: np.ndarray | None
    seed: int

    def outcome_list(self) -> list[tuple[int, int, object]]:
        return [(i, j, self.outcomes[(i, j)]) for i, j, _ in self.graph.edges]

    def strip_weights(self) -> "Dataset":
        return Dataset(self.graph, self.layers, self.outcomes, None, self.seed)


def sample_weights(pi: DiscreteDistribution, N: int, seed: int) -> np.ndarray:
    """N i.i.d. draws from pi, reproducible from the weight stream of ``seed``."""
    rng = _stream(seed, _WEIGHTS_STREAM)
    idx = _inverse_cdf(pi.probs, rng.random(N))
    return pi.support[idx]


def sample_outcomes(
    graph: RoundRobinGraph, kernel: Kernel, weights, seed: int
) -> Dataset:
    """Draw each edge outcome from k(., V_i, V_j), independently across edges.

    One uniform is consumed per edge in the graph's round-major edge order.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.size != graph.N:
        raise ValueError(f"need {graph.N} weights, got {weights.size}")
    rng = _stream(seed, _OUTCOMES_STREAM)
    uniforms = rng.random(len(graph.edges))
    ivec = np.array([i for i, _, _ in graph.edges])
    jvec = np.array([j for _, j, _ in graph.edges])
    vi = weights[ivec - 1]
    vj = weights[jvec - 1]
    num_x = len(kernel.outcomes)
    cum = np.cumsum(
        np.exp(np.stack([kernel.log_fn(xi, vi, vj) for xi in range(num_x)])), axis=0
    )
    cum[-1] = 1.0
    drawn = np.sum(uniforms[None, :] >= cum, axis=0)
    outcomes: dict[tuple[int, int], object] = {
        (int(i), int(j)): kernel.outcomes[int(d)] for i, j, d in zip(ivec, jvec, drawn)
    }
    return Dataset(
        graph=graph,
        layers=layer_decomposition(graph),
        outcomes=outcomes,
        true_weights=weights,
        seed=seed,
    )


def simulate(
    pi_star: DiscreteDistribution,
    kernel: Kernel,
    N: int,
    n: int,
    seed: int,
    blind: bool = False,
    strict: bool = True,
) -> Dataset:
    """Schedule, draw weights from pi_star, then draw outcomes.

    ``strict=False`` uses the relaxed scheduler (no n < N/4 bound) for
    exploratory runs; layer-formula oracles will refuse such graphs.
    """
    graph = build_schedule(N, n) if strict else build_schedule_unchecked(N, n)
    weights = sample_weights(pi_star, N, seed)
    ds = sample_outcomes(graph, kernel, weights, seed)
    return ds.strip_weights() if blind else ds


def dataset_to_json_dict(ds: Dataset) -> dict:
    return {
        "N": ds.graph.N,
        "n": ds.graph.n,
        "seed": ds.seed,
        "outcomes": [[i, j, x] for i, j, x in ds.outcome_list()],
        "weights": None if ds.true_weights is None else ds.true_weights.tolist(),
    }


def dataset_to_json(ds: Dataset, path) -> None:
    with open(path, "w") as fh:
        json.dump(dataset_to_json_dict(ds), fh, sort_keys=True)
        fh.write("\n")


def dataset_from_json_dict(doc: dict, strict: bool = True) -> Dataset:
    graph = (
        build_schedule(doc["N"], doc["n"])
        if strict
        else build_schedule_unchecked(doc["N"], doc["n"])
    )
    outcomes = {(i, j): x for i, j, x in doc["outcomes"]}
    missing = [e for e in graph.edge_pairs() if e not in outcomes]
    if missing:
        raise ValueError(f"outcomes missing for edges {missing[:5]}")
    weights = doc.get("weights")
    return Dataset(
        graph=graph,
        layers=layer_decomposition(graph),
        outcomes=outcomes,
        true_weights=None if weights is None else np.asarray(weights, dtype=float),
        seed=doc["seed"],
    )


def dataset_from_json(path, strict: bool = True) -> Dataset:
    with open(path) as fh:
        return dataset_from_json_dict(json.load(fh), strict=strict)


def outcomes_to_csv(ds: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "x"])
        writer.writerows(ds.outcome_list())
