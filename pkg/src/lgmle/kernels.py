"""Edge-outcome kernels k(x, v, w) and their uniform lower bounds.

Every kernel maps an outcome x from a finite ordered space and a pair of
positive weights (v, w) to a probability, normalized over x for each weight
pair.  Evaluation is done in log space throughout: interior chain blocks
multiply n(n-1) kernel values, which underflows quickly in probability scale.

For edge (i, j) with i < j the first weight argument is always node i's
weight.  In the home-advantage variant this means the smaller node index is
the home player; the scheduling rounds play no role in home assignment.
This is a convention of this implementation, documented here, not a
consequence of the model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    H1Violated,
    InconsistentBlockShapes,
    NonPositiveWeight,
    OutcomeNotInSpace,
    SupportMismatch,
)

PROB_NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class Kernel:
    """An outcome kernel: ordered outcome space plus a log-probability rule.

    ``log_fn(x_index, v, w)`` must accept numpy arrays for v and w and
    broadcast.  Instances are immutable and safe for concurrent use; the
    per-support log tables they produce are plain read-only arrays.
    """

    name: str
    outcomes: tuple
    log_fn: Callable[[int, np.ndarray, np.ndarray], np.ndarray]
    theta: float | None = None
    table_support: np.ndarray | None = None

    def outcome_index(self, x) -> int:
        try:
            return self.outcomes.index(x)
        except ValueError:
            raise OutcomeNotInSpace(
                f"outcome {x!r} not in outcome space {self.outcomes}"
            ) from None

    def validate_support(self, support: np.ndarray) -> None:
        if self.table_support is not None and not (
            self.table_support.shape == np.shape(support)
            and np.allclose(self.table_support, support, rtol=0, atol=0)
        ):
            raise SupportMismatch(
                f"kernel table is defined on support {self.table_support.tolist()}, "
                f"got {np.asarray(support).tolist()}"
            )

    def log_prob(self, x, v, w) -> float:
        """log k(x, v, w) for scalar weights."""
        xi = self.outcome_index(x)
        v = float(v)
        w = float(w)
        if v <= 0 or w <= 0:
            raise NonPositiveWeight(f"weights must be positive, got v={v}, w={w}")
        if self.table_support is not None:
            self._grid_index(v)
            self._grid_index(w)
        return float(self.log_fn(xi, np.asarray(v), np.asarray(w)))

    def prob(self, x, v, w) -> float:
        return float(np.exp(self.log_prob(x, v, w)))

    def _grid_index(self, value: float) -> int:
        hits = np.nonzero(self.table_support == value)[0]
        if hits.size == 0:
            raise SupportMismatch(
                f"weight {value} is not on the kernel's table support "
                f"{self.table_support.tolist()}"
            )
        return int(hits[0])

    def log_table(self, support) -> np.ndarray:
        """(|X|, s, s) array of log k(x, support[a], support[b])."""
        support = np.asarray(support, dtype=float)
        if np.any(support <= 0):
            raise NonPositiveWeight("support values must be strictly positive")
        self.validate_support(support)
        va = support[:, None]
        wb = support[None, :]
        with np.errstate(divide="ignore"):
            table = np.stack(
                [self.log_fn(xi, va, wb) for xi in range(len(self.outcomes))]
            )
        table.setflags(write=False)
        return table


@dataclass(frozen=True)
class EpsilonCertificate:
    """Exact minimum of k over the finite grid, with its location."""

    epsilon: float
    attained_at: tuple  # (x, v, w)

    def nu(self, block_size: int) -> float:
        """Lower bound epsilon**block_size for a block of that many edges."""
        return self.epsilon**block_size


def bradley_terry() -> Kernel:
    def log_fn(xi, v, w):
        win = np.log(v) - np.log(v + w)
        lose = np.log(w) - np.log(v + w)
        return win if xi == 1 else lose

    return Kernel(name="bradley_terry", outcomes=(0, 1), log_fn=log_fn)


def bt_home_advantage(theta: float) -> Kernel:
    """Home player's weight is scaled by theta; first argument is home."""
    if theta <= 0:
        raise ValueError(f"home-advantage parameter must be positive, got {theta}")

    def log_fn(xi, v, w):
        denom = np.log(theta * v + w)
        return (np.log(theta) + np.log(v) - denom) if xi == 1 else (np.log(w) - denom)

    return Kernel(
        name="bt_home_advantage", outcomes=(0, 1), log_fn=log_fn, theta=theta
    )


def bt_ties(theta: float) -> Kernel:
    """Win/tie/loss outcomes (1/0/-1); theta > 1 controls the tie mass."""
    if theta <= 1:
        raise ValueError(f"ties parameter must exceed 1, got {theta}")

    def log_fn(xi, v, w):
        x = (-1, 0, 1)[xi]
        if x == 1:
            return np.log(v) - np.log(v + theta * w)
        if x == -1:
            return np.log(w) - np.log(theta * v + w)
        return (
            np.log(theta**2 - 1)
            + np.log(v)
            + np.log(w)
            - np.log(theta * v + w)
            - np.log(v + theta * w)
        )

    return Kernel(name="bt_ties", outcomes=(-1, 0, 1), log_fn=log_fn, theta=theta)


def degree_model() -> Kernel:
    """Presence/absence outcome with probability vw/(1+vw) of an edge."""

    def log_fn(xi, v, w):
        log1p = np.log1p(v * w)
        return (np.log(v) + np.log(w) - log1p) if xi == 1 else -log1p

    return Kernel(name="degree_model", outcomes=(0, 1), log_fn=log_fn)


def uniform_kernel(num_outcomes: int = 2) -> Kernel:
    """k(x, v, w) = 1/|X| regardless of weights; handy as an uninformative case."""
    logp = -np.log(num_outcomes)

    def log_fn(xi, v, w):
        shape = np.broadcast(np.asarray(v), np.asarray(w)).shape
        return np.full(shape, logp)

    return Kernel(name="uniform", outcomes=tuple(range(num_outcomes)), log_fn=log_fn)


def custom_table(outcomes, support, table) -> Kernel:
    """Kernel given by an explicit (|X|, s, s) probability table on a grid.

    The table must normalize over outcomes for every weight pair; zero
    entries are allowed at construction (they surface as H1 violations when
    a floor is requested).
    """
    outcomes = tuple(outcomes)
    support = np.asarray(support, dtype=float)
    table = np.asarray(table, dtype=float)
    if table.shape != (len(outcomes), support.size, support.size):
        raise InconsistentBlockShapes(
            f"table shape {table.shape} != (|X|, s, s) = "
            f"({len(outcomes)}, {support.size}, {support.size})"
        )
    if np.any(table < 0) or np.any(table > 1):
        raise ValueError("table entries must be probabilities in [0, 1]")
    sums = table.sum(axis=0)
    if np.max(np.abs(sums - 1.0)) > PROB_NORMALIZATION_TOL:
        raise ValueError(
            f"table must normalize over outcomes within {PROB_NORMALIZATION_TOL}"
        )
    support.setflags(write=False)
    table.setflags(write=False)

    def log_fn(xi, v, w):
        ai = np.searchsorted(support, v)
        bi = np.searchsorted(support, w)
        with np.errstate(divide="ignore"):
            return np.log(table[xi])[ai, bi]

    return Kernel(
        name="custom_table",
        outcomes=outcomes,
        log_fn=log_fn,
        table_support=support,
    )


def custom_table_from_json(path) -> Kernel:
    with open(path) as fh:
        doc = json.load(fh)
    return custom_table(doc["outcomes"], doc["support"], doc["table"])


def kernel_from_config(config: dict) -> Kernel:
    """Build a kernel from a config mapping like {"variant": "bradley_terry"}."""
    variant = config["variant"]
    if variant == "bradley_terry":
        return bradley_terry()
    if variant == "bt_home_advantage":
        return bt_home_advantage(float(config["theta"]))
    if variant == "bt_ties":
        return bt_ties(float(config["theta"]))
    if variant == "degree_model":
        return degree_model()
    if variant == "uniform":
        return uniform_kernel(int(config.get("num_outcomes", 2)))
    if variant == "custom_table":
        if "path" in config:
            return custom_table_from_json(config["path"])
        return custom_table(config["outcomes"], config["support"], config["table"])
    raise ValueError(f"unknown kernel variant {variant!r}")


def kernel_prob(kernel: Kernel, x, v, w) -> float:
    """k(x, v, w) in probability scale."""
    return kernel.prob(x, v, w)


def epsilon_floor(kernel: Kernel, support) -> EpsilonCertificate:
    """Exact minimum of k over outcomes x support x support.

    Raises H1Violated if the minimum is zero: downstream mixing bounds are
    vacuous without a positive floor.
    """
    support = np.asarray(support, dtype=float)
    table = kernel.log_table(support)
    flat = int(np.argmin(table))
    xi, ai, bi = np.unravel_index(flat, table.shape)
    eps = float(np.exp(table[xi, ai, bi]))
    if not np.isfinite(table[xi, ai, bi]) or eps <= 0.0:
        raise H1Violated(
            f"k({kernel.outcomes[xi]}, {support[ai]}, {support[bi]}) = 0 on the grid"
        )
    return EpsilonCertificate(
        epsilon=eps,
        attained_at=(kernel.outcomes[xi], float(support[ai]), float(support[bi])),
    )


def block_log_kernel(kernel, edges, outcomes, nodes_q, nodes_q1, v_block, w_block) -> float:
    """Sum of log k over one chain block, at fixed endpoint weights.

    ``edges`` may touch nodes of layer q (listed in ``nodes_q`` with weights
    ``v_block``) and of layer q+1 (``nodes_q1``/``w_block``); each edge must
    have both endpoints among them.  The first kernel argument is the
    smaller-id endpoint's weight.
    """
    if len(edges) != len(outcomes):
        raise InconsistentBlockShapes(
            f"{len(edges)} edges but {len(outcomes)} outcomes"
        )
    if len(nodes_q) != len(v_block) or len(nodes_q1) != len(w_block):
        raise InconsistentBlockShapes("node lists and weight blocks disagree in length")
    weight_of = {}
    for node, weight in zip(nodes_q, v_block):
        weight_of[node] = weight
    for node, weight in zip(nodes_q1, w_block):
        weight_of[node] = weight
    total = 0.0
    for (i, j), x in zip(edges, outcomes):
        if i not in weight_of or j not in weight_of:
            raise InconsistentBlockShapes(
                f"edge ({i},{j}) has an endpoint outside the two layer blocks"
            )
        total += kernel.log_prob(x, weight_of[i], weight_of[j])
    return total
