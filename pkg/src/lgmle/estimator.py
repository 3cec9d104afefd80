"""Maximum likelihood over finite-support weight distributions.

The support grid is fixed and only the simplex weights are free.  EM is the
default: the expectation step is exact (posterior node marginals on the layer
chain) and the maximization step for an i.i.d. prior averages them, so the
log-likelihood never decreases.  Grid mode simply scans an explicit candidate
list and takes the argmax (ties broken by lowest candidate index).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import DiscreteDistribution, random_simplex, uniform
from .errors import NoCandidates
from .kernels import Kernel
from .likelihood import LayerChainModel
from .simulator import Dataset

# EM keeps every support point at this floor instead of letting weights hit
# exact zero: a zero would shrink the effective support and change the
# certified kernel floor mid-run.
WEIGHT_FLOOR = 1e-12


@dataclass
class FitConfig:
    """Settings for :func:`fit_mle`.

    ``mode`` is "em" or "grid".  EM initialization: "uniform" starts at the
    flat simplex (additional restarts use random draws), "random" draws every
    start from Dirichlet(1,..,1), "explicit" takes ``init_list``.  Grid mode
    ignores the EM fields and scans ``candidates``.
    """

    support: tuple[float, ...]
    mode: str = "em"
    init: str = "uniform"
    init_list: list[DiscreteDistribution] | None = None
    max_iters: int = 200
    tol: float = 1e-8
    restarts: int = 1
    seed: int = 0
    candidates: list[DiscreteDistribution] | None = None

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.mode not in ("em", "grid"):
            raise ValueError(f"unknown fit mode {self.mode!r}")
        if self.init not in ("uniform", "random", "explicit"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class FitResult:
    pi_hat: DiscreteDistribution
    final_log_lik: float
    trajectory: list[float]
    converged: bool
    restart_index: int
    restart_final_logliks: list[float] = field(default_factory=list)


def _floor_simplex(probs: np.ndarray, floor: float = WEIGHT_FLOOR) -> np.ndarray:
    probs = np.maximum(probs, floor)
    return probs / probs.sum()


def em_step(dataset: Dataset, pi: DiscreteDistribution, kernel: Kernel) -> DiscreteDistribution:
    """One EM update: average the exact posterior node marginals.

    Weights below the floor are clipped and renormalized (documented
    deviation from the pure update; see WEIGHT_FLOOR).
    """
    model = LayerChainModel(dataset, kernel, pi.support)
    marginals = model.node_marginals(pi.probs)
    return pi.with_probs(_floor_simplex(marginals.mean(axis=0)))


def _em_run(model: LayerChainModel, start: np.ndarray, config: FitConfig):
    probs = np.asarray(start, dtype=float)
    marginals, ll = model.posterior_pass(probs)
    trajectory = [ll]
    converged = False
    for _ in range(config.max_iters):
        probs = _floor_simplex(marginals.mean(axis=0))
        marginals, ll_new = model.posterior_pass(probs)
        trajectory.append(ll_new)
        if ll_new - ll < config.tol * max(1.0, abs(ll)):
            converged = True
            ll = ll_new
            break
        ll = ll_new
    return probs, ll, trajectory, converged


def _em_starts(config: FitConfig) -> list[np.ndarray]:
    support = np.asarray(config.support, dtype=float)
    starts: list[np.ndarray] = []
    if config.init == "explicit":
        if not config.init_list or len(config.init_list) < config.restarts:
            raise ValueError("explicit init requires init_list with one entry per restart")
        return [np.asarray(d.probs, dtype=float) for d in config.init_list[: config.restarts]]
    for r in range(config.restarts):
        if config.init == "uniform" and r == 0:
            starts.append(uniform(support).probs)
        else:
            rng = np.random.Generator(
                np.random.Philox(np.random.SeedSequence([int(config.seed), 100 + r]))
            )
            starts.append(random_simplex(support, rng).probs)
    return starts


def fit_mle(dataset: Dataset, kernel: Kernel, config: FitConfig) -> FitResult:
    """Best fit across restarts (EM) or candidates (grid).

    Grid mode returns the exhaustive argmax over ``config.candidates`` with
    ties broken by the lowest candidate index.  EM mode runs
    ``config.restarts`` starts and keeps the highest final log-likelihood
    (ties: lowest restart index); every restart's final value is reported.
    """
    if config.mode == "grid":
        if not config.candidates:
            raise NoCandidates("grid mode needs a non-empty candidate list")
        values = []
        for cand in config.candidates:
            model = LayerChainModel(dataset, kernel, cand.support)
            values.append(model.log_likelihood(cand.probs))
        best = 0
        for idx, value in enumerate(values):
            if value > values[best]:
                best = idx
        return FitResult(
            pi_hat=config.candidates[best],
            final_log_lik=values[best],
            trajectory=[values[best]],
            converged=True,
            restart_index=best,
            restart_final_logliks=values,
        )

    support = np.asarray(config.support, dtype=float)
    model = LayerChainModel(dataset, kernel, support)
    best_result = None
    best_index = -1
    finals: list[float] = []
    for r, start in enumerate(_em_starts(config)):
        probs, ll, trajectory, converged = _em_run(model, start, config)
        finals.append(ll)
        if best_result is None or ll > best_result[1]:
            best_result = (probs, ll, trajectory, converged)
            best_index = r
    probs, ll, trajectory, converged = best_result
    return FitResult(
        pi_hat=DiscreteDistribution(support, probs),
        final_log_lik=ll,
        trajectory=trajectory,
        converged=converged,
        restart_index=best_index,
        restart_final_logliks=finals,
    )


def profile_likelihood(
    dataset: Dataset, kernel: Kernel, candidates: list[DiscreteDistribution]
) -> list[tuple[DiscreteDistribution, float]]:
    """Per-candidate log-likelihood normalized by the layer count q_max."""
    q_max = dataset.layers.q_max
    out = []
    for cand in candidates:
        model = LayerChainModel(dataset, kernel, cand.support)
        out.append((cand, model.log_likelihood(cand.probs) / q_max))
    return out
