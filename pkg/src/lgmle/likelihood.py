"""Exact likelihood on the distance-layer chain by variable elimination.

The joint law of outcomes factorizes over chain blocks: block q couples the
latent weights of layers q and q+1 through the product of edge kernels over
the cross edges q<->q+1 and the within edges of layer q+1.  Eliminating the
layer blocks in order gives the exact marginal likelihood in
O(sum_q s^(|V_q|+|V_q+1|)) time; one block transition matrix is held at a
time.

All arithmetic runs in rescaled probability space with per-block shifts
tracked in log scale (the standard scaled forward-backward scheme), so block
kernels as small as epsilon^(n(n-1)) cause no underflow and the returned
log-likelihood is exact to float64 roundoff.

Block states enumerate the support indices of a layer's nodes in row-major
order of node id within the layer (first node varies slowest); serialized
messages rely on this order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .distributions import DiscreteDistribution
from .errors import (
    H1Violated,
    LayerOutOfRange,
    TooLargeForBruteForce,
)
from .kernels import EpsilonCertificate, Kernel, epsilon_floor
from .simulator import Dataset

_BRUTE_FORCE_CAP = 1_000_000
_BLOCK_CACHE_BUDGET = 4_000_000  # total cached transition-matrix entries
_digits_cache: dict[tuple[int, int], np.ndarray] = {}
_flat_cache: dict[tuple, np.ndarray] = {}


def _digits(s: int, width: int) -> np.ndarray:
    """(s**width, width) table of support indices, first position slowest."""
    key = (s, width)
    cached = _digits_cache.get(key)
    if cached is not None:
        return cached
    out = np.empty((s**width, width), dtype=np.int32)
    for pos in range(width):
        reps = s ** (width - pos - 1)
        out[:, pos] = np.tile(np.repeat(np.arange(s), reps), s**pos)
    out.setflags(write=False)
    if s**width <= 100_000:
        _digits_cache[key] = out
    return out


def _flat_index(s, wq, wq1, pos_lo, pos_hi, lo_in_q: bool) -> np.ndarray:
    """Flat gather indices into an (s, s) table for one cross edge.

    Result has shape (s**wq, s**wq1); entry [S, T] addresses
    table[digit_lo, digit_hi] for block states S of layer q and T of layer
    q+1.  Idempotent to rebuild, so concurrent cache misses are harmless.
    """
    key = (s, wq, wq1, pos_lo, pos_hi, lo_in_q)
    cached = _flat_cache.get(key)
    if cached is not None:
        return cached
    dq = _digits(s, wq)
    dq1 = _digits(s, wq1)
    if lo_in_q:
        flat = dq[:, pos_lo][:, None] * s + dq1[None, :, pos_hi]
    else:
        flat = dq1[None, :, pos_lo] * s + dq[:, pos_hi][:, None]
    flat = np.ascontiguousarray(flat, dtype=np.int32)
    flat.setflags(write=False)
    if flat.size <= _BLOCK_CACHE_BUDGET:
        _flat_cache[key] = flat
    return flat


@dataclass(frozen=True)
class BackwardMessages:
    """Conditional block distributions P(V_k | X_{k:m}) for k = q..m+1.

    ``log_messages[k - q]`` is the normalized log distribution over block
    states of layer k; ``log_normalizers[k - q]`` equals log P(X_{k:m}).
    """

    window: tuple[int, int]
    log_messages: tuple[np.ndarray, ...]
    log_normalizers: tuple[float, ...]


@dataclass(frozen=True)
class ContractionStep:
    """One backward step of two propagated block distributions."""

    layer: int  # transition kernel index k (maps layer k+1 -> k)
    tv: float
    step_factor: float  # 1 - nu_k
    cumulative_bound: float  # initial tv * prod (1 - nu_i)


@dataclass(frozen=True)
class ContractionProfile:
    window: tuple[int, int]
    initial_tv: float
    steps: tuple[ContractionStep, ...]


class LayerChainModel:
    """Chain representation of one (dataset, kernel, support) triple.

    Block transition matrices depend on the kernel and the support grid but
    not on the simplex weights, so a model can be reused across candidate
    distributions (EM iterations, grid scans) on a fixed support.  Matrices
    are cached when the total size is modest, otherwise streamed per block.
    All methods are pure; instances are safe for concurrent reads.
    """

    def __init__(self, dataset: Dataset, kernel: Kernel, support, cache_blocks: bool | None = None):
        self.dataset = dataset
        self.kernel = kernel
        self.support = np.asarray(support, dtype=float)
        self.s = self.support.size
        layers = dataset.layers
        self.layers = layers
        self.num_blocks = layers.q_max + 1

        log_table = kernel.log_table(self.support)
        if not np.all(np.isfinite(log_table)):
            xi, ai, bi = np.unravel_index(int(np.argmin(log_table)), log_table.shape)
            raise H1Violated(
                f"kernel value k({kernel.outcomes[xi]}, {self.support[ai]}, "
                f"{self.support[bi]}) = 0 on the support grid"
            )
        self.log_table = log_table

        self.widths = [len(layer) for layer in layers.node_layers]
        layer_of = layers.layer_of()
        pos_of = {
            v: p for layer in layers.node_layers for p, v in enumerate(layer)
        }
        # Per block: gather plans for cross edges and within edges of the
        # upper layer.  The kernel's first argument is the smaller node id.
        self.block_sizes: list[int] = []
        self._cross_ops: list[list[tuple[int, tuple]]] = []
        self._within_ops: list[list[tuple[int, int, int]]] = []
        for q in range(self.num_blocks):
            cross: list[tuple[int, tuple]] = []
            within: list[tuple[int, int, int]] = []
            for (i, j) in layers.cross_edges[q]:
                xi = kernel.outcome_index(dataset.outcomes[(i, j)])
                lo_in_q = layer_of[i] == q
                if lo_in_q:
                    key = (self.s, self.widths[q], self.widths[q + 1], pos_of[i], pos_of[j], True)
                else:
                    key = (self.s, self.widths[q], self.widths[q + 1], pos_of[i], pos_of[j], False)
                cross.append((xi, key))
            for (i, j) in layers.within_edges[q + 1]:
                xi = kernel.outcome_index(dataset.outcomes[(i, j)])
                within.append((xi, pos_of[i], pos_of[j]))
            self._cross_ops.append(cross)
            self._within_ops.append(within)
            self.block_sizes.append(len(cross) + len(within))

        total_entries = sum(
            self.s ** (self.widths[q] + self.widths[q + 1]) for q in range(self.num_blocks)
        )
        if cache_blocks is None:
            cache_blocks = total_entries <= _BLOCK_CACHE_BUDGET
        self._block_store: list[tuple[np.ndarray, float]] | None = None
        if cache_blocks:
            self._block_store = [self._build_block(q) for q in range(self.num_blocks)]

    # -- block construction -------------------------------------------------

    def _block_log_matrix(self, q: int) -> np.ndarray:
        s = self.s
        shape = (s ** self.widths[q], s ** self.widths[q + 1])
        logM = np.zeros(shape)
        for xi, key in self._cross_ops[q]:
            logM += self.log_table[xi].ravel()[_flat_index(*key)]
        if self._within_ops[q]:
            dq1 = _digits(s, self.widths[q + 1])
            vec = np.zeros(shape[1])
            for xi, pa, pb in self._within_ops[q]:
                vec += self.log_table[xi][dq1[:, pa], dq1[:, pb]]
            logM += vec[None, :]
        return logM

    def _build_block(self, q: int) -> tuple[np.ndarray, float]:
        logM = self._block_log_matrix(q)
        shift = float(logM.max())
        return np.exp(logM - shift), shift

    def _block(self, q: int) -> tuple[np.ndarray, float]:
        if self._block_store is not None:
            return self._block_store[q]
        return self._build_block(q)

    # -- priors ---------------------------------------------------------------

    def _prior(self, probs: np.ndarray, q: int) -> np.ndarray:
        width = self.widths[q]
        if width == 1:
            return probs
        return probs[_digits(self.s, width)].prod(axis=1)

    # -- forward / backward sweeps ---------------------------------------------

    def log_likelihood(self, probs) -> float:
        return self.forward_constants(probs)[0]

    def forward_constants(self, probs) -> tuple[float, np.ndarray]:
        """(log-likelihood, per-block log normalizer) for simplex ``probs``."""
        probs = np.asarray(probs, dtype=float)
        w = self._prior(probs, 0)
        constants = np.empty(self.num_blocks)
        total = 0.0
        for q in range(self.num_blocks):
            mat, shift = self._block(q)
            w = (w @ mat) * self._prior(probs, q + 1)
            c = float(w.sum())
            if c <= 0.0:
                raise H1Violated(f"zero likelihood mass at block {q}")
            w /= c
            constants[q] = np.log(c) + shift
            total += constants[q]
        return total, constants

    def node_marginals(self, probs) -> np.ndarray:
        """(N, s) posterior P(V_i = support[a] | outcomes); row i-1 is node i."""
        return self.posterior_pass(probs)[0]

    def posterior_pass(self, probs) -> tuple[np.ndarray, float]:
        """(node marginals, log-likelihood) from one forward-backward sweep."""
        probs = np.asarray(probs, dtype=float)
        alphas: list[np.ndarray] = []
        w = self._prior(probs, 0)
        alphas.append(w)
        loglik = 0.0
        for q in range(self.num_blocks):
            mat, shift = self._block(q)
            w = (w @ mat) * self._prior(probs, q + 1)
            c = float(w.sum())
            if c <= 0.0:
                raise H1Violated(f"zero likelihood mass at block {q}")
            w = w / c
            alphas.append(w)
            loglik += np.log(c) + shift
        out = np.empty((self.dataset.graph.N, self.s))
        beta = np.ones(self.s ** self.widths[-1])
        for q in range(self.num_blocks, -1, -1):
            gamma = alphas[q] * beta
            gamma /= gamma.sum()
            digits = _digits(self.s, self.widths[q])
            for pos, node in enumerate(self.layers.node_layers[q]):
                out[node - 1] = np.bincount(
                    digits[:, pos], weights=gamma, minlength=self.s
                )
            if q > 0:
                mat, _ = self._block(q - 1)
                beta = mat @ (self._prior(probs, q) * beta)
                beta /= beta.max()
        return out, loglik

    def backward_messages(self, probs, q: int, m: int) -> BackwardMessages:
        """Messages P(V_k | X_{k:m}) and log P(X_{k:m}) for k = q..m+1."""
        self._check_window(q, m)
        probs = np.asarray(probs, dtype=float)
        u = self._prior(probs, m + 1)
        log_z = 0.0
        messages = [np.log(u)]
        normalizers = [0.0]
        for k in range(m, q - 1, -1):
            mat, shift = self._block(k)
            u = self._prior(probs, k) * (mat @ u)
            c = float(u.sum())
            if c <= 0.0:
                raise H1Violated(f"zero conditional mass at block {k}")
            u /= c
            log_z += np.log(c) + shift
            with np.errstate(divide="ignore"):
                messages.append(np.log(u))
            normalizers.append(log_z)
        messages.reverse()
        normalizers.reverse()
        return BackwardMessages(
            window=(q, m),
            log_messages=tuple(messages),
            log_normalizers=tuple(normalizers),
        )

    def conditional_log_prob(self, probs, q: int, m: int) -> float:
        """log P(X_q | X_{q+1:m}) on the interior window."""
        msgs = self.backward_messages(probs, q, m)
        return msgs.log_normalizers[0] - msgs.log_normalizers[1]

    def conditional_profile(self, probs, m: int, q_min: int = 2) -> dict[int, float]:
        """log P(X_q | X_{q+1:m}) for every q in [q_min, m], one sweep."""
        msgs = self.backward_messages(probs, q_min, m)
        z = msgs.log_normalizers
        return {q_min + k: z[k] - z[k + 1] for k in range(m - q_min + 1)}

    def _check_window(self, q: int, m: int) -> None:
        if not 2 <= q <= m <= self.layers.q_max - 1:
            raise LayerOutOfRange(
                f"window must satisfy 2 <= q <= m <= q_max-1 = "
                f"{self.layers.q_max - 1}, got q={q}, m={m}"
            )

    # -- realized backward kernels and their contraction -------------------------

    def backward_kernels(self, probs, q: int, m: int) -> list[np.ndarray]:
        """Row-stochastic matrices R_k mapping layer k+1 states to layer k states.

        R_k[w, a] = P(V_k = a | V_{k+1} = w, X_{q:k}), for k = q..m-1, i.e. the
        realized one-step kernels of the latent chain run backward under the
        conditioning window starting at q.
        """
        self._check_window(q, m)
        probs = np.asarray(probs, dtype=float)
        kernels = []
        g = np.ones(self.s ** self.widths[q])  # P(X_{q:k-1} | V_k), scaled
        for k in range(q, m):
            mat, _ = self._block(k)
            weighted = self._prior(probs, k)[:, None] * g[:, None] * mat
            denom = weighted.sum(axis=0)
            if np.any(denom <= 0.0):
                raise H1Violated(f"zero conditional mass at block {k}")
            kernels.append(np.ascontiguousarray(weighted.T / denom[:, None]))
            g = denom / denom.max()
        return kernels

    def contraction_profile(
        self,
        probs,
        q: int,
        m: int,
        mu1: np.ndarray | None = None,
        mu2: np.ndarray | None = None,
        epsilon: float | None = None,
    ) -> ContractionProfile:
        """Propagate two block distributions of layer m backward to layer q.

        Records the total-variation distance (full-sum convention, range
        [0, 2]) after each realized kernel application, the per-step Doeblin
        factor 1 - nu_k with nu_k = epsilon**|X_k|, and the cumulative
        envelope initial_tv * prod(1 - nu_i).  Defaults: point masses on the
        first and last block states of layer m.
        """
        self._check_window(q, m)
        if epsilon is None:
            epsilon = epsilon_floor(self.kernel, self.support).epsilon
        size_m = self.s ** self.widths[m]
        if mu1 is None:
            mu1 = np.zeros(size_m)
            mu1[0] = 1.0
        if mu2 is None:
            mu2 = np.zeros(size_m)
            mu2[-1] = 1.0
        mu1 = np.asarray(mu1, dtype=float)
        mu2 = np.asarray(mu2, dtype=float)
        kernels = self.backward_kernels(probs, q, m)
        initial_tv = float(np.abs(mu1 - mu2).sum())
        steps = []
        cumulative = initial_tv
        for k in range(m - 1, q - 1, -1):
            kern = kernels[k - q]
            mu1 = mu1 @ kern
            mu2 = mu2 @ kern
            factor = 1.0 - epsilon ** self.block_sizes[k]
            cumulative *= factor
            steps.append(
                ContractionStep(
                    layer=k,
                    tv=float(np.abs(mu1 - mu2).sum()),
                    step_factor=factor,
                    cumulative_bound=cumulative,
                )
            )
        return ContractionProfile(window=(q, m), initial_tv=initial_tv, steps=tuple(steps))


# -- module-level operations ------------------------------------------------------


def _model(dataset: Dataset, pi: DiscreteDistribution, kernel: Kernel) -> LayerChainModel:
    return LayerChainModel(dataset, kernel, pi.support)


def log_likelihood(dataset: Dataset, pi: DiscreteDistribution, kernel: Kernel) -> float:
    """Exact log of the outcome likelihood, all weight assignments marginalized."""
    return _model(dataset, pi, kernel).log_likelihood(pi.probs)


def log_likelihood_profile(
    dataset: Dataset, pi: DiscreteDistribution, kernel: Kernel
) -> tuple[float, np.ndarray]:
    """(log-likelihood, per-block log normalizers) for diagnostics dumps."""
    return _model(dataset, pi, kernel).forward_constants(pi.probs)


def brute_force_log_likelihood(
    dataset: Dataset, pi: DiscreteDistribution, kernel: Kernel
) -> float:
    """Enumeration oracle: direct sum over all support**N assignments."""
    ll = _brute_force_assignment_logliks(dataset, pi, kernel)
    return float(logsumexp(ll))


def brute_force_node_marginals(
    dataset: Dataset, pi: DiscreteDistribution, kernel: Kernel
) -> np.ndarray:
    """Enumeration oracle for the per-node posteriors, (N, s)."""
    ll = _brute_force_assignment_logliks(dataset, pi, kernel)
    w = np.exp(ll - ll.max())
    w /= w.sum()
    N = dataset.graph.N
    digits = _digits(pi.size, N)
    out = np.empty((N, pi.size))
    for node in range(1, N + 1):
        out[node - 1] = np.bincount(digits[:, node - 1], weights=w, minlength=pi.size)
    return out


def _brute_force_assignment_logliks(dataset, pi, kernel) -> np.ndarray:
    s = pi.size
    N = dataset.graph.N
    if s**N > _BRUTE_FORCE_CAP:
        raise TooLargeForBruteForce(
            f"support^N = {s}^{N} exceeds the {_BRUTE_FORCE_CAP} assignment cap"
        )
    table = kernel.log_table(pi.support)
    if not np.all(np.isfinite(table)):
        raise H1Violated("kernel has a zero value on the support grid")
    digits = _digits(s, N)
    with np.errstate(divide="ignore"):
        log_probs = np.log(pi.probs)
    ll = log_probs[digits].sum(axis=1)
    for (i, j), x in dataset.outcomes.items():
        xi = kernel.outcome_index(x)
        ll = ll + table[xi].ravel()[digits[:, i - 1] * s + digits[:, j - 1]]
    return ll


def posterior_node_marginals(
    dataset: Dataset, pi: DiscreteDistribution, kernel: Kernel
) -> np.ndarray:
    """Exact posterior P(V_i = support[a] | outcomes) for every node, (N, s)."""
    return _model(dataset, pi, kernel).node_marginals(pi.probs)


def conditional_log_prob(
    dataset: Dataset, pi: DiscreteDistribution, kernel: Kernel, q: int, m: int
) -> float:
    """log P(X_q | X_{q+1:m}) for an interior window 2 <= q <= m <= q_max-1."""
    return _model(dataset, pi, kernel).conditional_log_prob(pi.probs, q, m)


def backward_messages(
    dataset: Dataset, pi: DiscreteDistribution, kernel: Kernel, q: int, m: int
) -> BackwardMessages:
    return _model(dataset, pi, kernel).backward_messages(pi.probs, q, m)


def backward_contraction_profile(
    dataset: Dataset,
    pi: DiscreteDistribution,
    kernel: Kernel,
    q: int | None = None,
    m: int | None = None,
    mu1: np.ndarray | None = None,
    mu2: np.ndarray | None = None,
    epsilon: float | None = None,
) -> ContractionProfile:
    """Measured total-variation contraction of the realized backward kernels."""
    model = _model(dataset, pi, kernel)
    if q is None:
        q = 2
    if m is None:
        m = dataset.layers.q_max - 1
    return model.contraction_profile(pi.probs, q, m, mu1=mu1, mu2=mu2, epsilon=epsilon)


def certified_nu(kernel: Kernel, pi: DiscreteDistribution, n: int) -> tuple[EpsilonCertificate, float]:
    """(epsilon certificate, nu = epsilon**(n(n-1))) for interior blocks."""
    cert = epsilon_floor(kernel, pi.support)
    return cert, cert.epsilon ** (n * (n - 1))
