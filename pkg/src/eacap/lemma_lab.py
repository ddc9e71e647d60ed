"""Exact small-n checks of the entropy identities and inequalities behind the protocol.

Everything here builds the relevant operators explicitly (tensor products,
permutation mixtures, sign-randomized purifications, type-class decompositions)
and evaluates entropies by diagonalization.  Nothing is sampled except in
:func:`lemma1_trend`, whose subject is an expectation.

Sizes are capped (``n <= 8`` factors, total dimension ``<= 4096`` by default);
past the caps a :class:`CapExceededError` is raised instead of approximating.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .channel import KrausChannel, apply_array
from .qmatrix import (
    BipartiteState,
    DensityMatrix,
    entropy_of_spectrum,
    matrix_entropy,
    partial_trace_array,
    purification_vector,
    random_density_matrix,
    von_neumann_entropy,
)

MAX_N = 8
MAX_DIM = 4096
SLACK_TOL = 1e-8


class CapExceededError(ValueError):
    """The requested instance is larger than the configured exact-evaluation caps."""


class LemmaViolation(AssertionError):
    """A checked inequality or identity failed beyond its tolerance."""


def _matrices(states) -> list[np.ndarray]:
    return [s.matrix if isinstance(s, DensityMatrix) else np.asarray(s, dtype=complex) for s in states]


@dataclass(frozen=True)
class PermutationMixtureSpec:
    """``n`` same-dimension states whose symmetrized tensor product is studied."""

    states: tuple[DensityMatrix, ...]
    max_n: int = MAX_N
    max_dim: int = MAX_DIM

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if not self.states:
            raise ValueError("need at least one state")
        if len({s.dim for s in self.states}) != 1:
            raise ValueError("all states must share one dimension")
        if self.n > self.max_n:
            raise CapExceededError(f"n = {self.n} exceeds the cap {self.max_n}")
        if self.effective_dim > self.max_dim:
            raise CapExceededError(
                f"dimension {self.dim}^{self.n} = {self.effective_dim} exceeds the cap {self.max_dim}"
            )

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    @property
    def effective_dim(self) -> int:
        return self.dim**self.n


def _as_spec(states) -> PermutationMixtureSpec:
    if isinstance(states, PermutationMixtureSpec):
        return states
    return PermutationMixtureSpec(tuple(states))


def _group(mats: list[np.ndarray]) -> tuple[list[np.ndarray], tuple[int, ...]]:
    """Distinct matrices (exact equality) and their multiplicities."""
    distinct: list[np.ndarray] = []
    counts: list[int] = []
    for m in mats:
        for i, d in enumerate(distinct):
            if d.shape == m.shape and np.array_equal(d, m):
                counts[i] += 1
                break
        else:
            distinct.append(m)
            counts.append(1)
    return distinct, tuple(counts)


class _ArrangementMixer:
    """``k``-fold marginals of the uniform mixture over orderings of a multiset.

    ``mixture(counts, k)`` is the average, over ordered draws without
    replacement of ``k`` items from the multiset ``counts``, of the tensor
    product of the drawn matrices.  The first draw is item ``s`` with
    probability ``counts[s] / total``, which gives the recursion used here.
    Memoizing on the remaining multiset replaces the ``n!`` permutation sum.
    """

    def __init__(self, distinct: list[np.ndarray]):
        self.distinct = distinct
        self.memo: dict[tuple[tuple[int, ...], int], np.ndarray] = {}

    def mixture(self, counts: tuple[int, ...], k: int) -> np.ndarray:
        if k == 0:
            return np.ones((1, 1), dtype=complex)
        key = (counts, k)
        if key not in self.memo:
            total = sum(counts)
            acc = None
            for s, c in enumerate(counts):
                if c == 0:
                    continue
                rest = counts[:s] + (c - 1,) + counts[s + 1 :]
                term = (c / total) * np.kron(self.distinct[s], self.mixture(rest, k - 1))
                acc = term if acc is None else acc + term
            self.memo[key] = acc
        return self.memo[key]


def permutation_mixture(states, k: int | None = None) -> np.ndarray:
    """``(1/n!) sum_pi rho_pi(1) x ... x rho_pi(k)`` as a dense matrix (``k = n`` by default)."""
    spec = _as_spec(states)
    k = spec.n if k is None else k
    if not 0 <= k <= spec.n:
        raise ValueError(f"k must lie in [0, {spec.n}]")
    distinct, counts = _group(_matrices(spec.states))
    return _ArrangementMixer(distinct).mixture(counts, k)


def permuted_mixture_entropy(states) -> float:
    """Entropy (bits) of the uniform mixture of all orderings of ``rho_1 x ... x rho_n``."""
    return matrix_entropy(permutation_mixture(states))


def avg_k_subset_entropy(states, k: int) -> float:
    """Average over all ``k``-subsets of the entropy of the subset's mean state."""
    mats = _matrices(states.states if isinstance(states, PermutationMixtureSpec) else states)
    n = len(mats)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}]")
    values = [matrix_entropy(sum(mats[i] for i in sub) / k) for sub in itertools.combinations(range(n), k)]
    return float(np.mean(values))


@dataclass(frozen=True)
class Lemma2Report:
    lhs: float
    rhs: float
    slack: float
    passed: bool
    subset_entropies: tuple[float, ...] = ()


def _subset_table(states) -> tuple[float, ...]:
    """``avg_k_subset_entropy`` for ``k = 1..n`` (index ``k - 1``)."""
    n = len(states)
    return tuple(avg_k_subset_entropy(states, k) for k in range(1, n + 1))


def check_lemma2(states, strict: bool = True) -> Lemma2Report:
    """Symmetrized-product entropy against the sum of average k-subset entropies.

    ``lhs = H(mixture over orderings)``, ``rhs = sum_{k=1..n} Hbar(rho_bar_k)``;
    the inequality ``lhs >= rhs`` is required to hold to within ``1e-8``.
    """
    spec = _as_spec(states)
    table = _subset_table(spec.states)
    lhs = permuted_mixture_entropy(spec)
    rhs = sum(table)
    slack = lhs - rhs
    report = Lemma2Report(lhs, rhs, slack, slack >= -SLACK_TOL, table)
    if strict and not report.passed:
        raise LemmaViolation(f"symmetrized-product bound violated: slack {slack:.3e}")
    return report


@dataclass(frozen=True)
class TelescopingReport:
    k: int
    lhs: float
    rhs: float
    conditioned_rhs: float
    slack: float
    passed: bool


def check_telescoping_step(states, k: int, strict: bool = True) -> TelescopingReport:
    """Step ``k`` of the telescoping argument.

    ``lhs`` is the entropy increase from the ``k``-fold to the ``(k+1)``-fold
    marginal of the permutation mixture.  ``conditioned_rhs`` is the same
    increase after conditioning on which states occupy the first ``k`` slots,
    built explicitly as ``H(rho_T x mean(rest)) - H(rho_T)`` and averaged over
    all choices ``T`` (orderings of ``T`` give unitarily equivalent states, so
    each member set is built once).  ``rhs`` is its closed form, the average
    entropy of the mean of ``n - k`` states.
    """
    spec = _as_spec(states)
    n = spec.n
    if not 0 <= k <= n - 1:
        raise ValueError(f"k must lie in [0, {n - 1}]")
    mats = _matrices(spec.states)
    distinct, counts = _group(mats)
    mixer = _ArrangementMixer(distinct)
    lhs = matrix_entropy(mixer.mixture(counts, k + 1)) - matrix_entropy(mixer.mixture(counts, k))

    diffs = []
    for fixed in itertools.combinations(range(n), k):
        prefix = np.ones((1, 1), dtype=complex)
        for i in fixed:
            prefix = np.kron(prefix, mats[i])
        rest = [mats[i] for i in range(n) if i not in fixed]
        mean_rest = sum(rest) / len(rest)
        diffs.append(matrix_entropy(np.kron(prefix, mean_rest)) - matrix_entropy(prefix))
    conditioned = float(np.mean(diffs))
    rhs = avg_k_subset_entropy(mats, n - k)
    slack = lhs - rhs
    passed = slack >= -SLACK_TOL and abs(conditioned - rhs) <= 1e-9
    report = TelescopingReport(k, lhs, rhs, conditioned, slack, passed)
    if strict and not passed:
        raise LemmaViolation(
            f"telescoping step {k} failed: slack {slack:.3e}, "
            f"conditioned/closed-form mismatch {abs(conditioned - rhs):.3e}"
        )
    return report


@dataclass(frozen=True)
class TelescopingSummary:
    steps: tuple[TelescopingReport, ...]
    lemma2: Lemma2Report
    rhs_sum: float
    lhs_sum: float
    passed: bool


def check_telescoping(states, strict: bool = True) -> TelescopingSummary:
    """All steps ``k = 0..n-1`` plus the two telescoping sums.

    The step right-hand sides are added in order of subset size so that their
    sum is the very same floating-point sum as the symmetrized-product right-hand side.
    """
    spec = _as_spec(states)
    steps = tuple(check_telescoping_step(spec, k, strict=strict) for k in range(spec.n))
    lemma2 = check_lemma2(spec, strict=strict)
    rhs_sum = sum(s.rhs for s in sorted(steps, key=lambda s: spec.n - s.k))
    lhs_sum = math.fsum(s.lhs for s in steps)
    passed = (
        all(s.passed for s in steps)
        and lemma2.passed
        and rhs_sum == lemma2.rhs
        and abs(lhs_sum - lemma2.lhs) <= 1e-9
    )
    if strict and not passed:
        raise LemmaViolation("telescoping sums do not reproduce the symmetrized-product bound")
    return TelescopingSummary(steps, lemma2, rhs_sum, lhs_sum, passed)


# ---------------------------------------------------------------------------
# averaged symmetrized entropy over random draws


@dataclass(frozen=True)
class DiscreteSampler:
    """Draws ``states[i]`` with probability ``weights[i]``."""

    states: tuple[DensityMatrix, ...]
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        w = np.full(len(self.states), 1 / len(self.states)) if self.weights is None else np.asarray(self.weights, float)
        if w.size != len(self.states) or np.any(w < 0) or abs(w.sum() - 1) > 1e-9:
            raise ValueError("weights must be a probability vector matching the states")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def draw(self, rng: np.random.Generator, n: int) -> list[DensityMatrix]:
        idx = rng.choice(len(self.states), size=n, p=self.weights)
        return [self.states[i] for i in idx]

    def mean(self) -> DensityMatrix:
        return DensityMatrix(sum(w * s.matrix for w, s in zip(self.weights, self.states)))


@dataclass(frozen=True)
class RandomStateSampler:
    """Draws ``G G^dagger / tr`` with ``G`` a ``dim x rank`` Ginibre matrix; mean ``I/dim``."""

    dim: int
    rank: int | None = None

    def draw(self, rng: np.random.Generator, n: int) -> list[DensityMatrix]:
        return [random_density_matrix(self.dim, self.rank, rng) for _ in range(n)]

    def mean(self) -> DensityMatrix:
        # unitarily invariant distribution
        return DensityMatrix.maximally_mixed(self.dim)


@dataclass(frozen=True)
class Lemma1Row:
    n: int
    mean_normalized_entropy: float
    target: float
    gap: float
    stderr: float
    worst_instance_excess: float


@dataclass(frozen=True)
class Lemma1Report:
    rows: tuple[Lemma1Row, ...]
    passed: bool
    failures: tuple[str, ...] = ()


def lemma1_trend(sampler, n_values: Sequence[int], trials: int, seed: int = 0,
                 strict: bool = True) -> Lemma1Report:
    """Monte Carlo estimate of ``E[(1/n) H(permutation mixture)]`` against ``H(rho_bar)``.

    Checked, for every ``n``: each instance obeys ``(1/n) H <= H(mean of its
    states)`` (subadditivity); the mean gap to ``H(rho_bar)`` is nonnegative
    within 3 standard errors; and the gap does not increase along `n_values`
    beyond 3 combined standard errors.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n_values = [int(n) for n in n_values]
    target = von_neumann_entropy(sampler.mean())
    rows = []
    failures = []
    for n in n_values:
        if n < 1:
            raise ValueError("n must be >= 1")
        if n > MAX_N or sampler.dim**n > MAX_DIM:
            raise CapExceededError(f"n = {n} exceeds the exact-evaluation caps")
        values = []
        worst = -math.inf
        for child in np.random.SeedSequence([seed, n]).spawn(trials):
            states = sampler.draw(np.random.default_rng(child), n)
            h = permuted_mixture_entropy(states) / n
            sample_mean = DensityMatrix(sum(s.matrix for s in states) / n)
            worst = max(worst, h - von_neumann_entropy(sample_mean))
            values.append(h)
        mean = float(np.mean(values))
        se = float(np.std(values, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        rows.append(Lemma1Row(n, mean, target, target - mean, se, worst))
        if worst > SLACK_TOL:
            failures.append(f"n={n}: instance exceeds its subadditivity bound by {worst:.3e}")
        if target - mean < -3 * se - SLACK_TOL:
            failures.append(f"n={n}: mean exceeds H(rho_bar) by {mean - target:.3e}")
    for a, b in zip(rows, rows[1:]):
        if b.gap > a.gap + 3 * math.hypot(a.stderr, b.stderr) + SLACK_TOL:
            failures.append(f"gap grows from n={a.n} ({a.gap:.4f}) to n={b.n} ({b.gap:.4f})")
    report = Lemma1Report(tuple(rows), not failures, tuple(failures))
    if strict and failures:
        raise LemmaViolation("; ".join(failures))
    return report


def classical_bits_normalized_entropy(n: int) -> float:
    """Exact ``E[(1/n) H]`` for ``n`` fair draws from ``{|0><0|, |1><1|}``.

    With ``m`` ones the mixture is uniform over the ``C(n, m)`` bit strings of
    that weight.
    """
    return sum(math.comb(n, m) / 2**n * math.log2(math.comb(n, m)) for m in range(n + 1)) / n


# ---------------------------------------------------------------------------
# random sign changes in the eigenbasis


@dataclass(frozen=True)
class PhasePattern:
    signs: tuple[int, ...]

    def __post_init__(self):
        if not self.signs or self.signs[0] != 1 or any(s not in (1, -1) for s in self.signs):
            raise ValueError("signs must be +-1 with the first fixed to +1")


def phase_patterns(dim: int) -> list[PhasePattern]:
    """The ``2**(dim-1)`` sign patterns up to a global phase."""
    return [PhasePattern((1,) + rest) for rest in itertools.product((1, -1), repeat=dim - 1)]


def phase_average_state(rho: DensityMatrix, atol: float = 1e-12) -> BipartiteState:
    """Average of the sign-randomized canonical purifications of `rho`.

    The result must equal ``sum_j l_j |v_j v_j><v_j v_j|`` entrywise within
    `atol`; :class:`LemmaViolation` is raised otherwise.
    """
    d = rho.dim
    lam, vecs = rho.eigh()
    lam = np.clip(lam, 0.0, None)
    psi = purification_vector(rho.matrix)
    acc = np.zeros((d * d, d * d), dtype=complex)
    patterns = phase_patterns(d)
    for pat in patterns:
        sign_op = (vecs * np.array(pat.signs)) @ vecs.conj().T
        v = np.kron(sign_op, np.eye(d)) @ psi
        acc += np.outer(v, v.conj())
    acc /= len(patterns)
    expected = sum(l * np.outer(np.kron(v, v), np.kron(v, v).conj()) for l, v in zip(lam, vecs.T))
    dev = float(np.max(np.abs(acc - expected)))
    if dev > atol:
        raise LemmaViolation(f"phase average deviates from the decohered state by {dev:.3e}")
    return BipartiteState(d, d, DensityMatrix(acc))


@dataclass(frozen=True)
class PhaseReport:
    max_deviation: float
    min_partial_transpose_eigenvalue: float
    max_offdiagonal_in_eigenbasis: float
    passed: bool


def check_phase_average(rho: DensityMatrix, atol: float = 1e-12, strict: bool = True) -> PhaseReport:
    """Phase-average identity plus the absence of entanglement in its output.

    The averaged state must have a positive partial transpose and be diagonal
    in the ``|v_j v_k>`` product eigenbasis with weight ``l_j`` on ``|v_j v_j>``.
    """
    d = rho.dim
    lam, vecs = rho.eigh()
    state = phase_average_state(rho, atol=1.0)  # deviation judged below
    m = state.matrix
    expected = sum(l * np.outer(np.kron(v, v), np.kron(v, v).conj()) for l, v in zip(np.clip(lam, 0, None), vecs.T))
    dev = float(np.max(np.abs(m - expected)))
    pt = m.reshape(d, d, d, d).transpose(0, 3, 2, 1).reshape(d * d, d * d)
    min_pt = float(np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))[0])
    basis = np.kron(vecs, vecs)
    in_basis = basis.conj().T @ m @ basis
    target = np.zeros(d * d)
    target[np.arange(d) * (d + 1)] = np.clip(lam, 0, None)
    target = np.diag(target)
    off = float(np.max(np.abs(in_basis - target)))
    passed = dev <= atol and min_pt >= -atol and off <= 1e-10
    report = PhaseReport(dev, min_pt, off, passed)
    if strict and not passed:
        raise LemmaViolation(f"phase-average checks failed: {report}")
    return report


# ---------------------------------------------------------------------------
# strong subadditivity step of the converse


@dataclass(frozen=True)
class SSAReport:
    h_b: float
    h_ab: float
    h_br: float
    h_abr: float
    lhs: float
    rhs: float
    slack: float
    passed: bool


def check_ssa(state, dims: Sequence[int] = (2, 2, 2), strict: bool = True) -> SSAReport:
    """``H(B) - H(AB) <= H(BR) - H(ABR)`` for a state on ``A x B x R``.

    ``lhs = H(B) - H(AB)``, ``rhs = H(BR) - H(ABR)``, ``slack = rhs - lhs``.
    """
    m = state.matrix if isinstance(state, DensityMatrix) else np.asarray(state, dtype=complex)
    total = int(np.prod(dims))
    if len(dims) != 3:
        raise ValueError("expected three subsystem dimensions (A, B, R)")
    if total > MAX_DIM:
        raise CapExceededError(f"total dimension {total} exceeds the cap {MAX_DIM}")
    h_abr = matrix_entropy(m)
    h_ab = matrix_entropy(partial_trace_array(m, dims, [0, 1]))
    h_br = matrix_entropy(partial_trace_array(m, dims, [1, 2]))
    h_b = matrix_entropy(partial_trace_array(m, dims, [1]))
    lhs = h_b - h_ab
    rhs = h_br - h_abr
    slack = rhs - lhs
    report = SSAReport(h_b, h_ab, h_br, h_abr, lhs, rhs, slack, slack >= -SLACK_TOL)
    if strict and not report.passed:
        raise LemmaViolation(f"strong subadditivity violated: slack {slack:.3e}")
    return report


def ghz_state(n_qubits: int = 3) -> DensityMatrix:
    psi = np.zeros(2**n_qubits, dtype=complex)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    return DensityMatrix.from_vector(psi)


# ---------------------------------------------------------------------------
# type classes


@dataclass(frozen=True)
class TypeClassTally:
    """Counts ``m_ij`` of eigenvector ``j`` of ensemble state ``i``; ``n_i = sum_j m_ij``."""

    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if any(c < 0 for row in self.counts for c in row):
            raise ValueError("counts must be nonnegative")

    @property
    def per_state(self) -> tuple[int, ...]:
        return tuple(sum(row) for row in self.counts)

    @property
    def n(self) -> int:
        return sum(self.per_state)


def _compositions(n: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, parts - 1):
            yield (first,) + rest


def enumerate_tallies(dim: int, ensemble_size: int, n: int) -> Iterator[TypeClassTally]:
    for flat in _compositions(n, dim * ensemble_size):
        yield TypeClassTally(tuple(flat[i * dim:(i + 1) * dim] for i in range(ensemble_size)))


@dataclass(frozen=True)
class TypeClassReport:
    count: int
    value: float
    bound: float
    enumerated: bool
    passed: bool


def type_class_entropy(dim: int, ensemble_size: int, n: int, enumeration_limit: int = 200_000,
                       strict: bool = True) -> TypeClassReport:
    """``log2`` of the number of possible tallies: the largest entropy the type can carry.

    The count is ``C(n + m d - 1, m d - 1)``; it is also enumerated when below
    `enumeration_limit`.  Checked bound: ``value <= m d log2(n + 1)``.
    """
    if dim < 1 or ensemble_size < 1 or n < 0:
        raise ValueError("dim and ensemble_size must be >= 1 and n >= 0")
    cells = dim * ensemble_size
    count = math.comb(n + cells - 1, cells - 1)
    enumerated = count <= enumeration_limit
    if enumerated:
        counted = sum(1 for _ in enumerate_tallies(dim, ensemble_size, n))
        if counted != count:  # pragma: no cover - arithmetic identity
            raise LemmaViolation(f"enumerated {counted} tallies, expected {count}")
    value = math.log2(count)
    bound = cells * math.log2(n + 1)
    report = TypeClassReport(count, value, bound, enumerated, value <= bound + 1e-12)
    if strict and not report.passed:
        raise LemmaViolation(f"type entropy {value} exceeds {bound}")
    return report


@dataclass(frozen=True)
class ChainReport:
    """Entropies of the decohered signal ensemble and the chain bounding ``H(AB)``."""

    h_a: float
    h_b: float
    h_ab: float
    h_t: float
    h_abt: float
    h_at: float
    h_bt: float
    h_a_given_t: float
    h_b_given_t: float
    h_ab_given_t: float
    bob_entropy_expected: float
    chain: tuple[float, ...]
    passed: bool
    failures: tuple[str, ...] = field(default=())


def check_type_class_chain(states, channel: KrausChannel | None = None,
                           strict: bool = True) -> ChainReport:
    """Exact entropy chain for Alice's permuted, phase-randomized signals.

    ``states[s]`` is the shared state's reduced matrix at position ``s``.  After
    sign randomization each position holds ``|v_ij>|v_ij>`` with probability
    ``l_ij``; Alice's halves are permuted uniformly and (optionally) sent
    through `channel`; Bob keeps his halves in order.  ``T`` is the tally of
    ``(i, j)`` labels.  Checked::

        H(A)+H(B) >= H(AB) >= H(ABT)-H(T) = H(AB|T) = H(A|T)+H(B|T)
                  = H(AT)+H(BT)-2H(T) >= H(A)+H(B)-4H(T)

    plus ``H(B) = sum_s H(rho_s)``.
    """
    mats = _matrices(states)
    n = len(mats)
    d = mats[0].shape[0]
    d_out = channel.dim_out if channel is not None else d
    if n > MAX_N or (d * d_out) ** n > MAX_DIM:
        raise CapExceededError(f"joint dimension ({d}*{d_out})^{n} exceeds the cap {MAX_DIM}")
    distinct, _ = _group(mats)
    member = [next(i for i, m in enumerate(distinct) if np.array_equal(m, x)) for x in mats]

    eig = [np.linalg.eigh(m) for m in distinct]
    labels = []  # (i, j) with lambda_ij > 0
    for i, (lam, vecs) in enumerate(eig):
        for j in range(d):
            if lam[j] > 1e-15:
                labels.append((i, j))
    label_index = {lab: k for k, lab in enumerate(labels)}
    proj = [np.outer(eig[i][1][:, j], eig[i][1][:, j].conj()) for i, j in labels]
    a_states = [apply_array(channel, p) if channel is not None else p for p in proj]

    # enumerate eigen-outcomes position by position; group by tally
    per_position = [[(label_index[(member[s], j)], eig[member[s]][0][j])
                     for j in range(d) if (member[s], j) in label_index] for s in range(n)]
    prob_t: dict[tuple[int, ...], float] = {}
    b_t: dict[tuple[int, ...], np.ndarray] = {}
    for outcome in itertools.product(*per_position):
        prob = math.prod(p for _, p in outcome)
        tally = Counter(k for k, _ in outcome)
        key = tuple(tally.get(k, 0) for k in range(len(labels)))
        b = np.ones((1, 1), dtype=complex)
        for k, _ in outcome:
            b = np.kron(b, proj[k])
        prob_t[key] = prob_t.get(key, 0.0) + prob
        b_t[key] = b_t.get(key, 0.0) + prob * b
    mixer = _ArrangementMixer(a_states)
    keys = sorted(prob_t)
    pt = np.array([prob_t[t] for t in keys])
    a_cond = [mixer.mixture(t, n) for t in keys]
    b_cond = [b_t[t] / prob_t[t] for t in keys]
    ab_cond = [np.kron(a, b) for a, b in zip(a_cond, b_cond)]

    def joint_with_t(blocks):
        # spectrum of the block-diagonal classical-quantum state sum_t p_t |t><t| x X_t
        return entropy_of_spectrum(np.concatenate(
            [p * np.linalg.eigvalsh(0.5 * (x + x.conj().T)) for p, x in zip(pt, blocks)]))

    rho_a = sum(p * a for p, a in zip(pt, a_cond))
    rho_b = sum(p * b for p, b in zip(pt, b_cond))
    rho_ab = sum(p * x for p, x in zip(pt, ab_cond))
    h_a, h_b, h_ab = matrix_entropy(rho_a), matrix_entropy(rho_b), matrix_entropy(rho_ab)
    h_t = entropy_of_spectrum(pt)
    h_abt, h_at, h_bt = joint_with_t(ab_cond), joint_with_t(a_cond), joint_with_t(b_cond)
    h_a_t = float(sum(p * matrix_entropy(a) for p, a in zip(pt, a_cond)))
    h_b_t = float(sum(p * matrix_entropy(b) for p, b in zip(pt, b_cond)))
    h_ab_t = float(sum(p * matrix_entropy(x) for p, x in zip(pt, ab_cond)))
    bob_expected = float(sum(matrix_entropy(m) for m in mats))

    chain = (h_a + h_b, h_ab, h_abt - h_t, h_ab_t, h_a_t + h_b_t, h_at + h_bt - 2 * h_t,
             h_a + h_b - 4 * h_t)
    tol = SLACK_TOL
    failures = []
    if chain[0] < chain[1] - tol:
        failures.append("subadditivity H(A)+H(B) >= H(AB)")
    if chain[1] < chain[2] - tol:
        failures.append("H(AB) >= H(ABT) - H(T)")
    for x, y, what in ((chain[2], chain[3], "H(ABT)-H(T) = H(AB|T)"),
                       (chain[3], chain[4], "conditional independence given T"),
                       (chain[4], chain[5], "H(A|T)+H(B|T) = H(AT)+H(BT)-2H(T)")):
        if abs(x - y) > tol:
            failures.append(what)
    if chain[5] < chain[6] - tol:
        failures.append("H(AT)+H(BT)-2H(T) >= H(A)+H(B)-4H(T)")
    if abs(h_b - bob_expected) > tol:
        failures.append("H(B) = sum_s H(rho_s)")
    report = ChainReport(h_a, h_b, h_ab, h_t, h_abt, h_at, h_bt, h_a_t, h_b_t, h_ab_t,
                         bob_expected, chain, not failures, tuple(failures))
    if strict and failures:
        raise LemmaViolation("type-class chain failed: " + ", ".join(failures))
    return report


@dataclass(frozen=True)
class SignalStateReport:
    expected: float
    entropies: tuple[float, ...]
    max_deviation: float
    passed: bool


def check_signal_state_entropies(states, channel: KrausChannel, atol: float = 1e-9,
                                 strict: bool = True) -> SignalStateReport:
    """Every permuted, sign-changed signal state has the same joint output entropy.

    For each of the ``n! 2^((d-1) n)`` signal states the entropy of
    ``(N^{x n} x I)`` applied to it must equal ``sum_s H((N x I)(phi_rho_s))``.
    The joint output is diagonalized through the Gram matrix of its ``K^n``
    Kraus branches.
    """
    mats = _matrices(states)
    n = len(mats)
    d = mats[0].shape[0]
    kraus = channel.stacked
    n_kraus = kraus.shape[0]
    n_signals = math.factorial(n) * 2 ** ((d - 1) * n)
    if n > MAX_N or n_kraus**n > MAX_DIM or (channel.dim_out * d) ** n > MAX_DIM or n_signals > 50_000:
        raise CapExceededError("too many signal states or too large a joint space")
    eig = [np.linalg.eigh(m) for m in mats]
    purifications = [purification_vector(m).reshape(d, d) for m in mats]

    def single(psi):
        w = np.einsum("xab,br->xar", kraus, psi).reshape(n_kraus, -1)
        return entropy_of_spectrum(np.linalg.eigvalsh(w.conj() @ w.T))

    expected = sum(single(psi) for psi in purifications)
    # Kraus operators of N^{x n}, one per branch (x_1, ..., x_n)
    branches = np.stack([
        _kron_all([kraus[x] for x in xs]) for xs in itertools.product(range(n_kraus), repeat=n)
    ])
    values = []
    for signs in itertools.product(phase_patterns(d), repeat=n):
        # sign change on Alice's side of each pair, then the joint tensor (a_1..a_n, r_1..r_n)
        pairs = []
        for s in range(n):
            vecs = eig[s][1]
            op = (vecs * np.array(signs[s].signs)) @ vecs.conj().T
            pairs.append(op @ purifications[s])
        phi = pairs[0]
        for p in pairs[1:]:
            phi = np.multiply.outer(phi, p)
        phi = phi.transpose([2 * s for s in range(n)] + [2 * s + 1 for s in range(n)])
        for perm in itertools.permutations(range(n)):
            t = phi.transpose(list(perm) + list(range(n, 2 * n))).reshape(d**n, d**n)
            w = (branches @ t).reshape(len(branches), -1)
            values.append(entropy_of_spectrum(np.linalg.eigvalsh(w.conj() @ w.T)))
    dev = float(max(abs(v - expected) for v in values))
    report = SignalStateReport(expected, tuple(values), dev, dev <= atol)
    if strict and not report.passed:
        raise LemmaViolation(f"signal-state joint entropies deviate by {dev:.3e}")
    return report


def _kron_all(mats) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


# ---------------------------------------------------------------------------
# the whole suite, as run by ``eacap verify``


@dataclass(frozen=True)
class CheckSummary:
    name: str
    passed: bool
    trials: int
    worst_slack: float
    detail: str = ""


def _fuzz_rngs(seed: int, tag: int, trials: int) -> list[np.random.Generator]:
    return [np.random.default_rng(c) for c in np.random.SeedSequence([seed, tag]).spawn(trials)]


def verification_suite(n: int = 3, trials: int = 50, seed: int = 0,
                       channel: KrausChannel | None = None) -> list[CheckSummary]:
    """Run every check at fuzz volume `trials` with ``n`` shared states (qubits).

    Failing checks are reported, not raised; only a cap violation raises.
    """
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be >= 1")
    if n > MAX_N or 2**n > MAX_DIM:
        raise CapExceededError(f"n = {n} exceeds the exact-evaluation caps")
    if channel is None:
        from .channel import make_standard
        channel = make_standard("amplitude_damping", 2, 0.3)
    out = []

    # symmetrized-product bound, plus its equality case
    slacks, ok = [], True
    for rng in _fuzz_rngs(seed, 1, trials):
        rep = check_lemma2(RandomStateSampler(2).draw(rng, n), strict=False)
        slacks.append(rep.slack)
        ok &= rep.passed
    rho = random_density_matrix(2, 2, np.random.default_rng([seed, 11]))
    eq = check_lemma2([rho] * n, strict=False)
    ok &= abs(eq.slack) <= 1e-9
    out.append(CheckSummary("lemma2", ok, trials + 1, min(slacks + [eq.slack])))

    # every telescoping step and both telescoping sums
    slacks, ok = [], True
    for rng in _fuzz_rngs(seed, 2, trials):
        summary = check_telescoping(RandomStateSampler(2).draw(rng, n), strict=False)
        slacks.extend(s.slack for s in summary.steps)
        ok &= summary.passed
    out.append(CheckSummary("telescoping", ok, trials * n, min(slacks)))

    # averaged symmetrized entropy approaches H(rho_bar) from below
    bits = DiscreteSampler((DensityMatrix.basis(2, 0), DensityMatrix.basis(2, 1)))
    rep = lemma1_trend(bits, list(range(1, n + 1)), trials, seed, strict=False)
    worst = min(r.gap for r in rep.rows)
    out.append(CheckSummary("lemma1_trend", rep.passed, trials * n, worst, "; ".join(rep.failures)))

    # random sign changes remove the entanglement of the purification
    devs, ok = [], True
    rngs = _fuzz_rngs(seed, 4, trials)
    for t, rng in enumerate(rngs):
        d = 2 + t % 2
        rep = check_phase_average(random_density_matrix(d, d, rng), strict=False)
        devs.append(rep.max_deviation)
        ok &= rep.passed
    out.append(CheckSummary("phase_average", ok, trials, -max(devs)))

    # strong subadditivity on random tripartite qubit states, plus GHZ
    slacks, ok = [], True
    for t, rng in enumerate(_fuzz_rngs(seed, 5, trials)):
        rank = 1 if t % 4 == 0 else 8
        rep = check_ssa(random_density_matrix(8, rank, rng), strict=False)
        slacks.append(rep.slack)
        ok &= rep.passed
    ghz = check_ssa(ghz_state(), strict=False)
    ok &= abs(ghz.slack - 1.0) <= 1e-9
    out.append(CheckSummary("ssa", ok, trials + 1, min(slacks)))

    # size of the type variable
    rep = type_class_entropy(2, 2, n, strict=False)
    out.append(CheckSummary("type_class_entropy", rep.passed, 1, rep.bound - rep.value))

    # entropy chain through the type variable, with the channel on Alice's side
    m = min(n, 4)
    slacks, ok, fails = [], True, []
    chain_trials = max(1, trials // 10)
    for rng in _fuzz_rngs(seed, 7, chain_trials):
        pair = RandomStateSampler(2).draw(rng, 2)
        states = [pair[s % 2] for s in range(m)]
        rep = check_type_class_chain(states, channel, strict=False)
        c = rep.chain
        slacks.append(min(c[0] - c[1], c[1] - c[2], c[5] - c[6]))
        ok &= rep.passed
        fails.extend(rep.failures)
    out.append(CheckSummary("type_class_chain", ok, chain_trials, min(slacks), ", ".join(sorted(set(fails)))))

    # all signal states share one joint output entropy
    m = min(n, 3)
    devs, ok = [], True
    for rng in _fuzz_rngs(seed, 8, chain_trials):
        rep = check_signal_state_entropies(RandomStateSampler(2).draw(rng, m), channel, strict=False)
        devs.append(rep.max_deviation)
        ok &= rep.passed
    out.append(CheckSummary("signal_state_entropies", ok, chain_trials, -max(devs)))
    return out
