"""Maximization of the entropic functionals over input ensembles.

Three problems share one parameterization.  An ensemble of ``k`` states is a
real vector holding, per state, a complex ``dim x r`` factor ``F`` (decoded as
``F F^dagger / tr``) followed by ``k`` logits mapped to probabilities by a
softmax.  With ``r = 1`` the states are pure, which is all ``chi_max`` needs;
``maximize_qmi`` uses one full-rank state; the limited-entanglement problem uses
full-rank factors and penalizes the entanglement cost with a multiplier ``mu``.

Local search is Powell's derivative-free direction-set method from several
seeded starts.  Every reported value is recomputed from the returned ensemble
through :mod:`eacap.entropic`, so it is attained, never extrapolated.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from . import entropic
from .channel import KrausChannel
from .qmatrix import DensityMatrix, Ensemble, von_neumann_entropy

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    multistarts: int = 16
    max_iterations: int = 2000
    objective_tolerance: float = 1e-7
    seed: int = 0
    ensemble_size_cap: int | None = None
    # looser tolerance used to rank starts before the best ones are polished
    screening_tolerance: float = 1e-5
    polish_count: int = 2
    # a hull segment is accepted once no ensemble beats its supporting line by more
    envelope_tolerance: float = 1e-4
    max_lagrangian_points: int = 40
    # random starts per refinement solve inside a sweep; these solves are also
    # warm-started from the ensembles at both ends of the segment being refined
    sweep_multistarts: int = 3

    def __post_init__(self):
        if self.multistarts < 1 or self.sweep_multistarts < 1:
            raise ValueError("multistarts must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        for name in ("objective_tolerance", "screening_tolerance", "envelope_tolerance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.ensemble_size_cap is not None and self.ensemble_size_cap < 1:
            raise ValueError("ensemble_size_cap must be >= 1")

    def size_cap(self, dim_in: int) -> int:
        return self.ensemble_size_cap or dim_in**2 + 1


@dataclass(frozen=True)
class EnsembleParameterization:
    """Maps unconstrained real vectors to ensembles of ``k`` states of rank ``<= rank``."""

    k: int
    dim: int
    rank: int

    @property
    def n_factor(self) -> int:
        return 2 * self.k * self.dim * self.rank

    @property
    def size(self) -> int:
        return self.n_factor + (self.k if self.k > 1 else 0)

    def decode_arrays(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        f = x[: self.n_factor].reshape(self.k, self.dim, self.rank, 2)
        f = f[..., 0] + 1j * f[..., 1]
        rho = f @ f.conj().transpose(0, 2, 1)
        tr = np.trace(rho, axis1=1, axis2=2).real
        rho = rho / np.maximum(tr, 1e-300)[:, None, None]
        if self.k == 1:
            return rho, np.ones(1)
        z = x[self.n_factor :]
        p = np.exp(z - z.max())
        return rho, p / p.sum()

    def decode(self, x: np.ndarray, prune: float = 1e-12) -> Ensemble:
        rho, p = self.decode_arrays(np.asarray(x, dtype=float))
        keep = p > prune
        states = tuple(DensityMatrix(r) for r in rho[keep])
        probs = p[keep] / p[keep].sum()
        return Ensemble(states, probs)

    def encode(self, ens: Ensemble) -> np.ndarray | None:
        """Parameter vector for `ens`, or ``None`` if it has more than ``k`` states.

        Smaller ensembles are padded by splitting the most likely state.
        """
        if ens.dim != self.dim or len(ens) > self.k:
            return None
        mats = [s.matrix for s in ens.states]
        probs = list(ens.probs)
        while len(mats) < self.k:
            i = int(np.argmax(probs))
            probs[i] /= 2
            mats.append(mats[i])
            probs.append(probs[i])
        factors = []
        for m in mats:
            lam, vecs = np.linalg.eigh(m)
            order = np.argsort(lam)[::-1][: self.rank]
            f = vecs[:, order] * np.sqrt(np.clip(lam[order], 0, None))
            factors.append(np.stack([f.real, f.imag], axis=-1).ravel())
        x = np.concatenate(factors)
        if self.k > 1:
            x = np.concatenate([x, np.log(np.clip(probs, 1e-12, None))])
        return x


def _objective(ch: KrausChannel, param: EnsembleParameterization, mu: float):
    """Negative of ``(1 - mu) avg H(rho_i) + H(N(rho_bar)) - avg H((N x I)(phi_i))``."""
    kraus = ch.stacked

    def f(x):
        rho, p = param.decode_arrays(x)
        h_in, h_joint = entropic.batch_joint_entropies(kraus, rho)
        rho_bar = np.tensordot(p, rho, axes=1)
        h_out = entropic.batch_entropies(entropic.batch_apply(kraus, rho_bar[None]))[0]
        return -((1.0 - mu) * (p @ h_in) + h_out - p @ h_joint)

    return f


@dataclass(frozen=True)
class _SearchResult:
    x: np.ndarray
    value: float
    converged: bool
    evaluations: int


def _seed_sequence(cfg: SolverConfig, *tags: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([cfg.seed & 0xFFFFFFFF, *tags])


def _mu_tag(mu: float) -> int:
    return int(np.float64(mu).view(np.uint64) & 0xFFFFFFFF)


def _multistart(f, size: int, cfg: SolverConfig, seq: np.random.SeedSequence,
                warm: list[np.ndarray] = ()) -> _SearchResult:
    """Screen all starts loosely, then polish the best few at full tolerance.

    The warm starts come first, followed by ``cfg.multistarts`` random ones.
    Starts are processed in a fixed order and ties go to the lower start index,
    so the outcome depends only on the inputs.
    """
    starts = [np.asarray(w, dtype=float) for w in warm]
    for child in seq.spawn(cfg.multistarts):
        starts.append(np.random.default_rng(child).standard_normal(size))

    opts = {"maxiter": cfg.max_iterations, "xtol": 1e-4}
    screened = []
    evals = 0
    for x0 in starts:
        res = minimize(f, x0, method="Powell", options={**opts, "ftol": cfg.screening_tolerance})
        evals += res.nfev
        screened.append((float(res.fun), res.x))
    order = sorted(range(len(screened)), key=lambda i: (screened[i][0], i))

    best = None
    for i in order[: cfg.polish_count]:
        res = minimize(f, screened[i][1], method="Powell",
                       options={**opts, "xtol": 1e-8, "ftol": cfg.objective_tolerance})
        evals += res.nfev
        cand = _SearchResult(res.x, -float(res.fun), bool(res.success), 0)
        if best is None or cand.value > best.value:
            best = cand
    return replace(best, evaluations=evals)


@dataclass(frozen=True)
class ChiResult:
    value: float
    ensemble: Ensemble
    converged: bool


@dataclass(frozen=True)
class QmiResult:
    value: float
    rho: DensityMatrix
    converged: bool

    @property
    def entanglement_cost(self) -> float:
        return von_neumann_entropy(self.rho)


@dataclass(frozen=True)
class TradeoffPoint:
    P: float
    C: float
    mu: float
    ensemble: Ensemble
    converged: bool


def maximize_chi(ch: KrausChannel, cfg: SolverConfig = SolverConfig()) -> ChiResult:
    """Largest Holevo quantity of channel outputs over ensembles of pure inputs."""
    param = EnsembleParameterization(cfg.size_cap(ch.dim_in), ch.dim_in, 1)
    res = _multistart(_objective(ch, param, 0.0), param.size, cfg, _seed_sequence(cfg, 1))
    ens = param.decode(res.x)
    value = entropic.channel_chi(ch, ens)
    log.debug("chi_max search: %.9f after %d evaluations", value, res.evaluations)
    return ChiResult(value, ens, res.converged)


def maximize_qmi(ch: KrausChannel, cfg: SolverConfig = SolverConfig()) -> QmiResult:
    """Entanglement-assisted capacity: maximum quantum mutual information over one input."""
    param = EnsembleParameterization(1, ch.dim_in, ch.dim_in)
    # the maximally mixed input is a natural first start
    warm = [param.encode(Ensemble((DensityMatrix.maximally_mixed(ch.dim_in),)))]
    res = _multistart(_objective(ch, param, 0.0), param.size, cfg, _seed_sequence(cfg, 2), warm)
    rho = param.decode(res.x).states[0]
    value = entropic.quantum_mutual_information(ch, rho)
    log.debug("C_E search: %.9f after %d evaluations", value, res.evaluations)
    return QmiResult(value, rho, res.converged)


def lagrangian_point(ch: KrausChannel, mu: float, cfg: SolverConfig = SolverConfig(),
                     warm_starts: list[Ensemble] = ()) -> TradeoffPoint:
    """Maximize ``rate - mu * cost`` and report the best ensemble's ``(cost, rate)``."""
    if not mu >= 0 or math.isinf(mu):
        raise ValueError(f"mu must be a finite nonnegative number, got {mu}")
    param = EnsembleParameterization(cfg.size_cap(ch.dim_in), ch.dim_in, ch.dim_in)
    warm = [x for x in (param.encode(e) for e in warm_starts) if x is not None]
    res = _multistart(_objective(ch, param, mu), param.size, cfg,
                      _seed_sequence(cfg, 3, _mu_tag(mu)), warm)
    ens = param.decode(res.x)
    ev = entropic.tradeoff_objective(ch, ens)
    return TradeoffPoint(ev.entanglement_cost, ev.rate, float(mu), ens, res.converged)


# ---------------------------------------------------------------------------
# upper concave envelope and the trade-off curve


def upper_envelope(points: list[tuple[float, float]], tie_tol: float = 1e-9) -> list[int]:
    """Indices of the vertices of the nondecreasing upper concave envelope.

    Vertices are returned in increasing cost.  Among points of (nearly) equal
    value the one with smaller cost is kept, and the envelope stops at its
    maximum, beyond which it is flat.
    """
    order = sorted(range(len(points)), key=lambda i: (points[i][0], -points[i][1], i))
    hull: list[int] = []
    for i in order:
        p, c = points[i]
        if hull and c <= points[hull[-1]][1] + tie_tol:
            # not higher than the current right end; cannot start a rising segment
            continue
        while len(hull) >= 2:
            (p1, c1), (p2, c2) = points[hull[-2]], points[hull[-1]]
            # drop the middle vertex if it lies on or below the chord
            if (c2 - c1) * (p - p1) <= (c - c1) * (p2 - p1) + tie_tol * max(p - p1, 1e-300):
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def merge_ensembles(a: Ensemble, b: Ensemble, weight_a: float) -> Ensemble:
    """Time-sharing: ``a`` with probability `weight_a`, ``b`` otherwise."""
    if weight_a >= 1.0:
        return a
    if weight_a <= 0.0:
        return b
    probs = np.concatenate([weight_a * a.probs, (1.0 - weight_a) * b.probs])
    return Ensemble(a.states + b.states, probs / probs.sum())


@dataclass
class _Candidate:
    P: float
    C: float
    mu: float
    ensemble: Ensemble
    converged: bool


@dataclass
class TradeoffSweep:
    """Everything a trade-off computation produced, anchors included."""

    points: list[TradeoffPoint]
    chi: ChiResult
    qmi: QmiResult
    vertices: list[TradeoffPoint] = field(default_factory=list)
    lagrangian_evaluations: int = 0

    @property
    def converged(self) -> bool:
        return all(p.converged for p in self.points) and self.chi.converged and self.qmi.converged


def _check_grid(p_grid) -> list[float]:
    grid = [float(p) for p in p_grid]
    if any(not (p >= 0) for p in grid):
        raise ValueError("entanglement budgets must be nonnegative")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("entanglement budgets must be sorted ascending")
    return grid


def _locate(hull: list[_Candidate], P: float) -> int | None:
    """Index ``j`` with ``hull[j].P < P < hull[j+1].P``; ``None`` at vertices or past the end."""
    for j in range(len(hull) - 1):
        a, b = hull[j], hull[j + 1]
        if abs(P - a.P) <= 1e-12 or abs(P - b.P) <= 1e-12:
            return None
        if a.P < P < b.P:
            return j
    return None


def tradeoff_sweep(ch: KrausChannel, p_grid, cfg: SolverConfig = SolverConfig()) -> TradeoffSweep:
    """Capacity with at most ``P`` ebits per use, for every ``P`` in `p_grid`.

    The envelope starts from the two endpoint problems and is refined only on
    segments that contain a requested budget: the penalized problem is solved at
    the segment's own slope, which either certifies the segment (nothing beats
    its supporting line by more than ``cfg.envelope_tolerance``) or contributes
    a new vertex.  Each requested budget is then served by time-sharing the two
    ensembles at the ends of its segment.
    """
    grid = _check_grid(p_grid)
    chi = maximize_chi(ch, cfg)
    qmi = maximize_qmi(ch, cfg)
    pool = [
        _Candidate(0.0, chi.value, math.inf, chi.ensemble, chi.converged),
        _Candidate(qmi.entanglement_cost, qmi.value, 0.0, Ensemble((qmi.rho,)), qmi.converged),
    ]
    tol = cfg.envelope_tolerance
    sweep_cfg = replace(cfg, multistarts=cfg.sweep_multistarts)
    certified: set[tuple[int, int]] = set()
    evaluations = 0

    def hull_of(pool):
        return [pool[i] for i in upper_envelope([(c.P, c.C) for c in pool])]

    flat = qmi.value - chi.value <= tol
    while not flat and evaluations < cfg.max_lagrangian_points:
        hull = hull_of(pool)
        pending = []
        for P in grid:
            j = _locate(hull, P)
            if j is not None and (id(hull[j]), id(hull[j + 1])) not in certified:
                pending.append(j)
        if not pending:
            break
        j = pending[0]
        a, b = hull[j], hull[j + 1]
        slope = (b.C - a.C) / (b.P - a.P)
        nearby = sorted(pool, key=lambda c: abs(c.mu - slope) if math.isfinite(c.mu) else 1e9)
        warm = [a.ensemble, b.ensemble] + [c.ensemble for c in nearby[:2]]
        pt = lagrangian_point(ch, slope, sweep_cfg, warm_starts=warm)
        evaluations += 1
        gain = (pt.C - slope * pt.P) - (a.C - slope * a.P)
        log.debug("mu=%.6g: P=%.6f C=%.6f gain over segment %.3e", slope, pt.P, pt.C, gain)
        if gain > tol:
            pool.append(_Candidate(pt.P, pt.C, slope, pt.ensemble, pt.converged))
        else:
            certified.add((id(a), id(b)))

    hull = hull_of(pool)
    points = [_interpolate(ch, hull, P) for P in grid]
    vertices = [TradeoffPoint(c.P, c.C, c.mu, c.ensemble, c.converged) for c in hull]
    return TradeoffSweep(points, chi, qmi, vertices, evaluations)


def _interpolate(ch: KrausChannel, hull: list[_Candidate], P: float) -> TradeoffPoint:
    last = hull[-1]
    if P >= last.P:
        return TradeoffPoint(P, last.C, 0.0, last.ensemble, last.converged)
    for j in range(len(hull) - 1):
        a, b = hull[j], hull[j + 1]
        if a.P <= P <= b.P:
            theta = (b.P - P) / (b.P - a.P)
            slope = (b.C - a.C) / (b.P - a.P)
            value = theta * a.C + (1.0 - theta) * b.C
            ens = merge_ensembles(a.ensemble, b.ensemble, theta)
            ev = entropic.tradeoff_objective(ch, ens)
            # time-sharing never loses rate: the output entropy term is concave
            if ev.rate < value - 1e-9 or ev.entanglement_cost > P + 1e-9:
                raise RuntimeError(
                    f"time-shared ensemble at P={P} evaluates to ({ev.entanglement_cost}, "
                    f"{ev.rate}), below the envelope value {value}"
                )
            return TradeoffPoint(P, value, slope, ens, a.converged and b.converged)
    # P below the first vertex cannot happen: the pure-state anchor sits at P = 0
    raise RuntimeError(f"budget {P} is left of the envelope")


def tradeoff_curve(ch: KrausChannel, p_grid, cfg: SolverConfig = SolverConfig()) -> list[TradeoffPoint]:
    return tradeoff_sweep(ch, p_grid, cfg).points
