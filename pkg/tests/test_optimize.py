import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eacap.channel import make_standard
from eacap.entropic import channel_chi, quantum_mutual_information, tradeoff_objective
from eacap.optimize import (
    EnsembleParameterization,
    SolverConfig,
    lagrangian_point,
    maximize_chi,
    maximize_qmi,
    merge_ensembles,
    tradeoff_curve,
    tradeoff_sweep,
    upper_envelope,
)
from eacap.qmatrix import DensityMatrix, Ensemble, random_density_matrix, von_neumann_entropy

import oracles

FAST = SolverConfig(multistarts=6)


# ---- configuration and parameterization -------------------------------------------

@pytest.mark.parametrize(
    "kwargs",
    [{"multistarts": 0}, {"max_iterations": 0}, {"objective_tolerance": 0.0}, {"ensemble_size_cap": 0}],
)
def test_solver_config_rejects(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


def test_default_size_cap():
    assert SolverConfig().size_cap(2) == 5
    assert SolverConfig().size_cap(3) == 10
    assert SolverConfig(ensemble_size_cap=3).size_cap(2) == 3


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(2, 3), st.integers(0, 2**31 - 1))
def test_parameterization_encode_decode_round_trip(k, dim, seed):
    rng = np.random.default_rng(seed)
    size = int(rng.integers(1, k + 1))
    ens = Ensemble(tuple(random_density_matrix(dim, seed=rng) for _ in range(size)), rng.dirichlet(np.ones(size)))
    param = EnsembleParameterization(k, dim, dim)
    back = param.decode(param.encode(ens))
    assert back.average().allclose(ens.average(), atol=1e-9)
    ev_a = tradeoff_objective(make_standard("amplitude_damping", 2, 0.3), ens) if dim == 2 else None
    if ev_a is not None:
        ev_b = tradeoff_objective(make_standard("amplitude_damping", 2, 0.3), back)
        assert ev_b.rate == pytest.approx(ev_a.rate, abs=1e-9)
        assert ev_b.entanglement_cost == pytest.approx(ev_a.entanglement_cost, abs=1e-9)


def test_parameterization_refuses_oversized_ensemble():
    ens = Ensemble(tuple(DensityMatrix.basis(2, i % 2) for i in range(3)))
    assert EnsembleParameterization(2, 2, 1).encode(ens) is None


def test_parameterization_decodes_valid_states():
    param = EnsembleParameterization(3, 2, 2)
    x = np.random.default_rng(0).standard_normal(param.size)
    ens = param.decode(x)
    assert len(ens) == 3
    assert ens.probs.sum() == pytest.approx(1.0)


# ---- envelope helpers ---------------------------------------------------------------

def test_upper_envelope_drops_interior_points():
    pts = [(0.0, 0.0), (1.0, 0.4), (2.0, 1.0), (0.5, 0.6), (3.0, 1.2)]
    hull = upper_envelope(pts)
    assert [pts[i] for i in hull] == [(0.0, 0.0), (0.5, 0.6), (2.0, 1.0), (3.0, 1.2)]


def test_upper_envelope_truncates_at_maximum():
    pts = [(0.0, 1.0), (1.0, 2.0), (2.0, 1.5), (3.0, 2.0)]
    hull = upper_envelope(pts)
    assert [pts[i] for i in hull] == [(0.0, 1.0), (1.0, 2.0)]


def test_upper_envelope_tie_keeps_smaller_cost():
    pts = [(0.5, 1.0), (0.2, 1.0 + 1e-12), (0.0, 0.5)]
    hull = upper_envelope(pts)
    assert [pts[i] for i in hull] == [(0.0, 0.5), (0.2, 1.0 + 1e-12)]


def test_upper_envelope_colinear_points_collapse():
    pts = [(0.0, 1.0), (0.5, 1.5), (1.0, 2.0)]
    assert [pts[i] for i in upper_envelope(pts)] == [(0.0, 1.0), (1.0, 2.0)]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 5), st.floats(-5, 5)), min_size=1, max_size=20))
def test_upper_envelope_is_concave_and_dominates(pts):
    hull = [pts[i] for i in upper_envelope(pts)]
    ps = [p for p, _ in hull]
    cs = [c for _, c in hull]
    assert ps == sorted(ps)
    assert all(b > a for a, b in zip(cs, cs[1:]))
    slopes = [(c2 - c1) / (p2 - p1) for (p1, c1), (p2, c2) in zip(hull, hull[1:])]
    assert all(s2 <= s1 + 1e-6 for s1, s2 in zip(slopes, slopes[1:]))
    for p, c in pts:
        if p >= ps[0]:
            assert c <= float(np.interp(p, ps, cs)) + 1e-6


def test_merge_ensembles_time_sharing():
    a = Ensemble((DensityMatrix.basis(2, 0),))
    b = Ensemble((DensityMatrix.maximally_mixed(2), DensityMatrix.basis(2, 1)), [0.5, 0.5])
    m = merge_ensembles(a, b, 0.4)
    assert len(m) == 3
    assert np.allclose(m.probs, [0.4, 0.3, 0.3])
    assert merge_ensembles(a, b, 1.0) is a
    assert merge_ensembles(a, b, 0.0) is b


# ---- maximize_chi --------------------------------------------------------------------

def test_chi_identity():
    res = maximize_chi(make_standard("identity", 2), FAST)
    assert res.value == pytest.approx(1.0, abs=1e-6)
    assert res.converged
    assert res.value == pytest.approx(channel_chi(make_standard("identity", 2), res.ensemble), abs=1e-12)
    assert all(von_neumann_entropy(s) < 1e-9 for s in res.ensemble.states)


def test_chi_fully_depolarizing():
    assert maximize_chi(make_standard("depolarizing", 2, 1.0), FAST).value == pytest.approx(0.0, abs=1e-6)


def test_chi_depolarizing_half_against_grid():
    ch = make_standard("depolarizing", 2, 0.5)
    grid = oracles.bloch_grid_chi(ch.kraus)
    assert grid == pytest.approx(1 - oracles.h2(0.25), abs=1e-9)
    assert maximize_chi(ch, FAST).value == pytest.approx(grid, abs=1e-4)


def test_chi_amplitude_damping_closed_form():
    expected = oracles.amplitude_damping_chi(0.3)
    assert expected == pytest.approx(0.6383290603, abs=1e-9)
    assert maximize_chi(make_standard("amplitude_damping", 2, 0.3), FAST).value == pytest.approx(expected, abs=1e-4)


def test_chi_erasure():
    # erasure: (1 - p) bits per use
    assert maximize_chi(make_standard("erasure", 2, 0.4), FAST).value == pytest.approx(0.6, abs=1e-4)


def test_chi_is_deterministic():
    ch = make_standard("amplitude_damping", 2, 0.2)
    a, b = maximize_chi(ch, FAST), maximize_chi(ch, FAST)
    assert a.value == b.value
    assert np.array_equal(a.ensemble.probs, b.ensemble.probs)


# ---- maximize_qmi ----------------------------------------------------------------------

def test_qmi_identity():
    res = maximize_qmi(make_standard("identity", 2), FAST)
    assert res.value == pytest.approx(2.0, abs=1e-4)
    assert res.rho.allclose(DensityMatrix.maximally_mixed(2), atol=1e-3)
    assert res.entanglement_cost == pytest.approx(1.0, abs=1e-4)


def test_qmi_fully_depolarizing():
    assert maximize_qmi(make_standard("depolarizing", 2, 1.0), FAST).value == pytest.approx(0.0, abs=1e-6)


def test_qmi_depolarizing_symmetry_oracle():
    ch = make_standard("depolarizing", 2, 0.3)
    expected = quantum_mutual_information(ch, DensityMatrix.maximally_mixed(2))
    assert maximize_qmi(ch, FAST).value == pytest.approx(expected, abs=1e-4)


def test_qmi_amplitude_damping_closed_form():
    value, cost = oracles.amplitude_damping_qmi(0.3)
    res = maximize_qmi(make_standard("amplitude_damping", 2, 0.3), FAST)
    assert res.value == pytest.approx(value, abs=1e-6)
    assert res.entanglement_cost == pytest.approx(cost, abs=1e-3)


def test_qmi_erasure():
    # 2 (1 - p) for the qubit erasure channel
    assert maximize_qmi(make_standard("erasure", 2, 0.4), FAST).value == pytest.approx(1.2, abs=1e-4)


# ---- lagrangian_point ------------------------------------------------------------------

def test_lagrangian_large_mu_is_pure():
    ch = make_standard("amplitude_damping", 2, 0.3)
    pt = lagrangian_point(ch, 1e3, FAST)
    assert pt.P <= 1e-3
    assert pt.C == pytest.approx(oracles.amplitude_damping_chi(0.3), abs=2e-3)


def test_lagrangian_zero_mu_reaches_qmi():
    ch = make_standard("amplitude_damping", 2, 0.3)
    value, cost = oracles.amplitude_damping_qmi(0.3)
    pt = lagrangian_point(ch, 0.0, FAST)
    assert pt.C == pytest.approx(value, abs=1e-4)
    assert pt.P == pytest.approx(cost, abs=5e-2)


def test_lagrangian_identity_half():
    pt = lagrangian_point(make_standard("identity", 2), 0.5, FAST)
    assert pt.C - pt.P == pytest.approx(1.0, abs=1e-3)


def test_lagrangian_reports_attained_values():
    ch = make_standard("depolarizing", 2, 0.3)
    pt = lagrangian_point(ch, 0.8, FAST)
    ev = tradeoff_objective(ch, pt.ensemble)
    assert (pt.P, pt.C) == (ev.entanglement_cost, ev.rate)


@pytest.mark.parametrize("mu", [-0.1, float("nan"), float("inf")])
def test_lagrangian_rejects_bad_mu(mu):
    with pytest.raises(ValueError):
        lagrangian_point(make_standard("identity", 2), mu, FAST)


# ---- tradeoff_curve ------------------------------------------------------------------------

def test_curve_identity_is_line():
    grid = [0.0, 0.25, 0.5, 1.0]
    curve = tradeoff_curve(make_standard("identity", 2), grid, FAST)
    assert [pt.P for pt in curve] == grid
    for pt in curve:
        assert pt.C == pytest.approx(1.0 + pt.P, abs=1e-3)


def test_curve_fully_depolarizing_is_zero():
    curve = tradeoff_curve(make_standard("depolarizing", 2, 1.0), [0.0, 0.5, 1.0], FAST)
    assert all(abs(pt.C) <= 1e-6 for pt in curve)


def test_curve_complete_dephasing_is_flat():
    curve = tradeoff_curve(make_standard("dephasing", 2, 1.0), [0.0, 0.5, 1.0], FAST)
    assert all(pt.C == pytest.approx(1.0, abs=1e-4) for pt in curve)


@pytest.fixture(scope="module")
def depolarizing_sweep():
    return tradeoff_sweep(make_standard("depolarizing", 2, 0.3), [0.0, 0.3, 0.6, 1.0, 1.5], SolverConfig())


def test_sweep_endpoints(depolarizing_sweep):
    s = depolarizing_sweep
    assert s.points[0].C == pytest.approx(s.chi.value, abs=2e-3)
    for pt in s.points:
        if pt.P >= s.qmi.entanglement_cost:
            assert pt.C == pytest.approx(s.qmi.value, abs=1e-4)


def test_sweep_monotone_and_concave(depolarizing_sweep):
    pts = [(pt.P, pt.C) for pt in depolarizing_sweep.points]
    cs = [c for _, c in pts]
    assert all(b >= a - 1e-9 for a, b in zip(cs, cs[1:]))
    hull = [pts[i] for i in upper_envelope(pts, tie_tol=1e-6)]
    for p, c in pts:
        assert c == pytest.approx(float(np.interp(p, *zip(*hull))), abs=1e-6)


def test_sweep_lower_bound_soundness(depolarizing_sweep):
    ch = make_standard("depolarizing", 2, 0.3)
    for pt in depolarizing_sweep.points:
        ev = tradeoff_objective(ch, pt.ensemble)
        assert ev.rate >= pt.C - 1e-9
        assert ev.entanglement_cost <= pt.P + 1e-9


def test_sweep_between_anchors(depolarizing_sweep):
    s = depolarizing_sweep
    for pt in s.points:
        assert s.chi.value - 1e-9 <= pt.C <= s.qmi.value + 1e-9


def test_curve_is_deterministic():
    ch = make_standard("depolarizing", 2, 0.6)
    cfg = SolverConfig(multistarts=2, sweep_multistarts=1, max_lagrangian_points=3)
    a = tradeoff_curve(ch, [0.0, 0.5], cfg)
    b = tradeoff_curve(ch, [0.0, 0.5], cfg)
    assert [(p.P, p.C, p.mu) for p in a] == [(p.P, p.C, p.mu) for p in b]


@pytest.mark.parametrize("grid", [[-0.1, 0.5], [0.5, 0.2], [float("nan")]])
def test_curve_rejects_bad_grid(grid):
    with pytest.raises(ValueError):
        tradeoff_curve(make_standard("identity", 2), grid, FAST)
