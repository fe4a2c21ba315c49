import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_path, step_paths
from pathqv.exceptions import InvariantViolation
from pathqv.partitions import drawupdown
from pathqv.paths import PathError, SampledPath, synth_oscillator, synth_walk
from pathqv.quadvar import qv_limit
from pathqv import truncvar
from pathqv.truncvar import (brute_force_tv, proposition_residual, qv_via_tv, regularize,
                             total_variation, truncated_variation, tv_integral_identity,
                             tv_sandwich_check)

C_GRID = [0.0, 0.05, 0.1, 0.3, 0.5, 1.0]


def tv_by_recursion(x, c):
    """Plain-Python best-subsequence recursion, written independently of the package."""
    best = [0.0] * len(x)
    for i in range(1, len(x)):
        best[i] = max([0.0] + [best[j] + max(abs(x[i] - x[j]) - c, 0.0) for j in range(i)])
    return best


# -- examples -----------------------------------------------------------------------

@pytest.mark.parametrize("method", ["dp", "fast"])
def test_tv_examples(method):
    assert truncated_variation([0, 1, 0, 1], 0.5, method).total == 1.5
    assert math.isclose(truncated_variation([0, 0.3, -0.2, 0.5], 0.5, method).total, 0.2, abs_tol=1e-15)
    assert truncated_variation([2, 2, 2], 0.1, method).total == 0.0
    assert math.isclose(truncated_variation([0, 0.25, 0.5, 0.75, 1.0], 0.2, method).total, 0.8)
    assert truncated_variation([0, 0.3], 0.3, method).total == 0.0


def test_brute_force_examples():
    assert brute_force_tv([0, 1, 0, 1], 0.5) == 1.5
    assert math.isclose(brute_force_tv([0, 0.3, -0.2, 0.5], 0.5), 0.2, abs_tol=1e-15)
    assert brute_force_tv([0, 0.2], 0.5) == 0.0
    np.testing.assert_allclose(brute_force_tv([0, 1, 0, 1], np.array([0.0, 0.5])), [3.0, 1.5])
    with pytest.raises(PathError):
        brute_force_tv(np.zeros(19), 0.1)


def test_tv_result_csv():
    r = truncated_variation(SampledPath([0, 1, 2], [0, 1, 0]), 0.25)
    assert r.to_csv() == "t,tv_running\n0.0,0.0\n1.0,0.75\n2.0,1.5\n"


def test_tv_rejects_bad_input():
    with pytest.raises(PathError):
        truncated_variation([0, 1], -0.1)
    with pytest.raises(PathError):
        truncated_variation(SampledPath([0, 1], [[0, 0], [1, 1]]), 0.1)
    with pytest.raises(ValueError):
        truncated_variation([0, 1], 0.1, method="magic")


# -- oracle agreement -------------------------------------------------------------------

@given(st.lists(st.floats(-1, 1), min_size=1, max_size=12), st.sampled_from(C_GRID))
def test_dp_matches_brute_force(xs, c):
    assert abs(truncated_variation(xs, c, "dp").total - brute_force_tv(xs, c)) <= 1e-12


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=30), st.floats(0, 1.5))
def test_fast_matches_dp_running(xs, c):
    np.testing.assert_allclose(truncated_variation(xs, c, "fast").running,
                               truncated_variation(xs, c, "dp").running, rtol=0, atol=1e-12)


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=25), st.floats(0, 1))
def test_dp_matches_independent_recursion(xs, c):
    np.testing.assert_allclose(truncated_variation(xs, c, "dp").running, tv_by_recursion(xs, c), atol=1e-12)


def test_fast_matches_dp_on_walks():
    for seed in range(10):
        w = synth_walk(3000, step_size=0.03, seed=seed)
        for c in (0.01, 0.05, 0.2):
            a = truncated_variation(w, c, "fast").running
            b = truncated_variation(w, c, "dp").running
            assert np.max(np.abs(a - b)) <= 1e-10


# -- properties --------------------------------------------------------------------------

@given(step_paths(max_size=30), st.floats(0, 2), st.floats(0, 2))
def test_tv_monotone_in_c_and_t(p, c1, c2):
    lo, hi = sorted((c1, c2))
    a = truncated_variation(p, lo).running
    b = truncated_variation(p, hi).running
    assert np.all(b <= a + 1e-12)
    assert a[0] == 0.0 and np.all(np.diff(a) >= 0)


@given(step_paths(max_size=30))
def test_tv_zero_is_total_variation(p):
    assert math.isclose(truncated_variation(p, 0.0).total, total_variation(p)[-1, 0],
                        rel_tol=1e-12, abs_tol=1e-12)


@given(step_paths(max_size=20), step_paths(max_size=20), st.floats(0, 1))
def test_tv_lipschitz_in_perturbation(p, a, c):
    # perturbation A sampled on p's grid: |TV^c(S + A) - TV^c(S)| <= TV^0(A)
    A = a.value_at(np.minimum(p.times, a.times[-1]))[:, 0]
    shifted = p.values[:, 0] + A
    tv0 = float(np.abs(np.diff(A)).sum())
    assert abs(truncated_variation(shifted, c).total - truncated_variation(p, c).total) <= tv0 + 1e-9


@given(st.lists(st.floats(-1, 1), min_size=2, max_size=12), st.floats(0, 0.4))
def test_few_jumps_bound(xs, c):
    tv0 = truncated_variation(xs, 0.0).total
    k = len(xs) - 1
    assert tv0 - k * c - 1e-12 <= truncated_variation(xs, c).total <= tv0 + 1e-12


# -- regularized companion -------------------------------------------------------------------

def test_regularize_example():
    r = regularize(SampledPath([0, 1, 2, 3], [0, 0.3, -0.2, 0.5]), 0.25)
    np.testing.assert_allclose(r.path.values[:, 0], [0, 0.05, 0.05, 0.25], atol=1e-15)
    assert math.isclose(r.tv_of_regularized[0], 0.25)


def test_regularize_simple_cases():
    r = regularize(SampledPath([0, 1, 2], [0.1, 0.2, 0.0]), 0.2)
    assert np.all(r.path.values == 0.1)
    r = regularize(SampledPath([0, 1, 2, 3], [0, 0.4, 0.7, 1.0]), 0.25)
    assert r.path.values[-1, 0] == 0.75 and r.tv_of_regularized[0] == 0.75
    # a move of exactly c stays inside the dead zone
    assert np.all(regularize(SampledPath([0, 1], [0, 0.5]), 0.5).path.values == 0)
    with pytest.raises(PathError):
        regularize(SampledPath([0, 1], [0, 1]), 0.0)


@given(step_paths(max_size=40, dims=(1, 3)), st.floats(0.01, 2))
def test_regularize_properties(p, c):
    r = regularize(p, c).path
    assert np.array_equal(r.values[0], p.values[0])
    assert np.all(np.abs(r.values - p.values) <= c * (1 + 1e-12))
    assert np.all(np.abs(r.increments()) <= np.abs(p.increments()) + 1e-12)
    assert np.all(np.isfinite(total_variation(r)))


@given(step_paths(max_size=40), st.floats(0.01, 2))
def test_sandwich_and_identity(p, c):
    rep = tv_sandwich_check(p, c, "dp")
    assert rep.ok
    ident = tv_integral_identity(p, c)
    assert ident.relative_residual <= 1e-12


def test_sandwich_and_identity_examples():
    p = SampledPath([0, 1, 2, 3], [0, 0.3, -0.2, 0.5])
    rep = tv_sandwich_check(p, 0.25)
    assert math.isclose(rep.tv_2c[-1], 0.2) and math.isclose(rep.tv_regularized[-1], 0.25)
    ident = tv_integral_identity(p, 0.25)
    assert math.isclose(ident.lhs[-1], 0.0625) and math.isclose(ident.rhs[-1], 0.0625)
    const = SampledPath([0, 1], [1, 1])
    assert tv_sandwich_check(const, 0.3).tv_regularized[-1] == 0.0
    assert tv_integral_identity(const, 0.3).residual == 0.0


def test_sandwich_breach_raises(monkeypatch):
    p = synth_walk(100, step_size=0.1, seed=1)
    real = truncvar.regularize

    def broken(path, c):
        r = real(path, c)
        return truncvar.RegularizedPath(c, path.with_values(path.values * 3), r.tv_of_regularized)

    monkeypatch.setattr(truncvar, "regularize", broken)
    with pytest.raises(InvariantViolation) as exc:
        tv_sandwich_check(p, 0.05)
    assert "upper_gap" in exc.value.diagnostics


# -- estimators --------------------------------------------------------------------------------

def test_estimates_of_constant_path_vanish():
    p = SampledPath([0, 1, 2], [[1, 2], [1, 2], [1, 2]])
    for e in qv_via_tv(p, [0.5, 0.1]):
        assert np.all(e.statement == 0) and np.all(e.proof == 0)


def test_pure_jump_estimates_go_to_zero():
    p = SampledPath([0, 1, 2, 3], [0, 1.0, -0.5, 0.5])
    ref, _ = qv_limit(p, 2, 4, 1e-12)
    assert np.all(ref.cont_part == 0)
    ests = qv_via_tv(p, [0.4, 0.2, 0.1, 0.01], reference=ref)
    tv0 = total_variation(p)[-1, 0]
    for e in ests:
        tvc = e.statement[-1, 0, 0] / e.c
        assert tv0 - 3 * e.c - 1e-12 <= tvc <= tv0
    assert ests[-1].error <= 0.01 * tv0


def test_estimates_off_diagonal_by_polarization():
    w1 = synth_walk(4000, step_size=2 ** -6, seed=1).values[:, 0]
    w2 = synth_walk(4000, step_size=2 ** -6, seed=2).values[:, 0]
    p = SampledPath(np.linspace(0, 1, 4001), np.column_stack([w1, w1]))
    c = 2 ** -4
    e = qv_via_tv(p, [c])[0]
    # c·TV^c(2w)/4 = (c/2)·TV^{c/2}(w) exactly
    assert e.statement[-1, 0, 1] == (c / 2) * truncated_variation(w1, c / 2).total
    q = SampledPath(np.linspace(0, 1, 4001), np.column_stack([w1, w2]))
    e = qv_via_tv(q, [2 ** -4])[0]
    assert np.allclose(e.statement[-1], e.statement[-1].T)
    assert abs(e.statement[-1, 0, 1]) < 0.3


def test_brownian_like_walk_estimate():
    w = synth_walk(2 ** 14, step_size=2 ** -7, seed=3)
    ref, rep = qv_limit(w, 6, 9, 1e-9, jump_threshold=2 ** -7)
    assert rep.converged and ref.cont_part[-1, 0, 0] == 1.0
    e = qv_via_tv(w, [2 ** -4], reference=ref)[0]
    assert 0.6 < e.statement[-1, 0, 0] < 1.4 and 0.6 < e.proof[-1, 0, 0] < 1.4


def test_oscillator_estimates_blow_up():
    p = synth_oscillator(30)
    cs = [0.5, 0.5 / math.sqrt(2), 0.25, 0.25 / math.sqrt(2)]
    vals = [c * truncated_variation(p, c, "fast").total for c in cs]
    assert all(b > a for a, b in zip(vals, vals[1:]))


# -- drawup/drawdown sufficient condition ----------------------------------------------------------------

def test_drawupdown_residual_trivial_cases():
    r = proposition_residual(SampledPath([0, 1], [1.0, 1.0]), 3)
    assert r.residual == 0.0 and r.combined_qv == 0.0
    r = proposition_residual(SampledPath([0, 1, 2], [0, 0.1, 0.2]), 1)
    assert r.residual == 0.0 and r.terms == 0


def test_drawupdown_residual_on_walk_sweep():
    w = synth_walk(2 ** 12, step_size=2 ** -6, seed=11)
    total = 1.0
    errs = []
    for n in range(3, 9):
        r = proposition_residual(w, n, drawupdown(w, n))
        errs.append(abs(r.combined_qv - total))
        assert math.isfinite(r.residual)
    assert errs[-1] == 0.0 and errs[0] > errs[-1]
