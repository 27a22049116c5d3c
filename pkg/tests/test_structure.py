"""Linearization along trajectories, pointwise index, classification."""

import numpy as np
import pytest

from daekit import (
    ClassificationUnreliableError,
    InvalidInputError,
    MatrixFunction,
    SemiNonlinearDAE,
    SemiNonlinearIAE,
    TrajectorySample,
    classify,
    detect_critical_points,
    example,
    frozen_index_report,
    linearize_dae,
    linearize_iae,
    pointwise_index,
)
from helpers import exact_traj

HALF_PI = np.pi / 2.0


def traj_through(p, a, b, t_extra=None, n=201):
    """Exact trajectory sampled on [a, b], optionally forcing extra nodes."""
    grid = np.linspace(a, b, n)
    if t_extra is not None:
        grid = np.union1d(grid, np.atleast_1d(t_extra))
    return TrajectorySample.from_function(p.exact, grid)


# --- linearize_dae --------------------------------------------------------

def test_linearize_dae_jacobian_along_exact_solution():
    p = example("ex32")
    a, btilde = linearize_dae(p, exact_traj(p, 0.5, 1.0, 101))
    assert a is p.A
    want = np.array([[-2.0 * np.cos(0.5), -np.exp(0.5)],
                     [-0.5, -np.cos(0.5)]])
    np.testing.assert_allclose(btilde(0.5), want, atol=1e-8)


def test_linearize_dae_of_linear_problem_ignores_trajectory():
    m = np.array([[1.0, 2.0], [-1.0, 0.5]])
    p = SemiNonlinearDAE(
        A=MatrixFunction.constant(np.eye(2), domain=(0.0, 1.0)),
        F=lambda t, y: m @ y,
        f=lambda t: np.zeros(2),
        r=2, T=1.0, t_start=0.0,
        F_y=lambda t, y: m)
    grid = np.linspace(0.0, 1.0, 31)
    tr1 = TrajectorySample(grid, np.column_stack([np.sin(grid), grid]))
    tr2 = TrajectorySample(grid, np.column_stack([np.exp(grid), -grid]))
    _, b1 = linearize_dae(p, tr1)
    _, b2 = linearize_dae(p, tr2)
    for t in (0.0, 0.3, 0.9):
        np.testing.assert_allclose(b1(t), m, atol=1e-12)
        np.testing.assert_allclose(b1(t), b2(t), atol=1e-12)


# --- linearize_iae --------------------------------------------------------

def test_linearize_iae_kernel_along_exact_solution():
    p = example("ex34")
    lin = linearize_iae(p, exact_traj(p))
    for t, s in [(1.5, 1.2), (2.0, 1.9), (1.1, 1.05)]:
        want = np.array([
            [2.0 * s * np.exp(s), (np.exp(2.0 * s) + 2.0) + np.exp(s)],
            [2.0 * np.exp(s), 0.0]])
        np.testing.assert_allclose(lin.k(t, s), want, atol=1e-6)
    np.testing.assert_allclose(lin.f(1.5), np.zeros(2), atol=1e-15)


def test_linearize_iae_kernel_vanishes_where_condition_crosses():
    p = example("ex35")
    lin = linearize_iae(p, traj_through(p, 1.0, 2.0, t_extra=HALF_PI))
    # (cos s) hits zero at pi/2, so the lower-left kernel entry does too
    assert abs(lin.k(1.8, HALF_PI)[1][0]) <= 1e-12
    assert abs(lin.k(1.8, 1.2)[1][0] - 2.0 * np.cos(1.2)) <= 1e-8


def test_linearize_iae_of_linear_operator_ignores_trajectory():
    m = np.array([[0.0, 1.0], [1.0, 0.0]])
    p = SemiNonlinearIAE(
        A=MatrixFunction.constant(np.array([[1.0, 0.0], [0.0, 0.0]]),
                                  domain=(0.0, 1.0)),
        kappa=lambda t, s, y: m @ y,
        f=lambda t: np.zeros(2),
        r=2, T=1.0, t_start=0.0,
        kappa_y=lambda t, s, y: m)
    grid = np.linspace(0.0, 1.0, 31)
    tr1 = TrajectorySample(grid, np.column_stack([grid, grid ** 2]))
    tr2 = TrajectorySample(grid, np.column_stack([np.cos(grid), np.sin(grid)]))
    k1 = linearize_iae(p, tr1).k
    k2 = linearize_iae(p, tr2).k
    for t, s in [(0.5, 0.2), (1.0, 0.9)]:
        np.testing.assert_allclose(k1(t, s), m, atol=1e-12)
        np.testing.assert_allclose(k1(t, s), k2(t, s), atol=1e-12)


# --- pointwise index ------------------------------------------------------

def test_pointwise_index_away_from_critical_point():
    p = example("ex32")
    assert pointwise_index(p, exact_traj(p, 0.5, 1.0), 0.7) == 1


def test_pointwise_index_at_critical_point():
    p = example("ex32")
    tr = traj_through(p, 1.0, 2.0, t_extra=HALF_PI)
    assert pointwise_index(p, tr, HALF_PI) == 2
    # the jump is confined to the crossing itself
    assert pointwise_index(p, tr, HALF_PI - 0.06) == 1
    assert pointwise_index(p, tr, HALF_PI + 0.06) == 1


def test_pointwise_index_constant_for_integral_example():
    p = example("ex34")
    tr = exact_traj(p)
    for t in (1.0, 1.3, 1.7, 2.0):
        assert pointwise_index(p, tr, t) == 2


def test_frozen_report_carries_chain_details():
    p = example("ex34")
    tr = exact_traj(p)
    rep = frozen_index_report(p, tr(1.5), 1.5, tr)
    assert rep.nu == 2
    assert rep.status.ok
    assert [lev.rank for lev in rep.levels] == [1, 1, 2]


# --- critical point detection ---------------------------------------------

def test_detect_critical_points_finds_cosine_zero():
    p = example("ex32")
    crits = detect_critical_points(exact_traj(p, 1.0, 2.0),
                                   p.critical_conditions)
    assert len(crits) == 1
    t_crit, cond_id = crits[0]
    assert cond_id == 0
    assert abs(t_crit - HALF_PI) <= 1e-6


def test_detect_critical_points_unrefined_stays_on_grid():
    p = example("ex32")
    crits = detect_critical_points(exact_traj(p, 1.0, 2.0),
                                   p.critical_conditions, refine=False)
    assert len(crits) == 1
    assert abs(crits[0][0] - HALF_PI) <= 5e-3


def test_detect_critical_points_constant_condition_is_empty():
    p = example("ex32")
    assert detect_critical_points(exact_traj(p, 1.0, 2.0),
                                  (lambda t, y: 1.0,)) == []


def test_detect_critical_points_positive_solution_is_empty():
    p = example("ex33")
    assert detect_critical_points(exact_traj(p, 1.0, 2.0),
                                  (lambda t, y: y[0],)) == []


def test_detect_critical_points_requires_conditions():
    p = example("ex32")
    with pytest.raises(InvalidInputError):
        detect_critical_points(exact_traj(p, 1.0, 2.0), ())


# --- classification -------------------------------------------------------

def test_classify_well_structure():
    prof = classify(example("ex31"), eps=0.5, seed=0)
    assert prof.classification == "well-structure"
    assert prof.nu == 2
    assert prof.critical_points == []


def test_classify_dependent_on_interval_with_crossing():
    p = example("ex32")
    prof = classify(p, traj=exact_traj(p, 1.0, 2.0), eps=0.1,
                    grid=np.linspace(1.0, 2.0, 21), seed=0)
    assert prof.classification == "free-structure-dependent"
    assert len(prof.critical_points) == 1
    assert abs(prof.critical_points[0] - HALF_PI) <= 1e-3


def test_classify_independent_before_crossing():
    p = example("ex32")
    prof = classify(p, traj=exact_traj(p, 0.5, 1.0), eps=1.5,
                    grid=np.linspace(0.5, 1.0, 21), seed=0)
    assert prof.classification == "free-structure-independent"
    assert prof.critical_points == []


@pytest.mark.parametrize("a, b, eps", [(0.5, 1.0, 3.0), (1.0, 2.0, 8.0)])
def test_classify_independent_for_exponential_solution(a, b, eps):
    p = example("ex33")
    prof = classify(p, traj=exact_traj(p, a, b), eps=eps,
                    grid=np.linspace(a, b, 21), seed=0)
    assert prof.classification == "free-structure-independent"
    assert prof.critical_points == []
    assert set(prof.nu_at) == {1}


def test_classify_dependent_iff_critical_points():
    cases = [
        (example("ex31"), None, 0.5, None),
        (example("ex32"), exact_traj(example("ex32"), 1.0, 2.0), 0.1,
         np.linspace(1.0, 2.0, 21)),
        (example("ex32"), exact_traj(example("ex32"), 0.5, 1.0), 1.5,
         np.linspace(0.5, 1.0, 21)),
        (example("ex33"), exact_traj(example("ex33"), 1.0, 2.0), 8.0,
         np.linspace(1.0, 2.0, 21)),
    ]
    for p, tr, eps, grid in cases:
        prof = classify(p, traj=tr, eps=eps, grid=grid, seed=0)
        dependent = prof.classification == "free-structure-dependent"
        assert dependent == bool(prof.critical_points)


def test_classify_stable_under_trajectory_resampling():
    p = example("ex32")
    grid = np.linspace(1.0, 2.0, 21)
    coarse = TrajectorySample.from_function(p.exact, np.linspace(1.0, 2.0, 101))
    fine = TrajectorySample.from_function(p.exact, np.linspace(1.0, 2.0, 201))
    pa = classify(p, traj=coarse, eps=0.1, grid=grid, seed=0)
    pb = classify(p, traj=fine, eps=0.1, grid=grid, seed=0)
    assert pa.classification == pb.classification
    assert len(pa.critical_points) == len(pb.critical_points)
    for ta, tb in zip(pa.critical_points, pb.critical_points):
        assert abs(ta - tb) <= 1e-3


def test_classify_deterministic_for_fixed_seed():
    p = example("ex32")
    kw = dict(traj=exact_traj(p, 1.0, 2.0), eps=0.1,
              grid=np.linspace(1.0, 2.0, 21), seed=0)
    assert classify(p, **kw).to_dict() == classify(p, **kw).to_dict()


def test_classify_raises_when_index_mostly_undefined():
    bad = SemiNonlinearDAE(
        A=MatrixFunction.constant(np.zeros((2, 2)), domain=(0.0, 1.0)),
        F=lambda t, y: np.zeros(2),
        f=lambda t: np.zeros(2),
        r=2, T=1.0, t_start=0.0,
        F_y=lambda t, y: np.zeros((2, 2)))
    flat = TrajectorySample(np.linspace(0.0, 1.0, 11), np.zeros((11, 2)))
    with pytest.raises(ClassificationUnreliableError):
        classify(bad, traj=flat, seed=0)


def test_classify_validates_input():
    p = example("ex32")
    tr = exact_traj(p, 0.5, 1.0)
    with pytest.raises(InvalidInputError):
        classify(p, traj=tr, eps=0.0, grid=np.linspace(0.5, 1.0, 5), seed=0)
    with pytest.raises(InvalidInputError):
        classify(p, traj=tr, n_perturb=-1, grid=np.linspace(0.5, 1.0, 5), seed=0)
