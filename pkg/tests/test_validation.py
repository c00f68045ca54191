import math

import numpy as np
import pytest

from fkmc import potentials, validation
from fkmc.estimators import ProblemSpec
from fkmc.geometry import Ball, FullSpace, HalfSpace, slit_plane
from fkmc.validation import psi_bump, psi_gaussian, psi_one

Z2 = np.zeros(2)
E1 = np.array([1.0, 0.0])


def spec_with(A=None, V=None, domain=None, d=2):
    return ProblemSpec(A or potentials.zero_vector(d),
                       V or potentials.zero_scalar(d),
                       domain or FullSpace(d))


def test_check_report_semantics():
    rep = validation.CheckReport("x", True, 0.5, 1.0)
    assert rep.passed == (rep.statistic <= rep.threshold)
    d = rep.to_dict()
    assert d["pass"] and d["name"] == "x"


# diamagnetic ----------------------------------------------------------------

def test_diamagnetic_zero_field_equality():
    rep = validation.check_diamagnetic(spec_with(), [(Z2, E1)], 1.0, 4096, 50, seed=0)
    assert rep.passed
    assert rep.statistic <= validation.FP_GUARD


def test_diamagnetic_landau_ratio():
    # shared-seed diagonal ratio |k_A| / k_0 = (t h/2)/sinh(t h/2) = 0.9595 at t=h=1
    rep = validation.check_diamagnetic(
        spec_with(A=potentials.landau(1.0)), [(Z2, Z2)], 1.0, 50_000, 200, seed=1)
    assert rep.passed
    det = rep.details[0]
    assert det["abs_k_A"] / det["k_0"] == pytest.approx(0.5 / math.sinh(0.5), abs=0.01)


def test_diamagnetic_growth_example():
    rep = validation.check_diamagnetic(
        spec_with(A=potentials.growth_example()), [(Z2, 0.3 * E1)], 0.25, 4096, 100, seed=2)
    assert rep.passed


# domain monotonicity ---------------------------------------------------------

def test_domain_monotonicity():
    sub = spec_with(domain=HalfSpace(E1))
    sup = spec_with()
    pts = [np.array([0.5, 0.0]), np.array([1.5, -1.0])]
    rep = validation.check_domain_monotonicity(sub, sup, psi_gaussian, pts, 1.0,
                                               8192, 100, seed=3)
    assert rep.passed


# hermiticity / semigroup -----------------------------------------------------

def test_hermiticity_free():
    rep = validation.check_hermiticity(spec_with(), [(Z2, E1)], 1.0, 8192, 50, seed=4)
    assert rep.passed


def test_hermiticity_landau_phases():
    spec = spec_with(A=potentials.landau(1.0))
    x, y = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    rep = validation.check_hermiticity(spec, [(x, y)], 1.0, 30_000, 500, seed=5)
    assert rep.passed
    det = rep.details[0]
    assert det["k_xy"][1] == pytest.approx(-det["k_yx"][1], abs=6 * det["se"])


def test_semigroup_free():
    rep = validation.check_semigroup(spec_with(), 0.5, 0.5, Z2, E1,
                                     np.full(2, -3.5), np.full(2, 4.0), 10,
                                     4096, 50, seed=6)
    assert rep.passed


# girsanov -------------------------------------------------------------------

@pytest.mark.parametrize("fn", ["one", "coordinate", "indicator"])
def test_girsanov_functionals(fn):
    rep = validation.check_girsanov(fn, 0.4, 1.0, Z2, E1, 2, 50_000, 100, seed=7)
    assert rep.passed, rep.details


def test_girsanov_bridge_mean_oracle():
    rep = validation.check_girsanov("coordinate", 0.4, 1.0, Z2, E1, 2,
                                    50_000, 100, seed=8)
    det = rep.details[0]
    assert det["bridge"] == pytest.approx(0.4, abs=6 * det["se"])  # x1 + (s/t)(y1-x1)


# boundary vanishing ----------------------------------------------------------

def test_boundary_vanishing_full_space_control():
    rep = validation.check_boundary_vanishing(spec_with(), Z2, E1, [0.5, 0.25],
                                              E1, 1.0, 100, 10, seed=9)
    assert rep.passed
    assert "no boundary" in rep.details[0]["note"]


def test_boundary_vanishing_half_plane():
    spec = spec_with(domain=HalfSpace(E1))
    rep = validation.check_boundary_vanishing(
        spec, Z2, E1, [0.8, 0.4, 0.2, 0.1], np.array([1.0, 0.0]),
        1.0, 30_000, 300, seed=10)
    assert rep.passed
    # image-kernel linearization: halving delta roughly halves the value
    vals = [d["value"] for d in rep.details]
    assert vals[2] / vals[1] == pytest.approx(0.5, abs=0.15)


# soft kill / continuity ------------------------------------------------------

def test_soft_kill_monotone_and_lands():
    spec = spec_with(domain=HalfSpace(E1))
    rep = validation.soft_kill_convergence(spec, 1.0, [10, 100, 1000], 1.0,
                                           E1, E1, 16_384, 300, seed=11)
    assert rep.passed
    vals = [d["value"] for d in rep.details[:3]]
    assert vals == sorted(vals, reverse=True)


def test_potential_convergence_identity_sequence():
    V = potentials.harmonic(1.0, 2)
    spec = spec_with(V=V)
    approx = [(potentials.zero_vector(2), V)] * 3
    rep = validation.potential_convergence_experiment(
        spec, approx, [(Z2, E1)], 0.5, 4096, 50, seed=12, threshold=1e-12)
    assert rep.passed
    assert all(d["sup_difference"] == 0.0 for d in rep.details)


def test_strong_continuity_free_bump():
    spec = spec_with()
    rep = validation.strong_continuity_experiment(
        spec, psi_bump(1.5), 2.0, [0.4, 0.2, 0.1, 0.05], np.full(2, -2.5), np.full(2, 2.5),
        7, 4096, 100, seed=13, threshold=0.2)
    assert rep.passed
    norms = [d["norm"] for d in rep.details]
    assert norms[-1] < norms[0]


# regularity probe ------------------------------------------------------------

def test_regularity_half_plane_boundary():
    rep = validation.regularity_probe(HalfSpace(E1), [Z2], 1.0, [0.0], 4096, 100,
                                      seed=14, mode="corrected")
    assert rep.passed
    assert rep.statistic == 0.0  # corrected killing annihilates boundary starts


def test_regularity_interior_control():
    rep = validation.regularity_probe(HalfSpace(E1), [np.array([3.0, 0.0])], 1.0,
                                      [0.0], 4096, 100, seed=15, mode="corrected")
    assert not rep.passed  # interior starts survive with high probability
    assert rep.statistic > 0.5


def test_regularity_slit_tip_flagged():
    # the slit is polar for planar Brownian motion: survival stays near 1
    rep = validation.regularity_probe(slit_plane(), [Z2], 1.0, [0.0], 4096, 200,
                                      seed=16, mode="naive")
    assert not rep.passed
    assert rep.statistic > 0.9


# test functions --------------------------------------------------------------

def test_psi_bump_support():
    f = psi_bump(1.0)
    assert f(np.array([0.0, 0.0])) == pytest.approx(1.0)
    assert f(np.array([1.5, 0.0])) == 0.0


def test_psi_one_shape():
    assert np.all(psi_one(np.zeros((5, 2))) == 1.0)
