"""Classification tests: Nijenhuis tensors, universal identities, verdicts."""

from __future__ import annotations

import numpy as np
import pytest

from acmcheck.classify import (
    InternalConsistencyError,
    reeb_split_identity_residual,
    projection_identity_residual,
    qs_characterization_residual,
    canonical_nabla_phi_residual,
    aqs_characterization_residual,
    classify,
    nijenhuis_tensors,
    qs_condition_residuals,
)
from _helpers import perturbed_flat

ALL = ("flat", "example1", "example2", "example3-qs", "example3-aqs")
ORIGIN = np.zeros(5)
P1 = np.array([0.4, 1.3, -0.6, 0.2, 0.8])


# ---------------------------------------------------------------------------
# Nijenhuis tensors
# ---------------------------------------------------------------------------


def test_nijenhuis_example1_values(structures):
    bundle = nijenhuis_tensors(structures["example1"], P1)
    # N1(e_1, e_2) = -xi: Reeb component -1, horizontal components 0
    assert bundle.n1[0, 1, 4] == pytest.approx(-1.0, abs=1e-12)
    assert np.abs(bundle.n1[0, 1, :4]).max() < 1e-12
    # N~(e_1, e_2) = 0
    assert np.abs(bundle.n_tilde[0, 1]).max() < 1e-12


def test_nijenhuis_flat_all_vanish(structures):
    bundle = nijenhuis_tensors(structures["flat"], ORIGIN)
    for grid in (bundle.n_phi, bundle.n1, bundle.n_tilde):
        assert np.abs(grid).max() == 0.0


def test_nijenhuis_antisymmetric_in_arguments(structures, sample_sets):
    for name in ALL:
        for p in sample_sets[name][:4]:
            bundle = nijenhuis_tensors(structures[name], p)
            assert np.abs(bundle.n_phi + np.swapaxes(bundle.n_phi, 0, 1)).max() < 1e-12


# ---------------------------------------------------------------------------
# Universal identities (Prop. 3 and Eq. (1) analogues)
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name", ALL)
def test_projection_identity_on_fixtures(name, structures, sample_sets):
    for p in sample_sets[name][:8]:
        assert projection_identity_residual(structures[name], p) < 1e-9, name


@pytest.mark.parametrize("name", ALL)
def test_reeb_split_identity_on_fixtures(name, structures, sample_sets):
    for p in sample_sets[name][:8]:
        assert reeb_split_identity_residual(structures[name], p) < 1e-9, name


def test_identities_survive_random_perturbations(structures):
    # the projection/split identities do not depend on the axioms, so they
    # must survive arbitrary horizontal perturbations of phi and g
    rng = np.random.default_rng(99)
    for _ in range(10):
        s = perturbed_flat(structures["flat"], rng)
        for p in s.chart.sample_points(4, seed=int(rng.integers(0, 10_000))):
            assert projection_identity_residual(s, p) < 1e-9
            assert reeb_split_identity_residual(s, p) < 1e-9


# ---------------------------------------------------------------------------
# Theorem-1-type characterization
# ---------------------------------------------------------------------------


def test_aqs_characterization_example1(structures, sample_sets):
    for p in sample_sets["example1"]:
        assert aqs_characterization_residual(structures["example1"], p) < 1e-8


def test_aqs_characterization_example2_violated(structures):
    p = np.array([1.0, 3.0, 0.0, 0.0, 2.0])
    assert aqs_characterization_residual(structures["example2"], p) > 0.1


def test_aqs_characterization_flat_trivial(structures):
    assert aqs_characterization_residual(structures["flat"], ORIGIN) == 0.0


def test_aqs_characterization_biconditional(structures, manifests, sample_sets):
    # residual below tolerance exactly on the fixtures classified AQS
    for name in ALL:
        mf = manifests[name]
        points = sample_sets[name]
        report = classify(structures[name], tol=mf.tolerance, points=points)
        worst = max(aqs_characterization_residual(structures[name], p) for p in points)
        assert report.holds("aqs") == (worst < mf.tolerance), (name, worst)


# ---------------------------------------------------------------------------
# Prop. 4 / Prop. 5 / Prop. 6 style checks
# ---------------------------------------------------------------------------


def test_qs_characterization_example3_qs_holds(structures, sample_sets):
    for p in sample_sets["example3-qs"][:8]:
        assert qs_characterization_residual(structures["example3-qs"], p) < 1e-8


def test_qs_characterization_example1_fails(structures):
    assert qs_characterization_residual(structures["example1"], P1) > 0.1


def test_qs_conditions_agree_on_aqs_fixtures(structures, sample_sets):
    for name in ("flat", "example1", "example3-qs"):
        for p in sample_sets[name][:8]:
            residuals = qs_condition_residuals(structures[name], p)
            flags = {cond: r < 1e-7 * (1 + s) for cond, (r, s) in residuals.items()}
            assert len(set(flags.values())) == 1, (name, residuals)


def test_canonical_nabla_phi_matches_quasi_sasakian(structures, sample_sets):
    worst_qs = max(canonical_nabla_phi_residual(structures["example3-qs"], p) for p in sample_sets["example3-qs"])
    assert worst_qs < 1e-8
    worst_aqs = max(canonical_nabla_phi_residual(structures["example3-aqs"], p) for p in sample_sets["example3-aqs"])
    assert worst_aqs > 1e-3


# ---------------------------------------------------------------------------
# Classification verdicts
# ---------------------------------------------------------------------------


def test_classify_example1(structures, sample_sets):
    report = classify(structures["example1"], points=sample_sets["example1"])
    assert report.holds("almost_normal")
    assert not report.holds("normal")
    assert report.holds("aqs")
    assert report.holds("almost_contact_kahler")
    assert not report.holds("quasi_sasakian")
    assert not report.holds("contact_metric")


def test_classify_example2(structures, sample_sets):
    report = classify(structures["example2"], points=sample_sets["example2"])
    assert not report.holds("aqs")
    assert not report.holds("d_eta_xi_zero")
    assert report.holds("almost_normal")
    assert report.holds("almost_contact_kahler")


def test_classify_example3_qs(structures, sample_sets):
    report = classify(structures["example3-qs"], points=sample_sets["example3-qs"])
    assert report.holds("quasi_sasakian")
    assert report.holds("aqs")
    # quasi-Sasakian forces normality: N1 = N~ + 2(d eta - phi* d eta) xi = 0
    assert report.holds("normal")


def test_classify_ladder_implications(structures, sample_sets):
    # normal => almost_normal; aqs => almost_normal, dOmega = 0, d eta(xi,.) = 0;
    # quasi_sasakian => aqs
    for name in ALL:
        report = classify(structures[name], points=sample_sets[name])
        if report.holds("normal"):
            assert report.holds("almost_normal"), name
        if report.holds("aqs"):
            assert report.holds("almost_normal"), name
            assert report.holds("d_Omega_zero"), name
            assert report.holds("d_eta_xi_zero"), name
        if report.holds("quasi_sasakian"):
            assert report.holds("aqs"), name


def test_classify_example3_aqs_not_quasi_sasakian(structures, sample_sets):
    report = classify(structures["example3-aqs"], points=sample_sets["example3-aqs"])
    assert not report.holds("quasi_sasakian")
    assert report.holds("almost_normal")
    assert report.holds("d_eta_xi_zero")
    # the redefined endomorphism does not close the fundamental form under
    # the conformal metric, so the AQS verdict is negative
    assert not report.holds("d_Omega_zero")
    assert not report.holds("aqs")


def test_classify_flat_quasi_sasakian(structures, sample_sets):
    report = classify(structures["flat"], points=sample_sets["flat"])
    assert report.holds("quasi_sasakian")
    assert report.holds("normal")
    assert report.holds("contact_metric") is False  # Omega != 0 = d(eta)


def test_classify_verdicts_stable_32_to_128(structures):
    for name in ALL:
        s = structures[name]
        small = classify(s, samples=32, seed=42)
        large = classify(s, samples=128, seed=42)
        for criterion in small.verdicts:
            assert small.holds(criterion) == large.holds(criterion), (name, criterion)


def test_classify_monotone_under_tolerance(structures, sample_sets):
    points = sample_sets["example1"]
    tight = classify(structures["example1"], tol=1e-9, points=points)
    loose = classify(structures["example1"], tol=1e-5, points=points)
    for criterion in tight.verdicts:
        if tight.holds(criterion):
            assert loose.holds(criterion)


def test_classify_samples_recorded(structures, sample_sets):
    report = classify(structures["flat"], points=sample_sets["flat"])
    assert report.samples == 32
    assert all(v.samples == 32 for v in report.verdicts.values())


def test_disagreeing_qs_conditions_raise(structures, sample_sets, monkeypatch):
    # the three quasi-Sasakian conditions are provably equivalent on AQS
    # structures; a disagreement there is an internal error, not a verdict
    import sys

    def doctored(s, p):
        return {
            "d_eta_phi_invariant": (0.0, 1.0),
            "phi_psi_commute": (1.0, 1.0),
            "A_g_symmetric": (0.0, 1.0),
        }

    monkeypatch.setattr(sys.modules["acmcheck.classify"], "qs_condition_residuals", doctored)
    with pytest.raises(InternalConsistencyError):
        classify(structures["example1"], points=sample_sets["example1"][:2])
