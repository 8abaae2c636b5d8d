"""Chart-level tests: frame calculus, nonholonomy, rank, chart changes."""

from __future__ import annotations

import numpy as np
import pytest

from acmcheck.chart import (
    AdaptedChart,
    AdaptedTransition,
    ChartError,
    FRAME_LOWER,
    FRAME_UPPER,
    SingularJacobianError,
    TensorGrid,
    change_chart,
    d_eta_xi,
    frame_apply,
    frame_bracket,
    omega_frame,
    rank_at,
)
from acmcheck.expr import parse

COORDS = ("x", "y", "z", "u", "v")
BOX = tuple((-2.0, 2.0) for _ in range(5))


def make_chart(gammas: list[str], domain=BOX, avoid: list[str] | None = None) -> AdaptedChart:
    return AdaptedChart(
        coords=COORDS,
        gamma=tuple(parse(g, COORDS) for g in gammas),
        domain=domain,
        avoid=tuple(parse(a, COORDS) for a in (avoid or [])),
    )


FLAT = make_chart(["0", "0", "0", "0"])
EX1 = make_chart(["y", "0", "0", "0"], avoid=["y"])
EX2 = make_chart(["y*v", "0", "0", "0"], domain=tuple((-4.0, 4.0) for _ in range(5)), avoid=["y"])


def test_chart_validation():
    with pytest.raises(ChartError):
        AdaptedChart(coords=("x", "y"), gamma=(parse("0", ("x", "y")),), domain=((-1, 1), (-1, 1)))
    with pytest.raises(ChartError):
        make_chart(["0", "0", "0"])  # wrong gamma count
    with pytest.raises(ChartError):
        AdaptedChart(coords=COORDS, gamma=FLAT.gamma, domain=BOX[:4])


# ---------------------------------------------------------------------------
# Frame derivatives
# ---------------------------------------------------------------------------


def test_frame_apply_flat():
    p = np.array([0.3, 1.0, -0.5, 0.2, 0.9])
    assert frame_apply(FLAT, 0, parse("x", COORDS), p) == 1.0


def test_frame_apply_example1_fifth_coordinate():
    # e_1 = d_1 - y d_5 applied to v gives -y
    f = parse("v", COORDS)
    for p in [np.array([0.1, 1.7, 0.0, 0.0, 0.4]), np.array([-1.0, -0.8, 1.0, 2.0, -1.5])]:
        assert frame_apply(EX1, 0, f, p) == pytest.approx(-p[1], abs=1e-15)


def test_frame_apply_example1_y_annihilated():
    p = np.array([0.1, 1.7, 0.0, 0.0, 0.4])
    assert frame_apply(EX1, 0, parse("y", COORDS), p) == 0.0


def test_frame_apply_index_range():
    with pytest.raises(IndexError):
        frame_apply(FLAT, 4, parse("x", COORDS), np.zeros(5))


# ---------------------------------------------------------------------------
# omega and the bracket oracle
# ---------------------------------------------------------------------------


def test_omega_flat_vanishes():
    assert np.array_equal(omega_frame(FLAT, np.zeros(5)).components, np.zeros((4, 4)))


def test_omega_example1_values():
    # from the bracket: [e_1, e_2] = d_5, so 2 omega_{21} = 1
    p = np.array([0.5, 1.2, -0.3, 0.0, 0.7])
    omega = omega_frame(EX1, p).components
    expected = np.zeros((4, 4))
    expected[1, 0] = 0.5
    expected[0, 1] = -0.5
    assert np.array_equal(omega, expected)
    bracket = frame_bracket(EX1, 0, 1, p)
    assert np.array_equal(bracket, np.array([0.0, 0.0, 0.0, 0.0, 1.0]))


def test_omega_example2_against_bracket_oracle():
    # frozen from the bracket oracle: [e_1, e_2] = v d_5, so omega_{21} = v/2
    rng = np.random.default_rng(7)
    for _ in range(8):
        p = rng.uniform(-4, 4, size=5)
        omega = omega_frame(EX2, p).components
        assert omega[1, 0] == pytest.approx(p[4] / 2, rel=1e-12, abs=1e-12)
        bracket = frame_bracket(EX2, 0, 1, p)
        assert bracket[4] == pytest.approx(2 * omega[1, 0], rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("chart", [FLAT, EX1, EX2], ids=["flat", "ex1", "ex2"])
def test_bracket_consistency_at_samples(chart):
    # [e_a, e_b] has no horizontal part and vertical part 2 omega_{ba}
    points = chart.sample_points(32, seed=42)
    m, last = chart.m, chart.n - 1
    for p in points:
        omega = omega_frame(chart, p).components
        assert np.abs(omega + omega.T).max() == 0.0  # skew exactly
        for a in range(m):
            for b in range(m):
                br = frame_bracket(chart, a, b, p)
                assert np.abs(br[:last]).max() < 1e-9
                assert abs(br[last] - 2 * omega[b, a]) < 1e-9


# ---------------------------------------------------------------------------
# d(eta)(xi, .) and rank
# ---------------------------------------------------------------------------


def test_d_eta_xi_example1_zero_everywhere():
    for p in EX1.sample_points(8, seed=3):
        assert np.array_equal(d_eta_xi(EX1, p), np.zeros(4))


def test_d_eta_xi_example2_first_entry_y():
    p = np.array([1.0, 3.0, 0.0, 0.0, 2.0])
    vec = d_eta_xi(EX2, p)
    assert vec[0] == pytest.approx(3.0, abs=1e-15)
    assert np.array_equal(vec[1:], np.zeros(3))


def test_d_eta_xi_flat_zero():
    assert np.array_equal(d_eta_xi(FLAT, np.zeros(5)), np.zeros(4))


def test_rank_example1_is_3():
    for p in EX1.sample_points(8, seed=5):
        assert rank_at(EX1, p) == 3


def test_rank_example2_even():
    # generic point with v != 0: omega has rank 2 and d_n gamma_1 = y != 0
    assert rank_at(EX2, np.array([1.0, 3.0, 0.0, 0.0, 2.0])) == 2


def test_rank_flat_is_1():
    assert rank_at(FLAT, np.zeros(5)) == 1


EX3 = make_chart(["y", "0", "0", "0"], avoid=["y"])  # chart shared by the conformal fixtures


@pytest.mark.parametrize("chart", [FLAT, EX1, EX2, EX3], ids=["flat", "ex1", "ex2", "ex3"])
def test_rank_parity_matches_d_eta_xi(chart):
    points = chart.sample_points(16, seed=11)
    vertical_zero = all(np.abs(d_eta_xi(chart, p)).max() < 1e-12 for p in points)
    ranks = [rank_at(chart, p) for p in points]
    if vertical_zero:
        assert all(r % 2 == 1 for r in ranks)
    else:
        assert all(r % 2 == 0 for r in ranks)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def test_sampling_deterministic_and_order_independent():
    a = EX1.sample_points(16, seed=42)
    b = EX1.sample_points(16, seed=42)
    assert np.array_equal(a, b)
    # prefix property: the first 4 points do not depend on the total count
    assert np.array_equal(EX1.sample_points(4, seed=42), a[:4])


def test_sampling_respects_avoid():
    for p in EX1.sample_points(64, seed=1):
        assert abs(p[1]) >= 1e-6


def test_contains():
    assert FLAT.contains(np.zeros(5))
    assert not FLAT.contains(np.array([3.0, 0, 0, 0, 0]))
    assert not EX1.contains(np.array([0.5, 0.0, 0.0, 0.0, 0.0]))  # avoid y = 0


# ---------------------------------------------------------------------------
# Chart changes
# ---------------------------------------------------------------------------


def _identity_transition() -> AdaptedTransition:
    return AdaptedTransition(
        frame_maps=tuple(parse(name, COORDS) for name in COORDS[:4]),
        shift=parse("0", COORDS),
    )


def _rotation_transition(theta: float, inverse: bool = False) -> AdaptedTransition:
    c, s = float(np.cos(theta)), float(np.sin(theta))
    if inverse:
        s = -s
    return AdaptedTransition(
        frame_maps=(
            parse(f"{c!r}*x - {s!r}*y", COORDS),
            parse(f"{s!r}*x + {c!r}*y", COORDS),
            parse("z", COORDS),
            parse("u", COORDS),
        ),
        shift=parse("0", COORDS),
    )


def test_change_chart_identity():
    t = TensorGrid(np.arange(16.0).reshape(4, 4), (FRAME_UPPER, FRAME_LOWER))
    out, q = change_chart(_identity_transition(), t, np.array([0.2, 0.4, 0.1, -0.9, 1.3]))
    assert np.allclose(out.components, t.components, atol=1e-14)
    assert np.allclose(q, [0.2, 0.4, 0.1, -0.9, 1.3])


def test_change_chart_pure_shift():
    shift = AdaptedTransition(
        frame_maps=tuple(parse(name, COORDS) for name in COORDS[:4]),
        shift=parse("3", COORDS),
    )
    t = TensorGrid(np.arange(4.0), (FRAME_LOWER,))
    out, q = change_chart(shift, t, np.zeros(5))
    assert np.array_equal(out.components, t.components)
    assert np.array_equal(q, np.array([0, 0, 0, 0, 3.0]))


def test_change_chart_rotation_rank1():
    # hand application of the law to a rank-1 (1,1) tensor: t -> A t A^{-1}
    theta = 0.6
    tr = _rotation_transition(theta)
    p = np.array([0.3, -0.2, 0.5, 0.8, 0.1])
    w = np.array([1.0, 2.0, -1.0, 0.5])
    c = np.array([0.5, -3.0, 2.0, 1.0])
    t = TensorGrid(np.outer(w, c), (FRAME_UPPER, FRAME_LOWER))
    out, _ = change_chart(tr, t, p)
    A = tr.jacobian(p)
    expected = A @ t.components @ np.linalg.inv(A)
    assert np.allclose(out.components, expected, atol=1e-12)
    # rank-1 structure is preserved: columns stay proportional to A @ w
    assert np.allclose(out.components, np.outer(A @ w, np.linalg.inv(A).T @ c), atol=1e-12)


def test_change_chart_round_trip():
    theta = 0.37
    forward = _rotation_transition(theta)
    backward = _rotation_transition(theta, inverse=True)
    p = np.array([0.25, 0.75, -0.4, 1.1, 0.6])
    rng = np.random.default_rng(0)
    t = TensorGrid(rng.normal(size=(4, 4, 4)), (FRAME_UPPER, FRAME_LOWER, FRAME_LOWER))
    pushed, q = change_chart(forward, t, p)
    back, p2 = change_chart(backward, pushed, q)
    assert np.abs(back.components - t.components).max() < 1e-8
    assert np.allclose(p2, p, atol=1e-12)


def test_change_chart_singular_jacobian():
    degenerate = AdaptedTransition(
        frame_maps=(parse("x", COORDS), parse("x", COORDS), parse("z", COORDS), parse("u", COORDS)),
        shift=parse("0", COORDS),
    )
    t = TensorGrid(np.eye(4), (FRAME_UPPER, FRAME_LOWER))
    with pytest.raises(SingularJacobianError):
        change_chart(degenerate, t, np.zeros(5))


def test_change_chart_rejects_coordinate_valence():
    from acmcheck.chart import COORD

    t = TensorGrid(np.zeros(5), (COORD,))
    with pytest.raises(ValueError):
        change_chart(_identity_transition(), t, np.zeros(5))


def test_tensor_grid_valence_shape_check():
    with pytest.raises(ValueError):
        TensorGrid(np.zeros((4, 4)), (FRAME_LOWER,))
