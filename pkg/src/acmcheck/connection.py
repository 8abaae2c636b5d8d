"""Connections: Levi-Civita (coordinate oracle and adapted form), the
internal connection, N-connections with their torsion and metricity defect,
and covariant derivatives of admissible tensors and of phi.

Coefficient arrays follow the project convention coeff[i, j, k]:
nabla_{E_i} E_j = coeff[i, j, k] E_k over the adapted frame (e_a, xi).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chart import FRAME_LOWER, FRAME_UPPER, TensorGrid
from .structure import AdaptedStructure, StructureEval

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Endomorphism:
    """A horizontal endomorphism N (N xi = 0, N(D) in D by representation).

    The value at a point is psi_multiple * psi + constant + fields, where
    ``fields`` is an object array of ScalarFields with fields[b, a] = N^b_a.
    The canonical choice N = 2 psi is expressed through ``psi_multiple`` so
    there is a single code path for all N-connections.
    """

    fields: np.ndarray | None = None
    psi_multiple: float = 0.0
    offset: np.ndarray | None = None

    @staticmethod
    def canonical() -> "Endomorphism":
        """The unique skew-torsion choice N = 2 psi."""
        return Endomorphism(psi_multiple=2.0)

    @staticmethod
    def zero() -> "Endomorphism":
        return Endomorphism()

    @staticmethod
    def constant(matrix: np.ndarray, psi_multiple: float = 0.0) -> "Endomorphism":
        return Endomorphism(psi_multiple=psi_multiple, offset=np.asarray(matrix, dtype=float))

    def value_at(self, ev: StructureEval) -> np.ndarray:
        out = np.zeros((ev.m, ev.m))
        if self.psi_multiple:
            out += self.psi_multiple * ev.psi0
        if self.offset is not None:
            out += self.offset
        if self.fields is not None:
            for idx in np.ndindex(self.fields.shape):
                out[idx] += self.fields[idx].value(ev.p)
        return out


@dataclass(frozen=True)
class ConnectionCoeffs:
    """Connection coefficients at a point, split into the adapted blocks.

    ``frame[a, b, c]`` is Gamma^a_{bc} (direction b).  ``mixed_an[b, a]``
    carries the horizontal-vertical block with the upper index first: for
    the Levi-Civita form it is C^b_a + psi^b_a (the same in both mixed
    slots), for an N-connection it is N^b_a (direction xi).  ``full[i, j,
    k]`` is the assembled coefficient array on the frame (e_a, xi).
    """

    which: str
    frame: np.ndarray
    mixed_an: np.ndarray
    n_ab: np.ndarray | None
    n_na: np.ndarray
    a_nn: np.ndarray | None
    full: np.ndarray


def lc_adapted(s: AdaptedStructure, p: np.ndarray) -> ConnectionCoeffs:
    """Levi-Civita coefficients in adapted form: the horizontal block shared
    with the internal connection plus the four mixed blocks."""
    ev = StructureEval(s, p)
    return _lc_adapted(ev)


def _lc_adapted(ev: StructureEval) -> ConnectionCoeffs:
    m, last = ev.m, ev.n - 1
    full = ev.lc_full
    return ConnectionCoeffs(
        which="levi_civita",
        frame=ev.Gamma0.copy(),
        mixed_an=(ev.Cmix0 + ev.psi0).copy(),
        n_ab=full[:m, :m, last].copy(),
        n_na=full[last, :m, last].copy(),
        a_nn=full[last, last, :m].copy(),
        full=full.copy(),
    )


def internal(s: AdaptedStructure, p: np.ndarray) -> ConnectionCoeffs:
    """The internal connection: the horizontal Levi-Civita block alone."""
    ev = StructureEval(s, p)
    full = np.zeros((ev.n, ev.n, ev.n))
    full[: ev.m, : ev.m, : ev.m] = np.moveaxis(ev.Gamma0, 0, 2)
    return ConnectionCoeffs(
        which="internal",
        frame=ev.Gamma0.copy(),
        mixed_an=np.zeros((ev.m, ev.m)),
        n_ab=None,
        n_na=np.zeros(ev.m),
        a_nn=None,
        full=full,
    )


def n_connection(s: AdaptedStructure, N: Endomorphism, p: np.ndarray) -> ConnectionCoeffs:
    ev = StructureEval(s, p)
    return _n_connection(ev, N.value_at(ev))


def canonical_connection(s: AdaptedStructure, p: np.ndarray) -> ConnectionCoeffs:
    """The N-connection with N = 2 psi, the unique skew-torsion choice."""
    return n_connection(s, Endomorphism.canonical(), p)


def _n_connection(ev: StructureEval, N0: np.ndarray) -> ConnectionCoeffs:
    m, last = ev.m, ev.n - 1
    full = ev.n_full(N0)
    return ConnectionCoeffs(
        which="n_connection",
        frame=ev.Gamma0.copy(),
        mixed_an=N0.copy(),
        n_ab=None,
        n_na=full[last, :m, last].copy(),
        a_nn=None,
        full=full,
    )


# ---------------------------------------------------------------------------
# Coordinate oracle
# ---------------------------------------------------------------------------


def lc_coordinate(s: AdaptedStructure, p: np.ndarray) -> np.ndarray:
    """Coordinate Christoffel symbols of g = g_ab dx^a dx^b + eta (x) eta.

    Standard formula on the full coordinate metric; independent of the
    adapted-form decomposition, hence the oracle for :func:`lc_adapted`.
    Returns coeff[i, j, k] with coordinate-frame indices.
    """
    ev = StructureEval(s, p)
    return _lc_coordinate(ev)


def _lc_coordinate(ev: StructureEval) -> np.ndarray:
    n, m = ev.n, ev.m
    eta0 = np.zeros(n)
    eta0[:m] = ev.gam0
    eta0[-1] = 1.0
    eta1 = np.zeros((n, n))
    eta1[:m] = ev.gam1

    G0 = np.zeros((n, n))
    G0[:m, :m] = ev.g0
    G0 += np.outer(eta0, eta0)
    G1 = np.zeros((n, n, n))
    G1[:m, :m, :] = ev.g1
    G1 += np.einsum("ik,j->ijk", eta1, eta0) + np.einsum("i,jk->ijk", eta0, eta1)

    Ginv = np.linalg.inv(G0)
    return 0.5 * np.einsum(
        "km,ijm->ijk", Ginv, np.einsum("jmi->ijm", G1) + np.einsum("imj->ijm", G1) - G1
    )


def coordinate_to_adapted(s: AdaptedStructure, p: np.ndarray, coord_coeffs: np.ndarray) -> np.ndarray:
    """Re-express coordinate connection coefficients on the adapted frame."""
    ev = StructureEval(s, p)
    return _coordinate_to_adapted(ev, coord_coeffs)


def _coordinate_to_adapted(ev: StructureEval, coord_coeffs: np.ndarray) -> np.ndarray:
    n, m = ev.n, ev.m
    E = np.zeros((n, n))  # E[i, q]: coordinate components of frame vector i
    E[:m, :m] = np.eye(m)
    E[:m, -1] = -ev.gam0
    E[-1, -1] = 1.0
    dE = np.zeros((n, n, n))  # dE[j, q, p] = d_p E[j, q]
    dE[:m, -1, :] = -ev.gam1
    C = np.zeros((n, n))  # coframe rows (dx^a, eta); E @ C.T = id
    C[:m, :m] = np.eye(m)
    C[-1, :m] = ev.gam0
    C[-1, -1] = 1.0

    W = np.einsum("ip,jqp->ijq", E, dE) + np.einsum("ip,jr,prq->ijq", E, E, coord_coeffs)
    return np.einsum("ijq,kq->ijk", W, C)


# ---------------------------------------------------------------------------
# Basis vector fields and brackets (shared with the Nijenhuis machinery)
# ---------------------------------------------------------------------------


def basis_fields(ev: StructureEval) -> tuple[np.ndarray, np.ndarray]:
    """Coordinate components B0[i, q] and gradients B1[i, q, j] of the
    adapted basis (e_a, xi)."""
    n, m = ev.n, ev.m
    B0 = np.zeros((n, n))
    B0[:m, :m] = np.eye(m)
    B0[:m, -1] = -ev.gam0
    B0[-1, -1] = 1.0
    B1 = np.zeros((n, n, n))
    B1[:m, -1, :] = -ev.gam1
    return B0, B1


def bracket(V0, V1, W0, W1) -> np.ndarray:
    """[V, W]^q = V^p d_p W^q - W^p d_p V^q from components and gradients."""
    return np.einsum("p,qp->q", V0, W1) - np.einsum("p,qp->q", W0, V1)


def to_frame_components(ev: StructureEval, V: np.ndarray) -> np.ndarray:
    """Split a coordinate vector into (horizontal components, eta(V))."""
    out = np.empty(ev.n)
    out[: ev.m] = V[: ev.m]
    out[-1] = float(np.dot(ev.gam0, V[: ev.m]) + V[-1])
    return out


def basis_brackets_frame(ev: StructureEval) -> np.ndarray:
    """Frame components of [E_i, E_j] for all basis pairs: out[i, j, k]."""
    B0, B1 = basis_fields(ev)
    out = np.empty((ev.n, ev.n, ev.n))
    for i in range(ev.n):
        for j in range(ev.n):
            out[i, j] = to_frame_components(ev, bracket(B0[i], B1[i], B0[j], B1[j]))
    return out


# ---------------------------------------------------------------------------
# Torsion and metricity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TorsionResult:
    components: np.ndarray  # S~[i, j, k] = g(S(E_i, E_j), E_k), from the component table
    is_skew: bool
    skew_residual: float
    direct_residual: float  # table vs nabla^N_X Y - nabla^N_Y X - [X, Y], lowered


def torsion(s: AdaptedStructure, N: Endomorphism, p: np.ndarray, tol: float = DEFAULT_TOL) -> TorsionResult:
    ev = StructureEval(s, p)
    return _torsion(ev, N.value_at(ev), tol)


def _torsion(ev: StructureEval, N0: np.ndarray, tol: float = DEFAULT_TOL) -> TorsionResult:
    m, last = ev.m, ev.n - 1
    GN = N0.T @ ev.g0  # GN[a, b] = g(N e_a, e_b)

    table = np.zeros((ev.n, ev.n, ev.n))
    table[:m, :m, last] = 2.0 * ev.omega0
    table[:m, last, :m] = -GN
    table[last, :m, :m] = GN

    # direct definition from coefficients and honest coordinate brackets
    coeff = ev.n_full(N0)
    S_upper = coeff - np.swapaxes(coeff, 0, 1) - basis_brackets_frame(ev)
    direct = np.einsum("ijl,lk->ijk", S_upper, ev.g_full)
    direct_residual = float(np.abs(direct - table).max())

    skew_residual = max(
        float(np.abs(table + np.swapaxes(table, 0, 1)).max()),
        float(np.abs(table + np.swapaxes(table, 1, 2)).max()),
        float(np.abs(table + np.moveaxis(table, (0, 1, 2), (2, 1, 0))).max()),
    )
    scale = 1.0 + float(np.abs(table).max())
    return TorsionResult(
        components=table,
        is_skew=bool(skew_residual < tol * scale),
        skew_residual=skew_residual,
        direct_residual=direct_residual,
    )


def metricity_defect(s: AdaptedStructure, N: Endomorphism, p: np.ndarray) -> np.ndarray:
    """Full covariant derivative of the metric under the N-connection:
    out[i, j, k] = (nabla^N_{E_i} g)(E_j, E_k)."""
    ev = StructureEval(s, p)
    return _metricity_defect(ev, N.value_at(ev))


def _metricity_defect(ev: StructureEval, N0: np.ndarray) -> np.ndarray:
    n, m = ev.n, ev.m
    coeff = ev.n_full(N0)
    dG = np.zeros((n, n, n))  # dG[j, k, i] = E_i g~_jk
    dG[:m, :m, :] = ev.frame_d(ev.g1)
    out = np.einsum("jki->ijk", dG)
    out -= np.einsum("ijl,lk->ijk", coeff, ev.g_full)
    out -= np.einsum("ikl,jl->ijk", coeff, ev.g_full)
    return out


def n_connection_formula_residual(s: AdaptedStructure, N: Endomorphism, p: np.ndarray) -> float:
    """Consistency of the N-connection coefficient table with its defining
    expression in terms of the Levi-Civita connection, evaluated on basis
    pairs: nabla^N_X Y = nabla~_X Y + (nabla~_X eta)(Y) xi - eta(Y) nabla~_X xi
    - eta(X) (nabla~_xi eta)(Y) xi - eta(X) (C + psi - N) Y."""
    ev = StructureEval(s, p)
    N0 = N.value_at(ev)
    m, last = ev.m, ev.n - 1
    lc = ev.lc_full

    formula = lc.copy()
    # + (nabla~_X eta)(E_j) xi, with (nabla~_{E_i} eta)(E_j) = -lc[i, j, last]
    formula[:, :, last] -= lc[:, :, last]
    # - eta(E_j) nabla~_{E_i} xi
    formula[:, last, :] -= lc[:, last, :]
    # - eta(E_i) (nabla~_xi eta)(E_j) xi, with (nabla~_xi eta)(E_j) = -lc[last, j, last]
    formula[last, :, last] += lc[last, :, last]
    # - eta(E_i) (C + psi - N) E_j
    formula[last, :m, :m] -= (ev.Cmix0 + ev.psi0 - N0).T

    return float(np.abs(formula - ev.n_full(N0)).max())


# ---------------------------------------------------------------------------
# Covariant derivatives
# ---------------------------------------------------------------------------


def _cov_deriv_from_data(
    ev: StructureEval, T0: np.ndarray, T1: np.ndarray, valence: tuple[str, ...]
) -> np.ndarray:
    """Internal covariant derivative of an admissible tensor from its values
    and coordinate gradients: out[c, ...] = (nabla_{e_c} t)_{...}."""
    eT = ev.frame_d(T1)[..., : ev.m]  # [..., c]
    out = np.moveaxis(eT, -1, 0).copy()
    for slot, v in enumerate(valence):
        moved = np.moveaxis(T0, slot, -1)  # [rest..., d], rest in original order
        if v == FRAME_UPPER:
            corr = np.einsum("acd,...d->ca...", ev.Gamma0, moved)  # +Gamma^a_{cd} t^{..d..}
        else:
            corr = -np.einsum("dca,...d->ca...", ev.Gamma0, moved)  # -Gamma^d_{ca} t_{..d..}
        out += np.moveaxis(corr, 1, slot + 1)
    return out


def internal_cov_deriv(
    s: AdaptedStructure, t: TensorGrid | np.ndarray, p: np.ndarray, valence: tuple[str, ...] | None = None
) -> TensorGrid:
    """nabla of an admissible tensor field given as ScalarField components.

    ``t`` is an object array (or a TensorGrid of one) in frame indices; the
    result gains a leading frame-lower direction index."""
    if isinstance(t, TensorGrid):
        fields, valence = t.components, t.valence
    else:
        fields = t
        if valence is None:
            raise ValueError("valence required when passing a bare component array")
    ev = StructureEval(s, p)
    T0 = np.empty(fields.shape)
    T1 = np.empty(fields.shape + (ev.n,))
    for idx in np.ndindex(fields.shape):
        jet = fields[idx].jet(p)
        T0[idx], T1[idx] = jet.value, jet.grad
    out = _cov_deriv_from_data(ev, T0, T1, tuple(valence))
    return TensorGrid(out, (FRAME_LOWER,) + tuple(valence))


def nabla_omega(ev: StructureEval) -> np.ndarray:
    """Internal covariant derivative of omega: out[c, a, b] = nabla_c omega_ab."""
    return _cov_deriv_from_data(ev, ev.omega0, ev.omega1, (FRAME_LOWER, FRAME_LOWER))


def nabla_psi(ev: StructureEval) -> np.ndarray:
    """Internal covariant derivative of psi: out[c, b, a] = nabla_c psi^b_a."""
    return _cov_deriv_from_data(ev, ev.psi0, ev.psi1, (FRAME_UPPER, FRAME_LOWER))


def cov_phi(s: AdaptedStructure, which: str, p: np.ndarray) -> np.ndarray:
    """Covariant derivative of phi (extended by phi xi = 0) under the chosen
    connection: out[i, b, a] = (nabla_{E_i} phi)^b_a over the full frame.

    ``which`` is 'levi_civita' or 'canonical'."""
    ev = StructureEval(s, p)
    if which == "levi_civita":
        coeff = ev.lc_full
    elif which == "canonical":
        coeff = ev.canonical_full
    else:
        raise ValueError(f"unknown connection '{which}'")
    return _cov_phi(ev, coeff)


def _cov_phi(ev: StructureEval, coeff: np.ndarray) -> np.ndarray:
    ephi = ev.phi_frame_d()  # [b, a, i]
    phi = ev.phi_full
    out = np.einsum("bai->iba", ephi)
    out += np.einsum("icb,ca->iba", coeff, phi)
    out -= np.einsum("iac,bc->iba", coeff, phi)
    return out
