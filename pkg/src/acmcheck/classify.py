"""Nijenhuis-type tensors and the classification ladder.

All brackets are computed honestly in coordinates from jets; the tensors are
then reported in frame components (horizontal slots, then the Reeb slot).
Verdicts follow the residual rule: a criterion holds when its max residual
over the samples stays below tol * (1 + max magnitude of the tensors the
criterion compares).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connection import basis_fields, bracket, cov_phi, to_frame_components
from .structure import AdaptedStructure, StructureEval, d_fundamental_form

DEFAULT_TOL = 1e-7

CRITERIA = (
    "contact_metric",
    "normal",
    "almost_normal",
    "almost_contact_kahler",
    "aqs",
    "quasi_sasakian",
    "d_eta_xi_zero",
    "d_Omega_zero",
)

QS_CONDITIONS = ("d_eta_phi_invariant", "phi_psi_commute", "A_g_symmetric")


class InternalConsistencyError(Exception):
    """The three equivalent quasi-Sasakian conditions disagreed."""


@dataclass(frozen=True)
class NijenhuisBundle:
    """The three Nijenhuis-type tensors on basis pairs: grid[i, j, k] is the
    k-th frame component of T(E_i, E_j); index n-1 is the Reeb slot."""

    n_phi: np.ndarray
    n1: np.ndarray
    n_tilde: np.ndarray
    d_eta: np.ndarray  # d(eta)(E_i, E_j)
    d_eta_phi: np.ndarray  # d(eta)(phi E_i, phi E_j)


def _phi_apply(ev: StructureEval, V: np.ndarray) -> np.ndarray:
    """phi of a coordinate vector: frame-split, apply, push back."""
    u = ev.phi0 @ V[: ev.m]
    out = np.zeros(ev.n)
    out[: ev.m] = u
    out[-1] = -float(np.dot(u, ev.gam0))
    return out


def _phi_basis_fields(ev: StructureEval) -> tuple[np.ndarray, np.ndarray]:
    """Coordinate components and gradients of the fields phi(E_i)."""
    n, m = ev.n, ev.m
    P0 = np.zeros((n, n))
    P1 = np.zeros((n, n, n))
    P0[:m, :m] = ev.phi0.T  # (phi e_i)^b = phi0[b, i]
    P0[:m, -1] = -ev.phi0.T @ ev.gam0
    P1[:m, :m, :] = np.einsum("bij->ibj", ev.phi1)
    P1[:m, -1, :] = -np.einsum("bij,b->ij", ev.phi1, ev.gam0) - np.einsum(
        "bi,bj->ij", ev.phi0, ev.gam1
    )
    return P0, P1


def _d_eta_pairs(ev: StructureEval) -> np.ndarray:
    """d(eta)(E_i, E_j) on basis pairs under the 1/2 convention."""
    n, m = ev.n, ev.m
    out = np.zeros((n, n))
    out[:m, :m] = ev.omega0
    out[-1, :m] = 0.5 * ev.d_eta_xi
    out[:m, -1] = -0.5 * ev.d_eta_xi
    return out


def nijenhuis_tensors(s: AdaptedStructure, p: np.ndarray) -> NijenhuisBundle:
    ev = StructureEval(s, p)
    return _nijenhuis(ev)


def _nijenhuis(ev: StructureEval) -> NijenhuisBundle:
    n, m = ev.n, ev.m
    B0, B1 = basis_fields(ev)
    P0, P1 = _phi_basis_fields(ev)

    n_phi = np.empty((n, n, n))
    for i in range(n):
        for j in range(n):
            term = bracket(P0[i], P1[i], P0[j], P1[j])
            term += _phi_apply(ev, _phi_apply(ev, bracket(B0[i], B1[i], B0[j], B1[j])))
            term -= _phi_apply(ev, bracket(P0[i], P1[i], B0[j], B1[j]))
            term -= _phi_apply(ev, bracket(B0[i], B1[i], P0[j], P1[j]))
            n_phi[i, j] = to_frame_components(ev, term)

    d_eta = _d_eta_pairs(ev)
    d_eta_phi = np.zeros((n, n))
    d_eta_phi[:m, :m] = np.einsum("ci,dj,cd->ij", ev.phi0, ev.phi0, ev.omega0)

    n1 = n_phi.copy()
    n1[:, :, -1] += 2.0 * d_eta
    n_tilde = n_phi.copy()
    n_tilde[:, :, -1] += 2.0 * d_eta_phi
    return NijenhuisBundle(n_phi=n_phi, n1=n1, n_tilde=n_tilde, d_eta=d_eta, d_eta_phi=d_eta_phi)


# ---------------------------------------------------------------------------
# Universal identities
# ---------------------------------------------------------------------------


def projection_identity_residual(s: AdaptedStructure, p: np.ndarray) -> float:
    """Residual of P(N1(X, Y)) = N~(X, Y) over all basis pairs."""
    bundle = nijenhuis_tensors(s, p)
    projected = bundle.n1.copy()
    projected[:, :, -1] = 0.0
    return float(np.abs(projected - bundle.n_tilde).max())


def reeb_split_identity_residual(s: AdaptedStructure, p: np.ndarray) -> float:
    """Residual of N1 = N~ + 2 (d(eta)(X,Y) - d(eta)(phi X, phi Y)) xi."""
    bundle = nijenhuis_tensors(s, p)
    rhs = bundle.n_tilde.copy()
    rhs[:, :, -1] += 2.0 * (bundle.d_eta - bundle.d_eta_phi)
    return float(np.abs(bundle.n1 - rhs).max())


def aqs_characterization_residual(s: AdaptedStructure, p: np.ndarray) -> float:
    """Residual of the almost-quasi-Sasakian characterization
    (nabla~_X phi) Y = g((psi o phi) Y, X) xi - eta(Y) (phi o psi) X
    - eta(X) (phi o psi - psi o phi) Y over all basis pairs."""
    ev = StructureEval(s, p)
    lhs = cov_phi(s, "levi_civita", p)  # lhs[i, b, a]: (nabla_{E_i} phi)^b_a
    n, m = ev.n, ev.m
    psiphi = ev.psi0 @ ev.phi0
    phipsi = ev.phi0 @ ev.psi0
    rhs = np.zeros((n, n, n))  # rhs[i, j, k]: component k of the value on (E_i, E_j)
    rhs[:m, :m, -1] = np.einsum("cj,ci->ij", psiphi, ev.g0)
    rhs[:m, -1, :m] = -phipsi.T  # -(phi o psi) E_i, components indexed [i, k]
    rhs[-1, :m, :m] = -(phipsi - psiphi).T  # [j, k] layout after transpose
    lhs_pairs = np.einsum("ibj->ijb", lhs)
    return float(np.abs(lhs_pairs - rhs).max())


def qs_characterization_residual(s: AdaptedStructure, p: np.ndarray) -> float:
    """Residual of the quasi-Sasakian characterization
    (nabla~_X phi) Y = g(A Y, X) xi - eta(Y) A X with A = phi o psi."""
    ev = StructureEval(s, p)
    lhs = np.einsum("ibj->ijb", cov_phi(s, "levi_civita", p))
    n, m = ev.n, ev.m
    A = ev.phi0 @ ev.psi0
    rhs = np.zeros((n, n, n))
    rhs[:m, :m, -1] = np.einsum("cj,ci->ij", A, ev.g0)
    rhs[:m, -1, :m] = -A.T
    return float(np.abs(lhs - rhs).max())


def qs_condition_residuals(s: AdaptedStructure, p: np.ndarray) -> dict[str, tuple[float, float]]:
    """(residual, scale) of the three equivalent quasi-Sasakian conditions."""
    ev = StructureEval(s, p)
    phi_star_omega = np.einsum("ca,db,cd->ab", ev.phi0, ev.phi0, ev.omega0)
    phipsi = ev.phi0 @ ev.psi0
    psiphi = ev.psi0 @ ev.phi0
    gA = ev.g0 @ phipsi  # gA[a, b] = g(e_a, A e_b)
    return {
        "d_eta_phi_invariant": (
            float(np.abs(ev.omega0 - phi_star_omega).max()),
            max(_mag(ev.omega0), _mag(phi_star_omega)),
        ),
        "phi_psi_commute": (
            float(np.abs(phipsi - psiphi).max()),
            max(_mag(phipsi), _mag(psiphi)),
        ),
        "A_g_symmetric": (float(np.abs(gA - gA.T).max()), _mag(gA)),
    }


def canonical_nabla_phi_residual(s: AdaptedStructure, p: np.ndarray) -> float:
    """Max component of nabla phi under the canonical connection."""
    return float(np.abs(cov_phi(s, "canonical", p)).max())


def _mag(arr: np.ndarray) -> float:
    return float(np.abs(arr).max(initial=0.0))


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriterionVerdict:
    holds: bool
    max_residual: float
    samples: int


@dataclass(frozen=True)
class ClassificationReport:
    verdicts: dict[str, CriterionVerdict]
    qs_conditions: dict[str, CriterionVerdict]
    tol: float
    samples: int

    def holds(self, name: str) -> bool:
        return self.verdicts[name].holds


class _Accumulator:
    def __init__(self):
        self.residual = 0.0
        self.scale = 0.0
        self.count = 0

    def add(self, residual: float, scale: float):
        self.residual = max(self.residual, residual)
        self.scale = max(self.scale, scale)
        self.count += 1

    def verdict(self, tol: float) -> CriterionVerdict:
        return CriterionVerdict(
            holds=bool(self.residual < tol * (1.0 + self.scale)),
            max_residual=self.residual,
            samples=self.count,
        )


def classify(
    s: AdaptedStructure,
    samples: int = 32,
    tol: float = DEFAULT_TOL,
    seed: int = 42,
    points: np.ndarray | None = None,
) -> ClassificationReport:
    """Evaluate every classification criterion at sampled points.

    ``points`` overrides the deterministic sampling when given.  Raises
    :class:`InternalConsistencyError` if the structure classifies as almost
    quasi-Sasakian while the three equivalent quasi-Sasakian conditions
    disagree (they are provably equivalent in that regime).
    """
    if points is None:
        points = s.chart.sample_points(samples, seed)
    acc = {name: _Accumulator() for name in
           ("contact_metric", "normal", "almost_normal", "d_eta_xi_zero", "d_Omega_zero")}
    qs_acc = {name: _Accumulator() for name in QS_CONDITIONS}

    for p in points:
        ev = StructureEval(s, p)
        bundle = _nijenhuis(ev)

        acc["contact_metric"].add(
            float(np.abs(ev.Omega0 - ev.omega0).max()),
            max(_mag(ev.Omega0), _mag(ev.omega0)),
        )
        nij_scale = max(_mag(bundle.n_phi), 2.0 * _mag(bundle.d_eta), 2.0 * _mag(bundle.d_eta_phi))
        acc["normal"].add(_mag(bundle.n1), nij_scale)
        acc["almost_normal"].add(_mag(bundle.n_tilde), nij_scale)
        acc["d_eta_xi_zero"].add(
            _mag(ev.d_eta_xi), max(_mag(ev.omega0), 0.5 * _mag(ev.d_eta_xi))
        )
        acc["d_Omega_zero"].add(
            _mag(d_fundamental_form(ev)), max(_mag(ev.Omega0), _mag(ev.Omega1))
        )
        for name, (residual, scale) in qs_condition_residuals(s, p).items():
            qs_acc[name].add(residual, scale)

    n_points = len(points)
    verdicts = {name: a.verdict(tol) for name, a in acc.items()}
    qs_verdicts = {name: a.verdict(tol) for name, a in qs_acc.items()}

    def conjunction(*names: str) -> CriterionVerdict:
        parts = [verdicts[n] for n in names]
        return CriterionVerdict(
            holds=all(v.holds for v in parts),
            max_residual=max(v.max_residual for v in parts),
            samples=n_points,
        )

    verdicts["almost_contact_kahler"] = conjunction("almost_normal", "d_Omega_zero")
    verdicts["aqs"] = conjunction("almost_normal", "d_Omega_zero", "d_eta_xi_zero")

    qs_flags = [v.holds for v in qs_verdicts.values()]
    if verdicts["aqs"].holds and len(set(qs_flags)) != 1:
        detail = {name: (v.holds, v.max_residual) for name, v in qs_verdicts.items()}
        raise InternalConsistencyError(
            f"equivalent quasi-Sasakian conditions disagree on an AQS structure: {detail}"
        )
    verdicts["quasi_sasakian"] = CriterionVerdict(
        holds=bool(verdicts["aqs"].holds and all(qs_flags)),
        max_residual=max(
            [verdicts["aqs"].max_residual] + [v.max_residual for v in qs_verdicts.values()]
        ),
        samples=n_points,
    )

    ordered = {name: verdicts[name] for name in CRITERIA}
    return ClassificationReport(verdicts=ordered, qs_conditions=qs_verdicts, tol=tol, samples=n_points)
