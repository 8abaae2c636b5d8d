"""Full-suite check orchestration and deterministic run reports.

The hard gate (exit status) covers the identities that hold for every
structure: the adapted-vs-coordinate Levi-Civita comparison, the projection
and Reeb-split Nijenhuis identities, and the torsion table vs its direct
definition.  Classification negatives never affect the gate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import __version__
from .chart import rank_at
from .classify import (
    reeb_split_identity_residual,
    projection_identity_residual,
    qs_characterization_residual,
    canonical_nabla_phi_residual,
    aqs_characterization_residual,
    classify,
)
from .connection import (
    Endomorphism,
    coordinate_to_adapted,
    lc_adapted,
    lc_coordinate,
    metricity_defect,
    n_connection_formula_residual,
    nabla_omega,
    nabla_psi,
    torsion,
)
from .curvature import einstein_check
from .manifest import Manifest
from .structure import StructureEval, metric_definiteness, validate_axioms

HARD_IDENTITIES = ("lc_oracle", "projection_identity", "reeb_split_identity", "torsion_direct")

HARD_TOLERANCES = {
    "lc_oracle": 1e-8,
    "projection_identity": 1e-9,
    "reeb_split_identity": 1e-9,
    "torsion_direct": 1e-9,
    "n_connection_formula": 1e-9,
}


@dataclass(frozen=True)
class RunReport:
    data: dict

    @property
    def passed(self) -> bool:
        return all(self.data["identities"][name]["holds"] for name in HARD_IDENTITIES)

    def to_json(self) -> str:
        return json.dumps(_rounded(self.data), sort_keys=True, indent=2) + "\n"


def _rounded(obj):
    """Normalize floats through 17-significant-digit formatting (a lossless
    round trip for doubles, pinned here so reports are byte-stable)."""
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(format(float(obj), ".17g"))
    if isinstance(obj, (int, np.integer, bool, str)) or obj is None:
        return obj
    raise TypeError(f"unexpected report value {obj!r}")


def run_full_check(
    manifest: Manifest,
    samples: int | None = None,
    seed: int | None = None,
    tol: float | None = None,
    omega_source: str | None = None,
) -> RunReport:
    samples = manifest.samples if samples is None else samples
    seed = manifest.seed if seed is None else seed
    tol = manifest.tolerance if tol is None else tol
    omega_source = manifest.omega_source if omega_source is None else omega_source

    s = manifest.structure()
    points = s.chart.sample_points(samples, seed)
    canonical = Endomorphism.canonical()

    worst: dict[str, float] = {}

    def track(name: str, value: float):
        worst[name] = max(worst.get(name, 0.0), float(value))

    axioms: dict[str, float] = {}
    ranks: set[int] = set()
    for p in points:
        metric_definiteness(s, p)
        for key, value in validate_axioms(s, p).items():
            axioms[key] = max(axioms.get(key, 0.0), value)

        adapted = lc_adapted(s, p).full
        converted = coordinate_to_adapted(s, p, lc_coordinate(s, p))
        track("lc_oracle", np.abs(adapted - converted).max())

        track("projection_identity", projection_identity_residual(s, p))
        track("reeb_split_identity", reeb_split_identity_residual(s, p))

        tors = torsion(s, canonical, p)
        track("torsion_direct", tors.direct_residual)
        track("torsion_skew", tors.skew_residual)

        track("n_connection_formula", n_connection_formula_residual(s, canonical, p))
        track("aqs_characterization", aqs_characterization_residual(s, p))
        track("qs_characterization", qs_characterization_residual(s, p))
        track("canonical_nabla_phi", canonical_nabla_phi_residual(s, p))

        ev = StructureEval(s, p)
        track("nabla_omega", np.abs(nabla_omega(ev)).max())
        track("nabla_psi", np.abs(nabla_psi(ev)).max())

        defect = metricity_defect(s, canonical, p)
        track("metricity_defect", np.abs(defect).max())
        track("metricity_defect_reeb_row", np.abs(defect[-1, -1, :]).max())

        ranks.add(rank_at(s.chart, p))

    identities = {}
    for name in ("lc_oracle", "projection_identity", "reeb_split_identity", "torsion_direct",
                 "n_connection_formula"):
        identities[name] = {
            "max_residual": worst[name],
            "samples": samples,
            "tolerance": HARD_TOLERANCES[name],
            "holds": bool(worst[name] < HARD_TOLERANCES[name]),
        }
    for name in ("torsion_skew", "aqs_characterization", "qs_characterization",
                 "canonical_nabla_phi", "nabla_omega", "nabla_psi"):
        identities[name] = {"max_residual": worst[name], "samples": samples}

    classification = classify(s, tol=tol, points=points)
    einstein = {
        source: _einstein_summary(s, points, tol, source)
        for source in ("d_eta", "fundamental_form")
    }

    data = {
        "tool_version": __version__,
        "manifest": manifest.source,
        "dimension": manifest.dimension,
        "samples": samples,
        "seed": seed,
        "tolerance": tol,
        "omega_source": omega_source,
        "axiom_residuals": axioms,
        "identities": identities,
        "classification": {
            name: {"holds": v.holds, "max_residual": v.max_residual, "samples": v.samples}
            for name, v in classification.verdicts.items()
        },
        "quasi_sasakian_conditions": {
            name: {"holds": v.holds, "max_residual": v.max_residual}
            for name, v in classification.qs_conditions.items()
        },
        "rank": sorted(ranks),
        "metricity": {
            "max_abs": worst["metricity_defect"],
            "reeb_row_max": worst["metricity_defect_reeb_row"],
        },
        "einstein": einstein,
    }
    return RunReport(data=data)


def _einstein_summary(s, points, tol, source) -> dict:
    report = einstein_check(s, tol=tol, omega_source=source, points=points)
    return {
        "verdict": report.verdict,
        "max_residual": report.max_residual,
        "parallel_torsion_residual": report.parallel_torsion_residual,
        "residual_grid": report.residual_grid.tolist(),
    }
