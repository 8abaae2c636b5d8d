"""Command-line interface: manifest checks, classification, tensor printing.

Exit codes: 0 all hard identities pass, 1 an identity failed (or the
equivalent quasi-Sasakian conditions disagreed), 2 input error.
Classification negatives (e.g. "not normal") never affect the exit code.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .chart import ChartError, rank_at
from .checks import run_full_check
from .classify import InternalConsistencyError, classify
from .connection import Endomorphism, canonical_connection, lc_adapted, torsion
from .curvature import curvature_K, einstein_check, ricci_k, ricci_wagner, schouten
from .expr import ExprError
from .manifest import Manifest, ManifestError, load_manifest
from .structure import StructureError, derived

TENSOR_NAMES = (
    "omega", "psi", "C", "lc-adapted", "n-connection", "torsion",
    "schouten", "K", "ricci-wagner", "ricci-k",
)


class InputError(Exception):
    pass


def _parse_point(text: str, manifest: Manifest) -> np.ndarray:
    try:
        values = [float(part) for part in text.split(",")]
    except ValueError as err:
        raise InputError(f"malformed point '{text}': {err}") from None
    n = manifest.dimension
    if len(values) != n:
        raise InputError(f"point needs {n} components, got {len(values)}")
    p = np.array(values)
    # the 'avoid' loci only constrain sampling; explicit points need only
    # lie in the domain box (evaluation raises its own domain errors)
    for x, (lo, hi) in zip(p, manifest.chart().domain):
        if not lo <= x <= hi:
            raise InputError(f"point outside domain: {x} not in [{lo}, {hi}]")
    return p


def _grid(arr: np.ndarray) -> list:
    return np.asarray(arr).tolist()


def _tensor_payload(name: str, manifest: Manifest, p: np.ndarray) -> dict:
    s = manifest.structure()
    if name in ("omega", "psi", "C"):
        d = derived(s, p)
        return {name: _grid({"omega": d.omega, "psi": d.psi, "C": d.C}[name])}
    if name == "lc-adapted":
        coeffs = lc_adapted(s, p)
        return {
            "frame": _grid(coeffs.frame),
            "n_ab": _grid(coeffs.n_ab),
            "mixed_an": _grid(coeffs.mixed_an),
            "n_na": _grid(coeffs.n_na),
            "a_nn": _grid(coeffs.a_nn),
        }
    if name == "n-connection":
        coeffs = canonical_connection(s, p)
        return {"frame": _grid(coeffs.frame), "mixed_na": _grid(coeffs.mixed_an),
                "n_na": _grid(coeffs.n_na)}
    if name == "torsion":
        result = torsion(s, Endomorphism.canonical(), p)
        return {"components": _grid(result.components), "is_skew": result.is_skew,
                "skew_residual": result.skew_residual,
                "direct_residual": result.direct_residual}
    if name == "schouten":
        return {"schouten": _grid(schouten(s, p))}
    if name == "K":
        K = curvature_K(s, p)
        return {"frame": _grid(K.frame), "mixed": _grid(K.mixed)}
    if name == "ricci-wagner":
        return {"ricci_wagner": _grid(ricci_wagner(s, p))}
    if name == "ricci-k":
        return {"ricci_k": _grid(ricci_k(s, p))}
    raise InputError(f"unknown tensor '{name}'; known: {', '.join(TENSOR_NAMES)}")


def _print_check_human(report) -> None:
    data = report.data
    print(f"manifest: {data['manifest']}  (samples {data['samples']}, seed {data['seed']})")
    print("identities:")
    for name, entry in data["identities"].items():
        if "holds" in entry:
            flag = "PASS" if entry["holds"] else "FAIL"
            print(f"  {name:<24} max {entry['max_residual']:.3e}  tol {entry['tolerance']:.0e}  {flag}")
        else:
            print(f"  {name:<24} max {entry['max_residual']:.3e}")
    print("classification:")
    for name, entry in data["classification"].items():
        mark = "yes" if entry["holds"] else "no"
        print(f"  {name:<24} {mark:<4} max residual {entry['max_residual']:.3e}")
    print(f"rank values: {data['rank']}")
    met = data["metricity"]
    print(f"metricity defect: max {met['max_abs']:.3e} (reeb row {met['reeb_row_max']:.3e})")
    for source, entry in data["einstein"].items():
        mark = "yes" if entry["verdict"] else "no"
        print(
            f"einstein[{source}]: {mark} (max residual {entry['max_residual']:.3e},"
            f" parallel torsion {entry['parallel_torsion_residual']:.3e})"
        )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="acmcheck",
        description="Verify almost contact metric / sub-Riemannian structures "
        "given in adapted coordinates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("manifest", help="manifest path or bundled fixture name")
        p.add_argument("--samples", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--json", action="store_true", dest="as_json")

    p_check = sub.add_parser("check", help="run the full identity and classification suite")
    add_common(p_check)
    p_check.add_argument("--omega-source", choices=("d_eta", "fundamental_form"), default=None)

    p_classify = sub.add_parser("classify", help="classification verdicts only")
    add_common(p_classify)

    p_tensor = sub.add_parser("tensor", help="print a named tensor at a point")
    p_tensor.add_argument("manifest")
    p_tensor.add_argument("--name", required=True)
    p_tensor.add_argument("--at", required=True, metavar="x1,...,xn")
    p_tensor.add_argument("--json", action="store_true", dest="as_json")

    p_einstein = sub.add_parser("einstein", help="Einstein criterion residuals (both omega sources)")
    add_common(p_einstein)

    p_rank = sub.add_parser("rank", help="pointwise rank of the structure")
    p_rank.add_argument("manifest")
    p_rank.add_argument("--at", required=True, metavar="x1,...,xn")

    args = parser.parse_args(argv)

    try:
        manifest = load_manifest(args.manifest)
        if args.command == "check":
            report = run_full_check(
                manifest, samples=args.samples, seed=args.seed, tol=args.tol,
                omega_source=args.omega_source,
            )
            if args.as_json:
                sys.stdout.write(report.to_json())
            else:
                _print_check_human(report)
            return 0 if report.passed else 1

        if args.command == "classify":
            s = manifest.structure()
            report = classify(
                s,
                samples=manifest.samples if args.samples is None else args.samples,
                tol=manifest.tolerance if args.tol is None else args.tol,
                seed=manifest.seed if args.seed is None else args.seed,
            )
            if args.as_json:
                payload = {
                    name: {"holds": v.holds, "max_residual": v.max_residual, "samples": v.samples}
                    for name, v in report.verdicts.items()
                }
                print(json.dumps(payload, sort_keys=True, indent=2))
            else:
                for name, v in report.verdicts.items():
                    print(f"{name:<24} {'yes' if v.holds else 'no':<4} max residual {v.max_residual:.3e}")
            return 0

        if args.command == "tensor":
            p = _parse_point(args.at, manifest)
            payload = _tensor_payload(args.name, manifest, p)
            if args.as_json:
                print(json.dumps(payload, sort_keys=True, indent=2))
            else:
                for key, value in payload.items():
                    print(f"{key}:")
                    print(np.array2string(np.asarray(value), precision=10, suppress_small=True)
                          if isinstance(value, list) else f"  {value}")
            return 0

        if args.command == "einstein":
            s = manifest.structure()
            points = s.chart.sample_points(
                manifest.samples if args.samples is None else args.samples,
                manifest.seed if args.seed is None else args.seed,
            )
            payload = {}
            for source in ("d_eta", "fundamental_form"):
                rep = einstein_check(s, tol=manifest.tolerance if args.tol is None else args.tol,
                                     omega_source=source, points=points)
                payload[source] = {
                    "verdict": rep.verdict,
                    "max_residual": rep.max_residual,
                    "parallel_torsion_residual": rep.parallel_torsion_residual,
                    "residual_grid": rep.residual_grid.tolist(),
                }
            if args.as_json:
                print(json.dumps(payload, sort_keys=True, indent=2))
            else:
                for source, entry in payload.items():
                    mark = "yes" if entry["verdict"] else "no"
                    print(f"einstein[{source}]: {mark} (max residual {entry['max_residual']:.3e},"
                          f" parallel torsion {entry['parallel_torsion_residual']:.3e})")
            return 0

        if args.command == "rank":
            p = _parse_point(args.at, manifest)
            print(rank_at(manifest.chart(), p))
            return 0

        raise AssertionError("unreachable")

    except (ManifestError, ChartError, ExprError, StructureError, InputError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except InternalConsistencyError as err:
        print(f"identity failure: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
