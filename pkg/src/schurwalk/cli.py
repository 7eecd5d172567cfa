"""Command-line front end.

Subcommands: ``classify`` (walk-spec document to index report),
``phase-diagram`` (grid sweeps to CSV), ``spectrum`` (ring simulation to CSV
and SVG) and ``schur-eval`` (raw Schur-function values).

Exit codes: 0 success, 1 parse or validation error, 2 gap closed,
3 the walk could not be classified for another reason.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Sequence

import mpmath
import numpy as np
import yaml

from .config import DEFAULT, Tolerances
from .errors import GapClosedError, SchurWalkError, SpecError
from .index_engine import classify, classify_resolvent
from .schur_core import SchurParamSeq, eval_boundary, schur_eval
from .spectral_lab import (
    atomic_write,
    edge_state_profile,
    run_ring,
    write_profile_csv,
    write_spectrum_csv,
    write_spectrum_svg,
)
from .walk_models import MODELS, WalkSpec, build_walk, normalize_site

EXIT_OK, EXIT_PARSE, EXIT_GAP, EXIT_UNCLASSIFIED = 0, 1, 2, 3
PARALLEL_MIN_POINTS = 4096
_TOL_FIELDS = set(Tolerances.__dataclass_fields__)


# ---------------------------------------------------------------------------
# spec documents


def load_document(path: str | os.PathLike) -> dict:
    """Read a JSON or YAML walk-spec document."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc_json:
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f"line {mark.line + 1}" if mark is not None else f"line {exc_json.lineno}"
            raise SpecError(where, f"not valid JSON or YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise SpecError("", "document must be a mapping")
    return doc


def _number(value: Any, path: str) -> complex | float:
    if isinstance(value, bool):
        raise SpecError(path, "expected a number")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            c = complex(value.replace(" ", "").replace("i", "j"))
        except ValueError:
            raise SpecError(path, f"cannot parse number {value!r}") from None
        return c.real if c.imag == 0 else c
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    raise SpecError(path, "expected a number, a complex string or a [re, im] pair")


def _matrix(value: Any, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise SpecError(path, "expected a nested list (matrix)")
    rows = [[_number(v, f"{path}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(value)]
    if len({len(r) for r in rows}) != 1:
        raise SpecError(path, "ragged matrix")
    return np.array(rows, dtype=complex)


def _site_data(model: str, value: Any, path: str) -> Any:
    if model == "split_step":
        if isinstance(value, dict):
            missing = [k for k in ("theta1", "theta2") if k not in value]
            if missing:
                raise SpecError(f"{path}.{missing[0]}", "missing field")
            return (float(_number(value["theta1"], f"{path}.theta1")), float(_number(value["theta2"], f"{path}.theta2")))
        if isinstance(value, list) and len(value) == 2:
            return tuple(float(_number(v, f"{path}[{i}]")) for i, v in enumerate(value))
        raise SpecError(path, "split-step data is {theta1, theta2} or [theta1, theta2]")
    if isinstance(value, list):
        return {"angles": [float(_number(v, f"{path}[{i}]")) for i, v in enumerate(value)]}
    if not isinstance(value, dict):
        raise SpecError(path, "coin data must be a mapping or a list of angles")
    if "angles" in value:
        if not isinstance(value["angles"], list):
            raise SpecError(f"{path}.angles", "expected a list")
        return {"angles": [float(_number(v, f"{path}.angles[{i}]")) for i, v in enumerate(value["angles"])]}
    out: dict[str, Any] = {}
    if "A" not in value:
        raise SpecError(f"{path}.A", "coin data needs 'angles' or 'A'")
    out["A"] = _matrix(value["A"], f"{path}.A")
    if "B" in value:
        out["B"] = _matrix(value["B"], f"{path}.B")
    if "sign" in value:
        out["sign"] = int(value["sign"])
    return out


def parse_spec(doc: dict) -> tuple[WalkSpec, dict]:
    """Turn a document into a :class:`WalkSpec` and its ``options`` mapping."""
    allowed = {"model", "cell_dim", "left_tail", "right_tail", "window", "sign_choice", "options", "allow_any_angle"}
    for key in doc:
        if key not in allowed:
            raise SpecError(key, "unknown field")
    for key in ("model", "left_tail", "right_tail"):
        if key not in doc:
            raise SpecError(key, "missing field")
    model = doc["model"]
    if model not in MODELS:
        raise SpecError("model", f"must be one of {', '.join(MODELS)}")
    cell_dim = doc.get("cell_dim", 2)
    if not isinstance(cell_dim, int) or isinstance(cell_dim, bool):
        raise SpecError("cell_dim", "expected an integer")
    left = _site_data(model, doc["left_tail"], "left_tail")
    right = _site_data(model, doc["right_tail"], "right_tail")
    window: dict[int, Any] = {}
    entries = doc.get("window", [])
    if not isinstance(entries, list):
        raise SpecError("window", "expected a list of {x, data}")
    for i, entry in enumerate(entries):
        path = f"window[{i}]"
        if not isinstance(entry, dict) or "x" not in entry or "data" not in entry:
            raise SpecError(path, "entries need fields 'x' and 'data'")
        x = entry["x"]
        if not isinstance(x, int) or isinstance(x, bool):
            raise SpecError(f"{path}.x", "expected an integer")
        if x in window:
            raise SpecError(f"{path}.x", f"duplicate site {x}")
        window[x] = _site_data(model, entry["data"], f"{path}.data")
    sign = doc.get("sign_choice", 1)
    if sign not in (1, -1):
        raise SpecError("sign_choice", "must be +1 or -1")
    options = doc.get("options", {}) or {}
    if not isinstance(options, dict):
        raise SpecError("options", "expected a mapping")
    tols = options.get("tolerances", {}) or {}
    for k in tols:
        if k not in _TOL_FIELDS:
            raise SpecError(f"options.tolerances.{k}", "unknown tolerance")
    any_angle = bool(doc.get("allow_any_angle", False))
    if cell_dim >= 2 and cell_dim % 2 == 0:
        sites = [("left_tail", left), ("right_tail", right)]
        sites += [(f"window[{i}].data", window[e["x"]]) for i, e in enumerate(entries)]
        for path, data in sites:
            try:
                normalize_site(model, data, cell_dim // 2, sign, any_angle)
            except (SchurWalkError, ValueError) as exc:
                raise SpecError(path, str(exc)) from exc
    try:
        spec = WalkSpec(model, left, right, window, cell_dim, sign, any_angle)
    except SchurWalkError as exc:
        raise SpecError("", str(exc)) from exc
    except (ValueError, TypeError, KeyError) as exc:
        raise SpecError("", f"invalid walk: {exc}") from exc
    return spec, options


def _tolerances(options: dict, args) -> Tolerances:
    tols = dict(options.get("tolerances", {}) or {})
    tols = {k: float(v) for k, v in tols.items()}
    for name in ("unitarity", "boundary"):
        flag = getattr(args, f"tol_{name}", None)
        if flag is not None:
            tols[name] = flag
    return DEFAULT.with_overrides(**tols)


# ---------------------------------------------------------------------------
# output helpers


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write(out, lambda fh: fh.write(text))
    else:
        sys.stdout.write(text)


def _report_table(doc: dict) -> str:
    rows = [("status", doc["status"]), ("model", doc["model"]), ("cell_dim", doc["cell_dim"])]
    for key in ("si_left", "si_right", "si_minus", "si_plus", "phase_label"):
        rows.append((key, doc[key]))
    diag = doc.get("diagnostics", {})
    for c in diag.get("gap_closed_at", []):
        rows.append(("gap_closed", f"{c['tail']} tail at {c['point']:+d}"))
    if "traces" in diag:
        rows.append(("traces", " ".join(f"{k}={v:+d}" for k, v in diag["traces"].items())))
    width = max(len(k) for k, _ in rows)
    return "".join(f"{k:<{width}}  {v}\n" for k, v in rows)


# ---------------------------------------------------------------------------
# commands


def cmd_classify(args) -> int:
    try:
        spec, options = parse_spec(load_document(args.spec))
        tol = _tolerances(options, args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    report = classify(spec, tol)
    doc = report.to_document()
    radius = args.window_radius if args.window_radius is not None else int(options.get("window_radius", 40))
    if args.cross_check and report.status == "classified":
        lo, hi = spec.window_range
        radius = max(radius, abs(lo) + 2, abs(hi) + 2)
        try:
            check = classify_resolvent(build_walk(spec, radius), tol=tol)
            doc["diagnostics"]["resolvent_triple"] = list(check.triple)
            doc["diagnostics"]["resolvent_agrees"] = check.triple == report.triple
        except SchurWalkError as exc:
            doc["diagnostics"]["resolvent_error"] = str(exc)
    doc["diagnostics"]["window_radius"] = radius
    text = json.dumps(doc, indent=2, sort_keys=False) + "\n" if args.format == "json" else _report_table(doc)
    _emit(text, args.out)
    if report.status == "classified":
        return EXIT_OK
    if report.status == "gap_closed":
        for c in doc["diagnostics"].get("gap_closed_at", []):
            print(f"gap closed: {c['tail']} tail at {c['point']:+d}", file=sys.stderr)
        return EXIT_GAP
    return EXIT_UNCLASSIFIED


def grid_angles(n: int) -> list[float]:
    """``n`` midpoint angles in ``(-pi/2, pi/2)``: ``pi (2k + 1 - n) / (2n)``."""
    return [math.pi * (2 * k + 1 - n) / (2 * n) for k in range(n)]


def _classify_point(task: tuple) -> list:
    mode, a, b, t2l, t2r = task
    if mode == "translation":
        spec = WalkSpec("split_step", (a, b), (a, b))
        angles = [a, b]
    else:
        spec = WalkSpec("split_step", (a, t2l), (b, t2r))
        angles = [a, b, t2l, t2r]
    r = classify(spec)
    vals = [r.si_left, r.si_right, r.si_minus, r.si_plus]
    return angles + [r.status] + ["" if v is None else v for v in vals] + [r.phase_label]


def _threads() -> int:
    env = os.environ.get("SCHURWALK_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def phase_diagram_rows(mode: str, grid: tuple[int, int], theta2: tuple[float, float] = (0.0, 0.0)) -> list[list]:
    """Rows of a split-step sweep, in grid order."""
    first, second = grid_angles(grid[0]), grid_angles(grid[1])
    tasks = [(mode, a, b, theta2[0], theta2[1]) for a in first for b in second]
    workers = _threads()
    if workers > 1 and len(tasks) >= PARALLEL_MIN_POINTS:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_classify_point, tasks, chunksize=256))
    return [_classify_point(t) for t in tasks]


def _parse_grid(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    try:
        vals = tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like N or NxM, got {text!r}") from None
    if len(vals) == 1:
        vals = (vals[0], vals[0])
    if len(vals) != 2 or min(vals) < 2:
        raise argparse.ArgumentTypeError("grid resolution must be at least 2 per axis")
    return vals  # type: ignore[return-value]


def cmd_phase_diagram(args) -> int:
    if args.model != "split_step":
        print("error: phase diagrams are implemented for split_step", file=sys.stderr)
        return EXIT_PARSE
    rows = phase_diagram_rows(args.mode, args.grid, (args.theta2_left, args.theta2_right))
    if args.mode == "translation":
        header = ["theta1", "theta2"]
    else:
        header = ["theta1_left", "theta1_right", "theta2_left", "theta2_right"]
    header += ["status", "si_left", "si_right", "si_minus", "si_plus", "phase_label"]
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(header)
    nang = len(header) - 6
    for r in rows:
        out.writerow([format(v, ".17g") for v in r[:nang]] + r[nang:])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    try:
        exp = run_ring(args.n, args.eps, args.eps_prime, args.seed, args.threshold, certify=not args.no_certify)
    except SchurWalkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if args.out:
        write_spectrum_csv(exp, args.out)
    if args.svg:
        write_spectrum_svg(exp, args.svg)
    summary: dict[str, Any] = {
        "n_cells": exp.n_cells,
        "eigenvalues": int(exp.eigenvalues.size),
        "unitarity_residual": exp.unitarity_residual(),
        "conjugation_residual": exp.conjugation_residual(),
        "candidates": int(exp.candidates().size),
        "distance": {},
    }
    for p, dist in exp.distances.items():
        summary["distance"][f"{p:+d}"] = {
            "eigenphase": mpmath_str(dist.eigenphase),
            "certified": dist.certified,
        }
    if args.profile_out:
        try:
            prof = edge_state_profile(exp, args.profile_point, args.profile_radius)
        except SchurWalkError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_UNCLASSIFIED
        write_profile_csv(prof, args.profile_out)
        summary["profile"] = {"eigenvalue": [prof.eigenvalue.real, prof.eigenvalue.imag], "interface_mass": prof.interface_mass}
    if args.format == "json":
        text = json.dumps(summary, indent=2) + "\n"
    else:
        lines = [f"{k:<22}{v}" for k, v in summary.items() if k not in ("distance", "profile")]
        for p, d in summary["distance"].items():
            lines.append(f"{'distance to ' + p:<22}{d['eigenphase']}{'' if d['certified'] else ' (double precision)'}")
        if "profile" in summary:
            lines.append(f"{'interface mass':<22}{summary['profile']['interface_mass']:.6f}")
        text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    return EXIT_OK


def mpmath_str(v) -> str:
    return mpmath.nstr(v, 17)


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.strip().replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse complex number {text!r}") from None


def _parse_head(text: str) -> list[complex]:
    items = [t for t in text.replace(",", " ").split() if t]
    return [_parse_complex(t) for t in items]


def _value_doc(v) -> Any:
    v = complex(v)
    return v.real if v.imag == 0 else [v.real, v.imag]


def cmd_schur_eval(args) -> int:
    try:
        head = _parse_head(args.head)
        if args.tail_periodic is not None:
            seq = SchurParamSeq(tuple(head), "periodic", tuple(args.tail_periodic))
        elif args.tail_terminating is not None:
            seq = SchurParamSeq.terminating(head, args.tail_terminating)
        else:
            seq = SchurParamSeq(tuple(head), "zero")
    except (ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    tol = DEFAULT.with_overrides(boundary=args.tol_boundary, unitarity=args.tol_unitarity)
    doc: dict[str, Any] = {"z": _value_doc(args.z)}
    try:
        if args.z in (1, -1):
            bv = eval_boundary(seq, int(args.z.real), tol)
            doc["value"] = _value_doc(bv.value)
            doc["residual"] = bv.residual
        else:
            doc["value"] = _value_doc(schur_eval(seq, args.z, tol))
        if args.boundary:
            for p in (1, -1):
                try:
                    doc[f"f({p:+d})"] = _value_doc(eval_boundary(seq, p, tol).value)
                except GapClosedError as exc:
                    doc[f"f({p:+d})"] = f"gap closed: {exc}"
    except GapClosedError as exc:
        print(f"gap closed: {exc}", file=sys.stderr)
        return EXIT_GAP
    except SchurWalkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if args.format == "json":
        text = json.dumps(doc) + "\n"
    else:
        text = "".join(f"{k:<10}{v}\n" for k, v in doc.items())
    _emit(text, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="schurwalk", description="Symmetry indices of one-dimensional quantum walks.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt_default="table"):
        sp.add_argument("--format", choices=("table", "json"), default=fmt_default)
        sp.add_argument("--out", help="write the main output here instead of stdout")
        sp.add_argument("--tol-unitarity", type=float)
        sp.add_argument("--tol-boundary", type=float)

    c = sub.add_parser("classify", help="classify a walk-spec document (JSON or YAML)")
    c.add_argument("spec")
    c.add_argument("--window-radius", type=int, help="truncation radius for --cross-check")
    c.add_argument("--cross-check", action="store_true", help="also classify via truncated resolvents")
    common(c)
    c.set_defaults(func=cmd_classify)

    d = sub.add_parser("phase-diagram", help="sweep split-step angles and write CSV")
    d.add_argument("--model", default="split_step", choices=MODELS)
    d.add_argument("--mode", choices=("translation", "crossover"), default="translation")
    d.add_argument("--grid", type=_parse_grid, default=(21, 21), help="N or NxM midpoint grid")
    d.add_argument("--theta2-left", type=float, default=0.0, help="crossover mode: left theta2")
    d.add_argument("--theta2-right", type=float, default=0.0, help="crossover mode: right theta2")
    common(d)
    d.set_defaults(func=cmd_phase_diagram)

    s = sub.add_parser("spectrum", help="ring simulation of a disordered crossover")
    s.add_argument("--n", type=int, required=True, help="number of cells (even, >= 8)")
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--eps-prime", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threshold", type=float, default=1e-3)
    s.add_argument("--svg")
    s.add_argument("--profile-out")
    s.add_argument("--profile-point", type=int, choices=(1, -1), default=1)
    s.add_argument("--profile-radius", type=int, default=10)
    s.add_argument("--no-certify", action="store_true", help="skip extended-precision distances")
    common(s)
    s.set_defaults(func=cmd_spectrum)

    e = sub.add_parser("schur-eval", help="evaluate a Schur function from its parameters")
    e.add_argument("--head", default="", help="head parameters, space or comma separated")
    tail = e.add_mutually_exclusive_group()
    tail.add_argument("--tail-periodic", nargs=2, type=float, metavar=("S_TILDE", "S"))
    tail.add_argument("--tail-terminating", type=_parse_complex, metavar="ALPHA")
    e.add_argument("--z", type=_parse_complex, required=True)
    e.add_argument("--boundary", action="store_true", help="also report f(+1) and f(-1)")
    common(e)
    e.set_defaults(func=cmd_schur_eval)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
