"""Batch front end: ``sclag run job.json`` and single-job subcommands.

A job file is a JSON object ``{"seed": 0, "jobs": [...]}`` (a bare list of jobs
is accepted too).  Every job names a ``command`` and carries the expression
texts it needs; the optional ``expect`` block maps dotted result paths to
expected values.  All numbers in reports come from library calls; this module
only parses, dispatches and serializes.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import expr as ex
from . import geometry as geo
from . import oscint as oi
from . import phase as ph
from . import prsymb as ps
from . import reduction as rd
from . import sgsymbols as sg

COMMANDS = ("phase-validate", "critical", "lagrangian-sample", "reduce-fiber", "eliminate-excess", "equiv",
            "oscint-eval", "wf-probe", "symbol", "symbol-coherence")

EXIT_OK, EXIT_VERDICT, EXIT_SCHEMA, EXIT_COMPUTE = 0, 1, 2, 3

_ORDER = {"type": "array", "items": {"type": ["number", "string"]}, "minItems": 2, "maxItems": 2}
_AMPLITUDE = {"type": "object", "required": ["expr"], "additionalProperties": False,
              "properties": {"expr": {"type": "string"}, "order": _ORDER,
                             "convention": {"enum": ["scalar", "half_density"]}}}
_DOMAIN = {"type": "object", "required": ["bounded"], "additionalProperties": False,
           "properties": {"bounded": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                          "ratio": {"type": ["number", "string"]}}}
_SPACE = {"type": "object", "required": ["d", "s"], "additionalProperties": False,
          "properties": {"d": {"type": "integer", "minimum": 1}, "s": {"type": "integer", "minimum": 1}}}
_VECTOR = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_MEMBER = {"type": "object", "required": ["name"], "additionalProperties": False,
           "properties": {"name": {"type": "string"}, "phase": {"type": "string"}, "space": _SPACE,
                          "domain": _DOMAIN, "amplitude": _AMPLITUDE, "excess": {"type": "integer"},
                          "surgery": {"enum": ["none", "increase+", "increase-"]}}}

JOB_SCHEMA = {
    "type": "object",
    "required": ["id", "command"],
    "additionalProperties": False,
    "properties": {
        "id": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "command": {"enum": list(COMMANDS)},
        "space": _SPACE,
        "phase": {"type": "string"},
        "domain": _DOMAIN,
        "amplitude": _AMPLITUDE,
        "conormal": {"type": "object", "required": ["k", "d"], "additionalProperties": False,
                     "properties": {"k": {"type": "integer", "minimum": 0}, "d": {"type": "integer", "minimum": 1}}},
        "phase2": {"type": "string"},
        "domain2": _DOMAIN,
        "surgery2": {"enum": ["none", "add-smooth", "increase-pair"]},
        "smooth": {"type": "string"},
        "density": {"type": "object", "required": ["center", "width"], "additionalProperties": False,
                    "properties": {"center": _VECTOR, "width": {"type": "number", "exclusiveMinimum": 0},
                                   "frequency": _VECTOR}},
        "probes": {"type": "array", "items": {
            "type": "object", "required": ["face", "base", "fiber"], "additionalProperties": False,
            "properties": {"face": {"enum": ["psi", "e"]}, "base": _VECTOR, "fiber": _VECTOR,
                           "expect": {"enum": ["singular", "regular"]}}}},
        "members": {"type": "array", "items": _MEMBER, "minItems": 1},
        "config": {"type": "object"},
        "expect": {"type": "object"},
    },
}

FILE_SCHEMA = {
    "type": "object",
    "required": ["jobs"],
    "additionalProperties": False,
    "properties": {"seed": {"type": "integer"}, "jobs": {"type": "array", "items": JOB_SCHEMA},
                   "title": {"type": "string"}},
}


class JobError(Exception):
    """Schema or parse failure; raised before any job runs."""


# ---------------------------------------------------------------------------
# serialization


def plain(value):
    """JSON-safe, deterministic representation of library outputs."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set)) and not isinstance(value, str):
        items = sorted(value) if isinstance(value, set) else value
        return [plain(v) for v in items]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, Fraction):
        return ex.fraction_str(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [plain(float(value.real)), plain(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return value


def dumps(report: dict) -> str:
    return json.dumps(plain(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_csv(path: Path, header: list, rows: list) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path.name


# ---------------------------------------------------------------------------
# job compilation


def _space(spec: dict | None) -> ex.VarSpace:
    if spec is None:
        raise JobError("missing 'space'")
    return ex.VarSpace(spec["d"], spec["s"])


def _domain(spec: dict | None):
    if spec is None:
        return None
    return ph.ConeDomain(tuple(spec["bounded"]), Fraction(str(spec.get("ratio", "1/2"))))


def _parse(text: str, space: ex.VarSpace, where: str) -> ex.Expr:
    try:
        return ex.parse(text, space)
    except ex.ParseError as err:
        raise JobError(f"{where}: parse error at column {err.column}: {err}") from err
    except ex.ExprError as err:
        raise JobError(f"{where}: {err}") from err


def _phase(text: str | None, space: ex.VarSpace, domain, where: str) -> ph.PhaseFunction:
    if text is None:
        raise JobError(f"{where}: missing phase")
    return ph.PhaseFunction(_parse(text, space, where), space, domain)


def _amplitude(spec: dict | None, space: ex.VarSpace, where: str) -> sg.Amplitude:
    spec = spec or {"expr": "1"}
    order = spec.get("order", [0, 0])
    try:
        m = sg.SGOrder(Fraction(str(order[0])), Fraction(str(order[1])))
    except (ValueError, ZeroDivisionError) as err:
        raise JobError(f"{where}: bad order {order!r}") from err
    return sg.Amplitude(_parse(spec["expr"], space, where), space, m, spec.get("convention", "scalar"))


def _member(spec: dict, job: dict, where: str) -> dict:
    space = _space(spec.get("space", job.get("space")))
    text = spec.get("phase", job.get("phase"))
    phi = _phase(text, space, _domain(spec.get("domain", job.get("domain"))), where)
    amp = _amplitude(spec.get("amplitude", job.get("amplitude")), space, where)
    return {"name": spec["name"], "phi": phi, "amplitude": amp, "excess": spec.get("excess", 0),
            "surgery": spec.get("surgery", "none")}


def compile_job(job: dict) -> dict:
    """Validated, parsed form of one job; raises JobError on bad input."""
    where = f"job {job['id']}"
    cmd = job["command"]
    out = {"id": job["id"], "command": cmd, "config": job.get("config", {}), "expect": job.get("expect", {}),
           "raw": job}
    if cmd == "symbol-coherence":
        if "members" not in job:
            raise JobError(f"{where}: symbol-coherence needs 'members'")
        out["members"] = [_member(m, job, f"{where} member {m['name']}") for m in job["members"]]
        return out
    if cmd == "lagrangian-sample" and "conormal" in job:
        c = job["conormal"]
        try:
            out["phi"], out["faces"] = ph.conormal_bundle(c["k"], c["d"])
        except ph.PhaseError as err:
            raise JobError(f"{where}: {err}") from err
        space = out["phi"].space
    else:
        space = _space(job.get("space"))
        out["phi"] = _phase(job.get("phase"), space, _domain(job.get("domain")), where)
    out["amplitude"] = _amplitude(job.get("amplitude"), space, where)
    if cmd == "equiv":
        surgery = job.get("surgery2", "none")
        if surgery == "none":
            out["phi2"] = _phase(job.get("phase2"), space, _domain(job.get("domain2")), where)
        elif surgery == "add-smooth":
            out["smooth"] = _parse(job.get("smooth", "0"), space, where)
        out["surgery2"] = surgery
    if cmd == "oscint-eval":
        if "density" not in job:
            raise JobError(f"{where}: oscint-eval needs 'density'")
        dens = job["density"]
        if len(dens["center"]) != space.d:
            raise JobError(f"{where}: density center must have length d = {space.d}")
    if cmd == "wf-probe":
        probes = job.get("probes")
        if not probes:
            raise JobError(f"{where}: wf-probe needs 'probes'")
        for p in probes:
            if len(p["base"]) != space.d or len(p["fiber"]) != space.d:
                raise JobError(f"{where}: probe base and fiber must have length d = {space.d}")
    return out


def load_jobs(text: str, command: str | None = None) -> tuple[dict, list]:
    """Parse and validate a job file; a single job object is accepted when ``command`` is given."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise JobError(f"invalid JSON at line {err.lineno} column {err.colno}: {err.msg}") from err
    if isinstance(data, list):
        data = {"jobs": data}
    if command is not None and isinstance(data, dict) and "jobs" not in data:
        data = {"jobs": [{"id": command, **data}]}
    if command is not None and isinstance(data, dict):
        for job in data.get("jobs", []):
            if isinstance(job, dict):
                job.setdefault("command", command)
    try:
        jsonschema.validate(data, FILE_SCHEMA)
    except jsonschema.ValidationError as err:
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise JobError(f"schema error at {path}: {err.message}") from err
    ids = [j["id"] for j in data["jobs"]]
    if len(set(ids)) != len(ids):
        raise JobError("job ids must be unique")
    return data, [compile_job(j) for j in data["jobs"]]


# ---------------------------------------------------------------------------
# expectations


def lookup(result, path: str):
    node = result
    for key in path.split("."):
        if isinstance(node, list):
            node = node[int(key)]
        elif isinstance(node, dict) and key in node:
            node = node[key]
        else:
            raise KeyError(path)
    return node


def matches(actual, expected, tol: float) -> bool:
    if isinstance(expected, dict) and set(expected) <= {"min", "max"}:
        return (isinstance(actual, (int, float)) and not isinstance(actual, bool)
                and expected.get("min", -math.inf) <= actual <= expected.get("max", math.inf))
    if isinstance(expected, list):
        return (isinstance(actual, list) and len(actual) == len(expected)
                and all(matches(a, e, tol) for a, e in zip(actual, expected)))
    if isinstance(expected, bool) or expected is None or isinstance(expected, str):
        return actual == expected
    if isinstance(expected, (int, float)):
        return (isinstance(actual, (int, float)) and not isinstance(actual, bool)
                and abs(actual - expected) <= tol * (1 + abs(expected)))
    return actual == expected


def check_expect(result: dict, expect: dict, tol: float) -> list:
    checks = []
    for path, want in sorted(expect.items()):
        try:
            got = lookup(result, path)
            ok = matches(got, plain(want), tol)
        except (KeyError, IndexError, ValueError):
            got, ok = None, False
        checks.append({"path": path, "expected": want, "actual": got, "ok": ok})
    return checks


# ---------------------------------------------------------------------------
# command handlers: each returns (result, verdict, artifacts builder data)


def _quad_config(cfg: dict) -> oi.QuadratureConfig:
    keys = ("eps_list", "tolerance", "min_nodes", "max_nodes", "refine", "x_chunk", "max_evaluations")
    kwargs = {k: (tuple(cfg[k]) if k == "eps_list" else cfg[k]) for k in keys if k in cfg}
    if "fiber_box" in cfg:
        kwargs["fiber_box"] = [tuple(b) for b in cfg["fiber_box"]]
    return oi.QuadratureConfig(**kwargs)


def _profile(cfg: dict) -> oi.ChiProfile:
    return oi.ChiProfile(cfg.get("chi", "exp"))


def run_phase_validate(job, ctx):
    v = ph.validate_phase(job["phi"], r_min=job["config"].get("r_min", 10.0))
    return v.summary(), v.passes, {}


def run_critical(job, ctx):
    cm = ph.critical_solve(job["phi"], count=job["config"].get("count", 24), seed=ctx["seed"])
    res = cm.summary()
    res["samples"] = [p.as_dict() for p in cm.samples]
    return res, cm.clean, {}


def run_lagrangian(job, ctx):
    cfg = job["config"]
    cm = ph.critical_solve(job["phi"], count=cfg.get("count", 24), seed=ctx["seed"])
    samples, dims = ph.sample_lagrangian(cm)
    report = ph.legendrian_check(samples, job["phi"].space.d)
    res = {"critical": cm.summary(), "legendrian": report.summary(), "tangent_ranks": dims}
    verdict = report.passes and cm.clean
    if "faces" in job:
        faces = job["faces"]
        dist = {f: max((faces.distance(p.point) for p in samples if p.face == f), default=None)
                for f in ph.FACES}
        res["closed_form_distance"] = dist
        res["expected_faces"] = list(faces.nonempty())
        tol = cfg.get("closed_form_tol", 1e-8)
        verdict = verdict and all(v is None or v <= tol for v in dist.values())
    rows = [p.row() for p in samples]
    return res, verdict, {"lambda": rows, "lambda_points": [
        {"face": p.face, "base": list(p.point.compactified()[0]), "fiber": list(p.point.compactified()[1])}
        for p in samples]}


def _pick(phi, face, index, seed):
    cm = ph.critical_solve(phi, faces=(face,), count=12, seed=seed)
    cands = cm.face_samples(face)
    if not cands:
        raise rd.SurgeryError(f"no critical samples on the {face} face")
    return cands[min(index, len(cands) - 1)]


def run_reduce(job, ctx):
    cfg = job["config"]
    p0 = _pick(job["phi"], cfg.get("face", "interior"), cfg.get("index", 0), ctx["seed"])
    r = rd.reduce_fiber(job["phi"], job["amplitude"], p0, e=cfg.get("excess", 0))
    res = r.summary()
    res["base_point"] = p0.as_dict()
    return res, True, {}


def run_eliminate(job, ctx):
    r = rd.eliminate_excess(job["phi"], job["amplitude"], job["config"].get("excess", 1))
    return r.summary(), True, {}


def run_equiv(job, ctx):
    cfg = job["config"]
    phi = job["phi"]
    surgery = job["surgery2"]
    if surgery == "none":
        phi2 = job["phi2"]
    elif surgery == "add-smooth":
        phi2 = rd.add_smooth(phi, job["smooth"]).phase
    else:
        phi = rd.increase_fiber(job["phi"], sign=1).phase
        phi2 = rd.increase_fiber(job["phi"], sign=-1).phase
    face = cfg.get("face", "psi")
    p1, p2 = rd.matched_pair(phi, phi2, face, index=cfg.get("index", 0))
    v = rd.equivalence_decide(phi, p1, phi2, p2)
    res = v.summary()
    res["phases"] = [ex.to_text(phi.expr), ex.to_text(phi2.expr)]
    return res, v.equivalent is not None, {}


def run_oscint(job, ctx):
    cfg = job["config"]
    dens = job["raw"]["density"]
    f = oi.TestDensity.gaussian(dens["center"], dens["width"], frequency=dens.get("frequency"))
    r = oi.evaluate(job["phi"], job["amplitude"], f, _quad_config(cfg), _profile(cfg))
    qc = _quad_config(cfg)
    return r.summary(), r.converged, {"eps": list(qc.eps_list), "per_eps": [[v.real, v.imag] for v in r.per_eps]}


def run_wf(job, ctx):
    cfg = job["config"]
    d = job["phi"].space.d
    results, rows, verdict = [], [], True
    for k, p in enumerate(job["raw"]["probes"]):
        try:
            point = geo.CompactPoint(p["face"], 1.0 if p["face"] == "psi" else 0.0, tuple(p["base"]),
                                     0.0 if p["face"] == "psi" else 1.0, tuple(p["fiber"]))
        except geo.GeometryError as err:
            raise oi.OscError(f"probe {k}: {err}") from err
        r = oi.wf_probe(job["phi"], job["amplitude"], point, profile=_profile(cfg))
        summ = r.summary()
        summ["fit_residual"] = r.fit_residual
        if "expect" in p:
            summ["expected"] = p["expect"]
            summ["correct"] = r.verdict == p["expect"]
            verdict = verdict and summ["correct"]
        verdict = verdict and r.verdict != "inconclusive"
        results.append(summ)
        for lam, mag in zip(r.scales, r.magnitudes):
            rows.append([k, p["face"], *p["base"], *p["fiber"], float(lam), float(mag), r.verdict])
    res = {"probes": results, "dimension": d,
           "counts": {v: sum(1 for r in results if r["verdict"] == v) for v in ("singular", "regular",
                                                                                 "inconclusive")}}
    return res, verdict, {"decay": rows, "decay_results": results}


def _symbol_rows(members):
    rows, points = [], []
    for m in members:
        for k, s in enumerate(m.symbols):
            rows.append([m.name, k, s.point.face, *s.point.base, *s.point.fiber, s.value.real, s.value.imag,
                         s.error, s.signature])
            points.append({"name": m.name, "value": [s.value.real, s.value.imag]})
    return rows, points


def run_symbol(job, ctx):
    cfg = job["config"]
    param = ps.Parametrization(job["id"], job["phi"], job["amplitude"], cfg.get("excess", 0))
    fam = ps.symbol_family([param], face=cfg.get("face", "psi"), count=cfg.get("count", 12))
    syms = [s.as_dict() for s in fam[0].symbols]
    tol = cfg.get("limit_tol", 1e-6)
    ok = bool(syms) and all(s["error"] <= tol * (1 + abs(complex(*s["value"]))) for s in syms)
    rows, points = _symbol_rows(fam)
    return {"symbols": syms, "count": len(syms)}, ok, {"symbols": rows, "symbol_points": points}


def run_coherence(job, ctx):
    cfg = job["config"]
    params = []
    for m in job["members"]:
        if m["surgery"] == "none":
            params.append(ps.Parametrization(m["name"], m["phi"], m["amplitude"], m["excess"]))
        else:
            sign = 1 if m["surgery"] == "increase+" else -1
            params.append(ps.Parametrization.from_surgery(m["name"],
                                                          rd.increase_fiber(m["phi"], m["amplitude"], sign=sign)))
    fam = ps.symbol_family(params, face=cfg.get("face", "psi"), count=cfg.get("count", 12))
    rep = ps.coherence(fam, tol=cfg.get("tol", 1e-12))
    res = rep.summary()
    res["members"] = {m.name: [s.as_dict() for s in m.symbols] for m in fam}
    rows, points = _symbol_rows(fam)
    return res, rep.passes, {"symbols": rows, "symbol_points": points}


HANDLERS = {
    "phase-validate": run_phase_validate,
    "critical": run_critical,
    "lagrangian-sample": run_lagrangian,
    "reduce-fiber": run_reduce,
    "eliminate-excess": run_eliminate,
    "equiv": run_equiv,
    "oscint-eval": run_oscint,
    "wf-probe": run_wf,
    "symbol": run_symbol,
    "symbol-coherence": run_coherence,
}

COMPUTE_ERRORS = (ValueError, ArithmeticError, np.linalg.LinAlgError)


def _artifacts(job: dict, data: dict, out: Path, figures: bool = True) -> dict:
    """CSV point clouds and (optionally) PNG figures for one job; returns file names by kind."""
    from . import plotting

    jid = job["id"]
    files = {}
    if "lambda" in data:
        d = job["phi"].space.d
        header = ["face", "rho_x", *[f"base{i + 1}" for i in range(d)], "rho_xi", *[f"fiber{i + 1}" for i in range(d)]]
        files["lambda_csv"] = write_csv(out / f"{jid}.lambda.csv", header, data["lambda"])
        if figures:
            files["lambda_png"] = plotting.lambda_points(data["lambda_points"], d, out / f"{jid}.lambda.png", jid)
    if "decay" in data:
        d = job["phi"].space.d
        header = ["probe", "face", *[f"base{i + 1}" for i in range(d)], *[f"fiber{i + 1}" for i in range(d)],
                  "scale", "magnitude", "verdict"]
        files["decay_csv"] = write_csv(out / f"{jid}.decay.csv", header, data["decay"])
        if figures:
            files["decay_png"] = plotting.decay_fits(data["decay_results"], out / f"{jid}.decay.png", jid)
    if "symbols" in data:
        rows = data["symbols"]
        d = (len(rows[0]) - 7) // 2 if rows else 0
        header = ["name", "sample", "face", *[f"base{i + 1}" for i in range(d)], *[f"fiber{i + 1}" for i in range(d)],
                  "re", "im", "error", "signature"]
        files["symbol_csv"] = write_csv(out / f"{jid}.symbols.csv", header, rows)
        if rows and figures:
            files["symbol_png"] = plotting.symbol_values(data["symbol_points"], out / f"{jid}.symbols.png", jid)
    if "per_eps" in data:
        rows = [[e, v[0], v[1]] for e, v in zip(data["eps"], data["per_eps"])]
        files["eps_csv"] = write_csv(out / f"{jid}.eps.csv", ["eps", "re", "im"], rows)
        if figures:
            files["eps_png"] = plotting.eps_sweep(data["per_eps"], data["eps"], out / f"{jid}.eps.png", jid)
    return files


def run_jobs(text: str, out: Path | None, seed: int | None = None, command: str | None = None,
             figures: bool = True) -> tuple[int, dict]:
    """Execute a job file; returns (exit code, report)."""
    try:
        data, jobs = load_jobs(text, command)
    except JobError as err:
        return EXIT_SCHEMA, {"error": {"kind": "schema", "message": str(err)}}
    seed = data.get("seed", 0) if seed is None else seed
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    report = {"provenance": {"version": __version__, "seed": seed,
                             "config_hash": hashlib.sha256(canonical.encode()).hexdigest()},
              "jobs": []}
    ctx = {"seed": seed}
    code = EXIT_OK
    for job in jobs:
        entry = {"id": job["id"], "command": job["command"]}
        try:
            with np.errstate(all="ignore"):
                result, verdict, extra = HANDLERS[job["command"]](job, ctx)
        except COMPUTE_ERRORS as err:
            entry.update({"error": {"kind": "computation", "type": type(err).__name__, "message": str(err)},
                          "passes": False})
            report["jobs"].append(entry)
            code = EXIT_COMPUTE
            continue
        result = plain(result)
        checks = check_expect(result, job["expect"], job["config"].get("expect_tol", 1e-6))
        entry.update({"result": result, "verdict": bool(verdict), "expect": checks,
                      "passes": bool(verdict) and all(c["ok"] for c in checks)})
        if out is not None and extra:
            entry["artifacts"] = _artifacts(job, extra, out, figures)
        report["jobs"].append(entry)
        if not entry["passes"] and code == EXIT_OK:
            code = EXIT_VERDICT
    report["passes"] = code == EXIT_OK
    return code, report


def _headline(report: dict) -> list[str]:
    lines = []
    for job in report.get("jobs", []):
        res = job.get("result", {})
        if "error" in job:
            lines.append(f"{job['id']}: error: {job['error']['message']}")
            continue
        if job["command"] == "equiv":
            eq = res.get("equivalent")
            lines.append(f"{job['id']}: equivalent: {'undecided' if eq is None else str(eq).lower()}")
        lines.append(f"{job['id']}: {job['command']} {'PASS' if job['passes'] else 'FAIL'}")
    return lines


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sclag", description="Scattering Lagrangian distribution toolkit")
    parser.add_argument("--version", action="version", version=f"sclag {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run",) + COMMANDS:
        p = sub.add_parser(name, help="run a job file" if name == "run" else f"single {name} job")
        p.add_argument("job", help="path to job JSON ('-' reads stdin)")
        p.add_argument("--out", type=Path, default=None, help="output directory for report, CSV and PNG files")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--no-figures", action="store_true", help="write CSV files but skip PNG rendering")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        os.environ["SCLAG_THREADS"] = str(args.threads)
    try:
        text = sys.stdin.read() if args.job == "-" else Path(args.job).read_text(encoding="utf-8")
    except OSError as err:
        print(f"sclag: cannot read job file: {err}", file=sys.stderr)
        return EXIT_SCHEMA
    out = args.out
    if out is None and args.job != "-":
        out = Path(Path(args.job).stem + "_out")
    command = None if args.command == "run" else args.command
    code, report = run_jobs(text, out, args.seed, command, figures=not args.no_figures)
    text_out = dumps(report)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text_out, encoding="utf-8")
    if code == EXIT_SCHEMA:
        print(f"sclag: {report['error']['message']}", file=sys.stderr)
    elif out is None:
        sys.stdout.write(text_out)
    else:
        for line in _headline(report):
            print(line)
    return code


if __name__ == "__main__":
    sys.exit(main())
