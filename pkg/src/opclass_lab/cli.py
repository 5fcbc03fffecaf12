"""``opclass-lab`` command line.

Exit codes: 0 when the run found no violations, 1 when it did, 2 on bad
input. Reports are canonical JSON (schema "1"); ``stability_hash`` covers
everything except ``wall_time`` so two runs with the same configuration
can be compared by hash.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import formats, harness
from .errors import OpLabError, RankDeficient
from .measures import is_stieltjes, recover_atomic_measure
from .numkernel import DEFAULT_TOL, ToleranceProfile, norm
from .opclass import classify, embry_battery
from .roots import BranchRule, root_residual, spectral_nth_root, verify_root
from .shifts import (
    BrownForm,
    WeightSequence,
    bluk_target,
    construct_bluk_root,
    construct_nrits_root,
    construct_piurwa,
    porws_matrix_condition,
    shift_is_quasinormal,
    shift_is_subnormal,
    shift_moments,
)

SCHEMA = "1"
EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    command: str
    target: str | None = None
    inputs: dict = field(default_factory=dict)
    values: tuple = ()
    trials: int = 100
    dim_min: int = 2
    dim_max: int = 6
    seed: int = 0
    tol_eq: float | None = None
    tol_psd: float | None = None
    output: str | None = None
    artifact: str | None = None
    fmt: str = "json"
    n: int | None = None
    kappa: int | None = None
    alpha: float | None = None
    beta: float | None = None
    kmax: int = 5
    truncation: int | None = None
    natoms: int | None = None

    def __post_init__(self):
        if self.trials < 0:
            raise OpLabError("trials must be nonnegative")
        if not 1 <= self.dim_min <= self.dim_max <= 64:
            raise OpLabError("dimension range must satisfy 1 <= dim-min <= dim-max <= 64")
        if not 0 <= self.seed < 2**64:
            raise OpLabError("seed must be a 64-bit unsigned integer")
        if self.fmt not in ("json", "csv", "text"):
            raise OpLabError(f"unknown format {self.fmt!r}")

    def tolerance(self) -> ToleranceProfile:
        t = DEFAULT_TOL
        if self.tol_eq is not None:
            t = replace(t, eq_rtol=self.tol_eq)
        if self.tol_psd is not None:
            t = replace(t, psd_tol=self.tol_psd)
        return t

    def echo(self) -> dict:
        out = asdict(self)
        out.pop("output")
        out["values"] = list(self.values)
        return out


def build_report(config: RunConfig, records: list, summary: dict, extra: dict | None = None,
                 wall_time: float = 0.0) -> dict:
    body = {
        "schema": SCHEMA,
        "command": config.command,
        "config": config.echo(),
        "records": records,
        "summary": summary,
    }
    if extra:
        body.update(extra)
    body["stability_hash"] = hashlib.sha256(formats.dumps(body).encode()).hexdigest()
    body["wall_time"] = wall_time
    return body


def stability_hash(report: dict) -> str:
    body = {k: v for k, v in report.items() if k not in ("wall_time", "stability_hash")}
    return hashlib.sha256(formats.dumps(body).encode()).hexdigest()


# commands ---------------------------------------------------------------


def _matrix_input(config, key):
    path = config.inputs.get(key)
    if path is None:
        raise OpLabError(f"missing --{key} input file")
    return formats.load_matrix(path)


def cmd_classify(config: RunConfig) -> dict:
    t = _matrix_input(config, "matrix")
    tol = config.tolerance()
    rep = classify(t, tol=tol)
    embry = embry_battery(t, config.kmax, tol)
    residuals = {k: v for k, v in rep.residuals.items() if v is not None}
    residuals.update({f"embry_identity({k})": v for k, v in embry.identity_residuals.items()})
    residuals.update({f"embry_root({k})": v for k, v in embry.root_residuals.items()})
    record = {
        "instance_hash": harness.instance_hash({"T": t}),
        "verdicts": rep.verdicts,
        "embry": {k: v for k, v in embry.to_json().items() if not k.endswith("residuals")},
        "residuals": dict(sorted(residuals.items())),
    }
    return build_report(config, [record], {"trials": 1, "violations": 0})


def cmd_verify(config: RunConfig) -> dict:
    opts = {"n": config.n, "kappa": config.kappa, "alpha": config.alpha, "beta": config.beta,
            "kmax": config.kmax, "truncation": config.truncation}
    result = harness.campaign(config.target, config.trials, config.seed, config.dim_min, config.dim_max,
                              config.tolerance(), opts)
    return build_report(config, result.records, result.summary(), {"witnesses": result.witnesses})


def _write_artifact(config, default_name, payload) -> str:
    path = config.artifact or default_name
    Path(path).write_text(formats.dumps(payload) + "\n")
    return path


def _construct_record(payload, verdicts, residuals, artifact):
    return {
        "instance_hash": hashlib.sha256(formats.dumps(payload).encode()).hexdigest()[:16],
        "artifact": artifact,
        "verdicts": verdicts,
        "residuals": residuals,
    }


def cmd_construct(config: RunConfig) -> dict:
    tol = config.tolerance()
    kind = config.target
    if kind == "spectral_root":
        t = _matrix_input(config, "matrix")
        n = config.n or 2
        branch = BranchRule("rotated", float(config.values[0])) if config.values else BranchRule()
        r = spectral_nth_root(t, n, branch, tol)
        payload = formats.matrix_to_json(r)
        ok = verify_root(r, t, n, tol)
        verdicts = {"verify_root": ok}
        residuals = {"root": root_residual(r, t, n)}
    elif kind == "bluk":
        a = formats.load_matrix(config.inputs["a"]) if config.inputs.get("a") else None
        b = _matrix_input(config, "b")
        c = _matrix_input(config, "c")
        s = construct_bluk_root(a, b, c, tol)
        target = bluk_target(a, b)
        payload = formats.matrix_to_json(s)
        ok = verify_root(s, target, 2, tol)
        verdicts = {"verify_root": ok, "normal": bool(norm(s @ s.conj().T - s.conj().T @ s) <= tol.eq_rtol * max(norm(s), 1) ** 2)}
        residuals = {"root": root_residual(s, target, 2), "commutator": norm(s @ s.conj().T - s.conj().T @ s)}
    elif kind == "piurwa":
        n = config.n or 2
        w = construct_piurwa(n, config.seed)
        payload = w.to_json()
        holds, diff = porws_matrix_condition(w, n)
        product = float(np.prod(w.tail))
        ok = holds and not shift_is_quasinormal(w)
        verdicts = {"power_matches_unweighted": holds, "quasinormal": shift_is_quasinormal(w)}
        residuals = {"matrix_max_abs_diff": diff, "period_product_error": abs(product - 1.0)}
    elif kind == "nrits":
        s = _matrix_input(config, "s")
        nm = formats.load_matrix(config.inputs["normal"]) if config.inputs.get("normal") else None
        n = config.n or 2
        m = config.truncation or n + 2
        res = construct_nrits_root(BrownForm(WeightSequence.unilateral(), s, nm), n, m, config.seed, tol)
        payload = {"T": formats.matrix_to_json(res.T), "R": formats.matrix_to_json(res.R), "W": res.weights.to_json()}
        ok = res.root_residual <= 1e-12 and not res.R_is_quasinormal
        verdicts = {"verify_root": verify_root(res.R, res.T, n, tol), "R_is_quasinormal": res.R_is_quasinormal}
        residuals = {"root": res.root_residual, "quasinormal": res.quasinormal_residual}
    else:
        raise OpLabError(f"unknown construction {kind!r}")
    artifact = _write_artifact(config, f"{kind}.json", payload)
    record = _construct_record(payload, verdicts, residuals, artifact)
    return build_report(config, [record], {"trials": 1, "violations": 0 if ok else 1}, {"artifact": payload})


def _shift_from_config(config) -> WeightSequence:
    if config.inputs.get("weights"):
        return WeightSequence.from_json(formats.load_file(config.inputs["weights"]))
    if not config.values:
        raise OpLabError("shift needs --weights FILE or the period as positional values")
    try:
        return WeightSequence.periodic(config.values)
    except ValueError as exc:
        raise OpLabError(str(exc)) from None


def cmd_moments(config: RunConfig) -> dict:
    tol = config.tolerance()
    action = config.target
    values = [float(v) for v in config.values]
    record: dict = {}
    if action == "check":
        record = {"moments": values, "verdicts": {"stieltjes": is_stieltjes(values, tol)}}
    elif action == "recover":
        natoms = config.natoms or max(len(values) // 2, 1)
        try:
            atoms = recover_atomic_measure(values, natoms, tol)
            reduced = False
        except RankDeficient as exc:
            atoms, reduced = exc.atoms, True
        record = {"moments": values, "atoms": [{"x": x, "w": w} for x, w in atoms],
                  "verdicts": {"rank_deficient": reduced}}
    elif action == "shift":
        w = _shift_from_config(config)
        m = config.truncation or 8
        record = {"weights": w.to_json(), "moments": shift_moments(w, m).tolist(),
                  "verdicts": {"subnormal": shift_is_subnormal(w, m, tol), "quasinormal": shift_is_quasinormal(w)}}
    else:
        raise OpLabError(f"unknown moments action {action!r}")
    return build_report(config, [record], {"trials": 1, "violations": 0})


COMMANDS = {"classify": cmd_classify, "verify": cmd_verify, "construct": cmd_construct, "moments": cmd_moments}


# rendering --------------------------------------------------------------


def _flatten(prefix, obj, out):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out[prefix] = obj
    return out


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return formats.dumps(report)
    if fmt == "csv":
        rows = [_flatten("", r, {}) for r in report["records"]]
        columns = sorted({k for r in rows for k in r})
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue().rstrip("\n")
    summary = _flatten("", report["summary"], {})
    lines = [f"{report['command']} {report['config'].get('target') or ''}".rstrip()]
    lines += [f"{k}: {v}" for k, v in summary.items()]
    if len(report["records"]) == 1:
        lines += [f"{k}: {v}" for k, v in _flatten("", report["records"][0], {}).items()]
    return "\n".join(lines)


# argument parsing -------------------------------------------------------


def _common(p):
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--dim-min", type=int, default=2)
    p.add_argument("--dim-max", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol-eq", type=float)
    p.add_argument("--tol-psd", type=float)
    p.add_argument("--json", dest="output", help="write the JSON report to this path")
    p.add_argument("--format", dest="fmt", choices=("json", "csv", "text"), default="text")
    p.add_argument("--n", type=int)
    p.add_argument("--kappa", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--kmax", type=int, default=5)
    p.add_argument("--truncation", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opclass-lab", description="Operator class checks, theorem campaigns and constructions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="class memberships and Embry battery of one matrix")
    p.add_argument("matrix")
    _common(p)

    p = sub.add_parser("verify", help="seeded falsification campaign for one theorem")
    p.add_argument("theorem")
    _common(p)

    p = sub.add_parser("construct", help="build a root or a weight sequence")
    p.add_argument("kind", choices=("spectral_root", "bluk", "piurwa", "nrits"))
    p.add_argument("values", nargs="*", type=float, help="spectral_root: optional branch cut offset")
    p.add_argument("--matrix")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--c")
    p.add_argument("--s")
    p.add_argument("--normal")
    p.add_argument("--out", dest="artifact", help="artifact path (default <kind>.json)")
    _common(p)

    p = sub.add_parser("moments", help="Stieltjes test, atom recovery, shift moments")
    p.add_argument("action", choices=("check", "recover", "shift"))
    p.add_argument("values", nargs="*", type=float)
    p.add_argument("--natoms", type=int)
    p.add_argument("--weights")
    _common(p)
    return parser


def config_from_args(args) -> RunConfig:
    inputs = {}
    for key in ("matrix", "a", "b", "c", "s", "normal", "weights"):
        value = getattr(args, key, None)
        if value is not None:
            inputs[key] = value
    target = getattr(args, "theorem", None) or getattr(args, "kind", None) or getattr(args, "action", None)
    if args.command == "classify":
        target = None
    return RunConfig(
        command=args.command, target=target, inputs=inputs, values=tuple(getattr(args, "values", ()) or ()),
        trials=args.trials, dim_min=args.dim_min, dim_max=args.dim_max, seed=args.seed,
        tol_eq=args.tol_eq, tol_psd=args.tol_psd, output=args.output, artifact=getattr(args, "artifact", None),
        fmt=args.fmt, n=args.n, kappa=args.kappa, alpha=args.alpha, beta=args.beta, kmax=args.kmax,
        truncation=args.truncation, natoms=getattr(args, "natoms", None),
    )


def run(config: RunConfig) -> tuple[dict, int]:
    start = time.perf_counter()
    report = COMMANDS[config.command](config)
    report["wall_time"] = time.perf_counter() - start
    code = EXIT_OK if report["summary"]["violations"] == 0 else EXIT_VIOLATION
    return report, code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        report, code = run(config)
    except (OpLabError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if config.output:
        Path(config.output).write_text(formats.dumps(report) + "\n")
    print(render(report, config.fmt))
    return code


if __name__ == "__main__":
    sys.exit(main())
