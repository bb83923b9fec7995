"""Command-line interface.

Every result file embeds the ``RunConfig`` that produced it under
``"config"``; ``stabrep --config result.json`` reruns it and rewrites the
same output byte for byte.  Worker count is a runtime setting (``--workers``
or ``STABREP_WORKERS``) and is deliberately not part of the config.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from . import analysis as A
from .codes import code_from_dict, code_to_dict, estimate_distance, load_code, save_code, validate
from .decode import DecoderConfig
from .factory import build_family
from .noise import NoiseModel, total_error


_SEEDED = ("code", "distill", "repeater", "sweep")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class RunConfig:
    command: list
    args: dict = field(default_factory=dict)
    seed: int = 0

    def to_dict(self) -> dict:
        return {"command": list(self.command), "args": dict(sorted(self.args.items())), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if "config" in d and "command" not in d:
            d = d["config"]
        return cls(list(d["command"]), dict(d.get("args", {})), int(d.get("seed", 0)))

    def argv(self) -> list[str]:
        out = list(self.command)
        args = dict(self.args)
        if self.command == ["code", "info"]:
            out.append(str(args.pop("code")))
        for k, v in sorted(args.items()):
            flag = "--" + k.replace("_", "-")
            if isinstance(v, bool):
                if v:
                    out.append(flag)
            elif isinstance(v, list):
                out.append(flag)
                out.extend(str(x) for x in v)
            elif v is not None:
                out.extend([flag, str(v)])
        if self.command[0] in _SEEDED:
            out.extend(["--seed", str(self.seed)])
        return out


# ---------------------------------------------------------------------------

def _decoder_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--decoder", choices=("lookup", "bp", "bp-osd"), default="bp-osd")
    p.add_argument("--bp-iterations", type=int, default=50)
    p.add_argument("--bp-variant", choices=("min-sum", "sum-product"), default="min-sum")
    p.add_argument("--ms-scaling", type=float, default=0.625)
    p.add_argument("--osd-order", type=int, default=0)
    p.add_argument("--prior-p", type=float, default=None)


def _noise_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pr", type=float, default=0.0, help="resource-qubit depolarizing probability")
    p.add_argument("--pb", type=float, default=0.0, help="transmitted-qubit depolarizing probability")
    p.add_argument("--pm", type=float, default=0.0, help="Bell-measurement depolarizing probability")


def _decoder_config(a) -> DecoderConfig:
    return DecoderConfig(kind=a.decoder, bp_iterations=a.bp_iterations, bp_variant=a.bp_variant,
                         ms_scaling=a.ms_scaling, osd_order=a.osd_order, prior_p=a.prior_p)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stabrep", description="Measurement-based distillation and repeater simulation.")
    p.add_argument("--version", action="version", version=f"stabrep {__version__}")
    p.add_argument("--config", help="rerun the RunConfig embedded in a result (or config) file")
    p.add_argument("--workers", type=int, default=None, help="worker processes (default $STABREP_WORKERS or 1)")
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)

    code = sub.add_parser("code", help="generate or inspect codes")
    csub = code.add_subparsers(dest="code_cmd", parser_class=_Parser)
    g = csub.add_parser("gen-hgp", help="HGP self-product of a random (3,4)-regular code")
    g.add_argument("--nbits", type=int, required=True)
    g.add_argument("--instances", type=int, default=10)
    g.add_argument("--selection", choices=("max-distance", "first"), default="max-distance")
    g.add_argument("--min-girth", type=int, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    f = csub.add_parser("gen-family", help="family of HGP codes written as one file")
    f.add_argument("--nbits", type=int, nargs="+", required=True)
    f.add_argument("--instances", type=int, default=10)
    f.add_argument("--selection", choices=("max-distance", "first"), default="max-distance")
    f.add_argument("--min-girth", type=int, default=None)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", required=True)
    i = csub.add_parser("info", help="print n, k, d, rate and validation")
    i.add_argument("code", help="code file or builtin name (c422, steane713, five513, repetition(n))")
    i.add_argument("--effort", type=int, default=200)

    d = sub.add_parser("distill", help="Monte Carlo distillation")
    d.add_argument("--code", required=True)
    _noise_flags(d)
    d.add_argument("--mode", choices=("oneway", "twoway"), default="oneway")
    d.add_argument("--trials", type=int, default=1000)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out")
    _decoder_flags(d)

    r = sub.add_parser("repeater", help="Monte Carlo repeater chain")
    r.add_argument("--code", required=True)
    r.add_argument("--segments", type=int, default=1)
    _noise_flags(r)
    r.add_argument("--no-end-nodes", action="store_true", help="leave out the uncoded end-node outputs")
    r.add_argument("--trials", type=int, default=1000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out")
    _decoder_flags(r)

    s = sub.add_parser("sweep", help="p_L over a p_t grid for each code of a family")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--family", help="family file from 'code gen-family'")
    src.add_argument("--codes", nargs="+", help="code files or builtin names")
    s.add_argument("--pt-grid", required=True, help="a:b:steps, log-spaced")
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mode", choices=A.MODES, default="segment")
    s.add_argument("--checkpoint")
    s.add_argument("--svg")
    s.add_argument("--out", required=True)
    _decoder_flags(s)

    ft = sub.add_parser("fit", help="fit the threshold scaling law to a sweep table")
    ft.add_argument("--table", required=True)
    ft.add_argument("--pin-delta", type=float, default=None)
    ft.add_argument("--max-pl", type=float, default=A.SATURATION_CAP,
                    help="leave out saturated points with p_L above this (default %(default)s)")
    ft.add_argument("--out")
    ft.add_argument("--svg")

    pl = sub.add_parser("plan", help="smallest code size meeting a target infidelity")
    pl.add_argument("--fit", required=True)
    pl.add_argument("--distance", type=float, required=True)
    pl.add_argument("--segment", type=float, required=True)
    pl.add_argument("--target", type=float, required=True)
    pl.add_argument("--pt", type=float, required=True, help="operating total error p_t")
    pl.add_argument("--pr", type=float, default=0.0)
    pl.add_argument("--no-end-nodes", action="store_true")

    v = sub.add_parser("verify", help="engine-versus-oracle checks on builtin codes")
    v.add_argument("--max-weight", type=int, default=2)
    return p


# ---------------------------------------------------------------------------

def _write_json(path, config: RunConfig, result, **extra) -> None:
    doc = {"config": config.to_dict(), "provenance": A.provenance(**extra), "result": result}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _parse_grid(spec: str) -> list[float]:
    try:
        a, b, steps = spec.split(":")
        return A.log_grid(float(a), float(b), int(steps))
    except ValueError as exc:
        raise UsageError(f"bad --pt-grid {spec!r}: expected a:b:steps ({exc})") from None


def _load(name: str):
    try:
        return load_code(name)
    except (KeyError, FileNotFoundError, ValueError) as exc:
        raise UsageError(f"cannot load code {name!r}: {exc}") from None


def _model(a) -> NoiseModel:
    try:
        return NoiseModel(a.pr, a.pb, a.pm)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _cmd_code(a, cfg: RunConfig, out) -> int:
    if a.code_cmd == "info":
        code = _load(a.code)
        rep = validate(code)
        d, exact = code.d, code.d_exact
        if d is None:
            d, exact = estimate_distance(code, effort=a.effort)
        flag = "" if exact else " (upper bound)"
        print(f"n={code.n} k={code.k} d={d}{flag} rate={code.k / code.n:g}", file=out)
        print(f"name={code.name} css={code.css} checks={code.num_checks}", file=out)
        print("validation: pass" if rep.ok else f"validation: FAIL\n{rep}", file=out)
        return 0 if rep.ok else 2
    if a.code_cmd in ("gen-hgp", "gen-family"):
        sizes = [a.nbits] if a.code_cmd == "gen-hgp" else a.nbits
        try:
            fam = build_family(sizes, a.instances, a.seed, a.selection, min_girth=a.min_girth)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if a.code_cmd == "gen-hgp":
            code = fam[0]
            save_code(code, a.out)
            print(f"wrote {a.out}: [[{code.n},{code.k},{code.d}]]", file=out)
        else:
            doc = {"config": cfg.to_dict(), "codes": [code_to_dict(c) for c in fam]}
            Path(a.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
            for c in fam:
                print(f"[[{c.n},{c.k},{c.d}]] {c.name}", file=out)
        return 0
    raise UsageError("code: choose gen-hgp, gen-family or info")


def _cmd_run(a, cfg: RunConfig, out) -> int:
    code = _load(a.code)
    model = _model(a)
    dconf = _decoder_config(a)
    if a.cmd == "distill":
        pt = A.run_trials(code, model, dconf, a.trials, a.seed, a.mode, workers=a.workers,
                          include_end_nodes=True, p_t=total_error(model))
        extra = {}
    else:
        if a.segments < 1:
            raise UsageError("--segments must be >= 1")
        pt = A.run_trials(code, model, dconf, a.trials, a.seed, "chain", workers=a.workers,
                          segments=a.segments, include_end_nodes=not a.no_end_nodes, p_t=total_error(model))
        extra = {"segments": a.segments, "end_nodes": not a.no_end_nodes}
    result = {"code": code.name, "code_hash": code.content_hash(), "n": code.n, "k": code.k,
              "noise": model.as_dict(), "p_t": pt.p_t, "decoder": dconf.as_dict(), "trials": pt.trials,
              "failures": pt.failures, "accepted": pt.accepted, "p_l": pt.p_l,
              "ci": [pt.ci_lo, pt.ci_hi], **extra}
    print(f"{a.cmd}: {code.name} p_t={pt.p_t:.5g} failures={pt.failures}/{pt.accepted or pt.trials} "
          f"p_L={pt.p_l:.4g} [{pt.ci_lo:.4g}, {pt.ci_hi:.4g}]", file=out)
    if a.out:
        _write_json(a.out, cfg, result, resource_error_convention="each resource qubit belongs to one segment")
    return 0


def _cmd_sweep(a, cfg: RunConfig, out) -> int:
    if a.family:
        doc = json.loads(Path(a.family).read_text())
        codes = [code_from_dict(c) for c in doc["codes"]]
    else:
        codes = [_load(c) for c in a.codes]
    grid = _parse_grid(a.pt_grid)
    dconf = _decoder_config(a)
    table = A.sweep(codes, grid, dconf, a.trials, a.seed, mode=a.mode, workers=a.workers,
                    checkpoint=a.checkpoint)
    A.emit(table, "csv", a.out)
    meta = {"config": cfg.to_dict(), "provenance": A.provenance(
        codes={c.name: c.content_hash() for c in codes}, decoder=dconf.as_dict(),
        noise_split="equal log-scale split of p_t over p_r, p_b, p_m")}
    A.emit(table, "json", str(a.out) + ".json", meta=meta)
    if a.svg:
        A.emit(table, "svg", a.svg)
    for p in table:
        print(f"{p.code_id} p_t={p.p_t:.4g} p_L={p.p_l:.4g} ({p.failures}/{p.trials})", file=out)
    for cr in table.crossings():
        print(f"crossing {cr['codes'][0]} / {cr['codes'][1]} at p_t ~ {cr['p_t']:.4g}", file=out)
    return 0


def _cmd_fit(a, cfg: RunConfig, out) -> int:
    try:
        table = A.SweepTable.from_csv(a.table)
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot read table {a.table!r}: {exc}") from None
    try:
        fit = A.fit_threshold(table, pin_delta=a.pin_delta, max_pl=a.max_pl)
    except A.FitError as exc:
        raise UsageError(f"fit: {exc}") from None
    print(f"p0={fit.p0:.5g} +- {fit.stderr['p0']:.2g}  c={fit.c:.4g}  alpha={fit.alpha:.4g}  "
          f"delta={fit.delta:.4g}{' (pinned)' if fit.delta_pinned else ''}  residual={fit.residual_norm:.3g}  "
          f"points={fit.points} excluded={fit.excluded}",
          file=out)
    if a.out:
        _write_json(a.out, cfg, fit.as_dict(), coverage=A.fit_coverage(table, fit))
    if a.svg:
        A.emit(table, "svg", a.svg, fit=fit)
    return 0


def _cmd_plan(a, cfg: RunConfig, out) -> int:
    doc = json.loads(Path(a.fit).read_text())
    fit = A.FitParams.from_dict(doc.get("result", doc))
    try:
        plan = A.plan_code_size(a.distance, a.segment, a.target, fit, a.pt, p_r=a.pr,
                                include_end_nodes=not a.no_end_nodes)
    except ValueError as exc:
        raise UsageError(f"plan: {exc}") from None
    print(f"N={plan.N} n={plan.n} p_L={plan.p_l:.3g} predicted infidelity={plan.predicted_infidelity:.3g}", file=out)
    return 0


def _cmd_verify(a, cfg: RunConfig, out) -> int:
    from .verify import default_suite

    ok = True
    for rep in default_suite(a.max_weight):
        print(("PASS " if rep.ok else "FAIL ") + str(rep), file=out)
        ok &= rep.ok
    return 0 if ok else 2


_NON_CONFIG = {"cmd", "code_cmd", "config", "workers", "seed"}


def _config_of(a, argv_cmd: list) -> RunConfig:
    args = {k: v for k, v in vars(a).items() if k not in _NON_CONFIG}
    return RunConfig(argv_cmd, args, int(getattr(a, "seed", 0) or 0))


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
        if a.config:
            cfg = RunConfig.from_dict(json.loads(Path(a.config).read_text()))
            rerun = cfg.argv()
            if a.workers is not None:
                rerun = ["--workers", str(a.workers)] + rerun
            return main(rerun, out)
        if a.cmd is None:
            raise UsageError(parser.format_usage().strip())
        cmd = [a.cmd] + ([a.code_cmd] if a.cmd == "code" and a.code_cmd else [])
        cfg = _config_of(a, cmd)
        if a.cmd == "code":
            return _cmd_code(a, cfg, out)
        if a.cmd in ("distill", "repeater"):
            return _cmd_run(a, cfg, out)
        handler = {"sweep": _cmd_sweep, "fit": _cmd_fit, "plan": _cmd_plan, "verify": _cmd_verify}[a.cmd]
        return handler(a, cfg, out)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"stabrep: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
