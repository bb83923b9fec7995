"""Monte Carlo orchestration, threshold fitting and segment planning.

Every trial draws from its own stream ``SeedSequence(seed, spawn_key=(*point, i))``,
so counts do not depend on how trials are split across workers.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import optimize, stats

from . import __version__
from .codes import StabilizerCode
from .decode import DecoderConfig, make_decoder
from .noise import NoiseModel, sample_bipartite, total_error, trial_rng
from .protocol import distill_one_way, distill_two_way, repeater_segment, run_chain

log = logging.getLogger(__name__)

MODES = ("segment", "oneway", "twoway", "chain")
CSV_COLUMNS = ("code_id", "n", "p_t", "trials", "failures", "p_l", "ci_lo", "ci_hi")


class FitError(ValueError):
    pass


def wilson_interval(failures: int, trials: int, conf: float = 0.95) -> tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    z = float(stats.norm.ppf(0.5 + conf / 2))
    p = failures / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    # clamp so the interval always contains the estimate despite rounding
    return max(0.0, min(centre - half, p)), min(1.0, max(centre + half, p))


@dataclass
class SweepPoint:
    code_id: str
    n: int
    p_t: float
    trials: int
    failures: int
    p_l: float = 0.0
    ci_lo: float = 0.0
    ci_hi: float = 1.0
    accepted: Optional[int] = None

    def __post_init__(self):
        if self.failures > (self.accepted if self.accepted is not None else self.trials):
            raise ValueError("failures exceed trials")
        base = self.accepted if self.accepted is not None else self.trials
        self.p_l = self.failures / base if base else 0.0
        self.ci_lo, self.ci_hi = wilson_interval(self.failures, base)

    def row(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}


@dataclass
class SweepTable:
    points: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def sizes(self) -> list[int]:
        return sorted({p.n for p in self.points})

    def by_code(self) -> dict[str, list[SweepPoint]]:
        out: dict[str, list[SweepPoint]] = {}
        for p in self.points:
            out.setdefault(p.code_id, []).append(p)
        for v in out.values():
            v.sort(key=lambda q: q.p_t)
        return out

    def crossings(self) -> list[dict]:
        """Grid-interpolated crossing points of every pair of curves (log-log)."""
        curves = list(self.by_code().items())
        found = []
        for a in range(len(curves)):
            for b in range(a + 1, len(curves)):
                (ida, pa), (idb, pb) = curves[a], curves[b]
                common = sorted({p.p_t for p in pa} & {p.p_t for p in pb})
                la = {p.p_t: p.p_l for p in pa}
                lb = {p.p_t: p.p_l for p in pb}
                diffs = []
                for x in common:
                    if la[x] > 0 and lb[x] > 0:
                        diffs.append((x, math.log(la[x]) - math.log(lb[x])))
                for (x0, d0), (x1, d1) in zip(diffs, diffs[1:]):
                    if d0 == 0 or d0 * d1 < 0:
                        w = d0 / (d0 - d1) if d0 != d1 else 0.0
                        px = math.exp(math.log(x0) + w * (math.log(x1) - math.log(x0)))
                        found.append({"codes": [ida, idb], "p_t": px})
        return found

    @classmethod
    def from_csv(cls, path) -> "SweepTable":
        pts = []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                pts.append(SweepPoint(row["code_id"], int(row["n"]), float(row["p_t"]),
                                      int(row["trials"]), int(row["failures"])))
        return cls(pts)


# trials ---------------------------------------------------------------------

def _chunk(args) -> tuple[int, int]:
    code, model, dconf, mode, seed, key, lo, hi, segments, ends = args
    decoder = make_decoder(code, dconf, p=_prior(model))
    fails = accepted = 0
    for i in range(lo, hi):
        rng = trial_rng(seed, *key, i)
        if mode == "chain":
            res = run_chain(code, segments, model, decoder, rng, include_end_nodes=ends)
            fails += res.failure
            accepted += 1
            continue
        if mode == "segment":
            frame = sample_bipartite(model, code, rng)
            r = repeater_segment(code, frame, decoder)
        else:
            frame = sample_bipartite(model, code, rng, left_end=ends, right_end=ends)
            r = distill_one_way(code, frame, decoder) if mode == "oneway" else distill_two_way(code, frame)
        accepted += r.accepted
        fails += r.accepted and r.logical_failure
    return fails, accepted


def _prior(model: NoiseModel) -> float:
    return max(total_error(model), 1e-6)


def default_workers() -> int:
    env = os.environ.get("STABREP_WORKERS")
    return max(1, int(env)) if env else 1


def run_trials(code: StabilizerCode, model: NoiseModel, decoder: DecoderConfig, trials: int,
               master_seed: int = 0, mode: str = "segment", *, workers: Optional[int] = None,
               segments: int = 1, include_end_nodes: bool = False, point_key: Sequence[int] = (),
               code_id: Optional[str] = None, p_t: Optional[float] = None) -> SweepPoint:
    """Run ``trials`` independent trials and return counts with a Wilson interval.

    ``mode`` is ``segment`` (one repeater segment), ``oneway`` / ``twoway``
    (distillation) or ``chain`` (``segments`` segments end to end).  For
    two-way runs ``p_l`` is conditioned on acceptance.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    workers = default_workers() if workers is None else max(1, int(workers))
    key = tuple(int(k) for k in point_key)
    bounds = np.linspace(0, trials, min(workers * 4, trials) + 1).astype(int) if workers > 1 else np.array([0, trials])
    jobs = [(code, model, decoder, mode, int(master_seed), key, int(lo), int(hi), segments, include_end_nodes)
            for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_chunk, jobs))
    else:
        results = [_chunk(j) for j in jobs]
    fails = sum(r[0] for r in results)
    acc = sum(r[1] for r in results)
    return SweepPoint(code_id or code.name, code.n, float(p_t if p_t is not None else total_error(model)),
                      trials, fails, accepted=acc if mode == "twoway" else None)


def log_grid(a: float, b: float, steps: int) -> list[float]:
    if steps < 1 or a <= 0 or b <= 0:
        raise ValueError("log grid needs positive endpoints and steps >= 1")
    if steps == 1:
        return [float(a)]
    return [float(v) for v in np.exp(np.linspace(math.log(a), math.log(b), steps))]


def sweep(codes: Sequence[StabilizerCode], grid: Sequence[float], decoder: DecoderConfig, trials: int,
          master_seed: int = 0, *, mode: str = "segment", workers: Optional[int] = None,
          checkpoint: Optional[os.PathLike] = None, noise_weights=(1.0, 1.0, 1.0)) -> SweepTable:
    """Cross product of codes and ``p_t`` values.

    Point ``(j, i)`` uses stream key ``(j, i)``.  With ``checkpoint`` each
    finished point is appended as a JSON line and skipped on a rerun.
    """
    if not grid:
        raise ValueError("empty p_t grid")
    done: dict[tuple[int, int], SweepPoint] = {}
    if checkpoint is not None and Path(checkpoint).exists():
        for line in Path(checkpoint).read_text().splitlines():
            if line.strip():
                rec = json.loads(line)
                done[(rec["j"], rec["i"])] = SweepPoint(**rec["point"])
    table = SweepTable()
    for j, code in enumerate(codes):
        cid = code.name
        for i, pt in enumerate(grid):
            if (j, i) in done:
                table.points.append(done[(j, i)])
                continue
            model = NoiseModel.from_total(pt, noise_weights)
            pnt = run_trials(code, model, decoder, trials, master_seed, mode, workers=workers,
                             point_key=(j, i), code_id=cid, p_t=pt)
            table.points.append(pnt)
            if checkpoint is not None:
                with open(checkpoint, "a") as fh:
                    fh.write(json.dumps({"j": j, "i": i, "point": _point_dict(pnt)}) + "\n")
    return table


def _point_dict(p: SweepPoint) -> dict:
    return {"code_id": p.code_id, "n": p.n, "p_t": p.p_t, "trials": p.trials,
            "failures": p.failures, "accepted": p.accepted}


# fitting ------------------------------------------------------------------

@dataclass
class FitParams:
    c: float
    p0: float
    alpha: float
    delta: float
    residual_norm: float
    stderr: dict = field(default_factory=dict)
    cond: float = float("nan")
    delta_pinned: bool = False
    points: int = 0
    excluded: int = 0

    def predict(self, n: float, p: float) -> float:
        return self.c * (p / self.p0) ** (self.alpha * n**self.delta)

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FitParams":
        return cls(**d)


def _fit_arrays(table) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    pts = list(table)
    n = np.array([p.n for p in pts], dtype=float)
    pt = np.array([p.p_t for p in pts], dtype=float)
    pl = np.array([p.p_l for p in pts], dtype=float)
    fails = np.array([p.failures for p in pts], dtype=float)
    # delta method: var(log p_hat) ~ (1 - p) / failures
    with np.errstate(divide="ignore", invalid="ignore"):
        sig = np.sqrt(np.where(fails > 0, (1 - pl) / np.maximum(fails, 1), np.inf))
    sig = np.where(np.isfinite(sig) & (sig > 0), sig, 1e-3)
    return n, pt, pl, sig


SATURATION_CAP = 0.9


def fit_threshold(table, pin_delta: Optional[float] = None, weighted: bool = True,
                  max_pl: Optional[float] = SATURATION_CAP) -> FitParams:
    """Weighted least squares of ``log p_L = log c + alpha n^delta (log p - log p0)``.

    The law is unbounded in ``p`` and cannot follow ``p_L`` saturating at 1,
    so points with ``p_L > max_pl`` are left out (``None`` keeps all).
    Needs at least two code sizes with three nonzero points each.  Standard
    errors come from the Gauss-Newton covariance with binomial weights.
    """
    pts = list(table)
    total = len(pts)
    if max_pl is not None:
        pts = [p for p in pts if p.p_l <= max_pl]
    if any(p.p_l <= 0 for p in pts):
        raise FitError("all estimates must be nonzero (log p_L undefined)")
    per_size: dict[int, int] = {}
    for p in pts:
        per_size[p.n] = per_size.get(p.n, 0) + 1
    if len(per_size) < 2:
        raise FitError("under-determined: need at least two code sizes")
    if min(per_size.values()) < 3:
        raise FitError("need at least three grid points per code size")
    n, pt, pl, sig = _fit_arrays(pts)
    if not weighted:
        sig = np.ones_like(sig)
    y = np.log(pl)
    lp = np.log(pt)
    if np.ptp(y) == 0 or np.ptp(lp) == 0:
        raise FitError("degenerate data: no variation to fit")
    sizes = sorted(per_size)
    slopes = {}
    for s in sizes:
        m = n == s
        b, a = np.polyfit(lp[m], y[m], 1)
        slopes[s] = (a, b)
    (a1, b1), (a2, b2) = slopes[sizes[0]], slopes[sizes[-1]]
    if b1 != b2 and np.isfinite((a2 - a1) / (b1 - b2)):
        lp0 = (a2 - a1) / (b1 - b2)
    else:
        lp0 = lp.max()
    lp0 = float(np.clip(lp0, lp.min() - 2, min(lp.max() + 2, -1e-3)))
    if pin_delta is not None:
        delta0 = float(pin_delta)
    else:
        ratio = b2 / b1 if b1 > 0 and b2 > 0 else 2.0
        delta0 = float(np.clip(math.log(ratio) / math.log(sizes[-1] / sizes[0]), 0.05, 2.0))
    alpha0 = max(b1 / sizes[0] ** delta0, 1e-6)
    lc0 = float(a1 + b1 * lp0)

    def unpack(theta):
        lc, lq, la = theta[:3]
        d = pin_delta if pin_delta is not None else theta[3]
        return lc, lq, la, d

    def resid(theta):
        lc, lq, la, d = unpack(theta)
        return (lc + math.exp(la) * n**d * (lp - lq) - y) / sig

    x0 = [lc0, lp0, math.log(alpha0)] + ([] if pin_delta is not None else [delta0])
    lb = [-np.inf, -np.inf, -np.inf] + ([] if pin_delta is not None else [0.0])
    ub = [np.inf, 0.0, np.inf] + ([] if pin_delta is not None else [3.0])
    kw = dict(bounds=(lb, ub), method="trf", x_scale="jac", xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=20000)
    sol = optimize.least_squares(resid, x0, **kw)
    trials = np.array([p.accepted if p.accepted is not None else p.trials for p in pts], dtype=float)
    if weighted and np.all(np.array([p.failures for p in pts]) > 0):
        # second pass: binomial variances at the fitted curve rather than the noisy estimate
        lc, lq, la, d = unpack(sol.x)
        q = np.clip(np.exp(lc + math.exp(la) * n**d * (lp - lq)), 1e-12, 1 - 1e-12)
        sig = np.sqrt((1 - q) / (trials * q))
        sol = optimize.least_squares(resid, sol.x, **kw)
    lc, lq, la, d = unpack(sol.x)
    jac = sol.jac
    jtj = jac.T @ jac
    cond = float(np.linalg.cond(jtj))
    try:
        cov = np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        cov = np.full_like(jtj, np.nan)
    if not weighted:
        dof = max(len(y) - len(sol.x), 1)
        cov = cov * float(np.sum(sol.fun**2)) / dof
    var = np.diag(cov)
    c, p0, alpha = math.exp(lc), math.exp(lq), math.exp(la)
    se = {"c": c * math.sqrt(abs(var[0])), "p0": p0 * math.sqrt(abs(var[1])),
          "alpha": alpha * math.sqrt(abs(var[2]))}
    se["delta"] = 0.0 if pin_delta is not None else math.sqrt(abs(var[3]))
    if not (0 < p0 < 1) or alpha <= 0:
        raise FitError(f"fit left the valid region (p0={p0}, alpha={alpha})")
    return FitParams(c, p0, alpha, float(d), float(np.linalg.norm(sol.fun)), se, cond,
                     pin_delta is not None, len(y), total - len(y))


def synthesize(params: FitParams, sizes: Sequence[int], grid: Sequence[float], trials: Optional[int] = None,
               rng: Optional[np.random.Generator] = None) -> SweepTable:
    """Table drawn from the scaling law, exact when ``trials`` is None, else binomial."""
    pts = []
    for n in sizes:
        for p in grid:
            q = min(params.predict(n, p), 1.0)
            if trials is None:
                pnt = SweepPoint(f"n{n}", n, p, 10**12, 0)
                pnt.p_l = q
                pts.append(pnt)
            else:
                f = int(rng.binomial(trials, q))
                pts.append(SweepPoint(f"n{n}", n, p, trials, f))
    return SweepTable(pts)


# planning -----------------------------------------------------------------

@dataclass
class SegmentPlan:
    L: float
    L0: float
    N: int
    n: int
    p_l: float
    predicted_infidelity: float


def hgp_family_sizes(limit: int = 400) -> list[int]:
    # (3,4) self-products: n_bits = 4m gives N = 16 m^2 + 9 m^2
    return [25 * m * m for m in range(1, limit + 1)]


def plan_code_size(L: float, L0: float, target_infidelity: float, fit: FitParams, p_t: float, *,
                   sizes: Optional[Iterable[int]] = None, p_r: float = 0.0,
                   include_end_nodes: bool = True) -> SegmentPlan:
    """Smallest family size with ``N p_L(n) (+ 2 p_r)`` at or below the target, ``N = ceil(L / L0)``."""
    if L <= 0 or L0 <= 0:
        raise ValueError("distances must be positive")
    if p_t >= fit.p0:
        raise ValueError(f"p_t = {p_t} is not below the threshold p0 = {fit.p0:.4g}; no code size helps")
    N = max(1, math.ceil(L / L0))
    floor = 2 * p_r if include_end_nodes else 0.0
    for n in sorted(sizes) if sizes is not None else hgp_family_sizes():
        pl = fit.predict(n, p_t)
        total = N * pl + floor
        if total <= target_infidelity:
            return SegmentPlan(L, L0, N, int(n), pl, total)
    raise ValueError("target infidelity unreachable with the available code sizes")


# output -------------------------------------------------------------------

def provenance(**extra) -> dict:
    return {"engine": "stabrep", "engine_version": __version__, **extra}


def table_to_csv(table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in table:
        w.writerow([p.code_id, p.n, repr(float(p.p_t)), p.trials, p.failures, repr(float(p.p_l)),
                    repr(float(p.ci_lo)), repr(float(p.ci_hi))])
    return buf.getvalue()


def fit_coverage(table, fit: FitParams) -> float:
    """Fraction of points whose Wilson interval contains the fitted curve."""
    pts = list(table)
    if not pts:
        return 1.0
    hit = sum(p.ci_lo <= fit.predict(p.n, p.p_t) <= p.ci_hi for p in pts)
    return hit / len(pts)


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def table_to_svg(table, fit: Optional[FitParams] = None, width: int = 640, height: int = 480) -> str:
    """Log-log plot of ``p_L`` versus ``p_t``, one polyline per code, optional fitted curves."""
    curves = SweepTable(list(table)).by_code()
    pts = [p for v in curves.values() for p in v if p.p_l > 0]
    ml, mr, mt, mb = 70, 150, 20, 50
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">', '<rect width="100%" height="100%" fill="white"/>']
    if pts:
        xs = [math.log10(p.p_t) for p in pts]
        ys = [math.log10(max(p.ci_lo, p.p_l / 10)) for p in pts] + [math.log10(p.ci_hi) for p in pts]
        x0, x1 = min(xs), max(xs)
        y0, y1 = math.floor(min(ys)), math.ceil(max(ys))
        if x1 == x0:
            x0, x1 = x0 - 0.1, x1 + 0.1
        if y1 == y0:
            y1 = y0 + 1

        def X(v):
            return ml + (math.log10(v) - x0) / (x1 - x0) * (width - ml - mr)

        def Y(v):
            return height - mb - (math.log10(max(v, 10**y0)) - y0) / (y1 - y0) * (height - mt - mb)

        lines.append(f'<line x1="{ml}" y1="{height - mb}" x2="{width - mr}" y2="{height - mb}" stroke="black"/>')
        lines.append(f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height - mb}" stroke="black"/>')
        for e in range(y0, y1 + 1):
            yy = Y(10.0**e)
            lines.append(f'<text x="{ml - 8}" y="{yy:.1f}" font-size="11" text-anchor="end">1e{e}</text>')
        for p in sorted({p.p_t for p in pts}):
            lines.append(f'<text x="{X(p):.1f}" y="{height - mb + 16}" font-size="10" '
                         f'text-anchor="middle">{p:.3g}</text>')
        lines.append(f'<text x="{(ml + width - mr) / 2:.0f}" y="{height - 10}" font-size="12" '
                     f'text-anchor="middle">p_t</text>')
        lines.append(f'<text x="16" y="{height / 2:.0f}" font-size="12" transform="rotate(-90 16 {height / 2:.0f})" '
                     f'text-anchor="middle">p_L</text>')
        for idx, (cid, cpts) in enumerate(curves.items()):
            col = _COLORS[idx % len(_COLORS)]
            good = [p for p in cpts if p.p_l > 0]
            coords = " ".join(f"{X(p.p_t):.1f},{Y(p.p_l):.1f}" for p in good)
            lines.append(f'<polyline class="data" data-code="{cid}" points="{coords}" fill="none" '
                         f'stroke="{col}" stroke-width="1.5"/>')
            for p in good:
                lines.append(f'<line x1="{X(p.p_t):.1f}" y1="{Y(p.ci_lo):.1f}" x2="{X(p.p_t):.1f}" '
                             f'y2="{Y(p.ci_hi):.1f}" stroke="{col}"/>')
            if fit is not None and good:
                n = good[0].n
                grid = np.exp(np.linspace(math.log(good[0].p_t), math.log(good[-1].p_t), 40))
                fc = " ".join(f"{X(g):.1f},{Y(fit.predict(n, g)):.1f}" for g in grid)
                lines.append(f'<polyline class="fit" data-code="{cid}" points="{fc}" fill="none" '
                             f'stroke="{col}" stroke-dasharray="4 3"/>')
            ly = mt + 18 * idx + 10
            lines.append(f'<line x1="{width - mr + 10}" y1="{ly}" x2="{width - mr + 30}" y2="{ly}" stroke="{col}"/>')
            lines.append(f'<text class="legend" x="{width - mr + 35}" y="{ly + 4}" font-size="11">'
                         f'{cid} (n={cpts[0].n})</text>')
    if fit is not None:
        lines.append(f"<!-- fit coverage {fit_coverage(table, fit):.3f} -->")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def emit(obj, fmt: str, path, *, fit: Optional[FitParams] = None, meta: Optional[dict] = None,
         min_coverage: Optional[float] = None) -> Path:
    """Write a table (csv/json/svg) or a fit (json) to ``path``.

    With ``fit`` and ``min_coverage`` set, the SVG is only written when the
    fitted curves pass through at least that fraction of the CI bars.
    """
    path = Path(path)
    if fmt == "csv":
        text = table_to_csv(obj)
    elif fmt == "json":
        body = obj.as_dict() if isinstance(obj, FitParams) else {"points": [_point_dict(p) | {
            "p_l": p.p_l, "ci_lo": p.ci_lo, "ci_hi": p.ci_hi} for p in obj]}
        text = json.dumps({**(meta or {}), "result": body}, indent=2, sort_keys=True) + "\n"
    elif fmt == "svg":
        if fit is not None and min_coverage is not None:
            cov = fit_coverage(obj, fit)
            if cov < min_coverage:
                raise ValueError(f"fitted curve covers only {cov:.0%} of CI bars (< {min_coverage:.0%})")
        text = table_to_svg(obj, fit)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    path.write_text(text)
    return path


__all__ = [
    "SweepPoint", "SweepTable", "FitParams", "FitError", "SegmentPlan", "wilson_interval", "run_trials",
    "sweep", "log_grid", "fit_threshold", "synthesize", "plan_code_size", "emit", "table_to_csv",
    "table_to_svg", "fit_coverage", "provenance", "hgp_family_sizes",
]
