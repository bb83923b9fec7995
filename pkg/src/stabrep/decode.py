"""Syndrome decoders.

``LookupDecoder`` tabulates minimum-weight coset leaders for small codes.
``BPOSDDecoder`` decodes the X and Z sectors of a CSS code independently with
belief propagation, falling back to ordered-statistics decoding (OSD) when BP
does not reproduce the syndrome.

All decoders return an estimate as a length-``2n`` symplectic row ``(x | z)``
whose syndrome ``sp(H, e)`` is what was asked for.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numba
import numpy as np

from . import gf2
from .codes import StabilizerCode

LOOKUP_CUTOFF = 12
KINDS = ("lookup", "bp", "bp-osd")
BP_VARIANTS = ("min-sum", "sum-product")


class NotCSSError(ValueError):
    """BP decoding requested for a code without an X/Z sector split."""


@dataclass(frozen=True)
class DecoderConfig:
    kind: str = "bp-osd"
    bp_iterations: int = 50
    bp_variant: str = "min-sum"
    ms_scaling: float = 0.625
    osd_order: int = 0
    # depolarizing rate used for priors; None means "match the channel's p_t"
    prior_p: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"decoder kind must be one of {KINDS}, got {self.kind!r}")
        if self.bp_variant not in BP_VARIANTS:
            raise ValueError(f"bp_variant must be one of {BP_VARIANTS}")
        if self.bp_iterations < 1:
            raise ValueError("bp_iterations must be >= 1")
        if self.osd_order < 0:
            raise ValueError("osd_order must be >= 0")

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "DecoderConfig":
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


def syndrome_of(code: StabilizerCode, e) -> np.ndarray:
    """``sp(H, e)`` for a symplectic row or PauliVector ``e``."""
    v = e.symplectic() if isinstance(e, gf2.PauliVector) else np.asarray(e, dtype=np.uint8)
    return gf2.symplectic_matrix(code.h.to_array(), v.reshape(1, -1)).reshape(-1)


def _syndrome_ints(synd: np.ndarray) -> np.ndarray:
    m = synd.shape[1]
    weights = (1 << np.arange(m, dtype=np.uint64)).astype(np.uint64)
    return (synd.astype(np.uint64) * weights).sum(axis=1) if m else np.zeros(synd.shape[0], np.uint64)


class LookupDecoder:
    """Minimum-weight coset-leader table built by enumerating Paulis in increasing weight.

    Ties go to the first Pauli met: lower weight, then the lexicographically
    first support, then X < Y < Z site by site.
    """

    def __init__(self, code: StabilizerCode, cutoff: int = LOOKUP_CUTOFF):
        if code.n > cutoff:
            raise ValueError(f"lookup decoding limited to n <= {cutoff}, code has n = {code.n}")
        self.code = code
        self.table = self._build(code)

    @staticmethod
    def _build(code: StabilizerCode) -> dict[int, np.ndarray]:
        n = code.n
        h = code.h.to_array()
        m = h.shape[0]
        target = 2**m
        table: dict[int, np.ndarray] = {0: np.zeros(2 * n, dtype=np.uint8)}
        for w in range(1, n + 1):
            if len(table) == target:
                break
            types = np.array(list(itertools.product(range(3), repeat=w)), dtype=np.int64)
            tx = (types <= 1).astype(np.uint8)
            tz = (types >= 1).astype(np.uint8)
            for supp in itertools.combinations(range(n), w):
                cols = list(supp)
                cands = np.zeros((types.shape[0], 2 * n), dtype=np.uint8)
                cands[:, cols] = tx
                cands[:, [c + n for c in cols]] = tz
                keys = _syndrome_ints(gf2.symplectic_matrix(cands, h)) if m else np.zeros(len(cands), np.uint64)
                for key, cand in zip(keys.tolist(), cands):
                    if key not in table:
                        table[key] = cand
        return table

    def decode(self, syndrome) -> tuple[np.ndarray, bool]:
        s = np.asarray(syndrome, dtype=np.uint8).reshape(1, -1)
        if s.shape[1] != self.code.h.rows:
            raise ValueError(f"syndrome length {s.shape[1]} != {self.code.h.rows}")
        key = int(_syndrome_ints(s)[0]) if s.shape[1] else 0
        est = self.table.get(key)
        if est is None:
            return np.zeros(2 * self.code.n, dtype=np.uint8), False
        return est.copy(), True


def decode_lookup(code: StabilizerCode, syndrome) -> np.ndarray:
    return LookupDecoder(code).decode(syndrome)[0]


# belief propagation -------------------------------------------------------

@numba.njit(cache=True)
def _bp_kernel(chk_ptr, edge_var, var_ptr, var_edge, syndrome, prior, max_iter, variant, alpha):
    m = chk_ptr.shape[0] - 1
    n = var_ptr.shape[0] - 1
    E = edge_var.shape[0]
    q = np.empty(E)
    r = np.zeros(E)
    for e in range(E):
        q[e] = prior[edge_var[e]]
    post = prior.copy()
    hard = np.zeros(n, dtype=np.uint8)
    for v in range(n):
        hard[v] = 1 if prior[v] < 0 else 0
    for it in range(max_iter):
        for c in range(m):
            a, b = chk_ptr[c], chk_ptr[c + 1]
            s0 = -1.0 if syndrome[c] else 1.0
            if variant == 0:
                sgn = s0
                min1 = np.inf
                min2 = np.inf
                arg = -1
                for e in range(a, b):
                    val = q[e]
                    mag = abs(val)
                    if val < 0:
                        sgn = -sgn
                    if mag < min1:
                        min2 = min1
                        min1 = mag
                        arg = e
                    elif mag < min2:
                        min2 = mag
                for e in range(a, b):
                    se = -sgn if q[e] < 0 else sgn
                    mag = min2 if e == arg else min1
                    r[e] = alpha * se * mag
            else:
                for e in range(a, b):
                    prod = s0
                    for f in range(a, b):
                        if f != e:
                            prod *= math.tanh(0.5 * q[f])
                    if prod > 0.999999999999:
                        prod = 0.999999999999
                    elif prod < -0.999999999999:
                        prod = -0.999999999999
                    r[e] = 2.0 * math.atanh(prod)
        for v in range(n):
            tot = prior[v]
            for i in range(var_ptr[v], var_ptr[v + 1]):
                tot += r[var_edge[i]]
            post[v] = tot
            for i in range(var_ptr[v], var_ptr[v + 1]):
                e = var_edge[i]
                q[e] = tot - r[e]
            hard[v] = 1 if tot < 0 else 0
        ok = True
        for c in range(m):
            par = 0
            for e in range(chk_ptr[c], chk_ptr[c + 1]):
                par ^= hard[edge_var[e]]
            if par != syndrome[c]:
                ok = False
                break
        if ok:
            return hard, post, True, it + 1
    return hard, post, False, max_iter


@numba.njit(cache=True)
def _osd_kernel(chk_ptr, edge_var, n, syndrome, reliability, cost, order_l):
    """OSD-E: eliminate columns in order of decreasing error likelihood, then sweep
    all 2**order_l patterns on the most likely non-pivot columns."""
    m = chk_ptr.shape[0] - 1
    order = np.argsort(reliability, kind="mergesort")
    pos = np.empty(n, dtype=np.int64)
    for j in range(n):
        pos[order[j]] = j
    ncol = n + 1
    nw = (ncol + 63) // 64
    words = np.zeros((m, nw), dtype=np.uint64)
    one = np.uint64(1)
    for c in range(m):
        for e in range(chk_ptr[c], chk_ptr[c + 1]):
            p = pos[edge_var[e]]
            words[c, p >> 6] |= one << np.uint64(p & 63)
        if syndrome[c]:
            words[c, n >> 6] |= one << np.uint64(n & 63)
    piv_pos = np.empty(m, dtype=np.int64)
    is_piv = np.zeros(n, dtype=np.bool_)
    rank = 0
    for j in range(n):
        if rank == m:
            break
        w = j >> 6
        bit = one << np.uint64(j & 63)
        pr = -1
        for rr in range(rank, m):
            if words[rr, w] & bit:
                pr = rr
                break
        if pr < 0:
            continue
        if pr != rank:
            for t in range(nw):
                tmp = words[pr, t]
                words[pr, t] = words[rank, t]
                words[rank, t] = tmp
        for rr in range(m):
            if rr != rank and (words[rr, w] & bit):
                for t in range(nw):
                    words[rr, t] ^= words[rank, t]
        piv_pos[rank] = j
        is_piv[j] = True
        rank += 1
    sw = n >> 6
    sbit = one << np.uint64(n & 63)
    consistent = True
    for rr in range(rank, m):
        if words[rr, sw] & sbit:
            consistent = False
    x = np.zeros(n, dtype=np.uint8)
    for i in range(rank):
        if words[i, sw] & sbit:
            x[order[piv_pos[i]]] = 1
    if order_l > 0 and rank < n:
        free = np.empty(order_l, dtype=np.int64)
        nf = 0
        for j in range(n):
            if not is_piv[j]:
                free[nf] = j
                nf += 1
                if nf == order_l:
                    break
        best_cost = 0.0
        for v in range(n):
            if x[v]:
                best_cost += cost[v]
        trial = np.zeros(n, dtype=np.uint8)
        for pat in range(1, 1 << nf):
            for v in range(n):
                trial[v] = 0
            tc = 0.0
            for l in range(nf):
                if (pat >> l) & 1:
                    trial[order[free[l]]] = 1
                    tc += cost[order[free[l]]]
            for i in range(rank):
                bitv = 1 if (words[i, sw] & sbit) else 0
                for l in range(nf):
                    if (pat >> l) & 1:
                        fj = free[l]
                        if (words[i, fj >> 6] >> np.uint64(fj & 63)) & one:
                            bitv ^= 1
                if bitv:
                    trial[order[piv_pos[i]]] = 1
                    tc += cost[order[piv_pos[i]]]
            if tc < best_cost:
                best_cost = tc
                for v in range(n):
                    x[v] = trial[v]
    return x, consistent


class _Sector:
    """Tanner graph of one CSS sector: ``rows`` of the full syndrome, estimating the ``part`` half."""

    def __init__(self, hmat: np.ndarray, rows: np.ndarray, part: str):
        self.h = hmat
        self.rows = rows
        self.part = part
        m, n = hmat.shape
        self.n = n
        cs, vs = np.nonzero(hmat)  # sorted by check
        self.edge_var = vs.astype(np.int64)
        self.chk_ptr = np.searchsorted(cs, np.arange(m + 1)).astype(np.int64)
        by_var = np.argsort(vs, kind="mergesort")
        self.var_edge = by_var.astype(np.int64)
        self.var_ptr = np.searchsorted(vs[by_var], np.arange(n + 1)).astype(np.int64)


def css_sectors(code: StabilizerCode) -> list[_Sector]:
    """Split ``H`` rows into X-type and Z-type checks; raises NotCSSError otherwise."""
    h = code.h.to_array()
    n = code.n
    has_x = h[:, :n].any(axis=1)
    has_z = h[:, n:].any(axis=1)
    if np.any(has_x & has_z):
        raise NotCSSError(f"{code.name} has mixed-type stabilizers; BP decoding needs a CSS code")
    xr = np.flatnonzero(has_x)
    zr = np.flatnonzero(has_z)
    # X checks see Z errors, Z checks see X errors
    return [_Sector(h[xr, :n], xr, "z"), _Sector(h[zr, n:], zr, "x")]


class BPOSDDecoder:
    """Sector-wise BP with optional OSD post-processing for CSS codes."""

    def __init__(self, code: StabilizerCode, config: DecoderConfig = DecoderConfig(), p: Optional[float] = None):
        self.code = code
        self.config = config
        self.sectors = css_sectors(code)
        rate = config.prior_p if config.prior_p is not None else p
        if rate is None:
            raise ValueError("BP decoding needs a prior error rate (p or config.prior_p)")
        # X-type (or Z-type) marginal of depolarizing noise
        marg = min(max(2.0 * rate / 3.0, 1e-12), 0.5 - 1e-12)
        self.marginal = marg
        self.prior_llr = math.log((1.0 - marg) / marg)
        self.use_osd = config.kind == "bp-osd"
        self.stats = {"bp_converged": 0, "osd_calls": 0, "decodes": 0}

    def _decode_sector(self, sec: _Sector, s: np.ndarray) -> tuple[np.ndarray, bool, np.ndarray]:
        if not s.any():
            return np.zeros(sec.n, np.uint8), True, np.full(sec.n, self.prior_llr)
        prior = np.full(sec.n, self.prior_llr)
        variant = 0 if self.config.bp_variant == "min-sum" else 1
        hard, post, conv, _ = _bp_kernel(sec.chk_ptr, sec.edge_var, sec.var_ptr, sec.var_edge,
                                         s, prior, self.config.bp_iterations, variant, self.config.ms_scaling)
        return hard, conv, post

    def _osd_sector(self, sec: _Sector, s: np.ndarray, post: np.ndarray) -> tuple[np.ndarray, bool]:
        cost = np.full(sec.n, self.prior_llr)
        x, ok = _osd_kernel(sec.chk_ptr, sec.edge_var, sec.n, s, post, cost, self.config.osd_order)
        return x, ok

    def decode(self, syndrome) -> tuple[np.ndarray, bool]:
        s = np.asarray(syndrome, dtype=np.uint8)
        n = self.code.n
        est = np.zeros(2 * n, dtype=np.uint8)
        success = True
        self.stats["decodes"] += 1
        for sec in self.sectors:
            ss = s[sec.rows].copy()
            x, conv, post = self._decode_sector(sec, ss)
            if conv:
                self.stats["bp_converged"] += 1
            elif self.use_osd:
                self.stats["osd_calls"] += 1
                x, ok = self._osd_sector(sec, ss, post)
                success &= ok
            else:
                success = False
            if sec.part == "x":
                est[:n] = x
            else:
                est[n:] = x
        return est, success

    def bp(self, syndrome) -> tuple[np.ndarray, bool, dict]:
        """BP alone: ``(estimate, converged, posteriors by sector part)``."""
        s = np.asarray(syndrome, dtype=np.uint8)
        n = self.code.n
        est = np.zeros(2 * n, dtype=np.uint8)
        conv_all = True
        posts = {}
        for sec in self.sectors:
            x, conv, post = self._decode_sector(sec, s[sec.rows].copy())
            conv_all &= conv
            posts[sec.part] = post
            if sec.part == "x":
                est[:n] = x
            else:
                est[n:] = x
        return est, conv_all, posts

    def osd(self, syndrome, posteriors: dict) -> np.ndarray:
        s = np.asarray(syndrome, dtype=np.uint8)
        n = self.code.n
        est = np.zeros(2 * n, dtype=np.uint8)
        for sec in self.sectors:
            x, _ = self._osd_sector(sec, s[sec.rows].copy(), np.asarray(posteriors[sec.part], dtype=float))
            if sec.part == "x":
                est[:n] = x
            else:
                est[n:] = x
        return est


def decode_bp(code: StabilizerCode, syndrome, config: DecoderConfig, p: Optional[float] = None):
    """Run BP only; returns ``(estimate, converged)``."""
    est, conv, _ = BPOSDDecoder(code, config, p).bp(syndrome)
    return est, conv


def decode_osd(code: StabilizerCode, syndrome, soft_marginals: dict, config: DecoderConfig,
               p: Optional[float] = None) -> np.ndarray:
    """OSD on given per-sector soft values (log-likelihood ratios keyed ``'x'`` / ``'z'``)."""
    return BPOSDDecoder(code, config, p).osd(syndrome, soft_marginals)


def make_decoder(code: StabilizerCode, config: DecoderConfig, p: Optional[float] = None,
                 fallback: bool = True):
    """Build the configured decoder; non-CSS codes fall back to lookup when ``fallback``."""
    if config.kind == "lookup":
        return LookupDecoder(code)
    try:
        return BPOSDDecoder(code, config, p)
    except NotCSSError:
        if not fallback:
            raise
        return LookupDecoder(code)
