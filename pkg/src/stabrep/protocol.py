"""Error-frame engine for distillation, repeater segments and chains.

All quantities are in the delta frame: ``ds`` and ``dt`` are flips of the
``XX`` and ``ZZ`` Bell outcomes relative to a noiseless run.  The noiseless
outcomes contribute nothing to the syndrome, so

    S    = H1 ds + H2 dt
    beta = sp(Z, e_hat) + Z1 ds + Z2 dt
    phi  = sp(X, e_hat) + X1 ds + X2 dt

and ``beta``/``phi`` are the logical flips left after Bob's correction.
The raw variants add the Y offsets ``r``, ``r^b``, ``r^p`` and take
absolute outcomes; they exist for cross-checks against the tableau oracle.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import numpy as np
import scipy.sparse as sp

from . import gf2
from .codes import StabilizerCode
from .gf2 import PauliVector
from .noise import ErrorFrame, NoiseModel, sample_bipartite


class Decoder(Protocol):
    def decode(self, syndrome) -> tuple[np.ndarray, bool]: ...


class ZeroDecoder:
    """Always guesses the identity; used for two-way distillation."""

    def __init__(self, code: StabilizerCode):
        self.n = code.n

    def decode(self, syndrome) -> tuple[np.ndarray, bool]:
        return np.zeros(2 * self.n, dtype=np.uint8), True


class _Mats:
    """Sparse copies of the code matrices used on the hot path."""

    def __init__(self, code: StabilizerCode):
        n = code.n
        h = code.h.to_array()
        lx = code.logical_x.to_array()
        lz = code.logical_z.to_array()
        self.n, self.k = n, code.k
        # S = H1 ds + H2 dt, i.e. H applied to (ds | dt)
        self.h = sp.csr_matrix(h.astype(np.int32))
        self.lz = sp.csr_matrix(lz.astype(np.int32))
        self.lx = sp.csr_matrix(lx.astype(np.int32))
        # sp(L, e_hat) for e_hat = (x | z) is L applied to (z | x)
        self.r = _y_offsets(h)
        self.rb = _y_offsets(lz)
        self.rp = _y_offsets(lx)


_CACHE: "weakref.WeakKeyDictionary[StabilizerCode, _Mats]" = weakref.WeakKeyDictionary()


def _mats(code: StabilizerCode) -> _Mats:
    m = _CACHE.get(code)
    if m is None:
        m = _CACHE[code] = _Mats(code)
    return m


def _y_offsets(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.uint8)
    n = m.shape[1] // 2
    return (np.count_nonzero(m[:, :n] & m[:, n:], axis=1) & 1).astype(np.uint8)


def _bits(v, n: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.uint8).reshape(-1)
    if v.shape[0] != n:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {n}")
    return v


def _apply(mat: sp.csr_matrix, v: np.ndarray) -> np.ndarray:
    return (np.asarray(mat @ v.astype(np.int32)).reshape(-1) & 1).astype(np.uint8)


def correction_vector_r(code: StabilizerCode) -> np.ndarray:
    """``r_i = sum_j H1(i,j) H2(i,j)``: parity of Y sites in each generator."""
    return _mats(code).r.copy()


def correction_vectors_logical(code: StabilizerCode) -> tuple[np.ndarray, np.ndarray]:
    """``(r^b, r^p)``: Y-site parities of the logical Z and logical X rows."""
    m = _mats(code)
    return m.rb.copy(), m.rp.copy()


def syndrome(code: StabilizerCode, s, t, raw: bool = False) -> np.ndarray:
    """``S = H1 s + H2 t`` (plus ``r`` when ``raw`` outcomes are given)."""
    m = _mats(code)
    s = _bits(s, m.n, "s")
    t = _bits(t, m.n, "t")
    out = _apply(m.h, np.concatenate([s, t]))
    return out ^ m.r if raw else out


def flips(code: StabilizerCode, estimate, s, t, raw: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Bit flips ``beta`` and phase flips ``phi`` from an estimate and outcomes."""
    m = _mats(code)
    n = m.n
    e = estimate.symplectic() if isinstance(estimate, PauliVector) else np.asarray(estimate, np.uint8)
    e = _bits(e, 2 * n, "estimate")
    s = _bits(s, n, "s")
    t = _bits(t, n, "t")
    # sp(L, e) + L1 s + L2 t = L . (z ^ s | x ^ t)
    v = np.concatenate([e[n:] ^ s, e[:n] ^ t])
    beta = _apply(m.lz, v)
    phi = _apply(m.lx, v)
    if raw:
        beta ^= m.rb
        phi ^= m.rp
    return beta, phi


@dataclass
class TrialResult:
    syndrome: np.ndarray
    estimate: np.ndarray
    beta: np.ndarray
    phi: np.ndarray
    accepted: bool = True
    logical_failure: bool = False
    decoder_ok: bool = True

    @property
    def estimate_pauli(self) -> PauliVector:
        return PauliVector.from_symplectic(self.estimate)


def _decode(code: StabilizerCode, frame: ErrorFrame, decoder: Decoder) -> TrialResult:
    synd = syndrome(code, frame.ds, frame.dt)
    est, ok = decoder.decode(synd)
    est = np.asarray(est, dtype=np.uint8)
    beta, phi = flips(code, est, frame.ds, frame.dt)
    return TrialResult(synd, est, beta, phi, True, False, bool(ok))


def repeater_segment(code: StabilizerCode, frame: ErrorFrame, decoder: Decoder) -> TrialResult:
    """One segment: Bob's frame contribution ``(beta^(r), phi^(r))``.

    In the delta frame these are also the residual logical flips, so the
    segment fails when either is nonzero.  A decoder that reports failure
    counts as a logical failure.
    """
    res = _decode(code, frame, decoder)
    res.logical_failure = bool(res.beta.any() or res.phi.any() or not res.decoder_ok)
    return res


def distill_one_way(code: StabilizerCode, frame: ErrorFrame, decoder: Decoder) -> TrialResult:
    """Decode-and-correct distillation; uncoded output errors add to the residual."""
    res = _decode(code, frame, decoder)
    bad = res.beta ^ frame.out_x
    bad_p = res.phi ^ frame.out_z
    res.logical_failure = bool(bad.any() or bad_p.any() or not res.decoder_ok)
    return res


def distill_two_way(code: StabilizerCode, frame: ErrorFrame) -> TrialResult:
    """Error-detecting distillation: keep the pairs only when ``S = 0``."""
    res = _decode(code, frame, ZeroDecoder(code))
    res.accepted = not res.syndrome.any()
    if res.accepted:
        res.logical_failure = bool((res.beta ^ frame.out_x).any() or (res.phi ^ frame.out_z).any())
    return res


@dataclass
class ChainFrame:
    betas: list = field(default_factory=list)
    phis: list = field(default_factory=list)

    @property
    def beta(self) -> np.ndarray:
        return chain_aggregate(list(zip(self.betas, self.phis)))[0]

    @property
    def phi(self) -> np.ndarray:
        return chain_aggregate(list(zip(self.betas, self.phis)))[1]


def chain_aggregate(frames: Sequence[tuple[np.ndarray, np.ndarray]]) -> tuple[np.ndarray, np.ndarray]:
    """XOR of the per-segment ``(beta, phi)`` contributions."""
    if not frames:
        raise ValueError("no frames to aggregate")
    k = len(frames[0][0])
    beta = np.zeros(k, dtype=np.uint8)
    phi = np.zeros(k, dtype=np.uint8)
    for b, p in frames:
        b = np.asarray(b, dtype=np.uint8)
        p = np.asarray(p, dtype=np.uint8)
        if b.shape != (k,) or p.shape != (k,):
            raise ValueError("all frames must have length k")
        beta ^= b
        phi ^= p
    return beta, phi


@dataclass
class ChainResult:
    frame: ChainFrame
    out_x: np.ndarray
    out_z: np.ndarray
    failure: bool
    segment_failures: int
    decoder_failures: int


def run_chain(code: StabilizerCode, segments: int, model: NoiseModel, decoder: Decoder,
              rng: np.random.Generator, include_end_nodes: bool = True) -> ChainResult:
    """One end-to-end trial over ``segments`` independently sampled segments.

    The chain fails when the XOR of all residual flips (plus the end nodes'
    uncoded output errors) is nonzero; the number of individually failing
    segments is reported alongside.
    """
    if segments < 1:
        raise ValueError("need at least one segment")
    frame = ChainFrame()
    out_x = np.zeros(code.k, dtype=np.uint8)
    out_z = np.zeros(code.k, dtype=np.uint8)
    seg_fail = dec_fail = 0
    for r in range(segments):
        left = include_end_nodes and r == 0
        right = include_end_nodes and r == segments - 1
        ef = sample_bipartite(model, code, rng, left_end=left, right_end=right)
        res = repeater_segment(code, ef, decoder)
        frame.betas.append(res.beta)
        frame.phis.append(res.phi)
        out_x ^= ef.out_x
        out_z ^= ef.out_z
        seg_fail += res.logical_failure
        dec_fail += not res.decoder_ok
    beta, phi = chain_aggregate(list(zip(frame.betas, frame.phis)))
    failed = bool((beta ^ out_x).any() or (phi ^ out_z).any() or dec_fail)
    return ChainResult(frame, out_x, out_z, failed, seg_fail, dec_fail)


def frame_from_paulis(code: StabilizerCode, error_a=None, error_b=None, flips_a=None, flips_b=None) -> ErrorFrame:
    """Delta frame produced by Paulis on the transmitted qubits and outcome flips ``(ds, dt)``."""
    n = code.n
    x = np.zeros(n, dtype=np.uint8)
    z = np.zeros(n, dtype=np.uint8)
    for p in (error_a, error_b):
        if p is None:
            continue
        pv = PauliVector.from_string(p) if isinstance(p, str) else p
        if not isinstance(pv, PauliVector):
            pv = PauliVector.from_symplectic(pv)
        x ^= pv.x
        z ^= pv.z
    for f in (flips_a, flips_b):
        if f is None:
            continue
        z ^= _bits(f[0], n, "ds")
        x ^= _bits(f[1], n, "dt")
    return ErrorFrame(z, x, np.zeros(code.k, np.uint8), np.zeros(code.k, np.uint8))


__all__ = [
    "Decoder", "ZeroDecoder", "TrialResult", "ChainFrame", "ChainResult", "correction_vector_r",
    "correction_vectors_logical", "syndrome", "flips", "distill_one_way", "distill_two_way",
    "repeater_segment", "chain_aggregate", "run_chain", "frame_from_paulis",
]
