"""Exact stabilizer-state simulation used as the ground-truth oracle.

States are kept as an Aaronson-Gottesman tableau (destabilizers and
stabilizers with sign bits).  Only Pauli measurements and Pauli gates are
needed: resource states are prepared by measuring their generators on
``|0...0>`` and then fixing signs with one Pauli correction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numba
import numpy as np

from . import gf2
from .codes import StabilizerCode
from .gf2 import PauliVector

MAX_QUBITS = 64


@numba.njit(cache=True)
def _phase(x1, z1, x2, z2):
    # power of i picked up by one site when Pauli (x1,z1) multiplies (x2,z2)
    if x1 == 1 and z1 == 1:
        return z2 - x2
    if x1 == 1:
        return z2 * (2 * x2 - 1)
    if z1 == 1:
        return x2 * (1 - 2 * z2)
    return 0


@numba.njit(cache=True)
def _rowsum_kernel(x, z, r, targets, src):
    q = x.shape[1]
    for t in targets:
        g = 2 * r[t] + 2 * r[src]
        for j in range(q):
            g += _phase(np.int64(x[src, j]), np.int64(z[src, j]), np.int64(x[t, j]), np.int64(z[t, j]))
            x[t, j] ^= x[src, j]
            z[t, j] ^= z[src, j]
        r[t] = 1 if g % 4 == 2 else 0


@numba.njit(cache=True)
def _accumulate_kernel(x, z, r, rows):
    q = x.shape[1]
    sx = np.zeros(q, dtype=np.int64)
    sz = np.zeros(q, dtype=np.int64)
    sr = 0
    for i in rows:
        g = 2 * sr + 2 * r[i]
        for j in range(q):
            g += _phase(np.int64(x[i, j]), np.int64(z[i, j]), sx[j], sz[j])
            sx[j] ^= x[i, j]
            sz[j] ^= z[i, j]
        sr = 1 if g % 4 == 2 else 0
    return sr


class Tableau:
    """Mutable stabilizer state on ``q`` qubits, initially ``|0...0>``."""

    def __init__(self, q: int, rng: Optional[np.random.Generator] = None, max_qubits: int = MAX_QUBITS):
        if q > max_qubits:
            raise ValueError(f"tableau limited to {max_qubits} qubits, asked for {q}")
        self.q = q
        self.x = np.zeros((2 * q, q), dtype=np.uint8)
        self.z = np.zeros((2 * q, q), dtype=np.uint8)
        self.r = np.zeros(2 * q, dtype=np.uint8)
        idx = np.arange(q)
        self.x[idx, idx] = 1  # destabilizers X_i
        self.z[q + idx, idx] = 1  # stabilizers Z_i
        self.rng = rng if rng is not None else np.random.default_rng()

    # -- helpers ----------------------------------------------------------
    def _pauli(self, qubits: Sequence[int], pauli) -> tuple[np.ndarray, np.ndarray]:
        """Expand a Pauli given on ``qubits`` to full-width (x, z) rows."""
        if isinstance(pauli, str):
            pauli = PauliVector.from_string(pauli)
        qubits = list(qubits)
        if pauli.n != len(qubits):
            raise ValueError("Pauli length does not match the qubit list")
        if any(not (0 <= i < self.q) for i in qubits):
            raise IndexError(f"qubit index out of range for {self.q} qubits")
        if len(set(qubits)) != len(qubits):
            raise ValueError("repeated qubit index")
        px = np.zeros(self.q, dtype=np.uint8)
        pz = np.zeros(self.q, dtype=np.uint8)
        px[qubits] = pauli.x
        pz[qubits] = pauli.z
        return px, pz

    def _anticommuting_rows(self, px, pz) -> np.ndarray:
        return ((self.x.astype(np.int64) @ pz + self.z.astype(np.int64) @ px) & 1).astype(bool)

    def _rowsum_many(self, targets: np.ndarray, src: int) -> None:
        """Row ``t`` <- row ``src`` * row ``t`` for every ``t`` in ``targets``."""
        if targets.size:
            _rowsum_kernel(self.x, self.z, self.r, targets.astype(np.int64), src)

    def _accumulate(self, rows: np.ndarray) -> int:
        """Sign bit of the product of the given rows."""
        return int(_accumulate_kernel(self.x, self.z, self.r, rows.astype(np.int64)))

    # -- public operations -------------------------------------------------
    def measure(self, qubits: Sequence[int], pauli) -> int:
        """Measure a Pauli product; returns 0 for eigenvalue +1 and 1 for -1."""
        px, pz = self._pauli(qubits, pauli)
        q = self.q
        anti = self._anticommuting_rows(px, pz)
        stab_hits = np.flatnonzero(anti[q:]) + q
        if stab_hits.size:
            p = int(stab_hits[0])
            others = np.flatnonzero(anti)
            others = others[others != p]
            self._rowsum_many(others, p)
            self.x[p - q] = self.x[p]
            self.z[p - q] = self.z[p]
            self.r[p - q] = self.r[p]
            outcome = int(self.rng.integers(2))
            self.x[p] = px
            self.z[p] = pz
            self.r[p] = outcome
            return outcome
        return self._deterministic(anti)

    def _deterministic(self, anti: np.ndarray) -> int:
        q = self.q
        return self._accumulate(np.flatnonzero(anti[:q]) + q)

    def peek(self, qubits: Sequence[int], pauli) -> Optional[int]:
        """Outcome of measuring ``pauli`` if determined, else ``None``; state untouched."""
        px, pz = self._pauli(qubits, pauli)
        anti = self._anticommuting_rows(px, pz)
        if anti[self.q:].any():
            return None
        return self._deterministic(anti)

    def apply_pauli(self, qubits: Sequence[int], pauli) -> None:
        px, pz = self._pauli(qubits, pauli)
        self.r ^= self._anticommuting_rows(px, pz).astype(np.uint8)

    def stabilizers(self) -> list[tuple[int, PauliVector]]:
        q = self.q
        return [(int(self.r[i]), PauliVector(self.x[i].copy(), self.z[i].copy())) for i in range(q, 2 * q)]

    def check_invariants(self) -> bool:
        """Stabilizers commute, destabilizer pairs anticommute, full rank."""
        sym = np.hstack([self.x, self.z])
        gram = gf2.symplectic_matrix(sym, sym)
        q = self.q
        ok = not gram[q:, q:].any() and not gram[:q, :q].any()
        ok &= np.array_equal(gram[:q, q:], np.eye(q, dtype=np.uint8))
        return bool(ok and gf2.rank(sym[q:]) == q)


def prepare_from_generators(t: Tableau, qubits: Sequence[int], gens: np.ndarray) -> None:
    """Drive the listed qubits (all in ``|0>``, unentangled) into the +1 eigenstate of ``gens``.

    ``gens`` is a full set of independent commuting generators given as
    symplectic rows on ``len(qubits)`` qubits.
    """
    m = len(qubits)
    gens = np.asarray(gens, dtype=np.uint8)
    if gens.shape != (m, 2 * m):
        raise ValueError(f"need {m} generators on {m} qubits, got {gens.shape}")
    outcomes = np.array([t.measure(qubits, PauliVector.from_symplectic(g)) for g in gens], dtype=np.uint8)
    if outcomes.any():
        # Pauli anticommuting with exactly the generators that came out -1
        fix = gf2.solve(gf2.swap_halves(gens), outcomes)
        t.apply_pauli(qubits, PauliVector.from_symplectic(fix))


def _embed(row: np.ndarray, n: int, offset: int, width: int) -> np.ndarray:
    """Place an ``n``-qubit symplectic row at ``offset`` inside a ``width``-qubit row."""
    out = np.zeros(2 * width, dtype=np.uint8)
    out[offset : offset + n] = row[:n]
    out[width + offset : width + offset + n] = row[n:]
    return out


def _single(width: int, qubit: int, kind: str) -> np.ndarray:
    out = np.zeros(2 * width, dtype=np.uint8)
    if kind in "XY":
        out[qubit] = 1
    if kind in "ZY":
        out[width + qubit] = 1
    return out


def distillation_generators(code: StabilizerCode) -> np.ndarray:
    """Generators ``{g_i, Xbar_j X_{n+j}, Zbar_j Z_{n+j}}`` on ``n + k`` qubits."""
    n, k = code.n, code.k
    w = n + k
    rows = [_embed(g, n, 0, w) for g in code.h.to_array()]
    for j in range(k):
        rows.append(_embed(code.logical_x.to_array()[j], n, 0, w) ^ _single(w, n + j, "X"))
        rows.append(_embed(code.logical_z.to_array()[j], n, 0, w) ^ _single(w, n + j, "Z"))
    return np.array(rows, dtype=np.uint8).reshape(w, 2 * w)


def repeater_generators(code: StabilizerCode) -> np.ndarray:
    """Generators ``{g_i, g_i', Xbar_j Xbar_j', Zbar_j Zbar_j'}`` on ``2n`` qubits."""
    n, k = code.n, code.k
    w = 2 * n
    h = code.h.to_array()
    rows = [_embed(g, n, 0, w) for g in h] + [_embed(g, n, n, w) for g in h]
    for j in range(k):
        lx = code.logical_x.to_array()[j]
        lz = code.logical_z.to_array()[j]
        rows.append(_embed(lx, n, 0, w) ^ _embed(lx, n, n, w))
        rows.append(_embed(lz, n, 0, w) ^ _embed(lz, n, n, w))
    return np.array(rows, dtype=np.uint8).reshape(w, 2 * w)


def prepare_distillation_resource(code: StabilizerCode, rng: Optional[np.random.Generator] = None) -> Tableau:
    t = Tableau(code.n + code.k, rng)
    prepare_from_generators(t, range(t.q), distillation_generators(code))
    return t


def prepare_repeater_resource(code: StabilizerCode, rng: Optional[np.random.Generator] = None) -> Tableau:
    t = Tableau(2 * code.n, rng)
    prepare_from_generators(t, range(t.q), repeater_generators(code))
    return t


def prepare_bell_pair(t: Tableau, a: int, b: int) -> None:
    prepare_from_generators(t, [a, b], np.array([[1, 1, 0, 0], [0, 0, 1, 1]], dtype=np.uint8))


def bell_measure(t: Tableau, qa: int, qb: int) -> tuple[int, int]:
    """Measure ``X_a X_b`` then ``Z_a Z_b``; returns the parities ``(s, t)``."""
    if qa == qb:
        raise ValueError("Bell measurement needs two distinct qubits")
    s = t.measure([qa, qb], "XX")
    tt = t.measure([qa, qb], "ZZ")
    return s, tt


def holds(t: Tableau, qubits: Sequence[int], gens: np.ndarray) -> bool:
    """True if every generator is a deterministic +1 observable of the state."""
    return all(t.peek(qubits, PauliVector.from_symplectic(g)) == 0 for g in gens)


def fidelity_with_bell_pairs(t: Tableau, pairs: Sequence[tuple[int, int]]) -> float:
    """Fidelity of the reduced state on ``pairs`` with ``|Phi+>`` on each pair.

    ``F = 4^-k sum_{P in G} <P>`` over the group ``G`` generated by the pairs'
    ``XX`` and ``ZZ``; for a stabilizer state each term is 0 or +-1.
    """
    k = len(pairs)
    qubits = [q for p in pairs for q in p]
    gens = []
    for j in range(k):
        for kind in ("XX", "ZZ"):
            row = np.zeros(4 * k, dtype=np.uint8)
            pv = PauliVector.from_string(kind)
            row[[2 * j, 2 * j + 1]] = pv.x
            row[[2 * k + 2 * j, 2 * k + 2 * j + 1]] = pv.z
            gens.append(row)
    gens = np.array(gens, dtype=np.uint8)
    total = 0.0
    for mask in itertools.product((0, 1), repeat=2 * k):
        sel = np.array(mask, dtype=bool)
        p = np.bitwise_xor.reduce(gens[sel], axis=0) if sel.any() else np.zeros(4 * k, np.uint8)
        # the group element's sign: products of XX and ZZ on one pair give -YY
        sign = 0
        for j in range(k):
            if mask[2 * j] and mask[2 * j + 1]:
                sign ^= 1
        val = t.peek(qubits, PauliVector.from_symplectic(p))
        if val is not None:
            total += 1.0 if (val ^ sign) == 0 else -1.0
    return total / 4**k


# -- protocol reference runs -------------------------------------------------

@dataclass
class OracleRecord:
    s_a: np.ndarray
    t_a: np.ndarray
    s_b: np.ndarray
    t_b: np.ndarray
    syndrome: np.ndarray
    estimate: np.ndarray
    beta_applied: np.ndarray
    phi_applied: np.ndarray
    residual_beta: np.ndarray
    residual_phi: np.ndarray
    fidelity: float
    extra: dict = field(default_factory=dict)

    @property
    def s(self) -> np.ndarray:
        return self.s_a ^ self.s_b

    @property
    def t(self) -> np.ndarray:
        return self.t_a ^ self.t_b

    @property
    def failure(self) -> bool:
        return bool(self.residual_beta.any() or self.residual_phi.any())


def _y_counts(m: np.ndarray, n: int) -> np.ndarray:
    m = np.asarray(m, dtype=np.uint8).reshape(-1, 2 * n)
    return (np.count_nonzero(m[:, :n] & m[:, n:], axis=1) & 1).astype(np.uint8)


def raw_flips(code: StabilizerCode, estimate: np.ndarray, s: np.ndarray, t: np.ndarray):
    """Bob's bit and phase flips from absolute outcomes, including the Y offsets."""
    n = code.n
    lx, lz = code.logical_x.to_array(), code.logical_z.to_array()
    est = np.asarray(estimate, dtype=np.uint8).reshape(1, -1)
    beta = gf2.symplectic_matrix(lz, est).reshape(-1) ^ gf2.matmul(lz[:, :n], s) ^ gf2.matmul(lz[:, n:], t) ^ _y_counts(lz, n)
    phi = gf2.symplectic_matrix(lx, est).reshape(-1) ^ gf2.matmul(lx[:, :n], s) ^ gf2.matmul(lx[:, n:], t) ^ _y_counts(lx, n)
    return beta.astype(np.uint8), phi.astype(np.uint8)


def raw_syndrome(code: StabilizerCode, s: np.ndarray, t: np.ndarray) -> np.ndarray:
    n = code.n
    h = code.h.to_array()
    return (gf2.matmul(h[:, :n], s) ^ gf2.matmul(h[:, n:], t) ^ _y_counts(h, n)).astype(np.uint8)


def _as_pauli(p, n: int) -> PauliVector:
    if p is None:
        return PauliVector.identity(n)
    if isinstance(p, str):
        return PauliVector.from_string(p)
    if isinstance(p, PauliVector):
        return p
    return PauliVector.from_symplectic(p)


def _flip_bits(f, n: int) -> tuple[np.ndarray, np.ndarray]:
    if f is None:
        return np.zeros(n, np.uint8), np.zeros(n, np.uint8)
    ds, dt = f
    return np.asarray(ds, np.uint8), np.asarray(dt, np.uint8)


def equivalent_error(code: StabilizerCode, error_a=None, error_b=None, flips_a=None, flips_b=None,
                     resource_error_a=None, resource_error_b=None) -> np.ndarray:
    """The code-space Pauli ``(x = dt | z = ds)`` equivalent to all injected faults."""
    n = code.n
    x = np.zeros(n, np.uint8)
    z = np.zeros(n, np.uint8)
    for p in (error_a, error_b, resource_error_a, resource_error_b):
        pv = _as_pauli(p, n)
        x ^= pv.x
        z ^= pv.z
    for f in (flips_a, flips_b):
        ds, dt = _flip_bits(f, n)
        z ^= ds
        x ^= dt
    return np.concatenate([x, z])


Estimator = Callable[[np.ndarray], np.ndarray]


def run_protocol_reference(code: StabilizerCode, error_a=None, error_b=None, *, mode: str = "distill",
                           flips_a=None, flips_b=None, resource_error_a=None, resource_error_b=None,
                           decoder: Optional[Estimator] = None, rng: Optional[np.random.Generator] = None,
                           apply_correction: bool = True) -> OracleRecord:
    """Run one segment of the protocol by exact simulation.

    ``mode="distill"``: both parties hold ``(n+k)``-qubit distillation
    resources and end with ``k`` physical Bell pairs.  ``mode="repeater-segment"``:
    both hold ``2n``-qubit repeater resources; Alice's left block and Bob's
    right block end up sharing ``k`` logical Bell pairs.

    ``error_a`` / ``error_b`` act on the ``n`` transmitted qubits of each
    party, ``resource_error_*`` on the interfacing resource qubits, and
    ``flips_*`` = ``(ds, dt)`` flip the recorded Bell outcomes.  ``decoder``
    maps the syndrome to an estimate; by default the estimate is the true
    equivalent error (perfect knowledge).
    """
    if mode not in ("distill", "repeater-segment"):
        raise ValueError(f"unknown mode {mode!r}")
    n, k = code.n, code.k
    rng = rng if rng is not None else np.random.default_rng()
    res = n + k if mode == "distill" else 2 * n
    q = 2 * res + 2 * n
    t = Tableau(q, rng)
    a0, b0, in0 = 0, res, 2 * res
    gens = distillation_generators(code) if mode == "distill" else repeater_generators(code)
    prepare_from_generators(t, range(a0, a0 + res), gens)
    prepare_from_generators(t, range(b0, b0 + res), gens)
    for i in range(n):
        prepare_bell_pair(t, in0 + 2 * i, in0 + 2 * i + 1)
    in_a = [in0 + 2 * i for i in range(n)]
    in_b = [in0 + 2 * i + 1 for i in range(n)]
    if mode == "distill":
        code_a = list(range(a0, a0 + n))
        code_b = list(range(b0, b0 + n))
        out_a = [a0 + n + j for j in range(k)]
        out_b = [b0 + n + j for j in range(k)]
    else:
        # Alice relays with her right block; Bob receives on his left block
        code_a = list(range(a0 + n, a0 + 2 * n))
        code_b = list(range(b0, b0 + n))
        out_a = list(range(a0, a0 + n))
        out_b = list(range(b0 + n, b0 + 2 * n))
    for qs, err in ((in_a, error_a), (in_b, error_b), (code_a, resource_error_a), (code_b, resource_error_b)):
        pv = _as_pauli(err, n)
        if pv.n != n:
            raise ValueError(f"injected error must act on {n} qubits, got {pv.n}")
        if pv.weight:
            t.apply_pauli(qs, pv)
    s_a = np.zeros(n, np.uint8)
    t_a = np.zeros(n, np.uint8)
    s_b = np.zeros(n, np.uint8)
    t_b = np.zeros(n, np.uint8)
    for i in range(n):
        s_a[i], t_a[i] = bell_measure(t, in_a[i], code_a[i])
        s_b[i], t_b[i] = bell_measure(t, in_b[i], code_b[i])
    fa_s, fa_t = _flip_bits(flips_a, n)
    fb_s, fb_t = _flip_bits(flips_b, n)
    s_a ^= fa_s
    t_a ^= fa_t
    s_b ^= fb_s
    t_b ^= fb_t
    s = s_a ^ s_b
    tt = t_a ^ t_b
    synd = raw_syndrome(code, s, tt)
    if decoder is None:
        est = equivalent_error(code, error_a, error_b, flips_a, flips_b, resource_error_a, resource_error_b)
    else:
        est = np.asarray(decoder(synd), dtype=np.uint8)
    beta, phi = raw_flips(code, est, s, tt)
    lx, lz = code.logical_x.to_array(), code.logical_z.to_array()
    res_beta = np.zeros(k, np.uint8)
    res_phi = np.zeros(k, np.uint8)
    if mode == "distill":
        if apply_correction:
            for j in range(k):
                if beta[j]:
                    t.apply_pauli([out_b[j]], "X")
                if phi[j]:
                    t.apply_pauli([out_b[j]], "Z")
        pairs = list(zip(out_a, out_b))
        for j, (qa, qb) in enumerate(pairs):
            zz = t.peek([qa, qb], "ZZ")
            xx = t.peek([qa, qb], "XX")
            res_beta[j] = 1 if zz is None else zz
            res_phi[j] = 1 if xx is None else xx
        fid = fidelity_with_bell_pairs(t, pairs) if k <= 6 else float("nan")
    else:
        qubits = out_a + out_b
        for j in range(k):
            zz = t.peek(qubits, PauliVector.from_symplectic(_pair_logical(lz[j], n)))
            xx = t.peek(qubits, PauliVector.from_symplectic(_pair_logical(lx[j], n)))
            zz = 1 if zz is None else zz
            xx = 1 if xx is None else xx
            # the frame is only recorded for a repeater segment, never applied
            res_beta[j] = zz ^ (beta[j] if apply_correction else 0)
            res_phi[j] = xx ^ (phi[j] if apply_correction else 0)
        fid = 1.0 if not (res_beta.any() or res_phi.any()) else 0.0
    return OracleRecord(s_a, t_a, s_b, t_b, synd, est, beta, phi, res_beta, res_phi, fid)


def _pair_logical(row: np.ndarray, n: int) -> np.ndarray:
    """``L (x) L'`` for an ``n``-qubit logical row acting on both blocks."""
    return _embed(row, n, 0, 2 * n) ^ _embed(row, n, n, 2 * n)


def run_chain_reference(code: StabilizerCode, segments: int, errors: Optional[Sequence] = None,
                        decoder: Optional[Estimator] = None,
                        rng: Optional[np.random.Generator] = None) -> dict:
    """Exact simulation of an ``N``-segment chain with distillation resources at the ends.

    ``errors[r]`` is ``(error_a, error_b)`` on the transmitted qubits of
    segment ``r``.  Node ``N`` applies the XOR of all segment frames to its
    output qubits.  Returns per-segment syndromes and frames, the aggregate,
    the residual flips and the end-to-end fidelity.
    """
    n, k = code.n, code.k
    rng = rng if rng is not None else np.random.default_rng()
    N = segments
    if N < 1:
        raise ValueError("need at least one segment")
    errors = list(errors) if errors is not None else [(None, None)] * N
    if len(errors) != N:
        raise ValueError("one (error_a, error_b) pair per segment")
    # layout: end node 0 (n+k), intermediate nodes 1..N-1 (2n each), end node N (n+k), inputs (2n per segment)
    sizes = [n + k] + [2 * n] * (N - 1) + [n + k]
    starts = np.cumsum([0] + sizes)
    in0 = int(starts[-1])
    q = in0 + 2 * n * N
    t = Tableau(q, rng)
    dgen = distillation_generators(code)
    rgen = repeater_generators(code)
    for node in range(N + 1):
        base = int(starts[node])
        gens = dgen if node in (0, N) else rgen
        prepare_from_generators(t, range(base, base + sizes[node]), gens)
    frames = []
    for r in range(N):
        ins = in0 + 2 * n * r
        for i in range(n):
            prepare_bell_pair(t, ins + 2 * i, ins + 2 * i + 1)
    for r in range(N):
        left, right = r, r + 1
        lb, rb = int(starts[left]), int(starts[right])
        # left node uses its code block (end node) or its right block (repeater)
        code_a = list(range(lb, lb + n)) if left == 0 else list(range(lb + n, lb + 2 * n))
        code_b = list(range(rb, rb + n))
        ins = in0 + 2 * n * r
        in_a = [ins + 2 * i for i in range(n)]
        in_b = [ins + 2 * i + 1 for i in range(n)]
        err_a, err_b = errors[r]
        for qs, err in ((in_a, err_a), (in_b, err_b)):
            pv = _as_pauli(err, n)
            if pv.weight:
                t.apply_pauli(qs, pv)
        s_a = np.zeros(n, np.uint8)
        t_a = np.zeros(n, np.uint8)
        s_b = np.zeros(n, np.uint8)
        t_b = np.zeros(n, np.uint8)
        for i in range(n):
            s_a[i], t_a[i] = bell_measure(t, in_a[i], code_a[i])
            s_b[i], t_b[i] = bell_measure(t, in_b[i], code_b[i])
        s = s_a ^ s_b
        tt = t_a ^ t_b
        synd = raw_syndrome(code, s, tt)
        est = equivalent_error(code, err_a, err_b) if decoder is None else np.asarray(decoder(synd), np.uint8)
        beta, phi = raw_flips(code, est, s, tt)
        frames.append({"syndrome": synd, "estimate": est, "beta": beta, "phi": phi})
    beta = np.bitwise_xor.reduce([f["beta"] for f in frames], axis=0)
    phi = np.bitwise_xor.reduce([f["phi"] for f in frames], axis=0)
    out_a = [int(starts[0]) + n + j for j in range(k)]
    out_b = [int(starts[N]) + n + j for j in range(k)]
    for j in range(k):
        if beta[j]:
            t.apply_pauli([out_b[j]], "X")
        if phi[j]:
            t.apply_pauli([out_b[j]], "Z")
    pairs = list(zip(out_a, out_b))
    res_beta = np.array([t.peek(list(p), "ZZ") for p in pairs], dtype=object)
    res_phi = np.array([t.peek(list(p), "XX") for p in pairs], dtype=object)
    res_beta = np.array([1 if v is None else v for v in res_beta], dtype=np.uint8)
    res_phi = np.array([1 if v is None else v for v in res_phi], dtype=np.uint8)
    fid = fidelity_with_bell_pairs(t, pairs) if k <= 6 else float("nan")
    return {"frames": frames, "beta": beta, "phi": phi, "residual_beta": res_beta,
            "residual_phi": res_phi, "fidelity": fid}


def run_swap_reference(code: StabilizerCode, rng: Optional[np.random.Generator] = None) -> dict:
    """Entanglement swapping on ``n`` rows followed by bilateral stabilizer measurements.

    Returns the Bell outcomes ``s, t`` and the stabilizer outcomes ``a, b``
    so that ``a_i + b_i`` can be checked against the parity predicted from
    ``s`` and ``t``.
    """
    n = code.n
    rng = rng if rng is not None else np.random.default_rng()
    # per row: green_A, blue_A, orange_A, orange_B, blue_B, green_B
    t = Tableau(6 * n, rng)
    g_a = [6 * i for i in range(n)]
    b_a = [6 * i + 1 for i in range(n)]
    o_a = [6 * i + 2 for i in range(n)]
    o_b = [6 * i + 3 for i in range(n)]
    b_b = [6 * i + 4 for i in range(n)]
    g_b = [6 * i + 5 for i in range(n)]
    for i in range(n):
        prepare_bell_pair(t, g_a[i], b_a[i])
        prepare_bell_pair(t, o_a[i], o_b[i])
        prepare_bell_pair(t, b_b[i], g_b[i])
    s = np.zeros(n, np.uint8)
    tt = np.zeros(n, np.uint8)
    for i in range(n):
        sa, ta = bell_measure(t, b_a[i], o_a[i])
        sb, tb = bell_measure(t, o_b[i], b_b[i])
        s[i] = sa ^ sb
        tt[i] = ta ^ tb
    h = code.h.to_array()
    a = np.array([t.measure(g_a, PauliVector.from_symplectic(g)) for g in h], dtype=np.uint8)
    b = np.array([t.measure(g_b, PauliVector.from_symplectic(g)) for g in h], dtype=np.uint8)
    return {"s": s, "t": tt, "a": a, "b": b, "tableau": t, "green_a": g_a, "green_b": g_b}


def resource_by_measurement(code: StabilizerCode, kind: str = "repeater",
                            rng: Optional[np.random.Generator] = None) -> tuple[Tableau, list[int]]:
    """Prepare a resource state from local Bell pairs by stabilizer measurements.

    ``kind="repeater"``: ``n`` Bell pairs, then ``g_i`` measured on each half.
    ``kind="distill"``: additionally ``k`` fresh Bell pairs ``(o_j, m_j)`` and a
    logical Bell measurement ``Xbar'_j X_{m_j}``, ``Zbar'_j Z_{m_j}`` that
    moves logical ``j`` of the second block onto ``o_j``.

    Outcomes are post-selected to 0 by applying the Pauli that flips exactly
    the offending signs (the state is the one post-selection would give).
    Returns the tableau and the qubits carrying the resource, ordered like
    the generators of :func:`repeater_generators` / :func:`distillation_generators`.
    """
    n, k = code.n, code.k
    rng = rng if rng is not None else np.random.default_rng()
    h = code.h.to_array()
    lx, lz = code.logical_x.to_array(), code.logical_z.to_array()
    extra = 3 * k if kind == "distill" else 0
    t = Tableau(2 * n + extra, rng)
    first = list(range(n))
    second = list(range(n, 2 * n))
    for i in range(n):
        prepare_bell_pair(t, first[i], second[i])

    _post_select(t, first, h)
    _post_select(t, second, h)
    if kind == "repeater":
        return t, first + second
    o = [2 * n + j for j in range(k)]
    mm = [2 * n + k + j for j in range(k)]
    for j in range(k):
        prepare_bell_pair(t, o[j], mm[j])
    for j in range(k):
        rows = []
        for lrow, kind_ in ((lx[j], "X"), (lz[j], "Z")):
            full_row = np.zeros(2 * (n + 1), dtype=np.uint8)
            full_row[:n] = lrow[:n]
            full_row[n + 1 : 2 * n + 1] = lrow[n:]
            if kind_ == "X":
                full_row[n] = 1
            else:
                full_row[2 * n + 1] = 1
            rows.append(full_row)
        _post_select(t, second + [mm[j]], np.array(rows))
    return t, first + o


def _post_select(t: Tableau, qubits: Sequence[int], rows: np.ndarray) -> None:
    """Measure ``rows`` on ``qubits`` and steer every outcome to 0 with one Pauli.

    The fix anticommutes with exactly the measured operators that came out
    -1 and commutes with the rest of the stabilizer group, so the result is
    the state post-selection on all-zero outcomes would give.
    """
    qubits = list(qubits)
    outs = np.array([t.measure(qubits, PauliVector.from_symplectic(g)) for g in rows], dtype=np.uint8)
    if not outs.any():
        return
    m = len(qubits)
    full = np.zeros((len(rows), 2 * t.q), dtype=np.uint8)
    full[:, qubits] = rows[:, :m]
    full[:, [t.q + qq for qq in qubits]] = rows[:, m:]
    group = np.array([st.symplectic() for _, st in t.stabilizers()], dtype=np.uint8)
    rest = gf2.complement_basis(group, full)
    basis = np.vstack([full, rest])
    target = np.concatenate([outs, np.zeros(rest.shape[0], np.uint8)])
    fix = gf2.solve(gf2.swap_halves(basis), target)
    t.apply_pauli(range(t.q), PauliVector.from_symplectic(fix))
