"""Stabilizer code data model: validation, logical operators, distance, builtins, file formats."""

from __future__ import annotations

import hashlib
import itertools
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import gf2
from .gf2 import BitMatrix, PauliVector

EXHAUSTIVE_CUTOFF = 20
# coset minimisation of logical representatives enumerates 2**r stabilizer combinations
COSET_SEARCH_MAX_GENERATORS = 16


class InvalidCodeError(ValueError):
    pass


@dataclass
class ValidationReport:
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        return "pass" if self.ok else "fail: " + "; ".join(self.failures)


@dataclass(frozen=True, eq=False)
class StabilizerCode:
    """An ``[[n, k, d]]`` stabilizer code in ``(H1 | H2)`` form.

    ``h`` is the ``(n-k) x 2n`` check matrix; ``logical_x`` and ``logical_z``
    are ``k x 2n`` and symplectically paired.  For CSS codes ``hx`` / ``hz``
    hold the X-type and Z-type check blocks (rows of ``h`` are ordered X
    checks first).
    """

    n: int
    k: int
    h: BitMatrix
    logical_x: BitMatrix
    logical_z: BitMatrix
    d: Optional[int] = None
    d_exact: bool = False
    name: str = "code"
    hx: Optional[BitMatrix] = None
    hz: Optional[BitMatrix] = None
    metadata: dict = field(default_factory=dict)

    @property
    def css(self) -> bool:
        return self.hx is not None and self.hz is not None

    @property
    def h1(self) -> np.ndarray:
        return self.h.to_array()[:, : self.n]

    @property
    def h2(self) -> np.ndarray:
        return self.h.to_array()[:, self.n :]

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def num_checks(self) -> int:
        return self.h.rows

    def content_hash(self) -> str:
        payload = json.dumps(code_to_dict(self), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    def __repr__(self) -> str:
        d = "?" if self.d is None else str(self.d)
        return f"StabilizerCode({self.name}: [[{self.n},{self.k},{d}]])"

    def with_distance(self, d: int, exact: bool, method: str) -> "StabilizerCode":
        meta = dict(self.metadata)
        meta["distance_method"] = method
        return StabilizerCode(
            self.n, self.k, self.h, self.logical_x, self.logical_z, d, exact,
            self.name, self.hx, self.hz, meta,
        )


def validate(code: StabilizerCode) -> ValidationReport:
    """Check commutation, pairing and rank invariants; report every violation."""
    rep = ValidationReport()
    n, k = code.n, code.k
    h = code.h.to_array()
    lx = code.logical_x.to_array()
    lz = code.logical_z.to_array()
    if h.shape[1] != 2 * n:
        rep.failures.append(f"H has {h.shape[1]} columns, expected {2 * n}")
        return rep
    if h.shape[0] != n - k:
        rep.failures.append(f"H has {h.shape[0]} rows, expected n-k={n - k}")
    if lx.shape != (k, 2 * n) or lz.shape != (k, 2 * n):
        rep.failures.append(f"logical matrices have shapes {lx.shape}, {lz.shape}; expected ({k}, {2 * n})")
        return rep
    gram = gf2.symplectic_matrix(h, h)
    for i, j in zip(*np.nonzero(np.triu(gram))):
        rep.failures.append(f"stabilizers {i} and {j} anticommute")
    r = gf2.rank(h)
    if r != h.shape[0]:
        rep.failures.append(f"H has rank {r}, expected {h.shape[0]} (dependent generators)")
    if r != n - k:
        rep.failures.append(f"rank(H)={r} != n-k={n - k}")
    for name, m in (("X", lx), ("Z", lz)):
        bad = gf2.symplectic_matrix(m, h)
        for j, i in zip(*np.nonzero(bad)):
            rep.failures.append(f"logical {name}{j} anticommutes with stabilizer {i}")
    if k:
        if not np.array_equal(gf2.symplectic_matrix(lx, lz), np.eye(k, dtype=np.uint8)):
            rep.failures.append("logical X/Z rows are not symplectically paired")
        if np.any(np.triu(gf2.symplectic_matrix(lx, lx), 1)):
            rep.failures.append("logical X rows do not mutually commute")
        if np.any(np.triu(gf2.symplectic_matrix(lz, lz), 1)):
            rep.failures.append("logical Z rows do not mutually commute")
    if code.css:
        hx, hz = code.hx.to_array(), code.hz.to_array()
        if np.any(gf2.matmul(hx, hz.T)):
            rep.failures.append("CSS blocks violate HX.HZ^T = 0")
    return rep


def _min_weight_in_coset(vec: np.ndarray, stabs: np.ndarray, n: int) -> np.ndarray:
    """Lowest-weight element of ``vec + rowspace(stabs)``; ties broken lexicographically."""
    r = stabs.shape[0]
    if r == 0 or r > COSET_SEARCH_MAX_GENERATORS:
        return vec
    # all 2**r combinations at once
    combos = ((np.arange(2**r)[:, None] >> np.arange(r)[None, :]) & 1).astype(np.uint8)
    cands = gf2.matmul(combos, stabs) ^ vec[None, :]
    weights = np.count_nonzero(cands[:, :n] | cands[:, n:], axis=1)
    best = np.flatnonzero(weights == weights.min())
    if len(best) == 1:
        return cands[best[0]]
    keys = [_pauli_key(cands[i], n) for i in best]
    return cands[best[keys.index(min(keys))]]


def _pauli_key(v: np.ndarray, n: int) -> tuple:
    # I < X < Y < Z per qubit; leading qubits with support win
    x, z = v[:n], v[n:]
    return tuple(0 if not (a or b) else (1 if a and not b else (2 if a else 3)) for a, b in zip(x, z))


def _logicals_css(hx: np.ndarray, hz: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    lx = gf2.complement_basis(gf2.nullspace(hz), hx)  # X-type: commute with Z checks
    lz = gf2.complement_basis(gf2.nullspace(hx), hz)
    k = lx.shape[0]
    if k:
        pair = gf2.matmul(lx, lz.T)
        lz = gf2.matmul(gf2.inverse(pair).T, lz)
    lx_min = np.array([_min_weight_in_coset(np.concatenate([v, np.zeros(n, np.uint8)]), np.hstack([hx, np.zeros_like(hx)]), n)[:n] for v in lx], dtype=np.uint8).reshape(k, n)
    lz_min = np.array([_min_weight_in_coset(np.concatenate([np.zeros(n, np.uint8), v]), np.hstack([np.zeros_like(hz), hz]), n)[n:] for v in lz], dtype=np.uint8).reshape(k, n)
    zeros = np.zeros((k, n), np.uint8)
    return np.hstack([lx_min, zeros]), np.hstack([zeros, lz_min])


def extract_logicals(h, n: Optional[int] = None) -> tuple[BitMatrix, BitMatrix]:
    """Symplectically paired logical operators for the stabilizer group of ``h``.

    Uses symplectic Gram-Schmidt over a basis of the normalizer taken in
    order, then reduces each representative to its lowest-weight coset
    element when the stabilizer group is small enough to enumerate.
    """
    h = gf2._as_dense(h) if not (isinstance(h, np.ndarray) and h.ndim == 2) else (h & 1).astype(np.uint8)
    if n is None:
        n = h.shape[1] // 2
    if h.shape[1] != 2 * n:
        raise InvalidCodeError("H must have 2n columns")
    if h.shape[0] and np.any(gf2.symplectic_matrix(h, h)):
        raise InvalidCodeError("stabilizer generators do not commute")
    if gf2.rank(h) != h.shape[0]:
        raise InvalidCodeError("stabilizer generators are not independent")
    normalizer = gf2.nullspace(gf2.swap_halves(h)) if h.shape[0] else np.eye(2 * n, dtype=np.uint8)
    cands = [v.copy() for v in gf2.complement_basis(normalizer, h)]
    lx, lz = [], []
    while cands:
        u = cands.pop(0)
        partner = next((i for i, w in enumerate(cands) if gf2.symplectic_product(u, w)), None)
        if partner is None:
            raise InvalidCodeError("normalizer quotient is degenerate")
        v = cands.pop(partner)
        lx.append(u)
        lz.append(v)
        rest = []
        for w in cands:
            w = w ^ (gf2.symplectic_product(w, v) * u) ^ (gf2.symplectic_product(w, u) * v)
            rest.append(w.astype(np.uint8))
        cands = rest
    k = len(lx)
    lx = np.array([_min_weight_in_coset(v, h, n) for v in lx], dtype=np.uint8).reshape(k, 2 * n)
    lz = np.array([_min_weight_in_coset(v, h, n) for v in lz], dtype=np.uint8).reshape(k, 2 * n)
    return BitMatrix(lx), BitMatrix(lz)


def make_code(h, name: str = "code", *, compute_distance: bool = True, hx=None, hz=None,
              metadata: Optional[dict] = None) -> StabilizerCode:
    """Build and validate a code from a check matrix, extracting logicals."""
    h = gf2._as_dense(h)
    n = h.shape[1] // 2
    if hx is not None and hz is not None:
        hx, hz = gf2._as_dense(hx), gf2._as_dense(hz)
        lx, lz = _logicals_css(hx, hz, n)
        lx, lz = BitMatrix(lx), BitMatrix(lz)
    else:
        lx, lz = extract_logicals(h, n)
    k = lx.rows
    code = StabilizerCode(
        n=n, k=k, h=BitMatrix(h), logical_x=lx, logical_z=lz, name=name,
        hx=BitMatrix(hx) if hx is not None else None,
        hz=BitMatrix(hz) if hz is not None else None,
        metadata=dict(metadata or {}),
    )
    report = validate(code)
    if not report:
        raise InvalidCodeError(f"{name}: {report}")
    if compute_distance and n <= EXHAUSTIVE_CUTOFF:
        d, exact = estimate_distance(code)
        code = code.with_distance(d, exact, "exhaustive")
    return code


def css_code(hx, hz, name: str = "code", **kw) -> StabilizerCode:
    hx = gf2._as_dense(hx)
    hz = gf2._as_dense(hz)
    n = max(hx.shape[1], hz.shape[1])
    hx = hx.reshape(-1, n)
    hz = hz.reshape(-1, n)
    h = np.vstack([
        np.hstack([hx, np.zeros_like(hx)]),
        np.hstack([np.zeros_like(hz), hz]),
    ])
    return make_code(h, name, hx=hx, hz=hz, **kw)


def _is_nontrivial(cands: np.ndarray, lx: np.ndarray, lz: np.ndarray) -> np.ndarray:
    logicals = np.vstack([lx, lz])
    if logicals.shape[0] == 0:
        return np.zeros(cands.shape[0], dtype=bool)
    return gf2.symplectic_matrix(cands, logicals).any(axis=1)


def _exhaustive_distance(code: StabilizerCode, max_weight: Optional[int] = None) -> Optional[int]:
    n = code.n
    h = code.h.to_array()
    lx, lz = code.logical_x.to_array(), code.logical_z.to_array()
    if code.k == 0:
        return None
    limit = n if max_weight is None else min(n, max_weight)
    for w in range(1, limit + 1):
        # 3**w Pauli type assignments for a fixed support; type 0=X, 1=Y, 2=Z
        types = np.array(list(itertools.product(range(3), repeat=w)), dtype=np.int64)
        tx = (types <= 1).astype(np.uint8)
        tz = (types >= 1).astype(np.uint8)
        for supp in itertools.combinations(range(n), w):
            cols = list(supp)
            cands = np.zeros((types.shape[0], 2 * n), dtype=np.uint8)
            cands[:, cols] = tx
            cands[:, [c + n for c in cols]] = tz
            synd = gf2.symplectic_matrix(cands, h) if h.shape[0] else np.zeros((len(cands), 0), np.uint8)
            ok = ~synd.any(axis=1)
            if ok.any() and _is_nontrivial(cands[ok], lx, lz).any():
                return w
    return None


def _information_set_distance(code: StabilizerCode, effort: int, rng: np.random.Generator) -> int:
    """Randomised upper bound: minimum weight of nontrivial normalizer rows over random information sets."""
    n = code.n
    lx, lz = code.logical_x.to_array(), code.logical_z.to_array()
    best = n
    if code.css:
        sectors = [
            (gf2.nullspace(code.hz.to_array()), lz[:, n:]),  # X-type logicals detected by Z logicals
            (gf2.nullspace(code.hx.to_array()), lx[:, :n]),
        ]
        for basis, dual in sectors:
            words = gf2.pack_rows(basis)
            for _ in range(effort):
                order = rng.permutation(n).astype(np.int64)
                w = words.copy()
                piv = gf2._rref_words(w, n, order)
                rows = gf2.unpack_rows(w[: len(piv)], n)
                nontrivial = gf2.matmul(rows, dual.T).any(axis=1)
                if nontrivial.any():
                    best = min(best, int(rows[nontrivial].sum(axis=1).min()))
        return best
    h = code.h.to_array()
    basis = gf2.nullspace(gf2.swap_halves(h))
    # interleave (x_i, z_i) so an information set picks whole qubits
    inter = np.empty_like(basis)
    inter[:, 0::2] = basis[:, :n]
    inter[:, 1::2] = basis[:, n:]
    words = gf2.pack_rows(inter)
    for _ in range(effort):
        qorder = rng.permutation(n)
        order = np.empty(2 * n, dtype=np.int64)
        order[0::2] = 2 * qorder
        order[1::2] = 2 * qorder + 1
        w = words.copy()
        piv = gf2._rref_words(w, 2 * n, order)
        rows = gf2.unpack_rows(w[: len(piv)], 2 * n)
        sym = np.hstack([rows[:, 0::2], rows[:, 1::2]])
        nontrivial = _is_nontrivial(sym, lx, lz)
        if nontrivial.any():
            weights = np.count_nonzero(sym[:, :n] | sym[:, n:], axis=1)
            best = min(best, int(weights[nontrivial].min()))
    return best


def estimate_distance(code: StabilizerCode, effort: int = 200, cutoff: int = EXHAUSTIVE_CUTOFF,
                      seed: int = 0) -> tuple[Optional[int], bool]:
    """Return ``(d, exact)``.

    Exhaustive minimum-weight logical search for ``n <= cutoff``; otherwise
    the randomized information-set bound (an upper bound on ``d``).
    """
    if code.k == 0:
        return None, True
    if code.n <= cutoff:
        return _exhaustive_distance(code), True
    return _information_set_distance(code, effort, np.random.default_rng(seed)), False


# builtin codes ------------------------------------------------------------

def _c422() -> StabilizerCode:
    return css_code([[1, 1, 1, 1]], [[1, 1, 1, 1]], name="c422")


def _steane713() -> StabilizerCode:
    ham = np.array([[0, 0, 0, 1, 1, 1, 1], [0, 1, 1, 0, 0, 1, 1], [1, 0, 1, 0, 1, 0, 1]], dtype=np.uint8)
    return css_code(ham, ham, name="steane713")


def _repetition(n: int) -> StabilizerCode:
    if n < 2:
        raise ValueError("repetition code needs n >= 2")
    hz = np.zeros((n - 1, n), dtype=np.uint8)
    for i in range(n - 1):
        hz[i, i] = hz[i, i + 1] = 1
    return css_code(np.zeros((0, n), np.uint8), hz, name=f"repetition({n})")


def _five_qubit() -> StabilizerCode:
    rows = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"]
    h = np.array([PauliVector.from_string(r).symplectic() for r in rows], dtype=np.uint8)
    return make_code(h, name="five513")


_BUILTINS = {"c422": _c422, "steane713": _steane713, "five513": _five_qubit}


def builtin(name: str) -> StabilizerCode:
    """``c422``, ``steane713``, ``five513`` or ``repetition(n)``."""
    m = re.fullmatch(r"\s*repetition\((\d+)\)\s*", name)
    if m:
        return _repetition(int(m.group(1)))
    try:
        return _BUILTINS[name.strip()]()
    except KeyError:
        raise KeyError(f"unknown builtin code {name!r}; choose from {sorted(_BUILTINS)} or repetition(n)") from None


def builtin_names() -> list[str]:
    return sorted(_BUILTINS) + ["repetition(3)"]


# serialization ------------------------------------------------------------

def code_to_dict(code: StabilizerCode) -> dict[str, Any]:
    n = code.n
    h, lx, lz = code.h.to_array(), code.logical_x.to_array(), code.logical_z.to_array()
    bits = lambda m: ["".join(map(str, row)) for row in m]  # noqa: E731
    out: dict[str, Any] = {
        "n": n,
        "k": code.k,
        "d": code.d,
        "d_exact": code.d_exact,
        "h1": bits(h[:, :n]),
        "h2": bits(h[:, n:]),
        "lx1": bits(lx[:, :n]),
        "lx2": bits(lx[:, n:]),
        "lz1": bits(lz[:, :n]),
        "lz2": bits(lz[:, n:]),
        "name": code.name,
        "css": code.css,
    }
    if code.metadata:
        out["metadata"] = code.metadata
    return out


def code_from_dict(data: dict[str, Any]) -> StabilizerCode:
    n = int(data["n"])
    k = int(data["k"])

    def mat(key_a, key_b, rows):
        a = BitMatrix.from_strings(data[key_a], n).to_array().reshape(rows, n)
        b = BitMatrix.from_strings(data[key_b], n).to_array().reshape(rows, n)
        return np.hstack([a, b])

    h = mat("h1", "h2", n - k)
    lx = mat("lx1", "lx2", k)
    lz = mat("lz1", "lz2", k)
    hx = hz = None
    if data.get("css"):
        xr = h[:, :n].any(axis=1) & ~h[:, n:].any(axis=1)
        zr = h[:, n:].any(axis=1) & ~h[:, :n].any(axis=1)
        if np.all(xr | zr):
            hx, hz = BitMatrix(h[xr, :n]), BitMatrix(h[zr, n:])
    code = StabilizerCode(
        n=n, k=k, h=BitMatrix(h), logical_x=BitMatrix(lx), logical_z=BitMatrix(lz),
        d=data.get("d"), d_exact=bool(data.get("d_exact", False)), name=data.get("name", "code"),
        hx=hx, hz=hz, metadata=dict(data.get("metadata", {})),
    )
    report = validate(code)
    if not report:
        raise InvalidCodeError(f"code file failed validation: {report}")
    return code


def save_code(code: StabilizerCode, path) -> None:
    Path(path).write_text(json.dumps(code_to_dict(code), indent=1, sort_keys=True) + "\n")


def load_code(path_or_name) -> StabilizerCode:
    """Load a JSON code file, or a builtin when given a builtin name."""
    p = Path(str(path_or_name))
    if p.exists():
        return code_from_dict(json.loads(p.read_text()))
    return builtin(str(path_or_name))


def write_alist(h, path) -> None:
    """Write a classical parity-check matrix in alist format."""
    h = gf2._as_dense(h)
    m, n = h.shape
    col_idx = [np.flatnonzero(h[:, j]) + 1 for j in range(n)]
    row_idx = [np.flatnonzero(h[i]) + 1 for i in range(m)]
    cmax = max((len(c) for c in col_idx), default=0)
    rmax = max((len(r) for r in row_idx), default=0)
    lines = [f"{n} {m}", f"{cmax} {rmax}",
             " ".join(str(len(c)) for c in col_idx), " ".join(str(len(r)) for r in row_idx)]
    lines += [" ".join(map(str, list(c) + [0] * (cmax - len(c)))) for c in col_idx]
    lines += [" ".join(map(str, list(r) + [0] * (rmax - len(r)))) for r in row_idx]
    Path(path).write_text("\n".join(lines) + "\n")


def read_alist(path) -> np.ndarray:
    tokens = [int(t) for t in Path(path).read_text().split()]
    n, m = tokens[0], tokens[1]
    pos = 4
    col_w = tokens[pos : pos + n]
    pos += n + m
    cmax = tokens[2]
    h = np.zeros((m, n), dtype=np.uint8)
    for j in range(n):
        entries = tokens[pos : pos + cmax]
        pos += cmax
        for e in entries[: col_w[j]]:
            if e:
                h[e - 1, j] = 1
    return h
