"""Random regular classical LDPC codes and hypergraph-product quantum codes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import gf2
from .codes import StabilizerCode, css_code


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ClassicalCode:
    h: gf2.BitMatrix
    girth: Optional[int] = None
    seed: Optional[int] = None
    metadata: dict = field(default_factory=dict)

    @property
    def n_bits(self) -> int:
        return self.h.cols

    @property
    def n_checks(self) -> int:
        return self.h.rows

    @property
    def rank(self) -> int:
        return gf2.rank(self.h)

    @property
    def dimension(self) -> int:
        return self.n_bits - self.rank


def _instance_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def _has_duplicate_edges(check_of_socket: np.ndarray, col_weight: int) -> np.ndarray:
    """Per socket, True if the same (bit, check) edge also appears on an earlier socket of that bit."""
    per_bit = check_of_socket.reshape(-1, col_weight)
    dup = np.zeros_like(per_bit, dtype=bool)
    for a in range(col_weight):
        for b in range(a):
            dup[:, a] |= per_bit[:, a] == per_bit[:, b]
    return dup.reshape(-1)


def _four_cycle_sockets(check_of_socket: np.ndarray, n_bits: int, n_checks: int, col_weight: int) -> np.ndarray:
    """Sockets of the first bit found on a 4-cycle (two bits sharing two checks)."""
    h = np.zeros((n_checks, n_bits), dtype=np.int32)
    h[check_of_socket, np.arange(len(check_of_socket)) // col_weight] = 1
    overlap = h.T @ h
    np.fill_diagonal(overlap, 0)
    bad = np.argwhere(overlap >= 2)
    if bad.size == 0:
        return bad[:0, 0]
    b = int(bad[0, 0])
    return np.arange(b * col_weight, (b + 1) * col_weight)


def _configuration_model(n_bits: int, n_checks: int, col_weight: int, row_weight: int,
                         rng: np.random.Generator, max_swaps: int = 10000, no_four_cycles: bool = False) -> np.ndarray:
    # socket s belongs to bit s // col_weight and is matched to check check_of_socket[s]
    check_of_socket = np.repeat(np.arange(n_checks), row_weight)
    rng.shuffle(check_of_socket)
    for _ in range(max_swaps):
        dup = np.flatnonzero(_has_duplicate_edges(check_of_socket, col_weight))
        if dup.size == 0 and no_four_cycles:
            dup = _four_cycle_sockets(check_of_socket, n_bits, n_checks, col_weight)
            if dup.size:
                dup = dup[int(rng.integers(dup.size)):][:1]
        if dup.size == 0:
            break
        s = dup[0]
        t = int(rng.integers(len(check_of_socket)))
        check_of_socket[s], check_of_socket[t] = check_of_socket[t], check_of_socket[s]
    else:
        raise GenerationError("could not remove multi-edges by edge swaps")
    h = np.zeros((n_checks, n_bits), dtype=np.uint8)
    h[check_of_socket, np.arange(len(check_of_socket)) // col_weight] = 1
    return h


def girth(h) -> Optional[int]:
    """Length of the shortest cycle of the Tanner graph, ``None`` if acyclic."""
    h = gf2._as_dense(h)
    m, n = h.shape
    adj: list[list[int]] = [[] for _ in range(n + m)]
    for c, v in zip(*np.nonzero(h)):
        adj[v].append(n + c)
        adj[n + c].append(v)
    best = None
    for start in range(n):
        dist = {start: 0}
        parent = {start: -1}
        frontier = [start]
        while frontier:
            nxt = []
            for u in frontier:
                for w in adj[u]:
                    if w not in dist:
                        dist[w] = dist[u] + 1
                        parent[w] = u
                        nxt.append(w)
                    elif parent[u] != w:
                        cyc = dist[u] + dist[w] + 1
                        if best is None or cyc < best:
                            best = cyc
            frontier = nxt
    return best


def random_regular_ldpc(n_bits: int, col_weight: int = 3, row_weight: int = 4, seed: int = 0, *,
                        min_girth: Optional[int] = None, require_full_rank: bool = True,
                        max_attempts: int = 1000) -> ClassicalCode:
    """Random ``(col_weight, row_weight)``-regular parity-check matrix.

    Configuration model with multi-edges removed by socket swaps; with
    ``min_girth >= 6`` 4-cycles are broken the same way.  Instances that are
    rank deficient (or still below ``min_girth``) are regenerated from the
    next sub-stream of ``seed``.
    """
    if n_bits <= 0 or (n_bits * col_weight) % row_weight:
        raise ValueError(
            f"n_bits*col_weight = {n_bits * col_weight} is not divisible by row_weight = {row_weight}"
        )
    n_checks = n_bits * col_weight // row_weight
    if row_weight > n_bits or col_weight > n_checks:
        raise ValueError("weights too large for a simple bipartite graph")
    for attempt in range(max_attempts):
        rng = _instance_rng(seed, attempt)
        try:
            h = _configuration_model(n_bits, n_checks, col_weight, row_weight, rng,
                                     no_four_cycles=min_girth is not None and min_girth >= 6)
        except GenerationError:
            continue
        if require_full_rank and gf2.rank(h) != n_checks:
            continue
        g = girth(h) if min_girth is not None else None
        if min_girth is not None and g is not None and g < min_girth:
            continue
        return ClassicalCode(gf2.BitMatrix(h), girth=g, seed=seed,
                             metadata={"attempt": attempt, "col_weight": col_weight, "row_weight": row_weight})
    target = f"girth >= {min_girth}" if min_girth else "a full-rank instance"
    raise GenerationError(f"no instance with {target} after {max_attempts} attempts")


def classical_distance(h) -> Optional[int]:
    """Minimum weight of a nonzero codeword of ``ker(h)`` by enumeration; ``None`` if trivial."""
    basis = gf2.nullspace(h)
    dim = basis.shape[0]
    if dim == 0:
        return None
    if dim > 24:
        raise ValueError(f"kernel dimension {dim} too large to enumerate")
    best = basis.shape[1]
    words = gf2.pack_rows(basis)
    # Gray-code walk over all 2**dim codewords
    cur = np.zeros(words.shape[1], dtype=np.uint64)
    for i in range(1, 2**dim):
        flip = (i & -i).bit_length() - 1
        cur ^= words[flip]
        w = int(np.bitwise_count(cur).sum())
        if w < best:
            best = w
    return best


def hgp(ha, hb=None, name: Optional[str] = None) -> StabilizerCode:
    """Hypergraph product of two classical codes.

    ``HX = (Ha (x) I | I (x) Hb^T)``, ``HZ = (I (x) Hb | Ha^T (x) I)``.  Qubits
    ``0 .. na*nb-1`` form the bit-by-bit grid (row-major), the remainder the
    check-by-check grid.  The distance is set from the classical factors:
    ``min(d(Ha), d(Hb), d(Ha^T), d(Hb^T))`` with trivial kernels ignored.
    """
    a = gf2._as_dense(ha.h if isinstance(ha, ClassicalCode) else ha)
    b = a if hb is None else gf2._as_dense(hb.h if isinstance(hb, ClassicalCode) else hb)
    ma, na = a.shape
    mb, nb = b.shape
    hx = np.hstack([np.kron(a, np.eye(nb, dtype=np.uint8)), np.kron(np.eye(ma, dtype=np.uint8), b.T)])
    hz = np.hstack([np.kron(np.eye(na, dtype=np.uint8), b), np.kron(a.T, np.eye(mb, dtype=np.uint8))])
    hx = gf2.row_basis(hx) if gf2.rank(hx) != hx.shape[0] else hx
    hz = gf2.row_basis(hz) if gf2.rank(hz) != hz.shape[0] else hz
    N = na * nb + ma * mb
    code = css_code(hx, hz, name=name or f"hgp{N}", compute_distance=False,
                    metadata={"construction": "hypergraph_product",
                              "qubit_order": "bit x bit row-major, then check x check row-major",
                              "classical_shapes": [[ma, na], [mb, nb]]})
    dists = [classical_distance(m) for m in (a, b, a.T, b.T)]
    finite = [d for d in dists if d is not None]
    if finite and code.k:
        code = code.with_distance(min(finite), True, "classical-factor distances")
    return code


def build_family(sizes: Sequence[int], instances_per_size: int = 10, seed: int = 0,
                 selection: str = "max-distance", col_weight: int = 3, row_weight: int = 4,
                 min_girth: Optional[int] = None) -> list[StabilizerCode]:
    """One HGP self-product per classical size, keeping the best of several random instances.

    Instance ``i`` of size index ``j`` draws from sub-stream ``(seed, j, i)``.
    Ties in distance keep the earliest instance.
    """
    if selection not in ("max-distance", "first"):
        raise ValueError(f"unknown selection rule {selection!r}")
    family = []
    for j, nb in enumerate(sizes):
        best = None
        for i in range(instances_per_size):
            inst_seed = int(np.random.SeedSequence(seed, spawn_key=(j, i)).generate_state(1)[0])
            cl = random_regular_ldpc(nb, col_weight, row_weight, seed=inst_seed, min_girth=min_girth)
            code = hgp(cl, name=f"hgp{nb * nb + cl.n_checks ** 2}")
            code.metadata.update({"classical_seed": inst_seed, "instance": i,
                                  "instances_tried": instances_per_size, "selection": selection,
                                  "family_seed": seed, "girth_constraint": min_girth,
                                  "classical_h": cl.h.to_strings()})
            if best is None or (selection == "max-distance" and (code.d or 0) > (best.d or 0)):
                best = code
            if selection == "first":
                break
        family.append(best)
    return family


def family_rates(codes: Sequence[StabilizerCode]) -> list[tuple[int, int, float]]:
    return [(c.n, c.k, c.k / c.n) for c in codes]


__all__ = [
    "ClassicalCode", "GenerationError", "random_regular_ldpc", "hgp", "build_family",
    "classical_distance", "girth", "family_rates",
]
