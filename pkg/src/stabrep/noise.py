"""Depolarizing error algebra and per-party error-frame sampling.

Every error source is folded into flips of Bell-measurement outcomes.  A
Pauli before a Bell measurement anticommutes with ``ZZ`` when it has an X
component and with ``XX`` when it has a Z component, so

    X -> dt,   Z -> ds,   Y -> ds and dt

and the frame's equivalent Pauli has ``x = dt`` and ``z = ds``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .gf2 import PauliVector

ROLES = ("segment", "end-node")


def _check_prob(name: str, p: float) -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return p


def compose(p1: float, p2: float) -> float:
    """Depolarizing probability of two independent depolarizing channels in sequence."""
    p1 = _check_prob("p1", p1)
    p2 = _check_prob("p2", p2)
    return p1 + p2 - 4.0 / 3.0 * p1 * p2


def depolarizing_scale(p: float) -> float:
    # composition multiplies 1 - 4p/3
    return 1.0 - 4.0 * p / 3.0


def from_scale(lam: float) -> float:
    return 0.75 * (1.0 - lam)


@dataclass(frozen=True)
class NoiseModel:
    """Per-party depolarizing rates: resource qubit ``p_r``, transmitted qubit ``p_b``, measurement ``p_m``."""

    p_r: float = 0.0
    p_b: float = 0.0
    p_m: float = 0.0

    def __post_init__(self):
        for name in ("p_r", "p_b", "p_m"):
            _check_prob(name, getattr(self, name))

    @classmethod
    def from_total(cls, p_t: float, weights: tuple[float, float, float] = (1.0, 1.0, 1.0)) -> "NoiseModel":
        """Model whose total bipartite error equals ``p_t``.

        The single-party depolarizing scale ``sqrt(1 - 4 p_t / 3)`` is split
        across ``(p_r, p_b, p_m)`` in proportion to ``weights`` (in log-scale).
        """
        p_t = _check_prob("p_t", p_t)
        if p_t > 0.75:
            raise ValueError("p_t above 3/4 is not a depolarizing probability")
        lam_c = math.sqrt(depolarizing_scale(p_t))
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or w.sum() == 0:
            raise ValueError("weights must be non-negative and not all zero")
        w = w / w.sum()
        probs = [from_scale(lam_c ** wi) if wi > 0 else 0.0 for wi in w]
        return cls(*probs)

    def as_dict(self) -> dict:
        return {"p_r": self.p_r, "p_b": self.p_b, "p_m": self.p_m}


def combined_single_party(model: NoiseModel) -> float:
    """``p_c = f(f(p_r, p_b), p_m)``."""
    return compose(compose(model.p_r, model.p_b), model.p_m)


def total_bipartite(p_c: float) -> float:
    """``p_t = f(p_c, p_c)``."""
    return compose(p_c, p_c)


def bell_fidelity(p_b: float) -> float:
    """Fidelity with ``|Phi+>`` of a Bell pair whose two qubits are each depolarized with ``p_b``."""
    p_b = _check_prob("p_b", p_b)
    return 1.0 - 2.0 * p_b + 4.0 / 3.0 * p_b * p_b


def total_error(model: NoiseModel) -> float:
    return total_bipartite(combined_single_party(model))


def end_to_end_fidelity(p_l: float, segments: int, p_r: float) -> float:
    """``1 - N p_L - 2 p_r`` for a chain with uncoded end-node outputs."""
    return 1.0 - segments * p_l - 2.0 * p_r


@dataclass(eq=False)
class ErrorFrame:
    """Outcome flips for ``n`` Bell measurements plus uncoded output-qubit errors."""

    ds: np.ndarray
    dt: np.ndarray
    out_x: np.ndarray
    out_z: np.ndarray

    @classmethod
    def zeros(cls, n: int, k: int) -> "ErrorFrame":
        z = lambda m: np.zeros(m, dtype=np.uint8)  # noqa: E731
        return cls(z(n), z(n), z(k), z(k))

    @property
    def true_pauli(self) -> PauliVector:
        return PauliVector(self.dt, self.ds)

    def symplectic(self) -> np.ndarray:
        return np.concatenate([self.dt, self.ds])

    def __xor__(self, other: "ErrorFrame") -> "ErrorFrame":
        return ErrorFrame(self.ds ^ other.ds, self.dt ^ other.dt, self.out_x ^ other.out_x, self.out_z ^ other.out_z)

    def is_zero(self) -> bool:
        return not (self.ds.any() or self.dt.any() or self.out_x.any() or self.out_z.any())

    @classmethod
    def from_pauli(cls, pauli: PauliVector, k: int = 0) -> "ErrorFrame":
        return cls(pauli.z.copy(), pauli.x.copy(), np.zeros(k, np.uint8), np.zeros(k, np.uint8))


def _depolarize(u: np.ndarray, p: float) -> tuple[np.ndarray, np.ndarray]:
    """Map uniforms to (x, z) bits of a depolarizing(p) Pauli: X, Y, Z each with p/3."""
    if p <= 0:
        zero = np.zeros(u.shape, dtype=np.uint8)
        return zero, zero
    hit = u < p
    kind = np.minimum((u / p * 3.0).astype(np.int64), 2)  # 0=X, 1=Y, 2=Z
    x = (hit & (kind <= 1)).astype(np.uint8)
    z = (hit & (kind >= 1)).astype(np.uint8)
    return x, z


def sample_error(model: NoiseModel, code, role: str = "segment",
                 rng: Optional[np.random.Generator] = None) -> ErrorFrame:
    """Sample one party's contribution to a frame.

    For each of the ``n`` Bell measurements: depolarizing ``p_b`` on the
    transmitted qubit, depolarizing ``p_r`` on the resource qubit and a
    measurement fault flipping ``s``, ``t`` or both with ``p_m / 3`` each.
    The ``end-node`` role also depolarizes the ``k`` uncoded output qubits
    with ``p_r``.  Draws a fixed number of uniforms so streams stay aligned.
    """
    if role not in ROLES:
        raise ValueError(f"role must be one of {ROLES}, got {role!r}")
    if rng is None:
        rng = np.random.default_rng()
    n, k = code.n, code.k
    u = rng.random((3, n))
    bx, bz = _depolarize(u[0], model.p_b)
    rx, rz = _depolarize(u[1], model.p_r)
    # measurement: t-only behaves as X, both as Y, s-only as Z
    mt, ms = _depolarize(u[2], model.p_m)
    dt = bx ^ rx ^ mt
    ds = bz ^ rz ^ ms
    if role == "end-node":
        ox, oz = _depolarize(rng.random(k), model.p_r)
    else:
        ox = oz = np.zeros(k, dtype=np.uint8)
    return ErrorFrame(ds, dt, ox, oz)


def sample_bipartite(model: NoiseModel, code, rng: np.random.Generator,
                     left_end: bool = False, right_end: bool = False) -> ErrorFrame:
    """Frame for one segment: the XOR of both parties' independent samples."""
    a = sample_error(model, code, "end-node" if left_end else "segment", rng)
    b = sample_error(model, code, "end-node" if right_end else "segment", rng)
    return a ^ b


def trial_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Independent stream for one trial, keyed by ``(master_seed, *key)``."""
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key)))
