"""Cross-checks of the error-frame engine against the tableau oracle."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from . import protocol as P
from . import tableau as T
from .codes import StabilizerCode, builtin
from .decode import LookupDecoder
from .gf2 import PauliVector


def paulis_up_to(n: int, max_weight: int) -> Iterator[PauliVector]:
    """All ``n``-qubit Paulis of weight at most ``max_weight``, identity first."""
    yield PauliVector.identity(n)
    for w in range(1, max_weight + 1):
        for supp in itertools.combinations(range(n), w):
            for kinds in itertools.product("XYZ", repeat=w):
                x = np.zeros(n, np.uint8)
                z = np.zeros(n, np.uint8)
                for q, kd in zip(supp, kinds):
                    x[q] = kd in "XY"
                    z[q] = kd in "YZ"
                yield PauliVector(x, z)


def _split(p: PauliVector, n: int) -> tuple[PauliVector, PauliVector]:
    return PauliVector(p.x[:n], p.z[:n]), PauliVector(p.x[n:], p.z[n:])


@dataclass
class CheckReport:
    name: str
    cases: int = 0
    mismatches: int = 0
    examples: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.mismatches == 0

    def add(self, ok: bool, detail) -> None:
        self.cases += 1
        if not ok:
            self.mismatches += 1
            if len(self.examples) < 5:
                self.examples.append(detail)

    def __str__(self) -> str:
        return f"{self.name}: {self.cases} cases, {self.mismatches} mismatches"


def compare_case(code: StabilizerCode, decoder, mode: str, rng: np.random.Generator, error_a=None,
                 error_b=None, flips_a=None, flips_b=None) -> bool:
    """One oracle run against the engine: syndrome, raw flips, residual flips and verdict."""
    rec = T.run_protocol_reference(code, error_a, error_b, mode=mode, flips_a=flips_a, flips_b=flips_b,
                                   decoder=lambda s: decoder.decode(s)[0], rng=rng)
    frame = P.frame_from_paulis(code, error_a, error_b, flips_a, flips_b)
    res = P.repeater_segment(code, frame, decoder)
    beta_raw, phi_raw = P.flips(code, res.estimate, rec.s, rec.t, raw=True)
    return bool(
        np.array_equal(res.syndrome, rec.syndrome)
        and np.array_equal(P.syndrome(code, rec.s, rec.t, raw=True), rec.syndrome)
        and np.array_equal(beta_raw, rec.beta_applied)
        and np.array_equal(phi_raw, rec.phi_applied)
        and np.array_equal(res.beta, rec.residual_beta)
        and np.array_equal(res.phi, rec.residual_phi)
        and res.logical_failure == rec.failure
    )


def oracle_equivalence(code: StabilizerCode, max_weight: int = 2, seed: int = 0,
                       modes=("distill", "repeater-segment"), cross_product: bool = False) -> CheckReport:
    """Exhaustive engine-versus-oracle comparison with a lookup decoder.

    Errors range over all Paulis of weight ``<= max_weight`` on the ``2n``
    transmitted qubits (both parties), and separately over all outcome-flip
    patterns of weight ``<= max_weight`` on the ``2n`` Bell measurements.
    ``cross_product`` also pairs every Bob-side error with every Bob-side
    flip pattern.
    """
    n = code.n
    dec = LookupDecoder(code)
    rng = np.random.default_rng(seed)
    rep = CheckReport(f"oracle-equivalence {code.name}")
    for mode in modes:
        for p in paulis_up_to(2 * n, max_weight):
            ea, eb = _split(p, n)
            rep.add(compare_case(code, dec, mode, rng, error_a=ea, error_b=eb), (mode, "error", str(p)))
        for p in paulis_up_to(2 * n, max_weight):
            if not p.weight:
                continue
            fa, fb = _split(p, n)
            # a flip pattern reads as (ds, dt) = (z, x)
            rep.add(compare_case(code, dec, mode, rng, flips_a=(fa.z, fa.x), flips_b=(fb.z, fb.x)),
                    (mode, "flips", str(p)))
        if cross_product:
            for e in paulis_up_to(n, max_weight):
                for f in paulis_up_to(n, max_weight):
                    if e.weight and f.weight:
                        rep.add(compare_case(code, dec, mode, rng, error_b=e, flips_b=(f.z, f.x)),
                                (mode, "both", str(e), str(f)))
    return rep


def noiseless_identity(code: StabilizerCode, runs: int = 1000, seed: int = 0) -> CheckReport:
    """Parity identity ``a + b = H1 s + H2 t + r`` and ``S = 0`` over random noiseless runs."""
    rng = np.random.default_rng(seed)
    rep = CheckReport(f"noiseless-identity {code.name}")
    for i in range(runs):
        r = T.run_swap_reference(code, rng)
        pred = P.syndrome(code, r["s"], r["t"], raw=True)
        rep.add(bool(np.array_equal(pred, r["a"] ^ r["b"])), ("parity", i))
        mode = "distill" if i % 2 == 0 else "repeater-segment"
        rec = T.run_protocol_reference(code, mode=mode, rng=rng)
        rep.add(not rec.syndrome.any() and not rec.failure, ("syndrome", mode, i))
    return rep


def two_way_exhaustive(code: StabilizerCode, max_weight: Optional[int] = None) -> CheckReport:
    """No accepted logical failure for any error of weight ``<= d - 1`` (one party's transmitted qubits)."""
    if max_weight is None:
        if code.d is None:
            raise ValueError("code distance unknown; pass max_weight")
        max_weight = code.d - 1
    rep = CheckReport(f"two-way {code.name}")
    for p in paulis_up_to(code.n, max_weight):
        res = P.distill_two_way(code, P.frame_from_paulis(code, error_b=p))
        rep.add(not (res.accepted and res.logical_failure), str(p))
    return rep


def default_suite(max_weight: int = 2) -> list[CheckReport]:
    reports = []
    for name in ("c422", "steane713"):
        code = builtin(name)
        reports.append(oracle_equivalence(code, max_weight))
        reports.append(noiseless_identity(code, 50))
        reports.append(two_way_exhaustive(code))
    return reports
