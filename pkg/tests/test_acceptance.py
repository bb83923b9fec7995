import io
import math
import os
import time
from fractions import Fraction

import numpy as np
import pytest

from stabrep import analysis as A
from stabrep import verify
from stabrep.cli import main
from stabrep.codes import builtin, builtin_names, validate
from stabrep.decode import DecoderConfig
from stabrep.factory import build_family, hgp, random_regular_ldpc
from stabrep.noise import NoiseModel, combined_single_party, compose, sample_error
from stabrep.protocol import distill_two_way, frame_from_paulis

FULL = os.environ.get("STABREP_FULL_THRESHOLD") == "1"


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed <= self.seconds, f"took {self.elapsed:.0f}s, budget {self.seconds}s"


@pytest.mark.criterion(1, "oracle equivalence, weight <= 2, [[4,2,2]] and [[7,1,3]]")
def test_c1_oracle_equivalence():
    with Budget(300):
        reports = [verify.oracle_equivalence(builtin("c422"), 2, cross_product=True),
                   verify.oracle_equivalence(builtin("steane713"), 2)]
    for rep in reports:
        print(rep)
        assert rep.cases > 0 and rep.mismatches == 0, rep.examples


@pytest.mark.criterion(2, "noiseless parity identity and S = 0 over 1000 runs per builtin")
def test_c2_noiseless_identity():
    with Budget(60):
        reports = [verify.noiseless_identity(builtin(name), 1000, seed=i) for i, name in enumerate(builtin_names())]
    for rep in reports:
        print(rep)
        assert rep.mismatches == 0, rep.examples


@pytest.mark.criterion(3, "two-way tolerance on [[7,1,3]] up to d-1 = 2")
def test_c3_two_way_tolerance():
    code = builtin("steane713")
    n = code.n
    cases = 0
    with Budget(120):
        # both parties' transmitted qubits
        for p in verify.paulis_up_to(2 * n, code.d - 1):
            ea = type(p)(p.x[:n], p.z[:n])
            eb = type(p)(p.x[n:], p.z[n:])
            res = distill_two_way(code, frame_from_paulis(code, ea, eb))
            assert not (res.accepted and res.logical_failure), str(p)
            cases += 1
    assert cases == 1 + 3 * 2 * n + 9 * math.comb(2 * n, 2)


@pytest.mark.criterion(4, "error algebra and single-party flip rate")
def test_c4_error_algebra():
    with Budget(60):
        assert abs(compose(0.01, 0.02) - (0.03 - 4 / 3 * 0.0002)) <= 1e-12
        assert abs(compose(0.01, 0.02) - 0.0297333333333333) <= 1e-12
        assert abs(compose(0.75, 0.75) - 0.75) <= 1e-12
        model = NoiseModel(0.02, 0.03, 0.01)
        code = builtin("repetition(5)")
        rng = np.random.default_rng(2024)
        samples = 100_000
        hits = 0
        for _ in range(samples // code.n):
            f = sample_error(model, code, rng=rng)
            hits += int(np.count_nonzero(f.ds | f.dt))
        p = combined_single_party(model)
        sigma = math.sqrt(p * (1 - p) / samples)
        print(f"empirical {hits / samples:.5f} expected {p:.5f} sigma {sigma:.5f}")
        assert abs(hits / samples - p) <= 3 * sigma


@pytest.mark.criterion(5, "HGP rate family N = 625, 900, 1225 with K/N = 0.04")
def test_c5_rate_family():
    with Budget(60):
        for nb, n in [(20, 625), (24, 900), (28, 1225)]:
            cl = random_regular_ldpc(nb, seed=0)
            assert cl.rank == cl.n_checks
            code = hgp(cl)
            assert code.n == n
            assert Fraction(code.k, code.n) == Fraction(1, 25)
            assert validate(code).ok


@pytest.fixture(scope="module")
def code625():
    return build_family([20], instances_per_size=10, seed=0)[0]


@pytest.mark.criterion(6, "threshold CI profile: N = 625 monotone below threshold")
def test_c6_threshold_ci_profile(code625):
    dec = DecoderConfig(kind="bp-osd", osd_order=0)
    pts = []
    with Budget(1200):
        for i, pt in enumerate((0.05, 0.08, 0.11)):
            model = NoiseModel.from_total(pt)
            pts.append(A.run_trials(code625, model, dec, 10_000, 0, point_key=(0, i), p_t=pt))
    for p in pts:
        print(f"N={p.n} p_t={p.p_t} p_L={p.p_l:.4f} [{p.ci_lo:.4f}, {p.ci_hi:.4f}]")
    assert pts[0].ci_hi < pts[1].ci_lo
    assert pts[1].ci_hi < pts[2].ci_lo


@pytest.mark.skipif(not FULL, reason="full threshold sweep is opt-in: STABREP_FULL_THRESHOLD=1")
@pytest.mark.criterion("6-full", "threshold full profile: N = 625, 900 crossing and pinned p0 in [0.06, 0.12]")
def test_c6_threshold_full():
    codes = build_family([20, 24], instances_per_size=10, seed=0)
    table = A.sweep(codes, A.log_grid(0.05, 0.13, 8), DecoderConfig(kind="bp-osd", osd_order=0), 10_000, 0)
    for p in table:
        print(f"N={p.n} p_t={p.p_t:.4f} p_L={p.p_l:.4f}")
    crossings = table.crossings()
    fit = A.fit_threshold(table, pin_delta=0.5)
    print("crossings", crossings, "p0", fit.p0, "+-", fit.stderr["p0"], "excluded", fit.excluded)
    assert crossings
    assert 0.06 <= fit.p0 <= 0.12


@pytest.mark.criterion(7, "chain scaling on [[7,1,3]], N = 10")
def test_c7_chain_scaling():
    code = builtin("steane713")
    model = NoiseModel.from_total(0.03)
    dec = DecoderConfig(kind="lookup")
    with Budget(600):
        seg = A.run_trials(code, model, dec, 100_000, 11, "segment", point_key=(0,))
        chain = A.run_trials(code, model, dec, 20_000, 11, "chain", segments=10, include_end_nodes=False,
                             point_key=(1,))
    p = seg.p_l
    pred = 1 - (1 - p) ** 10
    var_seg = (10 * (1 - p) ** 9) ** 2 * p * (1 - p) / seg.trials
    var_chain = pred * (1 - pred) / chain.trials
    sigma = math.sqrt(var_seg + var_chain)
    print(f"p_L={p:.5f} predicted chain={pred:.5f} empirical={chain.p_l:.5f} sigma={sigma:.5f}")
    assert abs(chain.p_l - pred) <= 3 * sigma


TRUE = A.FitParams(c=0.3, p0=0.1, alpha=0.3, delta=0.5, residual_norm=0.0)
PARAMS = ("c", "p0", "alpha", "delta")


@pytest.mark.criterion(8, "fit consistency: exact recovery and calibrated standard errors")
def test_c8_fit_noiseless():
    with Budget(60):
        tab = A.synthesize(TRUE, [100, 400, 900], A.log_grid(0.03, 0.08, 6))
        free = A.fit_threshold(tab, weighted=False)
        pinned = A.fit_threshold(tab, pin_delta=0.5, weighted=False)
    for fit in (free, pinned):
        for k in PARAMS:
            assert abs(getattr(fit, k) / getattr(TRUE, k) - 1) <= 0.01, (k, getattr(fit, k))


@pytest.mark.criterion(8, "fit consistency: exact recovery and calibrated standard errors")
def test_c8_fit_binomial_coverage():
    # the reported standard errors are honest if true values land within 1 SE about 68% of the time
    rng = np.random.default_rng(8)
    reps = 300
    within1 = dict.fromkeys(PARAMS, 0)
    within2 = dict.fromkeys(PARAMS, 0)
    with Budget(60):
        for _ in range(reps):
            tab = A.synthesize(TRUE, [100, 400, 900], A.log_grid(0.07, 0.09, 5), trials=10_000, rng=rng)
            fit = A.fit_threshold(tab)
            for k in PARAMS:
                err = abs(getattr(fit, k) - getattr(TRUE, k))
                within1[k] += err <= fit.stderr[k]
                within2[k] += err <= 2 * fit.stderr[k]
    print("1 SE", {k: v / reps for k, v in within1.items()}, "2 SE", {k: v / reps for k, v in within2.items()})
    for k in PARAMS:
        assert 0.60 <= within1[k] / reps <= 0.76, k
        assert within2[k] / reps >= 0.90, k


def _cli(*argv):
    assert main(list(argv), io.StringIO()) == 0


@pytest.mark.criterion(9, "determinism: reruns from embedded config are byte-identical at 1 and 8 workers")
def test_c9_determinism(tmp_path):
    runs = {
        "distill.json": ["distill", "--code", "steane713", "--pb", "0.04", "--pm", "0.01", "--decoder", "lookup",
                         "--trials", "3000", "--seed", "17"],
        "repeater.json": ["repeater", "--code", "steane713", "--segments", "5", "--pb", "0.02", "--pr", "0.005",
                          "--trials", "1000", "--seed", "3"],
        "sweep.csv": ["sweep", "--codes", "c422", "steane713", "--pt-grid", "0.02:0.1:3", "--decoder", "lookup",
                      "--trials", "1000", "--seed", "9"],
    }
    with Budget(300):
        for name, argv in runs.items():
            out = tmp_path / name
            _cli("--workers", "1", *argv, "--out", str(out))
            first = out.read_bytes()
            _cli("--workers", "8", *argv, "--out", str(out))
            assert out.read_bytes() == first, name
            config = str(out) + ".json" if name.endswith(".csv") else str(out)
            for workers in ("1", "8"):
                _cli("--workers", workers, "--config", config)
                assert out.read_bytes() == first, (name, workers)
