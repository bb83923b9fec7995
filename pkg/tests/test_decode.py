import itertools

import numpy as np
import pytest

from stabrep.codes import builtin
from stabrep.decode import (
    BPOSDDecoder, DecoderConfig, LookupDecoder, NotCSSError, decode_bp, decode_lookup, decode_osd, make_decoder,
    syndrome_of,
)
from stabrep.factory import hgp, random_regular_ldpc
from stabrep.gf2 import PauliVector


@pytest.fixture(scope="module")
def hgp625():
    return hgp(random_regular_ldpc(20, seed=0))


def weight(v):
    return PauliVector.from_symplectic(v).weight


def brute_min_weights(code):
    # independent oracle: minimum weight per syndrome over all 4^n Paulis
    n = code.n
    best = {}
    for bits in itertools.product((0, 1), repeat=2 * n):
        e = np.array(bits, dtype=np.uint8)
        key = tuple(syndrome_of(code, e))
        w = weight(e)
        if key not in best or w < best[key]:
            best[key] = w
    return best


@pytest.mark.parametrize("name", ["c422", "steane713", "five513", "repetition(3)"])
def test_lookup_matches_brute_force(name):
    code = builtin(name)
    dec = LookupDecoder(code)
    for key, w in brute_min_weights(code).items():
        est, ok = dec.decode(np.array(key, dtype=np.uint8))
        assert ok
        assert tuple(syndrome_of(code, est)) == key
        assert weight(est) == w


def test_lookup_examples():
    st = builtin("steane713")
    assert not decode_lookup(st, np.zeros(6, np.uint8)).any()
    e = PauliVector.single(7, 2, "X")
    assert PauliVector.from_symplectic(decode_lookup(st, syndrome_of(st, e))) == e
    c = builtin("c422")
    est = decode_lookup(c, np.array([1, 0], np.uint8))
    p = PauliVector.from_symplectic(est)
    assert p.weight == 1 and not p.x.any()
    with pytest.raises(ValueError):
        LookupDecoder(c).decode(np.zeros(3, np.uint8))


def test_lookup_cutoff():
    with pytest.raises(ValueError):
        LookupDecoder(hgp(random_regular_ldpc(8, seed=0)))


def test_config_validation_and_roundtrip():
    cfg = DecoderConfig(kind="bp-osd", osd_order=2, prior_p=0.01)
    assert DecoderConfig.from_dict(cfg.as_dict()) == cfg
    with pytest.raises(ValueError):
        DecoderConfig(osd_order=-1)
    with pytest.raises(ValueError):
        DecoderConfig(bp_iterations=0)
    with pytest.raises(ValueError):
        DecoderConfig(kind="magic")


def test_non_css_falls_back():
    five = builtin("five513")
    with pytest.raises(NotCSSError):
        BPOSDDecoder(five, DecoderConfig(), p=0.01)
    assert isinstance(make_decoder(five, DecoderConfig(), p=0.01), LookupDecoder)


def test_bp_zero_syndrome(hgp625):
    est, conv = decode_bp(hgp625, np.zeros(hgp625.num_checks, np.uint8), DecoderConfig(kind="bp"), p=0.01)
    assert conv and not est.any()


def test_bp_single_errors_converge(hgp625):
    n = hgp625.n
    dec = BPOSDDecoder(hgp625, DecoderConfig(kind="bp"), p=0.01)
    good = 0
    for q in range(n):
        e = PauliVector.single(n, q, "X").symplectic()
        est, conv, _ = dec.bp(syndrome_of(hgp625, e))
        good += conv and np.array_equal(est, e)
    assert good >= 0.99 * n


def test_osd_satisfies_random_syndromes(hgp625):
    rng = np.random.default_rng(0)
    dec = BPOSDDecoder(hgp625, DecoderConfig(kind="bp-osd", bp_iterations=5), p=0.05)
    for _ in range(10_000):
        s = rng.integers(0, 2, hgp625.num_checks, dtype=np.uint8)
        est, ok = dec.decode(s)
        assert ok
        assert np.array_equal(syndrome_of(hgp625, est), s)


def test_osd_weight_one(hgp625):
    n = hgp625.n
    cfg = DecoderConfig(kind="bp-osd", prior_p=0.01)
    dec = BPOSDDecoder(hgp625, cfg)
    for q in range(0, n, 5):
        e = PauliVector.single(n, q, "Z").symplectic()
        s = syndrome_of(hgp625, e)
        _, _, post = dec.bp(s)
        est = decode_osd(hgp625, s, post, cfg)
        assert weight(est) == 1
        assert np.array_equal(syndrome_of(hgp625, est), s)


def test_bposd_orders_satisfy_syndrome(hgp625):
    rng = np.random.default_rng(1)
    for order in (0, 3):
        dec = BPOSDDecoder(hgp625, DecoderConfig(osd_order=order), p=0.08)
        for _ in range(50):
            e = np.zeros(2 * hgp625.n, np.uint8)
            e[rng.random(2 * hgp625.n) < 0.05] = 1
            s = syndrome_of(hgp625, e)
            est, ok = dec.decode(s)
            assert ok and np.array_equal(syndrome_of(hgp625, est), s)


def test_sum_product_variant(hgp625):
    e = PauliVector.single(hgp625.n, 7, "Y").symplectic()
    est, conv = decode_bp(hgp625, syndrome_of(hgp625, e), DecoderConfig(kind="bp", bp_variant="sum-product"), 0.01)
    assert conv and np.array_equal(est, e)


def test_bposd_on_steane():
    code = builtin("steane713")
    dec = BPOSDDecoder(code, DecoderConfig(), p=0.04)
    for v in range(64):
        s = np.array([(v >> i) & 1 for i in range(6)], np.uint8)
        est, ok = dec.decode(s)
        assert ok and np.array_equal(syndrome_of(code, est), s)
    hx = code.hx.to_array()
    for q in range(7):
        e = PauliVector.single(7, q, "X").symplectic()
        est, _ = dec.decode(syndrome_of(code, e))
        # min-sum stops at iteration one on a weight-4 solution when the qubit is in every check
        assert np.array_equal(est, e) == (hx[:, q].sum() < hx.shape[0])
