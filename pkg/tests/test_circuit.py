import dataclasses
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SMALL, SMALL_SWF
from helpers import honest_checkpoint
from procattest import circuit, privacy
from procattest.field import P
from procattest.circuit import CircuitConfig, ConfigError, EncodingError, PublicInputs


@pytest.fixture(scope="module")
def honest():
    return honest_checkpoint(SMALL, privacy.default_population(SMALL.m), SMALL_SWF, seed=3)


# -- configuration -------------------------------------------------------------------

@pytest.mark.parametrize("kw", [
    {"m": 7}, {"k": 0}, {"n_bits": 12}, {"bounds_mult": 0}, {"chain_length": 100},
    {"feature_max_ms": 2000}, {"d_min_ms": 0},
])
def test_invalid_configs(kw):
    with pytest.raises(ConfigError):
        CircuitConfig(**kw).validate()


def test_config_round_trip_and_digest():
    cfg = CircuitConfig(m=24, k=8)
    assert CircuitConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.digest() != CircuitConfig().digest()
    assert len(cfg.digest()) == 32
    with pytest.raises(ConfigError):
        CircuitConfig.from_dict({"m": 12, "bogus": 1})
    with pytest.raises(ConfigError):
        CircuitConfig.from_dict({"m": "twelve"})


def test_presets():
    assert (circuit.BASIC.m, circuit.EXTENDED.m, circuit.EXTENDED.k) == (12, 24, 8)
    assert circuit.BASIC.num_public == 6 + 24


# -- fixed point --------------------------------------------------------------------------

@given(st.fractions(min_value=0, max_value=1000))
def test_encoding_is_nearest_grid_point(v):
    s = circuit.encode_fixed_point(v)
    assert 0 <= s <= circuit.FIXED_POINT_MAX
    assert abs(Fraction(s) - v * Fraction(65535, 1000)) <= Fraction(1, 2)


@given(st.floats(min_value=0, max_value=1000), st.floats(min_value=0, max_value=1000))
def test_encoding_is_monotone(a, b):
    if a <= b:
        assert circuit.encode_fixed_point(a) <= circuit.encode_fixed_point(b)


@given(st.integers(min_value=0, max_value=65535))
def test_decode_encode_round_trip(s):
    assert circuit.encode_fixed_point(Fraction(s * 1000, 65535)) == s
    assert circuit.encode_fixed_point(circuit.decode_fixed_point(s)) == s


@pytest.mark.parametrize("bad", [-0.001, 1000.001, float("nan"), "abc", None])
def test_encoding_rejects_out_of_domain(bad):
    with pytest.raises(EncodingError):
        circuit.encode_fixed_point(bad)


def test_encoding_endpoints():
    assert circuit.encode_fixed_point(0) == 0
    assert circuit.encode_fixed_point(1000) == 65535
    assert circuit.encode_fixed_point(500) == 32768  # 32767.5 rounds half to even


@given(st.integers(0, 65535), st.integers(1, 65535), st.integers(1, 5))
def test_feature_bounds_are_clipped(mu, sigma, mult):
    lo, hi = circuit.feature_bounds(mu, sigma, mult)
    assert 0 <= lo <= mu <= hi <= 65535


# -- public inputs ------------------------------------------------------------------------

def test_public_inputs_round_trip(honest):
    pub = honest.public
    data = pub.to_bytes()
    assert len(data) == 32 * SMALL.num_public
    assert PublicInputs.from_bytes(data, SMALL.m) == pub
    with pytest.raises(ValueError):
        PublicInputs.from_bytes(data[:-1], SMALL.m)


def test_public_input_validation(honest):
    with pytest.raises(ValueError):
        dataclasses.replace(honest.public, mu=honest.public.mu[:-1]).validate(SMALL)
    with pytest.raises(ValueError):
        dataclasses.replace(honest.public, sigma=(70000,) * SMALL.m).validate(SMALL)
    with pytest.raises(ValueError):
        dataclasses.replace(honest.public, hash=b"x").validate(SMALL)


# -- synthesis ---------------------------------------------------------------------------

def test_honest_witness_satisfies(honest):
    assert circuit.is_satisfied(SMALL, honest.public, honest.witness)
    assert honest.public.duration == honest.witness.tau // 1000


def test_record_and_witness_modes_agree(honest):
    rec = circuit.synthesize(SMALL, honest.public, honest.witness, record=True)
    wit = circuit.synthesize(SMALL, honest.public, honest.witness, record=False)
    assert rec.num_constraints == wit.num_constraints
    assert rec.num_variables == wit.num_variables
    assert rec.values == wit.values
    # the recorded matrices, evaluated on the witness, give the prover's triples
    dot = lambda row: sum(k * wit.values[i] for i, k in row.items()) % P  # noqa: E731
    assert [(dot(a), dot(b), dot(c)) for a, b, c in rec.rows] == wit.evals
    assert rec.families == wit.families


def test_structure_is_witness_independent(honest):
    pub, wit = circuit.placeholder_inputs(SMALL)
    a = circuit.synthesize(SMALL, pub, wit, record=True)
    b = circuit.synthesize(SMALL, honest.public, honest.witness, record=True)
    assert a.rows == b.rows


def test_constraint_report():
    rep = circuit.constraint_count(SMALL)
    assert rep.total == rep.c1 + rep.c2 + rep.c3 + rep.c4
    assert rep.public_inputs == SMALL.num_public
    # C1 scales with k, C2 with m
    two = circuit.constraint_count(dataclasses.replace(SMALL, k=2))
    assert two.c1 == 2 * rep.c1 and two.c4 == rep.c4
    wide = circuit.constraint_count(dataclasses.replace(SMALL, m=12))
    assert wide.c2 == 2 * rep.c2


def test_shape_errors(honest):
    w = dataclasses.replace(honest.witness, features=honest.witness.features[:-1])
    with pytest.raises(ValueError):
        circuit.synthesize(SMALL, honest.public, w)
    w = dataclasses.replace(honest.witness, samples=())
    with pytest.raises(ValueError):
        circuit.synthesize(SMALL, honest.public, w)


@settings(max_examples=5)
@given(st.integers(min_value=0, max_value=2**40 - 1))
def test_duration_is_floor_of_timestamp(tau):
    h = honest_checkpoint(SMALL, privacy.default_population(SMALL.m), SMALL_SWF, seed=4)
    w = dataclasses.replace(h.witness, tau=tau, tau_prev=0)
    for d, ok in ((tau // 1000, True), (tau // 1000 + 1, False)):
        pub = dataclasses.replace(h.public, duration=d % (1 << 32))
        cs = circuit.synthesize(SMALL, pub, w)
        bad = {f for _, f in cs.unsatisfied()}
        assert ("C3" not in bad) == (ok and tau >= SMALL.d_min_ms and d < 1 << 32)
