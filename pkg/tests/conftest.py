import random
import time
from dataclasses import dataclass

import pytest
from hypothesis import HealthCheck, settings

from procattest import circuit, evidence, privacy, session, snark

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=50
)
settings.load_profile("default")

# a reduced circuit that keeps every constraint family but proves in ~2 s
SMALL = circuit.CircuitConfig(m=6, k=1, chain_length=64)
SMALL_SWF = evidence.SWFParams(memory_cost=8 * evidence.MIB, time_cost=1, chain_length=64)


# -- acceptance report -------------------------------------------------------------

ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def record(criterion: int, part: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        ok = all(p[1] for p in parts)
        tr.write_line(f"criterion {crit:>2}: {'PASS' if ok else 'FAIL'}")
        for part, pok, detail in parts:
            tr.write_line(f"    [{'pass' if pok else 'FAIL'}] {part}: {detail}")


# -- shared artefacts -------------------------------------------------------------

@pytest.fixture(scope="session")
def small_population():
    return privacy.default_population(SMALL.m)


@pytest.fixture(scope="session")
def small_keys():
    return snark.setup(SMALL, seed=b"tests/small")


@pytest.fixture(scope="session")
def small_session(small_keys, small_population):
    stream = session.synthetic_stream(3, small_population, seed=11)
    return session.attest(stream, small_keys.proving_key, small_population, SMALL_SWF,
                          rng=random.Random(11))


@pytest.fixture(scope="session")
def basic_keys():
    return snark.setup(circuit.BASIC, seed=b"tests/basic")


@dataclass
class TimedSession:
    transcript: session.SessionTranscript
    verdict: session.SessionVerdict
    attest_seconds: float
    verify_seconds: float


@pytest.fixture(scope="session")
def basic_session(basic_keys):
    """A full 120-checkpoint session with production SWF parameters, timed."""
    population = privacy.default_population(circuit.BASIC.m)
    stream = session.synthetic_stream(120, population, seed=2024)
    t0 = time.perf_counter()
    tr = session.attest(stream, basic_keys.proving_key, population, rng=random.Random(2024))
    t1 = time.perf_counter()
    # verify what a third party receives: the serialized bundle
    bundle = snark.ProofBundle.from_bytes(tr.bundle.to_bytes())
    verdict = session.verify_bundle(basic_keys.verifying_key, bundle, population=population)
    t2 = time.perf_counter()
    return TimedSession(tr, verdict, t1 - t0, t2 - t1)
