"""Differential-privacy release of population parameters and analytic bounds.

Also generates synthetic keystroke-feature traces and runs the
privacy/utility simulation: features are encoded to 16-bit fixed point and
checked against the same per-feature intervals the circuit enforces.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import commitments as cm
from .circuit import DOMAIN_MAX_MS, FIXED_POINT_MAX, encode_fixed_point, feature_bounds

ADVERSARIES = ("naive-uniform", "distribution-matched")
DEFAULT_R1 = 0.111


class InvalidBudget(ValueError):
    pass


class InvalidInput(ValueError):
    pass


# -- population parameters -------------------------------------------------------

@dataclass(frozen=True)
class PopulationParams:
    """Per-feature ``mu`` and ``sigma`` in 16-bit fixed point (0..65535 = 0..1000 ms)."""

    mu: tuple[int, ...]
    sigma: tuple[int, ...]
    mult: int = 3
    provenance: dict = field(default_factory=lambda: {"kind": "raw"}, compare=False)

    def __post_init__(self):
        if len(self.mu) != len(self.sigma) or not self.mu:
            raise InvalidInput("mu and sigma must be non-empty and equally long")
        if any(not 0 <= x <= FIXED_POINT_MAX for x in self.mu):
            raise InvalidInput("mu outside the fixed-point domain")
        if any(not 0 < s <= FIXED_POINT_MAX for s in self.sigma):
            raise InvalidInput("sigma must be positive")
        if self.mult < 1:
            raise InvalidInput("bounds multiplier must be positive")

    @property
    def m(self) -> int:
        return len(self.mu)

    @property
    def bounds(self) -> list[tuple[int, int]]:
        return [feature_bounds(u, s, self.mult) for u, s in zip(self.mu, self.sigma)]

    @property
    def bounds_ms(self) -> list[tuple[float, float]]:
        scale = DOMAIN_MAX_MS / FIXED_POINT_MAX
        return [(a * scale, b * scale) for a, b in self.bounds]

    @classmethod
    def from_ms(cls, mu_ms: Sequence[float], sigma_ms: Sequence[float], mult: int = 3,
                provenance: dict | None = None) -> "PopulationParams":
        mu = tuple(encode_fixed_point(min(max(float(x), 0.0), DOMAIN_MAX_MS)) for x in mu_ms)
        sigma = tuple(max(1, encode_fixed_point(min(max(float(s), 0.0), DOMAIN_MAX_MS))) for s in sigma_ms)
        return cls(mu, sigma, mult, dict(provenance or {"kind": "raw"}))

    def with_mult(self, mult: int) -> "PopulationParams":
        return replace(self, mult=mult)

    def head(self, m: int) -> "PopulationParams":
        return replace(self, mu=self.mu[:m], sigma=self.sigma[:m])

    def to_json(self) -> str:
        return json.dumps({"mu": list(self.mu), "sigma": list(self.sigma), "mult": self.mult,
                           "provenance": self.provenance}, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PopulationParams":
        try:
            d = json.loads(text)
            return cls(tuple(int(x) for x in d["mu"]), tuple(int(x) for x in d["sigma"]),
                       int(d.get("mult", 3)), dict(d.get("provenance", {"kind": "raw"})))
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise InvalidInput(f"bad population file: {exc}") from exc


@dataclass(frozen=True)
class DPBudget:
    eps: float
    delta: float
    n: int

    def validate(self) -> None:
        if not self.eps > 0 or not math.isfinite(self.eps):
            raise InvalidBudget("epsilon must be positive and finite")
        if not 0 < self.delta < 1:
            raise InvalidBudget("delta must lie in (0, 1)")
        if self.n < 2:
            raise InvalidBudget("need at least two records to release statistics")


def gaussian_sigma(sensitivity: float, eps: float, delta: float) -> float:
    """Smallest noise scale of the classic Gaussian mechanism."""
    if not eps > 0:
        raise InvalidBudget("epsilon must be positive")
    if not 0 < delta < 1:
        raise InvalidBudget("delta must lie in (0, 1)")
    if sensitivity < 0:
        raise InvalidInput("sensitivity must be non-negative")
    return sensitivity * math.sqrt(2 * math.log(1.25 / delta)) / eps


def clamp(features, bounds: Sequence[tuple[float, float]]) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    lo = np.array([a for a, _ in bounds], dtype=float)
    hi = np.array([b for _, b in bounds], dtype=float)
    return np.clip(x, lo, hi)


@dataclass(frozen=True)
class Release:
    """Noisy statistics in milliseconds, before fixed-point encoding."""

    mean: np.ndarray
    std: np.ndarray
    noise_mean: np.ndarray
    noise_m2: np.ndarray


def dp_statistics(features, bounds, budget: DPBudget | None, rng: np.random.Generator) -> Release:
    """Noisy per-feature mean and standard deviation of clamped records.

    The mean of ``x`` and the mean of ``(x - a)^2`` each get Gaussian noise
    calibrated to ``(b - a) / N`` and ``(b - a)^2 / N``; ``budget=None``
    releases the exact clamped statistics.
    """
    x = clamp(features, bounds)
    if x.ndim != 2:
        raise InvalidInput("features must be an N x m matrix")
    n, m = x.shape
    if n < 2:
        raise InvalidBudget("refusing to release statistics of fewer than two records")
    lo = np.array([a for a, _ in bounds], dtype=float)
    width = np.array([b - a for a, b in bounds], dtype=float)
    mean = x.mean(axis=0)
    m2 = ((x - lo) ** 2).mean(axis=0)
    if budget is None:
        s_mean = np.zeros(m)
        s_m2 = np.zeros(m)
    else:
        budget.validate()
        if budget.n != n:
            raise InvalidInput("budget cohort size does not match the data")
        s_mean = np.array([gaussian_sigma(w / n, budget.eps, budget.delta) for w in width])
        s_m2 = np.array([gaussian_sigma(w * w / n, budget.eps, budget.delta) for w in width])
    noisy_mean = mean + rng.normal(0.0, 1.0, m) * s_mean
    noisy_m2 = m2 + rng.normal(0.0, 1.0, m) * s_m2
    var = np.maximum(0.0, noisy_m2 - (noisy_mean - lo) ** 2)
    return Release(noisy_mean, np.sqrt(var), s_mean, s_m2)


def release_population(
    features,
    bounds: Sequence[tuple[float, float]],
    budget: DPBudget | None,
    rng: np.random.Generator,
    mult: int = 3,
    seed: int | None = None,
) -> PopulationParams:
    """DP release of ``(mu, sigma)`` for the circuit, with provenance attached."""
    rel = dp_statistics(features, bounds, budget, rng)
    n = np.asarray(features).shape[0]
    prov = {"kind": "raw", "N": int(n)} if budget is None else {
        "kind": "dp-released", "eps": budget.eps, "delta": budget.delta, "N": int(n),
        "noise_mean_ms": [float(s) for s in rel.noise_mean],
        "clamp_ms": [[float(a), float(b)] for a, b in bounds],
    }
    if seed is not None:
        prov["seed"] = seed
    return PopulationParams.from_ms(rel.mean, rel.std, mult, prov)


# -- analytic calculators ----------------------------------------------------------

def binary_entropy(p: float) -> float:
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def minimum_leakage(alpha: float) -> float:
    """Bits any verifier with false-accept rate ``alpha`` must learn: ``1 - h(alpha)``."""
    if not 0 < alpha < 1:
        raise InvalidInput("alpha must lie in (0, 1)")
    return 1.0 - binary_entropy(alpha)


def effective_samples(n: int, r1: float) -> float:
    return n * (1 - r1) / (1 + r1)


def session_false_accept(alpha: float, n: int, r1: float = 0.0) -> tuple[float, float]:
    """``(n_eff, log10(alpha ** n_eff))`` for ``n`` autocorrelated checkpoints."""
    if not 0 < alpha < 1:
        raise InvalidInput("alpha must lie in (0, 1)")
    if n < 1:
        raise InvalidInput("n must be at least 1")
    if not 0 <= r1 < 1:
        raise InvalidInput("r1 must lie in [0, 1)")
    n_eff = effective_samples(n, r1)
    return n_eff, n_eff * math.log10(alpha)


def detection_probability(f: float, k: int, n: int) -> float:
    """Chance that ``k`` samples in each of ``n`` checkpoints hit a fabricated link."""
    if not 0 <= f <= 1:
        raise InvalidInput("f must lie in [0, 1]")
    if k < 1 or n < 1:
        raise InvalidInput("k and n must be at least 1")
    return -math.expm1(k * n * math.log1p(-f)) if f < 1 else 1.0


def miss_probability_log10(f: float, k: int, n: int) -> float:
    """``log10((1 - f)^(k n))``, exact where the probability underflows."""
    if not 0 <= f < 1:
        raise InvalidInput("f must lie in [0, 1)")
    return k * n * math.log10(1 - f)


def simulate_detection(f: float, k: int, n: int, trials: int, rng: np.random.Generator,
                       chain_length: int = 4096) -> float:
    """Monte Carlo: fabricate ``round(f N)`` random links per checkpoint, sample ``k`` each.

    Picks are uniform with replacement; the number of distinct picks that land
    in a uniformly random fabricated set is hypergeometric, so the fabricated
    set never has to be materialised.
    """
    if trials < 1:
        raise InvalidInput("trials must be positive")
    bad = round(f * chain_length)
    picks = np.sort(rng.integers(0, chain_length, size=(trials, n, k)), axis=2)
    distinct = 1 + (np.diff(picks, axis=2) != 0).sum(axis=2)
    hits = rng.hypergeometric(bad, chain_length - bad, distinct) > 0
    return float(hits.any(axis=1).mean())


# -- synthetic traces --------------------------------------------------------------

def default_population(m: int = 12, mult: int = 3) -> PopulationParams:
    """Synthetic cohort where ``mu +- 3 sigma`` spans roughly 79% of the domain.

    With that width a uniform forger passes a 12-feature check about 6% of the
    time.
    """
    mu = np.linspace(440.0, 560.0, 24)
    sigma = np.linspace(125.0, 138.0, 24)
    order = np.random.default_rng(12345).permutation(24)
    return PopulationParams.from_ms(mu[order][:m], sigma[order][:m], mult, {"kind": "synthetic"})


@dataclass(frozen=True)
class SimulationConfig:
    n_sessions: int = 1000
    n_checkpoints: int = 1
    m: int = 12
    mult: int = 3
    eps: float | None = None
    delta: float = 1e-5
    cohort: int = 2000
    adversary: str = "naive-uniform"
    r1: float = DEFAULT_R1
    quantize: bool = True
    dp_repeats: int = 5
    seed: int = 0

    def validate(self) -> None:
        if self.adversary not in ADVERSARIES:
            raise InvalidInput(f"adversary must be one of {ADVERSARIES}")
        if self.m < 1 or self.n_sessions < 1 or self.n_checkpoints < 1:
            raise InvalidInput("sizes must be positive")
        if not 0 <= self.r1 < 1:
            raise InvalidInput("r1 must lie in [0, 1)")
        if self.eps is not None and not self.eps > 0:
            raise InvalidBudget("epsilon must be positive")
        if self.cohort < 2:
            raise InvalidBudget("cohort must have at least two members")

    @property
    def label(self) -> str:
        eps = "none" if self.eps is None else f"{self.eps:g}"
        return f"m={self.m} mult={self.mult} eps={eps} adv={self.adversary}"


@dataclass
class TraceSet:
    genuine: np.ndarray  # sessions x checkpoints x m, milliseconds
    adversarial: np.ndarray
    genuine_gaps: np.ndarray  # sessions x checkpoints, milliseconds
    adversarial_gaps: np.ndarray


def _ms_arrays(population: PopulationParams) -> tuple[np.ndarray, np.ndarray]:
    scale = DOMAIN_MAX_MS / FIXED_POINT_MAX
    return np.array(population.mu) * scale, np.array(population.sigma) * scale


def ar1(rng: np.random.Generator, shape: tuple[int, int, int], r1: float) -> np.ndarray:
    """Stationary unit-variance AR(1) along axis 1."""
    s, n, m = shape
    z = rng.standard_normal(shape)
    out = np.empty(shape)
    out[:, 0] = z[:, 0]
    scale = math.sqrt(1 - r1 * r1)
    for t in range(1, n):
        out[:, t] = r1 * out[:, t - 1] + scale * z[:, t]
    return out


def _gaps(rng: np.random.Generator, s: int, n: int) -> np.ndarray:
    return np.clip(rng.normal(30_000, 3_000, (s, n)), cm.D_MIN_MS, cm.D_MAX_MS)


def generate_traces(population: PopulationParams, config: SimulationConfig) -> TraceSet:
    """Labelled genuine and forged feature traces, clipped to the encoding domain."""
    config.validate()
    rng = np.random.default_rng([config.seed, config.m, config.n_checkpoints, 1])
    mu, sigma = _ms_arrays(population.head(config.m))
    shape = (config.n_sessions, config.n_checkpoints, config.m)
    genuine = mu + sigma * ar1(rng, shape, config.r1)
    if config.adversary == "naive-uniform":
        forged = rng.uniform(0, DOMAIN_MAX_MS, shape)
    else:
        forged = mu + sigma * rng.standard_normal(shape)
    return TraceSet(
        np.clip(genuine, 0, DOMAIN_MAX_MS), np.clip(forged, 0, DOMAIN_MAX_MS),
        _gaps(rng, config.n_sessions, config.n_checkpoints),
        _gaps(rng, config.n_sessions, config.n_checkpoints),
    )


def lag1_autocorrelation(traces: np.ndarray) -> float:
    """Mean lag-1 autocorrelation over sessions and features."""
    x = traces - traces.mean(axis=1, keepdims=True)
    num = (x[:, 1:] * x[:, :-1]).sum(axis=1)
    den = (x * x).sum(axis=1)
    return float(np.mean(num / den))


def encode_array(values_ms: np.ndarray) -> np.ndarray:
    """Vectorised fixed-point encoding (round half to even, like the scalar version)."""
    return np.rint(np.asarray(values_ms) * FIXED_POINT_MAX / DOMAIN_MAX_MS).astype(np.int64)


def intervals(population: PopulationParams, quantize: bool = True) -> np.ndarray:
    """``m x 2`` acceptance intervals, in fixed point or (unquantized) milliseconds."""
    if quantize:
        return np.array(population.bounds, dtype=float)
    mu, sigma = _ms_arrays(population)
    return np.stack([np.maximum(0, mu - population.mult * sigma),
                     np.minimum(DOMAIN_MAX_MS, mu + population.mult * sigma)], axis=1)


def checkpoint_accepts(features_ms: np.ndarray, gaps_ms: np.ndarray, bounds: np.ndarray,
                       quantize: bool = True) -> np.ndarray:
    """Per-checkpoint verdict: every feature in bounds and the gap within limits."""
    x = encode_array(features_ms) if quantize else features_ms
    ok = ((x >= bounds[:, 0]) & (x <= bounds[:, 1])).all(axis=-1)
    return ok & (gaps_ms >= cm.D_MIN_MS) & (gaps_ms <= cm.D_MAX_MS)


def naive_acceptance(population: PopulationParams) -> float:
    """Analytic per-checkpoint pass rate of uniformly random features."""
    p = 1.0
    for a, b in population.bounds:
        p *= (b - a + 1) / (FIXED_POINT_MAX + 1)
    return p


@dataclass(frozen=True)
class SimulationRow:
    label: str
    m: int
    mult: int
    eps: float | None
    adversary: str
    n_checkpoints: int
    tpr: float
    tnr: float
    checkpoint_forgery_rate: float

    @property
    def balanced_accuracy(self) -> float:
        return (self.tpr + self.tnr) / 2


@dataclass
class SimulationReport:
    rows: list[SimulationRow]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "m", "mult", "eps", "adversary", "n_checkpoints", "tpr", "tnr",
                    "balanced_accuracy", "checkpoint_forgery_rate"])
        for r in self.rows:
            w.writerow([r.label, r.m, r.mult, "none" if r.eps is None else r.eps, r.adversary,
                        r.n_checkpoints, f"{r.tpr:.6f}", f"{r.tnr:.6f}",
                        f"{r.balanced_accuracy:.6f}", f"{r.checkpoint_forgery_rate:.6f}"])
        return buf.getvalue()

    def summary(self) -> str:
        lines = [f"{'configuration':<48} {'TPR':>7} {'TNR':>7} {'bal.acc':>8}"]
        for r in self.rows:
            lines.append(f"{r.label:<48} {r.tpr:7.4f} {r.tnr:7.4f} {r.balanced_accuracy:8.4f}")
        return "\n".join(lines)

    def find(self, **kw) -> SimulationRow:
        for r in self.rows:
            if all(getattr(r, k) == v for k, v in kw.items()):
                return r
        raise KeyError(kw)


def _cohort(population: PopulationParams, size: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng([seed, population.m, size, 2])
    mu, sigma = _ms_arrays(population)
    return np.clip(mu + sigma * rng.standard_normal((size, population.m)), 0, DOMAIN_MAX_MS)


def simulate(config: SimulationConfig, population: PopulationParams | None = None) -> SimulationRow:
    """Balanced accuracy of the circuit's acceptance rule for one configuration.

    Parameters are estimated from a synthetic cohort (exactly, or through the
    DP release when ``eps`` is set, averaged over ``dp_repeats`` releases).
    """
    config.validate()
    truth = (population or default_population(24)).head(config.m).with_mult(config.mult)
    traces = generate_traces(truth, config)
    cohort = _cohort(truth, config.cohort, config.seed)
    domain = [(0.0, float(DOMAIN_MAX_MS))] * config.m
    repeats = 1 if config.eps is None else config.dp_repeats
    dp_rng = np.random.default_rng([config.seed, 3, int(1e6 * (config.eps or 0))])
    tpr = tnr = forged_cp = 0.0
    for _ in range(repeats):
        budget = None if config.eps is None else DPBudget(config.eps, config.delta, config.cohort)
        rel = dp_statistics(cohort, domain, budget, dp_rng)
        if config.quantize:
            bounds = intervals(PopulationParams.from_ms(rel.mean, rel.std, config.mult))
        else:
            mu = np.clip(rel.mean, 0, DOMAIN_MAX_MS)
            bounds = np.stack([np.maximum(0, mu - config.mult * rel.std),
                               np.minimum(DOMAIN_MAX_MS, mu + config.mult * rel.std)], axis=1)
        g = checkpoint_accepts(traces.genuine, traces.genuine_gaps, bounds, config.quantize)
        a = checkpoint_accepts(traces.adversarial, traces.adversarial_gaps, bounds, config.quantize)
        tpr += g.all(axis=1).mean()
        tnr += 1 - a.all(axis=1).mean()
        forged_cp += a.mean()
    return SimulationRow(config.label, config.m, config.mult, config.eps, config.adversary,
                         config.n_checkpoints, tpr / repeats, tnr / repeats, forged_cp / repeats)


def default_sweep(seed: int = 0, n_sessions: int = 4000) -> list[SimulationConfig]:
    base = SimulationConfig(n_sessions=n_sessions, seed=seed)
    out = [replace(base, eps=e) for e in (None, 1.0, 0.1)]
    out += [replace(base, m=m) for m in (6, 24)]
    out += [replace(base, mult=k) for k in (2, 4)]
    out.append(replace(base, adversary="distribution-matched"))
    return out


def simulate_privacy_utility(configs: Iterable[SimulationConfig],
                             population: PopulationParams | None = None) -> SimulationReport:
    return SimulationReport([simulate(c, population) for c in configs])


def check_orderings(report: SimulationReport) -> dict[str, bool]:
    """The qualitative trends expected of a sweep produced by :func:`default_sweep`."""
    acc = lambda **kw: report.find(adversary="naive-uniform", **kw).balanced_accuracy  # noqa: E731
    return {
        "eps: none >= 1.0 >= 0.1": acc(m=12, mult=3, eps=None) >= acc(m=12, mult=3, eps=1.0)
        >= acc(m=12, mult=3, eps=0.1),
        "m: 6 <= 12 <= 24": acc(m=6, mult=3, eps=None) <= acc(m=12, mult=3, eps=None)
        <= acc(m=24, mult=3, eps=None),
        "bounds: 2 >= 3 >= 4 sigma": acc(m=12, mult=2, eps=None) >= acc(m=12, mult=3, eps=None)
        >= acc(m=12, mult=4, eps=None),
    }
