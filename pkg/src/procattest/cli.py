"""Command line front end.

Exit status: 0 success or accept, 1 verification reject, 2 usage or
configuration error.  Keys default to ``$PROCATTEST_KEY_DIR`` (else ``./keys``).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import random
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import circuit, evidence, privacy, session, snark
from .circuit import CircuitConfig, ConfigError

EXIT_OK, EXIT_REJECT, EXIT_USAGE = 0, 1, 2
KEY_DIR_ENV = "PROCATTEST_KEY_DIR"
PK_FILE, VK_FILE, SETUP_FILE = "proving.key", "verifying.key", "setup.json"


class UsageError(Exception):
    pass


def _key_dir(arg: str | None) -> Path:
    return Path(arg or os.environ.get(KEY_DIR_ENV) or "keys")


def _read_json(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must be a JSON object")
    return data


def load_circuit_config(path: str | None) -> CircuitConfig:
    """``basic``, ``extended``, or a JSON file (optionally with a ``circuit`` section)."""
    if path in (None, "basic"):
        return circuit.BASIC
    if path == "extended":
        return circuit.EXTENDED
    data = _read_json(path)
    try:
        return CircuitConfig.from_dict(data.get("circuit", data))
    except ConfigError as exc:
        raise UsageError(f"invalid circuit config: {exc}") from exc


def load_swf_params(path: str | None, config: CircuitConfig) -> evidence.SWFParams:
    data = _read_json(path) if path not in (None, "basic", "extended") else {}
    swf = dict(data.get("swf", {}))
    if "salt" in swf:
        swf["salt"] = bytes.fromhex(swf["salt"])
    try:
        params = evidence.SWFParams(**{"chain_length": config.chain_length, **swf})
        params.validate()
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid work-function parameters: {exc}") from exc
    return params


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# -- subcommands ---------------------------------------------------------------

def cmd_setup(args) -> int:
    config = load_circuit_config(args.config)
    seed = None if args.seed is None else str(args.seed).encode()
    t0 = time.perf_counter()
    try:
        art = snark.setup(config, seed, production=args.production)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.out or _key_dir(None))
    out.mkdir(parents=True, exist_ok=True)
    (out / PK_FILE).write_bytes(art.proving_key_bytes())
    (out / VK_FILE).write_bytes(art.verifying_key_bytes())
    info = {
        "circuit_digest": art.circuit_digest.hex(), "curve": art.curve, "config": config.to_dict(),
        "proving_key_sha256": _sha(out / PK_FILE), "verifying_key_sha256": _sha(out / VK_FILE),
        "proving_key_bytes": (out / PK_FILE).stat().st_size,
        "verifying_key_bytes": (out / VK_FILE).stat().st_size,
        "seeded": seed is not None,
    }
    (out / SETUP_FILE).write_text(json.dumps(info, indent=2, sort_keys=True))
    print(json.dumps({**info, "seconds": round(time.perf_counter() - t0, 2)}, indent=2, sort_keys=True))
    return EXIT_OK


def _load_population(path: str | None, config: CircuitConfig) -> privacy.PopulationParams:
    if path is None:
        return privacy.default_population(config.m, config.bounds_mult)
    try:
        pop = privacy.PopulationParams.from_json(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read population file: {exc}") from exc
    return pop.with_mult(config.bounds_mult)


def cmd_attest(args) -> int:
    keys = _key_dir(args.keys)
    try:
        stream = session.EventStream.from_json(Path(args.stream).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read event stream: {exc}") from exc
    if not stream.records:
        print("error: no checkpoints", file=sys.stderr)
        return EXIT_USAGE
    try:
        pk = snark.ProvingKey.from_bytes((keys / PK_FILE).read_bytes())
    except (OSError, snark.KeyFormatError) as exc:
        raise UsageError(f"cannot load proving key from {keys}: {exc}") from exc
    if pk.config is None:
        raise UsageError("the proving key is not for the attestation circuit")
    if args.config not in (None, "basic", "extended") and load_circuit_config(args.config) != pk.config:
        raise UsageError("config does not match the proving key")
    population = _load_population(args.population, pk.config)
    swf = load_swf_params(args.config, pk.config)
    rng = None if args.seed is None else random.Random(args.seed)
    progress = (lambda i, n: print(f"checkpoint {i}/{n}", file=sys.stderr)) if args.verbose else None
    try:
        tr = session.attest(stream, pk, population, swf, rng, progress)
    except session.AttestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    manifest = tr.write(args.out)
    print(json.dumps(manifest, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_verify(args) -> int:
    keys = _key_dir(args.keys)
    vk_path = Path(args.vk) if args.vk else keys / VK_FILE
    try:
        vk = snark.VerifyingKey.from_bytes(vk_path.read_bytes())
    except (OSError, snark.KeyFormatError) as exc:
        raise UsageError(f"cannot load verifying key {vk_path}: {exc}") from exc
    if vk.config is None:
        raise UsageError("the verifying key is not for the attestation circuit")
    path = Path(args.bundle)
    if path.is_dir():
        path = path / "bundle.bin"
    try:
        bundle = snark.ProofBundle.from_bytes(path.read_bytes())
    except OSError as exc:
        raise UsageError(f"cannot read bundle: {exc}") from exc
    except ValueError as exc:
        print(f"reject: malformed bundle ({exc})")
        return EXIT_REJECT
    population = None
    if args.population:
        population = _load_population(args.population, vk.config)
    try:
        verdict = session.verify_bundle(vk, bundle, batch=args.batch,
                                        rng_seed=str(args.seed or 0).encode(), population=population)
    except session.DigestMismatch as exc:
        print(f"error: circuit digest mismatch: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(verdict.report())
    return EXIT_OK if verdict.accepted else EXIT_REJECT


def _read_matrix(path: str) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read feature matrix: {exc}") from exc
    return data


def cmd_stats(args) -> int:
    x = _read_matrix(args.features)
    if x.shape[0] < 2:
        print("error: refusing to release statistics of fewer than two records", file=sys.stderr)
        return EXIT_USAGE
    bounds = [(0.0, float(circuit.DOMAIN_MAX_MS))] * x.shape[1]
    budget = privacy.DPBudget(args.eps, args.delta, x.shape[0])
    try:
        budget.validate()
        pop = privacy.release_population(x, bounds, budget, np.random.default_rng(args.seed),
                                         args.mult, seed=args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = pop.to_json()
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return EXIT_OK


def cmd_analyze(args) -> int:
    done = False
    try:
        if args.leakage is not None:
            a = args.leakage
            bits = privacy.minimum_leakage(a)
            print(f"minimum leakage 1 - h({a:g}) = {bits:.4f} bits")
            if abs(a - 0.058) < 1e-12:
                print("note: the quoted figure for this alpha is 0.66 bits; direct evaluation gives "
                      f"{bits:.4f}")
            done = True
        if args.detection is not None:
            f, k, n = args.detection
            p = privacy.detection_probability(f, int(k), int(n))
            miss = privacy.miss_probability_log10(f, int(k), int(n)) if f < 1 else float("-inf")
            print(f"detection 1 - (1 - {f:g})^({int(k)}*{int(n)}) = {p:.12f}  "
                  f"(miss probability 10^{miss:.3f})")
            done = True
        if args.session_bound is not None:
            a, n, r1 = args.session_bound
            n_eff, log_b = privacy.session_false_accept(a, int(n), r1)
            print(f"n_eff = n (1 - r1) / (1 + r1) = {n_eff:.2f}")
            print(f"false accept alpha^n_eff = 10^{log_b:.2f}")
            done = True
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not done:
        print("error: give --leakage, --detection or --session-bound", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def cmd_simulate(args) -> int:
    data = _read_json(args.config)
    sweep = data.get("simulation", data)
    seed = args.seed if args.seed is not None else int(sweep.get("seed", 0))
    overrides = {k: v for k, v in sweep.get("base", {}).items() if k != "seed"}
    try:
        base = privacy.SimulationConfig(**overrides, seed=seed)
        if "configs" in sweep:
            configs = [replace(base, **c) for c in sweep["configs"]]
        else:
            configs = [replace(c, **overrides) for c in privacy.default_sweep(seed, base.n_sessions)]
        if args.eps is not None:
            configs.append(replace(base, eps=args.eps, delta=args.delta))
        for c in configs:
            c.validate()
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid simulation config: {exc}") from exc
    report = privacy.simulate_privacy_utility(configs)
    csv_text = report.to_csv()
    if args.out:
        Path(args.out).write_text(csv_text)
    print(report.summary())
    if "configs" not in sweep:
        for name, ok in privacy.check_orderings(report).items():
            print(f"ordering {name}: {'holds' if ok else 'violated'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="procattest", description="Process attestation toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("setup", help="generate proving and verifying keys")
    s.add_argument("--config", help="basic, extended, or a JSON config file")
    s.add_argument("--seed", help="deterministic (test-only) setup seed")
    s.add_argument("--out", help=f"key directory (default ${KEY_DIR_ENV} or ./keys)")
    s.add_argument("--production", action="store_true", help="refuse seeded setup")
    s.set_defaults(func=cmd_setup)

    s = sub.add_parser("attest", help="attest an event stream")
    s.add_argument("stream")
    s.add_argument("--config", help="JSON file with circuit/swf sections")
    s.add_argument("--keys")
    s.add_argument("--population", help="population parameters JSON (from `stats`)")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(func=cmd_attest)

    s = sub.add_parser("verify", help="verify a proof bundle")
    s.add_argument("bundle", help="bundle file or attest output directory")
    s.add_argument("--keys")
    s.add_argument("--vk")
    s.add_argument("--population")
    s.add_argument("--batch", action="store_true")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("stats", help="DP release of population parameters")
    s.add_argument("features", help="CSV feature matrix, one row per record, milliseconds")
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--delta", type=float, default=1e-5)
    s.add_argument("--mult", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("analyze", help="analytic security and leakage bounds")
    s.add_argument("--leakage", type=float, metavar="ALPHA")
    s.add_argument("--detection", type=float, nargs=3, metavar=("F", "K", "N"))
    s.add_argument("--session-bound", type=float, nargs=3, metavar=("ALPHA", "N", "R1"))
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="privacy/utility sweep")
    s.add_argument("--config", help="JSON sweep config")
    s.add_argument("--seed", type=int)
    s.add_argument("--eps", type=float, help="add a row at this epsilon")
    s.add_argument("--delta", type=float, default=1e-5)
    s.add_argument("--out", help="CSV output path")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
