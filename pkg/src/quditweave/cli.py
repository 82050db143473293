"""Experiment configs, sweeps, and CSV/JSON emission.

Configs are JSON documents validated against a strict schema (unknown keys
are rejected with their path).  Every artifact carries a header recording
the config hash, master seed, and package version; rerunning an identical
(config, seed) writes byte-identical output.  Worker count for sweep points
is capped by the ``QUDITWEAVE_THREADS`` environment variable.

Exit codes: 0 success, 2 config error, 3 numerical-tolerance failure.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .cavity import CavityParams
from .correlation import OptimizerConfig, correlation_measure
from .decoherence import MemoryParams
from .erasure import (
    LoopConfig,
    LossBudget,
    sign_consistent,
    erasure_success_probability,
    single_loop_total_probability,
    total_success_probability,
)
from .pipeline import NoiseProfile, raw_pair_marginals, run_protocol
from .purification import EAConfig, evolve
from .qec import crossover_scan, evaluate_code, get_code
from .source import SourceNoise
from .states import DensityMatrix, ToleranceError

KINDS = ("erasure-scan", "run-protocol", "correlate", "purify-optimize", "qec-eval")

# Studied hardware regime: 20 km link at 2e5 km/s, T1 = 10 ms, Tp = 5 ms,
# thermal weight 0.5; loss ranges eta 0.0160..0.0317, eta_AB 0.05..0.10,
# eta_0 0.499..0.684 (low ends used as defaults).
DEFAULTS = {
    "memory": {"L": 20.0, "c": 2.0e5, "T1": 10e-3, "Tp": 5e-3, "a_beta": 0.5},
    "losses": {"eta_AB": 0.05, "eta_0": 0.499, "eta": 0.016},
}


class ConfigError(ValueError):
    """Invalid experiment configuration; message carries the field path."""


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    m: int
    seed: int
    out_dir: Path
    raw: dict  # validated config document with defaults applied


_NOISE_SCHEMA = {
    "sigma": float,
    "gate_error": float,
    "cavity": {"C0": float, "C1": float, "K_in_over_K": float, "omega": float,
               "Delta0": float, "Delta1": float, "gamma0": float, "gamma1": float},
    "memory": {"L": float, "c": float, "T1": float, "Tp": float, "a_beta": float},
    "memory_enabled": bool,
    "losses": {"eta_AB": float, "eta_0": float, "eta": float},
    "loop": {"s": int, "u": int, "eta": float},
}

_SCHEMA = {
    "kind": str,
    "m": int,
    "seed": int,
    "out": str,
    "samples": int,
    "noise": _NOISE_SCHEMA,
    "sweep": [{"parameter": str, "values": list}],
    "save_state": bool,
    "state_file": str,
    "s_max": int,
    "u_max": int,
    "epsilon": float,
    "optimizer": {"restarts": int, "max_iterations": int, "penalty": float, "seed": int},
    "ea": {"population_size": int, "elite": int, "mutation_prob": float,
           "max_generations": int, "convergence_window": int,
           "convergence_delta": float, "max_cnots": int, "tournament": int},
    "code": str,
    "infidelity_grid": list,
    "message_samples": int,
}


def _check_schema(doc, schema, path=""):
    if isinstance(schema, dict):
        if not isinstance(doc, dict):
            raise ConfigError(f"{path or 'config'}: expected an object")
        for key, value in doc.items():
            here = f"{path}.{key}" if path else key
            if key not in schema:
                raise ConfigError(f"{here}: unknown field")
            _check_schema(value, schema[key], here)
    elif isinstance(schema, list):
        if not isinstance(doc, list):
            raise ConfigError(f"{path}: expected a list")
        for i, item in enumerate(doc):
            _check_schema(item, schema[0], f"{path}[{i}]")
    elif schema is float:
        if not isinstance(doc, (int, float)) or isinstance(doc, bool):
            raise ConfigError(f"{path}: expected a number")
    elif schema is int:
        if not isinstance(doc, int) or isinstance(doc, bool):
            raise ConfigError(f"{path}: expected an integer")
    elif schema is bool:
        if not isinstance(doc, bool):
            raise ConfigError(f"{path}: expected a boolean")
    elif schema is str:
        if not isinstance(doc, str):
            raise ConfigError(f"{path}: expected a string")
    elif schema is list:
        if not isinstance(doc, list):
            raise ConfigError(f"{path}: expected a list")


def load_config(path, seed_override: Optional[int] = None, out_override: Optional[str] = None) -> ExperimentConfig:
    """Read, validate, and default-fill an experiment config."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} does not exist")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    _check_schema(doc, _SCHEMA)
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind: expected one of {KINDS}, got {kind!r}")
    m = doc.get("m")
    if m is None:
        raise ConfigError("m: required")
    if not 1 <= m <= 5:
        raise ConfigError(f"m: {m} outside supported range 1..5")
    doc = copy.deepcopy(doc)
    noise = doc.setdefault("noise", {})
    for section in ("memory", "losses"):
        block = noise.setdefault(section, {})
        for key, val in DEFAULTS[section].items():
            block.setdefault(key, val)
    for axis in doc.get("sweep", []):
        if not axis["values"]:
            raise ConfigError("sweep: values must be non-empty")
    seed = seed_override if seed_override is not None else doc.get("seed", 0)
    out_dir = Path(out_override if out_override is not None else doc.get("out", "."))
    doc["seed"] = seed
    return ExperimentConfig(kind=kind, m=m, seed=seed, out_dir=out_dir, raw=doc)


def _noise_profile(noise: dict) -> NoiseProfile:
    cav = noise.get("cavity")
    cavity = CavityParams(**cav) if cav else CavityParams.ideal()
    losses = LossBudget(**noise["losses"])
    loop = LoopConfig(**noise["loop"]) if "loop" in noise else None
    memory = MemoryParams(**noise["memory"]) if noise.get("memory_enabled", False) else None
    return NoiseProfile(
        source=SourceNoise(noise.get("sigma", 0.0)),
        cavity_a=cavity,
        cavity_b=cavity,
        gate_error=noise.get("gate_error", 0.0),
        memory=memory,
        losses=losses,
        loop=loop,
    )


def _sweep_points(cfg: ExperimentConfig) -> list[dict]:
    """Cartesian product of the sweep axes as noise-dict patches."""
    axes = cfg.raw.get("sweep", [])
    points = [{}]
    for axis in axes:
        param, values = axis["parameter"], axis["values"]
        points = [dict(pt, **{param: v}) for pt in points for v in values]
    return points


def _apply_patch(noise: dict, patch: dict) -> dict:
    out = copy.deepcopy(noise)
    for dotted, value in patch.items():
        node = out
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return out


def _config_hash(cfg: ExperimentConfig) -> str:
    canonical = json.dumps(cfg.raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _header_lines(cfg: ExperimentConfig) -> list[str]:
    return [
        f"# quditweave {__version__}",
        f"# config_hash: {_config_hash(cfg)}",
        f"# seed: {cfg.seed}",
    ]


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)  # shortest roundtrip representation, deterministic
    return str(x)


def _write_csv(path: Path, cfg: ExperimentConfig, units: str, columns, rows) -> None:
    lines = _header_lines(cfg) + [f"# units: {units}", ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, cfg: ExperimentConfig, payload: dict) -> None:
    doc = {
        "version": __version__,
        "config_hash": _config_hash(cfg),
        "seed": cfg.seed,
        **payload,
    }
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def save_state_file(path: Path, m: int, rho: DensityMatrix) -> None:
    """Protocol-output state file: JSON with real/imag parts, row-major."""
    doc = {
        "m": m,
        "dim": rho.dim,
        "rho": {
            "re": np.real(rho.data).tolist(),
            "im": np.imag(rho.data).tolist(),
        },
    }
    path.write_text(json.dumps(doc) + "\n")


def load_state_file(path) -> tuple[int, DensityMatrix]:
    doc = json.loads(Path(path).read_text())
    data = np.array(doc["rho"]["re"]) + 1j * np.array(doc["rho"]["im"])
    return int(doc["m"]), DensityMatrix(data)


def _workers() -> int:
    return max(1, int(os.environ.get("QUDITWEAVE_THREADS", "1")))


def _run_points(fn, points):
    """Evaluate sweep points with a bounded pool; output order is fixed."""
    n = _workers()
    if n == 1 or len(points) == 1:
        return [fn(i, pt) for i, pt in enumerate(points)]
    with ThreadPoolExecutor(max_workers=min(n, len(points))) as pool:
        return list(pool.map(lambda args: fn(*args), enumerate(points)))


# ---------------------------------------------------------------------------
# Experiment runners
# ---------------------------------------------------------------------------


def _run_erasure_scan(cfg: ExperimentConfig) -> list[Path]:
    noise = cfg.raw["noise"]
    losses = LossBudget(**noise["losses"])
    eta = losses.eta
    s_max = cfg.raw.get("s_max", 4)
    rows = []
    for m in range(1, cfg.m + 1):
        x = 2**m
        u_max = cfg.raw.get("u_max", x + 4 * s_max)
        total = single_loop_total_probability(m, eta)
        rows.append((m, 1, x, True, total, total_success_probability(m, losses, total)))
        for s in range(2, s_max + 1):
            for u in range(x, u_max + 1):
                ok = sign_consistent(s, u, m)
                if ok:
                    p = erasure_success_probability(s, u, m, eta)
                    rows.append((m, s, u, True, p, total_success_probability(m, losses, p)))
                else:
                    rows.append((m, s, u, False, "", ""))
    out = cfg.out_dir / "erasure_scan.csv"
    _write_csv(
        out,
        cfg,
        "m,s,u: counts; probabilities dimensionless; s=1 row is the"
        " u-summed single-loop total",
        ("m", "s", "u", "sign_consistent", "P_erasure", "P_total"),
        rows,
    )
    return [out]


def _run_protocol_experiment(cfg: ExperimentConfig) -> list[Path]:
    points = _sweep_points(cfg)
    base_noise = cfg.raw["noise"]
    samples = cfg.raw.get("samples", 2000)
    save_state = cfg.raw.get("save_state", False)
    artifacts = []

    def one(i, patch):
        noise = _apply_patch(base_noise, patch)
        profile = _noise_profile(noise)
        out = run_protocol(cfg.m, profile, n_samples=samples, seed=cfg.seed + i)
        return patch, noise, out

    results = _run_points(one, points)
    rows = []
    for i, (patch, noise, out) in enumerate(results):
        pair_fids = [f for _, f in raw_pair_marginals(out)]
        rows.append(
            {
                "point": i,
                "parameters": patch,
                "m": out.m,
                "raw_fidelity": out.raw_fidelity,
                "success_probability": out.success_probability,
                "per_pair_fidelities": pair_fids,
                "samples": out.samples,
            }
        )
        if save_state:
            state_path = cfg.out_dir / f"protocol_state_{i}.json"
            save_state_file(state_path, out.m, out.rho)
            rows[-1]["state_file"] = state_path.name
            artifacts.append(state_path)
    report = cfg.out_dir / "run_protocol.json"
    _write_json(report, cfg, {"rows": rows})
    return [report] + artifacts


def _resolve_input_states(cfg: ExperimentConfig):
    """(label, patch, DensityMatrix) inputs from a state file or sweeps."""
    if "state_file" in cfg.raw:
        m, dm = load_state_file(cfg.raw["state_file"])
        if m != cfg.m:
            raise ConfigError(f"state_file: holds m={m}, config says m={cfg.m}")
        return [("state_file", {}, dm)]
    base_noise = cfg.raw["noise"]
    samples = cfg.raw.get("samples", 2000)

    def one(i, patch):
        profile = _noise_profile(_apply_patch(base_noise, patch))
        out = run_protocol(cfg.m, profile, n_samples=samples, seed=cfg.seed + i)
        return (f"point_{i}", patch, out.rho)

    return _run_points(one, _sweep_points(cfg))


def _run_correlate(cfg: ExperimentConfig) -> list[Path]:
    opt = cfg.raw.get("optimizer", {})
    ocfg = OptimizerConfig(
        restarts=opt.get("restarts", 8),
        max_iterations=opt.get("max_iterations", 4000),
        penalty=opt.get("penalty", 1e4),
        seed=opt.get("seed", cfg.seed),
    )
    epsilon = cfg.raw.get("epsilon", 1e-4)
    reports = []
    for label, patch, dm in _resolve_input_states(cfg):
        rep = correlation_measure(dm, cfg.m, epsilon=epsilon, cfg=ocfg)
        reports.append(
            {
                "input": label,
                "parameters": patch,
                "T_min": rep.T_min,
                "fidelity_gap": rep.fidelity_gap,
                "epsilon": rep.epsilon,
                "feasible": rep.feasible,
                "fitted_channels": [
                    {"px": ch.px, "py": ch.py, "pz": ch.pz} for ch in rep.fitted.channels
                ],
                "restarts": list(rep.restarts),
            }
        )
    out = cfg.out_dir / "correlate.json"
    _write_json(out, cfg, {"reports": reports})
    return [out]


def _ea_config(cfg: ExperimentConfig) -> EAConfig:
    ea = cfg.raw.get("ea", {})
    return EAConfig(
        population_size=ea.get("population_size", 40),
        elite=ea.get("elite", 8),
        mutation_prob=ea.get("mutation_prob", 0.1),
        max_generations=ea.get("max_generations", 300),
        convergence_window=ea.get("convergence_window", 20),
        convergence_delta=ea.get("convergence_delta", 1e-6),
        max_cnots=ea.get("max_cnots"),
        tournament=ea.get("tournament", 3),
    )


def _genome_json(genome) -> list[dict]:
    from .purification import CnotOp, MeasureOp, PermuteOp

    out = []
    for op in genome.ops:
        if isinstance(op, CnotOp):
            out.append({"op": "cnot", "control": op.control, "target": op.target})
        elif isinstance(op, MeasureOp):
            out.append({"op": "measure", "pair": op.pair, "basis": op.basis})
        elif isinstance(op, PermuteOp):
            out.append({"op": "permute", "pair": op.pair, "perm": op.perm})
    return out


def _run_purify(cfg: ExperimentConfig) -> list[Path]:
    from .states import PHI_PLUS, fidelity as state_fidelity
    from .states import partial_trace

    ea_cfg = _ea_config(cfg)
    rows = []
    genomes = []
    for i, (label, patch, dm) in enumerate(_resolve_input_states(cfg)):
        result = evolve(cfg.m, dm, cfg=ea_cfg, seed=cfg.seed + i)
        best = result.best
        pair_fids = [
            state_fidelity(partial_trace(dm, [2 * p, 2 * p + 1]), PHI_PLUS)
            for p in range(cfg.m)
        ]
        rows.append(
            (
                label,
                max(pair_fids),
                best.fidelity,
                best.success_probability,
                result.generations,
            )
        )
        genomes.append(
            {
                "input": label,
                "parameters": patch,
                "purified_fidelity": best.fidelity,
                "acceptance": best.success_probability,
                "keep_pair": best.genome.keep_pair,
                "ops": _genome_json(best.genome),
                "generations": result.generations,
                "evaluations": result.evaluations,
            }
        )
    csv_path = cfg.out_dir / "purify.csv"
    _write_csv(
        csv_path,
        cfg,
        "fidelities and probabilities dimensionless",
        ("input", "best_pair_fidelity", "purified_fidelity", "acceptance", "generations"),
        rows,
    )
    json_path = cfg.out_dir / "purify_genomes.json"
    _write_json(json_path, cfg, {"results": genomes})
    return [csv_path, json_path]


def _run_qec_eval(cfg: ExperimentConfig) -> list[Path]:
    from .states import fidelity as state_fidelity
    from .states import ideal_bell_vector, partial_trace

    code = get_code(cfg.raw.get("code", "code_513"))
    n_msg = cfg.raw.get("message_samples", 30)
    rows = []
    crossover = None
    if "infidelity_grid" in cfg.raw:
        grid = [float(x) for x in cfg.raw["infidelity_grid"]]
        scan = crossover_scan(code, grid, n_message_samples=n_msg, seed=cfg.seed)
        crossover = scan.crossover
        for r in scan.rows:
            rows.append(
                (
                    r.bell_infidelity,
                    code.name,
                    r.encoded_fidelity,
                    r.direct_fidelity,
                    r.acceptance_probability if r.acceptance_probability is not None else "",
                    r.correlated,
                )
            )
    else:
        for label, patch, dm in _resolve_input_states(cfg):
            ev = evaluate_code(code, dm, n_message_samples=n_msg, seed=cfg.seed)
            pair0 = partial_trace(dm, [0, 1])
            infid = 1.0 - state_fidelity(pair0, ideal_bell_vector(1))
            rows.append(
                (
                    infid,
                    code.name,
                    ev.avg_message_fidelity,
                    ev.direct_baseline_fidelity,
                    ev.acceptance_probability if ev.acceptance_probability is not None else "",
                    True,
                )
            )
    out = cfg.out_dir / "qec_eval.csv"
    lines = _header_lines(cfg)
    lines.append(f"# crossover: {_fmt(crossover) if crossover is not None else 'none'}")
    lines.append("# units: bell_infidelity and fidelities dimensionless")
    lines.append(
        "bell_infidelity,code,encoded_fidelity,direct_fidelity,"
        "acceptance_probability,correlated_flag"
    )
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    out.write_text("\n".join(lines) + "\n")
    return [out]


_RUNNERS = {
    "erasure-scan": _run_erasure_scan,
    "run-protocol": _run_protocol_experiment,
    "correlate": _run_correlate,
    "purify-optimize": _run_purify,
    "qec-eval": _run_qec_eval,
}


def run_experiment(cfg: ExperimentConfig) -> list[Path]:
    """Execute one experiment; returns the artifact paths it wrote."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return _RUNNERS[cfg.kind](cfg)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="quditweave",
        description="Switch-free photonic-qudit entanglement experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        k = sub.add_parser(kind, help=f"run a {kind} experiment")
        k.add_argument("--config", required=True, help="JSON experiment config")
        k.add_argument("--seed", type=int, default=None, help="override master seed")
        k.add_argument("--out", default=None, help="output directory")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, seed_override=args.seed, out_override=args.out)
        if cfg.kind != args.command:
            raise ConfigError(
                f"kind: config says {cfg.kind!r} but subcommand is {args.command!r}"
            )
        artifacts = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ToleranceError as exc:
        print(f"numerical tolerance failure: {exc}", file=sys.stderr)
        return 3
    for path in artifacts:
        print(path)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
