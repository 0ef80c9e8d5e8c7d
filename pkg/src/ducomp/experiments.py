"""Configuration files, sweep studies and CSV emission.

A single JSON file describes one experiment: the dispatch instance, the
graph, algorithm parameters (omitted entries fall back to the engine
defaults), the compressor, the scale schedule, the seeds and an optional
study section. Studies fan one configuration out over a swept parameter
and write one trace CSV per (value, seed) plus an index JSON consumed by
the plotting frontend.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from . import engine
from .compression import CompressorSpec, ScalingSchedule
from .engine import AlgorithmParams, default_params, run, write_trace_csv
from .errors import ConfigurationError, DucompError
from .graph import build_ring, build_weight_matrix
from .problem import build_dispatch_instance, kkt_oracle

# built-in five-generator quadratic instance (cost rows: a, beta, c)
DEFAULT_ROWS = [
    [0.04, 2.0, 0.0],
    [0.03, 3.0, 0.0],
    [0.035, 4.0, 0.0],
    [0.03, 4.0, 0.0],
    [0.04, 2.5, 0.0],
]
DEFAULT_TOTAL_DEMAND = 300.0  # MW; a default load, not a property of the rows

STUDY_NAMES = ("scaling_factor", "quantization_interval", "communication_cost",
               "transmitted_bits", "constraint_violation")

_STUDY_DEFAULT_VALUES = {
    "scaling_factor": [0.9216, 0.9604, 0.998],
    "quantization_interval": [1, 2, 8],
    "communication_cost": [1, 2, 8],
    "transmitted_bits": [1, 2, 4, 8],
    "constraint_violation": [],
}

_SECTION_KEYS = {
    "problem": {"rows", "total_demand"},
    "graph": {"kind", "m", "scheme"},
    "algorithm": {"gamma", "tau", "psi", "alpha", "iterations", "mode"},
    "compressor": {"kind", "delta_p", "bits", "clamp_range"},
    "schedule": {"h0", "xi", "r_min"},
    "study": {"name", "values", "target_residual"},
}
_TOP_KEYS = set(_SECTION_KEYS) | {"seeds", "output_dir"}


@dataclass
class ExperimentConfig:
    """Fully resolved experiment description plus its built objects."""

    rows: list
    total_demand: float
    graph_kind: str
    m: int
    scheme: str
    params: AlgorithmParams
    iterations: int
    compressor: CompressorSpec
    study_name: str
    study_values: list
    target_residual: float
    seeds: list
    output_dir: str

    def resolved(self):
        """JSON-serializable echo of every substituted value."""
        return {
            "problem": {"rows": [list(map(float, r)) for r in self.rows],
                        "total_demand": self.total_demand},
            "graph": {"kind": self.graph_kind, "m": self.m, "scheme": self.scheme},
            "algorithm": {"gamma": self.params.gamma, "tau": self.params.tau,
                          "psi": self.params.psi, "alpha": self.params.alpha,
                          "iterations": self.iterations, "mode": self.params.mode},
            "compressor": {"kind": self.compressor.kind,
                           "delta_p": self.compressor.delta_p,
                           "bits": self.compressor.bits,
                           "clamp_range": self.compressor.clamp_range},
            "schedule": {"h0": self.params.schedule.h0,
                         "xi": self.params.schedule.xi,
                         "r_min": self.params.schedule.r_min},
            "study": {"name": self.study_name, "values": self.study_values,
                      "target_residual": self.target_residual},
            "seeds": list(self.seeds),
            "output_dir": self.output_dir,
        }

    def spec(self):
        return build_dispatch_instance(self.rows, self.total_demand)

    def topology(self):
        if self.graph_kind != "ring":
            raise ConfigurationError(f"unknown graph kind {self.graph_kind!r}")
        return build_ring(self.m)

    def weight_matrix(self):
        return build_weight_matrix(self.topology(), self.scheme)


def _check_keys(mapping, allowed, where):
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigurationError(
            f"unknown key(s) {sorted(unknown)} in {where}; allowed: {sorted(allowed)}")


def resolve_config(data):
    """Substitute defaults, reject unknown keys, build the derived objects."""
    if not isinstance(data, dict):
        raise ConfigurationError("configuration root must be a JSON object")
    _check_keys(data, _TOP_KEYS, "configuration")
    for section, keys in _SECTION_KEYS.items():
        if section in data:
            if not isinstance(data[section], dict):
                raise ConfigurationError(f"section {section!r} must be an object")
            _check_keys(data[section], keys, f"section {section!r}")

    prob = data.get("problem", {})
    rows = prob.get("rows", DEFAULT_ROWS)
    if not rows or not all(len(r) == 3 for r in rows):
        raise ConfigurationError("problem.rows must be a non-empty list of [a, beta, c]")
    total_demand = float(prob.get("total_demand", DEFAULT_TOTAL_DEMAND))

    g = data.get("graph", {})
    m = int(g.get("m", len(rows)))
    if m != len(rows):
        raise ConfigurationError(
            f"graph.m = {m} does not match the {len(rows)} problem rows")
    graph_kind = g.get("kind", "ring")
    scheme = g.get("scheme", "lazy_metropolis")

    comp_section = data.get("compressor", {})
    compressor = CompressorSpec(
        kind=comp_section.get("kind", "identity"),
        delta_p=comp_section.get("delta_p", 1),
        bits=comp_section.get("bits", 2),
        clamp_range=comp_section.get("clamp_range", 7.0),
    )

    sched_section = data.get("schedule", {})
    schedule = ScalingSchedule(
        h0=float(sched_section.get("h0", engine.DEFAULT_SCHEDULE.h0)),
        xi=float(sched_section.get("xi", engine.DEFAULT_SCHEDULE.xi)),
        r_min=float(sched_section.get("r_min", engine.DEFAULT_SCHEDULE.r_min)),
    )

    spec = build_dispatch_instance(rows, total_demand)
    if graph_kind != "ring":
        raise ConfigurationError(f"unknown graph kind {graph_kind!r}")
    W = build_weight_matrix(build_ring(m), scheme)

    alg = data.get("algorithm", {})
    mode = alg.get("mode", "compressed")
    base = default_params(spec, W, mode=mode, schedule=schedule)
    params = AlgorithmParams(
        gamma=float(alg.get("gamma", base.gamma)),
        tau=float(alg.get("tau", base.tau)),
        psi=float(alg.get("psi", base.psi)),
        alpha=float(alg.get("alpha", base.alpha)),
        schedule=schedule,
        mode=mode,
    )
    iterations = int(alg.get("iterations", 2000))
    if iterations < 1:
        raise ConfigurationError(f"iterations must be >= 1, got {iterations}")

    study_section = data.get("study", {})
    study_name = study_section.get("name", "")
    if study_name and study_name not in STUDY_NAMES:
        raise ConfigurationError(
            f"unknown study {study_name!r}; expected one of {STUDY_NAMES}")
    study_values = study_section.get("values",
                                     _STUDY_DEFAULT_VALUES.get(study_name, []))
    target = study_section.get("target_residual")
    if target is None:
        target = 1e-3 * (1.0 + float(np.linalg.norm(kkt_oracle(spec).z_star)))
    target = float(target)

    seeds = data.get("seeds", [0, 1, 2, 3, 4])
    if not seeds:
        raise ConfigurationError("seeds must be non-empty")
    seeds = [int(s) for s in seeds]

    return ExperimentConfig(
        rows=[list(map(float, r)) for r in rows], total_demand=total_demand,
        graph_kind=graph_kind, m=m, scheme=scheme, params=params,
        iterations=iterations, compressor=compressor, study_name=study_name,
        study_values=list(study_values), target_residual=target, seeds=seeds,
        output_dir=str(data.get("output_dir", "out")),
    )


def load_config(path):
    """Read and resolve a JSON experiment configuration."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc
    return resolve_config(data)


# ---------------------------------------------------------------------------
# studies
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    """Paths of everything one study produced."""

    index_path: str
    entries: list

    def index(self):
        with open(self.index_path) as fh:
            return json.load(fh)


def _write_index(cfg, payload):
    os.makedirs(cfg.output_dir, exist_ok=True)
    path = os.path.join(cfg.output_dir, f"{payload['study']}_index.json")
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
    return path


def _check_trace(trace, iterations):
    """Harness-level re-assertion of engine invariants on a produced trace."""
    bits = trace.column("bits_cumulative")
    if len(trace.records) != iterations:
        raise DucompError(
            f"trace has {len(trace.records)} rows, expected {iterations}")
    inc = np.diff(bits)
    if len(bits) > 1 and (not (inc > 0).all() or not (inc == inc[0]).all()):
        raise DucompError("cumulative bit counts must increase by a fixed step")


def _point_echo(cfg, compressor, params):
    """Resolved configuration of one study point (sweep overrides applied)."""
    echo = cfg.resolved()
    echo["compressor"] = {"kind": compressor.kind, "delta_p": compressor.delta_p,
                          "bits": compressor.bits,
                          "clamp_range": compressor.clamp_range}
    echo["schedule"] = {"h0": params.schedule.h0, "xi": params.schedule.xi,
                        "r_min": params.schedule.r_min}
    echo["algorithm"] = {"gamma": params.gamma, "tau": params.tau,
                         "psi": params.psi, "alpha": params.alpha,
                         "iterations": cfg.iterations, "mode": params.mode}
    return echo


def _run_point(cfg, compressor, params, seed, iterations, z_star, spec, topo, W):
    trace = run(spec, topo, W, params, compressor, iterations, seed=seed,
                skip_validation=True, z_star=z_star,
                config_echo=_point_echo(cfg, compressor, params))
    _check_trace(trace, iterations)
    limit = 1e-9 * (1.0 + abs(float(np.sum(spec.total_demand))))
    drift = trace.config_echo["diagnostics"]["max_conservation_drift"]
    if drift > limit:
        raise DucompError(f"resource conservation violated: drift {drift:.3e}")
    return trace


def _study_common(cfg):
    spec = cfg.spec()
    topo = cfg.topology()
    W = cfg.weight_matrix()
    z_star = kkt_oracle(spec).z_star
    os.makedirs(cfg.output_dir, exist_ok=True)
    return spec, topo, W, z_star


def _sweep(cfg, study, apply_value, values, trend):
    spec, topo, W, z_star = _study_common(cfg)
    entries = []
    for value in values:
        for seed in cfg.seeds:
            compressor, params = apply_value(value)
            name = f"{study}_{value}_seed{seed}.csv"
            path = os.path.join(cfg.output_dir, name)
            trace = _run_point(cfg, compressor, params, seed, cfg.iterations,
                               z_star, spec, topo, W)
            write_trace_csv(trace, path)
            entries.append({"value": value, "seed": seed, "trace": name,
                            "final_residual": trace.final().residual})
    index_path = _write_index(cfg, {
        "study": study,
        "expected_trend": trend,
        "iterations": cfg.iterations,
        "entries": entries,
    })
    return SweepResult(index_path=index_path, entries=entries)


def study_scaling_factor(cfg):
    """Sweep the scale decay ratio xi for a grid quantizer (q1 or q3)."""
    if cfg.compressor.kind not in ("q1", "q3"):
        raise ConfigurationError(
            f"scaling-factor study needs compressor q1 or q3, got {cfg.compressor.kind!r}")
    values = cfg.study_values or _STUDY_DEFAULT_VALUES["scaling_factor"]

    def apply(xi):
        sched = ScalingSchedule(h0=cfg.params.schedule.h0, xi=float(xi),
                                r_min=cfg.params.schedule.r_min)
        params = AlgorithmParams(gamma=cfg.params.gamma, tau=cfg.params.tau,
                                 psi=cfg.params.psi, alpha=cfg.params.alpha,
                                 schedule=sched, mode=cfg.params.mode)
        return cfg.compressor, params

    return _sweep(cfg, "scaling_factor", apply, values,
                  "final residual increases with xi: slower scale decay "
                  "suppresses compression error less")


def study_quantization_interval(cfg):
    """Sweep the grid density delta_p for the probabilistic quantizer."""
    if cfg.compressor.kind != "q1":
        raise ConfigurationError(
            f"quantization-interval study needs compressor q1, got {cfg.compressor.kind!r}")
    values = cfg.study_values or _STUDY_DEFAULT_VALUES["quantization_interval"]

    def apply(delta_p):
        comp = CompressorSpec(kind="q1", delta_p=int(delta_p),
                              bits=cfg.compressor.bits,
                              clamp_range=cfg.compressor.clamp_range)
        return comp, cfg.params

    return _sweep(cfg, "quantization_interval", apply, values,
                  "final residual non-increasing in delta_p: grid spacing is "
                  "1/delta_p, so larger delta_p is a finer grid")


def study_transmitted_bits(cfg):
    """Sweep the bit width b of the norm-scaled quantizer."""
    if cfg.compressor.kind != "q2":
        raise ConfigurationError(
            f"transmitted-bits study needs compressor q2, got {cfg.compressor.kind!r}")
    values = cfg.study_values or _STUDY_DEFAULT_VALUES["transmitted_bits"]

    def apply(bits):
        comp = CompressorSpec(kind="q2", delta_p=cfg.compressor.delta_p,
                              bits=int(bits), clamp_range=cfg.compressor.clamp_range)
        return comp, cfg.params

    return _sweep(cfg, "transmitted_bits", apply, values,
                  "residual at a fixed iteration non-increasing in bits")


def bits_to_target(trace, target):
    """Cumulative bits at the first iteration whose residual beats target."""
    res = trace.column("residual")
    hit = np.nonzero(res < target)[0]
    if len(hit) == 0:
        return None
    return int(trace.records[int(hit[0])].bits_cumulative)


def study_communication_cost(cfg):
    """Bits needed to reach a target residual, per delta_p, vs. uncompressed."""
    if cfg.compressor.kind != "q1":
        raise ConfigurationError(
            f"communication-cost study needs compressor q1, got {cfg.compressor.kind!r}")
    spec, topo, W, z_star = _study_common(cfg)
    target = cfg.target_residual
    values = cfg.study_values or _STUDY_DEFAULT_VALUES["communication_cost"]

    base_params = AlgorithmParams(gamma=cfg.params.gamma, tau=cfg.params.tau,
                                  psi=1.0, alpha=cfg.params.alpha,
                                  schedule=cfg.params.schedule, mode="baseline_duspa")
    base_name = "communication_cost_baseline.csv"
    base_trace = _run_point(cfg, CompressorSpec(kind="identity"), base_params,
                            cfg.seeds[0], cfg.iterations, z_star, spec, topo, W)
    write_trace_csv(base_trace, os.path.join(cfg.output_dir, base_name))
    base_bits = bits_to_target(base_trace, target)

    entries = []
    for delta_p in values:
        comp = CompressorSpec(kind="q1", delta_p=int(delta_p),
                              bits=cfg.compressor.bits,
                              clamp_range=cfg.compressor.clamp_range)
        for seed in cfg.seeds:
            name = f"communication_cost_{delta_p}_seed{seed}.csv"
            trace = _run_point(cfg, comp, cfg.params, seed, cfg.iterations,
                               z_star, spec, topo, W)
            write_trace_csv(trace, os.path.join(cfg.output_dir, name))
            entries.append({"value": int(delta_p), "seed": seed, "trace": name,
                            "bits_to_target": bits_to_target(trace, target)})
    index_path = _write_index(cfg, {
        "study": "communication_cost",
        "expected_trend": "bits-to-target grows with delta_p and stays below "
                          "the 32-bit uncompressed baseline",
        "iterations": cfg.iterations,
        "target_residual": target,
        "baseline_trace": base_name,
        "baseline_bits_to_target": base_bits,
        "entries": entries,
    })
    return SweepResult(index_path=index_path, entries=entries)


def study_constraint_violation(cfg):
    """One run per quantizer family at a common setting (constraint focus)."""
    spec, topo, W, z_star = _study_common(cfg)
    seed = cfg.seeds[0]
    entries = []
    for kind in ("q1", "q2", "q3"):
        comp = CompressorSpec(kind=kind, delta_p=cfg.compressor.delta_p,
                              bits=cfg.compressor.bits,
                              clamp_range=cfg.compressor.clamp_range)
        name = f"constraint_violation_{kind}_seed{seed}.csv"
        trace = _run_point(cfg, comp, cfg.params, seed, cfg.iterations,
                           z_star, spec, topo, W)
        write_trace_csv(trace, os.path.join(cfg.output_dir, name))
        entries.append({"value": kind, "seed": seed, "trace": name,
                        "final_constraint_violation":
                            trace.final().constraint_violation})
    index_path = _write_index(cfg, {
        "study": "constraint_violation",
        "expected_trend": "the coupled equality constraint is satisfied in the "
                          "limit under all three quantizers",
        "iterations": cfg.iterations,
        "entries": entries,
    })
    return SweepResult(index_path=index_path, entries=entries)


STUDIES = {
    "scaling_factor": study_scaling_factor,
    "quantization_interval": study_quantization_interval,
    "communication_cost": study_communication_cost,
    "transmitted_bits": study_transmitted_bits,
    "constraint_violation": study_constraint_violation,
}


def run_study(cfg, name=None):
    name = name or cfg.study_name
    if not name:
        raise ConfigurationError("no study named: set study.name in the config "
                                 "or pass --study")
    if name not in STUDIES:
        raise ConfigurationError(f"unknown study {name!r}; expected one of {STUDY_NAMES}")
    return STUDIES[name](cfg)
