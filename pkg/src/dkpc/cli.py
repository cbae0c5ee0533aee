"""Command-line experiment harness.

One YAML config file drives four commands: ``gen-data`` simulates the
plant under seeded random inputs and stores the dataset and observable
bank, ``run`` executes a single closed loop, ``sweep`` enumerates the
tuning grids for both controllers, and ``report`` turns a sweep CSV
into frontier/winner artifacts.  All randomness flows from named seeds
in the config, so artifact trees are reproducible byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import multiprocessing
import os
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from . import behavior, lifting, metrics, netsim
from .control import (
    ClosedLoopTrace,
    DeepcConfig,
    DkpcConfig,
    DeepcController,
    DkpcController,
    Scenario,
    run_closed_loop,
)

log = logging.getLogger("dkpc")

OUTPUT_ROOT_ENV = "DKPC_OUTPUT_ROOT"

REDUCED_DATA_LENGTH = 300
REDUCED_SIM_STEPS = 80
REDUCED_N_BASIS = 10

DATASET_FILE = "dataset.csv"
BANK_FILE = "bank.json"
TRACE_FILE = "trace.csv"
METRICS_FILE = "metrics.csv"
SWEEP_FILE = "sweep.csv"
FRONTIER_FILE = "frontier.csv"
WINNERS_FILE = "winners.csv"
SUMMARY_FILE = "summary.txt"


class ConfigError(ValueError):
    """Raised for invalid or inconsistent experiment configuration."""


def _from_mapping(cls, data: dict | None, where: str):
    data = dict(data or {})
    fields = cls.__dataclass_fields__
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    coerced = {}
    for name, value in data.items():
        # YAML 1.1 reads unsigned exponents like 1.0e5 as strings; coerce
        # numeric fields so config files and --set overrides behave alike
        kind = fields[name].type
        try:
            if value is None:
                coerced[name] = None
            elif kind in ("float", "float | None"):
                coerced[name] = float(value)
            elif kind == "int":
                coerced[name] = int(value)
            else:
                coerced[name] = value
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {where}.{name}: {value!r}") from exc
    return cls(**coerced)


@dataclass(frozen=True)
class PlantSection:
    """Inverter parameters; ``p_star`` is a scalar or a per-bus list.

    The default dispatch pairs five units generating at the nominal
    1 p.u. setpoint with five absorbing units, so the network carries a
    balanced flow and the zero-input operating point exists.
    """

    p_star: float | tuple = (1.0, 1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0, -1.0)
    k_p: float = 0.07
    omega_pc: float = 332.8
    omega_b: float = 1.0
    filter_mode: str = netsim.EXACT_EXPONENTIAL

    def __post_init__(self) -> None:
        if isinstance(self.p_star, (list, tuple)):
            object.__setattr__(self, "p_star", tuple(float(v) for v in self.p_star))


@dataclass(frozen=True)
class DisturbanceSection:
    theta_jitter: float = 0.12
    omega_jitter: float = 0.02
    p_filt_jitter: float = 0.1
    around_equilibrium: bool = True
    seed: int = 7

    def to_spec(self) -> netsim.DisturbanceSpec:
        return netsim.DisturbanceSpec(
            theta_jitter=self.theta_jitter,
            omega_jitter=self.omega_jitter,
            p_filt_jitter=self.p_filt_jitter,
            around_equilibrium=self.around_equilibrium,
            seed=self.seed,
        )


@dataclass(frozen=True)
class SimSection:
    dt: float = 0.01
    sim_steps: int = 150
    activation_step: int = 40
    disturbance: DisturbanceSection = field(default_factory=DisturbanceSection)


@dataclass(frozen=True)
class DataSection:
    length: int = 1000
    input_low: float = -1.0
    input_high: float = 1.0
    start: str = "equilibrium"  # "equilibrium" | "zero"
    seed: int = 1


@dataclass(frozen=True)
class LiftingSection:
    n_basis: int = 40
    seed: int = 5


@dataclass(frozen=True)
class ControllerSection:
    kind: str = "dkpc"
    t_ini: int = 5
    horizon: int = 10
    q: float = 300.0
    r: float = 0.01
    lambda_g: float = 500.0
    lambda_sigma: float | None = None
    u_min: float = -1.0
    u_max: float = 1.0


@dataclass(frozen=True)
class SweepSection:
    q: tuple = (10.0, 100.0, 300.0, 1000.0)
    r: tuple = (0.001, 0.01, 0.1, 1.0)
    lambda_g: tuple = (1.0, 10.0, 100.0, 1000.0)
    lambda_sigma: tuple = (1e4, 1e5, 1e6)

    def __post_init__(self) -> None:
        for name in ("q", "r", "lambda_g", "lambda_sigma"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))


@dataclass(frozen=True)
class ReportSection:
    alphas: int = 11


@dataclass(frozen=True)
class ExperimentConfig:
    network: str = "default"
    n_bus: int = 10
    output_dir: str = "out"
    plant: PlantSection = field(default_factory=PlantSection)
    sim: SimSection = field(default_factory=SimSection)
    data: DataSection = field(default_factory=DataSection)
    lifting: LiftingSection = field(default_factory=LiftingSection)
    controller: ControllerSection = field(default_factory=ControllerSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    report: ReportSection = field(default_factory=ReportSection)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data or {})
        sections = {
            "plant": PlantSection,
            "data": DataSection,
            "lifting": LiftingSection,
            "controller": ControllerSection,
            "sweep": SweepSection,
            "report": ReportSection,
        }
        kwargs: dict[str, Any] = {}
        for key, section_cls in sections.items():
            if key in data:
                kwargs[key] = _from_mapping(section_cls, data.pop(key), key)
        if "sim" in data:
            sim_data = dict(data.pop("sim") or {})
            dist = sim_data.pop("disturbance", None)
            sim = _from_mapping(SimSection, sim_data, "sim")
            if dist is not None:
                sim = replace(sim, disturbance=_from_mapping(DisturbanceSection, dist, "sim.disturbance"))
            kwargs["sim"] = sim
        known = {"network", "n_bus", "output_dir"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
        kwargs.update(data)
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        out = asdict(self)
        out["sweep"] = {k: list(v) for k, v in out["sweep"].items()}
        return out

    def validate(self) -> None:
        c = self.controller
        if c.kind not in ("dkpc", "deepc"):
            raise ConfigError(f"controller.kind must be 'dkpc' or 'deepc', got {c.kind!r}")
        if c.kind == "dkpc" and c.lambda_sigma is not None:
            raise ConfigError("lambda_sigma is only meaningful for the deepc controller")
        if c.kind == "deepc" and c.lambda_sigma is None:
            raise ConfigError("deepc controller requires lambda_sigma")
        if c.t_ini < 1 or c.horizon < 1:
            raise ConfigError("t_ini and horizon must be >= 1")
        if self.sim.activation_step < c.t_ini:
            raise ConfigError("activation_step must be >= t_ini to prime the buffers")
        if self.data.length < 1 or self.lifting.n_basis < 1:
            raise ConfigError("data.length and lifting.n_basis must be >= 1")
        if self.data.input_low > self.data.input_high:
            raise ConfigError("data.input_low must not exceed data.input_high")
        if self.data.start not in ("equilibrium", "zero"):
            raise ConfigError("data.start must be 'equilibrium' or 'zero'")

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:12]

    def resolved_output_dir(self) -> Path:
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root:
            return Path(root) / self.output_dir
        return Path(self.output_dir)


def load_config(path: str | Path, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """Parse the YAML config file, then apply ``section.key=value`` overrides."""
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a mapping, got {type(data).__name__}")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        dotted, raw = item.split("=", 1)
        node = data
        keys = dotted.split(".")
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot override through non-mapping key {key!r}")
        node[keys[-1]] = yaml.safe_load(raw)
    return ExperimentConfig.from_dict(data)


def apply_reduced(cfg: ExperimentConfig) -> ExperimentConfig:
    """Desk-scale variant: shorter data and run, every other grid value.

    The observable count shrinks with the dataset so the persistency
    requirement (order ``n_basis + t_ini + horizon``) stays satisfiable
    by the shorter record.
    """
    return replace(
        cfg,
        data=replace(cfg.data, length=REDUCED_DATA_LENGTH),
        sim=replace(cfg.sim, sim_steps=REDUCED_SIM_STEPS),
        lifting=replace(cfg.lifting, n_basis=min(cfg.lifting.n_basis, REDUCED_N_BASIS)),
        sweep=SweepSection(
            q=cfg.sweep.q[::2],
            r=cfg.sweep.r[::2],
            lambda_g=cfg.sweep.lambda_g[::2],
            lambda_sigma=cfg.sweep.lambda_sigma[::2],
        ),
    )


# -- shared experiment assembly -------------------------------------------


def _load_network(cfg: ExperimentConfig) -> netsim.NetworkGraph:
    if cfg.network == "default":
        return netsim.default_network(cfg.n_bus)
    path = Path(cfg.network)
    if not path.exists():
        raise ConfigError(f"network file not found: {path}")
    return netsim.load_network(path)


def _inverter_params(cfg: ExperimentConfig, n_bus: int):
    p = cfg.plant
    if isinstance(p.p_star, tuple):
        if len(p.p_star) != n_bus:
            raise ConfigError(
                f"plant.p_star lists {len(p.p_star)} setpoints but the network has {n_bus} buses"
            )
        setpoints = p.p_star
    else:
        setpoints = (float(p.p_star),) * n_bus
    return [
        netsim.InverterParams(p_star=v, k_p=p.k_p, omega_pc=p.omega_pc, omega_b=p.omega_b)
        for v in setpoints
    ]


def _sim_config(cfg: ExperimentConfig) -> netsim.SimConfig:
    return netsim.SimConfig(dt=cfg.sim.dt, filter_mode=cfg.plant.filter_mode, seed=cfg.data.seed)


def _controller_config(
    kind: str,
    section: ControllerSection,
    q: float,
    r: float,
    lambda_g: float,
    lambda_sigma: float | None,
) -> DkpcConfig:
    common = dict(
        t_ini=section.t_ini,
        horizon=section.horizon,
        Q=q,
        R=r,
        lambda_g=lambda_g,
        u_min=section.u_min,
        u_max=section.u_max,
    )
    if kind == "dkpc":
        return DkpcConfig(**common)
    return DeepcConfig(lambda_sigma=lambda_sigma, **common)


@dataclass(frozen=True)
class SweepCombo:
    kind: str  # "dkpc" | "deepc"
    q: float
    r: float
    lambda_g: float
    lambda_sigma: float | None = None

    @property
    def tag(self) -> tuple:
        if self.lambda_sigma is None:
            return (self.q, self.r, self.lambda_g)
        return (self.q, self.r, self.lambda_g, self.lambda_sigma)

    @property
    def controller_kind(self) -> str:
        return metrics.DKPC if self.kind == "dkpc" else metrics.DEEPC


def sweep_plan(cfg: ExperimentConfig) -> list[SweepCombo]:
    """Full cross product of the grids: one combo per row of the sweep CSV."""
    s = cfg.sweep
    if not (s.q and s.r and s.lambda_g and s.lambda_sigma):
        raise ConfigError("sweep grids must be nonempty")
    plan = [
        SweepCombo("dkpc", q, r, lg)
        for q in s.q
        for r in s.r
        for lg in s.lambda_g
    ]
    plan += [
        SweepCombo("deepc", q, r, lg, ls)
        for q in s.q
        for r in s.r
        for lg in s.lambda_g
        for ls in s.lambda_sigma
    ]
    return plan


# -- commands ----------------------------------------------------------------


def cmd_gen_data(cfg: ExperimentConfig) -> dict[str, Path]:
    """Simulate the plant under seeded uniform random inputs; write dataset and bank."""
    depth = cfg.controller.t_ini + cfg.controller.horizon
    if cfg.data.length < depth:
        raise ConfigError(
            f"data.length={cfg.data.length} is shorter than the Hankel depth "
            f"t_ini + horizon = {depth}"
        )
    net = _load_network(cfg)
    params = _inverter_params(cfg, net.n_bus)
    sim_cfg = _sim_config(cfg)
    rng = np.random.default_rng(cfg.data.seed)
    inputs = rng.uniform(
        cfg.data.input_low, cfg.data.input_high, size=(cfg.data.length, net.n_bus)
    )
    if cfg.data.start == "equilibrium":
        initial = netsim.equilibrium_state(params, net)
    else:
        initial = netsim.SimState.zeros(net.n_bus)
    traj = netsim.simulate(initial, inputs, params, net, sim_cfg)
    bank = lifting.build_bank(traj.y, cfg.lifting.n_basis, cfg.lifting.seed)

    pe_order = cfg.lifting.n_basis + depth
    pe = behavior.is_persistently_exciting(traj.u, pe_order)
    if pe:
        log.info("PE check (order %d): ok, rank %d/%d", pe_order, pe.rank, pe.required_rank)
    else:
        log.warning("PE check (order %d) FAILED: %s", pe_order, pe.reason)

    out = cfg.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    comment = f"config_hash={cfg.config_hash()}"
    dataset = out / DATASET_FILE
    behavior.trajectory_to_csv(traj, dataset, comment=comment)
    bank_path = out / BANK_FILE
    lifting.save_bank(bank, bank_path)
    log.info("wrote %s and %s", dataset, bank_path)
    return {"dataset": dataset, "bank": bank_path}


@dataclass
class _RunContext:
    """Everything a closed-loop run needs besides its tuning."""

    cfg: ExperimentConfig
    net: netsim.NetworkGraph
    params: list[netsim.InverterParams]
    sim_cfg: netsim.SimConfig
    hs: behavior.HankelSystem
    bank: lifting.RbfBank
    scenario: Scenario


def _load_run_context(cfg: ExperimentConfig) -> _RunContext:
    out = cfg.resolved_output_dir()
    dataset = out / DATASET_FILE
    bank_path = out / BANK_FILE
    if not dataset.exists() or not bank_path.exists():
        raise ConfigError(
            f"dataset not found in {out}; run the gen-data command first"
        )
    traj = behavior.trajectory_from_csv(dataset)
    bank = lifting.load_bank(bank_path)
    hs = behavior.assemble(traj, bank, cfg.controller.t_ini, cfg.controller.horizon)
    scenario = Scenario(
        sim_steps=cfg.sim.sim_steps,
        activation_step=cfg.sim.activation_step,
        disturbance=cfg.sim.disturbance.to_spec(),
    )
    net = _load_network(cfg)
    return _RunContext(
        cfg=cfg,
        net=net,
        params=_inverter_params(cfg, net.n_bus),
        sim_cfg=_sim_config(cfg),
        hs=hs,
        bank=bank,
        scenario=scenario,
    )


def _execute(ctx: _RunContext, combo: SweepCombo) -> tuple[ClosedLoopTrace | None, metrics.RunMetrics, str]:
    """One closed-loop run; failures are captured, not raised."""
    controller_cfg = _controller_config(
        combo.kind, ctx.cfg.controller, combo.q, combo.r, combo.lambda_g, combo.lambda_sigma
    )
    if combo.kind == "dkpc":
        controller = DkpcController(ctx.hs, ctx.bank, controller_cfg)
    else:
        controller = DeepcController(ctx.hs, controller_cfg)
    plant = netsim.NetworkPlant(ctx.net, ctx.params, ctx.sim_cfg)
    try:
        trace = run_closed_loop(plant, controller, ctx.scenario)
    except Exception as exc:  # run failures become rows, the sweep continues
        bad = metrics.RunMetrics(
            epsilon=math.nan, j_u=math.nan, config_tag=combo.tag,
            controller_kind=combo.controller_kind,
        )
        return None, bad, f"error:{type(exc).__name__}"
    window = trace.active
    if not np.any(window):
        bad = metrics.RunMetrics(
            epsilon=math.nan, j_u=math.nan, config_tag=combo.tag,
            controller_kind=combo.controller_kind,
        )
        return trace, bad, "error:no-active-steps"
    errors = trace.y[window]  # regulation to zero reference
    run_metrics = metrics.RunMetrics(
        epsilon=metrics.itae(errors, trace.dt),
        j_u=metrics.control_effort(trace.u[window]),
        config_tag=combo.tag,
        controller_kind=combo.controller_kind,
    )
    status = "ok"
    if trace.diverged_at is not None:
        status = f"diverged@{trace.diverged_at}"
    elif np.any(trace.fallback):
        status = f"ok(fallbacks={int(np.sum(trace.fallback))})"
    return trace, run_metrics, status


def cmd_run(cfg: ExperimentConfig) -> dict[str, Path]:
    """Single closed-loop run with the configured controller; writes trace + metrics."""
    ctx = _load_run_context(cfg)
    c = cfg.controller
    combo = SweepCombo(c.kind, c.q, c.r, c.lambda_g, c.lambda_sigma)
    trace, run_metrics, status = _execute(ctx, combo)
    if trace is None:
        raise RuntimeError(f"closed-loop run failed: {status}")
    out = cfg.resolved_output_dir()
    comment = f"config_hash={cfg.config_hash()}"
    trace_path = out / TRACE_FILE
    trace.to_csv(trace_path, comment=comment)
    metrics_path = out / METRICS_FILE
    metrics.write_sweep_csv([(run_metrics, status)], metrics_path, comment=comment)
    log.info("run %s finished: %s (epsilon=%g, J_u=%g)",
             combo.controller_kind, status, run_metrics.epsilon, run_metrics.j_u)
    return {"trace": trace_path, "metrics": metrics_path}


_SWEEP_CTX: _RunContext | None = None


def _sweep_worker(combo: SweepCombo) -> tuple[metrics.RunMetrics, str]:
    assert _SWEEP_CTX is not None
    _, run_metrics, status = _execute(_SWEEP_CTX, combo)
    return run_metrics, status


def cmd_sweep(cfg: ExperimentConfig, workers: int = 1) -> Path:
    """Run every grid combination against the shared dataset; write sweep CSV."""
    global _SWEEP_CTX
    plan = sweep_plan(cfg)
    ctx = _load_run_context(cfg)
    log.info("sweep: %d runs (%d dkpc, %d deepc)",
             len(plan), sum(c.kind == "dkpc" for c in plan),
             sum(c.kind == "deepc" for c in plan))
    _SWEEP_CTX = ctx
    try:
        if workers > 1 and sys.platform.startswith("linux"):
            with multiprocessing.get_context("fork").Pool(workers) as pool:
                results = pool.map(_sweep_worker, plan)
        else:
            results = [_sweep_worker(combo) for combo in plan]
    finally:
        _SWEEP_CTX = None
    rows = list(zip((m for m, _ in results), (s for _, s in results)))
    order = sorted(
        range(len(plan)),
        key=lambda i: (
            plan[i].kind,
            plan[i].q,
            plan[i].r,
            plan[i].lambda_g,
            plan[i].lambda_sigma if plan[i].lambda_sigma is not None else -1.0,
        ),
    )
    rows = [rows[i] for i in order]
    out = cfg.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    path = out / SWEEP_FILE
    metrics.write_sweep_csv(rows, path, comment=f"config_hash={cfg.config_hash()}")
    log.info("wrote %s (%d rows)", path, len(rows))
    return path


def cmd_report(cfg: ExperimentConfig, sweep_csv: Path | None = None) -> dict[str, Path]:
    """Emit frontier, per-alpha winner table and text summary from a sweep CSV."""
    out = cfg.resolved_output_dir()
    path = sweep_csv if sweep_csv is not None else out / SWEEP_FILE
    if not Path(path).exists():
        raise ConfigError(f"sweep CSV not found: {path}")
    rows = metrics.read_sweep_csv(path)
    usable = [m for m, status in rows if status.startswith("ok") and math.isfinite(m.epsilon)]
    dkpc_rows = [m for m in usable if m.controller_kind == metrics.DKPC]
    deepc_rows = [m for m in usable if m.controller_kind == metrics.DEEPC]
    comment = f"config_hash={cfg.config_hash()}"

    frontiers = {}
    if dkpc_rows:
        frontiers[metrics.DKPC] = metrics.pareto_frontier(dkpc_rows)
    if deepc_rows:
        frontiers[metrics.DEEPC] = metrics.pareto_frontier(deepc_rows)
    frontier_path = out / FRONTIER_FILE
    metrics.write_frontier_csv(frontiers, frontier_path, comment=comment)

    paths = {"frontier": frontier_path}
    lines = [f"sweep report ({comment})",
             f"rows: {len(rows)} total, {len(usable)} usable "
             f"({len(dkpc_rows)} DKPC, {len(deepc_rows)} DeePC)"]
    for kind in sorted(frontiers):
        lines.append(f"{kind} frontier size: {len(frontiers[kind])}")

    if dkpc_rows and deepc_rows:
        alphas = np.linspace(0.0, 1.0, cfg.report.alphas)
        winners = metrics.best_per_alpha(dkpc_rows, deepc_rows, alphas)
        winners_path = out / WINNERS_FILE
        metrics.write_winners_csv(winners, winners_path, comment=comment)
        paths["winners"] = winners_path
        for w in winners:
            lines.append(
                f"alpha={w.alpha:.3f}: DKPC S={w.dkpc_index:.6f} {w.dkpc_tag} | "
                f"DeePC S={w.deepc_index:.6f} {w.deepc_tag} -> best {w.winner}"
            )
    else:
        lines.append("winner table skipped: need usable rows from both controllers")

    summary_path = out / SUMMARY_FILE
    summary_path.write_text("\n".join(lines) + "\n")
    paths["summary"] = summary_path
    log.info("wrote %s", summary_path)
    return paths


# -- argument parsing ---------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dkpc",
        description="Data-driven Koopman predictive control experiment harness",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", required=True, help="YAML experiment config")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config key, e.g. --set controller.q=100",
        )
        p.add_argument("-o", "--output-dir", help="override output directory")
        p.add_argument(
            "--reduced",
            action="store_true",
            help=f"desk-scale run: data length {REDUCED_DATA_LENGTH}, "
            f"{REDUCED_SIM_STEPS} closed-loop steps, {REDUCED_N_BASIS} observables, "
            "grids halved",
        )

    common(sub.add_parser("gen-data", help="generate the excitation dataset and bank"))
    common(sub.add_parser("run", help="run one closed loop and score it"))
    p_sweep = sub.add_parser("sweep", help="run the full tuning grid for both controllers")
    common(p_sweep)
    p_sweep.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p_report = sub.add_parser("report", help="emit frontier and winner tables from a sweep")
    common(p_report)
    p_report.add_argument("--sweep-csv", help="sweep CSV path (default: <output>/sweep.csv)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        overrides = list(args.overrides)
        if args.output_dir:
            overrides.append(f"output_dir={args.output_dir}")
        cfg = load_config(args.config, overrides)
        if args.reduced:
            cfg = apply_reduced(cfg)
        if args.command == "gen-data":
            cmd_gen_data(cfg)
        elif args.command == "run":
            cmd_run(cfg)
        elif args.command == "sweep":
            cmd_sweep(cfg, workers=args.workers)
        elif args.command == "report":
            sweep_csv = Path(args.sweep_csv) if args.sweep_csv else None
            cmd_report(cfg, sweep_csv=sweep_csv)
    except (ConfigError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
