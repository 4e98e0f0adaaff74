"""Scenario configs (JSON), the scenario runner, and run reports.

A config is strict JSON: unknown keys are rejected by name, defaults are
filled on parse, and parse -> serialize -> parse is the identity. Every
runner writes its outputs atomically (temp file + rename) and returns a
RunReport whose checks list mirrors what the CLI prints; the process exit
code is 0 iff every check passed.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .diagnostics import (
    detect_equilibrium,
    fit_decay,
    gcc_check_1d,
    lyapunov_eps,
    observability_ratio,
    virial_series,
)
from .domain import Domain, DomainSpec, Geometry, build_domain
from .dynamics import Cause, DampingProfile, Trajectory, evolve, make_state
from .errors import ConfigError, NoDissipation, NotKPlus
from .functionals import Verdict, classify, energies, explicit_sobolev_check
from .ground_state import (
    GroundState,
    certify_well_constants,
    load_ground_state,
    nehari_project,
    petviashvili_solve,
    save_ground_state,
    shooting_oracle,
)

SCENARIOS = ("ground-state", "evolve", "dichotomy", "stabilize", "blowup", "check")


# -- config schema ---------------------------------------------------------------


@dataclass(frozen=True)
class DampingConfig:
    kind: str = "constant"  # zero|constant|indicator|smooth
    level: float = 1.0
    a: float = 0.0
    b: float = 0.0


@dataclass(frozen=True)
class InitialConfig:
    kind: str = "lambda_q"  # lambda_q|coeffs|file
    value: float = 0.8
    u: tuple = ()
    ut: tuple = ()
    path: str = ""


@dataclass(frozen=True)
class GroundStateConfig:
    tol: float = 1e-12
    max_iters: int = 10_000
    certify_trials: int = 300
    seed: int = 0
    path: str = ""  # load a saved record instead of solving
    run_oracle: bool = False


@dataclass(frozen=True)
class OutputConfig:
    csv: bool = True
    report: bool = True


@dataclass(frozen=True)
class ChecksConfig:
    energy_equality_rel: float = 1e-4   # at dt = 0.01 over t = 10; rescaled
    decay_factor: float = 1e-5          # completed runs must reach E < this * E0
    blowup_by: float = 30.0             # K- runs must detect blow-up by here
    observability_bound: float = 10.0   # max/median over the family
    decay_r2_min: float = 0.95
    lyapunov_eps: float = 0.01
    equivalence_rel: float = 1e-8


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "evolve"
    name: str = ""
    geometry: str = "interval"
    size: float = math.pi
    beta: float = 1.0
    n_modes: int = 128
    dealias: bool = True
    dt: float = 0.01
    t_end: float = 40.0
    sample_every: int = 10
    lambdas: tuple = (0.2, 0.4, 0.6, 0.8, 0.95)
    lambdas_minus: tuple = (1.05, 1.2, 1.4)
    alphas: tuple = (0.0, 1.0, 4.0)
    damping: DampingConfig = field(default_factory=DampingConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    ground_state: GroundStateConfig = field(default_factory=GroundStateConfig)
    outputs: OutputConfig = field(default_factory=OutputConfig)
    checks: ChecksConfig = field(default_factory=ChecksConfig)


_SECTION_TYPES = {
    "damping": DampingConfig,
    "initial": InitialConfig,
    "ground_state": GroundStateConfig,
    "outputs": OutputConfig,
    "checks": ChecksConfig,
}
_LIST_KEYS = {"lambdas", "lambdas_minus", "alphas", "u", "ut"}


def _parse_section(cls, data: dict, prefix: str):
    fields = {f.name for f in cls.__dataclass_fields__.values()}
    kwargs = {}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown config key '{prefix}{key}'")
        kwargs[key] = tuple(value) if key in _LIST_KEYS else value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad section '{prefix.rstrip('.')}': {exc}") from exc


def parse_config(data: dict) -> ScenarioConfig:
    """Validate a config dict; unknown keys are errors naming the key."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    fields = {f.name for f in ScenarioConfig.__dataclass_fields__.values()}
    kwargs = {}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown config key '{key}'")
        if key in _SECTION_TYPES:
            if not isinstance(value, dict):
                raise ConfigError(f"section '{key}' must be an object")
            kwargs[key] = _parse_section(_SECTION_TYPES[key], value, key + ".")
        elif key in _LIST_KEYS:
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    cfg = ScenarioConfig(**kwargs)
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(
            f"unknown scenario '{cfg.scenario}' (expected one of {SCENARIOS})"
        )
    if cfg.geometry not in ("interval", "radial_ball"):
        raise ConfigError(f"unknown geometry '{cfg.geometry}'")
    if cfg.damping.kind not in ("zero", "constant", "indicator", "smooth"):
        raise ConfigError(f"unknown damping.kind '{cfg.damping.kind}'")
    if cfg.initial.kind not in ("lambda_q", "coeffs", "file"):
        raise ConfigError(f"unknown initial.kind '{cfg.initial.kind}'")
    return cfg


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Canonical full dict (all defaults filled); JSON-ready."""
    out = asdict(cfg)
    for key in ("lambdas", "lambdas_minus", "alphas"):
        out[key] = list(out[key])
    out["initial"]["u"] = list(out["initial"]["u"])
    out["initial"]["ut"] = list(out["initial"]["ut"])
    return out


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}")
    return parse_config(data)


def save_config(cfg: ScenarioConfig, path: str) -> None:
    _atomic_write(path, json.dumps(config_to_dict(cfg), indent=2) + "\n")


# -- report ------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float


@dataclass
class RunReport:
    scenario: str
    name: str
    verdicts: dict
    checks: list
    files: list
    wall_time_s: float

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "name": self.name,
            "verdicts": self.verdicts,
            "checks": [asdict(c) for c in self.checks],
            "files": self.files,
            "wall_time_s": self.wall_time_s,
        }


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _worker_count() -> int:
    env = os.environ.get("PWLAB_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


# -- scenario building blocks --------------------------------------------------------


def _build_domain(cfg: ScenarioConfig) -> Domain:
    geometry = Geometry.INTERVAL if cfg.geometry == "interval" else Geometry.RADIAL_BALL
    return build_domain(DomainSpec(geometry, cfg.size, cfg.n_modes, cfg.beta,
                                   cfg.dealias))


def _build_damping(cfg: ScenarioConfig, dom: Domain,
                   level: float | None = None) -> DampingProfile:
    d = cfg.damping
    lvl = d.level if level is None else level
    if d.kind == "zero" or lvl == 0.0:
        return DampingProfile.zero(dom)
    if d.kind == "constant":
        return DampingProfile.constant(dom, lvl)
    if d.kind == "indicator":
        return DampingProfile.indicator(dom, d.a, d.b, lvl)
    return DampingProfile.smooth(dom, d.a, d.b, lvl)


def _obtain_ground_state(cfg: ScenarioConfig, dom: Domain) -> GroundState:
    gc = cfg.ground_state
    if gc.path:
        gs = load_ground_state(gc.path)
        if (gs.domain.n_modes != dom.n_modes or gs.domain.size != dom.size
                or gs.domain.beta != dom.beta
                or gs.domain.spec.geometry != dom.spec.geometry):
            raise ConfigError(
                f"ground-state record '{gc.path}' does not match the domain"
            )
        return gs
    return petviashvili_solve(dom, tol=gc.tol, max_iters=gc.max_iters)


def _initial_state(cfg: ScenarioConfig, dom: Domain, gs: GroundState,
                   lam: float | None = None):
    init = cfg.initial
    if init.kind == "lambda_q" or lam is not None:
        factor = init.value if lam is None else lam
        return make_state(dom, factor * gs.q, dom.zero_field())
    if init.kind == "coeffs":
        u = dom.inverse(np.array(init.u, dtype=float))
        ut = (dom.inverse(np.array(init.ut, dtype=float))
              if init.ut else dom.zero_field())
        return make_state(dom, u, ut)
    with open(init.path) as fh:
        data = json.load(fh)
    u = dom.inverse(np.array([float(s) for s in data["u_coeffs"]]))
    ut = dom.inverse(np.array([float(s) for s in data.get("ut_coeffs")
                               or [0.0] * dom.n_modes]))
    return make_state(dom, u, ut)


def _energy_equality_tolerance(cfg: ScenarioConfig, e0: float) -> float:
    # calibrated contract: 1e-4 * E0 at dt = 0.01 over t = 10, O(dt^2) in dt
    # and linear in elapsed time
    scale = (cfg.dt / 0.01) ** 2 * max(1.0, cfg.t_end / 10.0)
    return cfg.checks.energy_equality_rel * max(abs(e0), 1e-30) * scale


def _run_one(dom, gamma, state, cfg, q_h01, store_fields=True) -> Trajectory:
    return evolve(dom, gamma, state, cfg.t_end, dt=cfg.dt,
                  sample_every=cfg.sample_every, q_h01=q_h01,
                  store_fields=store_fields)


# -- scenarios -------------------------------------------------------------------------


def _scenario_ground_state(cfg, dom, out_dir):
    checks, files, verdicts = [], [], {}
    gs = _obtain_ground_state(cfg, dom)
    h01_sq = dom.h01_norm_sq(gs.q)
    tri = energies(dom, gs.q, dom.zero_field())
    checks.append(CheckResult("residual", gs.residual < 1e-10, gs.residual, 1e-10))
    checks.append(CheckResult("iterations", gs.iterations < 2000,
                              gs.iterations, 2000))
    checks.append(CheckResult("nehari_zero", abs(tri.K) <= 1e-8 * h01_sq,
                              abs(tri.K) / h01_sq, 1e-8))
    d_identity = abs(gs.d_level - dom.l4_norm_4(gs.q) / 4.0) / gs.d_level
    checks.append(CheckResult("level_identity", d_identity <= 1e-8,
                              d_identity, 1e-8))
    if cfg.ground_state.run_oracle:
        oracle = shooting_oracle(dom)
        dist = float(np.max(np.abs(gs.q - oracle.q)) / np.max(np.abs(gs.q)))
        checks.append(CheckResult("oracle_linf", dist <= 1e-6, dist, 1e-6))
        d_dist = abs(gs.d_level - oracle.d_level) / gs.d_level
        checks.append(CheckResult("oracle_level", d_dist <= 1e-6, d_dist, 1e-6))
    certify_well_constants(gs, trial_count=cfg.ground_state.certify_trials,
                           seed=cfg.ground_state.seed)
    checks.append(CheckResult("certified", gs.certified, 1.0, 1.0))
    path = os.path.join(out_dir, "ground_state.json")
    save_ground_state(gs, path)
    files.append(path)
    verdicts["d"] = gs.d_level
    verdicts["residual"] = gs.residual
    verdicts["iterations"] = gs.iterations
    return verdicts, checks, files


def _classification_checks(dom, wc, traj, cfg, checks):
    """K-sign invariance plus the K+ energy equivalence along the samples."""
    k0 = traj.k[0]
    if k0 >= 0:
        flips = int(np.sum(traj.k < 0.0))
    else:
        flips = int(np.sum(traj.k >= 0.0))
    checks.append(CheckResult("k_sign_invariant", flips == 0, flips, 0))
    if k0 >= 0:
        rel = cfg.checks.equivalence_rel
        norm_sq = traj.h01**2 + traj.l2t**2
        lower_ok = np.all(2 * traj.e <= norm_sq * (1 + rel) + 1e-30)
        upper_ok = np.all(norm_sq <= 4 * traj.e * (1 + rel) + 1e-30)
        checks.append(CheckResult("energy_equivalence",
                                  bool(lower_ok and upper_ok),
                                  float(np.max(norm_sq - 4 * traj.e,
                                               initial=0.0)), rel))


def _scenario_evolve(cfg, dom, out_dir):
    checks, files, verdicts = [], [], {}
    gs = _obtain_ground_state(cfg, dom)
    wc = certify_well_constants(gs, trial_count=cfg.ground_state.certify_trials,
                                seed=cfg.ground_state.seed)
    gamma = _build_damping(cfg, dom)
    state = _initial_state(cfg, dom, gs)
    cls = classify(dom, wc, state.u, state.ut)
    q_h01 = math.sqrt(dom.h01_norm_sq(gs.q))
    traj = _run_one(dom, gamma, state, cfg, q_h01, store_fields=False)
    verdicts["classification"] = cls.verdict.value
    verdicts["cause"] = traj.cause.value
    verdicts["t_detect"] = traj.t_detect
    verdicts["e_end_over_e0"] = (traj.e[-1] / traj.e0 if traj.e0 else 0.0)
    if traj.cause is Cause.COMPLETED and traj.e0 > 0:
        tol = _energy_equality_tolerance(cfg, traj.e0)
        checks.append(CheckResult("energy_equality", traj.residual[-1] <= tol,
                                  float(traj.residual[-1]), tol))
        _classification_checks(dom, wc, traj, cfg, checks)
    if cfg.outputs.csv:
        path = os.path.join(out_dir, "run.csv")
        traj.to_csv(path)
        files.append(path)
    return verdicts, checks, files


def _scenario_dichotomy(cfg, dom, out_dir):
    checks, files, verdicts = [], [], {}
    gs = _obtain_ground_state(cfg, dom)
    wc = certify_well_constants(gs, trial_count=cfg.ground_state.certify_trials,
                                seed=cfg.ground_state.seed)
    q_h01 = math.sqrt(dom.h01_norm_sq(gs.q))

    jobs = [(lam, None) for lam in cfg.lambdas]
    jobs += [(lam, alpha) for lam in cfg.lambdas_minus for alpha in cfg.alphas]

    def run(job):
        lam, alpha = job
        gamma = _build_damping(cfg, dom, level=alpha)
        state = _initial_state(cfg, dom, gs, lam=lam)
        cls = classify(dom, wc, state.u, state.ut)
        traj = evolve(dom, gamma, state, cfg.t_end, dt=cfg.dt,
                      sample_every=cfg.sample_every, q_h01=q_h01,
                      store_fields=False)
        return lam, alpha, cls, traj

    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        results = list(pool.map(run, jobs))

    rows = []
    mismatches = 0
    for lam, alpha, cls, traj in results:
        if lam < 1.0:
            expected = "completed"
            decayed = traj.e[-1] < cfg.checks.decay_factor * traj.e0
            ok = traj.cause is Cause.COMPLETED and decayed
        else:
            expected = "blowup"
            ok = (traj.cause is Cause.BLOW_UP and traj.t_detect is not None
                  and traj.t_detect <= cfg.checks.blowup_by)
        mismatches += 0 if ok else 1
        rows.append({
            "lambda": lam,
            "alpha": cfg.damping.level if alpha is None else alpha,
            "classification": cls.verdict.value,
            "cause": traj.cause.value,
            "t_detect": traj.t_detect,
            "e_end_over_e0": traj.e[-1] / traj.e0 if traj.e0 else 0.0,
            "expected": expected,
            "ok": ok,
        })
    verdicts["runs"] = rows
    checks.append(CheckResult("dichotomy_verdicts", mismatches == 0,
                              mismatches, 0))
    if cfg.outputs.csv:
        path = os.path.join(out_dir, "dichotomy.csv")
        header = "lambda,alpha,classification,cause,t_detect,e_end_over_e0,expected,ok"
        lines = [header]
        for r in rows:
            lines.append(",".join([
                repr(float(r["lambda"])), repr(float(r["alpha"])),
                r["classification"], r["cause"],
                "" if r["t_detect"] is None else repr(float(r["t_detect"])),
                repr(float(r["e_end_over_e0"])), r["expected"], str(r["ok"]),
            ]))
        _atomic_write(path, "\n".join(lines) + "\n")
        files.append(path)
    return verdicts, checks, files


def _scenario_stabilize(cfg, dom, out_dir):
    checks, files, verdicts = [], [], {}
    gs = _obtain_ground_state(cfg, dom)
    wc = certify_well_constants(gs, trial_count=cfg.ground_state.certify_trials,
                                seed=cfg.ground_state.seed)
    gamma = _build_damping(cfg, dom)
    q_h01 = math.sqrt(dom.h01_norm_sq(gs.q))

    holds, l_control = gcc_check_1d(dom, gamma)
    verdicts["gcc_holds"] = holds
    verdicts["gcc_control_length"] = l_control
    checks.append(CheckResult("gcc_holds", holds, 1.0 if holds else 0.0, 1.0))

    state = _initial_state(cfg, dom, gs)
    traj = _run_one(dom, gamma, state, cfg, q_h01, store_fields=True)
    checks.append(CheckResult("completed", traj.cause is Cause.COMPLETED,
                              1.0 if traj.cause is Cause.COMPLETED else 0.0, 1.0))

    fit = fit_decay(traj)
    verdicts["lambda_fit"] = fit.lambda_fit
    verdicts["r_squared"] = fit.r_squared
    checks.append(CheckResult("decay_rate_positive", fit.lambda_fit > 0,
                              fit.lambda_fit, 0.0))
    checks.append(CheckResult("decay_fit_r2", fit.r_squared >= cfg.checks.decay_r2_min,
                              fit.r_squared, cfg.checks.decay_r2_min))

    eq = detect_equilibrium(gs, traj)
    verdicts["equilibrium"] = eq.verdict.value
    checks.append(CheckResult("equilibrium_zero", eq.verdict.value == "Zero",
                              min(eq.distances.values()), 0.05 * q_h01))

    # Lyapunov sandwich along the run while the state is still classifiable
    eps = cfg.checks.lyapunov_eps
    sandwich_fail = 0
    for i in range(len(traj)):
        s_i = make_state(dom, traj.us[i], traj.uts[i], traj.ts[i])
        try:
            if not lyapunov_eps(dom, wc, s_i, eps).sandwich_ok:
                sandwich_fail += 1
        except NotKPlus:
            sandwich_fail += 1
    checks.append(CheckResult("lyapunov_sandwich", sandwich_fail == 0,
                              sandwich_fail, 0))

    # observability ratios across the lambda family
    t_obs = min(10.0, 0.5 * cfg.t_end)

    def ratio_for(lam):
        s0 = _initial_state(cfg, dom, gs, lam=lam)
        tr = evolve(dom, gamma, s0, t_obs + cfg.dt, dt=cfg.dt,
                    sample_every=cfg.sample_every, q_h01=q_h01,
                    store_fields=False)
        return observability_ratio(dom, gamma, tr, 0.0, t_obs).ratio

    family = [lam for lam in cfg.lambdas if lam < 1.0]
    try:
        with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
            ratios = list(pool.map(ratio_for, family))
        spread = float(max(ratios) / np.median(ratios))
        verdicts["observability_ratios"] = ratios
        checks.append(CheckResult("observability_uniform",
                                  spread <= cfg.checks.observability_bound,
                                  spread, cfg.checks.observability_bound))
    except NoDissipation:
        checks.append(CheckResult("observability_uniform", False, math.inf,
                                  cfg.checks.observability_bound))

    if cfg.outputs.csv:
        path = os.path.join(out_dir, "run.csv")
        traj.to_csv(path)
        files.append(path)
    return verdicts, checks, files


def _scenario_blowup(cfg, dom, out_dir):
    checks, files, verdicts = [], [], {}
    gs = _obtain_ground_state(cfg, dom)
    wc = certify_well_constants(gs, trial_count=cfg.ground_state.certify_trials,
                                seed=cfg.ground_state.seed)
    gamma = _build_damping(cfg, dom)
    q_h01 = math.sqrt(dom.h01_norm_sq(gs.q))

    init = cfg.initial
    lam = init.value if init.kind == "lambda_q" else None
    state = _initial_state(cfg, dom, gs, lam=lam)
    cls = classify(dom, wc, state.u, state.ut)
    verdicts["classification"] = cls.verdict.value
    checks.append(CheckResult("starts_in_k_minus",
                              cls.verdict is Verdict.K_MINUS,
                              1.0 if cls.verdict is Verdict.K_MINUS else 0.0, 1.0))

    traj = _run_one(dom, gamma, state, cfg, q_h01, store_fields=False)
    verdicts["cause"] = traj.cause.value
    verdicts["t_detect"] = traj.t_detect
    detected = traj.cause is Cause.BLOW_UP and traj.t_detect is not None
    checks.append(CheckResult("blow_up_detected", detected,
                              traj.t_detect if detected else math.inf,
                              cfg.checks.blowup_by))
    if detected:
        checks.append(CheckResult("blow_up_by", traj.t_detect <= cfg.checks.blowup_by,
                                  traj.t_detect, cfg.checks.blowup_by))
    neg = int(np.sum(traj.k >= 0.0))
    checks.append(CheckResult("k_negative_invariant", neg == 0, neg, 0))

    report = virial_series(traj, c_e=1.0, tail_fraction=0.4)
    verdicts["virial_max_mpp_deviation"] = report.max_mpp_deviation
    checks.append(CheckResult("virial_convexity_tail", report.convexity_tail_ok,
                              1.0 if report.convexity_tail_ok else 0.0, 1.0))
    if cfg.outputs.csv:
        path = os.path.join(out_dir, "run.csv")
        traj.to_csv(path)
        files.append(path)
    return verdicts, checks, files


def _scenario_check(cfg, dom, out_dir):
    """Compact battery: certificate, variational sweeps, short evolution."""
    checks, files, verdicts = [], [], {}
    gs = _obtain_ground_state(cfg, dom)
    wc = certify_well_constants(gs, trial_count=cfg.ground_state.certify_trials,
                                seed=cfg.ground_state.seed)
    h01_sq = dom.h01_norm_sq(gs.q)
    tri = energies(dom, gs.q, dom.zero_field())
    checks.append(CheckResult("residual", gs.residual < 1e-10, gs.residual, 1e-10))
    checks.append(CheckResult("nehari_zero", abs(tri.K) <= 1e-8 * h01_sq,
                              abs(tri.K) / h01_sq, 1e-8))

    rng = np.random.default_rng(cfg.ground_state.seed)
    from .domain import random_field

    worst_mp = math.inf
    worst_sobolev = math.inf
    for _ in range(200):
        u = random_field(dom, rng, decay=rng.uniform(0, 2.5))
        j = energies(dom, nehari_project(dom, u), dom.zero_field()).J
        worst_mp = min(worst_mp, j / gs.d_level)
        worst_sobolev = min(worst_sobolev, explicit_sobolev_check(dom, wc, u))
    checks.append(CheckResult("mountain_pass", worst_mp >= 1 - 1e-6,
                              worst_mp, 1 - 1e-6))
    checks.append(CheckResult("sobolev_slack", worst_sobolev >= -1e-8,
                              worst_sobolev, -1e-8))

    gamma = _build_damping(cfg, dom)
    state = _initial_state(cfg, dom, gs)
    q_h01 = math.sqrt(h01_sq)
    short = replace(cfg, t_end=min(cfg.t_end, 10.0))
    traj = evolve(dom, gamma, state, short.t_end, dt=cfg.dt,
                  sample_every=cfg.sample_every, q_h01=q_h01,
                  store_fields=False)
    if traj.cause is Cause.COMPLETED and traj.e0 > 0:
        tol = _energy_equality_tolerance(short, traj.e0)
        checks.append(CheckResult("energy_equality", traj.residual[-1] <= tol,
                                  float(traj.residual[-1]), tol))
        _classification_checks(dom, wc, traj, cfg, checks)
    verdicts["d"] = gs.d_level
    verdicts["cause"] = traj.cause.value
    return verdicts, checks, files


_RUNNERS = {
    "ground-state": _scenario_ground_state,
    "evolve": _scenario_evolve,
    "dichotomy": _scenario_dichotomy,
    "stabilize": _scenario_stabilize,
    "blowup": _scenario_blowup,
    "check": _scenario_check,
}


def run_scenario(cfg: ScenarioConfig, out_dir: str = "pwlab_out") -> RunReport:
    """Build the domain, dispatch the scenario, write outputs, report checks."""
    start = time.monotonic()
    os.makedirs(out_dir, exist_ok=True)
    dom = _build_domain(cfg)
    verdicts, checks, files = _RUNNERS[cfg.scenario](cfg, dom, out_dir)
    report = RunReport(scenario=cfg.scenario, name=cfg.name, verdicts=verdicts,
                       checks=checks, files=files,
                       wall_time_s=time.monotonic() - start)
    if cfg.outputs.report:
        path = os.path.join(out_dir, "report.json")
        _atomic_write(path, json.dumps(report.to_dict(), indent=2,
                                       default=float) + "\n")
        report.files.append(path)
    return report
