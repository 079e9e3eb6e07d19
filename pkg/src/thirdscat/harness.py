"""Run configuration, reports and the pipelines behind the command-line tool."""
from __future__ import annotations

import copy
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import boundstates as bs
from . import direct as dr
from . import io
from . import marchenko as mk
from . import riemann_hilbert as rh
from .geometry import Z, XGrid
from .numerics import rel_l2
from .potentials import PRESETS, PotentialPair, preset

log = logging.getLogger(__name__)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_MODEL = 0, 1, 2, 3

DEFAULTS = {
    "pipeline": "forward",
    "preset": "gauss",
    "params": {},
    "dataset": None,
    "poles": None,
    "grid": {"x_min": -12.0, "x_max": 12.0, "n_points": 2048},
    "sweep": {"s_min": 0.05, "s_max": 8.0, "n": 24},
    "search": {"r_min": 0.2, "r_max": 5.0, "n_r": 10, "n_theta": 8},
    "marchenko": {"x_min": -6.0, "x_max": 6.0, "n_x": 241, "Y": 30.0, "nodes": 96, "panels": 12,
                  "driving": "full", "s_max": 8.0, "panel": 0.1, "s_nodes": 16},
    "roundtrip": {"mode": "marchenko"},
    "tolerances": {"tail_tol": 1e-12, "residual_tol": 1e-8, "identity_tol": 1e-6, "m_n_tol": 1e-3,
                   "root_tol": 1e-8, "wronskian_tol": 1e-6, "dual_route_tol": 1e-5, "glue_tol": 1e-5,
                   "recovery_tol": 0.05, "agreement_tol": 0.01, "rho_tol": 0.02, "pole_tol": 1e-5,
                   "reflection_tol": 1e-4, "gamma_tol": 1e-4},
    "out": "out",
    "threads": 1,
}

PIPELINES = ("forward", "bound-states", "rh-solitons", "marchenko", "roundtrip", "selftest", "emit-plots")


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


@dataclass
class RunConfig:
    """Fully materialized configuration; every default is present."""

    data: dict

    @classmethod
    def build(cls, path=None, overrides: dict | None = None) -> "RunConfig":
        cfg = copy.deepcopy(DEFAULTS)
        if path is not None:
            p = Path(path)
            if not p.is_file():
                raise ConfigError(f"config file not found: {p}")
            try:
                cfg = _merge(cfg, json.loads(p.read_text()))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {p} is not valid JSON: {exc}") from None
        cfg = _merge(cfg, overrides or {})
        out = cls(cfg)
        out.validate()
        return out

    def __getitem__(self, key):
        return self.data[key]

    def validate(self):
        d = self.data
        unknown = set(d) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        unknown_tol = set(d["tolerances"]) - set(DEFAULTS["tolerances"])
        if unknown_tol:
            raise ConfigError(f"unknown tolerances: {sorted(unknown_tol)}")
        for k, v in d["tolerances"].items():
            if not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"tolerance {k} must be positive, got {v!r}")
        if d["pipeline"] not in PIPELINES:
            raise ConfigError(f"unknown pipeline {d['pipeline']!r}")
        if d["preset"] is not None and d["preset"] not in PRESETS:
            raise ConfigError(f"unknown preset {d['preset']!r}; choose from {sorted(PRESETS)}")
        for key in ("dataset", "poles"):
            v = d[key]
            if isinstance(v, str) and not Path(v).is_file():
                raise ConfigError(f"{key} file not found: {v}")
        g = d["grid"]
        if not (g["x_min"] < 0 < g["x_max"]) or int(g["n_points"]) < 8:
            raise ConfigError("grid must straddle 0 and have at least 8 points")
        if int(d["threads"]) < 1:
            raise ConfigError("threads must be >= 1")
        if d["roundtrip"]["mode"] not in ("marchenko", "reflectionless"):
            raise ConfigError("roundtrip.mode must be 'marchenko' or 'reflectionless'")
        if d["marchenko"]["driving"] not in mk.DRIVING:
            raise ConfigError(f"marchenko.driving must be one of {mk.DRIVING}")

    def canonical(self) -> str:
        """Canonical JSON of everything that can change results (the output location cannot)."""
        return json.dumps({k: v for k, v in self.data.items() if k != "out"}, sort_keys=True, default=str)

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    @property
    def tol(self) -> dict:
        return self.data["tolerances"]

    @property
    def grid(self) -> XGrid:
        g = self.data["grid"]
        return XGrid(float(g["x_min"]), float(g["x_max"]), int(g["n_points"]))

    @property
    def out(self) -> Path:
        return Path(self.data["out"])

    def potential(self) -> PotentialPair:
        if self.data["preset"] is None:
            raise ConfigError("this pipeline needs a potential preset")
        try:
            return preset(self.data["preset"], **self.data["params"])
        except TypeError as exc:
            raise ConfigError(f"bad parameters for preset {self.data['preset']!r}: {exc}") from None

    def s_sweep(self) -> np.ndarray:
        sw = self.data["sweep"]
        if "s" in sw:
            return np.asarray(sw["s"], float)
        return np.geomspace(float(sw["s_min"]), float(sw["s_max"]), int(sw["n"]))

    def pole_list(self):
        p = self.data["poles"]
        if p is None:
            return [(1.1 * np.exp(1j * 1.2 * np.pi), 1.0)]
        if isinstance(p, str):
            return io.read_poles(p)
        return [(complex(q["k_re"], q["k_im"]), complex(q["gamma_re"], q["gamma_im"])) for q in p]


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    note: str = ""

    def to_dict(self):
        v = self.value
        return {"name": self.name, "value": None if not np.isfinite(v) else float(v),
                "tolerance": float(self.tolerance), "passed": bool(self.passed), "note": self.note}


@dataclass
class RunReport:
    pipeline: str
    config_hash: str
    checks: list = field(default_factory=list)
    skipped: str | None = None
    timing: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    def check(self, name, value, tolerance, note="", passed=None) -> bool:
        value = float(value)
        ok = bool(np.isfinite(value) and value <= tolerance) if passed is None else bool(passed)
        self.checks.append(Check(name, value, float(tolerance), ok, note))
        return ok

    @property
    def status(self) -> str:
        if self.skipped:
            return "skipped"
        return "pass" if all(c.passed for c in self.checks) else "fail"

    @property
    def exit_code(self) -> int:
        return {"pass": EXIT_PASS, "fail": EXIT_FAIL, "skipped": EXIT_MODEL}[self.status]

    def to_dict(self) -> dict:
        d = {"pipeline": self.pipeline, "status": self.status,
             "provenance": {"config_hash": self.config_hash, "code_version": __version__},
             "checks": [c.to_dict() for c in self.checks], "files": sorted(self.files)}
        if self.skipped:
            d["skipped"] = self.skipped
        return d

    def write(self, out: Path):
        """``report.json`` is deterministic; wall-clock timings go to ``timing.json``."""
        io.write_json(self.to_dict(), out / "report.json")
        io.write_json({k: round(v, 3) for k, v in self.timing.items()}, out / "timing.json")

    def summary(self) -> str:
        lines = [f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.value:.3e} (tol {c.tolerance:.1e})"
                 + (f"  {c.note}" if c.note else "") for c in self.checks]
        lines.append(self.skipped or f"status: {self.status}")
        return "\n".join(lines)


class _Timer:
    def __init__(self, report: RunReport, name: str):
        self.report, self.name = report, name

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.report.timing[self.name] = time.perf_counter() - self.t0


def _new_report(cfg: RunConfig) -> RunReport:
    return RunReport(cfg["pipeline"], cfg.hash)


def _write(report: RunReport, cfg: RunConfig, name: str, writer, *args):
    path = cfg.out / name
    writer(*args, path)
    report.files.append(name)


# pipelines -------------------------------------------------------------------


def _omega1_samples():
    return np.array([r * np.exp(1j * a) for r in (0.5, 1.0, 2.0, 4.0)
                     for a in (0.75 * np.pi, 0.9 * np.pi, 1.1 * np.pi, 1.25 * np.pi)])


def forward_checks(report: RunReport, pot: PotentialPair, data: dr.ScatteringDataset, grid: XGrid, tol: dict):
    ks = _omega1_samples()
    report.check("wronskian_constancy", np.max(dr.wronskian_spread(ks, pot, grid)), tol["wronskian_tol"])
    tw = dr.transmission_from_wronskian(ks, pot, grid)
    te = np.array([dr.extract_left(f)[0] for f in
                   dr.solve_basic_many("f", ks, pot, grid, x_eval=np.array([grid.x_min]))])
    report.check("dual_route_transmission", np.max(np.abs(tw - te) / np.abs(te)), tol["dual_route_tol"])
    left = max(dr.coupling_identity_residual("left", data, Z * s) for s in data.s)
    right = max(dr.coupling_identity_residual("right", data, Z * -s) for s in data.s)
    report.check("coupling_identity_left", left, tol["identity_tol"])
    report.check("coupling_identity_right", right, tol["identity_tol"])
    report.check("potential_tails", pot.tail_check(grid.x_min, grid.x_max), tol["tail_tol"])
    if pot.is_free:
        dev = max(np.max(np.abs(np.concatenate([*data.Tl.values(), *data.Tr.values()]) - 1)),
                  np.max(np.abs(np.concatenate([data.L, data.M, data.R, data.N]))))
        report.check("free_exactness", dev, tol["residual_tol"])


def run_forward(cfg: RunConfig):
    report = _new_report(cfg)
    pot, grid = cfg.potential(), cfg.grid
    s = cfg.s_sweep()
    with _Timer(report, "sweep"):
        data = dr.sweep_rays(pot, s, grid)
    with _Timer(report, "bound_states"):
        data.bound_states = _bound_states(cfg, pot, grid)
    with _Timer(report, "checks"):
        forward_checks(report, pot, data, grid, cfg.tol)
    _write(report, cfg, "dataset.json", io.write_dataset, data)
    k0 = s[len(s) // 2] * Z
    for kind, k in (("f", k0), ("g", -k0)):
        prof = dr.solve_basic(kind, k, pot, grid)
        _write(report, cfg, f"profile_{kind}.csv", io.write_profile_csv, prof)
    return data, report


def _search(cfg):
    sr = cfg["search"]
    return bs.SearchRegion(float(sr["r_min"]), float(sr["r_max"])), (int(sr["n_r"]), int(sr["n_theta"]))


def _bound_states(cfg, pot, grid):
    region, density = _search(cfg)
    return bs.bound_state_records(pot, grid, region, grid_density=density, root_tol=cfg.tol["root_tol"])


def run_bound_states(cfg: RunConfig):
    report = _new_report(cfg)
    pot, grid = cfg.potential(), cfg.grid
    with _Timer(report, "search"):
        try:
            recs = _bound_states(cfg, pot, grid)
        except bs.ArgumentPrincipleMismatch as exc:
            report.check("bound_state_count", 1.0, 0.0, note=str(exc), passed=False)
            return [], report
    for i, r in enumerate(recs):
        if "rejected" in " ".join(r.flags):
            report.check(f"bound_state_{i}_supported_branch", 1.0, 0.0, note=r.flags[-1], passed=False)
            continue
        report.check(f"bound_state_{i}_ratio_spread", r.spread, 1e-4)
        report.check(f"bound_state_{i}_norm_relation", abs(r.c_l * abs(r.D_j) - r.c_r) / r.c_r, 1e-6)
    io.write_json([r.to_dict() for r in recs], cfg.out / "bound_states.json")
    report.files.append("bound_states.json")
    return recs, report


def run_rh_solitons(cfg: RunConfig):
    report = _new_report(cfg)
    poles, grid = cfg.pole_list(), cfg.grid
    x = grid.x
    with _Timer(report, "solve"):
        try:
            sol = rh.solve_reflectionless(poles, x)
        except rh.SingularSystem as exc:
            report.check("residue_system_regular", 1.0, 0.0, note=str(exc), passed=False)
            return None, report
    report.check("residue_equations", sol.residue_residual(x), 1e-12)
    ks = np.array([2.0, -2.0, 1.5j, -1.5j, 3 * Z, 3 * Z * Z, 0.7 + 0.7j, -0.7 - 0.2j])
    report.check("ode_residual_8k", sol.ode_residual(ks, x), 1e-6)
    Q, P = sol.Q(x), sol.P(x)
    _write(report, cfg, "potential.csv", io.write_potential_csv, x, Q, P)
    io.write_poles(sol.poles, cfg.out / "poles.json")
    report.files.append("poles.json")
    return sol, report


def _marchenko_inputs(cfg: RunConfig, pot: PotentialPair | None):
    mc = cfg["marchenko"]
    sp, wp = mk.rho_quadrature_grid(float(mc["s_max"]), float(mc["panel"]), int(mc["s_nodes"]))
    if cfg["dataset"]:
        data = io.read_dataset(cfg["dataset"])
        w = np.gradient(data.s)
    else:
        data = dr.sweep_rays(pot, sp, cfg.grid, tail=False)
        w = wp
    return data, w


def run_marchenko(cfg: RunConfig, report: RunReport | None = None, pot: PotentialPair | None = None):
    """Forward data -> rho -> Marchenko -> (Q, P).  Returns (solution, recovered F, recovered G, report)."""
    report = report or _new_report(cfg)
    mc, tol = cfg["marchenko"], cfg.tol
    if pot is None and not cfg["dataset"]:
        pot = cfg.potential()
    with _Timer(report, "forward"):
        data, w = _marchenko_inputs(cfg, pot)
    delta = data.delta
    report.check("certified_delta", delta, tol["m_n_tol"], note="max |M|, |N| over the sweep")
    try:
        kernel = mk.build_rho(data, w, m_n_tol=tol["m_n_tol"])
    except mk.ModelViolation as exc:
        report.skipped = f"skipped: {exc}"
        return None, None, None, report
    x = np.linspace(float(mc["x_min"]), float(mc["x_max"]), int(mc["n_x"]))
    with _Timer(report, "marchenko"):
        sol = mk.solve_marchenko_grid(kernel, x, float(mc["Y"]), int(mc["nodes"]), int(mc["panels"]),
                                      mc["driving"], threads=int(cfg["threads"]))
    report.check("nystrom_residual", float(np.max(sol.residual)), 1e-10)
    rf, rg = mk.recover_from_F(sol), mk.recover_from_G(sol)
    report.check("recover_F_vs_G", max(rel_l2(rf.Q, rg.Q), rel_l2(rf.P, rg.P)), tol["agreement_tol"])
    _write(report, cfg, "recovered_potential.csv", io.write_potential_csv, x, rf.Q, rf.P)
    _write(report, cfg, "marchenko_F.csv", sol.to_csv)
    sol.meta.update(kernel=kernel, delta=delta)
    return sol, rf, rg, report


def run_roundtrip(cfg: RunConfig):
    report = _new_report(cfg)
    tol = cfg.tol
    if cfg["roundtrip"]["mode"] == "reflectionless":
        sol, report = run_rh_solitons(cfg)
        if sol is None:
            return report
        pot = sol.potentials()
        grid = cfg.grid
        with _Timer(report, "forward"):
            data = dr.sweep_rays(pot, np.array([0.3, 1.0, 3.0]), grid, tail=False)
        refl = max(np.max(np.abs(v)) for v in (data.L, data.M, data.R, data.N))
        report.check("reflections", refl, tol["reflection_tol"])
        for i, (k, g) in enumerate(sol.poles):
            with _Timer(report, f"pole_{i}"):
                c = bs.newton_refine(pot, grid, k * 1.01, tol["root_tol"])
            report.check(f"pole_{i}_location", abs(c.k - k), tol["pole_tol"], note=" ".join(c.flags))
            try:
                rec = bs.bound_state_record(c, pot, grid)
                report.check(f"pole_{i}_gamma", abs(rec.gamma_j - g) / abs(g), tol["gamma_tol"])
            except (dr.DependencyError, ValueError) as exc:
                report.check(f"pole_{i}_gamma", float("nan"), tol["gamma_tol"], note=str(exc))
        return report

    pot = cfg.potential()
    sol, rf, rg, report = run_marchenko(cfg, report, pot)
    if sol is None:
        return report
    q, p = pot(rf.x)
    delta = sol.meta["delta"]
    bound = max(tol["recovery_tol"], 10 * delta)
    report.check("recovered_Q_rel_l2", rel_l2(rf.Q, q), bound)
    report.check("recovered_P_rel_l2", rel_l2(rf.P, p), bound)
    with _Timer(report, "reextract"):
        _, err = mk.reextract_rho(rf, sol.meta["kernel"], cfg.grid)
    report.check("reextracted_rho", err, max(tol["rho_tol"], 10 * delta))
    return report


def run_selftest(cfg: RunConfig):
    """Every property and round-trip check at its acceptance tolerance."""
    from . import selftest

    report = _new_report(cfg)
    selftest.run_all(report, threads=int(cfg["threads"]), timing=report.timing)
    return report


EMIT_KINDS = ("reflection", "transmission", "potential", "marchenko-slice")


def emit_plots(kind: str, src, out: Path, x: float | None = None) -> list[str]:
    """Plain CSV curve files for external plotting tools."""
    out = Path(out)
    src = Path(src)
    if kind not in EMIT_KINDS:
        raise ConfigError(f"unknown plot kind {kind!r}; choose from {EMIT_KINDS}")
    if not src.is_file():
        raise ConfigError(f"input artifact not found: {src}")
    if kind in ("reflection", "transmission"):
        data = io.read_dataset(src)
        if kind == "reflection":
            cols = {"abs_L": data.L, "abs_M": data.M, "abs_R": data.R, "abs_N": data.N}
        else:
            cols = {f"abs_Tl_{k}": v for k, v in data.Tl.items()}
            cols.update({f"abs_Tr_{k}": v for k, v in data.Tr.items()})
        path = out / f"{kind}.csv"
        io._write_rows(path, ["s", *cols], [data.s, *[np.abs(v) for v in cols.values()]])
        return [path.name]
    if kind == "potential":
        xs, Q, P = io.read_potential_csv(src)
        path = out / "potential_curves.csv"
        io.write_potential_csv(xs, Q, P, path)
        return [path.name]
    a = np.loadtxt(src, delimiter=",", skiprows=1, ndmin=2)
    xs = np.unique(a[:, 0])
    x0 = xs[np.argmin(np.abs(xs - (0.0 if x is None else x)))]
    rows = a[a[:, 0] == x0]
    path = out / f"marchenko_slice_x{x0:+.3f}.csv"
    io._write_rows(path, ["y", "re", "im"], [rows[:, 1], rows[:, 2], rows[:, 3]])
    return [path.name]
