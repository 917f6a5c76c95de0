"""Declarative experiments: resolved configs in, deterministic result files out.

Every experiment takes a plain dict (already merged from defaults, config
file and command-line overrides), validates it, and writes CSV/JSON files
whose first lines carry the full resolved config.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytic
from .analysis import (default_final_time, gate_report, input_wire_snapshot, momentum_spectrum,
                       packet_stats, tune_switch_time)
from .assembly import (DEFAULT_INPUT, DEFAULT_OUTPUT, DEFAULT_SLIDE, build_gate_circuit,
                       load_widget, scaled_wire_lengths, shipped_widget)
from .errors import ConfigurationError
from .jacobi import build_chain, eigendecompose, hp_chain
from .propagate import Hamiltonian, PacketState, evolve, make_switch_schedule, write_trajectory_csv
from .scatter import bare_link_transmission, solve_plane_wave, sweep_k, write_table

PI = math.pi
DEFAULT_T_OFF = 0.226 * PI
DEFAULT_SNAPSHOT = 0.404 * PI

U_B = np.diag([1.0, np.exp(1j * PI / 4)])
U_C = -np.array([[1j, 1.0], [1.0, 1j]]) / math.sqrt(2)

DEFAULTS = {
    "momentum_map": {
        "a_values": [-4.0, -2.0, 0.0, 2.0, 4.0],
        "points": 401,
    },
    "gate_run": {
        "gate": "ub",
        "slide_len": DEFAULT_SLIDE,
        "input_len": DEFAULT_INPUT,
        "output_len": DEFAULT_OUTPUT,
        "a": -2.0,
        "t_off": DEFAULT_T_OFF,
        "t_final": "auto",
        "snapshot_times": [DEFAULT_T_OFF, DEFAULT_SNAPSHOT],
        "tune_range": [0.18 * PI, 0.28 * PI],
        "tune_objective": "transmission",
        "reference": True,
        "widget_file": None,
        "write_trajectory": True,
    },
    "fidelity_sweep": {
        "gates": ["ub"],
        "slide_lengths": list(range(200, 2001, 200)),
        "a": -2.0,
        "tune_range": [0.18 * PI, 0.28 * PI],
        "reference": True,
    },
    "scatter_sweep": {
        "widget": "ub",
        "k_points": 200,
        "input_rail": 0,
    },
    "validate_analytic": {
        "max_N": 60,
        "a_values": [-2.0, 0.0, 1.0],
        "times_per_case": 10,
        "tolerance": 1e-8,
    },
}

KINDS = tuple(DEFAULTS)


def fmt(x) -> str:
    """Machine-readable float: 17 significant digits."""
    return f"{float(x):.17g}"


def human(x) -> str:
    return f"{float(x):.4g}"


def resolve_config(kind: str, overrides: dict) -> dict:
    if kind not in DEFAULTS:
        raise ConfigurationError(f"unknown experiment {kind!r}; expected one of {KINDS}")
    unknown = sorted(set(overrides) - set(DEFAULTS[kind]) - {"experiment"})
    if unknown:
        raise ConfigurationError(f"{kind}: unknown config keys {unknown}")
    cfg = dict(DEFAULTS[kind])
    cfg.update({k: v for k, v in overrides.items() if k != "experiment"})
    cfg["experiment"] = kind
    _check(kind, cfg)
    return cfg


def _need(cond, key, msg):
    if not cond:
        raise ConfigurationError(f"{key}: {msg}")


def _check(kind, cfg):
    if kind == "momentum_map":
        _need(isinstance(cfg["a_values"], list) and cfg["a_values"], "a_values", "non-empty list required")
        _need(all(math.isfinite(a) for a in cfg["a_values"]), "a_values", "entries must be finite")
        _need(int(cfg["points"]) >= 3, "points", "need at least 3 points per curve")
    elif kind == "gate_run":
        _need(cfg["gate"] in ("ub", "uc", "reference"), "gate", "must be ub, uc or reference")
        _need(int(cfg["slide_len"]) >= 10, "slide_len", "must be >= 10")
        t_off = cfg["t_off"]
        _need(t_off == "auto" or (isinstance(t_off, (int, float)) and t_off > 0), "t_off",
              "must be 'auto' or a positive number")
        t_final = cfg["t_final"]
        _need(t_final == "auto" or isinstance(t_final, (int, float)), "t_final", "must be 'auto' or a number")
        _need(cfg["tune_objective"] in ("transmission", "peak_momentum"), "tune_objective",
              "must be transmission or peak_momentum")
        lo, hi = cfg["tune_range"]
        period = 2 * analytic.period_scale(cfg["a"]) * PI
        _need(0 < lo <= hi < period, "tune_range", f"must lie inside (0, {period:.6g})")
        if cfg["widget_file"] is not None:
            _need(Path(cfg["widget_file"]).is_file(), "widget_file", "file does not exist")
    elif kind == "fidelity_sweep":
        _need(set(cfg["gates"]) <= {"ub", "uc"} and cfg["gates"], "gates", "subset of [ub, uc] required")
        lengths = cfg["slide_lengths"]
        _need(lengths and all(int(n) >= 10 for n in lengths), "slide_lengths", "lengths must be >= 10")
    elif kind == "scatter_sweep":
        w = cfg["widget"]
        _need(w in ("ub", "uc", "link") or Path(w).is_file(), "widget",
              "must be ub, uc, link or an existing widget file")
        _need(int(cfg["k_points"]) >= 1, "k_points", "must be >= 1")
    elif kind == "validate_analytic":
        _need(1 <= int(cfg["max_N"]) <= 400, "max_N", "must be in 1..400")
        _need(int(cfg["times_per_case"]) >= 1, "times_per_case", "must be >= 1")


@dataclass
class Outcome:
    files: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    validation_failed: bool = False


def _header(cfg):
    return [f"config: {json.dumps(cfg, sort_keys=True)}"]


def _write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not serialisable: {type(obj)}")


def _floats(obj):
    """Round-trip floats through the fixed 17-digit format for byte stability."""
    if isinstance(obj, float):
        return float(fmt(obj)) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_floats(v) for v in obj]
    return obj


# ---------------------------------------------------------------- momentum map

def momentum_map(cfg: dict, out: Path) -> Outcome:
    outcome = Outcome()
    path = out / "momentum_map.csv"
    n = int(cfg["points"])
    with open(path, "w") as fh:
        fh.write(f"# {_header(cfg)[0]}\n")
        fh.write("a,b,t,t_over_pi,theta,theta_over_pi\n")
        for a in cfg["a_values"]:
            b = analytic.period_scale(a)
            period = 2 * b * PI
            for j in range(1, n + 1):
                t = period * j / (n + 1)
                th = analytic.momentum_theta(t, a)
                fh.write(",".join(fmt(v) for v in (a, b, t, t / PI, th, th / PI)) + "\n")
            outcome.summary.append(f"a={human(a)}: period 2b*pi={human(period)}, "
                                   f"symmetric about t=b*pi={human(b * PI)}")
    outcome.files.append(path.name)
    return outcome


# ---------------------------------------------------------------- gate run

def _gate_graph(cfg, gate=None):
    gate = gate or cfg["gate"]
    widget = None
    if cfg.get("widget_file") and gate != "reference":
        widget = load_widget(cfg["widget_file"])
    return build_gate_circuit(gate, int(cfg["slide_len"]), int(cfg["input_len"]), int(cfg["output_len"]),
                              float(cfg["a"]), widget=widget)


def _ideal(gate):
    """(ideal gate, logical input, logical rail per graph rail, bare logical rails)."""
    if gate == "ub":
        # the widget rail carries logical |1>, |0> rides a bare wire; scoring
        # on |+> makes the fidelity see the phase
        return U_B, np.array([1.0, 1.0]) / math.sqrt(2), (1,), (0,)
    if gate == "uc":
        return U_C, 0, (0, 1), ()
    return np.eye(2), 0, (0,), ()


def run_gate(cfg: dict) -> dict:
    """Simulate one gate circuit; returns report fields plus the trajectories."""
    graph = _gate_graph(cfg)
    t_off = cfg["t_off"]
    if t_off == "auto":
        t_off = tune_switch_time(graph, cfg["tune_objective"], tuple(cfg["tune_range"]))
    t_final = cfg["t_final"]
    if t_final == "auto":
        t_final = default_final_time(graph, t_off)
    # the instant the input wire is fullest is always sampled, so the launch momentum is measurable
    t_in = input_wire_snapshot(graph, t_off)[0]
    wanted = [*cfg["snapshot_times"], t_in]
    samples = sorted({float(t) for t in wanted if 0 <= t <= t_final} | {float(t_final)})
    initial = PacketState.localized(graph.n_sites)
    trajectory = evolve(make_switch_schedule(graph, t_off, t_final, samples), initial)

    ref_graph = ref_traj = None
    if cfg.get("reference", True) and graph.gate != "reference":
        ref_graph = _gate_graph(cfg, "reference")
        ref_traj = evolve(make_switch_schedule(ref_graph, t_off, t_final, samples),
                          PacketState.localized(ref_graph.n_sites))
    ideal, logical_input, logical_rails, bare_rails = _ideal(graph.gate)
    report = gate_report(trajectory, graph, ref_traj, ideal, reference_graph=ref_graph,
                         logical_input=logical_input, logical_rails=logical_rails, bare_rails=bare_rails)
    drift = max(abs(st.norm() - 1) for st in trajectory)
    return dict(graph=graph, trajectory=trajectory, report=report, t_off=float(t_off),
                t_final=float(t_final), norm_drift=float(drift))


def gate_run(cfg: dict, out: Path) -> Outcome:
    outcome = Outcome()
    res = run_gate(cfg)
    graph, trajectory, report = res["graph"], res["trajectory"], res["report"]
    header = _header(cfg)

    if cfg.get("write_trajectory", True):
        write_trajectory_csv(trajectory, out / "trajectory.csv", header)
        outcome.files.append("trajectory.csv")

    windows = {"input_wire_rail0": graph.window("input_wire", 0)}
    for r in range(graph.rails):
        windows[f"output_wire_rail{r}"] = graph.window("output_wire", r)
    path = out / "momentum_spectra.csv"
    with open(path, "w") as fh:
        fh.write(f"# {header[0]}\n")
        fh.write("time,window,k,density\n")
        for st in trajectory:
            for name, win in windows.items():
                spec = momentum_spectrum(st, win)
                for k, d in zip(spec.k_grid, spec.density):
                    fh.write(f"{fmt(st.time)},{name},{fmt(k)},{fmt(d)}\n")
    outcome.files.append(path.name)

    path = out / "snapshots.csv"
    with open(path, "w") as fh:
        fh.write(f"# {header[0]}\n")
        fh.write("time,window,probability,centroid,width,peak_momentum\n")
        for st in trajectory:
            for name, win in windows.items():
                center, width, prob = packet_stats(st, win)
                peak = momentum_spectrum(st, win).peak()
                fh.write(",".join([fmt(st.time), name] + [fmt(v) for v in (prob, center, width, peak)]) + "\n")
    outcome.files.append(path.name)

    payload = dict(config=cfg, t_off=res["t_off"], t_final=res["t_final"], n_sites=graph.n_sites,
                   norm_drift=res["norm_drift"], report=report.to_dict())
    _write_json(out / "report.json", _floats(payload))
    outcome.files.append("report.json")
    outcome.summary += [
        f"gate {graph.gate}: {graph.n_sites} sites, t_off/pi={human(res['t_off'] / PI)}, "
        f"t_final/pi={human(res['t_final'] / PI)}",
        f"transmission={human(report.transmission)} per rail="
        f"{[human(p) for p in report.per_rail_probability]}",
        f"relative phase/pi={human(report.relative_phase / PI)}, "
        f"reference fidelity={human(report.reference_overlap_fidelity)}",
        f"input-wire peak momentum/pi={human(report.peak_momentum_at_switch / PI)}",
    ]
    if res["norm_drift"] > 1e-10:
        outcome.validation_failed = True
        outcome.summary.append(f"norm drift {res['norm_drift']:.3g} exceeds 1e-10")
    return outcome


# ---------------------------------------------------------------- fidelity sweep

def _sweep_point(args):
    gate, slide_len, a, tune_range, with_reference = args
    input_len, output_len = scaled_wire_lengths(slide_len)
    cfg = dict(DEFAULTS["gate_run"], gate=gate, slide_len=slide_len, input_len=input_len,
               output_len=output_len, a=a, t_off="auto", tune_range=tune_range, snapshot_times=[],
               reference=with_reference)
    res = run_gate(cfg)
    rep = res["report"]
    return dict(gate=gate, slide_len=slide_len, input_len=input_len, output_len=output_len,
                n_sites=res["graph"].n_sites, t_off=res["t_off"], t_final=res["t_final"],
                transmission=rep.transmission, reference_overlap_fidelity=rep.reference_overlap_fidelity,
                peak_momentum=rep.peak_momentum_at_switch)


def fidelity_sweep(cfg: dict, out: Path, workers: int = 1) -> Outcome:
    outcome = Outcome()
    jobs = [(g, int(n), float(cfg["a"]), list(cfg["tune_range"]), bool(cfg["reference"]))
            for g in cfg["gates"] for n in cfg["slide_lengths"]]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    cols = ["gate", "slide_len", "input_len", "output_len", "n_sites", "t_off", "t_final",
            "transmission", "reference_overlap_fidelity", "peak_momentum"]
    path = out / "fidelity_sweep.csv"
    with open(path, "w") as fh:
        fh.write(f"# {_header(cfg)[0]}\n")
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) if isinstance(row[c], (str, int)) else fmt(row[c])
                              for c in cols) + "\n")
    outcome.files.append(path.name)
    for g in cfg["gates"]:
        trans = [r["transmission"] for r in rows if r["gate"] == g]
        monotone = all(b >= a - 1e-3 for a, b in zip(trans, trans[1:]))
        outcome.summary.append(
            f"{g}: transmission {human(trans[0])} -> {human(trans[-1])}, "
            f"non-decreasing within 0.1 pp: {monotone}, above 0.999: {trans[-1] > 0.999}, "
            f"above 0.9999: {trans[-1] > 0.9999}")
    return outcome


# ---------------------------------------------------------------- scatter sweep

def _widget_from(name):
    return shipped_widget(name) if name in ("ub", "uc", "link") else load_widget(name)


def scatter_sweep(cfg: dict, out: Path) -> Outcome:
    outcome = Outcome()
    widget = _widget_from(cfg["widget"])
    n = int(cfg["k_points"])
    grid = np.linspace(-PI, 0, n + 2)[1:-1]
    sols = sweep_k(widget, grid, input_rail=int(cfg["input_rail"]))
    write_table(sols, out / "scatter_table.csv", _header(cfg))
    outcome.files.append("scatter_table.csv")
    s = solve_plane_wave(widget, -PI / 4, input_rail=int(cfg["input_rail"]))
    ref = bare_link_transmission(-PI / 4, widget.reference_sites)
    outcome.summary.append(f"k=-pi/4: |T|^2={[human(abs(x) ** 2) for x in s.transmission]}, "
                           f"phase vs {widget.reference_sites}-site link/pi="
                           f"{human(np.angle(s.transmission[0] / ref) / PI)}")
    outcome.summary.append(f"max flux error {max(abs(x.flux - 1) for x in sols):.3g}")
    return outcome


# ---------------------------------------------------------------- analytic validation

def validation_checks(cfg: dict) -> dict:
    """Oracle-versus-simulation checks; returns {name: (max_error, tolerance)}."""
    tol = float(cfg["tolerance"])
    checks = {}

    pst = build_chain("pst", 51)
    psi = eigendecompose(pst).propagate(np.eye(51)[0], PI / 2)
    checks["pst_transfer"] = (1 - abs(psi[50]) ** 2, 1e-8)

    rng = np.random.default_rng(20240611)
    worst = 0.0
    max_n = int(cfg["max_N"])
    for a in cfg["a_values"]:
        period = 2 * analytic.period_scale(a) * PI
        for big_n in sorted({min(max_n, n) for n in (5, 20, max_n)}):
            spec = eigendecompose(build_chain("field", big_n + 1, a=a))
            for t in rng.uniform(0.01 * period, 0.99 * period, int(cfg["times_per_case"])):
                exact = spec.propagate(np.eye(big_n + 1)[0], t)
                model = analytic.amplitude_profile(big_n, a, t)
                phase = np.vdot(model, exact)
                phase /= abs(phase)
                worst = max(worst, float(np.max(abs(exact - phase * model))))
    checks["amplitude_vs_propagator"] = (worst, tol)

    worst = 0.0
    for p in (0.1, 0.3, 0.5, 0.9):
        for big_n in (1, 10, 25, 50):
            w = eigendecompose(hp_chain(big_n, p)).eigenvalues
            worst = max(worst, float(np.max(abs(w - np.arange(big_n + 1)))))
    checks["hp_integer_spectrum"] = (worst, 1e-8)

    worst = 0.0
    for p in (0.2, 0.5, 0.7):
        for big_n in range(1, 13):
            ctx = analytic.KrawtchoukContext(big_n, p)
            for r in range(big_n + 1):
                for n in range(r):
                    x, y = analytic.krawtchouk(r, n, ctx), analytic.krawtchouk(n, r, ctx)
                    worst = max(worst, abs(x - y) / max(1.0, abs(x)))
    checks["krawtchouk_self_duality"] = (worst, 1e-9)

    worst = 0.0
    for big_n in range(1, 11):
        ctx = analytic.KrawtchoukContext(big_n, 0.3)
        w = np.array([analytic.weight(s, ctx) for s in range(big_n + 1)])
        chi = np.array([[analytic.orthonormal_polynomial(n, s, ctx) for s in range(big_n + 1)]
                        for n in range(big_n + 1)])
        gram = (chi * w) @ chi.T
        worst = max(worst, float(np.max(abs(gram - np.eye(big_n + 1)))))
    checks["weight_orthogonality"] = (worst, 1e-9)

    worst = 0.0
    for a in (-4.0, -2.0, -0.5):
        b = analytic.period_scale(a)
        for d in np.linspace(0.01, 0.99, 25) * b * PI:
            worst = max(worst, abs(analytic.momentum_theta(b * PI + d, a) + analytic.momentum_theta(b * PI - d, a)))
    checks["theta_point_symmetry"] = (worst, 1e-12)

    worst = 0.0
    for a in (-2.0, 0.0, 1.0):
        period = 2 * analytic.period_scale(a) * PI
        h = Hamiltonian(build_chain("field", 41, a=a).matrix())
        back = h.propagate(np.eye(41)[0], period)
        worst = max(worst, 1 - abs(back[0]))
    checks["full_period_return"] = (worst, 1e-6)

    ub = shipped_widget("ub")
    grid = np.linspace(-PI, 0, 202)[1:-1]
    got = np.array([s.total_transmission for s in sweep_k(ub, grid)])
    checks["widget_b_transmission"] = (float(np.max(abs(got - analytic.transmission_b(grid)))), 1e-9)
    return checks


def validate_analytic(cfg: dict, out: Path) -> Outcome:
    outcome = Outcome()
    checks = validation_checks(cfg)
    rows = {name: dict(max_error=err, tolerance=tol, passed=bool(err <= tol))
            for name, (err, tol) in checks.items()}
    _write_json(out / "validation.json", _floats(dict(config=cfg, checks=rows)))
    outcome.files.append("validation.json")
    for name, row in rows.items():
        outcome.summary.append(f"{'PASS' if row['passed'] else 'FAIL'} {name}: "
                               f"max error {row['max_error']:.3g} (tol {row['tolerance']:.0e})")
    outcome.validation_failed = not all(r["passed"] for r in rows.values())
    return outcome


RUNNERS = {
    "momentum_map": momentum_map,
    "gate_run": gate_run,
    "fidelity_sweep": fidelity_sweep,
    "scatter_sweep": scatter_sweep,
    "validate_analytic": validate_analytic,
}


def run(cfg: dict, out, workers: int = 1) -> Outcome:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    runner = RUNNERS[cfg["experiment"]]
    if runner is fidelity_sweep:
        return runner(cfg, out, workers=workers)
    return runner(cfg, out)


def write_manifest(out, cfg, outcome: Outcome | None, status: str, error: str | None = None):
    lines = [f"experiment: {cfg.get('experiment')}", f"status: {status}",
             f"config: {json.dumps(cfg, sort_keys=True)}"]
    if outcome is not None:
        lines += [f"file: {f}" for f in outcome.files]
        lines += [f"summary: {s}" for s in outcome.summary]
    if error:
        lines.append(f"error: {error}")
    Path(out, "manifest.txt").write_text("\n".join(lines) + "\n")
