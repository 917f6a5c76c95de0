import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quantum_slide import build_gate_circuit, gate_report, momentum_spectrum, packet_stats
from quantum_slide.analysis import analytic_seed, default_tune_range, tune_switch_time
from quantum_slide.analytic import amplitude_profile, gaussian_packet, switch_time_for_momentum
from quantum_slide.errors import ComparisonError, StatsError
from quantum_slide.experiments import DEFAULTS, run_gate
from quantum_slide.propagate import PacketState, evolve, make_switch_schedule


def packet(n, centre, sigma, theta):
    x = np.arange(n)
    psi = np.exp(-(x - centre) ** 2 / (4 * sigma ** 2) + 1j * theta * x)
    return PacketState(psi / np.linalg.norm(psi))


@pytest.mark.parametrize("theta", [-math.pi / 4, -1.9, 0.6])
def test_spectrum_peak_location(theta):
    spec = momentum_spectrum(packet(300, 150, 12, theta), (0, 300))
    assert abs(spec.peak() - theta) < 1e-3


@settings(max_examples=20)
@given(st.integers(0, 2 ** 32 - 1), st.integers(5, 120))
def test_parseval(seed, m):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=200) + 1j * rng.normal(size=200)
    psi /= np.linalg.norm(psi)
    state = PacketState(psi)
    spec = momentum_spectrum(state, (30, 30 + m))
    assert math.isclose(spec.total(), packet_stats(state, (30, 30 + m))[2], rel_tol=1e-10)


def test_packet_stats_on_binomial_packet():
    # [DERIVED] the binomial packet has mean N q and width sqrt(N q (1 - q))
    big_n, a = 399, -2.0
    t = switch_time_for_momentum(-math.pi / 4, a)
    g = gaussian_packet(big_n, a, t)
    state = PacketState(amplitude_profile(big_n, a, t))
    centre, width, prob = packet_stats(state)
    assert math.isclose(centre, g.center, rel_tol=1e-9)
    assert math.isclose(width, g.sigma, rel_tol=0.02)
    assert math.isclose(prob, 1.0, rel_tol=1e-12)
    assert abs(momentum_spectrum(state, (0, 400)).peak() + math.pi / 4) < 0.01


def test_packet_stats_errors():
    state = PacketState.localized(10)
    with pytest.raises(StatsError):
        packet_stats(state, (5, 8))
    with pytest.raises(IndexError):
        packet_stats(state, (5, 20))


def test_reference_against_itself_is_perfect():
    cfg = dict(DEFAULTS["gate_run"], gate="reference", snapshot_times=[])
    res = run_gate(cfg)
    rep = gate_report(res["trajectory"], res["graph"], res["trajectory"])
    assert abs(rep.reference_overlap_fidelity - 1) < 1e-10
    assert abs(rep.relative_phase) < 1e-10


def test_transmission_plus_remainder_is_one(ub_run):
    g, final = ub_run["graph"], ub_run["trajectory"][-1]
    rest = final.probabilities[: g.window("output_wire").start].sum()
    assert abs(ub_run["report"].transmission + rest - 1) < 1e-8


def test_uc_report_fields(uc_run):
    rep = uc_run["report"]
    assert len(rep.per_rail_probability) == 2
    assert math.isclose(sum(rep.per_rail_probability), rep.transmission)
    # U_c sends |0> to -(i|0> + |1>)/sqrt 2: rail 1 lags rail 0 by pi/2
    assert abs(rep.relative_phase + math.pi / 2) < 0.05
    assert rep.reference_overlap_fidelity > 0.98
    with pytest.raises(ValueError, match="single-rail"):
        gate_report(uc_run["trajectory"], uc_run["graph"], uc_run["trajectory"], None, uc_run["graph"],
                    [1.0, 1.0])
    d = rep.to_dict()
    assert isinstance(d["per_rail_probability"], list)


def test_mismatched_sampling_rejected(ub_run):
    ref = evolve(make_switch_schedule(build_gate_circuit("reference"), 0.7, 2.0, [1.0, 2.0]),
                 PacketState.localized(505))
    with pytest.raises(ComparisonError):
        gate_report(ub_run["trajectory"], ub_run["graph"], ref, reference_graph=build_gate_circuit("reference"))


def test_analytic_seed_and_default_range():
    g = build_gate_circuit("ub")
    assert abs(analytic_seed(g) / math.pi - 0.215) < 1e-3
    lo, hi = default_tune_range(g)
    assert abs(lo / math.pi - 0.18) < 1e-3 and abs(hi / math.pi - 0.28) < 1e-3


def test_tune_transmission_lands_near_quoted_time(ub_run):
    assert 0.222 * math.pi <= ub_run["t_off"] <= 0.230 * math.pi


def test_tune_peak_momentum():
    g = build_gate_circuit("ub")
    t = tune_switch_time(g, "peak_momentum")
    assert 0.20 * math.pi < t < 0.24 * math.pi


def test_tune_edge_cases():
    g = build_gate_circuit("ub")
    assert tune_switch_time(g, t_range=(0.2, 0.2)) == 0.2
    with pytest.raises(ValueError):
        tune_switch_time(g, t_range=(0.3, 0.2))
    with pytest.raises(ValueError):
        tune_switch_time(g, grid=4, t_range=(0.6, 0.8))
    with pytest.raises(ValueError):
        tune_switch_time(g, objective="fidelity", t_range=(0.6, 0.8), t_final=3.0)


def test_peak_momentum_conserved_on_uniform_chain():
    from quantum_slide import build_chain
    from quantum_slide.propagate import Hamiltonian
    n = 400
    h = Hamiltonian(build_chain("uniform", n).matrix())
    start = packet(n, 100, 10, -math.pi / 4)
    peaks = []
    for t in (0.0, 10.0, 25.0, 40.0):
        st_ = PacketState(h.propagate(start.amplitudes, t))
        peaks.append(momentum_spectrum(st_, (0, n)).peak())
    step = 2 * math.pi / (4 * n)
    assert max(peaks) - min(peaks) <= step


def test_ub_fidelity_is_phase_sensitive():
    # on |+> the widget phase is relative, so the identity must score badly
    from quantum_slide.experiments import U_B
    res = run_gate(dict(DEFAULTS["gate_run"], gate="ub", snapshot_times=[]))
    ref = build_gate_circuit("reference")
    ref_traj = evolve(make_switch_schedule(ref, res["t_off"], res["t_final"], [s.time for s in res["trajectory"]]),
                      PacketState.localized(ref.n_sites))
    plus = np.array([1.0, 1.0]) / math.sqrt(2)
    good = gate_report(res["trajectory"], res["graph"], ref_traj, U_B, ref, plus, (1,), (0,))
    bad = gate_report(res["trajectory"], res["graph"], ref_traj, np.eye(2), ref, plus, (1,), (0,))
    assert good.reference_overlap_fidelity > 0.99
    # [DERIVED] |(1 + e^{i pi/4}) / 2|^2 = (2 + sqrt 2) / 4
    assert abs(bad.reference_overlap_fidelity - (2 + math.sqrt(2)) / 4) < 0.01
    # on |1> alone the phase is global and invisible
    blind = gate_report(res["trajectory"], res["graph"], ref_traj, np.eye(2), ref, 1, (1,))
    assert blind.reference_overlap_fidelity > 0.99


@pytest.mark.slow
def test_sweep_trend_transmission_and_fidelity():
    from quantum_slide.experiments import _sweep_point
    tune = [0.18 * math.pi, 0.28 * math.pi]
    for gate in ("ub", "uc"):
        rows = [_sweep_point((gate, n, -2.0, tune, True)) for n in (200, 400, 600, 800, 1000)]
        for key in ("transmission", "reference_overlap_fidelity"):
            vals = [r[key] for r in rows]
            assert all(b >= a - 1e-3 for a, b in zip(vals, vals[1:])), (gate, key, vals)
        assert all(abs(r["peak_momentum"] + math.pi / 4) < 0.02 * math.pi for r in rows)
