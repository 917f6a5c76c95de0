"""Observables extracted from trajectories: momentum spectra, packet moments,
gate transmission and fidelity, and tuning of the field switch-off time."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from .errors import ComparisonError, StatsError, TuningError
from .propagate import PacketState

TARGET_MOMENTUM = -math.pi / 4
MIN_WINDOW_PROB = 0.95


def _as_range(window, n_sites):
    if isinstance(window, range):
        lo, hi = window.start, window.stop
    else:
        lo, hi = window
    if not 0 <= lo < hi <= n_sites:
        raise IndexError(f"window [{lo}, {hi}) not inside 0..{n_sites}")
    return lo, hi


@dataclass(frozen=True, eq=False)
class MomentumSpectrum:
    k_grid: np.ndarray
    density: np.ndarray

    @property
    def spacing(self) -> float:
        return float(self.k_grid[1] - self.k_grid[0])

    def total(self) -> float:
        return float(np.sum(self.density) * self.spacing)

    def peak(self) -> float:
        """Location of the maximum, refined by a parabola through the top three bins."""
        d = self.density
        i = int(np.argmax(d))
        m = d.size
        y0, y1, y2 = d[(i - 1) % m], d[i], d[(i + 1) % m]
        denom = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
        k = self.k_grid[i] + shift * self.spacing
        return float(np.mod(k + np.pi, 2 * np.pi) - np.pi)


def momentum_spectrum(state: PacketState, window, pad: int = 4) -> MomentumSpectrum:
    """Zero-padded DFT of the amplitudes inside ``window``.

    A packet with site phase e^{i theta x} peaks at k = theta. The density is
    |sum_x psi_x e^{-ikx}|^2 / 2pi, so summing it times the grid spacing
    gives the probability inside the window.
    """
    lo, hi = _as_range(window, state.n_sites)
    seg = state.amplitudes[lo:hi]
    m = max(4, pad) * seg.size
    amp = np.fft.fft(seg, m)
    k = 2 * np.pi * np.arange(m) / m
    k = np.where(k > np.pi, k - 2 * np.pi, k)
    order = np.argsort(k, kind="stable")
    return MomentumSpectrum(k[order], (np.abs(amp) ** 2 / (2 * np.pi))[order])


def packet_stats(state: PacketState, window=None) -> tuple[float, float, float]:
    """Centroid, standard deviation and total probability of |psi|^2 in a window."""
    if window is None:
        window = (0, state.n_sites)
    lo, hi = _as_range(window, state.n_sites)
    p = state.probabilities[lo:hi]
    prob = float(p.sum())
    if prob <= 0:
        raise StatsError("no probability inside the window")
    x = np.arange(lo, hi)
    center = float((x * p).sum() / prob)
    var = float(((x - center) ** 2 * p).sum() / prob)
    return center, math.sqrt(max(var, 0.0)), prob


@dataclass(frozen=True)
class GateRunReport:
    transmission: float
    per_rail_probability: tuple
    relative_phase: float
    reference_overlap_fidelity: float
    peak_momentum_at_switch: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_rail_probability"] = list(self.per_rail_probability)
        return d


def output_windows(graph) -> list[range]:
    return [graph.window("output_wire", r) for r in range(graph.rails)]


def input_momentum(trajectory, graph) -> float:
    """Peak momentum on rail-0's input wire, read from the snapshot holding most probability there.

    NaN when no snapshot has at least half the packet on that wire.
    """
    win = graph.window("input_wire", 0)
    probs = [st.probabilities[win.start:win.stop].sum() for st in trajectory]
    best = int(np.argmax(probs))
    if probs[best] < 0.5:
        return float("nan")
    return momentum_spectrum(trajectory[best], win).peak()


def gate_report(trajectory, graph, reference_trajectory=None, ideal_gate=None,
                reference_graph=None, logical_input=0, logical_rails=None,
                bare_rails=()) -> GateRunReport:
    """Score a gate run from its final snapshot.

    ``logical_input`` is a basis index or an amplitude vector c; the ideal
    output is ``alpha = ideal_gate @ c``. Rail j of the graph carries
    logical state ``logical_rails[j]`` (default: rail j is logical j), and
    logical states in ``bare_rails`` travel along an uninterrupted wire,
    so their output packet is the reference packet phi_ref itself. The
    fidelity is |sum_l conj(alpha_l) c_l <phi_ref|psi_l>|^2 / ||phi_ref||^4,
    compared by position along the output wire. A vector input is only
    allowed for single-rail graphs, whose rail is driven independently.
    ``relative_phase`` is arg <psi_0|psi_1> for two rails and
    arg <phi_ref|psi_0> for one.
    """
    final = trajectory[-1]
    outs = output_windows(graph)
    per_rail = tuple(float(final.probabilities[w.start:w.stop].sum()) for w in outs)
    transmission = float(sum(per_rail))
    packets = [final.amplitudes[w.start:w.stop] for w in outs]

    phi_ref = None
    if reference_trajectory is not None:
        ref_graph = reference_graph if reference_graph is not None else graph
        if len(reference_trajectory) != len(trajectory) or any(
                abs(a.time - b.time) > 1e-12 for a, b in zip(trajectory, reference_trajectory)):
            raise ComparisonError("trajectories are not sampled at identical times")
        ref_out = ref_graph.window("output_wire", 0)
        if len(ref_out) != len(outs[0]):
            raise ComparisonError("reference and gate output wires differ in length")
        phi_ref = reference_trajectory[-1].amplitudes[ref_out.start:ref_out.stop]

    if len(packets) > 1:
        relative_phase = float(np.angle(np.vdot(packets[0], packets[1])))
    elif phi_ref is not None:
        relative_phase = float(np.angle(np.vdot(phi_ref, packets[0])))
    else:
        relative_phase = float("nan")

    fidelity = float("nan")
    if phi_ref is not None:
        gate = np.eye(2) if ideal_gate is None else np.asarray(ideal_gate, dtype=complex)
        superposed = np.ndim(logical_input) > 0
        if superposed:
            if len(packets) > 1:
                raise ValueError("superposed inputs need a single-rail graph")
            c = np.asarray(logical_input, dtype=complex)
            c = c / np.linalg.norm(c)
        else:
            c = np.eye(gate.shape[0])[logical_input]
        alpha = gate @ c
        rails = logical_rails if logical_rails is not None else range(len(packets))
        ref_norm = np.vdot(phi_ref, phi_ref).real
        overlap = sum(np.conj(alpha[lr]) * (c[lr] if superposed else 1) * np.vdot(phi_ref, pk)
                      for lr, pk in zip(rails, packets))
        overlap += sum(np.conj(alpha[lr]) * c[lr] * ref_norm for lr in bare_rails)
        fidelity = float(abs(overlap) ** 2 / ref_norm ** 2)

    return GateRunReport(
        transmission=transmission,
        per_rail_probability=per_rail,
        relative_phase=relative_phase,
        reference_overlap_fidelity=fidelity,
        peak_momentum_at_switch=input_momentum(trajectory, graph),
    )


def _state_after_switch(graph, t_off):
    psi0 = PacketState.localized(graph.n_sites).amplitudes
    return graph.hamiltonian(True).propagate(psi0, t_off)


def input_wire_snapshot(graph, t_off, psi_off=None, steps: int = 48):
    """Time (absolute) and state at which the input wire holds the most probability.

    Scans forward from ``t_off`` in steps of 1/16 of the wire transit time
    at top speed and stops once the probability has peaked and fallen away.
    """
    if psi_off is None:
        psi_off = _state_after_switch(graph, t_off)
    win = graph.window("input_wire", 0)
    h = graph.hamiltonian(False)
    dt = len(win) / (2 * graph.wire_coupling) / 16
    best_t, best_p, best_psi = t_off, -1.0, psi_off
    for block in range(0, 40 * steps, steps):
        taus = dt * np.arange(block, block + steps)
        snaps = h.propagate_many(psi_off, taus)
        probs = (np.abs(snaps[:, win.start:win.stop]) ** 2).sum(axis=1)
        i = int(np.argmax(probs))
        if probs[i] > best_p:
            best_t, best_p, best_psi = t_off + taus[i], float(probs[i]), snaps[i]
        if best_p > 0.5 and probs[-1] < 0.5 * best_p:
            break
    return best_t, best_p, best_psi


def default_final_time(graph, t_off: float) -> float:
    """Time at which the packet centroid should sit mid-way along the output wire.

    Measures the packet on the input wire, then extrapolates at the group
    velocity 2 J |sin theta| over the remaining path.
    """
    t_in, p_in, psi = input_wire_snapshot(graph, t_off)
    if p_in < 0.5:
        raise TuningError(f"packet never settles on the input wire (max probability {p_in:.3g})")
    win = graph.window("input_wire", 0)
    state = PacketState(psi, t_in)
    center, _, _ = packet_stats(state, win)
    theta = momentum_spectrum(state, win).peak()
    speed = 2 * graph.wire_coupling * abs(math.sin(theta))
    if speed <= 0:
        raise TuningError("packet has zero group velocity")
    out = graph.window("output_wire", 0)
    path = (win.stop - 1 - center) + graph.path_length(win.stop - 1, out.start) + (len(out) - 1) / 2
    return t_in + path / speed


def _objective(graph, objective, t_final):
    outs = output_windows(graph)
    h_off = graph.hamiltonian(False)

    def transmission_loss(t_off):
        psi = h_off.propagate(_state_after_switch(graph, t_off), t_final - t_off)
        p = np.abs(psi) ** 2
        return -sum(float(p[w.start:w.stop].sum()) for w in outs)

    def momentum_loss(t_off):
        _, prob, psi = input_wire_snapshot(graph, t_off)
        if prob < MIN_WINDOW_PROB:
            raise TuningError(f"at t_off={t_off:.6g} the input wire holds only {prob:.3g} of the packet")
        k = momentum_spectrum(PacketState(psi), graph.window("input_wire", 0)).peak()
        return abs(k - TARGET_MOMENTUM)

    if objective == "transmission":
        return transmission_loss
    if objective == "peak_momentum":
        return momentum_loss
    raise ValueError(f"unknown objective {objective!r}")


def analytic_seed(graph) -> float:
    """Time at which the isolated tilted chain reaches momentum -pi/4."""
    from .analytic import switch_time_for_momentum
    return switch_time_for_momentum(TARGET_MOMENTUM, graph.params.get("a", -2.0))


def default_tune_range(graph) -> tuple[float, float]:
    """Search window around the analytic seed; for a = -2 this is (0.18 pi, 0.28 pi)."""
    seed = analytic_seed(graph)
    return seed - 0.035 * math.pi, seed + 0.065 * math.pi


def tune_switch_time(graph, objective: str = "transmission", t_range=None,
                     grid: int = 16, t_final: float | None = None, xtol: float = 1e-5) -> float:
    """Switch-off time optimising ``objective`` over ``t_range``.

    ``transmission`` maximises the output-wire probability at ``t_final``
    (default: the mid-output-wire time for the centre of the range);
    ``peak_momentum`` minimises |theta - (-pi/4)| measured on the input
    wire once the packet has left the slide. A grid scan picks the bracket,
    then golden-section search refines it. Without ``t_range`` the window
    is placed around ``analytic_seed``.
    """
    lo, hi = map(float, t_range if t_range is not None else default_tune_range(graph))
    if hi < lo:
        raise ValueError("t_range must be increasing")
    if hi == lo:
        return lo
    if grid < 8:
        raise ValueError("grid must have at least 8 points")
    if objective == "transmission" and t_final is None:
        t_final = default_final_time(graph, 0.5 * (lo + hi))
    loss = _objective(graph, objective, t_final)
    ts = np.linspace(lo, hi, grid)
    vals = np.array([loss(t) for t in ts])
    i = int(np.argmin(vals))
    if i == 0 or i == grid - 1:
        return float(ts[i])
    res = optimize.minimize_scalar(loss, bracket=(ts[i - 1], ts[i], ts[i + 1]), method="golden",
                                   options={"xtol": xtol})
    t_best = float(res.x)
    return t_best if lo <= t_best <= hi else float(ts[i])
