"""Stationary plane-wave scattering off a widget between semi-infinite leads.

Every port of the widget connects to its own uniform lead with unit
coupling (widget couplings are given in units of the lead coupling, so the
S-matrix depends on k alone). At energy E = 2 cos k, with k in (-pi, 0) a
right-mover, the input lead on rail j carries e^{ikx} + R_j e^{-ikx} for
x <= 0 (x = 0 is the lead site touching the widget) and output lead j
carries T_j e^{ikx} for x >= 1. A bare chain of m sites therefore has
T = e^{ikm}.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, ResonanceError

_SINGULAR_RCOND = 1e-12


@dataclass(frozen=True, eq=False)
class ScatterSolution:
    k: float
    reflection: np.ndarray
    transmission: np.ndarray
    internal_amplitudes: np.ndarray
    input_rail: int = 0

    @property
    def flux(self) -> float:
        return float(np.sum(abs(self.reflection) ** 2) + np.sum(abs(self.transmission) ** 2))

    @property
    def total_transmission(self) -> float:
        return float(np.sum(abs(self.transmission) ** 2))


def _system(widget, k, input_rail):
    h = widget.matrix()
    n = h.shape[0]
    ins, outs = widget.in_ports, widget.out_ports
    n_in, n_out = len(ins), len(outs)
    energy = 2 * math.cos(k)
    e = complex(math.cos(k), math.sin(k))
    size = n + n_in + n_out
    a = np.zeros((size, size), dtype=complex)
    rhs = np.zeros(size, dtype=complex)
    # widget rows: (E - H) psi = sum_j psi_lead_j(0) e_{in_j} + sum_j psi_out_j(1) e_{out_j}
    a[:n, :n] = energy * np.eye(n) - h
    for j, u in enumerate(ins):
        a[u, n + j] -= 1.0
        if j == input_rail:
            rhs[u] += 1.0
    for j, v in enumerate(outs):
        a[v, n + n_in + j] -= e
    # input lead site 0: E psi(0) = psi(-1) + psi_w[u]
    for j, u in enumerate(ins):
        row = n + j
        a[row, n + j] = energy - e
        a[row, u] = -1.0
        if j == input_rail:
            rhs[row] = -(energy - e.conjugate())
    # output lead site 1: E psi(1) = psi(2) + psi_w[v]
    for j, v in enumerate(outs):
        row = n + n_in + j
        a[row, n + n_in + j] = energy * e - e * e
        a[row, v] = -1.0
    return a, rhs, n, n_in


def solve_plane_wave(widget, k: float, input_rail: int = 0) -> ScatterSolution:
    """Reflection and transmission amplitudes for a wave incident on ``input_rail``.

    A bound state of the widget sitting exactly at E(k) makes the linear
    system singular. When that state has no weight on the lead unknowns
    (it is decoupled from the leads) R and T are still unique and the
    minimum-norm solution is returned; otherwise ResonanceError is raised.
    """
    if not -math.pi < k < 0:
        raise DomainError(f"k={k} outside (-pi, 0)")
    if not 0 <= input_rail < len(widget.in_ports):
        raise ValueError(f"widget has no input rail {input_rail}")
    a, rhs, n, n_in = _system(widget, k, input_rail)
    u, s, vh = np.linalg.svd(a)
    tiny = s < _SINGULAR_RCOND * s[0]
    if np.any(tiny):
        null = vh[tiny].conj().T
        if np.max(abs(null[n:])) > 1e-8:
            raise ResonanceError(f"widget resonance at E={2 * math.cos(k):.12g}",
                                 energy=2 * math.cos(k))
        x = np.linalg.lstsq(a, rhs, rcond=_SINGULAR_RCOND)[0]
        if np.linalg.norm(a @ x - rhs) > 1e-9 * max(1.0, np.linalg.norm(rhs)):
            raise ResonanceError(f"no scattering solution at E={2 * math.cos(k):.12g}",
                                 energy=2 * math.cos(k))
    else:
        x = np.linalg.solve(a, rhs)
    return ScatterSolution(k=float(k), reflection=x[n:n + n_in], transmission=x[n + n_in:],
                           internal_amplitudes=x[:n], input_rail=input_rail)


def sweep_k(widget, k_grid, input_rail: int = 0) -> list[ScatterSolution]:
    out = []
    for i, k in enumerate(k_grid):
        try:
            out.append(solve_plane_wave(widget, float(k), input_rail=input_rail))
        except (DomainError, ResonanceError) as exc:
            raise type(exc)(f"grid point {i} (k={k}): {exc}") from exc
    return out


def bare_link_transmission(k: float, n_sites: int) -> complex:
    return complex(math.cos(k * n_sites), math.sin(k * n_sites))


@lru_cache(maxsize=None)
def _uc_widget():
    from .assembly import shipped_widget
    return shipped_widget("uc")


def transmission_c(k) -> float:
    """Total transmitted probability through the shipped basis-changing widget."""
    return solve_plane_wave(_uc_widget(), float(k)).total_transmission


def write_table(solutions, path, header_lines=()):
    """CSV of k, |R|^2 and |T|^2 per rail and transmitted phases."""
    n_in = len(solutions[0].reflection) if solutions else 0
    n_out = len(solutions[0].transmission) if solutions else 0
    cols = (["k"] + [f"abs_R{j}_sq" for j in range(n_in)]
            + [f"abs_T{j}_sq" for j in range(n_out)] + [f"arg_T{j}" for j in range(n_out)])
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for s in solutions:
            row = ([s.k] + list(abs(s.reflection) ** 2) + list(abs(s.transmission) ** 2)
                   + list(np.angle(s.transmission)))
            writer.writerow([f"{float(v):.17g}" for v in row])
