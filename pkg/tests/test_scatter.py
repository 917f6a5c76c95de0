import math

import numpy as np
import pytest

from quantum_slide import shipped_widget, solve_plane_wave, sweep_k
from quantum_slide.analytic import transmission_b
from quantum_slide.assembly import Widget
from quantum_slide.errors import DomainError
from quantum_slide.scatter import bare_link_transmission, transmission_c, write_table

GRID = np.linspace(-math.pi, 0, 202)[1:-1]


def chain_widget(m):
    return Widget("chain", m, tuple((i, i + 1, 1.0) for i in range(m - 1)), (0,), (m - 1,))


@pytest.mark.parametrize("m", [1, 2, 5])
def test_bare_chain_is_transparent(m):
    # [DERIVED] a uniform m-site segment just advances the phase by k m
    for k in (-0.4, -math.pi / 4, -2.2):
        s = solve_plane_wave(chain_widget(m), k)
        assert abs(s.transmission[0] - bare_link_transmission(k, m)) < 1e-12
        assert abs(s.reflection[0]) < 1e-12


def test_single_weak_bond_matches_hand_equations():
    # [DERIVED] leads | w0 -c- w1 | leads written out site by site
    c = 0.6
    w = Widget("bond", 2, ((0, 1, c),), (0,), (1,))
    for k in (-0.3, -1.1, -2.0):
        e, energy = np.exp(1j * k), 2 * math.cos(k)
        # unknowns R, T, w0, w1
        a = np.array([
            [energy - e, 0, -1, 0],                 # lead x=0: E(1+R) = e^-ik + R e^ik + w0
            [-1, 0, energy, -c],                    # E w0 = 1 + R + c w1
            [0, -e, -c, energy],                    # E w1 = c w0 + T e^ik
            [0, energy * e - e * e, 0, -1],         # lead x=1: E T e^ik = w1 + T e^2ik
        ])
        rhs = np.array([np.conj(e) - energy, 1, 0, 0])
        r, t, _, _ = np.linalg.solve(a, rhs)
        s = solve_plane_wave(w, k)
        assert abs(s.transmission[0] - t) < 1e-12 and abs(s.reflection[0] - r) < 1e-12
        assert abs(s.total_transmission - abs(t) ** 2) < 1e-12 and abs(t) < 1


def test_ub_matches_closed_form():
    sols = sweep_k(shipped_widget("ub"), GRID[np.abs(GRID + math.pi / 2) > 1e-6])
    got = np.array([s.total_transmission for s in sols])
    assert np.max(abs(got - transmission_b(np.array([s.k for s in sols])))) < 1e-9


def test_ub_at_bound_state_energy():
    # k = -pi/2 puts E = 0 on a decoupled widget eigenstate; R and T stay unique
    s = solve_plane_wave(shipped_widget("ub"), -math.pi / 2)
    assert abs(s.transmission[0]) < 1e-10 and abs(abs(s.reflection[0]) - 1) < 1e-10


def test_flux_conservation():
    for name in ("ub", "uc", "link"):
        w = shipped_widget(name)
        for rail in range(w.rails):
            for k in GRID[::17]:
                assert abs(solve_plane_wave(w, k, input_rail=rail).flux - 1) < 1e-10


def test_uc_is_balanced_hadamard_like():
    w = shipped_widget("uc")
    s0 = solve_plane_wave(w, -math.pi / 4, 0)
    s1 = solve_plane_wave(w, -math.pi / 4, 1)
    t = np.array([s0.transmission, s1.transmission]).T
    assert np.allclose(abs(t) ** 2, 0.5, atol=1e-9)
    assert np.allclose(t.conj().T @ t, np.eye(2), atol=1e-9)
    assert math.isclose(transmission_c(-math.pi / 4), 1.0, abs_tol=1e-9)


def test_domain_and_rail_errors():
    w = shipped_widget("ub")
    with pytest.raises(DomainError):
        solve_plane_wave(w, 0.3)
    with pytest.raises(ValueError):
        solve_plane_wave(w, -1.0, input_rail=1)
    with pytest.raises(DomainError, match="grid point 1"):
        sweep_k(w, [-1.0, 0.5])


def test_side_coupled_site_blocks_at_zero_energy():
    # [DERIVED] a pendant site at zero field is an antiresonance: T(E=0) = 0, T(E=1) = 3/4
    w = Widget("pendant", 2, ((0, 1, 1.0),), (0,), (0,))
    assert abs(solve_plane_wave(w, -math.pi / 2).transmission[0]) < 1e-12
    assert abs(solve_plane_wave(w, -math.pi / 3).total_transmission - 0.75) < 1e-12


def test_write_table(tmp_path):
    sols = sweep_k(shipped_widget("uc"), [-1.0, -0.5])
    path = tmp_path / "t.csv"
    write_table(sols, path, ["hello"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# hello"
    assert lines[1].split(",")[:3] == ["k", "abs_R0_sq", "abs_R1_sq"]
    assert len(lines) == 4


def test_reciprocity_under_port_swap():
    for name in ("uc", "ub"):
        w = shipped_widget(name)
        swapped = Widget(w.name, w.n_sites, w.edges, w.out_ports, w.in_ports)
        for k in (-0.4, -math.pi / 4, -2.3):
            for rail in range(w.rails):
                a = abs(solve_plane_wave(w, k, rail).transmission)
                b = abs(solve_plane_wave(swapped, k, rail).transmission)
                assert np.max(abs(a - b)) < 1e-10
