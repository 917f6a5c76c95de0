"""Scattering circuits: slide + input wire + widget + output wire.

Site layout, in index order:

* ``ub`` / ``reference``: slide (0..L-1), input wire, widget (or a bare
  link of ``reference_sites`` sites), output wire.
* ``uc``: slide, rail-0 input wire, rail-1 input wire, widget, rail-0
  output wire, rail-1 output wire.

Input wires run towards the widget with increasing index and output wires
run away from it, so wire-local positions are ``site - wire_start``.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import sparse

from .analytic import gaussian_packet, switch_time_for_momentum, period_scale
from .errors import ConfigurationError, DomainError, WidgetMismatchError
from .jacobi import build_chain

ROLE_TAGS = ("slide", "input_wire", "widget", "output_wire")
GATES = ("ub", "uc", "reference")

# default layout: 200-site slide, 151-site input wires, 152-site output wires
DEFAULT_SLIDE = 200
DEFAULT_INPUT = 151
DEFAULT_OUTPUT = 152


@dataclass(frozen=True, eq=False)
class Widget:
    name: str
    n_sites: int
    edges: tuple
    in_ports: tuple
    out_ports: tuple
    phase_label: str = ""
    reference_sites: int = 1
    validation: str = "none"

    def __post_init__(self):
        for u, v, c in self.edges:
            if not (0 <= u < self.n_sites and 0 <= v < self.n_sites) or u == v:
                raise ConfigurationError(f"bad widget edge ({u}, {v})")
            if not c > 0:
                raise ConfigurationError("widget couplings must be positive")
        for ports in (self.in_ports, self.out_ports):
            if len(set(ports)) != len(ports):
                raise ConfigurationError("ports of one direction must be distinct widget sites")
            if any(not 0 <= s < self.n_sites for s in ports):
                raise ConfigurationError("port outside the widget")
        if len(self.in_ports) != len(self.out_ports):
            raise ConfigurationError("widget needs one output port per input port")

    @property
    def rails(self) -> int:
        return len(self.in_ports)

    def matrix(self) -> np.ndarray:
        h = np.zeros((self.n_sites, self.n_sites))
        for u, v, c in self.edges:
            h[u, v] = h[v, u] = c
        return h


def _parse_widget(data: dict) -> Widget:
    try:
        ports = data["ports"]
        ins = sorted((p["rail"], p["site"]) for p in ports if p["direction"] == "in")
        outs = sorted((p["rail"], p["site"]) for p in ports if p["direction"] == "out")
        if [r for r, _ in ins] != list(range(len(ins))) or [r for r, _ in outs] != list(range(len(outs))):
            raise ConfigurationError("port rails must be numbered 0..rails-1 once per direction")
        return Widget(
            name=data.get("name", "widget"),
            n_sites=int(data["sites"]),
            edges=tuple((int(u), int(v), float(c)) for u, v, c in data["edges"]),
            in_ports=tuple(s for _, s in ins),
            out_ports=tuple(s for _, s in outs),
            phase_label=data.get("phase_label", ""),
            reference_sites=int(data.get("reference_sites", 1)),
            validation=data.get("validation", "none"),
        )
    except KeyError as exc:
        raise ConfigurationError(f"widget description lacks key {exc}") from None


def _validation_grid():
    k = np.linspace(-math.pi, 0, 202)[1:-1]
    return k[np.abs(k + math.pi / 2) > 1e-6]


def validate_widget(widget: Widget) -> float:
    """Check the widget's scattering against its declared behaviour.

    Returns the maximum deviation found, raising WidgetMismatchError above
    tolerance.
    """
    from .analytic import transmission_b
    from .scatter import bare_link_transmission, solve_plane_wave, sweep_k

    kind = widget.validation
    if kind == "none":
        return 0.0
    if kind == "transmission_b":
        grid = _validation_grid()
        got = np.array([s.total_transmission for s in sweep_k(widget, grid)])
        dev = float(np.max(abs(got - transmission_b(grid))))
        tol = 1e-9
    elif kind == "perfect":
        grid = _validation_grid()
        sols = sweep_k(widget, grid)
        dev = max(max(abs(s.transmission[0] - bare_link_transmission(s.k, widget.reference_sites)),
                      float(np.max(abs(s.reflection))))
                  for s in sols)
        tol = 1e-9
    elif kind == "balanced_split":
        dev = 0.0
        for rail in range(widget.rails):
            s = solve_plane_wave(widget, -math.pi / 4, input_rail=rail)
            dev = max(dev, float(np.max(abs(abs(s.transmission) ** 2 - 0.5))),
                      float(np.max(abs(s.reflection))))
        tol = 1e-6
    else:
        raise ConfigurationError(f"unknown widget validation {kind!r}")
    if dev > tol:
        raise WidgetMismatchError(f"widget {widget.name!r} fails {kind} check: max deviation {dev:.3g}",
                                  max_deviation=dev)
    return dev


def load_widget(source, validate: bool = True) -> Widget:
    """Read a widget from a JSON file path, JSON text or an already-parsed dict."""
    if isinstance(source, dict):
        data = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            data = json.loads(text)
        else:
            data = json.loads(Path(source).read_text())
    widget = _parse_widget(data)
    if validate:
        validate_widget(widget)
    return widget


def shipped_widget(name: str) -> Widget:
    """One of the widgets bundled with the package: ``ub``, ``uc`` or ``link``."""
    ref = resources.files("quantum_slide").joinpath("widgets", f"{name}.json")
    if not ref.is_file():
        raise ConfigurationError(f"no shipped widget named {name!r}")
    return load_widget(ref.read_text())


@dataclass(frozen=True, eq=False)
class WalkGraph:
    n_sites: int
    edges: np.ndarray          # (m, 2) int, u < v
    couplings: np.ndarray      # (m,)
    fields: np.ndarray         # (n_sites,)
    roles: tuple               # per-site (tag, rail); rail is None on widget sites
    slide_sites: np.ndarray
    gate: str = "custom"
    wire_coupling: float = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("edges", "couplings", "fields", "slide_sites"):
            getattr(self, name).setflags(write=False)

    def matrix(self, fields_on: bool = True) -> np.ndarray:
        h = np.zeros((self.n_sites, self.n_sites))
        u, v = self.edges[:, 0], self.edges[:, 1]
        h[u, v] = self.couplings
        h[v, u] = self.couplings
        d = self.fields.copy()
        if not fields_on:
            d[self.slide_sites] = 0.0
        h[np.arange(self.n_sites), np.arange(self.n_sites)] = d
        return h

    def sparse_matrix(self, fields_on: bool = True) -> sparse.csr_matrix:
        u, v = self.edges[:, 0], self.edges[:, 1]
        d = self.fields.copy()
        if not fields_on:
            d[self.slide_sites] = 0.0
        diag = np.arange(self.n_sites)
        rows = np.concatenate([u, v, diag])
        cols = np.concatenate([v, u, diag])
        vals = np.concatenate([self.couplings, self.couplings, d])
        return sparse.csr_matrix((vals, (rows, cols)), shape=(self.n_sites, self.n_sites))

    def hamiltonian(self, fields_on: bool = True):
        """Cached propagator object for the graph with slide fields on or off."""
        return self._hamiltonians[bool(fields_on)]

    @cached_property
    def _hamiltonians(self):
        from .propagate import Hamiltonian
        return {True: Hamiltonian.from_graph(self, True), False: Hamiltonian.from_graph(self, False)}

    def sites(self, tag: str, rail=None) -> np.ndarray:
        if tag not in ROLE_TAGS:
            raise ValueError(f"unknown role {tag!r}")
        return np.array([i for i, (t, r) in enumerate(self.roles)
                         if t == tag and (rail is None or r == rail)], dtype=int)

    def window(self, tag: str, rail=0) -> range:
        s = self.sites(tag, rail)
        if s.size == 0:
            raise ValueError(f"graph has no {tag} sites on rail {rail}")
        if s[-1] - s[0] + 1 != s.size:
            raise ValueError(f"{tag} sites on rail {rail} are not contiguous")
        return range(int(s[0]), int(s[-1]) + 1)

    @property
    def rails(self) -> int:
        return len({r for t, r in self.roles if t == "output_wire"})

    def neighbours(self) -> list[list[int]]:
        adj = [[] for _ in range(self.n_sites)]
        for u, v in self.edges:
            adj[u].append(int(v))
            adj[v].append(int(u))
        return adj

    def path_length(self, src: int, dst: int) -> int:
        """Number of edges on a shortest path between two sites."""
        adj = self.neighbours()
        dist = {src: 0}
        queue = deque([src])
        while queue:
            s = queue.popleft()
            if s == dst:
                return dist[s]
            for nb in adj[s]:
                if nb not in dist:
                    dist[nb] = dist[s] + 1
                    queue.append(nb)
        raise ValueError(f"site {dst} unreachable from {src}")

    def is_connected(self) -> bool:
        adj = self.neighbours()
        seen = {0}
        queue = deque([0])
        while queue:
            for nb in adj[queue.popleft()]:
                if nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        return len(seen) == self.n_sites

    def to_text(self) -> str:
        """Diff-friendly edge list: one ``site`` line per site then one ``edge`` line per edge."""
        lines = [f"# walk graph gate={self.gate} sites={self.n_sites} edges={len(self.couplings)}",
                 "# site index field role rail"]
        for i, (tag, rail) in enumerate(self.roles):
            lines.append(f"site {i} {self.fields[i]:.17g} {tag} {'-' if rail is None else rail}")
        lines.append("# edge u v coupling")
        for (u, v), c in zip(self.edges, self.couplings):
            lines.append(f"edge {u} {v} {c:.17g}")
        return "\n".join(lines) + "\n"


def minimum_wire_length(slide_len: int, a: float) -> int:
    """Sites needed to hold six packet widths of the launched packet."""
    try:
        t = switch_time_for_momentum(-math.pi / 4, a)
    except DomainError:
        t = period_scale(a) * math.pi / 2
    big_n = 2 * slide_len - 1
    return math.ceil(6 * gaussian_packet(big_n, a, t).sigma)


def scaled_wire_lengths(slide_len: int) -> tuple[int, int]:
    """Wire lengths for a slide length: +25 sites per +200 slide sites from 151/152."""
    extra = 25 * (slide_len - DEFAULT_SLIDE) // 200
    return DEFAULT_INPUT + extra, DEFAULT_OUTPUT + extra


class _Builder:
    def __init__(self):
        self.roles = []
        self.fields = []
        self.edges = []

    def add(self, count, tag, rail, fields=None):
        start = len(self.roles)
        self.roles.extend([(tag, rail)] * count)
        self.fields.extend(fields if fields is not None else [0.0] * count)
        return list(range(start, start + count))

    def link(self, u, v, c):
        self.edges.append((min(u, v), max(u, v), float(c)))

    def chain(self, sites, c):
        for u, v in zip(sites[:-1], sites[1:]):
            self.link(u, v, c)


def build_gate_circuit(gate: str, slide_len: int = DEFAULT_SLIDE, input_len: int = DEFAULT_INPUT,
                       output_len: int = DEFAULT_OUTPUT, a: float = -2.0, widget: Widget | None = None,
                       reference_sites: int | None = None) -> WalkGraph:
    """Assemble the scattering circuit for ``ub``, ``uc`` or the widget-free ``reference``.

    All wire and widget couplings equal the slide's junction coupling
    (= ``slide_len``). For ``reference`` the widget is replaced by a bare
    link of ``reference_sites`` sites (taken from ``widget`` when given).
    """
    if gate not in GATES:
        raise ConfigurationError(f"unknown gate {gate!r}; expected one of {GATES}")
    if slide_len < 10:
        raise ConfigurationError("slide_len must be >= 10")
    need = minimum_wire_length(slide_len, a)
    for name, length in (("input_len", input_len), ("output_len", output_len)):
        if length < need:
            raise ConfigurationError(f"{name}={length} too short; needs at least {need} sites")
    if gate == "reference":
        if reference_sites is None:
            reference_sites = widget.reference_sites if widget is not None else 2
        if reference_sites < 1:
            raise ConfigurationError("reference link needs at least one site")
    else:
        if widget is None:
            widget = shipped_widget(gate)
        want = 1 if gate == "ub" else 2
        if widget.rails != want:
            raise ConfigurationError(
                f"gate {gate} needs a widget with {2 * want} ports, got {2 * widget.rails}")

    slide = build_chain("half_slide", slide_len, a=a)
    jw = slide.junction_coupling
    b = _Builder()
    slide_sites = b.add(slide_len, "slide", 0, list(slide.fields))
    for i, c in enumerate(slide.couplings):
        b.link(slide_sites[i], slide_sites[i + 1], c)

    rails = 2 if gate == "uc" else 1
    inputs = [b.add(input_len, "input_wire", r) for r in range(rails)]
    b.link(slide_sites[-1], inputs[0][0], jw)
    for wire in inputs:
        b.chain(wire, jw)

    if gate == "reference":
        link = b.add(reference_sites, "widget", None)
        b.chain(link, jw)
        in_ports = out_ports = None
        b.link(inputs[0][-1], link[0], jw)
        exits = [link[-1]]
    else:
        w_sites = b.add(widget.n_sites, "widget", None)
        for u, v, c in widget.edges:
            b.link(w_sites[u], w_sites[v], c * jw)
        in_ports = [w_sites[s] for s in widget.in_ports]
        out_ports = [w_sites[s] for s in widget.out_ports]
        for wire, port in zip(inputs, in_ports):
            b.link(wire[-1], port, jw)
        exits = out_ports

    outputs = [b.add(output_len, "output_wire", r) for r in range(rails)]
    for wire, port in zip(outputs, exits):
        b.link(port, wire[0], jw)
        b.chain(wire, jw)

    edges = np.array([(u, v) for u, v, _ in b.edges], dtype=int)
    if len({(int(u), int(v)) for u, v in edges}) != len(edges):
        raise ConfigurationError("duplicate edges in assembled graph")
    graph = WalkGraph(
        n_sites=len(b.roles),
        edges=edges,
        couplings=np.array([c for _, _, c in b.edges]),
        fields=np.array(b.fields, dtype=float),
        roles=tuple(b.roles),
        slide_sites=np.array(slide_sites, dtype=int),
        gate=gate,
        wire_coupling=jw,
        params=dict(gate=gate, slide_len=slide_len, input_len=input_len, output_len=output_len, a=a,
                    widget=None if widget is None else widget.name,
                    reference_sites=reference_sites if gate == "reference" else None),
    )
    _check_graph(graph)
    return graph


def _check_graph(graph: WalkGraph):
    if not graph.is_connected():
        raise ConfigurationError("assembled graph is not connected")
    slide = set(graph.slide_sites.tolist())
    widget = set(graph.sites("widget").tolist())
    for (u, v), c in zip(graph.edges, graph.couplings):
        if (u in slide and v in slide) or (u in widget and v in widget):
            continue
        if c != graph.wire_coupling:
            raise ConfigurationError(f"edge ({u}, {v}) coupling {c} differs from wire coupling")
