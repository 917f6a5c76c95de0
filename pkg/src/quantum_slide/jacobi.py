"""Jacobi (symmetric tridiagonal) chain Hamiltonians and their spectra.

A chain of ``n_sites`` sites carries couplings ``J_1..J_{n-1}`` between
neighbouring sites and on-site fields ``B_0..B_{n-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import InvalidSizeError

CHAIN_KINDS = ("pst", "field", "half_slide", "uniform")


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class JacobiChain:
    n_sites: int
    couplings: np.ndarray
    fields: np.ndarray
    kind: str = "custom"
    junction_coupling: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "couplings", _frozen(self.couplings))
        object.__setattr__(self, "fields", _frozen(self.fields))
        if self.n_sites < 2:
            raise InvalidSizeError(f"a chain needs at least 2 sites, got {self.n_sites}")
        if self.couplings.shape != (self.n_sites - 1,):
            raise InvalidSizeError(
                f"expected {self.n_sites - 1} couplings, got {self.couplings.size}")
        if self.fields.shape != (self.n_sites,):
            raise InvalidSizeError(f"expected {self.n_sites} fields, got {self.fields.size}")
        if not np.all(self.couplings > 0):
            raise ValueError("couplings must be strictly positive")

    def matrix(self) -> np.ndarray:
        h = np.diag(self.fields)
        idx = np.arange(self.n_sites - 1)
        h[idx, idx + 1] = self.couplings
        h[idx + 1, idx] = self.couplings
        return h

    def trace(self) -> float:
        return float(np.sum(self.fields))


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T

    def propagate(self, psi: np.ndarray, t: float) -> np.ndarray:
        """Apply ``exp(-i H t)`` to ``psi``."""
        v = self.eigenvectors
        return v @ (np.exp(-1j * self.eigenvalues * t) * (v.T @ psi))


def build_chain(kind: str, n_sites: int, a: float = 0.0, j_uniform: float = 1.0) -> JacobiChain:
    """Build one of the chain families used for packet preparation.

    ``pst``         J_n = sqrt(n (N+1-n)), B_n = 0, with N = n_sites - 1
    ``field``       same couplings, B_n = a n
    ``half_slide``  first half of a virtual 2N-site chain, N = n_sites:
                    J_n = sqrt(n (2N - n)) for n = 1..N-1, B_n = a n.
                    The coupling to the next site, J_N = N, is exposed as
                    ``junction_coupling``.
    ``uniform``     constant coupling ``j_uniform``, zero field
    """
    if n_sites < 2:
        raise InvalidSizeError(f"a chain needs at least 2 sites, got {n_sites}")
    if not np.isfinite(a):
        raise ValueError("field slope a must be finite")
    n = np.arange(1, n_sites)
    sites = np.arange(n_sites)
    if kind in ("pst", "field"):
        big_n = n_sites - 1
        couplings = np.sqrt(n * (big_n + 1 - n))
        fields = a * sites if kind == "field" else np.zeros(n_sites)
        return JacobiChain(n_sites, couplings, fields, kind=kind)
    if kind == "half_slide":
        couplings = np.sqrt(n * (2 * n_sites - n))
        return JacobiChain(n_sites, couplings, a * sites, kind=kind,
                           junction_coupling=float(n_sites))
    if kind == "uniform":
        if not j_uniform > 0:
            raise ValueError("uniform chain needs j_uniform > 0")
        return JacobiChain(n_sites, np.full(n_sites - 1, float(j_uniform)),
                           np.zeros(n_sites), kind=kind)
    raise ValueError(f"unknown chain kind {kind!r}; expected one of {CHAIN_KINDS}")


def hp_chain(big_n: int, p: float) -> JacobiChain:
    """The Krawtchouk chain with integer spectrum 0..N for every p in (0, 1)."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    n = np.arange(1, big_n + 1)
    couplings = np.sqrt(p * (1 - p) * n * (big_n + 1 - n))
    fields = (1 - 2 * p) * np.arange(big_n + 1) + p * big_n
    return JacobiChain(big_n + 1, couplings, fields, kind="hp")


def eigendecompose(chain: JacobiChain) -> Spectrum:
    # eigh_tridiagonal returns ascending eigenvalues
    w, v = eigh_tridiagonal(chain.fields, chain.couplings)
    return Spectrum(w, v)
