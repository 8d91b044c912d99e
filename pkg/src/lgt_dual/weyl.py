"""Generalized Pauli (Weyl) strings over N-level sites and a Jordan-Wigner dictionary.

A string is stored as ``zeta**phase * prod_j X_j**x_j Z_j**z_j`` where
``zeta = exp(i pi / N)`` so that ``zeta**2 = omega = exp(2 pi i / N)``.  Keeping
phases as integers mod 2N makes factors such as ``-i`` at N = 2 exact.

Single-site conventions: ``Z|a> = omega**a |a>``, ``X|a> = |a+1>``, and
therefore ``Z X = omega X Z``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np

from .complexes import Chain


@dataclass(frozen=True)
class WeylString:
    n_level: int
    x: Mapping[int, int] = field(default_factory=dict)
    z: Mapping[int, int] = field(default_factory=dict)
    phase: int = 0
    hermitize: bool = False

    def __post_init__(self):
        n = self.n_level
        x = {int(k): int(v) % n for k, v in dict(self.x).items() if int(v) % n}
        z = {int(k): int(v) % n for k, v in dict(self.z).items() if int(v) % n}
        object.__setattr__(self, "x", dict(sorted(x.items())))
        object.__setattr__(self, "z", dict(sorted(z.items())))
        object.__setattr__(self, "phase", int(self.phase) % (2 * n))

    # -- construction -------------------------------------------------
    @classmethod
    def identity(cls, n_level: int) -> WeylString:
        return cls(n_level)

    @classmethod
    def single(cls, n_level: int, site: int, kind: str, power: int = 1) -> WeylString:
        if kind == "X":
            return cls(n_level, x={site: power})
        if kind == "Z":
            return cls(n_level, z={site: power})
        if kind == "Y":
            if n_level != 2:
                raise ValueError("Y is only defined for qubits")
            # Y = i X Z
            return cls(2, x={site: 1}, z={site: 1}, phase=1)
        raise ValueError(f"unknown Pauli kind {kind!r}")

    # -- algebra ------------------------------------------------------
    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.x) | set(self.z)))

    def is_identity(self) -> bool:
        return not self.x and not self.z and self.phase == 0

    def is_diagonal(self) -> bool:
        return not self.x

    def _xz_dot(self) -> int:
        return sum(v * self.z.get(k, 0) for k, v in self.x.items())

    def __mul__(self, other: WeylString) -> WeylString:
        if not isinstance(other, WeylString):
            return NotImplemented
        if other.n_level != self.n_level:
            raise ValueError("cannot multiply strings of different local dimension")
        # (X^a Z^b)(X^c Z^d) = omega^{b c} X^{a+c} Z^{b+d}
        cross = sum(v * other.x.get(k, 0) for k, v in self.z.items())
        x = dict(self.x)
        for k, v in other.x.items():
            x[k] = x.get(k, 0) + v
        z = dict(self.z)
        for k, v in other.z.items():
            z[k] = z.get(k, 0) + v
        return WeylString(
            self.n_level, x, z, self.phase + other.phase + 2 * cross, self.hermitize
        )

    def scaled(self, root_power: int) -> WeylString:
        """Multiply by ``zeta**root_power``."""
        return replace(self, phase=self.phase + root_power)

    def inverse(self) -> WeylString:
        # (X^a Z^b)^{-1} = Z^{-b} X^{-a} = omega^{ab} X^{-a} Z^{-b}
        return WeylString(
            self.n_level,
            {k: -v for k, v in self.x.items()},
            {k: -v for k, v in self.z.items()},
            -self.phase + 2 * self._xz_dot(),
            self.hermitize,
        )

    dagger = inverse

    def __pow__(self, k: int) -> WeylString:
        out = WeylString(self.n_level, hermitize=self.hermitize)
        base = self if k >= 0 else self.inverse()
        for _ in range(abs(k)):
            out = out * base
        return out

    def same_operator(self, other: WeylString) -> bool:
        return (
            self.n_level == other.n_level
            and self.x == other.x
            and self.z == other.z
            and self.phase == other.phase
        )

    def is_hermitian(self) -> bool:
        return self.same_operator(self.dagger())

    # -- matrices and action on basis states --------------------------
    def phase_factor(self) -> complex:
        return complex(np.exp(1j * np.pi * self.phase / self.n_level))

    def to_matrix(self, n_sites: int) -> np.ndarray:
        """Dense matrix on ``n_sites`` sites, site ``j`` being base-N digit ``j``."""
        n = self.n_level
        omega = np.exp(2j * np.pi / n)
        xm = np.roll(np.eye(n), 1, axis=0)
        zm = np.diag(omega ** np.arange(n))
        out = np.ones((1, 1), dtype=complex)
        for site in reversed(range(n_sites)):
            local = np.linalg.matrix_power(xm, self.x.get(site, 0)) @ np.linalg.matrix_power(
                zm, self.z.get(site, 0)
            )
            out = np.kron(out, local)
        if any(s >= n_sites for s in self.support):
            raise ValueError("string acts outside the requested register")
        return self.phase_factor() * out

    def __repr__(self) -> str:
        parts = []
        for s in self.support:
            a, b = self.x.get(s, 0), self.z.get(s, 0)
            if self.n_level == 2:
                parts.append({(1, 0): "X", (0, 1): "Z", (1, 1): "XZ"}[(a, b)] + str(s))
            else:
                parts.append(f"X{a}Z{b}@{s}")
        body = " ".join(parts) or "I"
        hc = " +h.c." if self.hermitize else ""
        return f"WeylString(N={self.n_level}, zeta^{self.phase} {body}{hc})"


def commutation_phase(p: WeylString, q: WeylString) -> int:
    """Return ``k`` with ``P Q = omega**k Q P``."""
    if p.n_level != q.n_level:
        raise ValueError("strings live on different local dimensions")
    k = sum(v * q.x.get(s, 0) for s, v in p.z.items()) - sum(
        v * p.x.get(s, 0) for s, v in q.z.items()
    )
    return k % p.n_level


def weyl_from_chain(kind: str, c: Chain, sites: Iterable[int]) -> WeylString:
    """``X(c)`` or ``Z(c)`` placed on the register whose sites are ``sites``.

    ``sites[i]`` is the global site carrying cell ``i`` of the chain's grade.
    """
    sites = list(sites)
    if len(sites) != len(c.coeffs):
        raise ValueError(
            f"register has {len(sites)} sites but the chain has {len(c.coeffs)} cells"
        )
    powers = {sites[i]: int(a) for i, a in enumerate(c.coeffs) if a}
    if kind == "X":
        return WeylString(c.modulus, x=powers)
    if kind == "Z":
        return WeylString(c.modulus, z=powers)
    raise ValueError(f"kind must be 'X' or 'Z', got {kind!r}")


@dataclass(frozen=True)
class FermionLayout:
    """Jordan-Wigner order of fermion modes on the dual vertices of a cycle.

    ``sites[j]`` is the qubit carrying mode ``j``; mode order is the order of
    ``sites``.  ``q`` is the sign attached to hopping across the wrap-around
    edge from the last mode to the first.
    """

    sites: tuple[int, ...]
    q: int = -1

    def __post_init__(self):
        if self.q not in (1, -1):
            raise ValueError("q must be +1 or -1")
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))

    @property
    def n_modes(self) -> int:
        return len(self.sites)

    def majorana(self, mode: int, primed: bool = False) -> WeylString:
        """``chi_j = Z..Z X_j`` and ``chi'_j = Z..Z Y_j``."""
        if not 0 <= mode < self.n_modes:
            raise ValueError(f"mode {mode} outside the layout")
        z = {self.sites[k]: 1 for k in range(mode)}
        site = self.sites[mode]
        op = WeylString(2, z=z) * WeylString.single(2, site, "Y" if primed else "X")
        return op

    def is_wrap(self, edge: tuple[int, int]) -> bool:
        return edge == (self.n_modes - 1, 0)

    def hopping_sign(self, edge: tuple[int, int]) -> int:
        return self.q if self.is_wrap(edge) else 1


def jw_encode(layout: FermionLayout, kind: str, where) -> WeylString:
    """Qubit form of a fermion bilinear.

    ``kind='P'`` with a mode index gives ``P = i chi' chi``; ``kind='S'`` with a
    mode pair ``(minus, plus)`` gives ``S = -i chi'_minus chi_plus``.  The
    wrap-around sign ``q`` is *not* included; see :meth:`FermionLayout.hopping_sign`.
    """
    if kind == "P":
        return (layout.majorana(where, True) * layout.majorana(where)).scaled(1)
    if kind == "S":
        minus, plus = where
        return (layout.majorana(minus, True) * layout.majorana(plus)).scaled(3)
    raise ValueError(f"unknown bilinear kind {kind!r}")
