"""Dense statevector simulator over named registers of N-level sites.

Amplitude indexing is little-endian: global site ``j`` is digit ``j`` of the
base-N expansion of the basis index.  Internally the amplitude array is viewed
as a tensor of shape ``(N,) * n`` in C order, so site ``j`` is tensor axis
``n - 1 - j``.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .weyl import WeylString

EXACT_DIM_LIMIT = 2**14
_DENSE_EIGH_LIMIT = 2**11


@dataclass(frozen=True)
class Layout:
    """Ordered named registers; sites are numbered consecutively across registers."""

    registers: tuple[tuple[str, int], ...]
    n_level: int = 2

    def __post_init__(self):
        object.__setattr__(
            self, "registers", tuple((str(n), int(s)) for n, s in self.registers if int(s) > 0)
        )
        names = [n for n, _ in self.registers]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate register names in {names}")

    @property
    def n_sites(self) -> int:
        return sum(s for _, s in self.registers)

    @property
    def dim(self) -> int:
        return self.n_level**self.n_sites

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.registers)

    def offset(self, name: str) -> int:
        off = 0
        for n, s in self.registers:
            if n == name:
                return off
            off += s
        raise KeyError(f"no register named {name!r}")

    def size(self, name: str) -> int:
        return dict(self.registers)[name]

    def sites(self, name: str) -> list[int]:
        off = self.offset(name)
        return list(range(off, off + self.size(name)))

    def site(self, name: str, index: int) -> int:
        if not 0 <= index < self.size(name):
            raise IndexError(f"{name}[{index}] outside the register")
        return self.offset(name) + index

    def without_sites(self, sites: Iterable[int]) -> Layout:
        drop = set(sites)
        regs = []
        off = 0
        for n, s in self.registers:
            keep = sum(1 for j in range(off, off + s) if j not in drop)
            regs.append((n, keep))
            off += s
        return Layout(tuple(regs), self.n_level)

    def without(self, *names: str) -> Layout:
        return Layout(tuple(r for r in self.registers if r[0] not in names), self.n_level)

    def to_json(self) -> dict:
        return {"registers": [list(r) for r in self.registers], "n_level": self.n_level}


@dataclass
class StateVector:
    layout: Layout
    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if self.amps.shape != (self.layout.dim,):
            raise ValueError(
                f"layout needs {self.layout.dim} amplitudes, got {self.amps.shape[0]}"
            )

    @classmethod
    def zeros(cls, layout: Layout) -> StateVector:
        """The computational basis state with every site in ``|0>``."""
        a = np.zeros(layout.dim, dtype=complex)
        a[0] = 1.0
        return cls(layout, a)

    @classmethod
    def product(cls, layout: Layout, local: np.ndarray) -> StateVector:
        """Same single-site state on every site."""
        local = np.asarray(local, dtype=complex)
        out = np.ones(1, dtype=complex)
        for _ in range(layout.n_sites):
            out = np.kron(local, out)
        return cls(layout, out)

    @classmethod
    def plus(cls, layout: Layout) -> StateVector:
        n = layout.n_level
        return cls.product(layout, np.ones(n) / np.sqrt(n))

    def copy(self) -> StateVector:
        return StateVector(self.layout, self.amps.copy())

    @property
    def n_sites(self) -> int:
        return self.layout.n_sites

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def normalized(self) -> StateVector:
        nrm = self.norm
        if nrm == 0:
            raise ZeroDivisionError("cannot normalize a zero state")
        return StateVector(self.layout, self.amps / nrm)

    def tensor(self) -> np.ndarray:
        return self.amps.reshape((self.layout.n_level,) * self.n_sites)

    def axis(self, site: int) -> int:
        if not 0 <= site < self.n_sites:
            raise IndexError(f"site {site} outside a {self.n_sites}-site layout")
        return self.n_sites - 1 - site

    def vdot(self, other: StateVector) -> complex:
        return complex(np.vdot(self.amps, other.amps))


def basis_digits(layout: Layout) -> np.ndarray:
    """``(dim, n_sites)`` array of base-N digits for every basis index."""
    n = layout.n_level
    idx = np.arange(layout.dim)
    return (idx[:, None] // n ** np.arange(layout.n_sites)[None, :]) % n


def _along(axis: int, ndim: int, vec: np.ndarray) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = -1
    return vec.reshape(shape)


def apply_weyl(state: StateVector, op: WeylString) -> StateVector:
    """``op |state>`` (ignores the hermitize flag)."""
    n = state.layout.n_level
    if op.n_level != n:
        raise ValueError("string and state have different local dimensions")
    t = state.tensor().copy()
    omega = np.exp(2j * np.pi / n)
    levels = np.arange(n)
    for site, p in op.z.items():
        ax = state.axis(site)
        t = t * _along(ax, t.ndim, omega ** (p * levels))
    for site, p in op.x.items():
        t = np.roll(t, p, axis=state.axis(site))
    return StateVector(state.layout, op.phase_factor() * t.reshape(-1))


@dataclass(frozen=True)
class TwistedTerm:
    """Qubit operator ``X(x_sites) * prod_t i**parity(t)``.

    Each entry of ``twists`` is a tuple of sites; it contributes a factor ``i``
    whenever the bits on those sites have odd parity.  Twist sites must be
    disjoint from ``x_sites``, so the diagonal factor commutes with the flip.
    The term is Hermitian wherever the total power of ``i`` is even.
    """

    x_sites: tuple[int, ...]
    twists: tuple[tuple[int, ...], ...]
    n_level: int = field(default=2, init=False)

    def __post_init__(self):
        object.__setattr__(self, "x_sites", tuple(sorted(int(s) for s in self.x_sites)))
        object.__setattr__(self, "twists", tuple(tuple(int(s) for s in t) for t in self.twists))
        flips = set(self.x_sites)
        for tw in self.twists:
            if flips & set(tw):
                raise ValueError("twist sites must be disjoint from flipped sites")

    @property
    def support(self) -> tuple[int, ...]:
        s = set(self.x_sites)
        for tw in self.twists:
            s |= set(tw)
        return tuple(sorted(s))

    def twist_power(self, digits: np.ndarray) -> np.ndarray:
        """Exponent of ``i`` for each row of a ``(..., n_sites)`` digit array."""
        k = np.zeros(digits.shape[:-1], dtype=np.int64)
        for tw in self.twists:
            k += digits[..., list(tw)].sum(axis=-1) % 2
        return k % 4

    def flip_mask(self) -> int:
        return sum(1 << s for s in self.x_sites)

    def to_sparse(self, layout: Layout) -> sp.csr_matrix:
        d = basis_digits(layout)
        phase = 1j ** self.twist_power(d)
        src = np.arange(layout.dim)
        dst = src ^ self.flip_mask()
        return sp.csr_matrix((phase, (dst, src)), shape=(layout.dim, layout.dim))

    def to_matrix(self, n_sites: int) -> np.ndarray:
        return self.to_sparse(Layout((("q", n_sites),))).toarray()


def apply_twisted(state: StateVector, term: TwistedTerm) -> StateVector:
    if state.layout.n_level != 2:
        raise ValueError("twisted terms act on qubits")
    d = basis_digits(state.layout)
    phase = 1j ** term.twist_power(d)
    src = np.arange(state.layout.dim)
    out = np.zeros_like(state.amps)
    out[src ^ term.flip_mask()] = phase * state.amps
    return StateVector(state.layout, out)


def apply_op(state: StateVector, op) -> StateVector:
    """Apply a Weyl string or twisted term (the bare operator, no h.c.)."""
    if isinstance(op, TwistedTerm):
        return apply_twisted(state, op)
    return apply_weyl(state, op)


def expectation(state: StateVector, op) -> complex:
    return state.vdot(apply_op(state, op)) / state.vdot(state)


def _local_matrix(op: WeylString) -> np.ndarray:
    """Matrix of ``op`` on its own support, support site ``k`` being digit ``k``."""
    sup = op.support
    relabel = {s: i for i, s in enumerate(sup)}
    local = WeylString(
        op.n_level,
        {relabel[s]: v for s, v in op.x.items()},
        {relabel[s]: v for s, v in op.z.items()},
        op.phase,
    )
    return local.to_matrix(len(sup))


def _apply_local(state: StateVector, sites: Sequence[int], u: np.ndarray) -> StateVector:
    """Apply a matrix acting on ``sites`` (site ``sites[k]`` is local digit ``k``)."""
    n = state.layout.n_level
    k = len(sites)
    t = state.tensor()
    # local C-order axes run over reversed(sites)
    axes = [state.axis(s) for s in reversed(sites)]
    u_t = u.reshape((n,) * (2 * k))
    moved = np.tensordot(u_t, t, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(moved, list(range(k)), axes)
    return StateVector(state.layout, out.reshape(-1))


def generator_matrix(op: WeylString) -> np.ndarray:
    """Hermitian generator on the support: ``P`` or ``P + P^dagger``."""
    m = _local_matrix(op)
    if op.hermitize:
        return m + m.conj().T
    if not np.allclose(m, m.conj().T, atol=1e-14):
        raise ValueError(f"{op!r} is not Hermitian; set hermitize=True for P + P^dagger")
    return m


def apply_term_exp(state: StateVector, op, theta: float, imaginary: bool = False) -> StateVector:
    """``exp(i theta A)`` (real time) or ``exp(theta A)`` (imaginary time).

    ``A`` is the term itself, or ``P + P^dagger`` for a hermitized string.
    """
    if isinstance(op, TwistedTerm):
        return _twisted_exp(state, op, theta, imaginary)
    if op.n_level != state.layout.n_level:
        raise ValueError("term and state have different local dimensions")
    if not op.support:
        value = 2 * op.phase_factor().real if op.hermitize else op.phase_factor()
        if not op.hermitize and abs(value.imag) > 1e-14:
            raise ValueError(f"{op!r} is not Hermitian")
        f = np.exp(theta * value.real) if imaginary else np.exp(1j * theta * value.real)
        return StateVector(state.layout, f * state.amps)
    if op.n_level == 2 and not op.hermitize:
        if not op.is_hermitian():
            raise ValueError(f"{op!r} is not Hermitian; set hermitize=True for P + P^dagger")
        p_psi = apply_weyl(state, op)
        if imaginary:
            c, s = np.cosh(theta), np.sinh(theta)
        else:
            c, s = np.cos(theta), 1j * np.sin(theta)
        return StateVector(state.layout, c * state.amps + s * p_psi.amps)
    gen = generator_matrix(op)
    w, v = np.linalg.eigh(gen)
    f = np.exp(theta * w) if imaginary else np.exp(1j * theta * w)
    u = (v * f) @ v.conj().T
    return _apply_local(state, list(op.support), u)


def _twisted_exp(state: StateVector, term: TwistedTerm, theta: float, imaginary: bool):
    # T^2 = D^2 is diagonal with entries +-1, so the series splits per component
    d = basis_digits(state.layout)
    sq = (-1.0) ** (term.twist_power(d) % 2)
    t_psi = apply_twisted(state, term).amps
    if imaginary:
        c = np.where(sq > 0, np.cosh(theta), np.cos(theta))
        s = np.where(sq > 0, np.sinh(theta), np.sin(theta))
    else:
        c = np.where(sq > 0, np.cos(theta), np.cosh(theta))
        s = 1j * np.where(sq > 0, np.sin(theta), np.sinh(theta))
    return StateVector(state.layout, c * state.amps + s * t_psi)


# -- controlled gates ------------------------------------------------------


@dataclass(frozen=True)
class ControlledGate:
    """``kind='cx'``: ``|a>|b> -> |a>|b + power*a>``.

    ``kind='cs'``: applies the qubit string ``op`` when the control is ``|1>``.
    """

    kind: str
    control: int
    target: int | None = None
    power: int = 1
    op: WeylString | None = None

    @property
    def targets(self) -> tuple[int, ...]:
        if self.kind == "cx":
            return (self.target,)
        return self.op.support


def apply_controlled(state: StateVector, gate: ControlledGate) -> StateVector:
    if gate.control in gate.targets:
        raise ValueError("control and target overlap")
    n = state.layout.n_level
    t = state.tensor().copy()
    cax = state.axis(gate.control)
    if gate.kind == "cx":
        tax = state.axis(gate.target)
        sub_ax = tax if tax < cax else tax - 1
        for a in range(1, n):
            sl = [slice(None)] * t.ndim
            sl[cax] = a
            t[tuple(sl)] = np.roll(t[tuple(sl)], gate.power * a, axis=sub_ax)
        return StateVector(state.layout, t.reshape(-1))
    if gate.kind == "cs":
        if n != 2:
            raise ValueError("controlled hopping is a qubit gate")
        full = apply_weyl(state, gate.op).tensor()
        sl = [slice(None)] * t.ndim
        sl[cax] = 1
        t[tuple(sl)] = full[tuple(sl)]
        return StateVector(state.layout, t.reshape(-1))
    raise ValueError(f"unknown controlled gate kind {gate.kind!r}")


# -- measurement -----------------------------------------------------------


def x_branches(state: StateVector, sites: Sequence[int]) -> tuple[np.ndarray, Layout]:
    """Unnormalized X-basis branches.

    Returns ``(B, rest)`` where row ``r`` of ``B`` is ``<s~|psi>`` on the
    remaining layout ``rest`` and ``r = sum_j s_j N**j`` over ``sites`` in order.
    """
    n = state.layout.n_level
    sites = list(sites)
    if len(set(sites)) != len(sites):
        raise ValueError("repeated measurement site")
    t = state.tensor()
    for s in sites:
        # <s~|a> = omega^{a s} / sqrt(N)
        t = np.fft.ifft(t, axis=state.axis(s)) * np.sqrt(n)
    meas_axes = [state.axis(s) for s in reversed(sites)]
    rest_axes = [a for a in range(t.ndim) if a not in meas_axes]
    t = np.transpose(t, meas_axes + rest_axes)
    rest = state.layout.without_sites(sites)
    return t.reshape(n ** len(sites), rest.dim), rest


def outcome_digits(index: int, n_sites: int, n_level: int) -> np.ndarray:
    return np.array([(index // n_level**j) % n_level for j in range(n_sites)], dtype=np.int64)


def outcome_index(outcomes: Sequence[int], n_level: int) -> int:
    return int(sum(int(s) * n_level**j for j, s in enumerate(outcomes)))


def project_x(state: StateVector, sites: Sequence[int], outcomes: Sequence[int]) -> StateVector:
    """Contract ``sites`` against X-basis bras; the result stays unnormalized."""
    if len(outcomes) != len(sites):
        raise ValueError("one outcome per measured site")
    branches, rest = x_branches(state, sites)
    return StateVector(rest, branches[outcome_index(outcomes, state.layout.n_level)].copy())


def measure_x(
    state: StateVector, sites: Sequence[int], rng: np.random.Generator | int | None = None
) -> tuple[np.ndarray, StateVector]:
    """Born-rule X-basis measurement; returns outcomes and the renormalized rest."""
    rng = np.random.default_rng(rng)
    branches, rest = x_branches(state, sites)
    probs = np.sum(np.abs(branches) ** 2, axis=1)
    total = probs.sum()
    if total <= 0:
        raise ZeroDivisionError("cannot measure a zero-norm state")
    r = int(rng.choice(len(probs), p=probs / total))
    post = StateVector(rest, branches[r] / np.sqrt(probs[r]))
    return outcome_digits(r, len(sites), state.layout.n_level), post


# -- exact evolution (oracle) ----------------------------------------------


def weyl_sparse(op: WeylString, layout: Layout) -> sp.csr_matrix:
    n = layout.n_level
    d = basis_digits(layout)
    zpow = np.zeros(layout.n_sites, dtype=np.int64)
    xpow = np.zeros(layout.n_sites, dtype=np.int64)
    for s, p in op.z.items():
        zpow[s] = p
    for s, p in op.x.items():
        xpow[s] = p
    phase = op.phase_factor() * np.exp(2j * np.pi * ((d @ zpow) % n) / n)
    dst_digits = (d + xpow[None, :]) % n
    dst = dst_digits @ (n ** np.arange(layout.n_sites))
    return sp.csr_matrix((phase, (dst, np.arange(layout.dim))), shape=(layout.dim,) * 2)


def hamiltonian_matrix(hamiltonian, layout: Layout) -> sp.csr_matrix:
    """Sparse matrix of ``sum_j c_j A_j``; ``A_j`` includes h.c. for hermitized strings."""
    h = sp.csr_matrix((layout.dim, layout.dim), dtype=complex)
    for coef, op in hamiltonian:
        if isinstance(op, TwistedTerm):
            m = op.to_sparse(layout)
        else:
            m = weyl_sparse(op, layout)
            if op.hermitize:
                m = m + m.getH()
        h = h + coef * m
    return h


def exact_evolve(state: StateVector, hamiltonian, t: float) -> StateVector:
    """``exp(-i H t)|state>`` without Trotterization."""
    if state.layout.dim > EXACT_DIM_LIMIT:
        raise ValueError(
            f"exact evolution limited to dimension {EXACT_DIM_LIMIT}, got {state.layout.dim}"
        )
    h = hamiltonian_matrix(hamiltonian, state.layout)
    if abs(h - h.getH()).max() > 1e-12:
        raise ValueError("Hamiltonian is not Hermitian")
    if t == 0:
        return state.copy()
    if state.layout.dim <= _DENSE_EIGH_LIMIT:
        w, v = np.linalg.eigh(h.toarray())
        out = v @ (np.exp(-1j * w * t) * (v.conj().T @ state.amps))
    else:
        out = expm_multiply(-1j * t * h.tocsc(), state.amps)
    return StateVector(state.layout, out)


# -- serialization ---------------------------------------------------------


def save_state(state: StateVector, path) -> None:
    """Write a JSON header (length-prefixed) followed by little-endian complex128 pairs."""
    header = json.dumps(
        {"layout": state.layout.to_json(), "N": state.layout.n_level, "norm": state.norm},
        sort_keys=True,
    ).encode()
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(state.amps.astype("<c16").tobytes())
    tmp.replace(path)


def load_state(path) -> StateVector:
    with open(path, "rb") as fh:
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen))
        data = np.frombuffer(fh.read(), dtype="<c16")
    lay = header["layout"]
    layout = Layout(tuple((n, s) for n, s in lay["registers"]), lay["n_level"])
    return StateVector(layout, data.astype(complex))
