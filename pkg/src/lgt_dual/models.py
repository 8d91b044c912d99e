"""Hamiltonian terms and first-order Trotter schedules for the model catalogue.

Every Hamiltonian is written ``H = -sum_j w_j A_j`` where ``A_j`` is a bare
term, or ``P + P^dagger`` for a hermitized Weyl string.  The matching Trotter
factor is ``exp(+i dt w_j A_j)``.  Term groups are stored in the order in
which they act on the state, i.e. the rightmost product in each step first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .complexes import CellComplex
from .engine import Layout, StateVector, TwistedTerm, apply_term_exp, apply_twisted
from .weyl import FermionLayout, WeylString, commutation_phase, jw_encode

MODEL_IDS = (
    "tfi", "gt", "ttfi", "tgt", "zn_clock", "zn_gt", "tl_ising", "gm", "qed", "sp", "fs",
)
GAUGED = ("gt", "tgt", "zn_gt", "gm", "qed", "fs")
COUPLINGS = {
    "tfi": ("lambda",),
    "gt": ("lambda",),
    "zn_clock": ("lambda",),
    "zn_gt": ("lambda",),
    "ttfi": ("g",),
    "tgt": ("g",),
    "tl_ising": ("g", "h"),
    "gm": ("g", "h"),
    "qed": ("g", "h"),
    "sp": ("lambda", "mu"),
    "fs": ("lambda", "mu"),
}
_LATTICES = {
    "tfi": ("cycle", "square"),
    "gt": ("cycle", "square"),
    "zn_clock": ("cycle", "square"),
    "zn_gt": ("cycle", "square"),
    "ttfi": ("triangular",),
    "tgt": ("triangular",),
    "tl_ising": ("cycle",),
    "gm": ("cycle",),
    "qed": ("cycle",),
    "sp": ("square",),
    "fs": ("square",),
}
_QUDIT_MODELS = ("zn_clock", "zn_gt")
# couplings that also enter as 1/c
_INVERTED = {"sp": ("lambda", "mu"), "fs": ("lambda", "mu")}


@dataclass(frozen=True)
class TableRow:
    source: str
    target: str
    map_id: str
    dim: int
    source_name: str
    target_name: str


TABLE1 = (
    TableRow("tfi", "gt", "kw", 2, "Ising/Z2 (TFI)", "pure Z2 gauge theory (GT)"),
    TableRow("ttfi", "tgt", "kw_tri", 2, "twisted Ising/Z2 (tTFI)", "twisted Z2 gauge theory (tGT)"),
    TableRow("zn_clock", "zn_gt", "kw_zn", 2, "clock/Z_N (Z_N clock)", "Z_N gauge theory (Z_N GT)"),
    TableRow("tl_ising", "gm", "kw_gm", 1, "Ising (TL-Ising)", "gauge theory with Ising matter (GM)"),
    TableRow("tl_ising", "qed", "jw", 1, "Ising (TL-Ising)", "gauged Majorana chain (QED)"),
    TableRow("sp", "fs", "fs", 2, "star-plaquette (SP)", "gauge theory with Ising matter (FS)"),
)


class IncompatibleLattice(ValueError):
    pass


@dataclass(frozen=True)
class Term:
    op: WeylString | TwistedTerm
    weight: float


@dataclass(frozen=True)
class ModelSpec:
    model_id: str
    complex: CellComplex
    couplings: Mapping[str, float]
    layout: Layout
    groups: tuple[tuple[str, tuple[Term, ...]], ...]
    symmetries: tuple[WeylString, ...] = ()

    @property
    def terms(self) -> list[Term]:
        return [t for _, ts in self.groups for t in ts]

    @property
    def gauged(self) -> bool:
        return self.model_id in GAUGED

    @property
    def n_level(self) -> int:
        return self.layout.n_level


@dataclass(frozen=True)
class TrotterSchedule:
    step: tuple[tuple[WeylString | TwistedTerm, float], ...]
    k: int
    t: float
    imaginary: bool = False
    labels: tuple[str, ...] = field(default=(), compare=False)

    @property
    def factors(self) -> list[tuple[WeylString | TwistedTerm, float]]:
        return list(self.step) * self.k

    @property
    def is_identity(self) -> bool:
        return all(theta == 0 for _, theta in self.step)


# -- term helpers ----------------------------------------------------------


def _string(n: int, x: Mapping[int, int] | None = None, z: Mapping[int, int] | None = None,
            hermitize: bool = False) -> WeylString:
    return WeylString(n, x or {}, z or {}, 0, hermitize)


def _column(mat: np.ndarray, col: int, sites: Sequence[int]) -> dict[int, int]:
    return {sites[i]: int(a) for i, a in enumerate(mat[:, col]) if a}


def _row(mat: np.ndarray, row: int, sites: Sequence[int]) -> dict[int, int]:
    return {sites[j]: int(a) for j, a in enumerate(mat[row]) if a}


def jw_layout(cx: CellComplex, matter_sites: Sequence[int], q: int = -1) -> FermionLayout:
    return FermionLayout(tuple(matter_sites), q)


def jw_hopping(cx: CellComplex, layout: FermionLayout, vertex: int) -> WeylString:
    """``q_v S`` for the dual edge that crosses vertex ``vertex`` of a cycle.

    Vertex ``j`` sits between edges ``j-1`` and ``j``; its dual edge hops from
    mode ``j-1`` to mode ``j``.  Vertex 0 carries the wrap-around edge.
    """
    n = layout.n_modes
    edge = ((vertex - 1) % n, vertex)
    s = jw_encode(layout, "S", edge)
    if layout.hopping_sign(edge) == -1:
        s = s.scaled(2)
    return s


def twisted_site_term(cx: CellComplex, v: int) -> TwistedTerm:
    """``O_v``: flip vertex ``v`` with a factor ``i`` per triangle whose far edge is unsatisfied."""
    pairs = []
    for e in cx.opposite_edges(v):
        u, w = (int(a) for a in cx.edge_ends[e])
        pairs.append((u, w))
    return TwistedTerm((v,), tuple(pairs))


def twisted_star_term(cx: CellComplex, v: int, edge_sites: Sequence[int]) -> TwistedTerm:
    """Dual version: flip the edges at ``v`` with a factor ``i`` per excited far edge."""
    flips = [edge_sites[e] for e in cx.incident_edges(v)]
    twists = [(edge_sites[e],) for e in cx.opposite_edges(v)]
    return TwistedTerm(tuple(flips), tuple(twists))


# -- model construction ----------------------------------------------------


def model_layout(model_id: str, cx: CellComplex) -> Layout:
    n0, n1 = cx.n_cells(0), cx.n_cells(1)
    n = cx.modulus
    if model_id in ("tfi", "ttfi", "zn_clock", "tl_ising"):
        return Layout((("v", n0),), n)
    if model_id in ("gt", "tgt", "zn_gt", "sp"):
        return Layout((("e", n1),), n)
    if model_id in ("gm", "qed"):
        return Layout((("gauge", n0), ("matter", n1)), n)
    if model_id == "fs":
        return Layout((("gauge", n1), ("matter", cx.n_cells(2))), n)
    raise ValueError(f"unknown model id {model_id!r}")


def _check_compatible(model_id: str, cx: CellComplex) -> None:
    if model_id not in MODEL_IDS:
        raise ValueError(f"unknown model id {model_id!r}; expected one of {MODEL_IDS}")
    if cx.kind not in _LATTICES[model_id]:
        raise IncompatibleLattice(
            f"model {model_id!r} needs a {' or '.join(_LATTICES[model_id])} lattice, got {cx.kind}"
        )
    if model_id not in _QUDIT_MODELS and cx.modulus != 2:
        raise IncompatibleLattice(f"model {model_id!r} is a qubit model; got N={cx.modulus}")


def build_model(model_id: str, cx: CellComplex, couplings: Mapping[str, float]) -> ModelSpec:
    _check_compatible(model_id, cx)
    missing = [c for c in COUPLINGS[model_id] if c not in couplings]
    if missing:
        raise ValueError(f"model {model_id!r} is missing coupling(s) {missing}")
    cp = {c: float(couplings[c]) for c in COUPLINGS[model_id]}
    for c in _INVERTED.get(model_id, ()):
        if cp[c] == 0:
            raise ValueError(f"coupling {c!r} appears inverted and must be nonzero")
    layout = model_layout(model_id, cx)
    groups = _BUILDERS[model_id](cx, layout, cp)
    groups = tuple((name, tuple(Term(op, w) for op, w in terms)) for name, terms in groups)
    spec = ModelSpec(model_id, cx, cp, layout, groups)
    syms = tuple(gauge_generators(spec)) if spec.gauged else tuple(global_symmetries(spec))
    spec = ModelSpec(model_id, cx, cp, layout, groups, syms)
    check_symmetries(spec)
    return spec


def _b(cx: CellComplex, grade: int) -> np.ndarray:
    return cx.boundary_matrix(grade) % cx.modulus


def _tfi(cx, layout, cp):
    n, vs = cx.modulus, layout.sites("v")
    b1 = _b(cx, 1)
    zz = [(_string(n, z=_column(b1, e, vs)), 1.0) for e in range(cx.n_cells(1))]
    xs = [(_string(n, x={s: 1}), cp["lambda"]) for s in vs]
    return [("zz", zz), ("x", xs)]


def _gt(cx, layout, cp):
    n, es = cx.modulus, layout.sites("e")
    b1 = _b(cx, 1)
    zs = [(_string(n, z={s: 1}), 1.0) for s in es]
    stars = [(_string(n, x=_row(b1, v, es)), cp["lambda"]) for v in range(cx.n_cells(0))]
    return [("z", zs), ("x_star", stars)]


def _zn_clock(cx, layout, cp):
    n, vs = cx.modulus, layout.sites("v")
    b1 = _b(cx, 1)
    xs = [(_string(n, x={s: 1}, hermitize=True), cp["lambda"]) for s in vs]
    bonds = [(_string(n, z=_column(b1, e, vs), hermitize=True), 1.0) for e in range(cx.n_cells(1))]
    return [("x", xs), ("z_bond", bonds)]


def _zn_gt(cx, layout, cp):
    n, es = cx.modulus, layout.sites("e")
    b1 = _b(cx, 1)
    stars = [
        (_string(n, x=_row(b1, v, es), hermitize=True), cp["lambda"]) for v in range(cx.n_cells(0))
    ]
    zs = [(_string(n, z={s: 1}, hermitize=True), 1.0) for s in es]
    return [("x_star", stars), ("z", zs)]


def _ttfi(cx, layout, cp):
    n, vs = cx.modulus, layout.sites("v")
    b1 = _b(cx, 1)
    zz = [(_string(n, z=_column(b1, e, vs)), cp["g"]) for e in range(cx.n_cells(1))]
    ov = [(twisted_site_term(cx, v), 1.0) for v in range(cx.n_cells(0))]
    return [("zz", zz), ("twisted", ov)]


def _tgt(cx, layout, cp):
    n, es = cx.modulus, layout.sites("e")
    zs = [(_string(n, z={s: 1}), cp["g"]) for s in es]
    ov = [(twisted_star_term(cx, v, es), 1.0) for v in range(cx.n_cells(0))]
    return [("z", zs), ("twisted", ov)]


def _tl_ising(cx, layout, cp):
    n, vs = cx.modulus, layout.sites("v")
    b1 = _b(cx, 1)
    xs = [(_string(n, x={s: 1}), cp["g"]) for s in vs]
    zs = [(_string(n, z={s: 1}), cp["h"]) for s in vs]
    zz = [(_string(n, z=_column(b1, e, vs)), 1.0) for e in range(cx.n_cells(1))]
    return [("x", xs), ("z", zs), ("zz", zz)]


def _gm(cx, layout, cp):
    n, gs, ms = cx.modulus, layout.sites("gauge"), layout.sites("matter")
    b1 = _b(cx, 1)
    hop = []
    for v in range(cx.n_cells(0)):
        x = _row(b1, v, ms)
        x[gs[v]] = 1
        hop.append((_string(n, x=x), cp["g"]))
    electric = [(_string(n, z={s: 1}), cp["h"]) for s in gs]
    matter = [(_string(n, z={s: 1}), 1.0) for s in ms]
    return [("hop", hop), ("electric", electric), ("matter", matter)]


def _qed(cx, layout, cp):
    n, gs, ms = cx.modulus, layout.sites("gauge"), layout.sites("matter")
    fl = jw_layout(cx, ms)
    hop = []
    for v in range(cx.n_cells(0)):
        hop.append((_string(n, x={gs[v]: 1}) * jw_hopping(cx, fl, v), cp["g"]))
    electric = [(_string(n, z={s: 1}), cp["h"]) for s in gs]
    parity = [(jw_encode(fl, "P", j), 1.0) for j in range(fl.n_modes)]
    return [("hop", hop), ("electric", electric), ("parity", parity)]


def _sp(cx, layout, cp):
    n, es = cx.modulus, layout.sites("e")
    b1, b2 = _b(cx, 1), _b(cx, 2)
    lam, mu = cp["lambda"], cp["mu"]
    x_edge = [(_string(n, x={s: 1}), 1.0 / lam) for s in es]
    plaq = [(_string(n, z=_column(b2, p, es)), lam) for p in range(cx.n_cells(2))]
    z_edge = [(_string(n, z={s: 1}), 1.0 / mu) for s in es]
    star = [(_string(n, x=_row(b1, v, es)), mu) for v in range(cx.n_cells(0))]
    return [("x_edge", x_edge), ("plaquette", plaq), ("z_edge", z_edge), ("star", star)]


def _fs(cx, layout, cp):
    n, gs, ms = cx.modulus, layout.sites("gauge"), layout.sites("matter")
    b1, b2 = _b(cx, 1), _b(cx, 2)
    lam, mu = cp["lambda"], cp["mu"]
    hop = []
    for e in range(cx.n_cells(1)):
        x = _row(b2, e, ms)
        x[gs[e]] = 1
        hop.append((_string(n, x=x), 1.0 / lam))
    matter = [(_string(n, z={s: 1}), lam) for s in ms]
    electric = [(_string(n, z={s: 1}), 1.0 / mu) for s in gs]
    star = [(_string(n, x=_row(b1, v, gs)), mu) for v in range(cx.n_cells(0))]
    return [("hop", hop), ("matter", matter), ("electric", electric), ("star", star)]


_BUILDERS: dict[str, Callable] = {
    "tfi": _tfi, "gt": _gt, "zn_clock": _zn_clock, "zn_gt": _zn_gt, "ttfi": _ttfi,
    "tgt": _tgt, "tl_ising": _tl_ising, "gm": _gm, "qed": _qed, "sp": _sp, "fs": _fs,
}


# -- symmetries ------------------------------------------------------------


def global_symmetries(m: ModelSpec) -> list[WeylString]:
    """Global symmetry of an ungauged model (empty when it has none we use)."""
    if m.model_id in ("tfi", "zn_clock", "ttfi"):
        return [_string(m.n_level, x={s: 1 for s in m.layout.sites("v")})]
    return []


def gauge_generators(m: ModelSpec) -> list[WeylString]:
    if not m.gauged:
        raise ValueError(f"model {m.model_id!r} is not a gauge theory")
    cx, n = m.complex, m.n_level
    if m.model_id in ("gt", "zn_gt", "tgt"):
        es = m.layout.sites("e")
        if cx.dim == 1:
            return [_string(n, z={s: 1 for s in es})]
        b2 = cx.boundary_matrix(2) % n
        return [_string(n, z=_column(b2, p, es)) for p in range(cx.n_cells(2))]
    if m.model_id in ("gm", "qed"):
        gs, ms = m.layout.sites("gauge"), m.layout.sites("matter")
        b1 = cx.boundary_matrix(1) % n
        out = []
        for e in range(cx.n_cells(1)):
            z = _column(b1, e, gs)
            z[ms[e]] = 1
            out.append(_string(n, z=z))
        return out
    if m.model_id == "fs":
        gs, ms = m.layout.sites("gauge"), m.layout.sites("matter")
        b2 = cx.boundary_matrix(2) % n
        out = []
        for p in range(cx.n_cells(2)):
            z = _column(b2, p, gs)
            z[ms[p]] = 1
            out.append(_string(n, z=z))
        return out
    raise AssertionError(m.model_id)


def commutes(op: WeylString | TwistedTerm, g: WeylString) -> bool:
    """Exact commutation test between a term and a Weyl-string symmetry."""
    if isinstance(op, WeylString):
        return commutation_phase(op, g) == 0
    # X part against the symmetry's Z content
    flips = WeylString(2, x={s: 1 for s in op.x_sites})
    if commutation_phase(flips, g) != 0:
        return False
    # the twist factor is invariant if every twist set is flipped an even number of times
    return all(sum(g.x.get(s, 0) for s in tw) % 2 == 0 for tw in op.twists)


def check_symmetries(m: ModelSpec) -> None:
    for t in m.terms:
        for g in m.symmetries:
            if not commutes(t.op, g):
                raise AssertionError(f"{m.model_id}: term {t.op!r} does not commute with {g!r}")


def hamiltonian(m: ModelSpec) -> list[tuple[float, WeylString | TwistedTerm]]:
    """``(coefficient, term)`` pairs with ``H = sum coefficient * term``."""
    return [(-t.weight, t.op) for t in m.terms]


# -- Trotterization --------------------------------------------------------


def trotter_schedule(m: ModelSpec, t: float, k: int, imaginary: bool = False) -> TrotterSchedule:
    """First-order product with ``k`` steps of size ``t / k``.

    In imaginary mode ``t`` is the imaginary time and each factor becomes
    ``exp(dt * w * A)``.
    """
    if int(k) != k or k < 1:
        raise ValueError(f"step count must be a positive integer, got {k}")
    dt = float(t) / int(k)
    step, labels = [], []
    for name, terms in m.groups:
        for term in terms:
            step.append((term.op, dt * term.weight))
            labels.append(name)
    return TrotterSchedule(tuple(step), int(k), float(t), imaginary, tuple(labels))


def evolve(
    state: StateVector,
    sched: TrotterSchedule,
    after_step: Callable[[StateVector, int], StateVector] | None = None,
) -> StateVector:
    """Apply every factor in order.  ``after_step`` runs after each Trotter step."""
    n_sites = max(
        (max(op.support) for op, _ in sched.step if op.support), default=-1
    )
    if n_sites >= state.n_sites:
        raise ValueError("schedule acts on sites outside the state's layout")
    out = state
    for step in range(sched.k):
        for op, theta in sched.step:
            if theta != 0:
                out = apply_term_exp(out, op, theta, sched.imaginary)
        if after_step is not None:
            out = after_step(out, step)
    return out


def evolve_model(state: StateVector, m: ModelSpec, sched: TrotterSchedule, **kw) -> StateVector:
    if state.layout != m.layout:
        raise ValueError(f"state layout {state.layout} does not match model {m.model_id!r}")
    return evolve(state, sched, **kw)


def evolve_imaginary(state: StateVector, m: ModelSpec, tau: float, k: int) -> StateVector:
    """Imaginary-time product formula, renormalized at the end."""
    out = evolve_model(state, m, trotter_schedule(m, tau, k, imaginary=True))
    if out.norm < 1e-300:
        raise ZeroDivisionError("imaginary-time evolution produced a vanishing state")
    return out.normalized()


def levin_gu_state(cx: CellComplex) -> StateVector:
    """Common +1 eigenstate of every ``O_v``, projected from ``|0...0>``.

    On some tori (3x3, for one) this state is odd under the global flip.
    """
    if cx.kind != "triangular":
        raise IncompatibleLattice("the Levin-Gu state lives on a triangular torus")
    layout = Layout((("v", cx.n_cells(0)),), 2)
    psi = StateVector.zeros(layout)
    for v in range(cx.n_cells(0)):
        o = apply_twisted(psi, twisted_site_term(cx, v))
        psi = StateVector(layout, 0.5 * (psi.amps + o.amps))
    return psi.normalized()
