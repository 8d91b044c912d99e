"""Measurement-assisted duality maps: entangle, measure in the X basis, correct.

Each map appends all-zero ancilla registers to the source state, applies a
constant-depth layer of controlled gates, and measures the source register.
The surviving registers carry the dual model up to a byproduct operator that
is fixed by the outcomes.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .complexes import CellComplex, Chain, IsolatedMonopole, boundary, pair_outcomes
from .engine import (
    ControlledGate,
    Layout,
    StateVector,
    apply_controlled,
    apply_weyl,
    basis_digits,
    outcome_digits,
    x_branches,
)
from .models import jw_hopping, jw_layout
from .weyl import WeylString, weyl_from_chain

MAP_IDS = ("kw", "kw_tri", "kw_zn", "kw_gm", "jw", "fs")
STRING_MAPS = ("kw", "kw_tri", "kw_zn")
MATTER_MAPS = ("kw_gm", "jw", "fs")

_SOURCE = {
    "kw": "tfi", "kw_tri": "ttfi", "kw_zn": "zn_clock",
    "kw_gm": "tl_ising", "jw": "tl_ising", "fs": "sp",
}
_TARGET = {"kw": "gt", "kw_tri": "tgt", "kw_zn": "zn_gt", "kw_gm": "gm", "jw": "qed", "fs": "fs"}
_LATTICES = {
    "kw": ("cycle", "square"),
    "kw_tri": ("triangular",),
    "kw_zn": ("cycle", "square"),
    "kw_gm": ("cycle",),
    "jw": ("cycle",),
    "fs": ("square",),
}


@dataclass(frozen=True)
class DualityMap:
    map_id: str
    complex: CellComplex
    source: str
    target: str
    measured: str
    measured_grade: int
    layout: Layout
    gates: tuple[ControlledGate, ...]

    @property
    def n_level(self) -> int:
        return self.complex.modulus

    @property
    def measured_sites(self) -> list[int]:
        return self.layout.sites(self.measured)

    @property
    def target_layout(self) -> Layout:
        return self.layout.without(self.measured)

    @property
    def string_type(self) -> bool:
        return self.map_id in STRING_MAPS

    @property
    def fermionic_registers(self) -> tuple[str, ...]:
        return ("matter",) if self.map_id == "jw" else ()


@dataclass
class DualityRun:
    """One measurement record.  ``state`` lives on the target layout, uncorrected."""

    map_id: str
    outcomes: Chain
    success: bool
    state: StateVector
    weight: float
    rho: Chain | None = None
    tau: Chain | None = None
    corrected: bool = False
    message: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def index(self) -> int:
        n = self.outcomes.modulus
        return int(sum(int(a) * n**j for j, a in enumerate(self.outcomes.coeffs)))


def _check_map(map_id: str, cx: CellComplex) -> None:
    if map_id not in MAP_IDS:
        raise ValueError(f"unknown map id {map_id!r}; expected one of {MAP_IDS}")
    if cx.kind not in _LATTICES[map_id]:
        raise ValueError(f"map {map_id!r} needs a {' or '.join(_LATTICES[map_id])} lattice")
    if map_id == "kw_zn":
        return
    if cx.modulus != 2:
        raise ValueError(f"map {map_id!r} is a qubit map; got N={cx.modulus}")


def ancilla_layout(map_id: str, cx: CellComplex) -> Layout:
    """Measured register first, then the all-zero ancilla registers."""
    _check_map(map_id, cx)
    n0, n1 = cx.n_cells(0), cx.n_cells(1)
    n = cx.modulus
    if map_id in STRING_MAPS:
        return Layout((("v", n0), ("e", n1)), n)
    if map_id in ("kw_gm", "jw"):
        return Layout((("v", n0), ("gauge", n0), ("matter", n1)), n)
    return Layout((("e", n1), ("gauge", n1), ("matter", cx.n_cells(2))), n)


def build_entangler(map_id: str, cx: CellComplex, layout: Layout) -> list[ControlledGate]:
    n = cx.modulus
    b1 = cx.boundary_matrix(1)
    gates: list[ControlledGate] = []
    if map_id in STRING_MAPS:
        vs, es = layout.sites("v"), layout.sites("e")
        for v in range(cx.n_cells(0)):
            for e in range(cx.n_cells(1)):
                p = int(b1[v, e]) % n
                if p:
                    gates.append(ControlledGate("cx", vs[v], es[e], p))
    elif map_id == "kw_gm":
        vs, gs, ms = layout.sites("v"), layout.sites("gauge"), layout.sites("matter")
        for v in range(cx.n_cells(0)):
            gates.append(ControlledGate("cx", vs[v], gs[v]))
            for e in cx.incident_edges(v):
                gates.append(ControlledGate("cx", vs[v], ms[e], int(b1[v, e]) % n))
    elif map_id == "jw":
        vs, gs, ms = layout.sites("v"), layout.sites("gauge"), layout.sites("matter")
        fl = jw_layout(cx, ms)
        for v in range(cx.n_cells(0)):
            # rightmost factor acts first: CX, then CS
            gates.append(ControlledGate("cx", vs[v], gs[v]))
            gates.append(ControlledGate("cs", vs[v], op=jw_hopping(cx, fl, v)))
    elif map_id == "fs":
        es, gs, ms = layout.sites("e"), layout.sites("gauge"), layout.sites("matter")
        b2 = cx.boundary_matrix(2)
        for e in range(cx.n_cells(1)):
            gates.append(ControlledGate("cx", es[e], gs[e]))
            for p in cx.faces_of_edge(e):
                gates.append(ControlledGate("cx", es[e], ms[p], int(b2[e, p]) % n))
    else:
        raise ValueError(f"unknown map id {map_id!r}")
    return gates


def build_map(map_id: str, cx: CellComplex) -> DualityMap:
    layout = ancilla_layout(map_id, cx)
    measured = "e" if map_id == "fs" else "v"
    gates = tuple(build_entangler(map_id, cx, layout))
    return DualityMap(
        map_id, cx, _SOURCE[map_id], _TARGET[map_id], measured,
        1 if map_id == "fs" else 0, layout, gates,
    )


def entangle(state: StateVector, dm: DualityMap) -> StateVector:
    """Append zeroed ancillas to a source-register state and apply the entangler."""
    src = dm.layout.size(dm.measured)
    if state.layout.n_sites != src or state.layout.n_level != dm.n_level:
        raise ValueError(
            f"map {dm.map_id!r} expects a {src}-site source state with N={dm.n_level}"
        )
    amps = np.zeros(dm.layout.dim, dtype=complex)
    amps[: state.layout.dim] = state.amps  # measured register holds the low digits
    out = StateVector(dm.layout, amps)
    for g in dm.gates:
        out = apply_controlled(out, g)
    return out


# -- byproducts ------------------------------------------------------------


def byproduct(dm: DualityMap, s: Chain, policy: str = "canonical") -> WeylString:
    """``O_bp`` on the target layout for outcome chain ``s``."""
    tl = dm.target_layout
    if dm.string_type:
        rho = pair_outcomes(dm.complex, s, policy)
        return weyl_from_chain("Z", rho, tl.sites("e"))
    return WeylString(dm.n_level, z={tl.site("gauge", i): int(a) for i, a in enumerate(s.coeffs)})


def counter(dm: DualityMap, s: Chain, policy: str = "canonical") -> WeylString:
    """Inverse of the byproduct built with the (possibly different) counter path."""
    return byproduct(dm, s, policy).inverse()


def outcome_chain(dm: DualityMap, digits: Sequence[int]) -> Chain:
    return dm.complex.chain(dm.measured_grade, np.asarray(digits, dtype=np.int64))


def is_neutral(dm: DualityMap, s: Chain) -> bool:
    if not dm.string_type:
        return True
    return int(s.coeffs.sum()) % dm.n_level == 0


# -- dualization -----------------------------------------------------------


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("LGT_DUAL_THREADS", "1")))
    except ValueError:
        return 1


def _make_run(dm: DualityMap, digits, amps: np.ndarray, weight: float) -> DualityRun:
    s = outcome_chain(dm, digits)
    ok = is_neutral(dm, s)
    run = DualityRun(dm.map_id, s, ok, StateVector(dm.target_layout, amps), weight)
    if not ok:
        run.message = f"IsolatedMonopole: outcome charges sum to {int(s.coeffs.sum()) % dm.n_level}"
    return run


def dualize(
    state: StateVector,
    dm: DualityMap,
    mode: str = "all-branches",
    *,
    seed: int | np.random.Generator | None = None,
    outcomes: Sequence[int] | None = None,
    min_weight: float = 0.0,
) -> DualityRun | list[DualityRun]:
    """Entangle and measure the source register.

    ``sample`` draws one Born-rule outcome (state renormalized to the input
    norm), ``branch`` projects onto ``outcomes`` (unnormalized), and
    ``all-branches`` returns every branch in outcome-index order (unnormalized).
    """
    ent = entangle(state, dm)
    sites = dm.measured_sites
    n = dm.n_level
    branches, _ = x_branches(ent, sites)
    if mode == "branch":
        if outcomes is None or len(outcomes) != len(sites):
            raise ValueError("branch mode needs one outcome per measured site")
        r = int(sum(int(a) * n**j for j, a in enumerate(outcomes)))
        amps = branches[r].copy()
        return _make_run(dm, outcomes, amps, float(np.linalg.norm(amps)))
    if mode == "sample":
        rng = np.random.default_rng(seed)
        probs = np.sum(np.abs(branches) ** 2, axis=1)
        total = probs.sum()
        if total <= 0:
            raise ZeroDivisionError("cannot measure a zero-norm state")
        r = int(rng.choice(len(probs), p=probs / total))
        w = float(np.sqrt(probs[r]))
        amps = branches[r] * (np.sqrt(total) / w)
        return _make_run(dm, outcome_digits(r, len(sites), n), amps, w)
    if mode == "all-branches":
        weights = np.sqrt(np.sum(np.abs(branches) ** 2, axis=1))
        idx = [r for r in range(len(weights)) if weights[r] > min_weight]

        def one(r):
            return _make_run(dm, outcome_digits(r, len(sites), n), branches[r].copy(), float(weights[r]))

        workers = _thread_count()
        if workers > 1 and len(idx) > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                return list(ex.map(one, idx))
        return [one(r) for r in idx]
    raise ValueError(f"unknown dualize mode {mode!r}")


def correct(run: DualityRun, dm: DualityMap, policy: str = "canonical") -> StateVector:
    """Apply the counter operator; records the byproduct and counter chains on ``run``."""
    if not run.success:
        raise IsolatedMonopole(f"cannot correct an unsuccessful run: {run.message}")
    if dm.string_type:
        run.rho = pair_outcomes(dm.complex, run.outcomes, "canonical")
        run.tau = pair_outcomes(dm.complex, run.outcomes, policy)
        loop = run.rho - run.tau
        if not boundary(dm.complex, loop).is_zero():
            raise AssertionError("byproduct and counter paths do not form a closed loop")
    post = apply_weyl(run.state, counter(dm, run.outcomes, policy))
    run.state = post
    run.corrected = True
    return post


def prefactor(dm: DualityMap) -> float:
    """Analytic branch amplitude factor ``N**(-m/2)`` for ``m`` measured sites."""
    return float(dm.n_level ** (-len(dm.measured_sites) / 2))


# -- gauged inputs ---------------------------------------------------------


def gauged_state(state: StateVector, dm: DualityMap) -> StateVector:
    """Image of ``sum_c C(c)|c>`` under the basis map of ``dm`` (unnormalized).

    String maps: ``|c> -> |d*c>``.  Matter maps: ``|c> -> |c, d*c>``, with the
    Jordan-Wigner fermion string applied to the matter register for ``jw``.
    """
    cx, n = dm.complex, dm.n_level
    src_sites = state.layout.n_sites
    digits = (np.arange(state.layout.dim)[:, None] // n ** np.arange(src_sites)[None, :]) % n
    tl = dm.target_layout
    place = n ** np.arange(tl.n_sites)
    out = np.zeros(tl.dim, dtype=complex)
    if dm.string_type:
        img = (digits @ cx.coboundary_matrix(0).T) % n
        idx = img @ place
        np.add.at(out, idx, state.amps)
        return StateVector(tl, out)
    cob = cx.coboundary_matrix(dm.measured_grade).T
    img = (digits @ cob) % n
    gauge_off, matter_off = tl.offset("gauge"), tl.offset("matter")
    if dm.map_id != "jw":
        full = np.zeros((len(digits), tl.n_sites), dtype=np.int64)
        full[:, gauge_off : gauge_off + digits.shape[1]] = digits
        full[:, matter_off : matter_off + img.shape[1]] = img
        np.add.at(out, full @ place, state.amps)
        return StateVector(tl, out)
    fl = jw_layout(cx, tl.sites("matter"))
    hops = [jw_hopping(cx, fl, v) for v in range(cx.n_cells(0))]
    for row, c in enumerate(digits):
        amp = state.amps[row]
        if amp == 0:
            continue
        f = WeylString(2)
        for v in np.flatnonzero(c):
            f = f * hops[v]
        bits = np.zeros(tl.n_sites, dtype=np.int64)
        bits[gauge_off : gauge_off + len(c)] = c
        for site, p in f.x.items():
            bits[site] = p
        # F|0> = phase * |x-part>, since Z acts trivially on |0>
        out[int(bits @ place)] += amp * f.phase_factor()
    return StateVector(tl, out)


# -- replacement identities ------------------------------------------------


def replacement_residuals(dm: DualityMap, lam: np.ndarray, state: StateVector) -> list[float]:
    """Check that bold Z operators can be traded for target-register Z operators.

    ``lam`` selects which conjugated X clusters form the operator ``XX``
    (one entry per source-register site).  Each residual is
    ``||Z_source(.) XX |phi> - Z_target(.) XX |phi>||`` with
    ``|phi> = U (state ⊗ |0>)`` on the full layout.

    The entanglers checked here are CX circuits, i.e. basis permutations, so
    ``XX |phi>`` is supported on at most ``state.layout.dim`` basis states and
    is evaluated on that support only.
    """
    cx, n = dm.complex, dm.n_level
    if any(g.kind != "cx" for g in dm.gates):
        raise ValueError(f"no replacement identity for map {dm.map_id!r}")
    lay = dm.layout
    src = lay.sites(dm.measured)
    if state.layout.n_sites != len(src) or state.layout.n_level != n:
        raise ValueError(f"map {dm.map_id!r} expects a {len(src)}-site source state")
    # basis digits of U(|c> ⊗ |0>) for every source configuration c
    digits = np.zeros((state.layout.dim, lay.n_sites), dtype=np.int64)
    digits[:, src] = basis_digits(state.layout)
    for g in dm.gates:
        digits[:, g.target] = (digits[:, g.target] + g.power * digits[:, g.control]) % n
    # XX = prod (U X_src U^dagger)^lam, built directly from the entangler pattern
    for i, a in enumerate(lam):
        if not a:
            continue
        digits[:, src[i]] += int(a)
        for g in dm.gates:
            if g.control == src[i]:
                digits[:, g.target] += int(a) * g.power
    digits %= n
    prob = np.abs(state.amps) ** 2
    pairs: list[tuple[WeylString, WeylString]] = []
    b1 = cx.boundary_matrix(1)
    if dm.map_id in STRING_MAPS:
        es = lay.sites("e")
        for e in range(cx.n_cells(1)):
            bold = WeylString(n, z={src[v]: int(b1[v, e]) for v in range(cx.n_cells(0)) if b1[v, e]})
            pairs.append((bold, WeylString(n, z={es[e]: 1})))
    elif dm.map_id == "kw_gm":
        gs, ms = lay.sites("gauge"), lay.sites("matter")
        for v in range(cx.n_cells(0)):
            pairs.append((WeylString(n, z={src[v]: 1}), WeylString(n, z={gs[v]: 1})))
        for e in range(cx.n_cells(1)):
            bold = WeylString(n, z={src[v]: int(b1[v, e]) for v in range(cx.n_cells(0)) if b1[v, e]})
            pairs.append((bold, WeylString(n, z={ms[e]: 1})))
    elif dm.map_id == "fs":
        gs, ms = lay.sites("gauge"), lay.sites("matter")
        b2 = cx.boundary_matrix(2)
        for e in range(cx.n_cells(1)):
            pairs.append((WeylString(n, z={src[e]: 1}), WeylString(n, z={gs[e]: 1})))
        for p in range(cx.n_cells(2)):
            bold = WeylString(n, z={src[e]: int(b2[e, p]) for e in range(cx.n_cells(1)) if b2[e, p]})
            pairs.append((bold, WeylString(n, z={ms[p]: 1})))
    else:
        raise ValueError(f"no replacement identity for map {dm.map_id!r}")
    # (Z_a - Z_b)|x> has the norm of (Z_a Z_b^-1 - 1)|x>, a diagonal operator
    out = []
    for a, b in pairs:
        d = a * b.inverse()
        sites = list(d.z)
        power = digits[:, sites] @ np.array([d.z[k] for k in sites]) if sites else 0
        gap = np.abs(d.phase_factor() * np.exp(2j * np.pi * (np.asarray(power) % n) / n) - 1) ** 2
        out.append(float(np.sqrt(np.sum(prob * gap))))
    return out
