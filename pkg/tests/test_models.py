from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp

from lgt_dual.complexes import build_complex
from lgt_dual.engine import (
    StateVector,
    apply_op,
    apply_term_exp,
    exact_evolve,
    expectation,
    hamiltonian_matrix,
    weyl_sparse,
)
from lgt_dual.models import (
    GAUGED,
    TABLE1,
    IncompatibleLattice,
    build_model,
    evolve,
    evolve_imaginary,
    evolve_model,
    gauge_generators,
    global_symmetries,
    hamiltonian,
    levin_gu_state,
    trotter_schedule,
    twisted_site_term,
)
from lgt_dual.weyl import WeylString

from conftest import GENERIC, random_state

# (model, lattice kind, size, N) small enough for sparse checks
SMALL = [
    ("tfi", "cycle", 4, 2),
    ("tfi", "square", 2, 2),
    ("gt", "square", 2, 2),
    ("gt", "cycle", 4, 2),
    ("zn_clock", "cycle", 3, 3),
    ("zn_gt", "square", 2, 3),
    ("ttfi", "triangular", 2, 2),
    ("tgt", "triangular", 2, 2),
    ("tl_ising", "cycle", 4, 2),
    ("gm", "cycle", 4, 2),
    ("qed", "cycle", 4, 2),
    ("sp", "square", 2, 2),
    ("fs", "square", 2, 2),
]


def model(name, kind, size, n, couplings=GENERIC):
    return build_model(name, build_complex(kind, size, n), couplings)


def test_table_has_six_rows():
    assert [r.map_id for r in TABLE1] == ["kw", "kw_tri", "kw_zn", "kw_gm", "jw", "fs"]
    assert {r.target for r in TABLE1} == set(GAUGED)


class TestTermCounts:
    def test_tfi_square(self):
        m = model("tfi", "square", 2, 2)
        assert [(n, len(t)) for n, t in m.groups] == [("zz", 8), ("x", 4)]

    def test_gt_square(self):
        m = model("gt", "square", 2, 2)
        assert [(n, len(t)) for n, t in m.groups] == [("z", 8), ("x_star", 4)]
        assert all(len(t.op.x) == 4 for t in dict(m.groups)["x_star"])

    def test_fs_square(self):
        m = model("fs", "square", 2, 2)
        sizes = {n: len(t) for n, t in m.groups}
        assert sizes == {"hop": 8, "matter": 4, "electric": 8, "star": 4}
        assert m.layout.registers == (("gauge", 8), ("matter", 4))

    def test_gm_and_qed_layouts(self):
        for name in ("gm", "qed"):
            m = model(name, "cycle", 4, 2)
            assert m.layout.registers == (("gauge", 4), ("matter", 4))

    def test_couplings_enter_weights(self):
        m = model("sp", "square", 2, 2, {"lambda": 2.0, "mu": 4.0})
        w = {n: t[0].weight for n, t in m.groups}
        assert w == {"x_edge": 0.5, "plaquette": 2.0, "z_edge": 0.25, "star": 4.0}


@pytest.mark.parametrize("name,kind,size,n", SMALL)
def test_symmetries_commute_with_hamiltonian(name, kind, size, n):
    m = model(name, kind, size, n)
    h = hamiltonian_matrix(hamiltonian(m), m.layout)
    syms = gauge_generators(m) if m.gauged else global_symmetries(m)
    if name in ("tfi", "zn_clock", "ttfi", "gt", "zn_gt", "gm", "qed", "fs"):
        assert syms
    for g in syms:
        gm = weyl_sparse(g, m.layout)
        comm = h @ gm - gm @ h
        assert abs(comm).max() < 1e-12 if comm.nnz else True


@pytest.mark.parametrize("name,kind,size,n", SMALL)
def test_hamiltonian_is_hermitian_where_expected(name, kind, size, n):
    m = model(name, kind, size, n)
    h = hamiltonian_matrix(hamiltonian(m), m.layout)
    if name == "tgt":
        # the twisted star terms are Hermitian on the flux-free sector only
        return
    assert abs(h - h.getH()).max() < 1e-12


@pytest.mark.parametrize("size,flip_sign", [(2, 1), ((2, 3), 1), (3, -1)])
def test_levin_gu_terms(size, flip_sign):
    cx = build_complex("triangular", size)
    n = cx.n_cells(0)
    mats = [twisted_site_term(cx, v).to_matrix(n) for v in range(n)]
    eye = np.eye(2**n)
    for a in mats:
        assert np.allclose(a, a.conj().T)
        assert np.allclose(a @ a, eye)
    for a in mats:
        for b in mats:
            assert np.allclose(a @ b, b @ a)
    psi = levin_gu_state(cx)
    for v in range(n):
        assert np.allclose(apply_op(psi, twisted_site_term(cx, v)).amps, psi.amps)
    flip = WeylString(2, x={v: 1 for v in range(n)})
    assert abs(expectation(psi, flip) - flip_sign) < 1e-12
    # equal-weight superposition of all configurations
    assert np.allclose(np.abs(psi.amps), 2 ** (-n / 2))


def test_levin_gu_needs_triangles():
    with pytest.raises(IncompatibleLattice):
        levin_gu_state(build_complex("square", 2))


def test_plaquette_generators_multiply_to_identity():
    for kind in ("square", "triangular"):
        m = model("gt" if kind == "square" else "tgt", kind, (3, 2), 2)
        prod = WeylString(2)
        for g in gauge_generators(m):
            prod = prod * g
        assert prod.is_identity()


class TestValidation:
    def test_incompatible_lattices(self):
        with pytest.raises(IncompatibleLattice):
            model("tl_ising", "square", 2, 2)
        with pytest.raises(IncompatibleLattice):
            model("tfi", "cycle", 3, 3)
        with pytest.raises(IncompatibleLattice):
            model("fs", "cycle", 4, 2)
        with pytest.raises(ValueError):
            model("potts", "cycle", 4, 2)

    def test_missing_coupling(self):
        with pytest.raises(ValueError, match="missing"):
            model("tl_ising", "cycle", 4, 2, {"g": 1.0})

    def test_inverted_coupling_must_be_nonzero(self):
        with pytest.raises(ValueError):
            model("fs", "square", 2, 2, {"lambda": 0.0, "mu": 1.0})
        model("tfi", "cycle", 4, 2, {"lambda": 0.0})

    def test_gauge_generators_need_gauge_model(self):
        with pytest.raises(ValueError):
            gauge_generators(model("tfi", "cycle", 4, 2))


class TestTrotter:
    def test_factor_order_single_step(self, rng):
        m = model("tfi", "cycle", 4, 2)
        sched = trotter_schedule(m, 0.3, 1)
        assert sched.labels == ("zz",) * 4 + ("x",) * 4
        psi = random_state(m.layout, rng)
        # written as prod_x exp(...) prod_zz exp(...): the ZZ layer acts first
        ref = psi
        for t in dict(m.groups)["zz"]:
            ref = apply_term_exp(ref, t.op, 0.3 * t.weight)
        for t in dict(m.groups)["x"]:
            ref = apply_term_exp(ref, t.op, 0.3 * t.weight)
        assert np.allclose(evolve(psi, sched).amps, ref.amps)

    def test_zero_time_is_identity(self, rng):
        for name, kind, size, n in SMALL:
            m = model(name, kind, size, n)
            sched = trotter_schedule(m, 0.0, 5)
            assert sched.is_identity
            psi = random_state(m.layout, rng)
            assert np.allclose(evolve_model(psi, m, sched).amps, psi.amps)

    def test_bad_step_count(self):
        m = model("tfi", "cycle", 4, 2)
        for k in (0, -1, 1.5):
            with pytest.raises(ValueError):
                trotter_schedule(m, 1.0, k)

    def test_layout_mismatch(self):
        m = model("tfi", "cycle", 4, 2)
        other = model("gt", "square", 2, 2)
        with pytest.raises(ValueError):
            evolve_model(StateVector.zeros(other.layout), m, trotter_schedule(m, 1, 1))

    def test_diagonal_when_field_vanishes(self):
        m = model("tfi", "cycle", 4, 2, {"lambda": 0.0})
        psi = StateVector.zeros(m.layout)
        out = evolve(psi, trotter_schedule(m, 0.8, 3))
        assert abs(abs(out.amps[0]) - 1) < 1e-12

    def test_first_order_convergence(self, rng):
        m = model("tfi", "cycle", 4, 2)
        psi = random_state(m.layout, rng)
        exact = exact_evolve(psi, hamiltonian(m), 1.0)
        errs = [np.linalg.norm(evolve(psi, trotter_schedule(m, 1.0, k)).amps - exact.amps)
                for k in (8, 16, 32)]
        assert 1.8 < errs[0] / errs[1] < 2.2 and 1.8 < errs[1] / errs[2] < 2.2

    def test_exact_matches_trotter_for_commuting_terms(self, rng):
        m = model("gt", "cycle", 4, 2, {"lambda": 0.0})
        psi = random_state(m.layout, rng)
        a = evolve(psi, trotter_schedule(m, 0.7, 1)).amps
        b = exact_evolve(psi, hamiltonian(m), 0.7).amps
        assert np.allclose(a, b)

    def test_unitary_schedules_preserve_norm(self, rng):
        for name, kind, size, n in SMALL:
            if name == "tgt":
                continue
            m = model(name, kind, size, n)
            psi = random_state(m.layout, rng)
            out = evolve(psi, trotter_schedule(m, 0.9, 3))
            assert abs(out.norm - 1) < 1e-12


def test_gauge_theory_stays_in_gauge_sector():
    m = model("gt", "square", 2, 2)
    psi = StateVector.zeros(m.layout)  # all Z = +1: every plaquette constraint holds
    out = evolve(psi, trotter_schedule(m, 1.1, 6))
    for g in gauge_generators(m):
        assert abs(expectation(out, g) - 1) < 1e-12


def test_imaginary_time_lowers_energy(rng):
    m = model("tfi", "cycle", 4, 2)
    h = hamiltonian_matrix(hamiltonian(m), m.layout).toarray()
    e0 = np.linalg.eigvalsh(h)[0]
    psi = StateVector.plus(m.layout)
    energies = []
    for tau in (0.25, 1.0, 4.0):
        out = evolve_imaginary(psi, m, tau, int(400 * tau))
        energies.append(np.real(np.vdot(out.amps, h @ out.amps)))
    assert energies[0] > energies[1] > energies[2] > e0 - 1e-9
    assert energies[2] - e0 < 1e-2


def test_qed_wrap_carries_minus_sign():
    m = model("qed", "cycle", 4, 2)
    hops = [t.op for t in dict(m.groups)["hop"]]
    # the wrap hopping acts on both end modes of the matter register
    ms = m.layout.sites("matter")
    wrap = [h for h in hops if ms[0] in h.support and ms[-1] in h.support and len(h.support) > 3]
    assert len(wrap) == 1
    assert all(h.is_hermitian() for h in hops)
    m_sparse = sp.csr_matrix(wrap[0].to_matrix(8))
    assert abs(m_sparse - m_sparse.getH()).max() < 1e-12


def test_levin_gu_is_the_twisted_ground_state():
    cx = build_complex("triangular", 2)
    m = build_model("ttfi", cx, {"g": 0.0})
    h = hamiltonian_matrix(hamiltonian(m), m.layout).toarray()
    w, v = np.linalg.eigh(h)
    assert w[1] - w[0] > 1e-6  # unique ground state
    assert abs(w[0] + cx.n_cells(0)) < 1e-10
    overlap = abs(np.vdot(v[:, 0], levin_gu_state(cx).amps))
    assert abs(overlap - 1) < 1e-12
