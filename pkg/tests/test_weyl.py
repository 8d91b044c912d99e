from __future__ import annotations

import itertools
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lgt_dual.complexes import build_complex
from lgt_dual.weyl import (
    FermionLayout,
    WeylString,
    commutation_phase,
    jw_encode,
    weyl_from_chain,
)

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0 + 0j, -1.0])


def kron_sites(mats: dict[int, np.ndarray], n_sites: int, d: int = 2) -> np.ndarray:
    """Kronecker product with site j as base-d digit j (site 0 rightmost)."""
    return reduce(np.kron, [mats.get(j, np.eye(d)) for j in reversed(range(n_sites))])


def oracle_matrix(op: WeylString, n_sites: int) -> np.ndarray:
    """Build the matrix element by element from the basis action."""
    n = op.n_level
    dim = n**n_sites
    out = np.zeros((dim, dim), dtype=complex)
    zeta = np.exp(1j * np.pi / n)
    for a in range(dim):
        digits = [(a // n**j) % n for j in range(n_sites)]
        ph = sum(op.z.get(j, 0) * digits[j] for j in range(n_sites))
        b_digits = [(digits[j] + op.x.get(j, 0)) % n for j in range(n_sites)]
        b = sum(v * n**j for j, v in enumerate(b_digits))
        out[b, a] += zeta ** (op.phase + 2 * ph)
    return out


def random_string(rng, n, n_sites, hermitize=False):
    return WeylString(
        n,
        {j: int(rng.integers(n)) for j in range(n_sites)},
        {j: int(rng.integers(n)) for j in range(n_sites)},
        int(rng.integers(2 * n)),
        hermitize,
    )


class TestSingleSite:
    def test_pauli_matrices(self):
        assert np.allclose(WeylString.single(2, 0, "X").to_matrix(1), X)
        assert np.allclose(WeylString.single(2, 0, "Z").to_matrix(1), Z)
        assert np.allclose(WeylString.single(2, 0, "Y").to_matrix(1), Y)

    def test_clock_and_shift(self):
        w = np.exp(2j * np.pi / 3)
        zm = WeylString.single(3, 0, "Z").to_matrix(1)
        xm = WeylString.single(3, 0, "X").to_matrix(1)
        assert np.allclose(np.diag(zm), [1, w, w * w])
        assert np.allclose(xm @ np.eye(3)[:, 2], np.eye(3)[:, 0])
        assert np.allclose(zm @ xm, w * xm @ zm)

    def test_y_only_for_qubits(self):
        with pytest.raises(ValueError):
            WeylString.single(3, 0, "Y")
        with pytest.raises(ValueError):
            WeylString.single(2, 0, "W")


@pytest.mark.parametrize("n_sites", [1, 2, 3, 4, 5, 6])
def test_kron_exhaustive_one_and_two_site_strings(n_sites):
    paulis = {"X": X, "Y": Y, "Z": Z}
    for j in range(n_sites):
        for a in paulis:
            op = WeylString.single(2, j, a)
            assert np.allclose(op.to_matrix(n_sites), kron_sites({j: paulis[a]}, n_sites))
    for j, k in itertools.combinations(range(n_sites), 2):
        for a, b in itertools.product(paulis, repeat=2):
            op = WeylString.single(2, j, a) * WeylString.single(2, k, b)
            ref = kron_sites({j: paulis[a], k: paulis[b]}, n_sites)
            assert np.allclose(op.to_matrix(n_sites), ref)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_to_matrix_matches_basis_action(n):
    rng = np.random.default_rng(n)
    for _ in range(50):
        op = random_string(rng, n, 3)
        assert np.allclose(op.to_matrix(3), oracle_matrix(op, 3))


@pytest.mark.parametrize("n", [2, 3])
def test_closure_random_pairs(n):
    rng = np.random.default_rng(11 + n)
    n_sites = 3
    mats = {}
    for _ in range(10_000):
        p = random_string(rng, n, n_sites)
        q = random_string(rng, n, n_sites)
        key = lambda s: (tuple(s.x.items()), tuple(s.z.items()), s.phase)  # noqa: E731
        for s in (p, q):
            if key(s) not in mats:
                mats[key(s)] = s.to_matrix(n_sites)
        pq = (p * q).to_matrix(n_sites)
        assert np.allclose(pq, mats[key(p)] @ mats[key(q)], atol=1e-12)
        k = commutation_phase(p, q)
        assert np.allclose(pq, np.exp(2j * np.pi * k / n) * (q * p).to_matrix(n_sites), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 5), st.data())
def test_inverse_and_power(n, data):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
    p = random_string(rng, n, 2)
    assert (p * p.inverse()).is_identity()
    m = p.to_matrix(2)
    assert np.allclose(p.dagger().to_matrix(2), m.conj().T)
    k = data.draw(st.integers(-3, 3))
    assert np.allclose((p**k).to_matrix(2), np.linalg.matrix_power(m, k) if k >= 0
                       else np.linalg.matrix_power(np.linalg.inv(m), -k))
    assert (p**n).x == {} and (p**n).z == {}


def test_hermiticity_flags():
    assert WeylString.single(2, 0, "Y").is_hermitian()
    assert not WeylString.single(3, 0, "Z").is_hermitian()
    xz = WeylString(2, {0: 1}, {0: 1})
    assert not xz.is_hermitian()


def test_multiplying_different_levels_fails():
    with pytest.raises(ValueError):
        WeylString.single(2, 0, "X") * WeylString.single(3, 0, "X")
    with pytest.raises(ValueError):
        commutation_phase(WeylString.single(2, 0, "X"), WeylString.single(3, 0, "X"))


def test_weyl_from_chain():
    cx = build_complex("square", 2, 3)
    c = cx.chain(1, [1, 0, 2, 0, 0, 0, 0, 1])
    op = weyl_from_chain("Z", c, range(10, 18))
    assert op.z == {10: 1, 12: 2, 17: 1} and not op.x
    assert weyl_from_chain("X", c, range(8)).x == {0: 1, 2: 2, 7: 1}
    with pytest.raises(ValueError):
        weyl_from_chain("Z", c, range(4))
    with pytest.raises(ValueError):
        weyl_from_chain("Y", c, range(8))


# -- Jordan-Wigner -----------------------------------------------------------


def dense_majoranas(n_modes: int):
    chi, chip = [], []
    for j in range(n_modes):
        zs = {k: Z for k in range(j)}
        chi.append(kron_sites({**zs, j: X}, n_modes))
        chip.append(kron_sites({**zs, j: Y}, n_modes))
    return chi, chip


@pytest.mark.parametrize("n_modes", [1, 2, 3, 4])
def test_majorana_algebra(n_modes):
    lay = FermionLayout(tuple(range(n_modes)))
    ops = [lay.majorana(j).to_matrix(n_modes) for j in range(n_modes)]
    ops += [lay.majorana(j, True).to_matrix(n_modes) for j in range(n_modes)]
    chi, chip = dense_majoranas(n_modes)
    assert all(np.allclose(a, b) for a, b in zip(ops, chi + chip))
    eye = np.eye(2**n_modes)
    for i, a in enumerate(ops):
        for j, b in enumerate(ops):
            assert np.allclose(a @ b + b @ a, 2 * eye * (i == j))


def test_parity_is_z():
    lay = FermionLayout((0, 1, 2, 3))
    for j in range(4):
        assert jw_encode(lay, "P", j).same_operator(WeylString.single(2, j, "Z"))


def test_interior_hopping_is_xx():
    lay = FermionLayout((0, 1, 2, 3))
    for j in range(1, 4):
        s = jw_encode(lay, "S", (j - 1, j))
        ref = WeylString.single(2, j - 1, "X") * WeylString.single(2, j, "X")
        assert s.same_operator(ref)


@pytest.mark.parametrize("n_modes", [2, 3, 4])
def test_wrap_hopping_sign(n_modes):
    # -i chi'_{L-1} chi_0 evaluated from explicit matrices
    chi, chip = dense_majoranas(n_modes)
    dense = -1j * chip[-1] @ chi[0]
    lay = FermionLayout(tuple(range(n_modes)))
    s = jw_encode(lay, "S", (n_modes - 1, 0))
    assert np.allclose(s.to_matrix(n_modes), dense)
    yzzy = kron_sites({0: Y, **{k: Z for k in range(1, n_modes - 1)}, n_modes - 1: Y}, n_modes)
    assert np.allclose(dense, yzzy)
    assert lay.is_wrap((n_modes - 1, 0)) and lay.hopping_sign((n_modes - 1, 0)) == -1
    assert lay.hopping_sign((0, 1)) == 1


def test_fermion_layout_validation():
    with pytest.raises(ValueError):
        FermionLayout((0, 1), q=2)
    with pytest.raises(ValueError):
        FermionLayout((0, 1)).majorana(2)
    with pytest.raises(ValueError):
        jw_encode(FermionLayout((0, 1)), "Q", 0)


def test_bilinears_are_hermitian_and_even():
    lay = FermionLayout((3, 1, 4, 0, 2))
    total_parity = WeylString(2, z={s: 1 for s in lay.sites})
    for j in range(5):
        assert jw_encode(lay, "P", j).is_hermitian()
    for j in range(5):
        s = jw_encode(lay, "S", ((j - 1) % 5, j))
        assert s.is_hermitian()
        assert commutation_phase(s, total_parity) == 0
