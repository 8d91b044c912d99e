"""Periodic cell complexes with Z_N chains.

Three lattices are supported: a 1D cycle, a square torus, and a triangular
torus obtained by cutting every square of the square torus along its
(x, y) -> (x+1, y+1) diagonal.

Conventions
-----------
* Vertex ``(x, y)`` has index ``x + Lx * y``.
* Square torus edges: the x-edge at ``(x, y)`` joins ``(x+1, y)`` to
  ``(x, y)`` (oriented towards -x), the y-edge at ``(x, y)`` joins ``(x, y)``
  to ``(x, y+1)`` (oriented towards +y).  x-edges come first, then y-edges,
  then (triangular torus only) diagonal edges.
* Cycle edge ``j`` joins ``v_j`` to ``v_{j+1}``.
* ``boundary_matrix(i)[a, b]`` is the signed coefficient of cell ``a`` of
  grade ``i-1`` in the boundary of cell ``b`` of grade ``i``.

Dual cells are identified with primal cells of complementary grade, so the
dual boundary acting on dual chains is the transpose of the primal boundary
one grade up.  With that choice the intersection pairing is automatically
compatible with both boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINDS = ("cycle", "square", "triangular")


class IsolatedMonopole(ValueError):
    """Raised when outcome charges do not sum to zero mod N."""


@dataclass(frozen=True)
class Chain:
    """A Z_N chain indexed by the primal cells of ``grade``.

    ``dual=True`` marks a dual chain of dual grade ``d - grade``; its
    coefficients are still indexed by the primal cells it is identified with.
    """

    grade: int
    coeffs: np.ndarray
    modulus: int
    dual: bool = False

    def __post_init__(self):
        arr = np.mod(np.asarray(self.coeffs, dtype=np.int64), self.modulus)
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    def __add__(self, other: Chain) -> Chain:
        self._check_compatible(other)
        return Chain(self.grade, self.coeffs + other.coeffs, self.modulus, self.dual)

    def __sub__(self, other: Chain) -> Chain:
        self._check_compatible(other)
        return Chain(self.grade, self.coeffs - other.coeffs, self.modulus, self.dual)

    def __neg__(self) -> Chain:
        return Chain(self.grade, -self.coeffs, self.modulus, self.dual)

    def __mul__(self, k: int) -> Chain:
        return Chain(self.grade, self.coeffs * int(k), self.modulus, self.dual)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Chain):
            return NotImplemented
        return (
            self.grade == other.grade
            and self.modulus == other.modulus
            and self.dual == other.dual
            and np.array_equal(self.coeffs, other.coeffs)
        )

    def __hash__(self):
        return hash((self.grade, self.modulus, self.dual, self.coeffs.tobytes()))

    def _check_compatible(self, other: Chain) -> None:
        if (self.grade, self.modulus, self.dual, len(self.coeffs)) != (
            other.grade,
            other.modulus,
            other.dual,
            len(other.coeffs),
        ):
            raise ValueError("incompatible chains")

    def is_zero(self) -> bool:
        return not self.coeffs.any()

    def support(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.coeffs)]


@dataclass(frozen=True)
class CellComplex:
    kind: str
    extents: tuple[int, ...]
    modulus: int
    boundaries: tuple[np.ndarray, ...]
    edge_ends: np.ndarray  # (n1, 2): tail, head
    face_edges: tuple[tuple[int, ...], ...] = field(default=())

    @property
    def dim(self) -> int:
        return len(self.boundaries)

    def n_cells(self, grade: int) -> int:
        if grade == 0:
            return self.boundaries[0].shape[0]
        if 1 <= grade <= self.dim:
            return self.boundaries[grade - 1].shape[1]
        raise ValueError(f"grade {grade} out of range for a {self.dim}D complex")

    def boundary_matrix(self, grade: int) -> np.ndarray:
        """Signed incidence matrix of the boundary map from ``grade`` to ``grade - 1``."""
        if not 1 <= grade <= self.dim:
            raise ValueError(f"no boundary map out of grade {grade}")
        return self.boundaries[grade - 1]

    def coboundary_matrix(self, grade: int) -> np.ndarray:
        """Matrix sending primal-indexed ``grade`` chains to ``grade + 1`` (dual boundary)."""
        if not 0 <= grade < self.dim:
            raise ValueError(f"no dual boundary into grade {grade + 1}")
        return self.boundaries[grade].T

    def chain(self, grade: int, coeffs=None, dual: bool = False) -> Chain:
        n = self.n_cells(grade)
        if coeffs is None:
            coeffs = np.zeros(n, dtype=np.int64)
        coeffs = np.asarray(coeffs, dtype=np.int64)
        if coeffs.shape != (n,):
            raise ValueError(f"expected {n} coefficients for grade {grade}, got {coeffs.shape}")
        return Chain(grade, coeffs, self.modulus, dual)

    def cell(self, grade: int, index: int, coeff: int = 1, dual: bool = False) -> Chain:
        c = np.zeros(self.n_cells(grade), dtype=np.int64)
        c[index] = coeff
        return Chain(grade, c, self.modulus, dual)

    def incident_edges(self, vertex: int) -> list[int]:
        return [int(e) for e in np.flatnonzero(self.boundaries[0][vertex])]

    def faces_of_edge(self, edge: int) -> list[int]:
        if self.dim < 2:
            return []
        return [int(p) for p in np.flatnonzero(self.boundaries[1][edge])]

    def face_vertices(self, face: int) -> list[int]:
        verts: list[int] = []
        for e in self.face_edges[face]:
            for v in self.edge_ends[e]:
                if int(v) not in verts:
                    verts.append(int(v))
        return sorted(verts)

    def opposite_edges(self, vertex: int) -> list[int]:
        """Edges opposite ``vertex`` in every triangle that contains it."""
        if self.kind != "triangular":
            raise ValueError("opposite edges are only defined on triangular tori")
        out = []
        for f, edges in enumerate(self.face_edges):
            if vertex in self.face_vertices(f):
                opp = [e for e in edges if vertex not in self.edge_ends[e]]
                out.append(opp[0])
        return out

    def noncontractible_loop(self) -> Chain:
        """A closed 1-chain winding once around the x direction."""
        c = np.zeros(self.n_cells(1), dtype=np.int64)
        lx = self.extents[0]
        c[:lx] = 1  # x-edges in row 0, or every edge of a cycle
        loop = Chain(1, c, self.modulus)
        assert boundary(self, loop).is_zero()
        return loop


def build_complex(kind: str, sizes, modulus: int = 2) -> CellComplex:
    """Build a periodic complex.

    ``sizes`` is an int (cycle length, or side of a square lattice) or a tuple
    of per-axis extents.
    """
    if kind not in KINDS:
        raise ValueError(f"unsupported lattice kind {kind!r}")
    if modulus < 2:
        raise ValueError("modulus must be at least 2")
    if isinstance(sizes, int):
        sizes = (sizes,) if kind == "cycle" else (sizes, sizes)
    sizes = tuple(int(s) for s in sizes)
    if any(s < 2 for s in sizes):
        raise ValueError("every extent must be at least 2")
    if kind == "cycle":
        if len(sizes) != 1:
            raise ValueError("a cycle takes a single extent")
        return _cycle(sizes[0], modulus)
    if len(sizes) != 2:
        raise ValueError(f"{kind} torus takes two extents")
    if kind == "triangular" and modulus != 2:
        raise ValueError("the triangular torus is only supported for N = 2")
    return _torus(sizes[0], sizes[1], modulus, triangular=(kind == "triangular"))


def _cycle(n: int, modulus: int) -> CellComplex:
    b1 = np.zeros((n, n), dtype=np.int64)
    ends = np.zeros((n, 2), dtype=np.int64)
    for j in range(n):
        tail, head = j, (j + 1) % n
        b1[head, j] += 1
        b1[tail, j] -= 1
        ends[j] = tail, head
    return CellComplex("cycle", (n,), modulus, (b1,), ends)


def _torus(lx: int, ly: int, modulus: int, triangular: bool) -> CellComplex:
    nv = lx * ly

    def vid(x, y):
        return (x % lx) + lx * (y % ly)

    ends = []
    for y in range(ly):
        for x in range(lx):
            ends.append((vid(x + 1, y), vid(x, y)))
    for y in range(ly):
        for x in range(lx):
            ends.append((vid(x, y), vid(x, y + 1)))
    if triangular:
        for y in range(ly):
            for x in range(lx):
                ends.append((vid(x, y), vid(x + 1, y + 1)))
    ends = np.array(ends, dtype=np.int64)
    ne = len(ends)
    b1 = np.zeros((nv, ne), dtype=np.int64)
    for e, (tail, head) in enumerate(ends):
        b1[head, e] += 1
        b1[tail, e] -= 1

    def xe(x, y):
        return vid(x, y)

    def ye(x, y):
        return nv + vid(x, y)

    def de(x, y):
        return 2 * nv + vid(x, y)

    faces: list[dict[int, int]] = []
    for y in range(ly):
        for x in range(lx):
            if triangular:
                # lower-right: (x,y) -> (x+1,y) -> (x+1,y+1) -> (x,y)
                faces.append({xe(x, y): -1, ye(x + 1, y): +1, de(x, y): -1})
                # upper-left: (x,y) -> (x+1,y+1) -> (x,y+1) -> (x,y)
                faces.append({de(x, y): +1, xe(x, y + 1): +1, ye(x, y): -1})
            else:
                # counterclockwise around the square with lower-left corner (x, y)
                faces.append({xe(x, y): -1, ye(x + 1, y): +1, xe(x, y + 1): +1, ye(x, y): -1})
    b2 = np.zeros((ne, len(faces)), dtype=np.int64)
    for p, f in enumerate(faces):
        for e, sign in f.items():
            b2[e, p] += sign
    kind = "triangular" if triangular else "square"
    face_edges = tuple(tuple(sorted(f)) for f in faces)
    return CellComplex(kind, (lx, ly), modulus, (b1, b2), ends, face_edges)


def boundary(cx: CellComplex, c: Chain) -> Chain:
    """Primal boundary of a primal chain, or dual boundary of a dual chain."""
    if c.dual:
        return coboundary(cx, c)
    if not 1 <= c.grade <= cx.dim:
        raise ValueError(f"cannot take the boundary of a grade-{c.grade} chain")
    b = cx.boundary_matrix(c.grade)
    return Chain(c.grade - 1, b @ c.coeffs, cx.modulus)


def coboundary(cx: CellComplex, c: Chain) -> Chain:
    """Dual boundary: a chain on primal ``i``-cells goes to one on ``i+1``-cells."""
    if not 0 <= c.grade < cx.dim:
        raise ValueError(f"cannot take the dual boundary of a chain on grade-{c.grade} cells")
    m = cx.coboundary_matrix(c.grade)
    return Chain(c.grade + 1, m @ c.coeffs, cx.modulus, dual=True)


def intersection(cx: CellComplex, c: Chain, cstar: Chain) -> int:
    """Intersection number of a primal chain with a dual chain on the same cells."""
    if c.dual or not cstar.dual:
        raise ValueError("intersection pairs a primal chain with a dual chain")
    if c.grade != cstar.grade:
        raise ValueError(
            f"grade mismatch: primal grade {c.grade} vs dual grade {cx.dim - cstar.grade}"
        )
    return int(np.dot(c.coeffs, cstar.coeffs) % cx.modulus)


def _neighbors(cx: CellComplex) -> list[list[tuple[int, int]]]:
    nbrs: list[list[tuple[int, int]]] = [[] for _ in range(cx.n_cells(0))]
    for e, (tail, head) in enumerate(cx.edge_ends):
        nbrs[int(tail)].append((int(head), e))
        nbrs[int(head)].append((int(tail), e))
    return nbrs


def _bfs_path(cx, nbrs, start: int, targets: set[int]) -> tuple[int, list[tuple[int, int, int]]]:
    """Nearest target (lowest index among ties) and the edge path towards it."""
    parent: dict[int, tuple[int, int]] = {start: (-1, -1)}
    frontier = [start]
    found: list[int] = []
    while frontier and not found:
        nxt = []
        for v in frontier:
            for w, e in sorted(nbrs[v], key=lambda t: t[1]):
                if w not in parent:
                    parent[w] = (v, e)
                    nxt.append(w)
        found = sorted(w for w in nxt if w in targets)
        frontier = nxt
    if not found:
        raise IsolatedMonopole("no path to another charged vertex")
    goal = found[0]
    steps = []
    w = goal
    while w != start:
        v, e = parent[w]
        steps.append((v, w, e))
        w = v
    steps.reverse()
    return goal, steps


def pair_outcomes(cx: CellComplex, s: Chain, policy: str = "canonical") -> Chain:
    """Return a 1-chain whose boundary is the outcome 0-chain ``s``.

    The canonical policy repeatedly takes the lowest-index charged vertex and
    moves its whole charge along a BFS shortest path to the nearest other
    charged vertex.  For N = 2 this is greedy nearest-neighbour pairing.
    The alternate policy adds a non-contractible loop to the canonical chain.
    """
    if s.grade != 0 or s.dual:
        raise ValueError("outcomes must be a primal 0-chain")
    n = cx.modulus
    if int(s.coeffs.sum()) % n:
        raise IsolatedMonopole(f"outcome charges sum to {int(s.coeffs.sum()) % n} mod {n}")
    if policy not in ("canonical", "alternate"):
        raise ValueError(f"unknown pairing policy {policy!r}")
    b1 = cx.boundary_matrix(1)
    nbrs = _neighbors(cx)
    rho = np.zeros(cx.n_cells(1), dtype=np.int64)
    resid = s.coeffs.copy()
    while resid.any():
        charged = np.flatnonzero(resid)
        v = int(charged[0])
        goal, steps = _bfs_path(cx, nbrs, v, {int(w) for w in charged[1:]})
        q = int(resid[v])
        for a, _, e in steps:
            # each step a -> b must contribute a - b to the boundary
            rho[e] += q * b1[a, e]
        resid[v] = 0
        resid[goal] = (resid[goal] + q) % n
    out = Chain(1, rho, n)
    if policy == "alternate":
        out = out + cx.noncontractible_loop()
    return out
