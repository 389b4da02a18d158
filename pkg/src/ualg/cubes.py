"""Hypercube-indexed relations: cube labelings, matrix algebras, complexes.

Vertex encoding is fixed globally: a vertex g of the k-cube (a map from axes
to {0,1}) is the integer sum g(i) << i, so bit i of the vertex index is the
coordinate on axis i.  Axis i of a matrix algebra M(theta_0, ..., theta_{k-1})
carries theta_i.  Squares extracted from cubes keep the remaining axes in
increasing order.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from . import _kernel
from .algebra import FiniteAlgebra, TupleSet, element_dtype, generate_subpower
from .congruence import Partition, is_congruence
from .errors import InputError, ResourceLimitError

DEFAULT_COMPLEX_CAP = 1_000_000


@dataclass(frozen=True)
class CubeLabeling:
    """A labeling of the k-cube's vertices, k in {1, 2, 3}."""

    dimension: int
    labels: tuple

    def __post_init__(self):
        k = self.dimension
        if not 1 <= k <= 3:
            raise InputError(f"cube dimension must be 1, 2 or 3, got {k}")
        if len(self.labels) != 1 << k:
            raise InputError(
                f"cube of dimension {k} needs {1 << k} labels, got {len(self.labels)}")

    def __getitem__(self, vertex: int) -> int:
        return self.labels[vertex]

    def literal(self) -> str:
        body = ",".join(str(x) for x in self.labels)
        if self.dimension == 3:
            return f"cube[{body}]"
        if self.dimension == 2:
            return f"sq[{body}]"
        return f"line[{body}]"


def cube_generator(k: int, i: int, a: int, b: int) -> CubeLabeling:
    """The cube whose axis-i faces are constant a (side 0) and b (side 1)."""
    if not 0 <= i < k:
        raise InputError(f"axis {i} out of range for dimension {k}")
    return CubeLabeling(k, tuple(b if (g >> i) & 1 else a for g in range(1 << k)))


def crsec(c: CubeLabeling, D, R) -> CubeLabeling:
    """Cross-section: restrict the axes in D to the values in R.

    D must be strictly increasing; the remaining axes keep their relative
    order in the lower-dimensional result.
    """
    D = tuple(D)
    R = tuple(R)
    k = c.dimension
    if len(D) != len(R):
        raise InputError("D and R must have the same length")
    if any(not 0 <= d < k for d in D) or list(D) != sorted(set(D)):
        raise InputError(f"D must be strictly increasing axes below {k}, got {D}")
    if any(v not in (0, 1) for v in R):
        raise InputError(f"R values must be 0 or 1, got {R}")
    rest = [i for i in range(k) if i not in D]
    if not rest:
        raise InputError("cross-section must keep at least one axis")
    fixed = 0
    for d, v in zip(D, R):
        fixed |= v << d
    labels = []
    for h in range(1 << len(rest)):
        g = fixed
        for pos, axis in enumerate(rest):
            g |= ((h >> pos) & 1) << axis
        labels.append(c.labels[g])
    return CubeLabeling(len(rest), tuple(labels))


def face(c: CubeLabeling, axis: int, side: int) -> CubeLabeling:
    return crsec(c, (axis,), (side,))


def line_base_vertices(k: int, j: int) -> list[int]:
    """Vertices with bit j == 0, ascending; the last one is the pivot base."""
    return [v for v in range(1 << k) if not (v >> j) & 1]


@dataclass(frozen=True)
class AxisLines:
    """The lines of a cube along one axis, split into supporting and pivot."""

    axis: int
    supporting: tuple  # ((lo_vertex, hi_vertex), (lo_label, hi_label)) triples
    pivot_vertices: tuple
    pivot: tuple

    @property
    def supporting_pairs(self):
        return tuple(p for _, p in self.supporting)


def lines_for_axis(c: CubeLabeling, j: int) -> AxisLines:
    k = c.dimension
    if not 0 <= j < k:
        raise InputError(f"axis {j} out of range for dimension {k}")
    bases = line_base_vertices(k, j)
    entries = []
    for v in bases:
        hi = v | (1 << j)
        entries.append(((v, hi), (c.labels[v], c.labels[hi])))
    return AxisLines(axis=j, supporting=tuple(entries[:-1]),
                     pivot_vertices=entries[-1][0], pivot=entries[-1][1])


def other_axes(l: int, k: int = 3) -> tuple[int, int]:
    a = [i for i in range(k) if i != l]
    return a[0], a[1]


def square_vertex_map(l: int) -> list[tuple[int, int]]:
    """For axis l of a 3-cube: [(cube vertex with bit l = 0, with bit l = 1)]
    listed in square-vertex order over the remaining axes ascending."""
    a0, a1 = other_axes(l)
    out = []
    for sv in range(4):
        g = ((sv & 1) << a0) | (((sv >> 1) & 1) << a1)
        out.append((g, g | (1 << l)))
    return out


def extract_square(cube_labels, l: int, side: int) -> tuple:
    m = square_vertex_map(l)
    return tuple(cube_labels[pair[side]] for pair in m)


def assemble_cube(s, t, l: int) -> tuple:
    """Cube with axis-l side-0 face s and side-1 face t (4-tuples each)."""
    m = square_vertex_map(l)
    out = [0] * 8
    for sv, (g0, g1) in enumerate(m):
        out[g0] = s[sv]
        out[g1] = t[sv]
    return tuple(out)


@functools.lru_cache(maxsize=None)
def _validated_congruence(alg: FiniteAlgebra, p: Partition) -> bool:
    ok, _ = is_congruence(alg, p)
    return ok


def require_congruences(alg: FiniteAlgebra, thetas) -> tuple[Partition, ...]:
    thetas = tuple(thetas)
    for p in thetas:
        if p.n != alg.size:
            raise InputError(f"partition on {p.n} elements does not fit algebra "
                             f"of size {alg.size}")
        if not _validated_congruence(alg, p):
            raise InputError(f"partition {p.block_string()!r} is not a congruence "
                             f"of {alg.name}")
    return thetas


def _generator_rows(alg: FiniteAlgebra, thetas) -> np.ndarray:
    """All cube generators: for each axis i every theta_i-related pair."""
    k = len(thetas)
    n = alg.size
    rows = []
    for i, theta in enumerate(thetas):
        rel = theta.matrix()
        a_idx, b_idx = np.nonzero(rel)
        block = np.empty((len(a_idx), 1 << k), dtype=element_dtype(n))
        for g in range(1 << k):
            block[:, g] = b_idx if (g >> i) & 1 else a_idx
        rows.append(block)
    return np.concatenate(rows) if rows else np.empty((0, 1 << k), dtype=element_dtype(n))


def _matrix_algebra_direct(alg: FiniteAlgebra, thetas, cap=None,
                           force_python=False) -> TupleSet:
    k = len(thetas)
    gens = _generator_rows(alg, thetas)
    return generate_subpower(alg, 1 << k, TupleSet(1 << k, alg.size, gens),
                             cap=cap, force_python=force_python)


@functools.lru_cache(maxsize=None)
def _matrix_algebra_canonical(alg: FiniteAlgebra, thetas, cap) -> TupleSet:
    return _matrix_algebra_direct(alg, thetas, cap=cap)


def matrix_algebra(alg: FiniteAlgebra, thetas, cap=None) -> TupleSet:
    """The algebra of T-matrices: the subpower of A^(2^k) generated by all
    axis cubes over the given congruences.

    Cached per algebra through the canonical (sorted) ordering of the tuple;
    a permuted ordering is answered by relabeling vertices, which is valid
    because permuting axes together with the congruence tuple maps matrix
    algebras onto each other.
    """
    thetas = require_congruences(alg, thetas)
    k = len(thetas)
    if not 1 <= k <= 3:
        raise InputError(f"matrix algebras support arity 1..3, got {k}")
    order = sorted(range(k), key=lambda i: thetas[i].sort_key())
    canonical = tuple(thetas[i] for i in order)
    from .algebra import closure_cap
    base = _matrix_algebra_canonical(alg, canonical, closure_cap(cap))
    if canonical == thetas:
        return base
    # result vertex g corresponds to canonical vertex h with bit a of h equal
    # to bit order[a] of g
    perm = np.empty(1 << k, dtype=np.intp)
    for g in range(1 << k):
        h = 0
        for a in range(k):
            h |= ((g >> order[a]) & 1) << a
        perm[g] = h
    return TupleSet(1 << k, alg.size, base.rows[:, perm])


@dataclass(frozen=True)
class SquareRelation:
    """Ordered pairs of squares obtained as the two axis-l faces of cubes."""

    axis: int
    universe_size: int
    pairs: TupleSet  # width 8: side-0 square followed by side-1 square

    def square_nodes(self) -> TupleSet:
        rows = np.concatenate([self.pairs.rows[:, :4], self.pairs.rows[:, 4:]])
        return TupleSet(4, self.universe_size, rows)

    def contains(self, s, t) -> bool:
        return tuple(s) + tuple(t) in self.pairs

    def __len__(self):
        return len(self.pairs)


def square_pair_relation(MT: TupleSet, l: int) -> SquareRelation:
    """One-step relation: faces of each matrix across axis l; compose
    transitively to recover the full chain relation."""
    if MT.width != 8:
        raise InputError("square pairs need a width-8 tuple set")
    if not 0 <= l < 3:
        raise InputError(f"axis {l} out of range")
    m = square_vertex_map(l)
    cols = [g0 for g0, _ in m] + [g1 for _, g1 in m]
    rel = SquareRelation(axis=l, universe_size=MT.universe_size,
                         pairs=TupleSet(8, MT.universe_size, MT.rows[:, cols]))
    _assert_reflexive_symmetric(rel)
    return rel


def _assert_reflexive_symmetric(rel: SquareRelation):
    left = _kernel.encode_rows(rel.pairs.rows[:, :4], rel.universe_size)
    right = _kernel.encode_rows(rel.pairs.rows[:, 4:], rel.universe_size)
    pair_codes = set(zip(left.tolist(), right.tolist()))
    for a, b in pair_codes:
        if (b, a) not in pair_codes:
            raise InputError("square pair relation is not symmetric")
        if (a, a) not in pair_codes or (b, b) not in pair_codes:
            raise InputError("square pair relation is not reflexive on its field")


class Complex:
    """An (n0 x n1 x n2)-array of elements; storage index (f0*n1 + f1)*n2 + f2."""

    __slots__ = ("dims", "labels", "_hash")

    def __init__(self, dims, labels):
        dims = tuple(int(d) for d in dims)
        if len(dims) != 3 or any(d < 2 for d in dims):
            raise InputError(f"complex dimensions must be three values >= 2, got {dims}")
        labels = tuple(int(x) for x in labels)
        if len(labels) != dims[0] * dims[1] * dims[2]:
            raise InputError(f"complex needs {dims[0] * dims[1] * dims[2]} labels, "
                             f"got {len(labels)}")
        self.dims = dims
        self.labels = labels
        self._hash = hash((dims, labels))

    @classmethod
    def from_array(cls, arr) -> "Complex":
        arr = np.asarray(arr)
        if arr.ndim != 3:
            raise InputError("complex array must be 3-dimensional")
        return cls(arr.shape, arr.reshape(-1))

    def get(self, f0: int, f1: int, f2: int) -> int:
        n0, n1, n2 = self.dims
        return self.labels[(f0 * n1 + f1) * n2 + f2]

    def to_array(self) -> np.ndarray:
        return np.array(self.labels).reshape(self.dims)

    def component(self, f) -> tuple:
        f0, f1, f2 = f
        return tuple(self.get(f0 + (g & 1), f1 + ((g >> 1) & 1), f2 + ((g >> 2) & 1))
                     for g in range(8))

    def component_offsets(self) -> Iterator[tuple[int, int, int]]:
        n0, n1, n2 = self.dims
        for f0 in range(n0 - 1):
            for f1 in range(n1 - 1):
                for f2 in range(n2 - 1):
                    yield (f0, f1, f2)

    def corner(self) -> CubeLabeling:
        n0, n1, n2 = self.dims
        labels = tuple(
            self.get((g & 1) * (n0 - 1), ((g >> 1) & 1) * (n1 - 1),
                     ((g >> 2) & 1) * (n2 - 1))
            for g in range(8))
        return CubeLabeling(3, labels)

    def __eq__(self, other):
        return (isinstance(other, Complex) and self.dims == other.dims
                and self.labels == other.labels)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Complex(dims={self.dims})"


def is_complex(c: Complex, MT: TupleSet):
    """(True, None) or (False, first failing offset in lexicographic order)."""
    for f in c.component_offsets():
        if c.component(f) not in MT:
            return False, f
    return True, None


def _cell_order(dims) -> list[tuple[int, int, int]]:
    """Deterministic cell traversal: increasing box shells, layers along
    axis 2 inside a shell.  Growing the filled box keeps every 2x2x2 block
    checkable as soon as its last cell is placed, which is what makes
    depth-first pruning effective."""
    n0, n1, n2 = dims
    cells = [(f0, f1, f2) for f2 in range(n2) for f0 in range(n0) for f1 in range(n1)]
    cells.sort(key=lambda f: (max(f), f[2], f[0], f[1]))
    return cells


def enumerate_complexes(alg: FiniteAlgebra, MT: TupleSet, dims,
                        max_count: int = DEFAULT_COMPLEX_CAP) -> Iterator[Complex]:
    """All complexes with the given dimensions whose 2x2x2 blocks are in MT.

    Depth-first extension layer-by-layer along axis 2, pruning as soon as a
    block completes; deterministic lexicographic order.  Raises
    ResourceLimitError after max_count complexes have been yielded.
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or any(d < 2 for d in dims):
        raise InputError(f"dims must be three values >= 2, got {dims}")
    n = alg.size
    n0, n1, n2 = dims
    order = _cell_order(dims)
    total = len(order)
    flat_of = {}
    for (f0, f1, f2) in order:
        flat_of[(f0, f1, f2)] = (f0 * n1 + f1) * n2 + f2
    assign = [0] * total
    values = {}
    produced = 0

    def blocks_ok(pos: int) -> bool:
        f0, f1, f2 = order[pos]
        if f0 == 0 or f1 == 0 or f2 == 0:
            return True
        base = (f0 - 1, f1 - 1, f2 - 1)
        block = tuple(values[(base[0] + (g & 1), base[1] + ((g >> 1) & 1),
                              base[2] + ((g >> 2) & 1))] for g in range(8))
        return block in MT

    def rec(pos: int):
        nonlocal produced
        if pos == total:
            labels = [0] * total
            for cell, v in values.items():
                labels[flat_of[cell]] = v
            produced += 1
            yield Complex(dims, labels)
            if produced >= max_count:
                raise ResourceLimitError(
                    f"complex enumeration exceeded cap of {max_count}",
                    limit=max_count, reached=produced)
            return
        cell = order[pos]
        for v in range(n):
            values[cell] = v
            if blocks_ok(pos):
                yield from rec(pos + 1)
        del values[cell]

    yield from rec(0)


def complexes_array(MT: TupleSet, dims, max_count: int = DEFAULT_COMPLEX_CAP,
                    partial_cap: int | None = None):
    """Vectorized enumeration: (rows, exhausted).

    rows has one complex per row with columns in storage order.  max_count
    bounds finished complexes; partial_cap (default 4 * max_count, at least
    4M) bounds working memory.  When either cap engages the enumeration is
    truncated lexicographically and exhausted is True.
    """
    dims = tuple(int(d) for d in dims)
    n = MT.universe_size
    order = _cell_order(dims)
    col_of = {cell: i for i, cell in enumerate(order)}
    rows = np.zeros((1, 0), dtype=element_dtype(n))
    exhausted = False
    if partial_cap is None:
        partial_cap = max(4 * max_count, 4_000_000)
    radix = np.array([n ** (7 - i) for i in range(8)], dtype=np.uint64)

    for pos, (f0, f1, f2) in enumerate(order):
        count = rows.shape[0]
        ext = np.repeat(rows, n, axis=0)
        newcol = np.tile(np.arange(n, dtype=element_dtype(n)), count)
        rows = np.concatenate([ext, newcol[:, None]], axis=1)
        if f0 >= 1 and f1 >= 1 and f2 >= 1:
            base = (f0 - 1, f1 - 1, f2 - 1)
            cols = [col_of[(base[0] + (g & 1), base[1] + ((g >> 1) & 1),
                            base[2] + ((g >> 2) & 1))] for g in range(8)]
            codes = np.zeros(rows.shape[0], dtype=np.uint64)
            for i, c in enumerate(cols):
                codes += rows[:, c].astype(np.uint64) * radix[i]
            rows = rows[MT.contains_codes(codes)]
        if rows.shape[0] > partial_cap:
            rows = rows[:partial_cap]
            exhausted = True
        if rows.shape[0] == 0:
            break
    if rows.shape[0] > max_count:
        rows = rows[:max_count]
        exhausted = True

    if rows.shape[0] and rows.shape[1]:
        # reorder columns from traversal order to storage order
        n0, n1, n2 = dims
        perm = np.empty(len(order), dtype=np.intp)
        for cell, col in col_of.items():
            f0, f1, f2 = cell
            perm[(f0 * n1 + f1) * n2 + f2] = col
        rows = rows[:, perm]
    return rows, exhausted


def corner_columns(dims) -> list[int]:
    """Storage columns of the 8 corner cells, in cube vertex order."""
    n0, n1, n2 = dims
    cols = []
    for g in range(8):
        f0 = (g & 1) * (n0 - 1)
        f1 = ((g >> 1) & 1) * (n1 - 1)
        f2 = ((g >> 2) & 1) * (n2 - 1)
        cols.append((f0 * n1 + f1) * n2 + f2)
    return cols
