"""Term-condition centrality and commutators, delta relations by two routes,
the transitive term condition on complexes, and shift rotations.

Conventions (fixed package-wide): axis i of a matrix algebra carries the
i-th congruence of the tuple; lines along axis j at residual assignment all
ones form the pivot, the others are supporting; a binary delta relation is a
congruence on the pairs of its first congruence, whose members embed as
squares with those pairs lying along the carrier axis.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .algebra import FiniteAlgebra, SubAlgebraView, TupleSet, as_algebra, element_dtype
from .congruence import Partition, UnionFind, cg, is_congruence
from .cubes import (AxisLines, Complex, CubeLabeling, DEFAULT_COMPLEX_CAP,
                    assemble_cube, complexes_array, corner_columns,
                    extract_square, line_base_vertices, lines_for_axis,
                    matrix_algebra, other_axes, require_congruences,
                    square_pair_relation, square_vertex_map)
from .errors import InputError, ResourceLimitError
from .terms import DAY_VARS, DaySequence, check_day_sequence, term_function


@dataclass(frozen=True)
class CentralityReport:
    """Outcome of a term-condition check.

    witness is a violating matrix (or complex corner) whose supporting lines
    along the axis are all delta-related while the pivot line is not; it is
    present exactly when holds is False.  For bounded corner checks exhausted
    marks an enumeration that hit its cap, and note explains which path
    established the verdict.
    """

    holds: bool
    axis: int
    witness: CubeLabeling | None = None
    witness_pivot: tuple | None = None
    witness_dims: tuple | None = None
    bounded: bool = False
    exhausted: bool = False
    note: str = ""


def _line_cols(k: int, j: int):
    bases = line_base_vertices(k, j)
    return bases[:-1], bases[-1], 1 << j


def _supporting_pivot_masks(rows: np.ndarray, k: int, j: int, rel: np.ndarray):
    sup, piv, bit = _line_cols(k, j)
    ok = np.ones(rows.shape[0], dtype=bool)
    r = rows.astype(np.intp)
    for v in sup:
        ok &= rel[r[:, v], r[:, v | bit]]
    piv_ok = rel[r[:, piv], r[:, piv | bit]]
    return ok, piv_ok, piv, bit


def check_tc(alg: FiniteAlgebra, thetas, j: int, delta: Partition) -> CentralityReport:
    """Does the term condition hold at axis j modulo delta: for every matrix,
    if all supporting j-lines are delta-pairs then so is the pivot line."""
    thetas = require_congruences(alg, thetas)
    k = len(thetas)
    if not 2 <= k <= 3:
        raise InputError(f"term condition checks support arity 2 or 3, got {k}")
    if not 0 <= j < k:
        raise InputError(f"axis {j} out of range for arity {k}")
    require_congruences(alg, (delta,))
    MT = matrix_algebra(alg, thetas)
    sup_ok, piv_ok, piv, bit = _supporting_pivot_masks(
        MT.rows, k, j, delta.matrix())
    viol = np.flatnonzero(sup_ok & ~piv_ok)
    if viol.size == 0:
        return CentralityReport(holds=True, axis=j)
    row = MT.rows[int(viol[0])]
    cube = CubeLabeling(k, tuple(int(x) for x in row))
    return CentralityReport(holds=False, axis=j, witness=cube,
                            witness_pivot=(int(row[piv]), int(row[piv | bit])))


@functools.lru_cache(maxsize=None)
def _tc_commutator_cached(alg: FiniteAlgebra, thetas, j: int) -> Partition:
    MT = matrix_algebra(alg, thetas)
    k = len(thetas)
    rows = MT.rows.astype(np.intp)
    sup, piv, bit = _line_cols(k, j)
    delta = Partition.identity(alg.size)
    while True:
        rel = delta.matrix()
        ok = np.ones(rows.shape[0], dtype=bool)
        for v in sup:
            ok &= rel[rows[:, v], rows[:, v | bit]]
        a = rows[ok, piv]
        b = rows[ok, piv | bit]
        fresh = ~rel[a, b]
        if not fresh.any():
            return delta
        pairs = {(int(x), int(y)) for x, y in zip(a[fresh], b[fresh])}
        delta = cg(alg, sorted(pairs), seed=delta)


def tc_commutator(alg: FiniteAlgebra, thetas, j: int = 0) -> Partition:
    """The least delta satisfying the term condition at axis j: iterate
    harvesting pivot pairs of matrices whose supporting lines already lie in
    delta, then close delta off as a congruence, until stable."""
    thetas = require_congruences(alg, thetas)
    k = len(thetas)
    if not 2 <= k <= 3:
        raise InputError(f"commutators support arity 2 or 3, got {k}")
    if not 0 <= j < k:
        raise InputError(f"axis {j} out of range for arity {k}")
    return _tc_commutator_cached(alg, thetas, j)


def tc_commutator_all_axes(alg: FiniteAlgebra, thetas) -> list[Partition]:
    return [tc_commutator(alg, thetas, j) for j in range(len(thetas))]


def _pairs_within_classes(part: Partition):
    """(left, right) index arrays enumerating all ordered related pairs."""
    reps = part.np_rep()
    order = np.argsort(reps, kind="stable")
    sorted_reps = reps[order]
    boundaries = np.flatnonzero(np.diff(sorted_reps)) + 1
    starts = np.concatenate([[0], boundaries])
    stops = np.concatenate([boundaries, [len(reps)]])
    lefts, rights = [], []
    for s, t in zip(starts, stops):
        block = order[s:t]
        lefts.append(np.repeat(block, t - s))
        rights.append(np.tile(block, t - s))
    return np.concatenate(lefts), np.concatenate(rights)


def theta_pairs_view(alg: FiniteAlgebra, theta: Partition) -> SubAlgebraView:
    """The congruence theta as a subalgebra of A^2 (its related pairs)."""
    a, b = np.nonzero(theta.matrix())
    rows = np.stack([a, b], axis=1).astype(element_dtype(alg.size))
    return SubAlgebraView(alg, 2, TupleSet(2, alg.size, rows))


class DeltaRelation:
    """A delta relation, binary or ternary.

    Binary: a congruence (partition) on the pairs of theta_first, generated
    by the diagonal pairs of theta_second; members embed as squares.
    Ternary: a congruence on the squares of the binary delta of the first two
    congruences of the order, generated along the third axis; members embed
    as width-8 cubes under the fixed vertex encoding.
    """

    def __init__(self, algebra, thetas, carrier: TupleSet, partition: Partition,
                 route: str, order=None):
        self.algebra = algebra
        self.thetas = tuple(thetas)
        self.carrier = carrier
        self.partition = partition
        self.route = route
        self.order = tuple(order) if order is not None else None
        self.arity = "binary" if carrier.width == 2 else "ternary"
        self.gen_axis = None if self.order is None else self.order[2]
        self._members = None

    # -- binary ----------------------------------------------------------
    def contains_pair(self, p, q) -> bool:
        if self.arity != "binary":
            raise InputError("contains_pair applies to binary delta relations")
        try:
            i = self.carrier.index_of(p)
            k = self.carrier.index_of(q)
        except KeyError:
            return False
        return self.partition.related(i, k)

    def contains_square(self, square, carrier_axis: int = 0) -> bool:
        if self.arity != "binary":
            raise InputError("contains_square applies to binary delta relations")
        s = tuple(square)
        if carrier_axis == 0:
            p, q = (s[0], s[1]), (s[2], s[3])
        else:
            p, q = (s[0], s[2]), (s[1], s[3])
        return self.contains_pair(p, q)

    def square_set(self, carrier_axis: int = 0) -> TupleSet:
        """All member squares; the carrier pairs lie along carrier_axis and
        the generated pairing runs across the other axis."""
        if self.arity != "binary":
            raise InputError("square_set applies to binary delta relations")
        li, ri = _pairs_within_classes(self.partition)
        rows = self.carrier.rows
        p = rows[li]
        q = rows[ri]
        out = np.empty((len(li), 4), dtype=rows.dtype)
        if carrier_axis == 0:
            out[:, 0] = p[:, 0]
            out[:, 1] = p[:, 1]
            out[:, 2] = q[:, 0]
            out[:, 3] = q[:, 1]
        else:
            out[:, 0] = p[:, 0]
            out[:, 1] = q[:, 0]
            out[:, 2] = p[:, 1]
            out[:, 3] = q[:, 1]
        return TupleSet(4, self.carrier.universe_size, out)

    # -- ternary ---------------------------------------------------------
    def contains_cube(self, cube) -> bool:
        if self.arity != "ternary":
            raise InputError("contains_cube applies to ternary delta relations")
        cube = tuple(cube)
        s = extract_square(cube, self.gen_axis, 0)
        t = extract_square(cube, self.gen_axis, 1)
        try:
            i = self.carrier.index_of(s)
            k = self.carrier.index_of(t)
        except KeyError:
            return False
        return self.partition.related(i, k)

    def cube_set(self) -> TupleSet:
        if self.arity != "ternary":
            raise InputError("cube_set applies to ternary delta relations")
        if self._members is None:
            li, ri = _pairs_within_classes(self.partition)
            rows = self.carrier.rows
            s = rows[li]
            t = rows[ri]
            out = np.empty((len(li), 8), dtype=rows.dtype)
            for sv, (g0, g1) in enumerate(square_vertex_map(self.gen_axis)):
                out[:, g0] = s[:, sv]
                out[:, g1] = t[:, sv]
            self._members = TupleSet(8, self.carrier.universe_size, out)
        return self._members

    def __len__(self):
        reps = self.partition.np_rep()
        _, counts = np.unique(reps, return_counts=True)
        return int((counts.astype(np.int64) ** 2).sum())


@functools.lru_cache(maxsize=None)
def delta_binary(alg: FiniteAlgebra, theta0: Partition, theta1: Partition,
                 route: str = "generated") -> DeltaRelation:
    """The binary delta of (theta0, theta1): the congruence on the pairs of
    theta0 generated by the diagonal pairs of theta1.

    route "generated" runs congruence generation on the pair algebra; route
    "closure" takes the transitive closure of the matrices of (theta0,
    theta1) read as pairs of theta0-pairs across axis 1.  The two must agree.
    """
    require_congruences(alg, (theta0, theta1))
    view = theta_pairs_view(alg, theta0)
    carrier = view.universe
    if route == "generated":
        B = as_algebra(view)
        a, b = np.nonzero(theta1.matrix())
        gens = []
        for x, y in zip(a.tolist(), b.tolist()):
            if x < y:
                gens.append((carrier.index_of((x, x)), carrier.index_of((y, y))))
        part = cg(B, gens)
    elif route == "closure":
        MT = matrix_algebra(alg, (theta0, theta1))
        rows = MT.rows
        n = alg.size
        # faces across axis 1: bottom (v0, v1), top (v2, v3)
        bottom = carrier.indices_of_codes(_kernel.encode_rows(rows[:, [0, 1]], n))
        top = carrier.indices_of_codes(_kernel.encode_rows(rows[:, [2, 3]], n))
        uf = UnionFind(len(carrier))
        for x, y in zip(bottom.tolist(), top.tolist()):
            uf.union(x, y)
        part = uf.to_partition()
    else:
        raise InputError(f"unknown route {route!r}")
    return DeltaRelation(alg, (theta0, theta1), carrier, part, route)


def _square_carrier(alg: FiniteAlgebra, i: int, j: int, dij: DeltaRelation) -> TupleSet:
    """Embed the members of a binary delta on axes {i, j} as width-4 squares
    (rows/columns indexed by the two axes in increasing order)."""
    li, ri = _pairs_within_classes(dij.partition)
    rows = dij.carrier.rows
    p = rows[li]   # theta_i pairs, inner index = axis i coordinate
    q = rows[ri]
    out = np.empty((len(li), 4), dtype=rows.dtype)
    for v in range(4):
        if i < j:
            bi, bj = v & 1, (v >> 1) & 1
        else:
            bj, bi = v & 1, (v >> 1) & 1
        side = q if bj else p
        out[:, v] = side[:, bi]
    return TupleSet(4, alg.size, out)


@functools.lru_cache(maxsize=None)
def delta_ternary(alg: FiniteAlgebra, thetas, order=(0, 1, 2),
                  route: str = "generated") -> DeltaRelation:
    """The ternary delta of thetas, built in the given order (i, j, l): form
    the binary delta of (theta_i, theta_j), embed its members as squares on
    axes {i, j}, then generate along axis l.

    route "generated" runs congruence generation on the square algebra with
    the constant-face generators of theta_l; route "closure" takes the
    transitive closure of the one-step square pair relation of the matrices
    across axis l (extended reflexively to the full square carrier, whose
    squares are chain-connected faces).  The routes and all six orders must
    produce the same cube set.
    """
    thetas = require_congruences(alg, thetas)
    if len(thetas) != 3:
        raise InputError("ternary delta needs exactly three congruences")
    order = tuple(order)
    if sorted(order) != [0, 1, 2]:
        raise InputError(f"order must be a permutation of (0, 1, 2), got {order}")
    i, j, l = order
    n = alg.size

    lo, hi = min(i, j), max(i, j)
    if route == "generated":
        dij = delta_binary(alg, thetas[i], thetas[j])
        carrier = _square_carrier(alg, i, j, dij)
        view = SubAlgebraView(alg, 4, carrier)
        B4 = as_algebra(view)
        a, b = np.nonzero(thetas[l].matrix())
        gens = []
        for x, y in zip(a.tolist(), b.tolist()):
            if x < y:
                gens.append((carrier.index_of((x,) * 4), carrier.index_of((y,) * 4)))
        part = cg(B4, gens)
    elif route == "closure":
        # field: the chain closure of the matrices of the two remaining axes
        dfield = delta_binary(alg, thetas[lo], thetas[hi], route="closure")
        carrier = _square_carrier(alg, lo, hi, dfield)
        MT = matrix_algebra(alg, thetas)
        rel = square_pair_relation(MT, l)
        left = carrier.indices_of_codes(
            _kernel.encode_rows(rel.pairs.rows[:, :4], n))
        right = carrier.indices_of_codes(
            _kernel.encode_rows(rel.pairs.rows[:, 4:], n))
        uf = UnionFind(len(carrier))
        for x, y in zip(left.tolist(), right.tolist()):
            uf.union(x, y)
        part = uf.to_partition()
    else:
        raise InputError(f"unknown route {route!r}")
    return DeltaRelation(alg, thetas, carrier, part, route, order=order)


@dataclass(frozen=True)
class TernaryCommutatorReport:
    """commutator_via_delta outcome: the partition read off the delta
    relation, the pair sets of the four membership conditions, and whether
    they all agree (a disagreement would falsify the characterization)."""

    partition: Partition
    condition_pairs: dict
    agree: bool
    disagreement: str = ""


def _condition_pair_sets(cubes: np.ndarray):
    z = [cubes[:, v].astype(np.int64) for v in range(8)]
    conds = {}
    m2 = np.ones(len(cubes), dtype=bool)
    for v in range(1, 7):
        m2 &= z[v] == z[0]
    conds["near-constant"] = {(int(a), int(b)) for a, b in zip(z[0][m2], z[7][m2])}
    m3 = (z[0] == z[2]) & (z[1] == z[3]) & (z[4] == z[6])
    conds["column-witness"] = {(int(a), int(b)) for a, b in zip(z[5][m3], z[7][m3])}
    m4 = (z[0] == z[1]) & (z[2] == z[3]) & (z[6] == z[7])
    conds["row-witness"] = {(int(a), int(b)) for a, b in zip(z[5][m4], z[4][m4])}
    m5 = (z[0] == z[4]) & (z[1] == z[5]) & (z[2] == z[6])
    conds["top-vertex"] = {(int(a), int(b)) for a, b in zip(z[7][m5], z[3][m5])}
    return conds


def commutator_via_delta(alg: FiniteAlgebra, thetas,
                         order=(0, 1, 2)) -> TernaryCommutatorReport:
    """The ternary commutator read off the delta relation: pairs (x, y) whose
    near-constant cube (x everywhere except y at the all-ones vertex) is a
    member.  The three existential membership conditions are evaluated as
    well and any disagreement is reported rather than suppressed."""
    rel = delta_ternary(alg, thetas, order=order)
    cubes = rel.cube_set().rows
    conds = _condition_pair_sets(cubes)
    part = Partition.from_pairs(alg.size, sorted(conds["near-constant"]))
    part_pairs = set(part.pairs())
    agree = True
    why = ""
    for name, pairs in conds.items():
        if pairs != part_pairs:
            agree = False
            sym = pairs ^ part_pairs
            why = (f"condition {name!r} disagrees with the near-constant "
                   f"partition on pairs {sorted(sym)[:4]}")
            break
    return TernaryCommutatorReport(partition=part, condition_pairs=conds,
                                   agree=agree, disagreement=why)


def _relation_transitive(MT: TupleSet, axis: int) -> bool:
    """Is the one-step square pair relation across `axis` transitively closed?"""
    rel = square_pair_relation(MT, axis)
    n = MT.universe_size
    left = _kernel.encode_rows(rel.pairs.rows[:, :4], n)
    right = _kernel.encode_rows(rel.pairs.rows[:, 4:], n)
    nodes = np.unique(np.concatenate([left, right]))
    index = {int(c): k for k, c in enumerate(nodes)}
    uf = UnionFind(len(nodes))
    for a, b in zip(left.tolist(), right.tolist()):
        uf.union(index[a], index[b])
    class_sizes = {}
    for k in range(len(nodes)):
        r = uf.find(k)
        class_sizes[r] = class_sizes.get(r, 0) + 1
    expected = sum(s * s for s in class_sizes.values())
    distinct = len({(int(a), int(b)) for a, b in zip(left, right)})
    return distinct == expected


def check_ctr(alg: FiniteAlgebra, thetas, j: int, delta: Partition,
              bound=(3, 3, 3), complex_cap: int = DEFAULT_COMPLEX_CAP) -> CentralityReport:
    """Transitive term condition, evaluated on corners of complexes.

    Exact shortcuts first: a top delta holds trivially, and when the square
    pair relation of the matrices is transitively closed across every axis,
    corners of arbitrary complexes collapse axis by axis onto matrices, so
    the check reduces exactly to the ordinary term condition.  Otherwise the
    complexes with dimensions up to `bound` are enumerated (capped), and the
    corner condition is scanned; hitting the cap yields an exhausted verdict,
    not a failure.
    """
    thetas = require_congruences(alg, thetas)
    if len(thetas) != 3:
        raise InputError("the transitive term condition is ternary")
    if not 0 <= j < 3:
        raise InputError(f"axis {j} out of range")
    require_congruences(alg, (delta,))
    bound = tuple(int(b) for b in bound)
    if len(bound) != 3 or any(b < 2 for b in bound):
        raise InputError(f"bound must be three values >= 2, got {bound}")

    if delta.is_one():
        return CentralityReport(holds=True, axis=j, bounded=False,
                                note="top congruence: every line is a delta pair")

    MT = matrix_algebra(alg, thetas)
    if all(_relation_transitive(MT, a) for a in range(3)):
        base = check_tc(alg, thetas, j, delta)
        return CentralityReport(
            holds=base.holds, axis=j, witness=base.witness,
            witness_pivot=base.witness_pivot,
            witness_dims=(2, 2, 2) if not base.holds else None,
            bounded=False,
            note="corner collapse: chain relations are transitive on every "
                 "axis, so corners coincide with matrices")

    rel = delta.matrix()
    exhausted = False
    for dims in itertools.product(*(range(2, b + 1) for b in bound)):
        rows, ex = complexes_array(MT, dims, max_count=complex_cap)
        exhausted = exhausted or ex
        if rows.shape[0] == 0:
            continue
        corners = rows[:, corner_columns(dims)]
        sup_ok, piv_ok, piv, bit = _supporting_pivot_masks(corners, 3, j, rel)
        viol = np.flatnonzero(sup_ok & ~piv_ok)
        if viol.size:
            row = corners[int(viol[0])]
            cube = CubeLabeling(3, tuple(int(x) for x in row))
            return CentralityReport(
                holds=False, axis=j, witness=cube,
                witness_pivot=(int(row[piv]), int(row[piv | bit])),
                witness_dims=dims, bounded=True, exhausted=exhausted,
                note="witness corner found by bounded enumeration")
    return CentralityReport(holds=True, axis=j, bounded=True, exhausted=exhausted,
                            note="no witness among enumerated complexes"
                                 + (" (enumeration capped)" if exhausted else ""))


@functools.lru_cache(maxsize=None)
def _verified_day_sequence(alg: FiniteAlgebra, seq: DaySequence) -> bool:
    ok, _ = check_day_sequence(alg, seq)
    return ok


@functools.lru_cache(maxsize=None)
def _day_term_table(alg: FiniteAlgebra, term) -> np.ndarray:
    return term_function(alg, term, DAY_VARS)


def shift_rotation_minimal(alg: FiniteAlgebra, z: Complex, day: DaySequence,
                           e: int, j: int, l: int) -> Complex:
    """The shift rotation of a complex whose dimensions are 2 along axes j
    and l: each cross-section square (a b / c d rows along j, columns along
    l, origin bottom left) is replaced by

        m_e(c,c,a,a)  m_e(c,d,b,a)
        c             c

    The dimensions do not change.  Requires a verified Day sequence."""
    if j == l or not (0 <= j < 3 and 0 <= l < 3):
        raise InputError(f"axes must be distinct and in range, got j={j}, l={l}")
    if z.dims[j] != 2 or z.dims[l] != 2:
        raise InputError(f"complex must have dimension 2 along axes {j} and {l}, "
                         f"has dims {z.dims}")
    if not 0 <= e < len(day):
        raise InputError(f"Day term index {e} out of range 0..{len(day) - 1}")
    if not _verified_day_sequence(alg, day):
        raise InputError("the supplied sequence fails the Day identities")
    i = next(a for a in range(3) if a not in (j, l))
    tab = _day_term_table(alg, day.terms[e])
    n = alg.size

    def me(x, y, zz, u):
        return int(tab[((x * n + y) * n + zz) * n + u])

    def coord(jv, lv, iv):
        f = [0, 0, 0]
        f[j], f[l], f[i] = jv, lv, iv
        return tuple(f)

    out = {}
    for k in range(z.dims[i]):
        a = z.get(*coord(0, 0, k))
        b = z.get(*coord(0, 1, k))
        c = z.get(*coord(1, 0, k))
        d = z.get(*coord(1, 1, k))
        out[coord(0, 0, k)] = c
        out[coord(0, 1, k)] = c
        out[coord(1, 0, k)] = me(c, c, a, a)
        out[coord(1, 1, k)] = me(c, d, b, a)

    n0, n1, n2 = z.dims
    labels = [0] * (n0 * n1 * n2)
    for (f0, f1, f2), v in out.items():
        labels[(f0 * n1 + f1) * n2 + f2] = v
    return Complex(z.dims, labels)


@dataclass(frozen=True)
class InequalityReport:
    holds: bool
    left: Partition          # nested binary commutator
    right: Partition         # ternary commutator
    witness: tuple | None = None


def check_nested_inequality(alg: FiniteAlgebra, theta0, theta1, theta2,
                            j: int = 0) -> InequalityReport:
    """The nested binary commutator refines the ternary one:
    [[theta0, theta1], theta2] <= [theta0, theta1, theta2]."""
    inner = tc_commutator(alg, (theta0, theta1), j)
    left = tc_commutator(alg, (inner, theta2), j)
    right = tc_commutator(alg, (theta0, theta1, theta2), j)
    if left.refines(right):
        return InequalityReport(True, left, right)
    witness = next((a, b) for a in range(alg.size) for b in range(alg.size)
                   if left.related(a, b) and not right.related(a, b))
    return InequalityReport(False, left, right, witness)


def nested_delta_cubes(alg: FiniteAlgebra, thetas, order=(0, 1, 2)) -> TupleSet:
    """The iterated construction: the binary delta of the two binary deltas
    sharing the first congruence of the order, re-expressed as width-8 cubes.

    With order (i, j, l): both binary deltas of (theta_i, theta_j) and
    (theta_i, theta_l) are congruences on the pair algebra of theta_i; their
    own binary delta has members that are squares of pairs, i.e. cubes, with
    axis i the inner pair axis, axis j the first-level pairing and axis l the
    second-level pairing."""
    thetas = require_congruences(alg, thetas)
    order = tuple(order)
    i, j, l = order
    view = theta_pairs_view(alg, thetas[i])
    B = as_algebra(view)
    phi0 = delta_binary(alg, thetas[i], thetas[j]).partition
    phi1 = delta_binary(alg, thetas[i], thetas[l]).partition
    nested = delta_binary(B, phi0, phi1)
    # nested squares are over B's universe indices: vertex = gB0 + 2*gB1 with
    # gB0 the position inside a phi0 pair (axis j) and gB1 the pairing (axis l)
    sq = nested.square_set(carrier_axis=0)
    b_rows = view.universe.rows  # B element index -> theta_i pair
    out = np.empty((len(sq), 8), dtype=view.universe.rows.dtype)
    for g in range(8):
        bi = (g >> i) & 1
        bj = (g >> j) & 1
        bl = (g >> l) & 1
        out[:, g] = b_rows[sq.rows[:, bj + 2 * bl].astype(np.intp), bi]
    return TupleSet(8, alg.size, out)


@dataclass(frozen=True)
class NestedDeltaReport:
    holds: bool
    order: tuple
    direct_size: int
    nested_size: int
    witness: tuple | None = None


def check_nested_delta(alg: FiniteAlgebra, thetas, order=(0, 1, 2)) -> NestedDeltaReport:
    """Set equality of the ternary delta with the iterated binary-delta
    construction, as width-8 cube sets."""
    direct = delta_ternary(alg, tuple(thetas), order=tuple(order)).cube_set()
    nested = nested_delta_cubes(alg, thetas, order=tuple(order))
    if direct == nested:
        return NestedDeltaReport(True, tuple(order), len(direct), len(nested))
    for cube in direct:
        if cube not in nested:
            return NestedDeltaReport(False, tuple(order), len(direct), len(nested), cube)
    for cube in nested:
        if cube not in direct:
            return NestedDeltaReport(False, tuple(order), len(direct), len(nested), cube)
    return NestedDeltaReport(False, tuple(order), len(direct), len(nested))
