"""Partitions as congruences: generation, lattice operations, modularity.

A Partition is stored by its canonical representative map (every element maps
to the least element of its block), so equality of partitions is equality of
the induced equivalence relations regardless of how they were built.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable

import numpy as np

from .algebra import FiniteAlgebra
from .errors import InputError, ResourceLimitError

DEFAULT_LATTICE_CAP = 100_000


class UnionFind:
    __slots__ = ("parent", "size")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, i: int) -> int:
        parent = self.parent
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    def union(self, i: int, j: int) -> bool:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        if self.size[ri] < self.size[rj]:
            ri, rj = rj, ri
        self.parent[rj] = ri
        self.size[ri] += self.size[rj]
        return True

    def to_partition(self) -> "Partition":
        n = len(self.parent)
        rep = [0] * n
        seen: dict[int, int] = {}
        for x in range(n):
            r = self.find(x)
            if r not in seen:
                seen[r] = x
            rep[x] = seen[r]
        return Partition(n, rep)


class Partition:
    """An equivalence relation on {0, ..., n-1}."""

    __slots__ = ("n", "rep", "_hash", "_np_rep", "_matrix")

    def __init__(self, n: int, rep):
        if n < 1:
            raise InputError(f"partition universe must be >= 1, got {n}")
        rep = tuple(int(r) for r in rep)
        if len(rep) != n:
            raise InputError(f"representative map has {len(rep)} entries, expected {n}")
        for x, r in enumerate(rep):
            if not 0 <= r < n or rep[r] != r or r > x:
                raise InputError(f"bad representative map at element {x}")
        self.n = n
        self.rep = rep
        self._hash = hash((n, rep))
        self._np_rep = None
        self._matrix = None

    @classmethod
    def identity(cls, n: int) -> "Partition":
        return cls(n, range(n))

    zero = identity

    @classmethod
    def one(cls, n: int) -> "Partition":
        return cls(n, [0] * n)

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "Partition":
        uf = UnionFind(n)
        for a, b in pairs:
            if not (0 <= a < n and 0 <= b < n):
                raise InputError(f"pair ({a},{b}) out of range 0..{n - 1}")
            uf.union(a, b)
        return uf.to_partition()

    @classmethod
    def from_blocks(cls, n: int, blocks: Iterable[Iterable[int]]) -> "Partition":
        uf = UnionFind(n)
        seen = set()
        for block in blocks:
            block = list(block)
            for x in block:
                if not 0 <= x < n:
                    raise InputError(f"block element {x} out of range 0..{n - 1}")
                if x in seen:
                    raise InputError(f"element {x} appears in two blocks")
                seen.add(x)
            for a, b in zip(block, block[1:]):
                uf.union(a, b)
        return uf.to_partition()

    def related(self, a: int, b: int) -> bool:
        return self.rep[a] == self.rep[b]

    def rep_of(self, a: int) -> int:
        return self.rep[a]

    def np_rep(self) -> np.ndarray:
        if self._np_rep is None:
            arr = np.array(self.rep, dtype=np.int64)
            arr.flags.writeable = False
            self._np_rep = arr
        return self._np_rep

    def matrix(self) -> np.ndarray:
        """Boolean n x n relation matrix (cached)."""
        if self._matrix is None:
            r = self.np_rep()
            m = r[:, None] == r[None, :]
            m.flags.writeable = False
            self._matrix = m
        return self._matrix

    def blocks(self) -> tuple[tuple[int, ...], ...]:
        by_rep: dict[int, list[int]] = {}
        for x, r in enumerate(self.rep):
            by_rep.setdefault(r, []).append(x)
        return tuple(tuple(by_rep[r]) for r in sorted(by_rep))

    @property
    def num_blocks(self) -> int:
        return len(set(self.rep))

    def is_identity(self) -> bool:
        return self.num_blocks == self.n

    def is_one(self) -> bool:
        return self.num_blocks == 1

    def pairs(self) -> list[tuple[int, int]]:
        """All related ordered pairs, lexicographic."""
        out = []
        for block in self.blocks():
            for a in block:
                for b in block:
                    out.append((a, b))
        out.sort()
        return out

    def refines(self, other: "Partition") -> bool:
        """True iff self <= other (every self-block is inside an other-block)."""
        if self.n != other.n:
            raise InputError("partition size mismatch")
        return all(other.rep[x] == other.rep[self.rep[x]] for x in range(self.n))

    def sort_key(self):
        return (self.n - self.num_blocks, self.blocks())

    def block_string(self) -> str:
        return " | ".join(" ".join(str(x) for x in block) for block in self.blocks())

    def __eq__(self, other):
        return (isinstance(other, Partition) and self._hash == other._hash
                and self.n == other.n and self.rep == other.rep)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Partition({self.block_string()!r})"


def meet(p: Partition, q: Partition) -> Partition:
    if p.n != q.n:
        raise InputError("partition size mismatch")
    seen: dict[tuple[int, int], int] = {}
    rep = []
    for x in range(p.n):
        key = (p.rep[x], q.rep[x])
        rep.append(seen.setdefault(key, x))
    return Partition(p.n, rep)


def join(p: Partition, q: Partition) -> Partition:
    if p.n != q.n:
        raise InputError("partition size mismatch")
    uf = UnionFind(p.n)
    for x in range(p.n):
        uf.union(x, p.rep[x])
        uf.union(x, q.rep[x])
    return uf.to_partition()


def is_congruence(alg: FiniteAlgebra, p: Partition):
    """(True, None) or (False, (symbol, args_a, args_b)) with args_a, args_b
    blockwise related argument tuples whose images are unrelated."""
    if p.n != alg.size:
        raise InputError(f"partition on {p.n} elements, algebra has size {alg.size}")
    n = alg.size
    rep = p.np_rep()
    for op in alg.operations:
        if op.arity == 0:
            continue
        flat = op.table.astype(np.intp)
        if op.arity == 1:
            codes = rep
            vals = rep[flat]
            hit = _grouped_mismatch(codes, vals)
            if hit is not None:
                i, j = hit
                return False, (op.symbol, (i,), (j,))
        elif op.arity == 2:
            left = np.repeat(np.arange(n, dtype=np.intp), n)
            right = np.tile(np.arange(n, dtype=np.intp), n)
            codes = rep[left] * n + rep[right]
            vals = rep[flat]
            hit = _grouped_mismatch(codes, vals)
            if hit is not None:
                i, j = hit
                return False, (op.symbol, (i // n, i % n), (j // n, j % n))
        else:
            total = n ** op.arity
            args = np.arange(total, dtype=np.intp)
            codes = np.zeros(total, dtype=np.int64)
            rem = args.copy()
            digits = []
            for _ in range(op.arity):
                digits.append(rem % n)
                rem //= n
            for d in reversed(digits):
                codes = codes * n + rep[d]
            vals = rep[flat]
            hit = _grouped_mismatch(codes, vals)
            if hit is not None:
                i, j = hit
                return False, (op.symbol, _unrank(i, n, op.arity), _unrank(j, n, op.arity))
    return True, None


def _unrank(idx: int, n: int, r: int) -> tuple[int, ...]:
    out = []
    for _ in range(r):
        out.append(idx % n)
        idx //= n
    return tuple(reversed(out))


def _grouped_mismatch(codes: np.ndarray, vals: np.ndarray):
    order = np.argsort(codes, kind="stable")
    c = codes[order]
    v = vals[order]
    bad = np.flatnonzero((c[1:] == c[:-1]) & (v[1:] != v[:-1]))
    if bad.size == 0:
        return None
    k = int(bad[0])
    return int(order[k]), int(order[k + 1])


def cg(alg: FiniteAlgebra, pairs: Iterable[tuple[int, int]],
       seed: Partition | None = None) -> Partition:
    """Least congruence of alg containing the given pairs (and the seed).

    Worklist algorithm: every newly merged pair is closed under all unary
    polynomial translations of the basic operations; reflexivity, symmetry
    and transitivity are maintained by the union-find.
    """
    n = alg.size
    uf = UnionFind(n)
    queue: deque[tuple[int, int]] = deque()

    def merge(a: int, b: int):
        if uf.union(a, b):
            queue.append((a, b))

    if seed is not None:
        if seed.n != n:
            raise InputError("seed partition size mismatch")
        for x in range(n):
            if seed.rep[x] != x:
                merge(x, seed.rep[x])
    for a, b in pairs:
        if not (0 <= a < n and 0 <= b < n):
            raise InputError(f"pair ({a},{b}) out of range 0..{n - 1}")
        merge(a, b)

    binary = [op.table.astype(np.intp).reshape(n, n)
              for op in alg.operations if op.arity == 2]
    unary = [op.table.astype(np.intp) for op in alg.operations if op.arity == 1]
    higher = [op for op in alg.operations if op.arity >= 3]

    import itertools

    while queue:
        a, b = queue.popleft()
        for t in unary:
            merge(int(t[a]), int(t[b]))
        for t in binary:
            for xs, ys in ((t[a, :], t[b, :]), (t[:, a], t[:, b])):
                diff = np.flatnonzero(xs != ys)
                for k in diff:
                    merge(int(xs[k]), int(ys[k]))
        for op in higher:
            r = op.arity
            for pos in range(r):
                for consts in itertools.product(range(n), repeat=r - 1):
                    args_a = consts[:pos] + (a,) + consts[pos:]
                    args_b = consts[:pos] + (b,) + consts[pos:]
                    merge(op.apply(args_a), op.apply(args_b))
    return uf.to_partition()


class CongruenceLattice:
    """All congruences of an algebra, sorted finest first.

    Sort order: ascending (n - number of blocks), then lexicographic block
    structure; so index 0 is the identity relation and the last entry is the
    full relation.
    """

    __slots__ = ("algebra", "congruences", "_index")

    def __init__(self, algebra: FiniteAlgebra, congruences):
        self.algebra = algebra
        self.congruences = tuple(sorted(congruences, key=Partition.sort_key))
        self._index = {p: i for i, p in enumerate(self.congruences)}

    def __len__(self):
        return len(self.congruences)

    def __iter__(self):
        return iter(self.congruences)

    def __getitem__(self, i: int) -> Partition:
        return self.congruences[i]

    def index(self, p: Partition) -> int:
        try:
            return self._index[p]
        except KeyError:
            raise InputError(f"partition {p.block_string()!r} is not a congruence "
                             f"of {self.algebra.name}") from None

    @property
    def zero(self) -> Partition:
        return self.congruences[0]

    @property
    def one(self) -> Partition:
        return self.congruences[-1]

    def name_of(self, p: Partition) -> str:
        if p.is_identity():
            return "0"
        if p.is_one():
            return "1"
        return f"con[{self.index(p)}]"


def con_lattice(alg: FiniteAlgebra, cap: int = DEFAULT_LATTICE_CAP) -> CongruenceLattice:
    """All congruences: join-closure of the principal congruences."""
    n = alg.size
    found = {Partition.identity(n)}
    for a in range(n):
        for b in range(a + 1, n):
            found.add(cg(alg, [(a, b)]))
            if len(found) > cap:
                raise ResourceLimitError("congruence lattice exceeded cap",
                                         limit=cap, reached=len(found))
    work = list(found)
    while work:
        fresh = []
        for p in work:
            for q in list(found):
                j = join(p, q)
                if j not in found:
                    found.add(j)
                    fresh.append(j)
                    if len(found) > cap:
                        raise ResourceLimitError("congruence lattice exceeded cap",
                                                 limit=cap, reached=len(found))
        work = fresh
    return CongruenceLattice(alg, found)


def is_modular(lat: CongruenceLattice):
    """Dedekind's law over all triples; on failure returns the violating
    triple together with the pentagon sublattice it generates."""
    cons = lat.congruences
    k = len(cons)
    meets = [[meet(cons[i], cons[j]) for j in range(k)] for i in range(k)]
    joins = [[join(cons[i], cons[j]) for j in range(k)] for i in range(k)]
    idx = {p: i for i, p in enumerate(cons)}
    for xi in range(k):
        for zi in range(k):
            if not cons[xi].refines(cons[zi]):
                continue
            for yi in range(k):
                left = joins[xi][idx[meets[yi][zi]]]
                right = meets[idx[joins[xi][yi]]][zi]
                if left != right:
                    witness = {
                        "x": cons[xi], "y": cons[yi], "z": cons[zi],
                        "pentagon": {
                            "bottom": meets[yi][zi],
                            "low": left,
                            "high": right,
                            "side": cons[yi],
                            "top": joins[xi][yi],
                        },
                    }
                    return False, witness
    return True, None


def parse_congruence(text: str, alg: FiniteAlgebra,
                     lattice: CongruenceLattice | None = None) -> Partition:
    """Parse the CLI congruence syntax.

    Accepted forms: "zero" / "one"; "con[i]" (index into the sorted lattice);
    "gen: 0-2, 1-3" (generating pairs); block syntax "0 2 | 1 3" (elements not
    mentioned form singleton blocks).
    """
    text = text.strip()
    n = alg.size
    if text in ("zero", "0A", "0_A"):
        return Partition.identity(n)
    if text in ("one", "1A", "1_A"):
        return Partition.one(n)
    if text.startswith("con[") and text.endswith("]"):
        if lattice is None:
            raise InputError("con[i] syntax needs a congruence lattice")
        try:
            i = int(text[4:-1])
        except ValueError:
            raise InputError(f"bad congruence index in {text!r}") from None
        if not 0 <= i < len(lattice):
            raise InputError(f"congruence index {i} out of range 0..{len(lattice) - 1}")
        return lattice[i]
    if text.startswith("gen:"):
        pairs = []
        body = text[4:].strip()
        if body:
            for chunk in body.split(","):
                bits = chunk.strip().split("-")
                if len(bits) != 2:
                    raise InputError(f"bad generator pair {chunk.strip()!r}; expected a-b")
                try:
                    pairs.append((int(bits[0]), int(bits[1])))
                except ValueError:
                    raise InputError(f"bad generator pair {chunk.strip()!r}") from None
        return cg(alg, pairs)
    blocks = []
    for part in text.split("|"):
        items = part.split()
        if not items:
            raise InputError(f"empty block in {text!r}")
        try:
            blocks.append([int(x) for x in items])
        except ValueError:
            raise InputError(f"bad element in block {part.strip()!r}") from None
    return Partition.from_blocks(n, blocks)
