"""Finite algebras with tabulated operations, and subalgebras of finite powers.

An algebra lives on the universe {0, ..., n-1}.  Every basic operation is a
total table in row-major order: the arguments (a_0, ..., a_{r-1}) index entry
sum a_i * n**(r-1-i).  Tuple sets (subsets of A^m) are kept lexicographically
sorted, so iteration order, witness order and serialization are deterministic.

All values here are immutable after construction and safe to share across
threads; closure computation is sequential and deterministic by contract.
"""

from __future__ import annotations

import json
import os
from typing import Iterable, Sequence

import numpy as np

from . import _kernel
from .errors import InputError, NotClosedError, ResourceLimitError

DEFAULT_CLOSURE_CAP = 5_000_000
CLOSURE_CAP_ENV = "UALG_MAX_CLOSURE"


def element_dtype(n: int):
    return np.uint8 if n <= 256 else np.uint16


class OperationTable:
    """One named finitary operation given by its full table."""

    __slots__ = ("symbol", "arity", "size", "table", "_hash")

    def __init__(self, symbol: str, arity: int, size: int, table):
        if not isinstance(symbol, str) or not symbol:
            raise InputError(f"operation symbol must be a nonempty string, got {symbol!r}")
        if arity < 0:
            raise InputError(f"operation '{symbol}': arity must be >= 0, got {arity}")
        expected = size ** arity
        tab = np.asarray(table, dtype=np.int64)
        if tab.ndim != 1 or tab.shape[0] != expected:
            raise InputError(
                f"operation '{symbol}': table length {tab.shape[0] if tab.ndim == 1 else 'non-flat'}"
                f" != {expected} (= {size}^{arity})")
        if expected and ((tab < 0).any() or (tab >= size).any()):
            bad = int(np.flatnonzero((tab < 0) | (tab >= size))[0])
            raise InputError(
                f"operation '{symbol}': table entry {int(tab[bad])} at index {bad}"
                f" out of range 0..{size - 1}")
        self.symbol = symbol
        self.arity = arity
        self.size = size
        arr = tab.astype(element_dtype(size))
        arr.flags.writeable = False
        self.table = arr
        self._hash = hash((symbol, arity, size, arr.tobytes()))

    def apply(self, args: Sequence[int]) -> int:
        if len(args) != self.arity:
            raise InputError(
                f"operation '{self.symbol}' expects {self.arity} argument(s), got {len(args)}")
        idx = 0
        for a in args:
            if not 0 <= a < self.size:
                raise InputError(
                    f"operation '{self.symbol}': argument {a} out of range 0..{self.size - 1}")
            idx = idx * self.size + a
        return int(self.table[idx])

    def __eq__(self, other):
        return (isinstance(other, OperationTable)
                and self._hash == other._hash
                and self.symbol == other.symbol
                and self.arity == other.arity
                and self.size == other.size
                and bool(np.array_equal(self.table, other.table)))

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"OperationTable({self.symbol!r}, arity={self.arity}, size={self.size})"


class FiniteAlgebra:
    """A finite algebra: universe {0, ..., size-1} plus named operations."""

    __slots__ = ("name", "size", "operations", "_by_symbol", "_hash")

    def __init__(self, name: str, size: int, operations: Sequence[OperationTable]):
        if size < 1:
            raise InputError(f"algebra size must be >= 1, got {size}")
        by_symbol = {}
        for op in operations:
            if op.size != size:
                raise InputError(
                    f"operation '{op.symbol}' tabulated for size {op.size}, algebra has size {size}")
            if op.symbol in by_symbol:
                raise InputError(f"duplicate operation symbol '{op.symbol}'")
            by_symbol[op.symbol] = op
        self.name = name
        self.size = size
        self.operations = tuple(operations)
        self._by_symbol = by_symbol
        self._hash = hash((name, size, tuple(op._hash for op in self.operations)))

    def op(self, symbol: str) -> OperationTable:
        try:
            return self._by_symbol[symbol]
        except KeyError:
            raise InputError(f"unknown operation symbol '{symbol}'") from None

    def eval(self, symbol: str, args: Sequence[int]) -> int:
        return self.op(symbol).apply(tuple(args))

    def constants(self) -> list[tuple[str, int]]:
        return [(op.symbol, int(op.table[0])) for op in self.operations if op.arity == 0]

    def __eq__(self, other):
        if self is other:
            return True
        return (isinstance(other, FiniteAlgebra)
                and self._hash == other._hash
                and self.name == other.name
                and self.size == other.size
                and self.operations == other.operations)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        ops = ", ".join(f"{op.symbol}/{op.arity}" for op in self.operations)
        return f"FiniteAlgebra({self.name!r}, size={self.size}, ops=[{ops}])"


def load_algebra(document) -> FiniteAlgebra:
    """Build a validated FiniteAlgebra from a JSON document (text or mapping).

    Schema: {"name": str, "size": int, "operations":
             [{"symbol": str, "arity": int, "table": [int, ...]}]}
    """
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as e:
            raise InputError(f"malformed algebra document: {e}") from None
    else:
        doc = document
    if not isinstance(doc, dict):
        raise InputError("algebra document must be a JSON object")
    name = doc.get("name")
    if not isinstance(name, str):
        raise InputError("'name' must be a string")
    size = doc.get("size")
    if not isinstance(size, int) or isinstance(size, bool) or size < 1:
        raise InputError(f"'size' must be a positive integer, got {size!r}")
    raw_ops = doc.get("operations")
    if not isinstance(raw_ops, list):
        raise InputError("'operations' must be a list")
    ops = []
    for i, entry in enumerate(raw_ops):
        where = f"operations[{i}]"
        if not isinstance(entry, dict):
            raise InputError(f"{where}: expected an object")
        sym = entry.get("symbol")
        arity = entry.get("arity")
        table = entry.get("table")
        if not isinstance(sym, str) or not sym:
            raise InputError(f"{where}: 'symbol' must be a nonempty string")
        if not isinstance(arity, int) or isinstance(arity, bool) or arity < 0:
            raise InputError(f"{where} ('{sym}'): 'arity' must be a nonnegative integer")
        if not isinstance(table, list) or not all(
                isinstance(x, int) and not isinstance(x, bool) for x in table):
            raise InputError(f"{where} ('{sym}'): 'table' must be a list of integers")
        try:
            ops.append(OperationTable(sym, arity, size, table))
        except InputError as e:
            raise InputError(f"{where}: {e}") from None
    return FiniteAlgebra(name, size, ops)


def load_algebra_file(path) -> FiniteAlgebra:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise InputError(f"cannot read algebra file {path}: {e}") from None
    return load_algebra(text)


def algebra_to_document(alg: FiniteAlgebra) -> dict:
    return {
        "name": alg.name,
        "size": alg.size,
        "operations": [
            {"symbol": op.symbol, "arity": op.arity, "table": [int(x) for x in op.table]}
            for op in alg.operations
        ],
    }


class TupleSet:
    """An immutable set of fixed-width tuples over {0, ..., n-1}, lex sorted."""

    __slots__ = ("width", "universe_size", "rows", "codes", "_hash", "_pyset")

    def __init__(self, width: int, universe_size: int, elements):
        if width < 1:
            raise InputError(f"tuple width must be >= 1, got {width}")
        n = universe_size
        if isinstance(elements, np.ndarray):
            rows = np.asarray(elements)
            if rows.size and rows.ndim != 2:
                raise InputError("element array must be 2-dimensional")
            if rows.size == 0:
                rows = rows.reshape(0, width)
        else:
            elems = [tuple(t) for t in elements]
            for t in elems:
                if len(t) != width:
                    raise InputError(f"tuple {t} has width {len(t)}, expected {width}")
            rows = np.array(elems, dtype=element_dtype(n)).reshape(len(elems), width)
        if rows.shape[1] != width:
            raise InputError(f"element rows have width {rows.shape[1]}, expected {width}")
        if rows.size and (int(rows.max(initial=0)) >= n or int(rows.min(initial=0)) < 0):
            bad = int(rows.max()) if int(rows.max()) >= n else int(rows.min())
            raise InputError(f"tuple entry {bad} out of range 0..{n - 1}")
        rows = rows.astype(element_dtype(n), copy=False)
        codes = _kernel.encode_rows(rows, n)
        order = np.argsort(codes, kind="stable")
        codes = codes[order]
        keep = np.ones(len(codes), dtype=bool)
        if len(codes) > 1:
            keep[1:] = codes[1:] != codes[:-1]
        self.codes = codes[keep]
        arr = rows[order][keep]
        arr.flags.writeable = False
        self.rows = arr
        self.width = width
        self.universe_size = n
        self._hash = hash((width, n, arr.tobytes()))
        self._pyset = None

    def __len__(self):
        return self.rows.shape[0]

    def __iter__(self):
        for row in self.rows:
            yield tuple(int(x) for x in row)

    def _as_pyset(self):
        if self._pyset is None:
            self._pyset = {tuple(int(x) for x in row) for row in self.rows}
        return self._pyset

    def __contains__(self, t) -> bool:
        t = tuple(t)
        if len(t) != self.width:
            return False
        if any(not 0 <= x < self.universe_size for x in t):
            return False
        code = _kernel.encode_rows(
            np.array([t], dtype=element_dtype(self.universe_size)), self.universe_size)[0]
        pos = int(np.searchsorted(self.codes, code))
        return pos < len(self.codes) and self.codes[pos] == code

    def contains_codes(self, codes: np.ndarray) -> np.ndarray:
        pos = np.searchsorted(self.codes, codes)
        pos_c = np.minimum(pos, len(self.codes) - 1) if len(self.codes) else pos
        if not len(self.codes):
            return np.zeros(len(codes), dtype=bool)
        return self.codes[pos_c] == codes

    def index_of(self, t) -> int:
        t = tuple(t)
        code = _kernel.encode_rows(
            np.array([t], dtype=element_dtype(self.universe_size)), self.universe_size)[0]
        pos = int(np.searchsorted(self.codes, code))
        if pos >= len(self.codes) or self.codes[pos] != code:
            raise KeyError(t)
        return pos

    def indices_of_codes(self, codes: np.ndarray) -> np.ndarray:
        """Lex ranks of the given codes; raises KeyError if any is absent."""
        pos = np.searchsorted(self.codes, codes)
        if len(self.codes) == 0 or (pos >= len(self.codes)).any():
            raise KeyError("code not in tuple set")
        if (self.codes[pos] != codes).any():
            raise KeyError("code not in tuple set")
        return pos

    def tuple_at(self, i: int) -> tuple:
        return tuple(int(x) for x in self.rows[i])

    def __eq__(self, other):
        return (isinstance(other, TupleSet)
                and self._hash == other._hash
                and self.width == other.width
                and self.universe_size == other.universe_size
                and bool(np.array_equal(self.rows, other.rows)))

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"TupleSet(width={self.width}, n={self.universe_size}, len={len(self)})"


class SubAlgebraView:
    """A closed tuple set viewed as an algebra: tuples <-> dense indices.

    The index map is the lexicographic rank inside the sorted universe, so it
    is a bijection by construction and deterministic across runs.
    """

    __slots__ = ("parent", "power", "universe")

    def __init__(self, parent: FiniteAlgebra, power: int, universe: TupleSet):
        if universe.width != power:
            raise InputError(f"universe width {universe.width} != power {power}")
        if universe.universe_size != parent.size:
            raise InputError("universe entries do not match the parent algebra size")
        if len(universe) == 0:
            raise InputError("subalgebra universe must be nonempty")
        self.parent = parent
        self.power = power
        self.universe = universe

    def index_of(self, t) -> int:
        return self.universe.index_of(t)

    def tuple_at(self, i: int) -> tuple:
        return self.universe.tuple_at(i)

    def __len__(self):
        return len(self.universe)


def closure_cap(cap: int | None = None) -> int:
    if cap is not None:
        return cap
    env = os.environ.get(CLOSURE_CAP_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"{CLOSURE_CAP_ENV} must be an integer, got {env!r}") from None
    return DEFAULT_CLOSURE_CAP


def generate_subpower(alg: FiniteAlgebra, m: int, generators, cap: int | None = None,
                      force_python: bool = False) -> TupleSet:
    """Least subset of A^m containing the generators and closed under all
    operations applied coordinatewise.  Constants are injected automatically.

    Raises ResourceLimitError when the closure exceeds the cap (default
    DEFAULT_CLOSURE_CAP, overridable via the UALG_MAX_CLOSURE environment
    variable or the cap argument).
    """
    if m < 1:
        raise InputError(f"power must be >= 1, got {m}")
    n = alg.size
    if isinstance(generators, TupleSet):
        if generators.width != m:
            raise InputError(f"generators have width {generators.width}, expected {m}")
        gen_rows = generators.rows
    else:
        gens = TupleSet(m, n, generators)
        gen_rows = gens.rows
    cap = closure_cap(cap)

    const_rows = np.array([(c,) * m for _, c in alg.constants()],
                          dtype=element_dtype(n)).reshape(-1, m)
    seed = np.concatenate([gen_rows, const_rows]) if const_rows.size else gen_rows
    if seed.shape[0] == 0:
        return TupleSet(m, n, seed)

    positive = [op for op in alg.operations if op.arity >= 1]
    if not positive:
        return TupleSet(m, n, seed)

    space = _kernel.space_size(n, m)
    use_numpy = (not force_python and n <= 256 and space <= _kernel.BITMAP_LIMIT
                 and all(op.arity <= 2 for op in positive))
    if use_numpy:
        tables = [(op.arity, op.table.astype(np.int64)) for op in positive]
        rows = _kernel.closure_bitmap(seed, tables, n, m, cap)
        return TupleSet(m, n, rows)

    lookups = [(op.arity, op.apply) for op in positive]
    seed_tuples = {tuple(int(x) for x in row) for row in seed}
    result = _kernel.closure_python(seed_tuples, lookups, cap)
    return TupleSet(m, n, result)


def as_algebra(view: SubAlgebraView, name: str | None = None) -> FiniteAlgebra:
    """Transport the parent's operations through the view's index map.

    Raises NotClosedError (with a violating application) if the universe is
    not closed under some operation.
    """
    uni = view.universe
    n = view.parent.size
    rows = uni.rows.astype(np.intp)
    count = len(uni)
    if name is None:
        name = f"{view.parent.name}_pow{view.power}_{count}"

    def rank(codes: np.ndarray, symbol, args_of) -> np.ndarray:
        pos = np.searchsorted(uni.codes, codes)
        bad = pos >= count
        if not bad.any():
            bad = uni.codes[pos] != codes
        else:
            safe = np.minimum(pos, count - 1)
            bad = bad | (uni.codes[safe] != codes)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            args = args_of(k)
            missing = tuple(
                view.parent.eval(symbol, tuple(int(t[c]) for t in args))
                for c in range(view.power))
            raise NotClosedError(
                f"universe not closed: {symbol}{args} = {missing} is missing",
                witness=(symbol, args, missing))
        return pos

    new_ops = []
    for op in view.parent.operations:
        flat = op.table.astype(np.intp)
        if op.arity == 0:
            t = (int(flat[0]),) * view.power
            codes = _kernel.encode_rows(
                np.array([t], dtype=element_dtype(n)), n)
            idx = rank(codes, op.symbol, lambda k: ())
            table = [int(idx[0])]
        elif op.arity == 1:
            out_rows = flat[rows]
            codes = _kernel.encode_rows(out_rows, n)
            idx = rank(codes, op.symbol, lambda k: (uni.tuple_at(k),))
            table = idx.astype(np.int64)
        elif op.arity == 2:
            table = np.empty(count * count, dtype=np.int64)
            block = max(1, (1 << 22) // max(1, count * view.power))
            for start in range(0, count, block):
                stop = min(start + block, count)
                out_rows = flat[rows[start:stop, None, :] * n + rows[None, :, :]]
                codes = _kernel.encode_rows(
                    out_rows.reshape(-1, view.power), n)
                idx = rank(codes, op.symbol,
                           lambda k, s=start: (uni.tuple_at(s + k // count),
                                               uni.tuple_at(k % count)))
                table[start * count:stop * count] = idx
        else:
            if count ** op.arity > 1 << 24:
                raise ResourceLimitError(
                    f"as_algebra: table for '{op.symbol}' (arity {op.arity}) on "
                    f"{count} elements exceeds the supported size")
            import itertools
            table = []
            for combo in itertools.product(range(count), repeat=op.arity):
                args = [uni.tuple_at(i) for i in combo]
                res = tuple(view.parent.eval(op.symbol, tuple(int(t[c]) for t in args))
                            for c in range(view.power))
                if res not in uni:
                    raise NotClosedError(
                        f"universe not closed: {op.symbol}{tuple(args)} = {res} is missing",
                        witness=(op.symbol, tuple(args), res))
                table.append(uni.index_of(res))
        new_ops.append(OperationTable(op.symbol, op.arity, count, table))
    return FiniteAlgebra(name, count, new_ops)


def subpower_view(alg: FiniteAlgebra, m: int, universe: TupleSet) -> SubAlgebraView:
    return SubAlgebraView(alg, m, universe)
