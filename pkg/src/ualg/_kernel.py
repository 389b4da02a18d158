"""Packed-tuple machinery for closure computation inside finite powers.

A width-w tuple (x_0, ..., x_{w-1}) over a universe of size n is packed
into the integer code sum x_i * n**(w-1-i), coordinate 0 most significant,
so ascending code order is lexicographic order on tuples.

For vectorized closure the width is split into contiguous parts, each small
enough that a pairwise composition table (part_space**2 entries) fits in
memory; a binary operation then costs one table gather per part per
candidate pair.  Membership during closure is a full-space boolean bitmap,
which is why the vectorized path is only used when n**w is small enough.
"""

from __future__ import annotations

import numpy as np

from .errors import ResourceLimitError

# Largest per-part space: pair tables are at most PART_LIMIT**2 entries.
PART_LIMIT = 4096
# Largest full space for which the bitmap closure path is used.
BITMAP_LIMIT = 1 << 26
# Candidate pairs processed per chunk.
CHUNK = 1 << 21


def space_size(n: int, width: int) -> int:
    return n ** width


def encode_rows(rows: np.ndarray, n: int) -> np.ndarray:
    """Pack (N, w) element rows into uint64 codes (coordinate 0 most significant)."""
    rows = np.asarray(rows)
    w = rows.shape[1]
    code = np.zeros(rows.shape[0], dtype=np.uint64)
    for i in range(w):
        code = code * np.uint64(n) + rows[:, i].astype(np.uint64)
    return code


def decode_codes(codes: np.ndarray, n: int, width: int) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.uint64)
    out = np.empty((codes.shape[0], width), dtype=np.uint16 if n > 256 else np.uint8)
    rem = codes.copy()
    for i in range(width - 1, -1, -1):
        out[:, i] = (rem % np.uint64(n)).astype(out.dtype)
        rem //= np.uint64(n)
    return out


def split_width(n: int, width: int) -> list[int]:
    """Split width into contiguous parts with n**part <= PART_LIMIT (>= 1 coord)."""
    per = 1
    while n ** (per + 1) <= PART_LIMIT:
        per += 1
    parts = []
    left = width
    while left > 0:
        take = min(per, left)
        parts.append(take)
        left -= take
    return parts


class Packing:
    """Part decomposition of width-w tuples over an n-element universe."""

    def __init__(self, n: int, width: int):
        self.n = n
        self.width = width
        self.part_widths = split_width(n, width)
        self.part_spaces = [n ** pw for pw in self.part_widths]
        strides = []
        acc = 1
        for sp in reversed(self.part_spaces):
            strides.append(acc)
            acc *= sp
        self.part_strides = list(reversed(strides))
        self.space = acc
        # digit rows for every code of each part, used to build op tables
        self._part_rows = [
            decode_codes(np.arange(sp, dtype=np.uint64), n, pw)
            for sp, pw in zip(self.part_spaces, self.part_widths)
        ]

    def parts_of_codes(self, codes: np.ndarray) -> list[np.ndarray]:
        out = []
        rem = np.asarray(codes, dtype=np.uint64)
        for sp, stride in zip(self.part_spaces, self.part_strides):
            out.append(((rem // np.uint64(stride)) % np.uint64(sp)).astype(np.uint32))
        return out

    def combine_parts(self, parts: list[np.ndarray]) -> np.ndarray:
        code = np.zeros(parts[0].shape, dtype=np.uint64)
        for p, stride in zip(parts, self.part_strides):
            code += p.astype(np.uint64) * np.uint64(stride)
        return code

    def unary_tables(self, flat_table: np.ndarray) -> list[np.ndarray]:
        """Per-part tables for a unary op applied coordinatewise."""
        tabs = []
        for rows, sp, pw in zip(self._part_rows, self.part_spaces, self.part_widths):
            out_rows = flat_table[rows.astype(np.intp)]
            tabs.append(_encode_small(out_rows, self.n, sp))
        return tabs

    def binary_tables(self, flat_table: np.ndarray, n: int) -> list[np.ndarray]:
        """Per-part tables for a binary op: tab[u, v] = part code of op(u, v)."""
        tabs = []
        for rows, sp in zip(self._part_rows, self.part_spaces):
            a = rows[:, None, :].astype(np.intp)
            b = rows[None, :, :].astype(np.intp)
            out_rows = flat_table[a * n + b]
            tabs.append(_encode_small(out_rows.reshape(sp * sp, -1), self.n, sp).reshape(sp, sp))
        return tabs


def _encode_small(rows: np.ndarray, n: int, space: int) -> np.ndarray:
    dtype = np.uint16 if space <= 1 << 16 else np.uint32
    code = np.zeros(rows.shape[0], dtype=np.uint32)
    for i in range(rows.shape[1]):
        code = code * np.uint32(n) + rows[:, i].astype(np.uint32)
    return code.astype(dtype)


def closure_bitmap(gen_rows: np.ndarray, op_tables: list[tuple[int, np.ndarray]],
                   n: int, width: int, cap: int) -> np.ndarray:
    """Closure of generator rows under ops of arity <= 2, returned lex sorted.

    op_tables: (arity, flat numpy table) pairs, arities 1 and 2 only
    (constants are injected by the caller).  Requires n**width <= BITMAP_LIMIT.
    """
    pk = Packing(n, width)
    if pk.space == 1:
        return gen_rows[:1].copy() if len(gen_rows) else gen_rows.copy()

    unary = [pk.unary_tables(t) for (r, t) in op_tables if r == 1]
    binary = [pk.binary_tables(t, n) for (r, t) in op_tables if r == 2]

    seen = np.zeros(pk.space, dtype=bool)
    gen_codes = encode_rows(gen_rows, n)
    gen_codes = np.unique(gen_codes)
    seen[gen_codes] = True
    all_codes = [gen_codes]
    total = len(gen_codes)
    frontier = gen_codes

    while frontier.size:
        fresh = []

        def absorb(cand: np.ndarray):
            nonlocal total
            mask = ~seen[cand]
            if not mask.any():
                return
            nc = np.unique(cand[mask])
            seen[nc] = True
            total += nc.size
            if total > cap:
                raise ResourceLimitError(
                    f"closure exceeded cap of {cap} tuples", limit=cap, reached=total)
            fresh.append(nc)

        f_parts = pk.parts_of_codes(frontier)
        for tabs in unary:
            absorb(pk.combine_parts([t[p.astype(np.intp)] for t, p in zip(tabs, f_parts)]))

        if binary:
            old = np.concatenate(all_codes)
            old_parts = pk.parts_of_codes(old)
            for tabs in binary:
                _pair_absorb(pk, tabs, f_parts, frontier.size,
                             old_parts, old.size, absorb)
                _pair_absorb(pk, tabs, old_parts, old.size,
                             f_parts, frontier.size, absorb, skip_left_frontier=False)

        frontier = np.unique(np.concatenate(fresh)) if fresh else np.empty(0, np.uint64)
        if frontier.size:
            all_codes.append(frontier)

    codes = np.sort(np.concatenate(all_codes))
    return decode_codes(codes, n, width)


def _pair_absorb(pk, tabs, x_parts, x_len, y_parts, y_len, absorb,
                 skip_left_frontier=True):
    if x_len == 0 or y_len == 0:
        return
    rows_per_block = max(1, CHUNK // y_len)
    for start in range(0, x_len, rows_per_block):
        stop = min(start + rows_per_block, x_len)
        outs = []
        for t, xp, yp in zip(tabs, x_parts, y_parts):
            block = t[xp[start:stop].astype(np.intp)[:, None],
                      yp.astype(np.intp)[None, :]]
            outs.append(block.ravel())
        absorb(pk.combine_parts(outs))


def closure_python(gens, ops, cap):
    """Reference worklist closure over python tuples; any arities.

    gens: iterable of tuples; ops: list of (arity, lookup) where lookup maps
    an argument tuple of elements to an element.  FIFO worklist; each new
    element is combined with everything present when it is processed, which
    together with later elements processing their own combinations yields the
    full closure.
    """
    from collections import deque

    seen = set(gens)
    queue = deque(sorted(seen))
    if len(seen) > cap:
        raise ResourceLimitError(f"closure exceeded cap of {cap} tuples",
                                 limit=cap, reached=len(seen))

    def add(t):
        if t not in seen:
            seen.add(t)
            if len(seen) > cap:
                raise ResourceLimitError(f"closure exceeded cap of {cap} tuples",
                                         limit=cap, reached=len(seen))
            queue.append(t)

    import itertools

    while queue:
        t = queue.popleft()
        snapshot = None
        for arity, look in ops:
            if arity == 1:
                add(tuple(look((x,)) for x in t))
                continue
            if snapshot is None:
                snapshot = list(seen)
            if arity == 2:
                for s in snapshot:
                    add(tuple(look((a, b)) for a, b in zip(t, s)))
                    add(tuple(look((a, b)) for a, b in zip(s, t)))
            else:
                for pos in range(arity):
                    for rest in itertools.product(snapshot, repeat=arity - 1):
                        args = rest[:pos] + (t,) + rest[pos:]
                        add(tuple(look(col) for col in zip(*args)))
    return seen
