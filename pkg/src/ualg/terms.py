"""Terms over an algebra's signature: parsing, evaluation, identity checking,
Day-sequence verification and bounded Day-term search, and the cube-term
constructions built from a ternary base term.

Concrete syntax: term := atom | atom '(' term (',' term)* ')'.  An atom is a
maximal run of characters other than '(', ')', ',' and whitespace, so
operation symbols like '+' or '*' are fine.  Whitespace between tokens is
ignored.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .algebra import FiniteAlgebra
from .errors import InputError, ResourceLimitError


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class App:
    symbol: str
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


Term = Var | App

DAY_VARS = ("x", "y", "z", "u")
CUBE_PARAMS = ("x000", "x100", "x010", "x110", "x001", "x101", "x011")


def parse_term(text: str) -> Term:
    """Parse a term; syntax errors carry the offending position."""
    pos = 0
    L = len(text)

    def skip_ws():
        nonlocal pos
        while pos < L and text[pos].isspace():
            pos += 1

    def atom() -> str:
        nonlocal pos
        start = pos
        while pos < L and text[pos] not in "(),'" and not text[pos].isspace():
            pos += 1
        if pos == start:
            found = text[pos] if pos < L else "end of input"
            raise InputError(f"syntax error at position {start}: expected a name, "
                             f"found {found!r}")
        return text[start:pos]

    def term() -> Term:
        nonlocal pos
        skip_ws()
        name = atom()
        skip_ws()
        if pos < L and text[pos] == "(":
            pos += 1
            args = [term()]
            skip_ws()
            while pos < L and text[pos] == ",":
                pos += 1
                args.append(term())
                skip_ws()
            if pos >= L or text[pos] != ")":
                raise InputError(f"syntax error at position {pos}: expected ')'")
            pos += 1
            return App(name, tuple(args))
        return Var(name)

    t = term()
    skip_ws()
    if pos != L:
        raise InputError(f"syntax error at position {pos}: trailing input {text[pos:]!r}")
    return t


def term_to_str(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    return f"{t.symbol}({','.join(term_to_str(a) for a in t.args)})"


def term_variables(t: Term) -> list[str]:
    """Free variables in first-occurrence order."""
    out: list[str] = []

    def walk(node):
        if isinstance(node, Var):
            if node.name not in out:
                out.append(node.name)
        else:
            for a in node.args:
                walk(a)

    walk(t)
    return out


def substitute(t: Term, mapping: dict[str, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    return App(t.symbol, tuple(substitute(a, mapping) for a in t.args))


def eval_term(alg: FiniteAlgebra, t: Term, env: dict[str, int]) -> int:
    if isinstance(t, Var):
        if t.name not in env:
            raise InputError(f"unbound variable '{t.name}'")
        val = env[t.name]
        if not 0 <= val < alg.size:
            raise InputError(f"value {val} for '{t.name}' out of range 0..{alg.size - 1}")
        return val
    args = tuple(eval_term(alg, a, env) for a in t.args)
    return alg.eval(t.symbol, args)


def term_function(alg: FiniteAlgebra, t: Term, varnames: Sequence[str]) -> np.ndarray:
    """Evaluation vector over all assignments: index sum a_i * n**(L-1-i)
    where a_i is the value of varnames[i]."""
    n = alg.size
    varnames = tuple(varnames)
    L = len(varnames)
    total = n ** L
    pos = {v: i for i, v in enumerate(varnames)}

    def walk(node) -> np.ndarray:
        if isinstance(node, Var):
            if node.name not in pos:
                raise InputError(f"unbound variable '{node.name}'")
            p = pos[node.name]
            stride = n ** (L - 1 - p)
            return ((np.arange(total) // stride) % n).astype(np.int64)
        op = alg.op(node.symbol)
        if len(node.args) != op.arity:
            raise InputError(f"operation '{node.symbol}' expects {op.arity} "
                             f"argument(s), got {len(node.args)}")
        idx = np.zeros(total, dtype=np.int64)
        for a in node.args:
            idx = idx * n + walk(a)
        return op.table.astype(np.int64)[idx]

    return walk(t)


def _env_of_index(idx: int, n: int, varnames: Sequence[str]) -> dict[str, int]:
    vals = []
    for _ in varnames:
        vals.append(idx % n)
        idx //= n
    return dict(zip(varnames, reversed(vals)))


def check_identity(alg: FiniteAlgebra, lhs: Term, rhs: Term,
                   varnames: Sequence[str] | None = None):
    """Exhaustive identity check; (True, None) or (False, first falsifying
    environment in canonical assignment order)."""
    if varnames is None:
        both = term_variables(lhs) + [v for v in term_variables(rhs)
                                      if v not in term_variables(lhs)]
        varnames = tuple(sorted(both))
    lv = term_function(alg, lhs, varnames)
    rv = term_function(alg, rhs, varnames)
    diff = np.flatnonzero(lv != rv)
    if diff.size == 0:
        return True, None
    return False, _env_of_index(int(diff[0]), alg.size, varnames)


@dataclass(frozen=True)
class DaySequence:
    """A tuple of 4-ary terms over variables (x, y, z, u)."""

    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise InputError("a Day sequence needs at least one term")

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)


def _day_tables(alg: FiniteAlgebra, seq: DaySequence) -> list[np.ndarray]:
    return [term_function(alg, t, DAY_VARS) for t in seq.terms]


def check_day_sequence(alg: FiniteAlgebra, seq: DaySequence):
    """Verify the Day-term identity families; on failure returns
    (identity tag, index e, environment)."""
    n = alg.size
    tabs = _day_tables(alg, seq)
    last = len(tabs) - 1

    ar = np.arange(n, dtype=np.int64)
    # restriction of the full 4-variable table to a substituted assignment
    xy = (ar[:, None] * n + ar[None, :]).reshape(-1)  # pairs (a, b) as a*n+b
    x_of_pair = (xy // n)
    y_of_pair = (xy % n)

    def full_index(x, y, z, u):
        return ((x * n + y) * n + z) * n + u

    idx_xyyx = full_index(x_of_pair, y_of_pair, y_of_pair, x_of_pair)
    for e, tab in enumerate(tabs):
        bad = np.flatnonzero(tab[idx_xyyx] != x_of_pair)
        if bad.size:
            k = int(bad[0])
            env = {"x": int(x_of_pair[k]), "y": int(y_of_pair[k])}
            return False, ("m_e(x,y,y,x) = x", e, env)

    proj_x = term_function(alg, Var("x"), DAY_VARS)
    proj_u = term_function(alg, Var("u"), DAY_VARS)
    bad = np.flatnonzero(tabs[0] != proj_x)
    if bad.size:
        return False, ("m_0(x,y,z,u) = x", 0,
                       _env_of_index(int(bad[0]), n, DAY_VARS))
    bad = np.flatnonzero(tabs[last] != proj_u)
    if bad.size:
        return False, ("m_n(x,y,z,u) = u", last,
                       _env_of_index(int(bad[0]), n, DAY_VARS))

    idx_xxuu = full_index(x_of_pair, x_of_pair, y_of_pair, y_of_pair)
    xyz = np.arange(n ** 3, dtype=np.int64)
    x3 = xyz // (n * n)
    y3 = (xyz // n) % n
    u3 = xyz % n
    idx_xyyu = full_index(x3, y3, y3, u3)
    for e in range(last):
        if e % 2 == 0:
            bad = np.flatnonzero(tabs[e][idx_xxuu] != tabs[e + 1][idx_xxuu])
            if bad.size:
                k = int(bad[0])
                env = {"x": int(x_of_pair[k]), "u": int(y_of_pair[k])}
                return False, ("m_e(x,x,u,u) = m_{e+1}(x,x,u,u), e even", e, env)
        else:
            bad = np.flatnonzero(tabs[e][idx_xyyu] != tabs[e + 1][idx_xyyu])
            if bad.size:
                k = int(bad[0])
                env = {"x": int(x3[k]), "y": int(y3[k]), "u": int(u3[k])}
                return False, ("m_e(x,y,y,u) = m_{e+1}(x,y,y,u), e odd", e, env)
    return True, None


@dataclass(frozen=True)
class DaySearchResult:
    sequence: DaySequence | None
    complete: bool       # whether the 4-ary clone was fully enumerated
    functions: int       # clone functions examined

    @property
    def found(self) -> bool:
        return self.sequence is not None


def find_day_terms(alg: FiniteAlgebra, max_functions: int = 200_000) -> DaySearchResult:
    """Bounded search for a Day sequence.

    Enumerates the 4-ary clone (functions A^4 -> A reachable from the
    projections by composing basic operations) breadth first, keeping one
    shortest term per function, then looks for a shortest chain through the
    even/odd linking identities.  Any returned sequence is verified; absence
    is definitive only when complete is True.
    """
    n = alg.size
    total = n ** 4
    vec_of: dict[bytes, int] = {}
    vectors: list[np.ndarray] = []
    terms: list[Term] = []

    def push(vec: np.ndarray, term: Term) -> bool:
        key = vec.astype(np.uint8).tobytes() if n <= 256 else vec.tobytes()
        if key in vec_of:
            return False
        vec_of[key] = len(vectors)
        vectors.append(vec.astype(np.int64))
        terms.append(term)
        return True

    for i, name in enumerate(DAY_VARS):
        stride = n ** (3 - i)
        push(((np.arange(total) // stride) % n).astype(np.int64), Var(name))

    positive = [op for op in alg.operations if op.arity >= 1]
    for op in alg.operations:
        if op.arity == 0:
            push(np.full(total, int(op.table[0]), dtype=np.int64), App(op.symbol, ()))

    complete = True
    frontier = list(range(len(vectors)))
    capped = False
    while frontier and not capped:
        fresh: list[int] = []

        def emit(vec, term):
            nonlocal capped
            if push(vec, term):
                fresh.append(len(vectors) - 1)
                if len(vectors) >= max_functions:
                    capped = True
            return capped

        for op in positive:
            if capped:
                break
            tab = op.table.astype(np.int64)
            if op.arity == 1:
                for fi in frontier:
                    if emit(tab[vectors[fi]], App(op.symbol, (terms[fi],))):
                        break
            elif op.arity == 2:
                existing = len(vectors)
                for fi in frontier:
                    for si in range(existing):
                        if emit(tab[vectors[fi] * n + vectors[si]],
                                App(op.symbol, (terms[fi], terms[si]))):
                            break
                        if emit(tab[vectors[si] * n + vectors[fi]],
                                App(op.symbol, (terms[si], terms[fi]))):
                            break
                    if capped:
                        break
            else:
                import itertools
                existing = len(vectors)
                r = op.arity
                for fi in frontier:
                    for pos in range(r):
                        for rest in itertools.product(range(existing), repeat=r - 1):
                            combo = rest[:pos] + (fi,) + rest[pos:]
                            idx = np.zeros(total, dtype=np.int64)
                            for ci in combo:
                                idx = idx * n + vectors[ci]
                            if emit(tab[idx], App(op.symbol,
                                                  tuple(terms[ci] for ci in combo))):
                                break
                        if capped:
                            break
                    if capped:
                        break
        frontier = fresh
    if capped:
        complete = False

    # chain search through functions satisfying m(x,y,y,x) = x
    ar = np.arange(n, dtype=np.int64)
    pair = np.arange(n * n, dtype=np.int64)
    xp, yp = pair // n, pair % n
    idx_xyyx = ((xp * n + yp) * n + yp) * n + xp
    idx_xxuu = ((xp * n + xp) * n + yp) * n + yp
    tri = np.arange(n ** 3, dtype=np.int64)
    x3, y3, u3 = tri // (n * n), (tri // n) % n, tri % n
    idx_xyyu = ((x3 * n + y3) * n + y3) * n + u3

    nodes = [i for i, v in enumerate(vectors) if bool((v[idx_xyyx] == xp).all())]
    node_set = set(nodes)

    def key_of(vec):
        return vec.astype(np.uint8).tobytes() if n <= 256 else vec.tobytes()

    proj_x_vec = ((np.arange(total) // n ** 3) % n).astype(np.int64)
    proj_u_vec = (np.arange(total) % n).astype(np.int64)
    start = vec_of[key_of(proj_x_vec)]
    goal = vec_of[key_of(proj_u_vec)]
    if start not in node_set or goal not in node_set:
        return DaySearchResult(None, complete, len(vectors))

    even_groups: dict[bytes, list[int]] = {}
    odd_groups: dict[bytes, list[int]] = {}
    even_sig = {}
    odd_sig = {}
    for i in nodes:
        es = vectors[i][idx_xxuu].astype(np.int64).tobytes()
        os_ = vectors[i][idx_xyyu].astype(np.int64).tobytes()
        even_sig[i] = es
        odd_sig[i] = os_
        even_groups.setdefault(es, []).append(i)
        odd_groups.setdefault(os_, []).append(i)

    from collections import deque
    # state: (function index, parity of the next link)
    parent: dict[tuple[int, int], tuple[int, int] | None] = {(start, 0): None}
    queue = deque([(start, 0)])
    hit = None
    if start == goal:
        hit = (start, 0)
    while queue and hit is None:
        f, par = queue.popleft()
        groups = even_groups if par == 0 else odd_groups
        sig = even_sig[f] if par == 0 else odd_sig[f]
        for g in groups.get(sig, ()):
            state = (g, 1 - par)
            if state in parent:
                continue
            parent[state] = (f, par)
            if g == goal:
                hit = state
                break
            queue.append(state)

    if hit is None:
        return DaySearchResult(None, complete, len(vectors))
    chain = []
    cur = hit
    while cur is not None:
        chain.append(cur[0])
        cur = parent[cur]
    chain.reverse()
    seq = DaySequence(tuple(terms[i] for i in chain))
    ok, _ = check_day_sequence(alg, seq)
    assert ok, "day-term search produced a sequence that fails verification"
    return DaySearchResult(seq, complete, len(vectors))


def _params_of(t: Term, params: Sequence[str] | None, arity: int,
               what: str) -> tuple[str, ...]:
    canonical = ("x", "y", "z") if arity == 3 else CUBE_PARAMS
    if params is None:
        free = term_variables(t)
        if set(free) <= set(canonical):
            params = canonical
        else:
            params = tuple(sorted(free))
    params = tuple(params)
    if len(params) != arity:
        raise InputError(f"{what} must use exactly {arity} variables, got {params}")
    return params


def apply_term(t: Term, params: Sequence[str], args: Sequence[Term]) -> Term:
    return substitute(t, dict(zip(params, args)))


def wobbly_cube_term(d: Term, params: Sequence[str] | None = None) -> Term:
    """The 7-ary double composition of a ternary term, over CUBE_PARAMS:
    d(d(x000,x100,x010), x110, d(x001,x101,x011))."""
    params = _params_of(d, params, 3, "a ternary base term")
    v = [Var(p) for p in CUBE_PARAMS]
    bottom = apply_term(d, params, (v[0], v[1], v[2]))
    top = apply_term(d, params, (v[4], v[5], v[6]))
    return apply_term(d, params, (bottom, v[3], top))


strong_cube_term = wobbly_cube_term


def check_strong_cube(alg: FiniteAlgebra, h: Term, params: Sequence[str] | None = None):
    """Verify h(x,x,y) = y and h(x,y,x) = y, then the three exact identities
    of the 7-ary composition; (True, None) or (False, (label, environment))."""
    params = _params_of(h, params, 3, "a strong cube base term")
    x, y = Var("x"), Var("y")
    for label, args in (("h(x,x,y) = y", (x, x, y)), ("h(x,y,x) = y", (x, y, x))):
        ok, env = check_identity(alg, apply_term(h, params, args), y, ("x", "y"))
        if not ok:
            return False, (label, env)
    p = strong_cube_term(h, params)
    return _check_cube_identities(alg, p, exact_third=True)


def _check_cube_identities(alg: FiniteAlgebra, q: Term, exact_third: bool):
    w, x, y, z = Var("w"), Var("x"), Var("y"), Var("z")
    cases = [
        ("p(w,w,x,x,y,y,z) = z", (w, w, x, x, y, y, z), z, ("w", "x", "y", "z")),
        ("p(w,x,w,x,y,z,y) = z", (w, x, w, x, y, z, y), z, ("w", "x", "y", "z")),
    ]
    if exact_third:
        cases.append(("p(w,x,y,z,w,x,y) = z", (w, x, y, z, w, x, y), z,
                      ("w", "x", "y", "z")))
    for label, args, rhs, vs in cases:
        lhs = substitute(q, dict(zip(CUBE_PARAMS, args)))
        ok, env = check_identity(alg, lhs, rhs, vs)
        if not ok:
            return False, (label, env)
    return True, None


def check_difference_term(alg: FiniteAlgebra, d: Term,
                          params: Sequence[str] | None = None):
    """Verify d(x,x,y) = y exactly, and for every pair (x, y) that
    d(x,y,x) is congruent to y modulo the binary commutator of the principal
    congruence generated by (x, y)."""
    from .commutator import tc_commutator
    from .congruence import cg

    params = _params_of(d, params, 3, "a difference term")
    x, y = Var("x"), Var("y")
    ok, env = check_identity(alg, apply_term(d, params, (x, x, y)), y, ("x", "y"))
    if not ok:
        return False, ("d(x,x,y) = y", env)

    dxyx = term_function(alg, apply_term(d, params, (x, y, Var("x"))), ("x", "y"))
    n = alg.size
    comm_cache = {}
    for a in range(n):
        for b in range(n):
            theta = cg(alg, [(a, b)])
            delta = comm_cache.get(theta)
            if delta is None:
                delta = tc_commutator(alg, (theta, theta), 0)
                comm_cache[theta] = delta
            val = int(dxyx[a * n + b])
            if not delta.related(val, b):
                return False, ("d(x,y,x) = y mod [theta,theta]", {"x": a, "y": b})
    return True, None


def check_wobbly_identities(alg: FiniteAlgebra, q: Term,
                            params: Sequence[str] | None = None):
    """Verify q(x,x,x,x,y,y,y) = y and q(x,x,y,y,x,x,y) = y exactly, and
    q(x,y,x,y,x,y,x) = y modulo the ternary commutator of the principal
    congruence of (x, y)."""
    from .commutator import tc_commutator
    from .congruence import cg

    if params is None:
        params = CUBE_PARAMS
    params = tuple(params)
    if len(params) != 7:
        raise InputError("a wobbly cube term must use exactly 7 variables")
    x, y = Var("x"), Var("y")
    cases = [
        ("q(x,x,x,x,y,y,y) = y", (x, x, x, x, y, y, y)),
        ("q(x,x,y,y,x,x,y) = y", (x, x, y, y, x, x, y)),
    ]
    for label, args in cases:
        lhs = substitute(q, dict(zip(params, args)))
        ok, env = check_identity(alg, lhs, y, ("x", "y"))
        if not ok:
            return False, (label, env)

    lhs = substitute(q, dict(zip(params, (x, y, x, y, x, y, x))))
    tab = term_function(alg, lhs, ("x", "y"))
    n = alg.size
    comm_cache = {}
    for a in range(n):
        for b in range(n):
            theta = cg(alg, [(a, b)])
            delta = comm_cache.get(theta)
            if delta is None:
                delta = tc_commutator(alg, (theta, theta, theta), 0)
                comm_cache[theta] = delta
            if not delta.related(int(tab[a * n + b]), b):
                return False, ("q(x,y,x,y,x,y,x) = y mod [theta,theta,theta]",
                               {"x": a, "y": b})
    return True, None


def check_binary_delta_difference(alg: FiniteAlgebra, theta, d: Term,
                                  params: Sequence[str] | None = None):
    """For all theta-related triples x, y, z: the square with bottom row
    (x, y) and top row (z, d(x,y,z)) belongs to the binary delta of
    (theta, theta); (True, None) or (False, witness triple)."""
    from .commutator import delta_binary

    params = _params_of(d, params, 3, "a difference term")
    rel = delta_binary(alg, theta, theta)
    dtab = term_function(alg, d, params)
    n = alg.size
    for x in range(n):
        for y in range(n):
            if not theta.related(x, y):
                continue
            for z in range(n):
                if not theta.related(y, z):
                    continue
                val = int(dtab[(x * n + y) * n + z])
                if not rel.contains_square((x, y, z, val)):
                    return False, {"x": x, "y": y, "z": z, "d": val}
    return True, None


def check_wobbly_completion(alg: FiniteAlgebra, theta, q: Term,
                            params: Sequence[str] | None = None,
                            cap: int = 2_000_000):
    """Enumerate 7-vertex partial cubes whose three side-0 faces lie in the
    binary delta of (theta, theta), complete the last vertex with q, and check
    membership of the completed cube in the ternary delta; (True, None) or
    (False, witness).  Raises ResourceLimitError past the enumeration cap."""
    from .commutator import delta_binary, delta_ternary

    if params is None:
        params = CUBE_PARAMS
    params = tuple(params)
    if len(params) != 7:
        raise InputError("a wobbly cube term must use exactly 7 variables")
    n = alg.size
    drel = delta_binary(alg, theta, theta)
    trel = delta_ternary(alg, (theta, theta, theta))
    qtab = term_function(alg, q, params)

    squares = drel.square_set()
    by_pair: dict[tuple[int, int], list[tuple[int, int]]] = {}
    by_triple: dict[tuple[int, int, int], list[int]] = {}
    for (s0, s1, s2, s3) in squares:
        by_pair.setdefault((s0, s1), []).append((s2, s3))
        by_triple.setdefault((s0, s1, s2), []).append(s3)

    count = 0
    for (a, b, c, d) in squares:               # face on axes {0,1}: (a,b,c,d)
        for (e, f) in by_pair.get((a, b), ()):  # face on axes {0,2}: (a,b,e,f)
            for g in by_triple.get((a, c, e), ()):  # face on axes {1,2}
                count += 1
                if count > cap:
                    raise ResourceLimitError(
                        "wobbly completion enumeration exceeded cap",
                        limit=cap, reached=count)
                idx = 0
                for val in (a, b, c, d, e, f, g):
                    idx = idx * n + val
                star = int(qtab[idx])
                cube = (a, b, c, d, e, f, g, star)
                if not trel.contains_cube(cube):
                    return False, {"partial": (a, b, c, d, e, f, g), "star": star}
    return True, None
