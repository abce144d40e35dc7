"""Per-variable operation algebra: conservative binary pairs, majority/minority
triples, pair-set bookkeeping, multimorphism checks, and the derived ternary
majority operation.

A binary pair is a per-variable pair of tables (meet, join); a triple is three
per-variable ternary tables.  The pair-set M marks, per variable, the label
pairs on which the binary pair is required to be commutative; on the
complement the triple must behave as majority/majority/minority.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .costs import INF, cost_le, is_finite
from .errors import ValidationError, VcspError
from .model import DomainSpec


def _pair_key(a, b):
    return (a, b) if a < b else (b, a)


def all_label_pairs(size):
    """All unordered label pairs of a domain, as sorted tuples."""
    return [(a, b) for a in range(size) for b in range(a + 1, size)]


@dataclass(frozen=True)
class PairSet:
    """Per-variable sets of unordered label pairs (the commutative side)."""

    domains: DomainSpec
    members: tuple  # per variable: frozenset of (a, b) with a < b

    def __post_init__(self):
        if len(self.members) != self.domains.variable_count:
            raise VcspError("pair set must cover every variable")
        norm = []
        for i, pairs in enumerate(self.members):
            size = self.domains.sizes[i]
            clean = set()
            for a, b in pairs:
                if a == b or not (0 <= a < size and 0 <= b < size):
                    raise VcspError(f"bad pair {(a, b)} for variable {i}")
                clean.add(_pair_key(a, b))
            norm.append(frozenset(clean))
        object.__setattr__(self, "members", tuple(norm))

    @classmethod
    def full(cls, domains):
        return cls(domains, tuple(
            frozenset(all_label_pairs(s)) for s in domains.sizes))

    @classmethod
    def empty(cls, domains):
        return cls(domains, tuple(frozenset() for _ in domains.sizes))

    def universe(self, i):
        return all_label_pairs(self.domains.sizes[i])

    def complement(self, i):
        return sorted(set(self.universe(i)) - self.members[i])

    def complement_set(self):
        """The pair set holding exactly the pairs this one lacks."""
        return PairSet(self.domains, tuple(
            frozenset(self.complement(i))
            for i in range(self.domains.variable_count)))

    def is_full(self):
        return all(
            len(self.members[i]) == len(self.universe(i))
            for i in range(self.domains.variable_count))

    def with_added(self, i, pairs):
        members = list(self.members)
        members[i] = members[i] | {_pair_key(a, b) for a, b in pairs}
        return PairSet(self.domains, tuple(members))

    def total_size(self):
        return sum(len(m) for m in self.members)


class BinaryPair:
    """Per-variable (meet, join) tables, D_i x D_i -> D_i each."""

    __slots__ = ("domains", "meet_tables", "join_tables")

    def __init__(self, domains, meet_tables, join_tables):
        self.domains = domains
        self.meet_tables = tuple(tuple(tuple(r) for r in t) for t in meet_tables)
        self.join_tables = tuple(tuple(tuple(r) for r in t) for t in join_tables)
        for i, s in enumerate(domains.sizes):
            for t in (self.meet_tables[i], self.join_tables[i]):
                if len(t) != s or any(len(r) != s for r in t):
                    raise VcspError(f"operation table for variable {i} has wrong shape")
                if any(not 0 <= v < s for r in t for v in r):
                    raise VcspError(f"operation table for variable {i} has out-of-range label")

    @classmethod
    def min_max(cls, domains):
        tabs_min = []
        tabs_max = []
        for s in domains.sizes:
            tabs_min.append([[min(a, b) for b in range(s)] for a in range(s)])
            tabs_max.append([[max(a, b) for b in range(s)] for a in range(s)])
        return cls(domains, tabs_min, tabs_max)

    def meet(self, i, a, b):
        return self.meet_tables[i][a][b]

    def join(self, i, a, b):
        return self.join_tables[i][a][b]

    def with_tables(self, i, meet_table, join_table):
        meets = list(self.meet_tables)
        joins = list(self.join_tables)
        meets[i] = meet_table
        joins[i] = join_table
        return BinaryPair(self.domains, meets, joins)


class TernaryOp:
    """One per-variable ternary table, D_i^3 -> D_i."""

    __slots__ = ("domains", "tables")
    arity = 3

    def __init__(self, domains, tables):
        self.domains = domains
        self.tables = tuple(
            tuple(tuple(tuple(r) for r in s) for s in t) for t in tables)
        for i, size in enumerate(domains.sizes):
            t = self.tables[i]
            if len(t) != size or any(
                    len(s) != size or any(len(r) != size for r in s) for s in t):
                raise VcspError(f"ternary table for variable {i} has wrong shape")

    @classmethod
    def from_function(cls, domains, fn):
        tables = []
        for i, size in enumerate(domains.sizes):
            tables.append([[[fn(i, a, b, c) for c in range(size)]
                            for b in range(size)] for a in range(size)])
        return cls(domains, tables)

    def apply(self, i, a, b, c):
        return self.tables[i][a][b][c]


class MjnTriple:
    """Per-variable triple of ternary tables (two majority-like, one minority)."""

    __slots__ = ("domains", "ops")

    def __init__(self, domains, op1, op2, op3):
        if not isinstance(op1, TernaryOp):
            op1 = TernaryOp(domains, op1)
            op2 = TernaryOp(domains, op2)
            op3 = TernaryOp(domains, op3)
        self.domains = domains
        self.ops = (op1, op2, op3)

    @classmethod
    def canonical(cls, domains):
        """The textbook majority/majority/minority triple."""

        def mj1(i, x, y, z):
            return y if y == z else x

        def mj2(i, x, y, z):
            return x if x == z else y

        def mn3(i, x, y, z):
            if y == z and z != x:
                return x
            if x == z and z != y:
                return y
            return z

        return cls(
            domains,
            TernaryOp.from_function(domains, mj1),
            TernaryOp.from_function(domains, mj2),
            TernaryOp.from_function(domains, mn3),
        )

    def apply(self, pos, i, a, b, c):
        return self.ops[pos].apply(i, a, b, c)


def apply_pair(pair, x, y):
    """Componentwise (x meet y, x join y)."""
    if len(x) != len(y) or len(x) != pair.domains.variable_count:
        raise VcspError("assignments do not match the domain spec")
    lo = tuple(pair.meet(i, x[i], y[i]) for i in range(len(x)))
    hi = tuple(pair.join(i, x[i], y[i]) for i in range(len(x)))
    return lo, hi


def conservative_violation(pair, i):
    """Smallest (a, b) where {a meet b, a join b} != {a, b}, or None."""
    size = pair.domains.sizes[i]
    for a in range(size):
        for b in range(size):
            if {pair.meet(i, a, b), pair.join(i, a, b)} != {a, b}:
                return (a, b)
    return None


def classify_pair(pair, i):
    """Map each label pair of variable i to True iff both ops are commutative on it."""
    bad = conservative_violation(pair, i)
    if bad is not None:
        raise ValidationError(
            f"pair is not conservative at variable {i}, labels {bad}",
            witness=(i,) + bad)
    out = {}
    for a, b in all_label_pairs(pair.domains.sizes[i]):
        out[(a, b)] = (pair.meet(i, a, b) == pair.meet(i, b, a)
                       and pair.join(i, a, b) == pair.join(i, b, a))
    return out


def is_stp_on(pair, m):
    """Conservative everywhere and commutative on every pair of m."""
    for i in range(pair.domains.variable_count):
        bad = conservative_violation(pair, i)
        if bad is not None:
            return False, (i, bad, "not conservative")
        for a, b in sorted(m.members[i]):
            if (pair.meet(i, a, b) != pair.meet(i, b, a)
                    or pair.join(i, a, b) != pair.join(i, b, a)):
                return False, (i, (a, b), "not commutative")
    return True, None


def is_mjn_on(triple, target):
    """Each component conservative; majority/minority contract on ``target`` pairs.

    ``target`` is the pair set (per variable) on which the contract must hold;
    triples whose value set is not one of those pairs are only required to be
    conservative.
    """
    domains = triple.domains
    for i in range(domains.variable_count):
        size = domains.sizes[i]
        wanted = target.members[i]
        for a, b, c in itertools.product(range(size), repeat=3):
            vals = (triple.apply(0, i, a, b, c),
                    triple.apply(1, i, a, b, c),
                    triple.apply(2, i, a, b, c))
            for pos, v in enumerate(vals):
                if v not in (a, b, c):
                    return False, (i, (a, b, c), f"component {pos + 1} not conservative")
            distinct = {a, b, c}
            if len(distinct) == 2 and _pair_key(*sorted(distinct)) in wanted:
                counts = {v: (a, b, c).count(v) for v in distinct}
                major = max(counts, key=counts.get)
                minor = min(counts, key=counts.get)
                if vals[0] != major:
                    return False, (i, (a, b, c), "first component not majority")
                if vals[1] != major:
                    return False, (i, (a, b, c), "second component not majority")
                if vals[2] != minor:
                    return False, (i, (a, b, c), "third component not minority")
    return True, None


def check_binary_multimorphism(table, pair, scope, tol=0):
    """Inequality f(x meet y) + f(x join y) <= f(x) + f(y) over feasible pairs.

    Returns (True, None) or (False, (x, y)) with the lexicographically
    smallest violating ordered pair of feasible tuples.
    """
    dom = table.dom()
    for x in dom:
        fx = table[x]
        for y in dom:
            lo = tuple(pair.meet(scope[p], x[p], y[p]) for p in range(len(x)))
            hi = tuple(pair.join(scope[p], x[p], y[p]) for p in range(len(x)))
            left = table[lo] + table[hi]
            right = fx + table[y]
            if not cost_le(left, right, tol):
                return False, (x, y)
    return True, None


def check_ternary_multimorphism(table, triple, scope, tol=0):
    """Three-way inequality over all ordered feasible triples."""
    dom = table.dom()
    m = len(scope)
    for x in dom:
        for y in dom:
            for z in dom:
                left = 0
                for pos in range(3):
                    img = tuple(
                        triple.apply(pos, scope[p], x[p], y[p], z[p])
                        for p in range(m))
                    left = left + table[img]
                right = table[x] + table[y] + table[z]
                if not cost_le(left, right, tol):
                    return False, (x, y, z)
    return True, None


def check_polymorphism(op, tuples, scope):
    """Closure of a tuple set under a componentwise k-ary operation."""
    tuples = set(tuples)
    m = len(scope)
    for args in itertools.product(sorted(tuples), repeat=op.arity):
        img = tuple(
            op.apply(scope[p], *(args[j][p] for j in range(op.arity)))
            for p in range(m))
        if img not in tuples:
            return False
    return True


def ternary_polymorphism_closed(op, tuples, scope):
    """Vectorized closure check of a tuple set under a ternary operation.

    Same contract as ``check_polymorphism`` for arity-3 operations, but
    usable on the larger feasible sets the pipeline validates.
    """
    import numpy as np

    tuples = sorted(set(map(tuple, tuples)))
    if not tuples:
        return True
    arr = np.array(tuples, dtype=np.int64)
    m = len(scope)
    shapes = [len(op.tables[scope[p]]) for p in range(m)]
    strides = np.ones(m, dtype=np.int64)
    for p in range(m - 2, -1, -1):
        strides[p] = strides[p + 1] * shapes[p + 1]
    member_keys = np.sort(arr @ strides)
    n = len(arr)
    keys = np.zeros((n, n, n), dtype=np.int64)
    for p in range(m):
        t = np.array(op.tables[scope[p]], dtype=np.int64)
        col = arr[:, p]
        keys += strides[p] * t[col[:, None, None], col[None, :, None],
                               col[None, None, :]]
    return bool(np.isin(keys.ravel(), member_keys).all())


def build_majority(pair, triple):
    """Derive the ternary majority operation from the pair and the triple.

    The result acts as the majority operation whenever the argument value set
    has at most two elements; a failure of that contract means the input
    system is invalid.
    """
    domains = pair.domains

    def mu_bar(i, x, y, z):
        return pair.meet(
            i,
            pair.meet(i, pair.join(i, y, x), pair.join(i, y, z)),
            pair.join(i, x, z))

    def mu(i, x, y, z):
        return triple.apply(
            0, i, mu_bar(i, x, y, z), mu_bar(i, y, z, x), mu_bar(i, z, x, y))

    out = TernaryOp.from_function(domains, mu)
    for i in range(domains.variable_count):
        size = domains.sizes[i]
        for a, b, c in itertools.product(range(size), repeat=3):
            v = out.apply(i, a, b, c)
            if v not in (a, b, c):
                raise ValidationError(
                    "derived majority operation is not conservative",
                    witness=(i, (a, b, c)))
            if len({a, b, c}) <= 2:
                counts = {u: (a, b, c).count(u) for u in {a, b, c}}
                major = max(counts, key=counts.get)
                if v != major:
                    raise ValidationError(
                        "derived operation is not majority on a two-value triple; "
                        "the input operation system is invalid",
                        witness=(i, (a, b, c)))
    return out


def normalize_pairset(pair, m):
    """Move commutative complement pairs into m.

    After this, every pair outside m is genuinely non-commutative, which the
    rewriting stage assumes.
    """
    out = m
    for i in range(pair.domains.variable_count):
        extra = []
        for a, b in m.complement(i):
            if (pair.meet(i, a, b) == pair.meet(i, b, a)
                    and pair.join(i, a, b) == pair.join(i, b, a)):
                extra.append((a, b))
        if extra:
            out = out.with_added(i, extra)
    return out


@dataclass(frozen=True)
class OperationSystem:
    """A binary pair, a ternary triple, and the pair set tying them together."""

    pair: BinaryPair
    triple: MjnTriple
    m: PairSet

    @property
    def domains(self):
        return self.pair.domains

    def validate(self):
        """Check the structural contract; raises with a witness on failure."""
        ok, witness = is_stp_on(self.pair, self.m)
        if not ok:
            raise ValidationError(
                f"binary pair violates its contract: {witness[2]} "
                f"at variable {witness[0]}, labels {witness[1]}",
                witness=witness)
        ok, witness = is_mjn_on(self.triple, self.m.complement_set())
        if not ok:
            raise ValidationError(
                f"ternary triple violates its contract: {witness[2]} "
                f"at variable {witness[0]}, labels {witness[1]}",
                witness=witness)

    def normalized(self):
        return OperationSystem(self.pair, self.triple,
                               normalize_pairset(self.pair, self.m))


def check_instance_multimorphism(instance, ops, tol=0):
    """Per-term check of both inequalities; returns (ok, term_index, witness)."""
    for idx, term in enumerate(instance.terms):
        ok, w = check_binary_multimorphism(term.table, ops.pair, term.scope, tol)
        if not ok:
            return False, idx, ("binary", w)
        ok, w = check_ternary_multimorphism(term.table, ops.triple, term.scope, tol)
        if not ok:
            return False, idx, ("ternary", w)
    return True, None, None


def check_global_multimorphism(instance, ops, cap=None, tol=0):
    """Cross-validation: both inequalities on the whole cost function.

    Enumerates the global feasible set, so only usable at desk scale.
    """
    from .model import DEFAULT_CAP, feasible_assignments

    cap = DEFAULT_CAP if cap is None else cap
    feas = sorted(feasible_assignments(instance, cap=cap))
    scope = tuple(range(instance.domains.variable_count))
    for x in feas:
        for y in feas:
            lo, hi = apply_pair(ops.pair, x, y)
            if not cost_le(instance.evaluate(lo) + instance.evaluate(hi),
                           instance.evaluate(x) + instance.evaluate(y), tol):
                return False, (x, y)
    for x, y, z in itertools.product(feas, repeat=3):
        left = 0
        for pos in range(3):
            img = tuple(
                ops.triple.apply(pos, i, x[i], y[i], z[i]) for i in scope)
            left = left + instance.evaluate(img)
        if not cost_le(left,
                       instance.evaluate(x) + instance.evaluate(y)
                       + instance.evaluate(z), tol):
            return False, (x, y, z)
    return True, None
