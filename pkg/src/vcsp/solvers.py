"""Exact solvers: brute force, the min-cut path for totally ordered binary
submodular instances, and the full three-stage pipeline driver.

The min-cut encoding uses one boolean "label >= level" indicator node per
variable per non-bottom label.  Monotonicity between consecutive levels and
crisp (infinite-cost) structure are enforced with an exact infinite edge
class, never a large constant.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .consistency import (
    certify_decomposition,
    decompose_instance,
    enforce_strong_3_consistency,
    restrict_instance,
    restrict_network,
    restrict_operation_system,
    support_maps,
)
from .costs import INF, cost_eq, is_finite
from .errors import StageError, VcspError
from .model import DEFAULT_CAP, CostTable, DomainSpec, Instance, Term
from .operations import (
    BinaryPair,
    PairSet,
    build_majority,
    check_binary_multimorphism,
    is_stp_on,
    ternary_polymorphism_closed,
)
from .reduction import run_stage2


@dataclass
class SolveResult:
    optimum: object
    argmin: object
    stats: dict = field(default_factory=dict)


def solve_bruteforce(instance, cap=DEFAULT_CAP):
    """Exact minimum by enumeration; ties broken lexicographically."""
    best = INF
    best_x = None
    for x in instance.domains.assignments(cap=cap):
        c = instance.evaluate(x)
        if c < best:
            best = c
            best_x = x
    return SolveResult(best, best_x, {"path": "bruteforce"})


@dataclass
class TournamentOrder:
    """Per-variable total orders under which meet/join act as min/max.

    ``orders[i]`` lists the labels of variable i from bottom to top, or is
    None when the pair's orientation on that variable contains a 3-cycle;
    ``cycles[i]`` then holds a witness cycle.
    """

    orders: list
    cycles: list

    @property
    def all_ordered(self):
        return all(o is not None for o in self.orders)


def extract_tournament_order(pair):
    """Orient every label pair by the meet table and test transitivity."""
    ok, witness = is_stp_on(pair, PairSet.full(pair.domains))
    if not ok:
        raise VcspError(
            f"pair must be conservative and fully commutative; got {witness}")
    orders = []
    cycles = []
    for i in range(pair.domains.variable_count):
        size = pair.domains.sizes[i]
        below = [sum(1 for b in range(size)
                     if b != a and pair.meet(i, a, b) == a)
                 for a in range(size)]
        order = sorted(range(size), key=lambda a: (-below[a], a))
        transitive = True
        for p in range(size):
            for q in range(p + 1, size):
                if pair.meet(i, order[p], order[q]) != order[p]:
                    transitive = False
        if transitive:
            orders.append(order)
            cycles.append(None)
        else:
            orders.append(None)
            cycles.append(_find_three_cycle(pair, i))
    return TournamentOrder(orders, cycles)


def _find_three_cycle(pair, i):
    size = pair.domains.sizes[i]
    for a in range(size):
        for b in range(size):
            for c in range(size):
                if len({a, b, c}) == 3:
                    if (pair.meet(i, a, b) == a and pair.meet(i, b, c) == b
                            and pair.meet(i, c, a) == c):
                        return (a, b, c)
    return None


class _InfiniteFlow(Exception):
    pass


class MaxFlow:
    """Dinic's algorithm over exact capacities; ``None`` means infinite."""

    def __init__(self, n):
        self.n = n
        self.to = []
        self.cap = []
        self.adj = [[] for _ in range(n)]

    def add_edge(self, u, v, cap):
        self.adj[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(cap)
        self.adj[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0)

    def _residual(self, e):
        return self.cap[e]

    def _bfs(self, s, t):
        level = [-1] * self.n
        level[s] = 0
        queue = [s]
        for u in queue:
            for e in self.adj[u]:
                cap = self.cap[e]
                if (cap is None or cap > 0) and level[self.to[e]] < 0:
                    level[self.to[e]] = level[u] + 1
                    queue.append(self.to[e])
        return level if level[t] >= 0 else None

    def _dfs(self, u, t, f, level, it):
        if u == t:
            if f is None:
                raise _InfiniteFlow()
            return f
        while it[u] < len(self.adj[u]):
            e = self.adj[u][it[u]]
            v = self.to[e]
            cap = self.cap[e]
            if (cap is None or cap > 0) and level[v] == level[u] + 1:
                if cap is None:
                    f2 = f
                elif f is None:
                    f2 = cap
                else:
                    f2 = min(f, cap)
                d = self._dfs(v, t, f2, level, it)
                if d:
                    if self.cap[e] is not None:
                        self.cap[e] -= d
                    rev = e ^ 1
                    if self.cap[rev] is not None:
                        self.cap[rev] += d
                    return d
            it[u] += 1
        return 0

    def max_flow(self, s, t):
        """Total flow value, or INF when an infinite augmenting path exists."""
        total = 0
        while True:
            level = self._bfs(s, t)
            if level is None:
                return total
            it = [0] * self.n
            while True:
                try:
                    d = self._dfs(s, t, None, level, it)
                except _InfiniteFlow:
                    return INF
                if not d:
                    break
                total += d

    def min_cut_source_side(self, s):
        """Nodes reachable from s in the residual graph after max_flow."""
        seen = [False] * self.n
        seen[s] = True
        queue = [s]
        for u in queue:
            for e in self.adj[u]:
                cap = self.cap[e]
                if (cap is None or cap > 0) and not seen[self.to[e]]:
                    seen[self.to[e]] = True
                    queue.append(self.to[e])
        return {u for u in range(self.n) if seen[u]}


def _merge_repeated(term):
    """Rewrite a term so no variable repeats in its scope."""
    scope = term.scope
    distinct = sorted(set(scope))
    if len(distinct) == len(scope):
        return term
    positions = {v: [p for p, w in enumerate(scope) if w == v] for v in distinct}
    shape = tuple(term.table.shape[positions[v][0]] for v in distinct)

    def entry(*vals):
        full = [None] * len(scope)
        for v, val in zip(distinct, vals):
            for p in positions[v]:
                full[p] = val
        return term.table[tuple(full)]

    return Term(CostTable.from_function(shape, entry), tuple(distinct))


def _prune_unsupported(instance):
    """Drop labels with no finite support in some term; fixpoint.

    Returns per-variable kept-label lists, possibly empty.
    """
    keep = [set(range(s)) for s in instance.domains.sizes]
    changed = True
    while changed:
        changed = False
        for term in instance.terms:
            live = [t for t in term.table.tuples()
                    if is_finite(term.table[t])
                    and all(t[p] in keep[term.scope[p]] for p in range(len(t)))]
            for p, var in enumerate(term.scope):
                allowed = {t[p] for t in live}
                if not keep[var] <= allowed:
                    keep[var] &= allowed
                    changed = True
    return [sorted(k) for k in keep]


class CutEncoding:
    """Min-cut formulation of an ordered, binary, submodular instance.

    Built from an instance whose domains are already relabelled so that
    numeric min/max is the pairwise multimorphism of every term.  The cut
    value of the network plus ``offset`` equals the instance optimum, and
    ``decode`` maps a minimum cut back to an argmin assignment.
    """

    def __init__(self, instance, tol=0):
        self.instance = instance
        self.tol = tol
        self.offset = 0
        sizes = instance.domains.sizes
        self.node_of = {}
        n = 2
        for i, s in enumerate(sizes):
            for level in range(1, s):
                self.node_of[(i, level)] = n
                n += 1
        self.n_nodes = n
        self.edges = {}
        self.unary_acc = [[0] * s for s in sizes]
        for i, s in enumerate(sizes):
            for level in range(1, s - 1):
                self._add(self.node_of[(i, level + 1)], self.node_of[(i, level)], INF)
        for term in instance.terms:
            if term.table.arity == 1:
                self._fold_unary(term.scope[0], term.table)
            elif term.table.arity == 2:
                self._encode_pairwise(term)
            else:
                raise VcspError("cut encoding requires terms of arity <= 2")
        for i, s in enumerate(sizes):
            vals = self.unary_acc[i]
            self.offset = self.offset + vals[0]
            for level in range(1, s):
                w = vals[level] - vals[level - 1]
                if w >= 0:
                    self._add(self.node_of[(i, level)], 1, w)
                else:
                    self._add(0, self.node_of[(i, level)], -w)
                    self.offset = self.offset + w

    def _add(self, u, v, cap):
        if cap is not INF and cap <= 0:
            return
        cur = self.edges.get((u, v), 0)
        if cur is INF or cap is INF:
            self.edges[(u, v)] = INF
        else:
            self.edges[(u, v)] = cur + cap

    def _fold_unary(self, var, table):
        for a in range(table.shape[0]):
            c = table[(a,)]
            if c is INF:
                raise VcspError(
                    "unary infinity should have been pruned before encoding")
            self.unary_acc[var][a] = self.unary_acc[var][a] + c

    def _encode_pairwise(self, term):
        i, j = term.scope
        table = term.table
        si, sj = table.shape
        finite = [[is_finite(table[(a, b)]) for b in range(sj)] for a in range(si)]
        lo = []
        hi = []
        for a in range(si):
            row = [b for b in range(sj) if finite[a][b]]
            if not row:
                raise VcspError("empty row should have been pruned before encoding")
            if row != list(range(row[0], row[-1] + 1)):
                raise StageError(
                    "mincut", "feasible set of a pairwise term is not an "
                    "interval per row; crisp structure is not min/max closed",
                    witness=(i, j, a))
            lo.append(row[0])
            hi.append(row[-1])
        if any(lo[a] > lo[a + 1] or hi[a] > hi[a + 1] for a in range(si - 1)):
            raise StageError(
                "mincut", "row intervals of a pairwise term are not monotone; "
                "crisp structure is not min/max closed", witness=(i, j))

        def g(a, b):
            return table[(a, min(max(b, lo[a]), hi[a]))]

        alpha = [[g(l, m) - g(l - 1, m) - g(l, m - 1) + g(l - 1, m - 1)
                  for m in range(1, sj)] for l in range(1, si)]
        for l in range(1, si):
            for m in range(1, sj):
                cap = -alpha[l - 1][m - 1]
                if cap < -self.tol:
                    raise StageError(
                        "mincut", "pairwise term is not submodular after "
                        "relabelling", witness=(i, j, l, m))
                if cap > 0:
                    self._add(self.node_of[(i, l)], self.node_of[(j, m)], cap)
        for l in range(1, si):
            w = g(l, 0) - g(l - 1, 0)
            w = w + sum(alpha[l - 1])
            for a in range(l, si):
                self.unary_acc[i][a] = self.unary_acc[i][a] + w
        for m in range(1, sj):
            w = g(0, m) - g(0, m - 1)
            for b in range(m, sj):
                self.unary_acc[j][b] = self.unary_acc[j][b] + w
        self.offset = self.offset + g(0, 0)
        for l in range(1, si):
            if lo[l] >= 1:
                self._add(self.node_of[(i, l)], self.node_of[(j, lo[l])], INF)
        for m in range(1, sj):
            t_m = next(a for a in range(si) if hi[a] >= m)
            if t_m >= 1:
                self._add(self.node_of[(j, m)], self.node_of[(i, t_m)], INF)

    def solve(self):
        """(optimum, argmin) for the encoded instance."""
        flow = MaxFlow(self.n_nodes)
        for (u, v), cap in sorted(self.edges.items()):
            flow.add_edge(u, v, None if cap is INF else cap)
        value = flow.max_flow(0, 1)
        if value is INF:
            return INF, None
        source_side = flow.min_cut_source_side(0)
        return value + self.offset, self.decode(source_side)

    def decode(self, source_side):
        x = []
        for i, s in enumerate(self.instance.domains.sizes):
            level = 0
            for l in range(1, s):
                if self.node_of[(i, l)] in source_side:
                    level = l
            x.append(level)
        return tuple(x)


def mincut_reduce(instance, tol=0):
    """Build the cut encoding for an ordered binary submodular instance."""
    return CutEncoding(instance, tol=tol)


def _solve_by_mincut(instance, tol=0):
    """Prune, encode and solve; instance must already be order-relabelled."""
    terms = [_merge_repeated(t) for t in instance.terms]
    instance = Instance(instance.domains, terms)
    keep = _prune_unsupported(instance)
    if any(not k for k in keep):
        return INF, None
    reduced = restrict_instance(instance, keep)
    optimum, argmin = mincut_reduce(reduced, tol=tol).solve()
    if argmin is None:
        return optimum, None
    return optimum, tuple(keep[i][v] for i, v in enumerate(argmin))


def solve_stp(instance, pair, cap=DEFAULT_CAP, tol=0):
    """Solve an instance whose pair is a full STP multimorphism of every term.

    Takes the min-cut path when every variable's tournament is transitive and
    all terms are binary or unary; otherwise falls back to brute force.
    """
    order = extract_tournament_order(pair)
    merged = [_merge_repeated(t) for t in instance.terms]
    stats = {"path": "mincut"}
    if not order.all_ordered:
        stats["path"] = "bruteforce"
        stats["cycles"] = [c for c in order.cycles if c is not None]
    elif any(t.table.arity > 2 for t in merged):
        stats["path"] = "bruteforce"
        stats["reason"] = "term arity above 2"
    if stats["path"] == "bruteforce":
        result = solve_bruteforce(instance, cap=cap)
        result.stats.update(stats)
        return result
    relabelled = restrict_instance(
        Instance(instance.domains, merged), order.orders)
    minmax = BinaryPair.min_max(relabelled.domains)
    for idx, term in enumerate(relabelled.terms):
        ok, w = check_binary_multimorphism(term.table, minmax, term.scope, tol)
        if not ok:
            raise VcspError(
                f"term {idx} is not submodular under the extracted order at {w}; "
                "the pair was not a multimorphism of every term")
    optimum, argmin = _solve_by_mincut(relabelled, tol=tol)
    if argmin is not None:
        argmin = tuple(order.orders[i][v] for i, v in enumerate(argmin))
        check = instance.evaluate(argmin)
        if not cost_eq(check, optimum, tol):
            raise VcspError(
                f"cut optimum {optimum} disagrees with the decoded assignment "
                f"cost {check}")
    return SolveResult(optimum, argmin, stats)


def solve_pipeline(instance, ops, cap=DEFAULT_CAP, paranoid=False, trace=None,
                   tol=0):
    """Run validation, consistency, pair rewriting and the final solve."""
    stats = {}
    t0 = time.perf_counter()

    ops.validate()
    ops = ops.normalized()
    mu = build_majority(ops.pair, ops.triple)
    for idx, term in enumerate(instance.terms):
        if not ternary_polymorphism_closed(mu, term.table.dom(), term.scope):
            raise StageError(
                "validate",
                f"derived majority operation is not a polymorphism of term "
                f"{idx}; the required operation structure is missing",
                witness=idx)
    stats["validate_s"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    net = decompose_instance(instance, cap=cap)
    net, empty = enforce_strong_3_consistency(net)
    if empty:
        stats["consistency_s"] = time.perf_counter() - t1
        stats["path"] = "infeasible"
        return SolveResult(INF, None, stats)
    if not certify_decomposition(net, instance, cap=cap):
        raise StageError(
            "consistency",
            "binary decomposition does not capture the feasible set; "
            "the instance lacks the required majority structure")
    keep = support_maps(net)
    net_r = restrict_network(net, keep)
    inst_r = restrict_instance(instance, keep)
    ops_r = restrict_operation_system(ops, keep).normalized()
    stats["consistency_s"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    trace_lines = [] if trace is None else trace
    final_ops = run_stage2(inst_r, ops_r, net_r, paranoid=paranoid,
                           trace=trace_lines, tol=tol)
    stats["reduce_s"] = time.perf_counter() - t2
    stats["reduce_iterations"] = len(trace_lines)
    stats["final_ops"] = final_ops

    t3 = time.perf_counter()
    crisp_terms = []
    n = inst_r.domains.variable_count
    for i in range(n):
        for j in range(i + 1, n):
            rel = net_r.rel(i, j)
            tuples = {(int(a), int(b)) for a in range(rel.shape[0])
                      for b in range(rel.shape[1]) if rel[a, b]}
            crisp_terms.append(Term(
                CostTable.relation(rel.shape, tuples), (i, j)))
    stage3 = Instance(inst_r.domains, list(inst_r.terms) + crisp_terms)
    result = solve_stp(stage3, final_ops.pair, cap=cap, tol=tol)
    stats["solve_s"] = time.perf_counter() - t3
    stats["path"] = result.stats.get("path")
    stats.update({k: v for k, v in result.stats.items() if k != "path"})

    argmin = result.argmin
    if argmin is not None:
        argmin = tuple(keep[i][v] for i, v in enumerate(argmin))
        check = instance.evaluate(argmin)
        if not cost_eq(check, result.optimum, tol):
            raise StageError(
                "solve", f"pipeline optimum {result.optimum} disagrees with "
                f"the cost {check} of its own assignment")
    return SolveResult(result.optimum, argmin, stats)
