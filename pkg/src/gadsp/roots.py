"""Root-system engine: classification, boxed enumeration, quasi-fundamental
set, and lifts into the auxiliary Kac-Moody lattice.

Boxed enumeration works by reflection closure: a reflection at a vertex with
positive pairing lowers exactly one coordinate, so the descending chain from
any positive root to a simple root or fundamental-set element stays inside
every componentwise box containing the root.  Closing the seeds (simple
roots and boxed fundamental-set members) under box-preserving reflections
therefore yields every positive root below the bound.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .builder import QuiverInstance, lattice_member
from .quiver import (
    Quiver,
    dot,
    pair_with_unit,
    reflect_dim,
    sym_form,
    tits,
)


class SearchCapExceeded(RuntimeError):
    """An enumeration or search exceeded its configured budget."""


DEFAULT_BOX_VOLUME_CAP = 5_000_000
DEFAULT_WORK_CAP = 10_000_000


@dataclass(frozen=True)
class RootClass:
    """Outcome of the root decision procedure.

    For real/imaginary vectors the witness replays to the input: apply the
    recorded reflections to `terminal` in reverse order, then negate if
    `negated`.
    """

    kind: str  # "real" | "imaginary" | "not_root"
    negated: bool = False
    reflections: tuple = ()
    terminal: tuple = None


def replay_witness(q: Quiver, rc: RootClass):
    if rc.kind == "not_root":
        raise ValueError("non-roots carry no witness")
    beta = rc.terminal
    for v in reversed(rc.reflections):
        beta = reflect_dim(q, v, beta)
    if rc.negated:
        beta = tuple(-b for b in beta)
    return beta


def is_root(q: Quiver, beta) -> RootClass:
    """Decide real root / imaginary root / not a root.

    Nonzero vectors of mixed sign are never roots.  Non-negative vectors are
    reflected downward at any vertex pairing positively until a simple root
    (real), a fundamental-set member (imaginary), or an exit from the
    positive cone (not a root) is reached.
    """
    if len(beta) != len(q.vertices):
        raise ValueError("vector/vertex index mismatch")
    if all(b == 0 for b in beta):
        return RootClass("not_root")
    has_pos = any(b > 0 for b in beta)
    has_neg = any(b < 0 for b in beta)
    if has_pos and has_neg:
        return RootClass("not_root")
    negated = has_neg
    cur = tuple(-b for b in beta) if negated else tuple(beta)
    used = []
    cap = 10 * sum(cur) + 10
    for _ in range(cap):
        if not q.support_connected(cur):
            return RootClass("not_root")
        if sum(cur) == 1:
            return RootClass("real", negated, tuple(used), cur)
        pivot = None
        for idx in range(len(cur)):
            if cur[idx] and pair_with_unit(q, cur, idx) > 0:
                pivot = idx
                break
        if pivot is None:
            # (cur, eps_a) <= 0 at every supported vertex, hence everywhere.
            return RootClass("imaginary", negated, tuple(used), cur)
        v = q.vertices[pivot]
        cur = reflect_dim(q, v, cur)
        used.append(v)
        if cur[pivot] < 0:
            return RootClass("not_root")
    raise AssertionError("root decision did not terminate (bug guard)")


def fundamental_in_box(q: Quiver, bound, budget=None):
    """All fundamental-set members beta <= bound: nonzero, non-negative,
    connected support, (beta, eps_a) <= 0 everywhere.

    Depth-first over vertices in breadth-first order from the highest-degree
    vertex, pruning with the partial pairing conditions.
    """
    nv = len(q.vertices)
    if nv == 0:
        return []
    if budget is None:
        budget = [DEFAULT_WORK_CAP]
    start = max(range(nv), key=lambda i: (len(q.neighbors(i)), -i))
    order = []
    seen = {start}
    dq = deque([start])
    while dq:
        v = dq.popleft()
        order.append(v)
        for w in q.neighbors(v):
            if w not in seen:
                seen.add(w)
                dq.append(w)
    for v in range(nv):  # disconnected quivers
        if v not in seen:
            seen.add(v)
            order.append(v)
    pos_of = {v: t for t, v in enumerate(order)}
    last_nbr_pos = [max([pos_of[w] for w in q.neighbors(v)] + [pos_of[v]])
                    for v in range(nv)]

    out = []
    values = [0] * nv

    def feasible(t):
        # After assigning order[0..t], check finished vertices exactly and
        # unfinished ones against the best their unassigned neighbors allow.
        for v in range(nv):
            if pos_of[v] > t:
                continue
            assigned_sum = 0
            slack = 0
            for w in q.neighbors(v):
                if pos_of[w] <= t:
                    assigned_sum += values[w]
                else:
                    slack += bound[w]
            lhs = 2 * values[v] - assigned_sum
            if last_nbr_pos[v] <= t:
                if lhs > 0:
                    return False
            elif lhs > slack:
                return False
        return True

    def descend(t):
        budget[0] -= 1
        if budget[0] < 0:
            raise SearchCapExceeded("fundamental-set scan budget exhausted")
        if t == nv:
            beta = tuple(values[v] for v in range(nv))
            if any(beta) and q.support_connected(beta):
                out.append(beta)
            return
        v = order[t]
        for val in range(bound[v] + 1):
            values[v] = val
            if feasible(t):
                descend(t + 1)
        values[v] = 0

    descend(0)
    out.sort()
    return out


def positive_roots_in_box(q: Quiver, bound, budget=None):
    """Map beta -> "real" | "imaginary" over all positive roots beta <= bound."""
    if budget is None:
        budget = [DEFAULT_WORK_CAP]
    nv = len(q.vertices)
    found = {}
    queue = deque()
    for i in range(nv):
        if bound[i] >= 1:
            unit = tuple(1 if k == i else 0 for k in range(nv))
            found[unit] = "real"
            queue.append(unit)
    for beta in fundamental_in_box(q, bound, budget):
        if beta not in found:
            found[beta] = "imaginary"
            queue.append(beta)
    while queue:
        beta = queue.popleft()
        kind = found[beta]
        for idx in range(nv):
            budget[0] -= 1
            if budget[0] < 0:
                raise SearchCapExceeded("root closure budget exhausted")
            c = pair_with_unit(q, beta, idx)
            if c == 0:
                continue
            nb = beta[idx] - c
            if nb < 0 or nb > bound[idx]:
                continue
            new = beta[:idx] + (nb,) + beta[idx + 1:]
            if new not in found:
                found[new] = kind
                queue.append(new)
    return found


def box_volume(bound) -> int:
    vol = 1
    for b in bound:
        vol *= b + 1
    return vol


def enum_constrained_roots(inst: QuiverInstance, bound, lam,
                           box_cap=DEFAULT_BOX_VOLUME_CAP,
                           work_cap=DEFAULT_WORK_CAP):
    """Positive roots 0 < beta <= bound in the level-sum lattice with
    beta . lam = 0, in deterministic (height, lex) order."""
    if any(b < 0 for b in bound):
        raise ValueError("bound must be non-negative")
    if box_volume(bound) > box_cap:
        raise SearchCapExceeded("root box volume above configured limit")
    budget = [work_cap]
    roots = positive_roots_in_box(inst.quiver, bound, budget)
    picked = [beta for beta in roots
              if lattice_member(inst, beta) and not dot(beta, lam)]
    picked.sort(key=lambda b: (sum(b), b))
    return picked


def quasi_fundamental_test(inst: QuiverInstance, beta) -> bool:
    """Membership in the quasi-fundamental set.

    Conditions: beta nonzero and non-negative, in the level-sum lattice,
    connected support, (beta, eps) <= 0 against every leg vertex and every
    composite root.  The composite condition over all multi-indices reduces
    to one inequality because (beta, eps_mi) is the sum over irregular poles
    of (beta, eps_[i, j_i]): its maximum is the sum of per-pole maxima.
    """
    q = inst.quiver
    if any(b < 0 for b in beta) or not any(beta):
        return False
    if not lattice_member(inst, beta):
        return False
    if not q.support_connected(beta):
        return False
    for v in inst.leg_vertices():
        if pair_with_unit(q, beta, q.index(v)) > 0:
            return False
    total = 0
    for i in sorted(inst.i_irr):
        total += max(pair_with_unit(q, beta, q.index((i, j)))
                     for j in range(1, inst.m(i) + 1))
    return total <= 0


# ---------------------------------------------------------------------------
# the lift lattice: generators c_mi (one per multi-index) and c_[i,j,k]


@dataclass(frozen=True)
class LiftElement:
    """Finitely supported integer combination of lift-lattice generators.

    Keys are ("J", multi-index tuple) for composite generators and
    ("L", (i, j, k)) for leg generators.
    """

    coeffs: tuple  # sorted ((key, value), ...) with nonzero values

    @staticmethod
    def from_dict(d):
        items = tuple(sorted((k, v) for k, v in d.items() if v))
        return LiftElement(items)

    def as_dict(self):
        return dict(self.coeffs)

    def support(self):
        return [k for k, _ in self.coeffs]


def generator_pairing(inst: QuiverInstance, a, b) -> int:
    """Pairing of two lift-lattice generators."""
    ka, va = a
    kb, vb = b
    if ka == "J" and kb == "J":
        if va == vb:
            return 2
        total = 2
        for i in range(inst.num_poles):
            if va[i] != vb[i]:
                total -= inst.d(i, va[i], vb[i]) + 2
        return total
    if ka == "L" and kb == "L":
        if va == vb:
            return 2
        if va[:2] == vb[:2] and abs(va[2] - vb[2]) == 1:
            return -1
        return 0
    if ka == "J":
        mi, (i, j, k) = va, vb
    else:
        mi, (i, j, k) = vb, va
    return -1 if (mi[i] == j and k == 1) else 0


def lift_pairing(inst: QuiverInstance, x: LiftElement, y: LiftElement) -> int:
    total = 0
    for ka, va in x.coeffs:
        for kb, vb in y.coeffs:
            total += va * vb * generator_pairing(inst, ka, kb)
    return total


def xi_image(inst: QuiverInstance, x: LiftElement):
    """The projection of a lift element back to a dimension vector."""
    q = inst.quiver
    out = [0] * len(q.vertices)
    for key, value in x.coeffs:
        tag, payload = key
        if tag == "J":
            for i in sorted(inst.i_irr):
                out[q.index((i, payload[i]))] += value
        else:
            out[q.index(payload)] += value
    return tuple(out)


def lift_xi(inst: QuiverInstance, beta) -> LiftElement:
    """A lift of beta with positive weight on both extremal multi-indices.

    The composite coordinates solve a transportation problem: per irregular
    pole the supported block values are marginals with common total (the
    level sum).  One unit is reserved on the all-max multi-index, then the
    rest is filled greedily from the all-min corner, which keeps both
    extremes in the support.  Leg coordinates copy beta directly.
    """
    q = inst.quiver
    if any(b < 0 for b in beta) or not lattice_member(inst, beta):
        raise ValueError("lift requires a non-negative lattice member")
    if not any(beta):
        raise ValueError("lift of zero is not defined")
    coeffs = {}
    for v in inst.leg_vertices():
        val = beta[q.index(v)]
        if val:
            coeffs[("L", v)] = val
    irr = sorted(inst.i_irr)
    marginals = {}
    for i in irr:
        marginals[i] = {j: beta[q.index((i, j))]
                        for j in range(1, inst.m(i) + 1)
                        if beta[q.index((i, j))]}
    level = sum(marginals[irr[0]].values()) if irr else 0
    if level:
        def full_mi(choice):
            mi = [1] * inst.num_poles
            for i in irr:
                mi[i] = choice[i]
            return tuple(mi)

        hi = {i: max(marginals[i]) for i in irr}
        lo = {i: min(marginals[i]) for i in irr}
        mi_hi = full_mi(hi)
        mi_lo = full_mi(lo)
        if mi_hi != mi_lo:
            coeffs[("J", mi_hi)] = coeffs.get(("J", mi_hi), 0) + 1
            for i in irr:
                marginals[i][hi[i]] -= 1
                if not marginals[i][hi[i]]:
                    del marginals[i][hi[i]]
        while marginals[irr[0]]:
            choice = {i: min(marginals[i]) for i in irr}
            cell = full_mi(choice)
            mass = min(marginals[i][choice[i]] for i in irr)
            coeffs[("J", cell)] = coeffs.get(("J", cell), 0) + mass
            for i in irr:
                marginals[i][choice[i]] -= mass
                if not marginals[i][choice[i]]:
                    del marginals[i][choice[i]]
    lift = LiftElement.from_dict(coeffs)
    if xi_image(inst, lift) != tuple(beta):
        raise AssertionError("lift projection mismatch (bug)")
    return lift


def extremal_multi_indices(inst: QuiverInstance, beta):
    """(all-min, all-max) multi-indices of the supported blocks of beta."""
    q = inst.quiver
    lo = [1] * inst.num_poles
    hi = [1] * inst.num_poles
    for i in sorted(inst.i_irr):
        supported = [j for j in range(1, inst.m(i) + 1) if beta[q.index((i, j))]]
        if not supported:
            raise ValueError("beta has no supported block at pole %d" % i)
        lo[i] = min(supported)
        hi[i] = max(supported)
    return tuple(lo), tuple(hi)


def irr_count(inst: QuiverInstance, beta) -> int:
    """Number of irregular poles where beta touches at least two blocks."""
    q = inst.quiver
    count = 0
    for i in sorted(inst.i_irr):
        touched = sum(1 for j in range(1, inst.m(i) + 1)
                      if beta[q.index((i, j))])
        if touched >= 2:
            count += 1
    return count


_TREE_TAGS = {7: "E6-like", 8: "E7-like", 9: "E8-like"}


def classify_tame(inst: QuiverInstance, beta) -> str:
    """Identify the lifted support diagram of a quasi-fundamental vector.

    Returns "wild" when the Tits form is negative; otherwise one of the
    affine diagram tags.  Raises if beta is not quasi-fundamental.
    """
    if not quasi_fundamental_test(inst, beta):
        raise ValueError("classify_tame requires a quasi-fundamental vector")
    qv, _ = tits(inst.quiver, beta)
    if qv < 0:
        return "wild"
    if qv > 0:
        raise AssertionError("quasi-fundamental vector with positive Tits form")
    if irr_count(inst, beta) == 2:
        return "quadrangle-double-edge"
    lift = lift_xi(inst, beta)
    supp = lift.support()
    nvert = len(supp)
    edges = {}
    for a in range(nvert):
        for b in range(a + 1, nvert):
            m = -generator_pairing(inst, supp[a], supp[b])
            if m:
                edges[(a, b)] = m
    degree = [0] * nvert
    for (a, b), m in edges.items():
        degree[a] += m
        degree[b] += m
    single = all(m == 1 for m in edges.values())
    if nvert == 2 and edges.get((0, 1)) == 2:
        return "double-edge"
    if nvert == 3 and single and len(edges) == 3:
        return "triangle"
    if nvert == 4 and single and len(edges) == 4 and all(d == 2 for d in degree):
        return "A3-cycle"
    if nvert == 5 and single and len(edges) == 4 and sorted(degree) == [1, 1, 1, 1, 4]:
        return "D4-like"
    if nvert in _TREE_TAGS and single and len(edges) == nvert - 1 \
            and sorted(degree)[-1] == 3:
        return _TREE_TAGS[nvert]
    raise AssertionError("unrecognized tame support diagram (bug)")


def composite_is_real_root(inst: QuiverInstance, mi) -> bool:
    """Sanity helper: composite roots have symmetric square 2."""
    from .quiver import composite_eps
    eps = composite_eps(inst, mi)
    return sym_form(inst.quiver, eps, eps) == 2
