"""Decision core: orthogonal-root decomposition tests and reflection reduction.

Solvability is decided by membership of alpha in the set of positive roots
orthogonal to lambda admitting no decomposition into two or more orthogonal
positive roots whose p-values sum to at least p(alpha).  The plain variant
allows arbitrary positive-root parts; the lattice variant restricts parts to
the level-sum lattice, which is the solvability criterion for the matrix
problem.  Both produce replayable certificates.
"""

from __future__ import annotations

from dataclasses import dataclass

from .builder import QuiverInstance, lattice_member, shift_vector
from .numeric import GaussRat
from .quiver import (
    Quiver,
    composite_lambda,
    composite_pair,
    dot,
    pair_with_unit,
    reflect_pair_composite,
    reflect_pair_leg,
    tits,
)
from .roots import (
    SearchCapExceeded,
    box_volume,
    DEFAULT_BOX_VOLUME_CAP,
    DEFAULT_WORK_CAP,
    is_root,
    positive_roots_in_box,
    quasi_fundamental_test,
    lift_xi,
)

DEFAULT_NODE_CAP = 10_000_000


class ReductionError(RuntimeError):
    """Reduction got stuck; cannot happen for genuinely solvable input."""


@dataclass(frozen=True)
class ViolatingDecomposition:
    parts: tuple
    p_values: tuple
    p_alpha: int


@dataclass(frozen=True)
class ExhaustiveWitness:
    roots_considered: int
    decompositions_checked: int


@dataclass(frozen=True)
class Verdict:
    solvable: bool
    reasons: tuple
    certificate: object = None

    @property
    def moduli_nonempty(self) -> bool:
        # The moduli space of stable connections is non-empty exactly when
        # the matrix problem is solvable.
        return self.solvable


def _decomposition_candidates(q: Quiver, alpha, lam, lattice_filter,
                              box_cap, work_cap):
    if box_volume(alpha) > box_cap:
        raise SearchCapExceeded("decomposition box volume above configured limit")
    budget = [work_cap]
    roots = positive_roots_in_box(q, alpha, budget)
    picked = []
    for beta in roots:
        if beta == tuple(alpha):
            continue
        if lattice_filter is not None and not lattice_filter(beta):
            continue
        if dot(beta, lam):
            continue
        picked.append(beta)
    # Candidates sorted by decreasing p-value, then lexicographically: the
    # first optimal decomposition found is canonical.
    def key(beta):
        return (-tits(q, beta)[1], beta)
    picked.sort(key=key)
    return picked


def _best_decomposition(q: Quiver, alpha, candidates, node_cap):
    """Maximize the p-value sum over multiset decompositions of alpha.

    Returns (best sum, parts tuple, nodes visited); best is None when alpha
    has no decomposition into candidates at all.
    """
    p_of = {c: tits(q, c)[1] for c in candidates}
    memo = {}
    nodes = [0]
    zero = tuple(0 for _ in alpha)

    def best(rem):
        if rem == zero:
            return 0, ()
        if rem in memo:
            return memo[rem]
        nodes[0] += 1
        if nodes[0] > node_cap:
            raise SearchCapExceeded("decomposition search node cap exceeded")
        result = (None, ())
        for c in candidates:
            if all(x <= r for x, r in zip(c, rem)):
                sub, parts = best(tuple(r - x for r, x in zip(rem, c)))
                if sub is not None:
                    total = p_of[c] + sub
                    if result[0] is None or total > result[0]:
                        result = (total, (c,) + parts)
        memo[rem] = result
        return result

    value, parts = best(tuple(alpha))
    return value, parts, nodes[0]


def _membership(q: Quiver, alpha, lam, lattice_filter, node_cap, box_cap,
                work_cap, lattice_label=""):
    reasons = []
    nonneg = all(a >= 0 for a in alpha) and any(alpha)
    kind = is_root(q, alpha).kind if nonneg else "not_root"
    if kind == "not_root":
        reasons.append("FAIL: alpha is not a positive root")
        return Verdict(False, tuple(reasons))
    reasons.append("pass: alpha is a positive %s root" % kind)
    if lattice_filter is not None and not lattice_filter(alpha):
        reasons.append("FAIL: alpha is not in the level-sum lattice")
        return Verdict(False, tuple(reasons))
    if dot(alpha, lam):
        reasons.append("FAIL: alpha . lambda != 0")
        return Verdict(False, tuple(reasons))
    reasons.append("pass: alpha . lambda = 0")
    candidates = _decomposition_candidates(q, alpha, lam, lattice_filter,
                                           box_cap, work_cap)
    p_alpha = tits(q, alpha)[1]
    best, parts, nodes = _best_decomposition(q, alpha, candidates, node_cap)
    if best is not None and best >= p_alpha:
        reasons.append(
            "FAIL: decomposition into %d orthogonal%s roots has p-sum %d >= p(alpha) = %d"
            % (len(parts), lattice_label, best, p_alpha))
        cert = ViolatingDecomposition(parts,
                                      tuple(tits(q, c)[1] for c in parts),
                                      p_alpha)
        return Verdict(False, tuple(reasons), cert)
    reasons.append("pass: every proper orthogonal%s decomposition has p-sum < p(alpha) = %d"
                   % (lattice_label, p_alpha))
    return Verdict(True, tuple(reasons),
                   ExhaustiveWitness(len(candidates), nodes))


def sigma_member(q: Quiver, alpha, lam, node_cap=DEFAULT_NODE_CAP,
                 box_cap=DEFAULT_BOX_VOLUME_CAP,
                 work_cap=DEFAULT_WORK_CAP) -> Verdict:
    """Plain membership: decomposition parts range over all positive
    roots orthogonal to lambda, with no lattice restriction."""
    return _membership(q, alpha, lam, None, node_cap, box_cap, work_cap)


def sigma_tilde_member(inst: QuiverInstance, node_cap=DEFAULT_NODE_CAP,
                       box_cap=DEFAULT_BOX_VOLUME_CAP,
                       work_cap=DEFAULT_WORK_CAP) -> Verdict:
    """Lattice-restricted membership; this is the solvability criterion."""
    return _membership(inst.quiver, inst.alpha, inst.lam,
                       lambda beta: lattice_member(inst, beta),
                       node_cap, box_cap, work_cap, lattice_label=" lattice")


def validate_decomposition(inst: QuiverInstance, cert: ViolatingDecomposition,
                           restrict_lattice=True) -> bool:
    """Re-check a violating decomposition certificate from scratch."""
    q = inst.quiver
    total = [0] * len(q.vertices)
    p_sum = 0
    for part, p_val in zip(cert.parts, cert.p_values):
        if is_root(q, part).kind == "not_root":
            return False
        if any(x < 0 for x in part) or not any(part):
            return False
        if restrict_lattice and not lattice_member(inst, part):
            return False
        if dot(part, inst.lam):
            return False
        if tits(q, part)[1] != p_val:
            return False
        total = [t + x for t, x in zip(total, part)]
        p_sum += p_val
    return (tuple(total) == tuple(inst.alpha)
            and len(cert.parts) >= 2
            and tits(q, inst.alpha)[1] == cert.p_alpha
            and p_sum >= cert.p_alpha)


# ---------------------------------------------------------------------------
# reflection reduction


@dataclass(frozen=True)
class ReductionStep:
    kind: str     # "reflect_composite" | "reflect_leg" | "add_shift"
    at: tuple     # multi-index, leg vertex, or (pole, gamma)
    value: GaussRat  # the lambda value legalizing a reflection step
    before: tuple  # (alpha, lambda)
    after: tuple


@dataclass(frozen=True)
class ReductionTrace:
    applicable: bool
    steps: tuple
    terminal_kind: str = ""   # "unit-composite" | "unit-leg" | "quasi-fundamental" | ""
    terminal_at: tuple = ()
    terminal: tuple = ()      # final (alpha, lambda)
    terminal_lift: object = None


def _unit_composite(inst, alpha):
    """The multi-index mi with alpha == eps_mi, or None."""
    q = inst.quiver
    for v in inst.leg_vertices():
        if alpha[q.index(v)]:
            return None
    mi = [1] * inst.num_poles
    for i in sorted(inst.i_irr):
        ones = [j for j in range(1, inst.m(i) + 1) if alpha[q.index((i, j))] == 1]
        zeros = [j for j in range(1, inst.m(i) + 1) if alpha[q.index((i, j))] == 0]
        if len(ones) != 1 or len(ones) + len(zeros) != inst.m(i):
            return None
        mi[i] = ones[0]
    return tuple(mi)


def _unit_leg(inst, alpha):
    q = inst.quiver
    if sum(alpha) != 1:
        return None
    idx = alpha.index(1)
    v = q.vertices[idx]
    return v if len(v) == 3 else None


def reduce_pair(inst: QuiverInstance, node_cap=DEFAULT_NODE_CAP,
                box_cap=DEFAULT_BOX_VOLUME_CAP,
                work_cap=DEFAULT_WORK_CAP) -> ReductionTrace:
    """Reduce (alpha, lambda) by legal reflections to a unit root or a
    quasi-fundamental vector.

    Only reflections at composite roots and leg vertices with nonvanishing
    lambda value are legal; each one strictly lowers the coordinate sum.
    The additive-shift fallback is kept for completeness but cannot change
    any legality value (composite and leg lambda values are shift
    invariants), so a genuinely stuck state means the input was not
    solvable-reducible and is reported as an error.
    """
    verdict = sigma_tilde_member(inst, node_cap, box_cap, work_cap)
    if not verdict.solvable:
        return ReductionTrace(False, ())

    q = inst.quiver
    alpha = tuple(inst.alpha)
    lam = tuple(inst.lam)
    steps = []
    cap = 10 * sum(alpha) + 20
    for _ in range(cap):
        mi = _unit_composite(inst, alpha)
        if mi is not None:
            lift = lift_xi(inst, alpha)
            return ReductionTrace(True, tuple(steps), "unit-composite", mi,
                                  (alpha, lam), lift)
        leg = _unit_leg(inst, alpha)
        if leg is not None:
            return ReductionTrace(True, tuple(steps), "unit-leg", leg,
                                  (alpha, lam), lift_xi(inst, alpha))
        if quasi_fundamental_test(inst, alpha):
            return ReductionTrace(True, tuple(steps), "quasi-fundamental", (),
                                  (alpha, lam), lift_xi(inst, alpha))
        step = _find_reflection(inst, alpha, lam)
        if step is None:
            _shift_fallback(inst, alpha, lam, steps)
            raise ReductionError("no legal reflection available (stuck)")
        kind, at, value = step
        before = (alpha, lam)
        if kind == "reflect_composite":
            alpha, lam = reflect_pair_composite(inst, at, alpha, lam)
        else:
            alpha, lam = reflect_pair_leg(inst, at, alpha, lam)
        steps.append(ReductionStep(kind, at, value, before, (alpha, lam)))
    raise AssertionError("reduction did not terminate (bug guard)")


def _find_reflection(inst, alpha, lam):
    for mi in inst.multi_indices():
        if composite_pair(inst, mi, alpha) > 0:
            value = composite_lambda(inst, mi, lam)
            if value:
                return ("reflect_composite", tuple(mi), value)
    q = inst.quiver
    for v in inst.leg_vertices():
        if pair_with_unit(q, alpha, q.index(v)) > 0:
            value = lam[q.index(v)]
            if value:
                return ("reflect_leg", v, value)
    return None


def _shift_fallback(inst, alpha, lam, steps):
    # Generic shifts 1, 1/2, 1/3, ... cannot unblock a reflection (the
    # legality values are shift invariants); attempted for the record only.
    for k in range(1, 4):
        gamma = GaussRat(1) / GaussRat(k)
        for i0 in sorted(inst.i_irr - {0}):
            z = shift_vector(inst, i0)
            shifted = tuple(l + gamma * zv for l, zv in zip(lam, z))
            steps.append(ReductionStep("add_shift", (i0, gamma), gamma,
                                       (alpha, lam), (alpha, shifted)))
            if _find_reflection(inst, alpha, shifted) is not None:
                return


def replay_trace(inst: QuiverInstance, trace: ReductionTrace):
    """Run the trace backwards from its terminal pair; returns (alpha, lambda).

    Reflection steps are involutions and shifts invert by negating gamma, so
    a faithful trace replays to the instance's original pair.
    """
    if not trace.applicable:
        raise ValueError("trace is not applicable")
    alpha, lam = trace.terminal
    for step in reversed(trace.steps):
        if step.kind == "reflect_composite":
            alpha, lam = reflect_pair_composite(inst, step.at, alpha, lam)
        elif step.kind == "reflect_leg":
            alpha, lam = reflect_pair_leg(inst, step.at, alpha, lam)
        elif step.kind == "add_shift":
            i0, gamma = step.at
            z = shift_vector(inst, i0)
            lam = tuple(l - gamma * zv for l, zv in zip(lam, z))
        else:
            raise ValueError("unknown step kind %r" % step.kind)
    return alpha, lam
