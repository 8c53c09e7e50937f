"""
Operational semantics of simple and interacting processes.

Transitions form a multi-relation, represented as a ``collections.Counter``
of :class:`Transition` triples.  Targets are always in canonical form, so a
canonical term doubles as the identity of an LTS state.

Interacting processes are :class:`Coop` terms.  They may nest, which the
grammar of systems does not need but the non-associativity argument for
cooperation does.
"""

from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .errors import BudgetExceeded, IllFoundedDefinition, SSPAError
from .syntax import (
    Choice, Closure, Const, Ident, Model, Nil, Passive, Prefix, format_rate, format_term,
    rate_key,
)

DEFAULT_BUDGET = 100_000


class Transition(NamedTuple):
    label: str
    rate: object
    target: object


TransitionMultiset = Counter


@dataclass(frozen=True)
class Coop:
    """``coop L (M1, ..., Mn)``: pairwise cooperation over ``coop_set``."""

    coop_set: frozenset
    components: tuple

    def format(self) -> str:
        labels = ",".join(sorted(self.coop_set))
        return f"coop {{{labels}}} ({', '.join(format_term(c) for c in self.components)})"

    def __str__(self):
        return self.format()


@dataclass(frozen=True)
class SystemSpec:
    coop_set: frozenset
    components: tuple
    names: tuple = ()

    def __post_init__(self):
        if not self.components:
            raise ValueError("a cooperation needs at least one component")
        if not self.names:
            object.__setattr__(self, "names", tuple(format_term(c) for c in self.components))

    def term(self) -> Coop:
        return Coop(self.coop_set, tuple(self.components))


def system_term(model: Model, name: str) -> Coop:
    """Resolve a declared system to a (possibly nested) :class:`Coop` term."""
    system = model.systems[name]
    comps = []
    for comp in system.components:
        if comp in model.systems:
            comps.append(system_term(model, comp))
        else:
            comps.append(Ident(comp))
    return Coop(system.coop_set, tuple(comps))


def system_spec(model: Model, name: str) -> SystemSpec:
    t = system_term(model, name)
    return SystemSpec(t.coop_set, t.components, model.systems[name].components)


def resolve(model: Model, name: str):
    """A named process or system as an LTS state.

    A name defined as a bare closure (``X = A0[b <- 0.5];``) resolves to the
    closure term itself, so its derivative set does not gain an extra state
    for the alias.
    """
    if name in model.systems:
        return system_term(model, name)
    if name in model.equations:
        body = model.equations[name]
        return body if isinstance(body, Closure) else Ident(name)
    raise KeyError(name)


# -- structural congruence -----------------------------------------------------

def _branch_key(b: Prefix):
    return (b.label, rate_key(b.rate), format_term(b.cont))


def canonicalize(term, env: Optional[Model] = None):
    """Sort choice branches by (label, rate, continuation); Const before Passive.

    Identifiers are not unfolded.  The result is idempotent and two terms are
    structurally congruent exactly when their canonical forms are equal.
    """
    if isinstance(term, Choice):
        branches = [Prefix(b.label, b.rate, canonicalize(b.cont)) for b in term.branches]
        branches.sort(key=_branch_key)
        return Choice(tuple(branches))
    if isinstance(term, Closure):
        return Closure(canonicalize(term.body), term.label, term.rate)
    if isinstance(term, Coop):
        return Coop(term.coop_set, tuple(canonicalize(c) for c in term.components))
    return term


def transition_key(t: Transition):
    return (t.label, rate_key(t.rate), format_term(t.target))


# -- transition rules ------------------------------------------------------------

@lru_cache(maxsize=65536)
def _derive(term, env: Model) -> Tuple[Tuple[Transition, int], ...]:
    ms = _transitions(term, env, frozenset())
    return tuple(sorted(ms.items(), key=lambda kv: transition_key(kv[0])))


def _transitions(term, env: Model, unfolding: frozenset) -> Counter:
    out: Counter = Counter()
    if isinstance(term, Nil):
        return out
    if isinstance(term, Ident):
        if term.name in unfolding:
            raise IllFoundedDefinition(
                f"unguarded recursion through {term.name!r}: unfolding never reaches a choice or 0")
        if term.name not in env.equations:
            raise SSPAError(f"undefined identifier {term.name!r}")
        return _transitions(env.equations[term.name], env, unfolding | {term.name})
    if isinstance(term, Choice):
        for b in term.branches:
            out[Transition(b.label, b.rate, canonicalize(b.cont))] += 1
        return out
    if isinstance(term, Closure):
        lam = Const(term.rate)
        for t, m in _transitions(term.body, env, unfolding).items():
            rate = lam if (t.label == term.label and isinstance(t.rate, Passive)) else t.rate
            out[Transition(t.label, rate, Closure(t.target, term.label, term.rate))] += m
        return out
    if isinstance(term, Coop):
        for t, m in coop_transitions(term.components, term.coop_set, env).items():
            out[Transition(t.label, t.rate, Coop(term.coop_set, t.target))] += m
        return out
    raise TypeError(f"not a process term: {term!r}")


def derive_transitions(term, env: Model) -> Counter:
    """The multiset of outgoing transitions of ``term`` (simple or cooperating)."""
    return Counter(dict(_derive(canonicalize(term), env)))


def coop_transitions(state: Sequence, coop_set, env: Model) -> Counter:
    """Joint moves of ``coop L (state)``; targets are tuples of component terms.

    Labels outside L move one component alone.  A label in L moves exactly two
    distinct components: an active one (whose rate is used) and a passive one.
    """
    state = tuple(canonicalize(c) for c in state)
    per_comp = [_derive(c, env) for c in state]
    out: Counter = Counter()
    for i, trs in enumerate(per_comp):
        for t, m in trs:
            if t.label not in coop_set:
                new = state[:i] + (t.target,) + state[i + 1:]
                out[Transition(t.label, t.rate, new)] += m
                continue
            if isinstance(t.rate, Passive):
                continue
            for k, trs_k in enumerate(per_comp):
                if k == i:
                    continue
                for u, mk in trs_k:
                    if u.label == t.label and isinstance(u.rate, Passive):
                        new = list(state)
                        new[i] = t.target
                        new[k] = u.target
                        out[Transition(t.label, t.rate, tuple(new))] += m * mk
    return out


def sorted_transitions(ms: Counter) -> List[Tuple[Transition, int]]:
    return sorted(ms.items(), key=lambda kv: transition_key(kv[0]))


# -- exploration -----------------------------------------------------------------

def explore(initial, env: Model, budget: int = DEFAULT_BUDGET):
    """Breadth-first derivative set of ``initial``.

    Returns ``(states, transitions)``: canonical states in discovery order and,
    per state, its sorted list of ``(Transition, multiplicity)``.
    """
    start = canonicalize(initial)
    states = [start]
    index = {start: 0}
    trans: List[List[Tuple[Transition, int]]] = []
    queue = deque([start])
    while queue:
        s = queue.popleft()
        out = list(_derive(s, env))
        trans.append(out)
        for t, _ in out:
            if t.target not in index:
                if len(states) >= budget:
                    raise BudgetExceeded(f"state budget {budget} exceeded",
                                         explored=len(trans), frontier=len(queue) + 1)
                index[t.target] = len(states)
                states.append(t.target)
                queue.append(t.target)
    return states, trans


# -- label sets --------------------------------------------------------------------

def _idents_in(term) -> Iterable[str]:
    if isinstance(term, Ident):
        yield term.name
    elif isinstance(term, Choice):
        for b in term.branches:
            yield from _idents_in(b.cont)
    elif isinstance(term, Closure):
        yield from _idents_in(term.body)
    elif isinstance(term, Coop):
        for c in term.components:
            yield from _idents_in(c)


def _reachable_idents(term, env: Model) -> List[str]:
    order: List[str] = []
    seen = set()
    stack = list(_idents_in(term))
    while stack:
        name = stack.pop()
        if name in seen:
            continue
        seen.add(name)
        order.append(name)
        stack.extend(_idents_in(env.equations[name]))
    return sorted(order)


def _eval_ap(term, values, passive: bool) -> frozenset:
    if isinstance(term, Nil):
        return frozenset()
    if isinstance(term, Ident):
        return values[term.name]
    if isinstance(term, Choice):
        out = set()
        for b in term.branches:
            if isinstance(b.rate, Passive) == passive:
                out.add(b.label)
            out |= _eval_ap(b.cont, values, passive)
        return frozenset(out)
    if isinstance(term, Closure):
        inner = _eval_ap(term.body, values, passive)
        return inner - {term.label} if passive else inner | {term.label}
    if isinstance(term, Coop):
        out = frozenset()
        for c in term.components:
            out |= _eval_ap(c, values, passive)
        return out
    raise TypeError(f"not a process term: {term!r}")


def _least_fixpoint(term, env: Model, passive: bool) -> frozenset:
    names = _reachable_idents(term, env)
    values = {n: frozenset() for n in names}
    changed = True
    while changed:
        changed = False
        for n in names:
            v = _eval_ap(env.equations[n], values, passive)
            if v != values[n]:
                values[n] = v
                changed = True
    return _eval_ap(term, values, passive)


def active_labels(term, env: Model) -> frozenset:
    return _least_fixpoint(term, env, passive=False)


def passive_labels(term, env: Model) -> frozenset:
    return _least_fixpoint(term, env, passive=True)


def _non_unique_passive(choice: Choice) -> set:
    counts = Counter(b.label for b in choice.branches if isinstance(b.rate, Passive))
    return {a for a, n in counts.items() if n > 1}


def _eval_u(term, values, universe: frozenset) -> frozenset:
    if isinstance(term, Nil):
        return universe
    if isinstance(term, Ident):
        return values[term.name]
    if isinstance(term, Choice):
        if _non_unique_passive(term):
            return frozenset()
        out = frozenset(b.label for b in term.branches)
        for b in term.branches:
            out &= _eval_u(b.cont, values, universe)
        return out
    if isinstance(term, Closure):
        return _eval_u(term.body, values, universe) - {term.label}
    raise TypeError(f"unique passive labels are defined for simple processes only: {term!r}")


def label_universe(term, env: Model) -> frozenset:
    return env.labels() | frozenset(_labels_of(term))


def _labels_of(term):
    if isinstance(term, Choice):
        for b in term.branches:
            yield b.label
            yield from _labels_of(b.cont)
    elif isinstance(term, Closure):
        yield term.label
        yield from _labels_of(term.body)


def unique_passive_labels(term, env: Model) -> frozenset:
    """Greatest fixpoint of the unique-passive clauses.

    ``U(0)`` is the whole action set; here that is the model's finite label
    universe, which is enough since every use intersects with model labels.
    """
    universe = label_universe(term, env)
    names = _reachable_idents(term, env)
    values = {n: universe for n in names}
    changed = True
    while changed:
        changed = False
        for n in names:
            v = _eval_u(env.equations[n], values, universe)
            if v != values[n]:
                values[n] = v
                changed = True
    return _eval_u(term, values, universe)


@dataclass
class LabelReport:
    active: frozenset
    passive: frozenset
    unique_passive: frozenset


def label_report(term, env: Model) -> LabelReport:
    return LabelReport(active_labels(term, env), passive_labels(term, env),
                       unique_passive_labels(term, env))


def is_closed(term, env: Model, literal: bool = False) -> bool:
    """A process is closed when it has no passive labels.

    ``literal=True`` instead tests for an empty *active* set, the wording of
    the original definition, kept for comparison only.
    """
    if literal:
        return not active_labels(term, env)
    return not passive_labels(term, env)


# -- well-formedness ---------------------------------------------------------------

@dataclass
class Diagnostics:
    ok: bool
    errors: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    witness: Optional[str] = None

    def __bool__(self):
        return self.ok


def _passive_offers(trs) -> Counter:
    return Counter(t.label for t, m in trs for _ in range(m) if isinstance(t.rate, Passive))


def is_well_formed(term, env: Model, mode: str = "strict",
                   budget: int = DEFAULT_BUDGET) -> Diagnostics:
    """Check disjointness of active/passive labels and uniqueness of passive ones.

    In ``strict`` mode the second condition is ``P == U`` whenever ``P`` is
    non-empty.  ``lenient`` mode also accepts a process whose every reachable
    state offers at most one distinct passive label, so several passive
    branches on the same label are admitted.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"unknown mode {mode!r}")
    A = active_labels(term, env)
    P = passive_labels(term, env)
    diag = Diagnostics(ok=True)
    states, trans = explore(term, env, budget)

    overlap = A & P
    if overlap:
        diag.ok = False
        a = sorted(overlap)[0]
        where = next((format_term(s) for s, trs in zip(states, trans)
                      if any(t.label == a and isinstance(t.rate, Passive) for t, _ in trs)), None)
        diag.witness = where
        diag.errors.append(
            f"condition 1 violated: label(s) {sorted(overlap)} both active and passive"
            + (f" (passive {a} at state {where})" if where else ""))

    U = unique_passive_labels(term, env)
    if mode == "strict" or not P or P == U:
        if P and P != U:
            diag.ok = False
            missing = sorted(P - U)
            witness = None
            for s, trs in zip(states, trans):
                if not trs:
                    continue
                offers = _passive_offers(trs)
                if any(offers.get(p, 0) != 1 for p in missing):
                    witness = format_term(s)
                    break
            diag.witness = diag.witness or witness
            diag.errors.append(
                f"condition 2 violated: passive labels {sorted(P)} != unique passive labels {sorted(U)}"
                + (f" (witness state {witness})" if witness else ""))
    else:
        for s, trs in zip(states, trans):
            offers = _passive_offers(trs)
            if len(offers) > 1:
                diag.ok = False
                diag.witness = diag.witness or format_term(s)
                diag.errors.append(
                    f"lenient condition 2 violated: state {format_term(s)} offers passive labels "
                    f"{sorted(offers)}")
                break
    return diag


# -- cooperation ---------------------------------------------------------------------

def validate_cooperation(spec: SystemSpec, env: Model, lenient: bool = False) -> Diagnostics:
    """Pairwise disjointness of active-in-L and passive-in-L label sets.

    Labels of L with no active or no passive owner only produce warnings.
    With ``lenient=True`` disjointness violations are reported as warnings
    too (the standard non-associativity example needs two passive partners).
    """
    L = spec.coop_set
    A = [active_labels(c, env) & L for c in spec.components]
    P = [passive_labels(c, env) & L for c in spec.components]
    diag = Diagnostics(ok=True)
    names = spec.names
    n = len(spec.components)
    for i in range(n):
        for j in range(i + 1, n):
            for kind, sets in (("active", A), ("passive", P)):
                for a in sorted(sets[i] & sets[j]):
                    msg = (f"label {a!r} is {kind} in both component {i} ({names[i]}) "
                           f"and component {j} ({names[j]})")
                    if lenient:
                        diag.warnings.append(msg)
                    else:
                        diag.ok = False
                        diag.errors.append(msg)
    for a in sorted(L):
        if not any(a in s for s in A):
            diag.warnings.append(f"label {a!r} in the cooperation set has no active owner (blocked)")
        if not any(a in s for s in P):
            diag.warnings.append(f"label {a!r} in the cooperation set has no passive owner")
    return diag


# -- closure -------------------------------------------------------------------------

def apply_closure(term, label: str, rate: float) -> Closure:
    return Closure(term, label, float(rate))


def apply_closure_set(term, assignment: Dict[str, float]):
    """Close several labels at once, innermost first in sorted label order."""
    for label in sorted(assignment):
        term = apply_closure(term, label, assignment[label])
    return term


# -- strong bisimilarity -----------------------------------------------------------

def _partition(states, trans) -> List[int]:
    index = {s: i for i, s in enumerate(states)}
    succ = [frozenset((t.label, rate_key(t.rate), index[t.target]) for t, _ in trs)
            for trs in trans]
    block = [0] * len(states)
    nblocks = 1
    while True:
        sigs = [(block[i], frozenset((l, r, block[j]) for l, r, j in succ[i]))
                for i in range(len(states))]
        ids: Dict[object, int] = {}
        new = [ids.setdefault(sig, len(ids)) for sig in sigs]
        if len(ids) == nblocks:
            return new
        block, nblocks = new, len(ids)


def strong_bisimilar(t1, t2, env: Model, budget: int = DEFAULT_BUDGET,
                     witness: bool = False):
    """Decide ``t1 ≅ t2`` by partition refinement on their joint LTS.

    Transitions are matched on (label, rate) only, so multiplicities are
    ignored.  With ``witness=True`` the pair ``(verdict, blocks)`` is returned,
    ``blocks`` being the bisimilarity classes as lists of state names.
    """
    s1, tr1 = explore(t1, env, budget)
    s2, tr2 = explore(t2, env, budget)
    states = list(s1)
    trans = list(tr1)
    seen = {s: i for i, s in enumerate(states)}
    for s, trs in zip(s2, tr2):
        if s not in seen:
            seen[s] = len(states)
            states.append(s)
            trans.append(trs)
    if len(states) > budget:
        raise BudgetExceeded(f"state budget {budget} exceeded", explored=len(states))
    block = _partition(states, trans)
    verdict = block[seen[s1[0]]] == block[seen[s2[0]]]
    if not witness:
        return verdict
    groups: Dict[int, List[str]] = {}
    for s, b in zip(states, block):
        groups.setdefault(b, []).append(format_term(s))
    return verdict, [groups[b] for b in sorted(groups)]


# -- LTS dumps ---------------------------------------------------------------------

def _rate_text(rate) -> str:
    return format_rate(rate)


def lts_text(initial, env: Model, budget: int = DEFAULT_BUDGET) -> str:
    """``SOURCE --label,rate--> TARGET``, one line per transition instance."""
    states, trans = explore(initial, env, budget)
    lines = []
    for s, trs in zip(states, trans):
        for t, m in trs:
            line = f"{format_term(s)} --{t.label},{_rate_text(t.rate)}--> {format_term(t.target)}"
            lines.extend([line] * m)
    return "\n".join(lines) + ("\n" if lines else "")


def lts_dict(initial, env: Model, budget: int = DEFAULT_BUDGET) -> dict:
    states, trans = explore(initial, env, budget)
    index = {s: i for i, s in enumerate(states)}
    return {
        "states": [format_term(s) for s in states],
        "transitions": [
            {"source": i, "target": index[t.target], "label": t.label,
             "rate": _rate_text(t.rate), "multiplicity": m}
            for i, trs in enumerate(trans) for t, m in trs
        ],
    }


def lts_json(initial, env: Model, budget: int = DEFAULT_BUDGET) -> str:
    return json.dumps(lts_dict(initial, env, budget), indent=2)


def lts_dot(initial, env: Model, budget: int = DEFAULT_BUDGET) -> str:
    states, trans = explore(initial, env, budget)
    out = ["digraph lts {", "  rankdir=LR;"]
    for i, s in enumerate(states):
        shape = "doublecircle" if i == 0 else "circle"
        out.append(f"  s{i} [label={json.dumps(format_term(s))}, shape={shape}];")
    index = {s: i for i, s in enumerate(states)}
    for i, trs in enumerate(trans):
        for t, m in trs:
            style = ", style=dashed" if isinstance(t.rate, Passive) else ""
            label = f"{t.label},{_rate_text(t.rate)}" + (f" x{m}" if m > 1 else "")
            out.append(f"  s{i} -> s{index[t.target]} [label={json.dumps(label)}{style}];")
    out.append("}")
    return "\n".join(out) + "\n"
