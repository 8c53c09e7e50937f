"""
Product-form solutions for pairwise cooperations of well-formed processes.

:func:`grcat_solve` looks for per-label constants ``kappa_a`` such that, on the
component that owns ``a`` actively, the reversed ``a``-rate

    sum_{A'} q_a(A' -> A) pi(A') / pi(A)

is the same in every state ``A``.  Passive partners are closed with those
constants, each closed component is solved on its own, and the joint measure
is the Kronecker product of the component measures.  :func:`verify_against_joint`
rebuilds the joint chain from the cooperation rules and solves it directly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import reduce
from itertools import product as iproduct
from typing import Dict, List, Optional, Sequence

import numpy as np

from .ctmc import (
    DEFAULT_SOLVE_BUDGET, Measure, StateSpace, enumerate_states, matrix_irreducible,
    numeric_generator, solve_invariant,
)
from .errors import (
    BudgetExceeded, CooperationError, IllFormedComponent, ReducibleChainError, SSPAError,
    UnclosableComponent,
)
from .semantics import (
    DEFAULT_BUDGET, Coop, SystemSpec, active_labels, apply_closure_set, coop_transitions,
    is_well_formed, passive_labels, validate_cooperation,
)
from .syntax import Closure, Model, Passive, format_term

log = logging.getLogger(__name__)

SATISFIED = "satisfied"
VIOLATED = "violated"
NOT_CONVERGED = "not_converged"

_TINY = 1e-300


@dataclass
class SolverConfig:
    init_kappa: float = 1.0
    damping: float = 0.5
    conv_tol: float = 1e-10
    check_tol: float = 1e-8
    max_iter: int = 500
    mode: str = "strict"
    budget: int = DEFAULT_BUDGET
    solve_budget: int = DEFAULT_SOLVE_BUDGET

    def __post_init__(self):
        if not self.init_kappa > 0:
            raise ValueError("init_kappa must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if not (self.conv_tol > 0 and self.check_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.mode not in ("strict", "lenient"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class ConditionReport:
    """Reversed rates of one cooperation label on its active owner."""

    component: int
    name: str
    label: str
    rates: np.ndarray
    kappa: float
    spread: float       # (max - min) / mean, or max - min when the mean underflows
    relative: bool = True

    def constant(self, check_tol: float) -> bool:
        if self.relative:
            return self.spread < check_tol
        return self.spread < 1e-12


def _condition(component: int, name: str, label: str, rates: np.ndarray) -> ConditionReport:
    mean = float(np.mean(rates)) if len(rates) else 0.0
    width = float(np.max(rates) - np.min(rates)) if len(rates) else 0.0
    if abs(mean) > _TINY:
        return ConditionReport(component, name, label, rates, mean, width / abs(mean))
    return ConditionReport(component, name, label, rates, mean, width, relative=False)


@dataclass
class ComponentSolution:
    name: str
    term: object
    closed: object
    space: StateSpace          # derivatives of the open component
    measure: Measure           # invariant measure of the closed component, open-state order


@dataclass
class OracleReport:
    gap_abs: Optional[float]
    gap_rel: Optional[float]
    product_residual: float     # ||pi_product Q|| / max|Q|
    reachable_equals_product: bool
    irreducible: bool
    n_states: int
    n_reachable: int
    joint: Optional[Measure] = None

    def product_holds(self, check_tol: float) -> bool:
        return self.gap_rel is not None and self.gap_rel <= 10 * check_tol

    def agrees(self, status: str, check_tol: float) -> bool:
        if status == NOT_CONVERGED or self.gap_rel is None:
            return False
        return (status == SATISFIED) == self.product_holds(check_tol)


@dataclass
class ProductFormSolution:
    kappas: Dict[str, float]
    components: List[ComponentSolution]
    product_vector: Measure
    status: str
    reports: List[ConditionReport] = field(default_factory=list)
    iterations: int = 0
    coop_set: frozenset = frozenset()
    warnings: List[str] = field(default_factory=list)
    oracle: Optional[OracleReport] = None

    @property
    def component_measures(self) -> List[Measure]:
        return [c.measure for c in self.components]

    @property
    def oracle_gap(self) -> Optional[float]:
        return None if self.oracle is None else self.oracle.gap_abs

    @property
    def satisfied(self) -> bool:
        return self.status == SATISFIED

    def product_states(self) -> List[str]:
        names = [c.space.names() for c in self.components]
        return ["(" + ", ".join(t) + ")" for t in iproduct(*names)]


# -- building blocks ----------------------------------------------------------------

def close_component(component, coop_set, kappas: Dict[str, float], env: Model):
    """Close every passive label of ``component`` that lies in the cooperation set."""
    P = passive_labels(component, env)
    outside = sorted(P - set(coop_set))
    if outside:
        raise UnclosableComponent(
            f"component {format_term(component)} has passive label(s) {outside} outside the "
            "cooperation set; no rate is available for them")
    missing = sorted(a for a in P if a not in kappas)
    if missing:
        raise UnclosableComponent(
            f"component {format_term(component)}: no kappa for passive label(s) {missing} "
            "(no component owns them actively)")
    assignment = {a: kappas[a] for a in P}
    return apply_closure_set(component, assignment) if assignment else component


def _unwrap(state, layers: int):
    for _ in range(layers):
        assert isinstance(state, Closure)
        state = state.body
    return state


def reversed_rates(closed, label: str, measure: Measure, env: Model,
                   space: Optional[StateSpace] = None) -> np.ndarray:
    """Per state ``A``: ``sum_{A'} q_label(A' -> A) pi(A') / pi(A)``, self-loops included.

    ``measure`` must be indexed like ``space`` (the derivative set of ``closed``).
    """
    space = space if space is not None else enumerate_states(closed, env)
    pi = np.asarray(measure.values, dtype=float)
    if len(pi) != len(space):
        raise ValueError("measure and state space differ in size")
    if np.any(pi <= 0):
        raise ReducibleChainError(f"measure of {format_term(closed)} has zero entries")
    inflow = np.zeros(len(space))
    for i, trs in enumerate(space.transitions):
        for t, m in trs:
            if t.label != label:
                continue
            if isinstance(t.rate, Passive):
                raise UnclosableComponent(f"label {label!r} is still passive in {format_term(closed)}")
            inflow[space.index[t.target]] += m * t.rate.value * pi[i]
    return inflow / pi


def assemble_product(measures: Sequence[Measure]) -> Measure:
    """Left-to-right Kronecker product; the first component varies slowest."""
    values = reduce(np.kron, [np.asarray(m.values, dtype=float) for m in measures], np.ones(1))
    return Measure(values, all(m.normalized for m in measures))


def _solve_closed(term, coop_set, kappas, env: Model, open_space: StateSpace, config: SolverConfig):
    """Close, solve, and re-index the measure onto the open component's states."""
    closed = close_component(term, coop_set, kappas, env)
    layers = len(passive_labels(term, env))
    space = enumerate_states(closed, env, config.budget)
    Q = numeric_generator(space)
    try:
        measure = solve_invariant(Q, normalize=True, budget=config.solve_budget,
                                  states=space.names())
    except ReducibleChainError as exc:
        raise ReducibleChainError(
            f"closed component {format_term(closed)} is reducible", exc.components) from None
    perm = np.empty(len(space), dtype=int)
    if len(space) != len(open_space):
        raise SSPAError(f"closure changed the derivative set of {format_term(term)}")
    for i, s in enumerate(space.states):
        perm[open_space.index[_unwrap(s, layers)]] = i
    open_measure = Measure(measure.values[perm], True, measure.residual, open_space.names())
    return closed, space, measure, open_measure


# -- solver --------------------------------------------------------------------------

def grcat_solve(system: SystemSpec, env: Model, config: Optional[SolverConfig] = None
                ) -> ProductFormSolution:
    """Search for constant reversed rates by damped fixed-point iteration.

    Each round closes every component with the current kappas, solves the
    closed chains, and moves each kappa towards the mean reversed rate of its
    label on the active owner.  After convergence the reversed rates must be
    constant (relative spread below ``check_tol``) for the status to be
    ``satisfied``.  The product vector is assembled in every outcome so that
    negative answers can be checked against the joint chain too.
    """
    config = config or SolverConfig()
    L = frozenset(system.coop_set)
    comps = list(system.components)
    names = list(system.names)
    for name, c in zip(names, comps):
        if isinstance(c, Coop):
            raise CooperationError(f"component {name} is itself a cooperation; "
                                   "product forms are computed for flat systems only")
        diag = is_well_formed(c, env, config.mode, config.budget)
        if not diag:
            raise IllFormedComponent(f"component {name} is not well-formed: " + "; ".join(diag.errors))
    coop = validate_cooperation(system, env, lenient=config.mode == "lenient")
    if not coop:
        raise CooperationError("; ".join(coop.errors))
    warnings = list(coop.warnings)
    hypotheses = True
    if config.mode == "lenient":
        for name, c in zip(names, comps):
            if not is_well_formed(c, env, "strict", config.budget):
                hypotheses = False
                warnings.append(f"component {name} is only leniently well-formed; "
                                "the product form cannot be certified")
        if coop.warnings and any("in both component" in w for w in coop.warnings):
            hypotheses = False

    owner: Dict[str, int] = {}
    for a in sorted(L):
        owners = [i for i, c in enumerate(comps) if a in active_labels(c, env)]
        if owners:
            owner[a] = owners[0]
            if len(owners) > 1:
                warnings.append(f"label {a!r} has several active owners; using component {owners[0]}")
    for w in warnings:
        log.warning(w)

    spaces = [enumerate_states(c, env, config.budget) for c in comps]
    kappas = {a: float(config.init_kappa) for a in owner}

    def solve_all(k):
        return [_solve_closed(c, L, k, env, s, config) for c, s in zip(comps, spaces)]

    def measure_rates(solved, k):
        out = {}
        for a, i in owner.items():
            closed, space, measure, _ = solved[i]
            out[a] = reversed_rates(closed, a, measure, env, space)
        return out

    def image(k):
        rates = measure_rates(solve_all(k), k)
        target = {a: float(np.mean(r)) for a, r in rates.items()}
        resid = max((abs(target[a] - k[a]) / k[a] for a in k), default=0.0)
        return target, resid

    converged = not owner
    iterations = 0
    status = None
    while not converged and iterations < config.max_iter:
        iterations += 1
        target, resid = image(kappas)
        if any(not (v > 0 and np.isfinite(v)) for v in target.values()):
            bad = sorted(a for a, v in target.items() if not v > 0)
            warnings.append(f"reversed rate of {bad} is zero everywhere; no positive kappa exists")
            status = VIOLATED
            break
        if resid < config.conv_tol:
            converged = True
            # undamped polishing while the fixed-point residual keeps shrinking
            while resid > 0 and iterations < config.max_iter:
                nxt, nresid = image(target)
                if not nresid < resid:
                    break
                iterations += 1
                kappas, target, resid = target, nxt, nresid
            if resid < config.conv_tol and all(v > 0 for v in target.values()):
                kappas = target
            break
        theta = config.damping
        kappas = {a: theta * target[a] + (1 - theta) * kappas[a] for a in kappas}

    solved = solve_all(kappas)
    rates = measure_rates(solved, kappas)
    reports = [_condition(owner[a], names[owner[a]], a, rates[a]) for a in sorted(owner)]
    if status is None:
        if not converged:
            status = NOT_CONVERGED
        elif hypotheses and all(r.constant(config.check_tol) for r in reports):
            status = SATISFIED
        else:
            status = VIOLATED

    components = [ComponentSolution(n, c, s[0], sp, s[3])
                  for n, c, s, sp in zip(names, comps, solved, spaces)]
    product = assemble_product([c.measure for c in components])
    return ProductFormSolution(dict(kappas), components, product, status, reports,
                               iterations, L, warnings)


# -- oracle ----------------------------------------------------------------------------

def joint_generator(system: SystemSpec, env: Model, spaces: Sequence[StateSpace],
                    budget: int = DEFAULT_SOLVE_BUDGET) -> np.ndarray:
    """Generator of the cooperation over the full product of component state spaces.

    Joint state ``(i1, ..., iN)`` has flat index ``sum_k i_k * stride_k`` with
    the first component outermost, matching :func:`assemble_product`.
    """
    dims = [len(s) for s in spaces]
    total = int(np.prod(dims))
    if total > budget:
        raise BudgetExceeded(f"joint product space of {total} states exceeds budget {budget}",
                             explored=total)
    strides = [int(np.prod(dims[k + 1:])) for k in range(len(dims))]
    Q = np.zeros((total, total))
    L = frozenset(system.coop_set)
    for flat, idx in enumerate(np.ndindex(*dims)):
        state = tuple(spaces[k].states[i] for k, i in enumerate(idx))
        for t, m in coop_transitions(state, L, env).items():
            if isinstance(t.rate, Passive):
                raise UnclosableComponent(
                    f"joint state has a passive {t.label!r} transition; the joint chain is open")
            j = sum(spaces[k].index[c] * strides[k] for k, c in enumerate(t.target))
            if j != flat:
                Q[flat, j] += m * t.rate.value
    Q[np.diag_indices(total)] = 0.0
    Q[np.diag_indices(total)] = -Q.sum(axis=1)
    return Q


def _reachable(Q: np.ndarray, start: int = 0) -> int:
    seen = {start}
    stack = [start]
    while stack:
        i = stack.pop()
        for j in np.nonzero(Q[i] > 0)[0]:
            j = int(j)
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen)


def verify_against_joint(system: SystemSpec, solution: ProductFormSolution, env: Model,
                         budget: int = DEFAULT_SOLVE_BUDGET) -> OracleReport:
    """Solve the joint chain directly and compare with the assembled product vector.

    The chain is built over the full product space, which is what the product
    form is claimed on.  A reducible joint chain is reported, not raised.
    """
    spaces = [c.space for c in solution.components]
    Q = joint_generator(system, env, spaces, budget)
    n = Q.shape[0]
    reach = _reachable(Q, 0)
    irreducible = bool(matrix_irreducible(Q))
    p = np.asarray(solution.product_vector.values, dtype=float)
    scale = float(np.max(np.abs(Q))) or 1.0
    residual = float(np.max(np.abs(p @ Q))) / scale
    report = OracleReport(None, None, residual, reach == n, irreducible, n, reach)
    if irreducible:
        joint = solve_invariant(Q, normalize=True, budget=budget)
        gap = np.abs(joint.values - p)
        report.gap_abs = float(np.max(gap))
        report.gap_rel = float(np.max(gap / np.abs(joint.values)))
        report.joint = joint
    solution.oracle = report
    return report


# -- reporting ---------------------------------------------------------------------------

def solution_dict(solution: ProductFormSolution) -> dict:
    """Plain-data view of a solution (schema version 1)."""
    out = {
        "schema": 1,
        "status": solution.status,
        "kappas": {a: solution.kappas[a] for a in sorted(solution.kappas)},
        "components": [
            {"name": c.name, "closed": format_term(c.closed), "states": c.space.names(),
             "pi": [float(x) for x in c.measure.values]}
            for c in solution.components
        ],
        "product": {"states": solution.product_states(),
                    "pi": [float(x) for x in solution.product_vector.values]},
        "conditions": [
            {"component": r.name, "label": r.label, "kappa": r.kappa, "spread": r.spread,
             "reversed_rates": [float(x) for x in r.rates]}
            for r in solution.reports
        ],
        "iterations": solution.iterations,
        "residuals": {c.name: c.measure.residual for c in solution.components},
        "warnings": list(solution.warnings),
    }
    if solution.oracle is not None:
        o = solution.oracle
        out["oracle"] = {
            "gap_abs": o.gap_abs, "gap_rel": o.gap_rel, "product_residual": o.product_residual,
            "reachable_equals_product": o.reachable_equals_product, "irreducible": o.irreducible,
            "states": o.n_states, "reachable": o.n_reachable,
        }
    return out
