"""
Derivative sets, generator matrices and invariant measures.

Generators may be symbolic: a passive transition contributes the variable
``x_a`` of its label, and all variables of one label are the same variable.
Self-loops never enter a generator but do count for label-filtered rates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import BudgetExceeded, MissingVariable, ReducibleChainError
from .semantics import DEFAULT_BUDGET, Transition, canonicalize, explore
from .syntax import Model, Passive, format_term

DEFAULT_SOLVE_BUDGET = 4_000


@dataclass
class StateSpace:
    """Canonical states in BFS order, with their outgoing transitions."""

    states: list
    index: Dict[object, int]
    transitions: List[List[Tuple[Transition, int]]]

    def __len__(self):
        return len(self.states)

    def names(self) -> List[str]:
        return [format_term(s) for s in self.states]


def enumerate_states(initial, env: Model, budget: int = DEFAULT_BUDGET) -> StateSpace:
    states, trans = explore(initial, env, budget)
    return StateSpace(states, {s: i for i, s in enumerate(states)}, trans)


# -- rate expressions ---------------------------------------------------------------

def _num(c: float) -> str:
    if float(c).is_integer() and abs(c) < 1e15:
        return str(int(c))
    return repr(float(c))


class RateExpr:
    """A linear combination ``const + sum_a coeff_a * x_a`` of per-label variables."""

    __slots__ = ("const", "coeffs")

    def __init__(self, const: float = 0.0, coeffs: Optional[Mapping[str, float]] = None):
        self.const = float(const)
        self.coeffs = {k: float(v) for k, v in (coeffs or {}).items() if v != 0}

    @classmethod
    def from_rate(cls, rate, label: str) -> "RateExpr":
        if isinstance(rate, Passive):
            return cls(0.0, {label: 1.0})
        return cls(rate.value)

    def __add__(self, other: "RateExpr") -> "RateExpr":
        coeffs = dict(self.coeffs)
        for k, v in other.coeffs.items():
            coeffs[k] = coeffs.get(k, 0.0) + v
        return RateExpr(self.const + other.const, coeffs)

    def __neg__(self) -> "RateExpr":
        return RateExpr(-self.const, {k: -v for k, v in self.coeffs.items()})

    def __mul__(self, k: float) -> "RateExpr":
        return RateExpr(self.const * k, {a: v * k for a, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (int, float)):
            other = RateExpr(other)
        if not isinstance(other, RateExpr):
            return NotImplemented
        return self.const == other.const and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.const, tuple(sorted(self.coeffs.items()))))

    def is_zero(self) -> bool:
        return self.const == 0 and not self.coeffs

    @property
    def variables(self) -> frozenset:
        return frozenset(self.coeffs)

    def evaluate(self, assignment: Optional[Mapping[str, float]] = None) -> float:
        total = self.const
        for label, c in self.coeffs.items():
            if assignment is None or label not in assignment:
                raise MissingVariable(f"no value for passive rate x_{label}")
            total += c * assignment[label]
        return total

    def __str__(self):
        parts = []
        for label in sorted(self.coeffs):
            c = self.coeffs[label]
            mag = "" if abs(c) == 1 else _num(abs(c))
            parts.append(("-" if c < 0 else "+", f"{mag}x_{label}"))
        if self.const != 0 or not parts:
            parts.append(("-" if self.const < 0 else "+", _num(abs(self.const))))
        sign, body = parts[0]
        text = ("-" if sign == "-" else "") + body
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"RateExpr({str(self)!r})"


ZERO = RateExpr()


def _items(transitions):
    if isinstance(transitions, dict):
        return transitions.items()
    return transitions


def rate_total(transitions, source, target) -> RateExpr:
    """Sum of all rates from ``source`` to a different state ``target``."""
    source, target = canonicalize(source), canonicalize(target)
    if source == target:
        raise ValueError("rate_total is undefined for self-loops; use rate_labelled")
    expr = ZERO
    for t, m in _items(transitions):
        if t.target == target:
            expr = expr + RateExpr.from_rate(t.rate, t.label) * m
    return expr


def rate_labelled(transitions, source, target, label: str) -> RateExpr:
    """Sum of ``label`` rates from ``source`` to ``target``; self-loops included."""
    target = canonicalize(target)
    expr = ZERO
    for t, m in _items(transitions):
        if t.target == target and t.label == label:
            expr = expr + RateExpr.from_rate(t.rate, t.label) * m
    return expr


# -- generators ----------------------------------------------------------------------

@dataclass
class GeneratorMatrix:
    states: List[str]
    offdiag: Dict[Tuple[int, int], RateExpr] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.states)

    def entry(self, i: int, j: int) -> RateExpr:
        if i == j:
            return self.diagonal(i)
        return self.offdiag.get((i, j), ZERO)

    def diagonal(self, i: int) -> RateExpr:
        row = ZERO
        for (r, _), e in sorted(self.offdiag.items()):
            if r == i:
                row = row + e
        return -row

    @property
    def variables(self) -> frozenset:
        out = frozenset()
        for e in self.offdiag.values():
            out |= e.variables
        return out

    def is_numeric(self) -> bool:
        return not self.variables

    def to_strings(self) -> List[List[str]]:
        return [[str(self.entry(i, j)) for j in range(self.n)] for i in range(self.n)]


def build_generator(space: StateSpace) -> GeneratorMatrix:
    g = GeneratorMatrix(space.names())
    for i, trs in enumerate(space.transitions):
        for t, m in trs:
            j = space.index[t.target]
            if i == j:
                continue
            g.offdiag[(i, j)] = g.offdiag.get((i, j), ZERO) + RateExpr.from_rate(t.rate, t.label) * m
    return g


def evaluate_generator(g: GeneratorMatrix,
                       assignment: Optional[Mapping[str, float]] = None) -> np.ndarray:
    missing = g.variables - set(assignment or {})
    if missing:
        raise MissingVariable(f"no value for passive rate(s) {sorted(missing)}")
    Q = np.zeros((g.n, g.n))
    for (i, j), e in g.offdiag.items():
        Q[i, j] = e.evaluate(assignment)
    Q[np.diag_indices(g.n)] = -Q.sum(axis=1)
    return Q


def numeric_generator(space: StateSpace, assignment=None) -> np.ndarray:
    return evaluate_generator(build_generator(space), assignment)


# -- irreducibility ------------------------------------------------------------------

@dataclass
class Irreducibility:
    ok: bool
    components: List[List[int]]

    def __bool__(self):
        return self.ok


def _sccs(n: int, edges) -> List[List[int]]:
    if n == 0:
        return []
    rows, cols = zip(*edges) if edges else ((), ())
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    count, labels = connected_components(adj, directed=True, connection="strong")
    groups: Dict[int, List[int]] = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(i)
    return sorted(groups.values())


def check_irreducible(space: StateSpace) -> Irreducibility:
    """One strongly connected component over the non-self-loop transitions."""
    edges = {(i, space.index[t.target]) for i, trs in enumerate(space.transitions)
             for t, _ in trs if space.index[t.target] != i}
    comps = _sccs(len(space), sorted(edges))
    return Irreducibility(len(comps) == 1, comps)


def matrix_irreducible(Q: np.ndarray) -> Irreducibility:
    n = Q.shape[0]
    off = Q.copy()
    np.fill_diagonal(off, 0.0)
    edges = list(zip(*np.nonzero(off > 0)))
    comps = _sccs(n, edges)
    return Irreducibility(len(comps) == 1, comps)


# -- invariant measures -------------------------------------------------------------

@dataclass
class Measure:
    values: np.ndarray
    normalized: bool = True
    residual: float = 0.0
    states: Optional[List[str]] = None

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def as_dict(self) -> Dict[str, float]:
        names = self.states or [str(i) for i in range(len(self.values))]
        return dict(zip(names, map(float, self.values)))


def solve_invariant(Q, normalize: bool = True, budget: int = DEFAULT_SOLVE_BUDGET,
                    states: Optional[Sequence[str]] = None) -> Measure:
    """Solve ``pi Q = 0`` by dense elimination.

    The last balance equation is replaced by ``sum(pi) = 1``.  Reducible
    chains are refused outright.  Unnormalized measures are scaled so that
    the first state has mass 1.
    """
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    if Q.shape != (n, n) or n == 0:
        raise ValueError(f"generator must be a non-empty square matrix, got shape {Q.shape}")
    if n > budget:
        raise BudgetExceeded(f"dense solve dimension {n} exceeds budget {budget}", explored=n)
    irr = matrix_irreducible(Q)
    if not irr:
        raise ReducibleChainError(
            f"chain is reducible: {len(irr.components)} strongly connected components",
            irr.components)
    A = Q.T.copy()
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    if not normalize:
        pi = pi / pi[0]
    residual = float(np.max(np.abs(pi @ Q))) if n else 0.0
    return Measure(pi, normalize, residual, list(states) if states is not None else None)


# -- export ----------------------------------------------------------------------

def matrix_text(Q: np.ndarray) -> str:
    return "".join(" ".join(format(float(x), ".17g") for x in row) + "\n" for row in Q)


def generator_dict(g, states: Optional[Sequence[str]] = None) -> dict:
    """``{"states": [...], "q": [[...]]}``; symbolic entries become strings."""
    if isinstance(g, GeneratorMatrix):
        if g.is_numeric():
            q = evaluate_generator(g).tolist()
        else:
            q = g.to_strings()
        return {"states": list(g.states), "q": q}
    Q = np.asarray(g, dtype=float)
    names = list(states) if states is not None else [str(i) for i in range(Q.shape[0])]
    return {"states": names, "q": Q.tolist()}


def generator_json(g, states: Optional[Sequence[str]] = None) -> str:
    return json.dumps(generator_dict(g, states))
