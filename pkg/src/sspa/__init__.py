"""A simple stochastic process algebra with a product-form solver."""

from .errors import (
    BudgetExceeded, CooperationError, IllFormedComponent, IllFoundedDefinition, MissingVariable,
    ParseError, ReducibleChainError, SSPAError, UnclosableComponent,
)
from .syntax import (
    NIL, PASSIVE, Choice, Closure, Const, Ident, Model, Nil, Passive, Prefix, System, desugar,
    format_model, format_term, parse_model, parse_term,
)
from .semantics import (
    Coop, SystemSpec, Transition, active_labels, apply_closure, apply_closure_set, canonicalize,
    coop_transitions, derive_transitions, is_closed, is_well_formed, passive_labels, resolve,
    strong_bisimilar, system_spec, system_term, unique_passive_labels, validate_cooperation,
)
from .ctmc import (
    GeneratorMatrix, Measure, RateExpr, StateSpace, build_generator, check_irreducible,
    enumerate_states, evaluate_generator, rate_labelled, rate_total, solve_invariant,
)
from .prodform import (
    ProductFormSolution, SolverConfig, assemble_product, close_component, grcat_solve,
    reversed_rates, verify_against_joint,
)

__version__ = "0.1.0"
