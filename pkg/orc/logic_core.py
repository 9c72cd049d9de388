#!/usr/bin/env python3
"""
Logic Layer
Formula AST and its valuation into frequencies (VSem), with the temporal
operators always, next, sometime and precedes over the snapshot sequence.

Variables range over the universe at the evaluation time: the active domain
closed one level under the tuple arities the formula constructs.
"""

import logging
from dataclasses import dataclass, field, fields, is_dataclass, replace
from enum import Enum
from itertools import product
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

from errors import DomainMismatch, UnboundVariable
from freq_domain import (
    Frequency,
    FrequencyDomain,
    Operator,
    apply,
    count,
    is_truthy,
    minus,
    one,
    zero,
)
from orm_model import InstanceValue, Model, PopulationSequence, instance_sort_key, render_instance

logger = logging.getLogger(__name__)


# --- terms ----------------------------------------------------------------

@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class TupleTerm:
    items: Tuple["Term", ...]

    def __str__(self):
        return '⟨' + ','.join(render_term(i) for i in self.items) + '⟩'


Term = Union[Variable, TupleTerm, InstanceValue]


def render_term(term: Term) -> str:
    if isinstance(term, (Variable, TupleTerm)):
        return str(term)
    return repr(render_instance(term)) if isinstance(term, str) else render_instance(term)


def term_variables(term: Term) -> FrozenSet[str]:
    if isinstance(term, Variable):
        return frozenset([term.name])
    if isinstance(term, TupleTerm):
        return frozenset().union(*(term_variables(i) for i in term.items))
    return frozenset()


# --- formulas -------------------------------------------------------------

class Formula:
    """Marker base class for formula nodes"""


class Truth(Enum):
    """Domain-independent literal, resolved to one or zero at evaluation"""
    ONE = '1̂'
    ZERO = '0̂'


@dataclass(frozen=True)
class ObjAtom(Formula):
    type_id: str
    term: Term


@dataclass(frozen=True)
class RoleAtom(Formula):
    role_id: str
    player: Term
    fact: Term


@dataclass(frozen=True)
class Eq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class Binary(Formula):
    op: Operator
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Aggregate(Formula):
    """Existential that adds up the frequencies of its witnesses"""
    var: str
    body: Formula


@dataclass(frozen=True)
class Always(Formula):
    body: Formula


@dataclass(frozen=True)
class NextF(Formula):
    body: Formula


@dataclass(frozen=True)
class Sometime(Formula):
    body: Formula


@dataclass(frozen=True)
class Precedes(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Lit(Formula):
    value: Union[Frequency, Truth]


def implies(a: Formula, b: Formula) -> Formula:
    return Binary(Operator.JOIN, Not(a), b)


def iff(a: Formula, b: Formula) -> Formula:
    return Binary(Operator.MEET, implies(a, b), implies(b, a))


def precedes_expansion(x: Formula, y: Formula) -> Formula:
    """□((X ∧ ○Y) ⟹ (○¬X ∧ ¬Y))"""
    return Always(implies(
        Binary(Operator.MEET, x, NextF(y)),
        Binary(Operator.MEET, NextF(Not(x)), Not(y)),
    ))


# --- evaluation context ---------------------------------------------------

@dataclass(frozen=True)
class EvalContext:
    model: Model
    seq: PopulationSequence
    domain: FrequencyDomain
    t: int
    env: Dict[str, InstanceValue] = field(default_factory=dict)
    diagnostics: List[str] = field(default_factory=list, compare=False)
    arities: Optional[FrozenSet[int]] = None
    cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        self.seq.snapshot_at(self.t)

    @property
    def snapshot(self):
        return self.seq.snapshot_at(self.t)

    def at(self, t: int) -> "EvalContext":
        return replace(self, t=t)

    def bind(self, var: str, value: InstanceValue) -> "EvalContext":
        env = dict(self.env)
        env[var] = value
        return replace(self, env=env)

    def without(self, names: Iterable[str]) -> "EvalContext":
        names = set(names)
        env = {k: v for k, v in self.env.items() if k not in names}
        return replace(self, env=env)

    def warn(self, message: str) -> None:
        if message not in self.diagnostics:
            logger.warning(message)
            self.diagnostics.append(message)


def resolve(ctx: EvalContext, term: Term) -> InstanceValue:
    if isinstance(term, Variable):
        try:
            return ctx.env[term.name]
        except KeyError:
            raise UnboundVariable(f"Variable {term.name} is not bound")
    if isinstance(term, TupleTerm):
        return tuple(resolve(ctx, item) for item in term.items)
    return term


def active_domain(ctx: EvalContext) -> FrozenSet[InstanceValue]:
    """Everything populating some object type or fact type at ctx.t"""
    key = ('active', ctx.t)
    if key not in ctx.cache:
        s = ctx.snapshot
        values = set()
        for type_id in ctx.model.type_ids():
            values |= ctx.model.pop(s, type_id)
        ctx.cache[key] = frozenset(values)
    return ctx.cache[key]


def universe(ctx: EvalContext) -> List[InstanceValue]:
    """Active domain plus its n-tuples for every constructed arity n, in canonical order"""
    arities = ctx.arities or frozenset()
    key = ('universe', ctx.t, arities)
    if key not in ctx.cache:
        base = active_domain(ctx)
        values = set(base)
        ordered_base = sorted(base, key=instance_sort_key)
        for n in arities:
            values.update(product(ordered_base, repeat=n))
        ordered = sorted(values, key=instance_sort_key)
        ctx.cache[key] = ordered
        ctx.cache[key + ('set',)] = frozenset(values)
    return ctx.cache[key]


def universe_set(ctx: EvalContext) -> FrozenSet[InstanceValue]:
    universe(ctx)
    return ctx.cache[('universe', ctx.t, ctx.arities or frozenset(), 'set')]


def formula_arities(node) -> FrozenSet[int]:
    """Lengths of every tuple term constructed anywhere in a formula"""
    found = set()

    def walk(item):
        if hasattr(item, 'tuple_arities'):
            found.update(item.tuple_arities())
        elif isinstance(item, TupleTerm):
            found.add(len(item.items))
            for sub in item.items:
                walk(sub)
        elif isinstance(item, Formula) and is_dataclass(item):
            for f in fields(item):
                walk(getattr(item, f.name))

    walk(node)
    return frozenset(found)


def free_variables(f: Formula) -> FrozenSet[str]:
    if hasattr(f, 'free_variables'):
        return f.free_variables()
    if isinstance(f, ObjAtom):
        return term_variables(f.term)
    if isinstance(f, RoleAtom):
        return term_variables(f.player) | term_variables(f.fact)
    if isinstance(f, Eq):
        return term_variables(f.left) | term_variables(f.right)
    if isinstance(f, (Binary, Precedes)):
        return free_variables(f.left) | free_variables(f.right)
    if isinstance(f, (Forall, Exists, Aggregate)):
        return free_variables(f.body) - {f.var}
    if isinstance(f, (Not, Always, NextF, Sometime)):
        return free_variables(f.body)
    return frozenset()


# --- valuation ------------------------------------------------------------

def vsem(ctx: EvalContext, f: Formula) -> Frequency:
    """The frequency of a formula at ctx.t under ctx.env"""
    if ctx.arities is None:
        ctx = replace(ctx, arities=formula_arities(f))
    return _vsem(ctx, f)


def _vsem(ctx: EvalContext, f: Formula) -> Frequency:
    d = ctx.domain
    if hasattr(f, 'valuate'):
        return f.valuate(ctx)

    if isinstance(f, ObjAtom):
        i = resolve(ctx, f.term)
        return count((x for x in ctx.model.pop(ctx.snapshot, f.type_id) if x == i), d)

    if isinstance(f, RoleAtom):
        i, j = resolve(ctx, f.player), resolve(ctx, f.fact)
        extension = ctx.model.role_extension(ctx.snapshot, f.role_id)
        return count((pair for pair in extension if pair == (i, j)), d)

    if isinstance(f, Eq):
        return one(d) if resolve(ctx, f.left) == resolve(ctx, f.right) else zero(d)

    if isinstance(f, Binary):
        left = _vsem(ctx, f.left)
        if d.sparse and f.op in (Operator.MEET, Operator.TIMES) and not is_truthy(left):
            return left
        return apply(f.op, left, _vsem(ctx, f.right))

    if isinstance(f, Not):
        return minus(one(d), _vsem(ctx, f.body))

    if isinstance(f, Forall):
        return fold(Operator.MEET, (
            _vsem(ctx.bind(f.var, c), f.body) for c in universe(ctx)
        ), one(d))

    if isinstance(f, (Exists, Aggregate)):
        op = Operator.JOIN if isinstance(f, Exists) else Operator.ADD
        candidates = _pinned_candidates(ctx, f.var, f.body)
        if candidates is None:
            candidates = universe(ctx)
        return fold(op, (_vsem(ctx.bind(f.var, c), f.body) for c in candidates), zero(d))

    if isinstance(f, Always):
        return fold(Operator.MEET, (_vsem(ctx.at(s), f.body) for s in ctx.seq.times), one(d))

    if isinstance(f, NextF):
        nxt = ctx.seq.next_time(ctx.t)
        if nxt is None:
            ctx.warn(horizon_warning(ctx.t))
            return zero(d)
        return _vsem(ctx.at(nxt), f.body)

    if isinstance(f, Sometime):
        return _vsem(ctx, Not(Always(Not(f.body))))

    if isinstance(f, Precedes):
        return _precedes(ctx, f)

    if isinstance(f, Lit):
        if isinstance(f.value, Truth):
            return one(d) if f.value is Truth.ONE else zero(d)
        if f.value.domain != d:
            raise DomainMismatch(f"Literal {f.value} is in {f.value.domain}, evaluation is in {d}")
        return f.value

    raise TypeError(f"Not a formula: {f!r}")


def horizon_warning(t: int) -> str:
    return f"Next evaluated at the final snapshot (t={t}); taken as zero"


def _precedes(ctx: EvalContext, f: Precedes) -> Frequency:
    """The value of precedes_expansion(X, Y). The horizon is only reported when
    X holds at the final snapshot, where the cut-off ○Y decides the trigger."""
    d = ctx.domain
    times = ctx.seq.times
    result = one(d)
    for s, nxt in zip(times, times[1:] + [None]):
        at_s = ctx.at(s)
        x = _vsem(at_s, f.left)
        if nxt is None:
            if is_truthy(x):
                ctx.warn(horizon_warning(s))
            next_y = next_not_x = zero(d)
        else:
            next_y = _vsem(ctx.at(nxt), f.right)
            next_not_x = minus(one(d), _vsem(ctx.at(nxt), f.left))
        trigger = apply(Operator.MEET, x, next_y)
        outcome = apply(Operator.MEET, next_not_x, minus(one(d), _vsem(at_s, f.right)))
        result = apply(Operator.MEET, result, apply(Operator.JOIN, minus(one(d), trigger), outcome))
    return result


def fold(op: Operator, values: Iterable[Frequency], start: Frequency) -> Frequency:
    result = start
    for v in values:
        result = apply(op, result, v)
    return result


# --- candidate pinning ----------------------------------------------------
# In Bool and Nat an existential whose body is a conjunction containing
# var = term only has one witness that can be non-zero.

_NO_MATCH = object()


def _pinned_candidates(ctx: EvalContext, var: str, body: Formula) -> Optional[List[InstanceValue]]:
    if not ctx.domain.sparse:
        return None
    for conjunct, inner in _conjuncts(body, var, frozenset()):
        if not isinstance(conjunct, Eq):
            continue
        hidden = inner | {var}
        for pattern, other in ((conjunct.left, conjunct.right), (conjunct.right, conjunct.left)):
            if var not in term_variables(pattern) or term_variables(other) & hidden:
                continue
            try:
                value = resolve(ctx.without(hidden), other)
            except UnboundVariable:
                continue
            found = _match(pattern, value, var)
            if found is _NO_MATCH:
                return []
            if found is not None:
                return [found[0]] if found[0] in universe_set(ctx) else []
    return None


def _conjuncts(f: Formula, var: str, inner: FrozenSet[str]):
    if isinstance(f, Binary) and f.op in (Operator.MEET, Operator.TIMES):
        yield from _conjuncts(f.left, var, inner)
        yield from _conjuncts(f.right, var, inner)
    elif isinstance(f, (Exists, Aggregate)) and f.var != var:
        yield from _conjuncts(f.body, var, inner | {f.var})
    else:
        yield f, inner


def _match(pattern: Term, value: InstanceValue, var: str):
    """(value,) for var when the pattern determines it, _NO_MATCH when it cannot match"""
    if isinstance(pattern, Variable):
        return (value,) if pattern.name == var else None
    if isinstance(pattern, TupleTerm):
        if not isinstance(value, tuple) or len(value) != len(pattern.items):
            return _NO_MATCH
        for item, part in zip(pattern.items, value):
            found = _match(item, part, var)
            if found is not None:
                return found
        return None
    return None


# --- rendering ------------------------------------------------------------

def render_formula(f: Formula) -> str:
    if hasattr(f, 'render'):
        return f.render()
    if isinstance(f, ObjAtom):
        return f"{f.type_id}({render_term(f.term)})"
    if isinstance(f, RoleAtom):
        return f"{f.role_id}({render_term(f.player)}, {render_term(f.fact)})"
    if isinstance(f, Eq):
        return f"{render_term(f.left)} = {render_term(f.right)}"
    if isinstance(f, Binary):
        return f"({render_formula(f.left)} {f.op.value} {render_formula(f.right)})"
    if isinstance(f, Not):
        return f"¬{render_formula(f.body)}"
    if isinstance(f, Forall):
        return f"∀{f.var}. {render_formula(f.body)}"
    if isinstance(f, Exists):
        return f"∃{f.var}. {render_formula(f.body)}"
    if isinstance(f, Aggregate):
        return f"⊕{f.var}. {render_formula(f.body)}"
    if isinstance(f, Always):
        return f"□ {render_formula(f.body)}"
    if isinstance(f, NextF):
        return f"○ {render_formula(f.body)}"
    if isinstance(f, Sometime):
        return f"◇ {render_formula(f.body)}"
    if isinstance(f, Precedes):
        return f"({render_formula(f.left)} precedes {render_formula(f.right)})"
    if isinstance(f, Lit):
        return f.value.value if isinstance(f.value, Truth) else str(f.value)
    return repr(f)
