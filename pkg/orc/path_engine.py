#!/usr/bin/env python3
"""
Path Expression Layer
Path expression AST, its rewrite into logic formulas, and a table evaluator
producing (head, tail) -> frequency tables that agree with the rewrite.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import reduce
from itertools import product
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

import pandas as pd

from errors import EmptyProduct, UnboundVariable
from freq_domain import Frequency, Operator, apply, count, is_truthy, minus, one, zero
from logic_core import (
    Aggregate,
    Always,
    Binary,
    Eq,
    EvalContext,
    Exists,
    Forall,
    Formula,
    Lit,
    Not,
    ObjAtom,
    Precedes,
    RoleAtom,
    Sometime,
    Term,
    Truth,
    TupleTerm,
    Variable,
    fold,
    horizon_warning,
    iff,
    implies,
    universe,
    vsem,
)
from orm_model import InstanceValue, instance_sort_key, instance_to_json, render_instance

logger = logging.getLogger(__name__)

Pair = Tuple[InstanceValue, InstanceValue]
Rows = Dict[Pair, Frequency]


# --- AST ------------------------------------------------------------------

class PathExpr:
    """Marker base class for path expressions"""


@dataclass(frozen=True)
class ObjType(PathExpr):
    name: str


@dataclass(frozen=True)
class Role(PathExpr):
    name: str


@dataclass(frozen=True)
class Reverse(PathExpr):
    body: PathExpr


@dataclass(frozen=True)
class Const(PathExpr):
    value: InstanceValue


@dataclass(frozen=True)
class Var(PathExpr):
    name: str


@dataclass(frozen=True)
class OnePath(PathExpr):
    pass


@dataclass(frozen=True)
class ZeroPath(PathExpr):
    pass


@dataclass(frozen=True)
class FullPath(PathExpr):
    pass


@dataclass(frozen=True)
class Concat(PathExpr):
    left: PathExpr
    right: PathExpr


@dataclass(frozen=True)
class Head(PathExpr):
    body: PathExpr


@dataclass(frozen=True)
class Tail(PathExpr):
    body: PathExpr


@dataclass(frozen=True)
class Confluence(PathExpr):
    parts: Tuple[PathExpr, ...]

    def __post_init__(self):
        if not self.parts:
            raise EmptyProduct("A confluence needs at least one path")


@dataclass(frozen=True)
class PathBinary(PathExpr):
    op: Operator
    left: PathExpr
    right: PathExpr


@dataclass(frozen=True)
class NotPath(PathExpr):
    body: PathExpr


class HeadOp(Enum):
    HAND = 'hand'
    HOR = 'hor'
    HPLUS = 'hplus'
    HMINUS = 'hminus'
    HIMPLIES = 'himplies'
    HIFF = 'hiff'


_HEAD_OPERATORS = {
    HeadOp.HAND: Operator.MEET,
    HeadOp.HOR: Operator.JOIN,
    HeadOp.HPLUS: Operator.ADD,
    HeadOp.HMINUS: Operator.MINUS,
}


@dataclass(frozen=True)
class HeadConn(PathExpr):
    op: HeadOp
    left: PathExpr
    right: PathExpr


@dataclass(frozen=True)
class AlwaysP(PathExpr):
    body: PathExpr


@dataclass(frozen=True)
class SometimeP(PathExpr):
    body: PathExpr


@dataclass(frozen=True)
class PrecedesP(PathExpr):
    left: PathExpr
    right: PathExpr


def concat_all(paths: Iterable[PathExpr]) -> PathExpr:
    """Left-nested concatenation of one or more paths"""
    return reduce(Concat, paths)


def cartesian(paths: List[PathExpr]) -> PathExpr:
    """P1 × … × Pn as the confluence of each Pi ∘ ⊤"""
    if not paths:
        raise EmptyProduct("Cartesian product of no paths")
    return Confluence(tuple(Concat(p, FullPath()) for p in paths))


def children(p: PathExpr) -> Tuple[PathExpr, ...]:
    if isinstance(p, (Reverse, Head, Tail, NotPath, AlwaysP, SometimeP)):
        return (p.body,)
    if isinstance(p, (Concat, PathBinary, HeadConn, PrecedesP)):
        return (p.left, p.right)
    if isinstance(p, Confluence):
        return p.parts
    return ()


def path_variables(p: PathExpr) -> FrozenSet[str]:
    """The ω-variables used in a path"""
    if isinstance(p, Var):
        return frozenset([p.name])
    return frozenset().union(*(path_variables(c) for c in children(p)))


def path_arities(p: PathExpr) -> FrozenSet[int]:
    """Tuple arities constructed by the confluences of a path"""
    own = {len(p.parts)} if isinstance(p, Confluence) and len(p.parts) > 1 else set()
    return frozenset(own).union(*(path_arities(c) for c in children(p)))


# --- rewrite to logic -----------------------------------------------------

class _Rewriter:

    def __init__(self):
        self.counter = 0

    def fresh(self) -> str:
        self.counter += 1
        return f"_z{self.counter}"

    def rw(self, p: PathExpr, x: Term, y: Term) -> Formula:
        if isinstance(p, ObjType):
            return Binary(Operator.MEET, ObjAtom(p.name, x), Eq(x, y))
        if isinstance(p, Role):
            return RoleAtom(p.name, x, y)
        if isinstance(p, Reverse):
            return self.rw(p.body, y, x)
        if isinstance(p, Const):
            return Binary(Operator.MEET, Eq(p.value, x), Eq(x, y))
        if isinstance(p, Var):
            return Binary(Operator.MEET, Eq(Variable(p.name), x), Eq(x, y))
        if isinstance(p, OnePath):
            return Eq(x, y)
        if isinstance(p, ZeroPath):
            return Lit(Truth.ZERO)
        if isinstance(p, FullPath):
            return Lit(Truth.ONE)
        if isinstance(p, Concat):
            z = self.fresh()
            return Aggregate(z, Binary(Operator.TIMES,
                                       self.rw(p.left, x, Variable(z)),
                                       self.rw(p.right, Variable(z), y)))
        if isinstance(p, Head):
            z = self.fresh()
            return Binary(Operator.MEET, Eq(x, y), Exists(z, self.rw(p.body, x, Variable(z))))
        if isinstance(p, Tail):
            z = self.fresh()
            return Binary(Operator.MEET, Eq(x, y), Exists(z, self.rw(p.body, Variable(z), y)))
        if isinstance(p, Confluence):
            if len(p.parts) == 1:
                return self.rw(p.parts[0], x, y)
            names = [self.fresh() for _ in p.parts]
            conj = reduce(lambda a, b: Binary(Operator.MEET, a, b),
                          [self.rw(part, Variable(n), y) for part, n in zip(p.parts, names)])
            body = Binary(Operator.MEET, Eq(x, TupleTerm(tuple(Variable(n) for n in names))), conj)
            for n in reversed(names):
                body = Exists(n, body)
            return body
        if isinstance(p, PathBinary):
            return Binary(p.op, self.rw(p.left, x, y), self.rw(p.right, x, y))
        if isinstance(p, NotPath):
            return Not(self.rw(p.body, x, y))
        if isinstance(p, HeadConn):
            hp = self.rw(Head(p.left), x, y)
            hq = self.rw(Head(p.right), x, y)
            if p.op is HeadOp.HIMPLIES:
                return implies(hp, hq)
            if p.op is HeadOp.HIFF:
                return iff(hp, hq)
            return Binary(_HEAD_OPERATORS[p.op], hp, hq)
        if isinstance(p, AlwaysP):
            return Always(self.rw(p.body, x, y))
        if isinstance(p, SometimeP):
            return Sometime(self.rw(p.body, x, y))
        if isinstance(p, PrecedesP):
            return Precedes(self.rw(p.left, x, y), self.rw(p.right, x, y))
        raise TypeError(f"Not a path expression: {p!r}")


def rewrite(p: PathExpr, x: Term, y: Term) -> Formula:
    """x⟦P⟧y as a logic formula"""
    return _Rewriter().rw(p, x, y)


# --- tables ---------------------------------------------------------------

@dataclass(frozen=True)
class KeySpace:
    """Instances allowed at heads and tails, in canonical order"""
    ordered: Tuple[InstanceValue, ...]
    members: FrozenSet[InstanceValue]

    @classmethod
    def of(cls, values: Iterable[InstanceValue]) -> "KeySpace":
        values = frozenset(values)
        return cls(tuple(sorted(values, key=instance_sort_key)), values)

    def union(self, other: "KeySpace") -> "KeySpace":
        return KeySpace.of(self.members | other.members)

    def pairs(self):
        return product(self.ordered, self.ordered)


def _sort_pair(pair: Pair):
    return (instance_sort_key(pair[0]), instance_sort_key(pair[1]))


@dataclass
class FreqTable:
    """Non-zero rows of x⟦P⟧y, optionally split per binding of free ω-variables"""
    rows: Rows
    variables: Tuple[str, ...] = ()
    by_binding: Dict[Tuple[InstanceValue, ...], Rows] = field(default_factory=dict)

    def get(self, head: InstanceValue, tail: InstanceValue) -> Optional[Frequency]:
        return self.rows.get((head, tail))

    def sorted_rows(self) -> List[Tuple[InstanceValue, InstanceValue, Frequency]]:
        return [(h, t, self.rows[(h, t)]) for h, t in sorted(self.rows, key=_sort_pair)]

    def values(self) -> Dict[Pair, object]:
        """Rows with plain values, handy for comparisons"""
        return {pair: v.value for pair, v in self.rows.items()}

    def __len__(self):
        return len(self.rows)

    def to_dataframe(self) -> pd.DataFrame:
        records = [
            {'x': render_instance(h), 'y': render_instance(t), 'frequency': str(v)}
            for h, t, v in self.sorted_rows()
        ]
        return pd.DataFrame(records, columns=['x', 'y', 'frequency'])

    def render(self) -> str:
        if not self.rows:
            return '(no rows)'
        return self.to_dataframe().to_string(index=False)

    def to_json(self) -> List[dict]:
        return [
            {'head': instance_to_json(h), 'tail': instance_to_json(t), 'value': v.to_json()}
            for h, t, v in self.sorted_rows()
        ]


class _TableBuilder:
    """Evaluates path expressions to tables. Bool and Nat tables hold only
    non-zero rows; other domains hold every pair of the key space. Compositions
    are hash joins over non-zero rows in every domain: Dist tables only ever
    hold point masses, on which zero absorbs ⊗ as it does in Int."""

    def __init__(self, ctx: EvalContext):
        self.d = ctx.domain
        self.sparse = ctx.domain.sparse
        self.one = one(ctx.domain)
        self.zero = zero(ctx.domain)

    def universe(self, ctx: EvalContext) -> KeySpace:
        key = ('keyspace', ctx.t, ctx.arities)
        if key not in ctx.cache:
            ctx.cache[key] = KeySpace.of(universe(ctx))
        return ctx.cache[key]

    def eq(self, a, b) -> Frequency:
        return self.one if a == b else self.zero

    def get(self, rows: Rows, a, b) -> Frequency:
        return rows.get((a, b), self.zero)

    def _finish(self, rows: Rows) -> Rows:
        if self.sparse:
            return {k: v for k, v in rows.items() if is_truthy(v)}
        return rows

    def _nonzero(self, rows: Rows):
        if self.sparse:
            return rows.items()
        return [(k, v) for k, v in rows.items() if is_truthy(v)]

    def _densify(self, rows: Rows, keys: KeySpace) -> Rows:
        """Drop zero rows in sparse mode, fill every other pair with zero otherwise"""
        if self.sparse:
            return self._finish(rows)
        return {pair: rows.get(pair, self.zero) for pair in keys.pairs()}

    def _pairs(self, keys: KeySpace, tables: Iterable[Rows]):
        """Pairs that can be non-zero: any table row in sparse mode, every pair otherwise"""
        if not self.sparse:
            return list(keys.pairs())
        found = set()
        for rows in tables:
            found.update(k for k in rows if k[0] in keys.members and k[1] in keys.members)
        return sorted(found, key=_sort_pair)

    def combine(self, op: Operator, left: Rows, right: Rows, keys: KeySpace) -> Rows:
        return self._finish({
            (a, b): apply(op, self.get(left, a, b), self.get(right, a, b))
            for a, b in self._pairs(keys, (left, right))
        })

    def negate(self, rows: Rows, keys: KeySpace) -> Rows:
        return self._finish({
            (a, b): minus(self.one, self.get(rows, a, b)) for a, b in keys.pairs()
        })

    def build(self, ctx: EvalContext, p: PathExpr, keys: KeySpace) -> Rows:
        d = self.d
        if isinstance(p, ObjType):
            pop = ctx.model.pop(ctx.snapshot, p.name)
            if self.sparse:
                return {(a, a): count([a], d) for a in pop if a in keys.members}
            return {(a, b): apply(Operator.MEET, count([a] if a in pop else [], d), self.eq(a, b))
                    for a, b in keys.pairs()}

        if isinstance(p, Role):
            extension = ctx.model.role_extension(ctx.snapshot, p.name)
            if self.sparse:
                return {(i, f): count([f], d) for i, f in extension
                        if i in keys.members and f in keys.members}
            return {(a, b): count([1] if (a, b) in extension else [], d) for a, b in keys.pairs()}

        if isinstance(p, Reverse):
            inner = self.build(ctx, p.body, keys)
            return {(b, a): v for (a, b), v in inner.items()}

        if isinstance(p, (Const, Var)):
            if isinstance(p, Var):
                if p.name not in ctx.env:
                    raise UnboundVariable(f"Variable {p.name} is not bound")
                c = ctx.env[p.name]
            else:
                c = p.value
            if self.sparse:
                return {(c, c): self.one} if c in keys.members else {}
            return {(a, b): apply(Operator.MEET, self.eq(c, a), self.eq(a, b)) for a, b in keys.pairs()}

        if isinstance(p, OnePath):
            if self.sparse:
                return {(a, a): self.one for a in keys.ordered}
            return {(a, b): self.eq(a, b) for a, b in keys.pairs()}

        if isinstance(p, ZeroPath):
            return {} if self.sparse else {pair: self.zero for pair in keys.pairs()}

        if isinstance(p, FullPath):
            return {pair: self.one for pair in keys.pairs()}

        if isinstance(p, Concat):
            return self._concat(ctx, p, keys)

        if isinstance(p, (Head, Tail)):
            return self._head_or_tail(ctx, p, keys)

        if isinstance(p, Confluence):
            if len(p.parts) == 1:
                return self.build(ctx, p.parts[0], keys)
            return self._confluence(ctx, p, keys)

        if isinstance(p, PathBinary):
            return self.combine(p.op, self.build(ctx, p.left, keys), self.build(ctx, p.right, keys), keys)

        if isinstance(p, NotPath):
            return self.negate(self.build(ctx, p.body, keys), keys)

        if isinstance(p, HeadConn):
            hp = self.build(ctx, Head(p.left), keys)
            hq = self.build(ctx, Head(p.right), keys)
            if p.op is HeadOp.HIMPLIES:
                return self.combine(Operator.JOIN, self.negate(hp, keys), hq, keys)
            if p.op is HeadOp.HIFF:
                forward = self.combine(Operator.JOIN, self.negate(hp, keys), hq, keys)
                backward = self.combine(Operator.JOIN, self.negate(hq, keys), hp, keys)
                return self.combine(Operator.MEET, forward, backward, keys)
            return self.combine(_HEAD_OPERATORS[p.op], hp, hq, keys)

        if isinstance(p, (AlwaysP, SometimeP)):
            return self._always_or_sometime(ctx, p, keys)

        if isinstance(p, PrecedesP):
            return self._precedes(ctx, p, keys)

        raise TypeError(f"Not a path expression: {p!r}")

    def _concat(self, ctx: EvalContext, p: Concat, keys: KeySpace) -> Rows:
        # zero rows contribute nothing: 0̂ is ⊗-absorbing and ⊕-neutral on every path table
        left = self.build(ctx, p.left, keys)
        right = self.build(ctx, p.right, keys)
        uni = self.universe(ctx)
        by_head = defaultdict(list)
        for (z, b), w in self._nonzero(right):
            by_head[z].append((b, w))
        result = {}
        for (a, z), v in self._nonzero(left):
            if z not in uni.members:
                continue
            for b, w in by_head.get(z, ()):
                result[(a, b)] = apply(Operator.ADD, result.get((a, b), self.zero),
                                       apply(Operator.TIMES, v, w))
        return self._densify(result, keys)

    def _head_or_tail(self, ctx: EvalContext, p: PathExpr, keys: KeySpace) -> Rows:
        inner = self.build(ctx, p.body, keys)
        uni = self.universe(ctx)
        at_head = isinstance(p, Head)
        best = {}
        for (a, b), v in self._nonzero(inner):
            end, other = (a, b) if at_head else (b, a)
            if other in uni.members:
                best[end] = apply(Operator.JOIN, best.get(end, self.zero), v)
        return self._densify({(a, a): apply(Operator.MEET, self.one, v) for a, v in best.items()}, keys)

    def _confluence(self, ctx: EvalContext, p: Confluence, keys: KeySpace) -> Rows:
        tables = [self.build(ctx, part, keys) for part in p.parts]
        uni = self.universe(ctx)

        def conj(heads, b):
            return reduce(lambda acc, v: apply(Operator.MEET, acc, v),
                          [self.get(t, h, b) for t, h in zip(tables, heads)])

        # a head tuple with a zero part meets to at most zero
        by_tail = [defaultdict(list) for _ in tables]
        for i, rows in enumerate(tables):
            for (h, b), _ in self._nonzero(rows):
                if h in uni.members:
                    by_tail[i][b].append(h)
        result = {}
        tails = set(by_tail[0]).intersection(*by_tail[1:])
        for b in tails:
            for heads in product(*(index[b] for index in by_tail)):
                if heads in keys.members:
                    result[(heads, b)] = apply(Operator.JOIN, self.zero,
                                               apply(Operator.MEET, self.one, conj(heads, b)))
        return self._densify(result, keys)

    def _timeline(self, ctx: EvalContext, p: PathExpr, keys: KeySpace) -> Dict[int, Rows]:
        tables = {}
        for s in ctx.seq.times:
            at_s = ctx.at(s)
            tables[s] = self.build(at_s, p, keys.union(self.universe(at_s)))
        return tables

    def _always_or_sometime(self, ctx: EvalContext, p: PathExpr, keys: KeySpace) -> Rows:
        tables = self._timeline(ctx, p.body, keys)
        times = ctx.seq.times
        if isinstance(p, AlwaysP):
            candidates = self._pairs(keys, [tables[times[0]]])
            return self._finish({
                (a, b): fold(Operator.MEET, (self.get(tables[s], a, b) for s in times), self.one)
                for a, b in candidates
            })
        candidates = self._pairs(keys, tables.values())
        return self._finish({
            (a, b): minus(self.one, fold(Operator.MEET, (minus(self.one, self.get(tables[s], a, b))
                                                         for s in times), self.one))
            for a, b in candidates
        })

    def _precedes(self, ctx: EvalContext, p: PrecedesP, keys: KeySpace) -> Rows:
        xs = self._timeline(ctx, p.left, keys)
        ys = self._timeline(ctx, p.right, keys)
        times = ctx.seq.times
        final = xs[times[-1]]
        if any(is_truthy(self.get(final, a, b)) for a, b in keys.pairs()):
            ctx.warn(horizon_warning(times[-1]))

        def body(s, nxt, a, b):
            x = self.get(xs[s], a, b)
            next_y = self.get(ys[nxt], a, b) if nxt is not None else self.zero
            trigger = apply(Operator.MEET, x, next_y)
            next_not_x = minus(self.one, self.get(xs[nxt], a, b)) if nxt is not None else self.zero
            outcome = apply(Operator.MEET, next_not_x, minus(self.one, self.get(ys[s], a, b)))
            return apply(Operator.JOIN, minus(self.one, trigger), outcome)

        steps = list(zip(times, times[1:] + [None]))
        return self._finish({
            (a, b): fold(Operator.MEET, (body(s, nxt, a, b) for s, nxt in steps), self.one)
            for a, b in keys.pairs()
        })


def _with_arities(ctx: EvalContext, p: PathExpr) -> EvalContext:
    if ctx.arities is None:
        return replace(ctx, arities=path_arities(p))
    return ctx


def _rows(ctx: EvalContext, p: PathExpr) -> Rows:
    """Rows of p at ctx.t over the universe, with all ω-variables bound in ctx.env"""
    builder = _TableBuilder(ctx)
    return builder.build(ctx, p, builder.universe(ctx))


def _exists_fold(ctx: EvalContext, names: List[str], leaf):
    """Nested ∨-folds over the universe for each name, as Exists binders would"""
    if not names:
        return leaf(ctx)
    return fold(Operator.JOIN,
                (_exists_fold(ctx.bind(names[0], c), names[1:], leaf) for c in universe(ctx)),
                zero(ctx.domain))


def eval_path(ctx: EvalContext, p: PathExpr) -> FreqTable:
    """x⟦P⟧y for every pair of universe instances, as a table of non-zero rows.
    Unbound ω-variables are enumerated and their tables joined into the rows."""
    ctx = _with_arities(ctx, p)
    free = sorted(path_variables(p) - set(ctx.env))
    if not free:
        return FreqTable({k: v for k, v in _rows(ctx, p).items() if is_truthy(v)})

    uni = universe(ctx)
    by_binding = {}
    for values in product(uni, repeat=len(free)):
        bound = ctx
        for name, value in zip(free, values):
            bound = bound.bind(name, value)
        by_binding[values] = _rows(bound, p)

    logger.debug(f"Enumerated {len(by_binding)} bindings of {', '.join(free)}")
    zero_value = zero(ctx.domain)
    pairs = set()
    for rows in by_binding.values():
        pairs.update(rows)

    def combined(pair):
        def leaf(bound):
            return by_binding[tuple(bound.env[name] for name in free)].get(pair, zero_value)
        return _exists_fold(ctx, free, leaf)

    rows = {pair: combined(pair) for pair in pairs}
    return FreqTable(
        rows={k: v for k, v in rows.items() if is_truthy(v)},
        variables=tuple(free),
        by_binding={b: {k: v for k, v in r.items() if is_truthy(v)} for b, r in by_binding.items()},
    )


# --- path quantifiers -----------------------------------------------------

class QuantKind(Enum):
    ANY = 'ANY'
    ALL = 'ALL'


@dataclass(frozen=True)
class PathQuant(Formula):
    """ANY(P) = ∃x,y. x⟦P⟧y and ALL(P) = ∀x,y. x⟦P⟧y, evaluated through tables"""
    kind: QuantKind
    path: PathExpr

    def tuple_arities(self) -> FrozenSet[int]:
        return path_arities(self.path)

    def free_variables(self) -> FrozenSet[str]:
        return path_variables(self.path)

    def expand(self) -> Formula:
        body = rewrite(self.path, Variable('_x'), Variable('_y'))
        binder = Exists if self.kind is QuantKind.ANY else Forall
        return binder('_x', binder('_y', body))

    def render(self) -> str:
        return f"{self.kind.value}({render_path(self.path)})"

    def valuate(self, ctx: EvalContext) -> Frequency:
        ctx = _with_arities(ctx, self.path)
        rows = _rows(ctx, self.path)
        d = ctx.domain
        uni = universe(ctx)
        if self.kind is QuantKind.ANY:
            if d.sparse:
                return fold(Operator.JOIN, rows.values(), zero(d))
            return fold(Operator.JOIN, (
                fold(Operator.JOIN, (rows[(a, b)] for b in uni), zero(d)) for a in uni
            ), zero(d))
        if d.sparse:
            nonzero = [v for v in rows.values() if is_truthy(v)]
            if len(nonzero) < len(uni) ** 2:
                return zero(d)
            return fold(Operator.MEET, nonzero, one(d))
        return fold(Operator.MEET, (
            fold(Operator.MEET, (rows[(a, b)] for b in uni), one(d)) for a in uni
        ), one(d))


def close_existentially(ctx: EvalContext, f: Formula, names: Iterable[str]) -> Formula:
    """Bind the names not already in ctx.env with existential quantifiers"""
    for name in sorted(set(names) - set(ctx.env), reverse=True):
        f = Exists(name, f)
    return f


def any_path(ctx: EvalContext, p: PathExpr) -> Frequency:
    return vsem(ctx, close_existentially(ctx, PathQuant(QuantKind.ANY, p), path_variables(p)))


def all_path(ctx: EvalContext, p: PathExpr) -> Frequency:
    return vsem(ctx, close_existentially(ctx, PathQuant(QuantKind.ALL, p), path_variables(p)))


# --- rendering ------------------------------------------------------------

def render_path(p: PathExpr, nested: bool = False) -> str:
    """Infix notation; binary forms are parenthesized only when nested"""
    if isinstance(p, (ObjType, Role, Var)):
        return p.name
    if isinstance(p, Const):
        return f"'{render_instance(p.value)}'"
    if isinstance(p, OnePath):
        return '1̂'
    if isinstance(p, ZeroPath):
        return '0̂'
    if isinstance(p, FullPath):
        return '⊤'
    if isinstance(p, Confluence):
        return '⟨' + ', '.join(render_path(part) for part in p.parts) + '⟩'
    if isinstance(p, Tail):
        return f"{render_path(p.body, True)}⌋"
    prefixes = {Reverse: '~', Head: '⌈', NotPath: '¬', AlwaysP: '□', SometimeP: '◇'}
    if type(p) in prefixes:
        return prefixes[type(p)] + render_path(p.body, True)

    if isinstance(p, Concat):
        symbol = '∘'
    elif isinstance(p, (PathBinary, HeadConn)):
        symbol = p.op.value
    elif isinstance(p, PrecedesP):
        symbol = 'precedes'
    else:
        return repr(p)
    left = render_path(p.left, not (isinstance(p, Concat) and isinstance(p.left, Concat)))
    text = f"{left} {symbol} {render_path(p.right, True)}"
    return f"({text})" if nested else text
