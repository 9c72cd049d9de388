#!/usr/bin/env python3
"""
Constraint Kit
Graphical ORM constraints compiled to rules over path expressions, the join
path derivation used by uniqueness/subset/ordering constraints, subtype
population rules and existential uniqueness for set types.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from functools import reduce
from itertools import combinations, product
from typing import ClassVar, FrozenSet, List, Optional, Tuple, Union

import networkx as nx

from errors import (
    AmbiguousJoinPath,
    ConstraintError,
    DegenerateConstraint,
    ModelFormatError,
    NoJoinPath,
    OrcError,
    TypeMismatch,
    UnknownRole,
    UnknownType,
)
from freq_domain import Frequency, FrequencyDomain, Operator, is_truthy, one, zero
from logic_core import Always, Binary, EvalContext, Formula, formula_arities, render_formula, universe, vsem
from orm_model import (
    FactInstance,
    InstanceValue,
    Model,
    PopulationSequence,
    Snapshot,
    instance_sort_key,
    instance_to_json,
    read_json,
)
from path_engine import (
    Concat,
    Confluence,
    HeadConn,
    HeadOp,
    NotPath,
    ObjType,
    OnePath,
    PathBinary,
    PathExpr,
    PathQuant,
    PrecedesP,
    QuantKind,
    Reverse,
    Role,
    ZeroPath,
    cartesian,
    children,
    concat_all,
    eval_path,
    path_variables,
)

logger = logging.getLogger(__name__)

# falsifying rows kept per rule and time
MAX_WITNESSES = 25


# --- constraint records ---------------------------------------------------

class Constraint:
    kind: ClassVar[str] = 'constraint'
    name: Optional[str] = None


@dataclass(frozen=True)
class Mandatory(Constraint):
    kind: ClassVar[str] = 'mandatory'
    object_type: str
    roles: Tuple[str, ...]
    name: Optional[str] = None


@dataclass(frozen=True)
class MandatoryTuple(Constraint):
    kind: ClassVar[str] = 'mandatory-tuple'
    object_types: Tuple[str, ...]
    role_tuples: Tuple[Tuple[str, ...], ...]
    name: Optional[str] = None


@dataclass(frozen=True)
class Unique(Constraint):
    kind: ClassVar[str] = 'unique'
    roles: Tuple[str, ...]
    name: Optional[str] = None


@dataclass(frozen=True)
class SubsetC(Constraint):
    kind: ClassVar[str] = 'subset'
    roles1: Tuple[str, ...]
    roles2: Tuple[str, ...]
    name: Optional[str] = None


@dataclass(frozen=True)
class TemporalPrecedes(Constraint):
    kind: ClassVar[str] = 'precedes'
    roles1: Tuple[str, ...]
    roles2: Tuple[str, ...]
    name: Optional[str] = None


@dataclass(frozen=True)
class SubtypeMin(Constraint):
    """Pop(x) contains every head matching the rule"""
    kind: ClassVar[str] = 'subtype-min'
    type_id: str
    rule: Union[str, PathExpr]
    name: Optional[str] = None


@dataclass(frozen=True)
class SubtypeMax(Constraint):
    """Pop(x) contains only heads matching the rule"""
    kind: ClassVar[str] = 'subtype-max'
    type_id: str
    rule: Union[str, PathExpr]
    name: Optional[str] = None


@dataclass(frozen=True)
class Exclusive(Constraint):
    kind: ClassVar[str] = 'exclusive'
    types: Tuple[str, ...]
    name: Optional[str] = None


@dataclass(frozen=True)
class TotalSpec(Constraint):
    kind: ClassVar[str] = 'total'
    subs: Tuple[str, ...]
    super_type: Optional[str] = None
    name: Optional[str] = None


@dataclass(frozen=True)
class ExtUnique(Constraint):
    kind: ClassVar[str] = 'ext-unique'
    fact_type: str
    roles: Tuple[str, ...]
    name: Optional[str] = None


# --- join paths -----------------------------------------------------------

@dataclass(frozen=True)
class JoinPathResult:
    path: PathExpr
    central_type: str
    branches: Tuple[PathExpr, ...]


def schema_graph(model: Model) -> nx.Graph:
    """Bipartite graph of types and roles; a role touches its player and its fact type"""
    graph = nx.Graph()
    for type_id in model.type_ids():
        graph.add_node(('type', type_id))
    for role in model.roles.values():
        graph.add_edge(('role', role.id), ('type', role.player))
        graph.add_edge(('role', role.id), ('type', role.fact_type))
    return graph


def _chain(model: Model, nodes) -> Tuple[Tuple[PathExpr, ...], int]:
    """Role steps along a type-role-type node path, with the number of reverse steps"""
    steps, reverse = [], 0
    for k in range(1, len(nodes), 2):
        role = model.role(nodes[k][1])
        before, after = nodes[k - 1][1], nodes[k + 1][1]
        if role.player == before and role.fact_type == after:
            steps.append(Role(role.id))
        else:
            steps.append(Reverse(Role(role.id)))
            reverse += 1
    return tuple(steps), reverse


def _branch(model: Model, graph: nx.Graph, role_id: str, central: str):
    """(steps, reverse steps, chains) from the role's fact type to the central type, or None"""
    start = ('type', model.role(role_id).fact_type)
    view = nx.restricted_view(graph, [('role', role_id)], [])
    try:
        paths = list(nx.all_shortest_paths(view, start, ('type', central)))
    except nx.NetworkXNoPath:
        return None
    chains = [_chain(model, nodes) for nodes in paths]
    fewest = min(reverse for _, reverse in chains)
    best = sorted({steps for steps, reverse in chains if reverse == fewest}, key=repr)
    return len(best[0]), fewest, best


def join_path(model: Model, roles) -> JoinPathResult:
    """Confluence of one branch per role, all ending at the cheapest central type"""
    roles = tuple(roles)
    if not roles:
        raise DegenerateConstraint("A join path needs at least one role")
    for r in roles:
        model.role(r)
    graph = schema_graph(model)

    candidates = []
    for central in model.type_ids():
        branches, total, reverse, ambiguous = [], 0, 0, False
        for r in roles:
            found = _branch(model, graph, r, central)
            if found is None:
                break
            steps, rev, chains = found
            total += steps
            reverse += rev
            ambiguous = ambiguous or len(chains) > 1
            branches.append(concat_all((Role(r),) + chains[0]))
        else:
            candidates.append(((total, reverse), central, tuple(branches), ambiguous))

    if not candidates:
        raise NoJoinPath(f"No join path connects roles {', '.join(roles)}")
    candidates.sort(key=lambda c: c[0])
    cost, central, branches, ambiguous = candidates[0]
    rivals = [c[1] for c in candidates if c[0] == cost]
    if len(rivals) > 1:
        raise AmbiguousJoinPath(f"Roles {', '.join(roles)} join equally well at {', '.join(rivals)}")
    if ambiguous:
        raise AmbiguousJoinPath(f"Roles {', '.join(roles)} reach {central} along distinct chains")
    logger.debug(f"Join path for {roles}: central type {central}, cost {cost}")
    return JoinPathResult(Confluence(branches), central, branches)


# --- existential uniqueness -----------------------------------------------

@dataclass(frozen=True)
class ExtUniqueViolation:
    time: int
    first: Tuple[Optional[InstanceValue], ...]
    second: Tuple[Optional[InstanceValue], ...]


def _ext_roles(model: Model, fact_type: str, roles) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
    """(R, complement of R) in fact-type role order"""
    if fact_type not in model.fact_types:
        raise UnknownType(f"Unknown fact type {fact_type}")
    own = model.fact_types[fact_type].role_ids
    for r in roles:
        if r not in own:
            raise UnknownRole(f"Role {r} is not a role of {fact_type}")
    chosen = tuple(r for r in own if r in set(roles))
    rest = tuple(r for r in own if r not in set(roles))
    if not chosen or not rest:
        raise DegenerateConstraint(
            f"Existential uniqueness on {fact_type} needs a proper non-empty subset of its roles")
    return chosen, rest


def _projection(fact: FactInstance, roles: Tuple[str, ...]) -> Tuple[Optional[InstanceValue], ...]:
    vector = fact.vector()
    return tuple(vector.get(r) for r in roles)


def _projection_key(values):
    return tuple((-1,) if v is None else instance_sort_key(v) for v in values)


def variety(model: Model, s: Snapshot, fact_type: str, roles, instance: FactInstance) -> FrozenSet[tuple]:
    """The R-projections of the facts that agree with the instance outside R"""
    chosen, rest = _ext_roles(model, fact_type, roles)
    anchor = _projection(instance, rest)
    return frozenset(
        _projection(j, chosen) for j in s.fact_pop.get(fact_type, ())
        if _projection(j, rest) == anchor
    )


def check_ext_unique(model: Model, s: Snapshot, fact_type: str, roles) -> List[ExtUniqueViolation]:
    """Pairs of distinct complement projections sharing one variety"""
    chosen, rest = _ext_roles(model, fact_type, roles)
    varieties = defaultdict(set)
    for fact in s.fact_pop.get(fact_type, ()):
        varieties[_projection(fact, rest)].add(_projection(fact, chosen))
    keys = sorted(varieties, key=_projection_key)
    return [
        ExtUniqueViolation(s.time, a, b)
        for a, b in combinations(keys, 2)
        if varieties[a] == varieties[b]
    ]


@dataclass(frozen=True)
class ExtUniqueAtom(Formula):
    """One when no two complement projections share a variety at the evaluation time"""
    fact_type: str
    roles: Tuple[str, ...]

    def valuate(self, ctx: EvalContext) -> Frequency:
        clashes = check_ext_unique(ctx.model, ctx.snapshot, self.fact_type, self.roles)
        return zero(ctx.domain) if clashes else one(ctx.domain)

    def free_variables(self) -> FrozenSet[str]:
        return frozenset()

    def tuple_arities(self) -> FrozenSet[int]:
        return frozenset()

    def render(self) -> str:
        return f"ExtUnique({self.fact_type}: {{{', '.join(self.roles)}}})"


# --- compilation ----------------------------------------------------------

def path_implies(p: PathExpr, q: PathExpr) -> PathExpr:
    """Plain path implication ¬P ∨ Q"""
    return PathBinary(Operator.JOIN, NotPath(p), q)


def _always_all(p: PathExpr) -> Formula:
    return Always(PathQuant(QuantKind.ALL, p))


def _leading_type(p: PathExpr) -> Optional[str]:
    if isinstance(p, ObjType):
        return p.name
    if isinstance(p, Confluence):
        return None
    kids = children(p)
    return _leading_type(kids[0]) if kids else None


def subtype_rule_path(model: Model, c: Union[SubtypeMin, SubtypeMax]) -> PathExpr:
    """The descriptor of a subtype rule, which must start at the subtype or one of its supertypes"""
    model.require_type(c.type_id)
    if isinstance(c.rule, str):
        from descriptor_frontend import descriptor_path
        rule = descriptor_path(model, c.rule)
    else:
        rule = c.rule
    start = _leading_type(rule)
    if start is None or not model.has_type(start) or not model.sub_eq(c.type_id, start):
        raise TypeMismatch(f"Rule for {c.type_id} must start with {c.type_id} or one of its supertypes")
    return rule


def _check_players(model: Model, object_type: str, roles) -> None:
    for r in roles:
        role = model.role(r)
        if not model.sub_eq(object_type, role.player):
            raise TypeMismatch(f"{object_type} cannot play {r} (played by {role.player})")


def compile_constraint(model: Model, c: Constraint) -> Formula:
    """The rule a constraint stands for"""
    if isinstance(c, Mandatory):
        if not c.roles:
            raise DegenerateConstraint("Mandatory constraint without roles")
        model.require_type(c.object_type)
        _check_players(model, c.object_type, c.roles)
        covered = reduce(lambda a, b: HeadConn(HeadOp.HOR, a, b), [Role(r) for r in c.roles])
        return _always_all(HeadConn(HeadOp.HIMPLIES, ObjType(c.object_type), covered))

    if isinstance(c, MandatoryTuple):
        if not c.object_types or not c.role_tuples:
            raise DegenerateConstraint("Mandatory tuple constraint without types or roles")
        for row in c.role_tuples:
            if len(row) != len(c.object_types):
                raise TypeMismatch(f"Role tuple {list(row)} does not match {list(c.object_types)}")
            if len({model.role(r).fact_type for r in row}) != 1:
                raise TypeMismatch(f"Roles {list(row)} belong to different fact types")
            for o, r in zip(c.object_types, row):
                model.require_type(o)
                _check_players(model, o, [r])
        covered = reduce(lambda a, b: HeadConn(HeadOp.HOR, a, b),
                         [Confluence(tuple(Role(r) for r in row)) for row in c.role_tuples])
        types = cartesian([ObjType(o) for o in c.object_types])
        return _always_all(HeadConn(HeadOp.HIMPLIES, types, covered))

    if isinstance(c, Unique):
        jp = join_path(model, c.roles).path
        return _always_all(path_implies(Concat(Reverse(jp), jp), OnePath()))

    if isinstance(c, (SubsetC, TemporalPrecedes)):
        if not c.roles1 or not c.roles2:
            raise DegenerateConstraint(f"{c.kind} constraint needs two non-empty role lists")
        if isinstance(c, SubsetC):
            if len(c.roles1) != len(c.roles2):
                raise TypeMismatch("Subset role lists differ in length")
            for r1, r2 in zip(c.roles1, c.roles2):
                p1, p2 = model.role(r1).player, model.role(r2).player
                if not model.type_related(p1, p2):
                    raise TypeMismatch(f"Players {p1} of {r1} and {p2} of {r2} are not type related")
        left = join_path(model, c.roles1).path
        right = join_path(model, c.roles2).path
        if isinstance(c, SubsetC):
            return _always_all(HeadConn(HeadOp.HIMPLIES, left, right))
        return _always_all(PrecedesP(left, right))

    if isinstance(c, SubtypeMin):
        rule = subtype_rule_path(model, c)
        return _always_all(HeadConn(HeadOp.HIMPLIES, rule, ObjType(c.type_id)))

    if isinstance(c, SubtypeMax):
        rule = subtype_rule_path(model, c)
        return _always_all(HeadConn(HeadOp.HIMPLIES, ObjType(c.type_id), rule))

    if isinstance(c, Exclusive):
        if len(c.types) < 2:
            raise DegenerateConstraint("Exclusion needs at least two types")
        for t in c.types:
            model.require_type(t)
        clauses = []
        for i, t in enumerate(c.types):
            others = [ObjType(o) for j, o in enumerate(c.types) if j != i]
            overlap = PathBinary(Operator.MEET, ObjType(t),
                                 reduce(lambda a, b: PathBinary(Operator.JOIN, a, b), others))
            clauses.append(path_implies(overlap, ZeroPath()))
        return _always_all(reduce(lambda a, b: PathBinary(Operator.MEET, a, b), clauses))

    if isinstance(c, TotalSpec):
        if not c.subs:
            raise DegenerateConstraint("Totality needs at least one subtype")
        for t in c.subs:
            model.require_type(t)
        if c.super_type is not None:
            supers = [c.super_type]
            for t in c.subs:
                if not model.sub(t, c.super_type):
                    raise TypeMismatch(f"{t} is not a subtype of {c.super_type}")
        else:
            supers = sorted(model.common_super(c.subs))
            if not supers:
                raise TypeMismatch(f"{', '.join(c.subs)} have no common supertype")
        union = reduce(lambda a, b: PathBinary(Operator.JOIN, a, b), [ObjType(t) for t in c.subs])
        rules = [_always_all(HeadConn(HeadOp.HIFF, ObjType(s), union)) for s in supers]
        return reduce(lambda a, b: Binary(Operator.MEET, a, b), rules)

    if isinstance(c, ExtUnique):
        chosen, _ = _ext_roles(model, c.fact_type, c.roles)
        return Always(ExtUniqueAtom(c.fact_type, chosen))

    raise ConstraintError(f"Unsupported constraint {c!r}")


# --- evaluation -----------------------------------------------------------

@dataclass
class RuleOutcome:
    """Verdict, per-time frequencies and falsifying rows of one rule or constraint"""
    name: str
    source: str
    verdict: bool
    frequencies: List[Tuple[int, Frequency]]
    witnesses: List[Tuple[int, object, object]] = field(default_factory=list)
    kind: Optional[str] = None

    def to_json(self) -> dict:
        data = {
            'name': self.name,
            'source': self.source,
            'verdict': 'pass' if self.verdict else 'fail',
            'frequencies': [{'time': t, 'value': v.to_json()} for t, v in self.frequencies],
            'witnesses': [{'time': t, 'head': instance_to_json(h), 'tail': instance_to_json(w)}
                          for t, h, w in self.witnesses],
        }
        if self.kind is not None:
            data['kind'] = self.kind
        return data


def _witnesses(ctx: EvalContext, formula: Formula, times: List[int],
               limit: int = MAX_WITNESSES) -> List[Tuple[int, object, object]]:
    inner = formula
    if isinstance(inner, Always):
        inner = inner.body
        times = ctx.seq.times
    found = []
    if isinstance(inner, ExtUniqueAtom):
        for t in times:
            for v in check_ext_unique(ctx.model, ctx.seq.snapshot_at(t), inner.fact_type, inner.roles):
                found.append((t, v.first, v.second))
        return found
    if not isinstance(inner, PathQuant) or inner.kind is not QuantKind.ALL or path_variables(inner.path):
        return found
    for t in times:
        at_t = ctx.at(t)
        table = eval_path(at_t, inner.path)
        kept = 0
        for a, b in product(universe(at_t), repeat=2):
            if (a, b) not in table.rows:
                found.append((t, a, b))
                kept += 1
                if kept >= limit:
                    logger.info(f"Witnesses at t={t} truncated to {limit}")
                    break
    return found


def evaluate_rule(model: Model, seq: PopulationSequence, formula: Formula, domain: FrequencyDomain,
                  name: str, source: Optional[str] = None, at: Optional[int] = None,
                  kind: Optional[str] = None, diagnostics: Optional[List[str]] = None,
                  max_witnesses: int = MAX_WITNESSES) -> RuleOutcome:
    """Evaluate a rule at every recorded time (or only at `at`); it passes when all values are truthy"""
    times = [seq.snapshot_at(at).time] if at is not None else seq.times
    ctx = EvalContext(model, seq, domain, times[0],
                      diagnostics=diagnostics if diagnostics is not None else [],
                      arities=formula_arities(formula))
    frequencies = [(t, vsem(ctx.at(t), formula)) for t in times]
    verdict = all(is_truthy(v) for _, v in frequencies)
    witnesses = [] if verdict else _witnesses(ctx, formula, times, max_witnesses)
    logger.info(f"{name}: {'pass' if verdict else 'fail'}")
    return RuleOutcome(name, source or render_formula(formula), verdict, frequencies, witnesses, kind)


@dataclass
class ConstraintReport:
    results: List[RuleOutcome]
    warnings: List[str] = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        return all(r.verdict for r in self.results)

    def to_json(self) -> dict:
        return {
            'verdict': 'pass' if self.verdict else 'fail',
            'warnings': list(self.warnings),
            'constraints': [r.to_json() for r in self.results],
        }


def constraint_name(c: Constraint, index: int) -> str:
    return c.name or f"{c.kind}-{index + 1}"


def _sensibility_warnings(model: Model, seq: PopulationSequence, c: SubtypeMin,
                          domain: FrequencyDomain, name: str) -> List[str]:
    rule = subtype_rule_path(model, c)
    warnings = []
    for sup in sorted(model.supertypes(c.type_id)):
        formula = _always_all(HeadConn(HeadOp.HIMPLIES, rule, ObjType(sup)))
        ctx = EvalContext(model, seq, domain, seq.first_time)
        if not is_truthy(vsem(ctx, formula)):
            warnings.append(f"{name}: rule admits instances outside supertype {sup}")
    return warnings


def check(model: Model, seq: PopulationSequence, constraints: List[Constraint],
          domain: FrequencyDomain, at: Optional[int] = None,
          max_witnesses: int = MAX_WITNESSES) -> ConstraintReport:
    """Compile every constraint, then evaluate each across the sequence"""
    compiled, errors = [], []
    for index, c in enumerate(constraints):
        try:
            compiled.append((constraint_name(c, index), c, compile_constraint(model, c)))
        except OrcError as e:
            errors.append((constraint_name(c, index), e))
    if errors:
        name, first = errors[0]
        first.message = f"{name}: {first.message}"
        if len(errors) > 1:
            first.message += f" (and {len(errors) - 1} more constraint errors)"
        first.args = (first.message,)
        raise first

    diagnostics: List[str] = []
    results, warnings = [], []
    for name, c, formula in compiled:
        results.append(evaluate_rule(model, seq, formula, domain, name, at=at,
                                     kind=c.kind, diagnostics=diagnostics,
                                     max_witnesses=max_witnesses))
        if isinstance(c, SubtypeMin):
            warnings.extend(_sensibility_warnings(model, seq, c, domain, name))
    for w in warnings:
        logger.warning(w)
    return ConstraintReport(results, diagnostics + warnings)


# --- loading --------------------------------------------------------------

_RECORDS = {
    'mandatory': lambda r: Mandatory(r['objectType'], tuple(r['roles']), r.get('name')),
    'mandatory-tuple': lambda r: MandatoryTuple(tuple(r['objectTypes']),
                                                tuple(tuple(row) for row in r['roleTuples']), r.get('name')),
    'unique': lambda r: Unique(tuple(r['roles']), r.get('name')),
    'subset': lambda r: SubsetC(tuple(r['roles1']), tuple(r['roles2']), r.get('name')),
    'precedes': lambda r: TemporalPrecedes(tuple(r['roles1']), tuple(r['roles2']), r.get('name')),
    'subtype-min': lambda r: SubtypeMin(r['type'], r['rule'], r.get('name')),
    'subtype-max': lambda r: SubtypeMax(r['type'], r['rule'], r.get('name')),
    'exclusive': lambda r: Exclusive(tuple(r['types']), r.get('name')),
    'total': lambda r: TotalSpec(tuple(r['subs']), r.get('super'), r.get('name')),
    'ext-unique': lambda r: ExtUnique(r['factType'], tuple(r['roles']), r.get('name')),
}


def constraints_from_json(data, file: Optional[str] = None) -> List[Constraint]:
    if not isinstance(data, list):
        raise ModelFormatError("A constraints file holds a JSON list of records", file=file)
    constraints = []
    for index, record in enumerate(data):
        try:
            constraints.append(_RECORDS[record['kind']](record))
        except KeyError as e:
            raise ModelFormatError(f"Constraint record {index + 1}: missing or unknown {e}", file=file)
        except TypeError as e:
            raise ModelFormatError(f"Constraint record {index + 1}: {e}", file=file)
    logger.info(f"Loaded {len(constraints)} constraints")
    return constraints


def load_constraints(path: str) -> List[Constraint]:
    return constraints_from_json(read_json(path), file=path)
