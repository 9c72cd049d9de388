#!/usr/bin/env python3
"""
ORM Model and Populations
Object types, fact types with roles, subtyping, name tables and the finite
time-ordered sequence of population snapshots, plus the population axioms.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple, Union

import networkx as nx

from errors import (
    LexiconError,
    ModelError,
    ModelFormatError,
    UnknownRole,
    UnknownTime,
    UnknownType,
)

logger = logging.getLogger(__name__)

# An instance is an atom (a label) or a tuple of instances
InstanceValue = Union[str, Tuple["InstanceValue", ...]]


def instance_from_json(raw) -> InstanceValue:
    """JSON arrays become tuple instances, scalars become atom labels"""
    if isinstance(raw, list):
        if not raw:
            raise ModelFormatError("Tuple instances need at least one component")
        return tuple(instance_from_json(item) for item in raw)
    if isinstance(raw, (str, int, float)) and not isinstance(raw, bool):
        return str(raw)
    raise ModelFormatError(f"Cannot read instance value {raw!r}")


def instance_to_json(value: InstanceValue):
    if isinstance(value, tuple):
        return [instance_to_json(item) for item in value]
    return value


def render_instance(value: InstanceValue) -> str:
    if isinstance(value, tuple):
        return '⟨' + ','.join(render_instance(item) for item in value) + '⟩'
    return value


def instance_sort_key(value: InstanceValue):
    if isinstance(value, tuple):
        return (1, tuple(instance_sort_key(item) for item in value))
    return (0, value)


def sorted_instances(values: Iterable[InstanceValue]) -> List[InstanceValue]:
    return sorted(values, key=instance_sort_key)


class TypeKind(Enum):
    ENTITY = 'entity'
    VALUE = 'value'


@dataclass(frozen=True)
class ObjectType:
    id: str
    name: str
    kind: TypeKind = TypeKind.ENTITY
    supertypes: Tuple[str, ...] = ()


@dataclass(frozen=True)
class RoleType:
    id: str
    player: str
    fact_type: str
    role_name: Optional[str] = None
    reverse_role_name: Optional[str] = None


@dataclass(frozen=True)
class FactType:
    id: str
    roles: Tuple[RoleType, ...]
    name: Optional[str] = None

    @property
    def role_ids(self) -> Tuple[str, ...]:
        return tuple(r.id for r in self.roles)


@dataclass
class NameTables:
    """ONm, RNm, RRNm and CNm: the verbalization lexicon of a model"""
    obj_names: Dict[str, str] = field(default_factory=dict)
    role_names: Dict[str, str] = field(default_factory=dict)
    reverse_role_names: Dict[str, str] = field(default_factory=dict)
    pair_names: Dict[Tuple[str, str], str] = field(default_factory=dict)

    def __post_init__(self):
        self._index = {}
        tables = (
            ('object', self.obj_names),
            ('role', self.role_names),
            ('reverse-role', self.reverse_role_names),
            ('pair', self.pair_names),
        )
        for table, entries in tables:
            for key, name in entries.items():
                if not name or not name.strip():
                    raise LexiconError(f"Empty name for {table} {key}")
                name = ' '.join(name.split())
                if name in self._index:
                    other_table, other_key = self._index[name]
                    raise LexiconError(
                        f"Name '{name}' is used for {other_table} {other_key} and {table} {key}"
                    )
                self._index[name] = (table, key)

    def lookup(self, name: str) -> Optional[Tuple[str, object]]:
        """(table, key) for a name, None when the name is not in the lexicon"""
        return self._index.get(' '.join(name.split()))

    def names(self) -> List[str]:
        return sorted(self._index)


class ViolationKind(Enum):
    FACT_FUNCTION = 'fact-function'
    TOTALITY = 'totality'
    PLAYER = 'player'
    OVERLAP = 'overlap'
    ACTIVITY = 'activity'


_KIND_ORDER = {kind: index for index, kind in enumerate(ViolationKind)}


@dataclass(frozen=True)
class AxiomViolation:
    kind: ViolationKind
    time: int
    subject: str
    witness: Tuple[InstanceValue, ...]
    message: str

    def sort_key(self):
        return (self.time, _KIND_ORDER[self.kind], self.subject,
                tuple(instance_sort_key(w) for w in self.witness))

    def to_json(self) -> dict:
        return {
            'kind': self.kind.value,
            'time': self.time,
            'subject': self.subject,
            'witness': [instance_to_json(w) for w in self.witness],
            'message': self.message,
        }


@dataclass(frozen=True)
class FactInstance:
    value: InstanceValue
    bindings: Tuple[Tuple[str, InstanceValue], ...]

    def binding(self, role_id: str) -> Optional[InstanceValue]:
        for role, player in self.bindings:
            if role == role_id:
                return player
        return None

    def vector(self) -> Dict[str, InstanceValue]:
        """The fact as a partial function from role types to instances"""
        return dict(self.bindings)

    def project(self, role_ids: Iterable[str]) -> Tuple[InstanceValue, ...]:
        """The fact restricted to the given roles, in the given order"""
        vector = self.vector()
        missing = [r for r in role_ids if r not in vector]
        if missing:
            raise UnknownRole(f"Fact {render_instance(self.value)} does not bind {', '.join(missing)}")
        return tuple(vector[r] for r in role_ids)


@dataclass(frozen=True)
class Snapshot:
    time: int
    object_pop: Dict[str, FrozenSet[InstanceValue]]
    fact_pop: Dict[str, Tuple[FactInstance, ...]]
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)


@dataclass(frozen=True)
class PopulationSequence:
    snapshots: Tuple[Snapshot, ...]

    def __post_init__(self):
        if not self.snapshots:
            raise ModelFormatError("A population needs at least one snapshot")
        times = [s.time for s in self.snapshots]
        if any(a >= b for a, b in zip(times, times[1:])):
            raise ModelFormatError(f"Snapshot times must be strictly increasing, got {times}")

    @property
    def times(self) -> List[int]:
        return [s.time for s in self.snapshots]

    @property
    def first_time(self) -> int:
        return self.snapshots[0].time

    def snapshot_at(self, t: int) -> Snapshot:
        for snapshot in self.snapshots:
            if snapshot.time == t:
                return snapshot
        raise UnknownTime(f"No snapshot recorded at time {t}")

    def next_time(self, t: int) -> Optional[int]:
        """The next recorded time after t, None at the last snapshot"""
        times = self.times
        if t not in times:
            raise UnknownTime(f"No snapshot recorded at time {t}")
        index = times.index(t)
        return times[index + 1] if index + 1 < len(times) else None


class Model:
    """An ORM schema: object types, fact types, subtyping and the name tables"""

    def __init__(self, object_types: Iterable[ObjectType], fact_types: Iterable[FactType],
                 pair_names: Optional[Dict[Tuple[str, str], str]] = None):
        self.object_types: Dict[str, ObjectType] = {}
        self.fact_types: Dict[str, FactType] = {}
        self.roles: Dict[str, RoleType] = {}

        for ot in object_types:
            if ot.id in self.object_types:
                raise ModelError(f"Object type {ot.id} declared twice")
            self.object_types[ot.id] = ot
        for ft in fact_types:
            if ft.id in self.object_types or ft.id in self.fact_types:
                raise ModelError(f"Type {ft.id} declared twice")
            if not ft.roles:
                raise ModelError(f"Fact type {ft.id} has no roles")
            self.fact_types[ft.id] = ft
            for role in ft.roles:
                if role.id in self.roles:
                    raise ModelError(f"Role {role.id} belongs to more than one fact type")
                self.roles[role.id] = role

        for role in self.roles.values():
            if not self.has_type(role.player):
                raise UnknownType(f"Role {role.id} is played by undeclared type {role.player}")

        # edge sub -> super
        self._hierarchy = nx.DiGraph()
        self._hierarchy.add_nodes_from(self.type_ids())
        for ot in self.object_types.values():
            for sup in ot.supertypes:
                if sup not in self.object_types:
                    raise UnknownType(f"Supertype {sup} of {ot.id} is not an object type")
                self._hierarchy.add_edge(ot.id, sup)
        if not nx.is_directed_acyclic_graph(self._hierarchy):
            cycle = nx.find_cycle(self._hierarchy)
            raise ModelError(f"Subtyping is cyclic: {' ⊏ '.join(edge[0] for edge in cycle)}")

        obj_names = {ot.id: ot.name for ot in self.object_types.values()}
        obj_names.update({ft.id: ft.name for ft in self.fact_types.values() if ft.name})
        self.name_tables = NameTables(
            obj_names=obj_names,
            role_names={r.id: r.role_name for r in self.roles.values() if r.role_name},
            reverse_role_names={r.id: r.reverse_role_name for r in self.roles.values()
                                if r.reverse_role_name},
            pair_names=dict(pair_names or {}),
        )
        for (p, q) in self.name_tables.pair_names:
            self.role(p)
            self.role(q)

    # --- schema queries -------------------------------------------------

    def type_ids(self) -> List[str]:
        return sorted(list(self.object_types) + list(self.fact_types))

    def has_type(self, type_id: str) -> bool:
        return type_id in self.object_types or type_id in self.fact_types

    def require_type(self, type_id: str) -> None:
        if not self.has_type(type_id):
            raise UnknownType(f"Unknown type {type_id}")

    def is_fact_type(self, type_id: str) -> bool:
        return type_id in self.fact_types

    def role(self, role_id: str) -> RoleType:
        try:
            return self.roles[role_id]
        except KeyError:
            raise UnknownRole(f"Unknown role {role_id}")

    def sub(self, x: str, y: str) -> bool:
        """x is a proper subtype of y"""
        self.require_type(x)
        self.require_type(y)
        return x != y and nx.has_path(self._hierarchy, x, y)

    def sub_eq(self, x: str, y: str) -> bool:
        return x == y or self.sub(x, y)

    def subtypes(self, x: str) -> Set[str]:
        self.require_type(x)
        return set(nx.ancestors(self._hierarchy, x))

    def supertypes(self, x: str) -> Set[str]:
        self.require_type(x)
        return set(nx.descendants(self._hierarchy, x))

    def family(self, x: str) -> Set[str]:
        return self.subtypes(x) | {x}

    def type_related(self, x: str, y: str) -> bool:
        return bool(self.family(x) & self.family(y))

    def common_super(self, types: Iterable[str]) -> Set[str]:
        """All types that every given type is a proper subtype of"""
        types = list(types)
        if not types:
            return set()
        result = self.supertypes(types[0])
        for t in types[1:]:
            result &= self.supertypes(t)
        return result

    def plays(self, p: str) -> Set[str]:
        """Roles whose player is p or a supertype of p"""
        self.require_type(p)
        return {r.id for r in self.roles.values() if self.sub_eq(p, r.player)}

    # --- population queries ---------------------------------------------

    def pop(self, s: Snapshot, type_id: str) -> FrozenSet[InstanceValue]:
        key = ('pop', type_id)
        if key in s._cache:
            return s._cache[key]
        if type_id in self.fact_types:
            result = frozenset(f.value for f in s.fact_pop.get(type_id, ()))
        elif type_id in self.object_types:
            members = set(s.object_pop.get(type_id, ()))
            for sub in self.subtypes(type_id):
                members |= s.object_pop.get(sub, frozenset())
            result = frozenset(members)
        else:
            raise UnknownType(f"Unknown type {type_id}")
        s._cache[key] = result
        return result

    def role_extension(self, s: Snapshot, role_id: str) -> FrozenSet[Tuple[InstanceValue, InstanceValue]]:
        """(player, fact) pairs of a role at one snapshot"""
        key = ('role', role_id)
        if key in s._cache:
            return s._cache[key]
        role = self.role(role_id)
        pairs = set()
        for fact in s.fact_pop.get(role.fact_type, ()):
            player = fact.binding(role_id)
            if player is not None:
                pairs.add((player, fact.value))
        result = frozenset(pairs)
        s._cache[key] = result
        return result

    def types_of(self, s: Snapshot, instance: InstanceValue) -> Set[str]:
        return {t for t in self.type_ids() if instance in self.pop(s, t)}

    def pop_ever(self, seq: PopulationSequence, type_id: str) -> FrozenSet[InstanceValue]:
        """Population of a type over all recorded times"""
        result = set()
        for s in seq.snapshots:
            result |= self.pop(s, type_id)
        return frozenset(result)

    # --- axioms -----------------------------------------------------------

    def validate(self, seq: PopulationSequence) -> List[AxiomViolation]:
        """Check the population axioms at every snapshot; all violations are reported"""
        violations = []
        for s in seq.snapshots:
            violations.extend(self._validate_snapshot(s))
        violations.sort(key=AxiomViolation.sort_key)
        logger.info(f"Validated {len(seq.snapshots)} snapshots: {len(violations)} violations")
        return violations

    def _validate_snapshot(self, s: Snapshot) -> List[AxiomViolation]:
        found = []
        t = s.time

        for ft in self.fact_types.values():
            seen = set()
            for fact in s.fact_pop.get(ft.id, ()):
                if fact.value in seen:
                    found.append(AxiomViolation(
                        ViolationKind.FACT_FUNCTION, t, ft.id, (fact.value,),
                        f"Fact {render_instance(fact.value)} of {ft.id} occurs more than once"))
                seen.add(fact.value)
                unbound = [r for r in ft.role_ids if fact.binding(r) is None]
                if unbound:
                    found.append(AxiomViolation(
                        ViolationKind.TOTALITY, t, ft.id, (fact.value,),
                        f"Fact {render_instance(fact.value)} of {ft.id} leaves {', '.join(unbound)} unbound"))

        for role in self.roles.values():
            allowed = self.pop(s, role.player)
            for player, fact in self.role_extension(s, role.id):
                if player not in allowed:
                    found.append(AxiomViolation(
                        ViolationKind.PLAYER, t, role.id, (player,),
                        f"{render_instance(player)} plays {role.id} in {render_instance(fact)} "
                        f"but is not in Pop({role.player})"))

        for x, y in combinations(sorted(self.object_types), 2):
            shared = self.pop(s, x) & self.pop(s, y)
            if shared and not self.type_related(x, y):
                found.append(AxiomViolation(
                    ViolationKind.OVERLAP, t, f"{x},{y}", tuple(sorted_instances(shared)),
                    f"Populations of {x} and {y} overlap but the types are not type related"))

        for p in self.type_ids():
            roles = self.plays(p)
            if not roles:
                continue
            active = set()
            for r in roles:
                active |= {player for player, _ in self.role_extension(s, r)}
            for idle in sorted_instances(self.pop(s, p) - active):
                found.append(AxiomViolation(
                    ViolationKind.ACTIVITY, t, p, (idle,),
                    f"{render_instance(idle)} is in Pop({p}) but plays none of {', '.join(sorted(roles))}"))
        return found

    # --- loading ----------------------------------------------------------

    @classmethod
    def from_json(cls, data: dict, file: Optional[str] = None) -> "Model":
        try:
            object_types = [
                ObjectType(
                    id=str(raw['id']),
                    name=str(raw.get('name') or raw['id']),
                    kind=TypeKind(raw.get('kind', 'entity')),
                    supertypes=tuple(raw.get('supertypes', ())),
                )
                for raw in data.get('objectTypes', [])
            ]
            fact_types = []
            for raw in data.get('factTypes', []):
                fact_id = str(raw['id'])
                roles = tuple(
                    RoleType(
                        id=str(role['id']),
                        player=str(role['player']),
                        fact_type=fact_id,
                        role_name=role.get('roleName'),
                        reverse_role_name=role.get('reverseRoleName'),
                    )
                    for role in raw.get('roles', [])
                )
                fact_types.append(FactType(fact_id, roles, raw.get('name')))
            pair_names = {(str(p['from']), str(p['to'])): str(p['name'])
                          for p in data.get('pairNames', [])}
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFormatError(f"Malformed model: {e}", file=file)
        try:
            model = cls(object_types, fact_types, pair_names)
        except ModelError as e:
            raise e.located(file)
        except LexiconError as e:
            raise e.located(file)
        logger.info(f"Loaded model with {len(model.object_types)} object types "
                    f"and {len(model.fact_types)} fact types")
        return model

    def population_from_json(self, data: dict, file: Optional[str] = None) -> PopulationSequence:
        try:
            snapshots = tuple(self._snapshot_from_json(raw) for raw in data['snapshots'])
            return PopulationSequence(snapshots)
        except ModelError as e:
            raise e.located(file)
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFormatError(f"Malformed population: {e}", file=file)

    def _snapshot_from_json(self, raw: dict) -> Snapshot:
        time = raw['time']
        if isinstance(time, bool) or not isinstance(time, int):
            raise ModelFormatError(f"Snapshot time must be an integer, got {time!r}")

        object_pop = {}
        for type_id, values in raw.get('objects', {}).items():
            if type_id not in self.object_types:
                raise UnknownType(f"Population names unknown object type {type_id}")
            object_pop[type_id] = frozenset(instance_from_json(v) for v in values)

        fact_pop = {}
        for type_id, facts in raw.get('facts', {}).items():
            if type_id not in self.fact_types:
                raise UnknownType(f"Population names unknown fact type {type_id}")
            ft = self.fact_types[type_id]
            instances = []
            for fact in facts:
                bindings = {}
                for role_id, player in fact.get('bindings', {}).items():
                    if role_id not in ft.role_ids:
                        raise UnknownRole(f"Role {role_id} is not a role of {type_id}")
                    bindings[role_id] = instance_from_json(player)
                if 'value' in fact:
                    value = instance_from_json(fact['value'])
                elif all(r in bindings for r in ft.role_ids):
                    value = tuple(bindings[r] for r in ft.role_ids)
                else:
                    raise ModelFormatError(f"Fact of {type_id} with unbound roles needs an explicit value")
                ordered = tuple((r, bindings[r]) for r in ft.role_ids if r in bindings)
                instances.append(FactInstance(value, ordered))
            fact_pop[type_id] = tuple(instances)
        return Snapshot(time, object_pop, fact_pop)


def read_json(path: str) -> dict:
    """Read a JSON file, turning decode errors into located format errors"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"Invalid JSON: {e.msg}", file=path, line=e.lineno)


def load_model(path: str) -> Model:
    return Model.from_json(read_json(path), file=path)


def load_population(model: Model, path: str) -> PopulationSequence:
    return model.population_from_json(read_json(path), file=path)
