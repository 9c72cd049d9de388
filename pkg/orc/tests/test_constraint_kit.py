#!/usr/bin/env python3
"""
Tests for graphical constraints: join path derivation, compilation to rules,
existential uniqueness and brute-force oracles over random populations
"""

import os
import random
import sys
import time
import unittest
from collections import Counter, defaultdict

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from constraint_kit import (
    Exclusive, ExtUnique, Mandatory, MandatoryTuple, SubsetC, SubtypeMax, SubtypeMin, TemporalPrecedes,
    TotalSpec, Unique, check, check_ext_unique, compile_constraint, constraints_from_json, join_path,
    load_constraints, variety,
)
from errors import (
    AmbiguousJoinPath, DegenerateConstraint, ModelFormatError, NoJoinPath, TypeMismatch, UnknownType,
)
from freq_domain import BOOL, DIST_NAT, INT, NAT
from logic_core import render_formula
from orm_model import Model
from path_engine import Concat, Confluence, ObjType, Reverse, Role
from tests.fixtures import (
    PAIR_MODEL, RANDOM_MODEL, animals, build, constraints_figure, convoys, doctor_visits, join_figure,
    random_population, sample,
)

TWIN_FACTS = {
    'objectTypes': [{'id': 'A', 'name': 'Person'}, {'id': 'B', 'name': 'Club'}],
    'factTypes': [
        {'id': 'F', 'roles': [{'id': 'p', 'player': 'A'}, {'id': 'q', 'player': 'B'}]},
        {'id': 'G', 'roles': [{'id': 'r', 'player': 'A'}, {'id': 's', 'player': 'B'}]},
    ],
}

STUDENTS = {
    'objectTypes': [
        {'id': 'Person', 'name': 'Person'},
        {'id': 'Student', 'name': 'Student', 'supertypes': ['Person']},
        {'id': 'Worker', 'name': 'Worker', 'supertypes': ['Person']},
        {'id': 'WorkingStudent', 'name': 'Working Student', 'supertypes': ['Student', 'Worker']},
    ],
    'factTypes': [{'id': 'Enrolled', 'roles': [{'id': 'e', 'player': 'Student'}]}],
}


def verdicts(model, seq, constraints, domain=BOOL):
    return [r.verdict for r in check(model, seq, constraints, domain).results]


class TestJoinPath(unittest.TestCase):

    def setUp(self):
        self.model, _ = constraints_figure()

    def test_roles_of_one_fact_type(self):
        result = join_path(self.model, ['r', 's'])
        self.assertEqual(result.central_type, 'G')
        self.assertEqual(result.path, Confluence((Role('r'), Role('s'))))

    def test_roles_across_an_objectified_fact(self):
        result = join_path(self.model, ['q', 's'])
        self.assertEqual(result.central_type, 'G')
        self.assertEqual(result.path, Confluence((Concat(Role('q'), Role('r')), Role('s'))))

    def test_no_roles(self):
        with self.assertRaises(DegenerateConstraint):
            join_path(self.model, [])

    def test_disconnected_roles(self):
        model = Model.from_json({
            'objectTypes': [{'id': 'A', 'name': 'Apple'}, {'id': 'B', 'name': 'Berry'}],
            'factTypes': [{'id': 'F', 'roles': [{'id': 'p', 'player': 'A'}]},
                          {'id': 'G', 'roles': [{'id': 'q', 'player': 'B'}]}],
        })
        with self.assertRaises(NoJoinPath):
            join_path(model, ['p', 'q'])

    def test_tied_central_types(self):
        model = Model.from_json(RANDOM_MODEL)
        with self.assertRaises(AmbiguousJoinPath):
            join_path(model, ['a', 'c'])


class TestCompilation(unittest.TestCase):

    def test_subset_rendering(self):
        model = Model.from_json(TWIN_FACTS)
        rule = compile_constraint(model, SubsetC(('r', 's'), ('p', 'q')))
        self.assertEqual(render_formula(rule), '□ ALL(⟨r, s⟩ himplies ⟨p, q⟩)')

    def test_mandatory_rendering(self):
        model, _ = join_figure()
        rule = compile_constraint(model, Mandatory('A', ('p',)))
        self.assertEqual(render_formula(rule), '□ ALL(A himplies p)')

    def test_construction_errors(self):
        model = Model.from_json(RANDOM_MODEL)
        bad = [
            (Mandatory('Y', ('a',)), TypeMismatch),
            (Mandatory('X', ()), DegenerateConstraint),
            (Mandatory('Q', ('a',)), UnknownType),
            (Exclusive(('X',)), DegenerateConstraint),
            (ExtUnique('R', ('a', 'b')), DegenerateConstraint),
            (ExtUnique('R', ()), DegenerateConstraint),
            (SubsetC(('a',), ('c',)), TypeMismatch),
            (SubsetC(('a',), ('a', 'b')), TypeMismatch),
            (TemporalPrecedes((), ('b',)), DegenerateConstraint),
            (SubtypeMin('Xs', ObjType('Y')), TypeMismatch),
            (TotalSpec(('X', 'Y')), TypeMismatch),
            (TotalSpec(('Y',), 'X'), TypeMismatch),
            (MandatoryTuple(('X', 'Y'), (('a',),)), TypeMismatch),
            (MandatoryTuple(('Y', 'Y'), (('b', 'c'),)), TypeMismatch),
        ]
        for constraint, error in bad:
            with self.assertRaises(error, msg=repr(constraint)):
                compile_constraint(model, constraint)

    def test_check_reports_every_broken_constraint(self):
        model, seq = random_population(0)
        with self.assertRaises(DegenerateConstraint) as ctx:
            check(model, seq, [Unique(()), Mandatory('X', ('a',)), Exclusive(('X',), name='solo')], NAT)
        self.assertTrue(ctx.exception.message.startswith('unique-1: '))
        self.assertIn('(and 1 more constraint errors)', ctx.exception.message)


class TestConstraintsOnSamples(unittest.TestCase):

    def test_unique_start_per_project_date(self):
        model, seq = constraints_figure()
        report = check(model, seq, load_constraints(sample('constraints.json')), NAT)
        by_name = {r.name: r for r in report.results}
        self.assertTrue(by_name['one-start-per-assignment'].verdict)
        self.assertTrue(by_name['assignment-started'].verdict)
        self.assertTrue(by_name['employee-assigned'].verdict)

        failing = by_name['one-start-per-project-date']
        self.assertFalse(failing.verdict)
        self.assertFalse(report.verdict)
        first, second = (('ann', 'apollo'), 'd1'), (('bob', 'apollo'), 'd1')
        self.assertEqual(set(failing.witnesses), {(1, first, second), (1, second, first)})
        data = report.to_json()
        self.assertEqual(data['verdict'], 'fail')
        self.assertEqual(data['constraints'][1]['kind'], 'unique')

    def test_dense_domains(self):
        model, seq = constraints_figure()
        constraints = load_constraints(sample('constraints.json'))
        first, second = (('ann', 'apollo'), 'd1'), (('bob', 'apollo'), 'd1')
        for domain in (INT, DIST_NAT):
            started = time.monotonic()
            report = check(model, seq, constraints, domain)
            self.assertLess(time.monotonic() - started, 30, domain.name)
            self.assertEqual([r.verdict for r in report.results], [True, False, True, True], domain.name)
            self.assertEqual(set(report.results[1].witnesses), {(1, first, second), (1, second, first)})

    def test_only_at_one_time(self):
        model, seq = constraints_figure()
        report = check(model, seq, [Unique(('q', 's'))], NAT, at=0)
        self.assertEqual([t for t, _ in report.results[0].frequencies], [0])
        self.assertEqual(report.results[0].name, 'unique-1')

    def test_convoys_identified_by_their_ships(self):
        model, seq = convoys()
        report = check(model, seq, load_constraints(sample('convoy_constraints.json')), NAT)
        ext, mandatory = report.results
        self.assertFalse(ext.verdict)
        self.assertEqual(ext.witnesses, [(1, ('c1',), ('c2',))])
        self.assertTrue(mandatory.verdict)

    def test_variety(self):
        model, seq = convoys()
        s = seq.snapshot_at(1)
        fact = next(f for f in s.fact_pop['Membership'] if f.vector()['group'] == 'c2')
        self.assertEqual(variety(model, s, 'Membership', ['member'], fact), frozenset({('s1',), ('s2',)}))
        self.assertEqual(check_ext_unique(model, seq.snapshot_at(0), 'Membership', ['member']), [])

    def test_visit_stages_in_order(self):
        model, seq = doctor_visits()
        report = check(model, seq, load_constraints(sample('visit_constraints.json')), BOOL)
        self.assertTrue(report.verdict, report.to_json())

    def test_exclusive_animals(self):
        model, seq = animals(flesh=('rex',), plants=('bronto',))
        self.assertEqual(verdicts(model, seq, [Exclusive(('FleshEater', 'PlantEater'))]), [True])
        model, seq = animals(flesh=('rex',), plants=('rex',), meals=[('rex', 'meat')])
        self.assertEqual(verdicts(model, seq, [Exclusive(('FleshEater', 'PlantEater'))]), [False])

    def test_total_specialization(self):
        total = TotalSpec(('FleshEater', 'PlantEater'))
        model, seq = animals()
        self.assertEqual(verdicts(model, seq, [total]), [True])
        model, seq = animals(plain=('dodo',))
        self.assertEqual(verdicts(model, seq, [total, TotalSpec(('FleshEater', 'PlantEater'), 'Animal')]),
                         [False, False])

    def test_mandatory_tuple(self):
        model, seq = build(PAIR_MODEL, [{
            'time': 0, 'objects': {'P': ['ann'], 'D': ['rex']},
            'facts': {'Owns': [{'bindings': {'owner': 'ann', 'pet': 'rex'}}]},
        }])
        owned = MandatoryTuple(('P', 'D'), (('owner', 'pet'),))
        self.assertEqual(verdicts(model, seq, [owned]), [True])
        model, seq = build(PAIR_MODEL, [{
            'time': 0, 'objects': {'P': ['ann'], 'D': ['rex', 'fido']},
            'facts': {'Owns': [{'bindings': {'owner': 'ann', 'pet': 'rex'}}]},
        }])
        self.assertEqual(verdicts(model, seq, [owned]), [False])

    def test_subtype_rules_and_sensibility(self):
        model, seq = build(STUDENTS, [{
            'time': 0,
            'objects': {'Student': ['sam'], 'WorkingStudent': ['wes']},
            'facts': {'Enrolled': [{'bindings': {'e': 'sam'}}, {'bindings': {'e': 'wes'}}]},
        }])
        enrolled = Concat(ObjType('Student'), Role('e'))
        report = check(model, seq, [SubtypeMin('WorkingStudent', enrolled),
                                    SubtypeMax('WorkingStudent', enrolled)], BOOL)
        self.assertEqual([r.verdict for r in report.results], [False, True])
        self.assertTrue(any('outside supertype Worker' in w for w in report.warnings), report.warnings)

    def test_subtype_rule_from_descriptor(self):
        model, seq = doctor_visits()
        report = check(model, seq, [SubtypeMax('Urgent', 'Visit filled in')], BOOL)
        # v2 stays urgent after its form was filled
        self.assertEqual([r.verdict for r in report.results], [False])


class TestConstraintLoader(unittest.TestCase):

    def test_sample_file(self):
        constraints = load_constraints(sample('constraints.json'))
        self.assertEqual(constraints[0], Unique(('r', 's'), 'one-start-per-assignment'))
        self.assertEqual(constraints[2], Mandatory('F', ('r',), 'assignment-started'))

    def test_every_kind(self):
        loaded = constraints_from_json([
            {'kind': 'mandatory-tuple', 'objectTypes': ['P', 'D'], 'roleTuples': [['owner', 'pet']]},
            {'kind': 'subset', 'roles1': ['r'], 'roles2': ['p']},
            {'kind': 'precedes', 'roles1': ['filled'], 'roles2': ['examined']},
            {'kind': 'subtype-min', 'type': 'Urgent', 'rule': 'Visit filled in'},
            {'kind': 'exclusive', 'types': ['A', 'B']},
            {'kind': 'total', 'subs': ['A'], 'super': 'S'},
            {'kind': 'ext-unique', 'factType': 'M', 'roles': ['member']},
        ])
        self.assertEqual(loaded[0], MandatoryTuple(('P', 'D'), (('owner', 'pet'),)))
        self.assertEqual(loaded[5], TotalSpec(('A',), 'S'))
        self.assertEqual([c.kind for c in loaded],
                         ['mandatory-tuple', 'subset', 'precedes', 'subtype-min', 'exclusive', 'total',
                          'ext-unique'])

    def test_malformed(self):
        for data in ({'kind': 'unique'}, [{'kind': 'sometimes'}], [{'kind': 'unique'}]):
            with self.assertRaises(ModelFormatError):
                constraints_from_json(data)


# --- brute-force oracles ----------------------------------------------------

def _players(s, fact_type, role):
    return [f.vector()[role] for f in s.fact_pop.get(fact_type, ())]


def _mandatory_holds(model, seq, c):
    role_facts = {'a': 'R', 'b': 'R', 'c': 'S', 'd': 'S'}
    for s in seq.snapshots:
        playing = set()
        for r in c.roles:
            playing.update(_players(s, role_facts[r], r))
        if not model.pop(s, c.object_type) <= playing:
            return False
    return True


def _unique_holds(model, seq, c):
    fact_type = 'R' if c.roles[0] in 'ab' else 'S'
    return all(max(Counter(_players(s, fact_type, c.roles[0])).values(), default=0) <= 1
               for s in seq.snapshots)


def _subset_holds(model, seq, c):
    (r1,), (r2,) = c.roles1, c.roles2
    facts = {'b': 'R', 'c': 'S', 'd': 'S'}
    return all(set(_players(s, facts[r1], r1)) <= set(_players(s, facts[r2], r2)) for s in seq.snapshots)


def _join_rows(s, roles):
    """(player tuple, central fact) pairs of the join path over R and S, computed directly"""
    rs = [(f.value, f.vector()) for f in s.fact_pop.get('R', ())]
    ss = [(f.value, f.vector()) for f in s.fact_pop.get('S', ())]
    if roles == ('a', 'b'):
        return {((v['a'], v['b']), f) for f, v in rs}
    if roles in (('c', 'd'), ('d', 'c')):
        return {(tuple(v[r] for r in roles), f) for f, v in ss}
    if roles == ('b', 'c'):
        return {((v['b'], w['c']), f) for f, v in rs for _, w in ss if w['d'] == v['b']}
    if roles == ('d', 'b'):
        return {((w['d'], v['b']), f) for f, v in rs for _, w in ss if w['c'] == v['b']}
    raise ValueError(f"no direct join for {roles}")


def _functional_dependency_holds(model, seq, c):
    for s in seq.snapshots:
        centrals = defaultdict(set)
        for head, central in _join_rows(s, c.roles):
            centrals[head].add(central)
        if any(len(found) > 1 for found in centrals.values()):
            return False
    return True


def _join_heads_included(model, seq, c):
    return all({h for h, _ in _join_rows(s, c.roles1)} <= {h for h, _ in _join_rows(s, c.roles2)}
               for s in seq.snapshots)


def _exclusive_holds(model, seq, c):
    for s in seq.snapshots:
        for i, t in enumerate(c.types):
            others = set()
            for o in c.types[i + 1:]:
                others |= model.pop(s, o)
            if model.pop(s, t) & others:
                return False
    return True


def _total_holds(model, seq, c):
    return all(model.pop(s, 'X') == model.pop(s, 'Xs') for s in seq.snapshots)


def _ext_unique_holds(model, seq, c):
    for s in seq.snapshots:
        groups = defaultdict(set)
        for f in s.fact_pop.get('S', ()):
            v = f.vector()
            groups[v['d']].add(v['c'])
        if len({frozenset(g) for g in groups.values()}) != len(groups):
            return False
    return True


class TestConstraintOracle(unittest.TestCase):
    """Each constraint kind against a direct computation on seeded random populations"""

    def run_oracle(self, seed, choices, holds, cases=50, size=3):
        rng = random.Random(seed)
        for case in range(cases):
            model, seq = random_population(rng.randrange(10 ** 6), times=rng.randint(1, 3), size=size)
            c = rng.choice(choices)
            self.assertEqual(verdicts(model, seq, [c]), [holds(model, seq, c)], f"case {case}: {c}")

    def test_mandatory(self):
        self.run_oracle(21, [Mandatory('X', ('a',)), Mandatory('Xs', ('a',)), Mandatory('Y', ('b',)),
                             Mandatory('Y', ('b', 'c')), Mandatory('Y', ('c', 'd'))], _mandatory_holds)

    def test_unique(self):
        self.run_oracle(22, [Unique(('a',)), Unique(('b',)), Unique(('c',)), Unique(('d',))], _unique_holds)

    def test_subset(self):
        self.run_oracle(23, [SubsetC(('c',), ('b',)), SubsetC(('d',), ('c',)), SubsetC(('b',), ('d',))],
                        _subset_holds)

    def test_unique_over_join_paths(self):
        model = Model.from_json(RANDOM_MODEL)
        self.assertEqual(join_path(model, ['b', 'c']).central_type, 'R')
        self.assertEqual(join_path(model, ['d', 'b']).path,
                         Confluence((Concat(Concat(Role('d'), Reverse(Role('c'))), Role('b')), Role('b'))))
        self.run_oracle(27, [Unique(('a', 'b')), Unique(('c', 'd')), Unique(('b', 'c')), Unique(('d', 'b'))],
                        _functional_dependency_holds, cases=30, size=2)

    def test_subset_over_join_paths(self):
        self.run_oracle(28, [SubsetC(('d', 'c'), ('b', 'c')), SubsetC(('c', 'd'), ('d', 'c')),
                             SubsetC(('b', 'c'), ('d', 'c'))], _join_heads_included, cases=30, size=2)

    def test_exclusive(self):
        self.run_oracle(24, [Exclusive(('X', 'Xs')), Exclusive(('X', 'Y')), Exclusive(('Xs', 'Y', 'X'))],
                        _exclusive_holds)

    def test_total(self):
        self.run_oracle(25, [TotalSpec(('Xs',)), TotalSpec(('Xs',), 'X')], _total_holds)

    def test_ext_unique(self):
        self.run_oracle(26, [ExtUnique('S', ('c',))], _ext_unique_holds)


if __name__ == '__main__':
    unittest.main()
