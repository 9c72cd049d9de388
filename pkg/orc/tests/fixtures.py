"""
Shared fixtures: the sample schemas, small hand-built models and the seeded
random generators used by the oracle suites
"""

import os
import random
import sys

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from freq_domain import NAT, Operator
from logic_core import EvalContext
from orm_model import Model, load_model, load_population
from path_engine import (
    Concat, Confluence, Const, FullPath, Head, HeadConn, HeadOp, NotPath, ObjType, OnePath,
    PathBinary, Reverse, Role, Tail, Var, ZeroPath,
)

SAMPLES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'samples')


def sample(name):
    return os.path.join(SAMPLES, name)


def load_sample(prefix):
    model = load_model(sample(f"{prefix}_model.json"))
    return model, load_population(model, sample(f"{prefix}_population.json"))


def join_figure():
    """F(p:A, q:B) and G(r:B, s:L) with the populations of the composition tables"""
    return load_sample('join')


def constraints_figure():
    """F(p:A, q:B) objectified and playing r in G(r:F, s:C)"""
    return load_sample('constraints')


def convoys():
    return load_sample('convoy')


def doctor_visits():
    return load_sample('visit')


def context(model, seq, domain=NAT, t=None):
    return EvalContext(model, seq, domain, seq.first_time if t is None else t)


def build(model_data, snapshots):
    model = Model.from_json(model_data)
    return model, model.population_from_json({'snapshots': snapshots})


ANIMALS = {
    'objectTypes': [
        {'id': 'Animal', 'name': 'Animal'},
        {'id': 'FleshEater', 'name': 'Flesh Eater', 'supertypes': ['Animal']},
        {'id': 'PlantEater', 'name': 'Plant Eater', 'supertypes': ['Animal']},
        {'id': 'Food', 'name': 'Food'},
    ],
    'factTypes': [
        {'id': 'Eats', 'roles': [
            {'id': 'eater', 'player': 'Animal', 'roleName': 'eating'},
            {'id': 'eaten', 'player': 'Food', 'roleName': 'eaten by'},
        ]},
    ],
    'pairNames': [{'from': 'eater', 'to': 'eaten', 'name': 'feeding on'}],
}


def animals(flesh=('rex',), plants=('bronto',), plain=(), meals=None):
    """One snapshot of the animal kingdom; every animal eats something by default"""
    everyone = list(flesh) + list(plants) + list(plain)
    if meals is None:
        meals = [(a, 'meat' if a in flesh else 'fern') for a in everyone]
    foods = sorted({f for _, f in meals})
    snapshot = {
        'time': 0,
        'objects': {'Animal': list(plain), 'FleshEater': list(flesh),
                    'PlantEater': list(plants), 'Food': foods},
        'facts': {'Eats': [{'bindings': {'eater': a, 'eaten': f}} for a, f in meals]},
    }
    return build(ANIMALS, [snapshot])


# --- seeded violation fixtures ---------------------------------------------

PAIR_MODEL = {
    'objectTypes': [{'id': 'P', 'name': 'Person'}, {'id': 'D', 'name': 'Dog'}],
    'factTypes': [{'id': 'Owns', 'roles': [
        {'id': 'owner', 'player': 'P'},
        {'id': 'pet', 'player': 'D'},
    ]}],
}


def orphan_player():
    """'zed' owns a dog without being a person"""
    return build(PAIR_MODEL, [{
        'time': 0,
        'objects': {'P': ['ann'], 'D': ['rex', 'fido']},
        'facts': {'Owns': [{'bindings': {'owner': 'ann', 'pet': 'rex'}},
                           {'bindings': {'owner': 'zed', 'pet': 'fido'}}]},
    }])


def overlapping_populations():
    """'kim' is both a person and a dog"""
    return build(PAIR_MODEL, [{
        'time': 0,
        'objects': {'P': ['ann', 'kim'], 'D': ['rex', 'kim']},
        'facts': {'Owns': [{'bindings': {'owner': 'ann', 'pet': 'rex'}},
                           {'bindings': {'owner': 'kim', 'pet': 'kim'}}]},
    }])


def unbound_role():
    """A fact of Owns that names its owner only"""
    return build(PAIR_MODEL, [{
        'time': 0,
        'objects': {'P': ['ann'], 'D': ['rex']},
        'facts': {'Owns': [{'bindings': {'owner': 'ann', 'pet': 'rex'}},
                           {'value': 'o2', 'bindings': {'owner': 'ann'}}]},
    }])


# --- random generators -----------------------------------------------------

RANDOM_MODEL = {
    'objectTypes': [
        {'id': 'X', 'name': 'X'},
        {'id': 'Y', 'name': 'Y'},
        {'id': 'Xs', 'name': 'Xs', 'supertypes': ['X']},
    ],
    'factTypes': [
        {'id': 'R', 'roles': [{'id': 'a', 'player': 'X'}, {'id': 'b', 'player': 'Y'}]},
        {'id': 'S', 'roles': [{'id': 'c', 'player': 'Y'}, {'id': 'd', 'player': 'Y'}]},
    ],
}


def random_snapshot(rng, time, size=3):
    """A random (not necessarily axiom-valid) snapshot over the fixed random schema"""
    xs = [f"x{i}" for i in range(rng.randint(1, size))]
    ys = [f"y{i}" for i in range(rng.randint(1, size))]
    subs = [x for x in xs if rng.random() < 0.4]
    r_facts = {(rng.choice(xs), rng.choice(ys)) for _ in range(rng.randint(0, 3))}
    s_facts = {(rng.choice(ys), rng.choice(ys)) for _ in range(rng.randint(0, 3))}
    return {
        'time': time,
        'objects': {'X': [x for x in xs if x not in subs], 'Xs': subs, 'Y': ys},
        'facts': {
            'R': [{'bindings': {'a': x, 'b': y}} for x, y in sorted(r_facts)],
            'S': [{'bindings': {'c': u, 'd': v}} for u, v in sorted(s_facts)],
        },
    }


def random_population(seed, times=1, size=3):
    rng = random.Random(seed)
    return build(RANDOM_MODEL, [random_snapshot(rng, t, size) for t in range(times)])


_LEAVES = [
    lambda rng: ObjType(rng.choice(['X', 'Y', 'Xs', 'R', 'S'])),
    lambda rng: Role(rng.choice('abcd')),
    lambda rng: Reverse(Role(rng.choice('abcd'))),
    lambda rng: OnePath(),
    lambda rng: ZeroPath(),
    lambda rng: Const(rng.choice(['x0', 'y0', 'y1'])),
    lambda rng: Var('w'),
]

_OPERATORS = [Operator.JOIN, Operator.MEET, Operator.ADD, Operator.TIMES, Operator.MINUS]


def random_leaf(rng):
    return rng.choice(_LEAVES)(rng)


def random_path(rng, depth=3, confluence=False):
    """A random path expression of bounded depth over the random schema; the ω-variable is w.
    Binary confluences appear only with confluence=True."""
    if depth <= 0 or rng.random() < 0.25:
        return random_leaf(rng)
    sub = lambda: random_path(rng, depth - 1, confluence)
    shape = rng.randrange(10 if confluence else 9)
    if shape == 0:
        return Concat(sub(), sub())
    if shape == 1:
        return Reverse(sub())
    if shape == 2:
        return Head(sub())
    if shape == 3:
        return Tail(sub())
    if shape == 4:
        return PathBinary(rng.choice(_OPERATORS), sub(), sub())
    if shape == 5:
        return NotPath(sub())
    if shape == 6:
        return HeadConn(rng.choice(list(HeadOp)), sub(), sub())
    if shape == 7:
        return Concat(sub(), FullPath())
    if shape == 9:
        return Confluence((sub(), sub()))
    return Concat(sub(), sub())
