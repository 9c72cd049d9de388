#!/usr/bin/env python3
"""
Frequency Domains
The computational layer of the rule engine: a pluggable quantity algebra with
five binary operations, two constants and the Count aggregation.

Four carriers are supported:
    bool      {0, 1}             or=max  and=min  add=max  times=min  minus=max(a-b,0)
    nat       non-negative ints  or=max  and=min  add=a+b  times=a*b  minus=max(a-b,0)
    int       integers           as nat, but minus=a-b
    dist-*    finite maps from a base carrier to probabilities, combined as
              (a op b)(n) = 1 - prod over i op j = n of (1 - a(i) * b(j))
"""

from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Mapping, Optional, Tuple, Union

import numpy as np

from errors import DomainMismatch, FrequencyError

PROBABILITY_TOLERANCE = 1e-12


class DomainKind(Enum):
    BOOL = 'bool'
    NAT = 'nat'
    INT = 'int'
    DIST = 'dist'


BASE_KINDS = (DomainKind.BOOL, DomainKind.NAT, DomainKind.INT)


class Operator(Enum):
    """The five operations of the algebra"""
    JOIN = '∨'
    MEET = '∧'
    ADD = '⊕'
    TIMES = '⊗'
    MINUS = '⊖'


@dataclass(frozen=True)
class FrequencyDomain:
    kind: DomainKind
    base: Optional[DomainKind] = None

    def __post_init__(self):
        if self.kind is DomainKind.DIST:
            if self.base not in BASE_KINDS:
                raise FrequencyError(f"Dist may only wrap bool, nat or int, not {self.base}")
        elif self.base is not None:
            raise FrequencyError(f"Only dist domains take a base domain ({self.kind.value})")

    @classmethod
    def parse(cls, name: str) -> "FrequencyDomain":
        """Parse a selector such as 'nat' or 'dist-nat'"""
        text = name.strip().lower()
        if text.startswith('dist-'):
            base = text[len('dist-'):]
            try:
                return cls(DomainKind.DIST, DomainKind(base))
            except ValueError:
                raise FrequencyError(f"Unknown base domain '{base}'")
        try:
            kind = DomainKind(text)
        except ValueError:
            raise FrequencyError(f"Unknown frequency domain '{name}'")
        if kind is DomainKind.DIST:
            raise FrequencyError("A dist domain needs a base, e.g. 'dist-nat'")
        return cls(kind)

    @property
    def name(self) -> str:
        if self.kind is DomainKind.DIST:
            return f"dist-{self.base.value}"
        return self.kind.value

    @property
    def is_dist(self) -> bool:
        return self.kind is DomainKind.DIST

    @property
    def sparse(self) -> bool:
        """Zero absorbs meet/times and is neutral for join/add"""
        return self.kind in (DomainKind.BOOL, DomainKind.NAT)

    def __str__(self):
        return self.name


BOOL = FrequencyDomain(DomainKind.BOOL)
NAT = FrequencyDomain(DomainKind.NAT)
INT = FrequencyDomain(DomainKind.INT)
DIST_NAT = FrequencyDomain(DomainKind.DIST, DomainKind.NAT)

DistValue = Tuple[Tuple[int, float], ...]


@dataclass(frozen=True)
class Frequency:
    """A value in the carrier of its domain (dist values are sorted (key, p) pairs)"""
    domain: FrequencyDomain
    value: Union[int, DistValue]

    def __post_init__(self):
        kind = self.domain.kind
        if kind is DomainKind.DIST:
            for key, p in self.value:
                _check_base_value(self.domain.base, key)
                if p < -PROBABILITY_TOLERANCE or p > 1 + PROBABILITY_TOLERANCE:
                    raise FrequencyError(f"Probability {p} outside [0,1]")
        else:
            _check_base_value(kind, self.value)

    def probability(self, key: int) -> float:
        return dict(self.value).get(key, 0.0)

    def as_dict(self) -> Dict[int, float]:
        return dict(self.value)

    def to_json(self):
        if self.domain.is_dist:
            return {str(k): p for k, p in self.value}
        return self.value

    def __str__(self):
        if self.domain.is_dist:
            inner = ', '.join(f"{k}: {format(p, '.12g')}" for k, p in self.value)
            return '{' + inner + '}'
        return str(self.value)


def _check_base_value(kind: DomainKind, value) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise FrequencyError(f"Frequency value {value!r} is not an integer")
    if kind is DomainKind.BOOL and value not in (0, 1):
        raise FrequencyError(f"Boolean frequency must be 0 or 1, got {value}")
    if kind is DomainKind.NAT and value < 0:
        raise FrequencyError(f"Natural frequency must be non-negative, got {value}")


def frequency(domain: FrequencyDomain, value) -> Frequency:
    """Build a frequency; dist values are given as a mapping key -> probability"""
    if domain.is_dist:
        if not isinstance(value, Mapping):
            raise FrequencyError("Dist frequencies are built from a mapping")
        return _distribution(domain, value.items())
    return Frequency(domain, int(value))


def _distribution(domain: FrequencyDomain, items: Iterable[Tuple[int, float]]) -> Frequency:
    # probability-0 keys are dropped
    cleaned = sorted((int(k), float(p)) for k, p in items if p != 0.0)
    return Frequency(domain, tuple(cleaned))


def one(d: FrequencyDomain) -> Frequency:
    if d.is_dist:
        return Frequency(d, ((1, 1.0),))
    return Frequency(d, 1)


def zero(d: FrequencyDomain) -> Frequency:
    if d.is_dist:
        return Frequency(d, ((0, 1.0),))
    return Frequency(d, 0)


def _base_op(kind: DomainKind, op: Operator, a: int, b: int) -> int:
    if op is Operator.JOIN:
        return max(a, b)
    if op is Operator.MEET:
        return min(a, b)
    if op is Operator.ADD:
        return max(a, b) if kind is DomainKind.BOOL else a + b
    if op is Operator.TIMES:
        return min(a, b) if kind is DomainKind.BOOL else a * b
    if op is Operator.MINUS:
        return a - b if kind is DomainKind.INT else max(a - b, 0)
    raise FrequencyError(f"Unknown operator {op}")


def apply(op: Operator, a: Frequency, b: Frequency) -> Frequency:
    """Combine two frequencies of the same domain"""
    if a.domain != b.domain:
        raise DomainMismatch(f"Cannot combine {a.domain} with {b.domain} using {op.value}")
    d = a.domain
    if not d.is_dist:
        return Frequency(d, _base_op(d.kind, op, a.value, b.value))

    if len(a.value) == 1 and len(b.value) == 1:
        (i, p), (j, q) = a.value[0], b.value[0]
        return _distribution(d, [(_base_op(d.base, op, i, j), 1.0 - (1.0 - p * q))])

    factors = defaultdict(list)
    for i, p in a.value:
        for j, q in b.value:
            factors[_base_op(d.base, op, i, j)].append(1.0 - p * q)
    return _distribution(d, ((n, 1.0 - float(np.prod(fs))) for n, fs in factors.items()))


def join(a: Frequency, b: Frequency) -> Frequency:
    return apply(Operator.JOIN, a, b)


def meet(a: Frequency, b: Frequency) -> Frequency:
    return apply(Operator.MEET, a, b)


def add(a: Frequency, b: Frequency) -> Frequency:
    return apply(Operator.ADD, a, b)


def times(a: Frequency, b: Frequency) -> Frequency:
    return apply(Operator.TIMES, a, b)


def minus(a: Frequency, b: Frequency) -> Frequency:
    return apply(Operator.MINUS, a, b)


def count(items: Iterable, d: FrequencyDomain) -> Frequency:
    """Count{X}: the add-fold of one over the items, starting from zero"""
    total = zero(d)
    unit = one(d)
    for _ in items:
        total = add(total, unit)
    return total


def is_truthy(a: Frequency) -> bool:
    """Zero is false, anything else is true"""
    return a != zero(a.domain)


def approx_equal(a: Frequency, b: Frequency, tolerance: float = PROBABILITY_TOLERANCE) -> bool:
    """Equality with an absolute tolerance on dist probabilities"""
    if a.domain != b.domain:
        return False
    if not a.domain.is_dist:
        return a.value == b.value
    left, right = a.as_dict(), b.as_dict()
    return all(abs(left.get(k, 0.0) - right.get(k, 0.0)) <= tolerance for k in set(left) | set(right))
