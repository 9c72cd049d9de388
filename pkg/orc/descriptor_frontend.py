#!/usr/bin/env python3
"""
Information Descriptors
Controlled natural language over a model's name tables: tokenizer,
recursive-descent parser, and compilation of descriptors to path expressions
(DSem) and of domain rules to formulas (RSem).
"""

import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Tuple

from errors import DescriptorError, LexiconError, RuleSyntaxError, UnknownPhrase, UnresolvableName
from freq_domain import Operator
from logic_core import Always, Binary, Exists, Formula, Not, Precedes, Sometime, free_variables, iff, implies
from orm_model import InstanceValue, Model, NameTables
from path_engine import (
    AlwaysP,
    Concat,
    Confluence,
    Const,
    HeadConn,
    HeadOp,
    ObjType,
    PathExpr,
    PathQuant,
    PrecedesP,
    QuantKind,
    Reverse,
    Role,
    SometimeP,
    Var,
)

logger = logging.getLogger(__name__)

KEYWORDS = (
    'THE COMBINATION OF', 'IF AND ONLY IF', 'MUST ALSO BE', 'AND ALSO', 'THEN ALSO', 'OR IS',
    'COMBINED WITH', 'BUT NOT', 'ALWAYS', 'SOMETIME', 'PRECEDES', 'IF',
    'ANY', 'SOME', 'ALL', 'NO', 'AND', 'OR', 'IMPLIES', 'IFF', 'NOT',
)
_KEYWORD_WORDS = {k: tuple(k.split()) for k in KEYWORDS}
_MAX_KEYWORD = max(len(w) for w in _KEYWORD_WORDS.values())

_PIECE = re.compile(r"'[^']*'|\(|\)|,|[^\s(),']+")
_VARIABLE = re.compile(r"^[a-z][A-Za-z0-9]*$")
_RULE_LINE = re.compile(r"^([A-Za-z_][\w-]*)\s*:\s*(.*)$")


class TokenKind(Enum):
    KEYWORD = 'keyword'
    NAME = 'name'
    VAR = 'variable'
    CONST = 'constant'
    LPAREN = '('
    RPAREN = ')'
    COMMA = ','


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    position: int
    value: object = None

    def is_keyword(self, *words: str) -> bool:
        return self.kind is TokenKind.KEYWORD and self.text in words


# --- lexicon and tokenizer ------------------------------------------------

def check_lexicon(names: NameTables) -> None:
    """Names may not coincide with a reserved phrase"""
    for name in names.names():
        if name in _KEYWORD_WORDS:
            raise LexiconError(f"Name '{name}' is a reserved phrase")


def tokenize(text: str, names: NameTables, variables: Iterable[str] = ()) -> List[Token]:
    """Longest-match segmentation: keywords first, then names, constants and variables"""
    stray = _PIECE.sub(lambda m: ' ' * len(m.group(0)), text).find("'")
    if stray >= 0:
        raise UnknownPhrase(f"Unterminated constant at {stray}", position=stray)
    variables = frozenset(variables)
    max_name = max((len(n.split()) for n in names.names()), default=1)
    tokens = []
    words = []  # (word, position) of the current run of plain words

    def flush():
        i = 0
        while i < len(words):
            i = _segment(words, i, names, variables, max_name, tokens)
        words.clear()

    for match in _PIECE.finditer(text):
        piece, start = match.group(0), match.start()
        if piece in ('(', ')', ','):
            flush()
            tokens.append(Token(TokenKind(piece), piece, start))
        elif piece.startswith("'"):
            flush()
            tokens.append(Token(TokenKind.CONST, piece, start, piece[1:-1]))
        else:
            offset = 0
            for part in piece.split('_'):
                if part:
                    words.append((part, start + offset))
                offset += len(part) + 1
    flush()
    return tokens


def _segment(words, i, names: NameTables, variables, max_name, tokens) -> int:
    for size in range(min(_MAX_KEYWORD, len(words) - i), 0, -1):
        phrase = tuple(w for w, _ in words[i:i + size])
        text = ' '.join(phrase)
        if _KEYWORD_WORDS.get(text) == phrase:
            tokens.append(Token(TokenKind.KEYWORD, text, words[i][1]))
            return i + size
    for size in range(min(max_name, len(words) - i), 0, -1):
        text = ' '.join(w for w, _ in words[i:i + size])
        entry = names.lookup(text)
        if entry is not None:
            tokens.append(Token(TokenKind.NAME, text, words[i][1], entry))
            return i + size
    word, position = words[i]
    if word in variables:
        tokens.append(Token(TokenKind.VAR, word, position))
        return i + 1
    raise UnknownPhrase(f"Unknown phrase '{word}' at {position}", position=position)


# --- parse trees ----------------------------------------------------------

class Descriptor:
    """Marker base class for descriptor parse trees"""


@dataclass(frozen=True)
class NameRef(Descriptor):
    name: str


@dataclass(frozen=True)
class VarRef(Descriptor):
    name: str


@dataclass(frozen=True)
class ConstRef(Descriptor):
    value: InstanceValue


@dataclass(frozen=True)
class Seq(Descriptor):
    left: Descriptor
    right: Descriptor


@dataclass(frozen=True)
class Combination(Descriptor):
    items: Tuple[Descriptor, ...]


class DescOp(Enum):
    AND_ALSO = 'AND ALSO'
    MUST_ALSO_BE = 'MUST ALSO BE'
    IF_THEN_ALSO = 'IF THEN ALSO'
    IF_AND_ONLY_IF = 'IF AND ONLY IF'
    OR_IS = 'OR IS'
    COMBINED_WITH = 'COMBINED WITH'
    BUT_NOT = 'BUT NOT'
    ALWAYS = 'ALWAYS'
    SOMETIME = 'SOMETIME'
    PRECEDES = 'PRECEDES'


_INFIX_DESC_OPS = {
    'AND ALSO': DescOp.AND_ALSO,
    'MUST ALSO BE': DescOp.MUST_ALSO_BE,
    'IF AND ONLY IF': DescOp.IF_AND_ONLY_IF,
    'OR IS': DescOp.OR_IS,
    'COMBINED WITH': DescOp.COMBINED_WITH,
    'BUT NOT': DescOp.BUT_NOT,
    'PRECEDES': DescOp.PRECEDES,
}


@dataclass(frozen=True)
class Keyworded(Descriptor):
    op: DescOp
    operands: Tuple[Descriptor, ...]


class Rule:
    """Marker base class for domain rule parse trees"""


@dataclass(frozen=True)
class Quant(Rule):
    op: str  # ANY, SOME or ALL
    descriptor: Descriptor


@dataclass(frozen=True)
class Conn(Rule):
    op: str  # AND, OR, IMPLIES or IFF
    left: Rule
    right: Rule


@dataclass(frozen=True)
class NotR(Rule):
    body: Rule


@dataclass(frozen=True)
class TemporalR(Rule):
    op: str  # ALWAYS, SOMETIME or PRECEDES
    operands: Tuple[Rule, ...]


# --- parser ---------------------------------------------------------------

class _Parser:

    def __init__(self, tokens: List[Token], end: int):
        self.tokens = tokens
        self.index = 0
        self.end = end

    def peek(self, ahead: int = 0) -> Optional[Token]:
        i = self.index + ahead
        return self.tokens[i] if i < len(self.tokens) else None

    def position(self) -> int:
        token = self.peek()
        return token.position if token else self.end

    def advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def fail(self, expected: Iterable[str]):
        token = self.peek()
        found = f"'{token.text}'" if token else 'end of input'
        expected = sorted(set(expected))
        raise RuleSyntaxError(f"Unexpected {found}, expected {' or '.join(expected)}",
                              position=self.position(), expected=expected)

    def expect_kind(self, kind: TokenKind) -> Token:
        token = self.peek()
        if token is None or token.kind is not kind:
            self.fail([kind.value])
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        token = self.peek()
        if token is None or not token.is_keyword(word):
            self.fail([word])
        return self.advance()

    def done(self):
        if self.peek() is not None:
            self.fail(['end of input'])

    # rules

    def rule(self) -> Rule:
        return self._connective(('IFF', 'IMPLIES', 'OR', 'AND'))

    def _connective(self, levels) -> Rule:
        if not levels:
            return self.not_rule()
        word = levels[0]
        left = self._connective(levels[1:])
        while self.peek() is not None and self.peek().is_keyword(word):
            self.advance()
            left = Conn(word, left, self._connective(levels[1:]))
        return left

    def not_rule(self) -> Rule:
        token = self.peek()
        if token is not None and token.is_keyword('NOT'):
            self.advance()
            return NotR(self.not_rule())
        return self.temporal_rule()

    def temporal_rule(self) -> Rule:
        token = self.peek()
        if token is not None and token.is_keyword('ALWAYS', 'SOMETIME'):
            self.advance()
            return TemporalR(token.text, (self.temporal_rule(),))
        left = self.rule_atom()
        while self.peek() is not None and self.peek().is_keyword('PRECEDES'):
            self.advance()
            left = TemporalR('PRECEDES', (left, self.rule_atom()))
        return left

    def rule_atom(self) -> Rule:
        token = self.peek()
        if token is not None and token.is_keyword('ANY', 'SOME', 'ALL'):
            self.advance()
            return Quant(token.text, self.descriptor())
        if token is not None and token.is_keyword('NO'):
            self.advance()
            return NotR(Quant('SOME', self.descriptor()))
        if token is not None and token.kind is TokenKind.LPAREN:
            self.advance()
            inner = self.rule()
            self.expect_kind(TokenKind.RPAREN)
            return inner
        self.fail(['ANY', 'SOME', 'ALL', 'NO', 'NOT', 'ALWAYS', 'SOMETIME', '('])

    # descriptors

    def starts_descriptor(self, token: Optional[Token]) -> bool:
        if token is None:
            return False
        if token.kind in (TokenKind.NAME, TokenKind.VAR, TokenKind.CONST, TokenKind.LPAREN):
            return True
        return token.is_keyword('THE COMBINATION OF', 'ALWAYS', 'SOMETIME', 'IF')

    def descriptor(self) -> Descriptor:
        left = self.prefixed()
        while True:
            token = self.peek()
            if token is None or token.kind is not TokenKind.KEYWORD or token.text not in _INFIX_DESC_OPS:
                return left
            if not self.starts_descriptor(self.peek(1)):
                return left
            self.advance()
            left = Keyworded(_INFIX_DESC_OPS[token.text], (left, self.prefixed()))

    def prefixed(self) -> Descriptor:
        token = self.peek()
        if token is not None and token.is_keyword('ALWAYS', 'SOMETIME'):
            self.advance()
            return Keyworded(DescOp(token.text), (self.prefixed(),))
        if token is not None and token.is_keyword('IF'):
            self.advance()
            condition = self.descriptor()
            self.expect_keyword('THEN ALSO')
            return Keyworded(DescOp.IF_THEN_ALSO, (condition, self.prefixed()))
        return self.sequence()

    def sequence(self) -> Descriptor:
        left = self.primary()
        while self._starts_primary(self.peek()):
            left = Seq(left, self.primary())
        return left

    def _starts_primary(self, token: Optional[Token]) -> bool:
        if token is None:
            return False
        return (token.kind in (TokenKind.NAME, TokenKind.VAR, TokenKind.CONST, TokenKind.LPAREN)
                or token.is_keyword('THE COMBINATION OF'))

    def primary(self) -> Descriptor:
        token = self.peek()
        if token is None:
            self.fail(['name', 'variable', 'constant', '(', 'THE COMBINATION OF'])
        if token.kind is TokenKind.NAME:
            self.advance()
            return NameRef(token.text)
        if token.kind is TokenKind.VAR:
            self.advance()
            return VarRef(token.text)
        if token.kind is TokenKind.CONST:
            self.advance()
            return ConstRef(token.value)
        if token.kind is TokenKind.LPAREN:
            self.advance()
            inner = self.descriptor()
            self.expect_kind(TokenKind.RPAREN)
            return inner
        if token.is_keyword('THE COMBINATION OF'):
            self.advance()
            self.expect_kind(TokenKind.LPAREN)
            items = [self.descriptor()]
            while self.peek() is not None and self.peek().kind is TokenKind.COMMA:
                self.advance()
                items.append(self.descriptor())
            self.expect_kind(TokenKind.RPAREN)
            return Combination(tuple(items))
        self.fail(['name', 'variable', 'constant', '(', 'THE COMBINATION OF'])


def _end_of(tokens: List[Token]) -> int:
    return tokens[-1].position + len(tokens[-1].text) if tokens else 0


def parse_descriptor(tokens: List[Token]) -> Descriptor:
    parser = _Parser(tokens, _end_of(tokens))
    result = parser.descriptor()
    parser.done()
    return result


def parse_rule(tokens: List[Token]) -> Rule:
    parser = _Parser(tokens, _end_of(tokens))
    result = parser.rule()
    parser.done()
    return result


# --- semantics ------------------------------------------------------------

_HEAD_OPS = {
    DescOp.AND_ALSO: HeadOp.HAND,
    DescOp.MUST_ALSO_BE: HeadOp.HIMPLIES,
    DescOp.IF_THEN_ALSO: HeadOp.HIMPLIES,
    DescOp.IF_AND_ONLY_IF: HeadOp.HIFF,
    DescOp.OR_IS: HeadOp.HOR,
    DescOp.COMBINED_WITH: HeadOp.HPLUS,
    DescOp.BUT_NOT: HeadOp.HMINUS,
}


def dsem(d: Descriptor, names: NameTables) -> PathExpr:
    """The path expression a descriptor denotes"""
    if isinstance(d, NameRef):
        entry = names.lookup(d.name)
        if entry is None:
            raise UnresolvableName(f"'{d.name}' is not in the name tables")
        table, key = entry
        if table == 'object':
            return ObjType(key)
        if table == 'role':
            return Role(key)
        if table == 'reverse-role':
            return Reverse(Role(key))
        p, q = key
        return Concat(Role(p), Reverse(Role(q)))
    if isinstance(d, VarRef):
        return Var(d.name)
    if isinstance(d, ConstRef):
        return Const(d.value)
    if isinstance(d, Seq):
        return Concat(dsem(d.left, names), dsem(d.right, names))
    if isinstance(d, Combination):
        return Confluence(tuple(dsem(item, names) for item in d.items))
    if isinstance(d, Keyworded):
        operands = [dsem(o, names) for o in d.operands]
        if d.op is DescOp.ALWAYS:
            return AlwaysP(operands[0])
        if d.op is DescOp.SOMETIME:
            return SometimeP(operands[0])
        if d.op is DescOp.PRECEDES:
            return PrecedesP(*operands)
        return HeadConn(_HEAD_OPS[d.op], *operands)
    raise TypeError(f"Not a descriptor: {d!r}")


_RULE_CONNECTIVES = {
    'AND': lambda a, b: Binary(Operator.MEET, a, b),
    'OR': lambda a, b: Binary(Operator.JOIN, a, b),
    'IMPLIES': implies,
    'IFF': iff,
}


def _rsem(r: Rule, names: NameTables) -> Formula:
    if isinstance(r, Quant):
        kind = QuantKind.ALL if r.op == 'ALL' else QuantKind.ANY
        return PathQuant(kind, dsem(r.descriptor, names))
    if isinstance(r, Conn):
        return _RULE_CONNECTIVES[r.op](_rsem(r.left, names), _rsem(r.right, names))
    if isinstance(r, NotR):
        return Not(_rsem(r.body, names))
    if isinstance(r, TemporalR):
        operands = [_rsem(o, names) for o in r.operands]
        if r.op == 'ALWAYS':
            return Always(operands[0])
        if r.op == 'SOMETIME':
            return Sometime(operands[0])
        return Precedes(*operands)
    raise TypeError(f"Not a rule: {r!r}")


def rsem(r: Rule, names: NameTables) -> Formula:
    """The formula of a domain rule, with its ω-variables existentially closed"""
    formula = _rsem(r, names)
    for name in sorted(free_variables(formula), reverse=True):
        formula = Exists(name, formula)
    return formula


def descriptor_path(model: Model, text: str, variables: Iterable[str] = ()) -> PathExpr:
    """Tokenize, parse and compile one descriptor against a model's lexicon"""
    names = model.name_tables
    return dsem(parse_descriptor(tokenize(text, names, variables)), names)


# --- rules files ----------------------------------------------------------

@dataclass(frozen=True)
class CompiledRule:
    name: str
    source: str
    formula: Formula
    line: Optional[int] = None


def compile_rule(model: Model, text: str, name: str = 'rule',
                 variables: Iterable[str] = (), line: Optional[int] = None) -> CompiledRule:
    names = model.name_tables
    formula = rsem(parse_rule(tokenize(text, names, variables)), names)
    return CompiledRule(name, text, formula, line)


def check_variable_name(model: Model, name: str, file: Optional[str] = None, line: Optional[int] = None) -> str:
    """A declared ω-variable must be lower-case and clash with no keyword or lexicon name"""
    if not _VARIABLE.match(name) or name in _KEYWORD_WORDS or model.name_tables.lookup(name):
        raise LexiconError(f"Invalid variable name '{name}'", file=file, line=line)
    return name


def parse_rules(model: Model, text: str, file: Optional[str] = None) -> List[CompiledRule]:
    """One rule per line; '#' comments, 'VAR a b' declarations and 'name:' prefixes"""
    check_lexicon(model.name_tables)
    variables = set()
    rules = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        if line.split()[0] == 'VAR':
            variables.update(check_variable_name(model, name, file, number) for name in line.split()[1:])
            continue
        name = f"rule-{number}"
        labelled = _RULE_LINE.match(line)
        if labelled:
            name, line = labelled.group(1), labelled.group(2).strip()
        try:
            rules.append(compile_rule(model, line, name, variables, number))
        except DescriptorError as e:
            raise e.located(file, number)
    logger.info(f"Compiled {len(rules)} rules from {file or 'text'}")
    return rules


def load_rules(model: Model, path: str) -> List[CompiledRule]:
    with open(path, 'r', encoding='utf-8') as f:
        return parse_rules(model, f.read(), file=path)

