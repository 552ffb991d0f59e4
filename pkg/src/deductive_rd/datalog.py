"""Finite active-domain Datalog: parsing, grounding and bottom-up evaluation.

The proof system used throughout the package.  A :class:`Program` is a list of
function-free, range-restricted Horn rules (plus optional ground axioms).  The
inflationary immediate-consequence operator ``T(B) = B | T_P(B)`` is evaluated
semi-naively; its iterates give bounded closures and derivation depths, and its
least fixpoint is the deductive closure ``Cn(B)``.

Text syntax (one statement per line, ``%`` starts a comment)::

    reachable(X,Z) :- reachable(X,Y), connected(Y,Z).
    connected(l1,l2).
    c :- a, b.

Constants start with a lowercase letter or digit, variables with an uppercase
letter or ``_``.  Zero-arity predicates (propositional atoms) are written bare.
"""
from __future__ import annotations

import itertools
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

DEFAULT_UNIVERSE_CAP = 10**6
DEFAULT_MAX_ROUNDS = 10**6


class DatalogError(ValueError):
    """Base class for program construction errors."""


class DatalogSyntaxError(DatalogError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UnsafeRuleError(DatalogError):
    pass


class ArityError(DatalogError):
    pass


class UniverseTooLarge(DatalogError):
    pass


class IterationCapExceeded(RuntimeError):
    pass


def is_variable(term: str) -> bool:
    return term[0].isupper() or term[0] == "_"


@dataclass(frozen=True, order=True)
class Fact:
    """A ground atom ``predicate(args...)``."""

    predicate: str
    args: tuple[str, ...] = ()

    def __post_init__(self):
        for a in self.args:
            if is_variable(a):
                raise DatalogError(f"ground fact {self.predicate} has variable argument {a}")

    @property
    def arity(self) -> int:
        return len(self.args)

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(self.args)})"

    def __repr__(self) -> str:
        return f"Fact({self})"


GroundFact = Fact
FactSet = frozenset


@dataclass(frozen=True)
class Atom:
    """An atom pattern whose terms are constants or variables."""

    predicate: str
    terms: tuple[str, ...] = ()

    @property
    def variables(self) -> set[str]:
        return {t for t in self.terms if is_variable(t)}

    def ground(self) -> Fact:
        return Fact(self.predicate, self.terms)

    def __str__(self) -> str:
        if not self.terms:
            return self.predicate
        return f"{self.predicate}({','.join(self.terms)})"


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple[Atom, ...]

    def __post_init__(self):
        if not self.body:
            raise DatalogError("rule body must be nonempty; write ground axioms as facts")
        bound = set().union(*(b.variables for b in self.body))
        missing = self.head.variables - bound
        if missing:
            raise UnsafeRuleError(
                f"unsafe rule {self}: head variable(s) {sorted(missing)} absent from body"
            )

    def __str__(self) -> str:
        return f"{self.head} :- {', '.join(map(str, self.body))}."


@dataclass(frozen=True)
class Program:
    """Rules, ground axioms, and the predicate arities they declare."""

    rules: tuple[Rule, ...] = ()
    axioms: tuple[Fact, ...] = ()
    arities: tuple[tuple[str, int], ...] = ()

    @classmethod
    def from_parts(cls, rules: Iterable[Rule] = (), axioms: Iterable[Fact] = ()) -> "Program":
        rules = tuple(rules)
        axioms = tuple(dict.fromkeys(axioms))
        arities: dict[str, int] = {}
        atoms = [r.head for r in rules] + [b for r in rules for b in r.body]
        atoms += [Atom(f.predicate, f.args) for f in axioms]
        for atom in atoms:
            _declare(arities, atom.predicate, len(atom.terms))
        return cls(rules, axioms, tuple(sorted(arities.items())))

    @property
    def arity(self) -> dict[str, int]:
        return dict(self.arities)

    @property
    def head_predicates(self) -> frozenset[str]:
        return frozenset(r.head.predicate for r in self.rules) | {f.predicate for f in self.axioms}

    @property
    def constants(self) -> set[str]:
        out = {a for f in self.axioms for a in f.args}
        for r in self.rules:
            for atom in (r.head, *r.body):
                out.update(t for t in atom.terms if not is_variable(t))
        return out

    def __str__(self) -> str:
        lines = [f"{f}." for f in self.axioms] + [str(r) for r in self.rules]
        return "\n".join(lines)


def _declare(arities: dict[str, int], predicate: str, arity: int) -> None:
    known = arities.setdefault(predicate, arity)
    if known != arity:
        raise ArityError(f"predicate {predicate} used with arities {known} and {arity}")


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<ident>[A-Za-z0-9_][A-Za-z0-9_]*)|(?P<implies>:-)|(?P<punct>[(),.])|(?P<bad>\S))"
)
_FORBIDDEN = {"not", "\\+"}


def _tokenize(line: str, lineno: int) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if m is None or m.end() == pos:
            break
        kind = m.lastgroup
        text = m.group(kind)
        col = m.start(kind) + 1
        if kind == "bad":
            what = "negation" if text in "!\\~" else f"unexpected character {text!r}"
            raise DatalogSyntaxError(what, lineno, col)
        tokens.append((kind, text, col))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens, lineno, line):
        self.tokens = tokens
        self.i = 0
        self.lineno = lineno
        self.line = line

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def error(self, message):
        tok = self.peek()
        col = tok[2] if tok else len(self.line.rstrip()) + 1
        raise DatalogSyntaxError(message, self.lineno, col)

    def expect(self, text):
        tok = self.peek()
        if tok is None or tok[1] != text:
            self.error(f"expected {text!r}")
        self.i += 1

    def atom(self) -> Atom:
        tok = self.peek()
        if tok is None or tok[0] != "ident":
            self.error("expected predicate name")
        name = tok[1]
        if name in _FORBIDDEN:
            self.error("negation is not supported")
        if is_variable(name) or not name[0].isalpha():
            self.error(f"predicate name {name!r} must start with a lowercase letter")
        self.i += 1
        terms: list[str] = []
        if self.peek() is not None and self.peek()[1] == "(":
            self.i += 1
            while True:
                tok = self.peek()
                if tok is None or tok[0] != "ident":
                    self.error("expected constant or variable")
                terms.append(tok[1])
                self.i += 1
                nxt = self.peek()
                if nxt is not None and nxt[1] == "(":
                    self.error("function symbols are not supported")
                if nxt is not None and nxt[1] == ",":
                    self.i += 1
                    continue
                self.expect(")")
                break
        return Atom(name, tuple(terms))

    def statement(self):
        head = self.atom()
        tok = self.peek()
        if tok is not None and tok[1] == ":-":
            self.i += 1
            body = [self.atom()]
            while self.peek() is not None and self.peek()[1] == ",":
                self.i += 1
                body.append(self.atom())
            self.expect(".")
            stmt = (head, tuple(body))
        else:
            self.expect(".")
            stmt = (head, None)
        if self.peek() is not None:
            self.error("trailing input after statement")
        return stmt


def parse_statements(text: str) -> list[tuple[Atom, tuple[Atom, ...] | None, int]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0]
        if not line.strip():
            continue
        tokens = _tokenize(line, lineno)
        head, body = _Parser(tokens, lineno, line).statement()
        out.append((head, body, lineno))
    return out


def parse_facts(text: str) -> list[Fact]:
    """Parse ground fact lines (``a.``, ``p(x,y).``) in order."""
    facts = []
    for head, body, lineno in parse_statements(text):
        if body is not None:
            raise DatalogSyntaxError("expected a ground fact, found a rule", lineno, 1)
        if head.variables:
            raise DatalogSyntaxError(f"fact {head} is not ground", lineno, 1)
        facts.append(head.ground())
    return facts


def parse_program(text: str) -> Program:
    """Parse rule text into a validated :class:`Program` (rule order preserved)."""
    rules: list[Rule] = []
    axioms: list[Fact] = []
    arities: dict[str, int] = {}
    for head, body, lineno in parse_statements(text):
        try:
            for atom in (head, *(body or ())):
                _declare(arities, atom.predicate, len(atom.terms))
            if body is None:
                if head.variables:
                    raise UnsafeRuleError(f"fact {head} is not ground")
                axioms.append(head.ground())
            else:
                rules.append(Rule(head, body))
        except DatalogError as exc:
            raise type(exc)(f"line {lineno}: {exc}") from None
    return Program.from_parts(rules, axioms)


# ---------------------------------------------------------------------------
# grounding


@dataclass(frozen=True)
class Universe:
    """All ground atoms over ``domain`` for every predicate in ``predicates``.

    The atoms are enumerated lazily; membership and size are computed directly.
    """

    predicates: tuple[tuple[str, int], ...]
    domain: tuple[str, ...]

    def __len__(self) -> int:
        n = len(self.domain)
        return sum(n**k for _, k in self.predicates)

    def __contains__(self, fact: object) -> bool:
        if not isinstance(fact, Fact):
            return False
        arity = dict(self.predicates).get(fact.predicate)
        if arity is None or arity != fact.arity:
            return False
        dom = set(self.domain)
        return all(a in dom for a in fact.args)

    def __iter__(self) -> Iterator[Fact]:
        for name, k in self.predicates:
            for args in itertools.product(self.domain, repeat=k):
                yield Fact(name, args)

    @property
    def facts(self) -> frozenset[Fact]:
        return frozenset(self)


def active_universe(
    program: Program, seeds: Iterable[Fact], cap: int = DEFAULT_UNIVERSE_CAP
) -> Universe:
    """Ground universe over the constants of ``seeds`` and ``program``.

    Predicates are those declared by the program together with any predicate
    used by a seed fact.
    """
    seeds = list(seeds)
    arities = program.arity
    for f in seeds:
        _declare(arities, f.predicate, f.arity)
    domain = set(program.constants)
    for f in seeds:
        domain.update(f.args)
    universe = Universe(tuple(sorted(arities.items())), tuple(sorted(domain)))
    size = len(universe)
    if size > cap:
        raise UniverseTooLarge(f"active universe has {size} ground atoms (cap {cap})")
    return universe


# ---------------------------------------------------------------------------
# evaluation


class _Index:
    """Facts grouped by predicate, with lazily built per-position lookups."""

    def __init__(self, facts: Iterable[Fact] = ()):
        self.rows: dict[str, set[tuple[str, ...]]] = defaultdict(set)
        self._by_pos: dict[tuple[str, int], dict[str, list[tuple[str, ...]]]] = {}
        for f in facts:
            self.rows[f.predicate].add(f.args)

    def add(self, facts: Iterable[Fact]) -> None:
        for f in facts:
            self.rows[f.predicate].add(f.args)
        self._by_pos.clear()

    def lookup(self, predicate: str, pos: int, value: str):
        key = (predicate, pos)
        table = self._by_pos.get(key)
        if table is None:
            table = defaultdict(list)
            for args in self.rows.get(predicate, ()):
                table[args[pos]].append(args)
            self._by_pos[key] = table
        return table.get(value, ())

    def candidates(self, atom: Atom, binding: Mapping[str, str]):
        best = None
        for pos, term in enumerate(atom.terms):
            value = binding.get(term) if is_variable(term) else term
            if value is not None:
                rows = self.lookup(atom.predicate, pos, value)
                if best is None or len(rows) < len(best):
                    best = rows
        return self.rows.get(atom.predicate, ()) if best is None else best


def _match(atom: Atom, args: tuple[str, ...], binding: dict[str, str]) -> dict[str, str] | None:
    out = binding
    for term, value in zip(atom.terms, args):
        if is_variable(term):
            bound = out.get(term)
            if bound is None:
                if out is binding:
                    out = dict(binding)
                out[term] = value
            elif bound != value:
                return None
        elif term != value:
            return None
    return out


def _join(atoms: list[Atom], indexes: list[_Index], binding: dict[str, str]):
    if not atoms:
        yield binding
        return
    atom, index = atoms[0], indexes[0]
    for args in index.candidates(atom, binding):
        b = _match(atom, args, binding)
        if b is not None:
            yield from _join(atoms[1:], indexes[1:], b)


def _instantiate(head: Atom, binding: Mapping[str, str]) -> Fact:
    return Fact(head.predicate, tuple(binding[t] if is_variable(t) else t for t in head.terms))


def _consequences(program: Program, full: _Index, delta: _Index | None) -> set[Fact]:
    """T_P restricted to derivations using at least one fact of ``delta``.

    With ``delta=None`` this is the plain one-step operator T_P over ``full``.
    """
    out: set[Fact] = set()
    for rule in program.rules:
        body = list(rule.body)
        if delta is None:
            for b in _join(body, [full] * len(body), {}):
                out.add(_instantiate(rule.head, b))
            continue
        for i, atom in enumerate(body):
            if not delta.rows.get(atom.predicate):
                continue
            rest = body[:i] + body[i + 1 :]
            atoms = [atom] + rest
            indexes = [delta] + [full] * len(rest)
            for b in _join(atoms, indexes, {}):
                out.add(_instantiate(rule.head, b))
    return out


def iterate_rounds(
    program: Program,
    base: Iterable[Fact],
    seed_delta: Iterable[Fact] | None = None,
) -> Iterator[frozenset[Fact]]:
    """Yield the facts newly added by each application of the inflationary operator.

    Round ``n`` yields ``T^n(B) - T^(n-1)(B)``; iteration ends at the fixpoint.
    When ``seed_delta`` is given, ``base`` must already be closed and the
    rounds are those of ``Cn(base) | seed_delta`` (incremental extension).
    """
    current = set(base)
    full = _Index(current)
    if seed_delta is None:
        new = _consequences(program, full, None) | set(program.axioms)
        new -= current
    else:
        new = set(seed_delta) - current
        if new:
            current |= new
            full.add(new)
            yield frozenset(new)
            new = _consequences(program, full, _Index(new)) - current
    while new:
        current |= new
        full.add(new)
        yield frozenset(new)
        new = _consequences(program, full, _Index(new)) - current


def immediate_consequence(program: Program, base: Iterable[Fact]) -> frozenset[Fact]:
    """``T(B) = B | T_P(B)`` computed by a full (naive) join."""
    base = frozenset(base)
    return base | _consequences(program, _Index(base), None) | set(program.axioms)


def closure(program: Program, base: Iterable[Fact], max_rounds: int = DEFAULT_MAX_ROUNDS) -> frozenset[Fact]:
    """Least fixpoint of the immediate-consequence operator containing ``base``."""
    out = set(base)
    for n, new in enumerate(iterate_rounds(program, out), start=1):
        if n > max_rounds:
            raise IterationCapExceeded(f"closure did not stabilize within {max_rounds} rounds")
        out |= new
    return frozenset(out)


def naive_closure(program: Program, base: Iterable[Fact], max_rounds: int = DEFAULT_MAX_ROUNDS) -> frozenset[Fact]:
    """Closure by repeated full application of :func:`immediate_consequence`."""
    current = frozenset(base)
    for _ in range(max_rounds):
        nxt = immediate_consequence(program, current)
        if nxt == current:
            return current
        current = nxt
    raise IterationCapExceeded(f"closure did not stabilize within {max_rounds} rounds")


def bounded_closure(program: Program, base: Iterable[Fact], depth: int) -> frozenset[Fact]:
    """``T^depth(base)``."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    out = set(base)
    if depth == 0:
        return frozenset(out)
    for n, new in enumerate(iterate_rounds(program, out), start=1):
        out |= new
        if n == depth:
            break
    return frozenset(out)


def derivation_depth(program: Program, base: Iterable[Fact], fact: Fact) -> float:
    """Smallest ``n`` with ``fact`` in ``T^n(base)``; ``math.inf`` if underivable."""
    base = set(base)
    if fact in base:
        return 0
    if fact.predicate not in program.head_predicates:
        return math.inf
    for n, new in enumerate(iterate_rounds(program, base), start=1):
        if fact in new:
            return n
    return math.inf


def derives(program: Program, base: Iterable[Fact], fact: Fact) -> bool:
    """Whether ``fact`` belongs to ``Cn(base)``."""
    return derivation_depth(program, base, fact) != math.inf


def depths(program: Program, base: Iterable[Fact]) -> dict[Fact, int]:
    """Derivation depth of every fact in ``Cn(base)``."""
    out = {f: 0 for f in base}
    for n, new in enumerate(iterate_rounds(program, out), start=1):
        for f in new:
            out[f] = n
    return out


@dataclass
class Reasoner:
    """A program bound to a closure cache keyed by the base fact set."""

    program: Program
    _cache: dict = field(default_factory=dict, repr=False)

    def closure(self, base: Iterable[Fact]) -> frozenset[Fact]:
        key = frozenset(base)
        hit = self._cache.get(key)
        if hit is None:
            hit = closure(self.program, key)
            self._cache[key] = hit
        return hit

    def extend(self, base: Iterable[Fact], extra: Iterable[Fact]) -> frozenset[Fact]:
        """``Cn(base | extra)`` reusing the cached closure of ``base``."""
        key = frozenset(base)
        extra = frozenset(extra)
        full_key = key | extra
        hit = self._cache.get(full_key)
        if hit is not None:
            return hit
        closed = self.closure(key)
        out = set(closed)
        for new in iterate_rounds(self.program, closed, seed_delta=extra):
            out |= new
        hit = frozenset(out)
        self._cache[full_key] = hit
        return hit

    def bounded(self, base: Iterable[Fact], depth: int) -> frozenset[Fact]:
        return bounded_closure(self.program, base, depth)

    def derives(self, base: Iterable[Fact], fact: Fact) -> bool:
        key = frozenset(base)
        hit = self._cache.get(key)
        if hit is not None:
            return fact in hit
        return derives(self.program, key, fact)

    def depth(self, base: Iterable[Fact], fact: Fact) -> float:
        return derivation_depth(self.program, base, fact)
