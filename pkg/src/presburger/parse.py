"""Parser for the formula grammar.

    variables  [a-zA-Z_][a-zA-Z0-9_]*        (keywords reserved)
    terms      integer literals, + - and *, with * only between a
               literal and a variable
    atoms      t < t' | t <= t' | t > t' | t >= t' | t = t' | t != t' | N | t
    formulas   and, or, not, exists v. ..., forall v. ..., parentheses

Comparisons are desugared to the three atom kinds using discreteness of the
integer order (t <= t'  <=>  t' - t + 1 > 0).  Bound variables are renamed
after parsing so that binder names are globally unique; printing a parsed
formula and reparsing it is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    FALSE,
    TRUE,
    And,
    Divides,
    EqZero,
    Exists,
    Forall,
    Formula,
    GtZero,
    Not,
    Or,
    all_names,
    free_vars,
    fresh_name,
    lor,
    substitute,
)
from .terms import LinearTerm

KEYWORDS = {"and", "or", "not", "exists", "forall", "true", "false"}

_SYMBOLS = ("<=", ">=", "!=", "<", ">", "=", "+", "-", "*", "(", ")", ".", "|")


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class NonlinearTermError(ParseError):
    """Product of two variables: not expressible in linear arithmetic."""


@dataclass(frozen=True)
class _Tok:
    kind: str  # 'int' | 'ident' | symbol text | 'eof'
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(_Tok("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                toks.append(_Tok(sym, sym, line, col))
                col += len(sym)
                i += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    toks.append(_Tok("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.pos = 0

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str) -> _Tok:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"expected {kind!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def fail(self, msg: str):
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    # formula := or_expr
    def formula(self) -> Formula:
        args = [self.and_expr()]
        while self.peek().kind == "ident" and self.peek().text == "or":
            self.next()
            args.append(self.and_expr())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def and_expr(self) -> Formula:
        args = [self.unary()]
        while self.peek().kind == "ident" and self.peek().text == "and":
            self.next()
            args.append(self.unary())
        return args[0] if len(args) == 1 else And(tuple(args))

    def unary(self) -> Formula:
        t = self.peek()
        if t.kind == "ident" and t.text == "not":
            self.next()
            return Not(self.unary())
        if t.kind == "ident" and t.text in ("exists", "forall"):
            self.next()
            v = self.expect("ident")
            if v.text in KEYWORDS:
                raise ParseError(f"keyword {v.text!r} cannot be a variable", v.line, v.col)
            self.expect(".")
            body = self.formula()
            return Exists(v.text, body) if t.text == "exists" else Forall(v.text, body)
        return self.primary()

    def primary(self) -> Formula:
        t = self.peek()
        if t.kind == "(":
            self.next()
            f = self.formula()
            self.expect(")")
            return f
        if t.kind == "ident" and t.text == "true":
            self.next()
            return TRUE
        if t.kind == "ident" and t.text == "false":
            self.next()
            return FALSE
        return self.atom()

    def atom(self) -> Formula:
        left = self.term()
        t = self.peek()
        if t.kind == "|":
            self.next()
            if not left.is_constant:
                raise ParseError("divisibility modulus must be an integer literal", t.line, t.col)
            if left.const < 1:
                raise ParseError(f"divisibility modulus must be >= 1, got {left.const}", t.line, t.col)
            right = self.term()
            return Divides(left.const, right)
        if t.kind in ("<", "<=", ">", ">=", "=", "!="):
            self.next()
            right = self.term()
            if t.kind == "<":
                return GtZero(right - left)
            if t.kind == ">":
                return GtZero(left - right)
            if t.kind == "<=":
                return GtZero(right - left + 1)
            if t.kind == ">=":
                return GtZero(left - right + 1)
            if t.kind == "=":
                return EqZero(left - right)
            return lor([GtZero(left - right), GtZero(right - left)])
        self.fail(f"expected a relation after term, found {t.text or 'end of input'!r}")

    def term(self) -> LinearTerm:
        negate = False
        if self.peek().kind == "-":
            self.next()
            negate = True
        acc = self.product(negate)
        while self.peek().kind in ("+", "-"):
            op = self.next()
            nxt = self.product(False)
            acc = acc + nxt if op.kind == "+" else acc - nxt
        return acc

    def product(self, negate: bool) -> LinearTerm:
        sign = -1 if negate else 1
        t = self.peek()
        if t.kind == "int":
            self.next()
            k = sign * int(t.text)
            if self.peek().kind == "*":
                self.next()
                v = self.peek()
                if v.kind != "ident" or v.text in KEYWORDS:
                    raise ParseError("'*' must multiply a literal and a variable", v.line, v.col)
                self.next()
                return LinearTerm.var(v.text, k)
            return LinearTerm.constant(k)
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.next()
            if self.peek().kind == "*":
                star = self.next()
                v = self.peek()
                if v.kind == "ident" and v.text not in KEYWORDS:
                    raise NonlinearTermError(
                        f"non-linear term: product of variables {t.text!r} and {v.text!r}",
                        star.line,
                        star.col,
                    )
                k = self.expect("int")
                return LinearTerm.var(t.text, sign * int(k.text))
            return LinearTerm.var(t.text, sign)
        self.fail(f"expected a term, found {t.text or 'end of input'!r}")


def _uniquify(f: Formula) -> Formula:
    """Rename binders so bound identifiers are globally unique."""
    taken = set(all_names(f))
    assigned = set(free_vars(f))

    def go(g: Formula, env: dict[str, str]) -> Formula:
        if isinstance(g, (Exists, Forall)):
            raw = g.var
            if raw in assigned:
                alias = fresh_name(raw, taken)
            else:
                alias = raw
            assigned.add(alias)
            taken.add(alias)
            body = go(g.body, {**env, raw: alias})
            return type(g)(alias, body)
        if isinstance(g, Not):
            return Not(go(g.body, env))
        if isinstance(g, And):
            return And(tuple(go(a, env) for a in g.args))
        if isinstance(g, Or):
            return Or(tuple(go(a, env) for a in g.args))
        out = g
        for raw, alias in env.items():
            if raw != alias:
                out = substitute(out, raw, LinearTerm.var(alias))
        return out

    return go(f, {})


def parse(text: str) -> Formula:
    """Parse a formula; raises ParseError (NonlinearTermError for var*var)."""
    p = _Parser(_tokenize(text))
    f = p.formula()
    t = p.peek()
    if t.kind != "eof":
        raise ParseError(f"unexpected trailing input {t.text!r}", t.line, t.col)
    return _uniquify(f)


def parse_term(text: str) -> LinearTerm:
    p = _Parser(_tokenize(text))
    t = p.term()
    tok = p.peek()
    if tok.kind != "eof":
        raise ParseError(f"unexpected trailing input {tok.text!r}", tok.line, tok.col)
    return t
