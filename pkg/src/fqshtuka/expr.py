"""Tiny expression language for series and algebra elements.

Grammar:  expr := term (('+' | '-') term)*
          term := unary ('*' unary)*
          unary := '-' unary | power
          power := atom ('^' INT)?
          atom := INT | NAME | '(' expr ')'

NAME is z, zeta, w (the generator of F_q when q is not prime) or a basis
name of the algebra.
"""
from __future__ import annotations

import re

import numpy as np

from .errors import SchemaError, UnresolvedReference

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


def tokenize(text):
    pos, out = 0, []
    text = str(text)
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            break
        pos = m.end()
        if m.group(1):
            out.append(("int", int(m.group(1))))
        elif m.group(2):
            out.append(("name", m.group(2)))
        elif m.group(3):
            out.append(("op", m.group(3)))
    return out


class _Parser:
    def __init__(self, text, A, N):
        from .zseries import series_mul
        self.toks = tokenize(text)
        self.i = 0
        self.A, self.N = A, N
        self._mul = series_mul
        self.text = text

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def const(self, c):
        s = np.zeros((self.N, self.A.k), dtype=np.int64)
        if self.N:
            s[0] = c
        return s

    def expr(self):
        v = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            w = self.term()
            v = self.A.add(v, w) if op == "+" else self.A.sub(v, w)
        return v

    def term(self):
        v = self.unary()
        while self.peek() == ("op", "*"):
            self.take()
            v = self._mul(self.A, v, self.unary())
        return v

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return self.A.neg(self.unary())
        return self.power()

    def power(self):
        v = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            kind, n = self.take()
            if kind != "int":
                raise SchemaError(f"exponent must be an integer in {self.text!r}")
            out = self.const(self.A.one())
            for _ in range(n):
                out = self._mul(self.A, out, v)
            v = out
        return v

    def atom(self):
        kind, val = self.take()
        A = self.A
        if kind == "int":
            return self.const(A.scalar(val % A.field.p))
        if kind == "name":
            if val == "z":
                s = np.zeros((self.N, A.k), dtype=np.int64)
                if self.N > 1:
                    s[1, 0] = 1
                return s
            if val == "zeta":
                return self.const(A.zeta)
            if val in A.names:
                return self.const(A.basis_vector(A.names.index(val)))
            if val == "w" and A.field.e > 1:
                return self.const(A.scalar(A.field.generator()))
            raise UnresolvedReference(f"unknown name {val!r} in {self.text!r}",
                                      witness=val)
        if (kind, val) == ("op", "("):
            v = self.expr()
            if self.take() != ("op", ")"):
                raise SchemaError(f"unbalanced parentheses in {self.text!r}")
            return v
        raise SchemaError(f"cannot parse {self.text!r}")


def evaluate(text, A, N):
    """Series of precision N described by `text` (ints are taken as-is)."""
    from .zseries import ZSeries
    if isinstance(text, (int, np.integer)):
        text = str(int(text))
    p = _Parser(text, A, N)
    v = p.expr()
    if p.i != len(p.toks):
        raise SchemaError(f"trailing input in {text!r}")
    return ZSeries(A, v)


def evaluate_element(text, A):
    """Element of A (no z allowed beyond constants)."""
    s = evaluate(text, A, 1)
    return s.coeffs[0]
