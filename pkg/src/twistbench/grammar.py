"""Text grammar for manifold expressions and twisting classes.

Atoms: ``S(n)``, ``CP(m)``, ``lens(k,d)``, ``N(k)``, ``Wu``, ``Poincare``,
``S(p)xS(q)``, ``S2~S(n)``.  Combinators: ``csum(a,b,...)`` and
``susp(e, x)`` with e one of ``0``, ``prim``, ``div(k)`` or a bracketed
list ``[e1,...,eL]`` splitting over the summands.
"""

from __future__ import annotations

import re

from . import topology
from .errors import InputError
from .topology import EulerClass, ManifoldExpr


class ExprSyntaxError(InputError):
    pass


_TOKEN = re.compile(r"\s*([A-Za-z][A-Za-z0-9]*|\d+|[(),\[\]~])")


def _tokenize(text: str) -> list:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ExprSyntaxError(f"bad character at position {pos}: {text[pos:]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None:
            raise ExprSyntaxError("unexpected end of input")
        if expected is not None and tok != expected:
            raise ExprSyntaxError(f"expected {expected!r}, found {tok!r}")
        self.pos += 1
        return tok

    def integer(self) -> int:
        tok = self.take()
        if not tok.isdigit():
            raise ExprSyntaxError(f"expected an integer, found {tok!r}")
        return int(tok)

    def done(self):
        if self.peek() is not None:
            raise ExprSyntaxError(f"trailing input: {self.tokens[self.pos:]}")

    # -- manifolds ----------------------------------------------------------
    def manifold(self) -> ManifoldExpr:
        tok = self.take()
        if tok == "S":
            self.take("(")
            p = self.integer()
            self.take(")")
            nxt = self.peek()
            if nxt == "xS":
                self.take()
                self.take("(")
                q = self.integer()
                self.take(")")
                return topology.sphere_product(p, q)
            return topology.sphere(p)
        if tok == "CP":
            self.take("(")
            m = self.integer()
            self.take(")")
            return topology.cp(m)
        if tok == "lens":
            self.take("(")
            k = self.integer()
            self.take(",")
            d = self.integer()
            self.take(")")
            return topology.lens(k, d)
        if tok == "N":
            self.take("(")
            k = self.integer()
            self.take(")")
            return topology.smale(k)
        if tok == "Wu":
            return topology.wu_manifold()
        if tok == "Poincare":
            return topology.poincare_sphere()
        if tok == "S2":
            self.take("~")
            self.take("S")
            self.take("(")
            q = self.integer()
            self.take(")")
            return topology.twisted_s2_bundle(q)
        if tok == "csum":
            self.take("(")
            parts = [self.manifold()]
            while self.peek() == ",":
                self.take()
                parts.append(self.manifold())
            self.take(")")
            return topology.connected_sum(parts)
        if tok == "susp":
            self.take("(")
            e = self.euler()
            self.take(",")
            x = self.manifold()
            self.take(")")
            return topology.suspend(x, e)
        raise ExprSyntaxError(f"unknown token {tok!r}")

    # -- twisting classes ---------------------------------------------------
    def euler(self) -> EulerClass:
        tok = self.peek()
        if tok == "0":
            self.take()
            return EulerClass.zero()
        if tok == "prim":
            self.take()
            return EulerClass.primitive()
        if tok == "div":
            self.take()
            self.take("(")
            k = self.integer()
            self.take(")")
            return EulerClass.of_divisibility(k)
        if tok == "[":
            self.take()
            parts = [self.euler()]
            while self.peek() == ",":
                self.take()
                parts.append(self.euler())
            self.take("]")
            return EulerClass.split(parts)
        raise ExprSyntaxError(f"expected a twisting class, found {tok!r}")


def parse_manifold(text: str) -> ManifoldExpr:
    p = _Parser(text)
    expr = p.manifold()
    p.done()
    return expr


def parse_euler(text: str) -> EulerClass:
    p = _Parser(text)
    e = p.euler()
    p.done()
    return e
