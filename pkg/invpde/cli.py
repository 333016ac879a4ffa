"""
Console entry point.

``invpde <command> [options]`` runs one of the management commands of the
invpde app (generate, invariants, verify) without a Django project.
"""
import os
import re
import sys
from collections import Counter
from dataclasses import dataclass

import django
import sympy
from django.conf import settings
from django.core.management import load_command_class

from .euclidean import Family, InvariantPoly
from .exceptions import ParseError

COMMANDS = ("generate", "invariants", "verify")

USAGE = """usage: invpde {generate,invariants,verify} [options]

  generate    --group {euclidean,conformal} -n N --poly SPEC [--format {text,latex,json}]
  invariants  --group {euclidean,conformal} -n N --jet FILE [--element FILE]
  verify      --suite {euclidean,conformal,translation,metric} -n N [--trials T] [--tol TOL] [--seed S]

Run `invpde <command> --help` for details.
"""

SYMBOL_PREFIX = {Family.EUCLIDEAN: "t", Family.CONFORMAL: "c"}
FIRST_INDEX = {Family.EUCLIDEAN: 1, Family.CONFORMAL: 2}

_TOKEN_RE = re.compile(r"(?P<number>\d+(?:/\d+)?)|(?P<symbol>[a-z]+\d+)|(?P<op>[-+*^])")


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    position: int


def tokenize(spec):
    tokens = []
    position = 0
    while True:
        while position < len(spec) and spec[position].isspace():
            position += 1
        if position == len(spec):
            return tokens
        match = _TOKEN_RE.match(spec, position)
        if not match:
            raise ParseError(f"unexpected character {spec[position]!r}", position)
        tokens.append(Token(match.lastgroup, match.group(), position))
        position = match.end()


class PolyParser:
    """
    Recursive-descent parser for sums of rational multiples of products of
    invariant symbols, e.g. "1/2*t1^2 - 1/2*t2" or "c2^3 + c3^2".
    """

    def __init__(self, spec, family):
        self.spec = spec
        self.family = Family(family)
        self.tokens = tokenize(spec)
        self.index = 0

    def peek(self):
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def next(self):
        token = self.peek()
        if token is None:
            raise ParseError("unexpected end of input", len(self.spec))
        self.index += 1
        return token

    def accept(self, *ops):
        token = self.peek()
        if token is not None and token.kind == "op" and token.value in ops:
            self.index += 1
            return token
        return None

    def parse(self):
        """A list of (coefficient, {symbol index: exponent}) terms"""
        if not self.tokens:
            raise ParseError("empty polynomial", 0)
        terms = []
        sign = self.accept("+", "-")
        terms.append(self.term(-1 if sign and sign.value == "-" else 1))
        while self.peek() is not None:
            sign = self.accept("+", "-")
            if sign is None:
                token = self.peek()
                raise ParseError(f"expected + or -, got {token.value!r}", token.position)
            terms.append(self.term(-1 if sign.value == "-" else 1))
        return terms

    def term(self, sign):
        coefficient = sympy.Rational(sign)
        exponents = Counter()
        coefficient = self.factor(coefficient, exponents)
        while self.accept("*"):
            coefficient = self.factor(coefficient, exponents)
        return coefficient, exponents

    def factor(self, coefficient, exponents):
        token = self.next()
        if token.kind == "number":
            if "/" in token.value and sympy.Rational(token.value.split("/")[1]) == 0:
                raise ParseError("division by zero", token.position)
            return coefficient * sympy.Rational(token.value)
        if token.kind != "symbol":
            raise ParseError(f"unexpected {token.value!r}", token.position)
        index = self.symbol_index(token)
        power = 1
        if self.accept("^"):
            exponent = self.next()
            if exponent.kind != "number" or "/" in exponent.value:
                raise ParseError("exponents must be non-negative integers", exponent.position)
            power = int(exponent.value)
        exponents[index] += power
        return coefficient

    def symbol_index(self, token):
        prefix = SYMBOL_PREFIX[self.family]
        match = re.fullmatch(rf"{prefix}(\d+)", token.value)
        if not match or int(match[1]) < FIRST_INDEX[self.family]:
            expected = f"{prefix}{FIRST_INDEX[self.family]}, {prefix}{FIRST_INDEX[self.family] + 1}, ..."
            raise ParseError(f"unknown symbol {token.value!r}, expected {expected}", token.position)
        return int(match[1])


def parse_poly(spec, family, n=None):
    family = Family(family)
    parser = PolyParser(spec, family)
    terms = parser.parse()
    used = [index for _, exponents in terms for index, power in exponents.items() if power]
    if n is None:
        n = max(used + [FIRST_INDEX[family]])
    too_large = [index for index in used if index > n]
    if too_large:
        raise ParseError(f"symbol {SYMBOL_PREFIX[family]}{max(too_large)} exceeds n = {n}", None)
    first = FIRST_INDEX[family]
    coefficients = {}
    for coefficient, exponents in terms:
        key = tuple(exponents.get(index, 0) for index in range(first, n + 1))
        coefficients[key] = coefficients.get(key, 0) + coefficient
    return InvariantPoly(family, n, coefficients)


def configure():
    if not settings.configured:
        settings.configure(
            INSTALLED_APPS=["rest_framework", "invpde"],
            INVPDE_THREADS=os.environ.get("INVPDE_THREADS"),
        )
    django.setup()


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv or argv[0] not in COMMANDS:
        sys.stderr.write(USAGE)
        return 2
    configure()
    command = load_command_class("invpde", argv[0])
    try:
        command.run_from_argv(["invpde", *argv])
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
