"""Rank-1 constraint system builder.

The same gadget code runs in two modes.  With ``record=True`` the builder
keeps every constraint as three sparse rows (used by setup and for
constraint counting).  With ``record=False`` it only tracks assignments and,
for each constraint, the evaluated triple ``(<a,w>, <b,w>, <c,w>)``, which
is exactly what the prover needs.  Gadgets must therefore never branch on
witness values; they may branch on whether an expression is a constant,
which is structural.
"""
from __future__ import annotations

from collections import Counter
from contextlib import contextmanager
from typing import Iterable, Union

from .field import P

ONE = 0  # index of the constant-one variable


class SynthesisError(ValueError):
    pass


class LC:
    """A linear combination of variables together with its current value.

    ``terms`` is ``None`` when the owning system does not record structure.
    """

    __slots__ = ("terms", "value", "const")

    def __init__(self, terms, value: int, const: bool = False):
        self.terms = terms
        self.value = value
        self.const = const

    # arithmetic is linear and never creates constraints
    def __add__(self, other: "Operand") -> "LC":
        other = _lift(other, self.terms is not None)
        terms = None
        if self.terms is not None:
            terms = dict(self.terms)
            for k, v in other.terms.items():
                c = (terms.get(k, 0) + v) % P
                if c:
                    terms[k] = c
                else:
                    terms.pop(k, None)
        return LC(terms, (self.value + other.value) % P, self.const and other.const)

    __radd__ = __add__

    def __neg__(self) -> "LC":
        terms = None if self.terms is None else {k: (-v) % P for k, v in self.terms.items()}
        return LC(terms, (-self.value) % P, self.const)

    def __sub__(self, other: "Operand") -> "LC":
        return self + (-_lift(other, self.terms is not None))

    def __rsub__(self, other: "Operand") -> "LC":
        return _lift(other, self.terms is not None) + (-self)

    def scale(self, k: int) -> "LC":
        k %= P
        if k == 0:
            return LC({} if self.terms is not None else None, 0, True)
        terms = None if self.terms is None else {i: v * k % P for i, v in self.terms.items()}
        return LC(terms, self.value * k % P, self.const)

    def __mul__(self, k: int) -> "LC":
        if not isinstance(k, int):
            raise TypeError("LC * LC needs a constraint; use ConstraintSystem.mul")
        return self.scale(k)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"LC(value={self.value}, const={self.const})"


Operand = Union[LC, int]


def _lift(x: Operand, record: bool) -> LC:
    if isinstance(x, LC):
        return x
    v = x % P
    return LC(({ONE: v} if v else {}) if record else None, v, True)


def lc_sum(items: Iterable[LC], record: bool) -> LC:
    """Sum many LCs without quadratic dict copying."""
    value = 0
    const = True
    terms = {} if record else None
    for it in items:
        value += it.value
        const = const and it.const
        if record:
            for k, v in it.terms.items():
                terms[k] = terms.get(k, 0) + v
    if record:
        terms = {k: v % P for k, v in terms.items() if v % P}
    return LC(terms, value % P, const)


class ConstraintSystem:
    def __init__(self, record: bool = True):
        self.record = record
        self.num_public = 0
        self.num_private = 0
        self.values: list[int] = [1]
        self.rows: list[tuple[dict, dict, dict]] = []
        self.evals: list[tuple[int, int, int]] = []
        self.families: list[str] = []
        self._family = "misc"

    # -- construction helpers -------------------------------------------------
    def const(self, value: int) -> LC:
        return _lift(value, self.record)

    @property
    def num_constraints(self) -> int:
        return len(self.families)

    @property
    def num_variables(self) -> int:
        return len(self.values)

    @contextmanager
    def family(self, name: str):
        prev, self._family = self._family, name
        try:
            yield
        finally:
            self._family = prev

    def _new_var(self, value: int) -> LC:
        idx = len(self.values)
        value %= P
        self.values.append(value)
        return LC({idx: 1} if self.record else None, value)

    def alloc_public(self, value: int) -> LC:
        if self.num_private:
            raise SynthesisError("public inputs must be allocated before private ones")
        self.num_public += 1
        return self._new_var(value)

    def alloc(self, value: int) -> LC:
        self.num_private += 1
        return self._new_var(value)

    def enforce(self, a: Operand, b: Operand, c: Operand) -> None:
        a, b, c = (_lift(x, self.record) for x in (a, b, c))
        if self.record:
            self.rows.append((a.terms, b.terms, c.terms))
        else:
            self.evals.append((a.value, b.value, c.value))
        self.families.append(self._family)

    def enforce_equal(self, x: Operand, y: Operand) -> None:
        self.enforce(_lift(x, self.record) - y, 1, 0)

    # -- multiplicative helpers (fold constants) --------------------------------
    def mul(self, a: Operand, b: Operand) -> LC:
        a, b = _lift(a, self.record), _lift(b, self.record)
        if a.const:
            return b.scale(a.value)
        if b.const:
            return a.scale(b.value)
        out = self.alloc(a.value * b.value)
        self.enforce(a, b, out)
        return out

    def square(self, a: Operand) -> LC:
        return self.mul(a, a)

    # -- inspection -----------------------------------------------------------
    def unsatisfied(self) -> list[tuple[int, str]]:
        if self.record:
            raise SynthesisError("satisfaction is checked on witness-mode systems")
        return [
            (i, self.families[i])
            for i, (a, b, c) in enumerate(self.evals)
            if a * b % P != c
        ]

    def is_satisfied(self) -> bool:
        return not self.unsatisfied()

    def family_counts(self) -> Counter:
        return Counter(self.families)

    def public_values(self) -> list[int]:
        return self.values[1:1 + self.num_public]

    def private_values(self) -> list[int]:
        return self.values[1 + self.num_public:]
