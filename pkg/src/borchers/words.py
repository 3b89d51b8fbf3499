"""Words in a finite generator set: the dense domain spanned by field monomials."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import BorchersElement, MatrixTestFunction, Term, _check_space


def enumerate_words(m: int, max_len: int) -> list[tuple[int, ...]]:
    """All index words of length 0..max_len, graded then lexicographic."""
    words: list[tuple[int, ...]] = []
    for n in range(max_len + 1):
        words.extend(itertools.product(range(m), repeat=n))
    return words


@dataclass(frozen=True)
class WordBasis:
    """Ordered products of generators up to ``max_len`` factors; word 0 is the unit.

    Word elements carry a degree cap of ``2 * max_len + 1`` so that Gram
    entries and one-step field-operator matrix elements can be formed.
    """

    generators: tuple[MatrixTestFunction, ...]
    max_len: int
    words: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise ValueError("at least one generator is required")
        if self.max_len < 0:
            raise ValueError("max_len must be nonnegative")
        for g in gens[1:]:
            _check_space(gens[0].space, gens[0].k, g.space, g.k)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "words", tuple(enumerate_words(len(gens), self.max_len)))

    @property
    def space(self):
        return self.generators[0].space

    @property
    def k(self) -> int:
        return self.generators[0].k

    @property
    def cap(self) -> int:
        return 2 * self.max_len + 1

    def __len__(self) -> int:
        return len(self.words)

    def element(self, word: Sequence[int]) -> BorchersElement:
        factors = tuple(self.generators[i] for i in word)
        return BorchersElement(self.space, self.k, [Term(1.0, factors)], max(self.cap, len(factors)))

    @property
    def elements(self) -> list[BorchersElement]:
        return [self.element(w) for w in self.words]

    def lengths(self) -> np.ndarray:
        return np.array([len(w) for w in self.words])

    def index(self, word: Sequence[int]) -> int:
        return self.words.index(tuple(word))

    def describe(self, word: Sequence[int]) -> str:
        return "1" if len(word) == 0 else "x".join(f"f{i}" for i in word)
