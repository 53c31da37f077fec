"""Candidate submodels as column subsets of a design matrix."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import TooManyColumns

MAX_COLUMNS = 20


@dataclass(frozen=True)
class CandidateModel:
    id: int
    columns: tuple[int, ...]
    includes_intercept: bool = False

    def __post_init__(self):
        cols = tuple(int(c) for c in self.columns)
        if not cols:
            raise ValueError("a candidate model needs at least one column")
        if any(b <= a for a, b in zip(cols, cols[1:])) or cols[0] < 0:
            raise ValueError(f"columns must be strictly increasing and >= 0: {cols}")
        object.__setattr__(self, "columns", cols)

    @property
    def k(self) -> int:
        return len(self.columns)


@dataclass(frozen=True)
class CandidateSet:
    models: tuple[CandidateModel, ...]
    largest_index: int

    @property
    def M(self) -> int:
        return len(self.models)

    @property
    def sizes(self) -> list[int]:
        return [m.k for m in self.models]

    def __len__(self) -> int:
        return len(self.models)

    def __iter__(self):
        return iter(self.models)

    def __getitem__(self, i: int) -> CandidateModel:
        return self.models[i]

    def check_bounds(self, p: int) -> None:
        for m in self.models:
            if m.columns[-1] >= p:
                raise ValueError(f"model {m.id} uses column {m.columns[-1]} but design has {p}")

    @classmethod
    def from_column_lists(cls, column_lists, intercept: bool = False) -> CandidateSet:
        models = tuple(
            CandidateModel(i, tuple(cols), intercept) for i, cols in enumerate(column_lists)
        )
        if len({m.columns for m in models}) != len(models):
            raise ValueError("duplicate column lists in candidate set")
        kmax = max(m.k for m in models)
        largest = [m.id for m in models if m.k == kmax]
        full = set().union(*(m.columns for m in models))
        if len(largest) != 1 or set(models[largest[0]].columns) != full:
            raise ValueError("candidate set needs a unique largest model covering all columns")
        return cls(models, largest[0])


def _guard(p: int) -> None:
    if p < 1:
        raise ValueError(f"need at least one column, got {p}")
    if p > MAX_COLUMNS:
        raise TooManyColumns(f"{p} columns would give 2^{p} candidate models (limit {MAX_COLUMNS})")


def _subsets(items):
    # ordered by size, then lexicographically
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def all_subsets_with_intercept(p_nonintercept: int) -> CandidateSet:
    """Column 0 is the intercept; every subset of columns 1..p is paired with it."""
    _guard(p_nonintercept)
    cols = [(0, *s) for s in _subsets(range(1, p_nonintercept + 1))]
    return CandidateSet.from_column_lists(cols, intercept=True)


def all_nonempty_subsets(p: int) -> CandidateSet:
    _guard(p)
    cols = [s for s in _subsets(range(p)) if s]
    return CandidateSet.from_column_lists(cols, intercept=False)
