"""Symbolic side: subshifts of finite type, words, stopping sets, addresses.

Symbols are 0-based integers ``0..N-1`` and words are tuples of them.
``format_word`` renders the 1-based strings used in reports ("12" for
``(0, 1)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import AmbientBox, apply_many

# relative slack for "rho_w < delta" so that products like (1/3)^m compare
# equal to 3**-m despite rounding
REL_TIE = 1e-12


def below(ratio, delta: float):
    """Strict ``ratio < delta`` robust to last-bit rounding."""
    return ratio < delta * (1.0 - REL_TIE)


@dataclass(frozen=True)
class Sft:
    """Subshift of finite type: ``transitions[i][j]`` iff ``j`` may follow ``i``.

    Dead-end symbols (no infinite continuation) are pruned on construction, so
    every admissible finite word extends to an infinite one.
    """

    transitions: tuple[tuple[bool, ...], ...]
    initial: frozenset[int]

    def __post_init__(self):
        T = np.asarray(self.transitions, dtype=bool)
        n = T.shape[0]
        if T.shape != (n, n) or n < 1:
            raise ValueError("transition matrix must be square and nonempty")
        if any(not 0 <= i < n for i in self.initial):
            raise ValueError("initial symbol outside the alphabet")
        alive = np.ones(n, dtype=bool)
        while True:
            keep = alive & (T[:, alive].any(axis=1))
            if np.array_equal(keep, alive):
                break
            alive = keep
        T = T & alive[:, None] & alive[None, :]
        object.__setattr__(self, "transitions", tuple(tuple(bool(v) for v in row) for row in T))
        object.__setattr__(self, "initial", frozenset(i for i in self.initial if alive[i]))

    @classmethod
    def full(cls, n: int) -> "Sft":
        return cls(tuple((True,) * n for _ in range(n)), frozenset(range(n)))

    @classmethod
    def from_matrix(cls, T, initial=None) -> "Sft":
        T = np.asarray(T).astype(bool)
        init = range(T.shape[0]) if initial is None else initial
        return cls(tuple(tuple(bool(v) for v in row) for row in T), frozenset(int(i) for i in init))

    @property
    def alphabet_size(self) -> int:
        return len(self.transitions)

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.transitions, dtype=bool)

    @property
    def is_full(self) -> bool:
        return self.matrix.all() and len(self.initial) == self.alphabet_size

    def admissible(self, word) -> bool:
        if not word or word[0] not in self.initial:
            return False
        T = self.transitions
        return all(T[a][b] for a, b in zip(word, word[1:]))


def golden_mean() -> Sft:
    """The SFT forbidding two consecutive copies of the second symbol."""
    return Sft.from_matrix([[1, 1], [1, 0]])


@dataclass(frozen=True)
class RatioVector:
    ratios: tuple[float, ...]

    def __post_init__(self):
        if not self.ratios:
            raise ValueError("empty ratio vector")
        if any(not 0.0 < r < 1.0 for r in self.ratios):
            raise ValueError("ratios must lie in (0, 1)")

    @classmethod
    def of(cls, *ratios) -> "RatioVector":
        if len(ratios) == 1 and not np.isscalar(ratios[0]):
            ratios = tuple(ratios[0])
        return cls(tuple(float(r) for r in ratios))

    @property
    def rho_min(self) -> float:
        return min(self.ratios)

    @property
    def rho_max(self) -> float:
        return max(self.ratios)

    def __len__(self):
        return len(self.ratios)


def format_word(word) -> str:
    sep = "" if not word or max(word) < 9 else "."
    return sep.join(str(a + 1) for a in word)


def validate_shift_closed(S: Sft) -> list[tuple[int, int]]:
    """Violating pairs ``(i, j)``: ``i`` initial, ``j`` may follow ``i``, ``j`` not initial.

    An empty list means the shift is closed.
    """
    T = S.transitions
    return [(i, j) for i in sorted(S.initial) for j in range(S.alphabet_size)
            if T[i][j] and j not in S.initial]


def _level_array(S: Sft, k: int) -> np.ndarray:
    """All admissible words of length ``k`` as a ``(count, k)`` int array, lexicographic."""
    T = S.matrix
    words = np.array(sorted(S.initial), dtype=np.int64).reshape(-1, 1)
    for _ in range(k - 1):
        if len(words) == 0:
            break
        parent, child = np.nonzero(T[words[:, -1]])
        words = np.hstack([words[parent], child[:, None]])
    return words


def level_words(S: Sft, k: int) -> list[tuple[int, ...]]:
    if k <= 0:
        raise ValueError("word length must be positive")
    return [tuple(int(a) for a in w) for w in _level_array(S, k)]


def word_ratio(r: RatioVector, word) -> float:
    return math.prod(r.ratios[a] for a in word)


def _frontier(S: Sft, r: RatioVector, delta: float):
    """Depth-first walk yielding ``(word, ratio, crossed)`` in lexicographic order.

    A word is yielded with ``crossed=True`` the first time its ratio drops
    below ``delta``; it is not extended further.
    """
    T = S.transitions
    stack = [((i,), r.ratios[i]) for i in sorted(S.initial, reverse=True)]
    while stack:
        word, rho = stack.pop()
        if below(rho, delta):
            yield word, rho, True
            continue
        yield word, rho, False
        last = word[-1]
        for j in range(S.alphabet_size - 1, -1, -1):
            if T[last][j]:
                stack.append((word + (j,), rho * r.ratios[j]))


def stopping_set(S: Sft, r: RatioVector, delta: float) -> list[tuple[int, ...]]:
    """The delta-stopping words: ratio below ``delta``, parent's ratio not below it.

    The empty word counts as ratio 1.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    if len(r) != S.alphabet_size:
        raise ValueError("ratio vector and SFT alphabet differ in size")
    return [w for w, _, crossed in _frontier(S, r, delta) if crossed]


def words_with_ratio_at_least(S: Sft, r: RatioVector, delta: float) -> list[tuple[int, ...]]:
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if len(r) != S.alphabet_size:
        raise ValueError("ratio vector and SFT alphabet differ in size")
    return [w for w, _, crossed in _frontier(S, r, delta) if not crossed]


def code_metric(r: RatioVector, w, v) -> float:
    """Ratio product along the common prefix; 1 if first symbols differ, 0 if equal."""
    w, v = tuple(w), tuple(v)
    if w == v:
        return 0.0
    k = 0
    for a, b in zip(w, v):
        if a != b:
            break
        k += 1
    if k == 0:
        return 1.0
    return word_ratio(r, w[:k])


def theta(maps, word, x0, ambient: AmbientBox) -> tuple[tuple[float, ...], float]:
    """Approximate the address point of any infinite extension of ``word``.

    Returns ``f_word(x0)`` and an error bound ``rho_word * diam(ambient)``.
    """
    if any(not 0 <= a < len(maps) for a in word):
        raise ValueError("word uses a symbol with no map")
    x = np.asarray(x0, dtype=float).reshape(1, -1)
    rho = 1.0
    for a in reversed(word):
        x = apply_many(maps[a], x)
        rho *= maps[a].ratio
    return tuple(float(v) for v in x[0]), rho * ambient.diameter


def sample_admissible(S: Sft, length: int, count: int, seed: int) -> list[tuple[int, ...]]:
    """Random admissible words; each next symbol uniform over allowed successors."""
    if length < 1 or count < 1:
        raise ValueError("length and count must be positive")
    if not S.initial:
        raise ValueError("SFT has no admissible words")
    rng = np.random.default_rng(seed)
    T = S.matrix
    succ = [np.nonzero(T[i])[0] for i in range(S.alphabet_size)]
    init = np.array(sorted(S.initial))
    out = []
    for _ in range(count):
        w = [int(rng.choice(init))]
        for _ in range(length - 1):
            options = succ[w[-1]]
            if len(options) == 0:
                raise ValueError(f"dead end at symbol {w[-1] + 1}")
            w.append(int(rng.choice(options)))
        out.append(tuple(w))
    return out


def stopping_prefixes(word, stops: set) -> list[int]:
    """Lengths ``n`` for which ``word[:n]`` belongs to the set ``stops``."""
    return [n for n in range(1, len(word) + 1) if tuple(word[:n]) in stops]
