"""Braid words in B_n: parsing, free reduction, and the word problem.

Words are products of Artin generators read left to right. Equality in the
group is decided by the Garside left normal form Δ^p A_1 ... A_k, where each
A_i is a permutation (simple) braid. Permutation braids are stored by their
strand map: ``perm[j]`` is the final slot of the strand that started in slot
``j`` (0-based internally, 1-based in :class:`Permutation`).

A breadth-first rewriting search (:func:`brute_force_equal`) is kept as an
independent oracle for small words.
"""

from __future__ import annotations

import random
import re
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

Letter = tuple[int, int]


class BraidSyntaxError(ValueError):
    """Malformed braid word text; ``position`` is the 0-based offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class BraidIndexError(ValueError):
    pass


class SearchBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class BraidWord:
    n_strands: int
    letters: tuple[Letter, ...] = ()

    def __post_init__(self):
        if self.n_strands < 2:
            raise BraidIndexError(f"need at least 2 strands, got {self.n_strands}")
        letters = tuple((int(k), int(s)) for k, s in self.letters)
        for k, s in letters:
            if not 1 <= k <= self.n_strands - 1:
                raise BraidIndexError(
                    f"generator index {k} out of range for B_{self.n_strands}")
            if s not in (1, -1):
                raise ValueError(f"letter sign must be +1 or -1, got {s}")
        object.__setattr__(self, "letters", letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: BraidWord) -> BraidWord:
        if other.n_strands != self.n_strands:
            raise ValueError("cannot multiply braids with different strand counts")
        return BraidWord(self.n_strands, self.letters + other.letters)

    def __str__(self) -> str:
        return format_word(self)


@dataclass(frozen=True)
class Permutation:
    """Bijection on {1..n}; ``images[i-1]`` is the end slot of the strand from slot i."""

    images: tuple[int, ...]

    def __post_init__(self):
        images = tuple(int(v) for v in self.images)
        if sorted(images) != list(range(1, len(images) + 1)):
            raise ValueError(f"not a bijection on 1..{len(images)}: {images}")
        object.__setattr__(self, "images", images)

    def then(self, other: Permutation) -> Permutation:
        """Apply ``self`` first, then ``other``."""
        return Permutation(tuple(other.images[i - 1] for i in self.images))


@dataclass(frozen=True)
class NormalForm:
    n_strands: int
    delta_power: int
    factors: tuple[tuple[int, ...], ...]

    def to_word(self) -> BraidWord:
        """A word representing this normal form (Δ^p expanded into letters)."""
        delta = _perm_to_letters(_delta(self.n_strands))
        if self.delta_power >= 0:
            letters = [(k, 1) for k in delta] * self.delta_power
        else:
            inv = [(k, -1) for k in reversed(delta)]
            letters = inv * (-self.delta_power)
        for f in self.factors:
            letters.extend((k, 1) for k in _perm_to_letters(f))
        return BraidWord(self.n_strands, tuple(letters))

    def to_dict(self) -> dict:
        return {
            "delta_power": self.delta_power,
            "factors": [[v + 1 for v in f] for f in self.factors],
        }


# ---------------------------------------------------------------------------
# text I/O

_TOKEN = re.compile(r"s([1-9][0-9]*)(\^(?:-1|\+1))?")


def parse_word(text: str, n_strands: int) -> BraidWord:
    """Parse ``"s1 s2^-1 ..."``; an omitted exponent means +1."""
    letters = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None:
            raise BraidSyntaxError(f"unexpected character {text[pos]!r}", pos)
        end = m.end()
        if end < len(text) and not text[end].isspace() and text[end] != "s":
            raise BraidSyntaxError(f"unexpected character {text[end]!r}", end)
        k = int(m.group(1))
        if k > n_strands - 1:
            raise BraidIndexError(
                f"generator s{k} out of range for B_{n_strands} (position {pos})")
        sign = -1 if m.group(2) == "^-1" else 1
        letters.append((k, sign))
        pos = end
    return BraidWord(n_strands, tuple(letters))


def format_word(w: BraidWord) -> str:
    return " ".join(f"s{k}" if s > 0 else f"s{k}^-1" for k, s in w.letters)


# ---------------------------------------------------------------------------
# elementary operations

def free_reduce(w: BraidWord) -> BraidWord:
    stack: list[Letter] = []
    for k, s in w.letters:
        if stack and stack[-1] == (k, -s):
            stack.pop()
        else:
            stack.append((k, s))
    return BraidWord(w.n_strands, tuple(stack))


def inverse_word(w: BraidWord) -> BraidWord:
    return BraidWord(w.n_strands, tuple((k, -s) for k, s in reversed(w.letters)))


def exponent_sum(w: BraidWord) -> int:
    return sum(s for _, s in w.letters)


def endpoint_permutation(w: BraidWord) -> Permutation:
    """Slot permutation induced by ``w``; letters act left to right, signs ignored."""
    perm = list(range(w.n_strands))
    for k, _ in w.letters:
        perm = _swap_slots(perm, k - 1)
    return Permutation(tuple(v + 1 for v in perm))


def random_word(n_strands: int, length: int, seed: int) -> BraidWord:
    rng = random.Random(seed)
    letters = tuple((rng.randint(1, n_strands - 1), rng.choice((1, -1)))
                    for _ in range(length))
    return BraidWord(n_strands, letters)


# ---------------------------------------------------------------------------
# permutation braids (0-based strand maps)

def _swap_slots(perm: Sequence[int], i: int) -> list[int]:
    """Compose a strand map with the swap of slots i, i+1 applied afterwards."""
    out = list(perm)
    for j, v in enumerate(out):
        if v == i:
            out[j] = i + 1
        elif v == i + 1:
            out[j] = i
    return out


def _identity(n: int) -> tuple[int, ...]:
    return tuple(range(n))


def _delta(n: int) -> tuple[int, ...]:
    return tuple(range(n - 1, -1, -1))


def _compose(first: Sequence[int], second: Sequence[int]) -> tuple[int, ...]:
    return tuple(second[v] for v in first)


def _inverse(perm: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(perm)
    for j, v in enumerate(perm):
        inv[v] = j
    return tuple(inv)


def _starting_set(perm: Sequence[int]) -> set[int]:
    # strands starting in slots i, i+1 cross inside the permutation braid
    return {i for i in range(len(perm) - 1) if perm[i] > perm[i + 1]}


def _finishing_set(perm: Sequence[int]) -> set[int]:
    inv = _inverse(perm)
    return {i for i in range(len(perm) - 1) if inv[i] > inv[i + 1]}


def _tau(perm: Sequence[int]) -> tuple[int, ...]:
    """Conjugation by Δ (sends σ_i to σ_{n-i})."""
    n = len(perm)
    return tuple(n - 1 - perm[n - 1 - j] for j in range(n))


def _perm_to_letters(perm: Sequence[int]) -> list[int]:
    """Positive word (1-based indices) of the permutation braid, via bubble sort."""
    n = len(perm)
    current = list(range(n))
    word = []
    changed = True
    while changed:
        changed = False
        for i in range(n - 1):
            a, b = current[i], current[i + 1]
            if perm[a] > perm[b]:
                current[i], current[i + 1] = b, a
                word.append(i + 1)
                changed = True
    return word


def _left_weight(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Move generators from the front of ``b`` to the back of ``a`` until S(b) ⊆ F(a)."""
    while True:
        extra = _starting_set(b) - _finishing_set(a)
        if not extra:
            return a, b
        i = min(extra)
        a = tuple(_swap_slots(a, i))
        swap = _swap_slots(_identity(len(a)), i)
        b = _compose(swap, b)


def _append_simple(power: int, factors: list[tuple[int, ...]], x: tuple[int, ...], n: int):
    factors = factors + [x]
    for j in range(len(factors) - 1, 0, -1):
        factors[j - 1], factors[j] = _left_weight(factors[j - 1], factors[j])
    delta = _delta(n)
    ident = _identity(n)
    while factors and factors[0] == delta:
        factors.pop(0)
        power += 1
    while factors and factors[-1] == ident:
        factors.pop()
    return power, factors


def left_normal_form(w: BraidWord) -> NormalForm:
    n = w.n_strands
    power = 0
    factors: list[tuple[int, ...]] = []
    delta = _delta(n)
    for k, s in w.letters:
        gen = tuple(_swap_slots(_identity(n), k - 1))
        if s > 0:
            power, factors = _append_simple(power, factors, gen, n)
        else:
            # σ_k^-1 = Δ^-1 · (Δ σ_k^-1), and A Δ^-1 = Δ^-1 τ(A)
            complement = _compose(delta, gen)
            power -= 1
            factors = [_tau(f) for f in factors]
            power, factors = _append_simple(power, factors, complement, n)
    return NormalForm(n, power, tuple(factors))


def words_equal(w1: BraidWord, w2: BraidWord) -> bool:
    if w1.n_strands != w2.n_strands:
        raise ValueError(
            f"strand counts differ: {w1.n_strands} vs {w2.n_strands}")
    return left_normal_form(w1) == left_normal_form(w2)


# ---------------------------------------------------------------------------
# brute-force oracle

def _rewrites(word: tuple[Letter, ...], n: int, max_len: int) -> Iterable[tuple[Letter, ...]]:
    L = len(word)
    for i in range(L - 1):
        (a, sa), (b, sb) = word[i], word[i + 1]
        if a == b and sa == -sb:
            yield word[:i] + word[i + 2:]
        if abs(a - b) >= 2:
            yield word[:i] + (word[i + 1], word[i]) + word[i + 2:]
    for i in range(L - 2):
        (a, sa), (b, sb), (c, sc) = word[i:i + 3]
        if a == c and abs(a - b) == 1 and sa == sb == sc:
            yield word[:i] + ((b, sa), (a, sa), (b, sa)) + word[i + 3:]
    if L + 2 <= max_len:
        for i in range(L + 1):
            for k in range(1, n):
                for s in (1, -1):
                    yield word[:i] + ((k, s), (k, -s)) + word[i:]


def brute_force_equal(w1: BraidWord, w2: BraidWord, max_len: int, budget: int = 200_000) -> bool:
    """Search for a rewrite path from ``w1 · w2^-1`` to the empty word.

    Returns True when a path is found and False once every word of length
    at most ``max_len`` reachable by the moves has been visited. Raises
    :class:`SearchBudgetExceeded` if more than ``budget`` words are seen.
    """
    if w1.n_strands != w2.n_strands:
        raise ValueError("strand counts differ")
    n = w1.n_strands
    start = (w1 * inverse_word(w2)).letters
    if len(start) > max_len:
        raise ValueError(f"combined length {len(start)} exceeds max_len {max_len}")
    seen = {start}
    queue = deque([start])
    while queue:
        word = queue.popleft()
        if not word:
            return True
        for nxt in _rewrites(word, n, max_len):
            if nxt not in seen:
                if not nxt:
                    return True
                seen.add(nxt)
                if len(seen) > budget:
                    raise SearchBudgetExceeded(
                        f"visited more than {budget} words without a decision")
                queue.append(nxt)
    return False
