"""The permutation word that kills chains through the resonant set.

Alternating the chain relation with the index action of a suitable sequence
of cyclic permutations yields the empty relation.  Matrices supported on
the chain relation, interleaved with the conjugacy operators of the
corresponding permutation matrices, therefore multiply to zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .poset import BasisIndex, Permutation, Relation, action_relation, build_index_set, chain_relation
from .polyspace import conj_matrix


def word_lengths(d: int) -> tuple[int, ...]:
    """Cycle lengths: ``(2..d-1) ++ word(d-1) ++ (d)``; empty for d = 1."""
    if d <= 1:
        return ()
    if d == 2:
        return (2,)
    return tuple(range(2, d)) + word_lengths(d - 1) + (d,)


@dataclass(frozen=True)
class PermWord:
    d: int
    lengths: tuple[int, ...]
    word: tuple[Permutation, ...]

    def __len__(self) -> int:
        return len(self.word)


def build_word(d: int) -> PermWord:
    if d < 1:
        raise ValueError("d must be >= 1")
    lengths = word_lengths(d)
    return PermWord(d, lengths, tuple(Permutation.cycle(h, d) for h in lengths))


@dataclass(frozen=True)
class RelationCheck:
    d: int
    ok: bool
    relation: Relation
    witness: tuple[BasisIndex, BasisIndex] | None


def composed_relation(d: int, perms=None) -> Relation:
    """``W o s_N o W o ... o s_1 o W`` for the given permutations
    (the full word by default)."""
    if perms is None:
        perms = build_word(d).word
    iset = build_index_set(d, 2)
    w = chain_relation(d)
    rel = w
    for sigma in perms:
        rel = w @ action_relation(iset, sigma) @ rel
    return rel


def verify_word_relation(d: int, perms=None) -> RelationCheck:
    rel = composed_relation(d, perms)
    witness = None
    if not rel.is_empty():
        witness = min(rel.pairs)
    return RelationCheck(d, witness is None, rel, witness)


def random_supported(mask: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Complex matrix with entries uniform in the unit disk on ``mask``, zero elsewhere."""
    r = np.sqrt(rng.uniform(size=mask.shape))
    z = r * np.exp(2j * np.pi * rng.uniform(size=mask.shape))
    return np.where(mask, z, 0)


def word_product(factors, perms) -> np.ndarray:
    """``M_0 A_{U_s1} M_1 ... A_{U_sN} M_N``."""
    out = factors[0]
    for sigma, m in zip(perms, factors[1:]):
        out = out @ conj_matrix(sigma.matrix()) @ m
    return out


@dataclass(frozen=True)
class MatrixCheck:
    d: int
    trials: int
    ok: bool
    max_entry: float
    tol: float


def verify_word_matrices(d: int, trials: int = 100, seed: int = 0, tol: float = 1e-12,
                         all_ones: bool = False) -> MatrixCheck:
    """Multiply random chain-supported matrices through the word and report
    the largest entry of the product."""
    if d < 2:
        raise ValueError("d must be >= 2")
    word = build_word(d).word
    mask = chain_relation(d).matrix
    worst = 0.0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        if all_ones:
            factors = [mask.astype(complex)] * (len(word) + 1)
        else:
            factors = [random_supported(mask, rng) for _ in range(len(word) + 1)]
        worst = max(worst, float(np.max(np.abs(word_product(factors, word)))))
    return MatrixCheck(d, trials, worst <= tol, worst, tol)
