"""Index combinatorics for spaces of homogeneous polynomial maps.

The standard basis of the space of k-homogeneous maps of C^d is indexed by
pairs ``(alpha, i)`` where ``alpha`` is a multi-index of degree k and ``i`` is
the target coordinate (1-based).  This module provides that index set, the
product partial order on it, the triangular and resonant subsets, the
resonant chain relation, and the permutation action.  Everything here is
exact: sets are boolean masks over a fixed enumeration, relations are dense
boolean matrices.

Relation conventions follow the matrix-support picture: the pair ``(s, t)``
belongs to the support of a matrix ``A`` when the coefficient of ``v_s`` in
``A v_t`` is nonzero.  Composition ``R o S`` is ``{(s, u) : (s, t) in S and
(t, u) in R}``, so that ``supp(A @ B)`` is contained in ``supp(B) o supp(A)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import combinations_with_replacement
from typing import Iterable, Iterator

import numpy as np


@dataclass(frozen=True, order=True)
class BasisIndex:
    """The basis element ``z**alpha * e_i``; ``i`` is 1-based."""

    alpha: tuple[int, ...]
    i: int

    @property
    def degree(self) -> int:
        return sum(self.alpha)

    def to_json(self) -> dict:
        return {"alpha": list(self.alpha), "i": self.i}

    def __str__(self) -> str:
        return f"({','.join(map(str, self.alpha))};{self.i})"


def multi_indices(d: int, k: int) -> list[tuple[int, ...]]:
    """All alpha in N^d with |alpha| = k, in decreasing lexicographic order.

    For k = 2 and d = 2 this is ``(2,0), (1,1), (0,2)``.
    """
    out = []
    for combo in combinations_with_replacement(range(d), k):
        alpha = [0] * d
        for j in combo:
            alpha[j] += 1
        out.append(tuple(alpha))
    return out


@dataclass(frozen=True, eq=False)
class IndexSet:
    """Canonically enumerated basis indices of the k-homogeneous maps of C^d.

    Enumeration order: target coordinate ``i`` ascending (outer), then
    ``alpha`` in decreasing lexicographic order (inner).  Coefficient
    vectors and operator matrices elsewhere in the package use this layout,
    which makes a coefficient vector reshape to a ``(d, n_alpha)`` array.
    """

    d: int
    k: int
    elements: tuple[BasisIndex, ...]
    alphas: tuple[tuple[int, ...], ...]
    position: dict = field(repr=False)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[BasisIndex]:
        return iter(self.elements)

    def __getitem__(self, pos: int) -> BasisIndex:
        return self.elements[pos]

    def index(self, s: BasisIndex) -> int:
        return self.position[s]

    @cached_property
    def alpha_array(self) -> np.ndarray:
        """Integer array of shape (len, d) holding the multi-indices."""
        return np.array([s.alpha for s in self.elements], dtype=np.int64).reshape(len(self), self.d)

    @cached_property
    def target_array(self) -> np.ndarray:
        return np.array([s.i for s in self.elements], dtype=np.int64)

    @cached_property
    def leq_matrix(self) -> np.ndarray:
        """``leq_matrix[s, t]`` is True iff ``s <= t`` in the product order."""
        prefix = np.cumsum(self.alpha_array, axis=1)
        tgt = self.target_array
        leq_alpha = np.all(prefix[:, None, :] <= prefix[None, :, :], axis=2)
        out = leq_alpha & (tgt[:, None] <= tgt[None, :])
        out.setflags(write=False)
        return out

    def mask(self, subset: Iterable[BasisIndex]) -> np.ndarray:
        m = np.zeros(len(self), dtype=bool)
        for s in subset:
            m[self.position[s]] = True
        return m

    def subset(self, mask: np.ndarray) -> frozenset[BasisIndex]:
        return frozenset(self.elements[p] for p in np.flatnonzero(mask))


@lru_cache(maxsize=None)
def build_index_set(d: int, k: int = 2) -> IndexSet:
    if d < 1 or k < 1:
        raise ValueError(f"need d >= 1 and k >= 1, got d={d}, k={k}")
    alphas = tuple(multi_indices(d, k))
    elements = tuple(BasisIndex(a, i) for i in range(1, d + 1) for a in alphas)
    position = {s: p for p, s in enumerate(elements)}
    return IndexSet(d=d, k=k, elements=elements, alphas=alphas, position=position)


def leq(s: BasisIndex, t: BasisIndex) -> bool:
    """Product order: ``i <= j`` and every prefix sum of alpha is <= that of beta."""
    if s.i > t.i:
        return False
    ps = pt = 0
    for a, b in zip(s.alpha, t.alpha):
        ps += a
        pt += b
        if ps > pt:
            return False
    return True


def up_closure_mask(iset: IndexSet, mask: np.ndarray) -> np.ndarray:
    return np.any(iset.leq_matrix[mask], axis=0)


def up_closure(iset: IndexSet, subset: Iterable[BasisIndex]) -> frozenset[BasisIndex]:
    """All indices lying above some element of ``subset``."""
    return iset.subset(up_closure_mask(iset, iset.mask(subset)))


def triangular_mask(iset: IndexSet) -> np.ndarray:
    """Indices ``(alpha, i)`` with ``alpha_j = 0`` for all ``j <= i``.

    These span the strictly upper triangular homogeneous maps.
    """
    a = iset.alpha_array
    cols = np.arange(1, iset.d + 1)
    below = cols[None, :] <= iset.target_array[:, None]
    return ~np.any((a > 0) & below, axis=1)


def resonant_mask(iset: IndexSet) -> np.ndarray:
    """Indices ``(alpha, i)`` with ``alpha_i = 0`` (degree 2 only)."""
    if iset.k != 2:
        raise NotImplementedError("the resonant set is only defined in degree 2")
    rows = np.arange(len(iset))
    return iset.alpha_array[rows, iset.target_array - 1] == 0


def triangular_set(d: int) -> frozenset[BasisIndex]:
    iset = build_index_set(d, 2)
    return iset.subset(triangular_mask(iset))


def resonant_set(d: int) -> frozenset[BasisIndex]:
    iset = build_index_set(d, 2)
    return iset.subset(resonant_mask(iset))


@dataclass(frozen=True, eq=False)
class Relation:
    """A relation on an index set, stored as a dense boolean matrix."""

    iset: IndexSet
    matrix: np.ndarray

    @classmethod
    def empty(cls, iset: IndexSet) -> "Relation":
        return cls(iset, np.zeros((len(iset), len(iset)), dtype=bool))

    @classmethod
    def from_pairs(cls, iset: IndexSet, pairs: Iterable[tuple[BasisIndex, BasisIndex]]) -> "Relation":
        m = np.zeros((len(iset), len(iset)), dtype=bool)
        for s, t in pairs:
            m[iset.index(s), iset.index(t)] = True
        return cls(iset, m)

    @classmethod
    def support(cls, iset: IndexSet, mat: np.ndarray) -> "Relation":
        """Support of a matrix, read as a relation."""
        return cls(iset, np.asarray(mat) != 0)

    @property
    def pairs(self) -> frozenset[tuple[BasisIndex, BasisIndex]]:
        el = self.iset.elements
        return frozenset((el[a], el[b]) for a, b in zip(*np.nonzero(self.matrix)))

    def __len__(self) -> int:
        return int(self.matrix.sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Relation):
            return NotImplemented
        return self.iset is other.iset and bool(np.array_equal(self.matrix, other.matrix))

    def __hash__(self) -> int:
        return hash((self.iset.d, self.iset.k, self.matrix.tobytes()))

    def is_empty(self) -> bool:
        return not self.matrix.any()

    def issubset(self, other: "Relation") -> bool:
        return not np.any(self.matrix & ~other.matrix)

    def compose(self, other: "Relation") -> "Relation":
        """``self o other``: first ``other``, then ``self``."""
        prod = other.matrix.astype(np.int64) @ self.matrix.astype(np.int64)
        return Relation(self.iset, prod > 0)

    __matmul__ = compose

    def image_mask(self, mask: np.ndarray) -> np.ndarray:
        return np.any(self.matrix[mask], axis=0)

    def image(self, subset: Iterable[BasisIndex]) -> frozenset[BasisIndex]:
        return self.iset.subset(self.image_mask(self.iset.mask(subset)))


def order_relation(iset: IndexSet) -> Relation:
    return Relation(iset, iset.leq_matrix.copy())


@lru_cache(maxsize=None)
def chain_relation(d: int) -> Relation:
    """Pairs ``(s, t)`` with ``s`` outside the triangular set and a resonant
    index ``r`` with ``s <= r <= t``."""
    iset = build_index_set(d, 2)
    leqm = iset.leq_matrix
    res = resonant_mask(iset)
    tri = triangular_mask(iset)
    m = np.zeros((len(iset), len(iset)), dtype=bool)
    for p in np.flatnonzero(~tri):
        m[p] = up_closure_mask(iset, res & leqm[p])
    m.setflags(write=False)
    return Relation(iset, m)


def max_chain_length(iset: IndexSet) -> int:
    """Maximal cardinality of a chain in ``(H, <=)`` by longest-path DP."""
    n = len(iset)
    if n == 0:
        return 0
    lt = iset.leq_matrix & ~np.eye(n, dtype=bool)
    # a strict chain strictly increases this key, so sorting by it is a linear extension
    key = np.cumsum(iset.alpha_array, axis=1).sum(axis=1) + iset.target_array
    best = np.ones(n, dtype=np.int64)
    for t in np.argsort(key, kind="stable"):
        below = lt[:, t]
        if below.any():
            best[t] = best[below].max() + 1
    return int(best.max())


@dataclass(frozen=True)
class Permutation:
    """A permutation of {1..d} in array form: ``images[j-1] = sigma(j)``."""

    images: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.images) != list(range(1, len(self.images) + 1)):
            raise ValueError(f"not a permutation of 1..{len(self.images)}: {self.images}")

    @classmethod
    def identity(cls, d: int) -> "Permutation":
        return cls(tuple(range(1, d + 1)))

    @classmethod
    def cycle(cls, h: int, d: int) -> "Permutation":
        """The cycle ``(1, 2, ..., h)`` acting on {1..d}."""
        if not 1 <= h <= d:
            raise ValueError(f"cycle length {h} out of range for d={d}")
        images = list(range(1, d + 1))
        for j in range(1, h + 1):
            images[j - 1] = j % h + 1
        return cls(tuple(images))

    @property
    def d(self) -> int:
        return len(self.images)

    def __call__(self, j: int) -> int:
        return self.images[j - 1]

    def __matmul__(self, other: "Permutation") -> "Permutation":
        """Composition ``self o other`` (apply ``other`` first)."""
        return Permutation(tuple(self(other(j)) for j in range(1, self.d + 1)))

    def inverse(self) -> "Permutation":
        inv = [0] * self.d
        for j, img in enumerate(self.images, start=1):
            inv[img - 1] = j
        return Permutation(tuple(inv))

    def is_identity(self) -> bool:
        return self.images == tuple(range(1, self.d + 1))

    def matrix(self) -> np.ndarray:
        """The permutation matrix sending ``e_j`` to ``e_sigma(j)``."""
        u = np.zeros((self.d, self.d))
        for j, img in enumerate(self.images):
            u[img - 1, j] = 1.0
        return u


def act(sigma: Permutation, s: BasisIndex) -> BasisIndex:
    """``sigma . (alpha, i) = (alpha o sigma^-1, sigma(i))``."""
    alpha = [0] * sigma.d
    for j, a in enumerate(s.alpha, start=1):
        alpha[sigma(j) - 1] = a
    return BasisIndex(tuple(alpha), sigma(s.i))


def act_set(sigma: Permutation, subset: Iterable[BasisIndex]) -> frozenset[BasisIndex]:
    return frozenset(act(sigma, s) for s in subset)


def action_relation(iset: IndexSet, sigma: Permutation) -> Relation:
    """Graph ``{(s, sigma.s)}`` of the index action; equals the support of
    the conjugacy operator by ``U_sigma``."""
    m = np.zeros((len(iset), len(iset)), dtype=bool)
    for p, s in enumerate(iset.elements):
        m[p, iset.index(act(sigma, s))] = True
    return Relation(iset, m)


def poset_summary(d: int) -> dict:
    """JSON-ready dump of the index set, its order, the triangular and
    resonant sets and the chain relation.  Indices are ``{"alpha", "i"}``
    objects and relations are lists of ``[s, t]`` pairs of such objects."""
    iset = build_index_set(d, 2)
    els = iset.elements
    objs = lambda mask: [els[p].to_json() for p in np.flatnonzero(mask)]  # noqa: E731
    pairs = lambda m: [[els[a].to_json(), els[b].to_json()] for a, b in zip(*np.nonzero(m))]  # noqa: E731
    return {
        "d": d,
        "k": 2,
        "elements": [s.to_json() for s in els],
        "triangular": objs(triangular_mask(iset)),
        "resonant": objs(resonant_mask(iset)),
        "chain_relation": pairs(chain_relation(d).matrix),
        "order": pairs(iset.leq_matrix),
        "max_chain_length": max_chain_length(iset),
    }
