"""Quadratic homogeneous maps and their conjugacy operators.

A 2-homogeneous map ``p`` of C^d is stored as a complex coefficient vector
over the index set (see :mod:`jetconj.poset`); reshaped to ``(d, n_alpha)``
it is the array ``c[i-1, alpha]`` of coefficients of ``z**alpha e_i``.

The conjugacy operator ``A_L p = L^-1 o p o L`` is assembled by expanding
``(Lz)^beta`` monomial by monomial, so that structural zeros (for example
below the diagonal of an upper triangular ``L``) stay exactly zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import solve_triangular

from .bunching import PinchingReport, verify_pinched
from .poset import IndexSet, build_index_set, chain_relation, triangular_mask


@lru_cache(maxsize=None)
def alpha_pairs(d: int) -> np.ndarray:
    """``(n_alpha, 2)`` array of 0-based coordinate pairs ``a <= b`` with
    ``z**alpha = z_a z_b``, aligned with the index-set enumeration."""
    iset = build_index_set(d, 2)
    out = []
    for alpha in iset.alphas:
        idx = [j for j, a in enumerate(alpha) for _ in range(a)]
        out.append(idx)
    arr = np.array(out, dtype=np.int64).reshape(len(iset.alphas), 2)
    arr.setflags(write=False)
    return arr


def monomials(z: np.ndarray) -> np.ndarray:
    """All degree-2 monomials of ``z`` (shape ``(..., d)``) in enumeration order."""
    z = np.asarray(z)
    pr = alpha_pairs(z.shape[-1])
    return z[..., pr[:, 0]] * z[..., pr[:, 1]]


@dataclass(frozen=True, eq=False)
class HomQuadMap:
    d: int
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        n = self.d * self.d * (self.d + 1) // 2
        if c.size != n:
            raise ValueError(f"expected {n} coefficients for d={self.d}, got {c.size}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, d: int) -> "HomQuadMap":
        return cls(d, np.zeros(d * d * (d + 1) // 2, dtype=complex))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "HomQuadMap":
        arr = np.asarray(arr)
        return cls(arr.shape[0], arr.reshape(-1))

    @property
    def iset(self) -> IndexSet:
        return build_index_set(self.d, 2)

    def as_array(self) -> np.ndarray:
        return self.coeffs.reshape(self.d, -1)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return monomials(z) @ self.as_array().T

    def __add__(self, other: "HomQuadMap") -> "HomQuadMap":
        return HomQuadMap(self.d, self.coeffs + other.coeffs)

    def __sub__(self, other: "HomQuadMap") -> "HomQuadMap":
        return HomQuadMap(self.d, self.coeffs - other.coeffs)

    def scale(self, c: complex) -> "HomQuadMap":
        return HomQuadMap(self.d, c * self.coeffs)

    def norm(self) -> float:
        """Maximum coefficient modulus."""
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def precompose(self, lin: np.ndarray) -> "HomQuadMap":
        """``p o L``."""
        return HomQuadMap.from_array(self.as_array() @ substitution_matrix(lin).T)

    def postcompose(self, lin: np.ndarray) -> "HomQuadMap":
        """``L o p``."""
        return HomQuadMap.from_array(np.asarray(lin) @ self.as_array())


def substitution_matrix(lin: np.ndarray) -> np.ndarray:
    """``C[alpha, beta]`` = coefficient of ``z**alpha`` in ``(Lz)**beta``."""
    lin = np.asarray(lin)
    pr = alpha_pairs(lin.shape[0])
    n = pr.shape[0]
    c = np.zeros((n, n), dtype=np.result_type(lin, float))
    for col, (a, b) in enumerate(pr):
        prod = np.outer(lin[a], lin[b])
        sym = prod + prod.T
        # z_m z_n with m < n collects both orderings; z_m^2 only one
        c[:, col] = np.where(pr[:, 0] == pr[:, 1], prod[pr[:, 0], pr[:, 1]], sym[pr[:, 0], pr[:, 1]])
    return c


def _is_upper(m: np.ndarray) -> bool:
    return not np.any(np.tril(m, -1))


def _is_permutation(m: np.ndarray) -> bool:
    nz = m != 0
    return bool(np.all(nz.sum(0) == 1) and np.all(nz.sum(1) == 1) and np.all(m[nz] == 1))


def exact_inverse(lin: np.ndarray) -> np.ndarray:
    """Inverse that keeps triangular and permutation structure exact."""
    lin = np.asarray(lin)
    d = lin.shape[0]
    if _is_permutation(lin):
        return lin.T.copy()
    if _is_upper(lin):
        return solve_triangular(lin, np.eye(d, dtype=lin.dtype), lower=False)
    return np.linalg.inv(lin)


def conj_matrix(lin: np.ndarray) -> np.ndarray:
    """Matrix of ``p -> L^-1 o p o L`` on the coefficient space."""
    lin = np.asarray(lin)
    if lin.ndim != 2 or lin.shape[0] != lin.shape[1]:
        raise ValueError("expected a square matrix")
    if abs(np.linalg.det(lin)) < 1e-300:
        raise ValueError("singular linear map")
    return np.kron(exact_inverse(lin), substitution_matrix(lin))


def conj_diagonal(lam: np.ndarray) -> np.ndarray:
    """Closed form ``lambda**(alpha - e_i)`` of the diagonal of ``A_L``."""
    lam = np.asarray(lam)
    iset = build_index_set(lam.shape[0], 2)
    return np.array([np.prod(lam ** np.array(s.alpha)) / lam[s.i - 1] for s in iset.elements])


def projector(d: int) -> np.ndarray:
    """Diagonal 0/1 projector killing the triangular-set coordinates."""
    return np.diag((~triangular_mask(build_index_set(d, 2))).astype(float))


def operator_norm(a: np.ndarray) -> float:
    """Operator norm induced by the max-coefficient norm (maximum row sum)."""
    return float(np.max(np.sum(np.abs(a), axis=1))) if a.size else 0.0


@dataclass(frozen=True)
class PinchedSequence:
    """Deterministic generator of upper triangular linear maps.

    ``profile='random'`` draws diagonal moduli in ``[(1+mu)/M, lam*(1-mu)]``
    with random phases.  ``profile='extremal'`` pins the first diagonal
    entry at ``lam*(1-mu)`` and the rest at ``(1+mu)/M``, which maximises the
    resonant ratio ``lambda_1**2 / lambda_2``.  ``profile='scalar'`` gives
    ``lam*I``.  Off-diagonal entries lie in a disk of radius
    ``offdiag * (1+mu)/M``.
    """

    d: int
    lam: float
    M: float
    seed: int = 0
    mu: float = 0.05
    offdiag: float = 0.1
    profile: str = "random"
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not 0 < self.lam < 1 or self.M <= 1:
            raise ValueError("need 0 < lam < 1 < M")
        if self.lam * self.M < 1:
            raise ValueError("pinching forces lam*M >= 1")
        if self.profile not in ("random", "extremal", "scalar"):
            raise ValueError(f"unknown profile {self.profile!r}")
        lo, hi = (1 + self.mu) / self.M, self.lam * (1 - self.mu)
        if lo > hi:
            raise ValueError("margin mu leaves an empty modulus interval")

    def matrix(self, n: int) -> np.ndarray:
        if n in self._cache:
            return self._cache[n]
        d = self.d
        lo, hi = (1 + self.mu) / self.M, self.lam * (1 - self.mu)
        if self.profile == "scalar":
            out = self.lam * np.eye(d, dtype=complex)
        else:
            rng = np.random.default_rng([self.seed, n])
            if self.profile == "random":
                mod = rng.uniform(lo, hi, size=d)
            else:
                mod = np.full(d, lo)
                mod[0] = hi
            phase = np.exp(2j * np.pi * rng.uniform(size=d))
            out = np.diag(mod * phase)
            iu = np.triu_indices(d, 1)
            r = self.offdiag * lo * np.sqrt(rng.uniform(size=len(iu[0])))
            out[iu] = r * np.exp(2j * np.pi * rng.uniform(size=len(iu[0])))
        self._cache[n] = out
        return out

    def matrices(self, n: int) -> list[np.ndarray]:
        return [self.matrix(j) for j in range(n)]

    def product(self, n: int, start: int = 0) -> np.ndarray:
        """``L_{n,start} = L_{n-1} ... L_start``."""
        out = np.eye(self.d, dtype=complex)
        for j in range(start, n):
            out = self.matrix(j) @ out
        return out

    def verify(self, horizon: int) -> PinchingReport:
        return verify_pinched(self.matrices(horizon), self.lam, self.M)


@dataclass(frozen=True)
class SupportSplit:
    n: int
    m0: np.ndarray
    m1: np.ndarray

    @property
    def norm0(self) -> float:
        return operator_norm(self.m0)

    @property
    def norm1(self) -> float:
        return operator_norm(self.m1)


def decompose(a: np.ndarray, d: int, n: int = 0) -> SupportSplit:
    """Split ``Q A Q`` into its part off the chain relation and its part on it."""
    q = np.diag(projector(d))
    qaq = a * np.outer(q, q)
    w = chain_relation(d).matrix
    return SupportSplit(n=n, m0=np.where(w, 0, qaq), m1=np.where(w, qaq, 0))


def decompose_sequence(seq: PinchedSequence, n: int) -> SupportSplit:
    return decompose(conj_matrix(seq.product(n)), seq.d, n)


def fit_slope(ns, values) -> float:
    """Least-squares slope of ``log(values)`` against ``ns``."""
    ns = np.asarray(ns, dtype=float)
    logs = np.log(np.maximum(np.asarray(values, dtype=float), np.finfo(float).tiny))
    return float(np.polyfit(ns, logs, 1)[0])


@dataclass(frozen=True)
class DecompositionBounds:
    ns: list
    norm0: list
    norm1: list
    slope0: float
    slope1: float

    def rows(self) -> list[dict]:
        return [{"n": n, "norm_m0": a, "norm_m1": b} for n, a, b in zip(self.ns, self.norm0, self.norm1)]


def decomposition_bounds(seq: PinchedSequence, horizon: int, fit_from: int = 5) -> DecompositionBounds:
    """Norms of both parts of the split for ``n = 0..horizon`` and the slopes
    of their logs fitted over ``n >= fit_from``."""
    ns, n0, n1 = [], [], []
    prod = np.eye(seq.d, dtype=complex)
    for n in range(horizon + 1):
        if n:
            prod = seq.matrix(n - 1) @ prod
        sp = decompose(conj_matrix(prod), seq.d, n)
        ns.append(n)
        n0.append(sp.norm0)
        n1.append(sp.norm1)
    lo = min(fit_from, horizon)
    s0 = fit_slope(ns[lo:], n0[lo:]) if horizon - lo >= 1 else float("nan")
    s1 = fit_slope(ns[lo:], n1[lo:]) if horizon - lo >= 1 and seq.d > 1 else float("-inf")
    return DecompositionBounds(ns, n0, n1, s0, s1)


@dataclass(frozen=True)
class NormBoundReport:
    n: int
    norm: float
    bound: float
    ratio: float
    slack: float
    ok: bool


def norm_slack(d: int) -> float:
    """Constant relating the max-norm operator bound to spectral-norm pinching:
    ``|A_L| <= 2 n_alpha sqrt(d) |L|^2 |L^-1|``."""
    return 2.0 * (d * (d + 1) // 2) * np.sqrt(d)


def operator_norm_bound_check(seq: PinchedSequence, n: int, c_const: float | None = None) -> NormBoundReport:
    """Compare ``|A_{L_{n,0}}|`` with ``C^3 (lam^2 M)^n`` times the norm slack."""
    if c_const is None:
        c_const = seq.verify(max(n, 1)).c_measured
    norm = operator_norm(conj_matrix(seq.product(n)))
    bound = c_const ** 3 * (seq.lam ** 2 * seq.M) ** n
    slack = norm_slack(seq.d)
    ratio = norm / bound
    return NormBoundReport(n=n, norm=norm, bound=bound, ratio=ratio, slack=slack, ok=ratio <= slack)
