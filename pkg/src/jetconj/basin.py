"""Special triangular automorphisms and numerical basin-of-attraction scans.

A special triangular automorphism is ``z -> L z + p(z)`` with ``L`` upper
triangular and ``p_j`` a polynomial in ``z_{j+1}, ..., z_d`` without
constant or linear terms.  Compositions stay in the class, inverses are
obtained by back substitution.

Orbits of sequences that interleave such maps with linear automorphisms
can pass through transients far beyond any floating point range before
converging (``log|z|`` in the thousands and more).  Scans therefore store
each coordinate as a unit phase times ``exp(log-magnitude)``, with the
log-magnitude a float64, and evaluate polynomial maps term by term in that
form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .nilpotency import build_word

Poly = dict  # exponent tuple -> coefficient


def stable_degree(d: int, degree2: bool = True) -> tuple[tuple[int, ...], int]:
    """Weights ``k_j = 2**(d-j)`` and the stable degree ``K = 2**(d-1)``."""
    if not degree2:
        raise NotImplementedError("weights are only tabulated for quadratic parts")
    w = tuple(2 ** (d - j) for j in range(1, d + 1))
    return w, w[0]


# --- small sparse polynomial arithmetic -----------------------------------

def _padd(a: Poly, b: Poly, scale: complex = 1.0) -> Poly:
    out = dict(a)
    for e, c in b.items():
        out[e] = out.get(e, 0) + scale * c
    return {e: c for e, c in out.items() if c != 0}


def _pmul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
    return {e: c for e, c in out.items() if c != 0}


def _substitute(p: Poly, comps: Sequence[Poly], d: int) -> Poly:
    """``p(q_1, ..., q_d)``."""
    out: Poly = {}
    for e, c in p.items():
        term: Poly = {(0,) * d: c}
        for var, k in enumerate(e):
            for _ in range(k):
                term = _pmul(term, comps[var])
        out = _padd(out, term)
    return out


def _linear_polys(lin: np.ndarray) -> list[Poly]:
    d = lin.shape[0]
    out = []
    for j in range(d):
        out.append({tuple(int(m == k) for m in range(d)): lin[j, k] for k in range(d) if lin[j, k] != 0})
    return out


@dataclass(frozen=True, eq=False)
class TriangularAuto:
    """``z -> L z + p(z)``; ``p[j]`` maps exponent tuples to coefficients."""

    linear: np.ndarray
    p: tuple

    def __post_init__(self) -> None:
        lin = np.asarray(self.linear, dtype=complex)
        object.__setattr__(self, "linear", lin)
        d = lin.shape[0]
        if np.any(np.tril(lin, -1)):
            raise ValueError("linear part must be upper triangular")
        if np.any(np.diag(lin) == 0):
            raise ValueError("linear part must be invertible")
        if len(self.p) != d:
            raise ValueError("need one polynomial per coordinate")
        for j, pj in enumerate(self.p):
            for e in pj:
                if sum(e) < 2:
                    raise ValueError("p must have no constant or linear terms")
                if any(e[: j + 1]):
                    raise ValueError(f"component {j + 1} may only depend on later variables")

    @property
    def d(self) -> int:
        return self.linear.shape[0]

    @classmethod
    def from_quadratic(cls, lin: np.ndarray, quad: np.ndarray) -> "TriangularAuto":
        """From a ``(d, n_alpha)`` coefficient array supported in the triangular set."""
        from .polyspace import alpha_pairs

        lin = np.asarray(lin)
        d = lin.shape[0]
        pr = alpha_pairs(d)
        polys = []
        for j in range(d):
            pj = {}
            for col, (a, b) in enumerate(pr):
                c = quad[j, col]
                if c != 0:
                    e = [0] * d
                    e[a] += 1
                    e[b] += 1
                    pj[tuple(e)] = complex(c)
            polys.append(pj)
        return cls(lin, tuple(polys))

    @property
    def degree(self) -> int:
        return max((sum(e) for pj in self.p for e in pj), default=1)

    def weighted_degrees(self, weights: Sequence[int]) -> list[int]:
        """``max`` over monomials of ``p_j`` of ``sum e_m k_m``."""
        return [max((sum(a * k for a, k in zip(e, weights)) for e in pj), default=0) for pj in self.p]

    def satisfies_weights(self, weights: Sequence[int]) -> bool:
        return all(w <= k for w, k in zip(self.weighted_degrees(weights), weights))

    def _compiled(self):
        cache = self.__dict__.get("_cc")
        if cache is None:
            exps = sorted({e for pj in self.p for e in pj})
            E = np.array(exps, dtype=np.int64).reshape(len(exps), self.d)
            C = np.zeros((self.d, len(exps)), dtype=complex)
            for j, pj in enumerate(self.p):
                for col, e in enumerate(exps):
                    C[j, col] = pj.get(e, 0)
            cache = (E, C)
            object.__setattr__(self, "_cc", cache)
        return cache

    def __call__(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z)
        E, C = self._compiled()
        out = np.einsum("jk,...k->...j", self.linear.astype(z.dtype), z)
        if E.shape[0]:
            mon = np.prod(z[..., None, :] ** E, axis=-1)
            out = out + np.einsum("jm,...m->...j", C.astype(z.dtype), mon)
        return out

    def inverse_apply(self, w: np.ndarray) -> np.ndarray:
        """Solve ``self(z) = w`` by back substitution from the last coordinate."""
        w = np.asarray(w)
        z = np.zeros_like(w)
        L = self.linear.astype(w.dtype)
        for j in range(self.d - 1, -1, -1):
            acc = w[..., j] - np.einsum("k,...k->...", L[j, j + 1:], z[..., j + 1:])
            for e, c in self.p[j].items():
                acc = acc - c * np.prod(z ** np.array(e), axis=-1)
            z[..., j] = acc / L[j, j]
        return z

    def compose(self, other: "TriangularAuto") -> "TriangularAuto":
        """``self o other``."""
        d = self.d
        inner = [_padd(lp, qp) for lp, qp in zip(_linear_polys(other.linear), other.p)]
        polys = []
        for j in range(d):
            pj: Poly = {}
            for k in range(j, d):
                if self.linear[j, k] != 0:
                    pj = _padd(pj, other.p[k], self.linear[j, k])
            pj = _padd(pj, _substitute(self.p[j], inner, d))
            polys.append({e: c for e, c in pj.items() if sum(e) >= 2})
        return TriangularAuto(self.linear @ other.linear, tuple(polys))

    __matmul__ = compose


def random_triangular(d: int, rng: np.random.Generator, lam_range=(0.2, 0.5),
                      coeff_radius: float = 1.0, offdiag: float = 0.1) -> TriangularAuto:
    """Quadratic special triangular map with diagonal moduli in ``lam_range``,
    random phases and quadratic coefficients uniform in a disk."""
    lo, hi = lam_range
    lin = np.diag(rng.uniform(lo, hi, d) * np.exp(2j * np.pi * rng.uniform(size=d)))
    iu = np.triu_indices(d, 1)
    lin[iu] = offdiag * lo * np.sqrt(rng.uniform(size=len(iu[0]))) * np.exp(2j * np.pi * rng.uniform(size=len(iu[0])))
    polys = []
    for j in range(d):
        pj = {}
        for a in range(j + 1, d):
            for b in range(a, d):
                e = [0] * d
                e[a] += 1
                e[b] += 1
                pj[tuple(e)] = coeff_radius * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        polys.append(pj)
    return TriangularAuto(lin, tuple(polys))


# --- orbits ---------------------------------------------------------------

@dataclass
class OrbitReport:
    orbit: np.ndarray
    c0: float
    diverged: bool


def iterate_triangular(maps, z: np.ndarray, n: int, lam: float, K: int | None = None,
                       cap: float = 1e150) -> OrbitReport:
    """Orbit ``f_{k,0}(z)`` for ``k <= n`` and the measured constant
    ``C0 = max_k |f_{k,0}(z)| / (lam^k (|z| + |z|^K))``."""
    get = maps if callable(maps) else (lambda k: maps[k])
    z = np.asarray(z, dtype=complex)
    d = z.shape[-1]
    if K is None:
        K = stable_degree(d)[1]
    r0 = float(np.linalg.norm(z))
    orbit = [z]
    c0, diverged = 0.0, False
    cur = z
    for k in range(n):
        cur = get(k)(cur)
        orbit.append(cur)
        nrm = float(np.linalg.norm(cur))
        if not np.isfinite(nrm) or nrm > cap:
            diverged = True
            break
    if r0 > 0 and not diverged:
        logs = [math.log(max(float(np.linalg.norm(o)), 1e-300)) - k * math.log(lam) for k, o in enumerate(orbit)]
        c0 = math.exp(max(logs) - math.log(r0 + r0 ** K))
    return OrbitReport(np.array(orbit), c0, diverged)


@dataclass
class RadiusRecursion:
    log_r: list
    verdict: str
    epochs: int


def radius_recursion(C: float, lam: float, K: float, s, r0: float, horizon: int = 60,
                     small: float = 1e-9, big: float = 1e150) -> RadiusRecursion:
    """``r_{h+1} = C lam^{s_h} (r_h + r_h^K)`` in log space.

    ``s`` is a sequence or a callable ``h -> s_h``.  The verdict is the first
    of ``infinitesimal`` (below ``small``) or ``blow-up`` (above ``big``)
    reached within ``horizon`` epochs, else ``undecided``.
    """
    if not 0 < lam < 1 or C <= 0 or K <= 1:
        raise ValueError("need 0 < lam < 1, C > 0, K > 1")
    sget = s if callable(s) else (lambda h: s[h])
    if r0 == 0:
        return RadiusRecursion([-math.inf] * (horizon + 1), "infinitesimal", 0)
    x = math.log(r0)
    logs = [x]
    ls, lb = math.log(small), math.log(big)
    for h in range(horizon):
        if x < ls:
            return RadiusRecursion(logs, "infinitesimal", h)
        if x > lb:
            return RadiusRecursion(logs, "blow-up", h)
        x = math.log(C) + sget(h) * math.log(lam) + np.logaddexp(x, K * x)
        logs.append(float(x))
    verdict = "infinitesimal" if x < ls else "blow-up" if x > lb else "undecided"
    return RadiusRecursion(logs, verdict, horizon)


# --- extended-range (log-polar) evaluation --------------------------------

FLOOR = -1e300  # log-magnitude standing in for an exact zero


def to_polar(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.abs(z)
    nz = a > 0
    phase = np.where(nz, z / np.where(nz, a, 1.0), 0)
    with np.errstate(divide="ignore"):
        logm = np.where(nz, np.log(np.where(nz, a, 1.0)), FLOOR)
    return phase.astype(complex), logm


def from_polar(phase: np.ndarray, logm: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", under="ignore"):
        return phase * np.exp(np.minimum(logm, 709.0))


def polar_norm(logm: np.ndarray) -> np.ndarray:
    """Log of the Euclidean norm along the last axis."""
    top = np.max(logm, axis=-1, keepdims=True)
    return top[..., 0] + 0.5 * np.log(np.sum(np.exp(2 * (logm - top)), axis=-1))


@dataclass(frozen=True)
class PolyTerms:
    """``z -> L z + C mon_E(z)`` with ``mon_E(z)_m = prod_k z_k**E[m, k]``."""

    L: np.ndarray
    E: np.ndarray
    C: np.ndarray

    @classmethod
    def linear(cls, lin: np.ndarray) -> "PolyTerms":
        d = lin.shape[0]
        return cls(np.asarray(lin, dtype=complex), np.zeros((0, d), dtype=np.int64), np.zeros((d, 0), dtype=complex))

    def coefficients(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        cache = self.__dict__.get("_coef")
        if cache is None:
            coef = np.concatenate([self.L, self.C], axis=1)
            a = np.abs(coef)
            with np.errstate(divide="ignore"):
                logc = np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), -np.inf)
            ph = np.where(a > 0, coef / np.where(a > 0, a, 1.0), 0)
            d = self.L.shape[0]
            expo = np.concatenate([np.eye(d, dtype=np.int64), self.E], axis=0)
            cache = (logc, ph, expo)
            object.__setattr__(self, "_coef", cache)
        return cache

    def apply_polar(self, phase: np.ndarray, logm: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        logc, cph, expo = self.coefficients()
        tlog = logm @ expo.T.astype(float)                       # (n, terms)
        tph = np.prod(phase[:, None, :] ** expo[None, :, :], axis=-1)
        sig = logc[None, :, :] + tlog[:, None, :]                 # (n, d, terms)
        top = np.max(sig, axis=-1, keepdims=True)
        top = np.where(np.isfinite(top), top, FLOOR)
        with np.errstate(under="ignore"):
            tot = np.sum(cph[None] * tph[:, None, :] * np.exp(sig - top), axis=-1)
        mag = np.abs(tot)
        nz = mag > 0
        new_phase = np.where(nz, tot / np.where(nz, mag, 1.0), 0)
        with np.errstate(divide="ignore"):
            new_log = np.where(nz, top[..., 0] + np.log(np.where(nz, mag, 1.0)), FLOOR)
        return new_phase, np.maximum(new_log, FLOOR)


def triangular_terms(f: TriangularAuto) -> PolyTerms:
    E, C = f._compiled()
    return PolyTerms(f.linear, E, C)


# --- interleaved sequences and scans --------------------------------------

@dataclass
class InterleavedSequence:
    """``g_n = f_n``, except ``g_{m_h} = f_{m_h} o T_h``.

    ``maps(n)`` returns a :class:`TriangularAuto` (or anything callable on
    arrays of points together with a :class:`PolyTerms` form via
    :func:`triangular_terms`).
    """

    maps: Callable[[int], TriangularAuto]
    epochs: list = field(default_factory=list)
    transforms: list = field(default_factory=list)
    K: int = 1

    def __post_init__(self) -> None:
        if len(self.epochs) != len(self.transforms):
            raise ValueError("need one transform per epoch")
        if any(b <= a for a, b in zip(self.epochs, self.epochs[1:])):
            raise ValueError("epochs must be strictly increasing")
        self._at = {m: np.asarray(t, dtype=complex) for m, t in zip(self.epochs, self.transforms)}
        self._terms: dict = {}

    def step(self, n: int, z: np.ndarray) -> np.ndarray:
        t = self._at.get(n)
        if t is not None:
            z = np.einsum("jk,...k->...j", t.astype(z.dtype), z)
        return self.maps(n)(z)

    def terms(self, n: int) -> list:
        out = self._terms.get(n)
        if out is None:
            out = [triangular_terms(self.maps(n))]
            if n in self._at:
                out.insert(0, PolyTerms.linear(self._at[n]))
            if len(self._terms) < 100000:
                self._terms[n] = out
        return out

    def growth_diagnostics(self) -> dict:
        gaps = [b - a for a, b in zip(self.epochs, self.epochs[1:])]
        partial = np.cumsum([m / self.K ** h for h, m in enumerate(self.epochs)]).tolist() if self.epochs else []
        return {"gaps": gaps, "weighted_partial_sums": partial}


def nilpotency_interleave(d: int, maps: Callable[[int], TriangularAuto], n_epochs: int) -> InterleavedSequence:
    """Epochs ``m_h = D**h - 1`` with ``T_h = U_{sigma_h}`` from the word."""
    D = 2 ** (d - 1)
    word = build_word(d).word
    K = stable_degree(d)[1]
    if not word or n_epochs <= 0:
        return InterleavedSequence(maps, [], [], K)
    epochs = [D ** h - 1 for h in range(n_epochs)]
    transforms = [word[(h - 1) % len(word)].matrix() for h in range(n_epochs)]
    return InterleavedSequence(maps, epochs, transforms, K)


def random_interleaved(d: int, seed: int, lam_range=(0.2, 0.5), coeff_radius: float = 1.0,
                       n_epochs: int = 30) -> InterleavedSequence:
    """Seeded random triangular maps, interleaved with the word permutations
    when ``n_epochs > 0`` (plain sequence otherwise)."""
    from .config import derive_seed

    mseed = derive_seed(seed, "maps")

    @lru_cache(maxsize=None)
    def maps(n: int) -> TriangularAuto:
        return random_triangular(d, np.random.default_rng([mseed, n]), lam_range, coeff_radius)

    return nilpotency_interleave(d, maps, n_epochs)


@dataclass
class QuadraticSequence:
    """Plain sequence of quadratic maps given by ``(linear, (d, n_alpha) quad)`` pairs."""

    linear: list
    quad: list

    def step(self, n: int, z: np.ndarray) -> np.ndarray:
        from .polyspace import monomials

        lin = self.linear[n].astype(z.dtype)
        q = self.quad[n].astype(z.dtype)
        return np.einsum("jk,...k->...j", lin, z) + np.einsum("jm,...m->...j", q, monomials(z))

    def terms(self, n: int) -> list:
        from .polyspace import alpha_pairs

        d = self.linear[n].shape[0]
        pr = alpha_pairs(d)
        E = np.zeros((pr.shape[0], d), dtype=np.int64)
        np.add.at(E, (np.arange(pr.shape[0]), pr[:, 0]), 1)
        np.add.at(E, (np.arange(pr.shape[0]), pr[:, 1]), 1)
        return [PolyTerms(np.asarray(self.linear[n], dtype=complex), E, np.asarray(self.quad[n], dtype=complex))]

    def __len__(self) -> int:
        return len(self.linear)


@dataclass
class SamplingSpec:
    radius: float = 5.0
    per_axis: int = 21
    n_grid: int = 250
    n_far: int = 250
    far_radius: float | None = None
    seed: int = 0


def sample_points(d: int, spec: SamplingSpec) -> np.ndarray:
    """Random nodes of a real grid on ``[-radius, radius]^(2d)`` plus random
    points on the sphere of radius ``far_radius``."""
    rng = np.random.default_rng([spec.seed, d])
    axis = np.linspace(-spec.radius, spec.radius, spec.per_axis)
    idx = rng.integers(0, spec.per_axis, size=(spec.n_grid, 2 * d))
    grid = axis[idx[:, :d]] + 1j * axis[idx[:, d:]]
    far_r = spec.radius if spec.far_radius is None else spec.far_radius
    g = rng.normal(size=(spec.n_far, d)) + 1j * rng.normal(size=(spec.n_far, d))
    far = far_r * g / np.linalg.norm(g, axis=1, keepdims=True)
    return np.concatenate([grid, far]) if spec.n_far else grid


@dataclass
class BasinReport:
    points: np.ndarray
    verdicts: list
    iterations: np.ndarray
    final_norms: np.ndarray
    peak_log_norms: np.ndarray
    eps_conv: float
    max_iter: int

    @property
    def n_points(self) -> int:
        return len(self.verdicts)

    def count(self, verdict: str) -> int:
        return sum(v == verdict for v in self.verdicts)

    @property
    def converged_fraction(self) -> float:
        return self.count("converged") / self.n_points if self.n_points else 1.0

    def rows(self) -> list[dict]:
        out = []
        for z, v, it, fn in zip(self.points, self.verdicts, self.iterations, self.final_norms):
            row = {}
            for j, c in enumerate(z, start=1):
                row[f"re_z{j}"] = float(c.real)
                row[f"im_z{j}"] = float(c.imag)
            row.update(verdict=v, iterations=int(it), final_norm=float(fn))
            out.append(row)
        return out


def basin_scan(seq, points: np.ndarray, eps_conv: float = 1e-9, max_iter: int = 100000,
               log_cap: float = 1e6) -> BasinReport:
    """Iterate every point until its norm drops below ``eps_conv`` (converged),
    exceeds ``exp(log_cap)`` (diverged) or ``max_iter`` steps pass (undecided).

    ``seq.terms(n)`` lists the :class:`PolyTerms` applied, in order, at step
    ``n``.  Arithmetic is log-polar, so ``log_cap`` may be far beyond the
    float range.  Decided points are frozen and dropped from the active set.
    """
    pts = np.asarray(points, dtype=complex)
    npts = pts.shape[0]
    phase, logm = to_polar(pts)
    verdict = np.array(["undecided"] * npts, dtype=object)
    iters = np.full(npts, max_iter, dtype=np.int64)
    final = np.zeros(npts)
    peak = np.full(npts, -np.inf)
    log_eps = math.log(eps_conv)
    active = np.arange(npts)
    lg = polar_norm(logm) if npts else np.zeros(0)
    for n in range(max_iter + 1):
        peak[active] = np.maximum(peak[active], lg)
        conv = lg < log_eps
        div = ~conv & ((lg > log_cap) | np.isnan(lg))
        done = conv | div
        if np.any(done):
            verdict[active[conv]] = "converged"
            verdict[active[div]] = "diverged"
            iters[active[done]] = n
            final[active[done]] = np.exp(np.minimum(lg[done], 709.0))
            keep = ~done
            active, phase, logm, lg = active[keep], phase[keep], logm[keep], lg[keep]
        if active.size == 0 or n == max_iter:
            break
        for t in seq.terms(n):
            phase, logm = t.apply_polar(phase, logm)
        lg = polar_norm(logm)
    if active.size:
        final[active] = np.exp(np.minimum(lg, 709.0))
    return BasinReport(pts, verdict.tolist(), iters, final, peak, eps_conv, max_iter)
