"""Non-autonomous conjugacy of 2-jet sequences.

Given jets ``f_n(z) = A_n z + F_n(z)`` the solver builds ``h_n`` (unitary
linear part) and ``g_n`` with

    h_{n+1} o f_n = g_n o h_n        (modulo degree 3)

where ``U_{tau_n} g_n U_{tau_n}^-1`` is upper triangular with quadratic part
supported in the triangular set.  The frames ``tau_n`` come from a
permutation schedule that fires the nilpotency word at times ``D**h - 1``.

Working in the frame ``f~_n = U_tau f_n U_tau^-1`` the steps are:

1. twisted QR: ``Q_n L_n = A~_n V_n`` and ``V_{n+1} = U_theta Q_n U_theta^-1``;
2. ``X_n = A_{U_theta L_n} u_{n+1} + L_n^-1 Q_n^-1 F~_n(V_n z)``;
3. ``u_n = Q X_n`` and ``G~_n = L_n (I - Q) X_n``.

``u`` is obtained by running step 2-3 backwards from a zero terminal value
far enough past the horizon that the series tail is negligible.  The output
maps are ``h_n = U_tau^-1 (I + u_n) V_n^-1 U_tau`` and
``g_n = U_tau^-1 (L_n + G~_n) U_tau``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bunching import rescale_exponent, stable_base
from .nilpotency import build_word
from .poset import Permutation, act, build_index_set, triangular_mask
from .polyspace import HomQuadMap, conj_matrix, exact_inverse, fit_slope, operator_norm, projector


@dataclass(frozen=True, eq=False)
class Jet2:
    """``z -> linear @ z + quad(z)``, truncated at degree 2."""

    linear: np.ndarray
    quad: HomQuadMap

    @property
    def d(self) -> int:
        return self.linear.shape[0]

    @classmethod
    def identity(cls, d: int) -> "Jet2":
        return cls(np.eye(d, dtype=complex), HomQuadMap.zero(d))

    @classmethod
    def linear_map(cls, lin: np.ndarray) -> "Jet2":
        lin = np.asarray(lin, dtype=complex)
        return cls(lin, HomQuadMap.zero(lin.shape[0]))

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z) @ self.linear.T + self.quad(z)

    def compose(self, other: "Jet2") -> "Jet2":
        """``self o other``."""
        lin = self.linear @ other.linear
        quad = other.quad.postcompose(self.linear) + self.quad.precompose(other.linear)
        return Jet2(lin, quad)

    __matmul__ = compose

    def inverse(self) -> "Jet2":
        inv = np.linalg.inv(self.linear)
        return Jet2(inv, self.quad.precompose(inv).postcompose(-inv))

    def conjugate(self, u: np.ndarray) -> "Jet2":
        """``U o self o U^-1`` for an invertible linear ``U``."""
        return Jet2.linear_map(u) @ self @ Jet2.linear_map(exact_inverse(u))

    def __sub__(self, other: "Jet2") -> "Jet2":
        return Jet2(self.linear - other.linear, self.quad - other.quad)

    def norm(self) -> float:
        """Maximum coefficient modulus over both homogeneous parts."""
        return max(float(np.max(np.abs(self.linear))), self.quad.norm())


class PermSchedule:
    """``theta_n = sigma_h`` when ``n = D**h - 1``, identity otherwise, with
    ``sigma_h`` the word letter ``(h - 1) mod N``; ``tau_{n+1} = theta_n o tau_n``."""

    def __init__(self, d: int, enabled: bool = True):
        self.d = d
        self.D = stable_base(d)
        self.word = build_word(d).word if d >= 2 else ()
        self.enabled = enabled and len(self.word) > 0
        self._tau = [Permutation.identity(d)]

    def firing_epoch(self, n: int) -> int | None:
        """``h`` with ``n = D**h - 1``, or None."""
        if not self.enabled:
            return None
        m, h = n + 1, 0
        while m % self.D == 0:
            m //= self.D
            h += 1
        return h if m == 1 else None

    def sigma(self, h: int) -> Permutation:
        return self.word[(h - 1) % len(self.word)]

    def theta(self, n: int) -> Permutation:
        h = self.firing_epoch(n)
        return Permutation.identity(self.d) if h is None else self.sigma(h)

    def tail_cap(self, start: int, extra: int) -> int:
        """Last index the series tail may need: ``extra`` steps after the
        firing that completes one full pass of the word from ``start`` on."""
        if not self.enabled:
            return start + extra
        h = 0
        while self.D ** h - 1 < start:
            h += 1
        return self.D ** (h + len(self.word)) - 1 + extra

    def tau(self, n: int) -> Permutation:
        while len(self._tau) <= n:
            k = len(self._tau) - 1
            self._tau.append(self.theta(k) @ self._tau[k])
        return self._tau[n]


def positive_qr(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """QR factorisation normalised so that R has a positive real diagonal."""
    q, r = np.linalg.qr(a)
    dg = np.diag(r)
    ph = np.where(dg != 0, dg / np.abs(dg), 1.0)
    q = q * ph[None, :]
    r = np.triu(np.conj(ph)[:, None] * r)
    return q, r


@dataclass
class Triangularization:
    V: list
    L: list
    Q: list
    cond: list

    def residuals(self, mats, twists=None) -> tuple[float, float]:
        """Max of ``|U^-1 V_{n+1} U L_n - A_n V_n|`` and of ``|V_n V_n^* - I|``."""
        fac = res = 0.0
        d = self.V[0].shape[0]
        for n, a in enumerate(mats):
            u = np.eye(d) if twists is None else twists[n]
            lhs = u.T @ self.V[n + 1] @ u @ self.L[n]
            fac = max(fac, float(np.max(np.abs(lhs - a @ self.V[n]))))
        for v in self.V:
            res = max(res, float(np.max(np.abs(v @ v.conj().T - np.eye(d)))))
        return fac, res


def triangularize(mats: Sequence[np.ndarray], twists: Sequence[np.ndarray] | None = None,
                  cond_limit: float = 1e12) -> Triangularization:
    """Non-autonomous QR: ``V_0 = I``, ``Q_n L_n = A_n V_n`` and
    ``V_{n+1} = U_n Q_n U_n^-1`` for permutation matrices ``U_n``
    (identity when ``twists`` is None, giving ``V_{n+1} L_n = A_n V_n``)."""
    d = np.asarray(mats[0]).shape[0] if len(mats) else 1
    V = [np.eye(d, dtype=complex)]
    L, Q, cond = [], [], []
    for n, a in enumerate(mats):
        c = float(np.linalg.cond(a))
        if not np.isfinite(c) or c > cond_limit:
            raise ValueError(f"near-singular linear part at n={n} (condition number {c:.3g})")
        q, r = positive_qr(np.asarray(a) @ V[n])
        u = np.eye(d) if twists is None else twists[n]
        V.append(u @ q @ u.T)
        L.append(r)
        Q.append(q)
        cond.append(c)
    return Triangularization(V, L, Q, cond)


@dataclass
class SeriesResult:
    S: np.ndarray
    terms: int
    term_norms: list
    converged: bool
    geometric_tail: bool
    diverged: bool


def series_blocks(linears: Sequence[np.ndarray], sched: PermSchedule, start: int = 0) -> list[np.ndarray]:
    """``Q A_{U_theta_m L_m} Q`` for ``m = start, start+1, ...``."""
    q = np.diag(projector(sched.d))
    mask = np.outer(q, q)
    out = []
    for m, lin in enumerate(linears, start=start):
        a = conj_matrix(lin) @ conj_matrix(sched.theta(m).matrix())
        out.append(a * mask)
    return out


def series_operator(blocks: Sequence[np.ndarray], n: int = 0, tol: float = 1e-12,
                    max_terms: int = 200, window: int = 20) -> SeriesResult:
    """Partial sums of ``sum_{m >= n} B_n B_{n+1} ... B_{m-1}`` (empty product ``I``).

    Stops when the next term is below ``tol * |S|`` or after ``max_terms``
    terms or when the supplied blocks run out.  Divergence means: not
    converged and term norms strictly increasing over the last ``window``
    terms.
    """
    size = blocks[0].shape[0] if len(blocks) else 1
    term = np.eye(size, dtype=complex)
    S = term.copy()
    norms = [operator_norm(term)]
    converged = False
    for m in range(n, min(len(blocks), n + max_terms)):
        term = term @ blocks[m]
        tn = operator_norm(term)
        norms.append(tn)
        S = S + term
        if tn < tol * operator_norm(S):
            converged = True
            break
    if len(norms) == 1:
        converged = True
    geo = len(norms) >= 2 and (norms[-2] == 0 or norms[-1] / norms[-2] < 1)
    tail = norms[-window - 1:]
    diverged = (not converged and len(tail) == window + 1
                and all(b > a for a, b in zip(tail, tail[1:])))
    return SeriesResult(S, len(norms), norms, converged, geo, diverged)


class SolverError(RuntimeError):
    pass


@dataclass
class SolverConfig:
    horizon: int = 50
    tol: float = 1e-12
    max_tail: int = 200
    window: int = 20
    use_schedule: bool = True
    M: float | None = None


@dataclass
class SolverOutput:
    h: list
    g: list
    V: list
    L: list
    u: list
    G: list
    tau: list
    residuals: list
    n_end: int
    tail_norms: list
    horizon: int
    d: int

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0

    def h_norms(self) -> list[float]:
        return [j.norm() for j in self.h[: self.horizon + 1]]

    def frame_quadratic_parts(self) -> list[np.ndarray]:
        """Quadratic parts of ``U_tau g_n U_tau^-1`` as coefficient vectors."""
        return [Jet2.conjugate(gn, t.matrix()).quad.coeffs for gn, t in zip(self.g, self.tau)]

    def triangular_leak(self) -> float:
        """Largest coefficient of a frame quadratic part outside the triangular set."""
        tri = triangular_mask(build_index_set(self.d, 2))
        return max((float(np.max(np.abs(c[~tri]))) for c in self.frame_quadratic_parts()), default=0.0)

    def unitarity_defect(self) -> float:
        eye = np.eye(self.d)
        return max(float(np.max(np.abs(j.linear @ j.linear.conj().T - eye))) for j in self.h)


def _as_getter(f_seq) -> Callable[[int], Jet2]:
    if callable(f_seq):
        return f_seq
    return lambda n: f_seq[n]


def solve_2jet(f_seq, config: SolverConfig | None = None,
               restart: tuple[int, np.ndarray] | None = None) -> SolverOutput:
    """Solve the 2-jet conjugacy equation for ``n < horizon``.

    ``f_seq`` is a list of :class:`Jet2` (at least ``horizon + 1`` long) or a
    callable ``n -> Jet2``.  The backward recursion starts from ``u = 0`` at
    the first index past the horizon where the series term drops below
    ``tol`` (at most ``max_tail`` steps later, or the end of a finite list).
    ``restart = (n0, u_n0)`` instead starts it at ``n0`` from the given value.
    """
    cfg = config or SolverConfig()
    get = _as_getter(f_seq)
    avail = math.inf if callable(f_seq) else len(f_seq)
    if avail < cfg.horizon + 1:
        raise SolverError(f"need at least {cfg.horizon + 1} jets, got {avail}")
    d = get(0).d
    sched = PermSchedule(d, cfg.use_schedule)
    iset = build_index_set(d, 2)
    qmask = ~triangular_mask(iset)
    eye = np.eye(d, dtype=complex)

    frames, Ls, Qs, Vs, ops = [], [], [], [eye], []
    tail_norms: list[float] = []
    term = None
    n_end = None
    cap = sched.tail_cap(cfg.horizon, cfg.max_tail)
    n = 0
    while n_end is None:
        if n >= avail:
            n_end = n
            break
        tau = sched.tau(n).matrix()
        fn = get(n)
        ft = fn.conjugate(tau)
        q, r = positive_qr(ft.linear @ Vs[n])
        if cfg.M is not None and np.min(np.abs(np.diag(r))) < 0.5 / cfg.M:
            raise SolverError(f"pinching violated: diagonal of triangular part below 1/(2M) at n={n}")
        th = sched.theta(n).matrix()
        Vs.append(th @ q @ th.T)
        Ls.append(r)
        Qs.append(q)
        frames.append(ft)
        op = conj_matrix(r) @ conj_matrix(th)
        ops.append(op)
        blk = op * np.outer(qmask, qmask)
        if n >= cfg.horizon:
            term = blk if term is None else term @ blk
            tail_norms.append(operator_norm(term))
            if tail_norms[-1] < cfg.tol or n + 1 >= cap:
                n_end = n + 1
        n += 1

    if len(tail_norms) > cfg.window and tail_norms[-1] >= cfg.tol:
        tail = tail_norms[-cfg.window - 1:]
        if all(b > a for a, b in zip(tail, tail[1:])):
            raise SolverError("series divergence: tail terms grow over the whole window")

    # backward recursion for u
    size = len(iset)
    u = [None] * (n_end + 1)
    G = [None] * n_end
    if restart is None:
        start, u[n_end] = n_end, np.zeros(size, dtype=complex)
    else:
        if not 0 <= restart[0] <= n_end:
            raise SolverError(f"restart index {restart[0]} outside 0..{n_end}")
        start, u[restart[0]] = restart[0], np.asarray(restart[1], dtype=complex)
    for k in range(start - 1, -1, -1):
        r = Ls[k]
        rinv = np.linalg.inv(r)
        w = frames[k].quad.precompose(Vs[k]).postcompose(rinv @ Qs[k].conj().T).coeffs
        x = ops[k] @ u[k + 1] + w
        u[k] = np.where(qmask, x, 0)
        G[k] = HomQuadMap.from_array(r @ np.where(qmask, 0, x).reshape(d, -1))

    h, g, taus = [], [], []
    top = min(start, n_end)
    for k in range(top + 1):
        tau = sched.tau(k).matrix()
        taus.append(sched.tau(k))
        hk = Jet2(np.eye(d, dtype=complex), HomQuadMap(d, u[k])) @ Jet2.linear_map(Vs[k].conj().T)
        h.append(hk.conjugate(tau.T))
        if k < top:
            g.append(Jet2(Ls[k], G[k]).conjugate(tau.T))
    taus = taus[: len(g)]

    res = []
    for k in range(min(cfg.horizon, len(g))):
        lhs = h[k + 1] @ get(k)
        rhs = g[k] @ h[k]
        res.append((lhs - rhs).norm())
    return SolverOutput(h=h, g=g, V=Vs[: top + 1], L=Ls[:top], u=[HomQuadMap(d, x) for x in u[: top + 1]],
                        G=G[:top], tau=taus, residuals=res, n_end=n_end, tail_norms=tail_norms,
                        horizon=cfg.horizon, d=d)


@dataclass(frozen=True)
class GrowthReport:
    slope: float
    bound: float
    exponent: int
    theta: float
    ok: bool


def growth_exponent(d: int) -> int:
    """``D**(3 binom(d,2)) - 1``."""
    return rescale_exponent(d)


def growth_check(out: SolverOutput, theta: float, slack: float = 0.1, fit_from: int = 0) -> GrowthReport:
    """Fit ``log |h_n|`` against ``n`` and compare with ``E log(theta) + slack``.

    ``log(theta)`` is clipped at 0 because the unitary linear part keeps
    ``|h_n|`` bounded below.
    """
    norms = out.h_norms()
    ns = np.arange(len(norms))[fit_from:]
    slope = fit_slope(ns, norms[fit_from:]) if len(ns) >= 2 else 0.0
    e = growth_exponent(out.d)
    bound = e * max(math.log(theta), 0.0) + slack
    return GrowthReport(slope, bound, e, theta, slope <= bound)


def diagonal_scalar_oracle(lams: np.ndarray, quads: Sequence[np.ndarray], sched: PermSchedule,
                           n_end: int) -> list[np.ndarray]:
    """Quadratic coefficients of ``h_n`` for diagonal positive linear parts,
    computed one index at a time: with ``x = lambda^alpha h_{n+1} + F_n``,
    an index that lands in the triangular set in the current frame goes to
    ``g_n``; otherwise ``h_n = x / lambda_k``."""
    d = lams.shape[1]
    iset = build_index_set(d, 2)
    tri = triangular_mask(iset)
    hq = np.zeros(len(iset), dtype=complex)
    out = [None] * (n_end + 1)
    out[n_end] = hq.copy()
    for n in range(n_end - 1, -1, -1):
        lam = lams[n]
        tau = sched.tau(n)
        new = np.zeros_like(hq)
        for p, s in enumerate(iset.elements):
            x = np.prod(lam ** np.array(s.alpha)) * hq[p] + quads[n][p]
            if not tri[iset.index(act(tau, s))]:
                new[p] = x / lam[s.i - 1]
        hq = new
        out[n] = hq.copy()
    return out
