"""End-to-end run: pinching, bunching, rescaling, 2-jet solve, structure
checks, rescaled normal form and a basin scan."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import __version__
from .basin import QuadraticSequence, SamplingSpec, basin_scan, sample_points
from .bunching import (beta, check_series_condition, choose_rescaling, epsilon, hypothesis_margin,
                       verify_pinched)
from .config import PipelineConfig, config_hash, derive_seed, to_dict
from .jets import Jet2, SolverConfig, SolverError, growth_check, solve_2jet
from .polyspace import HomQuadMap, PinchedSequence


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))[None, :]


class JetSequence:
    """``f_n = A_n z + F_n(z)`` with ``A_n = W_{n+1} L_n W_n^*``: pinched upper
    triangular ``L_n`` hidden behind random unitaries ``W_n``, and quadratic
    coefficients uniform in a disk of radius ``quad_scale``.  Every piece is
    seeded from ``(component seed, n)``."""

    def __init__(self, d: int, lam: float, M: float, seed: int, mu: float = 0.05, offdiag: float = 0.1,
                 quad_scale: float = 1.0, general: bool = True, profile: str = "random"):
        self.d = d
        self.general = general
        self.quad_scale = quad_scale
        self.seq = PinchedSequence(d, lam, M, seed=derive_seed(seed, "linear"), mu=mu,
                                   offdiag=offdiag, profile=profile)
        self._useed = derive_seed(seed, "unitary")
        self._qseed = derive_seed(seed, "quadratic")
        self._get = lru_cache(maxsize=None)(self._build)

    def unitary(self, n: int) -> np.ndarray:
        if not self.general:
            return np.eye(self.d, dtype=complex)
        return random_unitary(self.d, np.random.default_rng([self._useed, n]))

    def _build(self, n: int) -> Jet2:
        a = self.unitary(n + 1) @ self.seq.matrix(n) @ self.unitary(n).conj().T
        rng = np.random.default_rng([self._qseed, n])
        size = self.d * self.d * (self.d + 1) // 2
        q = self.quad_scale * np.sqrt(rng.uniform(size=size)) * np.exp(2j * np.pi * rng.uniform(size=size))
        return Jet2(a, HomQuadMap(self.d, q))

    def __call__(self, n: int) -> Jet2:
        return self._get(n)


@dataclass
class Stage:
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    message: str | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "metrics": self.metrics, "message": self.message}


@dataclass
class RunReport:
    command: str
    config: dict
    config_hash: str
    stages: list
    version: str = __version__
    series: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.stages)

    def to_dict(self) -> dict:
        return {"command": self.command, "config": self.config, "config_hash": self.config_hash,
                "stages": [s.to_dict() for s in self.stages], "passed": self.passed,
                "version": self.version}


def rescale_normal_form(g: list, R: float) -> QuadraticSequence:
    """``z -> R^{n+1} g_n(R^{-n} z)``: linear part ``R Dg_n``, quadratic ``R^{1-n} G_n``."""
    lin, quad = [], []
    for n, gn in enumerate(g):
        lin.append(R * gn.linear)
        quad.append(R ** (1 - n) * gn.quad.as_array())
    return QuadraticSequence(lin, quad)


def run_pipeline(cfg: PipelineConfig) -> RunReport:
    stages: list[Stage] = []
    report = RunReport("pipeline", to_dict(cfg), config_hash(cfg), stages)

    def stop(stage: Stage) -> RunReport:
        stages.append(stage)
        return report

    jets = JetSequence(cfg.d, cfg.lam, cfg.M, cfg.seed, cfg.mu, cfg.offdiag, cfg.quad_scale)

    # pinching of the linear parts over the solve horizon
    pin = verify_pinched([jets(n).linear for n in range(cfg.horizon)], cfg.lam, cfg.M, cfg.c_max)
    st = Stage("pinching", pin.ok, {"C": pin.c_measured, "worst_k_h": list(pin.worst), "horizon": pin.horizon},
               None if pin.ok else f"pinching violated: {pin.violation}")
    if not st.passed:
        return stop(st)
    stages.append(st)

    # bunching hypothesis and series condition
    hm = hypothesis_margin(cfg.lam, cfg.M, cfg.d)
    sc = check_series_condition(cfg.lam, cfg.M, cfg.d)
    ok = hm < 0 and sc.ok
    msg = None
    if hm >= 0:
        msg = "bunching hypothesis violated: Lambda^(2+eps)*M >= 1"
    elif not sc.ok:
        msg = "series condition violated: (Lambda^2 M)^(D^(d(d-1))) (Lambda M)^(-delta) >= 1"
    st = Stage("bunching", ok, {"beta": beta(cfg.lam, cfg.M), "epsilon": str(epsilon(cfg.d)),
                                "log_hypothesis": hm, "log_series": sc.log_value}, msg)
    if not ok:
        return stop(st)
    stages.append(st)

    plan = choose_rescaling(cfg.lam, cfg.M, cfg.d)
    st = Stage("rescaling", plan.feasible, {"R": plan.R, "log_lower": plan.log_lower, "log_upper": plan.log_upper,
                                            "margins": plan.margins, "theta": plan.theta, "eta": plan.eta},
               plan.violation)
    if not plan.feasible:
        return stop(st)
    stages.append(st)

    try:
        out = solve_2jet(jets, SolverConfig(horizon=cfg.horizon, tol=cfg.series_tol,
                                            max_tail=cfg.max_tail, M=cfg.M))
    except SolverError as exc:
        return stop(Stage("solve", False, {}, str(exc)))
    scale = max(jets(n).norm() for n in range(cfg.horizon))
    res_ok = out.max_residual <= cfg.residual_tol * scale
    stages.append(Stage("solve", res_ok, {"max_residual": out.max_residual, "input_scale": scale,
                                          "series_end": out.n_end,
                                          "tail_norm": out.tail_norms[-1] if out.tail_norms else 0.0},
                        None if res_ok else "conjugacy residual above tolerance"))
    if not res_ok:
        return report

    theta = plan.theta if plan.theta is not None else 1.05 * cfg.lam ** 2 * cfg.M
    gr = growth_check(out, theta)
    leak = out.triangular_leak()
    unit = out.unitarity_defect()
    ok = leak <= 1e-14 and unit <= 1e-10 and gr.ok
    stages.append(Stage("structure", ok, {"triangular_leak": leak, "unitarity_defect": unit,
                                          "growth_slope": gr.slope, "growth_bound": gr.bound},
                        None if ok else "normal form structure check failed"))
    report.series = {"log_h_norm": [(n, math.log(v)) for n, v in enumerate(out.h_norms())]}
    if not ok:
        return report

    nf = rescale_normal_form(out.g[: cfg.horizon], plan.R)
    qnorm = max(float(np.max(np.abs(q))) for q in nf.quad)
    lnorm = max(float(np.linalg.norm(a, 2)) for a in nf.linear)
    b = cfg.basin
    spec = SamplingSpec(b.sampling.radius, b.sampling.per_axis, b.sampling.n_grid, b.sampling.n_far,
                        b.sampling.far_radius, derive_seed(cfg.seed, "basin"))
    pts = sample_points(cfg.d, spec)
    max_iter = min(b.max_iter or cfg.horizon, cfg.horizon)
    rep = basin_scan(nf, pts, b.eps_conv, max_iter, b.log_cap)
    ok = rep.converged_fraction == 1.0
    stages.append(Stage("basin", ok, {"points": rep.n_points, "converged": rep.count("converged"),
                                      "diverged": rep.count("diverged"), "undecided": rep.count("undecided"),
                                      "max_iterations": int(rep.iterations.max()),
                                      "peak_log_norm": float(rep.peak_log_norms.max()),
                                      "rescaled_linear_norm": lnorm, "rescaled_quadratic_norm": qnorm},
                        None if ok else "basin scan left points unconverged"))
    return report
