"""Seeded residual suites for the identities and inequalities the
library is built on.  Each suite runs `cases` randomized instances and
reports the worst residual; a residual is the amount by which an
identity or inequality is violated, so passing means max residual <=
the suite tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .capacity import SolverOptions, chi_function
from .channels import compose, random_channel
from .ensembles import (
    Ensemble,
    average_state,
    chi_quantity,
    convex_combination,
    donald_check,
    random_ensemble,
    transport_ensemble,
)
from .opalg import (
    DensityOperator,
    random_density,
    relative_entropy_raw,
    trace_norm,
)

CHI_OPTS = SolverOptions(hhat_grid=384, hhat_starts=2)


@dataclass(frozen=True)
class SuiteResult:
    suite: str
    cases: int
    passes: int
    max_residual: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.passes == self.cases

    def as_dict(self) -> dict:
        return {
            "suite": self.suite, "cases": self.cases, "passes": self.passes,
            "max_residual": self.max_residual, "tol": self.tol,
            "pass": self.ok,
        }


def _result(name, residuals, tol):
    res = np.asarray(residuals, dtype=float)
    return SuiteResult(suite=name, cases=len(res), passes=int(np.sum(res <= tol)),
                       max_residual=float(res.max()) if len(res) else 0.0, tol=tol)


def suite_pinsker(cases: int = 1000, seed: int = 42, tol: float = 1e-9) -> SuiteResult:
    """H(rho||sigma) >= ||rho - sigma||_1^2 / 2 on full-support pairs."""
    rng = np.random.default_rng(seed)
    residuals = []
    for _ in range(cases):
        d = int(rng.integers(2, 5))
        rho = random_density(rng, d)
        sigma = random_density(rng, d)
        rel = relative_entropy_raw(rho.mat, sigma.mat)
        t = trace_norm(rho.mat - sigma.mat)
        residuals.append(0.5 * t * t - rel)
    return _result("pinsker", residuals, tol)


def suite_donald(cases: int = 1000, seed: int = 42, tol: float = 1e-9) -> SuiteResult:
    """sum pi H(rho_i||ref) = sum pi H(rho_i||avg) + H(avg||ref)."""
    rng = np.random.default_rng(seed)
    residuals = []
    for _ in range(cases):
        d = int(rng.integers(2, 5))
        ens = random_ensemble(rng, d, int(rng.integers(2, 6)))
        ref = random_density(rng, d)
        lhs, rhs = donald_check(ens, ref)
        residuals.append(abs(float(lhs) - float(rhs)))
    return _result("donald", residuals, tol)


def suite_chi_mixing(cases: int = 1000, seed: int = 42, tol: float = 1e-9) -> SuiteResult:
    """Convex-combination identity for chi plus the m=2 quadratic
    strengthening (each case checks both; residual is the worst)."""
    rng = np.random.default_rng(seed)
    residuals = []
    for _ in range(cases):
        d = int(rng.integers(2, 4))
        channel = random_channel(rng, d, d, int(rng.integers(1, 4)))
        e1 = random_ensemble(rng, d, int(rng.integers(1, 4)))
        e2 = random_ensemble(rng, d, int(rng.integers(1, 4)))
        lam = float(rng.uniform(0.05, 0.95))
        mix = convex_combination([(lam, e1), (1.0 - lam, e2)])
        chi_mix = float(chi_quantity(channel, mix))
        chi_1 = float(chi_quantity(channel, e1))
        chi_2 = float(chi_quantity(channel, e2))
        outer = Ensemble(((lam, average_state(e1)), (1.0 - lam, average_state(e2))))
        identity_resid = abs(chi_mix - (lam * chi_1 + (1.0 - lam) * chi_2
                                        + float(chi_quantity(channel, outer))))
        diff = trace_norm(channel.apply_raw(average_state(e2).mat)
                          - channel.apply_raw(average_state(e1).mat))
        quad = lam * chi_1 + (1.0 - lam) * chi_2 + 0.5 * lam * (1.0 - lam) * diff * diff
        quad_resid = quad - chi_mix
        residuals.append(max(identity_resid, quad_resid))
    return _result("chi_mixing", residuals, tol)


def suite_transport(cases: int = 1000, seed: int = 42, tol: float = 1e-10) -> SuiteResult:
    """Transported ensembles reproduce the target barycenter exactly."""
    rng = np.random.default_rng(seed)
    residuals = []
    for _ in range(cases):
        d = int(rng.integers(2, 4))
        ens = random_ensemble(rng, d, int(rng.integers(2, 5)))
        target = random_density(rng, d)
        moved = transport_ensemble(ens, target)
        residuals.append(trace_norm(average_state(moved).mat - target.mat))
    return _result("transport", residuals, tol)


def suite_chain(cases: int = 1000, seed: int = 42, tol: float = 1e-5) -> SuiteResult:
    """chi_{Psi o Phi}(rho) <= min(chi_Phi(rho), chi_Psi(Phi(rho)))."""
    rng = np.random.default_rng(seed)
    residuals = []
    for _ in range(cases):
        phi = random_channel(rng, 2, 2, int(rng.integers(1, 4)))
        psi = random_channel(rng, 2, 2, int(rng.integers(1, 4)))
        rho = random_density(rng, 2)
        composed = compose(psi, phi)
        chi_comp = chi_function(composed, rho, CHI_OPTS)
        chi_first = chi_function(phi, rho, CHI_OPTS)
        chi_second = chi_function(psi, DensityOperator(phi.apply_raw(rho.mat)), CHI_OPTS)
        residuals.append(max(chi_comp - chi_first, chi_comp - chi_second))
    return _result("chain", residuals, tol)


def suite_strong_concavity(cases: int = 1000, seed: int = 42,
                           tol: float = 1e-5) -> SuiteResult:
    """chi(lam rho1 + (1-lam) rho2) >= lam chi(rho1) + (1-lam) chi(rho2)
    + lam(1-lam)/2 ||Phi(rho2)-Phi(rho1)||_1^2."""
    rng = np.random.default_rng(seed)
    residuals = []
    for _ in range(cases):
        phi = random_channel(rng, 2, 2, int(rng.integers(1, 4)))
        rho1 = random_density(rng, 2)
        rho2 = random_density(rng, 2)
        lam = float(rng.uniform(0.05, 0.95))
        mix = DensityOperator(lam * rho1.mat + (1.0 - lam) * rho2.mat)
        diff = trace_norm(phi.apply_raw(rho2.mat) - phi.apply_raw(rho1.mat))
        rhs = (lam * chi_function(phi, rho1, CHI_OPTS)
               + (1.0 - lam) * chi_function(phi, rho2, CHI_OPTS)
               + 0.5 * lam * (1.0 - lam) * diff * diff)
        residuals.append(rhs - chi_function(phi, mix, CHI_OPTS))
    return _result("concavity", residuals, tol)


def suite_chi_concavity(cases: int = 200, seed: int = 42,
                        tol: float = 1e-5) -> SuiteResult:
    """chi(avg) - sum pi chi(rho_i) >= sum pi H(Phi(rho_i)||Phi(avg))."""
    rng = np.random.default_rng(seed)
    residuals = []
    for _ in range(cases):
        phi = random_channel(rng, 2, 2, int(rng.integers(1, 4)))
        ens = random_ensemble(rng, 2, 2)
        avg = average_state(ens)
        rhs = float(chi_quantity(phi, ens))
        lhs = chi_function(phi, avg, CHI_OPTS)
        for w, rho in ens.items:
            lhs -= w * chi_function(phi, rho, CHI_OPTS)
        residuals.append(rhs - lhs)
    return _result("chi_concavity", residuals, tol)


def suite_monotonicity(cases: int = 500, seed: int = 42, tol: float = 1e-9) -> SuiteResult:
    """Data processing: chi of an ensemble never grows under a channel."""
    rng = np.random.default_rng(seed)
    residuals = []
    for _ in range(cases):
        d = int(rng.integers(2, 4))
        phi = random_channel(rng, d, d, int(rng.integers(1, 4)))
        psi = random_channel(rng, d, d, int(rng.integers(1, 4)))
        ens = random_ensemble(rng, d, int(rng.integers(2, 5)))
        residuals.append(float(chi_quantity(compose(psi, phi), ens))
                         - float(chi_quantity(phi, ens)))
    return _result("monotonicity", residuals, tol)


SUITES = {
    "pinsker": suite_pinsker,
    "donald": suite_donald,
    "chi_mixing": suite_chi_mixing,
    "transport": suite_transport,
    "chain": suite_chain,
    "concavity": suite_strong_concavity,
    "chi_concavity": suite_chi_concavity,
    "monotonicity": suite_monotonicity,
}


def run_suite(name: str, cases: int | None = None, seed: int = 42) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; known: {sorted(SUITES)}")
    fn = SUITES[name]
    if cases is None:
        return fn(seed=seed)
    return fn(cases=cases, seed=seed)
