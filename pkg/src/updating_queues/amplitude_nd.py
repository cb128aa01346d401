"""Cluster oscillation amplitudes for n > 2 queues.

Past the critical delay the queues split into two clusters in antiphase. For
even n the split is n/2 against n/2 and the whole system reduces to the
two-queue problem with arrival rate scaled to 2*lam/n. For odd n the split is
(n+1)/2 against (n-1)/2, the levels are no longer mirror images, and the orbit
solves a two-equation system in the larger cluster's low and high levels
(L1, U1); the smaller cluster's levels follow from mass conservation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import ModelParams, SolverConfig, critical_delay
from .amplitude2d import (AmplitudeResult, linear_approx_amplitude,
                          quadratic_approx_amplitude, quadratic_table_amplitude,
                          solve_fixed_point, table_expansion)


def reduced_even_params(params: ModelParams) -> ModelParams:
    """Two-queue system equivalent to an even-n system split into halves.

    Each cluster of n/2 queues behaves like one queue in a two-queue system
    whose arrival rate is 2*lam/n (so the reduced rho is the original
    per-cluster mass 2*rho/n).
    """
    if params.n % 2 != 0:
        raise ValueError("even reduction requires an even number of queues")
    return replace(params, lam=2.0 * params.lam / params.n, n=2)


def even_amplitude(params: ModelParams, method: str = "fixed_point",
                   cfg: SolverConfig | None = None,
                   convention: str = "table") -> AmplitudeResult:
    """Per-queue amplitude for even n via the two-queue reduction.

    method is one of fixed_point, linear, quadratic. The closed-form methods
    default to the reference-table constant convention; convention="tangent"
    selects the true tangent expansion instead (see LogitExpansion). The
    result's method field is tagged with the reduction.
    """
    reduced = reduced_even_params(params)
    if method == "fixed_point":
        res = solve_fixed_point(reduced, cfg)
    elif method == "linear":
        expansion = table_expansion(reduced) if convention == "table" else None
        res = linear_approx_amplitude(reduced, expansion)
    elif method == "quadratic":
        if convention == "table":
            res = quadratic_table_amplitude(reduced)
        else:
            res = quadratic_approx_amplitude(reduced)
    else:
        raise ValueError(f"unknown method {method!r}")
    return replace(res, method=res.method + "+even_reduction")


# ---------------------------------------------------------------------------
# odd n


def _coeffs(params: ModelParams):
    n, rho, theta = params.n, params.rho, params.theta
    c1 = (n + 1) / 2.0
    c2 = ((n - 1) / 2.0) * math.exp(-2.0 * rho * theta / (n - 1))
    return c1, c2


def g_value(x: float, params: ModelParams) -> float:
    """Arrival share of one queue in the (n+1)/2-cluster when that cluster
    sits at level x and the other cluster carries the remaining mass."""
    c1, c2 = _coeffs(params)
    n, theta = params.n, params.theta
    return 1.0 / (c1 + c2 * math.exp(2.0 * n * theta * x / (n - 1)))


def g_prime(x: float, params: ModelParams) -> float:
    c1, c2 = _coeffs(params)
    n, theta = params.n, params.theta
    w = c2 * math.exp(2.0 * n * theta * x / (n - 1))
    return -(2.0 * n * theta / (n - 1)) * w / (c1 + w) ** 2


@dataclass(frozen=True)
class OddLinearization:
    """Constants of the small-L1 linearization of the odd orbit equations."""

    a: float
    b: float
    g0: float
    gp0: float


def odd_linearization(params: ModelParams) -> OddLinearization:
    a = math.exp(-params.mu * params.delta)
    return OddLinearization(a=a, b=params.rho * (1.0 - a),
                            g0=g_value(0.0, params),
                            gp0=g_prime(0.0, params))


@dataclass(frozen=True)
class OddAmplitudeResult:
    """Cluster levels and amplitudes for odd n.

    The (n+1)/2-cluster swings between L1 and U1; the (n-1)/2-cluster between
    L2 = 2*rho/(n-1) - kappa*U1 and U2 = 2*rho/(n-1) - kappa*L1 with
    kappa = (n+1)/(n-1), so the weighted sums hold exactly by construction.
    A1 = (U1 - L1)/2 and A2 = kappa*A1.
    """

    L1: float
    U1: float
    L2: float
    U2: float
    A1: float
    A2: float
    method: str
    converged: bool
    iterations: int
    residual: float


def odd_residuals(L1: float, U1: float, params: ModelParams) -> tuple[float, float]:
    """Orbit equations: one update interval maps L1 to U1 and U1 to L1."""
    a = math.exp(-params.mu * params.delta)
    b = params.rho * (1.0 - a)
    return (a * L1 + b * g_value(L1, params) - U1,
            a * U1 + b * g_value(U1, params) - L1)


def _odd_result(L1, U1, params, method, converged, iterations) -> OddAmplitudeResult:
    if L1 > U1:
        L1, U1 = U1, L1
    n, rho = params.n, params.rho
    kappa = (n + 1) / (n - 1)
    base = 2.0 * rho / (n - 1)
    r1, r2 = odd_residuals(L1, U1, params)
    return OddAmplitudeResult(L1=L1, U1=U1,
                              L2=base - kappa * U1, U2=base - kappa * L1,
                              A1=(U1 - L1) / 2.0, A2=kappa * (U1 - L1) / 2.0,
                              method=method, converged=converged,
                              iterations=iterations,
                              residual=max(abs(r1), abs(r2)))


def _symmetric_odd(params: ModelParams, method: str) -> OddAmplitudeResult:
    # both clusters at rho/n: g(rho/n) = 1/n makes the balanced point exact
    c = params.rho / params.n
    return _odd_result(c, c, params, method, True, 0)


def odd_linear_approx(params: ModelParams) -> OddAmplitudeResult:
    """Closed-form estimate from linearizing the orbit equations at L1 = 0.

    One pass expands g at L1 = 0 for the downswing and at b*g(0) (the leading
    upswing target) for the return leg, giving

        L1 = (a*b*g0 + b*g(b*g0)) /
             (1 - a^2 - a*b*g'(0) - g'(b*g0)*(a*b + b^2*g'(0)))

    and U1 = a*L1 + b*g(L1). Below the critical delay the expansion is
    meaningless and the balanced answer (zero amplitude) is returned.
    """
    if params.n % 2 == 0:
        raise ValueError("odd linearization requires an odd number of queues")
    dc = critical_delay(params)
    if dc is None or params.delta <= dc:
        return _symmetric_odd(params, "linear")
    lin = odd_linearization(params)
    a, b, g0, gp0 = lin.a, lin.b, lin.g0, lin.gp0
    u0 = b * g0
    gpu = g_prime(u0, params)
    denom = 1.0 - a * a - a * b * gp0 - gpu * (a * b + b * b * gp0)
    L1 = (a * b * g0 + b * g_value(u0, params)) / denom
    U1 = a * L1 + b * g_value(L1, params)
    return _odd_result(L1, U1, params, "linear", True, 0)


def odd_solve(params: ModelParams, cfg: SolverConfig | None = None) -> OddAmplitudeResult:
    """Damped Newton solve of the odd orbit equations.

    Seeded from the linear estimate at rho/n -/+ A1_linear, with two rescaled
    fallback seeds. An iterate that collapses onto the balanced point while
    the parameters are clearly supercritical triggers the next seed instead of
    being reported as the answer. Subcritical parameters return the balanced
    point directly.
    """
    if params.n % 2 == 0:
        raise ValueError("odd solve requires an odd number of queues")
    cfg = cfg or SolverConfig()
    dc = critical_delay(params)
    if dc is None or params.delta <= dc:
        return _symmetric_odd(params, "newton")

    a = math.exp(-params.mu * params.delta)
    b = params.rho * (1.0 - a)
    c = params.rho / params.n
    a1_seed = max(odd_linear_approx(params).A1, 1e-6 * params.rho)

    best = None
    total_iters = 0
    for scale in (1.0, 1.5, 0.5):
        L1 = max(c - scale * a1_seed, 0.0)
        U1 = c + scale * a1_seed
        converged = False
        for _ in range(cfg.max_iter):
            total_iters += 1
            r = np.array(odd_residuals(L1, U1, params))
            rnorm = np.abs(r).max()
            if rnorm < cfg.abs_tol:
                converged = True
                break
            jac = np.array([[a + b * g_prime(L1, params), -1.0],
                            [-1.0, a + b * g_prime(U1, params)]])
            step = np.linalg.solve(jac, -r)
            # backtrack until the residual actually shrinks
            lam_step = 1.0
            for _ in range(40):
                trial = (L1 + lam_step * step[0], U1 + lam_step * step[1])
                tr = odd_residuals(*trial, params)
                if max(abs(tr[0]), abs(tr[1])) < rnorm:
                    L1, U1 = trial
                    break
                lam_step *= 0.5
            else:
                break
        collapsed = abs(U1 - L1) < 1e-8 * max(1.0, params.rho)
        if converged and not collapsed:
            return _odd_result(L1, U1, params, "newton", True, total_iters)
        best = (L1, U1)
    L1, U1 = best
    return _odd_result(L1, U1, params, "newton", False, total_iters)
