"""Core fluid model for N parallel queues with periodically updated state.

Customers joining at time t route by a multinomial logit on the queue lengths
as they looked at the most recent update epoch floor(t/delta)*delta, not on the
live lengths. Between epochs each queue therefore relaxes exponentially toward
a frozen target, which makes the dynamics solvable in closed form interval by
interval. No general-purpose ODE integrator is used anywhere: stepping is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    """Model parameters.

    lam    arrival rate (lambda > 0)
    mu     service rate (mu > 0)
    theta  sensitivity of the routing logit (theta > 0)
    n      number of queues (n >= 2)
    delta  update interval (delta > 0)
    """

    lam: float
    mu: float
    theta: float
    n: int
    delta: float

    def __post_init__(self):
        if not (self.lam > 0 and self.mu > 0 and self.theta > 0):
            raise ValueError("lam, mu and theta must be positive")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("n must be an integer >= 2")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        object.__setattr__(self, "n", int(self.n))

    @property
    def rho(self) -> float:
        return self.lam / self.mu

    @property
    def equilibrium(self) -> float:
        """Per-queue level rho/n of the balanced fixed point."""
        return self.rho / self.n


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by the root-finding routines."""

    abs_tol: float = 1e-12
    max_iter: int = 200
    # keep the trivial balanced root out of the bisection bracket
    exclusion_fraction: float = 1e-9


class EmpiricalAmplitude(NamedTuple):
    amplitudes: np.ndarray
    minima: np.ndarray
    maxima: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """Simulated path: sample times, states (len(times) x n), and the rows
    that fall exactly on update epochs."""

    params: ModelParams
    times: np.ndarray
    states: np.ndarray
    epoch_rows: np.ndarray

    def epoch_times(self) -> np.ndarray:
        return self.times[self.epoch_rows]

    def epoch_states(self) -> np.ndarray:
        return self.states[self.epoch_rows]


def choice_probabilities(q, theta: float) -> np.ndarray:
    """Logit routing probabilities exp(-theta*q_i) / sum_j exp(-theta*q_j).

    The minimum queue length is subtracted inside the exponentials so large
    states cannot underflow every term at once.
    """
    q = np.asarray(q, dtype=float)
    z = np.exp(-theta * (q - q.min()))
    return z / z.sum()


def choice_probability(q, i: int, params: ModelParams) -> float:
    """Probability that an arriving customer picks queue i (0-based)."""
    return float(choice_probabilities(q, params.theta)[i])


def critical_delay(params: ModelParams):
    """Update interval beyond which the balanced equilibrium loses stability.

    Returns ln(1 + 2/(lam*theta/(mu*n) - 1)) / mu, defined when
    lam*theta/(mu*n) > 1. Below that the equilibrium is stable for every
    delay and None is returned (no finite threshold).
    """
    ratio = params.lam * params.theta / (params.mu * params.n)
    if ratio <= 1.0:
        return None
    return math.log(1.0 + 2.0 / (ratio - 1.0)) / params.mu


def dense_solution(q_epoch, params: ModelParams, s: float) -> np.ndarray:
    """Exact state s time units past an epoch whose state was q_epoch.

    With p frozen at the epoch, each component follows
    q_i(s) = q_i(0) e^{-mu s} + rho p_i (1 - e^{-mu s}) for s in [0, delta].
    """
    if s < 0 or s > params.delta * (1 + 1e-12):
        raise ValueError("s must lie in [0, delta]")
    q_epoch = np.asarray(q_epoch, dtype=float)
    p = choice_probabilities(q_epoch, params.theta)
    decay = math.exp(-params.mu * s)
    return q_epoch * decay + params.rho * p * (1.0 - decay)


def step_map(q_epoch, params: ModelParams) -> np.ndarray:
    """Epoch-to-epoch map: dense_solution evaluated at s = delta."""
    q_epoch = np.asarray(q_epoch, dtype=float)
    p = choice_probabilities(q_epoch, params.theta)
    a = math.exp(-params.mu * params.delta)
    return q_epoch * a + params.rho * p * (1.0 - a)


def initial_state(params: ModelParams, perturbation=0.01) -> np.ndarray:
    """Starting vector near the balanced equilibrium.

    A scalar perturbation d gives the default pattern: equilibrium + d on
    queue 1, equilibrium - d on queue 2, equilibrium elsewhere. A sequence of
    length n is applied per queue, which is how cluster-splitting starts
    (e.g. alternating +d/-d) are expressed: the default pattern leaves queues
    3..n identical and the dynamics preserve that tie forever.
    """
    eq = params.equilibrium
    q = np.full(params.n, eq, dtype=float)
    if np.isscalar(perturbation):
        q[0] += perturbation
        q[1] -= perturbation
    else:
        offsets = np.asarray(perturbation, dtype=float)
        if offsets.shape != (params.n,):
            raise ValueError(f"perturbation vector must have length {params.n}")
        q = q + offsets
    if np.any(q < 0):
        raise ValueError("initial state has a negative component")
    return q


def simulate(initial, params: ModelParams, horizon: float,
             samples_per_interval: int = 32) -> Trajectory:
    """Integrate the model exactly over [0, horizon].

    Each update interval is stepped with the closed-form exponential solution
    (routing probabilities frozen at the interval's left epoch) and sampled at
    samples_per_interval equally spaced points; a trailing partial interval is
    sampled at the same density. Every epoch within the horizon lands exactly
    on a sample row.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if samples_per_interval < 1:
        raise ValueError("samples_per_interval must be >= 1")
    q = np.asarray(initial, dtype=float)
    if q.shape != (params.n,):
        raise ValueError(f"initial state must have length {params.n}")

    spi = int(samples_per_interval)
    delta, mu, rho = params.delta, params.mu, params.rho
    n_full = int(math.floor(horizon / delta + 1e-12))

    times = [0.0]
    states = [q.copy()]
    epoch_rows = [0]

    sub = np.arange(1, spi + 1) * (delta / spi)
    decays = np.exp(-mu * sub)
    for k in range(n_full):
        p = choice_probabilities(q, params.theta)
        block = q[None, :] * decays[:, None] + rho * p[None, :] * (1.0 - decays)[:, None]
        t0 = k * delta
        times.extend(t0 + sub)
        states.extend(block)
        q = block[-1]
        epoch_rows.append(len(times) - 1)

    remainder = horizon - n_full * delta
    if remainder > 1e-12 * max(1.0, horizon):
        m = max(1, math.ceil(spi * remainder / delta))
        sub_r = np.arange(1, m + 1) * (remainder / m)
        decays_r = np.exp(-mu * sub_r)
        p = choice_probabilities(q, params.theta)
        block = q[None, :] * decays_r[:, None] + rho * p[None, :] * (1.0 - decays_r)[:, None]
        times.extend(n_full * delta + sub_r)
        states.extend(block)

    return Trajectory(params=params,
                      times=np.asarray(times),
                      states=np.asarray(states),
                      epoch_rows=np.asarray(epoch_rows, dtype=int))


def empirical_amplitude(traj: Trajectory, burn_in: float) -> EmpiricalAmplitude:
    """Per-queue oscillation amplitude (max - min)/2 over post-burn-in epochs.

    Within an interval each component moves monotonically toward its frozen
    target, so once transients have died the extremes of the sampled path are
    attained at epochs; measuring there avoids sampling-density artifacts.
    Requires at least 10 update intervals after burn_in.
    """
    params = traj.params
    horizon = float(traj.times[-1])
    if horizon - burn_in < 10 * params.delta:
        raise ValueError("need horizon - burn_in >= 10 * delta")
    keep = traj.epoch_times() >= burn_in - 1e-12
    window = traj.epoch_states()[keep]
    minima = window.min(axis=0)
    maxima = window.max(axis=0)
    return EmpiricalAmplitude((maxima - minima) / 2.0, minima, maxima)


def settle_interval(traj: Trajectory, tol: float = 1e-10):
    """Index of the first epoch after which successive epoch states differ by
    less than tol in max norm, or None if the path never settles."""
    eps = traj.epoch_states()
    diffs = np.abs(np.diff(eps, axis=0)).max(axis=1)
    hits = np.nonzero(diffs < tol)[0]
    return int(hits[0]) + 1 if hits.size else None
