"""Finite-time regret-bound constants for the regenerative cycle algorithm.

:func:`bound_report` collects every scenario-level and per-arm constant;
:func:`theorem1_bound` evaluates the weighted suboptimal-play bound and
:func:`theorem2_bound` the full regret bound. The eigenvalue gap can be
taken on the multiplicative symmetrization (``"symmetrized"``, default) or
on the raw transition matrix (``"raw"``, requires reversible arms).
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .arm_models import CONVENTIONS, SYMMETRIZED
from .exceptions import IrreducibilityViolated

BETA = math.pi ** 2 / 6
THRESHOLD_FACTOR = 112.0


class BelowThresholdWarning(UserWarning):
    """L is smaller than the exploration threshold; the bound is not guaranteed."""


def _check_convention(convention):
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")


def _arm_gaps(scenario, convention):
    _check_convention(convention)
    gaps = []
    for i, arm in enumerate(scenario.arms):
        if convention == SYMMETRIZED and not arm.symmetrized_irreducible:
            raise IrreducibilityViolated(
                f"arm {i + 1}: multiplicative symmetrization is reducible", arm_index=i
            )
        gaps.append(arm.eigenvalue_gap(convention))
    return gaps


@dataclass(frozen=True)
class BoundReport:
    """Constants of the RCA regret bounds for one scenario."""

    convention: str
    mu: np.ndarray
    best_arm: int
    best_mean: float
    pi_min: float
    r_max: float
    s_max: int
    pi_hat_max: float
    eps_min: float
    beta: float
    arm_pi_min: np.ndarray
    arm_m_max: np.ndarray
    arm_eps: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: float
    l_threshold: float

    @property
    def suboptimal(self):
        return np.flatnonzero(self.mu < self.best_mean)

    @property
    def gaps(self):
        return self.best_mean - self.mu

    def theorem1(self, L, n):
        i = self.suboptimal
        d = self.gaps[i]
        return float(np.sum(4 * L * self.D[i] * math.log(n) / d + d * self.D[i] * self.C[i]))

    def play_bounds(self, L, n):
        """Per-arm bound on expected plays, ``theorem1`` term / gap (0 for the best arm)."""
        out = np.zeros(self.mu.shape[0])
        i = self.suboptimal
        d = self.gaps[i]
        out[i] = 4 * L * self.D[i] * math.log(n) / d ** 2 + self.D[i] * self.C[i]
        return out

    def log_coefficient(self):
        """Sum multiplying ``4 L ln n`` in the full bound."""
        i = self.suboptimal
        d = self.gaps[i]
        return float(np.sum((self.D[i] + self.E[i] / d) / d))

    def theorem2(self, L, n):
        i = self.suboptimal
        d = self.gaps[i]
        constant = float(np.sum(self.C[i] * (d * self.D[i] + self.E[i]))) + self.F
        return 4 * L * math.log(n) * self.log_coefficient() + constant

    def bound(self, L):
        """Return ``n -> theorem2(L, n)``."""
        return lambda n: self.theorem2(L, n)


def bound_report(scenario, convention=SYMMETRIZED):
    gaps = np.array(_arm_gaps(scenario, convention))
    arms = scenario.arms
    mu = np.array(scenario.means)
    best = scenario.optimal_arm
    mu_star = float(mu[best])
    arm_pi_min = np.array([arm.min_stationary for arm in arms])
    arm_m_max = np.array([arm.max_hitting_time for arm in arms])
    sizes = np.array([arm.n_states for arm in arms])
    pi_min = float(arm_pi_min.min())
    pi_hat_max = max(float(np.max(np.maximum(arm.stationary, 1 - arm.stationary))) for arm in arms)
    r_max = scenario.max_reward
    s_max = int(sizes.max())
    eps_min = float(gaps.min())

    C = 1 + (sizes + sizes[best]) * BETA / pi_min
    D = 1 / arm_pi_min + arm_m_max + 1
    E = mu * (1 + arm_m_max) + mu_star * arm_m_max[best]
    F = mu_star * (1 / pi_min + float(arm_m_max.max()) + 1)
    threshold = THRESHOLD_FACTOR * s_max ** 2 * r_max ** 2 * pi_hat_max ** 2 / eps_min
    return BoundReport(
        convention=convention,
        mu=mu,
        best_arm=best,
        best_mean=mu_star,
        pi_min=pi_min,
        r_max=r_max,
        s_max=s_max,
        pi_hat_max=pi_hat_max,
        eps_min=eps_min,
        beta=BETA,
        arm_pi_min=arm_pi_min,
        arm_m_max=arm_m_max,
        arm_eps=gaps,
        C=C,
        D=D,
        E=E,
        F=F,
        l_threshold=threshold,
    )


def l_threshold(scenario, convention=SYMMETRIZED):
    """Smallest L for which the logarithmic bound is guaranteed."""
    return bound_report(scenario, convention).l_threshold


def _checked_report(scenario, L, n, convention):
    if n < 1:
        raise ValueError("horizon n must be >= 1")
    if not L > 0:
        raise ValueError("L must be positive")
    report = bound_report(scenario, convention)
    if L < report.l_threshold:
        warnings.warn(
            f"L={L:g} is below the threshold {report.l_threshold:.6g}; "
            "the bound is evaluated but not guaranteed",
            BelowThresholdWarning,
            stacklevel=3,
        )
    return report


def theorem1_bound(scenario, L, n, convention=SYMMETRIZED):
    """Bound on ``sum_i (mu* - mu_i) E[T_i(n)]`` over suboptimal arms."""
    return _checked_report(scenario, L, n, convention).theorem1(L, n)


def theorem2_bound(scenario, L, n, convention=SYMMETRIZED):
    """Upper bound on the RCA regret at horizon ``n``."""
    return _checked_report(scenario, L, n, convention).theorem2(L, n)
