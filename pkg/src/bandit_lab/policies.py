"""Learner-side policies behind one sequential-decision contract.

Every policy alternates ``select_arm()`` and ``observe(arm, state, reward)``
once per slot. Only the probed arm's state and reward are ever revealed.
Arm indices are 0-based throughout the code; user-facing output is 1-based.
"""

import math

from .exceptions import AmbiguousOptimum, ProtocolViolation

MEAN_TIE_TOL = 1e-12
WEIGHT_RESCALE_AT = 1e100


def argmax_lowest(values):
    """Index of the maximum, ties resolved to the lowest index."""
    best = 0
    best_val = values[0]
    for i in range(1, len(values)):
        if values[i] > best_val:
            best = i
            best_val = values[i]
    return best


class Policy:
    """Base class enforcing strict select/observe alternation."""

    name = "policy"

    def __init__(self, n_arms):
        if n_arms < 1:
            raise ValueError("need at least one arm")
        self.n_arms = n_arms
        self._pending = None

    def select_arm(self):
        if self._pending is not None:
            raise ProtocolViolation("select_arm called twice without observe")
        arm = self._select()
        self._pending = arm
        return arm

    def observe(self, arm, state, reward):
        if self._pending is None:
            raise ProtocolViolation("observe called without a pending select_arm")
        if arm != self._pending:
            raise ProtocolViolation(f"observation for arm {arm}, but arm {self._pending} was selected")
        self._pending = None
        self._update(arm, state, reward)

    def _select(self):
        raise NotImplementedError

    def _update(self, arm, state, reward):
        pass


# ---------------------------------------------------------------------------
# Regenerative cycle algorithm


def rca_index(r_total, T2, t2, L):
    """Sample mean over SB2 slots plus the exploration padding."""
    return r_total / T2 + math.sqrt(L * math.log(t2) / T2)


INIT = "INIT"
SB1 = "SB1"
SB2 = "SB2"


class RCA(Policy):
    """Regenerative cycle algorithm.

    The first ``K`` blocks play arms ``0..K-1`` in order. In its initial
    block an arm's first observed state becomes its regenerative state
    ``gamma`` and that slot already counts toward SB2. Every later block
    plays the index-maximizing arm: slots before the first visit to
    ``gamma`` form SB1, slots from that visit up to (excluding) the next one
    form SB2, and the closing visit is the single SB3 slot that ends the
    block. Only SB2 rewards enter the indices, which are recomputed for all
    arms at the end of each block once the initial blocks are done.

    Attributes mirror the bookkeeping counters: ``t`` (all slots), ``t2``
    (SB2 slots), ``T2`` and ``r`` (per-arm SB2 slots and reward), ``B``
    (per-arm completed blocks), ``b`` (completed blocks), ``gamma``,
    ``phase``, ``current`` and ``indices``.
    """

    name = "rca"

    def __init__(self, n_arms, L):
        super().__init__(n_arms)
        if not L > 0:
            raise ValueError("exploration constant L must be positive")
        self.L = float(L)
        self.t = 0
        self.t2 = 0
        self.b = 0
        self.T2 = [0] * n_arms
        self.r = [0.0] * n_arms
        self.B = [0] * n_arms
        self.gamma = [None] * n_arms
        self.indices = None
        self.current = 0
        self.phase = INIT

    def _select(self):
        return self.current

    def _update(self, arm, state, reward):
        self.t += 1
        if self.phase == SB2:
            if state == self.gamma[arm]:
                self._end_block(arm)
            else:
                self._count_sb2(arm, reward)
        elif self.phase == SB1:
            if state == self.gamma[arm]:
                self._count_sb2(arm, reward)
                self.phase = SB2
        else:
            self.gamma[arm] = state
            self._count_sb2(arm, reward)
            self.phase = SB2

    def _count_sb2(self, arm, reward):
        self.t2 += 1
        self.T2[arm] += 1
        self.r[arm] += reward

    def _end_block(self, arm):
        self.B[arm] += 1
        self.b += 1
        if self.b < self.n_arms:
            self.current = self.b
            self.phase = INIT
            return
        self.indices = [
            rca_index(self.r[j], self.T2[j], self.t2, self.L) for j in range(self.n_arms)
        ]
        self.current = argmax_lowest(self.indices)
        self.phase = SB1


# ---------------------------------------------------------------------------
# UCB1 with exploration constant L


def ucb1_index(mean, count, n, L):
    return mean + math.sqrt(L * math.log(n) / count)


class UCB1(Policy):
    """UCB1 with ``sqrt(L ln n / T)`` padding, ``n`` = slots played so far."""

    name = "ucb1"

    def __init__(self, n_arms, L):
        super().__init__(n_arms)
        if not L > 0:
            raise ValueError("exploration constant L must be positive")
        self.L = float(L)
        self.n = 0
        self.counts = [0] * n_arms
        self.totals = [0.0] * n_arms

    def indices(self):
        return [
            ucb1_index(self.totals[i] / self.counts[i], self.counts[i], self.n, self.L)
            for i in range(self.n_arms)
        ]

    def _select(self):
        if self.n < self.n_arms:
            return self.n
        return argmax_lowest(self.indices())

    def _update(self, arm, state, reward):
        self.n += 1
        self.counts[arm] += 1
        self.totals[arm] += reward


# ---------------------------------------------------------------------------
# Exp3


def exp3_probabilities(weights, a):
    """Mix normalized weights with the uniform law: ``(1-a) w/sum(w) + a/K``."""
    k = len(weights)
    total = sum(weights)
    return [(1.0 - a) * w / total + a / k for w in weights]


def exp3_update(weights, played, reward, p_played, a):
    """Multiply the played arm's weight by ``exp(a r / (K p))``.

    ``reward`` must already be scaled to [0, 1]. Weights are divided by
    their maximum once it exceeds 1e100; probabilities are unaffected.
    Returns a new list.
    """
    w = [float(x) for x in weights]
    w[played] *= math.exp(a * reward / (len(w) * p_played))
    top = max(w)
    if top > WEIGHT_RESCALE_AT:
        w = [x / top for x in w]
    return w


def exp3_horizon_rate(n_arms, horizon):
    """Horizon-tuned mixing rate ``min(1, sqrt(K ln K / ((e - 1) N)))``."""
    return min(1.0, math.sqrt(n_arms * math.log(n_arms) / ((math.e - 1.0) * horizon)))


class Exp3(Policy):
    """Exp3 with mixing rate ``a``; rewards are divided by ``reward_scale``.

    Sampling uses one uniform variate from the policy's own stream per slot,
    inverse CDF over arms in index order.
    """

    name = "exp3"

    def __init__(self, n_arms, a, rng, reward_scale=1.0):
        super().__init__(n_arms)
        if not 0 < a <= 1:
            raise ValueError("Exp3 mixing rate a must lie in (0, 1]")
        if not reward_scale > 0:
            raise ValueError("reward_scale must be positive")
        self.a = float(a)
        self.rng = rng
        self.reward_scale = float(reward_scale)
        self.weights = [1.0] * n_arms
        self.probabilities = exp3_probabilities(self.weights, self.a)

    def _select(self):
        self.probabilities = p = exp3_probabilities(self.weights, self.a)
        u = self.rng.random()
        acc = 0.0
        for arm in range(self.n_arms - 1):
            acc += p[arm]
            if u < acc:
                return arm
        return self.n_arms - 1

    def _update(self, arm, state, reward):
        self.weights = exp3_update(
            self.weights, arm, reward / self.reward_scale, self.probabilities[arm], self.a
        )


# ---------------------------------------------------------------------------
# Reference policies


class FixedArm(Policy):
    name = "fixed"

    def __init__(self, n_arms, arm):
        super().__init__(n_arms)
        if not 0 <= arm < n_arms:
            raise ValueError(f"arm {arm} out of range for {n_arms} arms")
        self.arm = arm

    def _select(self):
        return self.arm


class UniformRandom(Policy):
    name = "random"

    def __init__(self, n_arms, rng):
        super().__init__(n_arms)
        self.rng = rng

    def _select(self):
        return min(int(self.rng.random() * self.n_arms), self.n_arms - 1)


def best_fixed_arm(means):
    """Index of the arm with the largest stationary mean reward.

    ``means`` may be a sequence of floats or a scenario exposing ``means``.
    Raises :class:`AmbiguousOptimum` if the maximum is not unique.
    """
    means = list(getattr(means, "means", means))
    best = argmax_lowest(means)
    for i, m in enumerate(means):
        if i != best and abs(m - means[best]) <= MEAN_TIE_TOL:
            raise AmbiguousOptimum(f"arms {best + 1} and {i + 1} share the largest mean {m}")
    return best


class Oracle(FixedArm):
    """Always plays the best single arm (it reads the true means)."""

    name = "oracle"

    def __init__(self, means):
        means = list(means)
        super().__init__(len(means), best_fixed_arm(means))
