"""Restless environment driver and Monte Carlo aggregation.

All arms advance every slot whether probed or not. Randomness per run is
split into two independent streams derived from the run seed: the arm
stream (initial stationary draws in arm order, then one variate per arm per
slot in arm order) and the policy stream (Exp3 and the uniform-random
baseline). Arm paths therefore do not depend on which policy is running,
which lets an episode draw every arm path up front.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .arm_models import ArmModel, simulate_paths
from .policies import (
    RCA,
    UCB1,
    Exp3,
    FixedArm,
    Oracle,
    UniformRandom,
    best_fixed_arm,
    exp3_horizon_rate,
)

DEFAULT_STRIDE = 100
THREADS_ENV = "BANDIT_LAB_THREADS"


@dataclass(frozen=True, eq=False)
class Scenario:
    """An ordered set of arms with a unique best stationary mean."""

    arms: tuple
    name: str = "custom"

    def __post_init__(self):
        arms = tuple(self.arms)
        if not arms:
            raise ValueError("a scenario needs at least one arm")
        for i, arm in enumerate(arms):
            if not isinstance(arm, ArmModel):
                raise TypeError(f"arm {i + 1} is not an ArmModel")
        object.__setattr__(self, "arms", arms)
        best_fixed_arm([arm.mean_reward for arm in arms])

    @property
    def n_arms(self):
        return len(self.arms)

    @property
    def means(self):
        return [arm.mean_reward for arm in self.arms]

    @property
    def optimal_arm(self):
        return best_fixed_arm(self.means)

    @property
    def best_mean(self):
        return self.arms[self.optimal_arm].mean_reward

    @property
    def max_reward(self):
        return max(float(arm.rewards.max()) for arm in self.arms)

    def to_dict(self):
        return {
            "name": self.name,
            "arms": [
                {
                    "transition": arm.transition.tolist(),
                    "rewards": arm.rewards.tolist(),
                    **({"states": list(arm.state_labels)} if arm.state_labels else {}),
                }
                for arm in self.arms
            ],
        }


# (p01, p10) per Gilbert-Elliott channel; rewards (bad, good) = (0.1, 1).
TABLE_S1 = ((0.01, 0.03), (0.04, 0.01), (0.03, 0.01), (0.02, 0.01), (0.01, 0.02))
TABLE_S2 = ((0.1, 0.2), (0.1, 0.3), (0.5, 0.1), (0.1, 0.4), (0.1, 0.5))


def _gilbert_elliott(name, table):
    arms = [ArmModel.two_state(p01, p10, 0.1, 1.0, name=f"ch.{i + 1}") for i, (p01, p10) in enumerate(table)]
    return Scenario(tuple(arms), name=name)


def builtin_scenarios():
    return {"S1": _gilbert_elliott("S1", TABLE_S1), "S2": _gilbert_elliott("S2", TABLE_S2)}


@dataclass(frozen=True)
class PolicySpec:
    """Recipe for a fresh policy instance per run.

    ``kind`` is one of ``rca``, ``ucb1``, ``exp3``, ``oracle``, ``fixed``,
    ``random``. ``a`` may be ``"auto"`` for the horizon-tuned Exp3 rate.
    ``arm`` is the 0-based arm for ``fixed``.
    """

    kind: str
    L: float = None
    a: object = None
    arm: int = None

    KINDS = ("rca", "ucb1", "exp3", "oracle", "fixed", "random")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown policy {self.kind!r}")
        if self.kind in ("rca", "ucb1"):
            if self.L is None:
                raise ValueError(f"policy {self.kind} requires L")
            if self.a is not None:
                raise ValueError(f"policy {self.kind} does not take a")
        elif self.L is not None:
            raise ValueError(f"policy {self.kind} does not take L")
        if self.kind == "exp3":
            if self.a is None:
                raise ValueError("policy exp3 requires a")
        elif self.a is not None:
            raise ValueError(f"policy {self.kind} does not take a")
        if (self.kind == "fixed") != (self.arm is not None):
            raise ValueError("an arm index is given exactly for the fixed policy")

    def resolved_a(self, n_arms, horizon):
        if self.a == "auto":
            return exp3_horizon_rate(n_arms, horizon)
        return float(self.a)

    @property
    def label(self):
        if self.kind == "fixed":
            return f"fixed:{self.arm + 1}"
        return self.kind

    def build(self, scenario, horizon, rng):
        k = scenario.n_arms
        if self.kind == "rca":
            return RCA(k, self.L)
        if self.kind == "ucb1":
            return UCB1(k, self.L)
        if self.kind == "exp3":
            return Exp3(k, self.resolved_a(k, horizon), rng, reward_scale=scenario.max_reward)
        if self.kind == "oracle":
            return Oracle(scenario.means)
        if self.kind == "fixed":
            return FixedArm(k, self.arm)
        return UniformRandom(k, rng)


@dataclass
class RegretTrace:
    """Cumulative reward and weak regret of one run at checkpoint slots."""

    t: np.ndarray
    cumulative_reward: np.ndarray
    regret: np.ndarray
    plays: np.ndarray
    best_mean: float
    seed: object = None
    policy: str = ""
    actions: np.ndarray = None
    arm_states: np.ndarray = None


def checkpoint_slots(horizon, stride):
    if stride < 1:
        raise ValueError("checkpoint stride must be >= 1")
    ts = list(range(stride, horizon + 1, stride))
    if not ts or ts[-1] != horizon:
        ts.append(horizon)
    return np.array(ts, dtype=np.int64)


def run_seed(master_seed, j):
    """Seed of run ``j``: child ``j`` of the master seed sequence."""
    return np.random.SeedSequence(master_seed, spawn_key=(j,))


def _streams(seed):
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    arm_ss = np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (0,))
    pol_ss = np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (1,))
    return np.random.default_rng(arm_ss), np.random.default_rng(pol_ss)


def arm_paths(scenario, horizon, arm_rng, initial_states=None):
    """Initial states and ``(horizon, K)`` state paths from the arm stream."""
    if initial_states is None:
        initial = [arm.sample_stationary(arm_rng) for arm in scenario.arms]
    else:
        initial = [int(s) for s in initial_states]
        if len(initial) != scenario.n_arms:
            raise ValueError("one initial state per arm is required")
        for i, (s, arm) in enumerate(zip(initial, scenario.arms)):
            if not 0 <= s < arm.n_states:
                raise ValueError(f"initial state {s} out of range for arm {i + 1}")
    uniforms = arm_rng.random((horizon, scenario.n_arms))
    return initial, simulate_paths(scenario.arms, initial, uniforms)


def run_episode(scenario, policy, horizon, seed, stride=DEFAULT_STRIDE,
                initial_states=None, record=False):
    """Play one episode.

    ``policy`` is a :class:`PolicySpec` (built with the run's policy
    stream) or an already constructed policy. With ``record=True`` the
    trace also carries the action sequence and the full arm-state paths.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    arm_rng, policy_rng = _streams(seed)
    _, paths = arm_paths(scenario, horizon, arm_rng, initial_states)
    if isinstance(policy, PolicySpec):
        label = policy.label
        policy = policy.build(scenario, horizon, policy_rng)
    else:
        label = getattr(policy, "name", type(policy).__name__)

    checkpoints = checkpoint_slots(horizon, stride)
    cum_at = np.empty(checkpoints.shape[0])
    rewards = [arm.rewards.tolist() for arm in scenario.arms]
    path_rows = paths.tolist()
    plays = [0] * scenario.n_arms
    actions = np.empty(horizon, dtype=np.int64) if record else None

    select = policy.select_arm
    observe = policy.observe
    cum = 0.0
    c = 0
    next_cp = int(checkpoints[0])
    for t in range(horizon):
        a = select()
        s = path_rows[t][a]
        r = rewards[a][s]
        cum += r
        plays[a] += 1
        observe(a, s, r)
        if record:
            actions[t] = a
        if t + 1 == next_cp:
            cum_at[c] = cum
            c += 1
            if c < checkpoints.shape[0]:
                next_cp = int(checkpoints[c])

    mu_star = scenario.best_mean
    return RegretTrace(
        t=checkpoints,
        cumulative_reward=cum_at,
        regret=checkpoints * mu_star - cum_at,
        plays=np.array(plays, dtype=np.int64),
        best_mean=mu_star,
        seed=seed,
        policy=label,
        actions=actions,
        arm_states=paths if record else None,
    )


@dataclass
class MonteCarloResult:
    t: np.ndarray
    mean_regret: np.ndarray
    sd_regret: np.ndarray
    mean_cum_reward: np.ndarray
    mean_plays: np.ndarray
    runs: int
    config: dict = field(default_factory=dict)
    final_regrets: np.ndarray = None

    def std_error(self):
        return self.sd_regret / np.sqrt(self.runs)

    def at(self, slot):
        """Mean regret at checkpoint ``slot``."""
        idx = np.flatnonzero(self.t == slot)
        if idx.size == 0:
            raise KeyError(f"slot {slot} is not a checkpoint")
        return float(self.mean_regret[idx[0]])


def worker_count(runs):
    env = os.environ.get(THREADS_ENV)
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, runs))


def _run_batch(args):
    scenario, spec, horizon, master_seed, stride, indices, initial_states = args
    out = []
    for j in indices:
        tr = run_episode(scenario, spec, horizon, run_seed(master_seed, j), stride, initial_states)
        out.append((j, tr.cumulative_reward, tr.plays))
    return out


def monte_carlo(scenario, policy_spec, horizon, runs, master_seed, stride=DEFAULT_STRIDE,
                workers=None, initial_states=None, order=None):
    """Run ``runs`` independent episodes and aggregate at shared checkpoints.

    Run ``j`` uses seed ``run_seed(master_seed, j)``, so the result does not
    depend on ``workers`` or on the execution ``order`` (a permutation of
    run indices, used by tests).
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    indices = list(range(runs)) if order is None else [int(j) for j in order]
    if sorted(indices) != list(range(runs)):
        raise ValueError("order must be a permutation of range(runs)")
    workers = worker_count(runs) if workers is None else max(1, min(int(workers), runs))

    batches = [indices[w::workers] for w in range(workers)]
    jobs = [(scenario, policy_spec, horizon, master_seed, stride, b, initial_states) for b in batches]
    if workers == 1:
        results = [_run_batch(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_batch, jobs))

    by_run = {}
    for batch in results:
        for j, cum, plays in batch:
            by_run[j] = (cum, plays)
    checkpoints = checkpoint_slots(horizon, stride)
    cum = np.stack([by_run[j][0] for j in range(runs)])
    plays = np.stack([by_run[j][1] for j in range(runs)])
    regret = checkpoints[None, :] * scenario.best_mean - cum
    sd = regret.std(axis=0, ddof=1) if runs > 1 else np.zeros(checkpoints.shape[0])

    config = {
        "scenario": scenario.name,
        "policy": policy_spec.label,
        "horizon": horizon,
        "runs": runs,
        "master_seed": master_seed,
        "stride": stride,
    }
    if policy_spec.L is not None:
        config["L"] = policy_spec.L
    if policy_spec.kind == "exp3":
        config["a"] = policy_spec.resolved_a(scenario.n_arms, horizon)
    return MonteCarloResult(
        t=checkpoints,
        mean_regret=regret.mean(axis=0),
        sd_regret=sd,
        mean_cum_reward=cum.mean(axis=0),
        mean_plays=plays.mean(axis=0),
        runs=runs,
        config=config,
        final_regrets=regret[:, -1].copy(),
    )
