"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is
printed in the terminal summary.

Run alone with ``pytest tests/test_acceptance.py``.
"""

import math
import os
import subprocess
import sys
import time

import mpmath
import numpy as np
import pytest

import conftest
from bandit_lab.arm_models import ArmModel, step
from bandit_lab.policies import Exp3, exp3_horizon_rate, exp3_probabilities
from bandit_lab.regret_bounds import bound_report, l_threshold
from bandit_lab.sim_engine import PolicySpec, monte_carlo, run_episode

from oracles import (
    literal_rca,
    mc_hitting_time,
    power_iteration_stationary,
    random_chain,
    scripted_observer,
    second_eigenvalue_general,
    two_state_closed_form,
)
from test_policies import snapshots

HORIZON = 100_000
RUNS = 100
MASTER_SEED = 20_100_707


def report(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------


def test_c1_l_threshold_reproduction(s1, s2):
    start = time.perf_counter()
    L1 = l_threshold(s1, "raw")
    L2 = l_threshold(s2, "raw")
    elapsed = time.perf_counter() - start
    rel1 = abs(L1 - 9556) / 9556
    rel2 = abs(L2 - 1037.2) / 1037.2
    ok = (abs(L1 - 9557.3) < 0.05 and abs(L2 - 1037.04) < 0.005
          and rel1 <= 0.0015 and rel2 <= 0.0015 and elapsed < 1.0)
    report(1, ok, f"S1 {L1:.2f} (rel {rel1:.2e} vs 9556), S2 {L2:.3f} (rel {rel2:.2e} vs 1037.2), {elapsed:.3f}s")


# ---------------------------------------------------------------------------


def fundamental_matrix_hitting_times(P, pi):
    """Hitting times via Z = (I - P + 1 pi)^-1: M[x, y] = (Z[y, y] - Z[x, y]) / pi[y]."""
    n = P.shape[0]
    Z = np.linalg.inv(np.eye(n) - P + np.outer(np.ones(n), pi))
    return (np.diag(Z)[None, :] - Z) / pi[None, :]


def test_c2_chain_analytics_oracles(s1, s2):
    start = time.perf_counter()
    failures = []
    table_arms = list(s1.arms) + list(s2.arms)
    for i, arm in enumerate(table_arms):
        cf = two_state_closed_form(arm.transition[0, 1], arm.transition[1, 0])
        checks = {
            "pi": np.max(np.abs(arm.stationary - cf["pi"])),
            "M01": abs(arm.hitting_times[0, 1] - cf["M01"]),
            "M10": abs(arm.hitting_times[1, 0] - cf["M10"]),
            "eps_raw": abs(arm.eigenvalue_gap_raw - (1 - cf["lambda2_raw"])),
            "eps_sym": abs(arm.eigenvalue_gap_symmetrized - (1 - cf["lambda2_sym"])),
        }
        failures += [f"table arm {i + 1} {k} off by {v:.2e}" for k, v in checks.items() if v > 1e-10]

    rng = np.random.default_rng(MASTER_SEED)
    n_stat = 0
    for c in range(20):
        n = 2 + c % 3
        P = random_chain(rng, n)
        arm = ArmModel(P, np.ones(n))
        pi = arm.stationary
        if np.max(np.abs(pi - power_iteration_stationary(P))) > 1e-10:
            failures.append(f"chain {c}: stationary vs power iteration")
        if np.max(np.abs(arm.hitting_times - fundamental_matrix_hitting_times(P, pi))) > 1e-10 * max(1, arm.max_hitting_time):
            failures.append(f"chain {c}: hitting times vs fundamental matrix")
        if abs(arm.eigenvalue_gap_symmetrized - (1 - second_eigenvalue_general(arm.symmetrization))) > 1e-10:
            failures.append(f"chain {c}: symmetrized gap vs general eigensolver")
        for x in range(n):
            for y in range(n):
                if x == y:
                    continue
                mean, se = mc_hitting_time(P, x, y, 100_000, rng)
                n_stat += 1
                if abs(mean - arm.hitting_times[x, y]) > 3 * se:
                    failures.append(f"chain {c}: MC hitting time {x}->{y} {mean:.4f} vs {arm.hitting_times[x, y]:.4f} (se {se:.4f})")
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 30
    detail = f"10 table arms + 20 random chains, {n_stat} Monte Carlo hitting-time checks, {elapsed:.1f}s"
    report(2, ok, detail + ("" if not failures else "; " + "; ".join(failures[:5])))


# ---------------------------------------------------------------------------


def test_c3_regenerative_occupation_identity(s1):
    start = time.perf_counter()
    arm = s1.arms[0]
    rng = np.random.default_rng(MASTER_SEED + 3)
    n_cycles = 10_000
    visits = np.empty(n_cycles)
    lengths = np.empty(n_cycles)
    for c in range(n_cycles):
        s, length, hits = 0, 0, 0
        while True:
            s = step(arm, s, rng)
            length += 1
            if s == 0:
                break
            hits += s == 1
        visits[c] = hits
        lengths[c] = length
    expected = (1 / arm.stationary[0]) * arm.stationary[1]
    se = visits.std(ddof=1) / math.sqrt(n_cycles)
    elapsed = time.perf_counter() - start
    ok = abs(visits.mean() - expected) <= 3 * se and elapsed < 5
    report(3, ok, f"mean visits {visits.mean():.4f} vs E[tau]*pi_1 = {expected:.4f} "
                  f"(3 se = {3 * se:.4f}; mean cycle {lengths.mean():.4f}), {elapsed:.2f}s")


# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def s2_rca(s2):
    start = time.perf_counter()
    res = monte_carlo(s2, PolicySpec("rca", L=1037.2), HORIZON, RUNS, MASTER_SEED, stride=1000)
    return res, time.perf_counter() - start


def test_c4a_rca_below_theorem2(s2, s2_rca):
    res, elapsed = s2_rca
    bound = bound_report(s2, "raw").theorem2(1037.2, HORIZON)
    final = res.at(HORIZON)
    report("4a", final < bound and elapsed < 120,
           f"S2 RCA L=1037.2 mean regret(1e5) = {final:.1f} < bound {bound:.4g}, MC {elapsed:.1f}s")


def test_c4b_rca_log_growth_ratio(s2_rca):
    res, elapsed = s2_rca
    r4, r5 = res.at(10_000), res.at(HORIZON)
    ratio = r5 / r4
    report("4b", ratio <= 2.0 and elapsed < 120,
           f"S2 RCA L=1037.2 regret(1e5)/regret(1e4) = {r5:.1f}/{r4:.1f} = {ratio:.3f} (limit 2.0)")


def test_c4c_rca_plays_below_theorem1(s2, s2_rca):
    res, _ = s2_rca
    rep = bound_report(s2, "raw")
    limits = rep.play_bounds(1037.2, HORIZON)
    sub = rep.suboptimal
    ok = all(res.mean_plays[i] < limits[i] for i in sub)
    pairs = ", ".join(f"arm {i + 1}: {res.mean_plays[i]:.0f} < {limits[i]:.3g}" for i in sub)
    report("4c", ok, f"mean suboptimal plays at 1e5: {pairs}")


# ---------------------------------------------------------------------------

S1_RCA_L = 10.0


@pytest.fixture(scope="module")
def s1_baselines(s1):
    specs = {
        "oracle": PolicySpec("oracle"),
        "rca": PolicySpec("rca", L=S1_RCA_L),
        "random": PolicySpec("random"),
        "fixed:1": PolicySpec("fixed", arm=0),
    }
    start = time.perf_counter()
    results = {k: monte_carlo(s1, spec, HORIZON, RUNS, MASTER_SEED, stride=HORIZON) for k, spec in specs.items()}
    return results, time.perf_counter() - start


def test_c5_baseline_sanity(s1, s1_baselines):
    results, elapsed = s1_baselines
    oracle, rca, rand, fixed = (results[k].at(HORIZON) for k in ("oracle", "rca", "random", "fixed:1"))
    target = (s1.best_mean - s1.arms[0].mean_reward) * HORIZON
    fixed_rel = abs(fixed - target) / target
    ok = oracle < rca < rand and fixed_rel <= 0.01 and elapsed < 180
    report(5, ok, f"S1 mean regret(1e5): oracle {oracle:.1f} < RCA(L={S1_RCA_L:g}) {rca:.1f} < random {rand:.1f}; "
                  f"fixed ch.1 {fixed:.1f} vs {target:.0f} (rel {fixed_rel:.2e}); {elapsed:.1f}s")


# ---------------------------------------------------------------------------


class RecordingExp3(Exp3):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.history = []

    def _select(self):
        arm = super()._select()
        self.history.append((list(self.weights), list(self.probabilities)))
        return arm


def test_c6_exp3_invariants(s1):
    problems = []
    for a in (0.1, exp3_horizon_rate(5, HORIZON)):
        pol = RecordingExp3(5, a, np.random.default_rng(MASTER_SEED), reward_scale=s1.max_reward)
        run_episode(s1, pol, 10_000, MASTER_SEED)
        for t, (w, p) in enumerate(pol.history):
            if abs(sum(p) - 1) > 1e-12 or min(p) < a / 5 - 1e-15:
                problems.append(f"a={a:g} slot {t + 1}: sum {sum(p)!r}, min {min(p)!r}")
                break
            top = max(w)
            for c in (1 / top, 1e-50, 1e50):
                q = exp3_probabilities([x * c for x in w], a)
                if max(abs(x - y) for x, y in zip(p, q)) > 1e-12:
                    problems.append(f"a={a:g} slot {t + 1}: rescale by {c:g} moved probabilities")
                    break
    a2 = exp3_horizon_rate(5, HORIZON)
    exact = float(mpmath.sqrt(5 * mpmath.log(5) / ((mpmath.e - 1) * HORIZON)))
    if abs(a2 - exact) > 1e-15:
        problems.append(f"a2 = {a2!r} vs {exact!r}")
    report(6, not problems, f"10^4-slot S1 runs at a=0.1 and a2; a2(K=5, N=1e5) = {a2:.7f}"
                            + ("" if not problems else "; " + "; ".join(problems)))


# ---------------------------------------------------------------------------


def test_c7_cli_determinism(tmp_path):
    argv = [sys.executable, "-m", "bandit_lab.cli", "simulate", "--scenario", "S2", "--policy", "rca",
            "--L", "1037.2", "--seed", "7", "--horizon", "20000", "--runs", "12"]
    outputs = []
    for i, threads in enumerate(("1", "1", "2")):
        path = tmp_path / f"run{i}.csv"
        env = dict(os.environ, BANDIT_LAB_THREADS=threads)
        proc = subprocess.run(argv + ["--out", str(path)], env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            report(7, False, f"exit {proc.returncode}: {proc.stderr.strip()}")
        outputs.append(path.read_bytes())
    ok = outputs[0] == outputs[1] == outputs[2]
    report(7, ok, f"3 invocations (threads 1, 1, 2), {len(outputs[0])} bytes each, identical={ok}")


# ---------------------------------------------------------------------------

SCRIPTS = {
    "empty SB1 blocks": (2, 1.0, [[0, 0, 1, 0], [1, 1, 0, 1]]),
    "multi-slot SB1": (3, 2.0, [[1, 0, 0, 0, 1, 0], [0, 1, 1, 1, 0], [2, 0, 1, 0, 2, 1, 1]]),
    "K=1": (1, 5.0, [[0, 1, 1, 0, 1]]),
}


def test_c8_rca_scripted_traces():
    problems = []
    blocks = 0
    for name, (k, L, scripts) in SCRIPTS.items():
        rewards = [[0.1, 1.0, 0.5]] * k
        expected = literal_rca(k, L, scripted_observer(scripts, rewards), 3000)
        _, got = snapshots((k, L), scripts, rewards, 3000)
        if len(got) != len(expected):
            problems.append(f"{name}: {len(got)} blocks vs {len(expected)}")
            continue
        for j, (e, g) in enumerate(zip(expected, got)):
            same_idx = (e[4] is None and g[4] is None) or (
                e[4] is not None and g[4] is not None and np.allclose(e[4], g[4], rtol=0, atol=1e-12))
            if g[:4] != e[:4] or g[5] != e[5] or not same_idx:
                problems.append(f"{name}: block {j + 1} differs")
                break
        blocks += len(expected)
    report(8, not problems, f"{blocks} block boundaries over {len(SCRIPTS)} scripts match the literal pseudocode"
                            + ("" if not problems else "; " + "; ".join(problems)))
