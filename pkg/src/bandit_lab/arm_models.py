"""Finite-state Markov-chain arms and the chain analytics the regret bounds use.

An arm is an irreducible, aperiodic chain over states ``0..S-1`` with a
strictly positive reward attached to every state. Everything derived from
the transition matrix (stationary law, mean reward, multiplicative
symmetrization, eigenvalue gaps, mean hitting times) is computed once and
cached on the immutable :class:`ArmModel`.
"""

from dataclasses import dataclass, field
from functools import cached_property
from math import gcd

import numba
import numpy as np
from scipy.sparse.csgraph import connected_components

from .exceptions import (
    ComplexSpectrum,
    IrreducibilityViolated,
    NotStochastic,
    Periodic,
    Reducible,
    SingularSystem,
)

STOCHASTIC_TOL = 1e-12
STATIONARY_TOL = 1e-10
SYMMETRY_TOL = 1e-9
HITTING_TOL = 1e-9
MAX_STATES = 64

SYMMETRIZED = "symmetrized"
RAW = "raw"
CONVENTIONS = (SYMMETRIZED, RAW)


def _as_matrix(P):
    P = np.array(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise NotStochastic(f"transition matrix must be square, got shape {P.shape}")
    if P.shape[0] > MAX_STATES:
        raise NotStochastic(f"at most {MAX_STATES} states per arm, got {P.shape[0]}")
    if not np.all(np.isfinite(P)):
        raise NotStochastic("transition matrix has non-finite entries")
    return P


def _is_irreducible(P):
    n_comp, _ = connected_components(P > 0, directed=True, connection="strong")
    return n_comp == 1


def chain_period(P):
    """Period of an irreducible chain.

    Uses BFS levels from state 0: the period is the gcd of
    ``level[u] + 1 - level[v]`` over all edges ``u -> v``.
    """
    adj = np.asarray(P) > 0
    n = adj.shape[0]
    level = [-1] * n
    level[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(adj[u]):
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(int(v))
        frontier = nxt
    period = 0
    for u, v in zip(*np.nonzero(adj)):
        period = gcd(period, abs(level[u] + 1 - level[v]))
    return period


def validate_chain(P):
    """Return ``P`` as a float array if it is a valid arm chain.

    Raises
    ------
    NotStochastic
        Negative entries, or a row sum off by more than 1e-12.
    Reducible
        More than one communicating class.
    Periodic
        Irreducible but with period > 1.
    """
    P = _as_matrix(P)
    if np.any(P < 0):
        row, col = np.argwhere(P < 0)[0]
        raise NotStochastic(f"negative entry at row {row}, column {col}")
    row_err = np.abs(P.sum(axis=1) - 1.0)
    if np.any(row_err > STOCHASTIC_TOL):
        row = int(np.argmax(row_err))
        raise NotStochastic(f"row {row} sums to {P[row].sum()!r}, not 1")
    if not _is_irreducible(P):
        raise Reducible("chain has more than one communicating class")
    period = chain_period(P)
    if period != 1:
        raise Periodic(f"chain has period {period}")
    return P


def stationary_distribution(P):
    """Unique stationary vector of an irreducible chain.

    Solves ``(P^T - I) pi = 0`` with the last equation replaced by the
    normalization ``sum(pi) = 1``.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("stationary system is singular") from exc
    residual = np.max(np.abs(pi @ P - pi))
    if not np.all(np.isfinite(pi)) or residual > STATIONARY_TOL or np.any(pi <= 0):
        raise SingularSystem(f"stationary solve is degenerate (residual {residual:.3g})")
    return pi


def time_reversal(P, pi):
    """Adjoint of ``P`` on l2(pi): ``P'[x, y] = pi[y] P[y, x] / pi[x]``."""
    P = np.asarray(P, dtype=float)
    pi = np.asarray(pi, dtype=float)
    return (P.T * pi[None, :]) / pi[:, None]


def multiplicative_symmetrization(P, pi):
    """``P_hat = P' P`` where ``P'`` is the time reversal of ``P``.

    Raises :class:`IrreducibilityViolated` when ``P_hat`` is reducible.
    """
    P_hat = time_reversal(P, pi) @ np.asarray(P, dtype=float)
    if not _is_irreducible(P_hat):
        raise IrreducibilityViolated("multiplicative symmetrization is reducible")
    return P_hat


def conjugated_spectrum(M, pi):
    """Eigenvalues (descending) of ``D^{1/2} M D^{-1/2}``, ``D = diag(pi)``."""
    M = np.asarray(M, dtype=float)
    s = np.sqrt(np.asarray(pi, dtype=float))
    A = s[:, None] * M / s[None, :]
    asym = np.max(np.abs(A - A.T))
    if asym > SYMMETRY_TOL:
        raise ComplexSpectrum(
            f"conjugated matrix is not symmetric (max asymmetry {asym:.3g}); "
            "use the symmetrized convention"
        )
    return np.linalg.eigvalsh((A + A.T) / 2)[::-1]


def eigenvalue_gap(M, pi):
    """``1 - lambda_2`` of a pi-self-adjoint stochastic matrix.

    Pass ``P_hat`` for the symmetrized gap, or a reversible ``P`` for the
    raw gap. A single-state chain has gap 1.
    """
    eig = conjugated_spectrum(M, pi)
    if eig.size < 2:
        return 1.0
    return float(1.0 - eig[1])


def mean_hitting_times(P):
    """Matrix ``M[x, y]`` of expected slots to first reach ``y`` from ``x``."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    M = np.zeros((n, n))
    for y in range(n):
        keep = np.arange(n) != y
        Q = P[np.ix_(keep, keep)]
        A = np.eye(n - 1) - Q
        try:
            h = np.linalg.solve(A, np.ones(n - 1))
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(f"hitting-time system for target {y} is singular") from exc
        if n > 1 and np.max(np.abs(A @ h - 1.0)) > HITTING_TOL:
            raise SingularSystem(f"hitting-time residual too large for target {y}")
        M[keep, y] = h
    return M


def two_state_matrix(p01, p10):
    """Gilbert-Elliott channel: state 0 is bad, state 1 is good."""
    return np.array([[1.0 - p01, p01], [p10, 1.0 - p10]])


def _cumulative_rows(P):
    C = np.cumsum(P, axis=1)
    C[:, -1] = 1.0
    return C


@dataclass(frozen=True, eq=False)
class ArmModel:
    """One arm: a validated transition matrix plus per-state rewards."""

    transition: np.ndarray
    rewards: np.ndarray
    name: str = ""
    state_labels: tuple = field(default=())

    def __post_init__(self):
        P = validate_chain(self.transition)
        r = np.array(self.rewards, dtype=float).reshape(-1)
        if r.shape[0] != P.shape[0]:
            raise ValueError(
                f"{r.shape[0]} rewards given for a {P.shape[0]}-state chain"
            )
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise ValueError("state rewards must be finite and strictly positive")
        if self.state_labels and len(self.state_labels) != P.shape[0]:
            raise ValueError("state_labels length does not match the state count")
        P.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "rewards", r)
        object.__setattr__(self, "state_labels", tuple(self.state_labels))

    @classmethod
    def two_state(cls, p01, p10, r0=0.1, r1=1.0, name=""):
        return cls(two_state_matrix(p01, p10), [r0, r1], name=name, state_labels=("bad", "good"))

    @property
    def n_states(self):
        return self.transition.shape[0]

    @cached_property
    def stationary(self):
        pi = stationary_distribution(self.transition)
        pi.setflags(write=False)
        return pi

    @cached_property
    def mean_reward(self):
        return float(self.rewards @ self.stationary)

    @cached_property
    def symmetrized_irreducible(self):
        P_hat = time_reversal(self.transition, self.stationary) @ self.transition
        return _is_irreducible(P_hat)

    @cached_property
    def symmetrization(self):
        return multiplicative_symmetrization(self.transition, self.stationary)

    @cached_property
    def eigenvalue_gap_symmetrized(self):
        return eigenvalue_gap(self.symmetrization, self.stationary)

    @cached_property
    def eigenvalue_gap_raw(self):
        return eigenvalue_gap(self.transition, self.stationary)

    def eigenvalue_gap(self, convention=SYMMETRIZED):
        if convention == SYMMETRIZED:
            return self.eigenvalue_gap_symmetrized
        if convention == RAW:
            return self.eigenvalue_gap_raw
        raise ValueError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")

    @cached_property
    def hitting_times(self):
        M = mean_hitting_times(self.transition)
        M.setflags(write=False)
        return M

    @property
    def max_hitting_time(self):
        """Largest off-diagonal mean hitting time (0 for a single state)."""
        if self.n_states == 1:
            return 0.0
        M = self.hitting_times
        return float(np.max(M[~np.eye(self.n_states, dtype=bool)]))

    @property
    def min_stationary(self):
        return float(np.min(self.stationary))

    @cached_property
    def cumulative(self):
        C = _cumulative_rows(self.transition)
        C.setflags(write=False)
        return C

    @cached_property
    def stationary_cumulative(self):
        c = np.cumsum(self.stationary)
        c[-1] = 1.0
        return c

    def sample_stationary(self, rng):
        """Draw a state from the stationary law using one uniform variate."""
        return int(np.searchsorted(self.stationary_cumulative, rng.random(), side="right"))


def step(arm, state, rng):
    """Advance one slot by inverse CDF over row ``state`` (natural state order).

    Consumes exactly one uniform variate from ``rng``.
    """
    u = rng.random()
    return int(np.searchsorted(arm.cumulative[state], u, side="right"))


def next_state(arm, state, u):
    """Inverse-CDF transition for a given uniform draw ``u`` in [0, 1)."""
    return int(np.searchsorted(arm.cumulative[state], u, side="right"))


@numba.njit(cache=True)
def _paths_kernel(cum, n_states, initial, uniforms, out):
    n, k = uniforms.shape
    for a in range(k):
        s = initial[a]
        last = n_states[a] - 1
        for t in range(n):
            u = uniforms[t, a]
            j = 0
            while j < last and u >= cum[a, s, j]:
                j += 1
            s = j
            out[t, a] = s


def simulate_paths(arms, initial_states, uniforms):
    """State paths of all arms driven by a ``(n, K)`` array of uniforms.

    Row ``t`` holds the states after ``t + 1`` steps. Column ``a`` equals
    the sequence produced by calling :func:`step` on arm ``a`` with the
    same uniforms, so drawing ``rng.random((n, K))`` reproduces slot-major,
    arm-ordered variate consumption.
    """
    k = len(arms)
    uniforms = np.ascontiguousarray(uniforms, dtype=float)
    if uniforms.ndim != 2 or uniforms.shape[1] != k:
        raise ValueError(f"uniforms must have shape (n, {k})")
    s_max = max(arm.n_states for arm in arms)
    cum = np.ones((k, s_max, s_max))
    n_states = np.empty(k, dtype=np.int64)
    for a, arm in enumerate(arms):
        m = arm.n_states
        cum[a, :m, :m] = arm.cumulative
        n_states[a] = m
    out = np.empty(uniforms.shape, dtype=np.int64)
    _paths_kernel(cum, n_states, np.asarray(initial_states, dtype=np.int64), uniforms, out)
    return out
