"""ODE dynamics for one- and two-species patch models.

Right-hand sides, an adaptive embedded Runge-Kutta 4(5) integrator
(Dormand-Prince coefficients), steady-state aware simulation, outcome
classification, and K-order (competitive order) preservation checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from driftlab.topology import StreamTopology, build_connection
from driftlab.spectral import _as_profile


class StepSizeUnderflow(RuntimeError):
    """Adaptive step shrank below the floor; stiffness beyond scope."""


class PreconditionViolation(ValueError):
    """Inputs violate an operation's stated precondition."""


@dataclass(frozen=True)
class CompetitionScenario:
    """Two species sharing topology and growth, differing only in
    diffusion/advection rates."""

    topo: StreamTopology
    r: np.ndarray
    p1: "SpeciesParamsLike"
    p2: "SpeciesParamsLike"

    @property
    def growth(self) -> np.ndarray:
        return _as_profile(self.topo, self.r)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), n) or (len(times), 2n)
    terminal_rhs_norm: float


@dataclass(frozen=True)
class Outcome:
    tag: str  # E1Wins | E2Wins | Coexistence | Extinct | Undecided
    terminal_state: np.ndarray
    horizon: float


def rhs_single(topo: StreamTopology, d: float, q: float, r, u: np.ndarray) -> np.ndarray:
    """L u + u * (r - u) for the single-species model."""
    L = build_connection(topo, d, q)
    r = _as_profile(topo, r)
    u = np.asarray(u, dtype=float)
    return L @ u + u * (r - u)


def rhs_competition(scenario: CompetitionScenario, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Stacked right-hand side of the two-species competition model."""
    topo = scenario.topo
    r = scenario.growth
    L1 = build_connection(topo, scenario.p1.d, scenario.p1.q)
    L2 = build_connection(topo, scenario.p2.d, scenario.p2.q)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    crowd = r - u - v
    return np.concatenate([L1 @ u + u * crowd, L2 @ v + v * crowd])


# Dormand-Prince 5(4) tableau.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])

_CLAMP = -1e-12


def _integrate(f, y0, t_end, output_times=None, rtol=1e-8, atol=1e-10,
               steady_rhs_tol=None, fixed_step=None, stop_condition=None):
    """Adaptive (or fixed-step) Dormand-Prince 4(5) integration on [0, t_end].

    States are clamped at -1e-12 -> 0 to absorb roundoff undershoot; the
    exact flow preserves the nonnegative orthant.  With steady_rhs_tol
    set, integration stops early once ||f(y)||_inf falls below it.
    """
    y = np.asarray(y0, dtype=float).copy()
    t = 0.0
    if output_times is None:
        checkpoints = [float(t_end)]
    else:
        checkpoints = sorted(float(ot) for ot in output_times if 0.0 < ot <= t_end)
        if not checkpoints or checkpoints[-1] < t_end:
            checkpoints.append(float(t_end))
    times = [0.0]
    states = [y.copy()]

    k = [None] * 7
    k[0] = f(t, y)
    h = fixed_step if fixed_step is not None else min(0.01, t_end)
    ci = 0
    stopped_early = False
    while ci < len(checkpoints) and not stopped_early:
        target = checkpoints[ci]
        h_step = min(h, target - t)
        if h_step < 1e-14 * max(1.0, abs(t)):
            raise StepSizeUnderflow(f"step size underflow at t={t}")
        for i in range(1, 7):
            yi = y + h_step * sum(a * ki for a, ki in zip(_DP_A[i], k))
            k[i] = f(t + _DP_C[i] * h_step, yi)
        y5 = y + h_step * sum(b * ki for b, ki in zip(_DP_B5, k) if b != 0.0)
        if fixed_step is None:
            y4 = y + h_step * sum(b * ki for b, ki in zip(_DP_B4, k))
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
            err = float(np.sqrt(np.mean(((y5 - y4) / scale) ** 2)))
            if not np.isfinite(err):
                h = 0.2 * h_step
                continue
            if err > 1.0:
                h = h_step * max(0.2, 0.9 * err ** -0.2)
                continue
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            factor = 1.0
        t = t + h_step
        y = y5
        y[(y < 0.0) & (y >= _CLAMP)] = 0.0
        k[0] = k[6]  # FSAL: k7 is f at the accepted point
        at_checkpoint = abs(t - target) < 1e-12 * max(1.0, target)
        if at_checkpoint:
            t = target
            ci += 1
        if output_times is None or at_checkpoint:
            times.append(t)
            states.append(y.copy())
        h = max(h, h_step) * factor if at_checkpoint else h_step * factor
        rhs_norm = float(np.max(np.abs(k[0])))
        if steady_rhs_tol is not None and rhs_norm < steady_rhs_tol:
            stopped_early = True
        if stop_condition is not None and stop_condition(t, y, rhs_norm):
            stopped_early = True
    if times[-1] != t:
        times.append(t)
        states.append(y.copy())
    terminal = float(np.max(np.abs(f(t, y))))
    return Trajectory(times=np.asarray(times), states=np.asarray(states),
                      terminal_rhs_norm=terminal)


def simulate_single(topo: StreamTopology, d: float, q: float, r, u0,
                    t_end: float, output_times=None, rtol=1e-8, atol=1e-10,
                    steady_rhs_tol=None, fixed_step=None) -> Trajectory:
    """Integrate the single-species model from u0 >= 0."""
    u0 = np.asarray(u0, dtype=float)
    if np.any(u0 < 0):
        raise PreconditionViolation("initial state must be nonnegative")
    L = build_connection(topo, d, q)
    rr = _as_profile(topo, r)

    def f(t, u):
        return L @ u + u * (rr - u)

    return _integrate(f, u0, t_end, output_times=output_times, rtol=rtol,
                      atol=atol, steady_rhs_tol=steady_rhs_tol,
                      fixed_step=fixed_step)


def simulate_competition(scenario: CompetitionScenario, u0, v0, t_end: float,
                         output_times=None, rtol=1e-8, atol=1e-10,
                         steady_rhs_tol=None, fixed_step=None,
                         stop_condition=None) -> Trajectory:
    """Integrate the two-species model from (u0, v0) >= 0."""
    u0 = np.asarray(u0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if np.any(u0 < 0) or np.any(v0 < 0):
        raise PreconditionViolation("initial state must be nonnegative")
    topo = scenario.topo
    r = scenario.growth
    n = topo.n
    L1 = build_connection(topo, scenario.p1.d, scenario.p1.q)
    L2 = build_connection(topo, scenario.p2.d, scenario.p2.q)

    def f(t, y):
        u, v = y[:n], y[n:]
        crowd = r - u - v
        return np.concatenate([L1 @ u + u * crowd, L2 @ v + v * crowd])

    return _integrate(f, np.concatenate([u0, v0]), t_end,
                      output_times=output_times, rtol=rtol, atol=atol,
                      steady_rhs_tol=steady_rhs_tol, fixed_step=fixed_step,
                      stop_condition=stop_condition)


EXTINCTION_THRESHOLD = 1e-6
COEXISTENCE_FLOOR = 1e-3
EQUILIBRIUM_MATCH = 1e-4
STEADY_RHS = 1e-8
DEFAULT_HORIZON = 2000.0
MAX_HORIZON = 64_000.0


def detect_outcome(traj: Trajectory, scenario: CompetitionScenario,
                   extinction_threshold=EXTINCTION_THRESHOLD,
                   coexistence_floor=COEXISTENCE_FLOOR) -> Outcome:
    """Classify the terminal state of a competition trajectory.

    E1Wins / E2Wins require the surviving species to sit on its own
    single-species equilibrium; Coexistence requires both species above
    the floor (sup over patches) at a near-steady state; otherwise
    Undecided.  The floor is a per-species abundance test: near a
    critical curve a genuine coexistence state can hold one species at
    tiny densities in upstream patches, so a min-over-patches floor
    would misread it as exclusion in progress.
    """
    from driftlab.equilibrium import single_species_equilibrium

    n = scenario.topo.n
    y = traj.states[-1]
    u, v = y[:n], y[n:]
    horizon = float(traj.times[-1])

    u_gone = np.max(np.abs(u)) < extinction_threshold
    v_gone = np.max(np.abs(v)) < extinction_threshold
    if u_gone and v_gone:
        return Outcome(tag="Extinct", terminal_state=y, horizon=horizon)
    if v_gone:
        eq = single_species_equilibrium(scenario.topo, scenario.p1, scenario.r)
        if eq.status == "Positive" and np.max(np.abs(u - eq.u)) < EQUILIBRIUM_MATCH:
            return Outcome(tag="E1Wins", terminal_state=y, horizon=horizon)
    if u_gone:
        eq = single_species_equilibrium(scenario.topo, scenario.p2, scenario.r)
        if eq.status == "Positive" and np.max(np.abs(v - eq.u)) < EQUILIBRIUM_MATCH:
            return Outcome(tag="E2Wins", terminal_state=y, horizon=horizon)
    if (np.max(np.abs(u)) > coexistence_floor
            and np.max(np.abs(v)) > coexistence_floor
            and traj.terminal_rhs_norm < STEADY_RHS):
        return Outcome(tag="Coexistence", terminal_state=y, horizon=horizon)
    return Outcome(tag="Undecided", terminal_state=y, horizon=horizon)


@dataclass(frozen=True)
class _ProbeContext:
    """Per-scenario data shared by the two probe runs: semi-trivial
    equilibria, their attractivity, and the movement operators."""

    eq1: object
    eq2: object
    e1_attracting: bool
    e2_attracting: bool
    L1: np.ndarray
    L2: np.ndarray


def _probe_context(scenario) -> _ProbeContext:
    from driftlab.equilibrium import single_species_equilibrium
    from driftlab.spectral import lambda1

    topo, r = scenario.topo, scenario.growth
    eq1 = single_species_equilibrium(topo, scenario.p1, r)
    eq2 = single_species_equilibrium(topo, scenario.p2, r)
    e1_attracting = (eq1.status == "Positive"
                     and lambda1(topo, scenario.p2.d, scenario.p2.q, r - eq1.u) < 0)
    e2_attracting = (eq2.status == "Positive"
                     and lambda1(topo, scenario.p1.d, scenario.p1.q, r - eq2.u) < 0)
    return _ProbeContext(
        eq1=eq1, eq2=eq2,
        e1_attracting=e1_attracting, e2_attracting=e2_attracting,
        L1=build_connection(topo, scenario.p1.d, scenario.p1.q),
        L2=build_connection(topo, scenario.p2.d, scenario.p2.q),
    )


def _probe_one(scenario, u0, v0, ctx=None):
    from driftlab.equilibrium import _newton_pair

    if ctx is None:
        ctx = _probe_context(scenario)
    n = scenario.topo.n
    r = scenario.growth

    def stop(t, y, rhs_norm):
        # A tiny rhs is not by itself a steady-state certificate: the
        # linearization is highly nonnormal and a transient can align
        # with a near-singular direction.  Stop only on proximity to an
        # attracting semi-trivial equilibrium, or on Newton-verified
        # proximity to a positive coexistence equilibrium.
        u, v = y[:n], y[n:]
        if (ctx.e1_attracting and np.max(np.abs(v)) < EXTINCTION_THRESHOLD
                and np.max(np.abs(u - ctx.eq1.u)) < EQUILIBRIUM_MATCH):
            return True
        if (ctx.e2_attracting and np.max(np.abs(u)) < EXTINCTION_THRESHOLD
                and np.max(np.abs(v - ctx.eq2.u)) < EQUILIBRIUM_MATCH):
            return True
        # the rhs gate keeps the terminal residual under the steady-state
        # bar the outcome classifier applies to coexistence
        if (rhs_norm < 0.5 * STEADY_RHS
                and np.max(np.abs(u)) > COEXISTENCE_FLOOR
                and np.max(np.abs(v)) > COEXISTENCE_FLOOR):
            root = _newton_pair(ctx.L1, ctx.L2, r, u, v)
            if root is not None:
                ur, vr, _ = root
                return bool(np.all(ur > 0) and np.all(vr > 0)
                            and np.max(np.abs(ur - u)) < EQUILIBRIUM_MATCH
                            and np.max(np.abs(vr - v)) < EQUILIBRIUM_MATCH)
        return False

    horizon = DEFAULT_HORIZON
    while True:
        traj = simulate_competition(scenario, u0, v0, horizon,
                                    rtol=1e-9, atol=1e-11,
                                    stop_condition=stop)
        outcome = detect_outcome(traj, scenario)
        if outcome.tag != "Undecided" or horizon >= MAX_HORIZON:
            return outcome
        horizon *= 2


def bistability_probe(scenario: CompetitionScenario):
    """Run the two canonical initial-data pairs and return both outcomes.

    Evidence of bistability is one run ending E1Wins and the other E2Wins.
    """
    n = scenario.topo.n
    ctx = _probe_context(scenario)
    first = _probe_one(scenario, np.full(n, 0.1), np.full(n, 2.0), ctx)
    second = _probe_one(scenario, np.full(n, 5.0), np.full(n, 1.0), ctx)
    return first, second


def k_order_check(scenario: CompetitionScenario, pair_a, pair_b, sample_times,
                  tol: float = 1e-9, rtol: float = 1e-10,
                  atol: float = 1e-12) -> bool:
    """Check K-order preservation: u_a <= u_b and v_a >= v_b at all
    sample times, given K-ordered initial data (u0a <= u0b, v0a >= v0b).

    Integration tolerances default well below the comparison tolerance
    so numerical error cannot masquerade as an order violation."""
    u0a, v0a = (np.asarray(x, dtype=float) for x in pair_a)
    u0b, v0b = (np.asarray(x, dtype=float) for x in pair_b)
    if np.any(u0a > u0b) or np.any(v0a < v0b):
        raise PreconditionViolation("initial data are not K-ordered")
    sample_times = sorted(sample_times)
    t_end = sample_times[-1]
    n = scenario.topo.n
    ta = simulate_competition(scenario, u0a, v0a, t_end, output_times=sample_times,
                              rtol=rtol, atol=atol)
    tb = simulate_competition(scenario, u0b, v0b, t_end, output_times=sample_times,
                              rtol=rtol, atol=atol)
    for st in sample_times:
        ia = int(np.argmin(np.abs(ta.times - st)))
        ib = int(np.argmin(np.abs(tb.times - st)))
        ya, yb = ta.states[ia], tb.states[ib]
        if np.any(ya[:n] > yb[:n] + tol) or np.any(ya[n:] < yb[n:] - tol):
            return False
    return True
