"""Numerical oracle: integrate the game dynamics and accumulate running costs.

Used to check every closed-form cost in the package independently. Integration
is classical fixed-step RK4 on the augmented state (x, c_1, ..., c_N) with
dc_i/dt = q_i x^2 + r_i u_i^2; the cost beyond the horizon is added in closed
form from the terminal state.
"""

import logging
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.config import SolverSettings, get_settings
from src.exceptions import InvalidSimulationParameters, UnstableClosedLoop
from src.pydantic_models import PolicyProfile, SimulationResult, ValidatedGame

logger = logging.getLogger(__name__)


def closed_loop_pole(game: ValidatedGame, gains: Sequence[float]) -> float:
    return float(game.a + game.b @ np.asarray(gains, dtype=float))


def eval_linear_policy_costs(game: ValidatedGame, gains: Sequence[float]) -> np.ndarray:
    """Exact infinite-horizon costs of the linear policies u_i = g_i x."""
    gains = np.asarray(gains, dtype=float)
    pole = closed_loop_pole(game, gains)
    if pole >= 0:
        raise UnstableClosedLoop(f"closed-loop pole a + sum b_i g_i = {pole:.6g} is not negative")
    return (game.q + game.r * gains ** 2) * game.x0 ** 2 / (-2 * pole)


def best_response_gain(game: ValidatedGame, gains: Sequence[float], i: int) -> Tuple[float, float]:
    """Player i's optimal linear gain against fixed gains of the others, and its cost."""
    gains = np.asarray(gains, dtype=float)
    b, q, r = game.b[i], game.q[i], game.r[i]
    drift = game.a + game.b @ gains - b * gains[i]
    value = (r / b ** 2) * (drift + np.sqrt(drift ** 2 + q * b ** 2 / r))
    return float(-b * value / r), float(value * game.x0 ** 2)


def unilateral_deviation_gain(
    game: ValidatedGame, gains: Sequence[float], i: int, delta: float = 1e-2
) -> Tuple[float, float]:
    """Change of player i's cost when its gain moves by -delta and +delta.

    A destabilizing deviation costs +inf.
    """
    gains = np.asarray(gains, dtype=float)
    base = eval_linear_policy_costs(game, gains)[i]
    changes = []
    for step in (-delta, delta):
        moved = gains.copy()
        moved[i] += step
        try:
            changes.append(float(eval_linear_policy_costs(game, moved)[i] - base))
        except UnstableClosedLoop:
            changes.append(float("inf"))
    return changes[0], changes[1]


def default_grid(rate: float, settings: Optional[SolverSettings] = None) -> Tuple[float, float]:
    """Horizon and step for a decay rate `rate` < 0."""
    settings = settings or get_settings()
    speed = abs(rate)
    return settings.horizon_factor / speed, min(settings.max_dt, settings.dt_factor / speed)


def _control_law(game: ValidatedGame, policy: PolicyProfile) -> Tuple[Callable, float, np.ndarray]:
    if policy.kind == "feedback":
        gains = np.asarray(policy.gains, dtype=float)
        pole = closed_loop_pole(game, gains)
        if pole >= 0:
            raise UnstableClosedLoop(f"feedback profile has closed-loop pole {pole:.6g} >= 0")
        return (lambda t, x: gains * x), pole, gains
    amplitudes = np.asarray(policy.amplitudes, dtype=float)
    rate = float(policy.decay_rate)
    if rate >= 0:
        raise UnstableClosedLoop(f"open-loop profile has decay rate {rate:.6g} >= 0")
    return (lambda t, x: amplitudes * np.exp(rate * t)), rate, amplitudes


def simulate(
    game: ValidatedGame,
    policy: PolicyProfile,
    horizon: Optional[float] = None,
    step: Optional[float] = None,
    record: bool = False,
    settings: Optional[SolverSettings] = None,
) -> SimulationResult:
    settings = settings or get_settings()
    if policy.n != game.n:
        raise InvalidSimulationParameters(
            f"policy has {policy.n} players, game has {game.n}", field="policy"
        )
    control, rate, _ = _control_law(game, policy)
    default_t, default_dt = default_grid(rate, settings)
    horizon = default_t if horizon is None else horizon
    step = default_dt if step is None else step
    if not step > 0:
        raise InvalidSimulationParameters(f"dt = {step} must be positive", field="dt")
    if horizon < step:
        raise InvalidSimulationParameters(f"T = {horizon} must be at least dt = {step}", field="T")

    n_steps = max(1, int(round(horizon / step)))
    dt = horizon / n_steps
    a, b, q, r = game.a, game.b, game.q, game.r

    def rhs(t, y):
        x = y[0]
        u = control(t, x)
        return np.concatenate(([a * x + b @ u], q * x * x + r * u * u))

    y = np.zeros(game.n + 1)
    y[0] = game.x0
    times, states, controls, running = [], [], [], []

    def keep(t, y):
        times.append(t)
        states.append(float(y[0]))
        controls.append(control(t, y[0]).tolist())
        running.append(y[1:].tolist())

    if record:
        keep(0.0, y)
    t = 0.0
    for i in range(n_steps):
        k1 = rhs(t, y)
        k2 = rhs(t + dt / 2, y + dt / 2 * k1)
        k3 = rhs(t + dt / 2, y + dt / 2 * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = (i + 1) * dt
        if abs(y[0]) > settings.blowup:
            logger.error(f"State diverged at t = {t:.6g}: |x| = {abs(y[0]):.3e}")
            raise UnstableClosedLoop(f"state magnitude exceeded {settings.blowup:.0e} at t = {t:.6g}")
        if record:
            keep(t, y)

    x_end = float(y[0])
    u_end = control(horizon, x_end)
    tail = (q * x_end ** 2 + r * u_end ** 2) / (-2 * rate)

    result = SimulationResult(
        horizon=horizon,
        step=dt,
        per_player_cost=y[1:].tolist(),
        terminal_state=x_end,
        truncation_estimate=tail.tolist(),
        times=times if record else None,
        states=states if record else None,
        controls=controls if record else None,
        running_costs=running if record else None,
    )
    logger.info(f"Simulated {n_steps} RK4 steps to T = {horizon:.6g}; costs {result.total_cost}")
    return result


def trajectory_frame(result: SimulationResult) -> pd.DataFrame:
    """Recorded trajectory as columns t, x, u_1..u_N, running_cost_1..N."""
    if result.times is None:
        raise InvalidSimulationParameters("simulation was run without trajectory recording", field="record")
    n = len(result.per_player_cost)
    frame = pd.DataFrame({"t": result.times, "x": result.states})
    controls = np.asarray(result.controls)
    running = np.asarray(result.running_costs)
    for i in range(n):
        frame[f"u_{i + 1}"] = controls[:, i]
    for i in range(n):
        frame[f"running_cost_{i + 1}"] = running[:, i]
    return frame
