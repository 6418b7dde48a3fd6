"""Multiuser rate-based flow control: N users feed a shared queue.

The queue length x obeys dx/dt = (1/f(N)) sum_i u_i with a = 0, q_i = r_i = 1,
x0 = 1 and equal weights. Closed forms for the symmetric game sit next to the
solver values so each dataset cross-checks itself.
"""

import logging
import math
from typing import Callable, Dict, Iterable, Optional, Union

import numpy as np
import pandas as pd

from src.config import SolverSettings, get_settings
from src.exceptions import GameValidationError
from src.feedback_ne import solve_feedback_fixedpoint
from src.game_model import validate_spec
from src.indices import (
    approx_price_of_information,
    large_population_approx,
    price_of_anarchy_fb,
    price_of_anarchy_ol,
    price_of_information,
)
from src.openloop_ne import solve_openloop
from src.pydantic_models import (
    FlowControlConfig,
    FlowIndexRow,
    GameSpec,
    Normalization,
    ValidatedGame,
)
from src.social_opt import solve_social

logger = logging.getLogger(__name__)

TagLike = Union[Normalization, str]


def normalization_factor(n: int, tag: TagLike, custom: Optional[float] = None) -> float:
    """Dynamics factor f(N); the input gain of every user is 1/f(N).

    ``one-over-N`` is the case study with b_i = 1/N, i.e. f(N) = N.
    """
    config = FlowControlConfig(n_users=n, normalization=Normalization(tag), custom_factor=custom)
    if config.normalization == Normalization.CONSTANT_1:
        return 1.0
    if config.normalization == Normalization.ONE_OVER_N:
        return float(n)
    if config.normalization == Normalization.SQRT_N:
        return math.sqrt(n)
    return float(config.custom_factor)


def build_flow_control(n: int) -> ValidatedGame:
    return build_normalized_flow_control(n, Normalization.CONSTANT_1)


def build_normalized_flow_control(n: int, tag: TagLike, custom: Optional[float] = None) -> ValidatedGame:
    b = 1.0 / normalization_factor(n, tag, custom)
    spec = GameSpec(a=0.0, b=[b] * n, q=[1.0] * n, r=[1.0] * n, x0=1.0)
    return validate_spec(spec)


def closed_form_flow_indices(n: int, tag: TagLike = Normalization.CONSTANT_1, custom: Optional[float] = None) -> FlowIndexRow:
    f = normalization_factor(n, tag, custom)
    ol_factor = 0.5 + 1 / (2 * n)
    return FlowIndexRow(
        n=n,
        f=f,
        j_fb=f / math.sqrt(2 * n - 1),
        j_social=f / n,
        j_ol=f / math.sqrt(n) * ol_factor,
        rho_fb=n / math.sqrt(2 * n - 1),
        rho_ol=math.sqrt(n) * (n + 1) / (2 * n),
        chi=math.sqrt(2 - 1 / n) * ol_factor,
    )


def solver_flow_indices(
    n: int,
    tag: TagLike = Normalization.CONSTANT_1,
    custom: Optional[float] = None,
    settings: Optional[SolverSettings] = None,
) -> FlowIndexRow:
    """Same row as closed_form_flow_indices, computed through the solvers."""
    game = build_normalized_flow_control(n, tag, custom)
    fb = solve_feedback_fixedpoint(game, settings=settings)
    ol = solve_openloop(game)
    social = solve_social(game)
    rho_fb = price_of_anarchy_fb(game, None, [fb], social)
    rho_ol = price_of_anarchy_ol(ol, social, game.weights)
    return FlowIndexRow(
        n=n,
        f=normalization_factor(n, tag, custom),
        j_fb=fb.weighted_cost,
        j_social=social.cost,
        j_ol=ol.weighted_cost,
        rho_fb=rho_fb,
        rho_ol=rho_ol,
        chi=price_of_information(rho_ol, rho_fb),
    )


def sweep_flow_control(
    n_values: Iterable[int],
    tag: TagLike = Normalization.CONSTANT_1,
    custom: Optional[float] = None,
    settings: Optional[SolverSettings] = None,
) -> pd.DataFrame:
    """Closed-form, solver and large-population values per N, ascending."""
    rows = []
    for n in sorted(set(int(n) for n in n_values)):
        exact = closed_form_flow_indices(n, tag, custom)
        solved = solver_flow_indices(n, tag, custom, settings)
        game = build_normalized_flow_control(n, tag, custom)
        approx = large_population_approx(game)
        rows.append({
            "N": n,
            "f": exact.f,
            "J_fb": exact.j_fb,
            "J_social": exact.j_social,
            "J_ol": exact.j_ol,
            "rho_fb": exact.rho_fb,
            "rho_ol": exact.rho_ol,
            "chi": exact.chi,
            "J_fb_solver": solved.j_fb,
            "J_social_solver": solved.j_social,
            "J_ol_solver": solved.j_ol,
            "rho_fb_solver": solved.rho_fb,
            "rho_ol_solver": solved.rho_ol,
            "chi_solver": solved.chi,
            "J_fb_approx": approx.j_star_approx,
            "rho_fb_approx": approx.rho_fb_approx,
            "chi_approx": approx_price_of_information(game),
        })
    return pd.DataFrame(rows)


def _table1(n_values, settings):
    return sweep_flow_control(n_values, Normalization.CONSTANT_1, settings=settings)


def _table2(n_values, settings):
    frames = []
    for tag in (Normalization.CONSTANT_1, Normalization.ONE_OVER_N):
        frame = sweep_flow_control(n_values, tag, settings=settings)
        frame.insert(1, "normalization", tag.value)
        frames.append(frame)
    table = pd.concat(frames, ignore_index=True)
    return table.sort_values(["N", "normalization"], kind="stable", ignore_index=True)


_FIGURE_COLUMNS = {
    "fig_poi_vs_N": (Normalization.CONSTANT_1, ["J_fb", "J_ol", "J_social", "chi", "chi_solver", "chi_approx"]),
    "fig_poa_vs_N": (Normalization.CONSTANT_1, ["rho_fb", "rho_fb_solver", "rho_fb_approx", "rho_ol", "rho_ol_solver"]),
    "fig_normalized_poi": (Normalization.ONE_OVER_N, ["J_fb", "J_ol", "J_social", "chi", "chi_solver"]),
    "fig_normalized_poa": (Normalization.ONE_OVER_N, ["rho_fb", "rho_fb_solver", "rho_fb_approx", "rho_ol", "rho_ol_solver"]),
    "fig_sqrtN_poi": (Normalization.SQRT_N, ["J_fb", "J_ol", "J_social", "chi", "chi_solver"]),
}


def _figure(target: str) -> Callable:
    tag, columns = _FIGURE_COLUMNS[target]

    def build(n_values, settings):
        frame = sweep_flow_control(n_values, tag, settings=settings)
        return frame[["N", "f"] + columns]
    return build


REPRODUCE_TARGETS: Dict[str, Callable] = {
    "table1": _table1,
    "table2": _table2,
    **{target: _figure(target) for target in _FIGURE_COLUMNS},
}


def reproduce(target: str, n_max: Optional[int] = None, settings: Optional[SolverSettings] = None) -> pd.DataFrame:
    """Dataset behind a published table or figure, for N = 2..n_max."""
    settings = settings or get_settings()
    if target not in REPRODUCE_TARGETS:
        raise GameValidationError(
            f"unknown target {target!r}; choose from {', '.join(REPRODUCE_TARGETS)}", field="target"
        )
    n_max = n_max or settings.reproduce_n_max
    if n_max < 2:
        raise GameValidationError(f"n_max = {n_max} must be at least 2", field="n_max")
    logger.info(f"Reproducing {target} for N = 2..{n_max}")
    return REPRODUCE_TARGETS[target](np.arange(2, n_max + 1), settings)
