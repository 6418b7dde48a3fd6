"""
Command-line interface for lqgame.

Usage:
    lqgame solve-fb --config configs/flow2.yaml     # feedback Nash equilibria
    lqgame solve-ol --config configs/flow2.yaml     # open-loop Nash equilibrium
    lqgame solve-social --config configs/flow2.yaml # social optimum
    lqgame indices --config configs/flow3.yaml      # PoA, PoI, bounds
    lqgame poc --config configs/hetero3.yaml        # price of cooperation
    lqgame simulate --config configs/flow2.yaml     # numerical cost check
    lqgame sweep --config configs/flow2.yaml --param N --from 2 --to 20
    lqgame reproduce --target table1 -o table1.csv
"""

import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import click
import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, ValidationError

from src.altruistic import price_of_cooperation
from src.apps_flowcontrol import REPRODUCE_TARGETS, reproduce
from src.config import ConfigManager, SolverSettings
from src.exceptions import GameValidationError, NoEquilibrium, NonConvergence, SolverError
from src.feedback_ne import FEEDBACK_METHODS, graded_order, solve_feedback
from src.game_model import derive_params, load_game_config
from src.indices import compute_indices, individualized_poa, poi_design_check, sweep_indices
from src.openloop_ne import openloop_control, solve_openloop
from src.pydantic_models import CooperationMatrix, PolicyProfile
from src.reporting import format_frame, render_report
from src.simulate import eval_linear_policy_costs, simulate, trajectory_frame
from src.social_opt import solve_social

__all__ = ["cli", "run"]

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
FORMATS = click.Choice(["text", "csv", "json"])


class LQGameGroup(click.Group):
    """Maps package errors to exit codes: 2 for bad input, 1 for solver failures."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except GameValidationError as e:
            field = f" [{e.field}]" if e.field else ""
            click.echo(f"Error{field}: {e}", err=True)
            ctx.exit(2)
        except SolverError as e:
            click.echo(f"Solver error ({type(e).__name__}): {e}", err=True)
            for line in _diagnostics(e):
                click.echo(f"  {line}", err=True)
            ctx.exit(1)


def _diagnostics(error: SolverError) -> List[str]:
    if isinstance(error, NoEquilibrium):
        lines = [f"eigenvalues: {', '.join(f'{complex(v):.6g}' for v in error.eigenvalues)}"]
        return lines + [f"rejected {reason}" for reason in error.rejections]
    if isinstance(error, NonConvergence):
        return [f"last gains: {error.last_gains}", f"last gain change: {error.gain_change:.3e}"]
    return []


def _emit(text: str, output: Optional[str]):
    if output:
        Path(output).write_text(text, encoding="utf-8")
        logger.info(f"Wrote {output}")
    else:
        click.echo(text, nl=False)


def _render(title: str, result: BaseModel, frame: pd.DataFrame, fmt: str, skip=()) -> str:
    if fmt == "json":
        return result.model_dump_json(indent=2) + "\n"
    if fmt == "csv":
        return format_frame(frame)
    return render_report(title, result, skip=skip)


def _player_frame(**columns) -> pd.DataFrame:
    n = len(next(iter(columns.values())))
    return pd.DataFrame({"player": np.arange(1, n + 1), **columns})


config_option = click.option(
    "--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False),
    help="Game config file (YAML)",
)
output_option = click.option("-o", "--output", type=click.Path(dir_okay=False), default=None, help="Write to file instead of stdout")
format_option = click.option("--format", "fmt", type=FORMATS, default="text", show_default=True)


@click.group(cls=LQGameGroup)
@click.option("--settings", "settings_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Solver settings YAML")
@click.option("--n-cap", type=click.IntRange(min=1), default=None, help="Largest N solved by the eigen method")
@click.option("--residual-tol", type=click.FloatRange(min=0, min_open=True), default=None, help="Riccati residual acceptance tolerance")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False), default=None)
@click.pass_context
def cli(ctx, settings_path, n_cap, residual_tol, log_level):
    """
    Scalar N-player linear-quadratic differential games: equilibria,
    social optimum, price of anarchy, information and cooperation.
    """
    try:
        manager = ConfigManager(settings_path)
        settings = manager.solver_settings()
    except (yaml.YAMLError, ValidationError, ValueError) as e:
        raise click.UsageError(f"invalid settings: {e}")
    level = (log_level or manager.get_value("app", "log_level", "INFO")).upper()
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)

    overrides = {"n_cap": n_cap, "residual_tol": residual_tol}
    settings = settings.model_copy(update={k: v for k, v in overrides.items() if v is not None})
    ctx.obj = settings


@cli.command("solve-fb")
@config_option
@output_option
@format_option
@click.option("--method", type=click.Choice(list(FEEDBACK_METHODS)), default="auto", show_default=True)
@click.option("--eigenvector", is_flag=True, help="Include eigenvectors, in subset-size order")
@click.pass_obj
def solve_fb(settings: SolverSettings, config_path, output, fmt, method, eigenvector):
    """Feedback Nash equilibria (all of them with the eigen method)."""
    game = load_game_config(config_path)
    solution = solve_feedback(game, settings=settings, method=method)

    if eigenvector and solution.equilibria[0].eigenvector is not None:
        order = graded_order(game.n)
        solution = solution.model_copy(update={"equilibria": [
            eq.model_copy(update={"eigenvector": [eq.eigenvector[i] for i in order]})
            for eq in solution.equilibria
        ]})
    frames = []
    for j, eq in enumerate(solution.equilibria, start=1):
        frame = _player_frame(k=eq.k, p=eq.p, gain=eq.gains, cost=eq.costs)
        frame.insert(0, "equilibrium", j)
        frame["eigenvalue"] = eq.eigenvalue
        frame["closed_loop_pole"] = eq.closed_loop_pole
        frame["weighted_cost"] = eq.weighted_cost
        frames.append(frame)
    skip = () if eigenvector else ("eigenvector",)
    _emit(_render("Feedback Nash equilibria", solution, pd.concat(frames, ignore_index=True), fmt, skip), output)


@cli.command("solve-ol")
@config_option
@output_option
@format_option
def solve_ol(config_path, output, fmt):
    """Open-loop Nash equilibrium (closed form)."""
    game = load_game_config(config_path)
    eq = solve_openloop(game)
    frame = _player_frame(xi=eq.xi, k_star=eq.k_star, cost=eq.costs)
    frame["p_bar"] = eq.p_bar
    frame["decay_rate"] = eq.decay_rate
    _emit(_render("Open-loop Nash equilibrium", eq, frame, fmt), output)


@cli.command("solve-social")
@config_option
@output_option
@format_option
def solve_social_cmd(config_path, output, fmt):
    """Social optimum of the weighted total cost."""
    game = load_game_config(config_path)
    opt = solve_social(game)
    frame = _player_frame(gain=opt.gains)
    frame["k_hat"] = opt.k_hat
    frame["closed_loop_pole"] = opt.closed_loop_pole
    frame["cost"] = opt.cost
    _emit(_render("Social optimum", opt, frame, fmt), output)


@cli.command()
@config_option
@output_option
@format_option
@click.option("--chi-target", type=float, default=None, help="Also check the PoI design condition for this target")
@click.pass_obj
def indices(settings: SolverSettings, config_path, output, fmt, chi_target):
    """Prices of anarchy and information with their bounds."""
    game = load_game_config(config_path)
    params = derive_params(game)
    solution = solve_feedback(game, params, settings)
    report = compute_indices(game, params, solution, settings)
    data = report.model_dump()
    data["individualized_poa"] = individualized_poa(game, solve_social(game, params), solution.equilibria).tolist()
    if chi_target is not None:
        data["design_check"] = poi_design_check(game, chi_target, params).model_dump()

    if fmt == "json":
        text = json.dumps(data, indent=2) + "\n"
    elif fmt == "csv":
        scalars = {k: v for k, v in data.items() if not isinstance(v, (dict, list))}
        text = format_frame(pd.DataFrame([scalars]))
    else:
        text = render_report("Efficiency indices", data)
    _emit(text, output)


@cli.command()
@config_option
@output_option
@format_option
@click.option("--uniform", is_flag=True, help="Use lambda_i = mu for every player instead of the config's lambda")
@click.pass_obj
def poc(settings: SolverSettings, config_path, output, fmt, uniform):
    """Price of cooperation of the altruistic game."""
    game = load_game_config(config_path)
    cooperation = CooperationMatrix.uniform_rows(game.weights) if uniform else None
    solution = solve_feedback(game, settings=settings)
    report = price_of_cooperation(game, cooperation=cooperation, fb_equilibria=solution.equilibria, settings=settings)
    frame = _player_frame(
        nu=report.nu,
        gain=report.altruistic.gains,
        altruistic_cost=report.altruistic.actual_costs,
        nash_cost=report.baseline_costs,
    )
    _emit(_render("Price of cooperation", report, frame, fmt), output)


@cli.command("simulate")
@config_option
@output_option
@format_option
@click.option("--policy", type=click.Choice(["fb", "ol", "social"]), default="fb", show_default=True)
@click.option("--horizon", type=float, default=None, help="Integration horizon T (default from the decay rate)")
@click.option("--dt", type=float, default=None, help="RK4 step")
@click.option("--trajectory", type=click.Path(dir_okay=False), default=None, help="Write t, x, u_i, running costs as CSV")
@click.pass_obj
def simulate_cmd(settings: SolverSettings, config_path, output, fmt, policy, horizon, dt, trajectory):
    """Integrate a policy profile and compare with the closed-form costs."""
    game = load_game_config(config_path)
    if policy == "fb":
        eq = solve_feedback(game, settings=settings).equilibria[0]
        profile, expected = PolicyProfile(kind="feedback", gains=eq.gains), eq.costs
    elif policy == "social":
        opt = solve_social(game)
        profile = PolicyProfile(kind="feedback", gains=opt.gains)
        expected = eval_linear_policy_costs(game, opt.gains)
    else:
        ol = solve_openloop(game)
        amplitudes = openloop_control(ol, game, 0.0)
        profile = PolicyProfile(kind="open-loop", amplitudes=amplitudes.tolist(), decay_rate=ol.decay_rate)
        expected = ol.costs

    result = simulate(game, profile, horizon, dt, record=trajectory is not None, settings=settings)
    if trajectory:
        Path(trajectory).write_text(format_frame(trajectory_frame(result)), encoding="utf-8")
        logger.info(f"Wrote trajectory to {trajectory}")

    expected = np.asarray(expected, dtype=float)
    simulated = np.asarray(result.total_cost)
    frame = _player_frame(
        simulated_cost=simulated,
        closed_form_cost=expected,
        relative_error=np.abs(simulated - expected) / np.abs(expected),
    )
    if fmt == "csv":
        text = format_frame(frame)
    else:
        data = result.model_dump(exclude={"times", "states", "controls", "running_costs"})
        data["closed_form_cost"] = expected.tolist()
        data["relative_error"] = frame["relative_error"].tolist()
        text = json.dumps(data, indent=2) + "\n" if fmt == "json" else render_report("Simulation", data)
    _emit(text, output)


@cli.command()
@config_option
@output_option
@click.option("--param", type=click.Choice(["N", "a"]), required=True)
@click.option("--from", "start", type=float, required=True)
@click.option("--to", "stop", type=float, required=True)
@click.option("--steps", type=click.IntRange(min=1), default=11, show_default=True, help="Number of drift values (a sweeps)")
@click.pass_obj
def sweep(settings: SolverSettings, config_path, output, param, start, stop, steps):
    """CSV of indices along N (player 1 replicated) or along the drift a."""
    game = load_game_config(config_path)
    if param == "N":
        if start < 1 or stop < start:
            raise GameValidationError(f"invalid N range {start}..{stop}", field="N")
        values = np.arange(int(start), int(stop) + 1)
    else:
        values = np.linspace(start, stop, steps)
    _emit(format_frame(sweep_indices(game, param, values, settings)), output)


@cli.command("reproduce")
@click.option("--target", type=click.Choice(list(REPRODUCE_TARGETS)), required=True)
@click.option("--n-max", type=click.IntRange(min=2), default=None, help="Largest N (default from settings)")
@output_option
@click.pass_obj
def reproduce_cmd(settings: SolverSettings, target, n_max, output):
    """Dataset behind a flow-control table or figure."""
    _emit(format_frame(reproduce(target, n_max, settings)), output)


def run(argv: Optional[List[str]] = None) -> int:
    """Run the CLI and return its exit code instead of exiting."""
    try:
        rv = cli.main(args=argv, prog_name="lqgame", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.Abort:
        click.echo("Aborted!", err=True)
        return 1
    return rv if isinstance(rv, int) else 0
