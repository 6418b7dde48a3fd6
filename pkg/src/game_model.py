"""Scalar LQ game definition, validation and derived parameters.

Game config files are YAML mappings::

    a: 0.0              # drift
    b: [1.0, 1.0]       # control gains, nonzero
    q: [1.0, 1.0]       # state-cost weights, > 0
    r: [1.0, 1.0]       # control-cost weights, > 0
    x0: 1.0             # initial state, nonzero
    mu: [0.5, 0.5]      # optional cost weights, > 0, sum 1 (default 1/N each)
    lambda:             # optional cooperation matrix, rows sum to 1
      - [0.75, 0.25]
      - [0.25, 0.75]
"""

import logging
import math
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import yaml
from pydantic import ValidationError

from src.exceptions import (
    GameConfigError,
    GameValidationError,
    InvalidCooperationMatrix,
    LengthMismatch,
    NonPositiveWeight,
    WeightSumMismatch,
    ZeroGain,
    ZeroInitialState,
    ZeroSelfWeight,
)
from src.pydantic_models import (
    CooperationMatrix,
    DerivedParams,
    GameSpec,
    ValidatedGame,
    WeightVector,
)

logger = logging.getLogger(__name__)

SIMPLEX_TOL = 1e-12

_REQUIRED_KEYS = ("a", "b", "q", "r", "x0")
_OPTIONAL_KEYS = ("mu", "lambda")


def _check_positive(values, field: str):
    for i, v in enumerate(values):
        if not math.isfinite(v):
            raise GameValidationError(f"{field}[{i}] = {v} is not finite", field=field)
        if v <= 0:
            raise NonPositiveWeight(f"{field}[{i}] = {v} must be positive", field=field)


def validate_cooperation(cooperation: CooperationMatrix, n: int) -> CooperationMatrix:
    lam = np.asarray(cooperation.weights, dtype=float)
    if lam.shape != (n, n):
        raise LengthMismatch(f"lambda must be {n}x{n}, got shape {lam.shape}", field="lambda")
    if not np.all(np.isfinite(lam)):
        raise InvalidCooperationMatrix("lambda entries must be finite", field="lambda")
    if np.any(lam < 0):
        raise InvalidCooperationMatrix("lambda entries must be nonnegative", field="lambda")
    for i, row in enumerate(lam):
        total = math.fsum(row)
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise InvalidCooperationMatrix(f"lambda row {i} sums to {total}, expected 1", field="lambda")
        if row[i] <= 0:
            raise ZeroSelfWeight(f"lambda[{i}][{i}] must be positive", field="lambda")
    return cooperation


def validate_spec(
    raw_spec: GameSpec,
    mu: Optional[WeightVector] = None,
    cooperation: Optional[CooperationMatrix] = None,
) -> ValidatedGame:
    """Check every input invariant; the GameSpec is wrapped unchanged."""
    n = len(raw_spec.b)
    if n < 1:
        raise LengthMismatch("a game needs at least one player", field="b")
    for field in ("q", "r"):
        if len(getattr(raw_spec, field)) != n:
            raise LengthMismatch(
                f"{field} has {len(getattr(raw_spec, field))} entries, b has {n}", field=field
            )
    if mu is None:
        mu = WeightVector.equal(n)
    if len(mu.mu) != n:
        raise LengthMismatch(f"mu has {len(mu.mu)} entries, b has {n}", field="mu")

    if not math.isfinite(raw_spec.a):
        raise GameValidationError(f"a = {raw_spec.a} is not finite", field="a")
    if not math.isfinite(raw_spec.x0):
        raise GameValidationError(f"x0 = {raw_spec.x0} is not finite", field="x0")
    if raw_spec.x0 == 0:
        raise ZeroInitialState("x0 must be nonzero", field="x0")
    for i, b in enumerate(raw_spec.b):
        if not math.isfinite(b):
            raise GameValidationError(f"b[{i}] = {b} is not finite", field="b")
        if b == 0:
            raise ZeroGain(f"b[{i}] must be nonzero", field="b")
    _check_positive(raw_spec.q, "q")
    _check_positive(raw_spec.r, "r")
    _check_positive(mu.mu, "mu")
    total = math.fsum(mu.mu)
    if abs(total - 1.0) > SIMPLEX_TOL:
        raise WeightSumMismatch(f"mu sums to {total}, expected 1", field="mu")

    if cooperation is not None:
        validate_cooperation(cooperation, n)

    return ValidatedGame(spec=raw_spec, weights=mu, cooperation=cooperation)


def derive_params(game: ValidatedGame) -> DerivedParams:
    b, q, r, mu = game.b, game.q, game.r, game.mu
    s = b ** 2 / r
    sigma = s * q
    mu_s = mu / s
    return DerivedParams(
        s=s.tolist(),
        sigma=sigma.tolist(),
        sigma_bar=float(sigma.sum()),
        sigma_max=float(sigma.max()),
        q_bar=float(mu @ q),
        b_bar=float(np.sum(s / mu)),
        mu_s_max=float(mu_s.max()),
        mu_s_min=float(mu_s.min()),
        s_bullet=float(s.sum() / s.min()),
    )


# --- config files ---

def _key_lines(text: str) -> Dict[str, int]:
    """1-based line of every top-level key."""
    node = yaml.compose(text, Loader=yaml.SafeLoader)
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {key.value: key.start_mark.line + 1 for key, _ in node.value}


def parse_game_config(text: str, source: str = "<string>") -> ValidatedGame:
    try:
        lines = _key_lines(text)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark or e.context_mark
        line = mark.line + 1 if mark is not None else None
        logger.error(f"Error parsing game config {source}: {e}")
        raise GameConfigError(f"YAML syntax error: {e.problem}", line=line) from e
    except yaml.YAMLError as e:
        raise GameConfigError(f"YAML error: {e}") from e

    if not isinstance(data, dict):
        raise GameConfigError("game config must be a mapping of fields", line=1)

    for key in data:
        if key not in _REQUIRED_KEYS + _OPTIONAL_KEYS:
            raise GameConfigError("unknown field", field=str(key), line=lines.get(key))
    for key in _REQUIRED_KEYS:
        if key not in data:
            raise GameConfigError("required field is missing", field=key)

    def fail(field: str, message: str, cause: Exception):
        logger.error(f"Invalid game config {source}: {field}: {message}")
        raise GameConfigError(message, field=field, line=lines.get(field)) from cause

    try:
        spec = GameSpec(**{key: data[key] for key in _REQUIRED_KEYS})
    except ValidationError as e:
        err = e.errors()[0]
        fail(str(err["loc"][0]), err["msg"], e)

    mu = None
    if data.get("mu") is not None:
        try:
            mu = WeightVector(mu=data["mu"])
        except ValidationError as e:
            fail("mu", e.errors()[0]["msg"], e)

    cooperation = None
    if data.get("lambda") is not None:
        try:
            cooperation = CooperationMatrix(weights=data["lambda"])
        except ValidationError as e:
            fail("lambda", e.errors()[0]["msg"], e)

    try:
        game = validate_spec(spec, mu, cooperation)
    except GameValidationError as e:
        fail(e.field or "", str(e), e)

    logger.info(f"Loaded {game.n}-player game from {source}")
    return game


def load_game_config(path: Union[str, Path]) -> ValidatedGame:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        logger.error(f"Game config not found: {path}")
        raise GameConfigError(f"file not found: {path}") from e
    return parse_game_config(text, source=str(path))


# --- derived games used by sweeps ---

def replicate_player(game: ValidatedGame, n: int, player: int = 0) -> ValidatedGame:
    """Symmetric n-player game built from one player's (b, q, r), equal weights."""
    if n < 1:
        raise LengthMismatch(f"n = {n} must be at least 1", field="N")
    b, q, r = game.spec.b[player], game.spec.q[player], game.spec.r[player]
    spec = GameSpec(a=game.a, b=[b] * n, q=[q] * n, r=[r] * n, x0=game.x0)
    return validate_spec(spec)


def with_drift(game: ValidatedGame, a: float) -> ValidatedGame:
    spec = game.spec.model_copy(update={"a": a})
    return validate_spec(spec, game.weights, game.cooperation)


def with_weights(game: ValidatedGame, mu: WeightVector) -> ValidatedGame:
    return validate_spec(game.spec, mu, game.cooperation)
