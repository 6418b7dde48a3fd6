"""Feedback Nash equilibria of the scalar LQ game.

With p_i = s_i k_i and lambda = sum(p) - a, the coupled Riccati equations
become p_i^2 - 2 lambda p_i + sigma_i = 0. The vector of all subset products
of the p_i is then an eigenvector of a 2^N x 2^N matrix (M-tilde) with
eigenvalue lambda; rows and columns are indexed by player subsets in bitmask
order (bit i set <=> player i+1 in the subset).
"""

import logging
import warnings
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy import optimize

from src.config import SolverSettings, get_settings
from src.exceptions import (
    ConditionViolated,
    DefectiveSpectrum,
    DimensionCap,
    GameValidationError,
    NoBracket,
    NoEquilibrium,
)
from src.game_model import derive_params
from src.pydantic_models import (
    DerivedParams,
    FeedbackEquilibrium,
    FeedbackSolution,
    MonomialMatrix,
    ValidatedGame,
)

logger = logging.getLogger(__name__)

FEEDBACK_METHODS = ("auto", "eigen", "fixed-point")


def _popcounts(n: int) -> np.ndarray:
    masks = np.arange(1 << n)
    return np.array([bin(m).count("1") for m in masks])


def subset_products(values: Sequence[float], n: int) -> np.ndarray:
    """Entry at bitmask Omega is prod_{j in Omega} values[j]; the empty product is 1."""
    values = np.asarray(values)
    out = np.ones(1 << n, dtype=values.dtype)
    for mask in range(1, 1 << n):
        low = mask & -mask
        out[mask] = out[mask ^ low] * values[low.bit_length() - 1]
    return out


def graded_order(n: int) -> List[int]:
    """Bitmask indices sorted by subset size, then lexicographically by members."""
    def members(mask):
        return [i for i in range(n) if mask >> i & 1]
    return sorted(range(1 << n), key=lambda m: (len(members(m)), members(m)))


def build_m_tilde(
    params: DerivedParams, a: float, settings: Optional[SolverSettings] = None
) -> MonomialMatrix:
    settings = settings or get_settings()
    sigma = np.asarray(params.sigma)
    n = len(sigma)
    if n > settings.n_cap:
        raise DimensionCap(
            f"N = {n} exceeds the eigen-method cap {settings.n_cap} (matrix dimension 2^N)",
            field="n_cap",
        )
    dim = 1 << n
    m = np.zeros((dim, dim))
    m[0, 0] = -a
    for i in range(n):
        m[0, 1 << i] = 1.0
    sizes = _popcounts(n)
    for mask in range(1, dim):
        row = m[mask]
        row[mask] = a
        for i in range(n):
            bit = 1 << i
            if mask & bit:
                row[mask ^ bit] += sigma[i]
            else:
                row[mask | bit] -= 1.0
        row /= 2 * sizes[mask] - 1
    return MonomialMatrix(n=n, entries=m)


def to_m(m_tilde: MonomialMatrix, params: DerivedParams) -> MonomialMatrix:
    """Similarity transform D^-1 M-tilde D acting on the k-monomial vector."""
    d = subset_products(np.asarray(params.s, dtype=float), m_tilde.n)
    return MonomialMatrix(n=m_tilde.n, entries=m_tilde.entries * d[None, :] / d[:, None])


def riccati_residual_fb(game: ValidatedGame, k: Sequence[float]) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    s = game.b ** 2 / game.r
    return 2 * (game.a - s @ k) * k + game.q + s * k ** 2


def riccati_scale(game: ValidatedGame, k: Sequence[float]) -> float:
    """Magnitude of the largest term in the Riccati residual, at least 1."""
    k = np.asarray(k, dtype=float)
    s = game.b ** 2 / game.r
    terms = np.concatenate([np.abs(game.q), s * k ** 2, np.abs(2 * (game.a - s @ k) * k)])
    return float(max(1.0, terms.max()))


def newton_polish(game: ValidatedGame, k: Sequence[float]) -> np.ndarray:
    """One Newton step on the coupled Riccati equations."""
    k = np.asarray(k, dtype=float)
    s = game.b ** 2 / game.r
    drift = game.a - s @ k
    jac = np.diag(2 * drift + 2 * s * k) - 2 * np.outer(k, s)
    try:
        step = np.linalg.solve(jac, -riccati_residual_fb(game, k))
    except np.linalg.LinAlgError:
        logger.warning("Singular Riccati Jacobian, skipping Newton polish")
        return k
    return k + step


def _equilibrium(
    game: ValidatedGame,
    k: np.ndarray,
    method: str,
    eigenvector: Optional[np.ndarray] = None,
) -> FeedbackEquilibrium:
    s = game.b ** 2 / game.r
    p = s * k
    x0_sq = game.x0 ** 2
    return FeedbackEquilibrium(
        eigenvalue=float(p.sum() - game.a),
        k=k.tolist(),
        p=p.tolist(),
        gains=(-(game.b / game.r) * k).tolist(),
        closed_loop_pole=float(game.a - p.sum()),
        costs=(k * x0_sq).tolist(),
        weighted_cost=float(game.mu @ k * x0_sq),
        residual=float(np.max(np.abs(riccati_residual_fb(game, k)))),
        method=method,
        eigenvector=None if eigenvector is None else eigenvector.tolist(),
    )


def _warn_repeated(eigenvalues: np.ndarray, tol: float):
    vals = np.sort_complex(eigenvalues)
    gaps = np.abs(np.diff(vals))
    scale = np.maximum(1.0, np.abs(vals[1:]))
    if np.any(gaps <= tol * scale):
        message = "M-tilde has repeated eigenvalues; equilibria tied to them may be missed"
        logger.warning(message)
        warnings.warn(message, DefectiveSpectrum, stacklevel=4)


def _screen_candidate(
    game: ValidatedGame,
    params: DerivedParams,
    lam: complex,
    vec: np.ndarray,
    settings: SolverSettings,
) -> Tuple[Optional[FeedbackEquilibrium], str]:
    n = game.n
    if abs(lam.imag) > settings.imag_tol * max(1.0, abs(lam)):
        return None, "complex eigenvalue"
    lam = lam.real
    if lam <= 0:
        return None, "eigenvalue not positive"
    if lam * lam < params.sigma_max:
        return None, "eigenvalue below sqrt(sigma_max)"
    if abs(vec[0]) < settings.empty_entry_tol:
        return None, "empty-set entry is zero"
    vec = vec / vec[0]
    singletons = [1 << i for i in range(n)]
    p = vec[singletons]
    if np.any(np.abs(p.imag) > settings.imag_tol * np.maximum(1.0, np.abs(p))):
        return None, "complex p entries"
    p = p.real
    if np.any(p <= 0):
        return None, "nonpositive p entry"
    expected = subset_products(p, n)
    floor = np.abs(expected).max() * 1e-6
    if np.any(np.abs(vec - expected) > settings.monomial_rtol * np.maximum(np.abs(expected), floor)):
        return None, "eigenvector is not a monomial vector"
    if game.a - p.sum() >= 0:
        return None, "not stabilizing"

    s = np.asarray(params.s)
    k = newton_polish(game, p / s)
    if np.any(k <= 0) or game.a - s @ k >= 0:
        return None, "Newton polish left the stable positive region"
    residual = np.max(np.abs(riccati_residual_fb(game, k)))
    tolerance = settings.residual_tol * riccati_scale(game, k)
    if residual > tolerance:
        return None, f"Riccati residual {residual:.3e} above tolerance {tolerance:.3e}"
    return _equilibrium(game, k, "eigen", vec.real), "accepted"


def _solve_eigen(
    game: ValidatedGame, params: DerivedParams, settings: SolverSettings
) -> Tuple[List[FeedbackEquilibrium], float]:
    """Accepted equilibria and the spectral radius of M-tilde from one decomposition."""
    m_tilde = build_m_tilde(params, game.a, settings)
    logger.info(f"Solving {m_tilde.dim}x{m_tilde.dim} eigenproblem for N = {game.n}")

    eigenvalues, vectors = scipy.linalg.eig(m_tilde.entries)
    if len(eigenvalues) > 1:
        _warn_repeated(eigenvalues, settings.repeated_eig_tol)

    accepted: List[FeedbackEquilibrium] = []
    rejections: List[str] = []
    for j, lam in enumerate(eigenvalues):
        eq, reason = _screen_candidate(game, params, complex(lam), vectors[:, j], settings)
        if eq is None:
            rejections.append(f"lambda={complex(lam):.6g}: {reason}")
            logger.debug(f"Rejected eigenvalue {complex(lam):.6g}: {reason}")
            continue
        if any(np.allclose(eq.k, other.k, rtol=1e-8, atol=0) for other in accepted):
            continue
        accepted.append(eq)

    if not accepted:
        logger.error(f"No feedback NE among {len(eigenvalues)} eigenpairs")
        raise NoEquilibrium(
            "the coupled Riccati equations have no stabilizing solution",
            eigenvalues=[complex(v) for v in eigenvalues],
            rejections=rejections,
        )

    accepted.sort(key=lambda eq: eq.weighted_cost, reverse=True)
    logger.info(f"Found {len(accepted)} feedback equilibria; worst weighted cost {accepted[0].weighted_cost:.6g}")
    return accepted, float(np.max(np.abs(eigenvalues)))


def solve_feedback_eigen(
    game: ValidatedGame,
    params: Optional[DerivedParams] = None,
    settings: Optional[SolverSettings] = None,
) -> List[FeedbackEquilibrium]:
    """All stabilizing feedback equilibria, sorted by weighted cost (worst first)."""
    settings = settings or get_settings()
    params = params or derive_params(game)
    return _solve_eigen(game, params, settings)[0]


def fixed_point_function(p_bar: float, a: float, sigma: Sequence[float]) -> float:
    """P-bar(p_bar); its unique zero gives the aggregate sum(p) of the equilibrium."""
    sigma = np.asarray(sigma)
    y = p_bar - a
    roots = np.sqrt(np.maximum(y * y - sigma, 0.0))
    return (roots.sum() + a) / (len(sigma) - 1) - y


def solve_feedback_fixedpoint(
    game: ValidatedGame,
    params: Optional[DerivedParams] = None,
    settings: Optional[SolverSettings] = None,
) -> FeedbackEquilibrium:
    """Unique feedback equilibrium when p_{-i} > a for all i (always when a = 0)."""
    settings = settings or get_settings()
    params = params or derive_params(game)
    a = game.a
    sigma = np.asarray(params.sigma)
    s = np.asarray(params.s)

    if game.n == 1:
        p = np.array([a + np.sqrt(a * a + sigma[0])])
        return _equilibrium(game, p / s, "fixed-point")

    lower = a + np.sqrt(params.sigma_max)
    f_lower = fixed_point_function(lower, a, sigma)
    if f_lower > 0:
        logger.error(f"Fixed-point function positive at lower end p_bar = {lower:.6g}")
        raise NoBracket(f"P-bar({lower:.6g}) = {f_lower:.6g} > 0; no root above a + sqrt(sigma_max)")

    width = max(np.sqrt(params.sigma_max), 1.0)
    upper = lower + width
    expansions = 0
    while fixed_point_function(upper, a, sigma) <= 0:
        expansions += 1
        if expansions > settings.bracket_max_expansions:
            raise NoBracket(f"no sign change of P-bar up to p_bar = {upper:.6g}")
        width *= settings.bracket_growth
        upper = lower + width

    if f_lower == 0:
        p_bar = lower
    else:
        p_bar = optimize.bisect(
            fixed_point_function, lower, upper, args=(a, sigma),
            xtol=settings.bisection_xtol, maxiter=500,
        )
    y = p_bar - a
    p = y - np.sqrt(np.maximum(y * y - sigma, 0.0))

    if a != 0:
        others = p.sum() - p
        if np.any(others <= a):
            bad = int(np.argmin(others - a))
            raise ConditionViolated(
                f"p_-i > a fails for player {bad + 1}: p_-i = {others[bad]:.6g}, a = {a:.6g}"
            )

    k = newton_polish(game, p / s)
    eq = _equilibrium(game, k, "fixed-point")
    logger.info(f"Fixed-point equilibrium: p_bar = {p_bar:.10g}, residual {eq.residual:.2e}")
    return eq


def solve_feedback(
    game: ValidatedGame,
    params: Optional[DerivedParams] = None,
    settings: Optional[SolverSettings] = None,
    method: str = "auto",
) -> FeedbackSolution:
    """Eigen method up to the cap, fixed-point method beyond it (method="auto").

    The eigen path also records the spectral radius of M-tilde so the index
    bounds can reuse it.
    """
    if method not in FEEDBACK_METHODS:
        raise GameValidationError(f"unknown method {method!r}; use one of {FEEDBACK_METHODS}", field="method")
    settings = settings or get_settings()
    params = params or derive_params(game)
    if method == "eigen" or (method == "auto" and game.n <= settings.n_cap):
        equilibria, radius = _solve_eigen(game, params, settings)
        return FeedbackSolution(equilibria=equilibria, multiplicity_verified=True, spectral_radius=radius)
    if method == "fixed-point":
        return FeedbackSolution(
            equilibria=[solve_feedback_fixedpoint(game, params, settings)], multiplicity_verified=False
        )
    logger.warning(
        f"N = {game.n} above eigen cap {settings.n_cap}: using the fixed-point method, "
        "multiplicity of equilibria is unverified"
    )
    return FeedbackSolution(
        equilibria=[solve_feedback_fixedpoint(game, params, settings)], multiplicity_verified=False
    )
