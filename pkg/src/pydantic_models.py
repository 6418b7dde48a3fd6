from enum import Enum
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True)


# --- game inputs ---

class GameSpec(_Frozen):
    """Scalar LQ game: dx/dt = a x + sum_i b_i u_i, L_i = int (q_i x^2 + r_i u_i^2) dt."""

    a: float
    b: List[float]
    q: List[float]
    r: List[float]
    x0: float

    @property
    def n(self) -> int:
        return len(self.b)


class WeightVector(_Frozen):
    """Positive weights on the players' costs, summing to one."""

    mu: List[float]

    @classmethod
    def equal(cls, n: int) -> "WeightVector":
        return cls(mu=[1.0 / n] * n)


class CooperationMatrix(_Frozen):
    """Row i holds Player i's altruism weights lambda_i^j."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    weights: List[List[float]] = Field(alias="lambda")

    @classmethod
    def identity(cls, n: int) -> "CooperationMatrix":
        return cls(weights=np.eye(n).tolist())

    @classmethod
    def uniform_rows(cls, mu: "WeightVector") -> "CooperationMatrix":
        return cls(weights=[list(mu.mu) for _ in mu.mu])


class ValidatedGame(_Frozen):
    """A GameSpec and WeightVector that passed validate_spec."""

    spec: GameSpec
    weights: WeightVector
    cooperation: Optional[CooperationMatrix] = None

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def a(self) -> float:
        return self.spec.a

    @property
    def x0(self) -> float:
        return self.spec.x0

    @property
    def b(self) -> np.ndarray:
        return np.asarray(self.spec.b, dtype=float)

    @property
    def q(self) -> np.ndarray:
        return np.asarray(self.spec.q, dtype=float)

    @property
    def r(self) -> np.ndarray:
        return np.asarray(self.spec.r, dtype=float)

    @property
    def mu(self) -> np.ndarray:
        return np.asarray(self.weights.mu, dtype=float)

    def with_x0(self, x0: float) -> "ValidatedGame":
        return self.model_copy(update={"spec": self.spec.model_copy(update={"x0": x0})})


class DerivedParams(_Frozen):
    s: List[float]
    sigma: List[float]
    sigma_bar: float
    sigma_max: float
    q_bar: float
    b_bar: float
    mu_s_max: float
    mu_s_min: float
    s_bullet: float


# --- feedback equilibria ---

class MonomialMatrix(BaseModel):
    """2^N x 2^N matrix indexed by player subsets in bitmask order."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return 1 << self.n

    def subset(self, index: int) -> Tuple[int, ...]:
        """Players (1-based) in the subset at `index`."""
        return tuple(i + 1 for i in range(self.n) if index >> i & 1)

    def index_of(self, players: Tuple[int, ...]) -> int:
        return sum(1 << (i - 1) for i in players)


class FeedbackEquilibrium(_Frozen):
    eigenvalue: float
    k: List[float]
    p: List[float]
    gains: List[float]
    closed_loop_pole: float
    costs: List[float]
    weighted_cost: float
    residual: float
    method: Literal["eigen", "fixed-point"]
    eigenvector: Optional[List[float]] = None


class FeedbackSolution(_Frozen):
    """All equilibria found, plus whether the set is known to be complete."""

    equilibria: List[FeedbackEquilibrium]
    multiplicity_verified: bool
    spectral_radius: Optional[float] = None


# --- open loop and social optimum ---

class OpenLoopEquilibrium(_Frozen):
    xi: List[float]
    p_bar: float
    k_star: List[float]
    decay_rate: float
    costs: List[float]
    weighted_cost: float


class SocialOptimum(_Frozen):
    k_hat: float
    gains: List[float]
    closed_loop_pole: float
    cost: float


# --- indices ---

class PoABounds(_Frozen):
    gersgorin_bound: float
    spectral_radius: Optional[float] = None
    thm5_iii: Optional[float] = None
    thm5_iii_gersgorin: float
    cor_i: Optional[float] = None
    cor_ii: Optional[float] = None


class LargeNApprox(_Frozen):
    p_approx: List[float]
    gain_approx: List[float]
    j_star_approx: float
    rho_fb_approx: float
    rho_fb_approx_a0: float
    a_over_n: float
    sigma_ratio: float
    drift_condition_met: bool


class IndexReport(_Frozen):
    rho_fb: float
    rho_ol: float
    chi: float
    chi_approx: Optional[float] = None
    rho_fb_is_lower_bound: bool
    n_equilibria: int
    gersgorin_bound: float
    spectral_radius: Optional[float] = None
    poa_bound_thm5_iii: Optional[float] = None
    poa_bound_thm5_iii_gersgorin: float
    poa_bound_cor_i: Optional[float] = None
    poa_bound_cor_ii: Optional[float] = None
    chi_lower_bound: Optional[float] = None
    approximations: LargeNApprox


class PoIDesignCheck(_Frozen):
    chi_target: float
    lhs: float
    rhs: float
    satisfied: bool


# --- altruistic game ---

class AltruisticEquilibrium(_Frozen):
    gains: List[float]
    k_tilde: List[float]
    actual_costs: List[float]
    closed_loop_pole: float
    iterations: int
    residual: float


class PoCReport(_Frozen):
    nu: List[float]
    altruistic: AltruisticEquilibrium
    baseline_costs: List[float]
    single_equilibrium: bool = True


# --- simulation ---

class PolicyProfile(_Frozen):
    kind: Literal["feedback", "open-loop"]
    gains: Optional[List[float]] = None
    amplitudes: Optional[List[float]] = None
    decay_rate: Optional[float] = None

    @model_validator(mode="after")
    def _check_kind(self):
        if self.kind == "feedback" and self.gains is None:
            raise ValueError("feedback profile requires gains")
        if self.kind == "open-loop" and (self.amplitudes is None or self.decay_rate is None):
            raise ValueError("open-loop profile requires amplitudes and decay_rate")
        return self

    @property
    def n(self) -> int:
        return len(self.gains if self.kind == "feedback" else self.amplitudes)


class SimulationResult(_Frozen):
    horizon: float
    step: float
    per_player_cost: List[float]
    terminal_state: float
    truncation_estimate: List[float]
    times: Optional[List[float]] = None
    states: Optional[List[float]] = None
    controls: Optional[List[List[float]]] = None
    running_costs: Optional[List[List[float]]] = None

    @property
    def total_cost(self) -> List[float]:
        return [c + t for c, t in zip(self.per_player_cost, self.truncation_estimate)]


# --- flow control ---

class Normalization(str, Enum):
    CONSTANT_1 = "constant-1"
    ONE_OVER_N = "one-over-N"
    SQRT_N = "sqrt-N"
    CUSTOM = "custom"


class FlowControlConfig(_Frozen):
    n_users: int = Field(ge=1)
    normalization: Normalization = Normalization.CONSTANT_1
    custom_factor: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check_custom(self):
        if self.normalization == Normalization.CUSTOM and self.custom_factor is None:
            raise ValueError("custom normalization requires custom_factor")
        return self


class FlowIndexRow(_Frozen):
    n: int
    f: float
    j_fb: float
    j_social: float
    j_ol: float
    rho_fb: float
    rho_ol: float
    chi: float
