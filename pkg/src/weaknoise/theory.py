"""Closed-form quantities for weak-noise modulation-estimation.

Everything here is in nats. ``C(gamma) = 0.5 ln(1 + gamma)`` is the AWGN
capacity per channel use; the optimal weak-noise error cost exponent for a
weighted L_q cost ``sum_i exp(-n a_i) |eps_i|^q`` over a d-dimensional
parameter is ``(q C + sum a) / d`` whenever the high-SNR condition holds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .errors import A1Violated, DegenerateGrid, DimensionTooLarge

# slack for the high-SNR condition and the rate budget; the condition is
# written with <=, so boundary cases must survive float rounding
A1_TOL = 1e-12


@dataclass(frozen=True)
class ChannelSpec:
    P: float
    sigma2: float

    def __post_init__(self):
        if not (self.P > 0 and self.sigma2 > 0):
            raise ValueError(f"need P > 0 and sigma2 > 0, got P={self.P}, sigma2={self.sigma2}")

    @property
    def gamma(self) -> float:
        return self.P / self.sigma2

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @classmethod
    def from_gamma(cls, gamma: float, P: float = 1.0) -> "ChannelSpec":
        """Channel with power ``P`` and noise variance ``P / gamma``."""
        if not gamma > 0:
            raise ValueError("a simulated channel needs gamma > 0")
        return cls(P, P / gamma)


@dataclass(frozen=True)
class ErrorCostSpec:
    """Weighted L_q cost ``rho(eps) = sum_i exp(-n a_i) |eps_i|^q``."""

    q: float
    a: tuple[float, ...]
    n: int = 1

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in np.atleast_1d(self.a)))
        if self.q < 1:
            raise ValueError(f"cost power q must be >= 1, got {self.q}")
        if len(self.a) < 1:
            raise ValueError("need at least one exponent")
        if self.n < 1:
            raise ValueError("block length must be positive")

    @property
    def d(self) -> int:
        return len(self.a)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(-self.n * np.asarray(self.a))

    def with_n(self, n: int) -> "ErrorCostSpec":
        return ErrorCostSpec(self.q, self.a, n)

    def cost(self, eps) -> np.ndarray:
        """Cost of error vectors; the last axis indexes the d components."""
        eps = np.asarray(eps, dtype=float)
        if eps.shape[-1] != self.d:
            raise ValueError(f"error vectors must have {self.d} components")
        return (np.abs(eps) ** self.q) @ self.weights


@dataclass(frozen=True)
class RateAssignment:
    rates: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        if any(r < 0 for r in self.rates):
            raise ValueError("rates must be nonnegative")

    @property
    def total(self) -> float:
        return math.fsum(self.rates)


def capacity(gamma: float) -> float:
    """AWGN capacity in nats per channel use at SNR ``gamma``."""
    return 0.5 * math.log1p(gamma)


def _snr(channel) -> float:
    # theory only needs gamma; a bare number stands in for it (gamma = 0 allowed)
    return channel.gamma if isinstance(channel, ChannelSpec) else float(channel)


def awgn_capacity(channel: ChannelSpec | float) -> float:
    gamma = _snr(channel)
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return capacity(gamma)


def check_assumption_a1(ecf: ErrorCostSpec, channel: ChannelSpec | float) -> bool:
    """True iff ``d max(a) - sum(a) <= q C(gamma)`` (boundary included)."""
    a = ecf.a
    lhs = len(a) * max(a) - math.fsum(a)
    return lhs <= ecf.q * awgn_capacity(channel) + A1_TOL


def _require_a1(ecf, channel):
    if not check_assumption_a1(ecf, channel):
        raise A1Violated(
            f"d*max(a) - sum(a) = {ecf.d * max(ecf.a) - math.fsum(ecf.a):.6g} exceeds "
            f"q*C = {ecf.q * awgn_capacity(channel):.6g}"
        )


def weak_noise_exponent(ecf: ErrorCostSpec, channel: ChannelSpec | float) -> float:
    _require_a1(ecf, channel)
    return (ecf.q * awgn_capacity(channel) + math.fsum(ecf.a)) / ecf.d


def optimal_rates(ecf: ErrorCostSpec, channel: ChannelSpec | float) -> RateAssignment:
    """Rate split that equalizes ``a_i + q R_i`` across components."""
    _require_a1(ecf, channel)
    C = awgn_capacity(channel)
    a = np.asarray(ecf.a)
    rates = C / ecf.d + (a.mean() - a) / ecf.q
    # the A.1 boundary can leave -1e-17 residue
    rates = np.where((rates < 0) & (rates > -A1_TOL), 0.0, rates)
    return RateAssignment(tuple(rates))


def supmin_oracle(ecf: ErrorCostSpec, channel: ChannelSpec | float, grid_steps: int) -> float:
    """Brute-force ``sup min_i (a_i + q R_i)`` over the rate simplex.

    Rates live on the lattice ``R_i = k_i C / grid_steps`` with integer
    ``k_i >= 0`` and ``sum k_i <= grid_steps``. The objective never decreases
    in the last rate, so for each choice of the first d-1 rates only the
    largest feasible last rate needs evaluating.
    """
    d = ecf.d
    if d > 4:
        raise DimensionTooLarge(f"oracle is limited to d <= 4, got {d}")
    if grid_steps < 10:
        raise ValueError("grid_steps must be >= 10")
    N = int(grid_steps)
    h = awgn_capacity(channel) / N
    a = np.asarray(ecf.a)
    q = ecf.q

    if d == 1:
        return float(a[0] + q * N * h)

    def best_over(prefix: Sequence[int]) -> float:
        # vectorize over the remaining two free coordinates (k_{d-2}, k_{d-1})
        used = sum(prefix)
        head = min((a[i] + q * k * h for i, k in enumerate(prefix)), default=np.inf)
        budget = N - used
        if d - len(prefix) == 2:
            k = np.arange(budget + 1)
            vals = np.minimum(a[-2] + q * k * h, a[-1] + q * (budget - k) * h)
            return float(min(head, vals.max()))
        k1, k2 = np.meshgrid(np.arange(budget + 1), np.arange(budget + 1), indexing="ij")
        ok = k1 + k2 <= budget
        k1, k2 = k1[ok], k2[ok]
        vals = np.minimum.reduce([
            a[-3] + q * k1 * h,
            a[-2] + q * k2 * h,
            a[-1] + q * (budget - k1 - k2) * h,
        ])
        return float(min(head, vals.max()))

    if d <= 3:
        return best_over(())
    return max(best_over((k,)) for k in range(N + 1))


def q_function(s):
    """Gaussian tail probability ``Q(s) = P(N(0,1) > s)``.

    Evaluated as ``erfc(s / sqrt 2) / 2``, which keeps full relative accuracy
    deep into the tail. Accepts scalars or arrays.
    """
    out = 0.5 * special.erfc(np.asarray(s, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def finite_n_converse_bound(
    ecf: ErrorCostSpec,
    M_u: int,
    M_v: int,
    sigma: float,
    total_locus_length: float,
    delta_n: float,
) -> float:
    """Finite-n lower bound on the sup weak-noise cost of any 2-D system.

    ``2 rho(1/2M_u, 1/2M_v) (1 - 1/M_u - 1/M_v) [Q(L / (2 sigma K)) - delta_n]_+``
    with ``K = M_u M_v - M_u - M_v`` the number of in-diagonal steps kept by
    the scan (up to one) and ``L`` the summed locus length along diagonals.
    """
    if ecf.d != 2:
        raise ValueError("the converse evaluator is two-dimensional")
    if total_locus_length < 0 or not 0 <= delta_n <= 1:
        raise ValueError("need total_locus_length >= 0 and delta_n in [0, 1]")
    K = M_u * M_v - M_u - M_v
    if K < 0:
        raise DegenerateGrid(f"M_u M_v - M_u - M_v = {K} < 0")
    if K == 0:
        # M_u = M_v = 2: the prefactor 1 - 1/M_u - 1/M_v vanishes
        return 0.0
    step = float(ecf.cost([1 / (2 * M_u), 1 / (2 * M_v)]))
    if sigma == 0:
        tail = 0.5 if total_locus_length == 0 else 0.0
    else:
        tail = q_function(total_locus_length / (2 * sigma * K))
    return 2 * step * (1 - 1 / M_u - 1 / M_v) * max(0.0, tail - delta_n)


@dataclass(frozen=True)
class MacBounds:
    generic_exponent: float
    individual_exponent: float
    binding: str = field(default="generic")


def mac_structured_bounds(q: float, gamma1: float, gamma2: float) -> MacBounds:
    """Two converse exponents for an additive two-user modulator with a = 0.

    The generic one ignores the structure; the individual one treats each
    user as if the other were known. The smaller exponent is the binding
    (tighter) converse.
    """
    generic = q * capacity(gamma1 + gamma2) / 2
    individual = q * min(capacity(gamma1), capacity(gamma2))
    binding = "generic" if generic <= individual else "individual"
    return MacBounds(generic, individual, binding)
