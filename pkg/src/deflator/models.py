"""Closed-form model zoo: Bachelier, lognormal and infinitely divisible
terminal laws, with characteristic-function inversion for the latter.

Everything here prices one European put (calls follow from parity) and
exposes the bits the hedging story needs: deltas, gammas, correlation
and least squared error estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad as _quad
from scipy.stats import norm as _norm

from ._quadrature import gauss_hermite
from .exceptions import DimensionMismatch, TruncationFailure

# ---------------------------------------------------------------------------
# Bachelier


@dataclass(frozen=True)
class BachelierParams:
    """Terminal stock S = R s (1 + sigma Z) with Z standard normal.

    R is the gross rate for the period, s the spot and sigma the
    relative volatility of the forward.
    """

    R: float
    s: float
    sigma: float

    def __post_init__(self):
        if self.R <= 0 or self.s <= 0 or self.sigma <= 0:
            raise ValueError("R, s and sigma must be positive")

    @property
    def forward(self) -> float:
        return self.R * self.s


@dataclass(frozen=True)
class PutQuote:
    price: float
    delta: float


def bachelier_put(params: BachelierParams, k: float) -> PutQuote:
    """Time-0 put price (k/R - s) Phi(z) + s sigma phi(z) and its delta.

    z = (k / (R s) - 1) / sigma is the standardized moneyness; at the
    money (k = R s) the price collapses to s sigma / sqrt(2 pi) and the
    delta to -1/2.
    """
    R, s, sigma = params.R, params.s, params.sigma
    z = (k / (R * s) - 1.0) / sigma
    price = (k / R - s) * _norm.cdf(z) + s * sigma * _norm.pdf(z)
    return PutQuote(price=float(price), delta=float(-_norm.cdf(z)))


def _normal_piecewise_expectation(f, mean, std, kinks=(), width=14.0, n=120):
    """E f(X), X ~ N(mean, std^2), for f smooth between known kinks.

    Fixed-order Gauss-Legendre on each smooth segment; with the kinks
    supplied this is exact to machine precision for option payoffs.
    """
    x_nodes, w_nodes = np.polynomial.legendre.leggauss(n)
    lo, hi = mean - width * std, mean + width * std
    edges = [lo] + sorted(k for k in kinks if lo < k < hi) + [hi]
    total = 0.0
    for a, b in zip(edges, edges[1:]):
        x = 0.5 * (b - a) * x_nodes + 0.5 * (a + b)
        pdf = np.exp(-0.5 * ((x - mean) / std) ** 2) / (std * math.sqrt(2.0 * math.pi))
        total += 0.5 * (b - a) * float(np.sum(w_nodes * f(x) * pdf))
    return total


@dataclass(frozen=True)
class ParityCheck:
    call: float
    quadrature_call: float
    residual: float


def bachelier_call_put_consistency(params: BachelierParams, k: float) -> ParityCheck:
    """Call from parity, call = put + s - k/R, against direct quadrature
    of E (S - k)^+ / R over the terminal normal law."""
    call = bachelier_put(params, k).price + params.s - k / params.R
    f = params.forward
    quadrature = _normal_piecewise_expectation(
        lambda x: np.maximum(x - k, 0.0), mean=f, std=f * params.sigma,
        kinks=(k,)) / params.R
    return ParityCheck(call=float(call), quadrature_call=float(quadrature),
                       residual=float(abs(call - quadrature)))


def atm_call_correlation() -> float:
    """Correlation between the stock and the at the money call payoff
    under a normal terminal law: 1 / sqrt(2 - 2/pi), about 0.8563."""
    return 1.0 / math.sqrt(2.0 - 2.0 / math.pi)


@dataclass(frozen=True)
class HedgeErrorEstimate:
    """Exact (quadrature) and small-sigma approximate hedge quality for
    a smooth payoff of the Bachelier terminal stock."""

    corr: float
    least_squared_error: float
    corr_approx: float
    lse_approx: float
    zero_slope: bool


def hedge_error_estimate(params: BachelierParams, payoff, d1=None, d2=None,
                         nodes: int = 301) -> HedgeErrorEstimate:
    """Correlation and least squared error of the stock hedge of payoff.

    The exact values integrate the payoff against the terminal normal
    law (so payoff should be smooth for them to be tight); the
    approximations expand around the forward f:

        corr ~ 1 / sqrt(1 + f^2 sigma^2 p''(f)^2 / (2 p'(f)^2))
        lse  ~ f^4 sigma^4 p''(f)^2 / (2 R)

    p'(f) and p''(f) are taken from d1 and d2 when given, otherwise by
    central differences.  zero_slope flags p'(f) = 0, where the best
    hedge is pure cash E p(S) and the correlation degenerates to zero.
    """
    f = params.forward
    sigma, R = params.sigma, params.R
    z, w = gauss_hermite(nodes)
    s_nodes = f * (1.0 + sigma * z)
    p_nodes = np.asarray(payoff(s_nodes), dtype=float)
    mean_p = float(w @ p_nodes)
    var_p = float(w @ (p_nodes - mean_p) ** 2)
    cov_sp = float(w @ ((s_nodes - f) * (p_nodes - mean_p)))
    var_s = (f * sigma) ** 2
    if var_p > 0.0:
        corr = cov_sp / math.sqrt(var_s * var_p)
        lse = (1.0 - corr ** 2) * var_p / R
    else:
        corr, lse = 0.0, 0.0

    h = 1e-5 * f
    slope = float(d1(f)) if d1 is not None else (payoff(f + h) - payoff(f - h)) / (2 * h)
    curve = (float(d2(f)) if d2 is not None
             else (payoff(f + h) - 2.0 * payoff(f) + payoff(f - h)) / h ** 2)
    zero_slope = slope == 0.0
    if zero_slope:
        corr_approx = 0.0
    else:
        corr_approx = 1.0 / math.sqrt(1.0 + (f * sigma * curve) ** 2 / (2.0 * slope ** 2))
    lse_approx = (f * sigma) ** 4 * curve ** 2 / (2.0 * R)
    return HedgeErrorEstimate(corr=corr, least_squared_error=lse,
                              corr_approx=corr_approx, lse_approx=lse_approx,
                              zero_slope=zero_slope)


def normal_cov_identity_check(rho: float, f, f_prime, nodes: int = 96) -> float:
    """Residual of Cov(N, f(M)) = Cov(N, M) E f'(M) for correlated
    standard normals with Cov(N, M) = rho, both sides by quadrature."""
    if not -1.0 <= rho <= 1.0:
        raise ValueError("rho must be a correlation")
    z, w = gauss_hermite(nodes)
    m = z[:, None]
    n = rho * z[:, None] + math.sqrt(1.0 - rho ** 2) * z[None, :]
    w2 = w[:, None] * w[None, :]
    f_m = np.asarray(f(m), dtype=float) * np.ones_like(n)
    lhs = float((w2 * n * f_m).sum()) - float((w2 * n).sum()) * float((w2 * f_m).sum())
    rhs = rho * float(w @ np.asarray(f_prime(z), dtype=float))
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# geometric Brownian motion


@dataclass(frozen=True)
class GBMParams:
    """S_t = s exp((r - sigma^2/2) t + sigma B_t): the drift makes the
    discounted stock a martingale at rate r."""

    r: float
    s: float
    sigma: float
    t: float

    def __post_init__(self):
        if self.s <= 0 or self.sigma <= 0 or self.t <= 0:
            raise ValueError("s, sigma and t must be positive")

    @property
    def forward(self) -> float:
        return self.s * math.exp(self.r * self.t)


@dataclass(frozen=True)
class GBMPutQuote:
    forward_value: float
    pv: float
    delta: float
    gamma: float


def gbm_put(params: GBMParams, k: float) -> GBMPutQuote:
    """Lognormal put: forward value k Phi(z) - f Phi(z - v) with total
    volatility v = sigma sqrt(t) and z = v/2 + log(k/f) / v.

    delta and gamma differentiate the present value in the spot; both
    come out of the same tilted-law evaluation, delta = -Phi(z - v) and
    gamma = phi(z - v) / (s v).
    """
    if k <= 0.0:
        return GBMPutQuote(0.0, 0.0, 0.0, 0.0)
    f = params.forward
    v = params.sigma * math.sqrt(params.t)
    z = 0.5 * v + math.log(k / f) / v
    forward_value = k * _norm.cdf(z) - f * _norm.cdf(z - v)
    discount = math.exp(-params.r * params.t)
    return GBMPutQuote(
        forward_value=float(forward_value),
        pv=float(discount * forward_value),
        delta=float(-_norm.cdf(z - v)),
        gamma=float(_norm.pdf(z - v) / (params.s * v)),
    )


# ---------------------------------------------------------------------------
# infinitely divisible laws in Kolmogorov form


def _exp_remainder(a: np.ndarray) -> np.ndarray:
    """(exp(a) - 1 - a) / a^2, stable near zero via the series."""
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    small = np.abs(a) < 0.5
    big = ~small
    with np.errstate(invalid="ignore", divide="ignore"):
        out[big] = (np.expm1(a[big]) - a[big]) / a[big] ** 2
    term = np.full(a[small].shape, 0.5)
    acc = term.copy()
    for n in range(3, 22):
        term = term * a[small] / n
        acc += term
    out[small] = acc
    return out


@dataclass(frozen=True)
class KolmogorovLaw:
    """An infinitely divisible law with finite variance, parameterized
    by its mean and a finite second-moment jump measure.

    charfn is exp(i u mean + sum_i K_u(x_i) w_i) with
    K_u(x) = (exp(iux) - 1 - iux) / x^2 and K_u(0) = -u^2/2, so the
    node at zero carries the Gaussian part: the mean of the law is
    `mean` and its variance the total node weight.
    """

    mean: float
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.nodes, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if x.shape != w.shape or x.ndim != 1:
            raise DimensionMismatch("need one weight per node")
        if not (np.isfinite(x).all() and np.isfinite(w).all()):
            raise ValueError("nodes and weights must be finite")
        if (w < 0).any():
            raise ValueError("node weights must be nonnegative")
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", w)

    @classmethod
    def standard_normal(cls) -> "KolmogorovLaw":
        return cls(mean=0.0, nodes=np.array([0.0]), weights=np.array([1.0]))

    @property
    def variance(self) -> float:
        return float(self.weights.sum())

    def char_exponent(self, u):
        """log E exp(iuX), vectorized over u."""
        u = np.asarray(u, dtype=float)
        a = 1j * u[..., None] * self.nodes
        # K_u(x) = -u^2 * (e^{iux} - 1 - iux) / (iux)^2, stable via series
        k = np.empty_like(a)
        small = np.abs(a) < 0.5
        big = ~small
        k[big] = (np.exp(a[big]) - 1.0 - a[big]) / a[big] ** 2
        k[small] = _complex_exp_remainder(a[small])
        body = -(u[..., None] ** 2) * k
        return 1j * u * self.mean + body @ self.weights

    def charfn(self, u):
        out = np.exp(self.char_exponent(u))
        return out if np.ndim(u) else complex(out)

    def log_mgf(self, sigma: float) -> float:
        """log E exp(sigma X) = mean sigma + sum (e^{sx}-1-sx)/x^2 w."""
        a = sigma * self.nodes
        vals = np.where(self.nodes == 0.0, 0.5 * sigma ** 2,
                        _exp_remainder(a) * sigma ** 2)
        return float(self.mean * sigma + vals @ self.weights)

    def tilt(self, sigma: float) -> "KolmogorovLaw":
        """The law reweighted by exp(sigma X) / E exp(sigma X).

        In these coordinates the tilt is algebraic: the mean gains
        sum (e^{sx} - 1)/x w and each weight picks up the factor
        e^{s x}.  Tilting the standard normal by sigma gives exactly
        N(sigma, 1); tilts by sigma then tau compose to sigma + tau.
        """
        x, w = self.nodes, self.weights
        shift = np.where(x == 0.0, sigma,
                         np.expm1(sigma * x) / np.where(x == 0.0, 1.0, x))
        return KolmogorovLaw(mean=self.mean + float(shift @ w),
                             nodes=x, weights=np.exp(sigma * x) * w)

    def scale_time(self, t: float) -> "KolmogorovLaw":
        """The law of the process at time t: exponent scales linearly."""
        if t <= 0:
            raise ValueError("need t > 0")
        return KolmogorovLaw(mean=t * self.mean, nodes=self.nodes,
                             weights=t * self.weights)


def _complex_exp_remainder(a):
    """(exp(a) - 1 - a) / a^2 for complex a with |a| < 0.5, by series."""
    a = np.asarray(a, dtype=complex)
    term = np.full(a.shape, 0.5, dtype=complex)
    acc = term.copy()
    for n in range(3, 26):
        term = term * a / n
        acc = acc + term
    return acc


def cdf_from_charfn(charfn, x_grid, smoothing: float = 0.0,
                    decay_threshold: float = 1e-12, u_cap: float = 1e6,
                    quad_tol: float = 1e-11) -> np.ndarray:
    """Distribution function on a grid by characteristic function
    inversion: F(x) = 1/2 - (1/pi) int_0^U Im(e^{-iux} phi(u)) / u du.

    The truncation point U doubles until |phi| stays below
    decay_threshold, capped at u_cap (TruncationFailure beyond).  For
    laws with atoms phi never decays; a positive smoothing width
    convolves with N(0, smoothing^2), which resolves the cdf up to
    steps of that width.  Results are clipped to [0, 1] and made
    monotone by a running maximum, so x_grid must be nondecreasing.
    """
    x_grid = np.atleast_1d(np.asarray(x_grid, dtype=float))
    if (np.diff(x_grid) < 0).any():
        raise ValueError("x_grid must be nondecreasing")

    def phi(u):
        out = charfn(u)
        if smoothing:
            out = out * np.exp(-0.5 * (smoothing * u) ** 2)
        return out

    probe = 1.0 + np.arange(5) / 16.0
    U = 1.0
    while max(abs(phi(u)) for u in U * probe) > decay_threshold:
        U *= 2.0
        if U > u_cap:
            raise TruncationFailure(
                f"|charfn| does not decay below {decay_threshold} by {u_cap}; "
                "set a smoothing width for laws with atoms")

    out = np.empty(x_grid.shape)
    for i, x in enumerate(x_grid):
        integrand = lambda u: (np.exp(-1j * u * x) * phi(u)).imag / u
        tail, _ = _quad(integrand, 0.0, U, epsabs=quad_tol, epsrel=1e-9,
                        limit=800)
        out[i] = 0.5 - tail / math.pi
    return np.maximum.accumulate(np.clip(out, 0.0, 1.0))


# ---------------------------------------------------------------------------
# exponential of an infinitely divisible process


@dataclass(frozen=True)
class LevyModelParams:
    """S_t = s exp(mu t + sigma L_t) with L infinitely divisible
    (Kolmogorov form at unit time) and mu = r - log E e^{sigma L_1},
    which makes the discounted stock a martingale."""

    r: float
    s: float
    sigma: float
    t: float
    base: KolmogorovLaw

    def __post_init__(self):
        if self.s <= 0 or self.sigma <= 0 or self.t <= 0:
            raise ValueError("s, sigma and t must be positive")

    @property
    def drift(self) -> float:
        return self.r - self.base.log_mgf(self.sigma)


def levy_put(params: LevyModelParams, k: float, smoothing: float = 0.0,
             **inversion_kwargs) -> float:
    """Forward value E (k - S_t)^+ = k P(S_t <= k) - s e^{rt} P(S*_t <= k).

    The starred law is the sigma-tilt of the time-t law; both
    probabilities come from characteristic function inversion at the
    log-moneyness threshold.  With the standard normal base this equals
    the lognormal put value.
    """
    if k <= 0.0:
        return 0.0
    threshold = (math.log(k / params.s) - params.drift * params.t) / params.sigma
    law_t = params.base.scale_time(params.t)
    p_plain = cdf_from_charfn(law_t.charfn, [threshold], smoothing,
                              **inversion_kwargs)[0]
    p_tilted = cdf_from_charfn(law_t.tilt(params.sigma).charfn, [threshold],
                               smoothing, **inversion_kwargs)[0]
    return float(k * p_plain - params.s * math.exp(params.r * params.t) * p_tilted)
