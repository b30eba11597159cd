"""One-period markets, cone projection and arbitrage certificates.

A one-period market quotes a price vector ``x`` (one entry per
instrument) and a payoff matrix with one row per terminal outcome.  The
market admits no arbitrage exactly when ``x`` lies in the closed convex
cone generated by the payoff rows; in that case the nonnegative cone
coordinates are a price deflator (state prices).  When ``x`` is outside
the cone, the gap vector between ``x`` and its nearest cone point is an
arbitrage: it has negative cost and nonnegative payoff in every outcome.

The projection is computed by nonnegative least squares, so one solve
yields either the deflator or the certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionMismatch, NonConvergence

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class OnePeriodMarket:
    """Prices now and payoffs one period later.

    prices   : array (m,), price of each instrument at time 0.
    payoffs  : array (N, m), row j holds every instrument's payoff in
               terminal outcome j.
    labels   : optional outcome names, used when reporting deflator
               weights atom by atom.
    """

    prices: np.ndarray
    payoffs: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        prices = np.atleast_1d(np.asarray(self.prices, dtype=float))
        payoffs = np.atleast_2d(np.asarray(self.payoffs, dtype=float))
        if prices.ndim != 1 or payoffs.ndim != 2:
            raise DimensionMismatch("prices must be a vector and payoffs a matrix")
        if payoffs.shape[1] != prices.shape[0]:
            raise DimensionMismatch(
                f"payoff rows have {payoffs.shape[1]} entries but there are "
                f"{prices.shape[0]} prices")
        if not (np.isfinite(prices).all() and np.isfinite(payoffs).all()):
            raise ValueError("prices and payoffs must be finite")
        if self.labels is not None and len(self.labels) != payoffs.shape[0]:
            raise DimensionMismatch("one label per outcome required")
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "payoffs", payoffs)

    @property
    def n_instruments(self) -> int:
        return self.prices.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.payoffs.shape[0]


@dataclass(frozen=True)
class ConeProjection:
    """Nearest point of the payoff cone to the price vector.

    weights       : nonnegative cone coordinates, one per outcome.
    x_star        : the projected price vector, payoffs.T @ weights.
    residual_norm : euclidean distance from prices to x_star.
    prices        : the vector that was projected.
    """

    weights: np.ndarray
    x_star: np.ndarray
    residual_norm: float
    prices: np.ndarray


@dataclass(frozen=True)
class ArbitrageCertificate:
    """A position gamma with gamma . x < 0 and nonnegative payoffs.

    gamma is scaled to unit euclidean norm, so setup_gain equals the
    distance from the price vector to the payoff cone and scales
    linearly when the whole market is scaled.
    """

    gamma: np.ndarray
    setup_gain: float
    min_payoff: float


@dataclass(frozen=True)
class Deflator:
    """Nonnegative outcome weights that reprice the market.

    atom_weights[j] is the price today of one unit paid in outcome j.
    """

    atom_weights: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.atom_weights, dtype=float))
        if w.ndim != 1 or not np.isfinite(w).all() or (w < 0).any():
            raise ValueError("atom weights must be finite and nonnegative")
        object.__setattr__(self, "atom_weights", w)

    @property
    def mass(self) -> float:
        """Total weight; the price of one unit paid in every outcome."""
        return float(self.atom_weights.sum())


def nnls(A, b, maxiter=None, tol=None):
    """Solve min ||A @ w - b|| subject to w >= 0 by an active set sweep.

    Parameters
    ----------
    A : ndarray (m, n)
    b : ndarray (m,)
    maxiter : int, optional
        Cap on least squares subproblem solves.  Defaults to
        10 * max(m, n); exceeding it raises NonConvergence.
    tol : float, optional
        Stop once every stationarity residual A.T @ (b - A @ w) is below
        tol on the zero set.  Defaults to a machine-level threshold
        scaled to the problem data.

    Returns
    -------
    w : ndarray (n,), the nonnegative solution.
    rnorm : float, ||A @ w - b||.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
        raise DimensionMismatch("nnls needs A (m, n) and b (m,)")
    m, n = A.shape
    if maxiter is None:
        maxiter = 10 * max(m, n)
    grad0 = A.T @ b
    if tol is None:
        tol = 10.0 * np.finfo(float).eps * max(m, n) * max(np.abs(grad0).max(initial=0.0), 1.0)

    w = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    # entries rejected at the current iterate (noise-level gradients on
    # numerically dependent columns); cleared whenever w actually moves
    blocked = np.zeros(n, dtype=bool)
    solves = 0
    while True:
        grad = A.T @ (b - A @ w)
        candidates = ~passive & ~blocked
        if not candidates.any() or grad[candidates].max() <= tol:
            break
        enter = np.flatnonzero(candidates)[np.argmax(grad[candidates])]
        passive[enter] = True
        # Inner loop: solve unconstrained on the passive set, and walk
        # back toward the previous iterate whenever that solution is
        # infeasible, retiring the coordinates pinned at zero.
        while True:
            solves += 1
            if solves > maxiter:
                raise NonConvergence(
                    f"nnls did not converge within {maxiter} subproblem solves")
            cols = np.flatnonzero(passive)
            z = np.linalg.lstsq(A[:, cols], b, rcond=None)[0]
            if z.min() > 0.0:
                w[:] = 0.0
                w[cols] = z
                blocked[:] = False
                break
            wp = w[cols]
            ratios = np.full(cols.size, np.inf)
            limiting = (z <= 0.0) & (wp - z > 0.0)
            ratios[limiting] = wp[limiting] / (wp[limiting] - z[limiting])
            alpha = float(ratios.min())
            if alpha == 0.0:
                # zero step: the fresh entry cannot improve the fit, so
                # reject it outright instead of cycling on it
                passive[enter] = False
                blocked[enter] = True
                break
            w[cols] = wp + alpha * (z - wp)
            drop = (ratios <= alpha) | (w[cols] <= 0.0)
            w[cols[drop]] = 0.0
            passive[cols[drop]] = False
    rnorm = float(np.linalg.norm(b - A @ w))
    return w, rnorm


def project_to_cone(market: OnePeriodMarket, tol: float = DEFAULT_TOL) -> ConeProjection:
    """Project the price vector onto the cone of payoff rows.

    The weights solve min ||payoffs.T @ w - prices|| over w >= 0; the
    resulting x_star is the unique nearest cone point and satisfies the
    orthogonality identity (x_star - prices) . x_star = 0.
    """
    weights, rnorm = nnls(market.payoffs.T, market.prices)
    x_star = market.payoffs.T @ weights
    return ConeProjection(weights=weights, x_star=x_star,
                          residual_norm=rnorm, prices=market.prices.copy())


def _inside(projection: ConeProjection, tol: float) -> bool:
    return projection.residual_norm <= tol * (1.0 + np.linalg.norm(projection.prices))


def find_arbitrage(market: OnePeriodMarket, tol: float = DEFAULT_TOL):
    """Return an ArbitrageCertificate, or None when the market has none.

    The market is declared arbitrage-free when the projection residual
    is below tol * (1 + ||prices||).  Otherwise the normalized gap
    direction x_star - prices is returned; it costs -setup_gain to set
    up and pays at least min_payoff >= -tol in every outcome.
    """
    projection = project_to_cone(market, tol)
    if _inside(projection, tol):
        return None
    gap = projection.x_star - market.prices
    gamma = gap / np.linalg.norm(gap)
    return ArbitrageCertificate(
        gamma=gamma,
        setup_gain=float(-(gamma @ market.prices)),
        min_payoff=float((market.payoffs @ gamma).min()),
    )


@dataclass(frozen=True)
class PositionReport:
    cost: float
    min_payoff: float
    is_arbitrage: bool


def verify_position(market: OnePeriodMarket, gamma, tol: float = DEFAULT_TOL) -> PositionReport:
    """Check a candidate position: arbitrage means strictly negative
    cost together with no losing outcome (up to tol)."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != market.prices.shape:
        raise DimensionMismatch("gamma must hold one position per instrument")
    cost = float(gamma @ market.prices)
    min_payoff = float((market.payoffs @ gamma).min())
    return PositionReport(cost=cost, min_payoff=min_payoff,
                          is_arbitrage=(cost < -tol and min_payoff >= -tol))


def deflator_from_projection(projection: ConeProjection, tol: float = DEFAULT_TOL):
    """Promote projection weights to a Deflator, or None if the prices
    were not (within tol) inside the payoff cone.

    Uses the same threshold as find_arbitrage, so on any market exactly
    one of the two returns something.
    """
    if not _inside(projection, tol):
        return None
    return Deflator(atom_weights=projection.weights.copy())
