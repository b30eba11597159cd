"""Multi-period market panels, trading strategies and deflator sequences.

A panel quotes every instrument's price and cash flow as simple
functions along a filtration.  A strategy trades at each time; its
account process collects what the trades cost and what the positions
earn.  A deflator sequence prices the panel when, blockwise at every
node, today's price measure equals the restriction of tomorrow's
(cash flow + price) measure.  On tree filtrations that condition is
checked constructively by projecting each node's prices onto the cone
of its children, which either assembles the deflators or exhibits an
arbitrage localized at one node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cone import ArbitrageCertificate, OnePeriodMarket, project_to_cone
from .exceptions import (AlgebraMismatch, DeflatorZeroBlock, DimensionMismatch,
                         InvalidInterval, NotClosedOut, NotCoarser,
                         NotSelfFinancing)
from .filtration import (Algebra, FAMeasure, Filtration, SimpleFunction,
                         pairing, product, restrict)

DEFAULT_TOL = 1e-9


def _vector_on(algebra: Algebra, f: SimpleFunction, what: str, m: int) -> None:
    if f.algebra != algebra:
        raise AlgebraMismatch(f"{what} must live on the filtration's algebra")
    if not f.is_vector or f.values.shape[1] != m:
        raise DimensionMismatch(f"{what} must hold one row of {m} instruments per block")


class MarketPanel:
    """Instrument prices and cash flows along a filtration.

    prices[j] and cashflows[j] are vector simple functions on the j-th
    algebra; cashflows[0] is identically zero (time-0 quotes carry no
    coupon) and cashflows=None means no instrument ever pays one.
    """

    def __init__(self, times, filtration: Filtration, prices, cashflows=None):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.size != len(filtration):
            raise DimensionMismatch("need one time per algebra")
        if (np.diff(times) <= 0).any():
            raise ValueError("times must increase")
        prices = list(prices)
        if len(prices) != len(filtration):
            raise DimensionMismatch("need one price function per time")
        m = prices[0].values.shape[1] if prices[0].is_vector else 0
        if m == 0:
            raise DimensionMismatch("prices must be vector-valued simple functions")
        for j, f in enumerate(prices):
            _vector_on(filtration[j], f, f"prices[{j}]", m)
        if cashflows is None:
            cashflows = [SimpleFunction(filtration[j],
                                        np.zeros((filtration[j].n_blocks, m)))
                         for j in range(len(filtration))]
        else:
            cashflows = list(cashflows)
            if len(cashflows) != len(filtration):
                raise DimensionMismatch("need one cash flow function per time")
            for j, f in enumerate(cashflows):
                _vector_on(filtration[j], f, f"cashflows[{j}]", m)
            if np.any(cashflows[0].values != 0.0):
                raise ValueError("time-0 cash flows must be zero")
        self.times = times
        self.filtration = filtration
        self.prices = prices
        self.cashflows = cashflows
        self.n_instruments = m

    @property
    def n_periods(self) -> int:
        return len(self.filtration) - 1

    def scale(self) -> float:
        """max |price| + max |cash flow|, the tolerance unit for checks."""
        return (max(float(np.abs(f.values).max()) for f in self.prices)
                + max(float(np.abs(f.values).max()) for f in self.cashflows))

    def settle(self, j: int) -> SimpleFunction:
        """Cash flow plus price at time j: what holding into t_j delivers."""
        return SimpleFunction(self.filtration[j],
                              self.cashflows[j].values + self.prices[j].values)


class Strategy:
    """Trades per time: trades[j] adds to the position on each block of
    the j-th algebra.  Positions are the running sums, lifted forward."""

    def __init__(self, trades):
        self.trades = list(trades)
        if not self.trades:
            raise DimensionMismatch("a strategy needs at least one trade time")

    @classmethod
    def zero(cls, panel: MarketPanel) -> "Strategy":
        return cls([SimpleFunction(panel.filtration[j],
                                   np.zeros((panel.filtration[j].n_blocks,
                                             panel.n_instruments)))
                    for j in range(panel.n_periods + 1)])

    def positions(self, filtration: Filtration) -> list[SimpleFunction]:
        """Cumulative holdings Xi_j = sum of trades up to j, on algebra j."""
        out = []
        current = self.trades[0].values.copy()
        out.append(SimpleFunction(filtration[0], current))
        for j in range(1, len(self.trades)):
            lifted = out[-1].lift(filtration[j]).values
            current = lifted + self.trades[j].values
            out.append(SimpleFunction(filtration[j], current))
        return out


def _row_dot(a: SimpleFunction, b: SimpleFunction) -> np.ndarray:
    return np.einsum("bm,bm->b", a.values, b.values)


@dataclass(frozen=True)
class AccountProcess:
    """entries[j] is the cash generated at time j: trades at t_0 cost
    -trade . price, later entries collect position . cashflow minus the
    cost of the new trade."""

    entries: list[SimpleFunction]


def account_process(panel: MarketPanel, strategy: Strategy) -> AccountProcess:
    """The cash account A_j = Xi_{j-1} . C_j - Gamma_j . X_j."""
    if len(strategy.trades) != panel.n_periods + 1:
        raise DimensionMismatch("strategy must trade at every panel time")
    for j, g in enumerate(strategy.trades):
        _vector_on(panel.filtration[j], g, f"trades[{j}]", panel.n_instruments)
    entries = [SimpleFunction(panel.filtration[0],
                              -_row_dot(strategy.trades[0], panel.prices[0]))]
    position = strategy.trades[0]
    for j in range(1, panel.n_periods + 1):
        carried = position.lift(panel.filtration[j])
        earned = _row_dot(carried, panel.cashflows[j])
        spent = _row_dot(strategy.trades[j], panel.prices[j])
        entries.append(SimpleFunction(panel.filtration[j], earned - spent))
        position = SimpleFunction(panel.filtration[j],
                                  carried.values + strategy.trades[j].values)
    return AccountProcess(entries=entries)


@dataclass(frozen=True)
class ArbitrageVerdict:
    is_arbitrage: bool
    first_violation: tuple[int, int] | None   # (time index, block)


def is_arbitrage_strategy(panel: MarketPanel, strategy: Strategy,
                          tol: float = DEFAULT_TOL) -> ArbitrageVerdict:
    """Does the strategy bank cash on its opening trade and never pay after?

    The strategy must be closed out: its position after the last trade
    must be zero (NotClosedOut otherwise).  It is an arbitrage when the
    account entry at the first trading time is strictly positive on
    every block actually traded, and all later entries are nonnegative,
    each up to tol * scale.  The witness is the first violating
    (time, block).
    """
    account = account_process(panel, strategy)
    active = [j for j, g in enumerate(strategy.trades) if np.any(g.values != 0.0)]
    if not active:
        return ArbitrageVerdict(False, None)
    trade_scale = max(float(np.abs(g.values).max()) for g in strategy.trades)
    slack = tol * panel.scale() * max(1.0, trade_scale)
    positions = strategy.positions(panel.filtration)
    if np.abs(positions[active[-1]].values).max() > tol * max(1.0, trade_scale):
        raise NotClosedOut("position after the last trade is not zero")
    j0 = active[0]
    opening = account.entries[j0].values
    traded = np.any(strategy.trades[j0].values != 0.0, axis=1)
    for b in np.flatnonzero(traded):
        if not opening[b] > slack:
            return ArbitrageVerdict(False, (j0, int(b)))
    for j in range(j0 + 1, panel.n_periods + 1):
        entries = account.entries[j].values
        bad = np.flatnonzero(entries < -slack)
        if bad.size:
            return ArbitrageVerdict(False, (j, int(bad[0])))
    return ArbitrageVerdict(True, None)


class DeflatorSequence:
    """One scalar measure per time: strictly positive at time 0,
    nonnegative afterwards."""

    def __init__(self, measures):
        self.measures = list(measures)
        if not self.measures:
            raise DimensionMismatch("need at least one measure")
        for j, mu in enumerate(self.measures):
            if mu.is_vector:
                raise DimensionMismatch("deflators are scalar measures")
            if (mu.weights < 0).any():
                raise ValueError(f"deflator weights at time {j} must be nonnegative")
        if (self.measures[0].weights <= 0).any():
            raise ValueError("time-0 deflator must be strictly positive")

    def __len__(self):
        return len(self.measures)

    def __getitem__(self, j) -> FAMeasure:
        return self.measures[j]


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    max_violation: float


def check_deflator(panel: MarketPanel, deflators: DeflatorSequence,
                   tol: float = DEFAULT_TOL) -> CheckResult:
    """Verify X_i Pi_i = (C_{i+1} + X_{i+1}) Pi_{i+1} restricted, for all i.

    Each side is a vector measure on the i-th algebra; the violation is
    the largest blockwise component gap, compared against tol * scale.
    """
    if len(deflators) != panel.n_periods + 1:
        raise DimensionMismatch("need one deflator measure per time")
    for j in range(panel.n_periods + 1):
        if deflators[j].algebra != panel.filtration[j]:
            raise AlgebraMismatch(f"deflator {j} lives off the filtration")
    worst = 0.0
    for i in range(panel.n_periods):
        lhs = product(panel.prices[i], deflators[i])
        rhs = restrict(product(panel.settle(i + 1), deflators[i + 1]),
                       panel.filtration[i])
        worst = max(worst, float(np.abs(lhs.weights - rhs.weights).max()))
    return CheckResult(ok=(worst <= tol * panel.scale()), max_violation=worst)


def propagate_prices(panel: MarketPanel, deflators: DeflatorSequence,
                     j: int, k: int) -> SimpleFunction:
    """Recover time-j prices from cash flows through time k.

    Blockwise on the j-th algebra this divides the accumulated measure
    sum_{j<i<k} C_i Pi_i + (C_k + X_k) Pi_k, restricted to level j, by
    Pi_j.  DeflatorZeroBlock if Pi_j vanishes on some block.
    """
    if not 0 <= j < k <= panel.n_periods:
        raise InvalidInterval(f"need 0 <= j < k <= {panel.n_periods}")
    coarse = panel.filtration[j]
    acc = restrict(product(panel.settle(k), deflators[k]), coarse).weights
    for i in range(j + 1, k):
        acc = acc + restrict(product(panel.cashflows[i], deflators[i]),
                             coarse).weights
    den = deflators[j].weights
    if (den <= 0).any():
        raise DeflatorZeroBlock(f"deflator at time {j} vanishes on a block")
    return SimpleFunction(coarse, acc / den[:, None])


@dataclass(frozen=True)
class NodeArbitrage:
    """A failed node: its local certificate and the strategy that plays
    it, trading gamma on the node and unwinding on its children."""

    time: int
    block: int
    certificate: ArbitrageCertificate
    strategy: Strategy


def find_tree_deflator(panel: MarketPanel, tol: float = DEFAULT_TOL):
    """Assemble deflators node by node, or surface an arbitrage node.

    At each block b of each non-terminal algebra, project the node's
    price vector onto the cone of its children's settlement rows.  If
    every projection lands inside, the node weights multiply along
    paths into a DeflatorSequence with weight one per time-0 block.
    The first failing node yields a NodeArbitrage instead.
    """
    filtration = panel.filtration
    for i in range(panel.n_periods):
        if not filtration[i + 1].refines(filtration[i]):
            raise NotCoarser("tree search needs a refining filtration")
    weights = [np.ones(filtration[0].n_blocks)]
    for i in range(panel.n_periods):
        child_parent = filtration[i + 1].coarse_block_map(filtration[i])
        settle = panel.settle(i + 1).values
        next_weights = np.zeros(filtration[i + 1].n_blocks)
        for b in range(filtration[i].n_blocks):
            children = np.flatnonzero(child_parent == b)
            x_b = panel.prices[i].values[b]
            local = OnePeriodMarket(prices=x_b, payoffs=settle[children])
            projection = project_to_cone(local, tol)
            if projection.residual_norm > tol * (1.0 + np.linalg.norm(x_b)):
                gap = projection.x_star - x_b
                gamma = gap / np.linalg.norm(gap)
                certificate = ArbitrageCertificate(
                    gamma=gamma,
                    setup_gain=float(-(gamma @ x_b)),
                    min_payoff=float((settle[children] @ gamma).min()))
                strategy = Strategy.zero(panel)
                strategy.trades[i].values[b] = gamma
                strategy.trades[i + 1].values[children] = -gamma
                return NodeArbitrage(time=i, block=b, certificate=certificate,
                                     strategy=strategy)
            next_weights[children] = weights[i][b] * projection.weights
        weights.append(next_weights)
    return DeflatorSequence([FAMeasure(filtration[j], weights[j])
                             for j in range(panel.n_periods + 1)])


@dataclass(frozen=True)
class ReplicationResult:
    """cost is what the opening trade spends per time-0 block; terminal
    is what the closed-out strategy delivers at the horizon."""

    cost: SimpleFunction
    terminal: SimpleFunction
    pairing_gap: float


def replication_cost(panel: MarketPanel, deflators: DeflatorSequence,
                     strategy: Strategy, tol: float = DEFAULT_TOL) -> ReplicationResult:
    """Opening cost and terminal payout of a self-financing strategy.

    The strategy must be closed out at the horizon and generate no
    interior cash (NotSelfFinancing with the offending time and block
    otherwise).  The two sides then satisfy the pairing identity
    <cost, Pi_0> = <terminal, Pi_n>, which is verified against the
    supplied deflators.
    """
    account = account_process(panel, strategy)
    trade_scale = max(float(np.abs(g.values).max()) for g in strategy.trades)
    slack = tol * panel.scale() * max(1.0, trade_scale)
    positions = strategy.positions(panel.filtration)
    if np.abs(positions[-1].values).max() > tol * max(1.0, trade_scale):
        raise NotClosedOut("strategy does not close out at the horizon")
    for j in range(1, panel.n_periods):
        entries = account.entries[j].values
        bad = np.flatnonzero(np.abs(entries) > slack)
        if bad.size:
            raise NotSelfFinancing(
                f"interior account entry {entries[bad[0]]} at time {j}, "
                f"block {bad[0]}", time=j, block=int(bad[0]))
    cost = SimpleFunction(panel.filtration[0], -account.entries[0].values)
    terminal = account.entries[-1]
    lhs = pairing(cost, deflators[0])
    rhs = pairing(terminal, deflators[len(deflators) - 1])
    gap = abs(lhs - rhs)
    mass = float(np.sum(deflators[0].weights))
    if gap > slack * max(1.0, mass) * (panel.n_periods + 1):
        raise ValueError(
            f"pairing identity fails by {gap}; the deflators do not price "
            "this panel")
    return ReplicationResult(cost=cost, terminal=terminal, pairing_gap=float(gap))


def binomial_stock_panel(n_periods: int, R: float, s: float, mu: float,
                         sigma: float) -> MarketPanel:
    """Bond and stock on the binary tree: at time j the bond quotes R**j
    and the stock s * exp(mu*j + sigma*Z_j) with Z the symmetric walk."""
    from .filtration import random_walk
    filtration, walk, _ = random_walk(n_periods)
    prices = []
    for j in range(n_periods + 1):
        bond = np.full(filtration[j].n_blocks, float(R) ** j)
        stock = s * np.exp(mu * j + sigma * walk[j].values)
        prices.append(SimpleFunction(filtration[j], np.column_stack([bond, stock])))
    return MarketPanel(times=np.arange(n_periods + 1.0), filtration=filtration,
                       prices=prices)


def deterministic_panel(times, price_rows, cashflow_rows=None) -> MarketPanel:
    """A single-path panel: one block at every time.

    price_rows[j] (and cashflow_rows[j], if given) is the instrument
    vector at time j.
    """
    rows = [np.atleast_1d(np.asarray(r, dtype=float)) for r in price_rows]
    filtration = Filtration([Algebra.trivial(1) for _ in rows])
    prices = [SimpleFunction(filtration[j], rows[j][None, :])
              for j in range(len(rows))]
    cashflows = None
    if cashflow_rows is not None:
        cf = [np.atleast_1d(np.asarray(r, dtype=float)) for r in cashflow_rows]
        cashflows = [SimpleFunction(filtration[j], cf[j][None, :])
                     for j in range(len(cf))]
    return MarketPanel(times=times, filtration=filtration, prices=prices,
                       cashflows=cashflows)


def panel_from_one_period(market: OnePeriodMarket, times=(0.0, 1.0)) -> MarketPanel:
    """Embed a one-period market as a two-time panel whose terminal
    algebra separates the outcomes."""
    n = market.n_outcomes
    filtration = Filtration([Algebra.trivial(n), Algebra.discrete(n)])
    prices = [SimpleFunction(filtration[0], market.prices[None, :]),
              SimpleFunction(filtration[1], market.payoffs)]
    return MarketPanel(times=times, filtration=filtration, prices=prices)
