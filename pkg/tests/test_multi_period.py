"""Panels, trading strategies, deflator sequences, and the tree search."""

import numpy as np
import pytest

from deflator import (
    Algebra,
    ArbitrageInInput,
    DeflatorSequence,
    DimensionMismatch,
    FAMeasure,
    Filtration,
    MarketPanel,
    NodeArbitrage,
    NotClosedOut,
    NotSelfFinancing,
    OnePeriodMarket,
    SimpleFunction,
    Strategy,
    account_process,
    binomial_stock_panel,
    check_deflator,
    deflator_from_projection,
    deterministic_panel,
    find_arbitrage,
    find_tree_deflator,
    is_arbitrage_strategy,
    pairing,
    panel_from_one_period,
    price_payoff,
    project_to_cone,
    propagate_prices,
    random_walk,
    replication_cost,
    restrict,
    product,
)


def fair_binomial_panel(n, R=1.05, s=100.0, sigma=0.3):
    # e^mu = R / cosh(sigma) makes every node a fair coin toss
    mu = np.log(R / np.cosh(sigma))
    return binomial_stock_panel(n, R=R, s=s, mu=mu, sigma=sigma), mu


def fair_deflators(panel, R):
    """Half-half node weights discounted by R**-j, by hand."""
    measures = []
    for j in range(panel.n_periods + 1):
        alg = panel.filtration[j]
        measures.append(FAMeasure(alg, np.full(alg.n_blocks, 2.0 ** -j / R ** j)))
    return DeflatorSequence(measures)


# ---------------------------------------------------------------- accounts


def test_account_process_entries():
    # bond 1 -> R, stock s -> s*u / s*d on a one-period tree
    panel, _ = fair_binomial_panel(1)
    strategy = Strategy.zero(panel)
    strategy.trades[0].values[0] = [2.0, 3.0]
    strategy.trades[1].values[:] = [-2.0, -3.0]
    account = account_process(panel, strategy)
    x0 = panel.prices[0].values[0]
    assert account.entries[0].values[0] == pytest.approx(-(2.0 * x0[0] + 3.0 * x0[1]))
    x1 = panel.prices[1].values
    expected = 2.0 * x1[:, 0] + 3.0 * x1[:, 1]
    assert np.allclose(account.entries[1].values, expected)


def test_account_requires_trade_per_time():
    panel, _ = fair_binomial_panel(2)
    short = Strategy([SimpleFunction(panel.filtration[0], np.zeros((1, 2)))])
    with pytest.raises(DimensionMismatch):
        account_process(panel, short)


def test_buy_and_hold_fair_bond_is_not_arbitrage():
    panel, _ = fair_binomial_panel(3)
    strategy = Strategy.zero(panel)
    strategy.trades[0].values[0, 0] = 1.0
    strategy.trades[3].values[:, 0] = -1.0
    verdict = is_arbitrage_strategy(panel, strategy)
    assert not verdict.is_arbitrage
    # opening trade pays out cash, so the violation is at the start
    assert verdict.first_violation == (0, 0)


def test_open_position_raises():
    panel, _ = fair_binomial_panel(2)
    strategy = Strategy.zero(panel)
    strategy.trades[0].values[0, 0] = 1.0
    with pytest.raises(NotClosedOut):
        is_arbitrage_strategy(panel, strategy)


def test_mispriced_bond_gives_arbitrage_strategy():
    # deterministic world where the bond sells below its discounted payout
    panel = deterministic_panel(
        times=[0.0, 1.0],
        price_rows=[[0.9, 1.0], [1.0, 1.0]],
    )
    # short the fair instrument, buy the cheap one
    strategy = Strategy.zero(panel)
    strategy.trades[0].values[0] = [1.0, -1.0]
    strategy.trades[1].values[0] = [-1.0, 1.0]
    verdict = is_arbitrage_strategy(panel, strategy)
    assert verdict.is_arbitrage
    assert verdict.first_violation is None


def test_zero_strategy_is_not_arbitrage():
    panel, _ = fair_binomial_panel(2)
    verdict = is_arbitrage_strategy(panel, Strategy.zero(panel))
    assert not verdict.is_arbitrage
    assert verdict.first_violation is None


# ------------------------------------------------------------- deflators


def test_fair_binomial_deflator_check():
    panel, _ = fair_binomial_panel(6)
    deflators = find_tree_deflator(panel)
    assert isinstance(deflators, DeflatorSequence)
    result = check_deflator(panel, deflators, tol=1e-12)
    assert result.ok
    assert result.max_violation <= 1e-12 * panel.scale()
    # half-half weights are the unique node weights on this tree
    hand = fair_deflators(panel, R=1.05)
    for j in range(7):
        assert np.allclose(deflators[j].weights, hand[j].weights, atol=1e-12)


def test_drifted_binomial_yields_node_arbitrage():
    # mu bumped out of the no-arbitrage band at small sigma
    R, sigma = 1.05, 0.005
    mu = np.log(R / np.cosh(sigma)) + 0.01
    panel = binomial_stock_panel(4, R=R, s=100.0, mu=mu, sigma=sigma)
    node = find_tree_deflator(panel)
    assert isinstance(node, NodeArbitrage)
    assert node.certificate.setup_gain > 0 or node.certificate.min_payoff > 0
    assert node.certificate.min_payoff >= -1e-9
    # the lifted strategy monetizes the node on the full panel
    verdict = is_arbitrage_strategy(panel, node.strategy)
    assert verdict.is_arbitrage


def test_embedded_one_period_arbitrage_is_found_at_its_node():
    # butterfly of calls with a hump: arbitrage in a one-period market,
    # planted as the subtree of an otherwise fair panel via direct payoffs
    strikes = np.array([100.0, 105.0, 110.0])
    omegas = np.array([95.0, 100.0, 105.0, 110.0, 115.0])
    payoffs = np.column_stack([np.maximum(omegas[:, None] - strikes, 0.0)])
    prices = np.array([7.0, 5.0, 1.0])  # middle call too dear
    market = OnePeriodMarket(prices=prices, payoffs=payoffs)
    assert find_arbitrage(market) is not None

    panel = panel_from_one_period(market)
    node = find_tree_deflator(panel)
    assert isinstance(node, NodeArbitrage)
    assert node.time == 0
    assert node.block == 0
    assert is_arbitrage_strategy(panel, node.strategy).is_arbitrage


def test_check_deflator_rejects_wrong_weights():
    panel, _ = fair_binomial_panel(3)
    deflators = fair_deflators(panel, R=1.05)
    broken = [deflators[j] for j in range(4)]
    bad = broken[2].weights.copy()
    bad[0] *= 1.01
    broken[2] = FAMeasure(panel.filtration[2], bad)
    result = check_deflator(panel, DeflatorSequence(broken))
    assert not result.ok
    assert result.max_violation > 1e-6


def test_propagate_prices_recovers_panel_prices():
    panel, _ = fair_binomial_panel(5)
    deflators = find_tree_deflator(panel)
    for j in range(5):
        recovered = propagate_prices(panel, deflators, j, 5)
        gap = np.abs(recovered.values - panel.prices[j].values).max()
        assert gap <= 1e-10 * panel.scale()


def test_propagate_prices_with_cashflows():
    # coupon instrument alongside cash: flows enter the telescoping sum
    filtration = Filtration([Algebra.trivial(1)] * 3)
    R = 1.05
    coupon = 4.0
    bond = (coupon + (coupon + 100.0) / R) / R
    prices = [
        SimpleFunction(filtration[0], np.array([[1.0, bond]])),
        SimpleFunction(filtration[1], np.array([[R, (coupon + 100.0) / R]])),
        SimpleFunction(filtration[2], np.array([[R * R, 0.0]])),
    ]
    cashflows = [
        SimpleFunction(filtration[0], np.zeros((1, 2))),
        SimpleFunction(filtration[1], np.array([[0.0, coupon]])),
        SimpleFunction(filtration[2], np.array([[0.0, coupon + 100.0]])),
    ]
    panel = MarketPanel(times=[0.0, 1.0, 2.0], filtration=filtration,
                        prices=prices, cashflows=cashflows)
    deflators = DeflatorSequence(
        [FAMeasure(filtration[j], np.array([R ** -j])) for j in range(3)])
    assert check_deflator(panel, deflators, tol=1e-12).ok
    recovered = propagate_prices(panel, deflators, 0, 2)
    assert recovered.values[0, 1] == pytest.approx(bond, rel=1e-12)


# ------------------------------------------------------------ replication


def test_replication_cost_matches_backward_induction():
    panel, _ = fair_binomial_panel(3)
    deflators = find_tree_deflator(panel)
    R = 1.05
    strike = 100.0
    terminal_stock = panel.prices[3].values[:, 1]
    values = np.maximum(terminal_stock - strike, 0.0)

    # backward induction, solving bond/stock replication at every node
    filtration = panel.filtration
    trades = [np.zeros((filtration[j].n_blocks, 2)) for j in range(4)]
    level = values
    for i in reversed(range(3)):
        child_parent = filtration[i + 1].coarse_block_map(filtration[i])
        settle = panel.prices[i + 1].values
        new_level = np.zeros(filtration[i].n_blocks)
        for b in range(filtration[i].n_blocks):
            children = np.flatnonzero(child_parent == b)
            holding = np.linalg.solve(settle[children], level[children])
            trades[i][b] += holding
            new_level[b] = holding @ panel.prices[i].values[b]
            trades[i + 1][children] -= holding
        level = new_level
    strategy = Strategy([SimpleFunction(filtration[j], trades[j])
                         for j in range(4)])
    result = replication_cost(panel, deflators, strategy)
    assert result.cost.values[0] == pytest.approx(level[0], rel=1e-12)
    assert np.allclose(result.terminal.values, values, atol=1e-9)
    assert result.pairing_gap <= 1e-9 * panel.scale()

    # and the pairing identity ties cost to the deflated payoff
    payoff = SimpleFunction(filtration[3], values)
    direct = pairing(payoff, deflators[3]) / deflators[0].weights[0]
    assert result.cost.values[0] == pytest.approx(direct, rel=1e-12)


def test_replication_rejects_interior_cash():
    panel, _ = fair_binomial_panel(2)
    deflators = find_tree_deflator(panel)
    strategy = Strategy.zero(panel)
    strategy.trades[0].values[0, 0] = 1.0
    strategy.trades[1].values[:, 0] = -0.5   # sells half, pockets cash
    strategy.trades[2].values[:, 0] = -0.5
    with pytest.raises(NotSelfFinancing) as exc:
        replication_cost(panel, deflators, strategy)
    assert exc.value.time == 1


def test_replication_requires_close_out():
    panel, _ = fair_binomial_panel(2)
    deflators = find_tree_deflator(panel)
    strategy = Strategy.zero(panel)
    strategy.trades[0].values[0, 1] = 2.0
    with pytest.raises(NotClosedOut):
        replication_cost(panel, deflators, strategy)


def test_random_self_financing_strategies_satisfy_pairing():
    rng = np.random.default_rng(7)
    panel, _ = fair_binomial_panel(4)
    deflators = find_tree_deflator(panel)
    filtration = panel.filtration
    for _ in range(20):
        # random opening trade, then roll the position into bonds at a
        # random interior time, all cash-neutral by construction
        trades = [np.zeros((filtration[j].n_blocks, 2)) for j in range(5)]
        opening = rng.normal(size=2)
        trades[0][0] = opening
        switch = int(rng.integers(1, 4))
        for b in range(filtration[switch].n_blocks):
            x = panel.prices[switch].values[b]
            proceeds = opening @ x
            trades[switch][b] = [proceeds / x[0] - opening[0], -opening[1]]
        hold = np.zeros((filtration[switch].n_blocks, 2))
        hold[:, 0] = trades[switch][:, 0] + opening[0]
        child_map = filtration[4].coarse_block_map(filtration[switch])
        trades[4] = -hold[child_map]
        strategy = Strategy([SimpleFunction(filtration[j], trades[j])
                             for j in range(5)])
        result = replication_cost(panel, deflators, strategy)
        assert result.pairing_gap <= 1e-9 * panel.scale()


# -------------------------------------------------------------- builders


def test_binomial_panel_prices():
    panel, mu = fair_binomial_panel(3, R=1.07, s=50.0, sigma=0.2)
    assert panel.n_periods == 3
    assert panel.n_instruments == 2
    assert np.allclose(panel.prices[2].values[:, 0], 1.07 ** 2)
    _, walk, _ = random_walk(3)
    expected = 50.0 * np.exp(mu * 3 + 0.2 * walk[3].values)
    assert np.allclose(panel.prices[3].values[:, 1], expected)


def test_deterministic_panel_shapes_and_zero_time0_flows():
    panel = deterministic_panel(
        times=[0.0, 0.5, 1.0],
        price_rows=[[1.0, 2.0], [1.1, 2.2], [1.21, 0.0]],
        cashflow_rows=[[0.0, 0.0], [0.0, 0.1], [0.0, 2.42]],
    )
    assert panel.n_periods == 2
    assert panel.cashflows[1].values[0, 1] == 0.1
    with pytest.raises(ValueError):
        deterministic_panel(times=[0.0, 1.0],
                            price_rows=[[1.0], [1.1]],
                            cashflow_rows=[[0.5], [0.0]])


def test_panel_from_one_period_agrees_with_direct_pricing():
    prices = np.array([1.0, 100.0])
    payoffs = np.array([[1.07, 80.0], [1.07, 125.0]])
    market = OnePeriodMarket(prices=prices, payoffs=payoffs)
    panel = panel_from_one_period(market)
    deflators = find_tree_deflator(panel)
    target = np.maximum(payoffs[:, 1] - 100.0, 0.0)
    direct = price_payoff(market, deflator_from_projection(project_to_cone(market)),
                          target)
    payoff = SimpleFunction(panel.filtration[1], target)
    vault = pairing(payoff, deflators[1])
    assert vault == pytest.approx(direct, rel=1e-10)


def test_times_must_increase():
    with pytest.raises(ValueError):
        deterministic_panel(times=[0.0, 0.0], price_rows=[[1.0], [1.0]])


def test_deflator_sequence_validation():
    alg = Algebra.trivial(1)
    with pytest.raises(ValueError):
        DeflatorSequence([FAMeasure(alg, np.array([0.0]))])
    fine = Algebra.discrete(2)
    with pytest.raises(ValueError):
        DeflatorSequence([FAMeasure(alg, np.array([1.0])),
                          FAMeasure(fine, np.array([0.5, -0.5]))])


def test_restricted_deflator_mass_is_conserved_by_tree_search():
    panel, _ = fair_binomial_panel(4)
    deflators = find_tree_deflator(panel)
    # node weights multiply along paths; restricting the terminal measure
    # down the filtration recovers each intermediate one times the bond
    for j in range(4):
        pushed = restrict(deflators[4], panel.filtration[j]).weights
        ratio = pushed / deflators[j].weights
        assert np.allclose(ratio, ratio[0])
