from collections import Counter
from random import Random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcnsim.graph import ChannelGraph, FeePolicy
from pcnsim.routing import (FlowConfig, Transaction, _cheapest_path_ref,
                            cheapest_path, edge_fee, execute_transaction,
                            filter_by_amount, generate_transactions,
                            run_transactions, simulate_step)

from conftest import (brute_force_route, connected_random_graph,
                      fee_oracle_exact, random_graph)

P = FeePolicy(1000, 0.0001)
FREE = FeePolicy(0, 0.0)


def line_graph(n, policy=P, balance=10**8):
    g = ChannelGraph()
    for i in range(n):
        g.add_node(f"n{i}")
    for i in range(n - 1):
        g.add_channel(i, i + 1, balance, balance, policy, policy)
    return g


# ----------------------------------------------------------------------
# edge_fee
# ----------------------------------------------------------------------

def test_edge_fee_free_edge():
    g = line_graph(2, FREE)
    assert edge_fee(g.edge(0), 123456) == 0


def test_edge_fee_direct_formula():
    g = line_graph(2, FeePolicy(1000, 0.001))
    assert edge_fee(g.edge(0), 10**7) == 11000


def test_edge_fee_matches_rational_oracle():
    rng = Random(42)
    for _ in range(2000):
        base = rng.randrange(0, 10**5)
        rate = rng.random() * 0.01
        amount = rng.randrange(1, 10**8)
        g = ChannelGraph()
        g.add_node("a"), g.add_node("b")
        g.add_channel(0, 1, 10, 10, FeePolicy(base, rate), FREE)
        assert edge_fee(g.edge(0), amount) == fee_oracle_exact(base, rate, amount)


# ----------------------------------------------------------------------
# filter_by_amount
# ----------------------------------------------------------------------

def test_filter_keeps_everything_below_min_balance():
    rng = Random(1)
    g = random_graph(rng)
    min_bal = min(int(b) for b in g.balances)
    if min_bal > 0:
        view = filter_by_amount(g, min_bal)
        assert view.n_edges == g.n_edges


def test_filter_empty_above_max_balance():
    rng = Random(2)
    g = random_graph(rng)
    view = filter_by_amount(g, int(g.balances.max()) + 1)
    assert view.n_edges == 0
    assert list(view.edge_ids()) == []


def test_filter_matches_predicate_scan():
    rng = Random(3)
    for _ in range(20):
        g = random_graph(rng)
        amount = rng.randrange(1, 10**8)
        view = filter_by_amount(g, amount)
        expected = [i for i in range(g.n_edges) if g.balances[i] >= amount]
        assert list(view.edge_ids()) == expected
        for i in range(g.n_edges):
            assert view.has_edge(i) == (g.balances[i] >= amount)
        for u in range(g.n_nodes):
            assert view.out_edges(u) == [e for e in g.out_edges[u]
                                         if g.balances[e] >= amount]


def test_filter_leaves_graph_unmodified():
    rng = Random(4)
    g = random_graph(rng)
    before = list(g.balances)
    filter_by_amount(g, 10**6).n_edges
    assert list(g.balances) == before


# ----------------------------------------------------------------------
# cheapest_path
# ----------------------------------------------------------------------

def test_direct_edge_beats_pricier_two_hop():
    g = ChannelGraph()
    for i in range(3):
        g.add_node(f"n{i}")
    g.add_channel(0, 2, 10**7, 10**7, FeePolicy(500, 0.0), FeePolicy(0, 0.0))
    g.add_channel(0, 1, 10**7, 10**7, FREE, FREE)
    g.add_channel(1, 2, 10**7, 10**7, FeePolicy(5000, 0.0), FREE)
    res = cheapest_path(g, 0, 2, 10**6)
    assert res.success and res.path == [0, 2]
    assert res.total_fee_msat == 500


def test_unreachable_when_receiver_inbound_too_small():
    g = line_graph(3, balance=10**6)
    res = cheapest_path(g, 0, 2, 2 * 10**6)
    assert not res.success and res.path == [] and res.edge_ids == []


def test_invalid_inputs():
    g = line_graph(3)
    with pytest.raises(IndexError):
        cheapest_path(g, 0, 99, 10)
    with pytest.raises(ValueError):
        cheapest_path(g, 1, 1, 10)
    with pytest.raises(ValueError):
        cheapest_path(g, 0, 2, 0)


def test_tie_breaks_prefer_fewer_hops_then_lex_path():
    g = ChannelGraph()
    for i in range(5):
        g.add_node(f"n{i}")
    bal = 10**7
    g.add_channel(0, 3, bal, bal, FeePolicy(200, 0.0), FREE)   # 0-3 direct, fee 200
    g.add_channel(0, 1, bal, bal, FeePolicy(100, 0.0), FREE)
    g.add_channel(1, 3, bal, bal, FeePolicy(100, 0.0), FREE)   # 0-1-3 fee 200, more hops
    res = cheapest_path(g, 0, 3, 10**6)
    assert res.path == [0, 3]
    # equal fee, equal hops -> lexicographically smaller node sequence
    g.add_channel(0, 2, bal, bal, FeePolicy(100, 0.0), FREE)
    g.add_channel(2, 3, bal, bal, FeePolicy(100, 0.0), FREE)
    g2 = ChannelGraph()
    for i in range(4):
        g2.add_node(f"n{i}")
    g2.add_channel(0, 1, bal, bal, FREE, FREE)
    g2.add_channel(1, 3, bal, bal, FREE, FREE)
    g2.add_channel(0, 2, bal, bal, FREE, FREE)
    g2.add_channel(2, 3, bal, bal, FREE, FREE)
    res2 = cheapest_path(g2, 0, 3, 10**6)
    assert res2.path == [0, 1, 3]


def test_parallel_channel_tie_takes_lowest_edge_id():
    g = ChannelGraph()
    g.add_node("a"), g.add_node("b")
    g.add_channel(0, 1, 10**7, 10**7, P, P)
    g.add_channel(0, 1, 10**7, 10**7, P, P)
    res = cheapest_path(g, 0, 1, 10**6)
    assert res.edge_ids == [0]


def test_cheapest_path_matches_brute_force_enumeration():
    rng = Random(2024)
    solvable = 0
    for trial in range(100):
        g = connected_random_graph(rng, n_nodes=rng.randrange(4, 9),
                                   extra_channels=rng.randrange(0, 7))
        sender, receiver = 0, g.n_nodes - 1
        amount = rng.choice([10**5, 10**6, 10**7, 5 * 10**7])
        got = cheapest_path(g, sender, receiver, amount)
        want = brute_force_route(g, sender, receiver, amount)
        if want is None:
            assert not got.success
            continue
        solvable += 1
        fee, path, eids = want
        assert got.success
        assert got.total_fee_msat == fee
        assert got.path == path
        assert got.edge_ids == eids
    assert solvable > 30


def test_kernel_agrees_with_reference_dijkstra():
    rng = Random(77)
    for _ in range(60):
        g = random_graph(rng, n_nodes=rng.randrange(3, 12),
                         n_channels=rng.randrange(2, 20))
        s, r = 0, g.n_nodes - 1
        amount = rng.randrange(1, 10**7)
        a = cheapest_path(g, s, r, amount)
        b = _cheapest_path_ref(g, s, r, amount)
        assert (a.success, a.total_fee_msat, a.path, a.edge_ids) == \
               (b.success, b.total_fee_msat, b.path, b.edge_ids)
        assert all(g.balances[e] >= amount for e in a.edge_ids)


def test_adding_balance_never_raises_min_fee():
    rng = Random(55)
    for _ in range(30):
        g = connected_random_graph(rng, n_nodes=6, extra_channels=4)
        amount = 10**6
        base = brute_force_route(g, 0, 5, amount)
        richer = g.copy()
        for e in range(richer.n_edges):
            richer.balances[e] += amount
        after = brute_force_route(richer, 0, 5, amount)
        if base is not None:
            assert after is not None and after[0] <= base[0]


# ----------------------------------------------------------------------
# execute_transaction
# ----------------------------------------------------------------------

def test_direct_payment_credits_nobody():
    g = line_graph(2)
    res, credits = execute_transaction(g, Transaction(0, 1, 10**6))
    assert res.success and credits == {}
    assert int(g.balances[0]) == 10**8 - 10**6
    assert int(g.balances[1]) == 10**8 + 10**6


def test_intermediary_credited_inbound_edge_fee():
    g = ChannelGraph()
    for i in range(3):
        g.add_node(f"n{i}")
    g.add_channel(0, 1, 2 * 10**7, 2 * 10**7, FeePolicy(1000, 0.001), FREE)
    g.add_channel(1, 2, 2 * 10**7, 2 * 10**7, FREE, FREE)
    res, credits = execute_transaction(g, Transaction(0, 2, 10**7))
    assert res.path == [0, 1, 2]
    assert credits == {1: 11000}


def test_failed_transaction_leaves_graph_untouched():
    g = line_graph(3, balance=10**6)
    before = list(g.balances)
    res, credits = execute_transaction(g, Transaction(0, 2, 10**7))
    assert not res.success and credits == {}
    assert list(g.balances) == before


def test_capacity_conserved_across_random_transactions():
    rng = Random(8)
    g = connected_random_graph(rng, n_nodes=10, extra_channels=10)
    caps = [g.channel_capacity(2 * k) for k in range(g.n_channels)]
    for _ in range(300):
        tx = Transaction(rng.randrange(10), (rng.randrange(9) + 1 +
                                             rng.randrange(1)) % 10, 10**5)
        if tx.sender == tx.receiver:
            continue
        execute_transaction(g, tx)
        assert (g.balances >= 0).all()
    assert [g.channel_capacity(2 * k) for k in range(g.n_channels)] == caps


# ----------------------------------------------------------------------
# generate_transactions
# ----------------------------------------------------------------------

def make_provider_graph(n, providers):
    g = ChannelGraph()
    for i in range(n):
        g.add_node(f"n{i}", i in providers)
    for i in range(n - 1):
        g.add_channel(i, i + 1, 10**8, 10**8, P, P)
    return g


def test_counts_per_tier():
    g = make_provider_graph(10, {1, 2})
    txs = generate_transactions(g, FlowConfig(), Random(0))
    assert len(txs) == 600
    by_amount = Counter(t.amount_msat for t in txs)
    assert by_amount == {10**7: 200, 5 * 10**7: 200, 10**8: 200}
    assert all(t.sender != t.receiver for t in txs)


def test_zero_bias_receivers_are_uniform():
    g = make_provider_graph(10, {1})
    cfg = FlowConfig(amounts_msat=(10**6,), count_per_amount=100_000,
                     provider_bias=0.0)
    txs = generate_transactions(g, cfg, Random(1))
    counts = Counter(t.receiver for t in txs)
    # chi-square against uniform over 10 nodes
    expected = len(txs) / 10
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    # 9 dof; 10^-6 quantile is ~40.1
    assert chi2 < 40.1


def test_full_bias_single_provider_takes_all():
    g = make_provider_graph(6, {3})
    cfg = FlowConfig(amounts_msat=(10**6,), count_per_amount=500,
                     provider_bias=1.0)
    txs = generate_transactions(g, cfg, Random(2))
    assert all(t.receiver == 3 for t in txs)


def test_bias_falls_back_to_uniform_without_providers():
    g = make_provider_graph(6, set())
    cfg = FlowConfig(amounts_msat=(10**6,), count_per_amount=200,
                     provider_bias=0.9)
    txs = generate_transactions(g, cfg, Random(3))
    assert len({t.receiver for t in txs}) > 1


def test_excluded_node_never_appears():
    g = make_provider_graph(8, {2})
    cfg = FlowConfig(amounts_msat=(10**6,), count_per_amount=2000,
                     provider_bias=0.5)
    txs = generate_transactions(g, cfg, Random(4), exclude=5)
    assert all(t.sender != 5 and t.receiver != 5 for t in txs)


# ----------------------------------------------------------------------
# simulate_step
# ----------------------------------------------------------------------

def test_edgeless_graph_all_fail():
    g = ChannelGraph()
    for i in range(5):
        g.add_node(f"n{i}")
    flow = simulate_step(g, FlowConfig(), Random(0))
    assert flow.failed == 600
    assert flow.edge_flows == {}
    assert all(v == 0 for v in flow.node_volume_msat)
    assert all(v == 0 for v in flow.node_fees_msat)


def test_liquidity_exhaustion_matches_closed_form():
    # one channel, all payments one direction: successes = floor(balance/amount)
    g = ChannelGraph()
    g.add_node("a"), g.add_node("b", True)
    amount = 3 * 10**6
    balance = 10 * amount + amount // 2
    g.add_channel(0, 1, balance, 0, P, P)
    cfg = FlowConfig(amounts_msat=(amount,), count_per_amount=50,
                     provider_bias=1.0)
    flow = simulate_step(g, cfg, Random(5))
    assert flow.failed == 50 - balance // amount


def test_simulate_step_deterministic():
    rng_graph = Random(12)
    g1 = connected_random_graph(rng_graph, n_nodes=12, extra_channels=8)
    g2 = g1.copy()
    f1 = simulate_step(g1, FlowConfig(count_per_amount=50), Random(99))
    f2 = simulate_step(g2, FlowConfig(count_per_amount=50), Random(99))
    assert f1.failed == f2.failed
    assert f1.node_volume_msat == f2.node_volume_msat
    assert f1.node_fees_msat == f2.node_fees_msat
    assert f1.edge_flows == f2.edge_flows
    assert list(g1.balances) == list(g2.balances)


def test_flow_record_volume_invariant():
    rng = Random(21)
    g = connected_random_graph(rng, n_nodes=10, extra_channels=12)
    txs = generate_transactions(g, FlowConfig(count_per_amount=80), Random(6))
    flow = run_transactions(g, txs)
    # recompute per-node intermediary volume from the per-edge flow lists:
    # an edge's flow counts toward its head unless the head was the receiver,
    # which is not reconstructible from edge flows alone; instead check that
    # node volume equals the sum over inbound edges minus delivered amounts,
    # via a fresh replay.
    g2 = connected_random_graph(Random(21), n_nodes=10, extra_channels=12)
    volume = [0] * g2.n_nodes
    succeeded = 0
    for tx in txs:
        res, _ = execute_transaction(g2, tx)
        if res.success:
            succeeded += 1
            for node in res.path[1:-1]:
                volume[node] += tx.amount_msat
    assert flow.node_volume_msat == volume
    assert flow.failed == len(txs) - succeeded
    assert all(f >= 0 for f in flow.node_fees_msat)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=10**8),
       st.integers(min_value=0, max_value=5000),
       st.floats(min_value=0.0, max_value=0.01, allow_nan=False))
def test_fee_nonnegative_and_monotone_in_amount(amount, base, rate):
    g = ChannelGraph()
    g.add_node("a"), g.add_node("b")
    g.add_channel(0, 1, 10, 10, FeePolicy(base, rate), FREE)
    e = g.edge(0)
    fee = edge_fee(e, amount)
    assert fee >= base
    assert edge_fee(e, amount + 10**6) >= fee
