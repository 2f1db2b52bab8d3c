"""Build a tiny channel graph by hand and watch a payment move liquidity.

Run:  python demos/01_graph_and_routing.py
"""

from pcnsim import (ChannelGraph, FeePolicy, Transaction, cheapest_path,
                    edge_fee, execute_transaction, filter_by_amount)

# A five-participant network.  Each channel is funded from both sides and
# every direction carries its own fee policy.
g = ChannelGraph()
for name in ("alice", "bob", "carol", "dave", "erin"):
    g.add_node(name)

msat = lambda sats: sats * 1000
cheap = FeePolicy(base_fee_msat=100, fee_rate=0.000001)
pricey = FeePolicy(base_fee_msat=2500, fee_rate=0.0005)

g.add_channel(0, 1, msat(80_000), msat(80_000), cheap, cheap)     # alice-bob
g.add_channel(1, 2, msat(50_000), msat(50_000), cheap, pricey)    # bob-carol
g.add_channel(0, 3, msat(90_000), msat(90_000), pricey, cheap)    # alice-dave
g.add_channel(3, 2, msat(90_000), msat(90_000), pricey, cheap)    # dave-carol
g.add_channel(2, 4, msat(30_000), msat(30_000), cheap, cheap)     # carol-erin

print(f"graph: {g.n_nodes} nodes, {g.n_channels} channels")

amount = msat(20_000)
print(f"\nchannels able to carry {amount} msat:",
      filter_by_amount(g, amount).n_edges, "of", g.n_edges, "directions")

route = cheapest_path(g, 0, 4, amount)
names = [g.nodes[i].node_id for i in route.path]
print("cheapest route alice -> erin:", " -> ".join(names),
      f"(total fee {route.total_fee_msat} msat)")
for e in route.edge_ids:
    edge = g.edge(e)
    print(f"  edge {g.nodes[edge.src].node_id} -> {g.nodes[edge.dst].node_id}: "
          f"fee {edge_fee(edge, amount)} msat, balance {edge.balance_msat}")

caps_before = [g.channel_capacity(2 * k) for k in range(g.n_channels)]
result, credits = execute_transaction(g, Transaction(0, 4, amount))
print("\nexecuted:", result.success, "- intermediaries credited:",
      {g.nodes[n].node_id: f"{fee} msat" for n, fee in credits.items()})
print("capacity conserved on every channel:",
      caps_before == [g.channel_capacity(2 * k) for k in range(g.n_channels)])

# Liquidity moved toward erin; smaller repeat payments drain the last hop
# until it can no longer carry them.
for i in range(4):
    result, _ = execute_transaction(g, Transaction(0, 4, msat(4_000)))
    print(f"repeat {i + 1} (4000 sat): success={result.success}, "
          f"carol->erin balance now {int(g.balances[route.edge_ids[-1]])} msat")
