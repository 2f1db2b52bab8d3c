"""pcnsim: payment-channel-network simulation and channel-placement decisions.

Core pieces: a channel graph with live liquidity (`graph`), forest-fire
localization (`sampling`), fee-routed transaction flow (`routing`), the
joint node-selection / budget-allocation environment (`env`), attachment
heuristics (`heuristics`), decentralization analytics (`analysis`), and a
line-protocol server plus CLI (`protocol`, `cli`).
"""

from .analysis import (CentralityReport, ConvergenceError, DistributionMetrics,
                       EvolutionReport, centrality_report, closeness_centrality,
                       eigenvector_centrality, evolve_network, gini_index,
                       histogram_probs, louvain_modularity, newman_modularity,
                       renyi_entropy, shannon_entropy)
from .env import (Action, AllocationState, EnvConfig, JcnsraEnv, StepOutcome,
                  build_observation, normalize_allocations)
from .graph import (ChannelEdge, ChannelGraph, FeePolicy, GraphValidationError,
                    NodeRecord, SnapshotParseError, dump_snapshot,
                    load_snapshot, load_snapshot_file, save_snapshot_file)
from .heuristics import (HEURISTIC_KINDS, betweenness_centrality, degree_vector,
                         run_heuristic, select_nodes)
from .protocol import (PROTOCOL_VERSION, ProtocolServer, Session,
                       episode_script, run_script, serve_stdio)
from .routing import (AmountView, FlowConfig, FlowRecord, RouteResult,
                      Transaction, cheapest_path, edge_fee, execute_transaction,
                      filter_by_amount, generate_transactions, run_transactions,
                      simulate_step)
from .sampling import (SampleConfig, SamplingError, forest_fire_sample,
                       induced_subgraph, sample_stream)
from .synthetic import synthetic_snapshot

__version__ = "0.1.0"
