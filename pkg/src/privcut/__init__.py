"""Edge-differentially-private graph cut mechanisms.

Provides the shifting mechanism and its min s-t cut / multicut / max-cut
instantiations, a private multiway cut via a noisy simplex-embedding linear
program with pluggable rounding, private minimum k-cut via an augmented
exponential mechanism and a private SPLIT 2-approximation, plus the exact
oracles, hard-instance generators, and statistical privacy/utility audits
used to validate them.
"""

from .graphs import (
    EdgeDelta,
    Graph,
    Partition,
    TerminalSet,
    apply_delta,
    connected_components,
    cut_cost,
    enumerate_neighbor_deltas,
    read_graph,
    uncut_cost,
    write_graph,
)
from .dp import (
    CompositionLedger,
    PrivacyBudget,
    RandomSource,
    compose,
    exponential_mechanism,
    exponential_mechanism_probs,
    laplace,
)
from .errors import CapabilityError, DominatingSetViolation, GraphParseError, PrivcutError

__version__ = "0.1.0"
