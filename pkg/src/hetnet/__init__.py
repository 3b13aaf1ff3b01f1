"""Coverage, throughput and energy efficiency of K-tier LoS/NLoS HetNets."""
from .model import (AlwaysNlos, ExponentialLos, Link, NetworkConfig, PowerModel, Scheme,
                    ThreeGppLinearLos, ThreeGppTwoPieceLos, TierParams, paper_two_tier)
from .analytic import (ValidityError, coverage, coverage_marp, coverage_mirp,
                       energy_efficiency, potential_throughput)

__version__ = "0.1.0"

__all__ = [
    "AlwaysNlos", "ExponentialLos", "Link", "NetworkConfig", "PowerModel", "Scheme",
    "ThreeGppLinearLos", "ThreeGppTwoPieceLos", "TierParams", "paper_two_tier",
    "ValidityError", "coverage", "coverage_marp", "coverage_mirp",
    "energy_efficiency", "potential_throughput", "__version__",
]
