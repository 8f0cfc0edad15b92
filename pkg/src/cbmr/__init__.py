"""Decentralized cooperative contextual-bandit recommendation.

Agents own disjoint item inventories, learn which items (their own, or
ones requested from other agents for a commission) to show each arriving
user, and are scored by regret against an exact oracle.
"""

from .actions import Action, ActionSpace, Arm, action_count, enumerate_actions, enumerate_arms
from .cbmr_d import CbmrD
from .cbmr_ind import CbmrInd
from .context_space import DiscretePartition, Partition, compute_m_T
from .control import ControlFunctions, exponent_z
from .data_gen import PLACEMENTS, PRESETS, generate, preset
from .harness import ExperimentConfig, RunResult, Simulation, SlotTranscript, run_experiment
from .market import (FIXED, GROUP_DEPENDENT, INDEPENDENT, PROPORTIONAL, ArrivalProcess, CommissionSchema,
                     ConfigurationError, CoPurchaseModel, Item, MarketModel, settle)
from .network import CbmrIndN, TopologyGraph, complete_graph, line_graph, star_graph
from .oracle import Oracle, OracleTable

__version__ = "0.1.0"

__all__ = [
    "Action", "ActionSpace", "Arm", "action_count", "enumerate_actions", "enumerate_arms",
    "CbmrD", "CbmrInd", "CbmrIndN", "DiscretePartition", "Partition", "compute_m_T",
    "ControlFunctions", "exponent_z", "PLACEMENTS", "PRESETS", "generate", "preset",
    "ExperimentConfig", "RunResult", "Simulation", "SlotTranscript", "run_experiment",
    "FIXED", "GROUP_DEPENDENT", "INDEPENDENT", "PROPORTIONAL", "ArrivalProcess", "CommissionSchema",
    "ConfigurationError", "CoPurchaseModel", "Item", "MarketModel", "settle",
    "TopologyGraph", "complete_graph", "line_graph", "star_graph", "Oracle", "OracleTable",
]
