"""Stable fractional matchings under cardinal two-sided valuations, with exact arithmetic."""
from .cmfp import Classification, classify, cmfp_matching, unique_sfm
from .fractional import FractionalMatching, bvn_decompose, convex_combine, is_stable, utilities
from .ic_audit import AuditConfig, MisreportFamily, Verdict, audit_coalition, audit_ic, best_response
from .instance import AgentId, GenMode, MatchingInstance, Side, generate, parse_instance, validate
from .integral import IntegralMatching, blocking_pairs, enumerate_stable, gale_shapley
from .solver import Mechanism, envy_frac, get_mechanism, mechanisms, solve

__version__ = "0.1.0"
