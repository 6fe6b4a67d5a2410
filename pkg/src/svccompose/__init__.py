"""Multi-agent web service composition by refinement of partial-order plans."""

from __future__ import annotations

from ._kernels import BACKEND
from .agents import (
    Composer,
    Failure,
    ManagerAgent,
    SelectionTable,
    composer_run,
    gm_dispatch_atomic,
    gm_route,
    manager_refine,
    rc_classify_service,
    rc_cross_xml,
    rc_produce_description,
)
from .bus import Bus
from .conjecture import Conjecture, initial_conjecture, is_solution, linearize
from .errors import ComposeError
from .logic import Atom, parse_atom
from .ontology import MatchDegree, Ontology
from .planner import Action, Domain, Operator, Plan, Problem, oracle_solve, solve, validate_plan
from .runtime import RunResult, Scenario, Transcript, load_scenario, replay, run
from .service_model import ServiceDescription, parse_service_description, translate_to_domain

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Action", "Atom", "Bus", "ComposeError", "Composer", "Conjecture", "Domain",
    "Failure", "ManagerAgent", "MatchDegree", "Ontology", "Operator", "Plan", "Problem",
    "RunResult", "Scenario", "SelectionTable", "ServiceDescription", "Transcript",
    "composer_run", "gm_dispatch_atomic", "gm_route", "initial_conjecture", "is_solution",
    "linearize", "load_scenario", "manager_refine", "oracle_solve", "parse_atom",
    "parse_service_description", "rc_classify_service", "rc_cross_xml",
    "rc_produce_description", "replay", "run", "solve", "translate_to_domain",
    "validate_plan",
]
