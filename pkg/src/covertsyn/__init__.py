"""Covert attacker synthesis against unknown supervisors of discrete-event plants."""
from .automata import (
    Alphabet,
    AlphabetConflict,
    Automaton,
    AutomatonError,
    Event,
    NondeterminismError,
    Witness,
    bounded_equal,
    bounded_language,
    completion,
    marked_reachable,
    minimize,
    observer,
    reachable_trim,
    sync_product,
    unobservable_reach,
)
from .autfile import parse_aut, to_dot, write_aut
from .constructions import AttackConstraint, CommandSet, ControlConstraint, Scenario, surrogate_plant
from .scenario import bundled_scenario, load_scenario
from .synthesis import SynthesisProblem, SynthesisResult, oracle_policy_search, synthesize_safe
from .verify import (
    VerificationReport,
    pipeline,
    verify_covertness_against,
    verify_damage_reachability,
    verify_equality_products,
)

__version__ = "0.1.0"
