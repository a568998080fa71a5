"""Diagnosability of modular discrete-event systems and virtual-module synthesis."""

from .automata import (
    Alphabet, Automaton, AutomatonError, AttributeConflictError, Event,
    FaultLabeledAutomaton, ModularSystem, Module, accessible, compose_all,
    enumerate_strings, fault_split, parallel_compose, project, validate,
)
from .diagnosability import (
    Verdict, Verifier, Witness, build_verifier, check_local, check_modular,
    check_virtual, find_indeterminate_cycle, oracle_diagnosable,
)
from .partition import Partition, PartitionError, validate_partition

__version__ = "0.1.0"
