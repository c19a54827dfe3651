"""Alicki-Fannes dynamical entropy of quantum spin chains and its group-velocity bound."""

from .dynamics import (
    Evolver,
    cone_map,
    convergence_in_volume,
    evolve,
    lemma2_check,
    lemma2_radius,
    localization_profile,
)
from .errors import (
    ContainmentError,
    DomainError,
    IncompatibleError,
    NumericalError,
    QDEError,
    ResourceError,
    ValidationError,
)
from .experiments import BoundReport, ExperimentConfig, run_suite, verify_bound
from .hamiltonian import Potential, Term, group_velocity, ising, lambda_norm, local_hamiltonian, onsite, xy
from .multitime import build_multitime_state, build_multitime_states, entropy_rate, sup_search
from .operators import LIMITS, QUBIT, LocalOperator, SiteSpec, Window, embed, operator_norm, pauli
from .partitions import FamilySpec, Partition, projective_partition, random_partition, weighted_unitary_partition
from .states import ChainState, gibbs_state, mean_entropy, product_state, tracial_state, von_neumann_entropy

__version__ = "0.1.0"
