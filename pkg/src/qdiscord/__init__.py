"""Quantum discord, strong subadditivity, and decoherence losses in the mother protocol family."""

from .discord import (
    DiscordResult,
    OptimizerConfig,
    basis_from_params,
    discord,
    discord_grid_oracle,
    fixed_basis_discord,
)
from .entropy import (
    CorrelationReport,
    conditional_entropy,
    correlation_report,
    mutual_information,
    shannon_entropy,
    ssa_slack,
    von_neumann_entropy,
)
from .measure import (
    Povm,
    ancilla_extension,
    dephase,
    measured_conditional_entropy,
    povm_outcomes,
    theorem1_report,
)
from .protocols import (
    dense_coding_loss,
    distillation_loss,
    fqswd_budget,
    merging_budget,
    merging_markup,
    mother_budget,
)
from .qmat import SubsystemLayout
from .rescalc import compose, derive_qsm, parse_inequality
from .states import (
    DensityMatrix,
    PureState,
    from_pure,
    load_state,
    named_family,
    purify,
    random_density,
    save_state,
)

__version__ = "0.1.0"
