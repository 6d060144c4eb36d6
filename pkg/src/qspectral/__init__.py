"""Finite-blocklength quantum information-spectrum functionals.

Tail functionals of ``rho_n - e^{n gamma} omega_n``, finite-n estimates of
spectral sup/inf divergence and entropic rates, and randomized checks of the
inequalities relating them.
"""

from qspectral.channels import (
    KrausChannel,
    amplitude_damping,
    apply_channel,
    channel_power,
    dephasing,
    depolarizing,
    identity_channel,
    is_unital,
    random_channel,
)
from qspectral.errors import (
    BracketError,
    CapacityError,
    DimensionError,
    EigenSolverError,
    QSpectralError,
    ValidationError,
)
from qspectral.operators import (
    DensityMatrix,
    HermitianOperator,
    PositiveOperator,
    Spectrum,
    SubsystemShape,
    eig_hermitian,
    embed,
    partial_trace,
    positive_part_trace,
    purify,
    sample,
    spectral_projector,
    tensor_power,
    tensor_product,
)
from qspectral.rates import (
    EntropicKind,
    RateEstimate,
    RateQuery,
    RateRecord,
    conditional_entropy,
    entropic_rates,
    estimate_divergence_rates,
    mutual_information,
    relative_entropy,
    threshold_search,
    von_neumann_entropy,
)
from qspectral.spectrum import (
    PairSequence,
    ScaledPair,
    SpectrumCurve,
    TailFunction,
    omega_tail,
    positive_tail,
    rho_tail,
    spectrum_curve,
    typeclass_tail,
)

__version__ = "0.1.0"

__all__ = [
    "BracketError",
    "CapacityError",
    "DensityMatrix",
    "DimensionError",
    "EigenSolverError",
    "EntropicKind",
    "HermitianOperator",
    "KrausChannel",
    "PairSequence",
    "PositiveOperator",
    "QSpectralError",
    "RateEstimate",
    "RateQuery",
    "RateRecord",
    "ScaledPair",
    "Spectrum",
    "SpectrumCurve",
    "SubsystemShape",
    "TailFunction",
    "ValidationError",
    "amplitude_damping",
    "apply_channel",
    "channel_power",
    "conditional_entropy",
    "dephasing",
    "depolarizing",
    "eig_hermitian",
    "embed",
    "entropic_rates",
    "estimate_divergence_rates",
    "identity_channel",
    "is_unital",
    "mutual_information",
    "omega_tail",
    "partial_trace",
    "positive_part_trace",
    "positive_tail",
    "purify",
    "random_channel",
    "relative_entropy",
    "rho_tail",
    "sample",
    "spectral_projector",
    "spectrum_curve",
    "tensor_power",
    "tensor_product",
    "threshold_search",
    "typeclass_tail",
    "von_neumann_entropy",
]
