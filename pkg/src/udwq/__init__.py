"""Delta-coupled qubit detectors exchanging quantum information through a scalar field.

Submodules:
    field_backend: mode amplitudes and smeared two-point functions.
    weyl: Weyl-word reduction and quasifree expectation values.
    channel: post-protocol states, entropies, negativity, signaling.
    fock_oracle: brute-force truncated-Fock simulation.
    protocol: fine tuning, Bob's decoding smearings, causal classification.
    cli: the ``udwq`` command.
"""

from .errors import (
    ConfigError,
    NumericalContractError,
    UDWQError,
)

__version__ = "0.1.0"

__all__ = ["ConfigError", "NumericalContractError", "UDWQError", "__version__"]
