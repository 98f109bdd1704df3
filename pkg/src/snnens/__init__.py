"""Spiking-network simulation, spike-train decoding, and ensembling.

The package is a pipeline of independently usable stages:

- :mod:`snnens.lif` — conductance-based neurons, Poisson encoding, and the
  winner-take-all network;
- :mod:`snnens.stdp` — trace-based plasticity with adaptive thresholds;
- :mod:`snnens.training` — unsupervised training, recording, and class
  assignment;
- :mod:`snnens.decode` — spike-train decoders and estimator wrappers;
- :mod:`snnens.combine` — ensemble combiners;
- :mod:`snnens.ambiguity` — exact ensemble-error decompositions;
- :mod:`snnens.io` — datasets, record files, model files, and configs;
- :mod:`snnens.core` — shared containers and validation;
- :mod:`snnens.cli` — the experiment harness (``snnens`` entry point).
"""

__version__ = "0.1.0"

__all__ = [
    "ambiguity",
    "cli",
    "combine",
    "core",
    "decode",
    "io",
    "lif",
    "stdp",
    "training",
]
