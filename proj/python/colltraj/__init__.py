"""Collision-model quantum trajectories.

Configurations are JSON documents (dict, JSON text or a path to a .json
file) with the same schema the ``colltraj`` command-line tool reads.
"""

from __future__ import annotations

import json
import os
from typing import Any, Mapping, Union

from . import _colltraj
from ._colltraj import (  # noqa: F401
    Basis,
    CalibrationError,
    CapacityError,
    ConfigError,
    Error,
    InvalidArgument,
    NumericalError,
    PreconditionError,
    basis_dimension,
    calibrate_feedback_dde,
    coherent_amplitudes,
    feedback_dde,
    homodyne_eigensystem,
    jc_pseudomode,
    lorentzian_density,
    markovian_lindblad,
)

__version__ = _colltraj.__version__

ConfigLike = Union[Mapping[str, Any], str, os.PathLike]


def _text(config: ConfigLike) -> str:
    if isinstance(config, Mapping):
        return json.dumps(config)
    if isinstance(config, os.PathLike) or (isinstance(config, str) and config.endswith(".json")):
        with open(config, encoding="utf-8") as fh:
            return fh.read()
    return config


def canonical_config(config: ConfigLike) -> dict:
    """Validated configuration with every default filled in."""
    return json.loads(_colltraj.canonical_config(_text(config)))


def config_fingerprint(config: ConfigLike) -> str:
    return _colltraj.config_fingerprint(_text(config))


def coupling_amplitudes(config: ConfigLike):
    return _colltraj.coupling_amplitudes(_text(config))


def coupling_spectrum(config: ConfigLike) -> dict:
    return _colltraj.coupling_spectrum(_text(config))


def run_trajectory(config: ConfigLike, index: int = 0) -> dict:
    """One trajectory as arrays: time, outcome, observables[name], purity, norm_drift."""
    return _colltraj.run_trajectory(_text(config), index)


def run_ensemble(config: ConfigLike, trajectories: int | None = None, threads: int | None = None) -> dict:
    """Ensemble means, variances and standard errors per recorded time."""
    return _colltraj.run_ensemble(_text(config), trajectories, threads)


def single_excitation(config: ConfigLike, horizon: float) -> dict:
    return _colltraj.single_excitation(_text(config), horizon)
