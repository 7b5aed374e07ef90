"""Quantum dynamical maps from time-local generators.

The package builds evolutions from generator families, classifies the
evolved maps along the complete-positivity / co-complete-positivity / PPT /
entanglement-breaking cone hierarchy, locates arrival times into each cone,
and certifies eventual entanglement breaking and eventual divisibility.

Submodules are imported lazily; ``import ebdyn`` alone stays cheap so the
command line tool can configure threading before the numerics load.
"""

import importlib

__version__ = "0.1.0"

_SUBMODULES = (
    "matcore",
    "superop",
    "classify",
    "families",
    "evolve",
    "asymptotics",
    "divisibility",
    "cli",
    "errors",
    "tolerances",
)

# name -> submodule for the flattened convenience API
_EXPORTS = {
    # superop
    "Superoperator": "superop",
    "ChoiMatrix": "superop",
    "MapSpectrum": "superop",
    "to_choi": "superop",
    "from_choi": "superop",
    "map_spectrum": "superop",
    "tp_fixed_point": "superop",
    # classify
    "ClassificationReport": "classify",
    "classify_map": "classify",
    "interior_certificate": "classify",
    "positivity_witness": "classify",
    # families
    "GeneratorFamily": "families",
    "gkls": "families",
    "pauli_channel": "families",
    "eternal_nm": "families",
    "phase_covariant": "families",
    "depolarizing": "families",
    "detailed_balance": "families",
    "floquet_product": "families",
    "pure_decoherence": "families",
    "diagonally_covariant": "families",
    # evolve
    "EvolutionHandle": "evolve",
    "solve": "evolve",
    "solve_many": "evolve",
    "propagator": "evolve",
    "propagator_many": "evolve",
    # asymptotics
    "ArrivalResult": "asymptotics",
    "AsymptoticVerdict": "asymptotics",
    "Search": "asymptotics",
    "arrival_time": "asymptotics",
    "asymptotic_map": "asymptotics",
    "cone_witness": "asymptotics",
    "predict_eventually_eb": "asymptotics",
    "ppt_composition_experiment": "asymptotics",
    # divisibility
    "DivisibilityReport": "divisibility",
    "scan_divisibility": "divisibility",
    "check_implication_chain": "divisibility",
    # errors
    "EbdynError": "errors",
}

__all__ = sorted(set(_SUBMODULES) | set(_EXPORTS) | {"__version__"})


def __getattr__(name):
    if name in _SUBMODULES:
        return importlib.import_module(f".{name}", __name__)
    if name in _EXPORTS:
        module = importlib.import_module(f".{_EXPORTS[name]}", __name__)
        return getattr(module, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return __all__
