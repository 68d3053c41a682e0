"""Casimir-Polder gas sensing with optically trapped nanospheres.

Forward model (materials, gas mixing, Casimir-Polder potential inside a
hollow-core fibre, optical trap) plus dataset generation and a small
numpy MLP that inverts trapping frequencies back to CO2 partial pressure.
"""

__version__ = "0.1.0"
