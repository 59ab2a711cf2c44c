"""Multilevel default cascades on multiplex interbank networks.

Subpackages
-----------
netgen    network ensembles (ER, configuration model, heavy-tailed static model)
dynamics  cascade simulation on concrete networks
theory    tree-approximation recursion, Jacobians, cascade conditions
regions   cascade-region rasters, cascade windows, optimal seniority ratios
cli       configuration-driven experiment runner
"""

from . import dynamics, netgen, regions, theory

__version__ = "0.1.0"

__all__ = ["netgen", "dynamics", "theory", "regions", "__version__"]
