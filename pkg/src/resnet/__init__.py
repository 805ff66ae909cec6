"""Effective resistance, energy forms and spectra on weighted networks."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .network import (Exhaustion, Network, binary_tree, build_network, cartesian_product,
                      complete, lattice, lattice_ball, path, product, random_connected, tree,
                      wired_collapse)
from .operators import GroundedSystem, energy, grounded, laplacian, phi_map
from .resistance import (dipole_solve, free_resistance, monopole_solve, resistance_bracket,
                         royden_split)
from .spectral import (dirichlet_gap, energy_measure, spectral_measure, spectral_resistance)
from .lattice import lattice_resistance, lattice_monopole_value, transience_probe
from .walk import hitting_probability_exact, hitting_probability_mc
