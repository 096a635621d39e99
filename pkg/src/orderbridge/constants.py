"""Physical constants and fixed geometry numbers.

Energies from the lattice side of the pipeline are carried in eV; the
continuum side works in SI. The formula-unit cell volume fixes the
conversion between the two.
"""

KB_EV = 8.617333262e-5      # Boltzmann constant, eV/K
KB_J = 1.380649e-23         # Boltzmann constant, J/K
E_CHARGE = 1.602176634e-19  # elementary charge, C (also J per eV)

CELL_VOLUME_A3 = 32.502     # formula-unit volume, cubic Angstrom

SITES_PER_SUPERCELL = 32    # two stacked 4x4 triangular layers
SUPERCELL_VARIANTS = 12     # symmetry-equivalent ground-state decorations at half filling
GROUP_ORDER = 384


def energy_density_si(e_ev_per_cell: float, cell_volume_a3: float = CELL_VOLUME_A3) -> float:
    """Convert an energy per formula-unit cell (eV) to J/m^3."""
    return e_ev_per_cell * E_CHARGE / (cell_volume_a3 * 1e-30)
