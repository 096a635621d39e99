"""Scale-bridging workflow for an ordering lattice alloy.

Modules: lattice/cluster/hull/fitting (configuration energetics),
symmetry (order parameters and invariants), montecarlo (biased
sampling), idnn (integrable network free energies), polytope/active
(exploration and the learning loop), phasefield (2D evolution),
energetics (nucleation and phase boundaries), dataio/cli (artifacts
and orchestration).
"""

__version__ = "0.1.0"
