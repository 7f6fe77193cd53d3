"""agelab: simulation and numerical checks for aging dynamics in random media.

Subpackages cover heavy-tailed trap walks on finite graphs, the singular
diffusion that arises as their one-dimensional scaling limit, an extreme-value
regime chain on the hypercube, and Langevin dynamics for the spherical
spin glass.  The `analytic` module holds the limit formulas the simulations
are checked against.
"""

__version__ = "0.1.0"
