"""Coupled staggered-grid / vertex-centered finite-volume solver.

The free-flow subdomain is discretized with a staggered (MAC) scheme for
the stationary incompressible (Navier-)Stokes equations; the porous
subdomain with a vertex-centered finite-volume (box) scheme for Darcy or
Forchheimer flow.  The two are coupled monolithically across a possibly
non-matching interface via conservative facet fluxes, interface pressure
projections and a Beavers-Joseph-Saffman slip closure.
"""

__version__ = "0.1.0"
