"""Exact analysis and Monte Carlo toolkit for the q-state Potts model.

Modules:
    lattice   finite graphs, discrete tori, boxes, trees
    potts     spin/bond ensembles, exact partition functions, couplings
    dynamics  heat-bath and Swendsen-Wang kernels, exact transition matrices
    spectral  mixing times, spectral gaps, conductance, bound checks
    pwidth    hierarchical partitions, exact and constructive partition width
    contour   torus fattening, contour/interface decomposition, censuses
    harness   experiment drivers for slow-mixing demonstrations
"""

__version__ = "0.1.0"
