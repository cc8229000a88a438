"""Algebraic multigrid with locally detected near kernels.

Subpackages
-----------
sparsela    thin sparse/dense linear algebra layer (CSR carrier, eig, LU)
discretize  edge-element curl-curl and staggered Stokes test operators
nearkernel  local eigenproblem sweep that detects near-kernel vectors
coarsen     C/F splitting, splitting bases, ideal/classical interpolation
smoothers   distributive, L1-Jacobi, Schwarz (Vanka), composite, symmetrized
cr          compatible relaxation quality measures
solver      two-grid hierarchy, stationary/CG/PCG drivers, deflation
stokes      interpolation constructions for the staggered Stokes system
cli         experiment driver (``nkamg run <config>``)
"""

__version__ = "0.1.0"
