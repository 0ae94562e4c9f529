"""Numerical laboratory for a semilinear stochastic heat equation on [0,1].

Subpackages cover the Dirichlet heat kernel and its integral bounds,
coefficient families with Lipschitz envelopes, counter-based space-time
white noise, the semi-implicit solver with blowup detection, path
diagnostics, and the experiment runner behind the CLI.
"""

__version__ = "0.1.0"
