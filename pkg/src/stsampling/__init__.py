"""Space-time sampling of bandlimited fields with Gaussian kernels.

Modules
-------
pointset
    Planar point sets, generators and translate probes.
lattice
    Curvilinear lattices and the minimax lattice fit.
signal
    Bandlimited fields on a periodized window, Gaussian convolution, heat flow.
frame
    Sampling operator, frame bounds, Bessel check and reconstruction.
auxfun
    Auxiliary functions with small spectrum and large L2 norm.
counterexample
    Localized obstruction fields for sets on a lattice.
cli
    Command-line front end.
"""

__version__ = "0.1.0"
