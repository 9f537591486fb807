"""Numerical laboratory for the spinorial Yamabe problem on surfaces

Modules:
    clifford: 2D Clifford algebra, Dirac symbol and spectral projectors
    bubble: radial ground states of the limit equation on the plane
    geometry: surface curvature, normal coordinates and the Θ functional
    torus: strongly indefinite min-max solver on a flat 2-torus
    cli: batch command-line surface

"""

__version__ = "0.1.0"
