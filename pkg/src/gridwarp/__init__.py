"""Gridwarp - topology-constrained 2D-DTW grid matching and structured-light height maps."""

__version__ = "0.2.0"
__author__ = "Gridwarp Contributors"
__description__ = "Topology-constrained 2D-DTW grid matching and structured-light height maps"
