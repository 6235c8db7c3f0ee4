"""Core algorithms: DTW, grid matching, extraction, geometry and the synthetic scene."""
