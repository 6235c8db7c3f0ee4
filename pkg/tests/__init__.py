"""Test suite for gridwarp."""
