"""Generalized impedance boundary conditions: forward solver and impedance reconstruction."""
