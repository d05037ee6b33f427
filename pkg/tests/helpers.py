"""Shared test fixtures that are plain functions."""

import numpy as np

from supineq.gridfn import GridFunction


def example_fn(E1=1.0, E2=0.5, m=40, L=2.5):
    """4 chi_{|x|<=E1} + chi_{E1<x<=E1+2E2} on a grid whose edges hit every breakpoint."""
    box = ((-L, L),)
    probe = GridFunction(box, (m,), np.zeros(m))
    x = probe.centers()[:, 0]
    v = 4.0 * (np.abs(x) <= E1) + 1.0 * ((x > E1) & (x <= E1 + 2 * E2))
    return GridFunction(box, (m,), v)
