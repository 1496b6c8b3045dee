"""Domains shared by several test modules."""

import numpy as np

from ccotree.domain import MaskDomain


def c_mask():
    """2 x 2 ring (inner radius 0.5, outer 0.9) with its right side cut away.

    The lower and upper arms only connect around the left side, so a
    straight segment from one arm to the other crosses empty space.
    """
    i, j = np.meshgrid(np.arange(20), np.arange(20), indexing="ij")
    r = np.hypot(i - 9.5, j - 9.5)
    occ = (r >= 5) & (r <= 9)
    occ[12:, 7:13] = False
    return MaskDomain(occ, [0.1, 0.1], [0.0, 0.0])
