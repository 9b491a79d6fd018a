"""Portable seeded random streams.

Every stream is numpy's Philox-4x64 counter-based generator keyed by the
integer seed. Only two primitives are drawn from it:

* ``uniforms(shape)``: doubles in [0, 1) from ``Generator.random``, consumed
  in C order;
* normals: Box-Muller transforms of those uniforms, see :func:`box_muller`.

Philox output for a given key is fixed by its published specification, so
the bytes of a generated instance do not depend on the platform.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def box_muller(u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    """Standard normals from two independent uniform arrays in [0, 1).

    Returns an array with the leading axis doubled: the cosine branch
    followed by the sine branch.
    """
    radius = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 lies in (0, 1]
    angle = 2.0 * np.pi * u2
    return np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
