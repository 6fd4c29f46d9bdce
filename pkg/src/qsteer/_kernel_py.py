"""Pure-numpy split-step segment evolver: the fallback backend.

Semantics are identical to the compiled kernel in ``_kernel.pyx``: per
segment, Strang substeps alternate a pointwise half-phase of the total
potential with the Fourier-diagonal kinetic factor.
"""
from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

_PHASE_CACHE_MAX = 64


def evolve_segments(values, ksq, pots, taus, nsubs, ucoefs, skip_kinetic=False):
    """Apply a list of constant-control segments to a complex field.

    values:  complex array (any d-cube shape), not modified
    ksq:     |k|^2 array, same shape
    pots:    (m+1, ...) stack: pots[0] is the static potential V,
             pots[1:] the control potentials W_j
    taus:    (nseg,) float durations
    nsubs:   (nseg,) int substep counts
    ucoefs:  (nseg, m) control values per segment
    """
    psi = np.array(values, dtype=np.complex128)
    kin_cache: dict[float, np.ndarray] = {}
    pot_cache: dict[tuple, np.ndarray] = {}
    m = pots.shape[0] - 1
    for seg in range(len(taus)):
        tau = float(taus[seg])
        s = int(nsubs[seg])
        delta = tau / s
        u = ucoefs[seg]

        key = (delta, tuple(float(x) for x in u))
        half = pot_cache.get(key)
        if half is None:
            w = pots[0].copy()
            for j in range(m):
                if u[j] != 0.0:
                    w += u[j] * pots[j + 1]
            half = np.exp(-0.5j * delta * w)
            if len(pot_cache) > _PHASE_CACHE_MAX:
                pot_cache.clear()
            pot_cache[key] = half

        if skip_kinetic:
            kin = None
        else:
            kin = kin_cache.get(delta)
            if kin is None:
                kin = np.exp(-1j * delta * ksq)
                if len(kin_cache) > _PHASE_CACHE_MAX:
                    kin_cache.clear()
                kin_cache[delta] = kin

        for _ in range(s):
            psi *= half
            if kin is not None:
                psi = np.fft.ifftn(kin * np.fft.fftn(psi))
            psi *= half
    return psi
