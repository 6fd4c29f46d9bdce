# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled split-step segment evolver.

Runs the whole multi-segment Strang loop in C with an in-kernel radix-2 FFT
(grid sizes are powers of two by construction), so schedules made of many
tiny segments avoid per-segment interpreter and dispatch overhead.  Must
stay observationally identical to ``_kernel_py.evolve_segments``.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()

BACKEND_NAME = "cython"

DEF CACHE_SLOTS = 8


cdef void _fft_strided(double complex* a, Py_ssize_t n, Py_ssize_t stride,
                       const double complex* table, double complex* scratch,
                       bint inverse) noexcept nogil:
    """Radix-2 FFT of a strided vector, twiddles from a half-length table."""
    cdef Py_ssize_t i, j, bit, length, half, k, base, step
    cdef double complex u, v, w

    for i in range(n):
        scratch[i] = a[i * stride]

    # bit-reversal permutation
    j = 0
    for i in range(1, n):
        bit = n >> 1
        while j & bit:
            j ^= bit
            bit >>= 1
        j |= bit
        if i < j:
            u = scratch[i]
            scratch[i] = scratch[j]
            scratch[j] = u

    length = 2
    while length <= n:
        half = length >> 1
        step = n // length
        for base in range(0, n, length):
            for k in range(half):
                w = table[k * step]
                if inverse:
                    w = w.conjugate()
                u = scratch[base + k]
                v = scratch[base + k + half] * w
                scratch[base + k] = u + v
                scratch[base + k + half] = u - v
        length <<= 1

    if inverse:
        for i in range(n):
            a[i * stride] = scratch[i] / n
    else:
        for i in range(n):
            a[i * stride] = scratch[i]


cdef void _fftn(double complex* psi, Py_ssize_t n0, Py_ssize_t n1,
                const double complex* table, double complex* scratch,
                bint inverse) noexcept nogil:
    """FFT over all axes of a 1-D (n1 == 1) or 2-D row-major field."""
    cdef Py_ssize_t r, c
    if n1 == 1:
        _fft_strided(psi, n0, 1, table, scratch, inverse)
        return
    for r in range(n0):
        _fft_strided(psi + r * n1, n1, 1, table, scratch, inverse)
    for c in range(n1):
        _fft_strided(psi + c, n0, n1, table, scratch, inverse)


def evolve_segments(values, ksq, pots, taus, nsubs, ucoefs, skip_kinetic=False):
    """Compiled counterpart of ``_kernel_py.evolve_segments``."""
    if values.ndim > 2:
        raise ValueError("compiled kernel supports 1-D and 2-D grids")

    cdef Py_ssize_t n0 = values.shape[0]
    cdef Py_ssize_t n1 = values.shape[1] if values.ndim == 2 else 1
    cdef Py_ssize_t size = n0 * n1
    cdef Py_ssize_t n = n0 if n0 >= n1 else n1

    psi_arr = np.array(values, dtype=np.complex128).reshape(size)
    ksq_arr = np.ascontiguousarray(ksq, dtype=np.float64).reshape(size)
    pots_arr = np.ascontiguousarray(pots, dtype=np.float64).reshape(pots.shape[0], size)
    taus_arr = np.ascontiguousarray(taus, dtype=np.float64)
    nsubs_arr = np.ascontiguousarray(nsubs, dtype=np.int64)
    u_arr = np.ascontiguousarray(ucoefs, dtype=np.float64)

    # accurate twiddles: exp(-2*pi*i*k/n) for k < n/2
    table_arr = np.exp(-2j * np.pi * np.arange(n // 2) / n)
    scratch_arr = np.empty(n, dtype=np.complex128)

    kin_tables = np.empty((CACHE_SLOTS, size), dtype=np.complex128)
    kin_keys = np.full(CACHE_SLOTS, np.nan)
    pot_tables = np.empty((CACHE_SLOTS, size), dtype=np.complex128)
    cdef Py_ssize_t m = pots_arr.shape[0] - 1
    pot_keys = np.full((CACHE_SLOTS, m + 1), np.nan)

    cdef double complex[::1] psi = psi_arr
    cdef double[::1] ksq_v = ksq_arr
    cdef double[:, ::1] pots_v = pots_arr
    cdef double[::1] taus_v = taus_arr
    cdef long long[::1] nsubs_v = nsubs_arr
    cdef double[:, ::1] u_v = u_arr
    cdef double complex[::1] table = table_arr
    cdef double complex[::1] scratch = scratch_arr
    cdef double complex[:, ::1] kin = kin_tables
    cdef double[::1] kin_key = kin_keys
    cdef double complex[:, ::1] pot = pot_tables
    cdef double[:, ::1] pot_key = pot_keys

    cdef Py_ssize_t nseg = taus_arr.shape[0]
    cdef Py_ssize_t seg, i, j, sub, slot, kin_slot, pot_slot
    cdef Py_ssize_t kin_next = 0, pot_next = 0
    cdef int s
    cdef bint match, kinetic = not skip_kinetic
    cdef double tau, delta, w, ang

    with nogil:
        for seg in range(nseg):
            tau = taus_v[seg]
            s = <int> nsubs_v[seg]
            delta = tau / s

            pot_slot = -1
            for slot in range(CACHE_SLOTS):
                if pot_key[slot, 0] == delta:
                    match = True
                    for j in range(m):
                        if pot_key[slot, j + 1] != u_v[seg, j]:
                            match = False
                            break
                    if match:
                        pot_slot = slot
                        break
            if pot_slot < 0:
                pot_slot = pot_next
                pot_next = (pot_next + 1) % CACHE_SLOTS
                pot_key[pot_slot, 0] = delta
                for j in range(m):
                    pot_key[pot_slot, j + 1] = u_v[seg, j]
                for i in range(size):
                    w = pots_v[0, i]
                    for j in range(m):
                        if u_v[seg, j] != 0.0:
                            w += u_v[seg, j] * pots_v[j + 1, i]
                    ang = -0.5 * delta * w
                    pot[pot_slot, i].real = cos(ang)
                    pot[pot_slot, i].imag = sin(ang)

            if kinetic:
                kin_slot = -1
                for slot in range(CACHE_SLOTS):
                    if kin_key[slot] == delta:
                        kin_slot = slot
                        break
                if kin_slot < 0:
                    kin_slot = kin_next
                    kin_next = (kin_next + 1) % CACHE_SLOTS
                    kin_key[kin_slot] = delta
                    for i in range(size):
                        ang = -delta * ksq_v[i]
                        kin[kin_slot, i].real = cos(ang)
                        kin[kin_slot, i].imag = sin(ang)

            for sub in range(s):
                for i in range(size):
                    psi[i] = psi[i] * pot[pot_slot, i]
                if kinetic:
                    _fftn(&psi[0], n0, n1, &table[0], &scratch[0], False)
                    for i in range(size):
                        psi[i] = psi[i] * kin[kin_slot, i]
                    _fftn(&psi[0], n0, n1, &table[0], &scratch[0], True)
                for i in range(size):
                    psi[i] = psi[i] * pot[pot_slot, i]

    return psi_arr.reshape(values.shape)
