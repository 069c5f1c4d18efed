# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled triad accumulation kernels.

Both kernels add advection products ``i (u_k . mc) v_m`` into output
accumulators at ``p = k + m``.  Slot layouts match the pure-Python
versions in :mod:`nrbous._triad_py`.
"""

cdef double complex I = 1j


def accumulate_restricted(const long[::1] offsets, const int[::1] kk, const int[::1] mm,
                          const unsigned char[::1] flags, const double[:, ::1] kc,
                          const double complex[:, :, ::1] u, const double complex[:, :, ::1] v,
                          double complex[:, :, ::1] out):
    """Restricted channels over a triad list grouped by output.

    Triads ``offsets[p]:offsets[p+1]`` all write into output ``p``.
    ``u[i, s, :]`` holds velocities of the k-side input in slots
    (fast, plus, minus); ``v[i, s, :]`` holds the m-side 4-vectors in slots
    (fast, plus, minus, slow).  ``out[p, a, :]`` accumulators are
    (fast-fast, opposite-sign fast pair, plus-slow, minus-slow).
    Flag bits: 1 fast-fast-fast, 2 fast-fast-slow, 4 fast-slow-fast.
    """
    cdef Py_ssize_t npts = offsets.shape[0] - 1
    cdef const double *U = <const double *> &u[0, 0, 0]
    cdef const double *V = <const double *> &v[0, 0, 0]
    cdef double *O = <double *> &out[0, 0, 0]
    with nogil:
        _restricted(npts, &offsets[0], &kk[0], &mm[0], &flags[0], &kc[0, 0], U, V, O)


cdef inline void _dot3(const double *w, double m1, double m2, double m3,
                       double *re, double *im) noexcept nogil:
    # i * (w . m) for a complex 3-vector stored as interleaved (re, im)
    cdef double a = w[0] * m1 + w[2] * m2 + w[4] * m3
    cdef double b = w[1] * m1 + w[3] * m2 + w[5] * m3
    re[0] = -b
    im[0] = a


cdef inline void _axpy4(double sr, double si, const double *x, double *acc) noexcept nogil:
    cdef int c
    for c in range(4):
        acc[2 * c] += sr * x[2 * c] - si * x[2 * c + 1]
        acc[2 * c + 1] += sr * x[2 * c + 1] + si * x[2 * c]


cdef void _restricted(Py_ssize_t npts, const long *offsets, const int *kk, const int *mm,
                      const unsigned char *flags, const double *kc, const double *U,
                      const double *V, double *O) noexcept nogil:
    cdef Py_ssize_t p, t
    cdef int c, f
    cdef const double *uk
    cdef const double *vm
    cdef double m1, m2, m3, r0, i0, rp, ip, rm, im_
    cdef double acc[32]
    for p in range(npts):
        if offsets[p] == offsets[p + 1]:
            continue
        for c in range(32):
            acc[c] = 0.0
        for t in range(offsets[p], offsets[p + 1]):
            f = flags[t]
            if f == 0:
                continue
            uk = U + 18 * kk[t]
            vm = V + 32 * mm[t]
            m1 = kc[3 * mm[t]]
            m2 = kc[3 * mm[t] + 1]
            m3 = kc[3 * mm[t] + 2]
            if f & 1:
                _dot3(uk, m1, m2, m3, &r0, &i0)
                _axpy4(r0, i0, vm, acc)
            if f & 6:
                _dot3(uk + 6, m1, m2, m3, &rp, &ip)
                _dot3(uk + 12, m1, m2, m3, &rm, &im_)
                if f & 2:
                    _axpy4(rp, ip, vm + 16, acc + 8)
                    _axpy4(rm, im_, vm + 8, acc + 8)
                if f & 4:
                    _axpy4(rp, ip, vm + 24, acc + 16)
                    _axpy4(rm, im_, vm + 24, acc + 24)
        for c in range(32):
            O[32 * p + c] += acc[c]


def convolve_cube(int K, const double[:, ::1] kc, const double complex[:, ::1] u,
                  const double complex[:, ::1] v, double complex[:, ::1] out):
    """Unrestricted Galerkin convolution ``out[p] += i (u_k . mc) v_m`` over the cube.

    ``u`` holds velocities (3 slots), ``v`` and ``out`` full 4-vectors, all
    in the lattice's C order.  Contributions to ``p = 0`` are dropped.
    """
    cdef int side = 2 * K + 1
    cdef int a1, a2, a3, b1, b2, b3, q1, q2, q3, ik, im, ip, c
    cdef int zero = (side * side * side) // 2
    cdef double complex s
    with nogil:
        for a1 in range(-K, K + 1):
            for a2 in range(-K, K + 1):
                for a3 in range(-K, K + 1):
                    ik = ((a1 + K) * side + (a2 + K)) * side + (a3 + K)
                    if ik == zero:
                        continue
                    for b1 in range(max(-K, -K - a1), min(K, K - a1) + 1):
                        q1 = a1 + b1
                        for b2 in range(max(-K, -K - a2), min(K, K - a2) + 1):
                            q2 = a2 + b2
                            for b3 in range(max(-K, -K - a3), min(K, K - a3) + 1):
                                q3 = a3 + b3
                                im = ((b1 + K) * side + (b2 + K)) * side + (b3 + K)
                                ip = ((q1 + K) * side + (q2 + K)) * side + (q3 + K)
                                if im == zero or ip == zero:
                                    continue
                                s = I * (u[ik, 0] * kc[im, 0] + u[ik, 1] * kc[im, 1] + u[ik, 2] * kc[im, 2])
                                for c in range(4):
                                    out[ip, c] = out[ip, c] + s * v[im, c]
