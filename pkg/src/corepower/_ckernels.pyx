# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled structure-table kernel; see ``_pykernels`` for the reference loop."""


def structure_energy_sums(const double[:, ::1] table, const Py_ssize_t[::1] offsets,
                          double e_bit_read, double e_bit_write, double p_leak_bit,
                          double factor, double[::1] out_dyn, double[::1] out_leak):
    cdef Py_ssize_t s, i, nseg = offsets.shape[0] - 1
    cdef double dyn, leak, rows, width, banks, dups, inst, row_term, e_read, e_write
    if table.shape[1] != 7:
        raise ValueError("structure table must have 7 columns")
    with nogil:
        for s in range(nseg):
            dyn = 0.0
            leak = 0.0
            for i in range(offsets[s], offsets[s + 1]):
                rows = table[i, 0]
                width = table[i, 1]
                banks = table[i, 2]
                dups = table[i, 3]
                inst = table[i, 4]
                row_term = 1.0 + (rows / banks) / 1024.0
                e_read = e_bit_read * width * row_term * factor
                e_write = e_bit_write * width * row_term * factor * dups
                dyn = dyn + table[i, 5] * e_read
                dyn = dyn + table[i, 6] * e_write
                leak = leak + p_leak_bit * rows * width * banks * dups * inst * factor
            out_dyn[s] = dyn
            out_leak[s] = leak
