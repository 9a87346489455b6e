"""Pure-Python structure-table kernel.

Mirrors ``_ckernels.pyx`` operation for operation so both backends produce
bit-identical results.
"""


def structure_energy_sums(table, offsets, e_bit_read, e_bit_write, p_leak_bit, factor,
                          out_dyn, out_leak):
    """Per-segment dynamic energy (pJ) and leakage power (uW) of array structures.

    ``table`` rows are (rows, width, banks, duplicates, instances, read_ops,
    write_ops); segment ``s`` spans rows ``offsets[s]:offsets[s + 1]``.
    """
    rows_list = table.tolist() if hasattr(table, "tolist") else table
    offs = offsets.tolist() if hasattr(offsets, "tolist") else offsets
    for s in range(len(offs) - 1):
        dyn = 0.0
        leak = 0.0
        for i in range(offs[s], offs[s + 1]):
            rows, width, banks, dups, inst, reads, writes = rows_list[i]
            row_term = 1.0 + (rows / banks) / 1024.0
            e_read = e_bit_read * width * row_term * factor
            e_write = e_bit_write * width * row_term * factor * dups
            dyn = dyn + reads * e_read
            dyn = dyn + writes * e_write
            leak = leak + p_leak_bit * rows * width * banks * dups * inst * factor
        out_dyn[s] = dyn
        out_leak[s] = leak
