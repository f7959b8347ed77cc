#!/usr/bin/env python3
"""Regenerates src/sobol_direction_numbers.inc from the Joe-Kuo
new-joe-kuo-6.21201 table as shipped with SciPy."""
import os
import sys

import numpy as np
import scipy

DIMS = 1024


def main(out_path):
    table = np.load(os.path.join(os.path.dirname(scipy.__file__), "stats",
                                 "_sobol_direction_numbers.npz"))
    poly, vinit = table["poly"], table["vinit"]
    with open(out_path, "w") as out:
        out.write("// Generated by tools/gen_sobol_table.py. Do not edit.\n")
        out.write("// Joe-Kuo direction numbers (new-joe-kuo-6.21201), first %d dimensions.\n" % DIMS)
        out.write("// Row layout: {polynomial incl. leading/trailing 1, {m_1, ..., m_s}}\n")
        for d in range(DIMS):
            p = int(poly[d])
            degree = p.bit_length() - 1
            m = ", ".join(str(int(v)) for v in vinit[d, :degree])
            out.write("{%d, {%s}},\n" % (p, m))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/sobol_direction_numbers.inc")
