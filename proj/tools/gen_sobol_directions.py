#!/usr/bin/env python3
"""Regenerates src/sobol_directions.inc from the Joe-Kuo table shipped with scipy.

Usage: python3 tools/gen_sobol_directions.py [dims] > src/sobol_directions.inc
"""
import os
import sys

import numpy as np
import scipy

dims = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
path = os.path.join(os.path.dirname(scipy.__file__), "stats", "_sobol_direction_numbers.npz")
table = np.load(path)
poly, vinit = table["poly"], table["vinit"]

print("// Generated by tools/gen_sobol_directions.py from the new-joe-kuo-6.21201 table.")
print("// Entry d: {degree, interior polynomial coefficients, initial direction numbers m_1..m_degree}.")
print("// Dimension 0 is the van der Corput sequence and carries degree 0.")
for d in range(dims):
    p = int(poly[d])
    degree = p.bit_length() - 1
    interior = (p >> 1) & ((1 << max(degree - 1, 0)) - 1) if degree > 0 else 0
    m = [int(v) for v in vinit[d][:degree]]
    m_text = ", ".join(str(v) for v in m) if m else "0"
    print(f"{{{degree}, {interior}u, {{{m_text}}}}},")
