#!/usr/bin/env python3
"""External-model protocol example: <script> <in.csv> <out.csv>.

Reads beam inputs b, h, L, E, P (header x1..x5) and writes one mid-span
deflection P L^3 / (4 E b h^3) per row.
"""
import csv
import sys


def main(argv):
    if len(argv) != 3:
        sys.stderr.write("usage: beam_model.py <in.csv> <out.csv>\n")
        return 2
    with open(argv[1], newline="") as src:
        rows = list(csv.reader(src))
    with open(argv[2], "w", newline="") as dst:
        dst.write("y\n")
        for row in rows[1:]:
            if not row:
                continue
            b, h, length, modulus, load = (float(v) for v in row)
            dst.write(repr(load * length**3 / (4.0 * modulus * b * h**3)) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
