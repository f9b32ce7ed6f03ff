#!/usr/bin/env python3
"""Regenerates the CSV fixtures under reference/.

table1.csv and meas_1rank.csv carry published values. The two 72-rank files
are reconstructions; see reference/README.md.
"""
import csv
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "reference"

# name, n_arrays, rd_lcf, rd_lcb, wr, rdwr, flops, min, lcf_wa, lcb, max, meas_1
TABLE = """
am00 5 3 4 2 0 4 40 56 48 64 56.32
am01 5 3 4 2 0 4 40 56 48 64 56.28
am02 4 2 3 2 0 2 32 48 40 56 48.25
am03 4 2 2 2 0 2 32 48 32 48 48.15
am04 2 1 2 1 0 4 16 24 24 32 24.05
am05 5 3 5 2 0 10 40 56 56 72 56.97
am06 4 3 3 1 0 9 32 40 32 40 40.22
am07 4 4 4 1 1 4 40 40 40 40 40.08
am08 2 1 2 1 0 4 16 24 24 32 24.06
am09 5 3 6 2 0 10 40 56 64 80 56.56
am10 4 3 5 1 0 8 32 40 48 56 41.49
am11 4 4 5 1 1 4 40 40 48 48 40.08
ac00 5 3 4 2 0 6 40 56 48 64 56.33
ac01 4 2 2 2 0 2 32 48 32 48 48.25
ac02 6 4 4 2 0 17 48 64 48 64 64.70
ac03 6 6 6 2 2 10 64 64 64 64 64.45
ac04 5 3 4 2 0 6 40 56 48 64 56.29
ac05 4 2 3 2 0 2 32 48 40 56 48.33
ac06 6 4 8 2 0 17 48 64 80 96 66.24
ac07 6 6 9 2 2 10 64 64 88 88 64.85
pdv00 11 9 12 2 0 49 88 104 112 128 104.73
pdv01 13 11 16 2 0 45 104 120 144 160 120.77
"""

GRID_POINTS = 15360 * 15360
TIMESTEPS = 400
F_SPECI2M = 1.2
F_NT = 1.17
NO_EVASION = {"ac01", "ac02", "ac05", "ac06"}
OVERPREDICTED = {"am04", "am08"}


def rows():
    for line in TABLE.strip().splitlines():
        f = line.split()
        yield dict(name=f[0], n=int(f[1]), rd=int(f[2]), rdb=int(f[3]), wr=int(f[4]), rdwr=int(f[5]),
                   flops=int(f[6]), min=int(f[7]), lcf_wa=int(f[8]), lcb=int(f[9]), max=int(f[10]),
                   meas1=float(f[11]))


def speci2m(r):
    return 8 * (r["rd"] + r["wr"] + (F_SPECI2M - 1) * (r["wr"] - r["rdwr"]))


def nt_speci2m(r):
    ev = r["wr"] - r["rdwr"]
    return 8 * (r["rd"] + r["wr"] + ((F_NT - 1) + (F_SPECI2M - 1) * (ev - 1) if ev > 0 else 0))


def record(r, ranks, balance):
    total = balance * TIMESTEPS * GRID_POINTS / 1e9
    write = min(total, r["wr"] * 8 * TIMESTEPS * GRID_POINTS / 1e9)
    return [r["name"], ranks, f"{total - write:.6f}", f"{write:.6f}", 1, TIMESTEPS, GRID_POINTS]


def original_72(r):
    if r["wr"] == r["rdwr"]:
        return r["meas1"]  # nothing to evade
    if r["name"] in NO_EVASION:
        return r["meas1"]  # evasion did not engage
    if r["name"] in OVERPREDICTED:
        return speci2m(r) * 0.95
    return speci2m(r) * 1.0375


def optimized_72(r, i):
    if r["wr"] == r["rdwr"]:
        return r["meas1"]
    return nt_speci2m(r) * (1.01 if i % 2 == 0 else 0.99)


def write(name, header, data):
    with open(OUT / name, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(data)


def main():
    OUT.mkdir(exist_ok=True)
    table = list(rows())
    write("table1.csv", ["kernel", "n_arrays", "rd_lcf", "rd_lcb", "wr", "rdwr", "flops_per_it", "min", "lcf_wa",
                         "lcb", "max", "meas_1"],
          [[r["name"], r["n"], r["rd"], r["rdb"], r["wr"], r["rdwr"], r["flops"], r["min"], r["lcf_wa"], r["lcb"],
            r["max"], f"{r['meas1']:.2f}"] for r in table])
    cols = ["kernel", "ranks", "read_gbytes", "write_gbytes", "call_count", "timesteps", "grid_points"]
    write("meas_1rank.csv", cols, [record(r, 1, r["meas1"]) for r in table])
    write("meas_72rank.csv", cols, [record(r, 72, original_72(r)) for r in table])
    write("meas_72rank_optimized.csv", cols, [record(r, 72, optimized_72(r, i)) for i, r in enumerate(table)])


if __name__ == "__main__":
    main()
