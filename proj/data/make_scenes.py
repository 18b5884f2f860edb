#!/usr/bin/env python3
"""Writes the bundled synthetic scenes (ASCII PGM/PPM, maxval 1000)."""
import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parent / "scenes"
N = 32
MAXVAL = 1000


def write_pnm(path, arr):
    arr = np.asarray(arr, dtype=float)
    color = arr.ndim == 3
    h, w = arr.shape[:2]
    vals = np.rint(np.clip(arr, 0, 1) * MAXVAL).astype(int)
    lines = [("P3" if color else "P2"), f"{w} {h}", str(MAXVAL)]
    for y in range(h):
        row = vals[y].reshape(-1)
        lines.append(" ".join(str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def house():
    m = np.zeros((N, N))
    m[14:28, 7:25] = 1.0                      # walls
    for y in range(4, 14):                    # roof
        half = (y - 4) + 1
        m[y, 16 - half:16 + half] = 1.0
    m[20:28, 14:18] = 0.0                     # door
    m[16:19, 9:12] = 0.0                      # window
    return m


def metamer():
    nir785 = np.full((N, N), 0.1)
    nir830 = np.full((N, N), 0.1)
    vis = np.full((N, N, 3), 0.15)
    # A and B look identical in visible light but differ between the bands.
    nir785[6:22, 3:14] = 0.9
    nir830[6:22, 3:14] = 0.2
    nir785[6:22, 18:29] = 0.2
    nir830[6:22, 18:29] = 0.9
    vis[6:22, 3:14] = (0.55, 0.55, 0.50)
    vis[6:22, 18:29] = (0.55, 0.55, 0.50)
    # C is bright in both bands.
    nir785[25:30, 3:29] = 0.8
    nir830[25:30, 3:29] = 0.8
    vis[25:30, 3:29] = (0.60, 0.60, 0.55)
    return nir785, nir830, vis


def rings():
    y, x = np.mgrid[0:N, 0:N]
    r = np.hypot(x - 15.5, y - 15.5)
    nir785 = np.where(r < 6, 0.85, np.where(r < 11, 0.25, 0.05))
    nir830 = np.where(r < 6, 0.30, np.where(r < 11, 0.80, 0.05))
    vis = np.zeros((N, N, 3))
    vis[...] = (0.10, 0.10, 0.10)
    vis[r < 11] = (0.45, 0.40, 0.35)
    vis[r < 6] = (0.50, 0.45, 0.40)
    return nir785, nir830, vis


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write_pnm(OUT / "house_32.pgm", house())
    a, b, v = metamer()
    write_pnm(OUT / "metamer_785.pgm", a)
    write_pnm(OUT / "metamer_830.pgm", b)
    write_pnm(OUT / "metamer_visible.ppm", v)
    a, b, v = rings()
    write_pnm(OUT / "rings_785.pgm", a)
    write_pnm(OUT / "rings_830.pgm", b)
    write_pnm(OUT / "rings_visible.ppm", v)
    gray = np.repeat(house()[..., None] * 0.6 + 0.2, 3, axis=2)
    write_pnm(OUT / "house_visible_gray.ppm", gray)


if __name__ == "__main__":
    main()
