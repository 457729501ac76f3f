"""Regenerate the arbitrary-precision reference tables in tests/data.

    python3 tools/make_special_tables.py

Each row is ``re im value_re value_im`` at 40 significant digits, where the
value is w(z) = exp(-z^2) erfc(-iz) for faddeeva_oracle.txt and erfc(z)
for erfc_oracle.txt.  Points stay within |z| <= 100 and away from the
zeros of both functions, where a relative comparison means nothing.
"""

from pathlib import Path

import mpmath as mp

mp.mp.dps = 40
OUT = Path(__file__).resolve().parent.parent / "tests" / "data"

W_POINTS = [
    (0.0, 0.0), (1e-8, 1e-8), (0.1, 0.0), (1.0, 0.0), (3.0, 0.0), (10.0, 0.0),
    (0.0, 0.5), (0.0, 5.0), (0.5, 2.0), (1.0, 1.0), (-1.0, 1.0), (2.5, 0.3),
    (-3.7, 0.01), (5.5, 5.5), (6.2, 0.0001), (12.0, 3.0), (-20.0, 7.0),
    (0.0, 30.0), (45.0, 45.0), (70.0, 0.5), (-99.0, 1.0), (0.0, 99.9),
    (30.0, -0.3), (0.8, -0.6), (-2.0, -0.5), (0.3, -3.0), (0.0, -5.0),
    (4.0, -1.0), (-1.5, 0.0), (7.0, 20.0),
]

ERFC_POINTS = [
    (0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (3.0, 0.0), (10.0, 0.0), (25.0, 0.0),
    (-2.0, 0.0), (-6.0, 0.0), (0.5, 2.0), (1.0, 1.0), (2.0, -1.5), (-1.0, 0.5),
    (5.0, 3.0), (10.0, 9.0), (20.0, 15.0), (0.01, 0.3), (0.2, 4.0),
    (-0.5, -2.5), (3.0, 0.01), (8.0, -2.0), (15.0, 0.1), (-3.0, 2.0),
    (0.7, 0.7), (1.5, -0.2), (4.0, 4.0),
]


def faddeeva(z):
    return mp.exp(-z * z) * mp.erfc(-1j * z)


def write(name, points, fn):
    lines = [f"# re im {name}_re {name}_im  (mpmath, {mp.mp.dps} digits)"]
    for x, y in points:
        z = mp.mpc(x, y)
        v = fn(z)
        lines.append(" ".join(mp.nstr(t, 30, min_fixed=1, max_fixed=0)
                              for t in (z.real, z.imag, v.real, v.imag)))
    (OUT / f"{name}_oracle.txt").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    write("faddeeva", W_POINTS, faddeeva)
    write("erfc", ERFC_POINTS, mp.erfc)
