#!/usr/bin/env python3
"""Regenerate data/zeros_q4_T200.txt: zeros of the Dirichlet beta function.

The nontrivial characters mod 4 consist of the single odd character 4.1,
whose L-function is the Dirichlet beta function

    beta(s) = sum_{n>=0} (-1)^n / (2n+1)^s = 4^{-s} (zeta(s,1/4) - zeta(s,3/4)).

The completed function

    Lambda(s) = (4/pi)^{(s+1)/2} Gamma((s+1)/2) beta(s)

has root number +1 and is real-valued on the critical line, so its zeros up
to a given height can be located by a sign scan plus bisection.  The script
writes positive ordinates only (the reader expands conjugates on demand) and
records the central vanishing order, which is 0 because beta(1/2) != 0.

Needs mpmath; it is a maintenance tool, not part of the installed package.
Run from the repository root:

    python3 scripts/gen_zeros_mod4.py [height] [out_path]
"""
import sys

import mpmath as mp

HEIGHT = 200.0
SCAN_STEP = 0.02


def beta(s):
    return mp.mpf(4) ** (-s) * (mp.zeta(s, mp.mpf(1) / 4) - mp.zeta(s, mp.mpf(3) / 4))


def hardy(t):
    """Completed L-function on the critical line; real for real t."""
    s = mp.mpf("0.5") + 1j * t
    val = (mp.mpf(4) / mp.pi) ** ((s + 1) / 2) * mp.gamma((s + 1) / 2) * beta(s)
    if abs(val.imag) > 1e-12 * (1 + abs(val.real)):
        raise RuntimeError(f"completed value not real at t={t}: {val}")
    return val.real


def expected_count(height):
    """Riemann-von Mangoldt analogue: zeros with 0 < gamma <= height."""
    return float(height / (2 * mp.pi) * mp.log(4 * height / (2 * mp.pi * mp.e)))


def find_zeros(height):
    zeros = []
    steps = int(mp.ceil(height / SCAN_STEP))
    t_prev = mp.mpf("1e-3")
    f_prev = hardy(t_prev)
    for i in range(1, steps + 1):
        t = min(mp.mpf(i) * SCAN_STEP, mp.mpf(height))
        f = hardy(t)
        if f == 0:
            zeros.append(t)
        elif f_prev * f < 0:
            root = mp.findroot(hardy, (t_prev, t), solver="bisect", tol=mp.mpf(10) ** (-2 * mp.mp.dps // 3))
            zeros.append(root)
        t_prev, f_prev = t, f
    return zeros


def main(argv):
    height = float(argv[1]) if len(argv) > 1 else HEIGHT
    out_path = argv[2] if len(argv) > 2 else "data/zeros_q4_T200.txt"
    mp.mp.dps = 30

    central = beta(mp.mpf("0.5"))
    print(f"beta(1/2) = {central}")
    if abs(central) < mp.mpf("1e-6"):
        raise RuntimeError("central value unexpectedly small; refusing to write order 0")

    zeros = find_zeros(height)
    want = expected_count(height)
    print(f"found {len(zeros)} zeros up to {height}; counting formula predicts ~{want:.1f}")
    if abs(len(zeros) - want) > 3:
        raise RuntimeError("zero count disagrees with the counting formula; scan step too coarse?")
    first = float(zeros[0])
    print(f"first zero at {first!r}")
    if abs(first - 6.0209489046975) > 1e-6:
        raise RuntimeError("first zero does not match its known location")

    lines = ["modulus 4", "mchi 4.1 0"]
    lines += [f"4.1 {mp.nstr(z, 17)} 1" for z in zeros]
    with open(out_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
