"""Modulation depth against field magnitude on the T- line of site 1 near [001]."""

import argparse

import numpy as np

from nvespin.eseem import cancellation_scan, default_tau_grid
from nvespin.spincore import EulerAngles, NucleusSpec, SpinSystem, rotate_field
from nvespin.synthetic import resonant_setup, unit


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--start", type=float, default=100.0)
    ap.add_argument("--stop", type=float, default=600.0)
    ap.add_argument("--step", type=float, default=10.0)
    args = ap.parse_args(argv)

    euler = EulerAngles(8.0, 1.0, 0.0)
    nv = SpinSystem.nv([NucleusSpec.nitrogen14()])
    _, sel = resonant_setup((0, 0, 1), euler, 1, "minus_zero")
    rows, best = cancellation_scan(nv, rotate_field(unit((0, 0, 1)), euler), sel,
                                   np.arange(args.start, args.stop + 1e-9, args.step), default_tau_grid())
    for b, d in rows:
        if not np.isfinite(d):
            print(f"{b:7.1f} mT  (manifolds not resolved)")
            continue
        print(f"{b:7.1f} mT  {d:.4f}  " + "#" * int(40 * min(d, 1.5) / 1.5))
    print(f"maximum depth {best[1]:.3f} at {best[0]:.1f} mT")


if __name__ == "__main__":
    main()
