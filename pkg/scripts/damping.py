"""Inhomogeneous damping of 14N ESEEM from distributed couplings.

Compares the modulation amplitude near 200 us with and without a
Gaussian spread of the hyperfine and quadrupole parameters.
"""

import argparse

import numpy as np

from nvespin.eseem import damped_ensemble_trace, eseem_time_domain
from nvespin.spincore import NucleusSpec, SpinSystem
from nvespin.synthetic import resonant_setup


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=500)
    ap.add_argument("--at", type=float, default=200.0, help="window end (us)")
    args = ap.parse_args(argv)

    nv = SpinSystem.nv([NucleusSpec.nitrogen14()])
    fv, sel = resonant_setup((0, 0, 1), (8.0, 1.0, 0.0), 1, "minus_zero")
    tau = np.arange(args.at - 5.0, args.at, 0.004)
    ref = np.std(eseem_time_domain(nv, fv, sel, tau).v)
    for fa, fq in ((0.002, 0.01), (0.01, 0.01), (0.05, 0.05)):
        tr = damped_ensemble_trace(nv, fv, sel, tau, fa, fq, args.samples, seed=13)
        print(f"spread (A {fa:.1%}, P {fq:.1%}): envelope {np.std(tr.v) / ref:.3f}")


if __name__ == "__main__":
    main()
