"""Temperature dependence of T2 with a thermally activated fluctuator.

Prints the reference curve, then fits a noisy synthetic copy of it.
"""

import argparse

import numpy as np

from nvespin.inference import fit_t2_temperature
from nvespin.inference.decoherence import DEFAULT_START, REFERENCE_MODEL, model_minimum
from nvespin.synthetic import t2_curve


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--noise", type=float, default=0.03)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    for t in np.geomspace(2, 300, 15):
        print(f"{t:7.1f} K  T2 = {float(REFERENCE_MODEL.t2(t)):.3f} ms")
    print("model minimum (K, ms):", tuple(round(float(x), 3) for x in model_minimum(REFERENCE_MODEL)))
    fit = fit_t2_temperature(t2_curve(REFERENCE_MODEL, rel_noise=args.noise, seed=args.seed), DEFAULT_START)
    print(f"fitted E_a = {fit.model.E_a:.3f} meV, minimum at {fit.t_min:.1f} K, "
          f"E_a identifiable: {fit.ea_identifiable}")


if __name__ == "__main__":
    main()
