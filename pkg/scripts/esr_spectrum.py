"""Eight-line ESR spectrum near [110] with a small misorientation.

Prints the labelled resonance fields and writes the broadened trace to CSV.
"""

import argparse
from pathlib import Path

import numpy as np

from nvespin.io import write_csv
from nvespin.spectra import PopulationSet, broaden, stick_spectrum
from nvespin.spincore import EulerAngles, SpinSystem

# optically pumped populations (p+1, p0, p-1) for sites at 35 and 90 degrees
POPS = {1: PopulationSet(0.2, 0.6, 0.2), 2: PopulationSet(0.4, 0.2, 0.4),
        3: PopulationSet(0.4, 0.2, 0.4), 4: PopulationSet(0.2, 0.6, 0.2)}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--euler", type=float, nargs=3, default=(2.0, 2.2, 0.0))
    ap.add_argument("--mw", type=float, default=9.6, help="microwave frequency (GHz)")
    ap.add_argument("--out", type=Path, default=Path("out/esr_spectrum.csv"))
    args = ap.parse_args(argv)

    spec = stick_spectrum(SpinSystem.nv(), args.mw, (1, 1, 0), EulerAngles(*args.euler), POPS, (200, 500))
    print(f"{'label':>6} {'B (mT)':>9} {'signed':>8}")
    for ln in spec.lines:
        print(f"{str(ln.label):>6} {ln.field:9.3f} {ln.signed_amplitude:+8.3f}")
    b, y = broaden(spec, 1.0, grid=np.linspace(200, 500, 3001))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(args.out, ["field_mT", "intensity"], zip(b, y))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
