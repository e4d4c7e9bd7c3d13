"""Regenerate the synthetic data files shipped in nvespin/presets/data."""

from pathlib import Path

import numpy as np

from nvespin import synthetic
from nvespin.inference.couplings import synthetic_observations
from nvespin.inference.decoherence import REFERENCE_MODEL
from nvespin.io import write_csv
from nvespin.spincore import NucleusSpec, SpinSystem

OUT = Path(__file__).resolve().parents[1] / "src" / "nvespin" / "presets" / "data"


def main():
    d = synthetic.decay(1.0, 0.74, 1.45, noise=0.01, seed=0)
    write_csv(OUT / "decay_sample_C.csv", ["two_tau_us", "amplitude"], zip(d.two_tau, d.amplitude))

    peaks = synthetic.orientation_peaks((1, 1, 0), (2.0, 2.2, 0.0), noise_mT=0.05, seed=0)
    write_csv(OUT / "orientation_110.csv", ["label", "field_mT"], [(str(lab), b) for lab, b in peaks])

    template = SpinSystem.nv([NucleusSpec.nitrogen14()])
    rows = []
    for obs, (nominal, euler) in zip(
            synthetic_observations(template, synthetic.coupling_design(), jitter=0.01, seed=0),
            [((0, 0, 1), (8.0, 1.0, 0.0))] * 2 + [((1, 1, 0), (1.1, 2.1, 0.0))] * 4):
        for ms in sorted(obs.freqs):
            for f in obs.freqs[ms]:
                rows.append((*nominal, *euler, obs.field.magnitude, obs.selection.site,
                             obs.selection.manifold_pair.value, ms, f))
    write_csv(OUT / "couplings_peaks.csv",
              ["axis_x", "axis_y", "axis_z", "alpha_deg", "beta_deg", "gamma_deg", "field_mT", "site",
               "manifold_pair", "ms", "freq_MHz"], rows)

    t2 = synthetic.t2_curve(REFERENCE_MODEL, rel_noise=0.03, seed=0)
    write_csv(OUT / "t2_sample_B.csv", ["temperature_K", "T2_ms"], t2)
    print(f"wrote 4 files to {OUT}")


if __name__ == "__main__":
    main()
