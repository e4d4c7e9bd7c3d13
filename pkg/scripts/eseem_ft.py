"""14N ESEEM trace and its processed cosine FT for one line near [001].

Lists the positive peaks and the additive triples found among them.
"""

import argparse
from pathlib import Path

from nvespin.eseem import default_tau_grid, eseem_time_domain, modulation_depth, nuclear_frequencies
from nvespin.io import write_csv
from nvespin.sigproc import check_additive_relation, cosine_ft, phase_correct_first_order, pick_peaks
from nvespin.spincore import NucleusSpec, SpinSystem
from nvespin.synthetic import resonant_setup


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--site", type=int, default=1)
    ap.add_argument("--pair", default="minus_zero", choices=["minus_zero", "zero_plus"])
    ap.add_argument("--euler", type=float, nargs=3, default=(8.0, 1.0, 0.0))
    ap.add_argument("--out", type=Path, default=Path("out"))
    args = ap.parse_args(argv)

    nv = SpinSystem.nv([NucleusSpec.nitrogen14()])
    fv, sel = resonant_setup((0, 0, 1), tuple(args.euler), args.site, args.pair)
    tau = default_tau_grid(points=8192)
    tr = eseem_time_domain(nv, fv, sel, tau)
    spec = phase_correct_first_order(cosine_ft(tr, 0.5, 8, "hamming"))
    peaks = pick_peaks(spec, 0.12, 0.2, 20.0)

    print(f"B = {fv.magnitude:.2f} mT, depth = {modulation_depth(tr).depth:.3f}")
    nf = nuclear_frequencies(nv, fv, sel)
    for ms in nf.manifolds:
        print(f"m_S={ms:+d} frequencies (MHz): " + ", ".join(f"{f:.3f}" for f in nf[ms]))
    print("positive peaks (MHz): " + ", ".join(f"{f:.3f}" for f in peaks.positive().freqs))
    for t in check_additive_relation(peaks.positive(), 0.02):
        print("triple:", ", ".join(f"{f:.3f}" for f in t.freqs))
    args.out.mkdir(parents=True, exist_ok=True)
    write_csv(args.out / "eseem_trace.csv", ["tau_us", "V"], zip(tr.tau, tr.v))
    write_csv(args.out / "eseem_ft.csv", ["freq_MHz", "amplitude"], zip(spec.freq, spec.amplitude))


if __name__ == "__main__":
    main()
