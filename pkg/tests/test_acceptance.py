"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) for the summary alone,
or through pytest, where the lines are repeated in the terminal summary.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import jacobi_eigvalsh  # noqa: E402

from nvespin import constants as C  # noqa: E402
from nvespin.config import load_system_doc, system_from_doc  # noqa: E402
from nvespin.eseem import (  # noqa: E402
    cancellation_scan,
    damped_ensemble_trace,
    default_tau_grid,
    eseem_time_domain,
    modulation_depth,
    nuclear_frequencies,
)
from nvespin.inference import (  # noqa: E402
    fit_nitrogen_couplings,
    fit_orientation,
    fit_t2_temperature,
    flip_flop_suppression,
    larmor_frequency,
    mean_dipolar_coupling,
    synthetic_observations,
)
from nvespin.inference.decoherence import DEFAULT_START, REFERENCE_MODEL, ppm_to_density  # noqa: E402
from nvespin.sigproc import (  # noqa: E402
    check_additive_relation,
    cosine_ft,
    detection_bandwidth_filter,
    fit_stretched_exponential,
    phase_correct_first_order,
    pick_peaks,
)
from nvespin.spectra import PopulationSet, stick_spectrum  # noqa: E402
from nvespin.spincore import EulerAngles, NucleusSpec, SpinSystem, eigensolve, rotate_field  # noqa: E402
from nvespin.synthetic import (  # noqa: E402
    coupling_design,
    decay,
    orientation_peaks,
    resonant_setup,
    t2_curve,
    unit,
)

REPORT = []
SEEDS = range(20)
MIS_001 = ((0, 0, 1), (8.0, 1.0, 0.0))
MIS_110 = ((1, 1, 0), (1.1, 2.1, 0.0))
POLARIZED = {1: PopulationSet(0.2, 0.6, 0.2), 2: PopulationSet(0.2, 0.6, 0.2),
             3: PopulationSet(0.4, 0.2, 0.4), 4: PopulationSet(0.4, 0.2, 0.4)}


def report(n, ok, detail):
    line = f"[AC {n:>2}] {'PASS' if ok else 'FAIL'}  {detail}"
    REPORT.append(line)
    print(line)
    return ok


@pytest.fixture(scope="module")
def nv14():
    return SpinSystem.nv([NucleusSpec.nitrogen14()])


def _processed_peaks(trace, floor=0.12, dead_time=0.5):
    spec = phase_correct_first_order(cosine_ft(trace, dead_time, 8, "hamming"))
    return pick_peaks(spec, floor, 0.2, 20.0)


def test_ac01_esr_positions():
    t0 = time.perf_counter()
    spec = stick_spectrum(SpinSystem.nv(), 9.6, (1, 1, 0), EulerAngles(2, 2.2, 0), POLARIZED, (200, 500))
    dt = time.perf_counter() - t0
    fields = {str(ln.label): ln.field for ln in spec.lines}
    s2p = fields.get("S2+", np.nan)
    ok = len(spec.lines) == 8 and abs(s2p - 390.0) < 5 and dt < 5
    assert report(1, ok, f"{len(spec.lines)} lines, S2+ at {s2p:.2f} mT (|d| < 5), {dt:.2f} s (< 5 s)")


def test_ac02_c3v_suppression(nv14):
    tau = default_tau_grid(points=5001)  # 0 .. 20 us
    worst = 0.0
    t0 = time.perf_counter()
    for pair in ("minus_zero", "zero_plus"):
        fv, sel = resonant_setup((1, 1, 1), (0, 0, 0), 1, pair)
        worst = max(worst, float(np.max(np.abs(eseem_time_domain(nv14, fv, sel, tau).v - 1))))
    dt = time.perf_counter() - t0
    ok = worst < 1e-6 and dt < 1
    assert report(2, ok, f"max|V-1| = {worst:.2e} (< 1e-6) on S1+ and S1-, {dt:.2f} s (< 1 s)")


def test_ac03_modulation_depth_ordering(nv14):
    # depths after the 100 ns detection integrator; unfiltered depths in brackets
    tau = default_tau_grid()
    cases = [("[001] T-T0", MIS_001, (1, 2, 3, 4), "minus_zero", (0.85, np.inf)),
             ("[001] T0T+", MIS_001, (1, 2, 3, 4), "zero_plus", (0.1, 0.6)),
             ("[110] T-T0 90deg", MIS_110, (2, 3), "minus_zero", (0.1, 0.6)),
             ("[110] T0T+ 35deg", MIS_110, (1, 4), "zero_plus", (0.1, 0.6))]
    ok = True
    parts = []
    for name, (nominal, euler), sites, pair, (lo, hi) in cases:
        vals = []
        for site in sites:
            fv, sel = resonant_setup(nominal, euler, site, pair)
            tr = eseem_time_domain(nv14, fv, sel, tau)
            vals.append((modulation_depth(detection_bandwidth_filter(tr, 100.0)).depth,
                         modulation_depth(tr).depth))
        filt = [v[0] for v in vals]
        ok &= all(lo <= d <= hi for d in filt)
        parts.append(f"{name} {min(filt):.2f}-{max(filt):.2f} [{min(v[1] for v in vals):.2f}-"
                     f"{max(v[1] for v in vals):.2f}]")
    assert report(3, ok, "; ".join(parts))


def test_ac04_additive_triples(nv14):
    tau = default_tau_grid(points=8192)
    ok = True
    parts = []
    for site in (1, 2, 3, 4):
        for pair in ("minus_zero", "zero_plus"):
            fv, sel = resonant_setup(*MIS_001, site, pair)
            peaks = _processed_peaks(eseem_time_domain(nv14, fv, sel, tau)).positive()
            triples = check_additive_relation(peaks, 0.02)
            nf = nuclear_frequencies(nv14, fv, sel)
            owners = sorted(ms for t in triples for ms in nf.manifolds
                            if np.allclose(sorted(t.freqs), nf[ms], atol=0.05))
            good = len(triples) == 2 and owners == sorted(nf.manifolds)
            ok &= good
            parts.append(len(triples))
    # 90-degree sites at [110]: a single harmonic per manifold, so no triple
    zero = []
    for site in (2, 3):
        for pair in ("minus_zero", "zero_plus"):
            fv, sel = resonant_setup(*MIS_110, site, pair)
            peaks = _processed_peaks(eseem_time_domain(nv14, fv, sel, tau)).positive()
            zero.append(len(check_additive_relation(peaks, 0.02)))
    ok &= all(z == 0 for z in zero)
    assert report(4, ok, f"[001] triples per trace {parts} (2 each, one per manifold); "
                         f"[110] 90deg sites {zero} (0 each)")


def test_ac05_carbon_peak_algebra():
    tau = default_tau_grid(points=8192)
    native_bin = 1.0 / (tau[-1] + tau[1])
    ok = True
    parts = []
    for name, a in (("nv-14N-13C-siteG", 2.56), ("nv-14N-13C-siteD", -6.70)):
        sys_ = system_from_doc(load_system_doc(name))
        fv, sel = resonant_setup((1, 1, 1), (0, 0, 0), 1, "minus_zero")  # S1-, m_S = -1 and 0
        peaks = _processed_peaks(eseem_time_domain(sys_, fv, sel, tau), floor=0.2).positive()
        nu = larmor_frequency(fv.magnitude)
        d0 = float(np.min(np.abs(peaks.freqs - nu)))
        ds = float(np.min(np.abs(peaks.freqs - abs(nu + a))))
        ok &= d0 <= native_bin and ds < 0.05
        parts.append(f"A={a:+.2f}: |nu0-nuI|={d0:.4f} (<= {native_bin:.4f}), |nu- - |nuI+A||={ds:.4f} (< 0.05)")
    assert report(5, ok, "; ".join(parts))


def test_ac06_coupling_round_trip(nv14):
    design = coupling_design()
    true = np.array([C.N14_A_PAR, C.N14_A_PERP, C.N14_P_PAR])
    tol = np.array([0.02, 0.03, 0.02])
    worst = np.zeros(3)
    for seed in SEEDS:
        fit = fit_nitrogen_couplings(synthetic_observations(nv14, design, jitter=0.01, seed=seed), nv14)
        worst = np.maximum(worst, np.abs(np.array(fit.values) - true))
    ok = bool(np.all(worst < tol))
    assert report(6, ok, f"worst |error| over 20 seeds (A_par, A_perp, P_par) = "
                         f"({worst[0]:.4f}, {worst[1]:.4f}, {worst[2]:.4f}) MHz, limits (0.02, 0.03, 0.02)")


def test_ac07_decay_round_trip():
    errs = []
    for seed in SEEDS:
        fit = fit_stretched_exponential(decay(1.0, 0.74, 1.45, 0.01, seed))
        errs.append((abs(fit.T2 / 0.74 - 1), abs(fit.n / 1.45 - 1)))
    errs = np.array(errs)
    ok = bool(np.all(errs < 0.02))
    assert report(7, ok, f"worst relative error over 20 seeds: T2 {errs[:, 0].max():.2%}, "
                         f"n {errs[:, 1].max():.2%} (< 2%)")


def test_ac08_orientation_round_trip():
    nv = SpinSystem.nv()
    worst, sigma = {}, {}
    for nominal, euler in (((1, 1, 0), (2.0, 2.2, 0.0)), MIS_001):
        true = rotate_field(unit(nominal), EulerAngles(*euler))
        fits = [fit_orientation(orientation_peaks(nominal, euler, noise_mT=0.05, seed=s), nv, 9.6, nominal)
                for s in SEEDS]
        worst[euler] = max(f.direction_error(true) for f in fits)
        # statistical floor: the fit's own 1-sigma on alpha, which moves the direction one-to-one
        sigma[euler] = float(np.median([f.result.uncertainties["alpha_deg"] for f in fits]))
    ok = all(v < 0.1 for v in worst.values())
    assert report(8, ok, "worst direction error over 20 seeds at 0.05 mT noise: "
                  + ", ".join(f"{e} -> {worst[e]:.3f} deg (median sigma_alpha {sigma[e]:.3f})" for e in worst)
                  + " (< 0.1 deg)")


def test_ac09_cancellation_scan(nv14):
    tau = default_tau_grid()
    d = rotate_field(unit(MIS_001[0]), EulerAngles(*MIS_001[1]))
    _, best = cancellation_scan(nv14, d, resonant_setup(*MIS_001, 1, "minus_zero")[1],
                                np.arange(100.0, 601.0, 10.0), tau)
    # distant 13C: purely dipolar tensor with A_par = 0.05 MHz at 45 deg to the field
    far = SpinSystem.nv([NucleusSpec.carbon13(0.05, -0.025, (1, 0, 1))])
    rows, _ = cancellation_scan(far, (0, 0, 1), resonant_setup(*MIS_001, 1, "minus_zero")[1],
                                np.arange(280.0, 401.0, 10.0), tau)
    far_max = max(dep for _, dep in rows)
    ok = 290 <= best[0] <= 410 and far_max < 0.01
    assert report(9, ok, f"T- argmax at {best[0]:.0f} mT (290-410); A=0.05 MHz max depth {far_max:.1e} (< 0.01)")


def test_ac10_fluctuator_model():
    temps = np.geomspace(2, 300, 400)
    t2 = REFERENCE_MODEL.t2(temps)
    interior_minima = np.flatnonzero((t2[1:-1] < t2[:-2]) & (t2[1:-1] < t2[2:])) + 1
    t_min = temps[interior_minima[0]] if interior_minima.size else np.nan
    reduction = 1 - t2.min() / REFERENCE_MODEL.T2_bath
    fit = fit_t2_temperature(t2_curve(REFERENCE_MODEL, rel_noise=0.03, seed=0), DEFAULT_START)
    ea_err = abs(fit.model.E_a / 2.5 - 1)
    # statistical coverage over 20 seeds, reported alongside
    zs, eas = [], []
    for seed in SEEDS:
        f = fit_t2_temperature(t2_curve(REFERENCE_MODEL, rel_noise=0.03, seed=seed), DEFAULT_START)
        eas.append(f.model.E_a)
        zs.append((f.model.E_a - 2.5) / f.result.uncertainties["E_a_meV"])
    ok = (interior_minima.size == 1 and 5 <= t_min <= 25 and reduction >= 0.25 and ea_err < 0.15
          and max(abs(z) for z in zs) < 3 and abs(np.median(eas) / 2.5 - 1) < 0.15)
    assert report(10, ok, f"single minimum at {t_min:.1f} K, reduction {reduction:.0%} (>= 25%); "
                          f"fitted E_a {fit.model.E_a:.3f} meV ({ea_err:.1%} < 15%); 20 seeds: "
                          f"median {np.median(eas):.3f} meV, max |z| {max(abs(z) for z in zs):.2f} (< 3)")


def test_ac11_bath_arithmetic():
    frac, t2, base = flip_flop_suppression(1.0, 300.0, 0.2)
    nu = mean_dipolar_coupling(ppm_to_density(0.1))
    ok = frac == 1 / 300 and t2 == 60.0 and 1 / 3 <= nu <= 3
    assert report(11, ok, f"flip-flop ({frac!r}, {t2!r} ms) exact; dipolar coupling at 0.1 ppm {nu:.3f} kHz "
                          f"(within x3 of 1 kHz)")


def test_ac12_eigensolver_oracle():
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 19))
        x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        h = 0.5 * (x + x.conj().T)
        ref = jacobi_eigvalsh(h)
        worst = max(worst, float(np.max(np.abs(eigensolve(h).eigenvalues - ref) / np.abs(ref))))
    ok = worst < 1e-6
    assert report(12, ok, f"100 random Hermitian matrices (dim 2-18): worst relative eigenvalue error "
                          f"{worst:.1e} (< 1e-6)")


def _envelope(sys_, fv, sel, frac_a, frac_q, n_samples=500):
    # modulation amplitude near 200 us relative to the undamped trace
    tau = np.arange(195.0, 200.0, 0.004)
    ref = eseem_time_domain(sys_, fv, sel, tau).v
    damped = damped_ensemble_trace(sys_, fv, sel, tau, frac_a, frac_q, n_samples, seed=13).v
    return float(np.std(damped) / np.std(ref))


def test_ac13_damping_bound(nv14):
    fv, sel = resonant_setup(*MIS_001, 1, "minus_zero")
    narrow = _envelope(nv14, fv, sel, 0.002, 0.01)
    wide = _envelope(nv14, fv, sel, 0.05, 0.05)
    ok = narrow > 0.7 and wide < np.exp(-1)
    assert report(13, ok, f"envelope at 200 us: (0.2%, 1%) -> {narrow:.3f} (> 0.7); "
                          f"(5%, 5%) -> {wide:.3f} (< 1/e)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
