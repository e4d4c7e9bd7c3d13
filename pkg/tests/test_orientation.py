import numpy as np
import pytest

from nvespin.errors import UnderDetermined
from nvespin.inference import fit_orientation, predict_peaks
from nvespin.spincore import EulerAngles, SpinSystem, rotate_field
from nvespin.synthetic import orientation_peaks, unit


@pytest.fixture(scope="module")
def nv():
    return SpinSystem.nv()


def test_predict_matches_generator(nv):
    peaks = orientation_peaks((1, 1, 0), (2, 2.2, 0))
    pred = predict_peaks([lab for lab, _ in peaks], nv, 9.6, (1, 1, 0), EulerAngles(2, 2.2, 0),
                         [b for _, b in peaks])
    assert np.allclose(pred, [b for _, b in peaks], atol=1e-4)


def test_identity_orientation(nv):
    fit = fit_orientation(orientation_peaks((1, 1, 0), (0, 0, 0)), nv, 9.6, (1, 1, 0))
    assert fit.direction_error(unit((1, 1, 0))) < 0.05
    assert fit.euler.beta < 0.05
    assert fit.residual_rms < 1e-3


@pytest.mark.parametrize("nominal,euler", [((1, 1, 0), (2, 2.2, 0)), ((0, 0, 1), (8, 1, 0))])
def test_noisy_round_trip(nv, nominal, euler):
    true = rotate_field(unit(nominal), EulerAngles(*euler))
    fit = fit_orientation(orientation_peaks(nominal, euler, noise_mT=0.05, seed=7), nv, 9.6, nominal)
    assert fit.direction_error(true) < 0.1
    assert 0 <= fit.euler.beta <= 90
    assert np.isfinite(fit.residual_rms)
    assert fit.residual_rms < 0.1
    assert len(fit.starts) >= 8
    assert all(v > 0 for k, v in fit.result.uncertainties.items() if k != "gamma_deg")


def test_string_labels_accepted(nv):
    peaks = [(str(lab), b) for lab, b in orientation_peaks((1, 1, 0), (2, 2.2, 0))]
    fit = fit_orientation(peaks, nv, 9.6, (1, 1, 0))
    assert fit.residual_rms < 1e-3


def test_too_few_peaks(nv):
    with pytest.raises(UnderDetermined):
        fit_orientation(orientation_peaks((1, 1, 0), (2, 2.2, 0))[:3], nv, 9.6, (1, 1, 0))
