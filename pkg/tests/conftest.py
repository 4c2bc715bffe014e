import numpy as np
import pytest

from vmqp.circular import sample_von_mises
from vmqp.inference import build_param_model, sample_fictitious
from vmqp.kernels import KernelSpec
from vmqp.model import ParamVector

QUAD_GRID = np.linspace(-np.pi, np.pi, 8193)[:-1]


def bessel_ratio(kappa: float) -> float:
    """I1(kappa) / I0(kappa) by numerical quadrature (independent oracle)."""
    weights = np.exp(kappa * np.cos(QUAD_GRID))
    return float(
        np.trapezoid(np.cos(QUAD_GRID) * weights, QUAD_GRID)
        / np.trapezoid(weights, QUAD_GRID)
    )


def log_bessel_i0(kappa: float) -> float:
    """log I0(kappa) by numerical quadrature."""
    return float(
        np.log(np.trapezoid(np.exp(kappa * np.cos(QUAD_GRID)), QUAD_GRID) / (2 * np.pi))
    )


def synthetic_prior_draw(seed, n_total=40, n_test=10, sweeps=3000,
                         w=None, span=4.0):
    """1D synthetic dataset drawn from the model itself.

    Returns (locations, model, truth_at_test, observed_angles); locations
    are ordered [test, train]. The exponential kernel keeps the Gram
    matrix well conditioned at random 1D locations.
    """
    rng = np.random.default_rng(seed)
    if w is None:
        w = ParamVector(KernelSpec("exponential", 1.0, 1.0), 0.5, 0.3)
    locations = rng.uniform(0.0, span, size=(n_total, 1))
    model = build_param_model(w, locations, n_test)
    phi = sample_von_mises(0.0, np.zeros(n_total), rng)
    phi = sample_fictitious(model, sweeps, phi, rng)
    return locations, model, phi[:n_test], phi[n_test:], rng


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
