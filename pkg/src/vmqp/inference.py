"""Fully Bayesian parameter learning for the circular regression model.

The parameter posterior is doubly intractable: the likelihood carries an
unknown normalizer. Each Metropolis step therefore draws a fictitious
full-space angle vector under the proposed parameters (an inner augmented
Gibbs chain) so that the normalizers cancel from the acceptance ratio.
Optionally, K annealed bridging levels refine the one-sample importance
estimate of the normalizer ratio; the bridging transitions reuse the two
existing full-space Cholesky factors via a double Gaussian augmentation,
so no per-level factorization is needed.

The learning setting is transductive: prediction locations are fixed at
fit time because the model is not closed under marginalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circular import as_generator, normalize_angle, sample_von_mises
from .errors import NumericalError
from .gibbs import Augmentation, gibbs_sweep, make_augmentation, DEFAULT_SLACK
from .kernels import GramMatrix, KernelSpec, build_gram, kernel_matrix
from .model import (
    ConditionalParams,
    ParamVector,
    PrecisionModel,
    build_precision,
    conditional_params,
    energy,
    full_state_params,
)

_LOG_HALF_NORMAL = 0.5 * math.log(2.0 / math.pi)


def _half_normal_logpdf(x: float, scale: float) -> float:
    if x < 0:
        return -math.inf
    return _LOG_HALF_NORMAL - math.log(scale) - 0.5 * (x / scale) ** 2


@dataclass(frozen=True)
class PriorSpec:
    """Half-normal priors on the squared scales and kappa; nu is uniform."""

    sigma2_scale: float = 1.0
    lengthscale2_scale: float = 1.0
    gradient2_scale: float = 1.0
    kappa_scale: float = 1.0

    def log_density(self, w: ParamVector) -> float:
        k = w.kernel
        if k.variance <= 0 or k.lengthscale <= 0 or w.concentration < 0:
            return -math.inf
        lp = _half_normal_logpdf(k.variance, self.sigma2_scale)
        lp += _half_normal_logpdf(k.lengthscale**2, self.lengthscale2_scale)
        if k.gradient_lengthscale is not None:
            if k.gradient_lengthscale <= 0:
                return -math.inf
            lp += _half_normal_logpdf(
                k.gradient_lengthscale**2, self.gradient2_scale
            )
        lp += _half_normal_logpdf(w.concentration, self.kappa_scale)
        lp -= math.log(2.0 * math.pi)  # uniform mean direction
        return lp


@dataclass(frozen=True)
class ProposalSpec:
    """Random-walk step standard deviations, one per parameter.

    The walk acts on (sigma2, lengthscale^2, gradient_lengthscale^2,
    kappa, nu); nu proposals are wrapped so the kernel is symmetric on
    the circle.
    """

    sigma2_step: float = 0.1
    lengthscale2_step: float = 0.1
    gradient2_step: float = 0.1
    kappa_step: float = 0.1
    nu_step: float = 0.3

    def __post_init__(self):
        for name in (
            "sigma2_step",
            "lengthscale2_step",
            "gradient2_step",
            "kappa_step",
            "nu_step",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class BridgeConfig:
    """Bridging configuration; levels == 0 means the plain double-MH step."""

    levels: int = 0
    inner_sweeps: int = 50

    def __post_init__(self):
        if self.levels < 0:
            raise ValueError("levels must be >= 0")
        if self.inner_sweeps < 1:
            raise ValueError("inner_sweeps must be >= 1")


KERNEL_BLOCK = ("sigma2", "lengthscale2", "gradient2")
MEAN_BLOCK = ("kappa", "nu")


def bridge_betas(levels: int) -> np.ndarray:
    """Annealing schedule beta_k = k / (K + 1) for k = 1..K."""
    return np.arange(1, levels + 1) / (levels + 1)


@dataclass(frozen=True)
class ParamModel:
    """Everything the samplers need for one parameter value.

    The full-space augmentation factor is cached here so repeated
    fictitious-sample chains and bridging ladders reuse it.
    """

    w: ParamVector
    locations: np.ndarray
    gram: GramMatrix
    precision: PrecisionModel
    full_aug: Augmentation

    @property
    def size(self) -> int:
        return self.precision.size

    def energy(self, phi) -> float:
        return energy(phi, self.w, self.precision)


def build_param_model(
    w: ParamVector, locations, n_latent: int, slack: float = DEFAULT_SLACK
) -> ParamModel:
    X = np.asarray(locations, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    gram = build_gram(w.kernel, X)
    pm = build_precision(gram, n_latent, X.shape[0] - n_latent)
    full_aug = make_augmentation(pm.matrix, slack)
    return ParamModel(w, X, gram, pm, full_aug)


def _param_dict(w: ParamVector) -> dict:
    k = w.kernel
    out = {
        "sigma2": k.variance,
        "lengthscale2": k.lengthscale**2,
        "kappa": w.concentration,
        "nu": w.mean_direction,
    }
    if k.gradient_lengthscale is not None:
        out["gradient2"] = k.gradient_lengthscale**2
    return out


def _from_param_dict(values: dict, template: ParamVector) -> ParamVector | None:
    """Rebuild a ParamVector; None when outside the prior support."""
    if values["sigma2"] <= 0 or values["lengthscale2"] <= 0 or values["kappa"] < 0:
        return None
    g2 = values.get("gradient2")
    if template.kernel.gradient_lengthscale is not None and (g2 is None or g2 <= 0):
        return None
    kernel = KernelSpec(
        template.kernel.family,
        values["sigma2"],
        math.sqrt(values["lengthscale2"]),
        math.sqrt(g2) if g2 is not None else None,
    )
    return ParamVector(
        kernel,
        values["kappa"],
        normalize_angle(values["nu"]),
        template.noise_concentration,
    )


def propose(
    w: ParamVector, proposals: ProposalSpec, block, rng
) -> ParamVector | None:
    """Random-walk proposal on the named block; None if out of support."""
    rng = as_generator(rng)
    values = _param_dict(w)
    steps = {
        "sigma2": proposals.sigma2_step,
        "lengthscale2": proposals.lengthscale2_step,
        "gradient2": proposals.gradient2_step,
        "kappa": proposals.kappa_step,
        "nu": proposals.nu_step,
    }
    for name in block:
        if name not in values:
            continue
        values[name] = values[name] + steps[name] * rng.standard_normal()
    return _from_param_dict(values, w)


def sample_fictitious(
    model: ParamModel, sweeps: int, init, rng
) -> np.ndarray:
    """Approximate full-space draw from exp(-U(.|w)) via Gibbs sweeps."""
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    rng = as_generator(rng)
    cp = full_state_params(model.precision, model.w)
    xi = np.array(init, dtype=float)
    if xi.shape != (model.size,):
        raise ValueError(f"init must have shape ({model.size},)")
    for _ in range(sweeps):
        xi = gibbs_sweep(xi, model.full_aug, cp, rng)
    return xi


def interp_log_f(
    xi, model_w: ParamModel, model_wp: ParamModel, beta: float
) -> float:
    """log of the bridging density f(.|w)^beta * f(.|w')^(1-beta)."""
    return -(beta * model_w.energy(xi) + (1.0 - beta) * model_wp.energy(xi))


def bridge_ladder(
    xi0: np.ndarray,
    model_w: ParamModel,
    model_wp: ParamModel,
    levels: int,
    rng,
):
    """Run the K annealed transitions and return the log-ratio estimate.

    At level k the interpolating density couples angles through
    beta_k * M_w + (1 - beta_k) * M_w'. Four Gaussian vectors with means
    sqrt(beta_k) * A_w * cos/sin and sqrt(1 - beta_k) * A_w' * cos/sin
    linearize both coupling terms at once, so each transition is a single
    product-von-Mises redraw and the two cached Cholesky factors serve
    every level. The returned estimate is
    sum_k [log f_{k+1}(xi_k) - log f_k(xi_k)], endpoints included, which
    telescopes to (1/(K+1)) * sum_k [U(xi_k|w') - U(xi_k|w)].
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    rng = as_generator(rng)
    d = model_w.size
    if model_wp.size != d:
        raise ValueError("models are defined over different location sets")
    w, wp = model_w.w, model_wp.w
    A_w, A_wp = model_w.full_aug.factor, model_wp.full_aug.factor
    ones = np.ones(d)
    xis = [np.array(xi0, dtype=float)]
    log_ratio = 0.0
    denom = levels + 1
    # k = 0 endpoint term (xi0 was drawn under w')
    log_ratio += (model_wp.energy(xis[0]) - model_w.energy(xis[0])) / denom
    xi = xis[0]
    for k in range(1, levels + 1):
        beta = k / denom
        rb, rbp = math.sqrt(beta), math.sqrt(1.0 - beta)
        c, s = np.cos(xi), np.sin(xi)
        eps = rng.standard_normal((4, d))
        y1 = rb * (A_w @ c) + eps[0]
        y2 = rb * (A_w @ s) + eps[1]
        y3 = rbp * (A_wp @ c) + eps[2]
        y4 = rbp * (A_wp @ s) + eps[3]
        alpha_c = (
            beta * w.concentration * math.cos(w.mean_direction)
            + (1.0 - beta) * wp.concentration * math.cos(wp.mean_direction)
        )
        alpha_s = (
            beta * w.concentration * math.sin(w.mean_direction)
            + (1.0 - beta) * wp.concentration * math.sin(wp.mean_direction)
        )
        kap_c = rb * (A_w.T @ y1) + rbp * (A_wp.T @ y3) + alpha_c * ones
        kap_s = rb * (A_w.T @ y2) + rbp * (A_wp.T @ y4) + alpha_s * ones
        conc = np.hypot(kap_c, kap_s)
        gamma = np.arctan2(kap_s, kap_c)
        xi = sample_von_mises(gamma, conc, rng)
        xis.append(xi)
        log_ratio += (model_wp.energy(xi) - model_w.energy(xi)) / denom
    return xis, float(log_ratio)


@dataclass(frozen=True)
class DmhResult:
    model: ParamModel
    accepted: bool
    xi: np.ndarray
    log_acceptance: float


def dmh_step(
    model: ParamModel,
    phi_full: np.ndarray,
    priors: PriorSpec,
    proposals: ProposalSpec,
    bridge: BridgeConfig,
    rng,
    xi_init: np.ndarray,
    block=None,
    slack: float = DEFAULT_SLACK,
) -> DmhResult:
    """One exchange move on the parameters given the current full state.

    The acceptance ratio uses only priors, proposal symmetry, the
    unnormalized density f at the current state and the fictitious-sample
    (or bridging-ladder) ratio; normalizing constants never appear.
    Proposals outside the prior support are rejected without touching the
    kernel. The inner chain starts from ``xi_init`` (persistent across
    outer iterations), and the accepted move hands back the final ladder
    state for the next step.
    """
    rng = as_generator(rng)
    if block is None:
        block = KERNEL_BLOCK + MEAN_BLOCK
    w = model.w
    wp = propose(w, proposals, block, rng)
    if wp is None:
        return DmhResult(model, False, xi_init, -math.inf)
    lp_w = priors.log_density(w)
    lp_wp = priors.log_density(wp)
    if not np.isfinite(lp_wp):
        return DmhResult(model, False, xi_init, -math.inf)
    try:
        model_wp = build_param_model(
            wp, model.locations, model.precision.n_latent, slack
        )
    except NumericalError:
        return DmhResult(model, False, xi_init, -math.inf)
    xi0 = sample_fictitious(model_wp, bridge.inner_sweeps, xi_init, rng)
    if bridge.levels > 0:
        xis, log_ratio = bridge_ladder(xi0, model, model_wp, bridge.levels, rng)
        xi_last = xis[-1]
    else:
        log_ratio = model_wp.energy(xi0) - model.energy(xi0)
        xi_last = xi0
    log_acc = (
        (lp_wp - lp_w)
        + (model.energy(phi_full) - model_wp.energy(phi_full))
        + log_ratio
    )
    if math.log(rng.uniform()) < log_acc:
        return DmhResult(model_wp, True, xi_last, log_acc)
    return DmhResult(model, False, xi_last, log_acc)


@dataclass(frozen=True)
class FitConfig:
    """Knobs of the block-Gibbs fit over (parameters, latent angles)."""

    n_iter: int
    burn_in: int
    thin: int = 1
    phi_sweeps: int = 5
    dmh_steps: int = 1
    priors: PriorSpec = field(default_factory=PriorSpec)
    proposals: ProposalSpec = field(default_factory=ProposalSpec)
    bridge: BridgeConfig = field(default_factory=BridgeConfig)
    learn_mean: bool = True
    slack: float = DEFAULT_SLACK

    def __post_init__(self):
        if not (self.n_iter > self.burn_in >= 0):
            raise ValueError("need n_iter > burn_in >= 0")
        if self.thin < 1 or self.phi_sweeps < 0 or self.dmh_steps < 0:
            raise ValueError("invalid fit configuration")


@dataclass
class FitOutput:
    param_names: tuple
    param_trace: np.ndarray  # (n_retained, len(param_names))
    accepted_trace: np.ndarray  # (n_retained,) 0/1: any block accepted
    phi_samples: np.ndarray  # (n_retained, m) latent angles at test locations
    accept_rates: dict


def block_gibbs_fit(
    theta,
    train_locations,
    test_locations,
    init_w: ParamVector,
    config: FitConfig,
    rng,
) -> FitOutput:
    """Alternate latent-angle sweeps with exchange moves on the parameters.

    Transductive by construction: the Gram matrix is built over the test
    locations (first) and training locations (last) together, and the
    parameter moves see the full state [phi, theta]. With noisy
    observations (chi present) the latent state spans all locations and
    the data enter through per-coordinate observation pulls.
    """
    rng = as_generator(rng)
    theta = np.asarray(theta, dtype=float)
    train = np.atleast_2d(np.asarray(train_locations, dtype=float))
    test = np.asarray(test_locations, dtype=float)
    if test.ndim == 1:
        test = test.reshape(-1, train.shape[1]) if test.size else test.reshape(0, train.shape[1])
    m = test.shape[0]
    locations = np.vstack([test, train]) if m else train
    model = build_param_model(init_w, locations, m, config.slack)
    d = model.size
    noisy = init_w.noise_concentration is not None

    blocks = [("kernel", KERNEL_BLOCK)]
    if config.learn_mean:
        blocks.append(("mean", MEAN_BLOCK))

    def latent_setup(mdl):
        if noisy:
            cp = full_state_params(mdl.precision, mdl.w, theta)
            return cp, mdl.full_aug
        cp = conditional_params(mdl.precision, theta, mdl.w)
        if m == 0:
            return cp, None
        return cp, make_augmentation(cp.coupling, config.slack)

    cp, cp_aug = latent_setup(model)
    n_lat = d if noisy else m
    phi = sample_von_mises(
        init_w.mean_direction,
        init_w.concentration * np.ones(n_lat),
        rng,
    )
    xi = sample_von_mises(0.0, np.zeros(d), rng)

    names = tuple(_param_dict(init_w).keys())
    rows, accepted_rows, phi_rows = [], [], []
    proposals = {name: 0 for name, _ in blocks}
    accepts = {name: 0 for name, _ in blocks}
    for t in range(config.n_iter):
        if n_lat:
            for _ in range(config.phi_sweeps):
                phi = gibbs_sweep(phi, cp_aug, cp, rng)
        phi_full = phi if noisy else np.concatenate([phi, theta])
        accepted_any = False
        for _ in range(config.dmh_steps):
            for name, block in blocks:
                res = dmh_step(
                    model,
                    phi_full,
                    config.priors,
                    config.proposals,
                    config.bridge,
                    rng,
                    xi,
                    block=block,
                    slack=config.slack,
                )
                proposals[name] += 1
                xi = res.xi
                if res.accepted:
                    accepts[name] += 1
                    accepted_any = True
                    model = res.model
                    cp, cp_aug = latent_setup(model)
        if t >= config.burn_in and (t - config.burn_in) % config.thin == 0:
            values = _param_dict(model.w)
            rows.append([values[nm] for nm in names])
            accepted_rows.append(int(accepted_any))
            phi_rows.append(phi[:m].copy())
    rates = {
        name: (accepts[name] / proposals[name] if proposals[name] else 0.0)
        for name, _ in blocks
    }
    return FitOutput(
        names,
        np.array(rows),
        np.array(accepted_rows),
        np.array(phi_rows),
        rates,
    )


def _kernel_derivatives(w: ParamVector, locations: np.ndarray) -> dict:
    """dK/dp for each kernel parameter, jitter excluded."""
    K = kernel_matrix(w.kernel, locations, locations)
    spec = w.kernel
    X = locations
    out = {"sigma2": K / spec.variance}
    if spec.family == "gaussian":
        diff = X[:, None, :] - X[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        out["lengthscale"] = K * d2 / spec.lengthscale**3
    elif spec.family == "exponential":
        diff = X[:, None, :] - X[None, :, :]
        d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        out["lengthscale"] = K * d / spec.lengthscale**2
    else:
        diff = X[:, None, :-1] - X[None, :, :-1]
        da2 = np.einsum("ijk,ijk->ij", diff, diff)
        ds2 = (X[:, -1][:, None] - X[None, :, -1]) ** 2
        out["lengthscale"] = K * da2 / spec.lengthscale**3
        out["gradient_lengthscale"] = K * ds2 / spec.gradient_lengthscale**3
    return out


def gradient_names(w: ParamVector) -> tuple:
    names = ["sigma2", "lengthscale"]
    if w.kernel.family == "anisotropic_gaussian":
        names.append("gradient_lengthscale")
    names += ["kappa", "nu"]
    return tuple(names)


def energy_gradient(phi, model: ParamModel) -> np.ndarray:
    """Analytic gradient of U(varphi|w) in the parameters.

    Kernel components use dM = -M dK M, contracted against the angle
    cosine matrix through two matrix-vector products per parameter.
    """
    phi = np.asarray(phi, dtype=float)
    w = model.w
    M = model.precision.matrix
    c, s = np.cos(phi), np.sin(phi)
    Mc, Ms = M @ c, M @ s
    derivs = _kernel_derivatives(w, model.locations)
    grad = []
    for name in gradient_names(w):
        if name in derivs:
            dK = derivs[name]
            grad.append(-0.5 * (Mc @ dK @ Mc + Ms @ dK @ Ms))
        elif name == "kappa":
            grad.append(-np.sum(np.cos(phi - w.mean_direction)))
        else:  # nu
            grad.append(-w.concentration * np.sum(np.sin(phi - w.mean_direction)))
    return np.array(grad)


def cd_gradient(
    theta,
    model: ParamModel,
    mc_samples: int,
    rng,
    sweeps_between: int = 5,
    burn_sweeps: int = 50,
) -> np.ndarray:
    """Contrastive-divergence estimate of the marginal-likelihood gradient.

    Difference of the energy-gradient expectation under the full-space
    distribution and under the latent conditional given the data. Shipped
    as a diagnostic: with few parameters and many latent coordinates the
    estimate is too noisy to drive point estimation.
    """
    if mc_samples < 1:
        raise ValueError("mc_samples must be >= 1")
    rng = as_generator(rng)
    theta = np.asarray(theta, dtype=float)
    pm = model.precision
    m = pm.n_latent

    # Full-space chain over all d angles.
    cp_full = full_state_params(pm, model.w)
    state = sample_von_mises(0.0, np.zeros(pm.size), rng)
    for _ in range(burn_sweeps):
        state = gibbs_sweep(state, model.full_aug, cp_full, rng)
    g_full = np.zeros(len(gradient_names(model.w)))
    for _ in range(mc_samples):
        for _ in range(sweeps_between):
            state = gibbs_sweep(state, model.full_aug, cp_full, rng)
        g_full += energy_gradient(state, model)
    g_full /= mc_samples

    # Conditional chain over the latent angles (empty when m == 0).
    if m > 0:
        cp = conditional_params(pm, theta, model.w)
        aug = make_augmentation(cp.coupling, DEFAULT_SLACK)
        lat = sample_von_mises(0.0, np.zeros(m), rng)
        for _ in range(burn_sweeps):
            lat = gibbs_sweep(lat, aug, cp, rng)
        g_cond = np.zeros_like(g_full)
        for _ in range(mc_samples):
            for _ in range(sweeps_between):
                lat = gibbs_sweep(lat, aug, cp, rng)
            g_cond += energy_gradient(np.concatenate([lat, theta]), model)
        g_cond /= mc_samples
    else:
        g_cond = energy_gradient(theta, model)

    return g_full - g_cond
