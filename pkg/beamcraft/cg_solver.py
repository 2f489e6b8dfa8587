"""
Beamformer weight solvers.

cg_solve minimizes f(w) = 1/2 w^H R w + Re(w^H a) with Polak-Ribiere-Polyak
conjugate gradients and exact line search, touching R only through the INC
model's implicit product. The minimizer -R^-1 a is then rescaled to the
distortionless form w^H a = 1. direct_weights and smi_weights are the
closed-form references.
"""
from dataclasses import dataclass, field
from typing import List, Optional
import numpy as np
import scipy.linalg
from numpy.typing import NDArray
from .inc_builder import IncModel
from .spectrum import CovarianceMatrix, cholesky_factor
from .errors import ConfigurationError, SolverDivergedError
from .debug import Debug as debug
from . import utils


@dataclass
class OperationCounter:
    """Complex multiply-accumulate counts, by kind."""
    counts: dict = field(default_factory=dict)

    def add(self, kind, macs):
        self.counts[kind] = self.counts.get(kind, 0) + int(macs)

    @property
    def total(self):
        return sum(self.counts.values())


@dataclass(frozen=True)
class BeamformerWeights:
    w: NDArray[np.complex128]
    normalization: str
    method: str
    iterations: int = 0

    def distortion(self, a):
        return abs(np.vdot(self.w, a) - 1)


@dataclass
class CgState:
    w_t: NDArray[np.complex128]
    g_t: NDArray[np.complex128]
    d_t: NDArray[np.complex128]
    mu_t: float = 0.0
    beta_t: float = 0.0
    iter: int = 0
    grad_norm: List[float] = field(default_factory=list)
    cost: List[float] = field(default_factory=list)


def distortionless(w, a):
    """w scaled so that w^H a = 1."""
    gain = np.vdot(w, a)
    if gain == 0:
        raise ConfigurationError('Weights are orthogonal to the steering vector')
    return w / np.conj(gain)


def cost(inc: IncModel, w, a_hat):
    return 0.5 * np.real(np.vdot(w, inc.matvec(w))) + np.real(np.vdot(w, a_hat))


def prp_beta(g_new, g_old):
    """Polak-Ribiere-Polyak coefficient Re(g_new^H (g_new - g_old)) / ||g_old||^2."""
    return np.real(np.vdot(g_new, g_new - g_old)) / np.real(np.vdot(g_old, g_old))


def _check_finite(state, *values):
    if not all(np.all(np.isfinite(v)) for v in values):
        raise SolverDivergedError(f'Non-finite values at iteration {state.iter}', state=state)


def cg_solve(inc: IncModel, a_hat, tol=None, max_iter=None, counter: Optional[OperationCounter] = None):
    """Minimize 1/2 w^H R w + Re(w^H a_hat) from w_0 = ones.

    Args:
        inc: Implicit INC model, positive definite.
        a_hat: Estimated SOI steering vector.
        tol: Stop once ||grad|| <= tol. Defaults to 1e-6 ||a_hat||.
        max_iter: Iteration cap. Defaults to 2M.
        counter: Optional OperationCounter charged with every product.

    Returns:
        Distortionless BeamformerWeights and the final CgState with the
        cost and gradient-norm history.
    """
    a_hat = np.asarray(a_hat, dtype=complex)
    norm = np.linalg.norm(a_hat)
    if norm == 0:
        raise ConfigurationError('Steering estimate is zero')
    m = inc.m
    tol = 1e-6 * norm if tol is None else tol
    max_iter = 2 * m if max_iter is None else int(max_iter)
    charge = (lambda macs: counter.add('inner', macs)) if counter is not None else (lambda macs: None)

    w = np.ones(m, dtype=complex)
    g = inc.matvec(w, counter) + a_hat
    d = -g
    state = CgState(w_t=w, g_t=g, d_t=d)
    state.grad_norm.append(float(np.linalg.norm(g)))
    state.cost.append(float(cost(inc, w, a_hat)))
    _check_finite(state, g)

    while state.iter < max_iter and state.grad_norm[-1] > tol:
        rd = inc.matvec(d, counter)
        curvature = np.real(np.vdot(d, rd))
        _check_finite(state, curvature)
        if curvature <= 0:
            debug.log_warning(f'Non-positive curvature at iteration <{state.iter}>, stopping')
            break
        mu = -np.real(np.vdot(d, g)) / curvature
        charge(2 * m)
        _check_finite(state, mu)
        w = w + mu * d
        g_new = inc.matvec(w, counter) + a_hat
        beta = prp_beta(g_new, g)
        charge(2 * m)
        d = -g_new + beta * d
        g = g_new
        state.w_t, state.g_t, state.d_t = w, g, d
        state.mu_t, state.beta_t = float(mu), float(beta)
        state.iter += 1
        _check_finite(state, w, g, d)
        state.grad_norm.append(float(np.linalg.norm(g)))
        state.cost.append(float(cost(inc, w, a_hat)))

    if state.grad_norm[-1] > tol:
        debug.log_warning(f'CG stopped at <{state.iter}> iterations, |g| = <{state.grad_norm[-1]:.3e}>')
    weights = BeamformerWeights(w=distortionless(w, a_hat), normalization='distortionless',
                                method='cmr-isps', iterations=state.iter)
    return weights, state


def _hermitian_solve(values, b):
    return scipy.linalg.cho_solve((cholesky_factor(values), True), b)


def direct_weights(inc: IncModel, a_hat, counter: Optional[OperationCounter] = None) -> BeamformerWeights:
    """w = R^-1 a_hat / (a_hat^H R^-1 a_hat) on the materialized INC."""
    a_hat = np.asarray(a_hat, dtype=complex)
    m = inc.m
    if counter is not None:
        counter.add('materialize', inc.q_l * m * m)
        counter.add('factor', m ** 3 // 3)
        counter.add('solve', 2 * m * m)
    w = _hermitian_solve(inc.explicit(), a_hat)
    return BeamformerWeights(w=distortionless(w, a_hat), normalization='distortionless',
                             method='cmr-isps-direct')


def smi_weights(r_hat: CovarianceMatrix, a_bar) -> BeamformerWeights:
    """Sample matrix inversion: w = R^-1 a_bar / (a_bar^H R^-1 a_bar)."""
    a_bar = np.asarray(a_bar, dtype=complex)
    w = _hermitian_solve(r_hat.values, a_bar)
    return BeamformerWeights(w=distortionless(w, a_bar), normalization='distortionless', method='smi')


def convergence_frame(state: CgState):
    return utils.frame_from_columns([
        ('iter', np.arange(len(state.cost))),
        ('cost', np.asarray(state.cost)),
        ('grad_norm', np.asarray(state.grad_norm)),
    ])
