"""Epsilon-insensitive support vector regression solved by SMO.

The dual is written over 2l variables (LIBSVM layout): ``alpha[:l]`` carry
sign +1, ``alpha[l:]`` sign -1, and the regression coefficient of training
point k is ``alpha[k] - alpha[k + l]``. Working pairs are picked with
second-order selection; the solver stops once the maximal KKT violation
drops below ``tol``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..validation import check_features, check_targets
from .base import PolicyEstimator

logger = logging.getLogger(__name__)

TAU = 1e-12


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def linear_kernel(A: np.ndarray, B: np.ndarray, gamma: float = 0.0) -> np.ndarray:
    return A @ B.T


KERNELS = {"rbf": rbf_kernel, "linear": linear_kernel}


@dataclass
class SmoResult:
    coef: np.ndarray
    bias: float
    kkt_gap: float
    n_iter: int
    converged: bool


def solve_svr_dual(K: np.ndarray, z: np.ndarray, C: float, epsilon: float, tol: float = 1e-3, max_iter: int = 1_000_000) -> SmoResult:
    """SMO on the epsilon-SVR dual for a precomputed kernel matrix ``K``."""
    l = len(z)
    y = np.concatenate([np.ones(l), -np.ones(l)])
    alpha = np.zeros(2 * l)
    G = np.concatenate([epsilon - z, epsilon + z])  # gradient at alpha = 0
    diag = np.diag(K).copy()
    diag2 = np.tile(diag, 2)
    kkt_gap = np.inf
    it = 0
    converged = False
    while it < max_iter:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        score = -y * G
        s_up = np.where(up, score, -np.inf)
        i = int(np.argmax(s_up))
        g_max = s_up[i]
        g_min = np.min(np.where(low, score, np.inf))
        kkt_gap = g_max - g_min
        if kkt_gap < tol:
            converged = True
            break
        ii = i % l
        K_i = np.tile(K[ii], 2)
        b = g_max - score
        a = diag[ii] + diag2 - 2.0 * K_i
        a = np.where(a > 0, a, TAU)
        cand = low & (b > 0)
        obj = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(obj))
        if not np.isfinite(obj[j]):
            break
        jj = j % l
        Q_i = y[i] * y * K_i
        Q_j = y[j] * y * np.tile(K[jj], 2)
        Qii, Qjj, Qij = diag[ii], diag[jj], Q_i[j]
        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = max(Qii + Qjj + 2.0 * Qij, TAU)
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > 0:
                if ni > C:
                    ni, nj = C, C - diff
            elif nj > C:
                nj, ni = C, C + diff
        else:
            quad = max(Qii + Qjj - 2.0 * Qij, TAU)
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > C:
                if ni > C:
                    ni, nj = C, total - C
            elif nj < 0:
                nj, ni = 0.0, total
            if total > C:
                if nj > C:
                    nj, ni = C, total - C
            elif ni < 0:
                ni, nj = 0.0, total
        G += Q_i * (ni - ai) + Q_j * (nj - aj)
        alpha[i], alpha[j] = ni, nj
        it += 1
    if not converged:
        logger.warning("SMO stopped after %d iterations with KKT gap %.3g", it, kkt_gap)
    return SmoResult(alpha[:l] - alpha[l:], -_rho(alpha, y, G, C), float(kkt_gap), it, converged)


def _rho(alpha, y, G, C):
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(yG[free].mean())
    at_upper, at_lower = alpha >= C, alpha <= 0
    ub_side = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_side = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = yG[ub_side].min() if ub_side.any() else np.inf
    lb = yG[lb_side].max() if lb_side.any() else -np.inf
    return float((ub + lb) / 2.0)


def kkt_violation(K: np.ndarray, z: np.ndarray, coef: np.ndarray, C: float, epsilon: float) -> float:
    """Largest pairwise KKT violation of a candidate dual solution (0 at optimum)."""
    l = len(z)
    alpha_p = np.maximum(coef, 0.0)
    alpha_n = np.maximum(-coef, 0.0)
    alpha = np.concatenate([alpha_p, alpha_n])
    y = np.concatenate([np.ones(l), -np.ones(l)])
    f = K @ coef
    G = np.concatenate([epsilon - z + f, epsilon + z - f])
    score = -y * G
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    return float(max(score[up].max() - score[low].min(), 0.0))


class SVRPolicy(PolicyEstimator):
    """One epsilon-SVR per output (v, omega) on the latest observation.

    Parameters
    ----------
    kernel : {"rbf", "linear"}
    gamma : float or None
        RBF width; ``None`` means ``1 / n_features``.
    C : float
        Box constraint on the dual coefficients.
    epsilon : float
        Half-width of the insensitive tube.
    tol : float
        KKT stopping tolerance.
    ridge : float
        Added to the kernel diagonal; guards against singular kernels.
    """

    kind = "svr"

    def __init__(self, kernel="rbf", gamma=None, C=10.0, epsilon=0.01, tol=1e-3, ridge=1e-10, inputs="all", standardize=False, max_iter=1_000_000):
        self.kernel = kernel
        self.gamma = gamma
        self.C = C
        self.epsilon = epsilon
        self.tol = tol
        self.ridge = ridge
        self.inputs = inputs
        self.standardize = standardize
        self.max_iter = max_iter

    def _check_X(self, X, fitting=False):
        X = check_features(X, None if fitting else getattr(self, "n_features_in_", None))
        self._check_inputs_dim(X.shape[1])
        return X

    def _gamma(self, d):
        return 1.0 / d if self.gamma is None else float(self.gamma)

    def fit(self, X, y, eval_set=None):
        """Solve both duals; ``eval_set`` is accepted for interface parity and ignored."""
        X = self._check_X(X, fitting=True)
        y = check_targets(y, X.shape[0])
        if len(X) < 2:
            raise ValueError("SVR needs at least 2 samples")
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.standardize:
            self.input_mean_ = X.mean(axis=0)
            scale = X.std(axis=0)
            self.input_scale_ = np.where(scale > 0, scale, 1.0)
        else:
            self.input_mean_ = np.zeros(X.shape[1])
            self.input_scale_ = np.ones(X.shape[1])
        Xs = self._scale(X)
        K = KERNELS[self.kernel](Xs, Xs, self._gamma(X.shape[1]))
        K[np.diag_indices_from(K)] += self.ridge
        coefs, biases, self.kkt_gap_, self.n_iter_ = [], [], [], []
        for k in range(2):
            res = solve_svr_dual(K, y[:, k], self.C, self.epsilon, self.tol, self.max_iter)
            coefs.append(res.coef)
            biases.append(res.bias)
            self.kkt_gap_.append(res.kkt_gap)
            self.n_iter_.append(res.n_iter)
        coef = np.stack(coefs, axis=1)  # (l, 2)
        keep = np.any(coef != 0.0, axis=1)
        self.params_ = {
            "support_vectors": Xs[keep],
            "dual_coef": coef[keep],
            "bias": np.array(biases),
        }
        self.n_features_in_ = X.shape[1]
        self.history_ = []
        return self

    def _forward(self, params, X):
        sv = params["support_vectors"]
        if len(sv) == 0:
            return np.broadcast_to(params["bias"], (len(X), 2)).copy()
        K = KERNELS[self.kernel](X, sv, self._gamma(sv.shape[1]))
        return K @ params["dual_coef"] + params["bias"]



def svr_train(X, y, kernel: str = "rbf", C: float = 10.0, epsilon: float = 0.01, gamma: float | None = None, **kwargs) -> SVRPolicy:
    return SVRPolicy(kernel=kernel, gamma=gamma, C=C, epsilon=epsilon, **kwargs).fit(X, y)
