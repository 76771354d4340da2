"""Variational Bayesian Gaussian mixture (Dirichlet weights, full covariances).

Conjugate model: ``pi ~ Dir(alpha0)``, ``Lambda_k ~ Wishart(W0, nu0)`` and
``mu_k | Lambda_k ~ N(m0, (beta0 Lambda_k)^-1)``. Coordinate ascent alternates
the responsibility update (E-step) with the closed-form posterior update
(M-step); the full evidence lower bound is tracked after every M-step.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import digamma, gammaln, logsumexp, multigammaln
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ..exceptions import ParameterError
from .kmeans import KMeans

__all__ = ["BayesianGaussianMixture"]

_EPS = 10 * np.finfo(float).eps


class BayesianGaussianMixture(ClusterMixin, BaseEstimator):
    """Variational Bayesian GMM with a finite Dirichlet weight prior.

    Parameters
    ----------
    n_components : int
        Upper bound on the number of mixture components.
    max_iter : int
    tol : float
        Stop once the per-sample lower bound changes by less than ``tol``.
    reg_covar : float
        Added to the diagonal of the Wishart scale prior; keeps every
        posterior scale matrix positive definite.
    weight_concentration_prior : float, default 1/n_components
    mean_precision_prior : float, default 1.0
    mean_prior : array, default column means of X
    degrees_of_freedom_prior : float, default n_features
    covariance_prior : array, default zero matrix
        Inverse Wishart scale before regularization. The zero default keeps
        the prior uninformative, so a one-component fit returns the sample
        mean and sample covariance.
    random_state : int
        Seeds the single K-means run that initializes responsibilities.

    Attributes
    ----------
    weights_, means_, covariances_ : posterior expectations
    lower_bounds_ : list of float, full ELBO after each M-step
    n_effective_components_ : components with weight >= 1/(10 n_components)
    """

    def __init__(self, n_components=1, max_iter=500, tol=1e-4, reg_covar=1e-6,
                 weight_concentration_prior=None, mean_precision_prior=1.0,
                 mean_prior=None, degrees_of_freedom_prior=None,
                 covariance_prior=None, random_state=0):
        self.n_components = n_components
        self.max_iter = max_iter
        self.tol = tol
        self.reg_covar = reg_covar
        self.weight_concentration_prior = weight_concentration_prior
        self.mean_precision_prior = mean_precision_prior
        self.mean_prior = mean_prior
        self.degrees_of_freedom_prior = degrees_of_freedom_prior
        self.covariance_prior = covariance_prior
        self.random_state = random_state

    # priors -------------------------------------------------------------
    def _set_priors(self, X):
        n, d = X.shape
        k = self.n_components
        self.alpha0_ = 1.0 / k if self.weight_concentration_prior is None \
            else float(self.weight_concentration_prior)
        self.beta0_ = float(self.mean_precision_prior)
        self.m0_ = X.mean(axis=0) if self.mean_prior is None \
            else np.asarray(self.mean_prior, dtype=float).reshape(d)
        self.nu0_ = float(d) if self.degrees_of_freedom_prior is None \
            else float(self.degrees_of_freedom_prior)
        if self.nu0_ <= d - 1:
            raise ParameterError(f"degrees_of_freedom_prior must exceed {d - 1}")
        base = np.zeros((d, d)) if self.covariance_prior is None \
            else np.atleast_2d(np.asarray(self.covariance_prior, dtype=float))
        self.W0_inv_ = base + self.reg_covar * np.eye(d)

    # updates ------------------------------------------------------------
    def _m_step(self, X, resp):
        nk = resp.sum(axis=0) + _EPS
        xbar = (resp.T @ X) / nk[:, None]
        k, d = len(nk), X.shape[1]
        self.alpha_ = self.alpha0_ + nk
        self.beta_ = self.beta0_ + nk
        self.nu_ = self.nu0_ + nk
        self.means_ = (self.beta0_ * self.m0_ + nk[:, None] * xbar) / self.beta_[:, None]
        W_inv = np.empty((k, d, d))
        for j in range(k):
            diff = X - xbar[j]
            scatter = (resp[:, j, None] * diff).T @ diff
            dm = (xbar[j] - self.m0_)[:, None]
            W_inv[j] = self.W0_inv_ + scatter + (self.beta0_ * nk[j] / self.beta_[j]) * (dm @ dm.T)
        self.W_inv_ = W_inv
        self._chol = np.array([np.linalg.cholesky(w) for w in W_inv])
        # log|W_k| = -log|W_k^-1|
        self._log_det_W = -2.0 * np.log(np.diagonal(self._chol, axis1=1, axis2=2)).sum(axis=1)

    def _expected_log_det_precision(self):
        d = self.m0_.shape[0]
        i = np.arange(1, d + 1)
        return (digamma((self.nu_[:, None] + 1 - i) / 2.0).sum(axis=1)
                + d * np.log(2.0) + self._log_det_W)

    def _expected_log_weights(self):
        return digamma(self.alpha_) - digamma(self.alpha_.sum())

    def _mahalanobis(self, X, centers):
        # (x - c)^T W_k (x - c) with W_k = (L L^T)^-1
        out = np.empty((len(X), len(centers)))
        for j, L in enumerate(self._chol):
            y = solve_triangular(L, (X - centers[j]).T, lower=True)
            out[:, j] = (y**2).sum(axis=0)
        return out

    def _log_rho(self, X):
        d = X.shape[1]
        quad = self.nu_ * self._mahalanobis(X, self.means_)
        return (self._expected_log_weights()
                + 0.5 * self._expected_log_det_precision()
                - 0.5 * d * np.log(2 * np.pi)
                - 0.5 * (d / self.beta_ + quad))

    def _lower_bound(self, resp, log_rho):
        k, d = len(self.alpha_), self.m0_.shape[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            entropy_z = np.where(resp > 0, resp * np.log(resp), 0.0).sum()
        data_term = float((resp * log_rho).sum() - entropy_z)

        e_log_pi = self._expected_log_weights()
        e_log_det = self._expected_log_det_precision()
        alpha0 = np.full(k, self.alpha0_)
        log_c = lambda a: gammaln(a.sum()) - gammaln(a).sum()  # noqa: E731
        pi_term = (log_c(alpha0) + (self.alpha0_ - 1) * e_log_pi.sum()
                   - ((self.alpha_ - 1) * e_log_pi).sum() - log_c(self.alpha_))

        def log_b(log_det_w, nu):
            return -0.5 * nu * log_det_w - 0.5 * nu * d * np.log(2.0) - multigammaln(0.5 * nu, d)

        log_det_w0 = -np.linalg.slogdet(self.W0_inv_)[1]
        dm_quad = self._mahalanobis(self.m0_[None, :], self.means_)[0]
        trace = np.array([np.trace(cho_solve((L, True), self.W0_inv_)) for L in self._chol])
        p_mu_lambda = (
            0.5 * np.sum(d * np.log(self.beta0_ / (2 * np.pi)) + e_log_det
                         - d * self.beta0_ / self.beta_
                         - self.beta0_ * self.nu_ * dm_quad)
            + k * log_b(log_det_w0, self.nu0_)
            + 0.5 * (self.nu0_ - d - 1) * e_log_det.sum()
            - 0.5 * np.sum(self.nu_ * trace)
        )
        entropy_lambda = (-log_b(self._log_det_W, self.nu_)
                          - 0.5 * (self.nu_ - d - 1) * e_log_det + 0.5 * self.nu_ * d)
        q_mu_lambda = np.sum(0.5 * e_log_det + 0.5 * d * np.log(self.beta_ / (2 * np.pi))
                             - 0.5 * d - entropy_lambda)
        return data_term + float(pi_term) + float(p_mu_lambda) - float(q_mu_lambda)

    # public API ---------------------------------------------------------
    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_min_samples=2)
        k = self.n_components
        if not isinstance(k, (int, np.integer)) or k < 1:
            raise ParameterError(f"n_components must be a positive integer, got {k!r}")
        n, d = X.shape
        self._set_priors(X)

        n_distinct = len(np.unique(X, axis=0))
        init = KMeans(n_clusters=min(k, n_distinct), n_init=1, max_iter=self.max_iter,
                      tol=self.tol, random_state=self.random_state).fit(X)
        resp = np.zeros((n, k))
        resp[np.arange(n), init.labels_] = 1.0
        self._m_step(X, resp)

        self.lower_bounds_ = []
        self.converged_ = False
        self.n_iter_ = 0
        for it in range(1, self.max_iter + 1):
            log_rho = self._log_rho(X)
            self.lower_bounds_.append(self._lower_bound(resp, log_rho))
            if len(self.lower_bounds_) > 1 and \
                    abs(self.lower_bounds_[-1] - self.lower_bounds_[-2]) / n < self.tol:
                self.converged_ = True
                break
            resp = np.exp(log_rho - logsumexp(log_rho, axis=1, keepdims=True))
            self._m_step(X, resp)
            self.n_iter_ = it

        log_rho = self._log_rho(X)
        self.labels_ = np.argmax(log_rho, axis=1)
        self.weights_ = self.alpha_ / self.alpha_.sum()
        dof = np.where(self.nu_ > d + 1, self.nu_ - d - 1, self.nu_)
        self.covariances_ = self.W_inv_ / dof[:, None, None]
        self.n_effective_components_ = int(np.sum(self.weights_ >= 1.0 / (10 * k)))
        self.n_features_in_ = d
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "weights_")
        X = check_array(X, dtype=np.float64)
        log_rho = self._log_rho(X)
        return np.exp(log_rho - logsumexp(log_rho, axis=1, keepdims=True))

    def predict(self, X):
        check_is_fitted(self, "weights_")
        X = check_array(X, dtype=np.float64)
        return np.argmax(self._log_rho(X), axis=1)
