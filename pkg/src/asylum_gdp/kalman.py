"""Linear-Gaussian state-space filtering, smoothing and variance estimation.

Models here have a scalar measurement

    y_t = z_t a_t + eps_t,          eps_t ~ N(0, meas_var)
    a_t = T a_{t-1} + eta_t,        eta_t ~ N(0, Q)

with a time-varying regressor row ``z_t``. The likelihood is the prediction
error decomposition accumulated by the filter; the noise variances are fitted
by a multi-start Nelder-Mead search over log-variances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numba
import numpy as np
from scipy.optimize import minimize

from .errors import DegenerateInnovationVariance, TooFewObservations
from .series import AnnualSeries, Unit

DIFFUSE_KAPPA = 1e6
DEFAULT_BURN_IN = 2
F_FLOOR = 1e-12
# log-variances below this are reported as exactly zero
LOG_VAR_ZERO = -25.0
# search box for log-variances; the lower edge keeps F_t above F_FLOOR
LOG_VAR_MIN = -27.0
LOG_VAR_MAX = 30.0
START_FACTORS = (0.1, 1.0, 10.0)
MAX_EVALS = 2000
REL_TOL = 1e-9
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class StateSpaceSpec:
    """System matrices for a scalar-measurement model.

    ``Z`` holds one measurement row per observation (shape ``(n, m)``).
    """

    Z: np.ndarray
    T: np.ndarray
    meas_var: float
    Q: np.ndarray
    a0: np.ndarray
    P0: np.ndarray

    def __post_init__(self):
        Z = np.atleast_2d(np.asarray(self.Z, dtype=float))
        m = Z.shape[1]
        T = np.asarray(self.T, dtype=float).reshape(m, m)
        Q = np.asarray(self.Q, dtype=float).reshape(m, m)
        a0 = np.asarray(self.a0, dtype=float).reshape(m)
        P0 = np.asarray(self.P0, dtype=float).reshape(m, m)
        if self.meas_var < 0 or np.any(np.diag(Q) < 0):
            raise ValueError("variances must be non-negative")
        if not np.allclose(P0, P0.T):
            raise ValueError("P0 must be symmetric")
        for name, arr in (("Z", Z), ("T", T), ("Q", Q), ("a0", a0), ("P0", P0)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "meas_var", float(self.meas_var))

    @property
    def state_dim(self) -> int:
        return self.Z.shape[1]

    @property
    def n_obs(self) -> int:
        return self.Z.shape[0]

    @classmethod
    def random_walk_regression(cls, Z, meas_var, state_vars, kappa=DIFFUSE_KAPPA):
        """Random-walk coefficients (T = I) with a big-kappa diffuse prior at zero."""
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        if Z.shape[0] == 1 and np.ndim(state_vars) == 0:
            Z = Z.T
        m = Z.shape[1]
        return cls(
            Z=Z,
            T=np.eye(m),
            meas_var=meas_var,
            Q=np.diag(np.broadcast_to(np.asarray(state_vars, dtype=float), (m,))),
            a0=np.zeros(m),
            P0=kappa * np.eye(m),
        )

    def with_variances(self, meas_var=None, state_vars=None) -> "StateSpaceSpec":
        Q = self.Q.copy()
        if state_vars is not None:
            for i, v in state_vars.items():
                Q[i, i] = v
        return replace(self, meas_var=self.meas_var if meas_var is None else meas_var, Q=Q)


@dataclass(frozen=True)
class FilterRun:
    start_year: int
    predicted_mean: np.ndarray
    predicted_cov: np.ndarray
    filtered_mean: np.ndarray
    filtered_cov: np.ndarray
    innovation: np.ndarray
    innovation_var: np.ndarray
    gain: np.ndarray
    loglik: float
    burn_in: int
    smoothed_mean: np.ndarray | None = None
    smoothed_cov: np.ndarray | None = None

    @property
    def n_obs(self) -> int:
        return self.innovation.size

    @property
    def years(self) -> np.ndarray:
        return np.arange(self.start_year, self.start_year + self.n_obs)

    def standardized_innovations(self) -> np.ndarray:
        return self.innovation / np.sqrt(self.innovation_var)


def _obs_values(obs) -> tuple[np.ndarray, int]:
    if isinstance(obs, AnnualSeries):
        return obs.values, obs.start_year
    return np.asarray(obs, dtype=float).reshape(-1), 0


def psd_sqrt(A: np.ndarray) -> np.ndarray:
    """A factor S with S S' = A for a symmetric positive semi-definite A."""
    A = 0.5 * (A + A.T)
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(A)
        return V * np.sqrt(np.clip(w, 0.0, None))


def filter(spec: StateSpaceSpec, obs, burn_in: int = DEFAULT_BURN_IN) -> FilterRun:
    """Run the Kalman filter and accumulate the log-likelihood after ``burn_in`` steps.

    Covariances are propagated as square-root factors (QR time update, Potter
    measurement update), which keeps the big-kappa diffuse prior from
    swamping the informative directions through cancellation.
    """
    y, start = _obs_values(obs)
    n, m = y.size, spec.state_dim
    if spec.n_obs != n:
        raise ValueError(f"spec has {spec.n_obs} measurement rows for {n} observations")
    if n < m + 1:
        raise TooFewObservations(f"{n} observations for a {m}-state model")

    ap = np.empty((n, m))
    Pp = np.empty((n, m, m))
    af = np.empty((n, m))
    Pf = np.empty((n, m, m))
    v = np.empty(n)
    F = np.empty(n)
    K = np.empty((n, m))
    T, H = spec.T, spec.meas_var
    sqrtQ = psd_sqrt(spec.Q)
    has_q = bool(np.any(spec.Q != 0))
    a, S = spec.a0, psd_sqrt(spec.P0)
    loglik = 0.0
    for t in range(n):
        a = T @ a
        if has_q:
            S = np.linalg.qr(np.vstack([(T @ S).T, sqrtQ.T]), mode="r").T
        else:
            S = T @ S
        z = spec.Z[t]
        phi = S.T @ z
        Ft = float(phi @ phi) + H
        if not Ft > F_FLOOR:
            raise DegenerateInnovationVariance(t, Ft)
        Pz = S @ phi
        vt = y[t] - float(z @ a)
        Kt = Pz / Ft
        ap[t], Pp[t] = a, S @ S.T
        a = a + Kt * vt
        S = S - np.outer(Pz, phi) / (Ft + math.sqrt(H * Ft))
        af[t], Pf[t], v[t], F[t], K[t] = a, S @ S.T, vt, Ft, Kt
        if t >= burn_in:
            loglik -= 0.5 * (LOG_2PI + math.log(Ft) + vt * vt / Ft)
    return FilterRun(start, ap, Pp, af, Pf, v, F, K, loglik, burn_in)


@numba.njit(cache=True)
def _householder_r(A):  # pragma: no cover - compiled
    """Upper-triangular R of A = QR for a small tall matrix (A is overwritten)."""
    k, m = A.shape
    for j in range(m):
        norm = 0.0
        for i in range(j, k):
            norm += A[i, j] * A[i, j]
        norm = np.sqrt(norm)
        if norm == 0.0:
            continue
        alpha = -norm if A[j, j] >= 0 else norm
        v0 = A[j, j] - alpha
        vnorm2 = v0 * v0
        for i in range(j + 1, k):
            vnorm2 += A[i, j] * A[i, j]
        if vnorm2 == 0.0:
            continue
        for c in range(j + 1, m):
            dot = v0 * A[j, c]
            for i in range(j + 1, k):
                dot += A[i, j] * A[i, c]
            f = 2.0 * dot / vnorm2
            A[j, c] -= f * v0
            for i in range(j + 1, k):
                A[i, c] -= f * A[i, j]
        A[j, j] = alpha
        for i in range(j + 1, k):
            A[i, j] = 0.0
    return A[:m, :]


@numba.njit(cache=True)
def _loglik_kernel(Z, T, sqrtQ, has_q, H, a0, S0, y, burn_in, floor):  # pragma: no cover - compiled
    n, m = Z.shape
    a = a0.copy()
    S = S0.copy()
    tmp_a = np.empty(m)
    TS = np.empty((m, m))
    pre = np.empty((2 * m, m))
    phi = np.empty(m)
    Pz = np.empty(m)
    ll = 0.0
    log2pi = np.log(2.0 * np.pi)
    for t in range(n):
        for i in range(m):
            acc = 0.0
            for j in range(m):
                acc += T[i, j] * a[j]
            tmp_a[i] = acc
        for i in range(m):
            a[i] = tmp_a[i]
            for j in range(m):
                acc = 0.0
                for k in range(m):
                    acc += T[i, k] * S[k, j]
                TS[i, j] = acc
        if has_q:
            for i in range(m):
                for j in range(m):
                    pre[i, j] = TS[j, i]
                    pre[m + i, j] = sqrtQ[j, i]
            R = _householder_r(pre)
            for i in range(m):
                for j in range(m):
                    S[i, j] = R[j, i]
        else:
            for i in range(m):
                for j in range(m):
                    S[i, j] = TS[i, j]
        Ft = H
        vt = y[t]
        for j in range(m):
            acc = 0.0
            for i in range(m):
                acc += S[i, j] * Z[t, i]
            phi[j] = acc
            Ft += acc * acc
            vt -= Z[t, j] * a[j]
        if not Ft > floor:
            return np.nan
        for i in range(m):
            acc = 0.0
            for j in range(m):
                acc += S[i, j] * phi[j]
            Pz[i] = acc
        g = 1.0 / (Ft + np.sqrt(H * Ft))
        for i in range(m):
            a[i] += Pz[i] * vt / Ft
            for j in range(m):
                S[i, j] -= g * Pz[i] * phi[j]
        if t >= burn_in:
            ll -= 0.5 * (log2pi + np.log(Ft) + vt * vt / Ft)
    return ll


def _kernel_args(spec: StateSpaceSpec):
    return (spec.Z, spec.T, psd_sqrt(spec.Q), bool(np.any(spec.Q != 0)), spec.meas_var,
            spec.a0, psd_sqrt(spec.P0))


def loglik(spec: StateSpaceSpec, obs, burn_in: int = DEFAULT_BURN_IN) -> float:
    """Likelihood only (compiled path used inside the optimizer)."""
    y, _ = _obs_values(obs)
    Z, T, sQ, hq, H, a0, S0 = _kernel_args(spec)
    ll = _loglik_kernel(Z, T, sQ, hq, H, a0, S0, y, burn_in, F_FLOOR)
    if math.isnan(ll):
        raise DegenerateInnovationVariance(-1, 0.0)
    return ll


def smooth(run: FilterRun, spec: StateSpaceSpec) -> FilterRun:
    """Fixed-interval (Rauch-Tung-Striebel) smoother over a completed filter run."""
    n, m = run.filtered_mean.shape
    am = np.empty((n, m))
    Pm = np.empty((n, m, m))
    am[-1] = run.filtered_mean[-1]
    Pm[-1] = run.filtered_cov[-1]
    T = spec.T
    for t in range(n - 2, -1, -1):
        Pt = run.filtered_cov[t]
        Pnext = run.predicted_cov[t + 1]
        try:
            Jt = np.linalg.solve(Pnext, T @ Pt).T
        except np.linalg.LinAlgError:
            Jt = Pt @ T.T @ np.linalg.pinv(Pnext)
        am[t] = run.filtered_mean[t] + Jt @ (am[t + 1] - run.predicted_mean[t + 1])
        V = Pt + Jt @ (Pm[t + 1] - Pnext) @ Jt.T
        Pm[t] = 0.5 * (V + V.T)
    return replace(run, smoothed_mean=am, smoothed_cov=Pm)


def conditional_variances(run: FilterRun, country: str = "") -> AnnualSeries:
    """One-step-ahead conditional variance of the observation, F_t."""
    return AnnualSeries(country, run.start_year, run.innovation_var, Unit.RATIO)


# --------------------------------------------------------------------------
# maximum likelihood
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MleResult:
    variance_estimates: dict[str, float]
    loglik_at_optimum: float
    converged: bool
    n_evaluations: int
    restarts_used: int
    spec: StateSpaceSpec = field(repr=False)
    log_params: dict[str, float] = field(default_factory=dict)


def _apply(template: StateSpaceSpec, free: Mapping[str, object], logvars: np.ndarray) -> StateSpaceSpec:
    meas = template.meas_var
    Q = template.Q.copy()
    for (name, target), lv in zip(free.items(), logvars):
        val = math.exp(min(max(lv, LOG_VAR_MIN), LOG_VAR_MAX))
        if target == "meas":
            meas = val
        else:
            Q[target, target] = val
    return replace(template, meas_var=meas, Q=Q)


def fit_mle(
    template: StateSpaceSpec,
    obs,
    free: Mapping[str, object],
    burn_in: int = DEFAULT_BURN_IN,
    start_factors=START_FACTORS,
    max_evals: int = MAX_EVALS,
) -> MleResult:
    """Maximise the prediction-error likelihood over the variances named in ``free``.

    ``free`` maps an output label to ``"meas"`` (the measurement variance) or a
    state index whose diagonal entry of ``Q`` is estimated. Variances not named
    keep the template's values.
    """
    y, _ = _obs_values(obs)
    if np.any(template.Q != np.diag(np.diag(template.Q))):
        raise ValueError("variance estimation needs a diagonal state covariance")
    k = len(free)
    if not 1 <= k <= 3:
        raise ValueError("between one and three free variances are supported")
    if y.size - burn_in < 6:
        raise TooFewObservations(f"{y.size} observations with burn-in {burn_in}")

    base = float(np.var(y, ddof=1))
    if not base > 0:
        base = 1.0
    zsq = np.mean(template.Z**2, axis=0)
    scales = []
    for target in free.values():
        if target == "meas":
            scales.append(1.0)
        else:
            scales.append(1.0 / zsq[target] if zsq[target] > 0 else 1.0)
    scales = np.asarray(scales)

    best = {"ll": -np.inf, "x": None}
    n_eval = 0
    Zc, Tc, a0 = template.Z, template.T, template.a0
    S0 = psd_sqrt(template.P0)
    idx = list(free.values())

    def negll(theta):
        nonlocal n_eval
        n_eval += 1
        lv = np.clip(theta, LOG_VAR_MIN, LOG_VAR_MAX)
        H = template.meas_var
        Q = template.Q.copy()
        for target, val in zip(idx, np.exp(lv)):
            if target == "meas":
                H = val
            else:
                Q[target, target] = val
        sQ = np.diag(np.sqrt(np.diag(Q)))
        ll = _loglik_kernel(Zc, Tc, sQ, bool(np.any(Q != 0)), H, a0, S0, y, burn_in, F_FLOOR)
        if math.isnan(ll):
            return 1e300
        if ll > best["ll"]:
            best["ll"], best["x"] = ll, lv.copy()
        return -ll

    converged = False
    for factor in start_factors:
        x0 = np.log(factor * base / k * scales)
        x0 = np.clip(x0, LOG_VAR_MIN + 1.0, LOG_VAR_MAX - 1.0)
        f0 = negll(x0)
        res = minimize(
            negll,
            x0,
            method="Nelder-Mead",
            options={
                "maxfev": max_evals,
                "xatol": 1e-6,
                "fatol": REL_TOL * max(1.0, abs(f0)) if f0 < 1e299 else 1e-9,
                "adaptive": k > 2,
            },
        )
        converged = converged or bool(res.success)

    if best["x"] is None:
        raise DegenerateInnovationVariance(-1, 0.0)
    lv = best["x"]
    fitted = _apply(template, free, lv)
    estimates = {name: (0.0 if v < LOG_VAR_ZERO else math.exp(v)) for name, v in zip(free, lv)}
    return MleResult(
        variance_estimates=estimates,
        loglik_at_optimum=best["ll"],
        converged=converged,
        n_evaluations=n_eval,
        restarts_used=len(start_factors),
        spec=fitted,
        log_params=dict(zip(free, map(float, lv))),
    )
