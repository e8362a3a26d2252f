"""
Feedback-trading return model with closed-form oracles.

Stock returns follow

    r_t = mu + eps_t + A r_{t-1},      A = alpha * w w',  a = alpha * w'w,
    eps_t = e_t - rho * e_{t-1},       e_t ~ N(0, Sigma),

so flows chasing the factor w induce persistence (a) while noise traders
induce one-month reversal (rho). The factor return F_t = w'r_t then follows
a scalar AR(1) with coefficient a. Because A has rank one, the model admits
exact expressions for every return autocovariance matrix and for the
expected PNLs of factor momentum (w'Omega_k w) and stock momentum
(tr Omega_k), all re-derivable here and cross-checked against seeded
Monte Carlo paths with batch-means standard errors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .analytics import AR1Params, NonStationaryError
from .panel import Calendar, NamedSeries, ReturnPanel

__all__ = [
    "AutocovarianceSet",
    "CovarianceCheck",
    "FactorMomentumMoment",
    "ModelParams",
    "ParameterError",
    "ReconstructionCheck",
    "SimPath",
    "StockMomentumMoment",
    "VerificationCheck",
    "VerificationReport",
    "autocovariance_matrices",
    "default_params",
    "expected_factor_momentum",
    "expected_stock_momentum",
    "factor_moment_mc",
    "momentum_covariance_check",
    "reconstruction_check",
    "sample_autocovariance",
    "simulate",
    "simulate_ar1",
    "stock_moment_mc",
    "verify_model",
]

DEFAULT_BURN_IN = 500
DEFAULT_BATCHES = 100


class ParameterError(Exception):
    """Model parameters violate their constraints."""


@dataclass(frozen=True)
class ModelParams:
    """Parameters (alpha, w, mu, rho, Sigma) of the feedback-trading model.

    ``w`` is normalized to w'w = 1 by default, which makes a = alpha; pass
    ``normalize_w=False`` to keep a caller-supplied scale. Stationarity
    requires 0 <= a < 1 and Sigma must be symmetric positive semi-definite.
    """

    alpha: float
    w: np.ndarray
    mu: np.ndarray
    rho: float
    sigma: np.ndarray
    normalize_w: bool = True

    def __post_init__(self):
        w = np.asarray(self.w, float).copy()
        if w.ndim != 1 or len(w) < 1:
            raise ParameterError("w must be a non-empty vector")
        if self.normalize_w:
            norm = float(np.sqrt(w @ w))
            if norm == 0.0:
                raise ParameterError("cannot normalize a zero w")
            w = w / norm
        mu = np.asarray(self.mu, float).copy()
        if mu.shape != w.shape:
            raise ParameterError(f"mu shape {mu.shape} != w shape {w.shape}")
        sigma = np.asarray(self.sigma, float).copy()
        n = len(w)
        if sigma.shape != (n, n):
            raise ParameterError(f"sigma must be {n}x{n}, got {sigma.shape}")
        if not np.allclose(sigma, sigma.T, rtol=1e-10, atol=1e-12):
            raise ParameterError("sigma must be symmetric")
        eig = np.linalg.eigvalsh(sigma)
        if eig[0] < -1e-10 * max(eig[-1], 1.0):
            raise ParameterError(f"sigma is not PSD (min eigenvalue {eig[0]:g})")
        a = self.alpha * float(w @ w)
        if a < 0.0:
            raise ParameterError("alpha * w'w must be non-negative")
        if a >= 1.0:
            raise NonStationaryError(f"a = alpha * w'w = {a:g} must be < 1")
        for name, arr in (("w", w), ("mu", mu), ("sigma", sigma)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return len(self.w)

    @property
    def a(self) -> float:
        """Feedback strength alpha * w'w; the AR(1) coefficient of F_t."""
        return self.alpha * float(self.w @ self.w)

    @property
    def impact_matrix(self) -> np.ndarray:
        """A = alpha * w w' (rank one)."""
        return self.alpha * np.outer(self.w, self.w)

    @property
    def factor_variance(self) -> float:
        """V = w' Sigma w, the innovation variance of the factor."""
        return float(self.w @ self.sigma @ self.w)

    @property
    def factor_drift(self) -> float:
        """w'mu, the per-period drift term in the factor recursion."""
        return float(self.w @ self.mu)

    @property
    def factor_mean(self) -> float:
        """Unconditional mean of F_t, w'mu / (1 - a)."""
        return self.factor_drift / (1.0 - self.a)

    @property
    def mean_returns(self) -> np.ndarray:
        """Unconditional mean of r_t: (I - A)^{-1} mu = mu + A mu / (1 - a),
        exact for rank-one A."""
        return self.mu + (self.alpha * self.factor_drift / (1.0 - self.a)) * self.w

    # --- JSON schema: {N, alpha, w, mu, rho, sigma: {diag | full}} ---

    @staticmethod
    def from_dict(d: dict) -> "ModelParams":
        try:
            n = int(d["N"])
            alpha = float(d["alpha"])
            w = np.asarray(d["w"], float)
            mu = np.asarray(d["mu"], float)
            rho = float(d["rho"])
            sig = d["sigma"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError(f"bad model parameter file: {exc}") from exc
        if "diag" in sig:
            sigma = np.diag(np.asarray(sig["diag"], float))
        elif "full" in sig:
            sigma = np.asarray(sig["full"], float)
        else:
            raise ParameterError("sigma must provide 'diag' or 'full'")
        if len(w) != n:
            raise ParameterError(f"N = {n} but w has length {len(w)}")
        normalize = bool(d.get("normalize_w", True))
        return ModelParams(alpha, w, mu, rho, sigma, normalize_w=normalize)

    @staticmethod
    def from_json(path) -> "ModelParams":
        with open(path) as fh:
            return ModelParams.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        diag = np.diag(np.diag(self.sigma))
        sig = (
            {"diag": list(np.diag(self.sigma))}
            if np.array_equal(self.sigma, diag)
            else {"full": [list(row) for row in self.sigma]}
        )
        return {
            "N": self.n,
            "alpha": self.alpha,
            "w": list(self.w),
            "mu": list(self.mu),
            "rho": self.rho,
            "sigma": sig,
            "normalize_w": False,  # w is already normalized above if requested
        }


def default_params() -> ModelParams:
    """Shipped reference parameters: 20 stocks, Sigma = I, a = 0.6, rho = 0.1.

    With rho * tr Sigma = 2 dominating alpha * V * (1 + ...), single-month
    stock momentum is negative while factor momentum is positive at every
    lag: persistence and reversal coexist.
    """
    n = 20
    return ModelParams(
        alpha=0.6,
        w=np.ones(n),
        mu=np.zeros(n),
        rho=0.1,
        sigma=np.eye(n),
    )


# ---------------------------------------------------------------------------
# Simulation


def _chol_psd(sigma: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        # PSD but singular: eigenvalue square root, deterministic
        eigval, eigvec = np.linalg.eigh(sigma)
        return eigvec * np.sqrt(np.clip(eigval, 0.0, None))


def _simulate_raw(params: ModelParams, length: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Return (r, e) arrays of shape (length, N), starting from the
    unconditional mean with e_{-1} = 0."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((length, params.n))
    e = z @ _chol_psd(params.sigma).T
    del z
    eps = e.copy()
    if params.rho != 0.0:
        eps[1:] -= params.rho * e[:-1]
    x = eps @ params.w + params.factor_drift
    a = params.a
    s_init = params.factor_mean
    s = lfilter([1.0], [1.0, -a], x, zi=np.array([a * s_init]))[0]
    s_prev = np.empty_like(s)
    s_prev[0] = s_init
    s_prev[1:] = s[:-1]
    r = eps
    r += params.mu
    r += np.outer(s_prev, params.alpha * params.w)
    return r, e


@dataclass(frozen=True)
class SimPath:
    """A simulated return panel with its factor series F_t = w'r_t."""

    panel: ReturnPanel
    factor: NamedSeries
    seed: int
    burn_in: int


def simulate(
    params: ModelParams,
    T: int,
    seed: int,
    burn_in: int = DEFAULT_BURN_IN,
) -> SimPath:
    """Simulate T months of the model, discarding ``burn_in`` start-up months.

    Fully deterministic per seed: the same seed yields bit-identical paths.
    """
    if T < 1:
        raise ParameterError("T must be >= 1")
    if burn_in < 0:
        raise ParameterError("burn_in must be >= 0")
    r, _ = _simulate_raw(params, burn_in + T, seed)
    values = r[burn_in:]
    calendar = Calendar.periods(T)
    width = max(2, len(str(params.n - 1)))
    assets = tuple(f"s{i:0{width}d}" for i in range(params.n))
    panel = ReturnPanel(calendar, assets, values)
    factor = NamedSeries(calendar, "factor", values @ params.w)
    return SimPath(panel, factor, seed, burn_in)


def simulate_ar1(params: AR1Params, T: int, seed, burn_in: int = 100) -> np.ndarray:
    """Simulate an AR(1) factor path of length T, seeded, burn-in discarded."""
    rng = np.random.default_rng(seed)
    u = params.sigma_u * rng.standard_normal(burn_in + T)
    x = (1.0 - params.rho) * params.mu + u
    f = lfilter([1.0], [1.0, -params.rho], x, zi=np.array([params.rho * params.mu]))[0]
    return f[burn_in:]


# ---------------------------------------------------------------------------
# Closed-form autocovariances and momentum moments


@dataclass(frozen=True)
class AutocovarianceSet:
    """Omega_k = E[(r_t - m)(r_{t-k} - m)'] for k = 1 .. k_max."""

    omegas: tuple[np.ndarray, ...]

    @property
    def k_max(self) -> int:
        return len(self.omegas)

    def omega(self, k: int) -> np.ndarray:
        if not 1 <= k <= self.k_max:
            raise KeyError(f"k must be in 1..{self.k_max}, got {k}")
        return self.omegas[k - 1]


def autocovariance_matrices(params: ModelParams, k_max: int) -> AutocovarianceSet:
    """Exact return autocovariance matrices of the model, orders 1..k_max.

    Omega_1 = (1 - rho(a - rho)) A Sigma - rho Sigma
              + (a - rho) A Sigma A (1 + (a - rho) a / (1 - a^2)),
    Omega_k = (a - rho)(1 - rho a) a^{k-2} A Sigma
              + (a - rho) a^{k-1} A Sigma A (1 + (a - rho) a / (1 - a^2)),
    for k >= 2; they decay geometrically at rate a.
    """
    if k_max < 1:
        raise ParameterError("k_max must be >= 1")
    a, rho = params.a, params.rho
    A = params.impact_matrix
    AS = A @ params.sigma
    ASA = AS @ A
    c = a - rho
    tail = 1.0 + c * a / (1.0 - a * a)
    omegas = [(1.0 - rho * c) * AS - rho * params.sigma + c * tail * ASA]
    for k in range(2, k_max + 1):
        omegas.append(c * (1.0 - rho * a) * a ** (k - 2) * AS + c * a ** (k - 1) * tail * ASA)
    return AutocovarianceSet(tuple(omegas))


@dataclass(frozen=True)
class FactorMomentumMoment:
    """Decomposition of E[F_{t-k} F_t] into persistence and mean exposure.

    momentum_term = V (a - rho)(1 - rho a) / (1 - a^2) * a^{k-1} equals
    w'Omega_k w; mean_term is the squared unconditional factor mean, earned
    mechanically whatever the persistence. total = momentum_term + mean_term.
    """

    k: int
    momentum_term: float
    mean_term: float

    @property
    def total(self) -> float:
        return self.momentum_term + self.mean_term


def expected_factor_momentum(params: ModelParams, k: int) -> FactorMomentumMoment:
    """Closed-form E[F_{t-k} F_t] for lag k >= 1."""
    if k < 1:
        raise ParameterError("k must be >= 1")
    a, rho = params.a, params.rho
    momentum = params.factor_variance * (a - rho) * (1.0 - rho * a) / (1.0 - a * a) * a ** (k - 1)
    return FactorMomentumMoment(k, float(momentum), float(params.factor_mean**2))


@dataclass(frozen=True)
class StockMomentumMoment:
    """Two routes to E[r_{t-k}' r_t] plus its mean decomposition.

    ``trace_term`` is tr(Omega_k) from the matrices; ``reduced_term`` is the
    scalar reduction, alpha V (1 + (a - rho)^2 / (1 - a^2)) - rho tr Sigma
    at k = 1 and alpha V (a - rho)(1 - rho a) / (1 - a^2) a^{k-2} at k >= 2.
    The two agree identically. ``mean_term`` is the exact squared-mean
    contribution |E r|^2; ``drift_term`` is the plain mu'mu, which matches
    it only when a = 0 or mu = 0 (feedback amplifies means by 1 / (1 - a)
    along w). total = trace_term + mean_term.
    """

    k: int
    trace_term: float
    reduced_term: float
    mean_term: float
    drift_term: float

    @property
    def total(self) -> float:
        return self.trace_term + self.mean_term


def expected_stock_momentum(
    params: ModelParams, k: int, omegas: AutocovarianceSet | None = None
) -> StockMomentumMoment:
    """Closed-form E[r_{t-k}' r_t] for lag k >= 1.

    The per-lag product E[r_{t-k}' r_t] plays the role of an (m, n) = (k, 1)
    momentum PNL with unit weights.
    """
    if k < 1:
        raise ParameterError("k must be >= 1")
    if omegas is None or omegas.k_max < k:
        omegas = autocovariance_matrices(params, k)
    a, rho, alpha = params.a, params.rho, params.alpha
    V = params.factor_variance
    trace = float(np.trace(omegas.omega(k)))
    if k == 1:
        reduced = alpha * V * (1.0 + (a - rho) ** 2 / (1.0 - a * a)) - rho * float(
            np.trace(params.sigma)
        )
    else:
        reduced = alpha * V * (a - rho) * (1.0 - rho * a) / (1.0 - a * a) * a ** (k - 2)
    mean_r = params.mean_returns
    return StockMomentumMoment(
        k,
        trace,
        float(reduced),
        float(mean_r @ mean_r),
        float(params.mu @ params.mu),
    )


# ---------------------------------------------------------------------------
# Monte Carlo estimators (batch-means standard errors)


def _batch_slices(m: int, n_batches: int) -> tuple[int, int]:
    size = m // n_batches
    if size < 1:
        raise ParameterError(
            f"{m} observations cannot form {n_batches} batches"
        )
    return size, size * n_batches


def _batch_mean_se(x: np.ndarray, n_batches: int) -> tuple[float, float]:
    """Mean of a 1-d array and its batch-means standard error."""
    size, used = _batch_slices(len(x), n_batches)
    means = x[:used].reshape(n_batches, size).mean(axis=1)
    return float(means.mean()), float(means.std(ddof=1) / np.sqrt(n_batches))


def sample_autocovariance(
    values: np.ndarray, k: int, n_batches: int = DEFAULT_BATCHES
) -> tuple[np.ndarray, np.ndarray]:
    """Sample estimate of E[(x_t - m)(x_{t-k} - m)'] with per-element
    batch-means standard errors.

    Returns ``(estimate, se)``; both are scalars for a 1-d input and (N, N)
    matrices for a (T, N) input, oriented so estimate[i, j] pairs the lead
    at i with the lag at j.
    """
    x = np.asarray(values, float)
    scalar = x.ndim == 1
    if scalar:
        x = x[:, None]
    T, N = x.shape
    if k < 1 or k >= T:
        raise ParameterError(f"need 1 <= k < {T}, got {k}")
    size, used = _batch_slices(T - k, n_batches)
    xm = x - x.mean(axis=0)
    lead = xm[k : k + used].reshape(n_batches, size, N)
    lag = xm[:used].reshape(n_batches, size, N)
    per_batch = np.einsum("bti,btj->bij", lead, lag) / size
    est = per_batch.mean(axis=0)
    se = per_batch.std(axis=0, ddof=1) / np.sqrt(n_batches)
    if scalar:
        return float(est[0, 0]), float(se[0, 0])
    return est, se


def factor_moment_mc(
    factor_values: np.ndarray, k: int, n_batches: int = DEFAULT_BATCHES
) -> tuple[float, float]:
    """Monte Carlo E[F_{t-k} F_t] (uncentered) with batch-means SE."""
    f = np.asarray(factor_values, float)
    return _batch_mean_se(f[k:] * f[:-k], n_batches)


def stock_moment_mc(
    return_values: np.ndarray, k: int, n_batches: int = DEFAULT_BATCHES
) -> tuple[float, float]:
    """Monte Carlo E[r_{t-k}' r_t] (uncentered) with batch-means SE."""
    r = np.asarray(return_values, float)
    return _batch_mean_se((r[k:] * r[:-k]).sum(axis=1), n_batches)


# ---------------------------------------------------------------------------
# Closed-form return solution check


@dataclass(frozen=True)
class ReconstructionCheck:
    """Worst deviation between the simulated path and its MA expansion."""

    depth: int
    max_deviation: float
    tail_bound: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tail_bound


def reconstruction_check(
    params: ModelParams,
    T: int = 200_000,
    seed: int = 0,
    depth: int = 200,
    burn_in: int = DEFAULT_BURN_IN,
) -> ReconstructionCheck:
    """Rebuild r_t from its innovations via the truncated moving-average form

        r_t = (I - A)^{-1} mu + e_t + (A - rho I) e_{t-1}
              + (a - rho) sum_{k=2}^{depth} a^{k-2} A e_{t-k}

    with (I - A)^{-1} = I + A / (1 - a) (exact, rank-one A), and report the
    maximum elementwise deviation from the recursively simulated path along
    with the geometric bound on the truncated tail.
    """
    if depth < 2:
        raise ParameterError("depth must be >= 2")
    length = burn_in + T
    r, e = _simulate_raw(params, length, seed)
    a, rho, alpha = params.a, params.rho, params.alpha
    c = a - rho
    g = e @ params.w
    kernel = a ** np.arange(depth - 1)  # exponents 0 .. depth-2 for k = 2 .. depth
    conv = np.convolve(g, kernel)
    start = max(burn_in, depth)
    t = np.arange(start, length)

    recon = np.empty((len(t), params.n))
    recon[:] = params.mean_returns
    recon += e[t]
    recon += e[t - 1] @ (params.impact_matrix - rho * np.eye(params.n)).T
    recon += np.outer(c * alpha * conv[t - 2], params.w)

    deviation = float(np.max(np.abs(r[t] - recon)))
    scale = float(np.max(np.abs(r[t])))
    float_floor = 1e-12 * (1.0 + scale)
    if a > 0.0:
        tail = (
            abs(c)
            * alpha
            * float(np.max(np.abs(params.w)))
            * float(np.max(np.abs(g)))
            * a ** (depth - 1)
            / (1.0 - a)
        )
    else:
        tail = 0.0
    return ReconstructionCheck(depth, deviation, tail + float_floor)


# ---------------------------------------------------------------------------
# Covariance identity between factor and stock momentum PNLs


@dataclass(frozen=True)
class CovarianceCheck:
    """Both sides of cov(pi^F, pi^S) = beta'beta var(pi^F) on one path.

    The PNLs here are the unmanaged products: pi^F_t = fbar_t * f_t and
    pi^S_t = rbar_t' r_t, where the bar is the (m, n) trailing sum. These
    differ from the sign-weighted tradeable strategy on purpose: the
    identity is about raw products.
    """

    lhs: float
    rhs: float
    lhs_se: float
    rhs_se: float
    diff: float
    diff_se: float

    @property
    def agrees(self) -> bool:
        return abs(self.diff) <= 3.0 * self.diff_se

    @property
    def both_positive(self) -> bool:
        return self.lhs > 3.0 * self.lhs_se and self.rhs > 3.0 * self.rhs_se


def _trailing_sum(x: np.ndarray, m: int, n: int) -> np.ndarray:
    """Sum of x at lags m..m+n-1, aligned to t = m+n-1 .. T-1."""
    windows = np.lib.stride_tricks.sliding_window_view(x, n, axis=0)
    sums = windows.sum(axis=-1)
    # window ending at t-m pairs with t; the last m windows have no t
    return sums[: len(x) - (m + n - 1)]


def momentum_covariance_check(
    beta: np.ndarray,
    factor: AR1Params,
    idio_vol: float,
    m: int,
    n: int,
    T: int,
    seed: int,
    burn_in: int = 100,
    n_batches: int = DEFAULT_BATCHES,
) -> CovarianceCheck:
    """Estimate both sides of the comovement identity on a one-factor panel.

    Simulates r_t = beta f_t + e_t with an AR(1) (possibly persistence-free)
    homoskedastic factor and i.i.d. idiosyncratic noise, builds the raw
    momentum products for the given (m, n), and returns the covariance of
    the two PNLs against beta'beta times the variance of the factor PNL,
    each with batch-means standard errors.
    """
    if m < 1 or n < 1:
        raise ParameterError("need m >= 1 and n >= 1")
    beta = np.asarray(beta, float)
    rng_seed = np.random.default_rng(seed)
    length = burn_in + T + m + n
    f = simulate_ar1(factor, length, rng_seed, burn_in=0)
    e = idio_vol * rng_seed.standard_normal((length, len(beta)))
    r = np.outer(f, beta) + e

    t0 = m + n - 1
    sig_f = _trailing_sum(f, m, n)
    pf = (sig_f * f[t0:])[burn_in:]
    sig_r = _trailing_sum(r, m, n)
    ps = ((sig_r * r[t0:]).sum(axis=1))[burn_in:]

    size, used = _batch_slices(len(pf), n_batches)
    pf, ps = pf[:used], ps[:used]
    mf, ms = pf.mean(), ps.mean()
    dpf = (pf - mf).reshape(n_batches, size)
    dps = (ps - ms).reshape(n_batches, size)
    bpb = float(beta @ beta)
    lhs_b = (dpf * dps).mean(axis=1)
    rhs_b = bpb * (dpf * dpf).mean(axis=1)
    diff_b = lhs_b - rhs_b
    root = np.sqrt(n_batches)
    return CovarianceCheck(
        float(lhs_b.mean()),
        float(rhs_b.mean()),
        float(lhs_b.std(ddof=1) / root),
        float(rhs_b.std(ddof=1) / root),
        float(diff_b.mean()),
        float(diff_b.std(ddof=1) / root),
    )


# ---------------------------------------------------------------------------
# Verification battery


@dataclass(frozen=True)
class VerificationCheck:
    """One lhs-vs-rhs comparison; ``passed`` is None for informational rows."""

    name: str
    lhs: float
    rhs: float
    se: float | None
    mode: str  # "3se" | "rel" | "bound" | "info"
    passed: bool | None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "se": self.se,
            "mode": self.mode,
            "passed": self.passed,
            "note": self.note,
        }


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple[VerificationCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.passed is not None)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def _rel_close(lhs: float, rhs: float, tol: float = 1e-12) -> bool:
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return abs(lhs - rhs) <= tol * max(scale, 1.0)


def check_autocovariances(
    params: ModelParams,
    return_values: np.ndarray,
    k_max: int,
    n_batches: int = DEFAULT_BATCHES,
) -> list[VerificationCheck]:
    """Elementwise 3-SE comparison of sample vs closed-form Omega_1..k_max."""
    omegas = autocovariance_matrices(params, k_max)
    checks = []
    for k in range(1, k_max + 1):
        est, se = sample_autocovariance(return_values, k, n_batches)
        target = omegas.omega(k)
        dev = np.abs(est - target)
        ok = (dev <= 3.0 * se) | ((se == 0.0) & (dev == 0.0))
        z = dev / np.maximum(se, 1e-300)
        i, j = np.unravel_index(int(np.argmax(z)), z.shape)
        checks.append(
            VerificationCheck(
                f"autocovariance_k{k}",
                float(est[i, j]),
                float(target[i, j]),
                float(se[i, j]),
                "3se",
                bool(ok.all()),
                f"worst element ({i},{j}) of {est.shape[0]}x{est.shape[1]}",
            )
        )
    return checks


def verify_model(
    params: ModelParams,
    seed: int,
    T: int = 1_000_000,
    k_max: int = 3,
    factor_k: int = 6,
    stock_k: int = 3,
    depth: int = 200,
    recon_T: int = 200_000,
    burn_in: int = DEFAULT_BURN_IN,
    eq3: dict | None = None,
    n_batches: int = DEFAULT_BATCHES,
) -> VerificationReport:
    """Run the full closed-form-vs-Monte-Carlo battery on one parameter set.

    Enforced checks: elementwise autocovariance agreement at 3 SE, the
    factor and stock momentum moments at 3 SE, the two-path identity
    w'Omega_k w = momentum term at 1e-12, exact geometric decay of the
    momentum term, and the truncated-solution bound. Informational rows
    report the reduced stock-momentum expressions (variance part, and with
    the plain mu'mu mean term) without affecting the verdict. ``eq3`` is an
    optional dict of keyword arguments for
    :func:`momentum_covariance_check`.
    """
    path = simulate(params, T, seed, burn_in)
    R = path.panel.values
    F = path.factor.values
    deep = max(k_max, factor_k, stock_k)
    omegas = autocovariance_matrices(params, deep)

    checks = list(check_autocovariances(params, R, k_max, n_batches))

    for k in range(1, factor_k + 1):
        mc, se = factor_moment_mc(F, k, n_batches)
        moment = expected_factor_momentum(params, k)
        checks.append(
            VerificationCheck(
                f"factor_momentum_k{k}",
                mc,
                moment.total,
                se,
                "3se",
                abs(mc - moment.total) <= 3.0 * se,
            )
        )
        w_omega_w = float(params.w @ omegas.omega(k) @ params.w)
        checks.append(
            VerificationCheck(
                f"factor_momentum_two_path_k{k}",
                w_omega_w,
                moment.momentum_term,
                None,
                "rel",
                _rel_close(w_omega_w, moment.momentum_term),
                "w'Omega_k w vs scalar momentum term",
            )
        )

    for k in range(1, factor_k):
        lhs = expected_factor_momentum(params, k + 1).momentum_term
        rhs = params.a * expected_factor_momentum(params, k).momentum_term
        checks.append(
            VerificationCheck(
                f"momentum_decay_k{k}",
                lhs,
                rhs,
                None,
                "rel",
                _rel_close(lhs, rhs),
                "momentum term decays geometrically at rate a",
            )
        )

    for k in range(1, stock_k + 1):
        mc, se = stock_moment_mc(R, k, n_batches)
        moment = expected_stock_momentum(params, k, omegas)
        checks.append(
            VerificationCheck(
                f"stock_momentum_k{k}",
                mc,
                moment.total,
                se,
                "3se",
                abs(mc - moment.total) <= 3.0 * se,
            )
        )
        checks.append(
            VerificationCheck(
                f"stock_momentum_reduced_k{k}",
                moment.reduced_term,
                moment.trace_term,
                None,
                "info",
                None,
                "reduced scalar form vs tr(Omega_k); "
                f"agree={_rel_close(moment.reduced_term, moment.trace_term)}",
            )
        )
        checks.append(
            VerificationCheck(
                f"stock_momentum_plain_drift_k{k}",
                moment.reduced_term + moment.drift_term,
                mc,
                se,
                "info",
                None,
                "reduced form with plain mu'mu mean term vs Monte Carlo; "
                f"agree={abs(moment.reduced_term + moment.drift_term - mc) <= 3.0 * se}",
            )
        )

    recon = reconstruction_check(params, recon_T, seed + 1, depth, burn_in)
    checks.append(
        VerificationCheck(
            "return_solution",
            recon.max_deviation,
            recon.tail_bound,
            None,
            "bound",
            recon.passed,
            f"max deviation vs geometric tail bound at depth {depth}",
        )
    )

    if eq3 is not None:
        cov = momentum_covariance_check(**eq3)
        checks.append(
            VerificationCheck(
                "momentum_covariance",
                cov.lhs,
                cov.rhs,
                cov.diff_se,
                "3se",
                cov.agrees and cov.both_positive,
                "cov(factor pnl, stock pnl) vs beta'beta var(factor pnl); "
                "requires agreement and positivity at 3 SE",
            )
        )

    return VerificationReport(tuple(checks))
