"""Population spectrum and largest-eigenvalue estimation.

Starting from the eigenvalues of a sample covariance, recover a
discretized population spectral distribution by inverting the
Marchenko-Pastur fixed point at random complex probes (``mplp``), by
matching trace moments (``mpmo``), or rescale the top sample eigenvalue
by its asymptotic edge factor (``naive``, fast but inconsistent). The
largest population eigenvalue is read off as a high quantile of the
recovered distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EstimationError, InputError
from .lp import LinearProgram, solve_l1_fit, solve_lp

DEFAULT_JT = 100
DEFAULT_JZ = 200
DEFAULT_MOMENTS = 6
_SINGULAR_TOL = 1e-12
_RESAMPLE_ATTEMPTS = 10


@dataclass
class SampleSpectrum:
    """Eigenvalues of a sample covariance plus the dimensions behind it."""

    eigenvalues: np.ndarray
    n: int
    p1: int

    def __post_init__(self):
        ev = np.sort(np.asarray(self.eigenvalues, dtype=float))
        if ev.size != self.p1:
            raise InputError(f"expected {self.p1} eigenvalues, got {ev.size}")
        if not np.all(np.isfinite(ev)):
            raise InputError("eigenvalues contain non-finite entries")
        if ev[0] < -1e-10:
            raise InputError(f"eigenvalue {ev[0]:.3e} is too negative for a PSD matrix")
        np.maximum(ev, 0.0, out=ev)
        self.eigenvalues = ev
        if self.n < 1 or self.p1 < 1:
            raise InputError("need n >= 1 and p1 >= 1")

    @property
    def tau_sq(self) -> float:
        return self.p1 / self.n

    @classmethod
    def from_residuals(cls, eta: np.ndarray) -> "SampleSpectrum":
        """Spectrum of (1/n) eta' eta for an n x p1 residual matrix."""
        eta = np.asarray(eta, dtype=float)
        if eta.ndim != 2:
            raise InputError("residual matrix must be 2-d")
        if not np.all(np.isfinite(eta)):
            raise InputError("residual matrix contains non-finite entries")
        n, p1 = eta.shape
        s = eta.T @ eta / n
        return cls(np.linalg.eigvalsh(s), n, p1)


@dataclass
class SpectralModel:
    """Discretized population spectral distribution."""

    support: np.ndarray
    weights: np.ndarray
    moments_used: list[int]
    moment_estimates: np.ndarray = field(default=None, repr=False)
    method: str = ""

    def __post_init__(self):
        self.support = np.asarray(self.support, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.support.shape != self.weights.shape:
            raise InputError("support/weights shape mismatch")
        if np.any(self.weights < -1e-8):
            raise InputError("weights must be nonnegative")
        if abs(self.weights.sum() - 1.0) > 1e-8:
            raise InputError("weights must sum to one")


@dataclass
class ProbePoints:
    """Complex collocation points z_k = u_k + i/sqrt(n) in the upper half plane."""

    z_values: np.ndarray
    u_seed: int

    def __post_init__(self):
        self.z_values = np.asarray(self.z_values, dtype=complex)
        if np.any(self.z_values.imag <= 0):
            raise InputError("all probes must have positive imaginary part")


def stieltjes_empirical(spec: SampleSpectrum, z: complex) -> complex:
    """Companion Stieltjes transform of the empirical spectral distribution.

    Equals -(1 - p1/n)/z + (1/n) tr((S_n - z I)^{-1}), evaluated from the
    stored eigenvalues; only defined for IM(z) > 0.
    """
    z = complex(z)
    if z.imag <= 0:
        raise InputError("stieltjes transform requires IM(z) > 0")
    n, p1 = spec.n, spec.p1
    return -(1.0 - p1 / n) / z + np.sum(1.0 / (spec.eigenvalues - z)) / n


def _stieltjes_many(spec: SampleSpectrum, zs: np.ndarray) -> np.ndarray:
    n, p1 = spec.n, spec.p1
    diff = spec.eigenvalues[None, :] - zs[:, None]
    return -(1.0 - p1 / n) / zs + (1.0 / diff).sum(axis=1) / n


def tian_moments(spec: SampleSpectrum) -> np.ndarray:
    """Bias-corrected estimates of the first four population spectral moments.

    The second-moment correction subtracts tau^2 * xi_1 squared; the raw
    first empirical moment enters uncorrected.
    """
    n = spec.n
    if n < 7:
        raise InputError("moment corrections need n >= 7")
    ev = spec.eigenvalues
    xi1, xi2, xi3, xi4 = (float(np.mean(ev**k)) for k in range(1, 5))
    t2 = spec.tau_sq
    c2 = n**2 / ((n - 1) * (n + 2))
    c3 = c2 * n**2 / ((n - 2) * (n + 4))
    c4 = c3 * n * (n**2 + n + 2) / ((n - 3) * (n + 1) * (n + 6))
    z1 = xi1
    z2 = c2 * (xi2 - t2 * xi1**2)
    z3 = c3 * (xi3 - 3 * t2 * xi2 * xi1 + 2 * t2**2 * xi1**3)
    z4 = c4 * (xi4 - 4 * t2 * xi3 * xi1
               - t2 * xi2**2 * (2 * n**2 + 3 * n - 6) / (n**2 + n + 2)
               + t2**2 * xi1**2 * (2 * xi2 - t2 * xi1**2) * (5 * n**2 + 6 * n) / (n**2 + n + 2))
    return np.array([z1, z2, z3, z4])


def kong_moments(eta: np.ndarray, m_moments: int) -> np.ndarray:
    """Trace-based estimates of the first ``m_moments`` spectral moments.

    Works on the n x n Gram matrix of the residual rows, so it never forms
    the p1 x p1 covariance; the k-th estimate uses the strictly upper
    triangular part of the Gram matrix raised to the (k-1)-th power.
    """
    eta = np.asarray(eta, dtype=float)
    if eta.ndim != 2:
        raise InputError("residual matrix must be 2-d")
    n, p1 = eta.shape
    if m_moments < 1:
        raise InputError("need at least one moment")
    if m_moments > n:
        raise InputError(f"cannot estimate {m_moments} moments from n={n} rows")
    s = eta @ eta.T / n
    g = np.triu(s, k=1)
    out = np.empty(m_moments)
    w = np.eye(n)
    for k in range(1, m_moments + 1):
        tr = float(np.sum(w * s)) if k > 1 else float(np.trace(s))
        out[k - 1] = n**k / (p1 * math.comb(n, k)) * tr
        if k < m_moments:
            w = w @ g if k > 1 else g.copy()
    return out


def support_interval(spec: SampleSpectrum) -> tuple[float, float]:
    """Grid interval [a, b] = [lmin/lmax, lmax] of the sample spectrum."""
    lmax = float(spec.eigenvalues[-1])
    lmin = float(spec.eigenvalues[0])
    if lmax <= 0:
        raise EstimationError("sample spectrum is identically zero")
    a = lmin / lmax
    if a > lmax:
        raise EstimationError(
            "degenerate grid: lmin/lmax exceeds lmax; rescale the data")
    return a, lmax


def make_probes(spec: SampleSpectrum, support: np.ndarray, j_z: int,
                seed: int) -> ProbePoints:
    """Draw z_k = u_k + i/sqrt(n) with u_k standard normal.

    Probes whose denominators 1 + t_j m(z_k) come within 1e-12 of zero for
    any grid point are redrawn, at most 10 times each.
    """
    rng = np.random.default_rng(seed)
    im = 1.0 / math.sqrt(spec.n)
    us = rng.standard_normal(j_z)
    zs = us + 1j * im
    support = np.asarray(support, dtype=float)
    for k in range(j_z):
        for attempt in range(_RESAMPLE_ATTEMPTS + 1):
            mk = stieltjes_empirical(spec, zs[k])
            if np.min(np.abs(1.0 + support * mk)) >= _SINGULAR_TOL:
                break
            if attempt == _RESAMPLE_ATTEMPTS:
                raise EstimationError(f"probe {k} stayed near-singular after resampling")
            zs[k] = rng.standard_normal() + 1j * im
    return ProbePoints(zs, seed)


def _probe_data(spec: SampleSpectrum, probes: ProbePoints,
                support: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stacked real/imaginary collocation rows (x_z, y_z) at the probes."""
    zs = probes.z_values
    mk = _stieltjes_many(spec, zs)
    denom = 1.0 + support[None, :] * mk[:, None]
    if np.min(np.abs(denom)) < _SINGULAR_TOL:
        raise EstimationError("near-singular probe denominator; resample probes")
    ratio = spec.p1 / spec.n
    x_cplx = ratio * support[None, :] / denom
    y_cplx = zs + 1.0 / mk
    x_z = np.vstack([x_cplx.real, x_cplx.imag])
    y_z = np.concatenate([y_cplx.real, y_cplx.imag])
    return x_z, y_z


def build_mp_lp(spec: SampleSpectrum, probes: ProbePoints, support: np.ndarray,
                moments: np.ndarray) -> LinearProgram:
    """Assemble the weight-recovery linear program.

    Variables are (w, wtilde): the J_t grid weights followed by one slack
    per real/imaginary probe residual. Equality rows pin total mass to one
    and each supplied moment; the inequality block bounds the slacks by
    +-(x_z w - y_z).
    """
    support = np.asarray(support, dtype=float)
    moments = np.asarray(moments, dtype=float)
    x_z, y_z = _probe_data(spec, probes, support)
    j_t = support.size
    n_slack = x_z.shape[0]

    powers = np.vstack([support**k for k in range(len(moments) + 1)])
    eq_lhs = np.hstack([powers, np.zeros((powers.shape[0], n_slack))])
    eq_rhs = np.concatenate([[1.0], moments])
    eye = np.eye(n_slack)
    ineq_lhs = np.vstack([np.hstack([-x_z, eye]), np.hstack([x_z, eye])])
    ineq_rhs = np.concatenate([-y_z, y_z])
    cost = np.concatenate([np.zeros(j_t), np.ones(n_slack)])
    return LinearProgram(cost, eq_lhs, eq_rhs, ineq_lhs, ineq_rhs,
                         np.ones(j_t + n_slack, dtype=bool))


def _finalize_weights(raw: np.ndarray) -> np.ndarray:
    w = np.maximum(raw, 0.0)
    total = w.sum()
    if total <= 0:
        raise EstimationError("spectrum weights collapsed to zero")
    return w / total


def estimate_spectrum_mplp(spec: SampleSpectrum, j_t: int = DEFAULT_JT,
                           j_z: int = DEFAULT_JZ, seed: int = 0) -> SpectralModel:
    """Recover grid weights by probe collocation with moment constraints.

    If the four-moment equality system is infeasible on the grid, the
    highest-order moments are dropped one at a time until a feasible
    program remains; the retained orders are recorded in ``moments_used``.
    """
    if not (j_z > j_t >= 2):
        raise InputError("need j_z > j_t >= 2")
    a, b = support_interval(spec)
    support = np.linspace(a, b, j_t)
    moments = tian_moments(spec)
    probes = make_probes(spec, support, j_z, seed)
    for keep in range(4, -1, -1):
        lp = build_mp_lp(spec, probes, support, moments[:keep])
        sol = solve_lp(lp)
        if sol.status == "optimal":
            weights = _finalize_weights(sol.x[:j_t])
            return SpectralModel(support, weights, list(range(1, keep + 1)),
                                 moments, "mplp")
    raise EstimationError("weight recovery infeasible even without moment constraints")


def estimate_spectrum_mpmo(eta: np.ndarray, j_t: int = DEFAULT_JT,
                           m_moments: int = DEFAULT_MOMENTS) -> SpectralModel:
    """Recover grid weights by L1 moment matching on the unit simplex.

    The Vandermonde rows are rescaled by b^{-k} before solving to keep the
    program well conditioned.
    """
    if m_moments < 1:
        raise InputError("need at least one moment")
    if j_t < 1:
        raise InputError("need at least one grid point")
    spec = SampleSpectrum.from_residuals(eta)
    a, b = support_interval(spec)
    support = np.linspace(a, b, j_t)
    zetas = kong_moments(eta, m_moments)
    ks = np.arange(1, m_moments + 1)
    v_scaled = (support[None, :] / b) ** ks[:, None]
    target = zetas / b**ks
    w = solve_l1_fit(v_scaled, target, np.ones((1, j_t)), [1.0])
    return SpectralModel(support, _finalize_weights(w), list(range(1, m_moments + 1)),
                         zetas, "mpmo")


def lambda_max_from_model(model: SpectralModel, p1: int) -> float:
    """Largest-eigenvalue readout: the p1/(p1+1) quantile of the model.

    Falls back to the top grid point when rounding keeps every prefix sum
    below the threshold.
    """
    threshold = p1 / (p1 + 1)
    cum = np.cumsum(model.weights)
    hit = np.flatnonzero(cum >= threshold - 1e-12)
    if hit.size == 0:
        return float(model.support[-1])
    return float(model.support[hit[0]])


def lambda_max_naive(spec: SampleSpectrum) -> float:
    """Edge-factor rescaling of the top sample eigenvalue (not consistent)."""
    tau = math.sqrt(spec.tau_sq)
    return float(spec.eigenvalues[-1]) / (1.0 + tau) ** 2


def estimate_lambda_max(eta: np.ndarray, method, seed: int = 0,
                        j_t: int = DEFAULT_JT, j_z: int = DEFAULT_JZ,
                        m_moments: int = DEFAULT_MOMENTS):
    """Dispatch on an eigenvalue-method tag.

    ``method`` is one of ``"mplp"``, ``"mpmo"``, ``"naive"``, a number
    (used verbatim), or ``"fixed:<value>"``. Returns
    (lambda_max, SpectralModel or None, canonical tag).
    """
    if isinstance(method, (int, float)) and not isinstance(method, bool):
        return float(method), None, f"fixed:{float(method):g}"
    if isinstance(method, str) and method.startswith("fixed:"):
        try:
            value = float(method.split(":", 1)[1])
        except ValueError as exc:
            raise InputError(f"bad fixed eigenvalue spec {method!r}") from exc
        return value, None, f"fixed:{value:g}"
    if method == "naive":
        spec = SampleSpectrum.from_residuals(eta)
        return lambda_max_naive(spec), None, "naive"
    if method == "mplp":
        spec = SampleSpectrum.from_residuals(eta)
        model = estimate_spectrum_mplp(spec, j_t, j_z, seed)
        return lambda_max_from_model(model, spec.p1), model, "mplp"
    if method == "mpmo":
        model = estimate_spectrum_mpmo(eta, j_t, m_moments)
        return lambda_max_from_model(model, eta.shape[1]), model, "mpmo"
    raise InputError(f"unknown eigenvalue method {method!r}")
