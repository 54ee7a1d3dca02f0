"""Seeded simulators for one-step log-return processes.

Random numbers come from PCG64 seeded with ``SeedSequence(seed,
spawn_key=(stream,))``; simulators use stream 0 and other consumers
(bootstrap resampling, for instance) take their own stream ids.  A batch
of ``n_paths`` paths of ``n`` steps consumes draws path-major, so path
``i`` is draws ``[i*n, (i+1)*n)`` and a single simulated series uses
the same draws as path 0 of any batch with the same seed and length.
Output is bit-identical for identical (spec, n, seed, n_paths); for fGn
the batched triangular solve may round path 0 differently from a
single-column solve in the last bits.  Standard normals are
produced by the inverse normal CDF applied to the top 53 bits of each raw
64-bit draw, so nothing depends on numpy's Gaussian sampler, whose
algorithm is not covered by its stability guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtri

from .sample import ReturnSeries

__all__ = [
    "PathError",
    "PathModelSpec",
    "IIDGaussian",
    "ARMA",
    "FGN",
    "OU",
    "parse_model",
    "standard_normals",
    "simulate",
    "simulate_paths",
    "fgn_autocovariance",
    "autocovariance",
    "cumulative_variance",
]


class PathError(ValueError):
    pass


def _stream(seed: int, stream: int) -> np.random.PCG64:
    if seed < 0 or stream < 0:
        raise PathError("seed and stream id must be non-negative integers")
    return np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(stream),)))


def standard_normals(seed: int, stream: int, n: int) -> np.ndarray:
    """``n`` N(0,1) variates from stream ``(seed, stream)`` via the inverse CDF."""
    raw = _stream(seed, stream).random_raw(n)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    return ndtri(u)


def _normal_block(seed, n_steps, n_paths, stream=0):
    # (n_steps, n_paths); column i holds draws [i*n_steps, (i+1)*n_steps)
    z = standard_normals(seed, stream, n_steps * n_paths)
    return z.reshape(n_paths, n_steps).T


class PathModelSpec:
    variant = ""
    stationary_gaussian = True

    def mean_rate(self) -> float:
        raise NotImplementedError

    def spec(self) -> str:
        raise NotImplementedError

    def _simulate_block(self, n_steps, seed, n_paths):
        raise NotImplementedError


def _nonneg(name, v):
    if not (v >= 0 and math.isfinite(v)):
        raise PathError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class IIDGaussian(PathModelSpec):
    m: float = 0.0
    sigma: float = 1.0
    variant = "iid_gaussian"

    def __post_init__(self):
        _nonneg("sigma", self.sigma)

    def mean_rate(self):
        return self.m

    def spec(self):
        return f"iid:m={self.m:.17g},sigma={self.sigma:.17g}"

    def _simulate_block(self, n_steps, seed, n_paths):
        return self.m + self.sigma * _normal_block(seed, n_steps, n_paths)


def _ar_stationary(phi) -> bool:
    if not len(phi):
        return True
    # 1 - phi_1 z - ... - phi_p z^p
    coeffs = [-c for c in reversed(phi)] + [1.0]
    roots = np.roots(coeffs)
    return bool(np.all(np.abs(roots) > 1.0))


@dataclass(frozen=True)
class ARMA(PathModelSpec):
    phi: Tuple[float, ...] = ()
    theta: Tuple[float, ...] = ()
    mean: float = 0.0
    noise_sigma: float = 1.0
    variant = "arma"

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(float(c) for c in self.phi))
        object.__setattr__(self, "theta", tuple(float(c) for c in self.theta))
        _nonneg("noise_sigma", self.noise_sigma)
        if not _ar_stationary(self.phi):
            raise PathError(f"AR polynomial for phi={self.phi} has a root on or inside the unit circle")

    @property
    def burn_in(self) -> int:
        return 10 * (len(self.phi) + len(self.theta)) + 100

    def mean_rate(self):
        return self.mean

    def spec(self):
        phi = "/".join(f"{c:.17g}" for c in self.phi)
        theta = "/".join(f"{c:.17g}" for c in self.theta)
        return f"arma:phi={phi},theta={theta},mean={self.mean:.17g},sigma={self.noise_sigma:.17g}"

    def psi_weights(self, n: int) -> np.ndarray:
        """MA(infinity) weights psi_0..psi_{n-1}."""
        psi = np.zeros(n)
        psi[0] = 1.0
        for j in range(1, n):
            acc = self.theta[j - 1] if j <= len(self.theta) else 0.0
            for i, c in enumerate(self.phi[:j], start=1):
                acc += c * psi[j - i]
            psi[j] = acc
        return psi

    def autocovariance(self, lags) -> np.ndarray:
        lags = np.atleast_1d(np.asarray(lags, dtype=int))
        if self.phi:
            rho = 1.0 / np.min(np.abs(np.roots([-c for c in reversed(self.phi)] + [1.0])))
        else:
            rho = 0.0
        span = 50 if rho == 0.0 else int(min(1e6, max(200, math.log(1e-18) / math.log(rho))))
        n = span + int(lags.max()) + len(self.theta) + 1
        psi = self.psi_weights(n)
        s2 = self.noise_sigma ** 2
        return np.array([s2 * float(psi[: n - k] @ psi[k:]) for k in lags])

    def _simulate_block(self, n_steps, seed, n_paths):
        p, q = len(self.phi), len(self.theta)
        burn = self.burn_in
        eps = self.noise_sigma * _normal_block(seed, burn + n_steps, n_paths)
        y = np.zeros_like(eps)
        phi, theta = self.phi, self.theta
        for t in range(burn + n_steps):
            acc = eps[t].copy()
            for i in range(1, p + 1):
                if t - i >= 0:
                    acc += phi[i - 1] * y[t - i]
            for j in range(1, q + 1):
                if t - j >= 0:
                    acc += theta[j - 1] * eps[t - j]
            y[t] = acc
        return self.mean + y[burn:]


def fgn_autocovariance(H: float, sigma: float, lag) -> np.ndarray | float:
    """(sigma^2/2)(|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H})."""
    if not 0.0 < H < 1.0:
        raise PathError(f"Hurst parameter must lie in (0, 1), got {H}")
    k = np.abs(np.asarray(lag, dtype=float))
    h2 = 2.0 * H
    out = 0.5 * sigma * sigma * (np.abs(k + 1.0) ** h2 - 2.0 * k ** h2 + np.abs(k - 1.0) ** h2)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class FGN(PathModelSpec):
    hurst: float = 0.5
    sigma: float = 1.0
    mean: float = 0.0
    variant = "fgn"

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise PathError(f"Hurst parameter must lie in (0, 1), got {self.hurst}")
        _nonneg("sigma", self.sigma)

    def mean_rate(self):
        return self.mean

    def spec(self):
        return f"fgn:hurst={self.hurst:.17g},sigma={self.sigma:.17g},mean={self.mean:.17g}"

    def autocovariance(self, lags):
        return np.atleast_1d(fgn_autocovariance(self.hurst, self.sigma, lags))

    def _simulate_block(self, n_steps, seed, n_paths):
        z = _normal_block(seed, n_steps, n_paths)
        if self.sigma == 0.0:
            return np.full((n_steps, n_paths), float(self.mean))
        return self.mean + _hosking(self.autocovariance(np.arange(n_steps)), z)


def _levinson(gamma: np.ndarray):
    """Yield (k, phi_k, v_k): prediction weights on x_{k-1}, ..., x_0 and the innovation variance."""
    n = gamma.size
    phi = np.zeros(n)
    v = float(gamma[0])
    yield 0, phi[:0], v
    for k in range(1, n):
        prev = phi[: k - 1].copy()
        kappa = (gamma[k] - prev @ gamma[k - 1:0:-1]) / v
        phi[: k - 1] = prev - kappa * prev[::-1]
        phi[k - 1] = kappa
        v *= 1.0 - kappa * kappa
        yield k, phi[:k], max(v, 0.0)


_DENSE_LIMIT = 4096


def _hosking(gamma: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Exact stationary Gaussian sample via the Durbin-Levinson recursion.

    ``gamma`` holds autocovariances at lags 0..n-1 and ``z`` is an
    (n, n_paths) block of standard normals; row k of the result is the
    conditional mean given rows < k plus the innovation sqrt(v_k) z_k.
    Up to ``_DENSE_LIMIT`` steps the recursion is assembled into the unit
    lower-triangular system (I - Phi) x = sqrt(v) z and solved in one call;
    beyond that it runs row by row in O(n) memory.
    """
    n = gamma.size
    if n <= _DENSE_LIMIT:
        A = np.eye(n)
        sd = np.empty(n)
        for k, phi_k, v in _levinson(gamma):
            A[k, :k] = -phi_k[::-1]
            sd[k] = math.sqrt(v)
        return solve_triangular(A, sd[:, None] * z, lower=True, unit_diagonal=True)
    x = np.empty_like(z)
    for k, phi_k, v in _levinson(gamma):
        # phi_k[j-1] weights x_{k-j}
        x[k] = phi_k[::-1] @ x[:k] + math.sqrt(v) * z[k]
    return x


@dataclass(frozen=True)
class OU(PathModelSpec):
    kappa: float = 1.0
    theta_level: float = 0.0
    sigma: float = 1.0
    x0: float = 0.0
    dt: float = 1.0
    variant = "ou"
    stationary_gaussian = False

    def __post_init__(self):
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise PathError(f"kappa must be > 0, got {self.kappa}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise PathError(f"dt must be > 0, got {self.dt}")
        _nonneg("sigma", self.sigma)

    def mean_rate(self):
        return self.theta_level

    def spec(self):
        return (f"ou:kappa={self.kappa:.17g},theta={self.theta_level:.17g},sigma={self.sigma:.17g},"
                f"x0={self.x0:.17g},dt={self.dt:.17g}")

    def _simulate_block(self, n_steps, seed, n_paths):
        z = _normal_block(seed, n_steps, n_paths)
        decay = math.exp(-self.kappa * self.dt)
        sd = self.sigma * math.sqrt(-math.expm1(-2.0 * self.kappa * self.dt) / (2.0 * self.kappa))
        x = np.empty_like(z)
        level = np.full(n_paths, float(self.x0))
        for t in range(n_steps):
            level = self.theta_level + (level - self.theta_level) * decay + sd * z[t]
            x[t] = level
        return x


def _floats(text):
    return tuple(float(t) for t in text.split("/") if t.strip()) if text else ()


def parse_model(text: str) -> PathModelSpec:
    """Parse ``fgn:hurst=0.3,sigma=0.2,mean=0.07`` style model strings.

    ARMA coefficient lists are separated by ``/``: ``arma:phi=0.5/0.1,theta=0.2``.
    """
    from .utility import parse_params

    name, _, rest = text.strip().partition(":")
    name = name.strip().lower()
    try:
        params = parse_params(rest)
    except ValueError as exc:
        raise PathError(str(exc)) from None

    def take(allowed, **renames):
        unknown = set(params) - set(allowed)
        if unknown:
            raise PathError(f"unknown {name} parameters {sorted(unknown)}")
        return {renames.get(k, k): v for k, v in params.items()}

    if name in ("iid", "iid_gaussian", "gaussian"):
        kw = take(("m", "mean", "sigma"), mean="m")
        return IIDGaussian(**{k: float(v) for k, v in kw.items()})
    if name == "fgn":
        kw = take(("hurst", "H", "sigma", "mean", "m"), H="hurst", m="mean")
        return FGN(**{k: float(v) for k, v in kw.items()})
    if name == "arma":
        kw = take(("phi", "theta", "mean", "m", "sigma", "noise_sigma"), m="mean", sigma="noise_sigma")
        out = {}
        for k, v in kw.items():
            out[k] = _floats(v) if k in ("phi", "theta") else float(v)
        return ARMA(**out)
    if name == "ou":
        kw = take(("kappa", "theta", "theta_level", "sigma", "x0", "dt"), theta="theta_level")
        return OU(**{k: float(v) for k, v in kw.items()})
    raise PathError(f"unknown model {name!r}")


def simulate_paths(spec: PathModelSpec, n_steps: int, seed: int, n_paths: int = 1) -> np.ndarray:
    """(n_paths, n_steps) array of simulated values (stream 0, path-major draws)."""
    if int(n_steps) < 1 or int(n_paths) < 1:
        raise PathError("n_steps and n_paths must be positive")
    block = spec._simulate_block(int(n_steps), int(seed), int(n_paths))
    return np.ascontiguousarray(block.T)


def simulate(spec: PathModelSpec, n_steps: int, seed: int) -> ReturnSeries:
    """A single series (stream 0).  For ``OU`` this is the level path."""
    return ReturnSeries(simulate_paths(spec, n_steps, seed, 1)[0])


def autocovariance(spec: PathModelSpec, lags) -> np.ndarray:
    if isinstance(spec, IIDGaussian):
        lags = np.atleast_1d(np.asarray(lags))
        return np.where(lags == 0, spec.sigma ** 2, 0.0)
    if isinstance(spec, (ARMA, FGN)):
        return spec.autocovariance(lags)
    raise PathError(f"{spec.variant} is not a stationary return model")


def cumulative_variance(spec: PathModelSpec, T: int) -> float:
    """Var(r_1 + ... + r_T) = sum_{|k|<T} (T - |k|) gamma(k)."""
    T = int(T)
    if T < 1:
        raise PathError("T must be positive")
    if isinstance(spec, IIDGaussian):
        return spec.sigma ** 2 * T
    if isinstance(spec, FGN):
        return spec.sigma ** 2 * float(T) ** (2.0 * spec.hurst)
    if isinstance(spec, ARMA):
        g = spec.autocovariance(np.arange(T))
        k = np.arange(1, T)
        return float(T * g[0] + 2.0 * np.sum((T - k) * g[1:]))
    raise PathError(f"cumulative variance is not defined for the {spec.variant} model")
