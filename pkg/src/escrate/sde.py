"""Euler-Maruyama simulation of radial diffusions.

One-dimensional chains x_{k+1} = max(floor, x_k + theta(x_k) dt + sigma(x_k)
sqrt(dt) xi_k) with counter-based per-path noise, plus radial drifts for
model manifolds and radial elliptic diffusions, and a full n-dimensional
isotropic diffusion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .errors import DomainError, NonFiniteState, SingularOrigin
from .profiles import (
    DEFAULT_ORIGIN_FLOOR,
    ManifoldModel,
    RadialCoefficient,
    drift_L_rho,
    rho_tilde_inverse,
)

_SQRT2 = math.sqrt(2.0)
_NOISE_BLOCK = 512  # steps of noise generated per RNG call

__all__ = [
    "Sde1D",
    "PathEnsemble",
    "HyperbolicBound",
    "euler_path",
    "ensemble",
    "radial_drift",
    "euclidean_diffusion_nd",
]


@dataclass(frozen=True)
class Sde1D:
    """A scalar diffusion dx = theta(x) dt + sigma(x) dw, reflected at a floor.

    ``drift`` and ``sigma`` must accept numpy arrays. ``lipschitz``, when
    given, is the caller's promise of a drift Lipschitz bound; the coupled
    monotonicity of the Euler map needs dt <= 1/lipschitz.
    """

    drift: Callable
    sigma: Callable = None
    floor: float = DEFAULT_ORIGIN_FLOOR
    lipschitz: Optional[float] = None
    # set when sigma is a known constant; lets simulation kernels skip the
    # per-step sigma evaluation
    sigma_const: Optional[float] = None

    def __post_init__(self):
        if self.sigma is None:
            object.__setattr__(self, "sigma", lambda x: np.full_like(
                np.asarray(x, dtype=float), _SQRT2))
            object.__setattr__(self, "sigma_const", _SQRT2)
        if self.floor <= 0:
            raise DomainError("floor must be positive")
        if self.lipschitz is not None and self.lipschitz <= 0:
            raise DomainError("lipschitz bound must be positive")


@dataclass
class PathEnsemble:
    """Grid values of a batch of Euler chains, with reproduction parameters.

    ``values`` has shape (n_paths, len(times)); ``times`` is the stored grid
    (possibly thinned by ``store_every``). ``first_exit[i]`` is the first
    stored grid time with value > barrier, NaN when the path never exits.
    ``floor_hits[i]`` counts steps where the reflection floor activated.
    """

    times: np.ndarray
    values: np.ndarray
    dt: float
    T: float
    n_paths: int
    master_seed: int
    barrier: Optional[float] = None
    first_exit: Optional[np.ndarray] = None
    floor_hits: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.values.shape != (self.n_paths, self.times.size):
            raise DomainError("ensemble values shape inconsistent with grid")


def _path_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def _check_sim_args(sde: Sde1D, x0: float, T: float, dt: float):
    if x0 < sde.floor:
        raise DomainError(f"x0={x0} below floor {sde.floor}")
    if dt <= 0 or T < dt:
        raise DomainError("need dt > 0 and T >= dt")


def euler_path(sde: Sde1D, x0: float, T: float, dt: float, seed: int) -> np.ndarray:
    """Single Euler-Maruyama path on the grid 0, dt, ..., floor(T/dt)*dt.

    Noise comes from a counter-based stream keyed by the seed, so the path
    is reproducible independently of how other paths are scheduled.
    """
    _check_sim_args(sde, x0, T, dt)
    n_steps = int(T / dt)
    out = np.empty(n_steps + 1)
    out[0] = x0
    x = float(x0)
    rng = _path_generator(seed)
    sqdt = math.sqrt(dt)
    k = 0
    while k < n_steps:
        block = min(_NOISE_BLOCK, n_steps - k)
        xi = rng.standard_normal(block)
        for j in range(block):
            x = x + float(sde.drift(x)) * dt + float(sde.sigma(x)) * sqdt * xi[j]
            if not math.isfinite(x):
                raise NonFiniteState(k + j, f"non-finite state at step {k + j}")
            if x < sde.floor:
                x = sde.floor
            out[k + j + 1] = x
        k += block
    return out


def ensemble(sde: Sde1D, x0: float, T: float, dt: float, n_paths: int,
             master_seed: int, barrier: Optional[float] = None,
             store_every: int = 1,
             shared_noise_seed: Optional[int] = None) -> PathEnsemble:
    """Simulate n_paths chains, vectorized across paths, stepped in blocks.

    Path i draws its noise from a stream keyed by master_seed XOR i, so the
    result is bit-identical however the paths are scheduled. ``store_every``
    thins the stored grid (step 0 and every store_every-th step thereafter).
    ``shared_noise_seed`` reuses another ensemble's noise streams — the
    coupling device behind drift-domination checks.
    """
    _check_sim_args(sde, x0, T, dt)
    if n_paths < 1:
        raise DomainError("n_paths must be >= 1")
    if store_every < 1:
        raise DomainError("store_every must be >= 1")
    n_steps = int(T / dt)
    noise_key = master_seed if shared_noise_seed is None else shared_noise_seed
    gens = [_path_generator(noise_key ^ i) for i in range(n_paths)]

    stored_idx = np.arange(0, n_steps + 1, store_every)
    if stored_idx[-1] != n_steps:
        stored_idx = np.append(stored_idx, n_steps)
    values = np.empty((n_paths, stored_idx.size))
    x = np.full(n_paths, float(x0))
    values[:, 0] = x
    floor_hits = np.zeros(n_paths, dtype=np.int64)
    exit_step = np.full(n_paths, -1, dtype=np.int64)
    if barrier is not None and x0 > barrier:
        exit_step[:] = 0

    sqdt = math.sqrt(dt)
    store_pos = 1
    next_store = stored_idx[1] if stored_idx.size > 1 else None
    k = 0
    while k < n_steps:
        block = min(_NOISE_BLOCK, n_steps - k)
        xi = np.empty((n_paths, block))
        for i, g in enumerate(gens):
            xi[i] = g.standard_normal(block)
        for j in range(block):
            x = x + np.asarray(sde.drift(x), dtype=float) * dt \
                  + np.asarray(sde.sigma(x), dtype=float) * (sqdt * xi[:, j])
            bad = ~np.isfinite(x)
            if bad.any():
                raise NonFiniteState(k + j, f"path {int(np.argmax(bad))} "
                                     f"non-finite at step {k + j}")
            below = x < sde.floor
            if below.any():
                floor_hits += below
                x = np.where(below, sde.floor, x)
            step = k + j + 1
            if barrier is not None:
                newly = (exit_step < 0) & (x > barrier)
                if newly.any():
                    exit_step[newly] = step
            if next_store is not None and step == next_store:
                values[:, store_pos] = x
                store_pos += 1
                next_store = stored_idx[store_pos] if store_pos < stored_idx.size else None
        k += block

    first_exit = None
    if barrier is not None:
        first_exit = np.where(exit_step >= 0, exit_step * dt, np.nan)
    return PathEnsemble(times=stored_idx * dt, values=values, dt=dt,
                        T=n_steps * dt, n_paths=n_paths,
                        master_seed=master_seed, barrier=barrier,
                        first_exit=first_exit, floor_hits=floor_hits)


# ---------------------------------------------------------------------------
# Radial drifts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HyperbolicBound:
    """Dominating drift theta(r) = (n-1) sqrt(K) (1 + 1/(sqrt(K) r)),
    a pointwise upper bound for the hyperbolic mean curvature
    (n-1) sqrt(K) coth(sqrt(K) r)."""

    n: int
    K: float

    def __post_init__(self):
        if self.n < 2 or self.K <= 0:
            raise DomainError("HyperbolicBound needs n >= 2, K > 0")


def radial_drift(source: Union[ManifoldModel, Tuple[RadialCoefficient, int],
                               HyperbolicBound],
                 floor: float = DEFAULT_ORIGIN_FLOOR) -> Callable:
    """Drift function for the radial comparison chain.

    A ManifoldModel gives its mean curvature m(r); a (coefficient, dimension)
    pair gives the radial-generator drift expressed in the intrinsic radius;
    a HyperbolicBound gives the dominating majorant of coth.
    """
    if isinstance(source, ManifoldModel):
        model = source

        def drift(r):
            r = np.asarray(r, dtype=float)
            if np.any(r < floor):
                raise SingularOrigin(f"radius below floor {floor}")
            if model.log_derivative is not None:
                out = (model.n - 1) * np.asarray(model.log_derivative(r), dtype=float)
            else:
                xi = np.asarray(model.xi(r), dtype=float)
                if np.any(xi <= 0):
                    raise DomainError("warp function nonpositive on the path")
                out = (model.n - 1) * np.asarray(model.xi_prime(r), dtype=float) / xi
            return float(out) if out.ndim == 0 else out

        return drift
    if isinstance(source, HyperbolicBound):
        base = (source.n - 1) * math.sqrt(source.K)
        sk = math.sqrt(source.K)

        def drift(r):
            r = np.asarray(r, dtype=float)
            if np.any(r < floor):
                raise SingularOrigin(f"radius below floor {floor}")
            out = base * (1.0 + 1.0 / (sk * r))
            return float(out) if out.ndim == 0 else out

        return drift
    if isinstance(source, tuple) and len(source) == 2:
        coeff, n = source
        if not isinstance(coeff, RadialCoefficient):
            raise DomainError("expected (RadialCoefficient, dimension)")

        def drift(rho):
            scalar = np.ndim(rho) == 0
            rho_arr = np.atleast_1d(np.asarray(rho, dtype=float))
            out = np.array([drift_L_rho(coeff, n, rho_tilde_inverse(coeff, p),
                                        floor=floor) for p in rho_arr])
            return float(out[0]) if scalar else out

        return drift
    raise DomainError(f"cannot build a radial drift from {type(source).__name__}")


def euclidean_diffusion_nd(coeff: RadialCoefficient, n: int, x0, T: float,
                           dt: float, seed: int,
                           floor: float = DEFAULT_ORIGIN_FLOOR):
    """Isotropic n-dimensional diffusion dX_i = a'(|X|) X_i/|X| dt
    + sqrt(2 a(|X|)) dW_i; returns the Euclidean and intrinsic radius traces.

    The state is reflected radially to the floor sphere if |X| falls below
    the floor.
    """
    if n < 2:
        raise DomainError("n must be >= 2")
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (n,):
        raise DomainError(f"x0 must be a point in {n}-space")
    r = float(np.linalg.norm(x))
    if r < floor:
        raise DomainError(f"|x0|={r} below floor {floor}")
    if dt <= 0 or T < dt:
        raise DomainError("need dt > 0 and T >= dt")

    n_steps = int(T / dt)
    radius = np.empty(n_steps + 1)
    radius[0] = r
    rng = _path_generator(seed)
    sqdt = math.sqrt(dt)
    k = 0
    while k < n_steps:
        block = min(_NOISE_BLOCK, n_steps - k)
        xi = rng.standard_normal((block, n))
        for j in range(block):
            r = float(np.linalg.norm(x))
            a = coeff.a(r)
            ap = coeff.a_prime(r)
            x = x + (ap / r) * x * dt + math.sqrt(2.0 * a) * sqdt * xi[j]
            if not np.all(np.isfinite(x)):
                raise NonFiniteState(k + j, f"non-finite state at step {k + j}")
            r = float(np.linalg.norm(x))
            if r < floor:
                # reflect radially out to the floor sphere
                x = x * (floor / r) if r > 0 else np.append(floor, np.zeros(n - 1))
                r = floor
            radius[k + j + 1] = r
        k += block

    intrinsic = np.array([coeff.rho_tilde_closed(rr) for rr in radius])
    return radius, intrinsic
