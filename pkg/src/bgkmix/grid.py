"""Tensor-product velocity grid, quadrature moments and Maxwellians.

Functions come in two flavours: single-state ones taking :class:`Distribution`
objects, and ``batch_*`` kernels that operate on arrays of shape ``(B, N)``
(``B`` cells, ``N`` velocity nodes). The single-state versions are thin
wrappers around the batched kernels.

All reductions over velocity nodes go through :func:`psum`, i.e. numpy's
pairwise summation along a contiguous last axis. That order depends only on
the number of nodes, so a cell gives bit-identical sums whether it is reduced
alone or as one row of a batch.
"""

from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .params import MixtureParams, SpeciesMoments, interspecies_moments

log = logging.getLogger(__name__)

LOG_FLOOR = 1e-300
MIN_DENSITY = 1e-14
NEWTON_MAX_ITER = 50
NEWTON_TOL = 2e-15
# Residual level accepted when the iteration stagnates at roundoff.
NEWTON_ACCEPT = 1e-12


class DegenerateDensityError(ArithmeticError):
    pass


class NonResolvableMaxwellian(ArithmeticError):
    """The grid cannot carry a positive exponential with the requested moments."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (final relative residual {residual:.3e})")
        self.residual = residual


def psum(a: np.ndarray) -> np.ndarray:
    """Pairwise sum over the last axis in a fixed order."""
    return np.add.reduce(np.ascontiguousarray(a), axis=-1)


@dataclass(frozen=True, eq=False)
class VelocityGrid:
    """Uniform midpoint grid on a box in R^3.

    Nodes are cell centres, ``center + (i - (N-1)/2) * h`` per axis, so a box
    centred at zero is exactly symmetric in floating point.
    """

    counts: tuple[int, int, int]
    lower: np.ndarray
    upper: np.ndarray
    axes: tuple[np.ndarray, np.ndarray, np.ndarray] = field(init=False, repr=False)
    v: np.ndarray = field(init=False, repr=False)
    v2: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    basis: np.ndarray = field(init=False, repr=False)
    basis_scale: float = field(init=False, repr=False)

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        lower = np.asarray(self.lower, dtype=float).reshape(3)
        upper = np.asarray(self.upper, dtype=float).reshape(3)
        if any(c < 4 for c in counts):
            raise ValueError(f"need at least 4 nodes per axis, got {counts}")
        if not np.all(upper > lower):
            raise ValueError("upper bounds must exceed lower bounds")
        center = 0.5 * (lower + upper)
        h = (upper - lower) / np.array(counts)
        axes = tuple(center[k] + (np.arange(counts[k]) - 0.5 * (counts[k] - 1)) * h[k]
                     for k in range(3))
        vx, vy, vz = np.meshgrid(*axes, indexing="ij")
        v = np.stack([vx.ravel(), vy.ravel(), vz.ravel()])
        dv = float(np.prod(h))
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "v2", np.sum(v * v, axis=0))
        object.__setattr__(self, "weights", np.full(v.shape[1], dv))
        # Exponential-family basis (1, v/L, |v|^2/L^2) used by the Maxwellian fit.
        L = float(np.max(np.abs(np.concatenate([lower, upper]))))
        basis = np.empty((5, v.shape[1]))
        basis[0] = 1.0
        basis[1:4] = v / L
        basis[4] = self.v2 / (L * L)
        object.__setattr__(self, "basis_scale", L)
        object.__setattr__(self, "basis", basis)

    @classmethod
    def box(cls, center, half_width, counts) -> "VelocityGrid":
        center = np.broadcast_to(np.asarray(center, dtype=float), (3,))
        half = np.broadcast_to(np.asarray(half_width, dtype=float), (3,))
        if np.isscalar(counts) or np.ndim(counts) == 0:
            counts = (int(counts),) * 3
        return cls(tuple(counts), center - half, center + half)

    @property
    def size(self) -> int:
        return self.v.shape[1]

    @property
    def spacing(self) -> np.ndarray:
        return (self.upper - self.lower) / np.array(self.counts)

    @property
    def cell_volume(self) -> float:
        return float(self.weights[0])

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def integrate(self, values: np.ndarray) -> np.ndarray:
        return psum(values * self.weights)


@dataclass(frozen=True, eq=False)
class Distribution:
    """Nonnegative values of one species on the nodes of a grid (flattened, row-major)."""

    values: np.ndarray
    mass: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            values = values.ravel()
        if not np.all(np.isfinite(values)):
            raise ValueError("distribution values must be finite")
        object.__setattr__(self, "values", values)

    def cube(self, grid: VelocityGrid) -> np.ndarray:
        return self.values.reshape(grid.counts)

    def is_nonnegative(self) -> bool:
        return bool(np.all(self.values >= 0.0))


def build_grid(moments: Sequence[SpeciesMoments], masses: Sequence[float],
               nodes=24, radius: float = 6.0) -> VelocityGrid:
    """Box covering ``u_k +- radius * sqrt(T_k / m_k)`` for every species."""
    if len(moments) == 0:
        raise ValueError("build_grid needs at least one species")
    if radius <= 0:
        raise ValueError("radius must be positive")
    lo = np.full(3, np.inf)
    hi = np.full(3, -np.inf)
    for mom, m in zip(moments, masses, strict=True):
        if mom.T <= 0:
            raise ValueError("temperatures must be positive to size the grid")
        width = radius * math.sqrt(mom.T / m)
        lo = np.minimum(lo, mom.u - width)
        hi = np.maximum(hi, mom.u + width)
    if np.ndim(nodes) == 0:
        nodes = (int(nodes),) * 3
    return VelocityGrid(tuple(nodes), lo, hi)


# -- moments -----------------------------------------------------------------

def batch_moments(F: np.ndarray, mass: float, grid: VelocityGrid):
    """Density, velocity and temperature of each row of ``F``.

    Returns ``(n, u, T)`` with shapes ``(B,)``, ``(B, 3)``, ``(B,)``.
    """
    F = np.atleast_2d(F)
    wF = F * grid.weights
    n = psum(wF)
    if np.any(n < MIN_DENSITY):
        raise DegenerateDensityError(f"density {n.min():.3e} below {MIN_DENSITY}")
    nu = np.stack([psum(wF * grid.v[k]) for k in range(3)], axis=-1)
    u = nu / n[:, None]
    c2 = np.zeros_like(F)
    for k in range(3):
        d = grid.v[k][None, :] - u[:, k:k + 1]
        c2 += d * d
    T = mass * psum(wF * c2) / (3.0 * n)
    return n, u, T


def moments(f: Distribution, grid: VelocityGrid) -> SpeciesMoments:
    n, u, T = batch_moments(f.values[None, :], f.mass, grid)
    return SpeciesMoments(float(n[0]), u[0], float(T[0]))


def batch_conserved(F: np.ndarray, mass: float, grid: VelocityGrid):
    """Density, momentum ``m * sum(w v f)`` and kinetic energy ``m/2 * sum(w |v|^2 f)``."""
    F = np.atleast_2d(F)
    wF = F * grid.weights
    n = psum(wF)
    p = mass * np.stack([psum(wF * grid.v[k]) for k in range(3)], axis=-1)
    e = 0.5 * mass * psum(wF * grid.v2)
    return n, p, e


# -- Maxwellians -------------------------------------------------------------

def batch_maxwellian_continuous(n, u, T, mass: float, grid: VelocityGrid) -> np.ndarray:
    n = np.atleast_1d(np.asarray(n, dtype=float))
    T = np.atleast_1d(np.asarray(T, dtype=float))
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if np.any(T <= 0):
        raise ValueError("Maxwellian temperature must be positive")
    var = T / mass
    r2 = np.zeros((n.shape[0], grid.size))
    for k in range(3):
        d = grid.v[k][None, :] - u[:, k:k + 1]
        r2 += d * d
    norm = n / (2.0 * np.pi * var) ** 1.5
    return norm[:, None] * np.exp(-r2 / (2.0 * var[:, None]))


def maxwellian_continuous(n: float, u, T: float, m: float, grid: VelocityGrid) -> Distribution:
    """Pointwise samples of the Maxwellian with density n, velocity u, temperature T."""
    if n < 0:
        raise ValueError("density must be nonnegative")
    return Distribution(batch_maxwellian_continuous(n, u, T, m, grid)[0], m)


@dataclass
class MaxwellianFit:
    """Discrete Maxwellians ``exp(a + b.v/L + c|v|^2/L^2)`` on a grid.

    ``coef`` has shape ``(B, 5)`` holding ``a, b_x, b_y, b_z, c`` in the
    grid's scaled basis (``L = grid.basis_scale``).
    """

    values: np.ndarray
    coef: np.ndarray
    iterations: np.ndarray
    residual: np.ndarray

    def log_values(self, grid: VelocityGrid) -> np.ndarray:
        return np.einsum("bk,kn->bn", self.coef, grid.basis)


def _axis_sums(coef, grid: VelocityGrid):
    """Per-axis power sums of the separable factors of ``exp(a + b.v + c|v|^2)``.

    Returns ``(S, log_scale, factors)`` where ``S[:, k, p] = h_k sum_i g_k(i) x_i^p``
    for ``p = 0..4``, ``x = v_k / L`` and ``g_k = exp(b_k x + c x^2 - shift_k)``;
    the full function is ``exp(log_scale) * g_x g_y g_z``.
    """
    L = grid.basis_scale
    B = coef.shape[0]
    S = np.empty((B, 3, 5))
    log_scale = coef[:, 0].copy()
    factors = []
    for k in range(3):
        x = grid.axes[k] / L
        expo = coef[:, 1 + k, None] * x + coef[:, 4, None] * (x * x)
        shift = np.max(expo, axis=-1)
        g = np.exp(expo - shift[:, None]) * grid.spacing[k]
        log_scale += shift
        factors.append(g)
        xp = np.ones_like(x)
        for p in range(5):
            S[:, k, p] = psum(g * xp)
            xp = xp * x
    return S, log_scale, factors


def _moment_system(coef, grid: VelocityGrid):
    """Moments of (1, v/L, |v|^2/L^2) and their Jacobian, both from axis sums."""
    S, log_scale, _ = _axis_sums(coef, grid)
    with np.errstate(over="ignore", invalid="ignore"):
        scale = np.exp(log_scale)
        s0 = S[:, :, 0]
        # Normalised moments E_k[x^p] of each axis.
        E = S / s0[:, :, None]
        n = scale * np.prod(s0, axis=-1)
    B = coef.shape[0]
    m1 = E[:, :, 1]
    m2 = E[:, :, 2]
    r2 = np.sum(m2, axis=-1)
    mom = np.empty((B, 5))
    mom[:, 0] = 1.0
    mom[:, 1:4] = m1
    mom[:, 4] = r2
    J = np.empty((B, 5, 5))
    J[:, 0, :] = mom
    J[:, 1:4, 1:4] = m1[:, :, None] * m1[:, None, :]
    for k in range(3):
        J[:, 1 + k, 1 + k] = m2[:, k]
        # E[x_k |x|^2] = E[x_k^3] + E[x_k] sum_{j != k} E[x_j^2]
        J[:, 1 + k, 4] = E[:, k, 3] + m1[:, k] * (r2 - m2[:, k])
    # E[|x|^4] = sum_k E[x_k^4] + sum_{j != k} E[x_j^2] E[x_k^2]
    J[:, 4, 4] = np.sum(E[:, :, 4], axis=-1) + r2 * r2 - np.sum(m2 * m2, axis=-1)
    J[:, 1:, 0] = J[:, 0, 1:]
    J[:, 4, 1:4] = J[:, 1:4, 4]
    with np.errstate(over="ignore", invalid="ignore"):
        return n[:, None] * mom, n[:, None, None] * J


def _residual(mom, target, n):
    res = (mom - target) / n[:, None]
    err = np.max(np.abs(res), axis=-1)
    return res, np.where(np.isfinite(err), err, np.inf)


def _separable_values(coef, grid: VelocityGrid) -> np.ndarray:
    _, log_scale, (gx, gy, gz) = _axis_sums(coef, grid)
    w = grid.cell_volume
    with np.errstate(over="ignore"):
        f = (np.exp(log_scale)[:, None, None, None] / w
             * gx[:, :, None, None] * gy[:, None, :, None] * gz[:, None, None, :])
    return f.reshape(coef.shape[0], -1)


def batch_maxwellian_discrete(n, u, T, mass: float, grid: VelocityGrid) -> MaxwellianFit:
    """Moment-matched discrete Maxwellians, one per row.

    Damped Newton on the five exponential coefficients, started from the
    continuous Maxwellian. The function ``exp(a + b.v + c|v|^2)`` factorises
    over the three axes, so moments and the exact Jacobian come from 1D sums.
    Rows are iterated independently (converged rows are frozen), so each
    result does not depend on the rest of the batch. The final density is
    matched on the 3D grid by a rescale, which leaves u and T untouched.
    """
    n = np.atleast_1d(np.asarray(n, dtype=float))
    T = np.atleast_1d(np.asarray(T, dtype=float))
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if np.any(n <= 0) or np.any(T <= 0):
        raise ValueError("discrete Maxwellian needs positive density and temperature")
    B = n.shape[0]
    L = grid.basis_scale
    var = T / mass
    uh = u / L
    target = np.empty((B, 5))
    target[:, 0] = n
    target[:, 1:4] = n[:, None] * uh
    target[:, 4] = n * (np.sum(uh * uh, axis=-1) + 3.0 * var / L**2)

    coef = np.empty((B, 5))
    coef[:, 0] = (np.log(n) - 1.5 * np.log(2.0 * np.pi * var)
                  - 0.5 * np.sum(u * u, axis=-1) / var)
    coef[:, 1:4] = u * (L / var)[:, None]
    coef[:, 4] = -0.5 * L * L / var
    mom, J = _moment_system(coef, grid)
    res, err = _residual(mom, target, n)
    iters = np.zeros(B, dtype=int)
    active = err > NEWTON_TOL
    for _ in range(NEWTON_MAX_ITER):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        rhs = -(res[idx] * n[idx, None])
        try:
            step = np.linalg.solve(J[idx], rhs[..., None])[..., 0]
        except np.linalg.LinAlgError:
            raise NonResolvableMaxwellian("singular moment matrix", float(err[idx].max()))
        err_old = err[idx]
        lam = np.ones(idx.size)
        trial = coef[idx] + step
        mom_t, J_t = _moment_system(trial, grid)
        res_t, err_t = _residual(mom_t, target[idx], n[idx])
        for _ in range(40):
            bad = err_t > err_old
            if not np.any(bad):
                break
            lam[bad] *= 0.5
            b = np.nonzero(bad)[0]
            trial[b] = coef[idx[b]] + lam[b, None] * step[b]
            mom_t[b], J_t[b] = _moment_system(trial[b], grid)
            res_t[b], err_t[b] = _residual(mom_t[b], target[idx[b]], n[idx[b]])
        accept = err_t <= err_old
        a_idx = idx[accept]
        coef[a_idx] = trial[accept]
        mom[a_idx], J[a_idx] = mom_t[accept], J_t[accept]
        res[a_idx], err[a_idx] = res_t[accept], err_t[accept]
        iters[idx] += 1
        e_new = err[idx]
        stalled = (e_new <= NEWTON_ACCEPT) & (e_new > 0.25 * err_old)
        done = (e_new <= NEWTON_TOL) | stalled | ~accept
        active[idx[done]] = False

    if np.any(err > NEWTON_ACCEPT) or np.any(coef[:, 4] >= 0):
        worst = float(np.max(err))
        raise NonResolvableMaxwellian(
            "moment-matched Maxwellian did not converge; the velocity grid is too coarse "
            "or too small for the requested temperature", worst)

    f = _separable_values(coef, grid)
    ratio = n / psum(f * grid.weights)
    f *= ratio[:, None]
    coef[:, 0] += np.log(ratio)
    return MaxwellianFit(f, coef, iters, err)


def maxwellian_discrete(n: float, u, T: float, m: float, grid: VelocityGrid) -> Distribution:
    """Maxwellian-shaped grid function whose quadrature moments are exactly (n, u, T)."""
    fit = batch_maxwellian_discrete(n, u, T, m, grid)
    return Distribution(fit.values[0], m)


# -- attractors and entropy --------------------------------------------------

@dataclass
class Attractors:
    """Moments of both species and the four BGK attractors, batched over cells."""

    n1: np.ndarray
    u1: np.ndarray
    T1: np.ndarray
    n2: np.ndarray
    u2: np.ndarray
    T2: np.ndarray
    M1: np.ndarray
    M2: np.ndarray
    M12: np.ndarray
    M21: np.ndarray
    u12: np.ndarray
    u21: np.ndarray
    T12: np.ndarray
    T21: np.ndarray


def batch_attractors(F1: np.ndarray, F2: np.ndarray, grid: VelocityGrid,
                     params: MixtureParams, kind: str = "discrete") -> Attractors:
    F1 = np.atleast_2d(F1)
    F2 = np.atleast_2d(F2)
    n1, u1, T1 = batch_moments(F1, params.m1, grid)
    n2, u2, T2 = batch_moments(F2, params.m2, grid)
    mom12, mom21 = interspecies_moments(SpeciesMoments(n1, u1, T1),
                                        SpeciesMoments(n2, u2, T2), params)
    if kind == "discrete":
        def fit(n, u, T, m):
            return batch_maxwellian_discrete(n, u, T, m, grid).values
    elif kind == "continuous":
        def fit(n, u, T, m):
            return batch_maxwellian_continuous(n, u, T, m, grid)
    else:
        raise ValueError(f"unknown attractor kind {kind!r}")
    T12 = np.asarray(mom12.T, dtype=float)
    T21 = np.asarray(mom21.T, dtype=float)
    return Attractors(
        n1, u1, T1, n2, u2, T2,
        M1=fit(n1, u1, T1, params.m1),
        M2=fit(n2, u2, T2, params.m2),
        M12=fit(n1, mom12.u, T12, params.m1),
        M21=fit(n2, mom21.u, T21, params.m2),
        u12=mom12.u, u21=mom21.u, T12=T12, T21=T21,
    )


def xlogx(f: np.ndarray) -> np.ndarray:
    """``f ln f`` with the convention ``0 ln 0 = 0``."""
    return np.where(f > 0, f * np.log(np.maximum(f, LOG_FLOOR)), 0.0)


def batch_h(F: np.ndarray, grid: VelocityGrid) -> np.ndarray:
    return psum(xlogx(np.atleast_2d(F)) * grid.weights)


def h_functional(f1: Distribution, f2: Distribution, grid: VelocityGrid) -> float:
    """Total entropy ``sum_w (f1 ln f1 + f2 ln f2)``."""
    both = np.stack([f1.values, f2.values])
    return float(np.sum(batch_h(both, grid)))


def maxwellian_entropy(n: float, T: float, m: float) -> float:
    """Closed-form ``int M ln M dv`` of a continuous Maxwellian."""
    return n * math.log(n / (2.0 * math.pi * T / m) ** 1.5) - 1.5 * n


def batch_entropy_production(F1, F2, grid: VelocityGrid, params: MixtureParams,
                             att: Attractors | None = None, part: str = "total") -> np.ndarray:
    F1 = np.atleast_2d(F1)
    F2 = np.atleast_2d(F2)
    if att is None:
        att = batch_attractors(F1, F2, grid, params)
    L1 = np.log(np.maximum(F1, LOG_FLOOR))
    L2 = np.log(np.maximum(F2, LOG_FLOOR))
    w = grid.weights
    inter = (params.nu12 * att.n2 * psum(L1 * (att.M12 - F1) * w)
             + params.nu21 * att.n1 * psum(L2 * (att.M21 - F2) * w))
    if part == "interspecies":
        return inter
    intra = (params.nu11 * att.n1 * psum(L1 * (att.M1 - F1) * w)
             + params.nu22 * att.n2 * psum(L2 * (att.M2 - F2) * w))
    if part == "intraspecies":
        return intra
    return intra + inter


def entropy_production(f1: Distribution, f2: Distribution, grid: VelocityGrid,
                       params: MixtureParams, part: str = "total") -> float:
    """Entropy production ``sum_w ln f1 (Q11 + Q12) + ln f2 (Q22 + Q21)``.

    ``part="interspecies"`` returns only the cross-collision term ``S(f1, f2)``.
    """
    return float(batch_entropy_production(f1.values, f2.values, grid, params, part=part)[0])


# -- serialization -----------------------------------------------------------

MAGIC = b"BGKDIST1"
_HEADER = struct.Struct("<8s3q6dd")
CSV_MAX_NODES = 32**3


def save_distribution(path, f: Distribution, grid: VelocityGrid) -> None:
    """Flat binary layout, little endian.

    Header: 8-byte magic ``BGKDIST1``; three int64 node counts (x, y, z); six
    float64 bounds ``xmin, xmax, ymin, ymax, zmin, zmax``; float64 mass.
    Payload: ``Nx*Ny*Nz`` float64 values, row-major with z fastest.
    """
    bounds = [b for k in range(3) for b in (grid.lower[k], grid.upper[k])]
    header = _HEADER.pack(MAGIC, *grid.counts, *bounds, f.mass)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def load_distribution(path) -> tuple[Distribution, VelocityGrid]:
    data = Path(path).read_bytes()
    magic, nx, ny, nz, *rest = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a distribution file")
    bounds, mass = rest[:6], rest[6]
    grid = VelocityGrid((nx, ny, nz), bounds[0::2], bounds[1::2])
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if values.size != grid.size:
        raise ValueError(f"{path}: payload has {values.size} values, expected {grid.size}")
    return Distribution(values.astype(float), mass), grid


def write_distribution_csv(path, f: Distribution, grid: VelocityGrid) -> None:
    """CSV with columns ``vx,vy,vz,f`` in row-major node order (small grids only)."""
    if grid.size > CSV_MAX_NODES:
        raise ValueError(f"CSV export is limited to {CSV_MAX_NODES} nodes")
    with open(path, "w") as fh:
        fh.write(f"# mass={f.mass:.17g}\n")
        fh.write("vx,vy,vz,f\n")
        for k in range(grid.size):
            fh.write(f"{grid.v[0, k]:.17g},{grid.v[1, k]:.17g},{grid.v[2, k]:.17g},"
                     f"{f.values[k]:.17g}\n")


def read_distribution_csv(path, grid: VelocityGrid) -> Distribution:
    with open(path) as fh:
        first = fh.readline()
        mass = float(first.split("=", 1)[1])
        data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    return Distribution(data[:, 3], mass)
