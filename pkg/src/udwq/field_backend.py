"""Mode amplitudes and smeared two-point functions of a free scalar field.

A delta-coupled smearing ``f = lam * chi(t) * F(x)`` with ``chi`` either
``delta(t - t0)`` or ``delta'(t - t0)`` is represented in momentum space by
its positive-frequency amplitude

    f_k = -i * integral dV f(x) u_k^*(x),

sampled on a quadrature grid.  The vacuum Wightman function is then
``W(f, g) = sum_k w_k conj(f_k) g_k``; the causal propagator and the
Hadamard function are ``E = 2 Im W`` and ``H = 2 Re W``.

Sign convention for the derivative coupling: ``integral delta'(t - t0) h(t) dt
= -h'(t0)``, so a ``DeltaPrime`` amplitude is ``-i*omega(k)`` times the
``Delta`` amplitude at the same slice time.

Units: lengths are measured in units of the width of Alice's first profile;
couplings are plain floats in those units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline

from .errors import ConfigError, GridMismatchError, NumericalContractError, OutOfRangeError

__all__ = [
    "SpacetimeModel",
    "Gaussian",
    "CompactBump",
    "TabulatedFourier",
    "Delta",
    "DeltaPrime",
    "SmearingSpec",
    "KGrid",
    "ModeAmplitude",
    "spatial_profile_fourier",
    "mode_amplitude",
    "wightman",
    "causal_propagator",
    "hadamard",
    "wightman_matrix",
    "build_bilinear_table",
    "default_grid",
    "refinement_change",
]

_BUMP_NODES = 400


@dataclass(frozen=True)
class SpacetimeModel:
    """Flat ``n+1`` dimensional Minkowski spacetime with a Klein-Gordon field.

    ``curvature_coupling`` and ``ricci_scalar`` are carried as metadata only;
    the shipped backends are flat and require both to be zero.
    """

    spatial_dimension: int = 3
    mass: float = 0.0
    curvature_coupling: float = 0.0
    ricci_scalar: float = 0.0

    def __post_init__(self):
        if int(self.spatial_dimension) != self.spatial_dimension or self.spatial_dimension < 1:
            raise ConfigError(f"spatial dimension must be a positive integer, got {self.spatial_dimension}")
        if not math.isfinite(self.mass) or self.mass < 0:
            raise ConfigError(f"mass must be finite and >= 0, got {self.mass}")
        if self.curvature_coupling != 0 or self.ricci_scalar != 0:
            raise ConfigError("only flat (Minkowski) backends are shipped: curvature terms must be 0")
        if self.spatial_dimension == 1 and self.mass == 0:
            # the massless 1+1 Wightman function is infrared divergent
            raise ConfigError("massless 1+1 field is IR divergent; use mass > 0")

    def dispersion(self, kabs):
        kabs = np.asarray(kabs, dtype=float)
        return np.sqrt(kabs**2 + self.mass**2)

    def mode_normalization(self, kabs):
        """Return ``1 / sqrt(2 omega(k) (2 pi)^n)``."""
        omega = self.dispersion(kabs)
        return 1.0 / np.sqrt(2.0 * omega * (2.0 * np.pi) ** self.spatial_dimension)

    def mode(self, t, x, k):
        """Positive-frequency plane-wave mode ``u_k(t, x)``.

        Args:
            t: coordinate time (scalar).
            x: positions, shape ``(..., n)``.
            k: a single wave vector, shape ``(n,)``.
        """
        k = np.atleast_1d(np.asarray(k, dtype=float))
        x = np.asarray(x, dtype=float)
        kabs = np.linalg.norm(k)
        omega = self.dispersion(kabs)
        phase = x @ k - omega * t
        return np.exp(1j * phase) * self.mode_normalization(kabs)


def _as_vector(center, n=None):
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if c.ndim != 1:
        raise ConfigError(f"center must be a vector, got shape {c.shape}")
    if n is not None and c.shape[0] != n:
        raise ConfigError(f"center has dimension {c.shape[0]}, model has {n}")
    return c


@dataclass(frozen=True, eq=False)
class Gaussian:
    """Unit-integral Gaussian ``(2 pi s^2)^(-n/2) exp(-|x-c|^2 / 2 s^2)``."""

    center: tuple
    width: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in np.atleast_1d(self.center)))
        if not (self.width > 0 and math.isfinite(self.width)):
            raise ConfigError(f"Gaussian width must be > 0, got {self.width}")

    radial = True

    @property
    def extent(self):
        # effective support radius used by causal classification
        return 6.0 * self.width

    def radial_transform(self, kabs, n):
        kabs = np.asarray(kabs, dtype=float)
        return np.exp(-0.5 * (self.width * kabs) ** 2).astype(complex)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        n = len(self.center)
        r2 = np.sum((x - np.asarray(self.center)) ** 2, axis=-1)
        return (2 * np.pi * self.width**2) ** (-n / 2) * np.exp(-0.5 * r2 / self.width**2)


def _bump_shape(r, radius):
    u = np.asarray(r, dtype=float) / radius
    out = np.zeros_like(u)
    inside = u < 1
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


def _sphere_area(n):
    return 2 * np.pi ** (n / 2) / special.gamma(n / 2)


@dataclass(frozen=True, eq=False)
class CompactBump:
    """Smooth compactly supported bump ``A exp(-1/(1 - r^2/R^2))`` for ``r < R``.

    ``A`` normalizes the profile to unit integral in ``n`` dimensions, so
    the normalization depends on the dimension it is evaluated in.
    """

    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in np.atleast_1d(self.center)))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ConfigError(f"bump radius must be > 0, got {self.radius}")

    radial = True

    @property
    def extent(self):
        return self.radius

    def _nodes(self, n):
        x, w = np.polynomial.legendre.leggauss(_BUMP_NODES)
        r = 0.5 * self.radius * (x + 1.0)
        w = 0.5 * self.radius * w
        shape = _bump_shape(r, self.radius)
        amplitude = 1.0 / (_sphere_area(n) * np.sum(w * r ** (n - 1) * shape))
        return r, w, amplitude

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        n = len(self.center)
        r = np.sqrt(np.sum((x - np.asarray(self.center)) ** 2, axis=-1))
        return self._nodes(n)[2] * _bump_shape(r, self.radius)

    def radial_transform(self, kabs, n):
        kabs = np.atleast_1d(np.asarray(kabs, dtype=float))
        r, w, amplitude = self._nodes(n)
        prof = amplitude * _bump_shape(r, self.radius)
        kr = np.outer(kabs, r)
        if n == 1:
            kernel = 2.0 * np.cos(kr)
        elif n == 3:
            kernel = 4 * np.pi * r**2 * np.sinc(kr / np.pi)
        else:
            nu = n / 2 - 1
            with np.errstate(invalid="ignore", divide="ignore"):
                kernel = (2 * np.pi) ** (n / 2) * r ** (n - 1) * special.jv(nu, kr) / np.where(kr > 0, kr, 1.0) ** nu
            small = kr == 0
            kernel[small] = np.broadcast_to(_sphere_area(n) * r ** (n - 1), kr.shape)[small]
        return (kernel @ (w * prof)).astype(complex)


@dataclass(frozen=True, eq=False)
class TabulatedFourier:
    """A spatial profile given directly by its Fourier transform.

    ``nodes`` are ``|k|`` values (shape ``(N,)``) when ``radial`` is true,
    otherwise wave vectors of shape ``(N, n)``.  ``values`` hold the transform
    of the profile centred at the origin; ``center`` re-applies the
    translation phase ``exp(-i k.c)``.
    """

    center: tuple
    nodes: np.ndarray
    values: np.ndarray
    radial: bool = True
    extent: float = float("inf")

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in np.atleast_1d(self.center)))
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if nodes.shape[0] != values.shape[0]:
            raise ConfigError("tabulated nodes and values differ in length")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    def _lookup(self, query):
        if query.shape == self.nodes.shape and np.array_equal(query, self.nodes):
            return self.values.copy()
        if not self.radial and self.nodes.ndim == 2 and self.nodes.shape[1] > 1:
            raise OutOfRangeError("off-node evaluation of a tensor-grid tabulated profile is unsupported")
        grid = self.nodes if self.radial else self.nodes[:, 0]
        q = query if self.radial else np.asarray(query)[..., 0]
        order = np.argsort(grid)
        lo, hi = grid[order[0]], grid[order[-1]]
        if np.any(q < lo) or np.any(q > hi):
            raise OutOfRangeError(f"tabulated profile queried outside [{lo:g}, {hi:g}]")
        re = CubicSpline(grid[order], self.values[order].real)(q)
        im = CubicSpline(grid[order], self.values[order].imag)(q)
        return re + 1j * im

    def radial_transform(self, kabs, n):
        if not self.radial:
            raise NumericalContractError("tensor-grid tabulated profile has no radial transform")
        return self._lookup(np.asarray(kabs, dtype=float))

    def tensor_values(self, k):
        if self.radial:
            return self._lookup(np.linalg.norm(k, axis=-1))
        return self._lookup(np.asarray(k, dtype=float))


SpatialProfile = Union[Gaussian, CompactBump, TabulatedFourier]


def spatial_profile_fourier(profile, k):
    """Return ``F~(k) = integral d^n x F(x) exp(-i k.x)``.

    Args:
        profile: a :class:`Gaussian`, :class:`CompactBump` or
            :class:`TabulatedFourier`.
        k: wave vectors, shape ``(..., n)``.

    Raises:
        OutOfRangeError: tabulated profile queried outside its node range.
    """
    k = np.asarray(k, dtype=float)
    if k.ndim == 0:
        k = k[None]
    n = len(profile.center)
    if k.shape[-1] != n:
        raise ConfigError(f"wave vectors have dimension {k.shape[-1]}, profile has {n}")
    phase = np.exp(-1j * (k @ np.asarray(profile.center)))
    if isinstance(profile, TabulatedFourier):
        return phase * profile.tensor_values(k)
    kabs = np.linalg.norm(k, axis=-1)
    flat = profile.radial_transform(kabs.ravel(), n).reshape(kabs.shape)
    return phase * flat


@dataclass(frozen=True)
class Delta:
    time: float = 0.0


@dataclass(frozen=True)
class DeltaPrime:
    time: float = 0.0


@dataclass(frozen=True, eq=False)
class SmearingSpec:
    """One delta-coupled smearing term ``coupling * chi(t) * F(x)``."""

    coupling: float
    temporal: Union[Delta, DeltaPrime]
    profile: SpatialProfile

    def __post_init__(self):
        if not math.isfinite(self.coupling):
            raise ConfigError(f"coupling must be finite, got {self.coupling}")

    def with_coupling(self, coupling):
        return SmearingSpec(float(coupling), self.temporal, self.profile)


Smearing = Union[SmearingSpec, Sequence[SmearingSpec]]


@dataclass(frozen=True, eq=False)
class KGrid:
    """Quadrature for ``integral d^n k``.

    Tensor grids use Gauss-Legendre nodes on ``[-cutoff, cutoff]`` per axis;
    the rule is symmetric under ``k -> -k`` and, with an even point count,
    never contains ``k = 0``.  Radial grids (3 spatial dimensions only)
    integrate ``|k|`` over ``[0, cutoff]`` with the solid angle folded
    into the weights; amplitudes on a radial grid must be spherically
    symmetric about a single centre.
    """

    cutoff: float
    points: int
    dimension: int
    radial: bool
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @classmethod
    def tensor(cls, dimension, cutoff, points):
        _check_grid_args(cutoff, points)
        x, w = np.polynomial.legendre.leggauss(points)
        x = x * cutoff
        w = w * cutoff
        axes = np.meshgrid(*([x] * dimension), indexing="ij")
        nodes = np.stack([a.ravel() for a in axes], axis=-1)
        wts = np.ones(nodes.shape[0])
        for ww in np.meshgrid(*([w] * dimension), indexing="ij"):
            wts = wts * ww.ravel()
        return cls(float(cutoff), int(points), int(dimension), False, nodes, wts)

    @classmethod
    def radial_grid(cls, cutoff, points, dimension=3):
        if dimension != 3:
            raise ConfigError("radial reduction is implemented for 3 spatial dimensions only")
        _check_grid_args(cutoff, points)
        x, w = np.polynomial.legendre.leggauss(points)
        k = 0.5 * cutoff * (x + 1.0)
        w = 0.5 * cutoff * w * 4.0 * np.pi * k**2
        return cls(float(cutoff), int(points), 3, True, k, w)

    @property
    def kabs(self):
        if self.radial:
            return self.nodes
        return np.linalg.norm(self.nodes, axis=-1)

    @property
    def key(self):
        return (self.radial, self.dimension, self.cutoff, self.points)

    def refined(self):
        """Grid with doubled cutoff and doubled point count."""
        if self.radial:
            return KGrid.radial_grid(2 * self.cutoff, 2 * self.points, self.dimension)
        return KGrid.tensor(self.dimension, 2 * self.cutoff, 2 * self.points)


def _check_grid_args(cutoff, points):
    if not (cutoff > 0 and math.isfinite(cutoff)):
        raise ConfigError(f"k-grid cutoff must be > 0, got {cutoff}")
    if int(points) != points or points < 16:
        raise ConfigError(f"k-grid needs at least 16 points per axis, got {points}")


def default_grid(model, width=1.0, points=None):
    """Grid with cutoff ``12 / width``; radial in 3+1, tensor otherwise."""
    cutoff = 12.0 / width
    if model.spatial_dimension == 3:
        return KGrid.radial_grid(cutoff, points or 256)
    if model.spatial_dimension == 1:
        return KGrid.tensor(1, cutoff, points or 512)
    return KGrid.tensor(model.spatial_dimension, cutoff, points or 48)


@dataclass(frozen=True, eq=False)
class ModeAmplitude:
    """Discretized ``f_k`` on a grid.

    On radial grids the plane-wave factor ``exp(-i k.center)`` is kept
    symbolic in ``center`` and resolved analytically in :func:`wightman`.
    """

    values: np.ndarray
    grid: KGrid
    center: np.ndarray


def _temporal_factor(temporal, omega):
    base = np.exp(1j * omega * temporal.time)
    if isinstance(temporal, Delta):
        return base
    if isinstance(temporal, DeltaPrime):
        return -1j * omega * base
    raise NumericalContractError(f"unsupported temporal kind {type(temporal).__name__}",
                                 invariant="delta-coupling regime")


def _specs(smearing):
    if isinstance(smearing, SmearingSpec):
        return (smearing,)
    specs = tuple(smearing)
    if not specs or not all(isinstance(s, SmearingSpec) for s in specs):
        raise ConfigError("a smearing is a SmearingSpec or a non-empty sequence of them")
    return specs


def mode_amplitude(model, smearing, grid):
    """Compute ``f_k`` for a (sum of) delta-coupled smearing(s) on ``grid``.

    Args:
        model: the :class:`SpacetimeModel`.
        smearing: a :class:`SmearingSpec` or a sequence of them (summed).
        grid: the :class:`KGrid`.

    Returns:
        ModeAmplitude
    """
    if grid.dimension != model.spatial_dimension:
        raise GridMismatchError(f"grid dimension {grid.dimension} != model dimension {model.spatial_dimension}")
    kabs = grid.kabs
    omega = model.dispersion(kabs)
    if model.mass == 0 and np.any(kabs == 0):
        raise NumericalContractError("massless grids must exclude k = 0", invariant="k-grid puncture")
    norm = model.mode_normalization(kabs)
    n = model.spatial_dimension
    values = np.zeros(kabs.shape, dtype=complex)
    center = None
    for spec in _specs(smearing):
        c = _as_vector(spec.profile.center, n)
        if grid.radial:
            if not getattr(spec.profile, "radial", False):
                raise NumericalContractError("radial grid needs spherically symmetric profiles",
                                             invariant="radial reduction")
            if center is None:
                center = c
            elif not np.array_equal(center, c):
                raise NumericalContractError("radial grid needs all components to share one centre",
                                             invariant="radial reduction")
            ft = spec.profile.radial_transform(kabs, n)
        else:
            ft = spatial_profile_fourier(spec.profile, grid.nodes)
        values = values + (-1j * spec.coupling) * ft * _temporal_factor(spec.temporal, omega) * norm
    if center is None:
        center = np.zeros(n)
    return ModeAmplitude(values, grid, center)


def _check_pair(f, g):
    if f.grid is not g.grid and f.grid.key != g.grid.key:
        raise GridMismatchError(f"amplitudes live on different grids: {f.grid.key} vs {g.grid.key}")


def wightman(f, g):
    """``W(f, g) = integral d^n k conj(f_k) g_k`` by quadrature.

    Real and imaginary parts are accumulated from real products so that
    ``W(f, g) = conj(W(g, f))`` and ``Im W(f, f) = 0`` hold bit for bit.
    """
    _check_pair(f, g)
    grid = f.grid
    w = grid.weights
    if grid.radial:
        d = float(np.linalg.norm(g.center - f.center))
        if d != 0.0:
            w = w * np.sinc(grid.nodes * d / np.pi)
    fr, fi = f.values.real, f.values.imag
    gr, gi = g.values.real, g.values.imag
    re = np.sum(w * (fr * gr + fi * gi))
    im = np.sum(w * (fr * gi - fi * gr))
    return complex(re, im)


def causal_propagator(f, g):
    """``E(f, g) = 2 Im W(f, g)``."""
    return 2.0 * wightman(f, g).imag


def hadamard(f, g):
    """``H(f, g) = 2 Re W(f, g)``."""
    return 2.0 * wightman(f, g).real


def wightman_matrix(amplitudes):
    """Gram matrix ``[W(a_i, a_j)]``; exactly Hermitian by construction."""
    m = len(amplitudes)
    out = np.zeros((m, m), dtype=complex)
    for i in range(m):
        out[i, i] = wightman(amplitudes[i], amplitudes[i]).real
        for j in range(i + 1, m):
            w = wightman(amplitudes[i], amplitudes[j])
            out[i, j] = w
            out[j, i] = np.conj(w)
    return out


def build_bilinear_table(model, smearings, grid):
    """Evaluate E and H over the basis ``(f1, f2, g1, g2)``.

    Each entry of ``smearings`` may itself be a sequence of
    :class:`SmearingSpec` (e.g. Bob's delta plus delta-prime pair).
    """
    from .weyl import BilinearTable

    smearings = list(smearings)
    if len(smearings) != 4:
        raise ConfigError(f"need exactly 4 smearings (f1, f2, g1, g2), got {len(smearings)}")
    amps = [mode_amplitude(model, s, grid) for s in smearings]
    return BilinearTable.from_wightman(wightman_matrix(amps))


def refinement_change(model, smearings, grid):
    """Max relative change of all 16 bilinears when the grid is refined.

    Entries are compared relative to the largest entry of the table so
    that exact zeros (e.g. equal-time commutators) do not blow up the ratio.
    """
    coarse = wightman_matrix([mode_amplitude(model, s, grid) for s in smearings])
    fine_grid = grid.refined()
    fine = wightman_matrix([mode_amplitude(model, s, fine_grid) for s in smearings])
    scale = np.max(np.abs(fine))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(fine - coarse)) / scale)
