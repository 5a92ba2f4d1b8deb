"""Protocol conditions, Bob's decoding smearings and causal classification.

Alice's smearings are written as ``f1 = c * lam2 * f1_hat`` and
``f2 = lam2 * f2_hat`` where the hatted smearings have unit coupling.  The
coupling-stripped numbers

    w1 = W(f1_hat, f1_hat), w2 = W(f2_hat, f2_hat),
    e = E(f1_hat, f2_hat),  h = H(f1_hat, f2_hat)

then fix the whole ideal-decoding table through ``c`` and ``lam2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NoSolutionError, PreconditionError, SingularSystemError
from .field_backend import (
    Delta,
    DeltaPrime,
    SmearingSpec,
    SpacetimeModel,
    TabulatedFourier,
    mode_amplitude,
    wightman_matrix,
)
from .weyl import F1, F2, BilinearTable

DEFAULT_MARGIN_THRESHOLD = 100.0
MAX_BRANCH = 1_000_000


@dataclass(frozen=True)
class ProtocolConditions:
    e: float
    w1: float
    w2: float
    h: float
    n: int = 0

    def __post_init__(self):
        for name in ("e", "w1", "w2", "h"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if self.w1 < 0 or self.w2 < 0:
            raise ConfigError("w1 and w2 must be non-negative")
        if int(self.n) != self.n or self.n < 0:
            raise ConfigError(f"branch n must be a non-negative integer, got {self.n}")

    @classmethod
    def from_smearings(cls, model, f1_hat, f2_hat, grid, n=0):
        """Strip couplings by evaluating unit-coupling smearings."""
        W = wightman_matrix([mode_amplitude(model, f1_hat, grid), mode_amplitude(model, f2_hat, grid)])
        return cls(e=2 * W[0, 1].imag, w1=W[0, 0].real, w2=W[1, 1].real, h=2 * W[0, 1].real, n=n)

    def ideal_table(self, c, lambda2):
        """Table for ``g_i = f_i`` at ratio ``c`` and coupling ``lambda2``."""
        l2 = lambda2**2
        return BilinearTable.ideal(c * c * l2 * self.w1, l2 * self.w2, c * l2 * self.e, c * l2 * self.h)


def solve_fine_tuning(cond, lambda2, n=None):
    """Smallest positive ``c`` on branch ``n`` with ``c lam2^2 e = pi/4 mod 2 pi``.

    For ``e > 0`` this is ``(pi/4 + 2 pi n) / (lam2^2 e)``; for ``e < 0`` the
    target ``pi/4 - 2 pi (n + 1)`` keeps ``c`` positive.

    Raises:
        NoSolutionError: ``e == 0`` (the two smearings commute).
    """
    n = cond.n if n is None else n
    if not lambda2 > 0:
        raise ConfigError(f"lambda2 must be > 0, got {lambda2}")
    if cond.e == 0:
        raise NoSolutionError("E(f1, f2) vanishes: use a DeltaPrime component or a time offset",
                              invariant="non-commuting Alice smearings")
    target = np.pi / 4 + 2 * np.pi * n if cond.e > 0 else np.pi / 4 - 2 * np.pi * (n + 1)
    return target / (lambda2**2 * cond.e)


def strong_coupling_margin(table):
    """``E(f1,f2)^2 / W(f2,f2)``; ``inf`` when ``W(f2,f2) = 0``."""
    w22 = table.H[F2, F2] / 2
    if w22 == 0:
        return math.inf
    return float(table.E[F1, F2] ** 2 / w22)


def choose_branch(cond, lambda2, threshold=DEFAULT_MARGIN_THRESHOLD):
    """Smallest branch ``n`` whose fine-tuned table has margin ``>= threshold``.

    Returns:
        tuple: ``(n, c, table)``.
    """
    for n in range(MAX_BRANCH):
        c = solve_fine_tuning(cond, lambda2, n)
        table = cond.ideal_table(c, lambda2)
        if strong_coupling_margin(table) >= threshold:
            return n, c, table
    raise NoSolutionError(f"no branch below {MAX_BRANCH} reaches margin {threshold}",
                          invariant="strong-coupling margin")


def _mirror_index(grid):
    """Index of ``-k`` for each node (identity on radial grids)."""
    if grid.radial:
        return np.arange(grid.nodes.shape[0])
    idx = np.arange(grid.nodes.shape[0])[::-1]
    if not np.array_equal(grid.nodes[idx], -grid.nodes):
        raise PreconditionError("k-grid is not symmetric under k -> -k", invariant="grid symmetry")
    return idx


def bob_smearing_solve(model, f1, f2, t_B):
    """Bob's Delta + DeltaPrime pair at ``t_B`` reproducing each Alice amplitude.

    Per node the complex constraint ``g_k = f_k`` (together with its mirror
    at ``-k``, which keeps the spatial profiles real) fixes the two Fourier
    profiles ``G_delta`` and ``G_delta_prime``.

    Args:
        model: :class:`SpacetimeModel`.
        f1, f2: Alice's :class:`ModeAmplitude` (coupling included).
        t_B: Bob's slice time.

    Returns:
        tuple: ``(g1, g2)``, each a pair of :class:`SmearingSpec` with unit
        coupling and :class:`TabulatedFourier` profiles.

    Raises:
        SingularSystemError: ``omega(k) = 0`` at some node.
    """
    out = []
    for f in (f1, f2):
        grid = f.grid
        kabs = grid.kabs
        omega = model.dispersion(kabs)
        zero = np.flatnonzero(omega == 0)
        if zero.size:
            raise SingularSystemError(f"omega(k) = 0 at grid node {int(zero[0])} (k = {grid.nodes[zero[0]]})",
                                      invariant="Bob solve solvability")
        base = -1j * model.mode_normalization(kabs) * np.exp(1j * omega * t_B)
        R = f.values / base
        Rm = np.conj(R[_mirror_index(grid)])
        g_delta = (R + Rm) / 2
        g_prime = (Rm - R) / (2j * omega)
        if grid.radial:
            # real by symmetry; drop round-off imaginary parts
            g_delta, g_prime = g_delta.real.astype(complex), g_prime.real.astype(complex)
        center = tuple(f.center) if grid.radial else tuple(np.zeros(grid.dimension))
        profiles = [TabulatedFourier(center, grid.nodes.copy(), v, radial=grid.radial) for v in (g_delta, g_prime)]
        out.append((SmearingSpec(1.0, Delta(t_B), profiles[0]), SmearingSpec(1.0, DeltaPrime(t_B), profiles[1])))
    return tuple(out)


def inverse_radial_profile(profile, r):
    """Real-space radial profile ``G(r)`` of a 3D radial tabulated transform."""
    k = profile.nodes
    r = np.atleast_1d(np.asarray(r, dtype=float))
    x, w = np.polynomial.legendre.leggauss(k.size)
    # the tabulated nodes are Gauss-Legendre nodes on [0, cutoff]
    cutoff = 2 * k[-1] / (x[-1] + 1)
    wk = 0.5 * cutoff * w
    kern = np.sinc(np.outer(r, k) / np.pi)
    return (kern @ (wk * k**2 * profile.values.real)) / (2 * np.pi**2)


def truncate_coverage(profile, fraction, shell_radius, r_max, points=800):
    """Keep only the part of a radial profile nearest the shell ``|x| = shell_radius``.

    The window is the smallest radial band around the shell holding
    ``fraction`` of the profile's absolute mass; the band-limited profile is
    transformed back onto the original nodes.
    """
    if not 0 <= fraction <= 1:
        raise ConfigError(f"coverage fraction must lie in [0, 1], got {fraction}")
    if fraction == 1:
        return profile
    x, w = np.polynomial.legendre.leggauss(points)
    r = 0.5 * r_max * (x + 1)
    wr = 0.5 * r_max * w
    G = inverse_radial_profile(profile, r)
    mass = 4 * np.pi * r**2 * np.abs(G) * wr
    order = np.argsort(np.abs(r - shell_radius), kind="stable")
    keep = np.zeros(r.size, dtype=bool)
    keep[order[: np.searchsorted(np.cumsum(mass[order]), fraction * mass.sum()) + 1]] = fraction > 0
    k = profile.nodes
    values = 4 * np.pi * (np.sinc(np.outer(k, r) / np.pi) @ (wr * r**2 * G * keep))
    return TabulatedFourier(profile.center, k.copy(), values.astype(complex), radial=True)


class CausalClass(enum.Enum):
    SPACELIKE = "Spacelike"
    LIGHTCONE_ONLY = "LightconeOnly"
    TIMELIKE_INTERIOR = "TimelikeInterior"
    OVERLAPPING = "Overlapping"


@dataclass(frozen=True)
class Support:
    """Ball ``|x - center| <= radius`` on the slice ``t = time``."""

    center: tuple
    radius: float
    time: float

    @classmethod
    def of(cls, spec):
        p = spec.profile
        return cls(tuple(p.center), float(p.extent), float(spec.temporal.time))


@dataclass(frozen=True)
class CausalClassification:
    kind: CausalClass
    margin: float

    def __post_init__(self):
        ok = {
            CausalClass.SPACELIKE: self.margin > 0,
            CausalClass.TIMELIKE_INTERIOR: self.margin < 0,
        }.get(self.kind, self.margin == 0)
        if not ok:
            raise PreconditionError(f"margin {self.margin} inconsistent with {self.kind.value}")


def causal_classify(model, alice, bob):
    """Classify two slice-localized balls by their extreme Lorentzian intervals.

    ``margin`` is ``d_min^2 - dt^2 > 0`` for spacelike pairs and
    ``d_max^2 - dt^2 < 0`` for timelike-interior pairs (Bob entirely inside
    the future or past lightcone interior of Alice's ball); otherwise 0.
    """
    if not isinstance(model, SpacetimeModel):
        raise ConfigError(f"causal classification supports Minkowski models only, got {type(model).__name__}")
    d = float(np.linalg.norm(np.asarray(alice.center, float) - np.asarray(bob.center, float)))
    dt = abs(bob.time - alice.time)
    d_min = d - alice.radius - bob.radius
    d_max = d + alice.radius + bob.radius
    if d_min > 0 and dt < d_min:
        return CausalClassification(CausalClass.SPACELIKE, d_min**2 - dt**2)
    if dt > d_max:
        return CausalClassification(CausalClass.TIMELIKE_INTERIOR, d_max**2 - dt**2)
    if dt == 0:
        return CausalClassification(CausalClass.OVERLAPPING, 0.0)
    return CausalClassification(CausalClass.LIGHTCONE_ONLY, 0.0)
