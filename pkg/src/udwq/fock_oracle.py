"""Brute-force protocol simulation on a truncated multi-mode Fock space.

A discrete model assigns each basis smearing ``b`` in ``(f1, f2, g1, g2)``
the mode amplitudes ``alpha[b, m]``, so that

    phi(b) = sum_m conj(alpha[b, m]) a_m + alpha[b, m] a_m^dagger

and ``exp(i s phi(b))`` is the product of single-mode displacements
``D(beta_m)`` with ``beta_m = i s alpha[b, m]``.  Displacement matrices hold
the exact matrix elements ``<m|D|n>`` for ``m, n <= N`` (closed form), so no
error enters until a state leaks above the truncation.

States are propagated as vectors over ``E (x) A (x) B (x) modes``; operators
are applied factor by factor along tensor axes, which keeps two-mode runs at
N = 60 small.  The environment qubit is only carried, never acted on.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.linalg import expm
from scipy.stats import poisson

from .channel import PLUS_Y, SX, SZ, TwoQubitState, projector
from .errors import ConfigError, NumericalContractError, PreconditionError, TruncationError
from .weyl import F1, F2, G1, G2, BilinearTable

DEFAULT_TRUNCATION = 60
TAIL_LIMIT = 1e-12
MAX_STATE_ENTRIES = 50_000_000


class TruncationWarning(UserWarning):
    """Truncation is below the ``4 max|alpha|^2 + 20`` rule of thumb."""


@dataclass(frozen=True, eq=False)
class DiscreteModeModel:
    """Amplitudes ``alpha[b, m]`` (``b`` over ``f1, f2, g1, g2``; 1 to 4 modes).

    ``alpha[b, m] = f_{k_m} sqrt(w_m)`` for quadrature node ``k_m`` with weight
    ``w_m`` when the model is read off a continuum grid.
    """

    alpha: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.alpha, dtype=complex))
        if a.shape[0] != 4 or not 1 <= a.shape[1] <= 4:
            raise ConfigError(f"alpha must have shape (4, M) with 1 <= M <= 4, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ConfigError("alpha entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)

    @property
    def modes(self):
        return self.alpha.shape[1]

    def with_ideal_decoding(self):
        """Copy with Bob's rows replaced by Alice's (``g_i = f_i``)."""
        a = np.array(self.alpha)
        a[G1], a[G2] = a[F1], a[F2]
        return DiscreteModeModel(a)

    def reach(self):
        """Largest displacement any protocol branch can build, per mode."""
        return np.sum(np.abs(self.alpha), axis=0)

    @classmethod
    def random(cls, rng, modes=None, max_entry=2.0, max_reach=4.0, ideal=False):
        """Random model with ``|alpha| <= max_entry`` and per-mode reach ``<= max_reach``."""
        modes = modes or int(rng.integers(1, 3))
        while True:
            r = rng.uniform(0, max_entry, size=(4, modes))
            a = r * np.exp(2j * np.pi * rng.uniform(size=(4, modes)))
            m = cls(a)
            if ideal:
                m = m.with_ideal_decoding()
            if np.all(m.reach() <= max_reach):
                return m


@dataclass(frozen=True)
class TruncatedFock:
    """Per-mode cutoff ``N`` (levels ``0..N``) for ``modes`` oscillators."""

    N: int = DEFAULT_TRUNCATION
    modes: int = 1

    @property
    def dimension(self):
        return (self.N + 1) ** self.modes

    def check(self, model, ideal=False):
        """Warn below the rule of thumb; raise when the reachable tail is not negligible."""
        amax = float(np.max(np.abs(model.alpha)))
        if self.N < 4 * amax**2 + 20:
            warnings.warn(f"truncation N={self.N} below 4*max|alpha|^2+20 = {4 * amax**2 + 20:.1f}",
                          TruncationWarning, stacklevel=3)
        reach = float(np.max((model.with_ideal_decoding() if ideal else model).reach()))
        tail = float(poisson.sf(self.N, reach**2))
        if tail > TAIL_LIMIT:
            raise TruncationError(
                f"population above N={self.N} reaches {tail:.2e} for displacement {reach:.3f}",
                invariant="Fock truncation")
        return tail


def ladder(N):
    """Annihilation operator on levels ``0..N``."""
    return np.diag(np.sqrt(np.arange(1, N + 1, dtype=float)), 1).astype(complex)


def displacement_matrix(beta, N):
    """Exact ``<m|D(beta)|n>`` for ``0 <= m, n <= N``.

    Uses the associated-Laguerre form of the coherent-state matrix elements,
    ``sqrt(n!/m!) beta^(m-n) exp(-|beta|^2/2) L_n^(m-n)(|beta|^2)`` for ``m >= n``
    and its adjoint counterpart otherwise.
    """
    beta = complex(beta)
    if beta == 0:
        return np.eye(N + 1, dtype=complex)
    x = abs(beta) ** 2
    m = np.arange(N + 1)[:, None]
    n = np.arange(N + 1)[None, :]
    lo, hi = np.minimum(m, n), np.maximum(m, n)
    k = hi - lo
    log_mag = 0.5 * (special.gammaln(lo + 1) - special.gammaln(hi + 1)) - x / 2 + k * math.log(abs(beta))
    angle = np.where(m >= n, np.angle(beta), np.angle(-np.conj(beta)))
    return np.exp(log_mag + 1j * k * angle) * special.eval_genlaguerre(lo, k, x)


def displacement_matrix_expm(beta, N):
    """``expm(beta a^dag - conj(beta) a)`` of the truncated generator (cross-check path)."""
    a = ladder(N)
    return expm(beta * a.conj().T - np.conj(beta) * a)


@dataclass(frozen=True, eq=False)
class FockOperator:
    """Tensor product of single-mode matrices."""

    factors: tuple

    def dense(self):
        out = np.ones((1, 1), dtype=complex)
        for f in self.factors:
            out = np.kron(out, f)
        return out

    def dagger(self):
        return FockOperator(tuple(f.conj().T for f in self.factors))


def displacement_operator(model, b, s, fock, method="closed"):
    """``exp(i s phi(b))`` on the truncated space.

    Args:
        model: :class:`DiscreteModeModel`.
        b: basis index (0..3).
        s: real sign or scale.
        fock: :class:`TruncatedFock`.
        method: ``"closed"`` (coherent-state matrix elements) or ``"expm"``.
    """
    make = displacement_matrix if method == "closed" else displacement_matrix_expm
    return FockOperator(tuple(make(1j * s * a, fock.N) for a in model.alpha[b]))


def controlled_unitary(axis, D):
    """``P_+ (x) D + P_- (x) D^dagger`` as a dense matrix (qubit first)."""
    Dm = D.dense() if isinstance(D, FockOperator) else np.asarray(D)
    return np.kron(projector(axis, 1), Dm) + np.kron(projector(axis, -1), Dm.conj().T)


def smeared_field(model, b, fock):
    """Dense ``phi(b)`` on the truncated multi-mode space."""
    a = ladder(fock.N)
    eye = np.eye(fock.N + 1)
    out = np.zeros((fock.dimension, fock.dimension), dtype=complex)
    for m, alpha in enumerate(model.alpha[b]):
        single = np.conj(alpha) * a + alpha * a.conj().T
        term = np.ones((1, 1))
        for j in range(model.modes):
            term = np.kron(term, single if j == m else eye)
        out += term
    return out


def oracle_bilinears(model):
    """E and H from vacuum commutator and anticommutator expectations.

    Uses levels 0..2 per mode, which is exact for two-point vacuum data.
    """
    fock = TruncatedFock(2, model.modes)
    phis = [smeared_field(model, b, fock) for b in range(4)]
    vac = np.zeros(fock.dimension, dtype=complex)
    vac[0] = 1.0
    E = np.zeros((4, 4))
    H = np.zeros((4, 4))
    for i in range(4):
        for j in range(4):
            comm = vac.conj() @ (phis[i] @ phis[j] - phis[j] @ phis[i]) @ vac
            anti = vac.conj() @ (phis[i] @ phis[j] + phis[j] @ phis[i]) @ vac
            E[i, j] = (comm / 1j).real
            H[i, j] = anti.real
    # exact (anti)symmetry from the upper triangle
    E = np.triu(E, 1) - np.triu(E, 1).T
    H = np.triu(H) + np.triu(H, 1).T
    return BilinearTable(E, H)


def _apply_modes(psi, op, first_mode_axis):
    for m, mat in enumerate(op.factors):
        ax = first_mode_axis + m
        psi = np.moveaxis(np.tensordot(mat, psi, axes=([1], [ax])), 0, ax)
    return psi


def _apply_controlled(psi, qubit_axis, axis, D, first_mode_axis):
    """Apply ``P_+ (x) D + P_- (x) D^dagger`` with control on ``qubit_axis``."""
    out = 0
    for sign, op in ((1, D), (-1, D.dagger())):
        part = np.moveaxis(np.tensordot(projector(axis, sign), psi, axes=([1], [qubit_axis])), 0, qubit_axis)
        out = out + _apply_modes(part, op, first_mode_axis)
    return out


def _pure_components(rho, tol=1e-14):
    p, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    return [(float(p[i]), v[:, i]) for i in range(len(p)) if p[i] > tol]


def simulate_protocol(model, rho_EA=None, bob_initial=None, ordering="custom", N=DEFAULT_TRUNCATION,
                      method="closed", spacelike_tol=1e-12):
    """Run both parties' controlled displacements on ``E, A, B`` and the truncated field.

    Alice applies ``exp(i sx phi(f2)) exp(i sz phi(f1))`` and Bob
    ``exp(-i sz phi(g1)) exp(-i sx phi(g2))``; A and the field are traced out.

    Args:
        model: :class:`DiscreteModeModel`.
        rho_EA: ``E (x) A`` input (default: the protocol's Bell state).
        bob_initial: Bob's qubit (default ``|+y>``).
        ordering: ``"ideal"`` forces ``g_i = f_i``; ``"spacelike"`` requires all
            cross commutators to vanish; ``"custom"`` uses the model as given.
        N: per-mode truncation.
        method: displacement construction, ``"closed"`` or ``"expm"``.

    Returns:
        TwoQubitState in ``B (x) E`` order.
    """
    from .channel import BELL_EA

    if ordering not in ("ideal", "spacelike", "custom"):
        raise ConfigError(f"unknown ordering {ordering!r}")
    if ordering == "ideal":
        model = model.with_ideal_decoding()
    elif ordering == "spacelike":
        t = oracle_bilinears(model)
        if t.cross_causal_max() > spacelike_tol:
            raise PreconditionError(f"model is not spacelike: max |E(f_i,g_j)| = {t.cross_causal_max():.3e}",
                                    invariant="causal disconnection")
    fock = TruncatedFock(N, model.modes)
    entries = 8 * fock.dimension
    if entries > MAX_STATE_ENTRIES:
        raise ConfigError(f"joint dimension {entries} exceeds the memory bound {MAX_STATE_ENTRIES}")
    fock.check(model)
    rho_EA = BELL_EA if rho_EA is None else getattr(rho_EA, "matrix", rho_EA)
    bob_initial = np.outer(PLUS_Y, PLUS_Y.conj()) if bob_initial is None else getattr(bob_initial, "matrix", bob_initial)

    ops = [
        (1, SZ, displacement_operator(model, F1, 1, fock, method)),
        (1, SX, displacement_operator(model, F2, 1, fock, method)),
        (2, SX, displacement_operator(model, G2, -1, fock, method)),
        (2, SZ, displacement_operator(model, G1, -1, fock, method)),
    ]
    vac = np.zeros((N + 1,) * model.modes, dtype=complex)
    vac[(0,) * model.modes] = 1.0
    out = np.zeros((2, 2, 2, 2), dtype=complex)  # [b, e, b', e']
    for pe, ea in _pure_components(np.asarray(rho_EA, dtype=complex)):
        for pb, bk in _pure_components(np.asarray(bob_initial, dtype=complex)):
            psi = np.einsum("ea,b,...->eab...", ea.reshape(2, 2), bk, vac)
            for qubit_axis, axis, D in ops:
                psi = _apply_controlled(psi, qubit_axis, axis, D, 3)
            flat = psi.reshape(2, 2, 2, -1)
            out += pe * pb * np.einsum("eabf,gahf->behg", flat, flat.conj())
    rho = out.reshape(4, 4)
    tr = np.trace(rho).real
    if abs(tr - 1) > 1e-8:
        raise TruncationError(f"norm lost to truncation: trace {tr!r}", invariant="Fock truncation")
    rho = (rho + rho.conj().T) / 2 / tr
    return TwoQubitState(rho)


def unitarity_defect(op, levels=None):
    """``max |(U^dag U - 1)|`` on the span of levels ``0..levels`` of each mode.

    Truncated displacements are unitary only on states well inside the
    cutoff, so the check is restricted to a low block (default ``N // 2``).
    """
    mats = op.factors
    N = mats[0].shape[0] - 1
    levels = N // 2 if levels is None else levels
    worst = 0.0
    for m in mats:
        cols = m[:, : levels + 1]
        worst = max(worst, float(np.max(np.abs(cols.conj().T @ cols - np.eye(levels + 1)))))
    return worst


def coherent_eigen_defect(model, sign=1, N=DEFAULT_TRUNCATION):
    """``|| phi(f2)|s alpha> - s E(f1,f2) |s alpha> ||`` with ``|s alpha> = exp(i s phi(f1))|0>``.

    The exact value is ``sqrt(W(f2, f2))``.
    """
    fock = TruncatedFock(N, model.modes)
    D = displacement_operator(model, F1, sign, fock).dense()
    vac = np.zeros(fock.dimension, dtype=complex)
    vac[0] = 1.0
    state = D @ vac
    E12 = oracle_bilinears(model).E[F1, F2]
    return float(np.linalg.norm(smeared_field(model, F2, fock) @ state - sign * E12 * state))


def model_from_amplitudes(amplitudes, nodes):
    """Discrete model from four :class:`~udwq.field_backend.ModeAmplitude` sampled at grid ``nodes``."""
    rows = []
    for amp in amplitudes:
        w = amp.grid.weights[nodes]
        if amp.grid.radial and np.any(amp.center != 0):
            raise NumericalContractError("radial amplitudes must be centred at the origin to discretize",
                                         invariant="discrete mode model")
        rows.append(amp.values[nodes] * np.sqrt(w))
    return DiscreteModeModel(np.array(rows))
