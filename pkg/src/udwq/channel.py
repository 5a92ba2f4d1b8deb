"""Post-protocol density matrices and the information measures built on them.

Two-qubit states are stored in the ordered basis
``{|+z +z>, |+z -z>, |-z +z>, |-z -z>}`` of ``B (x) E``: Bob's qubit is the
first tensor factor, the environment the second.  Alice-environment inputs
``rho_EA`` are stored as ``E (x) A`` (environment first).

All entropies are in bits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import NonPhysicalStateError, NumericalContractError, PreconditionError
from .weyl import F1, F2, G1, G2, BilinearTable, protocol_words, quasifree_expectation_many

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)

PLUS_Z = np.array([1, 0], dtype=complex)
MINUS_Z = np.array([0, 1], dtype=complex)
PLUS_Y = np.array([1, 1j], dtype=complex) / np.sqrt(2)

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
FINE_TUNING_TOL = 1e-9


def projector(axis, sign):
    """Projector onto the ``sign`` eigenvector of the Pauli matrix ``axis``."""
    return (I2 + sign * axis) / 2


def _check_density(m, name):
    m = np.asarray(m, dtype=complex)
    d = m.shape[0]
    if m.shape != (d, d):
        raise NumericalContractError(f"{name} must be square, got {m.shape}", invariant="density matrix shape")
    asym = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if asym > HERMITIAN_TOL:
        raise NumericalContractError(f"{name} is not Hermitian (residual {asym:.3e})",
                                     invariant="density matrix hermiticity")
    m = (m + m.conj().T) / 2
    tr = np.trace(m).real
    if abs(tr - 1) > 1e-10:
        raise NumericalContractError(f"{name} has trace {tr!r}", invariant="density matrix trace")
    lo = np.linalg.eigvalsh(m)[0]
    if lo < -PSD_TOL:
        raise NonPhysicalStateError(f"{name} has negative eigenvalue {lo:.3e}", min_eigenvalue=float(lo))
    return m


@dataclass(frozen=True, eq=False)
class QubitState:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise NumericalContractError(f"qubit state must be 2x2, got {m.shape}")
        object.__setattr__(self, "matrix", _check_density(m, "qubit state"))

    @classmethod
    def pure(cls, ket):
        ket = np.asarray(ket, dtype=complex)
        ket = ket / np.linalg.norm(ket)
        return cls(np.outer(ket, ket.conj()))

    @classmethod
    def from_bloch(cls, r):
        r = np.asarray(r, dtype=float)
        return cls((I2 + r[0] * SX + r[1] * SY + r[2] * SZ) / 2)


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """A ``B (x) E`` density matrix.

    ``checked=False`` skips validation; it is used only for matrices built
    from printed formulas that are under audit.
    """

    matrix: np.ndarray
    checked: bool = field(default=True)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise NumericalContractError(f"two-qubit state must be 4x4, got {m.shape}")
        if self.checked:
            m = _check_density(m, "two-qubit state")
        object.__setattr__(self, "matrix", m)

    def bob_marginal(self):
        return np.einsum("aebe->ab", self.matrix.reshape(2, 2, 2, 2))

    def env_marginal(self):
        return np.einsum("aeaf->ef", self.matrix.reshape(2, 2, 2, 2))

    def partial_transpose_env(self):
        return self.matrix.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


BELL_EA = np.outer(
    (np.kron(MINUS_Z, PLUS_Z) + np.kron(PLUS_Z, MINUS_Z)) / np.sqrt(2),
    (np.kron(MINUS_Z, PLUS_Z) + np.kron(PLUS_Z, MINUS_Z)).conj() / np.sqrt(2),
)
"""``|psi_EA> = (|-z +z> + |+z -z>)/sqrt(2)`` as an ``E (x) A`` density matrix."""

BELL_EB = 0.5 * np.array([[0, 0, 0, 0], [0, 1, 1, 0], [0, 1, 1, 0], [0, 0, 0, 0]], dtype=complex)


@dataclass(frozen=True, eq=False)
class ProtocolSpec:
    table: BilinearTable
    rho_EA: np.ndarray = field(default_factory=lambda: BELL_EA.copy())
    bob_initial: np.ndarray = field(default_factory=lambda: np.outer(PLUS_Y, PLUS_Y.conj()))

    def __post_init__(self):
        rho = self.rho_EA.matrix if isinstance(self.rho_EA, TwoQubitState) else self.rho_EA
        bob = self.bob_initial.matrix if isinstance(self.bob_initial, QubitState) else self.bob_initial
        object.__setattr__(self, "rho_EA", TwoQubitState(rho).matrix)
        object.__setattr__(self, "bob_initial", QubitState(bob).matrix)


def _sign_index(s):
    return 0 if s > 0 else 1


def _env_parts(rho_EA):
    """``Tr_A[P_x4 P_z4 rho_EA P_-z1 P_-x1]`` indexed ``[x1, x4, z1, z4]``."""
    out = np.zeros((2, 2, 2, 2, 2, 2), dtype=complex)
    for x1, x4, z1, z4 in itertools.product((1, -1), repeat=4):
        left = np.kron(I2, projector(SX, x4) @ projector(SZ, z4))
        right = np.kron(I2, projector(SZ, -z1) @ projector(SX, -x1))
        m = (left @ rho_EA @ right).reshape(2, 2, 2, 2)
        out[_sign_index(x1), _sign_index(x4), _sign_index(z1), _sign_index(z4)] = np.einsum("iaja->ij", m)
    return out


def _bob_parts(rho_B):
    """``P_-z3 P_-x3 rho_B P_x2 P_z2`` indexed ``[x2, x3, z2, z3]``."""
    out = np.zeros((2, 2, 2, 2, 2, 2), dtype=complex)
    for x2, x3, z2, z3 in itertools.product((1, -1), repeat=4):
        m = projector(SZ, -z3) @ projector(SX, -x3) @ rho_B @ projector(SX, x2) @ projector(SZ, z2)
        out[_sign_index(x2), _sign_index(x3), _sign_index(z2), _sign_index(z3)] = m
    return out


def omega_tensor(table):
    """All 256 protocol-word expectations as a ``(2,)*8`` array over ``(x1..x4, z1..z4)``."""
    return quasifree_expectation_many(protocol_words(), table).reshape((2,) * 8)


def _finalize(m):
    asym = float(np.max(np.abs(m - m.conj().T)))
    if asym > HERMITIAN_TOL:
        raise NumericalContractError(f"assembled rho_EB is not Hermitian (residual {asym:.3e})",
                                     invariant="rho_EB hermiticity")
    m = (m + m.conj().T) / 2
    tr = np.trace(m).real
    if abs(tr - 1) > 1e-10:
        raise NumericalContractError(f"assembled rho_EB has trace {tr!r}", invariant="rho_EB trace")
    m = m / tr
    lo = float(np.linalg.eigvalsh(m)[0])
    if lo < -PSD_TOL:
        raise NonPhysicalStateError(
            f"assembled rho_EB has eigenvalue {lo:.3e}; the bilinear table is inconsistent",
            min_eigenvalue=lo, invariant="rho_EB positivity")
    return TwoQubitState(m)


def _assemble(omega, env_parts, bob_parts):
    # omega[x1 x2 x3 x4 z1 z2 z3 z4], env[x1 x4 z1 z4 e e'], bob[x2 x3 z2 z3 b b']
    out = np.einsum("pqrsuvwy,psuyij,qrvwkl->kilj", omega, env_parts, bob_parts, optimize=True)
    return out.reshape(4, 4)


def assemble_rho_EB(spec):
    """Exact ``rho_EB`` from the sum over all 256 sign patterns.

    Raises:
        NonPhysicalStateError: the result is not PSD within 1e-10.
    """
    return _finalize(_assemble(omega_tensor(spec.table), _env_parts(spec.rho_EA), _bob_parts(spec.bob_initial)))


def make_channel(table, bob_initial=None):
    """Return ``rho_EA -> rho_EB`` for a fixed table (expectations computed once)."""
    omega = omega_tensor(table)
    bob = ProtocolSpec(table, BELL_EA, bob_initial if bob_initial is not None
                       else np.outer(PLUS_Y, PLUS_Y.conj())).bob_initial
    bob_parts = _bob_parts(bob)

    def channel(rho_EA):
        rho = TwoQubitState(rho_EA.matrix if isinstance(rho_EA, TwoQubitState) else rho_EA).matrix
        return _finalize(_assemble(omega, _env_parts(rho), bob_parts))

    return channel


def _alice(table):
    E, H = table.E, table.H
    return H[F1, F1] / 2, H[F2, F2] / 2, E[F1, F2], H[F1, F2]


def closed_form_rho_EB(table):
    """Matrix built from the printed ideal-case entries, verbatim.

    Only for discrepancy analysis; see :func:`corrected_closed_form_rho_EB`.
    The result is not validated as a density matrix.
    """
    W11, W22, E12, H12 = _alice(table)
    W12 = complex(table.wightman()[F1, F2])
    W21 = np.conj(W12)
    s, c = np.sin(2 * E12), np.cos(2 * E12)
    Pp = 0.25 * (1 + np.exp(-2 * W11) * s)
    Pm = 0.25 * (1 - np.exp(-2 * W11) * s)
    X = 0.25 * s * (np.exp(-2 * W22) + s)
    A = -0.25j * np.exp(-2 * W11) * c * (s - np.exp(-2 * W22) * np.sinh(4 * W21))
    B = -0.25j * np.exp(-2 * W11) * c * (s + np.exp(-2 * W22) * np.cosh(4 * W12))
    C = 0.25 * np.exp(-8 * W11) * s * (s - np.exp(-2 * W22) * np.cosh(4 * H12))
    return TwoQubitState(_entry_layout(Pp, Pm, X, A, B, C), checked=False)


def corrected_closed_form_rho_EB(table):
    """Ideal-case closed form with entries re-derived from the general sum.

    Differs from the printed entries in ``P_pm`` (``W(f2,f2)`` replaces
    ``W(f1,f1)``), ``A`` (``+cosh`` replaces ``-sinh``) and ``C`` (inner sign).
    """
    W11, W22, E12, H12 = _alice(table)
    W12 = complex(table.wightman()[F1, F2])
    W21 = np.conj(W12)
    s, c = np.sin(2 * E12), np.cos(2 * E12)
    Pp = 0.25 * (1 + np.exp(-2 * W22) * s)
    Pm = 0.25 * (1 - np.exp(-2 * W22) * s)
    X = 0.25 * s * (np.exp(-2 * W22) + s)
    A = -0.25j * np.exp(-2 * W11) * c * (s + np.exp(-2 * W22) * np.cosh(4 * W21))
    B = -0.25j * np.exp(-2 * W11) * c * (s + np.exp(-2 * W22) * np.cosh(4 * W12))
    C = 0.25 * np.exp(-8 * W11) * s * (s + np.exp(-2 * W22) * np.cosh(4 * H12))
    return TwoQubitState(_entry_layout(Pp, Pm, X, A, B, C), checked=False)


def _entry_layout(Pp, Pm, X, A, B, C):
    return np.array([
        [Pm, 0, A, C],
        [0, Pp, X, B],
        [np.conj(A), np.conj(X), Pp, 0],
        [np.conj(C), np.conj(B), 0, Pm],
    ], dtype=complex)


def fine_tuning_offset(E12):
    """Distance of ``E12`` from ``pi/4`` modulo ``2 pi``."""
    return abs((E12 - np.pi / 4 + np.pi) % (2 * np.pi) - np.pi)


def fine_tuned_rho_EB(table, tol=FINE_TUNING_TOL):
    """Simplified ideal-case matrix valid when ``E(f1, f2) = pi/4 mod 2 pi``.

    Raises:
        PreconditionError: the table is not fine tuned within ``tol``.
    """
    W11, W22, E12, H12 = _alice(table)
    if fine_tuning_offset(E12) > tol:
        raise PreconditionError(f"E(f1,f2) = {E12!r} is not pi/4 mod 2pi within {tol:g}",
                                invariant="fine-tuning condition")
    Pp = 0.25 * (1 + np.exp(-2 * W22))
    Pm = 0.25 * (1 - np.exp(-2 * W22))
    C = 0.25 * np.exp(-8 * W11) * (np.exp(-2 * W22) * np.cosh(4 * H12) + 1)
    return TwoQubitState(np.array([
        [Pm, 0, 0, C],
        [0, Pp, Pp, 0],
        [0, Pp, Pp, 0],
        [C, 0, 0, Pm],
    ], dtype=complex))


def von_neumann_entropy(rho):
    """Entropy in bits with the ``0 log 0 = 0`` convention."""
    m = rho.matrix if isinstance(rho, (QubitState, TwoQubitState)) else rho
    m = _check_density(m, "density matrix")
    lam = np.clip(np.linalg.eigvalsh(m), 0.0, None)
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log2(lam)))


def coherent_information(rho_EB):
    """``S(Tr_E rho_EB) - S(rho_EB)``."""
    state = rho_EB if isinstance(rho_EB, TwoQubitState) else TwoQubitState(rho_EB)
    return von_neumann_entropy(state.bob_marginal()) - von_neumann_entropy(state.matrix)


def negativity(rho):
    """``(||rho^{T_E}||_1 - 1)/2``."""
    state = rho if isinstance(rho, TwoQubitState) else TwoQubitState(rho)
    pt = state.partial_transpose_env()
    norm = np.sum(np.abs(np.linalg.eigvalsh((pt + pt.conj().T) / 2)))
    return float(max(0.0, (norm - 1) / 2))


def trace_distance(a, b):
    """``||a - b||_1 / 2`` for Hermitian matrices or state objects."""
    a = getattr(a, "matrix", a)
    b = getattr(b, "matrix", b)
    d = np.asarray(a) - np.asarray(b)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh((d + d.conj().T) / 2))))


def purify(rho_A):
    """Canonical purification ``sum_i sqrt(p_i) |i>_E |v_i>_A`` as an ``E (x) A`` matrix."""
    m = rho_A.matrix if isinstance(rho_A, QubitState) else QubitState(rho_A).matrix
    p, v = np.linalg.eigh(m)
    p = np.clip(p, 0.0, None)
    psi = sum(np.sqrt(p[i]) * np.kron(np.eye(2)[i], v[:, i]) for i in range(2))
    return np.outer(psi, psi.conj())


def bloch_grid():
    """26 unit Bloch vectors (axes, edge midpoints, cube corners) plus the origin."""
    dirs = []
    for v in itertools.product((-1, 0, 1), repeat=3):
        if v != (0, 0, 0):
            v = np.array(v, dtype=float)
            dirs.append(v / np.linalg.norm(v))
    dirs.append(np.zeros(3))
    return np.array(dirs)


def channel_coherent_information(channel, inputs=None, return_all=False):
    """Maximize ``I_c`` over purified inputs.

    Args:
        channel: callable ``rho_EA -> TwoQubitState`` (see :func:`make_channel`).
        inputs: Bloch vectors; defaults to :func:`bloch_grid`.
        return_all: also return the per-input values.

    The maximum over a finite grid is reported; no global optimality is
    claimed away from the ideal limit.
    """
    grid = bloch_grid() if inputs is None else np.asarray(inputs, dtype=float)
    values = np.array([coherent_information(channel(purify(QubitState.from_bloch(r)))) for r in grid])
    best = float(np.max(values))
    return (best, values) if return_all else best


def spacelike_rho_EB(spec, tol=1e-12):
    """Product form ``sigma_B (x) rho_E`` valid when all ``E(f_i, g_j)`` vanish.

    Assumes Bob starts in ``|+y>``.

    Raises:
        PreconditionError: some ``|E(f_i, g_j)| > tol * scale``.
    """
    table = spec.table
    scale = max(1.0, float(np.max(np.abs(table.E))))
    cross = table.cross_causal_max()
    if cross > tol * scale:
        raise PreconditionError(f"max |E(f_i,g_j)| = {cross:.3e} exceeds {tol:g}",
                                invariant="causal disconnection")
    plus_y = np.outer(PLUS_Y, PLUS_Y.conj())
    if np.max(np.abs(spec.bob_initial - plus_y)) > 1e-12:
        raise PreconditionError("product form assumes Bob starts in |+y>", invariant="Bob initial state")
    Wg1, Wg2 = table.H[G1, G1] / 2, table.H[G2, G2] / 2
    X = -0.5j * np.exp(-2 * Wg1) * (np.exp(-2 * Wg2) * np.cosh(2 * table.H[G1, G2]) + np.sin(2 * table.E[G1, G2]))
    sigma_B = np.array([[0.5, X], [np.conj(X), 0.5]])
    rho_E = np.einsum("iaja->ij", spec.rho_EA.reshape(2, 2, 2, 2))
    return TwoQubitState(np.kron(sigma_B, rho_E))


def classical_signaling(channel, inputs):
    """Largest ``||Phi(rho) - Phi(sigma)||_1`` over pairs of Alice inputs.

    Uses the unhalved trace norm, so the value lies in ``[0, 2]``.
    """
    inputs = list(inputs)
    if len(inputs) < 2:
        raise PreconditionError("classical_signaling needs at least two inputs")
    outs = [channel(purify(s)).bob_marginal() for s in inputs]
    best = 0.0
    for a, b in itertools.combinations(outs, 2):
        best = max(best, 2 * trace_distance(a, b))
    return best
