"""Weyl-word reduction and quasifree expectation values.

Smearings are labelled by integer coefficient vectors over the basis
``(f1, f2, g1, g2)``; the factor ``c`` stands for ``W(E(sum_i c_i b_i))``.
Products are reduced with ``W(Ef) W(Eg) = exp(-i E(f, g)/2) W(E(f + g))``
by folding strictly left to right, and a single Weyl generator has vacuum
expectation ``exp(-W(h, h)/2)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InvalidTableError

BASIS = ("f1", "f2", "g1", "g2")
F1, F2, G1, G2 = range(4)


@dataclass(frozen=True, eq=False)
class BilinearTable:
    """E and H over the basis ``(f1, f2, g1, g2)``.

    Only ``E`` (antisymmetric) and ``H`` (symmetric) are stored; the
    Wightman matrix is derived as ``(H + iE)/2``.  Construction validates
    the table and raises :class:`InvalidTableError` on failure.
    """

    E: np.ndarray
    H: np.ndarray
    labels: tuple = BASIS

    def __post_init__(self):
        E = np.array(self.E, dtype=float)
        H = np.array(self.H, dtype=float)
        if E.shape != (4, 4) or H.shape != (4, 4):
            raise InvalidTableError(f"tables must be 4x4, got {E.shape} and {H.shape}")
        if not (np.all(np.isfinite(E)) and np.all(np.isfinite(H))):
            raise InvalidTableError("table entries must be finite")
        if not np.array_equal(E, -E.T):
            raise InvalidTableError("E must be exactly antisymmetric", invariant="E antisymmetry")
        if not np.array_equal(H, H.T):
            raise InvalidTableError("H must be exactly symmetric", invariant="H symmetry")
        scale = max(1.0, float(np.max(np.abs(H))))
        min_eig = float(np.linalg.eigvalsh(H)[0])
        if min_eig < -1e-10 * scale:
            raise InvalidTableError(f"H is not positive semidefinite (min eigenvalue {min_eig:.3e})",
                                    invariant="H positivity")
        W = (H + 1j * E) / 2.0
        gram_min = float(np.linalg.eigvalsh(W)[0])
        if gram_min < -1e-10 * scale:
            raise InvalidTableError(f"Wightman matrix is not positive semidefinite (min eigenvalue {gram_min:.3e})",
                                    invariant="Gram positivity")
        E.setflags(write=False)
        H.setflags(write=False)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "H", H)

    @classmethod
    def from_wightman(cls, W):
        """Build from a Hermitian 4x4 Wightman (Gram) matrix."""
        W = np.asarray(W, dtype=complex)
        # exact (anti)symmetry taken from the upper triangle
        iu = np.triu_indices(4, 1)
        E = np.zeros((4, 4))
        E[iu] = 2.0 * W.imag[iu]
        E = E - E.T
        Hu = np.triu(2.0 * W.real)
        H = Hu + np.triu(Hu, 1).T
        return cls(E, H)

    @classmethod
    def zeros(cls):
        return cls(np.zeros((4, 4)), np.zeros((4, 4)))

    @classmethod
    def ideal(cls, W11, W22, E12, H12):
        """Table for ``g_i = f_i`` built from Alice's four numbers."""
        W = np.array([[W11, (H12 + 1j * E12) / 2], [(H12 - 1j * E12) / 2, W22]])
        return cls.from_wightman(np.block([[W, W], [W, W]]))

    @property
    def W_diag(self):
        return np.diag(self.H) / 2.0

    def wightman(self):
        return (self.H + 1j * self.E) / 2.0

    def entry(self, name, a, b):
        """Look up ``E``, ``H`` or ``W`` by basis labels, e.g. ``entry("E", "f1", "g2")``."""
        i, j = BASIS.index(a), BASIS.index(b)
        if name == "E":
            return float(self.E[i, j])
        if name == "H":
            return float(self.H[i, j])
        if name == "W":
            return complex(self.wightman()[i, j])
        raise KeyError(name)

    def uncertainty_ratios(self):
        """``E_ij^2 / (W_ii W_jj)`` for every pair (``nan`` where a diagonal vanishes).

        Gram positivity bounds each ratio by 4.
        """
        wd = self.W_diag
        bound = np.outer(wd, wd)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(bound > 0, self.E**2 / bound, np.nan)

    def cross_causal_max(self):
        """Largest ``|E(f_i, g_j)|``."""
        return float(np.max(np.abs(self.E[:2, 2:])))


@dataclass(frozen=True)
class WeylWord:
    """Ordered product of Weyl generators times an accumulated phase."""

    factors: tuple = ()
    phase: complex = 1.0 + 0.0j

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(tuple(float(v) for v in c) for c in self.factors))
        object.__setattr__(self, "phase", complex(self.phase))


def compose(word, factor):
    """Append one factor; reduction is deferred to :func:`reduce`."""
    return WeylWord(word.factors + (tuple(factor),), word.phase)


def reduce(word, table):
    """Collapse ``word`` to a single generator.

    Returns:
        tuple: ``(total, phase)`` with ``total`` the summed coefficient
        vector and ``phase`` the word's own phase times the product of
        ``exp(-i E(accumulated, next)/2)`` over the left-to-right fold.
    """
    E = table.E
    if not word.factors:
        return np.zeros(4), word.phase
    acc = np.array(word.factors[0])
    angle = 0.0
    for c in word.factors[1:]:
        c = np.array(c)
        angle += acc @ E @ c
        acc = acc + c
    return acc, word.phase * np.exp(-0.5j * angle)


def quasifree_expectation(word, table):
    """Vacuum expectation of a Weyl word in the quasifree state of ``table``."""
    total, phase = reduce(word, table)
    return phase * np.exp(-0.25 * (total @ table.H @ total))


def quasifree_expectation_many(words, table):
    """Vectorized :func:`quasifree_expectation` for unit-phase words.

    Args:
        words: array of shape ``(batch, length, 4)`` of coefficient vectors.
        table: the :class:`BilinearTable`.

    Returns:
        complex array of shape ``(batch,)``.
    """
    words = np.asarray(words, dtype=float)
    acc = words[:, 0, :].copy()
    angle = np.zeros(words.shape[0])
    for j in range(1, words.shape[1]):
        c = words[:, j, :]
        angle += np.einsum("bi,ij,bj->b", acc, table.E, c)
        acc += c
    gauss = np.einsum("bi,ij,bj->b", acc, table.H, acc)
    return np.exp(-0.5j * angle - 0.25 * gauss)


def _unit(i, s):
    v = [0.0, 0.0, 0.0, 0.0]
    v[i] = float(s)
    return tuple(v)


def protocol_word(x, z):
    """The eight-factor word ``W(z1 f1) W(x1 f2) W(x2 g2) W(z2 g1) W(z3 g1) W(x3 g2) W(x4 f2) W(z4 f1)``."""
    x1, x2, x3, x4 = x
    z1, z2, z3, z4 = z
    return WeylWord((
        _unit(F1, z1), _unit(F2, x1), _unit(G2, x2), _unit(G1, z2),
        _unit(G1, z3), _unit(G2, x3), _unit(F2, x4), _unit(F1, z4),
    ))


SIGN_PATTERNS = np.array(list(itertools.product((1, -1), repeat=8)), dtype=float)
"""All 256 sign patterns ordered as ``(x1, x2, x3, x4, z1, z2, z3, z4)``."""


def protocol_words():
    """Coefficient array ``(256, 8, 4)`` of every protocol word, in :data:`SIGN_PATTERNS` order."""
    out = np.zeros((256, 8, 4))
    slots = [(F1, 4), (F2, 0), (G2, 1), (G1, 5), (G1, 6), (G2, 2), (F2, 3), (F1, 7)]
    for pos, (basis, col) in enumerate(slots):
        out[:, pos, basis] = SIGN_PATTERNS[:, col]
    return out


def omega_O_closed_form(x, z, table, mode="general"):
    """Explicit exponential formula for the protocol word expectation.

    Independent of :func:`reduce`; it exists as a cross-check.

    Args:
        x: signs ``(x1, x2, x3, x4)``.
        z: signs ``(z1, z2, z3, z4)``.
        table: the :class:`BilinearTable`.
        mode: ``"general"`` uses all four smearings; ``"same_smearing"``
            assumes ``g_i = f_i`` and reads only Alice's entries.
    """
    x1, x2, x3, x4 = x
    z1, z2, z3, z4 = z
    E, H = table.E, table.H
    W = np.diag(H) / 2.0
    if mode == "same_smearing":
        Z = z1 + z2 + z3 + z4
        X = x1 + x2 + x3 + x4
        phase = (x1 + x2) * (z1 - z2 - z3 - z4) + (x3 + x4) * (z1 + z2 + z3 - z4)
        return (np.exp(-0.5 * Z**2 * W[F1] - 0.5 * X**2 * W[F2])
                * np.exp(-0.5 * X * Z * H[F1, F2])
                * np.exp(-0.5j * phase * E[F1, F2]))
    if mode != "general":
        raise ValueError(f"unknown mode {mode!r}")
    a1, a2, b1, b2 = z1 + z4, x1 + x4, z2 + z3, x2 + x3
    angle = ((z1 - z4) * (x1 + x4) * E[F1, F2]
             + (z2 + z3) * (x3 - x2) * E[G1, G2]
             + (z2 + z3) * (z1 - z4) * E[F1, G1]
             + (z1 - z4) * (x2 + x3) * E[F1, G2]
             + (z2 + z3) * (x1 - x4) * E[F2, G1]
             + (x2 + x3) * (x1 - x4) * E[F2, G2])
    quad = (a1 * a1 * W[F1] + a2 * a2 * W[F2] + b1 * b1 * W[G1] + b2 * b2 * W[G2])
    mixed = (a2 * a1 * H[F1, F2] + b1 * a1 * H[F1, G1] + b2 * a1 * H[F1, G2]
             + b1 * a2 * H[F2, G1] + b2 * a2 * H[F2, G2] + b2 * b1 * H[G1, G2])
    return np.exp(-0.5j * angle) * np.exp(-0.5 * quad) * np.exp(-0.5 * mixed)
