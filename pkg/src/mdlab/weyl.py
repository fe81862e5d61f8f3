"""Symbolic exponentiated-field algebra with Gaussian state evaluation.

Words are kept in reduced form (one unit phase, one real label); products
reduce eagerly through the multiplication cocycle, so no phase drift
accumulates.  A word's label lives in the coordinates of a symplectic space
object, which supplies the symplectic form, the complex one-particle image of
a label, and the free dynamics.  Operator norms and matrix representations
are deliberately out of scope: only the phase algebra and the Gaussian
functional are realized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .minkowski import FieldModel, TestFunction
from .quasifree import GroundStructure, StructureError, ThermalDoubling
from .subspaces import RealSubspace, RealifiedSpace, SubspaceError

PHASE_TOL = 1e-12


@dataclass(frozen=True)
class WeylWord:
    """phase * W(label), with |phase| = 1 and W(0) the identity."""

    phase: complex
    label: np.ndarray

    def __post_init__(self):
        if abs(abs(complex(self.phase)) - 1.0) > PHASE_TOL:
            raise SubspaceError("word phase must be a unit complex number")
        lab = np.asarray(self.label, dtype=float).ravel()
        object.__setattr__(self, "label", lab)
        lab.setflags(write=False)

    @staticmethod
    def identity(dim: int) -> "WeylWord":
        return WeylWord(1.0 + 0.0j, np.zeros(dim))

    def is_identity(self, tol: float = PHASE_TOL) -> bool:
        return bool(np.max(np.abs(self.label), initial=0.0) < tol
                    and abs(self.phase - 1.0) < tol)


class RealifiedWeylSpace:
    """Symplectic space of raw realified vectors; sigma(x, y) = 2 <x, J y>_R."""

    def __init__(self, space: RealifiedSpace, ground: GroundStructure | None = None):
        self.space = space
        self.ground = ground
        if ground is not None and ground.n_modes != space.complex_dim:
            raise SubspaceError("ground structure does not match the space dimension")

    @property
    def label_dim(self) -> int:
        return self.space.real_dim

    def sigma(self, x: np.ndarray, y: np.ndarray) -> float:
        return self.space.sigma(x, y)

    def one_particle(self, label: np.ndarray) -> np.ndarray:
        return self.space.derealify(label)

    def evolve_label(self, label: np.ndarray, t: float) -> np.ndarray:
        if self.ground is None:
            raise StructureError("no dynamics attached to this space")
        return self.space.realify(self.ground.evolve(self.one_particle(label), t))


class ModelWeylSpace:
    """Labels are realified metric coordinates of lattice one-particle images.

    The symplectic form is 2 Im of the hyperboloid product, which is exactly
    the causal-propagator pairing of the underlying test functions.
    """

    def __init__(self, model: FieldModel):
        self.model = model
        self.space = RealifiedSpace(model.size)

    @property
    def label_dim(self) -> int:
        return self.space.real_dim

    def sigma(self, x: np.ndarray, y: np.ndarray) -> float:
        return 2.0 * complex(np.vdot(self.one_particle(x), self.one_particle(y))).imag

    def one_particle(self, label: np.ndarray) -> np.ndarray:
        return self.space.derealify(label)

    def evolve_label(self, label: np.ndarray, t: float) -> np.ndarray:
        u = self.one_particle(label) * np.exp(-1j * self.model.omega * t)
        return self.space.realify(u)

    def word_from_test_function(self, f: TestFunction) -> WeylWord:
        return WeylWord(1.0 + 0.0j, self.space.realify(self.model.k_infty_metric(f)))


def weyl_multiply(space, w1: WeylWord, w2: WeylWord) -> WeylWord:
    """W(f) W(g) = e^{-i sigma(f, g) / 2} W(f + g), reduced eagerly."""
    if w1.label.shape != w2.label.shape:
        raise SubspaceError("labels live in different spaces")
    phase = w1.phase * w2.phase * np.exp(-0.5j * space.sigma(w1.label, w2.label))
    return WeylWord(phase, w1.label + w2.label)


def weyl_star(w: WeylWord) -> WeylWord:
    """Involution W(f)* = W(-f) with conjugated phase."""
    return WeylWord(np.conj(w.phase), -w.label)


def free_dynamics(space, w: WeylWord, t: float) -> WeylWord:
    """Time-translate the label; a symplectomorphism, so no phase is produced."""
    return WeylWord(w.phase, space.evolve_label(w.label, t))


def evaluate_quasifree(space, w: WeylWord, structure) -> complex:
    """Gaussian functional phase * exp(-||image||^2 / 2) for ground or thermal states."""
    u = space.one_particle(w.label)
    if isinstance(structure, ThermalDoubling):
        ku = structure.k_beta(u)
        norm_sq = float(np.vdot(ku, ku).real)
    elif isinstance(structure, GroundStructure):
        norm_sq = float(np.vdot(u, u).real)
    else:
        raise StructureError("quasi-free evaluation needs a ground or thermal structure")
    return complex(w.phase * np.exp(-0.5 * norm_sq))


def gram_positivity_report(space, words, structure, tol: float = 1e-10) -> dict:
    """Positivity of the state on the span of a few words (Gram eigenvalues)."""
    n = len(words)
    gram = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            gram[i, j] = evaluate_quasifree(
                space, weyl_multiply(space, weyl_star(words[i]), words[j]), structure)
    eigs = np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))
    herm_resid = float(np.linalg.norm(gram - gram.conj().T, 2))
    return {
        "min_eigenvalue": float(eigs.min()),
        "hermiticity_residual": herm_resid,
        "tolerance": tol,
        "passed": bool(eigs.min() > -tol and herm_resid < tol),
    }


@dataclass(frozen=True)
class SegalWord:
    """phase * U(v1) V(v2) with v1, v2 in the factor subspace."""

    phase: complex
    v1: np.ndarray
    v2: np.ndarray


def factor_decompose(space, factor: RealSubspace, label: np.ndarray,
                     tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Unique splitting label = v1 + J v2 with v1, v2 in the factor."""
    j = space.space.complex_structure
    v1 = factor.project(label)
    jv2 = label - v1
    v2 = -j @ jv2
    resid = np.linalg.norm(v2 - factor.project(v2))
    if resid > tol * max(1.0, float(np.linalg.norm(label))):
        raise SubspaceError("label does not split along the factor decomposition")
    return v1, v2


def segal_from_weyl(space, factor: RealSubspace, w: WeylWord) -> SegalWord:
    """Rewrite phase*W(v) as phase'*U(v1)V(v2) through the multiplication rule."""
    v1, v2 = factor_decompose(space, factor, w.label)
    j = space.space.complex_structure
    bch = np.exp(-0.5j * space.sigma(v1, j @ v2))
    return SegalWord(w.phase / bch, v1, v2)


def weyl_from_segal(space, sw: SegalWord) -> WeylWord:
    """U(v1) V(v2) = W(v1) W(J v2); the cocycle fixes the phase."""
    j = space.space.complex_structure
    u_part = WeylWord(1.0 + 0.0j, np.asarray(sw.v1, dtype=float))
    v_part = WeylWord(1.0 + 0.0j, j @ np.asarray(sw.v2, dtype=float))
    prod = weyl_multiply(space, u_part, v_part)
    return WeylWord(sw.phase * prod.phase, prod.label)


def kms_boundary_check(space, thermal: ThermalDoubling, w_f: WeylWord, w_g: WeylWord,
                       t_grid, tol: float = 1e-8) -> dict:
    """Gaussian two-point KMS boundary condition between F and G.

    F(t) = state(W(f) a_t W(g)) and G(t) = state(a_t W(g) W(f)) have exponents
    that are finite sums of e^{-+ i t h~_k}; the analytic continuation of F
    across the thermal strip is evaluated exactly by weighting mode k with
    e^{-beta h~_k}, the same closed-form mechanism (c^2 = s^2 e^{beta omega})
    as in the one-particle boundary check.  The residual of the opposite
    strip orientation is reported without a gate.
    """
    uf = space.one_particle(w_f.label)
    ug = space.one_particle(w_g.label)
    kf = thermal.k_beta(uf)
    kg = thermal.k_beta(ug)
    ht = thermal.doubled_generator
    prefactor = np.exp(-0.5 * (np.vdot(kf, kf).real + np.vdot(kg, kg).real))
    b = np.conj(kf) * kg
    b_rev = np.conj(kg) * kf

    devs, opposite, gvals = [], [], []
    for t in np.asarray(t_grid, dtype=float).ravel():
        exp_f_bnd = np.sum(b * np.exp(-thermal.beta * ht) * np.exp(-1j * t * ht))
        exp_f_opp = np.sum(b * np.exp(+thermal.beta * ht) * np.exp(-1j * t * ht))
        exp_g = np.sum(b_rev * np.exp(1j * t * ht))
        g_val = prefactor * np.exp(-exp_g)
        devs.append(abs(prefactor * np.exp(-exp_f_bnd) - g_val))
        opposite.append(abs(prefactor * np.exp(-exp_f_opp) - g_val))
        gvals.append(abs(g_val))
    denom = max(max(gvals), 1e-300)
    dev = max(devs) / denom
    return {
        "max_boundary_deviation": float(dev),
        "opposite_orientation_residual": float(max(opposite) / denom),
        "tolerance": tol,
        "passed": bool(dev < tol),
    }
