"""Doubled-space subspace calculus: U/V constructors, orthogonal-complement
identities, generic-position diagnostics, commutant labels, and the modular
data of the global thermal standard subspace.

All subspaces live in the realified doubled space R^{4n} (layout
[Re Psi; Im Psi] for Psi in C^{2n}); orthogonals in the complement identities
are taken inside the factor K (+) K, never in the full realified space; only
the symplectic complement is a full-space operation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .quasifree import ThermalDoubling
from .subspaces import (
    TOL_ANGLE,
    TOL_EQ,
    TOL_RANK,
    RealLinearOperator,
    RealSubspace,
    RealifiedSpace,
    SubspaceError,
    apply_operator,
    intersect,
    max_principal_angle,
    orthocomplement,
    orthonormalize,
    sum_closure,
)


_COMPLEMENT_NAMES = {"K": "0", "0": "K"}


@dataclass(frozen=True)
class SubspaceLabel:
    """Symbolic label of a factor subspace, used by the commutant label map.

    The distinguished names "K" (whole factor) and "0" resolve their
    complements to each other; any other name just toggles a perp marker.
    """

    name: str
    perped: bool = False

    def perp(self) -> "SubspaceLabel":
        swap = _COMPLEMENT_NAMES.get(self.name)
        if swap is not None and not self.perped:
            return SubspaceLabel(swap, False)
        return SubspaceLabel(self.name, not self.perped)

    def __str__(self) -> str:
        return self.name + ("^perp" if self.perped else "")


def commutant_labels(k1: SubspaceLabel, k2: SubspaceLabel) -> tuple[SubspaceLabel, SubspaceLabel]:
    """Label-level commutant map (k1, k2) -> (k2^perp, k1^perp); involutive."""
    return k2.perp(), k1.perp()


def real_axis_factor(n_modes: int) -> RealSubspace:
    """The entrywise-real factor subspace of the realified C^n (frame [I; 0])."""
    f = np.zeros((2 * n_modes, n_modes))
    f[:n_modes] = np.eye(n_modes)
    return RealSubspace(f)


@dataclass(frozen=True)
class DualityContext:
    """Thermal doubling plus a factor subspace K with H_R = K (+) J K.

    K must be invariant under the conjugation and under e^{-beta h}; both are
    asserted numerically on construction rather than assumed.
    """

    thermal: ThermalDoubling
    factor: RealSubspace
    tol_eq: float = TOL_EQ

    def __post_init__(self):
        n = self.thermal.n_modes
        if self.factor.ambient_real_dim != 2 * n:
            raise SubspaceError("factor subspace must live in the realified mode space")
        if self.factor.rank != n:
            raise SubspaceError("factor subspace must have half the real dimension")
        j = self.single.complex_structure
        gram = self.factor.frame.T @ (j @ self.factor.frame)
        if np.max(np.abs(gram)) > self.tol_eq:
            raise SubspaceError("factor subspace is not orthogonal to its J-image")
        for op in (self.flat_conjugation, self.flat_gibbs):
            image = op @ self.factor.frame
            resid = image - self.factor.project(image)
            if np.linalg.norm(resid, 2) > self.tol_eq:
                raise SubspaceError("factor subspace is not invariant under the "
                                    "conjugation / Gibbs operators")

    @cached_property
    def single(self) -> RealifiedSpace:
        return RealifiedSpace(self.thermal.n_modes)

    @cached_property
    def doubled(self) -> RealifiedSpace:
        return RealifiedSpace(2 * self.thermal.n_modes)

    @cached_property
    def flat_conjugation(self) -> np.ndarray:
        return self.single.realify_antilinear(np.eye(self.thermal.n_modes))

    @cached_property
    def flat_gibbs(self) -> np.ndarray:
        g = np.exp(-self.thermal.beta * self.thermal.ground.dispersion)
        return self.single.realify_linear(np.diag(g.astype(complex)))

    # -- embeddings ---------------------------------------------------------

    def doubled_vector(self, top: np.ndarray, bottom: np.ndarray) -> np.ndarray:
        return self.doubled.realify(np.concatenate([top, bottom]))

    def _lift(self, source: RealSubspace, top_of, bottom_of) -> RealSubspace:
        cols = []
        for i in range(source.rank):
            u = self.single.derealify(source.frame[:, i])
            cols.append(self.doubled_vector(top_of(u), bottom_of(u)))
        if not cols:
            return RealSubspace.zero(2 * self.doubled.complex_dim)
        return orthonormalize(np.column_stack(cols), TOL_RANK)

    def _require_in_factor(self, s: RealSubspace):
        if not self.factor.contains(s, self.tol_eq):
            raise SubspaceError("subspace is not contained in the factor K")

    def kk(self) -> RealSubspace:
        """The subspace K (+) K of the doubled realified space."""
        n = self.thermal.n_modes
        zero = np.zeros(n, dtype=complex)
        cols = []
        for i in range(self.factor.rank):
            u = self.single.derealify(self.factor.frame[:, i])
            cols.append(self.doubled_vector(u, zero))
            cols.append(self.doubled_vector(zero, u))
        return orthonormalize(np.column_stack(cols), TOL_RANK)


def build_U(ctx: DualityContext, k1: RealSubspace) -> RealSubspace:
    """U(K1) = { Gamma s u (+) c u : u in K1 }."""
    ctx._require_in_factor(k1)
    s, c = ctx.thermal.sinh_weight, ctx.thermal.cosh_weight
    return ctx._lift(k1, lambda u: s * np.conj(u), lambda u: c * u)


def build_V(ctx: DualityContext, k2: RealSubspace) -> RealSubspace:
    """V(K2) = { -Gamma s u (+) c u : u in K2 }."""
    ctx._require_in_factor(k2)
    s, c = ctx.thermal.sinh_weight, ctx.thermal.cosh_weight
    return ctx._lift(k2, lambda u: -s * np.conj(u), lambda u: c * u)


def build_Utilde(ctx: DualityContext) -> RealSubspace:
    """U~ = { c v (+) Gamma s v : v in K }."""
    s, c = ctx.thermal.sinh_weight, ctx.thermal.cosh_weight
    return ctx._lift(ctx.factor, lambda v: c * v, lambda v: s * np.conj(v))


def build_Vtilde(ctx: DualityContext) -> RealSubspace:
    """V~ = { c v (+) -Gamma s v : v in K }."""
    s, c = ctx.thermal.sinh_weight, ctx.thermal.cosh_weight
    return ctx._lift(ctx.factor, lambda v: c * v, lambda v: -s * np.conj(v))


def operator_A(ctx: DualityContext) -> tuple[RealLinearOperator, RealLinearOperator]:
    """The invertible block operator mapping U(K1) onto {0} (+) K1, and its inverse.

    Blocks: diagonal c on the diagonal, -Gamma s off-diagonal (conjugation makes
    the off-diagonal blocks antilinear); the inverse flips the off-diagonal sign.
    """
    n = ctx.thermal.n_modes
    s = np.diag(ctx.thermal.sinh_weight.astype(complex))
    c = np.diag(ctx.thermal.cosh_weight.astype(complex))
    zero = np.zeros((n, n), dtype=complex)
    linear = np.block([[c, zero], [zero, c]])
    anti = np.block([[zero, -s], [-s, zero]])
    a = ctx.doubled.realify_linear(linear) + ctx.doubled.realify_antilinear(anti)
    a_inv = ctx.doubled.realify_linear(linear) - ctx.doubled.realify_antilinear(anti)
    return RealLinearOperator(a), RealLinearOperator(a_inv)


def operator_A_report(ctx: DualityContext, tol: float = 1e-10) -> dict:
    """Inverse residual and the spectral-norm bound 2 / sqrt(1 - e^{-beta m})."""
    a, a_inv = operator_A(ctx)
    inv_resid = float(np.linalg.norm(a.matrix @ a_inv.matrix - np.eye(a.matrix.shape[0]), 2))
    norm = a.norm()
    bound = 2.0 / np.sqrt(-np.expm1(-ctx.thermal.beta * ctx.thermal.ground.min_energy))
    return {
        "inverse_residual": inv_resid,
        "operator_norm": norm,
        "norm_bound": float(bound),
        "tolerance": tol,
        "passed": bool(inv_resid < tol and norm <= bound * (1.0 + 1e-12)),
    }


def _orthogonal_in_factor(ctx: DualityContext, s: RealSubspace) -> RealSubspace:
    return orthocomplement(s, within=ctx.factor, tol=ctx.tol_eq)


def orthocomplement_U(ctx: DualityContext, k1: RealSubspace, tol: float | None = None) -> dict:
    """Check U(K1)^perp = V(K1^perp) (+) V~ inside K (+) K."""
    tol = ctx.tol_eq if tol is None else tol
    lhs = orthocomplement(build_U(ctx, k1), within=ctx.kk(), tol=ctx.tol_eq)
    rhs = sum_closure(build_V(ctx, _orthogonal_in_factor(ctx, k1)), build_Vtilde(ctx))
    angle = max_principal_angle(lhs, rhs)
    return {
        "max_angle": angle,
        "dim_lhs": lhs.rank,
        "dim_rhs": rhs.rank,
        "dims_match": lhs.rank == rhs.rank,
        "tolerance": tol,
        "passed": bool(angle < tol and lhs.rank == rhs.rank),
    }


def orthocomplement_V(ctx: DualityContext, k2: RealSubspace, tol: float | None = None) -> dict:
    """Check V(K2)^perp = U(K2^perp) (+) U~ inside K (+) K."""
    tol = ctx.tol_eq if tol is None else tol
    lhs = orthocomplement(build_V(ctx, k2), within=ctx.kk(), tol=ctx.tol_eq)
    rhs = sum_closure(build_U(ctx, _orthogonal_in_factor(ctx, k2)), build_Utilde(ctx))
    angle = max_principal_angle(lhs, rhs)
    return {
        "max_angle": angle,
        "dim_lhs": lhs.rank,
        "dim_rhs": rhs.rank,
        "dims_match": lhs.rank == rhs.rank,
        "tolerance": tol,
        "passed": bool(angle < tol and lhs.rank == rhs.rank),
    }


def generic_position_report(ctx: DualityContext, k1: RealSubspace, k2: RealSubspace,
                            tol_angle: float = TOL_ANGLE) -> dict:
    """Relative positions of U(K1), V(K2) and their complements inside K (+) K.

    U ^ V is trivial unconditionally (even when K1 ^ K2 is not); U ^ V^perp is
    trivial iff K1 ^ K2^perp is, and symmetrically; the dimension of
    U^perp ^ V^perp is reported without any triviality assertion since generic
    position does not transfer through the doubling.
    """
    kk = ctx.kk()
    u = build_U(ctx, k1)
    v = build_V(ctx, k2)
    u_perp = orthocomplement(u, within=kk, tol=ctx.tol_eq)
    v_perp = orthocomplement(v, within=kk, tol=ctx.tol_eq)
    dims = {
        "dim_U_and_V": intersect(u, v, tol_angle).rank,
        "dim_U_and_Vperp": intersect(u, v_perp, tol_angle).rank,
        "dim_Uperp_and_V": intersect(u_perp, v, tol_angle).rank,
        "dim_Uperp_and_Vperp": intersect(u_perp, v_perp, tol_angle).rank,
    }
    k1_and_k2perp = intersect(k1, _orthogonal_in_factor(ctx, k2), tol_angle).rank
    k1perp_and_k2 = intersect(_orthogonal_in_factor(ctx, k1), k2, tol_angle).rank
    iff_forward = (dims["dim_U_and_Vperp"] == 0) == (k1_and_k2perp == 0)
    iff_backward = (dims["dim_Uperp_and_V"] == 0) == (k1perp_and_k2 == 0)
    return {
        **dims,
        "dim_K1_and_K2perp": k1_and_k2perp,
        "dim_K1perp_and_K2": k1perp_and_k2,
        "iff_criteria_match": bool(iff_forward and iff_backward),
        "passed": bool(dims["dim_U_and_V"] == 0 and iff_forward and iff_backward),
    }


def nongeneric_counterexample(ctx: DualityContext, k1: RealSubspace, k2: RealSubspace,
                              w: np.ndarray, tol: float | None = None) -> dict:
    """Residual distance of psi = Gamma s w (+) c w from U(K1) + V(K2).

    The witness w must lie in K but outside K1; the construction then forbids
    psi from the sum, certifying the failure of generic-position transfer.
    """
    tol = ctx.tol_eq if tol is None else tol
    w = np.asarray(w, dtype=float).ravel()
    if ctx.factor.distance(w) > ctx.tol_eq * max(1.0, float(np.linalg.norm(w))):
        raise SubspaceError("witness vector must lie in the factor K")
    dist_k1 = k1.distance(w) if k1.rank else float(np.linalg.norm(w))
    if dist_k1 <= ctx.tol_eq:
        raise SubspaceError("witness vector lies in K1; not a counterexample")
    s, c = ctx.thermal.sinh_weight, ctx.thermal.cosh_weight
    u = ctx.single.derealify(w)
    psi = ctx.doubled_vector(s * np.conj(u), c * u)
    span = sum_closure(build_U(ctx, k1), build_V(ctx, k2))
    residual = span.distance(psi) / float(np.linalg.norm(psi))
    return {
        "residual": float(residual),
        "witness_distance_to_K1": float(dist_k1),
        "tolerance": tol,
        "passed": bool(residual > tol),
    }


def reduce_to_generic_position(ctx: DualityContext, k1: RealSubspace, k2: RealSubspace,
                               tol_angle: float = TOL_ANGLE):
    """Reduction relative to UV = closure(U + V) that restores generic position.

    Returns (UV, U', V', U'^perp ^ UV, V'^perp ^ UV) and a report asserting
    that all pairwise intersections of the four subspaces are trivial (valid
    when K1, K2 are themselves in generic position inside K).
    """
    u = build_U(ctx, k1)
    v = build_V(ctx, k2)
    uv = sum_closure(u, v)
    u_rel = intersect(u, uv, tol_angle)
    v_rel = intersect(v, uv, tol_angle)
    u_rel_perp = orthocomplement(u_rel, within=uv, tol=ctx.tol_eq) if u_rel.rank else uv
    v_rel_perp = orthocomplement(v_rel, within=uv, tol=ctx.tol_eq) if v_rel.rank else uv
    quadruple = {
        "U'": u_rel, "V'": v_rel,
        "U'perp_in_UV": u_rel_perp, "V'perp_in_UV": v_rel_perp,
    }
    names = list(quadruple)
    inter_dims = {}
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            d = intersect(quadruple[names[i]], quadruple[names[j]], tol_angle).rank
            inter_dims[f"{names[i]} ^ {names[j]}"] = d
    report = {
        "dim_UV": uv.rank,
        "intersection_dims": inter_dims,
        "all_trivial": bool(all(d == 0 for d in inter_dims.values())),
        "U_recovered": bool(u_rel.rank == u.rank),
        "V_recovered": bool(v_rel.rank == v.rank),
    }
    return uv, u_rel, v_rel, u_rel_perp, v_rel_perp, report


def symplectic_complement(ctx: DualityContext, s: RealSubspace) -> RealSubspace:
    """Full-space symplectic complement J (S^perp) of a doubled subspace."""
    j = ctx.doubled.complex_structure
    comp = orthocomplement(s)
    return apply_operator(RealLinearOperator(j), comp)


def symplectic_orthogonality_residual(ctx: DualityContext, s: RealSubspace,
                                      t: RealSubspace) -> float:
    """max |sigma(x, y)| over frame pairs; zero iff t is sigma-orthogonal to s."""
    if s.rank == 0 or t.rank == 0:
        return 0.0
    j = ctx.doubled.complex_structure
    return float(np.max(np.abs(2.0 * s.frame.T @ (j @ t.frame))))


def global_thermal_subspace(ctx: DualityContext) -> RealSubspace:
    """H^beta = U(K) (+) J V(K): the image of the doubling map over all of H."""
    j = RealLinearOperator(ctx.doubled.complex_structure)
    return sum_closure(build_U(ctx, ctx.factor),
                       apply_operator(j, build_V(ctx, ctx.factor)))


def predicted_modular_blocks(ctx: DualityContext) -> tuple[np.ndarray, np.ndarray]:
    """Predicted (j, delta^{1/2}) realified blocks: antidiag conjugations and
    diag(e^{beta h / 2}, e^{-beta h / 2})."""
    n = ctx.thermal.n_modes
    eye = np.eye(n, dtype=complex)
    zero = np.zeros((n, n), dtype=complex)
    j_pred = ctx.doubled.realify_antilinear(np.block([[zero, eye], [eye, zero]]))
    half = 0.5 * ctx.thermal.beta * ctx.thermal.ground.dispersion
    delta_diag = np.concatenate([np.exp(half), np.exp(-half)]).astype(complex)
    delta_pred = ctx.doubled.realify_linear(np.diag(delta_diag))
    return j_pred, delta_pred


@dataclass(frozen=True)
class ModularData:
    """One-particle Tomita data of the global thermal standard subspace."""

    tomita_s: np.ndarray
    j: np.ndarray
    delta_sqrt: np.ndarray


def modular_data(ctx: DualityContext) -> ModularData:
    """Construct the Tomita operator from h + Jk -> h - Jk and polar-decompose it.

    Standardness of H^beta (trivial intersection with its J-image, full joint
    span) is a precondition; rank deficiency raises with a conditioning report.
    """
    h = global_thermal_subspace(ctx)
    j = ctx.doubled.complex_structure
    jh_frame = j @ h.frame
    x = np.hstack([h.frame, jh_frame])
    dim = ctx.doubled.real_dim
    if x.shape[1] != dim:
        raise SubspaceError(f"thermal subspace has rank {h.rank}, expected {dim // 2}")
    sv = np.linalg.svd(x, compute_uv=False)
    if sv[-1] < TOL_RANK * sv[0]:
        raise SubspaceError(
            "standardness failure: H + JH is rank deficient "
            f"(cond = {sv[0] / max(sv[-1], 1e-300):.3e})")
    overlap = intersect(h, apply_operator(RealLinearOperator(j), h), TOL_ANGLE).rank
    if overlap:
        raise SubspaceError(f"standardness failure: dim(H ^ JH) = {overlap}")
    s_mat = np.hstack([h.frame, -jh_frame]) @ np.linalg.inv(x)
    j_mat, delta_sqrt = scipy.linalg.polar(s_mat, side="right")
    cond = np.linalg.cond(delta_sqrt)
    if cond > 1e8:
        warnings.warn(f"near-degenerate modular operator: cond(delta^(1/2)) = "
                      f"{cond:.3e}; results may lose accuracy", RuntimeWarning,
                      stacklevel=2)
    return ModularData(tomita_s=s_mat, j=j_mat, delta_sqrt=delta_sqrt)


def modular_data_report(ctx: DualityContext, tol: float = TOL_EQ) -> dict:
    """Compare computed modular data against the predicted block forms."""
    data = modular_data(ctx)
    j_pred, delta_pred = predicted_modular_blocks(ctx)
    jmat, dmat = data.j, data.delta_sqrt
    dim = jmat.shape[0]
    beta_mat = ctx.doubled.complex_structure

    rel_delta = np.linalg.norm(dmat - delta_pred, 2) / np.linalg.norm(delta_pred, 2)
    rel_j = np.linalg.norm(jmat - j_pred, 2) / np.linalg.norm(j_pred, 2)
    involution = np.linalg.norm(jmat @ jmat - np.eye(dim), 2)
    anticommute = np.linalg.norm(jmat @ beta_mat + beta_mat @ jmat, 2)
    commute = np.linalg.norm(dmat @ beta_mat - beta_mat @ dmat, 2)

    h = global_thermal_subspace(ctx)
    fixed_resid = float(np.linalg.norm(data.tomita_s @ h.frame - h.frame, 2))
    jh = apply_operator(RealLinearOperator(jmat), h)
    target = sum_closure(build_Utilde(ctx),
                         apply_operator(RealLinearOperator(beta_mat), build_Vtilde(ctx)))
    reflected_angle = max_principal_angle(jh, target)

    passed = bool(rel_delta < tol and rel_j < tol and involution < tol
                  and anticommute < tol and commute < tol
                  and fixed_resid < tol and reflected_angle < tol)
    return {
        "rel_delta_error": float(rel_delta),
        "rel_j_error": float(rel_j),
        "j_involution_residual": float(involution),
        "j_anticommutator_residual": float(anticommute),
        "delta_commutator_residual": float(commute),
        "tomita_fixed_point_residual": fixed_resid,
        "reflected_subspace_angle": float(reflected_angle),
        "delta_condition_number": float(np.linalg.cond(dmat)),
        "tolerance": tol,
        "passed": passed,
    }
