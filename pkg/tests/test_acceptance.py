"""Acceptance battery: every gate criterion at its stated tolerance.

Each test prints one PASS/FAIL line (visible with ``pytest -s`` or in failure
output), so the battery doubles as a human-readable verification protocol.
Total runtime stays well under the five-minute desk budget.
"""

import math

import numpy as np

from mdlab import minkowski, quasifree
from mdlab.checks import CHECKS, run_check
from mdlab.config import LabConfig
from mdlab.duality import (
    DualityContext,
    generic_position_report,
    modular_data_report,
    nongeneric_counterexample,
    operator_A_report,
    orthocomplement_U,
    orthocomplement_V,
    real_axis_factor,
)
from mdlab.minkowski import (
    FieldModel,
    bump_test_function,
    haag_duality_check,
    interval_region,
    propagator_identities_report,
    source_roundtrip_report,
    standardness_report,
)
from mdlab.quasifree import GroundStructure, build_thermal
from mdlab.subspaces import RealSubspace, orthonormalize


def _verdict(number: int, label: str, ok: bool, detail: str = "") -> bool:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion-{number:02d} {label} {detail}".rstrip())
    return ok


def lattice(n, n_times=48, t_extent=12.0):
    return FieldModel(n_points=n, length=float(n), mass=1.0,
                      n_times=n_times, t_extent=t_extent)


def random_in(factor: RealSubspace, rank: int, rng) -> RealSubspace:
    coeff = orthonormalize(rng.standard_normal((factor.rank, rank)))
    return RealSubspace(factor.frame @ coeff.frame)


def test_criterion_01_purification_identities():
    model = lattice(64)
    ground = model.ground_structure()
    rng = np.random.default_rng(101)
    worst_weights, worst_norm = 0.0, 0.0
    for beta in (0.1, 1.0, 10.0):
        thermal = build_thermal(ground, beta)
        rep = quasifree.weight_identity_report(thermal, tol=1e-12)
        worst_weights = max(worst_weights, rep["max_hyperbolic_residual"],
                            rep["max_ratio_residual"])
        for _ in range(10):
            u = rng.standard_normal(64) + 1j * rng.standard_normal(64)
            worst_norm = max(worst_norm,
                             quasifree.k_beta_norm_report(thermal, u)["deviation"])
    ok = worst_weights < 1e-12 and worst_norm < 1e-10
    assert _verdict(1, "purification weight and norm identities", ok,
                    f"weights={worst_weights:.2e} norms={worst_norm:.2e}")


def test_criterion_02_symplectic_preservation():
    model = lattice(64)
    thermal = build_thermal(model.ground_structure(), 1.0)
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(100):
        u = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        v = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        worst = max(worst,
                    quasifree.verify_symplectic_preservation(thermal, u, v)["deviation"])
    ok = worst < 1e-10
    assert _verdict(2, "symplectic form preserved by the doubling map", ok,
                    f"max deviation={worst:.2e}")


def test_criterion_03_one_particle_kms_boundary():
    model = lattice(32)
    thermal = build_thermal(model.ground_structure(), 1.0)
    rng = np.random.default_rng(103)
    t_grid = np.linspace(-2.0, 2.0, 17)
    worst, literal = 0.0, 0.0
    for _ in range(20):
        u = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        v = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        rep = quasifree.verify_one_particle_kms(thermal, u, v, t_grid)
        worst = max(worst, rep["max_boundary_deviation"])
        literal = max(literal, rep["literal_form_residual"])
    ok = worst < 1e-9
    assert _verdict(3, "one-particle KMS boundary F(t+i beta) = G(t)", ok,
                    f"deviation={worst:.2e}; ungated literal-form residual={literal:.2e}")


def test_criterion_04_orthocomplement_identities():
    rng = np.random.default_rng(104)
    worst, dims_ok, bounds_ok = 0.0, True, True
    for _ in range(50):
        n = int(rng.integers(4, 17))
        beta = float(rng.uniform(0.3, 3.0))
        omega = np.sort(rng.uniform(0.5, 3.0, n))
        thermal = build_thermal(GroundStructure(omega), beta)
        ctx = DualityContext(thermal, real_axis_factor(n))
        k1 = random_in(ctx.factor, int(rng.integers(1, n)), rng)
        k2 = random_in(ctx.factor, int(rng.integers(1, n)), rng)
        rep_u = orthocomplement_U(ctx, k1, tol=1e-8)
        rep_v = orthocomplement_V(ctx, k2, tol=1e-8)
        worst = max(worst, rep_u["max_angle"], rep_v["max_angle"])
        dims_ok = dims_ok and rep_u["dims_match"] and rep_v["dims_match"]
        bounds_ok = bounds_ok and operator_A_report(ctx)["passed"]
    frozen = 2.0 / math.sqrt(1.0 - math.exp(-1.0))
    unit = DualityContext(build_thermal(GroundStructure(np.array([1.0])), 1.0),
                          real_axis_factor(1))
    bound_rep = operator_A_report(unit)
    bounds_ok = bounds_ok and abs(bound_rep["norm_bound"] - frozen) < 1e-12
    ok = worst < 1e-8 and dims_ok and bounds_ok
    assert _verdict(4, "orthocomplement identities and operator norm bound", ok,
                    f"max angle={worst:.2e} bound(beta=m=1)={bound_rep['norm_bound']:.9f}")


def test_criterion_05_generic_position_bullets():
    rng = np.random.default_rng(105)
    overlap_ok, iff_ok = True, True
    for _ in range(50):
        n = int(rng.integers(4, 13))
        beta = float(rng.uniform(0.3, 3.0))
        thermal = build_thermal(GroundStructure(np.sort(rng.uniform(0.5, 3.0, n))), beta)
        ctx = DualityContext(thermal, real_axis_factor(n))
        base = ctx.factor.frame
        k1 = RealSubspace(base[:, :2])          # shares base[:, 0]
        k2 = RealSubspace(np.hstack([base[:, :1], base[:, 2:3]]))
        rep = generic_position_report(ctx, k1, k2)
        overlap_ok = overlap_ok and rep["dim_U_and_V"] == 0
        d1 = int(rng.integers(1, n - 1))
        d2 = int(rng.integers(1, n - d1))
        rep2 = generic_position_report(ctx, random_in(ctx.factor, d1, rng),
                                       random_in(ctx.factor, d2, rng))
        iff_ok = iff_ok and rep2["iff_criteria_match"]

    thermal = build_thermal(GroundStructure(np.sort(rng.uniform(0.5, 3.0, 8))), 1.0)
    ctx = DualityContext(thermal, real_axis_factor(8))
    k1 = random_in(ctx.factor, 2, rng)
    k2 = random_in(ctx.factor, 2, rng)
    w = ctx.factor.frame @ rng.standard_normal(8)
    residual = nongeneric_counterexample(ctx, k1, k2, w)["residual"]
    ok = overlap_ok and iff_ok and residual > 1e-6
    assert _verdict(5, "generic-position bullets and counterexample witness", ok,
                    f"witness residual={residual:.2e}")


def test_criterion_06_modular_data():
    model = lattice(16)
    ctx = model.duality_context(model.thermal(1.0))
    rep = modular_data_report(ctx, tol=1e-8)
    ok = (rep["passed"] and rep["rel_delta_error"] < 1e-8
          and rep["rel_j_error"] < 1e-8 and rep["reflected_subspace_angle"] < 1e-8)
    assert _verdict(6, "modular data matches predicted blocks; j maps H to the tilde pair",
                    ok, f"delta={rep['rel_delta_error']:.2e} j={rep['rel_j_error']:.2e} "
                        f"reflection={rep['reflected_subspace_angle']:.2e}")


def test_criterion_07_araki_duality_grid():
    worst, dims_ok = 0.0, True
    for n in (32, 64, 128, 256):
        model = lattice(n)
        for width in (n // 8, n // 4, n // 2):
            mask = np.zeros(n, dtype=bool)
            mask[:width] = True
            rep = minkowski.araki_duality_check(model, mask)
            worst = max(worst, rep["max_angle_R"], rep["max_angle_I"])
            dims_ok = dims_ok and rep["dims_match"]
    ok = worst < 1e-8 and dims_ok
    assert _verdict(7, "localized orthogonality duality on the grid", ok,
                    f"max angle={worst:.2e} over N in (32..256) x 3 widths")


def test_criterion_08_generalized_haag_duality():
    worst, ok_all = 0.0, True
    for n in (16, 32, 64):
        model = lattice(n)
        region = interval_region(model, n / 2.0, n / 4.0)
        for beta in (0.5, 1.0, 2.0):
            rep = haag_duality_check(model, model.thermal(beta), region, tol=1e-8)
            worst = max(worst, rep["angle_U_identity"], rep["angle_V_identity"],
                        rep["angle_assembled_duality"])
            ok_all = ok_all and rep["passed"]
    ok = ok_all and worst < 1e-8
    assert _verdict(8, "generalized duality at one-particle level", ok,
                    f"max angle={worst:.2e} over N in (16,32,64) x beta in (0.5,1,2)")


def test_criterion_09_propagator_identities():
    model = lattice(32)
    rng = np.random.default_rng(109)
    span_t = model.t_extent / 2.0 - 3.5 * model.tau
    worst_id, worst_mode = 0.0, 0.0
    for _ in range(3):
        h = bump_test_function(
            model, "compact",
            t_center=float(rng.uniform(-0.2, 0.2) * span_t),
            t_width=float(rng.uniform(0.35, 0.55) * span_t),
            x_center=rng.uniform(0, model.length, 1),
            x_width=float(rng.uniform(0.1, 0.2) * model.length))
        rep = propagator_identities_report(model, h)
        worst_id = max(worst_id, rep["initial_field_identity"],
                       rep["initial_momentum_identity"])
        worst_mode = max(worst_mode, rep["E_after_P_residual"],
                         rep["P_after_E_residual"])
    x = model.positions[:, 0]
    rt = source_roundtrip_report(
        model,
        np.exp(-0.5 * ((x - 10.0) / 3.0) ** 2),
        np.exp(-0.5 * ((x - 22.0) / 2.5) ** 2))
    ok = (worst_id < 1e-8 and worst_mode < 1e-9
          and rt["field_roundtrip_residual"] < 1e-8
          and rt["momentum_roundtrip_residual"] < 1e-8
          and rt["cutoff_independence"] < 1e-8)
    assert _verdict(9, "initial-data identities, mode-space annihilation, round trip",
                    ok, f"identities={worst_id:.2e} modes={worst_mode:.2e} "
                        f"roundtrip={max(rt['field_roundtrip_residual'], rt['momentum_roundtrip_residual']):.2e}")


def test_criterion_10_standardness_surrogate():
    ok = True
    details = []
    for n in (16, 32):
        model = lattice(n)
        thermal = model.thermal(1.0)
        rep_g = standardness_report(model, thermal, None)
        ok = ok and rep_g["separating_intersection_dim"] == 0 \
            and rep_g["complex_span_rank"] == 4 * n
        region = interval_region(model, n / 2.0, n / 4.0)
        rep_l = standardness_report(model, thermal, region)
        ok = ok and rep_l["separating_intersection_dim"] == 0 \
            and rep_l["cyclicity_deficit"] == 4 * (n - region.n_sites)
        details.append(f"N={n}: deficit={rep_l['cyclicity_deficit']}")
    assert _verdict(10, "standardness: global full span, local exact deficit", ok,
                    "; ".join(details))


def test_criterion_11_weyl_layer_and_determinism():
    cfg = LabConfig(n_points=16, length=16.0, base_center=8.0, base_halfwidth=4.0)
    relations = run_check("weyl-relations", cfg)
    kms = run_check("weyl-kms", cfg)
    first = {name: run_check(name, cfg).metrics for name in CHECKS}
    second = {name: run_check(name, cfg).metrics for name in CHECKS}
    deterministic = first == second
    ok = relations.passed and kms.passed and deterministic
    assert _verdict(11, "Weyl relations, conversion, Gaussian KMS, determinism", ok,
                    f"relations={relations.metrics['worst']:.2e} "
                    f"kms={kms.metrics['worst']:.2e} deterministic={deterministic}")
