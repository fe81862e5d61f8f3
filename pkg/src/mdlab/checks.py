"""Named verification checks, dispatching into the library modules.

Every check consumes a LabConfig plus a named seeded generator and returns a
metrics dict containing at least ``worst`` (headline residual), ``tolerance``
and ``passed``.  Random instances derive only from the per-check generator,
so reports are reproducible bit-for-bit under a fixed seed.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from itertools import product

import numpy as np

from . import duality, minkowski, quasifree, weyl
from .config import LabConfig
from .reporting import CheckReport
from .subspaces import (
    RealLinearOperator,
    RealSubspace,
    RealifiedSpace,
    check_bounded_inverse_identity,
    intersect,
    max_principal_angle,
    orthocomplement,
    orthonormalize,
    sum_closure,
)


class CheckError(ValueError):
    pass


def _random_subspace(rng, ambient: int, rank: int) -> RealSubspace:
    return orthonormalize(rng.standard_normal((ambient, rank)))


def _random_factor_subspace(rng, factor: RealSubspace, rank: int) -> RealSubspace:
    coeff = orthonormalize(rng.standard_normal((factor.rank, rank)))
    return RealSubspace(factor.frame @ coeff.frame)


def _random_context(rng, n: int, beta: float) -> duality.DualityContext:
    omega = np.sort(rng.uniform(0.5, 3.0, n))
    thermal = quasifree.build_thermal(quasifree.GroundStructure(omega), beta)
    return duality.DualityContext(thermal, duality.real_axis_factor(n))


def check_subspace_axioms(cfg: LabConfig, rng) -> dict:
    n = 8
    space = RealifiedSpace(n)
    j = space.complex_structure
    square_resid = float(np.linalg.norm(j @ j + np.eye(2 * n), 2))
    antisym_resid = float(np.linalg.norm(j + j.T, 2))

    sigma_dev = 0.0
    for _ in range(100):
        x = rng.standard_normal(2 * n)
        y = rng.standard_normal(2 * n)
        sigma_dev = max(sigma_dev, abs(space.sigma(x, y)
                                       - 2.0 * space.complex_inner(x, y).imag))

    proj_resid, demorgan = 0.0, 0.0
    for _ in range(5):
        s1 = _random_subspace(rng, 2 * n, int(rng.integers(1, n)))
        s2 = _random_subspace(rng, 2 * n, int(rng.integers(1, n)))
        p = s1.projector() + orthocomplement(s1).projector()
        proj_resid = max(proj_resid, float(np.linalg.norm(p - np.eye(2 * n), 2)))
        lhs = orthocomplement(sum_closure(s1, s2))
        rhs = intersect(orthocomplement(s1), orthocomplement(s2), 1e-6)
        demorgan = max(demorgan, max_principal_angle(lhs, rhs)
                       if lhs.rank == rhs.rank else np.pi / 2)

    worst = max(square_resid, antisym_resid, sigma_dev, proj_resid, demorgan)
    return {
        "complex_structure_square": square_resid,
        "complex_structure_antisymmetry": antisym_resid,
        "sigma_vs_imaginary_part": sigma_dev,
        "projector_completeness": proj_resid,
        "de_morgan_angle": demorgan,
        "worst": worst,
        "tolerance": 1e-9,
        "passed": bool(square_resid < 1e-12 and antisym_resid < 1e-12
                       and sigma_dev < 1e-12 and proj_resid < 1e-10
                       and demorgan < 1e-9),
    }


def check_bounded_inverse(cfg: LabConfig, rng) -> dict:
    worst, worst_cond = 0.0, 0.0
    for _ in range(50):
        while True:
            a = RealLinearOperator(rng.standard_normal((8, 8)))
            if a.cond() < 1e3:
                break
        v = _random_subspace(rng, 8, 3)
        rep = check_bounded_inverse_identity(a, v, tol=1e-9)
        worst = max(worst, rep["max_angle"])
        worst_cond = max(worst_cond, rep["cond_A"])
    return {"worst": worst, "worst_cond": worst_cond, "n_instances": 50,
            "tolerance": 1e-9, "passed": bool(worst < 1e-9)}


def check_purification(cfg: LabConfig, rng) -> dict:
    model = cfg.field_model()
    ground = model.ground_structure()
    weight_worst, norm_worst, sympl_worst, linear_worst, gamma_worst = 0, 0, 0, 0, 0
    for beta in (0.1, 1.0, 10.0):
        thermal = quasifree.build_thermal(ground, beta)
        weight_worst = max(weight_worst,
                           quasifree.weight_identity_report(thermal)["max_hyperbolic_residual"],
                           quasifree.weight_identity_report(thermal)["max_ratio_residual"])
        for _ in range(5):
            u = rng.standard_normal(model.size) + 1j * rng.standard_normal(model.size)
            norm_worst = max(norm_worst,
                             quasifree.k_beta_norm_report(thermal, u)["deviation"])
            v = rng.standard_normal(model.size) + 1j * rng.standard_normal(model.size)
            sympl_worst = max(sympl_worst,
                              quasifree.verify_symplectic_preservation(thermal, u, v)["deviation"])
            a, b = rng.standard_normal(2)
            lin = thermal.k_beta(a * u + b * v) - a * thermal.k_beta(u) - b * thermal.k_beta(v)
            scale = max(np.linalg.norm(thermal.k_beta(u)), 1.0)
            linear_worst = max(linear_worst, float(np.linalg.norm(lin)) / scale)
            gamma = thermal.k_beta(u)[: model.size] - np.conj(thermal.sinh_weight * u)
            gamma_worst = max(gamma_worst, float(np.max(np.abs(gamma))))
    worst = max(weight_worst, norm_worst, sympl_worst, linear_worst, gamma_worst)
    return {
        "weight_identity": weight_worst,
        "coth_norm_deviation": norm_worst,
        "symplectic_preservation": sympl_worst,
        "real_linearity": linear_worst,
        "conjugation_compatibility": gamma_worst,
        "worst": worst,
        "tolerance": 1e-10,
        "passed": bool(weight_worst < 1e-12 and norm_worst < 1e-10
                       and sympl_worst < 1e-10 and linear_worst < 1e-12
                       and gamma_worst < 1e-12),
    }


def check_one_particle_kms(cfg: LabConfig, rng) -> dict:
    model = cfg.field_model()
    thermal = model.thermal(cfg.beta)
    t_grid = np.linspace(-2.0, 2.0, 17)
    worst, literal = 0.0, 0.0
    for _ in range(20):
        u = rng.standard_normal(model.size) + 1j * rng.standard_normal(model.size)
        v = rng.standard_normal(model.size) + 1j * rng.standard_normal(model.size)
        rep = quasifree.verify_one_particle_kms(thermal, u, v, t_grid, tol=1e-9)
        worst = max(worst, rep["max_boundary_deviation"])
        literal = max(literal, rep["literal_form_residual"])
    return {"worst": worst, "literal_form_residual": literal, "n_pairs": 20,
            "tolerance": 1e-9, "passed": bool(worst < 1e-9)}


def check_prop_orthogonals(cfg: LabConfig, rng) -> dict:
    worst_angle, norm_margin_ok = 0.0, True
    dims_ok = True
    for _ in range(50):
        n = int(rng.integers(4, 17))
        beta = float(rng.uniform(0.3, 3.0))
        ctx = _random_context(rng, n, beta)
        k1 = _random_factor_subspace(rng, ctx.factor, int(rng.integers(1, n)))
        k2 = _random_factor_subspace(rng, ctx.factor, int(rng.integers(1, n)))
        rep_u = duality.orthocomplement_U(ctx, k1, tol=cfg.tol_eq)
        rep_v = duality.orthocomplement_V(ctx, k2, tol=cfg.tol_eq)
        worst_angle = max(worst_angle, rep_u["max_angle"], rep_v["max_angle"])
        dims_ok = dims_ok and rep_u["dims_match"] and rep_v["dims_match"]
        norm_rep = duality.operator_A_report(ctx)
        norm_margin_ok = norm_margin_ok and norm_rep["passed"]
    return {"worst": worst_angle, "dims_match": bool(dims_ok),
            "norm_bound_respected": bool(norm_margin_ok), "n_instances": 50,
            "tolerance": cfg.tol_eq,
            "passed": bool(worst_angle < cfg.tol_eq and dims_ok and norm_margin_ok)}


def check_generic_position(cfg: LabConfig, rng) -> dict:
    overlap_ok, iff_ok, counting_ok = True, True, True
    worst_overlap_dim = 0
    for _ in range(50):
        n = int(rng.integers(4, 13))
        beta = float(rng.uniform(0.3, 3.0))
        ctx = _random_context(rng, n, beta)
        base = ctx.factor.frame
        shared = base[:, :1]
        k1 = RealSubspace(np.hstack([shared, base[:, 1:2]]))
        k2 = RealSubspace(np.hstack([shared, base[:, 2:3]]))
        rep = duality.generic_position_report(ctx, k1, k2)
        worst_overlap_dim = max(worst_overlap_dim, rep["dim_U_and_V"])
        overlap_ok = overlap_ok and rep["dim_U_and_V"] == 0
        iff_ok = iff_ok and rep["iff_criteria_match"]
        if 1 + 2 < n:  # K1 + K2 strictly inside K: no generic-position transfer
            counting_ok = counting_ok and rep["dim_Uperp_and_Vperp"] > 0
    return {"max_UV_overlap": worst_overlap_dim, "iff_criteria": bool(iff_ok),
            "third_bullet_nontrivial": bool(counting_ok), "n_instances": 50,
            "worst": float(worst_overlap_dim), "tolerance": 0.5,
            "passed": bool(overlap_ok and iff_ok and counting_ok)}


def check_nongeneric_counterexample(cfg: LabConfig, rng) -> dict:
    ctx = _random_context(rng, 8, cfg.beta)
    k1 = _random_factor_subspace(rng, ctx.factor, 2)
    k2 = _random_factor_subspace(rng, ctx.factor, 2)
    while True:
        w = ctx.factor.frame @ rng.standard_normal(ctx.factor.rank)
        if k1.distance(w) > 0.1 * np.linalg.norm(w):
            break
    rep = duality.nongeneric_counterexample(ctx, k1, k2, w, tol=1e-6)
    return {"worst": rep["residual"], "residual": rep["residual"],
            "tolerance": 1e-6, "passed": rep["passed"]}


def check_modular_data(cfg: LabConfig, rng) -> dict:
    model = cfg.field_model()
    ctx = model.duality_context(model.thermal(cfg.beta))
    rep = duality.modular_data_report(ctx, tol=cfg.tol_eq)
    worst = max(rep["rel_delta_error"], rep["rel_j_error"],
                rep["reflected_subspace_angle"], rep["tomita_fixed_point_residual"])
    rep["worst"] = float(worst)
    return rep


def check_propagator_identities(cfg: LabConfig, rng) -> dict:
    model = cfg.field_model()
    span_t = model.t_extent / 2.0 - 3.5 * model.tau
    worst = 0.0
    reports = []
    for _ in range(3):
        h = minkowski.bump_test_function(
            model, "compact",
            t_center=float(rng.uniform(-0.2, 0.2) * span_t),
            t_width=float(rng.uniform(0.35, 0.55) * span_t),
            x_center=rng.uniform(0, model.length, model.spatial_dim),
            x_width=float(rng.uniform(0.1, 0.2) * model.length),
            order=1.0, amplitude=float(rng.uniform(0.5, 2.0)))
        reports.append(minkowski.propagator_identities_report(model, h))
    ident = max(max(r["initial_field_identity"], r["initial_momentum_identity"])
                for r in reports)
    modes = max(max(r["E_after_P_residual"], r["P_after_E_residual"]) for r in reports)

    x0 = model.positions[:, 0]
    f = np.exp(-0.5 * ((x0 - model.length / 3) / (model.length / 10)) ** 2)
    g = np.exp(-0.5 * ((x0 - 2 * model.length / 3) / (model.length / 12)) ** 2)
    rt = minkowski.source_roundtrip_report(model, f, g)

    f_bump = minkowski.bump_test_function(model, "compact", t_center=-0.3 * span_t,
                                          t_width=0.4 * span_t,
                                          x_center=0.3 * model.length,
                                          x_width=0.15 * model.length)
    g_bump = minkowski.bump_test_function(model, "compact", t_center=0.2 * span_t,
                                          t_width=0.4 * span_t,
                                          x_center=0.6 * model.length,
                                          x_width=0.15 * model.length)
    sigma_rep = minkowski.sigma_consistency_report(model, f_bump, g_bump)

    worst = max(ident, modes, rt["field_roundtrip_residual"],
                rt["momentum_roundtrip_residual"], rt["cutoff_independence"])
    return {
        "initial_data_identities": float(ident),
        "mode_space_annihilation": float(modes),
        "roundtrip_field": rt["field_roundtrip_residual"],
        "roundtrip_momentum": rt["momentum_roundtrip_residual"],
        "cutoff_independence": rt["cutoff_independence"],
        "sigma_consistency": sigma_rep["relative_deviation"],
        "worst": float(worst),
        "tolerance": 1e-8,
        "passed": bool(ident < 1e-8 and modes < 1e-9
                       and rt["passed"] and sigma_rep["passed"]),
    }


def check_araki_duality(cfg: LabConfig, rng) -> dict:
    model = cfg.field_model()
    worst, dims_ok = 0.0, True
    widths = [model.length / 8, model.length / 4, 3 * model.length / 8]
    for hw in widths:
        region = minkowski.interval_region(model, cfg.base_center, hw)
        rep = minkowski.araki_duality_check(model, region.base_mask, tol=cfg.tol_eq)
        worst = max(worst, rep["max_angle_R"], rep["max_angle_I"])
        dims_ok = dims_ok and rep["dims_match"]
    return {"worst": worst, "dims_match": bool(dims_ok), "n_widths": len(widths),
            "tolerance": cfg.tol_eq, "passed": bool(worst < cfg.tol_eq and dims_ok)}


def check_haag_duality(cfg: LabConfig, rng) -> dict:
    model = cfg.field_model()
    thermal = model.thermal(cfg.beta)
    region = minkowski.interval_region(model, cfg.base_center, cfg.base_halfwidth)
    rep = minkowski.haag_duality_check(model, thermal, region, tol=cfg.tol_eq)
    rep["worst"] = float(max(rep["angle_U_identity"], rep["angle_V_identity"],
                             rep["angle_assembled_duality"]))
    return rep


def check_standardness(cfg: LabConfig, rng) -> dict:
    model = cfg.field_model()
    thermal = model.thermal(cfg.beta)
    region = minkowski.interval_region(model, cfg.base_center, cfg.base_halfwidth)
    rep_global = minkowski.standardness_report(model, thermal, None)
    rep_local = minkowski.standardness_report(model, thermal, region)
    passed = rep_global["passed"] and rep_local["passed"] \
        and rep_global["cyclicity_deficit"] == 0
    return {
        "global_separating_dim": rep_global["separating_intersection_dim"],
        "global_span_rank": rep_global["complex_span_rank"],
        "local_separating_dim": rep_local["separating_intersection_dim"],
        "local_deficit": rep_local["cyclicity_deficit"],
        "local_expected_deficit": rep_local["expected_deficit"],
        "worst": float(rep_global["separating_intersection_dim"]
                       + rep_local["separating_intersection_dim"]),
        "tolerance": 0.5,
        "passed": bool(passed),
    }


def check_weyl_relations(cfg: LabConfig, rng) -> dict:
    n = 6
    space = weyl.RealifiedWeylSpace(RealifiedSpace(n))
    factor = duality.real_axis_factor(n)
    j = space.space.complex_structure
    worst = 0.0
    for _ in range(20):
        f = rng.standard_normal(2 * n)
        g = rng.standard_normal(2 * n)
        h = rng.standard_normal(2 * n)
        wf, wg, wh = (weyl.WeylWord(1.0 + 0j, x) for x in (f, g, h))
        unit = weyl.weyl_multiply(space, wf, weyl.WeylWord.identity(2 * n))
        worst = max(worst, abs(unit.phase - 1.0),
                    float(np.max(np.abs(unit.label - f))))
        inv = weyl.weyl_multiply(space, wf, weyl.weyl_star(wf))
        worst = max(worst, abs(inv.phase - 1.0), float(np.max(np.abs(inv.label))))
        left = weyl.weyl_multiply(space, weyl.weyl_multiply(space, wf, wg), wh)
        right = weyl.weyl_multiply(space, wf, weyl.weyl_multiply(space, wg, wh))
        worst = max(worst, abs(left.phase - right.phase))
        star_prod = weyl.weyl_star(weyl.weyl_multiply(space, wf, wg))
        prod_star = weyl.weyl_multiply(space, weyl.weyl_star(wg), weyl.weyl_star(wf))
        worst = max(worst, abs(star_prod.phase - prod_star.phase))

        word = weyl.WeylWord(np.exp(1j * rng.uniform(0, 2 * np.pi)), f)
        back = weyl.weyl_from_segal(space, weyl.segal_from_weyl(space, factor, word))
        worst = max(worst, abs(back.phase - word.phase),
                    float(np.max(np.abs(back.label - word.label))))

        v = [factor.frame @ rng.standard_normal(n) for _ in range(4)]
        lhs = weyl.WeylWord.identity(2 * n)
        for v1, v2 in ((v[0], v[1]), (v[2], v[3])):
            lhs = weyl.weyl_multiply(
                space, lhs, weyl.weyl_from_segal(space, weyl.SegalWord(1.0 + 0j, v1, v2)))
        rhs = weyl.weyl_from_segal(
            space, weyl.SegalWord(1.0 + 0j, v[0] + v[2], v[1] + v[3]))
        exchange = np.exp(-1j * space.sigma(j @ v[1], v[2]))
        worst = max(worst, abs(lhs.phase - rhs.phase * exchange))
    return {"worst": float(worst), "n_instances": 20, "tolerance": 1e-12,
            "passed": bool(worst < 1e-12)}


def check_weyl_kms(cfg: LabConfig, rng) -> dict:
    model = cfg.field_model()
    thermal = model.thermal(cfg.beta)
    wspace = weyl.ModelWeylSpace(model)
    span_t = model.t_extent / 2.0 - 3.5 * model.tau
    t_grid = np.linspace(-3.0, 3.0, 13)
    worst, opposite = 0.0, 0.0
    for _ in range(4):
        bumps = []
        for _ in range(2):
            bumps.append(minkowski.bump_test_function(
                model, "compact",
                t_center=float(rng.uniform(-0.2, 0.2) * span_t),
                t_width=float(rng.uniform(0.35, 0.55) * span_t),
                x_center=rng.uniform(0, model.length, model.spatial_dim),
                x_width=float(rng.uniform(0.1, 0.2) * model.length),
                amplitude=float(rng.uniform(0.3, 1.0))))
        wf = wspace.word_from_test_function(bumps[0])
        wg = wspace.word_from_test_function(bumps[1])
        rep = weyl.kms_boundary_check(wspace, thermal, wf, wg, t_grid, tol=1e-8)
        worst = max(worst, rep["max_boundary_deviation"])
        opposite = max(opposite, rep["opposite_orientation_residual"])
    return {"worst": float(worst), "opposite_orientation_residual": float(opposite),
            "n_pairs": 4, "tolerance": 1e-8, "passed": bool(worst < 1e-8)}


CHECKS = {
    "subspace-axioms": check_subspace_axioms,
    "bounded-inverse": check_bounded_inverse,
    "purification": check_purification,
    "one-particle-kms": check_one_particle_kms,
    "prop-orthogonals": check_prop_orthogonals,
    "generic-position": check_generic_position,
    "nongeneric-counterexample": check_nongeneric_counterexample,
    "modular-data": check_modular_data,
    "propagator-identities": check_propagator_identities,
    "araki-duality": check_araki_duality,
    "haag-duality": check_haag_duality,
    "standardness": check_standardness,
    "weyl-relations": check_weyl_relations,
    "weyl-kms": check_weyl_kms,
}


def run_check(name: str, cfg: LabConfig, point: dict | None = None) -> CheckReport:
    """Run one named check and wrap the metrics into a replayable report."""
    if name not in CHECKS:
        raise CheckError(f"unknown check {name!r}; valid names: {sorted(CHECKS)}")
    params = {"N": cfg.n_points, "beta": cfg.beta,
              "halfwidth": cfg.base_halfwidth, **(point or {})}
    seed_seq = cfg.seed_for(name, params)
    rng = np.random.default_rng(seed_seq)
    start = time.perf_counter()
    metrics = CHECKS[name](cfg, rng)
    elapsed = time.perf_counter() - start
    tolerance = float(metrics.pop("tolerance"))
    passed = bool(metrics.pop("passed"))
    return CheckReport(
        name=name,
        params=params,
        metrics={k: (float(v) if isinstance(v, (int, float, np.floating)) and not isinstance(v, bool) else v)
                 for k, v in metrics.items()},
        tolerance=tolerance,
        passed=passed,
        wall_time_s=elapsed,
        seed=int(cfg.rng_seed),
    )


def sweep_points(cfg: LabConfig) -> list[dict]:
    axes = [(k, cfg.sweep[k]) for k in ("N", "beta", "halfwidth") if k in cfg.sweep]
    if not axes:
        return [{}]
    keys = [k for k, _ in axes]
    return [dict(zip(keys, combo)) for combo in product(*(v for _, v in axes))]


def run_sweep(cfg: LabConfig, names=None) -> tuple[list[CheckReport], dict]:
    """Cartesian sweep over the configured axes; every point runs every check.

    Points execute concurrently (MDLAB_THREADS caps the pool); reports come
    back in deterministic (point, check) order regardless of scheduling.
    """
    names = list(CHECKS) if names is None else list(names)
    points = sweep_points(cfg)
    max_threads = int(os.environ.get("MDLAB_THREADS", "0")) or min(4, os.cpu_count() or 1)

    def run_point(point):
        sub = cfg.with_point(**point)
        return [run_check(name, sub, point) for name in names]

    if max_threads > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=max_threads) as pool:
            grouped = list(pool.map(run_point, points))
    else:
        grouped = [run_point(p) for p in points]
    reports = [r for group in grouped for r in group]

    worst_by_check = {}
    for r in reports:
        w = r.metrics.get("worst", np.nan)
        prev = worst_by_check.get(r.name)
        worst_by_check[r.name] = w if prev is None else max(prev, w)

    # per-axis worst-metric series, with a drift flag: exact-on-grid checks
    # should show no systematic growth along any swept axis
    axes = [k for k in ("N", "beta", "halfwidth") if k in cfg.sweep]
    series = {}
    for name in names:
        series[name] = {}
        for axis in axes:
            by_value = {}
            for r in reports:
                if r.name != name or axis not in r.params:
                    continue
                v = r.params[axis]
                by_value[v] = max(by_value.get(v, 0.0), r.metrics.get("worst", 0.0))
            pts = sorted(by_value.items())
            ws = [w for _, w in pts]
            series[name][axis] = {
                "values": [v for v, _ in pts],
                "worst": ws,
                "nondecreasing": bool(ws == sorted(ws)),
            }
    summary = {
        "points": len(points),
        "reports": len(reports),
        "n_passed": sum(r.passed for r in reports),
        "n_failed": sum(not r.passed for r in reports),
        "worst_by_check": worst_by_check,
        "worst_series": series,
    }
    return reports, summary
