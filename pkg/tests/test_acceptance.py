"""Acceptance suite.

Each test covers one numbered acceptance criterion at its stated tolerance
and prints one summary line; a pytest failure line is the corresponding
fail report.
"""

import json
import math

import numpy as np

import kscatter as ks
from kscatter import cli

FOUR_PI = 4.0 * np.pi

SEED = 20260809


def _report(capsys, idx, detail):
    with capsys.disabled():
        print(f"[acceptance] criterion {idx}: PASS ({detail})")


def _random_suite():
    rng = np.random.default_rng(SEED)
    configs = []
    for _ in range(20):
        n = int(rng.integers(1, 9))
        pts = rng.uniform(-3.0, 3.0, (n, 3))
        w = rng.choice([-1.0, 1.0], n) * rng.uniform(0.2, 5.0, n)
        configs.append(ks.build_configuration(pts, ks.CouplingOperator.diagonal(w)))
    return configs


def test_criterion_1_unitarity_suite(capsys):
    worst = 0.0
    for cfg in _random_suite():
        for lam in (0.5, 1.0, 2.0, 5.0):
            smat = ks.assemble_s(lam, cfg, ks.grid_for(lam, cfg.diameter))
            worst = max(worst, ks.unitarity_defect(smat))
    assert worst <= 1e-8
    _report(capsys, 1, f"20 configs x 4 energies, max grid unitarity defect {worst:.3e}")


def test_criterion_2_gram_consistency(capsys):
    worst_quad = 0.0
    worst_imq = 0.0
    for cfg in _random_suite():
        for lam in (0.5, 1.0, 2.0, 5.0):
            grid = ks.grid_for(lam, cfg.diameter)
            qv = ks.plane_wave_vectors(lam, cfg, grid)
            ga = ks.gram_analytic(lam, cfg)
            worst_quad = max(worst_quad, np.abs(ks.gram_quadrature(qv, grid) - ga).max())
            q_bnd = ks.q_matrix(ks.SpectralPoint.boundary_plus(lam), cfg).entries
            worst_imq = max(worst_imq, np.abs(ga - q_bnd.imag).max())
    assert worst_quad <= 1e-10
    assert worst_imq <= 1e-15
    _report(
        capsys, 2,
        f"quadrature vs analytic {worst_quad:.3e}, analytic vs Im Q {worst_imq:.3e}",
    )


def test_criterion_3_rank_one_closed_form(capsys):
    # independent scalar oracle for one point at the origin, w = 1, lambda = 1
    denom = FOUR_PI + 1j / FOUR_PI
    coeff_oracle = 1.0 / denom
    det_oracle = (FOUR_PI - 1j / FOUR_PI) / denom
    amp_oracle = -coeff_oracle / FOUR_PI
    sigma_oracle = FOUR_PI * abs(amp_oracle) ** 2

    cfg = ks.build_configuration([[0, 0, 0]], ks.CouplingOperator.diagonal([1.0]))
    smat = ks.assemble_s(1.0, cfg)
    xs = ks.cross_section(1.0, cfg, smat=smat)
    assert abs(smat.coeff[0, 0] - coeff_oracle) <= 1e-12
    assert abs(ks.det_s(smat) - det_oracle) <= 1e-12
    assert abs(xs.sigma_total - sigma_oracle) <= 1e-10 * sigma_oracle
    rel_gap = abs(xs.optical_lhs - xs.optical_rhs) / xs.sigma_total
    assert rel_gap <= 1e-6
    _report(
        capsys, 3,
        f"C={smat.coeff[0,0]:.7g}, det={ks.det_s(smat):.7g}, "
        f"sigma={xs.sigma_total:.5e}, optical gap {rel_gap:.2e}",
    )


def _incremental_setup(n_points=6, lam=1.0):
    rng = np.random.default_rng(SEED + 4)
    pts = rng.uniform(-3.0, 3.0, (n_points, 3))
    w = rng.choice([-1.0, 1.0], n_points) * rng.uniform(0.2, 5.0, n_points)
    cfg = ks.build_configuration(pts, ks.CouplingOperator.diagonal(w))
    grid = ks.grid_for(lam, cfg.diameter)
    return cfg, grid, lam


def test_criterion_4_incremental_equivalence(capsys):
    cfg, grid, lam = _incremental_setup()
    state = ks.IncrementalState.empty(lam)
    kernel = np.zeros((grid.size, grid.size), dtype=complex)
    worst_xi = 0.0
    for i in range(6):
        state, _ = ks.add_point(state, cfg.points[i], cfg.coupling.weights[i])
        upd = ks.update_data(state, grid)
        worst_xi = max(worst_xi, abs(upd.xi[-1] * upd.d - 1.0))
        kernel = ks.s_rank_one_update(kernel, upd)
    smat = ks.assemble_s(lam, cfg, grid)
    dev_coeff = np.abs(state.coeff - smat.coeff).max()
    dev_kernel = np.abs(kernel - ks.kernel_matrix(smat)).max()
    det_w = np.exp(state.log_det)
    det_inc = np.conj(det_w) / det_w
    dev_det = abs(det_inc - ks.det_s(smat))
    assert dev_coeff <= 1e-10
    assert dev_kernel <= 1e-10
    assert dev_det <= 1e-8
    assert worst_xi <= 1e-12

    coeff_before = state.coeff.copy()
    rng = np.random.default_rng(SEED + 5)
    grown, _ = ks.add_point(state, rng.uniform(-3, 3, 3), 1.3)
    back = ks.remove_last_point(grown)
    dev_rt = np.abs(back.coeff - coeff_before).max()
    assert dev_rt <= 1e-12
    _report(
        capsys, 4,
        f"N=6 deviations: C {dev_coeff:.2e}, kernel {dev_kernel:.2e}, "
        f"det {dev_det:.2e}, round trip {dev_rt:.2e}, xi*d {worst_xi:.2e}",
    )


def test_criterion_5_determinant_recursion(capsys):
    cfg, grid, lam = _incremental_setup()
    state = ks.IncrementalState.empty(lam)
    det = 1.0 + 0.0j
    worst_mod = 0.0
    for i in range(6):
        state, _ = ks.add_point(state, cfg.points[i], cfg.coupling.weights[i])
        det = ks.det_recursion(det, ks.update_data(state, grid), grid)
        worst_mod = max(worst_mod, abs(abs(det) - 1.0))
    direct = ks.det_s(ks.assemble_s(lam, cfg, grid))
    rel_dev = abs(det - direct) / abs(direct)
    assert rel_dev <= 1e-8
    assert worst_mod <= 1e-10

    # exponent resolution is stable across 20 random configurations
    rng = np.random.default_rng(SEED + 6)
    exponents = []
    for _ in range(20):
        n = int(rng.integers(2, 7))
        pts = rng.uniform(-3.0, 3.0, (n, 3))
        w = rng.choice([-1.0, 1.0], n) * rng.uniform(0.2, 5.0, n)
        full = ks.build_configuration(pts, ks.CouplingOperator.diagonal(w))
        part = ks.build_configuration(
            pts[: n - 1], ks.CouplingOperator.diagonal(w[: n - 1])
        )
        g = ks.grid_for(1.0, full.diameter)
        det_prev = ks.det_s(ks.assemble_s(1.0, part, g))
        det_next = ks.det_s(ks.assemble_s(1.0, full, g))
        st = ks.direct_state(part, 1.0)
        st, _ = ks.add_point(st, pts[n - 1], w[n - 1])
        upd = ks.update_data(st, g)
        exponent, errors = ks.resolve_d_exponent(det_prev, det_next, upd, g)
        assert errors[exponent] <= 1e-6
        exponents.append(exponent)
    assert set(exponents) == {-1}
    assert ks.DET_D_EXPONENT == -1
    _report(
        capsys, 5,
        f"telescoped det dev {rel_dev:.2e}, max |det|-1 {worst_mod:.2e}, "
        f"resolved exponent -1 on all 20 configs",
    )


def test_criterion_6_q_function_identities(capsys):
    cfg = ks.build_configuration(
        [[0.3, 0.2, -0.1], [1.1, -0.4, 0.5]], ks.CouplingOperator.diagonal([1.0, 2.0])
    )
    res = ks.q_identity_residual(
        ks.SpectralPoint.interior(2j), ks.SpectralPoint.interior(-3j), cfg, method="numeric"
    )
    assert res <= 1e-6

    rng = np.random.default_rng(SEED + 7)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 7))
        pts = rng.uniform(-3.0, 3.0, (n, 3))
        c = ks.build_configuration(pts, ks.CouplingOperator.diagonal(np.ones(n)))
        z = ks.SpectralPoint.interior(complex(rng.uniform(-4, 4), rng.uniform(0.05, 4)))
        herg = ks.q_matrix(z, c).herglotz_part()
        eigs = np.linalg.eigvalsh(herg)
        worst = max(worst, -eigs.min() / max(np.abs(eigs).max(), 1e-300))
    assert worst <= 1e-12
    _report(
        capsys, 6,
        f"numeric Q-identity residual {res:.2e}, worst Nevanlinna violation {worst:.2e}",
    )


def test_criterion_7_resolvent_identities(capsys):
    cfg = ks.build_configuration(
        [[0.6, -0.4, 0.3], [-0.8, 0.5, -0.2]], ks.CouplingOperator.diagonal([1.0, -2.0])
    )
    z1 = ks.SpectralPoint.interior(2j)
    z2 = ks.SpectralPoint.interior(-2j)
    residuals = {}
    for n in (32, 48):
        grid = ks.make_box_grid(8.0, n)
        gx, gy, gz = np.meshgrid(*grid.axes, indexing="ij")
        f = np.exp(-(gx**2 + gy**2 + gz**2) / 2.0).astype(complex)
        residuals[n] = ks.hilbert_identity_residual(z1, z2, f, cfg, grid)
    assert residuals[32] / residuals[48] >= 1.5

    grid = ks.make_box_grid(8.0, 32)
    gx, gy, gz = np.meshgrid(*grid.axes, indexing="ij")
    f = np.exp(-(gx**2 + gy**2 + gz**2) / 2.0) * (1.0 + 0.5j)
    conj_dev = np.abs(
        ks.apply_perturbed_resolvent(z1.conjugate(), np.conj(f), cfg, grid)
        - np.conj(ks.apply_perturbed_resolvent(z1, f, cfg, grid))
    ).max()
    assert conj_dev <= 1e-12
    _report(
        capsys, 7,
        f"Hilbert residual 32^3 {residuals[32]:.3e} -> 48^3 {residuals[48]:.3e} "
        f"(factor {residuals[32]/residuals[48]:.2f}), conjugation dev {conj_dev:.2e}",
    )


def test_criterion_8_truncated_infinite_family(capsys):
    pts, w = ks.lattice_line(200, 1.0, "n^4")
    cfg = ks.build_configuration(pts, ks.CouplingOperator.diagonal(w))
    report = ks.check_summability(cfg.separation.delta, weights=w, finite=False)
    assert report.verdict == "pass"
    gap = math.pi**2 / 6.0 - report.sum_b[-1]
    assert 0.0 < gap <= 1.0 / 200.0

    lam = 1.0
    pts, w = ks.lattice_line(41, 1.0, "n^4")
    grid = ks.grid_for(lam, float(pts[-1][0] - pts[0][0]))
    state = ks.IncrementalState.empty(lam)
    step_norms = {}
    for i in range(41):
        state, _ = ks.add_point(state, pts[i], w[i])
        upd = ks.update_data(state, grid)
        fmax = np.abs(upd.f).max()
        step_norms[i] = 2.0 * abs(upd.d) * fmax * fmax  # ||K_{N+1} - K_N||_inf, N = i
    assert all(step_norms[n + 1] < step_norms[n] for n in range(10, 40))
    assert report.sum_b_over_delta is not None
    _report(
        capsys, 8,
        f"summability gap {gap:.4e} <= 1/200, kernel Cauchy increments decrease "
        f"{step_norms[10]:.2e} -> {step_norms[40]:.2e} over N=10..40",
    )


def test_criterion_9_cli_determinism(tmp_path, capsys):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(
        json.dumps(
            {"points": [[1, 0, 0], [3, 0, 0], [3.5, 0, 0]],
             "coupling": {"diagonal": [1.0, 1.0, 1.0]}}
        ),
        encoding="utf-8",
    )
    payloads = []
    for run in range(2):
        out = tmp_path / f"sweep_{run}.csv"
        code = cli.main(
            ["sweep", "--config", str(cfg_path), "--lambda", "0.5:5:0.5",
             "--format", "csv", "--out", str(out)]
        )
        assert code == 0
        payloads.append(out.read_bytes())
    assert payloads[0] == payloads[1]
    capsys.readouterr()
    _report(capsys, 9, f"two sweep runs byte-identical ({len(payloads[0])} bytes)")
