"""Acceptance suite: one numbered test per shipped guarantee.

Each test prints a single ``PASS criterion N: ...`` line once every assertion
in it has held, so ``pytest tests/test_acceptance.py -v -s`` reads as a
checklist.  Budgets (iterations, tolerances, wall-clock caps) are pinned.
"""

import os
import shutil
import time

import numpy as np
import pytest

from conftest import data_path
from oracles import (
    dense_matrix_of,
    first_difference_matrix,
    fused_lasso_oracle,
    grid_minimize_1d,
)
from tiksplit import operators as ops
from tiksplit.cli import main
from tiksplit.core import ProductVector, SolverConfig, default_schedule, norm
from tiksplit.fixed_point import tikhonov_normal_s
from tiksplit.imaging import (
    blur_operator,
    gaussian_psf,
    haar_dwt,
    haar_idwt,
    wavelet_synthesis_operator,
)
from tiksplit.primal_dual import (
    DualBlock,
    PrimalDualProblem,
    ProxDualBlock,
    apply_metric,
    apply_skew,
    build_product_metric,
    pd_dr_prox_solve,
    pd_dr_solve,
    pd_fb_solve,
    pd_fb_prox_solve,
)
from tiksplit.splitting import (
    DrPair,
    InclusionPair,
    dr_tikhonov,
    fb_tikhonov,
    fb_tikhonov_prox,
)

DR_SCHED = lambda: default_schedule(theta_value=1.8, theta_upper_bound=2.0)


def _simple_problem(tau, sigma, weight=1.0):
    C = ops.quadratic_distance_gradient(np.zeros(1), weight=weight)
    block = DualBlock(L=ops.identity(1), P_res=ops.zero_monotone(),
                      sigma=sigma)
    return PrimalDualProblem(A_res=ops.zero_monotone(), tau=tau,
                             blocks=(block,), C=C)


def test_criterion_01_min_norm_selection():
    """Five operator pairs with known fixed-point sets; the solver must land
    on the least-norm common fixed point within 1e-3, each run < 1 s."""
    proj_diag = lambda v: np.full(2, 0.5 * (v[0] + v[1]))
    proj_axis = lambda v: np.array([v[0], 0.0])
    proj_half = lambda v: np.array([max(v[0], 1.0), v[1]])
    proj_box = lambda v: np.clip(v, 1.0, 2.0)
    const = lambda v: np.array([2.0, -1.0])
    ident = lambda v: v

    cases = [
        ("two lines", proj_diag, proj_axis, [4.0, 2.0], 3000, [0.0, 0.0]),
        ("halfspace", proj_half, proj_half, [5.0, 5.0], 6000, [1.0, 0.0]),
        ("box", proj_box, proj_box, [5.0, -4.0], 200, [1.0, 1.0]),
        ("singleton", const, const, [9.0, 9.0], 50, [2.0, -1.0]),
        ("whole space", ident, ident, [4.0, 2.0], 10000, [0.0, 0.0]),
    ]
    worst_err, worst_sec = 0.0, 0.0
    for label, S, T, y1, iters, target in cases:
        assert iters <= 50000
        cfg = SolverConfig(max_iters=iters, residual_tol=0.0, trace_every=iters)
        t0 = time.perf_counter()
        y, _ = tikhonov_normal_s(S, T, np.array(y1), default_schedule(), cfg)
        sec = time.perf_counter() - t0
        err = norm(y - np.array(target))
        assert err <= 1e-3, "%s: err %.3e" % (label, err)
        assert sec < 1.0, "%s: %.2fs" % (label, sec)
        worst_err, worst_sec = max(worst_err, err), max(worst_sec, sec)
    print("PASS criterion 1: min-norm selection on 5 pairs "
          "(worst err %.2e, worst time %.2fs)" % (worst_err, worst_sec))


def test_criterion_02_telescoping_exactness():
    """Identity maps collapse the damped recursion to y1/n exactly."""
    seen = []

    def spy(y):
        seen.append(np.array(y, dtype=float))
        return float(norm(y))

    y1 = np.array([4.0, 2.0])
    cfg = SolverConfig(max_iters=1000, residual_tol=0.0, trace_every=1)
    ident = lambda v: v
    y, _ = tikhonov_normal_s(ident, ident, y1, default_schedule(), cfg,
                             objective_fn=spy)
    assert len(seen) == 1000
    worst = 0.0
    for k, v in enumerate(seen):
        expect = y1 / (k + 2.0)
        worst = max(worst, norm(v - expect) / norm(expect))
    assert worst <= 1e-12
    np.testing.assert_allclose(y, y1 / 1001.0, rtol=1e-12)
    print("PASS criterion 2: telescoping exactness over 1000 iterations "
          "(worst rel err %.2e)" % worst)


def test_criterion_03_lasso_grid_oracle():
    """Scalar lasso: solver and brute-force grid search agree on 0.75."""
    pair = InclusionPair(A=ops.subdifferential(ops.l1_norm(0.5)),
                         B=ops.quadratic_distance_gradient(np.array([1.0]),
                                                           weight=2.0),
                         gamma=0.9)
    cfg = SolverConfig(max_iters=10000, residual_tol=0.0, trace_every=1000)
    t0 = time.perf_counter()
    y, _ = fb_tikhonov(pair, pair, np.array([0.0]), default_schedule(), cfg)
    sec = time.perf_counter() - t0
    assert abs(y[0] - 0.75) <= 1e-4
    obj = lambda u: (u - 1.0) ** 2 + 0.5 * np.abs(u)
    x_grid, _ = grid_minimize_1d(obj, 0.5, 1.0, 1e-6)
    assert abs(y[0] - x_grid) <= 1e-4 + 1e-6
    assert sec < 1.0
    print("PASS criterion 3: lasso matches grid oracle "
          "(err %.2e, %.2fs)" % (abs(y[0] - 0.75), sec))


def test_criterion_04_fused_signal_oracle():
    """Both coupled schemes reproduce the 8-sample fused-lasso solution."""
    b = np.array([0.1, 0.2, 1.0, 1.1, 0.9, 0.1, 0.0, 0.3])
    lam = 0.3
    D = first_difference_matrix(8)
    x_star, _ = fused_lasso_oracle(b, D, lam)
    L = ops.dense_operator(D)
    init = ProductVector([np.zeros(8), np.zeros(7)])
    t0 = time.perf_counter()

    block = DualBlock(L=L, P_res=ops.subdifferential(ops.l1_norm(lam)),
                      sigma=0.15)
    prob = PrimalDualProblem(A_res=ops.zero_monotone(), tau=0.15,
                             blocks=(block,),
                             C=ops.quadratic_distance_gradient(b, 1.0))
    cfg = SolverConfig(max_iters=5000, residual_tol=0.0, trace_every=1000)
    pv, _ = pd_fb_solve(prob, init, default_schedule(), cfg)
    err_fb = norm(pv[0] - x_star)

    blocks = [ProxDualBlock(L=L, g=ops.l1_norm(lam), sigma=0.3)]
    f = ops.squared_error(b, weight=0.5)
    cfg = SolverConfig(max_iters=2000, residual_tol=0.0, trace_every=1000)
    _, _, shadow = pd_dr_prox_solve(f, blocks, 0.3, init, DR_SCHED(), cfg)
    err_dr = norm(shadow[0] - x_star)

    sec = time.perf_counter() - t0
    assert err_fb <= 5e-3 and err_dr <= 5e-3
    assert sec < 10.0
    print("PASS criterion 4: fused signal vs sign-pattern oracle "
          "(fb err %.2e, dr err %.2e, %.2fs)" % (err_fb, err_dr, sec))


def test_criterion_05_dr_feasibility():
    """Both shadow sequences reach the intersection of two lines and the
    inter-shadow gap is controlled by the stopping tolerance."""
    A = ops.normal_cone(lambda v: np.full(2, 0.5 * (v[0] + v[1])))
    B = ops.normal_cone(lambda v: np.array([v[0], 0.0]))
    pair = DrPair(A=A, B=B, gamma=1.0)
    tol = 1e-6
    cfg = SolverConfig(max_iters=5000, residual_tol=tol)
    _, y, z, trace = dr_tikhonov(pair, np.array([4.0, 2.0]), DR_SCHED(), cfg)
    assert trace.converged is True
    assert norm(y) <= 1e-5 and norm(z) <= 1e-5
    assert trace.final().shadow_gap <= 10.0 * tol
    print("PASS criterion 5: DR shadows feasible (|y|=%.2e, |z|=%.2e, "
          "gap %.2e)" % (norm(y), norm(z), trace.final().shadow_gap))


def _catalog(name, dim):
    if name == "l1":
        return ops.l1_norm(0.8)
    if name == "zero":
        return ops.zero_function()
    if name == "squared":
        return ops.squared_error(np.full(dim, 0.3), weight=1.5)
    if name == "box":
        return ops.box_indicator(np.full(dim, -0.5), np.full(dim, 2.0))
    return ops.point_indicator(np.full(dim, 1.2))


def test_criterion_06_operator_algebra_suites():
    """Six seeded random property suites, 100 cases each."""
    rng = np.random.default_rng(11)
    names = ["l1", "zero", "squared", "box", "point"]

    worst_adj = 0.0
    for i in range(98):
        m, n = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        op = ops.dense_operator(rng.standard_normal((m, n)))
        worst_adj = max(worst_adj, ops.check_adjoint(op, trials=1, seed=i))
    blur = blur_operator(gaussian_psf(9, 4.0), (16, 16))
    synth = wavelet_synthesis_operator((8, 8), 3)
    worst_adj = max(worst_adj, ops.check_adjoint(blur, trials=1, seed=800))
    worst_adj = max(worst_adj, ops.check_adjoint(synth, trials=1, seed=801))
    assert worst_adj <= 1e-8

    worst_haar = 0.0
    for _ in range(100):
        img = rng.random((8, 8))
        coeffs = haar_dwt(img, 3)
        worst_haar = max(
            worst_haar,
            abs(float(np.linalg.norm(coeffs)) - float(np.linalg.norm(img))),
            float(np.max(np.abs(haar_idwt(coeffs, (8, 8), 3) - img))))
    assert worst_haar <= 1e-10

    worst_moreau = 0.0
    for i in range(100):
        f = _catalog(names[i % 5], 3)
        x = 4.0 * rng.standard_normal(3)
        recon = f.prox(1.0, x) + ops.conjugate_prox(f, 1.0, x)
        worst_moreau = max(worst_moreau, float(np.max(np.abs(recon - x))))
    assert worst_moreau <= 1e-9

    worst_firm = -np.inf
    gammas = (0.5, 1.0, 2.0)
    for i in range(100):
        f = _catalog(names[i % 5], 3)
        g = gammas[i % 3]
        x, y = rng.standard_normal(3), rng.standard_normal(3)
        d = f.prox(g, x) - f.prox(g, y)
        worst_firm = max(worst_firm,
                         float(d @ d) - float(d @ (x - y)))
    assert worst_firm <= 1e-9

    def flatten(pv):
        return np.concatenate([np.asarray(v, dtype=float) for v in pv.blocks])

    def unflatten(v):
        return ProductVector([v[:4], v[4:7], v[7:9]])

    g7 = np.random.default_rng(7)
    L1 = ops.dense_operator(g7.standard_normal((3, 4)))
    L2 = ops.dense_operator(g7.standard_normal((2, 4)))
    prob = PrimalDualProblem(
        A_res=ops.zero_monotone(), tau=0.05,
        blocks=(DualBlock(L=L1, P_res=ops.zero_monotone(), sigma=0.05),
                DualBlock(L=L2, P_res=ops.zero_monotone(), sigma=0.07)),
        C=ops.quadratic_distance_gradient(np.zeros(4)))
    worst_metric = -np.inf
    for scheme in ("fb", "dr"):
        rho, report = build_product_metric(prob, scheme=scheme)
        assert report.ok
        for _ in range(50):
            v = rng.standard_normal(9)
            quad = float(flatten(apply_metric(prob, unflatten(v),
                                              scheme=scheme)) @ v)
            worst_metric = max(worst_metric,
                               (rho - 1e-8) * float(v @ v) - quad)
    assert worst_metric <= 0.0

    worst_skew = 0.0
    for _ in range(100):
        v = rng.standard_normal(9)
        quad = float(flatten(apply_skew(prob, unflatten(v))) @ v)
        worst_skew = max(worst_skew, abs(quad) / float(v @ v))
    assert worst_skew <= 1e-10

    print("PASS criterion 6: operator-algebra suites of 100 "
          "(adjoint %.1e, haar %.1e, moreau %.1e, firm %.1e, skew %.1e)"
          % (worst_adj, worst_haar, worst_moreau, worst_firm, worst_skew))


def test_criterion_07_gradient_check():
    """Analytic least-squares gradients vs central finite differences."""
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        m, n = int(rng.integers(2, 7)), int(rng.integers(2, 7))
        M = rng.standard_normal((m, n))
        b = rng.standard_normal(m)
        scale = float(rng.choice([0.5, 1.0, 2.0]))
        grad = ops.least_squares_gradient_operator(ops.dense_operator(M), b,
                                                   scale=scale)
        x = rng.standard_normal(n)
        value = lambda u: 0.5 * scale * float(np.sum((M @ u - b) ** 2))
        h = 1e-6
        fd = np.zeros(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            fd[i] = (value(x + e) - value(x - e)) / (2.0 * h)
        g = grad.apply(x)
        rel = norm(g - fd) / max(norm(fd), 1e-12)
        worst = max(worst, rel)
    assert worst <= 1e-5
    print("PASS criterion 7: gradient vs finite differences on 20 instances "
          "(worst rel err %.2e)" % worst)


def _final_row(csv_path):
    lines = open(csv_path).read().strip().splitlines()
    parts = lines[-1].split(",")
    return float(parts[1]), float(parts[3])  # objective, psnr


def test_criterion_08_deblurring_experiment(tmp_path, capsys):
    """64x64 deblurring: >= 3 dB gain over the blurred input, and the damped
    forward-backward run dominates the undamped baseline at equal budget."""
    img = os.path.join(tmp_path, "img.pgm")
    shutil.copy(data_path("pattern64.pgm"), img)
    t0 = time.perf_counter()
    logs, psnrs, blurred = {}, {}, None
    for algo in ("fb-tikhonov", "mann-tikhonov"):
        log = os.path.join(tmp_path, algo + ".csv")
        rc = main(["deblur", "--input", img, "--algo", algo,
                   "--iters", "1000", "--trace-every", "100",
                   "--output", os.path.join(tmp_path, algo + ".pgm"),
                   "--log", log])
        assert rc == 0
        out = capsys.readouterr().out
        blurred = float([ln for ln in out.splitlines()
                         if ln.startswith("blurred psnr:")][0].split()[2])
        logs[algo] = log
        psnrs[algo] = float([ln for ln in out.splitlines()
                             if ln.startswith("final psnr:")][0].split()[2])
    sec = time.perf_counter() - t0
    obj_fb, psnr_fb = _final_row(logs["fb-tikhonov"])
    obj_mann, psnr_mann = _final_row(logs["mann-tikhonov"])
    assert psnrs["fb-tikhonov"] >= blurred + 3.0
    # equal-budget comparison: objective gap to any shared floor orders the
    # same way as the raw objectives
    assert obj_fb <= obj_mann + 1e-12
    assert psnrs["fb-tikhonov"] >= psnrs["mann-tikhonov"] - 0.05
    assert sec < 30.0
    print("PASS criterion 8: deblurring %.2f -> %.2f dB (baseline %.2f dB, "
          "objectives %.3e <= %.3e, %.1fs)"
          % (blurred, psnrs["fb-tikhonov"], psnrs["mann-tikhonov"],
             obj_fb, obj_mann, sec))


def test_criterion_09_cross_solver_agreement(tmp_path, capsys):
    """Splitting and primal-dual solvers agree on the 32x32 problem."""
    img = os.path.join(tmp_path, "img.pgm")
    shutil.copy(data_path("pattern32.pgm"), img)
    t0 = time.perf_counter()
    objs = {}
    for algo in ("fb-tikhonov", "pd-fb"):
        log = os.path.join(tmp_path, algo + ".csv")
        rc = main(["deblur", "--input", img, "--algo", algo,
                   "--iters", "2000", "--trace-every", "500",
                   "--output", os.path.join(tmp_path, algo + ".pgm"),
                   "--log", log])
        assert rc == 0
        capsys.readouterr()
        objs[algo], _ = _final_row(log)
    sec = time.perf_counter() - t0
    rel = abs(objs["fb-tikhonov"] - objs["pd-fb"]) / min(objs.values())
    assert rel <= 1e-2
    assert sec < 60.0
    print("PASS criterion 9: cross-solver objectives agree "
          "(rel diff %.2e, %.1fs)" % (rel, sec))


def test_criterion_10_precondition_enforcement():
    """Step-size preconditions are rejected by name; boundaries that the
    theory admits are accepted."""
    grad = ops.quadratic_distance_gradient(np.array([1.0]), weight=2.0)
    with pytest.raises(ValueError, match=r"violates gamma < 2\*beta"):
        InclusionPair(A=ops.zero_monotone(), B=grad, gamma=1.0)
    InclusionPair(A=ops.zero_monotone(), B=grad, gamma=0.999)

    cfg = SolverConfig(max_iters=20, residual_tol=0.0)
    with pytest.raises(ValueError, match=r"violates gamma <= 2\*beta"):
        fb_tikhonov_prox(ops.l1_norm(0.5), grad, 1.01, np.array([0.0]),
                         default_schedule(), cfg)
    # the closed prox-form bound admits gamma = 2*beta exactly
    fb_tikhonov_prox(ops.l1_norm(0.5), grad, 1.0, np.array([0.0]),
                     default_schedule(), cfg)

    init = ProductVector([np.zeros(1), np.zeros(1)])
    with pytest.raises(ValueError, match="violates the bound < 1"):
        pd_fb_solve(_simple_problem(1.0, 1.0), init, default_schedule(), cfg)
    with pytest.raises(ValueError, match="violates the bound < 4"):
        pd_dr_solve(_simple_problem(2.0, 2.0), init, DR_SCHED(), cfg)

    _, report = build_product_metric(_simple_problem(0.25, 0.25, weight=20.0),
                                     scheme="fb")
    assert not report.ok
    assert any("2*rho*min(beta1, beta2)" in msg for msg in report.failures)

    rho, report = build_product_metric(_simple_problem(1.0, 0.25), scheme="fb")
    assert report.ok and 2.0 * rho * report.beta1 == 1.0
    _, report = build_product_metric(_simple_problem(1.99, 1.99), scheme="dr")
    assert report.ok

    print("PASS criterion 10: preconditions rejected by name, "
          "boundary configurations accepted")
