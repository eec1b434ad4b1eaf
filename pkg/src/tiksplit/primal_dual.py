"""Damped primal-dual splitting for composite inclusions.

Problems couple a primal inclusion with m dual blocks through linear
operators L_i.  Two schemes are provided:

* a forward-backward-type scheme (``pd_fb_solve``) that evaluates the
  single-valued terms forward and the set-valued terms through resolvents,
  sweeping primal then duals twice per iteration;
* a Douglas-Rachford-type scheme (``pd_dr_solve``) that composes two
  block resolvents in the product space equipped with a coupling metric.

Both inherit the damping schedule and converge in norm, the governing
sequence to the minimum-norm point in the renormed product space, the
shadows to a primal-dual solution.  Prox-form wrappers accept proximable
functions instead of operators.
"""

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .core import ProductVector, SolveTrace, TraceRow
from .operators import (
    CocoerciveOperator,
    MonotoneOperator,
    Proximable,
    inverse_resolvent,
    normal_cone,
    operator_norm_bound,
    subdifferential,
    zero_cocoercive,
)


@dataclass(frozen=True)
class DualBlock:
    """One dual block: coupling operator L, dual operator P, step sigma.

    P_res is the set-valued dual operator supplied through its resolvent;
    the schemes form the resolvent of its inverse internally.  Q_inv is the
    forward-evaluated smoothing term used by the fb-type scheme (zero when
    omitted); Q_res is the second resolvent slot used by the dr-type
    scheme (omitted = no smoothing).  strong_monotonicity is the asserted
    modulus of the smoother backing Q_inv; inf encodes the degenerate
    zero slot.
    """

    L: object
    P_res: MonotoneOperator
    sigma: float
    Q_inv: CocoerciveOperator = None
    Q_res: MonotoneOperator = None
    strong_monotonicity: float = math.inf

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ValueError("dual step sigma must be > 0, got %g" % self.sigma)
        if not self.strong_monotonicity > 0.0:
            raise ValueError(
                "strong_monotonicity must be > 0, got %g" % self.strong_monotonicity
            )


@dataclass(frozen=True)
class PrimalDualProblem:
    """Primal operator(s), dual blocks and the primal step tau.

    blocks is a sequence of DualBlock, or of (DualBlock, DualBlock) pairs
    when the two coupled systems differ; a single block stands for both
    systems.  C is the forward-evaluated primal term (zero when omitted);
    B_res and D are the second system's primal operators, defaulting to
    A_res and C.  The dr-type scheme uses only the first system.
    """

    A_res: MonotoneOperator
    tau: float
    blocks: tuple
    C: CocoerciveOperator = None
    B_res: MonotoneOperator = None
    D: CocoerciveOperator = None

    def __post_init__(self):
        if not self.tau > 0.0:
            raise ValueError("primal step tau must be > 0, got %g" % self.tau)
        if not self.blocks:
            raise ValueError("at least one dual block is required")

    def block_pairs(self):
        pairs = []
        for blk in self.blocks:
            if isinstance(blk, DualBlock):
                pairs.append((blk, blk))
            else:
                b1, b2 = blk
                if b1.sigma != b2.sigma:
                    raise ValueError(
                        "paired dual blocks must share sigma, got %g and %g"
                        % (b1.sigma, b2.sigma)
                    )
                if (b1.L.in_dim, b1.L.out_dim) != (b2.L.in_dim, b2.L.out_dim):
                    raise ValueError("paired dual blocks must share the coupling shape")
                pairs.append((b1, b2))
        return pairs


@dataclass
class MetricReport:
    """Outcome of the product-metric feasibility check."""

    scheme: str
    coupling: float
    rho: float
    beta1: float = None
    beta2: float = None
    ok: bool = True
    failures: tuple = ()
    note: str = ""


def _min_beta(forward, blocks_strong):
    beta = forward.beta if forward is not None else math.inf
    for s in blocks_strong:
        beta = min(beta, s)
    return beta


def build_product_metric(prob, scheme="fb"):
    """Evaluate the coupling condition and metric modulus rho for a scheme.

    coupling = tau * sum_i sigma_i * ||L_i||^2 with trusted norm bounds
    where available (estimates are inflated by 1 percent otherwise).

    fb-type: rho = min(1/tau, 1/sigma_i) * (1 - sqrt(coupling)), positive
    only for coupling < 1 even though the scheme's stated input range is
    coupling < 4; additionally 2 * rho * min(beta1, beta2) >= 1 must hold,
    where beta1, beta2 collect the cocoercivity and strong-monotonicity
    moduli of the two systems.

    dr-type: rho = (1 - sqrt(coupling)/2) * min(1/tau, 1/sigma_i),
    requiring coupling < 4.  No cocoercivity condition applies.

    Returns (rho, MetricReport); the report carries failures instead of
    raising so callers can surface them.
    """
    if scheme not in ("fb", "dr"):
        raise ValueError("scheme must be 'fb' or 'dr', got %r" % (scheme,))
    pairs = prob.block_pairs()
    coupling = prob.tau * sum(
        b1.sigma * operator_norm_bound(b1.L) ** 2 for b1, _ in pairs
    )
    inv_steps = min([1.0 / prob.tau] + [1.0 / b1.sigma for b1, _ in pairs])
    failures = []
    beta1 = beta2 = None
    if scheme == "fb":
        if coupling >= 1.0:
            failures.append(
                "tau*sum(sigma_i*||L_i||^2) = %g violates the bound < 1 needed "
                "for rho > 0 (stated input range is < 4)" % coupling
            )
            rho = 0.0
        else:
            rho = inv_steps * (1.0 - math.sqrt(coupling))
        beta1 = _min_beta(prob.C, [b1.strong_monotonicity for b1, _ in pairs])
        d = prob.D if prob.D is not None else prob.C
        beta2 = _min_beta(d, [b2.strong_monotonicity for _, b2 in pairs])
        if math.isinf(beta1) or math.isinf(beta2):
            warnings.warn(
                "a cocoercive/strongly monotone slot is the zero operator; "
                "its modulus is taken as +inf (degenerate limiting case)"
            )
        if not failures and not 2.0 * rho * min(beta1, beta2) >= 1.0:
            failures.append(
                "2*rho*min(beta1, beta2) = %g violates the bound >= 1 "
                "(rho=%g, beta1=%g, beta2=%g)"
                % (2.0 * rho * min(beta1, beta2), rho, beta1, beta2)
            )
        note = ("fb-type metric keeps rho > 0 only for coupling < 1; the "
                "dr-type metric halves the off-diagonal and allows < 4")
    else:
        if coupling >= 4.0:
            failures.append(
                "tau*sum(sigma_i*||L_i||^2) = %g violates the bound < 4" % coupling
            )
            rho = 0.0
        else:
            rho = (1.0 - 0.5 * math.sqrt(coupling)) * inv_steps
        note = "dr-type scheme; no cocoercivity condition applies"
    report = MetricReport(scheme=scheme, coupling=coupling, rho=rho,
                          beta1=beta1, beta2=beta2, ok=not failures,
                          failures=tuple(failures), note=note)
    return rho, report


def apply_metric(prob, pvec, scheme="fb"):
    """Apply the product metric (V for fb, W for dr) to a product point."""
    pairs = prob.block_pairs()
    half = 0.5 if scheme == "dr" else 1.0
    x = pvec[0]
    out0 = x / prob.tau
    outs = []
    for i, (b1, _) in enumerate(pairs):
        u = pvec[1 + i]
        out0 = out0 - half * b1.L.adjoint(u)
        outs.append(u / b1.sigma - half * b1.L.apply(x))
    return ProductVector([out0] + outs)


def apply_skew(prob, pvec):
    """Apply the skew coupling map (sum L_i^T u_i, -L_1 x, ..., -L_m x)."""
    pairs = prob.block_pairs()
    x = pvec[0]
    out0 = np.zeros_like(x)
    outs = []
    for i, (b1, _) in enumerate(pairs):
        out0 = out0 + b1.L.adjoint(pvec[1 + i])
        outs.append(-b1.L.apply(x))
    return ProductVector([out0] + outs)


def _check_init(prob, init):
    pairs = prob.block_pairs()
    if len(init) != len(pairs) + 1:
        raise ValueError(
            "init needs %d blocks (primal + %d duals), got %d"
            % (len(pairs) + 1, len(pairs), len(init))
        )
    for i, (b1, _) in enumerate(pairs):
        if init[0].size != b1.L.in_dim:
            raise ValueError(
                "primal block has size %d but L_%d expects %d"
                % (init[0].size, i + 1, b1.L.in_dim)
            )
        if init[1 + i].size != b1.L.out_dim:
            raise ValueError(
                "dual block %d has size %d but L_%d produces %d"
                % (i + 1, init[1 + i].size, i + 1, b1.L.out_dim)
            )


def _run_product_iteration(step, init, schedule, config, theta_factor,
                           objective_of=None, psnr_of=None):
    # mirrors core.run_damped_iteration for product-space iterates
    schedule.check_range(config.max_iters, theta_factor=theta_factor)
    cur = init.copy()
    trace = SolveTrace()
    t0 = time.perf_counter()
    for n in range(1, config.max_iters + 1):
        nxt, gap = step(n, float(schedule.e(n)), float(schedule.theta(n)), cur)
        for blk in nxt.blocks:
            if not np.all(np.isfinite(blk)):
                raise ValueError("iteration produced non-finite values at n=%d" % n)
        res = (nxt - cur).norm()
        cur = nxt
        trace.iterations = n
        stop = res <= config.residual_tol or n == config.max_iters
        if stop or n % config.trace_every == 0:
            trace.append(TraceRow(
                n=n,
                residual=res,
                objective=None if objective_of is None else float(objective_of(cur)),
                psnr=None if psnr_of is None else float(psnr_of(cur)),
                elapsed_ms=(time.perf_counter() - t0) * 1000.0,
                shadow_gap=gap,
            ))
        if res <= config.residual_tol:
            trace.converged = True
            break
    return cur, trace


def pd_fb_solve(prob, init, schedule, config, objective_fn=None, psnr_fn=None):
    """Forward-backward-type primal-dual iteration.

    One sweep, writing ey = e_n y_n and ev_i = e_n v_{i,n}:

        p   = J_{tau A}(ey - tau (sum_i L_i^T ev_i + C(ey)))
        u0  = ey + theta_n (p - ey)
        q_i = J_{sigma_i P_i^-1}(ev_i + sigma_i (L_i(2p - ey) - Q_i^-1(ev_i)))
        u_i = ev_i + theta_n (q_i - ev_i)
        y+  = J_{tau B}(u0 - tau (sum_i L_i^T u_i + D(u0)))
        v+_i = J_{sigma_i R_i^-1}(u_i + sigma_i (L_i(2 y+ - u0) - S_i^-1(u_i)))

    where the second system (B, D, R_i, S_i) defaults to the first.  The
    coupling and cocoercivity conditions from build_product_metric must
    pass, and theta_n must keep 2*beta1*rho/(4*beta1*rho - 1) * theta_n
    strictly below 1.  objective_fn/psnr_fn are evaluated at the primal
    iterate.  Returns (ProductVector, trace).
    """
    _check_init(prob, init)
    rho, report = build_product_metric(prob, scheme="fb")
    if not report.ok:
        raise ValueError("; ".join(report.failures))
    br = report.beta1 * rho
    factor = 0.5 if math.isinf(br) else 2.0 * br / (4.0 * br - 1.0)

    pairs = prob.block_pairs()
    tau = prob.tau
    A = prob.A_res
    B = prob.B_res if prob.B_res is not None else A
    C = prob.C if prob.C is not None else zero_cocoercive()
    D = prob.D if prob.D is not None else C

    def step(n, e, th, pv):
        ey = e * pv[0]
        evs = [e * pv[1 + i] for i in range(len(pairs))]
        dual_pull = np.zeros_like(ey)
        for (b1, _), ev in zip(pairs, evs):
            dual_pull = dual_pull + b1.L.adjoint(ev)
        p = np.asarray(A.resolvent(tau, ey - tau * (dual_pull + C.apply(ey))),
                       dtype=float)
        u0 = ey + th * (p - ey)
        us = []
        for (b1, _), ev in zip(pairs, evs):
            smooth = b1.Q_inv.apply(ev) if b1.Q_inv is not None else 0.0
            q = inverse_resolvent(
                b1.P_res, b1.sigma,
                ev + b1.sigma * (b1.L.apply(2.0 * p - ey) - smooth),
            )
            us.append(ev + th * (q - ev))
        pull2 = np.zeros_like(u0)
        for (_, b2), u in zip(pairs, us):
            pull2 = pull2 + b2.L.adjoint(u)
        y_next = np.asarray(B.resolvent(tau, u0 - tau * (pull2 + D.apply(u0))),
                            dtype=float)
        v_next = []
        for (_, b2), u in zip(pairs, us):
            smooth = b2.Q_inv.apply(u) if b2.Q_inv is not None else 0.0
            v_next.append(inverse_resolvent(
                b2.P_res, b2.sigma,
                u + b2.sigma * (b2.L.apply(2.0 * y_next - u0) - smooth),
            ))
        return ProductVector([y_next] + v_next), None

    obj = None if objective_fn is None else (lambda pv: objective_fn(pv[0]))
    qual = None if psnr_fn is None else (lambda pv: psnr_fn(pv[0]))
    return _run_product_iteration(step, init, schedule, config, factor,
                                  objective_of=obj, psnr_of=qual)


def _dr_resolvents(prob):
    """The two block resolvents whose composition drives the dr-type scheme."""
    pairs = prob.block_pairs()
    tau = prob.tau
    A = prob.A_res

    def weighted_pull(vs):
        out = 0.0
        for (b1, _), v in zip(pairs, vs):
            out = out + b1.L.adjoint(v)
        return 0.5 * tau * out

    def res_first(pv):
        # resolvent carrying A and the dual operators P_i
        x = pv[0]
        vs = [pv[1 + i] for i in range(len(pairs))]
        p1 = np.asarray(A.resolvent(tau, x - weighted_pull(vs)), dtype=float)
        outs = []
        for (b1, _), v in zip(pairs, vs):
            outs.append(inverse_resolvent(
                b1.P_res, b1.sigma,
                v + 0.5 * b1.sigma * b1.L.apply(2.0 * p1 - x),
            ))
        return ProductVector([p1] + outs)

    def res_second(pv):
        # resolvent carrying the skew coupling and the smoothing operators Q_i
        x = pv[0]
        vs = [pv[1 + i] for i in range(len(pairs))]
        z1 = x - weighted_pull(vs)
        outs = []
        for (b1, _), v in zip(pairs, vs):
            arg = v + 0.5 * b1.sigma * b1.L.apply(2.0 * z1 - x)
            if b1.Q_res is not None:
                outs.append(inverse_resolvent(b1.Q_res, b1.sigma, arg))
            else:
                outs.append(arg)
        return ProductVector([z1] + outs)

    return res_first, res_second


def pd_dr_solve(prob, init, schedule, config, objective_fn=None, psnr_fn=None):
    """Douglas-Rachford-type primal-dual iteration.

    Runs the Douglas-Rachford recursion in the product space under the
    coupling metric, with the first block resolvent carrying (A, P_i) and
    the second carrying the skew term and the smoothing operators Q_i:

        y_n = JB(e_n x_n),  z_n = JA(2 y_n - e_n x_n)
        u_n = e_n x_n + theta_n (z_n - y_n)
        x_{n+1} = (2 JA - Id)(2 JB - Id) u_n     (blockwise in the product)

    requiring tau * sum_i sigma_i ||L_i||^2 < 4 and theta_n < 2.  The
    objective/psnr callbacks are evaluated at the primal block of the
    first-resolvent shadow.  Returns (x, trace, shadow) with shadow =
    JB(x), whose primal block approaches a primal solution.
    """
    _check_init(prob, init)
    rho, report = build_product_metric(prob, scheme="dr")
    if not report.ok:
        raise ValueError("; ".join(report.failures))
    res_first, res_second = _dr_resolvents(prob)

    def scale(pv, c):
        return ProductVector([c * b for b in pv.blocks])

    def combine(a, b, th):
        return ProductVector([x + th * (y - x) for x, y in zip(a.blocks, b.blocks)])

    def step(n, e, th, pv):
        ex = scale(pv, e)
        y = res_first(ex)
        z = res_second(ProductVector(
            [2.0 * a - b for a, b in zip(y.blocks, ex.blocks)]))
        u = ProductVector([a + th * (zz - yy) for a, yy, zz in
                           zip(ex.blocks, y.blocks, z.blocks)])
        ry = res_first(u)
        w = ProductVector([2.0 * a - b for a, b in zip(ry.blocks, u.blocks)])
        rz = res_second(w)
        nxt = ProductVector([2.0 * a - b for a, b in zip(rz.blocks, w.blocks)])
        return nxt, (z - y).norm()

    obj = None if objective_fn is None else (lambda pv: objective_fn(res_first(pv)[0]))
    qual = None if psnr_fn is None else (lambda pv: psnr_fn(res_first(pv)[0]))
    final, trace = _run_product_iteration(step, init, schedule, config, 0.5,
                                          objective_of=obj, psnr_of=qual)
    return final, trace, res_first(final)


@dataclass(frozen=True)
class ProxDualBlock:
    """Dual block in function form: penalty g reached through L.

    l_conj_grad is the gradient of the smoother's conjugate (fb-type,
    forward-evaluated); l is the smoothing function itself (dr-type).
    Omitting both means no smoothing.  strong_convexity is the asserted
    modulus of the smoother backing l_conj_grad.
    """

    L: object
    g: Proximable
    sigma: float
    l_conj_grad: CocoerciveOperator = None
    l: Proximable = None
    strong_convexity: float = math.inf


def _fb_block(pb):
    return DualBlock(L=pb.L, P_res=subdifferential(pb.g), sigma=pb.sigma,
                     Q_inv=pb.l_conj_grad if pb.l_conj_grad is not None
                     else zero_cocoercive(),
                     strong_monotonicity=pb.strong_convexity)


def _dr_block(pb):
    q = None if pb.l is None else subdifferential(pb.l)
    return DualBlock(L=pb.L, P_res=subdifferential(pb.g), sigma=pb.sigma,
                     Q_res=q)


def _normalize_prox_blocks(blocks, conv):
    out = []
    for blk in blocks:
        if isinstance(blk, ProxDualBlock):
            out.append(conv(blk))
        else:
            b1, b2 = blk
            out.append((conv(b1), conv(b2)))
    return tuple(out)


def _auto_objective(f, blocks):
    if f.value is None:
        return None
    firsts = [b if isinstance(b, ProxDualBlock) else b[0] for b in blocks]
    if any(b.g.value is None or b.l is not None or b.l_conj_grad is not None
           for b in firsts):
        return None

    def objective(x):
        total = f.value(x)
        for b in firsts:
            total += b.g.value(b.L.apply(x))
        return total

    return objective


def pd_fb_prox_solve(f, h_grad, blocks, tau, init, schedule, config,
                     f2=None, h2_grad=None, objective_fn=None, psnr_fn=None):
    """Prox form of pd_fb_solve for min f(x) + sum_i g_i(L_i x) + h(x).

    f (and the optional second-system f2) are Proximable; h_grad/h2_grad
    are the smooth gradients (None = absent).  blocks holds ProxDualBlock
    entries, or pairs of them when the systems differ.  When every piece
    carries a value and there is no smooth or smoothing term, the
    objective f(x) + sum g_i(L_i x) is logged automatically.
    """
    b2res = None if f2 is None else subdifferential(f2)
    prob = PrimalDualProblem(
        A_res=subdifferential(f), tau=tau,
        blocks=_normalize_prox_blocks(blocks, _fb_block),
        C=h_grad, B_res=b2res, D=h2_grad,
    )
    if objective_fn is None and h_grad is None and f2 is None and h2_grad is None:
        objective_fn = _auto_objective(f, blocks)
    return pd_fb_solve(prob, init, schedule, config,
                       objective_fn=objective_fn, psnr_fn=psnr_fn)


def pd_dr_prox_solve(f, blocks, tau, init, schedule, config,
                     objective_fn=None, psnr_fn=None):
    """Prox form of pd_dr_solve for min f(x) + sum_i (g_i smoothed) (L_i x).

    Each block's smoothing function l enters through the prox of its
    conjugate; omitting l leaves g_i unsmoothed.  Returns
    (x, trace, shadow) like pd_dr_solve.
    """
    prob = PrimalDualProblem(
        A_res=subdifferential(f), tau=tau,
        blocks=_normalize_prox_blocks(blocks, _dr_block),
    )
    if objective_fn is None:
        objective_fn = _auto_objective(f, blocks)
    return pd_dr_solve(prob, init, schedule, config,
                       objective_fn=objective_fn, psnr_fn=psnr_fn)
