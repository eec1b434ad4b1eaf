"""Strongly convergent damped iterations for common fixed points.

The central scheme alternates two nonexpansive maps S and T around a
damped evaluation point:

    y_{n+1} = S((1 - theta_n) * e_n * y_n + theta_n * T(e_n * y_n))

Under the schedule conditions documented in ``core.TikhonovSchedule`` the
iterates converge in norm to the projection of the origin onto the
intersection of the fixed-point sets of S and T, i.e. to the minimum-norm
common fixed point.  Re-centering around another anchor point is provided
as a wrapper.
"""

import numpy as np

from .core import as_vector, fix_gap_probe, run_damped_iteration


def tikhonov_normal_s(S, T, y1, schedule, config, objective_fn=None, psnr_fn=None):
    """Damped two-map iteration converging to the minimum-norm common fixed point.

    Parameters
    ----------
    S, T : callables
        Nonexpansive maps on the same space.  Their fixed-point sets must
        intersect for convergence; with an empty intersection the run still
        executes and returns converged=False.
    y1 : array_like
        Starting point.
    schedule : TikhonovSchedule
        Damping/relaxation sequences.  theta must stay strictly below 1
        (checked pointwise up to config.max_iters before iterating).
    config : SolverConfig
    objective_fn, psnr_fn : callables, optional
        Evaluated at traced iterates and recorded in the trace rows.

    Returns
    -------
    (y, trace) : final iterate and SolveTrace.
    """

    def step(n, e, th, y):
        z = e * y
        t = np.asarray(T(z), dtype=float)
        return np.asarray(S((1.0 - th) * z + th * t), dtype=float)

    return run_damped_iteration(step, y1, schedule, config, theta_factor=1.0,
                                objective_fn=objective_fn, psnr_fn=psnr_fn,
                                fix_gap_fns=(fix_gap_probe(S), fix_gap_probe(T)))


def tikhonov_averaged(R1, R2, alpha1, y1, schedule, config,
                      objective_fn=None, psnr_fn=None):
    """Damped iteration y_{n+1} = R2(e_n y_n + theta_n (R1(e_n y_n) - e_n y_n)).

    R1 must be alpha1-averaged; the relaxation must keep
    alpha1 * theta_n strictly inside (0, 1).  Converges to the minimum-norm
    point of Fix(R1) intersected with Fix(R2).
    """
    if not 0.0 < alpha1 <= 1.0:
        raise ValueError("alpha1 must lie in (0, 1], got %g" % alpha1)

    def step(n, e, th, y):
        z = e * y
        r = np.asarray(R1(z), dtype=float)
        return np.asarray(R2(z + th * (r - z)), dtype=float)

    return run_damped_iteration(step, y1, schedule, config, theta_factor=alpha1,
                                objective_fn=objective_fn, psnr_fn=psnr_fn,
                                fix_gap_fns=(fix_gap_probe(R1), fix_gap_probe(R2)))


def mann_tikhonov_baseline(S, y1, schedule, config, objective_fn=None, psnr_fn=None):
    """Single-map damped baseline x_{n+1} = e_n x_n + theta_n (S(e_n x_n) - e_n x_n).

    theta_n may reach 1 here (full step toward S); the schedule cap is the
    only relaxation constraint.  Converges to the minimum-norm fixed point
    of S and serves as the comparison baseline for the two-map schemes.
    """

    def step(n, e, th, y):
        z = e * y
        s = np.asarray(S(z), dtype=float)
        return z + th * (s - z)

    return run_damped_iteration(step, y1, schedule, config, theta_factor=None,
                                objective_fn=objective_fn, psnr_fn=psnr_fn,
                                fix_gap_fns=(fix_gap_probe(S),))


def anchored_map(T, anchor):
    """Conjugate a map by the translation x -> x - anchor.

    Running any solver here on the returned map works in shifted
    coordinates, so the minimum-norm selection becomes a
    closest-to-``anchor`` selection.
    """
    a = as_vector(anchor)

    def apply(x):
        return np.asarray(T(np.asarray(x, dtype=float) + a), dtype=float) - a

    return apply


def tikhonov_normal_s_anchored(S, T, y1, schedule, config, anchor,
                               objective_fn=None, psnr_fn=None):
    """Run tikhonov_normal_s re-centered so the limit is proj onto the
    common fixed-point set closest to ``anchor`` instead of the origin."""
    a = as_vector(anchor)
    obj = None if objective_fn is None else (lambda z: objective_fn(z + a))
    qual = None if psnr_fn is None else (lambda z: psnr_fn(z + a))
    y, trace = tikhonov_normal_s(anchored_map(S, a), anchored_map(T, a),
                                 as_vector(y1) - a, schedule, config,
                                 objective_fn=obj, psnr_fn=qual)
    return y + a, trace
