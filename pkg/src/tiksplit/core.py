"""Shared vector math, damping schedules, solver configuration and tracing.

Every iterative scheme in this package is driven by a pair of scalar
sequences: a damping factor e(n) that pulls the iterate toward the origin
(and thereby selects the minimum-norm solution) and a relaxation weight
theta(n).  This module owns those schedules, the run configuration, and the
trace records the solvers emit.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np


def as_vector(x):
    """Coerce ``x`` to a finite 1-D float64 array, rejecting anything else."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ValueError("expected a 1-D vector, got shape %s" % (v.shape,))
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


def axpy(a, x, y):
    """Return ``a*x + y``.  Dimensions must agree."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("dimension mismatch in axpy: %s vs %s" % (x.shape, y.shape))
    return a * x + y


def norm(x):
    """Euclidean norm of a vector."""
    return float(np.linalg.norm(np.asarray(x, dtype=float)))


class ProductVector:
    """Point in a finite product of real spaces, stored block by block."""

    def __init__(self, blocks):
        self.blocks = tuple(as_vector(b) for b in blocks)
        if not self.blocks:
            raise ValueError("ProductVector needs at least one block")

    def __len__(self):
        return len(self.blocks)

    def __getitem__(self, i):
        return self.blocks[i]

    def __sub__(self, other):
        if len(other) != len(self) or any(
            a.shape != b.shape for a, b in zip(self.blocks, other.blocks)
        ):
            raise ValueError("mismatched product-space shapes")
        return ProductVector([a - b for a, b in zip(self.blocks, other.blocks)])

    def norm(self):
        return math.sqrt(sum(float(b @ b) for b in self.blocks))

    def copy(self):
        return ProductVector([b.copy() for b in self.blocks])


@dataclass(frozen=True)
class TikhonovSchedule:
    """Damping sequence e(n) and relaxation sequence theta(n), n >= 1.

    Required behaviour of the sequences (the solvers check the pointwise
    ranges for every n they will visit; the asymptotic parts cannot be
    decided from finitely many samples and remain the caller's obligation):

    * 0 < e(n) < 1 for all n, e(n) -> 1, sum of (1 - e(n)) diverges, and
      the increments |e(n) - e(n-1)| are summable;
    * 0 < theta(n) <= theta_upper_bound, bounded away from the interval
      endpoints, with summable increments.

    ``theta_upper_bound`` is the cap the target algorithm puts on theta(n),
    e.g. 1.0 for the basic damped fixed-point schemes and 2.0 for the
    Douglas-Rachford family.
    """

    e: object
    theta: object
    theta_upper_bound: float = 1.0

    def check_range(self, n_max, theta_factor=None):
        """Reject the schedule if any n in 1..n_max leaves the valid ranges.

        ``theta_factor`` is the algorithm's averagedness factor: when given,
        theta_factor * theta(n) must stay strictly below 1.  Solvers call
        this before iterating, so a bad schedule never runs.
        """
        for n in range(1, n_max + 1):
            en = float(self.e(n))
            if not 0.0 < en < 1.0:
                raise ValueError(
                    "damping e(%d)=%g violates 0 < e_n < 1" % (n, en)
                )
            tn = float(self.theta(n))
            if not 0.0 < tn <= self.theta_upper_bound:
                raise ValueError(
                    "relaxation theta(%d)=%g violates 0 < theta_n <= %g"
                    % (n, tn, self.theta_upper_bound)
                )
            if theta_factor is not None and not theta_factor * tn < 1.0:
                raise ValueError(
                    "relaxation theta(%d)=%g violates factor*theta_n < 1 "
                    "(factor=%g, factor*theta_n=%g)"
                    % (n, tn, theta_factor, theta_factor * tn)
                )

    def variation(self, n_max):
        """Accumulated increments (sum |e(n)-e(n-1)|, sum |theta(n)-theta(n-1)|).

        Diagnostic only: summability cannot be certified from a prefix.
        """
        bv_e = 0.0
        bv_t = 0.0
        for n in range(2, n_max + 1):
            bv_e += abs(float(self.e(n)) - float(self.e(n - 1)))
            bv_t += abs(float(self.theta(n)) - float(self.theta(n - 1)))
        return bv_e, bv_t


def default_schedule(theta_value=0.9, theta_upper_bound=1.0):
    """Reference schedule e(n) = 1 - 1/(n+1) with a constant relaxation.

    The damping satisfies every required condition: it stays in (0, 1),
    tends to 1, its complement 1/(n+1) has divergent sum, and its increments
    telescope to a finite total.  A constant theta trivially has summable
    increments, so only the range 0 < theta_value <= theta_upper_bound is
    checked here.
    """
    if not 0.0 < theta_value <= theta_upper_bound:
        raise ValueError(
            "theta_value=%g violates 0 < theta_value <= theta_upper_bound=%g"
            % (theta_value, theta_upper_bound)
        )
    return TikhonovSchedule(
        e=lambda n: 1.0 - 1.0 / (n + 1.0),
        theta=lambda n: theta_value,
        theta_upper_bound=theta_upper_bound,
    )


@dataclass(frozen=True)
class SolverConfig:
    """Run limits shared by all solvers.

    residual_tol = 0 effectively disables early stopping (only an exactly
    stationary iterate stops sooner); trace_every controls how often a trace
    row is recorded, with the final iteration always recorded.
    """

    max_iters: int = 1000
    residual_tol: float = 0.0
    trace_every: int = 1

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1, got %d" % self.max_iters)
        if not self.residual_tol >= 0.0:
            raise ValueError("residual_tol must be >= 0, got %g" % self.residual_tol)
        if self.trace_every < 1:
            raise ValueError("trace_every must be >= 1, got %d" % self.trace_every)


@dataclass
class TraceRow:
    n: int
    residual: float
    objective: float = None
    psnr: float = None
    elapsed_ms: float = 0.0
    shadow_gap: float = None
    fix_gaps: tuple = None


@dataclass
class SolveTrace:
    """Per-iteration records of a single solve.

    Built once by the solver that owns the run and treated as read-only
    afterwards.  ``converged`` is True exactly when the run stopped because
    the residual fell to residual_tol or below.
    """

    rows: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0

    def append(self, row):
        if self.rows and row.n <= self.rows[-1].n:
            raise ValueError("trace iteration indices must increase")
        if not (math.isfinite(row.residual) and row.residual >= 0.0):
            raise ValueError("trace residual must be finite and >= 0")
        self.rows.append(row)

    def final(self):
        if not self.rows:
            raise ValueError("empty trace")
        return self.rows[-1]

    def residuals(self):
        return [r.residual for r in self.rows]


def fix_gap_probe(F):
    """Distance-to-fixedness probe ||y - F(y)||, for trace-time logging."""

    def gap(y):
        return norm(np.asarray(F(y), dtype=float) - y)

    return gap


def run_damped_iteration(step, y1, schedule, config, theta_factor=None,
                         objective_fn=None, psnr_fn=None, fix_gap_fns=None):
    """Drive a damped fixed-point recursion with tracing and stopping.

    ``step(n, e_n, theta_n, y)`` returns the next iterate, optionally paired
    with a shadow-gap value to record, i.e. either ``y_next`` or
    ``(y_next, gap)``.  The residual is the Euclidean distance between
    consecutive iterates.  ``fix_gap_fns`` are extra per-map distance
    probes (e.g. ||y - S(y)||) evaluated only at traced iterations, since
    they cost additional map applications.  Returns (final iterate,
    SolveTrace).
    """
    schedule.check_range(config.max_iters, theta_factor=theta_factor)
    y = as_vector(y1).copy()
    trace = SolveTrace()
    t0 = time.perf_counter()
    for n in range(1, config.max_iters + 1):
        out = step(n, float(schedule.e(n)), float(schedule.theta(n)), y)
        if isinstance(out, tuple):
            y_next, gap = out
        else:
            y_next, gap = out, None
        if not np.all(np.isfinite(y_next)):
            raise ValueError("iteration produced non-finite values at n=%d" % n)
        res = norm(y_next - y)
        y = y_next
        trace.iterations = n
        stop = res <= config.residual_tol or n == config.max_iters
        if stop or n % config.trace_every == 0:
            trace.append(TraceRow(
                n=n,
                residual=res,
                objective=None if objective_fn is None else float(objective_fn(y)),
                psnr=None if psnr_fn is None else float(psnr_fn(y)),
                elapsed_ms=(time.perf_counter() - t0) * 1000.0,
                shadow_gap=gap,
                fix_gaps=None if fix_gap_fns is None
                else tuple(float(fn(y)) for fn in fix_gap_fns),
            ))
        if res <= config.residual_tol:
            trace.converged = True
            break
    return y, trace
