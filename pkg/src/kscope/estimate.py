"""Edge-corrected estimation of generalized K-functions.

Three estimators of ``lam^2 K_B(r)`` are provided, all built from the
ordered pairs of a pattern:

* ``ht``: each pair is weighted by the reciprocal translation overlap
  ``1 / |(W - X_i) intersect (W - X_j)|``, which removes edge bias
  exactly on any window where the overlap is positive.
* ``naive``: pairs anchored at points of the evaluation window W are
  weighted ``1 / |W|``; the second point may come from a plus-sampled
  extended window, which again gives an unbiased estimator.
* ``border``: both points must lie in W, weight ``1 / |W|``; negatively
  biased but always available.

The module also estimates the intensity, the second factorial intensity,
the asymptotic variance of the scaled point count, and builds the scaled
comparison process used by the goodness-of-fit statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import (
    BodyShape,
    Box,
    Disk,
    ObservationWindow,
    StructuringBody,
    circumradius,
    unit_ball_volume,
)
from .pattern import PointPattern, pair_arrays

__all__ = [
    "EstimatorKind",
    "KernelKind",
    "KEstimate",
    "ScaledDelta",
    "k_hat",
    "eval_k",
    "lambda_hat",
    "lambda2_hat",
    "sigma2_hat",
    "scaled_delta",
    "restrict_pattern",
]


class EstimatorKind(str, Enum):
    HT = "ht"
    NAIVE = "naive"
    BORDER = "border"


class KernelKind(str, Enum):
    INDICATOR = "indicator"
    TRIANGULAR = "triangular"


@dataclass(frozen=True)
class KEstimate:
    """Empirical estimate of ``lam^2 K_B`` as a right-continuous step function.

    Attributes
    ----------
    body : StructuringBody
    kind : EstimatorKind
    r_max : float
        Largest radius the estimate is valid for.
    window_volume : float
        Volume of the evaluation window.
    jump_radii : ndarray
        Strictly increasing gauge distances in (0, r_max] at which the
        step function jumps.
    jump_values : ndarray
        Value attained at (and right of) each jump radius.
    """

    body: StructuringBody
    kind: EstimatorKind
    r_max: float
    window_volume: float
    jump_radii: np.ndarray = field(repr=False)
    jump_values: np.ndarray = field(repr=False)

    def eval(self, r):
        """Evaluate at radii r (scalar or array); requires 0 <= r <= r_max."""
        r = np.asarray(r, dtype=float)
        single = r.ndim == 0
        rr = np.atleast_1d(r)
        if rr.size and (rr.min() < 0.0 or rr.max() > self.r_max * (1.0 + 1e-12)):
            raise ValueError(
                f"evaluation radius outside [0, {self.r_max}]"
            )
        idx = np.searchsorted(self.jump_radii, np.minimum(rr, self.r_max), side="right")
        padded = np.concatenate(([0.0], self.jump_values))
        out = padded[idx]
        return float(out[0]) if single else out

    def to_csv(self, path) -> None:
        """Write the step function as CSV rows (r, value).

        One row per jump, plus anchor rows at r = 0 and r = r_max.
        """
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("r,value\n")
            fh.write("0,0\n")
            for r, v in zip(self.jump_radii, self.jump_values):
                fh.write("%.17g,%.17g\n" % (r, v))
            if self.jump_radii.size == 0 or self.jump_radii[-1] < self.r_max:
                last = self.jump_values[-1] if self.jump_values.size else 0.0
                fh.write("%.17g,%.17g\n" % (self.r_max, last))


def restrict_pattern(p: PointPattern, window: ObservationWindow) -> PointPattern:
    """Pattern of the points of p that fall in the given (smaller) window."""
    keep = window.contains(p.points) if len(p) else np.ones(0, dtype=bool)
    return PointPattern(p.points[keep], window)


def _require_guard(r_max: float, body: StructuringBody, window: ObservationWindow):
    rho = window.inball_radius()
    reach = r_max * circumradius(body)
    if not reach < rho:
        raise ValueError(
            f"query radius reaches {reach:.6g} but the window inradius is "
            f"{rho:.6g}; r_max * circumradius(B) < inball_radius(W) is required"
        )


def _check_plus_sampling(
    ext: ObservationWindow, w: ObservationWindow, body: StructuringBody, r_max: float
):
    """Verify that ext contains ``W dilated by r_max * B``."""
    axis_margin = r_max * body.radius_scale
    w_lo, w_hi = w.bounding_box()
    tol = 1e-9 * max(1.0, float(np.max(np.abs(w_hi - w_lo))))
    if isinstance(ext, Box):
        ok = np.all(ext.lower <= w_lo - axis_margin + tol) and np.all(
            ext.upper >= w_hi + axis_margin - tol
        )
    elif isinstance(ext, Disk):
        eucl_margin = r_max * circumradius(body)
        if isinstance(w, Disk):
            center_gap = float(np.linalg.norm(w.center - ext.center))
            reach = center_gap + w.radius + eucl_margin
        else:
            corners = np.array(
                [[w_lo[0], w_lo[1]], [w_lo[0], w_hi[1]], [w_hi[0], w_lo[1]], [w_hi[0], w_hi[1]]]
            )
            reach = float(
                np.max(np.linalg.norm(corners - ext.center, axis=1)) + eucl_margin
            )
        ok = reach <= ext.radius + tol
    else:
        raise TypeError(f"unsupported window type {type(ext).__name__}")
    if not ok:
        raise ValueError(
            "the pattern window does not contain the evaluation window "
            f"dilated by r_max * B (needs margin {axis_margin:.6g})"
        )


def _step_from_pairs(dists, weights, body, kind, r_max, window_volume) -> KEstimate:
    """Accumulate pair contributions into a sorted step function."""
    order = np.argsort(dists, kind="stable")
    d_sorted = dists[order]
    cum = np.cumsum(weights[order])
    radii = np.unique(d_sorted)
    # value at each unique radius is the cumulative sum through its last tie
    idx_last = np.searchsorted(d_sorted, radii, side="right") - 1
    values = cum[idx_last] if cum.size else cum
    return KEstimate(
        body=body,
        kind=kind,
        r_max=float(r_max),
        window_volume=float(window_volume),
        jump_radii=radii,
        jump_values=values,
    )


def k_hat(
    p: PointPattern,
    body: StructuringBody,
    r_max: float,
    kind: EstimatorKind | str = EstimatorKind.HT,
    window: ObservationWindow | None = None,
) -> KEstimate:
    """Estimate ``lam^2 K_B`` on [0, r_max] from a point pattern.

    Parameters
    ----------
    p : PointPattern
    body : StructuringBody
    r_max : float
        Positive; ``r_max * circumradius(B)`` must stay below the
        inradius of the evaluation window.
    kind : {'ht', 'naive', 'border'}
    window : ObservationWindow, optional
        Evaluation window for the naive estimator, whose pattern must be
        observed on an extended window containing ``window`` dilated by
        ``r_max * B``.  Must be omitted for the other estimators, which
        evaluate on the pattern's own window.

    Returns
    -------
    KEstimate
    """
    kind = EstimatorKind(kind)
    if not (r_max > 0) or not math.isfinite(r_max):
        raise ValueError("r_max must be a positive finite float")
    if body.dimension != p.dimension:
        raise ValueError("body dimension does not match pattern dimension")
    if kind is EstimatorKind.NAIVE:
        if window is None:
            raise ValueError("the naive estimator requires an evaluation window")
        _check_plus_sampling(p.window, window, body, r_max)
        eval_window = window
    else:
        if window is not None:
            raise ValueError(
                "an evaluation window is only accepted by the naive estimator"
            )
        eval_window = p.window
    _require_guard(r_max, body, eval_window)

    ii, jj, diffs, dists = pair_arrays(p.points, body, r_max)
    vol = eval_window.volume()
    if kind is EstimatorKind.HT:
        weights = 1.0 / eval_window.set_covariance(diffs) if dists.size else dists
    elif kind is EstimatorKind.NAIVE:
        anchored = eval_window.contains(p.points[ii]) if dists.size else np.ones(0, bool)
        dists = dists[anchored]
        weights = np.full(dists.shape, 1.0 / vol)
    else:
        inside = eval_window.contains(p.points)
        both = inside[ii] & inside[jj] if dists.size else np.ones(0, bool)
        dists = dists[both]
        weights = np.full(dists.shape, 1.0 / vol)
    return _step_from_pairs(dists, weights, body, kind, r_max, vol)


def eval_k(k: KEstimate, r):
    """Evaluate a K estimate at one or many radii in [0, r_max]."""
    return k.eval(r)


def lambda_hat(p: PointPattern) -> float:
    """Intensity estimate N(W) / |W|."""
    return len(p) / p.window.volume()


def lambda2_hat(p: PointPattern) -> float:
    """Unbiased estimate N(N - 1) / |W|^2 of the squared intensity."""
    n = len(p)
    return n * (n - 1) / p.window.volume() ** 2


_KERNEL_INTEGRAL = {
    KernelKind.INDICATOR: lambda d: unit_ball_volume(d),
    KernelKind.TRIANGULAR: lambda d: unit_ball_volume(d) / (d + 1),
}


def sigma2_hat(
    p: PointPattern,
    kernel: KernelKind | str = KernelKind.INDICATOR,
    bandwidth: float | None = None,
) -> float:
    """Kernel estimate of the asymptotic variance of the scaled count.

    The estimator adds the intensity estimate to an edge-corrected sum of
    kernel weights over close pairs and subtracts the kernel mass that a
    purely random pattern would contribute:

    ``lambda_hat + sum_pairs w((X_j - X_i) / (b c)) / |(W-X_i) cap (W-X_j)|
    - lambda2_hat (b c)^d integral(w)``

    with c = |W|^(1/d) and bandwidth b (default ``c**-0.75``).  Kernels
    are supported on the Euclidean unit ball: ``indicator`` is its
    indicator, ``triangular`` is ``(1 - |x|)`` on the ball.

    The result can be nonpositive at small sample sizes; callers decide
    how to handle that (see the test statistics).
    """
    kernel = KernelKind(kernel)
    w = p.window
    d = p.dimension
    c_n = w.volume() ** (1.0 / d)
    b = c_n**-0.75 if bandwidth is None else float(bandwidth)
    if not (b > 0) or not math.isfinite(b):
        raise ValueError("bandwidth must be a positive finite float")
    support = b * c_n
    euclid = StructuringBody(d, BodyShape.L2_BALL, 1.0)
    if not support < w.inball_radius():
        raise ValueError(
            f"kernel support radius {support:.6g} must stay below the window "
            f"inradius {w.inball_radius():.6g}; decrease the bandwidth"
        )
    ii, jj, diffs, dists = pair_arrays(p.points, euclid, support)
    if dists.size:
        if kernel is KernelKind.INDICATOR:
            kvals = np.ones(dists.shape)
        else:
            kvals = 1.0 - dists / support
        pair_term = float(np.sum(kvals / w.set_covariance(diffs)))
    else:
        pair_term = 0.0
    mass = _KERNEL_INTEGRAL[kernel](d)
    return lambda_hat(p) + pair_term - lambda2_hat(p) * support**d * mass


@dataclass(frozen=True)
class ScaledDelta:
    """Scaled difference between an empirical and a hypothesized K-function.

    Represents ``r -> |W|^(1/2 - alpha) (khat(c^alpha r) - lam0^2
    K0(c^alpha r))`` on [0, R] with c = |W|^(1/d).  The empirical part is
    a step function; jump locations (in scaled units) and the running
    values are exposed for the piecewise-exact integrators in the test
    module.

    ``theory_power_beta`` is set when the hypothesized curve is exactly
    ``beta * r^d`` in scaled units (Poisson null), enabling closed-form
    piecewise integration.
    """

    alpha: float
    R: float
    null_lambda: float
    null_k: object
    body: StructuringBody
    kind: EstimatorKind
    window_volume: float
    c_alpha: float
    scale: float
    jump_rs: np.ndarray = field(repr=False)
    step_values: np.ndarray = field(repr=False)
    theory_power_beta: float | None = None

    @property
    def dimension(self) -> int:
        return self.body.dimension

    def empirical(self, r):
        """Scaled empirical step function at scaled radii r."""
        r = np.asarray(r, dtype=float)
        single = r.ndim == 0
        rr = np.atleast_1d(r)
        idx = np.searchsorted(self.jump_rs, rr, side="right")
        padded = np.concatenate(([0.0], self.step_values))
        out = padded[idx]
        return float(out[0]) if single else out

    def theoretical(self, r):
        """Scaled hypothesized curve at scaled radii r."""
        r = np.asarray(r, dtype=float)
        if self.theory_power_beta is not None:
            out = self.theory_power_beta * r**self.dimension
        else:
            out = self.scale * self.null_lambda**2 * np.asarray(
                self.null_k(self.c_alpha * r), dtype=float
            )
        return float(out) if np.isscalar(out) or np.ndim(out) == 0 else out

    def eval(self, r):
        """Scaled difference at scaled radii r in [0, R]."""
        r = np.asarray(r, dtype=float)
        single = r.ndim == 0
        rr = np.atleast_1d(r)
        if rr.size and (rr.min() < 0 or rr.max() > self.R * (1 + 1e-12)):
            raise ValueError(f"evaluation radius outside [0, {self.R}]")
        out = self.empirical(rr) - np.atleast_1d(self.theoretical(rr))
        return float(out[0]) if single else out


def scaled_delta(
    p: PointPattern,
    body: StructuringBody,
    null_lambda: float,
    null_k,
    alpha: float,
    R: float,
    kind: EstimatorKind | str = EstimatorKind.HT,
    window: ObservationWindow | None = None,
) -> ScaledDelta:
    """Build the scaled comparison process for a hypothesized K-function.

    Parameters
    ----------
    p : PointPattern
    body : StructuringBody
    null_lambda : float
        Hypothesized intensity, positive.
    null_k : callable
        Hypothesized K-function of the absolute radius; a
        ``KFunction`` with ``power_coeff`` set unlocks closed-form
        integration downstream.
    alpha : float
        Scaling exponent in (0, 1/2].
    R : float
        Upper end of the scaled radius interval, positive.
    kind, window
        Passed through to :func:`k_hat`.

    Notes
    -----
    Requires ``c^alpha R circumradius(B) <= inball_radius(W) / 2`` so the
    largest query stays well inside the window; this is the regime where
    the edge-correction inequalities keep all remainder terms small.
    """
    if not (0.0 < alpha <= 0.5):
        raise ValueError("alpha must lie in (0, 1/2]")
    if not (R > 0) or not math.isfinite(R):
        raise ValueError("R must be a positive finite float")
    if not (null_lambda > 0) or not math.isfinite(null_lambda):
        raise ValueError("null_lambda must be a positive finite float")
    eval_window = window if EstimatorKind(kind) is EstimatorKind.NAIVE else p.window
    if eval_window is None:
        raise ValueError("the naive estimator requires an evaluation window")
    vol = eval_window.volume()
    d = body.dimension
    c_n = vol ** (1.0 / d)
    c_alpha = c_n**alpha
    u_max = c_alpha * R
    rho = eval_window.inball_radius()
    if not (u_max * circumradius(body) <= rho / 2.0):
        raise ValueError(
            f"scaled query radius reaches {u_max * circumradius(body):.6g} but "
            f"only half the window inradius ({rho / 2.0:.6g}) is allowed; "
            "shrink R or alpha, or enlarge the window"
        )
    khat = k_hat(p, body, u_max, kind=kind, window=window)
    scale = vol ** (0.5 - alpha)
    jump_rs = np.minimum(khat.jump_radii / c_alpha, R)
    step_values = scale * khat.jump_values
    beta = None
    pc = getattr(null_k, "power_coeff", None)
    if pc is not None:
        beta = scale * null_lambda**2 * pc * vol**alpha
    return ScaledDelta(
        alpha=float(alpha),
        R=float(R),
        null_lambda=float(null_lambda),
        null_k=null_k,
        body=body,
        kind=EstimatorKind(kind),
        window_volume=vol,
        c_alpha=c_alpha,
        scale=scale,
        jump_rs=jump_rs,
        step_values=step_values,
        theory_power_beta=beta,
    )
