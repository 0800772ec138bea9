"""Closed-form solvers for divergence-constrained instance reweighting.

Each solver minimizes ``sum_i w_i L_i`` over the probability simplex subject
to a divergence ball ``D(w, u) <= delta`` around the uniform distribution
``u``, parameterized by the Lagrange multiplier (``lam`` or ``mu``) instead
of the radius.  The radius a multiplier implies is recoverable through
:func:`implied_radius`, and :func:`oracle_weights` is an independent
brute-force solver of the radius-parameterized problem used for
verification.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .errors import (
    DegenerateBatchError,
    InfeasibleHyperparameterError,
    NumericRangeError,
    SolverFailureError,
)

KL = "kl"
REVERSE_KL = "reverse_kl"
ALPHA = "alpha"
GENERIC_F = "generic_f"
BREGMAN = "bregman"

_FAMILIES = (KL, REVERSE_KL, ALPHA, GENERIC_F, BREGMAN)

SIMPLEX_SUM_TOL = 1e-9


def validate_losses(losses):
    """Check a per-example loss vector (finite, strictly positive) and return it."""
    arr = np.asarray(losses, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("losses must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("losses must be finite")
    if np.any(arr <= 0.0):
        raise ValueError("losses must be strictly positive")
    return arr


def validate_simplex(weights, tol=SIMPLEX_SUM_TOL):
    """Check nonnegativity and unit sum of a weight vector and return it."""
    arr = np.asarray(weights, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("weights must be a nonempty 1-D sequence")
    if np.any(arr < 0.0):
        raise ValueError("weights must be nonnegative")
    if abs(float(arr.sum()) - 1.0) > tol:
        raise ValueError(f"weights must sum to 1 within {tol}, got {arr.sum()!r}")
    return arr


@dataclass
class DivergenceSpec:
    """Which divergence ball constrains the weights, and its temperature.

    ``temperature`` is lam for KL / generic-f / Bregman and mu for
    reverse-KL and the alpha family.  ``alpha`` in {0, 1} normalizes to the
    dedicated reverse-KL / KL families.  ``generator`` (scalar convex f with
    f(1)=0) and ``link`` (gradient of the Bregman potential) are only needed
    when evaluating divergence values for the generic families.
    """

    family: str
    alpha: float | None = None
    temperature: float = 1.0
    generator: object = None
    link: object = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown divergence family {self.family!r}")
        if not (self.temperature > 0.0):
            raise ValueError("temperature must be positive")
        if self.family == ALPHA:
            if self.alpha is None or not math.isfinite(self.alpha):
                raise ValueError("alpha family requires a finite alpha")
            if self.alpha == 1.0:
                self.family = KL
            elif self.alpha == 0.0:
                self.family = REVERSE_KL


@dataclass
class KKTReport:
    """Multipliers certifying a solver output, plus the radius it realizes."""

    lam: float
    mu: float
    nu: np.ndarray
    implied_delta: float
    clamped: tuple = ()

    def to_record(self):
        """Flatten to a key/value record suitable for a CSV diagnostics row."""
        return {
            "lambda": float(self.lam),
            "mu": float(self.mu),
            "implied_delta": float(self.implied_delta),
            "n_clamped": len(self.clamped),
            "clamped": ";".join(str(i) for i in self.clamped),
            "nu": ";".join(repr(float(v)) for v in self.nu),
        }


def kl_weights(losses, lam):
    """Weights proportional to exp(-L_i / lam), the KL-ball solution.

    Computed with a max-shifted exponential so only mathematically
    degenerate inputs can leave the floating-point range.
    """
    arr = validate_losses(losses)
    if not (lam > 0.0):
        raise ValueError("lam must be positive")
    if arr.size == 1:
        return np.array([1.0])
    shifted = np.exp(-(arr - arr.min()) / lam)
    total = shifted.sum()
    if not np.isfinite(total) or total <= 0.0:
        span = float(arr.max() - arr.min())
        raise NumericRangeError(
            f"KL weights degenerate at lam={lam} with loss span {span}",
            lam=lam,
            loss_span=span,
        )
    return shifted / total


def reverse_kl_weights(losses, mu):
    """Weights proportional to 1 / (L_i + mu), the reverse-KL-ball solution."""
    arr = validate_losses(losses)
    shifted = arr + mu
    if np.any(shifted <= 0.0):
        min_admissible = float(-arr.min())
        raise InfeasibleHyperparameterError(
            f"mu={mu} makes L_i + mu <= 0; mu must exceed {min_admissible}",
            minimum_admissible=min_admissible,
        )
    if arr.size == 1:
        return np.array([1.0])
    inv = 1.0 / shifted
    return inv / inv.sum()


def alpha_weights(losses, alpha, mu):
    """Generalized-softmax weights [(1-alpha) L_i + mu]_+^{1/(alpha-1)}.

    alpha = 1 and alpha = 0 dispatch to :func:`kl_weights` and
    :func:`reverse_kl_weights`.  For alpha > 1 the positive-part clamp can
    zero out entries; if it zeroes the whole batch no distribution exists.
    """
    if not math.isfinite(alpha):
        raise ValueError("alpha must be finite")
    if alpha == 1.0:
        return kl_weights(losses, mu)
    if alpha == 0.0:
        return reverse_kl_weights(losses, mu)
    arr = validate_losses(losses)
    if not (mu > 0.0):
        raise ValueError("mu must be positive")
    if arr.size == 1:
        return np.array([1.0])
    base = (1.0 - alpha) * arr + mu
    expo = 1.0 / (alpha - 1.0)
    if alpha < 1.0:
        # losses > 0 and mu > 0 force base > 0 here
        if np.any(base <= 0.0):
            raise AssertionError("(1-alpha) L + mu <= 0 with alpha < 1; invalid input slipped through")
        scale = base.min()  # ratios >= 1, negative exponent keeps them <= 1
    else:
        base = np.maximum(base, 0.0)
        scale = base.max()  # ratios <= 1, positive exponent keeps them <= 1
        if scale <= 0.0:
            raise DegenerateBatchError(
                f"alpha={alpha}, mu={mu} clamps every weight to zero "
                f"(needs mu > {(alpha - 1.0) * arr.min()})"
            )
    pre = (base / scale) ** expo
    return pre / pre.sum()


def alpha_generator(alpha):
    """Scalar convex generator f of the alpha-divergence family (f(1) = 0)."""
    if alpha == 1.0:
        def f(t):
            t = np.asarray(t, dtype=np.float64)
            return np.where(t > 0.0, t * np.log(np.where(t > 0.0, t, 1.0)), 0.0)
        return f
    if alpha == 0.0:
        def f(t):
            t = np.asarray(t, dtype=np.float64)
            out = np.full(t.shape, np.inf)
            pos = t > 0.0
            out[pos] = -np.log(t[pos])
            return out
        return f

    def f(t):
        t = np.asarray(t, dtype=np.float64)
        coef = 1.0 / (alpha * (1.0 - alpha))
        if alpha > 0.0:
            return coef * (t - np.power(np.maximum(t, 0.0), alpha))
        out = np.full(t.shape, np.inf)
        pos = t > 0.0
        out[pos] = coef * (t[pos] - np.power(t[pos], alpha))
        return out

    return f


def alpha_fprime_inverse(alpha):
    """Inverse of the alpha-generator derivative, extended by its limits.

    Outside the range of f' the callable returns the limiting weight ratio:
    +inf where the stationarity condition would push the weight beyond every
    attainable value, 0 where the nonnegativity clamp activates (alpha > 1).
    This extension keeps the root-searched simplex sum monotone.
    """
    if alpha == 1.0:
        return lambda s: np.exp(np.asarray(s, dtype=np.float64) - 1.0)

    expo = 1.0 / (alpha - 1.0)

    def inv(s):
        s = np.atleast_1d(np.asarray(s, dtype=np.float64))
        base = (alpha - 1.0) * s
        if alpha > 1.0:
            return np.power(np.maximum(base, 0.0), expo)
        out = np.full(s.shape, np.inf)
        neg = s < 0.0
        out[neg] = np.power(base[neg], expo)
        return out

    return inv


def kl_fprime_inverse(s):
    """f'^{-1} for the KL generator t*log(t)."""
    return np.exp(np.asarray(s, dtype=np.float64) - 1.0)


def reverse_kl_fprime_inverse(s):
    """f'^{-1} for the reverse-KL generator -log(t), +inf outside the range of f'."""
    s = np.atleast_1d(np.asarray(s, dtype=np.float64))
    out = np.full(s.shape, np.inf)
    neg = s < 0.0
    out[neg] = -1.0 / s[neg]
    return out


def _clamped_sum(pre_fn, mu):
    pre = pre_fn(mu)
    return float(pre.sum()), pre


def _bracket_and_bisect(pre_fn, lo, hi, *, doublings=60, residual_tol=1e-12, max_bisect=300):
    """Find mu with sum(pre_fn(mu)) = 1 for a non-increasing clamped sum.

    Expands [lo, hi] geometrically until the target is bracketed, then
    bisects.  Raises SolverFailureError with the probe history when the
    expansion budget runs out.
    """
    history = []

    def probe(mu):
        s, _ = _clamped_sum(pre_fn, mu)
        history.append((mu, s))
        return s

    s_lo = probe(lo)
    step = max(abs(hi - lo), 1.0)
    tries = 0
    while s_lo < 1.0:
        tries += 1
        if tries > doublings:
            raise SolverFailureError(
                "could not bracket the normalization multiplier from below", history
            )
        lo -= step
        step *= 2.0
        s_lo = probe(lo)

    s_hi = probe(hi)
    step = max(abs(hi - lo), 1.0)
    tries = 0
    while s_hi > 1.0:
        tries += 1
        if tries > doublings:
            raise SolverFailureError(
                "could not bracket the normalization multiplier from above", history
            )
        hi += step
        step *= 2.0
        s_hi = probe(hi)

    best_mu, best_res, best_pre = None, np.inf, None
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        s_mid, pre = _clamped_sum(pre_fn, mid)
        res = abs(s_mid - 1.0)
        if res < best_res and np.isfinite(s_mid):
            best_mu, best_res, best_pre = mid, res, pre
        if res <= residual_tol:
            break
        if s_mid > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, abs(lo), abs(hi)):
            break
    if best_pre is None or best_res > 1e-9:
        history.append((best_mu, best_res))
        raise SolverFailureError(
            f"bisection stalled at simplex residual {best_res}", history
        )
    return best_mu, best_pre


def _zero_crossing(fn, lo_hint, hi_hint):
    """Largest argument where the monotone callable fn is still <= 0."""
    lo, hi = lo_hint, hi_hint
    step = max(abs(hi - lo), 1.0)
    for _ in range(200):
        if float(np.max(fn(lo))) <= 0.0:
            break
        lo -= step
        step *= 2.0
    step = max(abs(hi - lo), 1.0)
    for _ in range(200):
        if float(np.min(fn(hi))) > 0.0:
            break
        hi += step
        step *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(np.max(fn(mid))) <= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def _generator_from_fprime_inverse(f_prime_inverse, t):
    """Reconstruct f(t) from f'^{-1} via integration by parts.

    f(t) = t f'(t) - f'(1) - int_{f'(1)}^{f'(t)} f'^{-1}(y) dy, with f'
    recovered by monotone root finds on f'^{-1}.  Used only to report
    divergence values for caller-supplied generic generators.
    """

    def fprime_at(x):
        # largest y with f'^{-1}(y) <= x; valid inverse for monotone f'^{-1}
        return _zero_crossing(lambda y: np.asarray(f_prime_inverse(y), dtype=np.float64) - x, -1.0, 1.0)

    b1 = fprime_at(1.0)
    bt = fprime_at(t)
    if bt == b1:
        area = 0.0
    else:
        area, _ = integrate.quad(
            lambda y: float(np.asarray(f_prime_inverse(y), dtype=np.float64)), b1, bt, limit=200
        )
    return t * bt - b1 - area


def generic_fdiv_weights(f_prime_inverse, losses, lam, *, generator=None):
    """Theorem-style f-divergence weights via a 1-D root search on mu.

    ``f_prime_inverse`` must be the inverse of the derivative of a convex
    generator with f(1) = 0, monotone nondecreasing, returning +inf where
    the weight would exceed every attainable value (see
    :func:`alpha_fprime_inverse` for the contract).  When ``generator`` (the
    scalar f itself) is given it is used to evaluate the implied radius;
    otherwise f is reconstructed numerically from its inverse derivative.

    Returns ``(weights, KKTReport)``.
    """
    arr = validate_losses(losses)
    if not (lam > 0.0):
        raise ValueError("lam must be positive")
    n = arr.size

    def pre_fn(mu):
        s = (-arr - mu) / lam
        raw = np.atleast_1d(np.asarray(f_prime_inverse(s), dtype=np.float64))
        raw = np.where(np.isnan(raw), np.inf, raw)
        return np.maximum(raw, 0.0) / n

    span = float(arr.max())
    mu, pre = _bracket_and_bisect(pre_fn, -span - 10.0 * lam, span + 10.0 * lam)
    weights = pre / pre.sum()

    clamped = tuple(int(i) for i in np.flatnonzero(pre == 0.0))
    nu = np.zeros(n)
    if clamped:
        # nu_i restores stationarity at the clamp: argument pinned to the
        # zero crossing of f'^{-1}
        args = (-arr - mu) / lam
        s0 = _zero_crossing(
            lambda y: np.atleast_1d(np.asarray(f_prime_inverse(y), dtype=np.float64)),
            float(args.min()),
            float(args.max()),
        )
        for i in clamped:
            nu[i] = max(arr[i] + mu + lam * s0, 0.0)

    if generator is not None:
        vals = np.asarray(generator(n * weights), dtype=np.float64)
        delta = float(vals.sum() / n)
    else:
        delta = sum(_generator_from_fprime_inverse(f_prime_inverse, float(n * w)) for w in weights) / n
    delta = max(delta, 0.0)
    return weights, KKTReport(lam=lam, mu=mu, nu=nu, implied_delta=delta, clamped=clamped)


def bregman_weights(link, link_inverse, losses, lam):
    """Weights for an inverse-Bregman ball: w = link^{-1}(link(u) - (L + mu)/lam).

    ``link`` is the gradient of a strictly convex potential, applied
    elementwise; ``link_inverse`` its inverse with the same out-of-range
    contract as the generic solver.  Returns ``(weights, KKTReport)``.
    """
    arr = validate_losses(losses)
    if not (lam > 0.0):
        raise ValueError("lam must be positive")
    n = arr.size
    link_u = float(link(1.0 / n))

    def pre_fn(mu):
        s = link_u - (arr + mu) / lam
        raw = np.atleast_1d(np.asarray(link_inverse(s), dtype=np.float64))
        raw = np.where(np.isnan(raw), np.inf, raw)
        return np.maximum(raw, 0.0)

    span = float(arr.max())
    scale = max(1.0, abs(link_u) * lam)
    mu, pre = _bracket_and_bisect(pre_fn, -span - 10.0 * lam - scale, span + 10.0 * lam + scale)
    weights = pre / pre.sum()

    clamped = tuple(int(i) for i in np.flatnonzero(pre == 0.0))
    nu = np.zeros(n)
    if clamped:
        link_zero = float(np.asarray(link(0.0), dtype=np.float64))
        if not math.isfinite(link_zero):
            raise SolverFailureError(
                "weights clamped although link(0) is not finite; inconsistent link pair"
            )
        for i in clamped:
            nu[i] = max(arr[i] + mu - lam * (link_u - link_zero), 0.0)

    delta = _bregman_divergence_value(link, weights, n)
    return weights, KKTReport(lam=lam, mu=mu, nu=nu, implied_delta=delta, clamped=clamped)


def _bregman_divergence_value(link, weights, n):
    """D(w, u) = sum_i int_{1/n}^{w_i} (link(s) - link(1/n)) ds by quadrature."""
    u = 1.0 / n
    link_u = float(link(u))
    total = 0.0
    for w in np.asarray(weights, dtype=np.float64):
        if w == u:
            continue
        val, _ = integrate.quad(lambda s: float(link(s)) - link_u, u, float(w), limit=200)
        total += val
    return max(total, 0.0)


def implied_radius(weights, spec):
    """Divergence D(w, u) realized by a weight vector under ``spec``.

    Returns math.inf (a value, not an exception) when the divergence
    diverges, e.g. reverse KL with a zero weight.
    """
    w = validate_simplex(weights)
    n = w.size
    if spec.family == KL:
        pos = w > 0.0
        return float(np.sum(w[pos] * np.log(n * w[pos])))
    if spec.family == REVERSE_KL:
        if np.any(w <= 0.0):
            return math.inf
        return float(-np.mean(np.log(n * w)))
    if spec.family == ALPHA:
        f = alpha_generator(spec.alpha)
        vals = np.asarray(f(n * w), dtype=np.float64)
        if np.any(np.isinf(vals)):
            return math.inf
        return max(float(vals.sum() / n), 0.0)
    if spec.family == GENERIC_F:
        if spec.generator is None:
            raise ValueError("generic_f spec needs its scalar generator to evaluate radii")
        vals = np.asarray(spec.generator(n * w), dtype=np.float64)
        if np.any(np.isinf(vals)):
            return math.inf
        return max(float(vals.sum() / n), 0.0)
    if spec.family == BREGMAN:
        if spec.link is None:
            raise ValueError("bregman spec needs its link to evaluate radii")
        return _bregman_divergence_value(spec.link, w, n)
    raise ValueError(f"unknown family {spec.family!r}")


def _divergence_rows(W, spec):
    """Vectorized D(w, u) over rows of W (grid-search helper)."""
    n = W.shape[1]
    Wc = np.clip(W, 1e-300, None)
    if spec.family == KL:
        return np.sum(np.where(W > 0.0, W * np.log(n * Wc), 0.0), axis=1)
    if spec.family == REVERSE_KL:
        out = -np.mean(np.log(n * Wc), axis=1)
        out[np.any(W <= 0.0, axis=1)] = np.inf
        return out
    if spec.family == ALPHA:
        a = spec.alpha
        coef = 1.0 / (a * (1.0 - a))
        t = n * W
        if a > 0.0:
            vals = coef * (t - np.power(np.maximum(t, 0.0), a))
        else:
            vals = np.where(t > 0.0, coef * (t - np.power(np.clip(t, 1e-300, None), a)), np.inf)
        return vals.sum(axis=1) / n
    if spec.family == GENERIC_F:
        if spec.generator is None:
            raise ValueError("generic_f spec needs its scalar generator")
        vals = np.asarray(spec.generator(n * W), dtype=np.float64)
        return vals.sum(axis=1) / n
    if spec.family == BREGMAN:
        if spec.link is None:
            raise ValueError("bregman spec needs its link")
        return np.array([_bregman_divergence_value(spec.link, row, n) for row in W])
    raise ValueError(f"unknown family {spec.family!r}")


def _grid_oracle_2(losses, spec, delta):
    t = np.linspace(0.0, 1.0, 2001)
    best = None
    for _ in range(4):
        W = np.column_stack([t, 1.0 - t])
        feas = _divergence_rows(W, spec) <= delta + 1e-15
        if not np.any(feas):
            center = 0.5 if best is None else best
        else:
            obj = W @ losses
            obj[~feas] = np.inf
            center = float(t[int(np.argmin(obj))])
            best = center
        h = (t[1] - t[0]) if t.size > 1 else 1e-3
        t = np.linspace(max(center - 2 * h, 0.0), min(center + 2 * h, 1.0), 2001)
    return np.array([best, 1.0 - best])


def _grid_oracle_3(losses, spec, delta):
    # The linear objective attains its minimum on the feasible boundary.
    # Sweep rays from the uniform center: each boundary point is hit by
    # exactly one ray, so a 1-D zoom over the ray angle cannot get trapped.
    u = np.full(3, 1.0 / 3.0)
    b1 = np.array([1.0, -1.0, 0.0]) / np.sqrt(2.0)
    b2 = np.array([1.0, 1.0, -2.0]) / np.sqrt(6.0)

    def boundary_points(thetas):
        d = np.outer(np.cos(thetas), b1) + np.outer(np.sin(thetas), b2)
        with np.errstate(divide="ignore"):
            r_edge = np.min(np.where(d < 0.0, u / np.where(d < 0.0, -d, 1.0), np.inf), axis=1)
        W_edge = np.clip(u + r_edge[:, None] * d, 0.0, None)
        ball_bites = _divergence_rows(W_edge, spec) > delta
        lo = np.zeros(thetas.size)
        hi = r_edge.copy()
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            W = np.clip(u + mid[:, None] * d, 0.0, None)
            ok = _divergence_rows(W, spec) <= delta
            lo = np.where(ball_bites & ok, mid, lo)
            hi = np.where(ball_bites & ~ok, mid, hi)
        r = np.where(ball_bites, lo, r_edge)
        return np.clip(u + r[:, None] * d, 0.0, None)

    thetas = np.linspace(0.0, 2.0 * np.pi, 721)
    best_theta, best_w, best_obj = 0.0, u, float(u @ losses)
    for _ in range(6):
        W = boundary_points(thetas)
        obj = W @ losses
        k = int(np.argmin(obj))
        if obj[k] < best_obj:
            best_theta, best_w, best_obj = float(thetas[k]), W[k], float(obj[k])
        span = 4.0 * (thetas[1] - thetas[0])
        thetas = np.linspace(best_theta - span / 2.0, best_theta + span / 2.0, 201)
    return best_w / best_w.sum()


_CVX_CACHE = {}
_CVX_LOCK = None


def _cvx_oracle(losses, spec, delta):
    """Disciplined-convex solve of the radius problem (KL / reverse-KL / alpha)."""
    import threading

    import cvxpy as cp

    global _CVX_LOCK
    if _CVX_LOCK is None:
        _CVX_LOCK = threading.Lock()
    n = losses.size
    key = (spec.family, n, spec.alpha)
    with _CVX_LOCK:
        if key not in _CVX_CACHE:
            w = cp.Variable(n, nonneg=True)
            loss_p = cp.Parameter(n)
            delta_p = cp.Parameter(nonneg=True)
            u = np.full(n, 1.0 / n)
            if spec.family == KL:
                div = cp.sum(cp.kl_div(w, u))
            elif spec.family == REVERSE_KL:
                div = cp.sum(cp.kl_div(u, w))
            else:
                a = spec.alpha
                coef = 1.0 / (a * (1.0 - a))
                if 0.0 < a < 1.0:
                    div = coef * (1.0 - cp.sum(cp.power(n * w, a)) / n)
                else:
                    div = (coef / n) * cp.sum(n * w - cp.power(n * w, a))
            prob = cp.Problem(cp.Minimize(loss_p @ w), [cp.sum(w) == 1.0, div <= delta_p])
            _CVX_CACHE[key] = (prob, loss_p, delta_p, w)
        prob, loss_p, delta_p, w = _CVX_CACHE[key]
        loss_p.value = losses
        delta_p.value = delta
        try:
            prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11)
        except cp.error.SolverError:
            return None
        if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or w.value is None:
            return None
        x = np.clip(np.asarray(w.value, dtype=np.float64), 0.0, None)
        return x / x.sum()


def _nlp_oracle(losses, spec, delta):
    n = losses.size

    def d_fun(w):
        # floor keeps boundary-divergent families finite for the NLP solvers;
        # the value is still astronomically infeasible there
        w = np.clip(np.asarray(w, dtype=np.float64), 1e-12, None)
        return float(_divergence_rows(w[None, :], spec)[0])

    def polish(x):
        w = np.clip(x, 0.0, None)
        total = w.sum()
        return w / total if total > 0.0 else None

    def feasible(w):
        return w is not None and abs(w.sum() - 1.0) <= 1e-9 and d_fun(w) <= delta + 1e-7

    # The divergence gradient is unbounded at the simplex boundary for
    # several families; scipy's internal finite differences handle the
    # vertex probes better than a hard-clipped analytic jacobian.
    cons = [
        {"type": "eq", "fun": lambda w: w.sum() - 1.0, "jac": lambda w: np.ones(n)},
        {"type": "ineq", "fun": lambda w: delta - d_fun(w)},
    ]
    res = optimize.minimize(
        lambda w: float(w @ losses),
        np.full(n, 1.0 / n),
        jac=lambda w: losses,
        bounds=[(0.0, 1.0)] * n,
        constraints=cons,
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 1000},
    )
    w = polish(res.x)
    if res.status == 0 and feasible(w):
        return w

    # SLSQP occasionally stalls on a bad linesearch; trust-constr is slower
    # but does not share the failure mode
    res2 = optimize.minimize(
        lambda w: float(w @ losses),
        np.full(n, 1.0 / n),
        jac=lambda w: losses,
        bounds=[(0.0, 1.0)] * n,
        method="trust-constr",
        constraints=[
            optimize.LinearConstraint(np.ones((1, n)), 1.0, 1.0),
            optimize.NonlinearConstraint(d_fun, -np.inf, delta),
        ],
        options={"xtol": 1e-14, "gtol": 1e-12, "maxiter": 3000},
    )
    w2 = polish(res2.x)
    candidates = [c for c in (w, w2) if feasible(c)]
    if not candidates:
        raise SolverFailureError(
            f"oracle NLP failed: {res.message} / {res2.message}",
            history=[res.x.tolist(), res2.x.tolist()],
        )
    return min(candidates, key=lambda c: float(c @ losses))


def oracle_weights(losses, spec, delta):
    """Brute-force minimizer of the radius-parameterized problem (test oracle).

    Dense staged grid search for n <= 3; a disciplined convex-programming
    solve for larger batches (general constrained NLP for caller-defined
    generators).  Independent of the closed forms above.
    """
    arr = validate_losses(losses)
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    n = arr.size
    if n == 1:
        return np.array([1.0])
    if delta == 0.0:
        return np.full(n, 1.0 / n)
    # constraint inactive: all mass on the argmin when the ball allows it
    one_hot = np.zeros(n)
    one_hot[int(np.argmin(arr))] = 1.0
    if _divergence_rows(one_hot[None, :], spec)[0] <= delta:
        return one_hot
    if n == 2:
        return _grid_oracle_2(arr, spec, delta)
    if n == 3:
        return _grid_oracle_3(arr, spec, delta)
    if spec.family in (KL, REVERSE_KL, ALPHA):
        w = _cvx_oracle(arr, spec, delta)
        if w is not None:
            return w
    return _nlp_oracle(arr, spec, delta)


def weights_for_radius(losses, spec, delta, *, tol=1e-11):
    """Solve the radius-parameterized problem through the closed forms.

    Searches the temperature whose closed-form weights realize
    D(w, u) = delta (the radius is monotone in the temperature).  Supports
    the KL, reverse-KL and alpha families.
    """
    arr = validate_losses(losses)
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    n = arr.size
    if n == 1:
        return np.array([1.0])
    if delta == 0.0 or arr.max() == arr.min():
        return np.full(n, 1.0 / n)

    if spec.family == KL:
        solve = lambda temp: kl_weights(arr, temp)
    elif spec.family == REVERSE_KL:
        # admissible mu starts at -min(L); reparameterize so temp > 0 spans it
        mu_floor = -float(arr.min())
        solve = lambda temp: reverse_kl_weights(arr, mu_floor + temp)
    elif spec.family == ALPHA:
        solve = lambda temp: alpha_weights(arr, spec.alpha, temp)
    else:
        raise ValueError("weights_for_radius supports kl, reverse_kl and alpha families")

    def radius(temp):
        try:
            return implied_radius(solve(temp), spec)
        except (NumericRangeError, DegenerateBatchError):
            return math.inf  # vanishing temperature: radius beyond any target

    # the radius of the zero-temperature limit (mass split over the loss
    # argmins) caps what the family can realize; larger deltas leave the
    # constraint inactive there
    ties = arr == arr.min()
    w_cap = np.where(ties, 1.0 / ties.sum(), 0.0)
    cap = implied_radius(w_cap, spec)
    if delta >= cap - 1e-15:
        return w_cap

    # radius is decreasing in the temperature: lo overshoots, hi undershoots
    lo = hi = 1.0
    while radius(hi) > delta:
        hi *= 2.0
        if hi > 1e18:
            raise SolverFailureError("no temperature reaches the requested radius")
    while radius(lo) <= delta:
        lo *= 0.5
        if lo < 1e-18:
            raise SolverFailureError(
                "radius plateaus below the requested delta; the multiplier "
                "parameterization cannot realize it"
            )

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if radius(mid) > delta:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    return solve(hi)
