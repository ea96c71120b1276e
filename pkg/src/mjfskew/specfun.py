"""
Special functions: log-gamma, beta, and the regularized incomplete beta
function with its inverse.

Everything here is written on top of ``numpy`` only and accepts scalars or
arrays (broadcast the usual way). Scalars in give Python floats out.

The incomplete beta uses the modified Lentz evaluation of the standard
continued fraction, switching to the complementary expansion when
``x > (a + 1) / (a + b + 2)``. The inverse is a safeguarded Newton iteration
on ``log I`` versus ``log x``: each step is checked against a bracket that
shrinks with every evaluation, and (geometric) bisection takes over whenever
the step would leave the bracket.
"""

import numpy as np

from .errors import ConvergenceError, DomainError

__all__ = [
    "ln_gamma",
    "ln_beta",
    "beta",
    "reg_inc_beta",
    "reg_inc_beta_pair",
    "inv_reg_inc_beta",
    "inv_reg_inc_beta_pair",
]

CF_MAX_ITER = 200
INV_MAX_ITER = 100
_INV_RTOL = 1e-14

_EPS = np.finfo(float).eps
_TINY = 1e-300

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def _out(value, scalar):
    if scalar:
        return float(value)
    return value


def _check_positive(name, v):
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        raise DomainError(f"{name} must be positive and finite")


def ln_gamma(x):
    """Natural log of the gamma function for positive real ``x``.

    Parameters
    ----------
    x : float or array_like
        Positive, finite argument(s).

    Returns
    -------
    float or ndarray
        ``ln Γ(x)``.

    Raises
    ------
    DomainError
        If any ``x`` is non-positive or non-finite.
    """
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    _check_positive("x", x)
    # Shift small arguments up by one: ln Γ(x) = ln Γ(x + 1) - ln x.
    small = x < 0.5
    xs = np.where(small, x + 1.0, x)
    y = xs - 1.0
    series = np.full_like(y, _LANCZOS_COEF[0])
    for k, c in enumerate(_LANCZOS_COEF[1:], start=1):
        series = series + c / (y + k)
    t = y + _LANCZOS_G + 0.5
    res = _HALF_LOG_2PI + (y + 0.5) * np.log(t) - t + np.log(series)
    res = np.where(small, res - np.log(x), res)
    return _out(res, scalar)


def _stirling_tail(x):
    """omega(x) = ln Γ(x) - [(x - 1/2) ln x - x + ln(2π)/2], for x >= 20."""
    r = 1.0 / x
    r2 = r * r
    return r * (1.0 / 12 - r2 * (1.0 / 360 - r2 * (1.0 / 1260 - r2 * (1.0 / 1680 - r2 / 1188))))


def ln_beta(a, b):
    """``ln B(a, b)``; symmetric in its arguments bit for bit.

    When the larger argument is big, ``ln Γ(b) - ln Γ(a + b)`` is formed
    from Stirling differences instead of subtracting two large logs.
    """
    scalar = np.ndim(a) == 0 and np.ndim(b) == 0
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_positive("a", a)
    _check_positive("b", b)
    small = np.minimum(a, b)
    large = np.maximum(a, b)
    total = small + large
    res = np.asarray((ln_gamma(small) + ln_gamma(large)) - ln_gamma(total), dtype=float)
    far = large >= 20.0
    if np.any(far):
        s, g, t = (np.broadcast_to(v, res.shape)[far] for v in (small, large, total))
        corr = (
            ln_gamma(s)
            - (g - 0.5) * np.log1p(s / g)
            - s * np.log(t)
            + s
            + (_stirling_tail(g) - _stirling_tail(t))
        )
        res = np.array(res, dtype=float, copy=True)
        res[far] = corr
    return _out(res, scalar)


def beta(a, b):
    """The complete beta function ``B(a, b)``."""
    scalar = np.ndim(a) == 0 and np.ndim(b) == 0
    return _out(np.exp(ln_beta(a, b)), scalar)


def _ln_beta_fast(a, b):
    if a.size and np.all(a == a.flat[0]) and np.all(b == b.flat[0]):
        return np.full(a.shape, ln_beta(a.flat[0], b.flat[0]))
    return ln_beta(a, b)


def _betacf(x, a, b):
    """Continued fraction for I(x; a, b), valid for x < (a+1)/(a+b+2)."""
    out = np.empty(x.shape)
    idx = np.arange(x.size)
    x, a, b = x.ravel(), a.ravel(), b.ravel()
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _TINY, _TINY, d)
    d = 1.0 / d
    h = d.copy()
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2.0 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h *= delta
        conv = np.abs(delta - 1.0) < _EPS
        # Converged entries stay put under further iterations, so compaction
        # only needs to happen once a sizeable share has finished.
        nconv = np.count_nonzero(conv)
        if nconv == conv.size or nconv >= 0.2 * conv.size:
            out.flat[idx[conv]] = h[conv]
            keep = ~conv
            if not keep.any():
                return out
            idx, x, a, b, qab, qap, qam, c, d, h = (
                v[keep] for v in (idx, x, a, b, qab, qap, qam, c, d, h)
            )
    raise ConvergenceError(
        "incomplete beta continued fraction did not converge",
        iterations=CF_MAX_ITER,
        x=float(x[0]),
        a=float(a[0]),
        b=float(b[0]),
    )


def reg_inc_beta_pair(x, y, a, b):
    """Return ``(I(x; a, b), 1 - I(x; a, b))`` given ``x`` and ``y = 1 - x``.

    Passing the complement explicitly keeps full relative precision when
    ``x`` is within rounding of 1, which matters for far-tail probabilities.
    The two outputs are each computed directly, never as ``1 - other`` on
    the small side.
    """
    scalar = all(np.ndim(v) == 0 for v in (x, y, a, b))
    x, y, a, b = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (x, y, a, b))
    )
    _check_positive("a", a)
    _check_positive("b", b)
    if np.any(~(x >= 0.0) | (x > 1.0)) or np.any(~(y >= 0.0) | (y > 1.0)):
        raise DomainError("x must lie in [0, 1]")

    lower = np.zeros(x.shape)
    upper = np.zeros(x.shape)
    interior = (x > 0.0) & (y > 0.0)
    lower[~interior & (y == 0.0)] = 1.0
    upper[~interior & (x == 0.0)] = 1.0
    if interior.any():
        xi, yi, ai, bi = x[interior], y[interior], a[interior], b[interior]
        log_front = ai * np.log(xi) + bi * np.log(yi) - _ln_beta_fast(ai, bi)
        front = np.exp(log_front)
        direct = xi < (ai + 1.0) / (ai + bi + 2.0)
        small = np.empty(xi.shape)  # the side computed from the CF
        if direct.any():
            small[direct] = front[direct] * _betacf(xi[direct], ai[direct], bi[direct]) / ai[direct]
        flip = ~direct
        if flip.any():
            small[flip] = front[flip] * _betacf(yi[flip], bi[flip], ai[flip]) / bi[flip]
        small = np.clip(small, 0.0, 1.0)
        lo = np.where(direct, small, 1.0 - small)
        up = np.where(direct, 1.0 - small, small)
        lower[interior] = lo
        upper[interior] = up
    if scalar:
        return float(lower), float(upper)
    return lower, upper


def reg_inc_beta(x, a, b):
    """Regularized incomplete beta function ``I(x; a, b)``.

    Parameters
    ----------
    x : float or array_like
        Point(s) in ``[0, 1]``.
    a, b : float or array_like
        Positive shape parameters.

    Returns
    -------
    float or ndarray
        Values in ``[0, 1]``.

    Raises
    ------
    DomainError
        ``x`` outside ``[0, 1]`` or non-positive shapes.
    ConvergenceError
        The continued fraction needed more than ``CF_MAX_ITER`` terms.
    """
    scalar = all(np.ndim(v) == 0 for v in (x, a, b))
    x = np.asarray(x, dtype=float)
    lower, _ = reg_inc_beta_pair(x, 1.0 - x, a, b)
    return _out(lower, scalar)


def _initial_guess(p, q, a, b):
    # Numerical Recipes (invbetai) starting values.
    x = np.empty(p.shape)
    big = (a >= 1.0) & (b >= 1.0)
    if big.any():
        pp = np.where(p[big] < 0.5, p[big], q[big])
        t = np.sqrt(-2.0 * np.log(pp))
        z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t
        z = np.where(p[big] < 0.5, z, -z)
        ab, bb = a[big], b[big]
        al = (z * z - 3.0) / 6.0
        h = 2.0 / (1.0 / (2.0 * ab - 1.0) + 1.0 / (2.0 * bb - 1.0))
        w = z * np.sqrt(al + h) / h - (1.0 / (2.0 * bb - 1.0) - 1.0 / (2.0 * ab - 1.0)) * (
            al + 5.0 / 6.0 - 2.0 / (3.0 * h)
        )
        x[big] = ab / (ab + bb * np.exp(np.clip(2.0 * w, -700.0, 700.0)))
    rest = ~big
    if rest.any():
        ar, br, pr, qr = a[rest], b[rest], p[rest], q[rest]
        lna = np.log(ar / (ar + br))
        lnb = np.log(br / (ar + br))
        t = np.exp(ar * lna) / ar
        u = np.exp(br * lnb) / br
        w = t + u
        x[rest] = np.where(
            pr < t / w,
            (ar * w * pr) ** (1.0 / ar),
            1.0 - (br * w * qr) ** (1.0 / br),
        )
    return np.clip(x, _TINY, 1.0 - _EPS)


def _inv_lower(p, q, a, b):
    """Solve I(x; a, b) = p for p <= 0.5; returns (x, 1 - x).

    Newton's method on ``log I`` against ``log x``: near zero ``I`` behaves
    like a power of ``x``, so this is almost linear and tiny ``p`` converge
    as fast as central ones.
    """
    x = _initial_guess(p, q, a, b)
    lo = np.zeros(p.shape)
    hi = np.ones(p.shape)
    lbeta = _ln_beta_fast(a, b)
    log_p = np.log(p)
    active = np.ones(p.shape, dtype=bool)
    for _ in range(INV_MAX_ITER):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        xa = x[idx]
        aa, ba = a[idx], b[idx]
        f, _ = reg_inc_beta_pair(xa, 1.0 - xa, aa, ba)
        err = f - p[idx]
        lo[idx] = np.where(err < 0.0, np.maximum(lo[idx], xa), lo[idx])
        hi[idx] = np.where(err > 0.0, np.minimum(hi[idx], xa), hi[idx])
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            resid = np.log(f) - log_p[idx]
            log_dens = (aa - 1.0) * np.log(xa) + (ba - 1.0) * np.log1p(-xa) - lbeta[idx]
            # d(log I)/d(log x) = x * density / I
            slope = np.exp(np.log(xa) + log_dens - np.log(f))
            dt = -resid / slope
            xn = xa * np.exp(dt)
        la, ha = lo[idx], hi[idx]
        outside = ~np.isfinite(xn) | (xn <= la) | (xn >= ha)
        fallback = np.where(la > 0.0, np.sqrt(la) * np.sqrt(ha), ha * 1e-3)
        xn = np.where(outside, fallback, xn)
        # I itself carries rounding of a few ulp, so stop at ~50 ulp.
        done = (
            (err == 0.0)
            | (np.abs(resid) <= _INV_RTOL)
            | (np.abs(dt) <= _INV_RTOL)
            | (ha - la <= _INV_RTOL * xa)
        )
        # Root below the normal double range: zero is the correctly rounded answer.
        under = ha <= _TINY
        xn = np.where(under, 0.0, xn)
        done |= under
        x[idx] = np.where(done & ~under, xa, xn)
        active[idx] = ~done
    if active.any():
        bad = np.flatnonzero(active)[0]
        raise ConvergenceError(
            "inverse incomplete beta did not converge",
            iterations=INV_MAX_ITER,
            p=float(p[bad]),
            a=float(a[bad]),
            b=float(b[bad]),
            x=float(x[bad]),
        )
    return x, 1.0 - x


def inv_reg_inc_beta_pair(p, q, a, b):
    """Invert ``I(x; a, b) = p`` given ``p`` and its complement ``q = 1 - p``.

    Returns ``(x, 1 - x)`` with the smaller of the two computed directly so
    both retain relative precision.
    """
    scalar = all(np.ndim(v) == 0 for v in (p, q, a, b))
    p, q, a, b = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (p, q, a, b)))
    _check_positive("a", a)
    _check_positive("b", b)
    if np.any(~(p >= 0.0) | (p > 1.0)) or np.any(~(q >= 0.0) | (q > 1.0)):
        raise DomainError("p must lie in [0, 1]")
    x = np.zeros(p.shape)
    y = np.ones(p.shape)
    x[q == 0.0] = 1.0
    y[q == 0.0] = 0.0
    interior = (p > 0.0) & (q > 0.0)
    low = interior & (p <= 0.5)
    if low.any():
        x[low], y[low] = _inv_lower(p[low], q[low], a[low], b[low])
    high = interior & ~low
    if high.any():
        # I(x; a, b) = p  <=>  I(1 - x; b, a) = q
        y[high], x[high] = _inv_lower(q[high], p[high], b[high], a[high])
    if scalar:
        return float(x), float(y)
    return x, y


def inv_reg_inc_beta(p, a, b):
    """Inverse of :func:`reg_inc_beta` in its first argument.

    Raises
    ------
    DomainError
        ``p`` outside ``[0, 1]``.
    ConvergenceError
        No solution within ``INV_MAX_ITER`` iterations; the exception carries
        the offending ``p, a, b`` and the last iterate.
    """
    scalar = all(np.ndim(v) == 0 for v in (p, a, b))
    p = np.asarray(p, dtype=float)
    x, _ = inv_reg_inc_beta_pair(p, 1.0 - p, a, b)
    return _out(x, scalar)
