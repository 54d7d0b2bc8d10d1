"""High-precision elementary functions used as the accuracy standard.

Primitives (exp, ln, sin, cos, atan, pi) run internally at p_s + guard
bits and round once to p_s.  Derived functions compose the primitives at
p_s, mirroring how a calculator user would chain them; in particular
pow(a, c) is literally exp(c * ln a) so the identity pow(20, 65) ==
exp(65 * ln 20) holds bit-for-bit.
"""

from __future__ import annotations

import math

from . import mpfloat as mp
from .mpfloat import MPFloat


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class OracleConfig:
    __slots__ = ("p_s", "guard")

    def __init__(self, p_s=256, guard=64):
        if p_s < 2 or guard < 32:
            raise ValueError("need p_s >= 2 and guard >= 32")
        self.p_s = p_s
        self.guard = guard


DEFAULT = OracleConfig()

_LN2_CACHE = {}
_PI_CACHE = {}
_LN10_CACHE = {}


def _ln2(w):
    """ln 2 at w bits via 2*atanh(1/3), summed in scaled integers."""
    v = _LN2_CACHE.get(w)
    if v is not None:
        return v
    ws = w + 16
    total = 0
    k = 1
    p3 = 3
    while True:
        term = (2 << ws) // (k * p3)
        if term == 0:
            break
        total += term
        k += 2
        p3 *= 9
    v = mp._round(1, total, -ws, w, mp.UNBOUNDED)
    _LN2_CACHE[w] = v
    return v


def _atan_inv_scaled(m, ws):
    """atan(1/m) * 2**ws as an integer (Machin building block)."""
    total = 0
    k = 1
    p = m
    sign = 1
    m2 = m * m
    while True:
        term = (1 << ws) // (k * p)
        if term == 0:
            break
        total += sign * term
        sign = -sign
        k += 2
        p *= m2
    return total


def _pi(w):
    """pi at w bits, Machin formula 16*atan(1/5) - 4*atan(1/239)."""
    v = _PI_CACHE.get(w)
    if v is not None:
        return v
    ws = w + 16
    scaled = 16 * _atan_inv_scaled(5, ws) - 4 * _atan_inv_scaled(239, ws)
    v = mp._round(1, scaled, -ws, w, mp.UNBOUNDED)
    _PI_CACHE[w] = v
    return v


def _scale2(v, n):
    if v.cls != mp.NORMAL or n == 0:
        return v
    return MPFloat(mp.NORMAL, v.sign, v.exp + n, v.mant, v.prec)


def _nearest_int(v):
    """Round a finite value to the nearest integer, ties to even."""
    if v.cls == mp.ZERO:
        return 0
    e = v.exp - v.prec + 1
    if e >= 0:
        return v.sign * (v.mant << e)
    q = v.mant >> -e
    rem = v.mant & ((1 << -e) - 1)
    half = 1 << (-e - 1)
    if rem > half or (rem == half and (q & 1)):
        q += 1
    return v.sign * q


def _exp_core(x, w):
    """exp(x) at w bits; x finite."""
    if x.cls == mp.ZERO:
        return mp.from_int(1, w)
    ln2w = _ln2(w + 64)
    n = _nearest_int(mp.div(x, ln2w, 64))
    r = mp.sub(mp.extend(x, w + 64) if x.prec <= w + 64 else x,
               mp.mul(mp.from_int(n), ln2w, w + 64), w + 64)
    r = mp.round_to(r, w)
    one = mp.from_int(1, w)
    term = one
    acc = one
    k = 1
    limit = -(w + 4)
    while term.cls == mp.NORMAL:
        term = mp.div(mp.mul(term, r, w), mp.from_int(k), w)
        acc = mp.add(acc, term, w)
        if term.cls != mp.NORMAL or term.exp - acc.exp < limit:
            break
        k += 1
    out = _scale2(acc, n)
    if out.cls == mp.NORMAL and abs(out.exp) >= (1 << 31):
        return mp.inf(1, w) if out.exp > 0 else mp.zero(w)
    return out


def _ln_core(x, w):
    """ln(x) at w bits; x finite and > 0."""
    a = MPFloat(mp.NORMAL, 1, 0, x.mant, x.prec)  # mantissa in [1, 2)
    k = x.exp
    threehalf = mp.from_decimal_string("1.5", 4)
    if mp.cmp(a, threehalf) > 0:
        a = _scale2(a, -1)
        k += 1
    one = mp.from_int(1, w)
    num = mp.sub(a, one, w)
    if num.cls == mp.ZERO:
        series = mp.zero(w)
    else:
        t = mp.div(num, mp.add(a, one, w), w)
        t2 = mp.mul(t, t, w)
        term = t
        acc = t
        j = 3
        limit = -(w + 4)
        while True:
            term = mp.mul(term, t2, w)
            contrib = mp.div(term, mp.from_int(j), w)
            acc = mp.add(acc, contrib, w)
            if contrib.cls != mp.NORMAL or contrib.exp - acc.exp < limit:
                break
            j += 2
        series = _scale2(acc, 1)  # ln a = 2 * atanh(t)
    return mp.add(series, mp.mul(mp.from_int(k), _ln2(w + 8), w), w)


def _sin_series(r, w):
    if r.cls == mp.ZERO:
        return mp.zero(w)
    term = r
    acc = r
    r2 = mp.neg(mp.mul(r, r, w))
    k = 2
    limit = -(w + 4)
    while True:
        term = mp.div(mp.mul(term, r2, w), mp.from_int(k * (k + 1)), w)
        acc = mp.add(acc, term, w)
        if term.cls != mp.NORMAL or term.exp - acc.exp < limit:
            break
        k += 2
    return acc


def _cos_series(r, w):
    one = mp.from_int(1, w)
    if r.cls == mp.ZERO:
        return one
    term = one
    acc = one
    r2 = mp.neg(mp.mul(r, r, w))
    k = 1
    limit = -(w + 4)
    while True:
        term = mp.div(mp.mul(term, r2, w), mp.from_int(k * (k + 1)), w)
        acc = mp.add(acc, term, w)
        if term.cls != mp.NORMAL or (acc.cls == mp.NORMAL and term.exp - acc.exp < limit):
            break
        k += 2
    return acc


def _trig_reduce(x, w):
    """Return (r, quadrant) with x = r + quadrant*(pi/2), |r| <= pi/4."""
    we = w + 64
    half_pi = _scale2(_pi(we), -1)
    n = _nearest_int(mp.div(x, half_pi, 64))
    r = mp.sub(mp.extend(x, we) if x.prec <= we else x,
               mp.mul(mp.from_int(n), half_pi, we), we)
    return mp.round_to(r, w), n & 3


def _sin_core(x, w):
    r, q = _trig_reduce(x, w)
    if q == 0:
        return _sin_series(r, w)
    if q == 1:
        return _cos_series(r, w)
    if q == 2:
        return mp.neg(_sin_series(r, w))
    return mp.neg(_cos_series(r, w))


def _cos_core(x, w):
    r, q = _trig_reduce(x, w)
    if q == 0:
        return _cos_series(r, w)
    if q == 1:
        return mp.neg(_sin_series(r, w))
    if q == 2:
        return mp.neg(_cos_series(r, w))
    return _sin_series(r, w)


def _atan_core(x, w):
    if x.cls == mp.ZERO:
        return mp.zero(w)
    sign = x.sign
    a = mp.abs_(x)
    one = mp.from_int(1, w)
    recip = mp.cmp(a, one) > 0
    if recip:
        a = mp.div(one, a, w)
    halvings = 0
    small = MPFloat(mp.NORMAL, 1, -3, 1 << (w - 1), w)  # 0.125
    while mp.cmp(a, small) > 0:
        root = mp.sqrt(mp.add(one, mp.mul(a, a, w), w), w)
        a = mp.div(a, mp.add(one, root, w), w)
        halvings += 1
    t2 = mp.neg(mp.mul(a, a, w))
    term = a
    acc = a
    j = 3
    limit = -(w + 4)
    while True:
        term = mp.mul(term, t2, w)
        contrib = mp.div(term, mp.from_int(j), w)
        acc = mp.add(acc, contrib, w)
        if contrib.cls != mp.NORMAL or contrib.exp - acc.exp < limit:
            break
        j += 2
    acc = _scale2(acc, halvings)
    if recip:
        acc = mp.sub(_scale2(_pi(w), -1), acc, w)
    return acc if sign > 0 else mp.neg(acc)


# ---------------------------------------------------------------------------
# public primitives
# ---------------------------------------------------------------------------


def _check_finite(x, fn):
    if not x.is_finite():
        raise DomainError("%s needs a finite argument" % fn)


def exp_mp(x, cfg=DEFAULT):
    _check_finite(x, "exp")
    return mp.round_to(_exp_core(x, cfg.p_s + cfg.guard), cfg.p_s)


def ln_mp(x, cfg=DEFAULT):
    _check_finite(x, "ln")
    if x.cls == mp.ZERO or x.sign < 0:
        raise DomainError("ln needs a positive argument")
    return mp.round_to(_ln_core(x, cfg.p_s + cfg.guard), cfg.p_s)


def sin_mp(x, cfg=DEFAULT):
    _check_finite(x, "sin")
    return mp.round_to(_sin_core(x, cfg.p_s + cfg.guard), cfg.p_s)


def cos_mp(x, cfg=DEFAULT):
    _check_finite(x, "cos")
    return mp.round_to(_cos_core(x, cfg.p_s + cfg.guard), cfg.p_s)


def atan_mp(x, cfg=DEFAULT):
    _check_finite(x, "atan")
    return mp.round_to(_atan_core(x, cfg.p_s + cfg.guard), cfg.p_s)


def pi_const(cfg=DEFAULT):
    return mp.round_to(_pi(cfg.p_s + cfg.guard), cfg.p_s)


def _ln10(cfg):
    v = _LN10_CACHE.get(cfg.p_s)
    if v is None:
        v = ln_mp(mp.from_int(10, cfg.p_s), cfg)
        _LN10_CACHE[cfg.p_s] = v
    return v


# ---------------------------------------------------------------------------
# derived functions (scientific-library formula table)
# ---------------------------------------------------------------------------


def _asin(a, cfg):
    p = cfg.p_s
    one = mp.from_int(1, p)
    c = mp.cmp(mp.abs_(a), one)
    if c is None or c > 0:
        raise DomainError("asin needs |a| <= 1")
    if c == 0:
        q = _scale2(pi_const(cfg), -1)
        return q if a.sign > 0 else mp.neg(q)
    denom = mp.sqrt(mp.sub(one, mp.mul(a, a, p), p), p)
    return atan_mp(mp.div(a, denom, p), cfg)


def _atan2(a, c, cfg):
    p = cfg.p_s
    if c.cls == mp.ZERO:
        if a.cls == mp.ZERO:
            return mp.zero(p)
        q = _scale2(pi_const(cfg), -1)
        return q if a.sign > 0 else mp.neg(q)
    base = atan_mp(mp.div(a, c, p), cfg)
    if c.sign > 0:
        return base
    pi_v = pi_const(cfg)
    if a.cls != mp.ZERO and a.sign < 0:
        return mp.sub(base, pi_v, p)
    return mp.add(base, pi_v, p)


def derived_fn(name, args, cfg=DEFAULT):
    """Evaluate one formula-table function over MPFloat arguments."""
    p = cfg.p_s
    one = mp.from_int(1, p)
    if name not in FUNCTION_ARITY:
        raise ValueError("unknown function: %r" % (name,))
    if len(args) != FUNCTION_ARITY[name]:
        raise ValueError("%s takes %d argument(s)" % (name, FUNCTION_ARITY[name]))
    for v in args:
        _check_finite(v, name)
    a = args[0]

    if name == "asin":
        return _asin(a, cfg)
    if name == "acos":
        return mp.sub(_scale2(pi_const(cfg), -1), _asin(a, cfg), p)
    if name == "acosh":
        if mp.cmp(a, one) < 0:
            raise DomainError("acosh needs a >= 1")
        root = mp.sqrt(mp.sub(mp.mul(a, a, p), one, p), p)
        return ln_mp(mp.add(a, root, p), cfg)
    if name == "asinh":
        root = mp.sqrt(mp.add(mp.mul(a, a, p), one, p), p)
        return ln_mp(mp.add(a, root, p), cfg)
    if name == "atan":
        return atan_mp(a, cfg)
    if name == "atan2":
        return _atan2(a, args[1], cfg)
    if name == "atanh":
        c = mp.cmp(mp.abs_(a), one)
        if c is None or c >= 0:
            raise DomainError("atanh needs |a| < 1")
        ratio = mp.div(mp.add(one, a, p), mp.sub(one, a, p), p)
        return _scale2(ln_mp(ratio, cfg), -1)
    if name == "cos":
        return cos_mp(a, cfg)
    if name == "cosh":
        e = exp_mp(a, cfg)
        return _scale2(mp.add(e, mp.div(one, e, p), p), -1)
    if name == "exp":
        return exp_mp(a, cfg)
    if name == "exp2":
        return exp_mp(mp.mul(a, mp.round_to(_ln2(p + cfg.guard), p), p), cfg)
    if name == "exp10":
        return exp_mp(mp.mul(a, _ln10(cfg), p), cfg)
    if name == "fmod":
        c = args[1]
        if c.cls == mp.ZERO:
            raise DomainError("fmod needs a nonzero divisor")
        q = mp.floor(mp.div(a, c, p))
        return mp.sub(a, mp.mul(q, c, p), p)
    if name == "hypot":
        b = args[1]
        return mp.sqrt(mp.add(mp.mul(a, a, p), mp.mul(b, b, p), p), p)
    if name == "log":
        return ln_mp(a, cfg)
    if name == "log2":
        return mp.div(ln_mp(a, cfg), mp.round_to(_ln2(p + cfg.guard), p), p)
    if name == "log10":
        return mp.div(ln_mp(a, cfg), _ln10(cfg), p)
    if name == "pow":
        if a.cls == mp.ZERO or a.sign < 0:
            raise DomainError("pow needs a positive base")
        return exp_mp(mp.mul(args[1], ln_mp(a, cfg), p), cfg)
    if name == "sin":
        return sin_mp(a, cfg)
    if name == "sinh":
        e = exp_mp(a, cfg)
        return _scale2(mp.sub(e, mp.div(one, e, p), p), -1)
    if name == "sqrt":
        if a.cls == mp.NORMAL and a.sign < 0:
            raise DomainError("sqrt needs a nonnegative argument")
        return mp.sqrt(a, p)
    if name == "tan":
        c = cos_mp(a, cfg)
        if c.cls == mp.ZERO:
            raise DomainError("tan pole")
        return mp.div(sin_mp(a, cfg), c, p)
    if name == "tanh":
        e = exp_mp(a, cfg)
        ei = mp.div(one, e, p)
        return mp.div(mp.sub(e, ei, p), mp.add(e, ei, p), p)
    raise AssertionError(name)


FUNCTION_ARITY = {
    "acos": 1, "acosh": 1, "asin": 1, "asinh": 1, "atan": 1, "atan2": 2,
    "atanh": 1, "cos": 1, "cosh": 1, "exp": 1, "exp2": 1, "exp10": 1,
    "fmod": 2, "hypot": 2, "log": 1, "log2": 1, "log10": 1, "pow": 2,
    "sin": 1, "sinh": 1, "sqrt": 1, "tan": 1, "tanh": 1,
}
