"""Oracle function tests, cross-checked against mpmath at higher working
precision so the reference is independent of the implementation."""

import math
import random

import mpmath
import pytest

from precfix import mpfloat as mp
from precfix import transcendental as tr

CFG = tr.DEFAULT
TOL = mp.from_hex_string("0x1.0p-250")  # a few ulps of slack at p_S = 256


def _mpmath_ref(fn, x, prec=320):
    with mpmath.workprec(prec):
        return getattr(mpmath, fn)(mpmath.mpf(x))


def _as_mpf(v, prec=320):
    with mpmath.workprec(prec):
        return mpmath.mpf(v.sign * v.mant) * mpmath.mpf(2) ** (
            v.exp - v.prec + 1)


def _rel_vs_mpmath(got, ref):
    with mpmath.workprec(320):
        if ref == 0:
            return abs(_as_mpf(got))
        return abs((_as_mpf(got) - ref) / ref)


def test_exp_known_value_30_digits():
    x = mp.from_decimal_string("-0.0277", CFG.p_s)
    r = tr.exp_mp(x, CFG)
    assert mp.to_decimal_string(r, 30) == "0.972680127073139846902979085281"


def test_pi_30_digits():
    assert mp.to_decimal_string(tr.pi_const(CFG), 30) \
        == "3.14159265358979323846264338328"


@pytest.mark.parametrize("fn,name", [
    (tr.exp_mp, "exp"), (tr.ln_mp, "log"), (tr.sin_mp, "sin"),
    (tr.cos_mp, "cos"), (tr.atan_mp, "atan"),
])
def test_primitives_against_mpmath(fn, name):
    rng = random.Random(hash(name) & 0xFFFF)
    bound = 2 ** -256
    for _ in range(40):
        f = rng.uniform(-40, 40)
        if name == "log":
            f = abs(f) + 1e-9
        x = mp.from_float(f)
        got = fn(mp.extend(x, CFG.p_s), CFG)
        ref = _mpmath_ref(name, f)
        assert _rel_vs_mpmath(got, ref) < 4 * bound, (name, f)


def test_exp_of_zero_is_one():
    r = tr.exp_mp(mp.zero(CFG.p_s), CFG)
    assert mp.cmp(r, mp.from_int(1)) == 0


def test_ln_domain_error():
    with pytest.raises(tr.DomainError):
        tr.ln_mp(mp.from_int(-1), CFG)
    with pytest.raises(tr.DomainError):
        tr.ln_mp(mp.zero(CFG.p_s), CFG)


def test_pow_is_composed_from_exp_and_ln():
    twenty = mp.from_int(20)
    sixty5 = mp.from_int(65)
    p = tr.derived_fn("pow", [twenty, sixty5], CFG)
    via = tr.exp_mp(mp.mul(sixty5, tr.ln_mp(twenty, CFG), CFG.p_s), CFG)
    assert mp.cmp(p, via) == 0
    # within a couple of ulps of the true integer (last-bit correctness
    # is out of scope)
    exact = mp.from_int(20 ** 65)
    rel = mp.abs_(mp.div(mp.sub(p, exact, 300), exact, CFG.p_s))
    assert rel.cls == mp.ZERO \
        or mp.cmp(rel, mp.from_hex_string("0x1.0p-248")) < 0


def test_trig_identity_residual():
    rng = random.Random(99)
    bound = mp.from_hex_string("0x1.0p-252")
    one = mp.from_int(1)
    for _ in range(10):
        x = mp.extend(mp.from_float(rng.uniform(-10, 10)), CFG.p_s)
        s = tr.sin_mp(x, CFG)
        c = tr.cos_mp(x, CFG)
        total = mp.add(mp.mul(s, s, CFG.p_s), mp.mul(c, c, CFG.p_s),
                       CFG.p_s)
        resid = mp.abs_(mp.sub(total, one, CFG.p_s))
        assert resid.cls == mp.ZERO or mp.cmp(resid, bound) < 0


def test_ln_exp_round_trip():
    bound = mp.from_hex_string("0x1.0p-252")
    for f in (0.25, 1.0, -3.5, 17.0):
        x = mp.extend(mp.from_float(f), CFG.p_s)
        resid = mp.abs_(mp.sub(tr.ln_mp(tr.exp_mp(x, CFG), CFG), x,
                               CFG.p_s))
        rel = resid if f == 0 else mp.div(resid, mp.abs_(x), CFG.p_s)
        assert rel.cls == mp.ZERO or mp.cmp(rel, bound) < 0


@pytest.mark.parametrize("name,args,ref_fn", [
    ("acos", (0.3,), "acos"),
    ("asin", (-0.8,), "asin"),
    ("acosh", (2.5,), "acosh"),
    ("asinh", (1.7,), "asinh"),
    ("atanh", (0.4,), "atanh"),
    ("cosh", (2.2,), "cosh"),
    ("sinh", (-1.1,), "sinh"),
    ("tanh", (0.9,), "tanh"),
    ("tan", (1.2,), "tan"),
    ("log2", (7.5,), None),
    ("log10", (42.0,), None),
    ("exp2", (3.7,), None),
    ("exp10", (-1.3,), None),
    ("sqrt", (2.0,), "sqrt"),
])
def test_derived_against_mpmath(name, args, ref_fn):
    vals = [mp.extend(mp.from_float(a), CFG.p_s) for a in args]
    got = tr.derived_fn(name, vals, CFG)
    with mpmath.workprec(320):
        if ref_fn is not None:
            ref = getattr(mpmath, ref_fn)(*[mpmath.mpf(a) for a in args])
        elif name == "log2":
            ref = mpmath.log(args[0], 2)
        elif name == "log10":
            ref = mpmath.log(args[0], 10)
        elif name == "exp2":
            ref = mpmath.mpf(2) ** args[0]
        else:
            ref = mpmath.mpf(10) ** args[0]
    assert _rel_vs_mpmath(got, ref) < mpmath.mpf(2) ** -248, name


def test_two_argument_functions():
    a = mp.extend(mp.from_float(3.0), CFG.p_s)
    c = mp.extend(mp.from_float(4.0), CFG.p_s)
    h = tr.derived_fn("hypot", [a, c], CFG)
    assert mp.cmp(h, mp.from_int(5)) == 0
    at = tr.derived_fn("atan2", [mp.from_int(1), mp.from_int(1)], CFG)
    quarter_pi = mp.div(tr.pi_const(CFG), mp.from_int(4), CFG.p_s)
    assert mp.cmp(at, quarter_pi) == 0
    fm = tr.derived_fn("fmod", [mp.from_float(7.5), mp.from_int(2)], CFG)
    assert fm.to_float() == 1.5


def test_atan2_quadrants():
    pi = tr.pi_const(CFG)
    cases = [
        ((0.0, 1.0), 0.0),
        ((1.0, 0.0), math.pi / 2),
        ((0.0, -1.0), math.pi),
        ((-1.0, 0.0), -math.pi / 2),
        ((0.0, 0.0), 0.0),
    ]
    for (a, c), want in cases:
        r = tr.derived_fn("atan2", [mp.from_float(a), mp.from_float(c)],
                          CFG)
        assert abs(r.to_float() - want) < 1e-15, (a, c)
    del pi


def test_derived_domain_errors():
    with pytest.raises(tr.DomainError):
        tr.derived_fn("asin", [mp.from_int(2)], CFG)
    with pytest.raises(tr.DomainError):
        tr.derived_fn("acosh", [mp.from_float(0.5)], CFG)
    with pytest.raises(tr.DomainError):
        tr.derived_fn("fmod", [mp.from_int(1), mp.zero(CFG.p_s)], CFG)


def test_unknown_function_rejected():
    with pytest.raises(ValueError):
        tr.derived_fn("gamma", [mp.from_int(1)], CFG)


def test_arity_table_covers_derived_names():
    for name, arity in tr.FUNCTION_ARITY.items():
        lit = "2.5" if name == "acosh" else "0.5"
        args = [mp.extend(mp.from_decimal_string(lit, 53), CFG.p_s)
                for _ in range(arity)]
        r = tr.derived_fn(name, args, CFG)
        assert r.cls in (mp.NORMAL, mp.ZERO)


def test_oracle_config_validation():
    with pytest.raises(ValueError):
        tr.OracleConfig(p_s=1)
    with pytest.raises(ValueError):
        tr.OracleConfig(guard=4)


def test_reduced_precision_oracle_still_sane():
    cfg = tr.OracleConfig(p_s=64)
    r = tr.exp_mp(mp.from_int(1), cfg)
    assert abs(r.to_float() - math.e) < 1e-15
