"""Built-in TAC kernels and input generation.

The kernels come in three groups: programs built around the rounding
magic constant 1.5 * 2^52 (round, exp, sin), a program that scales a
float by rewriting its exponent word in place (union_scale), and two
negative controls whose errors stay well below any detection threshold
(accum, cancel).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import mpfloat as mp
from . import tac

ROUND_KERNEL = """\
# nearest integer by adding and subtracting 1.5 * 2^52
func round_kernel(x) -> y
  const toint = 0x1.8p52
  t1 = fadd x, toint
  y = fsub t1, toint
  ret y
"""

EXP_KERNEL = """\
# exp via 2^n * exp(r): n is extracted from the low word of the magic
# sum, the scale 2^n is assembled by writing the exponent word of 1.0
func exp_kernel(x) -> result
  const log2e = 0x1.71547652b82fep0
  const three51 = 0x1.8p52
  const ln2hi = 0x1.62e42fee00000p-1
  const ln2lo = 0x1.a39ef35793c76p-33
  const one = 1.0
  t8 = fmul x, log2e
  t9 = fadd t8, three51
  y = fmov t9
  t10 = fsub y, three51
  h = fmul t10, ln2hi
  r = fsub x, h
  l = fmul t10, ln2lo
  r = fsub r, l
  term = fmov r
  s = fadd one, r
  term = fmul term, r
  term = fdiv term, 2.0
  s = fadd s, term
  term = fmul term, r
  term = fdiv term, 3.0
  s = fadd s, term
  term = fmul term, r
  term = fdiv term, 4.0
  s = fadd s, term
  term = fmul term, r
  term = fdiv term, 5.0
  s = fadd s, term
  term = fmul term, r
  term = fdiv term, 6.0
  s = fadd s, term
  term = fmul term, r
  term = fdiv term, 7.0
  s = fadd s, term
  term = fmul term, r
  term = fdiv term, 8.0
  s = fadd s, term
  term = fmul term, r
  term = fdiv term, 9.0
  s = fadd s, term
  term = fmul term, r
  term = fdiv term, 10.0
  s = fadd s, term
  term = fmul term, r
  term = fdiv term, 11.0
  s = fadd s, term
  term = fmul term, r
  term = fdiv term, 12.0
  s = fadd s, term
  term = fmul term, r
  term = fdiv term, 13.0
  s = fadd s, term
  term = fmul term, r
  term = fdiv term, 14.0
  s = fadd s, term
  term = fmul term, r
  term = fdiv term, 15.0
  s = fadd s, term
  term = fmul term, r
  term = fdiv term, 16.0
  s = fadd s, term
  term = fmul term, r
  term = fdiv term, 17.0
  s = fadd s, term
  term = fmul term, r
  term = fdiv term, 18.0
  s = fadd s, term
  term = fmul term, r
  term = fdiv term, 19.0
  s = fadd s, term
  term = fmul term, r
  term = fdiv term, 20.0
  s = fadd s, term
  nlo = get_lo y
  ns = ixor nlo, 0x80000000
  ns = isub ns, 0x80000000
  nsh = ishl ns, 20
  hi = iadd nsh, 0x3FF00000
  sc = set_hi one, hi
  result = fmul s, sc
  ret result
"""

SIN_KERNEL = """\
# sin with magic-constant quadrant reduction and two Taylor polynomials
func sin_kernel(x) -> result
  const invpio2 = 0x1.45f306dc9c883p-1
  const toint = 0x1.8p52
  const pio2hi = 0x1.921fb54400000p0
  const pio2lo = 0x1.0b4611a626331p-34
  const one = 1.0
  t0 = fmul x, invpio2
  t1 = fadd t0, toint
  fn = fsub t1, toint
  h = fmul fn, pio2hi
  r = fsub x, h
  l = fmul fn, pio2lo
  r = fsub r, l
  nlo = get_lo t1
  j = iand nlo, 3
  rr = fmul r, r
  sterm = fmov r
  s = fmov r
  sterm = fmul sterm, rr
  sterm = fdiv sterm, 6.0
  s = fsub s, sterm
  sterm = fmul sterm, rr
  sterm = fdiv sterm, 20.0
  s = fadd s, sterm
  sterm = fmul sterm, rr
  sterm = fdiv sterm, 42.0
  s = fsub s, sterm
  sterm = fmul sterm, rr
  sterm = fdiv sterm, 72.0
  s = fadd s, sterm
  sterm = fmul sterm, rr
  sterm = fdiv sterm, 110.0
  s = fsub s, sterm
  sterm = fmul sterm, rr
  sterm = fdiv sterm, 156.0
  s = fadd s, sterm
  sterm = fmul sterm, rr
  sterm = fdiv sterm, 210.0
  s = fsub s, sterm
  cterm = fmov one
  c = fmov one
  cterm = fmul cterm, rr
  cterm = fdiv cterm, 2.0
  c = fsub c, cterm
  cterm = fmul cterm, rr
  cterm = fdiv cterm, 12.0
  c = fadd c, cterm
  cterm = fmul cterm, rr
  cterm = fdiv cterm, 30.0
  c = fsub c, cterm
  cterm = fmul cterm, rr
  cterm = fdiv cterm, 56.0
  c = fadd c, cterm
  cterm = fmul cterm, rr
  cterm = fdiv cterm, 90.0
  c = fsub c, cterm
  cterm = fmul cterm, rr
  cterm = fdiv cterm, 132.0
  c = fadd c, cterm
  cterm = fmul cterm, rr
  cterm = fdiv cterm, 182.0
  c = fsub c, cterm
  c0 = icmp eq, j, 0
  branch c0, q0
  c1 = icmp eq, j, 1
  branch c1, q1
  c2 = icmp eq, j, 2
  branch c2, q2
  result = fneg c
  ret result
q0:
  result = fmov s
  ret result
q1:
  result = fmov c
  ret result
q2:
  result = fneg s
  ret result
"""

UNION_SCALE_KERNEL = """\
# multiply by 8 by adding 3 to the biased exponent in the high word
func union_scale_kernel(x) -> y
  t = fdiv x, 3.0
  hi = get_hi t
  hi2 = iadd hi, 0x00300000
  y = set_hi t, hi2
  ret y
"""

ACCUM_KERNEL = """\
# add the input to itself 10000 times; plain rounding error only
func accum_kernel(x) -> s
  s = fconst 0.0
  i = iconst 0
top:
  s = fadd s, x
  i = iadd i, 1
  c = icmp lt, i, 10000
  branch c, top
  ret s
"""

CANCEL_KERNEL = """\
# benign cancellation: (x + 1e-4) - x
func cancel_kernel(x) -> y
  const eps = 1e-4
  t = fadd x, eps
  y = fsub t, x
  ret y
"""


@dataclass(frozen=True)
class Kernel:
    name: str
    source: str
    oracle_fn: str | None
    domain: tuple  # (lo, hi, count) with lo/hi as decimal strings

    @property
    def program(self):
        return tac.parse_program(self.source)


_KERNELS = (
    Kernel("round_kernel", ROUND_KERNEL, None, ("-100", "100", 1000)),
    Kernel("exp_kernel", EXP_KERNEL, "exp", ("-1", "1", 1000)),
    Kernel("sin_kernel", SIN_KERNEL, "sin", ("-4", "4", 1000)),
    Kernel("union_scale_kernel", UNION_SCALE_KERNEL, None, ("-4", "4", 1000)),
    Kernel("accum_kernel", ACCUM_KERNEL, None, ("0", "1", 1000)),
    Kernel("cancel_kernel", CANCEL_KERNEL, None, ("-10", "10", 1000)),
)


def builtin_kernels():
    return {k.name: k for k in _KERNELS}


def get_kernel(name):
    try:
        return builtin_kernels()[name]
    except KeyError:
        raise KeyError("unknown kernel %r; have %s"
                       % (name, sorted(builtin_kernels()))) from None


def _as_scaled_int(v):
    """(signed integer significand, base-2 exponent of its unit)."""
    if v.cls == mp.ZERO:
        return 0, 0
    if v.cls != mp.NORMAL:
        raise ValueError("grid endpoints must be finite")
    return v.sign * v.mant, v.exp - v.prec + 1


def grid(lo, hi, count, p=53, policy=None):
    """count points lo + i*(hi-lo)/count for i in [0, count), each the
    result of a single rounding of the exact rational value."""
    if count < 1:
        raise ValueError("count must be positive")
    if policy is None:
        policy = mp.BINARY64 if p == 53 else mp.UNBOUNDED
    if isinstance(lo, str):
        lo = mp.from_decimal_string(lo, 64)
    if isinstance(hi, str):
        hi = mp.from_decimal_string(hi, 64)
    ml, el = _as_scaled_int(lo)
    mh, eh = _as_scaled_int(hi)
    e = min(el, eh) if ml and mh else (el if ml else eh)
    if ml:
        ml <<= el - e
    if mh:
        mh <<= eh - e
    out = []
    for i in range(count):
        num = ml * (count - i) + mh * i
        if num == 0:
            out.append(mp.zero(p))
            continue
        sign = 1 if num > 0 else -1
        out.append(mp._round_frac(sign, abs(num), count, e, p, policy))
    return out


def digits_for(p):
    """Decimal digits that guarantee an exact round-trip at p bits."""
    return int(math.ceil(p * math.log10(2))) + 1


def write_inputs(path, values, p=53):
    digits = digits_for(p)
    with open(path, "w") as fh:
        for v in values:
            fh.write(mp.to_sci_string(v, digits) + "\n")


def read_inputs(path, p=53, policy=mp.BINARY64):
    values = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            values.append(mp.from_decimal_string(line, p, policy))
    return values


def default_inputs(kernel, p=53):
    lo, hi, count = kernel.domain
    return grid(lo, hi, count, p,
                mp.BINARY64 if p == 53 else mp.UNBOUNDED)
