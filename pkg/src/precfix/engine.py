"""Dual-precision shadow execution of TAC programs.

Every float register carries two lanes: the original value rounded at
p_orig (IEEE binary64 semantics when p_orig is 53) and a shadow value kept
at p_shadow bits with unbounded exponent.  Control flow is decided by the
original lane only, so both lanes follow the same path.  A per-instruction
relative error sample is produced whenever a float destination is written.

Word-level bit operations (get_hi/get_lo/make_f/set_hi/set_lo) act on the
binary64 encoding of the original lane.  A partial word write generally
cannot be mirrored in the shadow, which is then left untouched and marked
stale; the exception is a source whose shadow still equals its original
value exactly, where the write is replayed cleanly on the shadow too.

Precision barriers demote an instruction's shadow computation: operands
are rounded down to p_orig, the operation runs at p_orig, and the result
is carried back up exactly.

Programs are compiled once per (program, config, barriers, sampling mode)
into a list of closures, one per instruction, so batches over many inputs
pay the dispatch cost only once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import mpfloat as mp
from .mpfloat import MPFloat

_INT_MASK = (1 << 64) - 1
_INT_SIGN = 1 << 63


class EngineError(Exception):
    pass


class StepBudgetExceeded(EngineError):
    pass


class BadBarrier(EngineError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    p_orig: int = 53
    p_shadow: int = 120
    max_steps: int = 50_000_000

    def __post_init__(self):
        if self.p_orig < 2 or self.p_shadow < self.p_orig:
            raise ValueError("need 2 <= p_orig <= p_shadow")


class DualValue:
    """A float register: original lane, shadow lane, staleness flag."""

    __slots__ = ("orig", "shadow", "stale")

    def __init__(self, orig, shadow, stale=False):
        self.orig = orig
        self.shadow = shadow
        self.stale = stale

    def __repr__(self):
        return "DualValue(orig=%r, shadow=%r, stale=%r)" % (
            self.orig, self.shadow, self.stale)


class ErrorSample:
    __slots__ = ("instr_id", "run_index", "dst", "original", "shadow",
                 "rel_err")

    def __init__(self, instr_id, run_index, dst, original, shadow, rel_err):
        self.instr_id = instr_id
        self.run_index = run_index
        self.dst = dst
        self.original = original
        self.shadow = shadow
        self.rel_err = rel_err


@dataclass
class RunTrace:
    program: str
    run_index: int
    inputs: list
    result: DualValue | None
    samples: list
    exec_counts: list
    steps: int
    error: Exception | None = None


def _orig_policy(p_orig):
    return mp.BINARY64 if p_orig == 53 else mp.UNBOUNDED


def make_dual(value, cfg):
    """Admit a value into the engine: round to p_orig, extend the shadow."""
    o = mp.round_to(value, cfg.p_orig, _orig_policy(cfg.p_orig))
    return DualValue(o, mp.extend(o, cfg.p_shadow))


def sync_down(dv, cfg):
    """Overwrite the original lane with the rounded shadow."""
    o = mp.round_to(dv.shadow, cfg.p_orig, _orig_policy(cfg.p_orig))
    return DualValue(o, dv.shadow, False)


def sync_up(dv, cfg):
    """Overwrite the shadow with the extended original lane."""
    return DualValue(dv.orig, mp.extend(dv.orig, cfg.p_shadow), False)


def _rel_err_float(shadow, orig, p_shadow):
    """Relative error as a host float; inf under the usual conventions.
    The difference is formed exactly on aligned integer significands, so
    the only inaccuracy is the final float division."""
    if shadow.cls == mp.NORMAL and orig.cls == mp.NORMAL:
        t = (shadow.exp - shadow.prec) - (orig.exp - orig.prec)
        if -600 < t < 600:
            if t >= 0:
                a = shadow.mant << t
                b = orig.mant
            else:
                a = shadow.mant
                b = orig.mant << -t
            d = a - b if shadow.sign == orig.sign else a + b
            if d == 0:
                return 0.0
            return float(abs(d)) / float(a)
    if shadow.cls == mp.NAN or orig.cls == mp.NAN:
        return math.inf
    if shadow.cls == mp.INF or orig.cls == mp.INF:
        if shadow.cls == mp.INF and orig.cls == mp.INF \
                and shadow.sign == orig.sign:
            return 0.0
        return math.inf
    if shadow.cls == mp.ZERO:
        return 0.0 if orig.cls == mp.ZERO else math.inf
    if orig.cls == mp.ZERO:
        return 1.0
    # exponents beyond host-float range: take the quotient first
    d = mp.sub(shadow, orig, p_shadow)
    if d.cls == mp.ZERO:
        return 0.0
    q = abs(mp.div(d, shadow, 53).to_float())
    return q if q == q else math.inf


_FBIN = {"fadd": mp.add, "fsub": mp.sub, "fmul": mp.mul, "fdiv": mp.div}


class _Ctx:
    """Mutable per-run state shared by the compiled closures."""

    __slots__ = ("samples", "counts", "run_index", "agg", "result")

    def __init__(self, n_instrs):
        self.samples = []
        self.counts = [0] * n_instrs
        self.run_index = 0
        self.agg = None
        self.result = None


def _compile(prog, cfg, barriers, mode):
    """mode: "full" (exact ErrorSample objects), "none", "stream"
    (float errors pushed to ctx.agg)."""
    from . import tac as _tac

    p_o = cfg.p_orig
    p_s = cfg.p_shadow
    policy = _orig_policy(p_o)
    word_ok = (p_o == 53)
    n = len(prog.instrs)

    var_types = {p: "f" for p in prog.params}
    for instr in prog.instrs:
        if instr.dst is not None:
            var_types.setdefault(instr.dst, _tac.OPCODES[instr.op][1])

    const_duals = {}

    def f_getter(operand):
        if operand[0] == "var":
            name = operand[1]
            return lambda env, _n=name: env[_n]
        key = id(operand)
        dv = const_duals.get(key)
        if dv is None:
            dv = make_dual(operand[1], cfg)
            const_duals[key] = dv
        return lambda env, _dv=dv: _dv

    def i_getter(operand):
        if operand[0] == "var":
            name = operand[1]
            return lambda env, _n=name: env[_n]
        val = operand[1] & _INT_MASK
        return lambda env, _v=val: _v

    if mode == "full":
        def make_emit(iid, dst):
            def emit(ctx, dv):
                ctx.samples.append(ErrorSample(
                    iid, ctx.run_index, dst, dv.orig, dv.shadow,
                    mp.relative_error(dv.shadow, dv.orig, p_s)))
            return emit
    elif mode == "stream":
        def make_emit(iid, dst):
            def emit(ctx, dv):
                ctx.agg(iid, dst, _rel_err_float(dv.shadow, dv.orig, p_s))
            return emit
    else:
        def make_emit(iid, dst):
            def emit(ctx, dv):
                pass
            return emit

    code = []
    labels = prog.labels
    for instr in prog.instrs:
        iid = instr.id
        op = instr.op
        dst = instr.dst
        nxt = iid + 1
        barrier = iid in barriers
        emit = make_emit(iid, dst) if dst is not None else None

        if op in _FBIN:
            fn = _FBIN[op]
            ga = f_getter(instr.srcs[0])
            gb = f_getter(instr.srcs[1])
            if barrier:
                def step(env, ctx, fn=fn, ga=ga, gb=gb, dst=dst, iid=iid,
                         nxt=nxt, emit=emit):
                    ctx.counts[iid] += 1
                    a = ga(env)
                    b = gb(env)
                    o = fn(a.orig, b.orig, p_o, policy)
                    s = mp.extend(fn(mp.round_to(a.shadow, p_o, policy),
                                     mp.round_to(b.shadow, p_o, policy),
                                     p_o, policy), p_s)
                    dv = DualValue(o, s)
                    env[dst] = dv
                    emit(ctx, dv)
                    return nxt
            else:
                def step(env, ctx, fn=fn, ga=ga, gb=gb, dst=dst, iid=iid,
                         nxt=nxt, emit=emit):
                    ctx.counts[iid] += 1
                    a = ga(env)
                    b = gb(env)
                    dv = DualValue(fn(a.orig, b.orig, p_o, policy),
                                   fn(a.shadow, b.shadow, p_s))
                    env[dst] = dv
                    emit(ctx, dv)
                    return nxt
        elif op in ("fconst", "fmov", "fneg", "fabs"):
            ga = f_getter(instr.srcs[0])
            un = {"fconst": None, "fmov": None,
                  "fneg": mp.neg, "fabs": mp.abs_}[op]

            def step(env, ctx, ga=ga, un=un, dst=dst, iid=iid, nxt=nxt,
                     emit=emit):
                ctx.counts[iid] += 1
                a = ga(env)
                if un is None:
                    dv = DualValue(a.orig, a.shadow, a.stale)
                else:
                    dv = DualValue(un(a.orig), un(a.shadow), a.stale)
                env[dst] = dv
                emit(ctx, dv)
                return nxt
        elif op in ("fsqrt", "ffloor"):
            ga = f_getter(instr.srcs[0])
            if op == "fsqrt":
                def oper(v, p, pol):
                    return mp.sqrt(v, p, pol)
            else:
                def oper(v, p, pol):
                    return mp.round_to(mp.floor(v), p, pol)

            def step(env, ctx, ga=ga, oper=oper, dst=dst, iid=iid, nxt=nxt,
                     emit=emit, barrier=barrier):
                ctx.counts[iid] += 1
                a = ga(env)
                o = oper(a.orig, p_o, policy)
                if barrier:
                    s = mp.extend(oper(mp.round_to(a.shadow, p_o, policy),
                                       p_o, policy), p_s)
                else:
                    s = oper(a.shadow, p_s, mp.UNBOUNDED)
                dv = DualValue(o, s)
                env[dst] = dv
                emit(ctx, dv)
                return nxt
        elif op in ("get_hi", "get_lo"):
            if not word_ok:
                raise EngineError("word operations need p_orig = 53")
            ga = f_getter(instr.srcs[0])
            hi = (op == "get_hi")

            def step(env, ctx, ga=ga, hi=hi, dst=dst, iid=iid, nxt=nxt):
                ctx.counts[iid] += 1
                bits = mp.to_binary64_bits(ga(env).orig)
                env[dst] = (bits >> 32) if hi else (bits & 0xFFFFFFFF)
                return nxt
        elif op == "make_f":
            if not word_ok:
                raise EngineError("word operations need p_orig = 53")
            gh = i_getter(instr.srcs[0])
            gl = i_getter(instr.srcs[1])

            def step(env, ctx, gh=gh, gl=gl, dst=dst, iid=iid, nxt=nxt,
                     emit=emit):
                ctx.counts[iid] += 1
                bits = ((gh(env) & 0xFFFFFFFF) << 32) | (gl(env) & 0xFFFFFFFF)
                o = mp.from_binary64_bits(bits)
                dv = DualValue(o, mp.extend(o, p_s))
                env[dst] = dv
                emit(ctx, dv)
                return nxt
        elif op in ("set_hi", "set_lo"):
            if not word_ok:
                raise EngineError("word operations need p_orig = 53")
            ga = f_getter(instr.srcs[0])
            gw = i_getter(instr.srcs[1])
            hi = (op == "set_hi")

            def step(env, ctx, ga=ga, gw=gw, hi=hi, dst=dst, iid=iid,
                     nxt=nxt, emit=emit, barrier=barrier):
                ctx.counts[iid] += 1
                a = ga(env)
                w = gw(env) & 0xFFFFFFFF

                def write(val):
                    bits = mp.to_binary64_bits(val)
                    if hi:
                        bits = (bits & 0xFFFFFFFF) | (w << 32)
                    else:
                        bits = (bits >> 32 << 32) | w
                    return mp.from_binary64_bits(bits)

                o = write(a.orig)
                if barrier:
                    dv = DualValue(o, mp.extend(
                        write(mp.round_to(a.shadow, p_o, policy)), p_s))
                elif not a.stale and mp.cmp(a.shadow, a.orig) == 0:
                    dv = DualValue(o, mp.extend(o, p_s))
                else:
                    dv = DualValue(o, a.shadow, True)
                env[dst] = dv
                emit(ctx, dv)
                return nxt
        elif op == "iconst":
            val = instr.srcs[0][1] & _INT_MASK

            def step(env, ctx, val=val, dst=dst, iid=iid, nxt=nxt):
                ctx.counts[iid] += 1
                env[dst] = val
                return nxt
        elif op in ("iadd", "isub", "iand", "ior", "ixor", "ishl", "ishr"):
            gx = i_getter(instr.srcs[0])
            gy = i_getter(instr.srcs[1])
            kind = op

            def step(env, ctx, gx=gx, gy=gy, kind=kind, dst=dst, iid=iid,
                     nxt=nxt):
                ctx.counts[iid] += 1
                x = gx(env)
                y = gy(env)
                if kind == "iadd":
                    r = (x + y) & _INT_MASK
                elif kind == "isub":
                    r = (x - y) & _INT_MASK
                elif kind == "iand":
                    r = x & y
                elif kind == "ior":
                    r = x | y
                elif kind == "ixor":
                    r = x ^ y
                elif kind == "ishl":
                    r = (x << (y & 63)) & _INT_MASK
                else:
                    sh = y & 63
                    if x & _INT_SIGN:
                        r = ((x - (1 << 64)) >> sh) & _INT_MASK
                    else:
                        r = x >> sh
                env[dst] = r
                return nxt
        elif op == "icmp":
            pred = instr.srcs[0][1]
            xo, yo = instr.srcs[1], instr.srcs[2]

            def otype(operand):
                if operand[0] == "var":
                    return var_types.get(operand[1], "f")
                return "i" if operand[0] == "ilit" else "f"

            is_float = otype(xo) == "f" or otype(yo) == "f"
            if is_float:
                ga = f_getter(xo)
                gb = f_getter(yo)

                def step(env, ctx, ga=ga, gb=gb, pred=pred, dst=dst,
                         iid=iid, nxt=nxt):
                    ctx.counts[iid] += 1
                    c = mp.cmp(ga(env).orig, gb(env).orig)
                    if c is None:
                        r = pred == "ne"
                    elif pred == "lt":
                        r = c < 0
                    elif pred == "le":
                        r = c <= 0
                    elif pred == "gt":
                        r = c > 0
                    elif pred == "ge":
                        r = c >= 0
                    elif pred == "eq":
                        r = c == 0
                    else:
                        r = c != 0
                    env[dst] = 1 if r else 0
                    return nxt
            else:
                gx = i_getter(xo)
                gy = i_getter(yo)

                def step(env, ctx, gx=gx, gy=gy, pred=pred, dst=dst,
                         iid=iid, nxt=nxt):
                    ctx.counts[iid] += 1
                    x = gx(env)
                    y = gy(env)
                    if x & _INT_SIGN:
                        x -= 1 << 64
                    if y & _INT_SIGN:
                        y -= 1 << 64
                    if pred == "lt":
                        r = x < y
                    elif pred == "le":
                        r = x <= y
                    elif pred == "gt":
                        r = x > y
                    elif pred == "ge":
                        r = x >= y
                    elif pred == "eq":
                        r = x == y
                    else:
                        r = x != y
                    env[dst] = 1 if r else 0
                    return nxt
        elif op == "branch":
            gc = i_getter(instr.srcs[0])
            tgt = labels[instr.srcs[1][1]]

            def step(env, ctx, gc=gc, tgt=tgt, iid=iid, nxt=nxt):
                ctx.counts[iid] += 1
                return tgt if gc(env) != 0 else nxt
        elif op == "jump":
            tgt = labels[instr.srcs[0][1]]

            def step(env, ctx, tgt=tgt, iid=iid):
                ctx.counts[iid] += 1
                return tgt
        elif op == "ret":
            operand = instr.srcs[0]
            if operand[0] == "var":
                name = operand[1]
                if var_types.get(name) == "i":
                    raise EngineError("ret needs a float variable")

                def step(env, ctx, name=name, iid=iid):
                    ctx.counts[iid] += 1
                    ctx.result = env[name]
                    return -1
            else:
                g = f_getter(operand)

                def step(env, ctx, g=g, iid=iid):
                    ctx.counts[iid] += 1
                    ctx.result = g(env)
                    return -1
        else:
            raise EngineError("unhandled opcode %r" % op)
        code.append(step)
    return code


_CACHE = {}


def _compiled(prog, cfg, barriers, mode):
    key = (id(prog), cfg.p_orig, cfg.p_shadow, barriers, mode)
    hit = _CACHE.get(key)
    if hit is not None and hit[0] is prog:
        return hit[1]
    code = _compile(prog, cfg, barriers, mode)
    _CACHE[key] = (prog, code)  # keep prog alive so ids stay unique
    return code


def _check_barriers(prog, barriers):
    n = len(prog.instrs)
    for b in barriers:
        if not isinstance(b, int) or not 0 <= b < n:
            raise BadBarrier("barrier ids must name instructions of %s"
                             % prog.name)
        if prog.instrs[b].dst is None:
            raise BadBarrier("instruction %d has no destination" % b)


def execute(prog, inputs, cfg=EngineConfig(), barriers=frozenset(),
            run_index=0, sample_mode="full"):
    """Run one input vector.  sample_mode: "full" records ErrorSample
    objects with exact errors, "none" skips error tracking entirely, or
    pass a callable aggregator(instr_id, dst, err_float) for streaming.
    """
    barriers = frozenset(barriers)
    _check_barriers(prog, barriers)
    if len(inputs) != len(prog.params):
        raise EngineError("%s takes %d input(s), got %d"
                          % (prog.name, len(prog.params), len(inputs)))
    agg = sample_mode if callable(sample_mode) else None
    mode = "stream" if agg is not None else sample_mode
    if mode not in ("full", "none", "stream"):
        raise ValueError("bad sample_mode %r" % sample_mode)
    code = _compiled(prog, cfg, barriers, mode)
    ctx = _Ctx(len(prog.instrs))
    ctx.run_index = run_index
    ctx.agg = agg
    env = {}
    for pname, val in zip(prog.params, inputs):
        env[pname] = make_dual(val, cfg)
    pc = 0
    steps = 0
    budget = cfg.max_steps
    while pc >= 0:
        steps += 1
        if steps > budget:
            raise StepBudgetExceeded("%s exceeded %d steps"
                                     % (prog.name, budget))
        pc = code[pc](env, ctx)
    return RunTrace(prog.name, run_index, list(inputs), ctx.result,
                    ctx.samples, ctx.counts, steps)


def run_batch(prog, input_rows, cfg=EngineConfig(), barriers=frozenset(),
              sample_mode="full"):
    """Execute a list of input vectors; failures are recorded per run
    instead of aborting the batch.  Returns a list of RunTrace."""
    traces = []
    for idx, row in enumerate(input_rows):
        if isinstance(row, MPFloat):
            row = [row]
        try:
            traces.append(execute(prog, row, cfg, barriers, idx, sample_mode))
        except EngineError as exc:
            traces.append(RunTrace(prog.name, idx, list(row), None, [],
                                   [0] * len(prog.instrs), 0, exc))
    return traces


def format_sample(sample):
    """Render one error sample in the four-line layout used by traces."""
    shadow = sample.shadow
    orig = sample.original
    absdiff = mp.sub(shadow, orig, max(shadow.prec, orig.prec, 60))
    head = "%s_id%d" % (sample.dst, sample.instr_id)
    return "\n".join([
        head,
        "ORIGINAL:       %s" % _sci15(orig),
        "SHADOW VALUE:   %s" % _sci15(shadow),
        "ABSOLUTE ERROR: %s" % _sci15(absdiff),
        "RELATIVE ERROR: %s" % _sci15(sample.rel_err),
    ])


def _sci15(v):
    if v.cls == mp.NAN:
        return "nan"
    if v.cls == mp.INF:
        return "inf" if v.sign > 0 else "-inf"
    if v.cls == mp.ZERO:
        return "0.00000000000000 * 10^0"
    sign, digits, dexp = mp._decimal_digits(v, 15)
    s = "-" if sign < 0 else ""
    return "%s%s.%s * 10^%d" % (s, digits[0], digits[1:], dexp)


def format_trace(trace):
    return "\n\n".join(format_sample(s) for s in trace.samples)
