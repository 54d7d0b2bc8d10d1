"""Three-address-code programs: text format, parser, validator, printer.

Variables are mutable registers, not SSA.  Float registers hold dual-lane
values in the engine; integer registers are 64-bit two's complement.
Float literals are stored exactly at parse time and rounded once to the
engine's original precision when a run is set up.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import mpfloat as mp
from .mpfloat import MPFloat

# operand kind tags
VAR = "var"
FLIT = "flit"
ILIT = "ilit"
LABEL = "label"
PRED = "pred"

PREDS = ("eq", "ne", "lt", "le", "gt", "ge")

# opcode -> (operand kinds, dst kind);  "x" means int-or-float pair (icmp)
OPCODES = {
    "fconst": (("flit",), "f"),
    "fmov": (("f",), "f"),
    "fneg": (("f",), "f"),
    "fabs": (("f",), "f"),
    "fsqrt": (("f",), "f"),
    "ffloor": (("f",), "f"),
    "fadd": (("f", "f"), "f"),
    "fsub": (("f", "f"), "f"),
    "fmul": (("f", "f"), "f"),
    "fdiv": (("f", "f"), "f"),
    "get_hi": (("f",), "i"),
    "get_lo": (("f",), "i"),
    "make_f": (("i", "i"), "f"),
    "set_hi": (("f", "i"), "f"),
    "set_lo": (("f", "i"), "f"),
    "iconst": (("ilit",), "i"),
    "iadd": (("i", "i"), "i"),
    "isub": (("i", "i"), "i"),
    "iand": (("i", "i"), "i"),
    "ior": (("i", "i"), "i"),
    "ixor": (("i", "i"), "i"),
    "ishl": (("i", "i"), "i"),
    "ishr": (("i", "i"), "i"),
    "icmp": (("pred", "x", "x"), "i"),
    "branch": (("i", "label"), None),
    "jump": (("label",), None),
    "ret": (("v",), None),
}

FLOAT_DST_OPS = frozenset(
    op for op, (_, d) in OPCODES.items() if d == "f"
)

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z_0-9.]*$")
_INT_RE = re.compile(r"^[+-]?(0[xX][0-9a-fA-F]+|\d+)$")
_FUNC_RE = re.compile(r"^func\s+(\w+)\s*\(([^)]*)\)\s*->\s*(\w+)$")
_CONST_RE = re.compile(r"^const\s+(\w+)\s*=\s*(\S+)$")
_LABEL_RE = re.compile(r"^(\w+):$")
_ANNOT_RE = re.compile(r"^(reducePrec|resumePrec|computeErr)\s*\(.*\)\s*;?$")


class TacSyntaxError(ValueError):
    def __init__(self, line_no, message):
        super().__init__("line %d: %s" % (line_no, message))
        self.line_no = line_no


class TacValidationError(ValueError):
    def __init__(self, diagnostics):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # UndefinedLabel | TypeMismatch | UndefinedVariable | UnassignedReturn | DuplicateName | MissingReturn
    instr_id: int  # -1 when not tied to one instruction
    message: str

    def __str__(self):
        return "%s(instr %d): %s" % (self.kind, self.instr_id, self.message)


@dataclass(frozen=True)
class ConstDef:
    name: str
    text: str
    fval: MPFloat  # exact value (never rounded)
    is_int: bool
    ival: int | None = None


@dataclass(frozen=True)
class TacInstr:
    id: int
    op: str
    dst: str | None
    srcs: tuple  # of (kind, payload[, text]) tuples
    srcloc: str = ""


@dataclass
class TacProgram:
    name: str
    params: list
    instrs: list
    return_var: str
    labels: dict = field(default_factory=dict)
    consts: dict = field(default_factory=dict)

    def instr_ids(self):
        return range(len(self.instrs))


def _parse_float_literal(text, line_no):
    try:
        if "x" in text or "X" in text:
            return mp.from_hex_string(text)
        return mp.from_decimal_string(text, 300)
    except mp.ParseError as exc:
        raise TacSyntaxError(line_no, str(exc)) from exc


def _parse_int_literal(text, line_no):
    try:
        return int(text, 0)
    except ValueError as exc:
        raise TacSyntaxError(line_no, "bad integer literal %r" % text) from exc


def _looks_float(text):
    if "x" in text or "X" in text:
        return "p" in text or "P" in text
    return "." in text or "e" in text or "E" in text


def _parse_operand(text, kind, consts, line_no):
    if kind == "pred":
        if text not in PREDS:
            raise TacSyntaxError(line_no, "bad predicate %r" % text)
        return (PRED, text)
    if kind == "label":
        return (LABEL, text)
    if kind == "ilit":
        if text in consts:
            c = consts[text]
            if not c.is_int:
                raise TacSyntaxError(line_no, "const %s is not integer" % text)
            return (ILIT, c.ival, text)
        return (ILIT, _parse_int_literal(text, line_no), text)
    if kind == "flit":
        if text in consts:
            return (FLIT, consts[text].fval, text)
        return (FLIT, _parse_float_literal(text, line_no), text)
    if _NAME_RE.match(text) and text not in consts:
        return (VAR, text)
    if text in consts:
        c = consts[text]
        if kind == "i":
            if not c.is_int:
                raise TacSyntaxError(line_no, "const %s is not integer" % text)
            return (ILIT, c.ival, text)
        return (FLIT, c.fval, text)
    # literal
    if kind == "i":
        return (ILIT, _parse_int_literal(text, line_no), text)
    if kind in ("f", "flit"):
        return (FLIT, _parse_float_literal(text, line_no), text)
    if kind in ("x", "v"):
        if _looks_float(text):
            return (FLIT, _parse_float_literal(text, line_no), text)
        if _INT_RE.match(text):
            return (ILIT, _parse_int_literal(text, line_no), text)
        return (FLIT, _parse_float_literal(text, line_no), text)
    raise TacSyntaxError(line_no, "bad operand %r" % text)


def _split_operands(text):
    return [t.strip() for t in text.split(",")] if text.strip() else []


def parse_program(text, strict=True):
    """Parse TAC text.  With strict=True, validation diagnostics raise."""
    name = None
    params = []
    return_var = None
    consts = {}
    labels = {}
    instrs = []
    pending_labels = []

    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if _ANNOT_RE.match(line):
            continue  # barrier annotations from pretty_print round back in
        if name is None:
            m = _FUNC_RE.match(line)
            if not m:
                raise TacSyntaxError(line_no, "expected func header")
            name = m.group(1)
            params = [p.strip() for p in m.group(2).split(",") if p.strip()]
            return_var = m.group(3)
            continue
        m = _CONST_RE.match(line)
        if m:
            cname, literal = m.group(1), m.group(2)
            if _looks_float(literal):
                consts[cname] = ConstDef(cname, literal,
                                         _parse_float_literal(literal, line_no), False)
            else:
                ival = _parse_int_literal(literal, line_no)
                consts[cname] = ConstDef(cname, literal,
                                         mp.from_int(ival) if ival else mp.zero(),
                                         True, ival)
            continue
        m = _LABEL_RE.match(line)
        if m and m.group(1) not in OPCODES:
            pending_labels.append((m.group(1), line_no))
            continue

        iid = len(instrs)
        for lbl, lno in pending_labels:
            if lbl in labels:
                raise TacSyntaxError(lno, "duplicate label %r" % lbl)
            labels[lbl] = iid
        pending_labels = []

        if "=" in line:
            dst, _, rhs = line.partition("=")
            dst = dst.strip()
            if not _NAME_RE.match(dst):
                raise TacSyntaxError(line_no, "bad destination %r" % dst)
            parts = rhs.strip().split(None, 1)
            op = parts[0]
            if op not in OPCODES:
                raise TacSyntaxError(line_no, "unknown opcode %r" % op)
            kinds, dkind = OPCODES[op]
            if dkind is None:
                raise TacSyntaxError(line_no, "%s has no destination" % op)
            operand_text = _split_operands(parts[1] if len(parts) > 1 else "")
            if len(operand_text) != len(kinds):
                raise TacSyntaxError(
                    line_no, "%s expects %d operand(s), got %d"
                    % (op, len(kinds), len(operand_text)))
            srcs = tuple(_parse_operand(t, k, consts, line_no)
                         for t, k in zip(operand_text, kinds))
            instrs.append(TacInstr(iid, op, dst, srcs, "line %d" % line_no))
        else:
            parts = line.split(None, 1)
            op = parts[0]
            if op not in OPCODES:
                raise TacSyntaxError(line_no, "unknown opcode %r" % op)
            kinds, dkind = OPCODES[op]
            if dkind is not None:
                raise TacSyntaxError(line_no, "%s needs a destination" % op)
            operand_text = _split_operands(parts[1] if len(parts) > 1 else "")
            if len(operand_text) != len(kinds):
                raise TacSyntaxError(
                    line_no, "%s expects %d operand(s), got %d"
                    % (op, len(kinds), len(operand_text)))
            srcs = tuple(_parse_operand(t, k, consts, line_no)
                         for t, k in zip(operand_text, kinds))
            instrs.append(TacInstr(iid, op, None, srcs, "line %d" % line_no))

    if name is None:
        raise TacSyntaxError(1, "missing func header")
    if pending_labels:
        raise TacSyntaxError(pending_labels[0][1], "label at end of function")
    prog = TacProgram(name, params, instrs, return_var, labels, consts)
    if strict:
        diags = validate(prog)
        if diags:
            raise TacValidationError(diags)
    return prog


def _successors(prog, i):
    instr = prog.instrs[i]
    if instr.op == "ret":
        return ()
    if instr.op == "jump":
        tgt = prog.labels.get(instr.srcs[0][1])
        return (tgt,) if tgt is not None else ()
    if instr.op == "branch":
        tgt = prog.labels.get(instr.srcs[1][1])
        succ = [i + 1] if i + 1 < len(prog.instrs) else []
        if tgt is not None:
            succ.append(tgt)
        return tuple(succ)
    return (i + 1,) if i + 1 < len(prog.instrs) else ()


def validate(prog):
    """Semantic checks; returns a list of diagnostics (empty when valid)."""
    diags = []
    n = len(prog.instrs)
    var_types = {p: "f" for p in prog.params}
    for p in prog.params:
        if p in prog.consts:
            diags.append(Diagnostic("DuplicateName", -1,
                                    "parameter %r shadows a const" % p))

    # pass 1: destination types, with consistency across reassignments
    for instr in prog.instrs:
        if instr.dst is None:
            continue
        dkind = OPCODES[instr.op][1]
        prev = var_types.get(instr.dst)
        if prev is not None and prev != dkind:
            diags.append(Diagnostic(
                "TypeMismatch", instr.id,
                "%s assigned as %s and %s" % (instr.dst, prev, dkind)))
        var_types.setdefault(instr.dst, dkind)

    # pass 2: operand kinds, label targets
    for instr in prog.instrs:
        kinds = OPCODES[instr.op][0]
        icmp_types = []
        for (kindspec, operand) in zip(kinds, instr.srcs):
            okind = operand[0]
            if okind == LABEL:
                if operand[1] not in prog.labels:
                    diags.append(Diagnostic("UndefinedLabel", instr.id,
                                            "no label %r" % operand[1]))
                continue
            if okind == PRED:
                continue
            if okind == VAR:
                vtype = var_types.get(operand[1])
                if vtype is None:
                    diags.append(Diagnostic("UndefinedVariable", instr.id,
                                            "%r is never assigned" % operand[1]))
                    continue
            else:
                vtype = "i" if okind == ILIT else "f"
            if kindspec in ("f", "i") and vtype != kindspec:
                diags.append(Diagnostic(
                    "TypeMismatch", instr.id,
                    "%s operand %r has type %s" % (instr.op, operand[1], vtype)))
            if kindspec == "x":
                icmp_types.append(vtype)
        if len(icmp_types) == 2 and icmp_types[0] != icmp_types[1]:
            diags.append(Diagnostic("TypeMismatch", instr.id,
                                    "icmp operands of different types"))

    if n == 0:
        diags.append(Diagnostic("UnassignedReturn", -1, "empty body"))
        return diags

    # pass 3: definite assignment at each ret (forward must-analysis)
    base = frozenset(prog.params)
    assigned_in = [None] * n
    assigned_in[0] = base
    work = [0]
    while work:
        i = work.pop()
        cur = assigned_in[i]
        instr = prog.instrs[i]
        out = cur | {instr.dst} if instr.dst is not None else cur
        for s in _successors(prog, i):
            prev = assigned_in[s]
            nxt = out if prev is None else (prev & out)
            if prev is None or nxt != prev:
                assigned_in[s] = nxt
                work.append(s)

    saw_ret = False
    for i, instr in enumerate(prog.instrs):
        if assigned_in[i] is None:
            continue  # unreachable
        if instr.op == "ret":
            saw_ret = True
            operand = instr.srcs[0]
            if operand[0] == VAR and operand[1] not in assigned_in[i] | {instr.dst}:
                if operand[1] in prog.consts:
                    continue
                diags.append(Diagnostic(
                    "UnassignedReturn", instr.id,
                    "%r may be unassigned at ret" % operand[1]))
        elif not _successors(prog, i) and instr.op not in ("jump",):
            diags.append(Diagnostic("MissingReturn", instr.id,
                                    "control falls off the end"))
    if not saw_ret:
        diags.append(Diagnostic("UnassignedReturn", -1, "no reachable ret"))
    return diags


def _render_operand(operand):
    kind = operand[0]
    if kind == VAR:
        return operand[1]
    if kind in (FLIT, ILIT):
        return operand[2] if len(operand) > 2 else str(operand[1])
    return operand[1]


def render_instr(instr):
    ops = ", ".join(_render_operand(s) for s in instr.srcs)
    if instr.dst is None:
        return "%s %s" % (instr.op, ops) if ops else instr.op
    return "%s = %s %s" % (instr.dst, instr.op, ops)


def pretty_print(prog, barriers=frozenset()):
    """Render a program; barriered instructions get the three-call wrapping."""
    lines = ["func %s(%s) -> %s" % (prog.name, ", ".join(prog.params),
                                    prog.return_var)]
    for c in prog.consts.values():
        lines.append("  const %s = %s" % (c.name, c.text))
    label_at = {}
    for lbl, idx in prog.labels.items():
        label_at.setdefault(idx, []).append(lbl)
    for instr in prog.instrs:
        for lbl in label_at.get(instr.id, ()):
            lines.append("%s:" % lbl)
        body = render_instr(instr)
        if instr.id in barriers and instr.dst is not None:
            lines.append("  reducePrec(&%s, %d);" % (instr.dst, instr.id))
            lines.append("  %s" % body)
            lines.append("  resumePrec(&%s, %d);" % (instr.dst, instr.id))
            lines.append('  computeErr("%s", &%s, %d);' % (instr.dst, instr.dst,
                                                           instr.id))
        else:
            lines.append("  %s" % body)
    return "\n".join(lines) + "\n"


def programs_equal(a, b):
    """Structural equality used by the parse/print round-trip checks."""
    if (a.name, a.params, a.return_var) != (b.name, b.params, b.return_var):
        return False
    if a.labels != b.labels or len(a.instrs) != len(b.instrs):
        return False
    for x, y in zip(a.instrs, b.instrs):
        if (x.id, x.op, x.dst) != (y.id, y.op, y.dst):
            return False
        if len(x.srcs) != len(y.srcs):
            return False
        for sx, sy in zip(x.srcs, y.srcs):
            if sx[0] != sy[0]:
                return False
            if sx[0] == FLIT:
                if mp.cmp(sx[1], sy[1]) != 0:
                    return False
            elif sx[1] != sy[1]:
                return False
    return True
