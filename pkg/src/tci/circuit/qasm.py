"""Parser for a small OpenQASM 2.0 subset.

Accepted statements::

    OPENQASM 2.0;
    include "qelib1.inc";          (optional, ignored)
    qreg q[N];                     (exactly one, before any gate)
    rx(expr) q[i];
    rz(expr) q[i];
    rzz(expr) q[i], q[j];
    barrier q;  |  barrier q[i], q[j], ...;

Angles are arithmetic over decimal literals and ``pi`` with ``+ - * /``,
unary minus and parentheses. ``//`` starts a comment.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from ..core import ErrorKind, TciError
from .gates import Circuit, Gate

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<str>"[^"\n]*")
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|[()\[\];,+\-*/])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def _fail(msg: str, tok: Token | None = None, line: int | None = None, col: int | None = None):
    if tok is not None:
        line, col = tok.line, tok.col
    where = f"line {line}, column {col}: " if line is not None else ""
    raise TciError(ErrorKind.PARSE_FAILURE, where + msg)


def tokenize(source: str) -> list[Token]:
    out: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            _fail(f"unexpected character {source[pos]!r}", line=line, col=pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0
        self.reg_name: str | None = None
        self.circuit: Circuit | None = None

    # --- token helpers
    def peek(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.advance()
        if tok.text != text:
            _fail(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok)
        return tok

    def expect_kind(self, kind: str, what: str) -> Token:
        tok = self.advance()
        if tok.kind != kind:
            _fail(f"expected {what}, found {tok.text or 'end of input'!r}", tok)
        return tok

    # --- expressions
    def expr(self) -> float:
        val = self.term()
        while self.peek().text in ("+", "-"):
            op = self.advance().text
            rhs = self.term()
            val = val + rhs if op == "+" else val - rhs
        return val

    def term(self) -> float:
        val = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.advance()
            rhs = self.unary()
            if op.text == "*":
                val *= rhs
            else:
                if rhs == 0.0:
                    _fail("division by zero in angle expression", op)
                val /= rhs
        return val

    def unary(self) -> float:
        if self.peek().text == "-":
            self.advance()
            return -self.unary()
        if self.peek().text == "+":
            self.advance()
            return self.unary()
        return self.atom()

    def atom(self) -> float:
        tok = self.advance()
        if tok.kind == "num":
            return float(tok.text)
        if tok.kind == "id" and tok.text == "pi":
            return math.pi
        if tok.text == "(":
            val = self.expr()
            self.expect(")")
            return val
        _fail(f"malformed expression near {tok.text or 'end of input'!r}", tok)

    # --- operands
    def qubit(self) -> int:
        name = self.expect_kind("id", "qubit register name")
        if name.text != self.reg_name:
            _fail(f"unknown register {name.text!r}", name)
        self.expect("[")
        idx_tok = self.expect_kind("num", "qubit index")
        if not idx_tok.text.isdigit():
            _fail(f"qubit index must be a nonnegative integer, found {idx_tok.text!r}", idx_tok)
        idx = int(idx_tok.text)
        if idx >= self.circuit.num_qubits:
            _fail(f"qubit index {idx} out of range for register of size {self.circuit.num_qubits}", idx_tok)
        self.expect("]")
        return idx

    # --- statements
    def parse(self) -> Circuit:
        head = self.expect_kind("id", "OPENQASM header")
        if head.text != "OPENQASM":
            _fail("source must start with 'OPENQASM 2.0;'", head)
        ver = self.expect_kind("num", "version number")
        if ver.text not in ("2.0", "2"):
            _fail(f"unsupported OpenQASM version {ver.text}", ver)
        self.expect(";")
        while self.peek().kind != "eof":
            self.statement()
        if self.circuit is None:
            _fail("no qreg declared", self.peek())
        return self.circuit

    def statement(self) -> None:
        tok = self.advance()
        word = tok.text
        if word == "include":
            self.expect_kind("str", "include file name")
            self.expect(";")
            return
        if word == "qreg":
            if self.circuit is not None:
                _fail("multiple qreg declarations are not supported", tok)
            name = self.expect_kind("id", "register name")
            self.expect("[")
            size_tok = self.expect_kind("num", "register size")
            if not size_tok.text.isdigit() or int(size_tok.text) < 1:
                _fail(f"register size must be a positive integer, found {size_tok.text!r}", size_tok)
            self.expect("]")
            self.expect(";")
            self.reg_name = name.text
            self.circuit = Circuit(int(size_tok.text))
            return
        if tok.kind != "id":
            _fail(f"unexpected {word!r}", tok)
        if word not in ("rx", "rz", "rzz", "barrier"):
            _fail(f"unsupported statement or gate {word!r}", tok)
        if self.circuit is None:
            _fail(f"gate {word!r} before qreg declaration", tok)
        if word == "barrier":
            self.barrier()
            return
        self.expect("(")
        theta = self.expr()
        self.expect(")")
        qubits = [self.qubit()]
        if word == "rzz":
            self.expect(",")
            qubits.append(self.qubit())
            if qubits[0] == qubits[1]:
                _fail("rzz needs two distinct qubits", tok)
        self.expect(";")
        self.circuit.add(Gate(word, tuple(qubits), theta))

    def barrier(self) -> None:
        nxt = self.toks[self.i + 1] if self.i + 1 < len(self.toks) else None
        if self.peek().text == self.reg_name and nxt is not None and nxt.text != "[":
            self.advance()
            self.expect(";")
            self.circuit.barrier()
            return
        qubits = [self.qubit()]
        while self.peek().text == ",":
            self.advance()
            qubits.append(self.qubit())
        self.expect(";")
        # partial barriers still split layers; the subset has no finer semantics
        self.circuit.barrier()


def parse_qasm(source: str) -> Circuit:
    """Parse QASM text into a :class:`Circuit`; errors carry line and column."""
    return _Parser(tokenize(source)).parse()


def to_qasm(circuit: Circuit) -> str:
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{circuit.num_qubits}];"]
    for g in circuit.gates:
        if g.is_barrier:
            lines.append("barrier q;")
        elif g.is_two_qubit:
            lines.append(f"{g.kind}({g.theta!r}) q[{g.qubits[0]}],q[{g.qubits[1]}];")
        else:
            lines.append(f"{g.kind}({g.theta!r}) q[{g.qubits[0]}];")
    return "\n".join(lines) + "\n"
