"""Line-oriented configuration and ledger documents with expressions.

Grammar (informal):

    document := (section | line)*
    section  := '[' name ']'
    line     := key '=' expr            # comments start with '#'
    key      := ident ('[' int ']')? | ident '.' ident
    expr     := term (('+'|'-') term)*
    term     := factor (('*'|'/') factor)*
    factor   := base ('^' factor)?      # right associative power
    base     := number | name | name '[' int ']' | call | list
              | '(' expr ')' | '-' base
    call     := ident '(' args ')'
    list     := '[' expr (',' expr)* ']'

Names resolve against earlier definitions (any section), the builtin
symbols (d, the thresholds, the fugacities), and the table functions
I/K/T/U/J/L/V plus walk counts.  Evaluation is lazy and topological;
cycles and unknown symbols are reported with positions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .bounds import Bound, as_bound


class LedgerSyntaxError(ValueError):
    def __init__(self, line, col, expected):
        super().__init__(f"line {line}, column {col}: expected {expected}")
        self.line = line
        self.col = col
        self.expected = expected


class CycleDetected(ValueError):
    def __init__(self, path):
        super().__init__("cyclic definition: " + " -> ".join(path))
        self.path = path


class UnknownSymbol(ValueError):
    def __init__(self, name, line):
        super().__init__(f"unknown symbol {name!r} (line {line})")
        self.name = name
        self.line = line


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()\[\],]))"
)


def _tokenize(text, lineno):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            raise LedgerSyntaxError(lineno, pos + 1, "a number, name, or operator")
        if m.group("num"):
            out.append(("num", m.group("num"), m.start("num") + 1))
        elif m.group("name"):
            out.append(("name", m.group("name"), m.start("name") + 1))
        else:
            op = m.group("op")
            out.append(("op", "^" if op == "**" else op, m.start("op") + 1))
        pos = m.end()
    out.append(("end", "", len(text) + 1))
    return out


# AST nodes: ("num", str) ("ref", name) ("item", name, index) ("call", name, args)
# ("list", items) ("neg", x) ("bin", op, a, b)


class _Parser:
    def __init__(self, tokens, lineno):
        self.toks = tokens
        self.i = 0
        self.lineno = lineno

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None, value=None, expected=None):
        t = self.toks[self.i]
        if (kind and t[0] != kind) or (value and t[1] != value):
            raise LedgerSyntaxError(self.lineno, t[2], expected or value or kind)
        self.i += 1
        return t

    def parse(self):
        e = self.expr()
        if self.peek()[0] != "end":
            raise LedgerSyntaxError(self.lineno, self.peek()[2], "end of expression")
        return e

    def expr(self):
        node = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            node = ("bin", op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            node = ("bin", op, node, self.factor())
        return node

    def factor(self):
        # unary minus binds looser than the power operator: -2^2 == -(2^2)
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return ("neg", self.factor())
        return self.power()

    def power(self):
        node = self.base()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            node = ("bin", "^", node, self.factor())
        return node

    def base(self):
        t = self.peek()
        if t[0] == "num":
            self.take()
            return ("num", t[1])
        if t[:2] == ("op", "("):
            self.take()
            node = self.expr()
            self.take("op", ")", "closing parenthesis")
            return node
        if t[:2] == ("op", "["):
            self.take()
            items = [self.expr()]
            while self.peek()[:2] == ("op", ","):
                self.take()
                items.append(self.expr())
            self.take("op", "]", "closing bracket")
            return ("list", items)
        if t[0] == "name":
            self.take()
            name = t[1]
            if self.peek()[:2] == ("op", "("):
                self.take()
                args = []
                if self.peek()[:2] != ("op", ")"):
                    args.append(self.expr())
                    while self.peek()[:2] == ("op", ","):
                        self.take()
                        args.append(self.expr())
                self.take("op", ")", "closing parenthesis")
                return ("call", name, args)
            if self.peek()[:2] == ("op", "["):
                self.take()
                idx = self.take("num", expected="integer index")
                self.take("op", "]", "closing bracket")
                return ("item", name, int(idx[1]))
            return ("ref", name)
        raise LedgerSyntaxError(self.lineno, t[2], "a value")


@dataclass
class Entry:
    key: str
    section: str
    ast: object
    lineno: int


@dataclass
class LedgerDocument:
    """Parsed document: ordered entries grouped by section, lazy values."""

    entries: dict = field(default_factory=dict)  # key -> Entry
    order: list = field(default_factory=list)
    path: str = "<string>"

    def section(self, name):
        return {
            k: e for k, e in self.entries.items() if e.section == name
        }

    def sequence_items(self, prefix):
        """Collect key[i] entries as a dense list; gaps are an error."""
        idx = {}
        for k, e in self.entries.items():
            m = re.fullmatch(re.escape(prefix) + r"\[(\d+)\]", k)
            if m:
                idx[int(m.group(1))] = k
        if not idx:
            return None
        out = []
        for i in range(max(idx) + 1):
            if i not in idx:
                raise LedgerValidationError(f"{prefix}[{i}] missing from sequence")
            out.append(idx[i])
        return out


class LedgerValidationError(ValueError):
    pass


def parse_ledger(text, path="<string>"):
    doc = LedgerDocument(path=path)
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"\[([A-Za-z_][A-Za-z_0-9-]*)\]", line)
        if m:
            section = m.group(1)
            continue
        if "=" not in line:
            raise LedgerSyntaxError(lineno, 1, "'key = expression' or '[section]'")
        key, expr_text = line.split("=", 1)
        key = key.strip()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*(\[\d+\]|\.[A-Za-z_][A-Za-z_0-9]*)?", key):
            raise LedgerSyntaxError(lineno, 1, "a key like name, name[0] or name.attr")
        ast = _Parser(_tokenize(expr_text, lineno), lineno).parse()
        if key in doc.entries:
            raise LedgerValidationError(f"duplicate key {key!r} (line {lineno})")
        doc.entries[key] = Entry(key=key, section=section, ast=ast, lineno=lineno)
        doc.order.append(key)
    return doc


class Evaluator:
    """Topological evaluation of a document against an environment.

    env: name -> value (Bound / number / tuple); functions: name -> callable.
    """

    def __init__(self, doc, env=None, functions=None):
        self.doc = doc
        self.env = dict(env or {})
        self.functions = dict(functions or {})
        self.values = {}
        self._stack = []

    def value(self, key):
        if key in self.values:
            return self.values[key]
        if key in self._stack:
            raise CycleDetected(self._stack[self._stack.index(key):] + [key])
        entry = self.doc.entries.get(key)
        if entry is None:
            raise UnknownSymbol(key, 0)
        self._stack.append(key)
        try:
            val = self._eval(entry.ast, entry.lineno)
        finally:
            self._stack.pop()
        self.values[key] = val
        return val

    def evaluate_all(self):
        for key in self.doc.order:
            self.value(key)
        return self.values

    def _eval(self, ast, lineno):
        kind = ast[0]
        if kind == "num":
            return Bound(ast[1])
        if kind == "neg":
            return -self._eval(ast[1], lineno)
        if kind == "list":
            return tuple(self._eval(a, lineno) for a in ast[1])
        if kind == "ref":
            name = ast[1]
            if name in self.doc.entries:
                return self.value(name)
            if name in self.env:
                v = self.env[name]
                return v
            raise UnknownSymbol(name, lineno)
        if kind == "item":
            name, idx = ast[1], ast[2]
            key = f"{name}[{idx}]"
            if key in self.doc.entries:
                return self.value(key)
            if name in self.env:
                seq = self.env[name]
                return seq[idx]
            raise UnknownSymbol(key, lineno)
        if kind == "call":
            name, args = ast[1], ast[2]
            fn = self.functions.get(name)
            if fn is None:
                raise UnknownSymbol(name + "()", lineno)
            vals = [self._eval(a, lineno) for a in args]
            return fn(*vals)
        if kind == "bin":
            op, a, b = ast[1], ast[2], ast[3]
            va = self._eval(a, lineno)
            vb = self._eval(b, lineno)
            if op == "+":
                return va + vb
            if op == "-":
                return va - vb
            if op == "*":
                return va * vb
            if op == "/":
                return va / vb
            if op == "^":
                power = vb
                if isinstance(power, Bound):
                    if power.width != 0 or power.lo != int(power.lo):
                        raise LedgerValidationError(
                            f"line {lineno}: exponent must be an integer"
                        )
                    power = int(power.lo)
                return va ** power
        raise AssertionError(f"bad node {ast!r}")


def builtin_functions(table=None, walk_tables=None, extra=None):
    """Function environment: interval literals, min/max, table lookups."""

    def _pt(arg):
        if isinstance(arg, tuple):
            return tuple(int(round(float(as_bound(a).mid))) for a in arg)
        if isinstance(arg, Bound):
            v = int(round(float(arg.mid)))
            return (v,) if v else ()
        return tuple(arg)

    def _int(b):
        return int(round(float(as_bound(b).mid)))

    fns = {
        "interval": lambda lo, hi: Bound(lo.lo if isinstance(lo, Bound) else lo,
                                         hi.hi if isinstance(hi, Bound) else hi),
        "max": lambda *a: _fold(lambda x, y: x.max(y), a),
        "min": lambda *a: _fold(lambda x, y: x.min(y), a),
        "sqrt": lambda a: as_bound(a).sqrt(),
    }
    if table is not None:
        fns.update(
            {
                "I": lambda n, l, x=(): table.base(_int(n), _int(l), _pt(x)),
                "K": lambda n, l, x=(): table.abs_kernel(_int(n), _int(l), _pt(x)),
                "T": lambda n, l, x=(): table.curvature_kernel(_int(n), _int(l), _pt(x)),
                "U": lambda n, l, x=(): table.sine_kernel(_int(n), _int(l), _pt(x)),
                "J": lambda n, l, x=(): table.weighted_line(_int(n), _int(l), _pt(x)),
                "L": lambda n, x=(): table.mixed_green(_int(n), _pt(x)),
                "V": lambda n, l: table.dispersion_square(_int(n), _int(l)),
            }
        )
    if walk_tables:
        for kind, wt in walk_tables.items():
            name = {"srw": "p", "nbw": "b", "bond-sa": "a", "saw": "c"}[kind]
            fns[name] = (
                lambda n, x=(), _wt=wt: Bound(_wt.counts.get((_int(n), _pt(x)), 0))
            )
    fns["origin"] = ()
    if extra:
        fns.update(extra)
    return fns


def _fold(f, items):
    out = as_bound(items[0]) if not isinstance(items[0], tuple) else items[0]
    for x in items[1:]:
        out = f(out, as_bound(x))
    return out
