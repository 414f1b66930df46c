"""Lexer, parser and pretty-printer for subspace aggregation queries.

    query     := 'SELECT' name (',' name)* fromchain ';'
    fromchain := ('FROM' op)* 'FROM' name
    op        := top_resource | top_point | subspace
    top_*     := ('top_resource' | 'top_point') '(' 'topk' '=' INT ',' 'measure' '=' name ')'
    subspace  := 'subspace' '(' dimspec (',' dimspec)* ')'
    dimspec   := '[' 'dimension' '=' name ',' 'range' '=' ranges ',' 'rel' '=' name
                 [',' 'agg' '=' BOOL] (',' vardef)* [','] ']'
    ranges    := range (('UNION' | '∪') range)*
    range     := '[' ('none' | PATH) ',' PATH ']'
    vardef    := name '=' name '(' name ')'

Keywords are case-insensitive, identifiers are not.  A trailing comma before
``]`` and a ``.`` terminator are accepted as well.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

from .errors import QuerySemanticError, QuerySyntaxError

KEYWORDS = {"SELECT", "FROM", "SUBSPACE", "TOP_POINT", "TOP_RESOURCE", "UNION", "NONE", "TRUE", "FALSE"}
AGG_FUNCS = ("SUM", "COUNT", "MAX", "MIN", "AVG")
DIMSPEC_KEYS = ("dimension", "range", "rel", "agg")
TOP_KEYS = ("topk", "measure")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<path>[A-Za-z_][A-Za-z0-9_]*(?:/[A-Za-z0-9_]+)+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<union>∪)
  | (?P<punct>[\[\]()=,;.])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # KW, IDENT, PATH, INT, PUNCT, EOF
    value: str
    pos: int
    end: int


def _line_col(text: str, pos: int) -> Tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def _syntax_error(text: str, message: str, pos: int, expected=()) -> QuerySyntaxError:
    line, col = _line_col(text, pos)
    return QuerySyntaxError(message, pos, line, col, expected)


def tokenize(text: str) -> List[Token]:
    out: List[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise _syntax_error(text, f"illegal character {text[pos]!r}", pos)
        kind = m.lastgroup
        value = m.group()
        if kind == "ident" and value.upper() in KEYWORDS:
            out.append(Token("KW", value.upper(), pos, m.end()))
        elif kind == "union":
            out.append(Token("KW", "UNION", pos, m.end()))
        elif kind != "ws":
            out.append(Token(kind.upper(), value, pos, m.end()))
        pos = m.end()
    out.append(Token("EOF", "", len(text), len(text)))
    return out


# -- AST -------------------------------------------------------------------------


@dataclass(frozen=True)
class RangeExpr:
    lower: Optional[str]
    upper: str


@dataclass(frozen=True)
class VarDef:
    name: str
    func: str
    arg: str


@dataclass(frozen=True)
class DimSpec:
    dimension: str
    ranges: Tuple[RangeExpr, ...]
    rel: str
    agg: bool = False
    point_vars: Tuple[VarDef, ...] = ()
    resource_vars: Tuple[VarDef, ...] = ()


@dataclass(frozen=True)
class SubspaceSpec:
    dims: Tuple[DimSpec, ...]

    def dim(self, name: str) -> Optional[DimSpec]:
        for d in self.dims:
            if d.dimension == name:
                return d
        return None

    @property
    def point_vars(self) -> Tuple[VarDef, ...]:
        return tuple(v for d in self.dims for v in d.point_vars)

    @property
    def resource_vars(self) -> Tuple[VarDef, ...]:
        return tuple(v for d in self.dims for v in d.resource_vars)


@dataclass(frozen=True)
class TopSpec:
    topk: int
    measure: str

    def __post_init__(self):
        if self.topk < 1:
            raise QuerySemanticError(f"topk must be at least 1, got {self.topk}")


@dataclass(frozen=True)
class TopResource(TopSpec):
    pass


@dataclass(frozen=True)
class TopPoint(TopSpec):
    pass


Operator = Union[TopResource, TopPoint, SubspaceSpec]


@dataclass(frozen=True)
class QueryAst:
    select: Tuple[str, ...]
    pipeline: Tuple[Operator, ...]
    source: str

    def _find(self, cls):
        for op in self.pipeline:
            if type(op) is cls:
                return op
        return None

    @property
    def subspace(self) -> SubspaceSpec:
        return self._find(SubspaceSpec)

    @property
    def top_point(self) -> Optional[TopPoint]:
        return self._find(TopPoint)

    @property
    def top_resource(self) -> Optional[TopResource]:
        return self._find(TopResource)


# -- parser --------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, expected: Sequence[str]):
        t = self.tok
        # a token cut off by the end of input is reported at the end
        pos = len(self.text) if t.end >= len(self.text) else t.pos
        found = "end of input" if t.kind == "EOF" else repr(t.value)
        raise _syntax_error(self.text, f"unexpected {found}", pos, expected)

    def at(self, kind: str, value: Optional[str] = None) -> bool:
        t = self.tok
        return t.kind == kind and (value is None or t.value == value)

    def expect(self, kind: str, value: Optional[str] = None) -> Token:
        if not self.at(kind, value):
            self.fail([value if value is not None else kind])
        t = self.tok
        self.i += 1
        return t

    def name(self) -> str:
        return self.expect("IDENT").value

    def path(self) -> str:
        if self.at("PATH") or self.at("IDENT"):
            t = self.tok
            self.i += 1
            return t.value
        self.fail(["PATH"])

    def key(self) -> str:
        k = self.name()
        self.expect("PUNCT", "=")
        return k

    # query := 'SELECT' name (',' name)* fromchain terminator
    def query(self) -> QueryAst:
        self.expect("KW", "SELECT")
        select = [self.name()]
        while self.at("PUNCT", ","):
            self.i += 1
            select.append(self.name())
        pipeline: List[Operator] = []
        while True:
            self.expect("KW", "FROM")
            if self.at("KW", "TOP_RESOURCE") or self.at("KW", "TOP_POINT"):
                pipeline.append(self.top())
            elif self.at("KW", "SUBSPACE"):
                pipeline.append(self.subspace())
            elif self.at("IDENT"):
                source = self.name()
                break
            else:
                self.fail(["top_resource", "top_point", "subspace", "IDENT"])
        if not (self.at("PUNCT", ";") or self.at("PUNCT", ".")):
            self.fail([";", "."])
        self.i += 1
        if not self.at("EOF"):
            self.fail(["end of input"])
        return _check_pipeline(QueryAst(tuple(select), tuple(pipeline), source))

    def top(self) -> TopSpec:
        cls = TopResource if self.tok.value == "TOP_RESOURCE" else TopPoint
        self.i += 1
        self.expect("PUNCT", "(")
        params = {}
        while True:
            k = self.key().lower()
            if k == "topk":
                v = int(self.expect("INT").value)
            elif k == "measure":
                v = self.name()
            else:
                raise QuerySemanticError(f"unknown keyword parameter {k!r} in {cls.__name__.lower()}")
            if k in params:
                raise QuerySemanticError(f"parameter {k!r} given twice")
            params[k] = v
            if self.at("PUNCT", ","):
                self.i += 1
                continue
            self.expect("PUNCT", ")")
            break
        for k in TOP_KEYS:
            if k not in params:
                raise QuerySemanticError(f"{cls.__name__.lower()} needs {k}")
        return cls(params["topk"], params["measure"])

    def subspace(self) -> SubspaceSpec:
        self.i += 1
        self.expect("PUNCT", "(")
        dims = [self.dimspec()]
        while self.at("PUNCT", ","):
            self.i += 1
            dims.append(self.dimspec())
        self.expect("PUNCT", ")")
        names = [d.dimension for d in dims]
        dup = sorted({n for n in names if names.count(n) > 1})
        if dup:
            raise QuerySemanticError(f"dimension {dup[0]!r} appears twice in subspace")
        return SubspaceSpec(tuple(dims))

    def dimspec(self) -> DimSpec:
        self.expect("PUNCT", "[")
        params = {}
        pvars: List[VarDef] = []
        rvars: List[VarDef] = []
        while True:
            k = self.key()
            lk = k.lower()
            if lk in params:
                raise QuerySemanticError(f"parameter {lk!r} given twice")
            if lk == "dimension":
                params[lk] = self.name()
            elif lk == "range":
                params[lk] = self.ranges()
            elif lk == "rel":
                params[lk] = self.name()
            elif lk == "agg":
                if self.at("KW", "TRUE") or self.at("KW", "FALSE"):
                    params[lk] = self.tok.value == "TRUE"
                    self.i += 1
                else:
                    self.fail(["TRUE", "FALSE"])
            elif self.at("IDENT") and self.peek().kind == "PUNCT" and self.peek().value == "(":
                func = self.name().upper()
                self.expect("PUNCT", "(")
                arg = self.name()
                self.expect("PUNCT", ")")
                (pvars if func in AGG_FUNCS else rvars).append(VarDef(k, func, arg))
            elif self.at("EOF") or self.peek().kind == "EOF":
                self.fail(["IDENT"])
            else:
                raise QuerySemanticError(f"unknown keyword parameter {k!r} in dimension spec")
            if self.at("PUNCT", ","):
                self.i += 1
                if self.at("PUNCT", "]"):
                    self.i += 1
                    break
                continue
            self.expect("PUNCT", "]")
            break
        for k in ("dimension", "range", "rel"):
            if k not in params:
                raise QuerySemanticError(f"dimension spec needs {k}")
        return DimSpec(params["dimension"], params["range"], params["rel"], params.get("agg", False),
                       tuple(pvars), tuple(rvars))

    def ranges(self) -> Tuple[RangeExpr, ...]:
        out = [self.range()]
        while self.at("KW", "UNION"):
            self.i += 1
            out.append(self.range())
        return tuple(out)

    def range(self) -> RangeExpr:
        self.expect("PUNCT", "[")
        if self.at("KW", "NONE"):
            self.i += 1
            lower = None
        else:
            lower = self.path()
        self.expect("PUNCT", ",")
        upper = self.path()
        self.expect("PUNCT", "]")
        return RangeExpr(lower, upper)


def _check_pipeline(ast: QueryAst) -> QueryAst:
    kinds = [type(op) for op in ast.pipeline]
    if SubspaceSpec not in kinds:
        raise QuerySemanticError("query has no subspace operator")
    rank = {TopResource: 0, TopPoint: 1, SubspaceSpec: 2}
    ranks = [rank[k] for k in kinds]
    if ranks != sorted(set(ranks)):
        raise QuerySemanticError(
            "operators must appear once each in the order top_resource, top_point, subspace")
    names = [v.name for v in ast.subspace.point_vars + ast.subspace.resource_vars]
    dup = sorted({n for n in names if names.count(n) > 1})
    if dup:
        raise QuerySemanticError(f"variable {dup[0]!r} defined twice")
    return ast


def parse_query(text: str) -> QueryAst:
    return _Parser(text).query()


def parse_workload(text: str) -> List[str]:
    """Split a workload file into statements (one per ';'-terminated chunk)."""
    return [s.strip() + ";" for s in text.split(";") if s.strip()]


# -- pretty printer --------------------------------------------------------------------


def _fmt_range(r: RangeExpr) -> str:
    return f"[{'none' if r.lower is None else r.lower}, {r.upper}]"


def _fmt_dim(d: DimSpec) -> str:
    parts = [
        f"dimension={d.dimension}",
        "range=" + " UNION ".join(_fmt_range(r) for r in d.ranges),
        f"rel={d.rel}",
        f"agg={'TRUE' if d.agg else 'FALSE'}",
    ]
    parts += [f"{v.name}={v.func}({v.arg})" for v in d.point_vars + d.resource_vars]
    return "[" + ", ".join(parts) + "]"


def _fmt_op(op: Operator) -> str:
    if isinstance(op, SubspaceSpec):
        return "subspace(" + ", ".join(_fmt_dim(d) for d in op.dims) + ")"
    name = "top_resource" if isinstance(op, TopResource) else "top_point"
    return f"{name}(topk={op.topk}, measure={op.measure})"


def pretty_print(ast: QueryAst) -> str:
    chain = "".join(f" FROM {_fmt_op(op)}" for op in ast.pipeline)
    return f"SELECT {', '.join(ast.select)}{chain} FROM {ast.source};"
