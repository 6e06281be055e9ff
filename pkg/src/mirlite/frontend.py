"""MIR-lite frontend: lexer, parser, and lowering into a ULLBC crate.

The textual language mirrors compiler CFG dumps closely enough that examples
can be ported by hand: bodies are ``bbN: { ...; terminator }`` lists, places
are ``x.f0`` / ``x.as Some.f1`` / ``x[copy i]`` / ``*x``, operands carry an
explicit ``move`` / ``copy`` / ``const`` prefix. The full grammar lives in
``docs/grammar.md``.

Parsing runs in two phases: a recursive-descent pass builds a small surface
tree, then the lowerer resolves names, assigns ids, types places (for
downcasts and match arms), and produces `ir.TranslatedCrate`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import ir

OPAQUE_ATTR = "charon::opaque"
RETURN_SLOT = "ret"

KEYWORDS = {
    "type", "struct", "enum", "trait", "impl", "for", "fn", "where", "let",
    "const", "move", "copy", "raw", "true", "false", "goto", "switch",
    "match", "assert", "call", "return", "abort", "unreachable", "drop",
    "nop", "panic", "ub", "otherwise", "as", "use", "Self", "mut", "bool",
    "loop", "if", "else", "break", "continue", "agg", "discriminant",
    "clause", "parent", "item",
} | set(ir.SCALAR_BY_NAME) | {op.value for op in ir.BinOp} | {op.value for op in ir.UnOp}

PUNCT = [
    "::<", "::", "->", "==", "#[", "<", ">", "(", ")", "{", "}", "[", "]",
    ",", ";", ":", "=", "#", ".", "&", "*", "-", "+",
]


class ParseError(Exception):
    def __init__(self, code: str, message: str, span: ir.Span, expected: tuple[str, ...] = ()):
        detail = f" (expected one of: {', '.join(expected)})" if expected else ""
        super().__init__(f"{span.start_line}:{span.start_col}: {code}: {message}{detail}")
        self.code = code
        self.reason = message
        self.span = span
        self.expected = expected


@dataclass
class Token:
    kind: str  # 'ident', 'int', 'lifetime', 'hex', 'punct', 'eof'
    text: str
    line: int
    col: int

    def span(self, file_id: int) -> ir.Span:
        return ir.Span(file_id, self.line, self.col, self.line, self.col + max(len(self.text), 1))


@dataclass
class Comment:
    text: str
    line: int


def tokenize(text: str, file_id: int) -> tuple[list[Token], list[Comment]]:
    tokens: list[Token] = []
    comments: list[Comment] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            j = text.find("\n", i)
            j = n if j < 0 else j
            comments.append(Comment(text[i + 2 : j].strip(), line))
            col += j - i
            i = j
            continue
        start_line, start_col = line, col
        # Raw byte payloads: the token after `raw (` is lexed as hex.
        if (
            len(tokens) >= 2
            and tokens[-2].kind == "ident"
            and tokens[-2].text == "raw"
            and tokens[-1].text == "("
        ):
            j = i
            while j < n and (text[j] in "0123456789abcdefABCDEF_ "):
                j += 1
            raw = text[i:j].replace("_", "").replace(" ", "")
            tokens.append(Token("hex", raw, start_line, start_col))
            col += j - i
            i = j
            continue
        if c == "'":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("lifetime", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("int", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("ident", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        for p in PUNCT:
            if text.startswith(p, i):
                tokens.append(Token("punct", p, start_line, start_col))
                col += len(p)
                i += len(p)
                break
        else:
            span = ir.Span(file_id, line, col, line, col + 1)
            raise ParseError("syntax", f"unexpected character {c!r}", span)
    tokens.append(Token("eof", "", line, col))
    return tokens, comments


# ---------------------------------------------------------------------------
# Surface tree


@dataclass
class SArgs:
    regions: list[str] = field(default_factory=list)
    types: list["STy"] = field(default_factory=list)
    consts: list[ir.ConstantValue] = field(default_factory=list)
    trait_refs: list["STraitRef"] = field(default_factory=list)

    @staticmethod
    def empty() -> "SArgs":
        return SArgs()


# STy: ('scalar',k) ('bool',) ('tuple',[..]) ('ref',region,mut,STy)
#      ('name',ident,SArgs|None,assoc|None) ('self',assoc|None) ('canon',STraitRef,item)
STy = tuple
# STraitRef: ('impl',id,SArgs) ('clause',id) ('parent',ref,i) ('item',ref,name,i) ('self',)
STraitRef = tuple
# SConst: ('scalar',v,kind) ('bool',b) ('raw',bytes,STy) ('unit',) ('adt',STy,variant|None,[SConst])
SConst = tuple
# SPlace: (base_name, [projections]), projection: ('f',i) ('as',name) ('idx',SOperand) ('deref',)
# SOperand: ('move',SPlace) ('copy',SPlace) ('const',SConst)
# SCallee: ('path', [segments], SArgs|None) ('traitref', STraitRef, method, SArgs|None)
#          ('move', SPlace)


@dataclass
class SGenerics:
    regions: list[str] = field(default_factory=list)
    types: list[str] = field(default_factory=list)
    consts: list[tuple[str, ir.ScalarKind]] = field(default_factory=list)
    clauses: list[tuple[STy, str, SArgs, ir.Span]] = field(default_factory=list)
    constraints: list[tuple[STy, STy, ir.Span]] = field(default_factory=list)
    regions_outlive: list[tuple[str, str]] = field(default_factory=list)
    types_outlive: list[tuple[STy, str]] = field(default_factory=list)


@dataclass
class SStmt:
    span: ir.Span
    comments: list[str]
    attrs: list[str]
    kind: tuple


@dataclass
class STerm:
    span: ir.Span
    comments: list[str]
    kind: tuple


@dataclass
class SBlock:
    label: int
    stmts: list[SStmt]
    term: STerm
    span: ir.Span


@dataclass
class SBody:
    lets: list[tuple[str, STy, ir.Span]]
    blocks: list[SBlock]


@dataclass
class SFun:
    name: tuple[str, ...]
    attrs: list[str]
    generics: SGenerics
    params: list[tuple[str, STy]]
    ret: STy
    body: Optional[SBody]
    span: ir.Span


@dataclass
class STypeDecl:
    name: str
    attrs: list[str]
    generics: SGenerics
    # ('struct', [STy]) or ('enum', [(name, [STy], explicit_discr|None)])
    kind: tuple
    span: ir.Span


@dataclass
class STraitDecl:
    name: str
    attrs: list[str]
    generics: SGenerics
    parents: list[tuple[str, SArgs, ir.Span]]
    assoc_types: list[tuple[str, list[tuple[str, SArgs, ir.Span]]]]
    methods: list[tuple[str, SGenerics, list[tuple[str, STy]], STy, ir.Span]]
    span: ir.Span


@dataclass
class SImplDecl:
    attrs: list[str]
    generics: SGenerics
    trait_name: str
    trait_args: SArgs
    self_ty: STy
    assoc_values: list[tuple[str, STy]]
    methods: list[tuple[str, tuple[str, ...], ir.Span]]
    span: ir.Span


@dataclass
class SFile:
    file_id: int
    types: list[STypeDecl] = field(default_factory=list)
    traits: list[STraitDecl] = field(default_factory=list)
    impls: list[SImplDecl] = field(default_factory=list)
    funs: list[SFun] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Parser


class Parser:
    def __init__(self, tokens: list[Token], comments: list[Comment], file_id: int):
        self.tokens = tokens
        self.comments = comments
        self.file_id = file_id
        self.pos = 0
        self.comment_pos = 0

    # -- token plumbing ------------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if self.pos < len(self.tokens) - 1:
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind in ("punct", "ident")

    def at_kind(self, kind: str) -> bool:
        return self.peek().kind == kind

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            tok = self.peek()
            raise ParseError(
                "syntax", f"unexpected {tok.text!r}", tok.span(self.file_id), (text,)
            )
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind != "ident" or tok.text in KEYWORDS:
            raise ParseError("syntax", f"unexpected {tok.text!r}", tok.span(self.file_id), (what,))
        return self.advance()

    def path_segment(self) -> str:
        # Non-leading path segments may shadow keywords (core::panicking::panic).
        tok = self.peek()
        if tok.kind != "ident":
            raise ParseError(
                "syntax", f"unexpected {tok.text!r}", tok.span(self.file_id), ("path segment",)
            )
        return self.advance().text

    def expect_int(self) -> int:
        tok = self.peek()
        if tok.kind != "int":
            raise ParseError("syntax", f"unexpected {tok.text!r}", tok.span(self.file_id), ("integer",))
        self.advance()
        return int(tok.text)

    def span_from(self, start: Token) -> ir.Span:
        last = self.tokens[max(self.pos - 1, 0)]
        return ir.Span(
            self.file_id, start.line, start.col, last.line, last.col + max(len(last.text), 1)
        )

    def take_comments(self, before_line: int) -> list[str]:
        out = []
        while (
            self.comment_pos < len(self.comments)
            and self.comments[self.comment_pos].line < before_line
        ):
            out.append(self.comments[self.comment_pos].text)
            self.comment_pos += 1
        return out

    def skip_comments_before(self, line: int) -> None:
        while self.comment_pos < len(self.comments) and self.comments[self.comment_pos].line < line:
            self.comment_pos += 1

    # -- attributes ------------------------------------------------------------

    def parse_attrs(self) -> list[str]:
        attrs = []
        while self.at("#["):
            self.advance()
            segments = [self._attr_segment()]
            while self.accept("::"):
                segments.append(self._attr_segment())
            self.expect("]")
            attrs.append("::".join(segments))
        return attrs

    def _attr_segment(self) -> str:
        tok = self.peek()
        if tok.kind != "ident":
            raise ParseError("syntax", f"bad attribute segment {tok.text!r}", tok.span(self.file_id))
        return self.advance().text

    # -- types -------------------------------------------------------------------

    def parse_ty(self) -> STy:
        tok = self.peek()
        if tok.text in ir.SCALAR_BY_NAME:
            self.advance()
            return ("scalar", ir.SCALAR_BY_NAME[tok.text])
        if tok.text == "bool":
            self.advance()
            return ("bool",)
        if tok.text == "(":
            self.advance()
            items = []
            while not self.at(")"):
                items.append(self.parse_ty())
                if not self.accept(","):
                    break
            self.expect(")")
            return ("tuple", items)
        if tok.text == "&":
            self.advance()
            region = ir.ERASED_REGION
            if self.at_kind("lifetime"):
                region = self.advance().text
            mutable = self.accept("mut")
            return ("ref", region, mutable, self.parse_ty())
        if tok.text == "Self":
            self.advance()
            assoc = None
            if self.at("::"):
                self.advance()
                assoc = self.expect_ident("associated type name").text
            return ("self", assoc)
        if tok.text == "{":
            ref = self.parse_braced_trait_ref()
            self.expect("::")
            item = self.expect_ident("associated type name").text
            return ("canon", ref, item)
        name = self.expect_ident("type").text
        args = None
        if self.at("<"):
            args = self.parse_generic_args()
        assoc = None
        if self.at("::") and self.peek(1).kind == "ident" and self.peek(1).text not in KEYWORDS:
            # `T::Item` associated-type sugar (valid on type variables only;
            # checked during lowering).
            self.advance()
            assoc = self.expect_ident("associated type name").text
        return ("name", name, args, assoc)

    def parse_braced_trait_ref(self) -> STraitRef:
        self.expect("{")
        ref = self.parse_trait_ref()
        self.expect("}")
        return ref

    def parse_trait_ref(self) -> STraitRef:
        tok = self.peek()
        if tok.text == "impl":
            self.advance()
            self.expect("#")
            impl_id = self.expect_int()
            args = self.parse_generic_args() if self.at("<") else SArgs.empty()
            return ("impl", impl_id, args)
        if tok.text == "clause":
            self.advance()
            self.expect("#")
            return ("clause", self.expect_int())
        if tok.text == "parent":
            self.advance()
            self.expect("(")
            base = self.parse_trait_ref()
            self.expect(",")
            index = self.expect_int()
            self.expect(")")
            return ("parent", base, index)
        if tok.text == "item":
            self.advance()
            self.expect("(")
            base = self.parse_trait_ref()
            self.expect(",")
            name = self.expect_ident("associated type name").text
            self.expect(",")
            index = self.expect_int()
            self.expect(")")
            return ("item", base, name, index)
        if tok.text == "Self":
            self.advance()
            return ("self",)
        raise ParseError(
            "syntax",
            f"unexpected {tok.text!r}",
            tok.span(self.file_id),
            ("impl#", "clause#", "parent", "item", "Self"),
        )

    def parse_generic_args(self, already_open: bool = False) -> SArgs:
        if not already_open:
            self.expect("<")
        args = SArgs.empty()
        while not self.at(">") and not self.at(";"):
            tok = self.peek()
            if tok.kind == "lifetime":
                args.regions.append(self.advance().text)
            elif tok.kind == "int" or tok.text == "-":
                args.consts.append(self.parse_scalar_const())
            elif tok.text in ("true", "false"):
                args.consts.append(ir.const_bool(self.advance().text == "true"))
            else:
                args.types.append(self.parse_ty())
            if not self.accept(","):
                break
        if self.accept(";"):
            while not self.at(">"):
                args.trait_refs.append(self.parse_trait_ref())
                if not self.accept(","):
                    break
        self.expect(">")
        return args

    def parse_scalar_const(self) -> ir.ConstantValue:
        negative = self.accept("-")
        value = self.expect_int()
        if negative:
            value = -value
        self.expect(":")
        tok = self.peek()
        if tok.text not in ir.SCALAR_BY_NAME:
            raise ParseError("syntax", f"unexpected {tok.text!r}", tok.span(self.file_id), ("scalar kind",))
        self.advance()
        return ir.const_int(value, ir.SCALAR_BY_NAME[tok.text])

    # -- generics and where clauses ----------------------------------------------

    def parse_generics(self) -> SGenerics:
        gen = SGenerics()
        if not self.at("<"):
            return gen
        self.advance()
        while not self.at(">"):
            tok = self.peek()
            if tok.kind == "lifetime":
                gen.regions.append(self.advance().text)
            elif tok.text == "const":
                self.advance()
                name = self.expect_ident("const generic name").text
                self.expect(":")
                kind_tok = self.advance()
                if kind_tok.text not in ir.SCALAR_BY_NAME:
                    raise ParseError(
                        "syntax",
                        f"unexpected {kind_tok.text!r}",
                        kind_tok.span(self.file_id),
                        ("scalar kind",),
                    )
                gen.consts.append((name, ir.SCALAR_BY_NAME[kind_tok.text]))
            else:
                gen.types.append(self.expect_ident("type parameter").text)
            if not self.accept(","):
                break
        self.expect(">")
        return gen

    def parse_where(self, gen: SGenerics) -> None:
        if not self.accept("where"):
            return
        while True:
            start = self.peek()
            if self.at_kind("lifetime"):
                r1 = self.advance().text
                self.expect(":")
                if not self.at_kind("lifetime"):
                    raise ParseError(
                        "syntax", "region outlives expects a region",
                        self.peek().span(self.file_id),
                    )
                r2 = self.advance().text
                gen.regions_outlive.append((r1, r2))
            else:
                subject = self.parse_ty()
                if self.accept("="):
                    rhs = self.parse_ty()
                    gen.constraints.append((subject, rhs, self.span_from(start)))
                else:
                    self.expect(":")
                    if self.at_kind("lifetime"):
                        gen.types_outlive.append((subject, self.advance().text))
                    else:
                        trait = self.expect_ident("trait name").text
                        args = self.parse_generic_args() if self.at("<") else SArgs.empty()
                        gen.clauses.append((subject, trait, args, self.span_from(start)))
            if not self.accept(","):
                break

    # -- constants, places, operands, rvalues ---------------------------------------

    def parse_const_value(self) -> SConst:
        tok = self.peek()
        if tok.kind == "int" or tok.text == "-":
            cv = self.parse_scalar_const()
            return ("scalar", cv.kind.value, cv.ty.kind)
        if tok.text in ("true", "false"):
            self.advance()
            return ("bool", tok.text == "true")
        if tok.text == "raw":
            self.advance()
            self.expect("(")
            data = b""
            if self.at_kind("hex"):
                hex_tok = self.advance()
                if len(hex_tok.text) % 2 != 0:
                    raise ParseError(
                        "syntax", "raw payload needs an even number of hex digits",
                        hex_tok.span(self.file_id),
                    )
                data = bytes.fromhex(hex_tok.text)
            self.expect(")")
            self.expect(":")
            return ("raw", data, self.parse_ty())
        if tok.text == "(":
            if self.peek(1).text == ")":
                self.advance()
                self.advance()
                return ("unit",)
            ty = self.parse_ty()
            fields = self.parse_const_fields()
            return ("adt", ty, None, fields)
        # ADT constant: Type or Type::Variant, followed by a field list.
        ty = self.parse_ty()
        variant = None
        if ty[0] == "name" and ty[3] is not None and self.at("("):
            # `Option<u32>::Some(...)` parses the variant into the assoc slot.
            variant = ty[3]
            ty = (ty[0], ty[1], ty[2], None)
        fields = self.parse_const_fields()
        return ("adt", ty, variant, fields)

    def parse_const_fields(self) -> list[SConst]:
        self.expect("(")
        fields = []
        while not self.at(")"):
            fields.append(self.parse_const_value())
            if not self.accept(","):
                break
        self.expect(")")
        return fields

    def parse_place(self):
        if self.accept("*"):
            base, projs = self.parse_place()
            return base, projs + [("deref",)]
        if self.at("("):
            self.advance()
            base, projs = self.parse_place()
            self.expect(")")
        else:
            base = self.expect_ident("place").text
            projs = []
        while True:
            if self.at("."):
                self.advance()
                if self.accept("as"):
                    if self.at_kind("int"):
                        projs.append(("as_idx", self.expect_int()))
                    else:
                        projs.append(("as", self.expect_ident("variant name").text))
                else:
                    tok = self.advance()
                    if not (tok.text.startswith("f") and tok.text[1:].isdigit()):
                        raise ParseError(
                            "syntax", f"bad field projection {tok.text!r}",
                            tok.span(self.file_id), ("fN",),
                        )
                    projs.append(("f", int(tok.text[1:])))
            elif self.at("["):
                self.advance()
                offset = self.parse_operand()
                self.expect("]")
                projs.append(("idx", offset))
            else:
                break
        return base, projs

    def parse_operand(self):
        tok = self.peek()
        if tok.text == "move":
            self.advance()
            return ("move", self.parse_place())
        if tok.text == "copy":
            self.advance()
            return ("copy", self.parse_place())
        if tok.text == "const":
            self.advance()
            return ("const", self.parse_const_value())
        raise ParseError(
            "syntax", f"unexpected {tok.text!r}", tok.span(self.file_id), ("move", "copy", "const")
        )

    def parse_rvalue(self):
        tok = self.peek()
        if tok.text == "use":
            self.advance()
            return ("use", self.parse_operand())
        if tok.text in {op.value for op in ir.BinOp}:
            self.advance()
            self.expect("(")
            lhs = self.parse_operand()
            self.expect(",")
            rhs = self.parse_operand()
            self.expect(")")
            return ("binop", ir.BinOp(tok.text), lhs, rhs)
        if tok.text in {op.value for op in ir.UnOp}:
            self.advance()
            self.expect("(")
            operand = self.parse_operand()
            self.expect(")")
            return ("unop", ir.UnOp(tok.text), operand)
        if tok.text == "discriminant":
            self.advance()
            self.expect("(")
            place = self.parse_place()
            self.expect(")")
            return ("discriminant", place)
        if tok.text == "agg":
            self.advance()
            ty = self.parse_ty()
            variant = None
            if ty[0] == "name" and ty[3] is not None:
                variant = ty[3]
                ty = (ty[0], ty[1], ty[2], None)
            self.expect("(")
            operands = []
            while not self.at(")"):
                operands.append(self.parse_operand())
                if not self.accept(","):
                    break
            self.expect(")")
            return ("agg", ty, variant, operands)
        if tok.text == "&":
            self.advance()
            mutable = self.accept("mut")
            return ("ref", mutable, self.parse_place())
        raise ParseError(
            "syntax", f"unexpected {tok.text!r} in rvalue", tok.span(self.file_id),
            ("use", "binary op", "unary op", "discriminant", "agg", "&"),
        )

    def parse_callee(self):
        if self.at("move"):
            self.advance()
            return ("move", self.parse_place())
        if self.at("{"):
            ref = self.parse_braced_trait_ref()
            self.expect("::")
            method = self.expect_ident("method name").text
            args = None
            if self.accept("::<"):
                args = self.parse_generic_args(already_open=True)
            return ("traitref", ref, method, args)
        segments = [self.expect_ident("function name").text]
        args = None
        while True:
            if self.accept("::<"):
                args = self.parse_generic_args(already_open=True)
                break
            if self.at("::"):
                self.advance()
                segments.append(self.path_segment())
            else:
                break
        return ("path", segments, args)

    # -- blocks -------------------------------------------------------------------

    def parse_bb_label(self) -> int:
        tok = self.advance()
        if not (tok.kind == "ident" and tok.text.startswith("bb") and tok.text[2:].isdigit()):
            raise ParseError("syntax", f"expected block label, got {tok.text!r}", tok.span(self.file_id), ("bbN",))
        return int(tok.text[2:])

    def parse_body(self) -> SBody:
        self.expect("{")
        lets: list[tuple[str, STy, ir.Span]] = []
        while self.at("let"):
            start = self.advance()
            name = self.expect_ident("local name").text
            self.expect(":")
            ty = self.parse_ty()
            self.expect(";")
            lets.append((name, ty, self.span_from(start)))
        blocks: list[SBlock] = []
        while not self.at("}"):
            blocks.append(self.parse_block())
        self.expect("}")
        return SBody(lets, blocks)

    TERMINATOR_KEYWORDS = {"goto", "switch", "match", "assert", "return", "abort", "unreachable"}

    def parse_block(self) -> SBlock:
        start = self.peek()
        label = self.parse_bb_label()
        self.expect(":")
        self.expect("{")
        stmts: list[SStmt] = []
        term: Optional[STerm] = None
        while term is None:
            first = self.peek()
            comments = self.take_comments(first.line)
            attrs = self.parse_attrs()
            first = self.peek()
            if first.text in self.TERMINATOR_KEYWORDS:
                if attrs:
                    raise ParseError(
                        "syntax", "attributes are not allowed on terminators",
                        first.span(self.file_id),
                    )
                term = self.parse_terminator(comments)
            elif first.text == "drop":
                self.advance()
                place = self.parse_place()
                self.expect(";")
                stmts.append(SStmt(self.span_from(first), comments, attrs, ("drop", place)))
            elif first.text == "nop":
                self.advance()
                self.expect(";")
                stmts.append(SStmt(self.span_from(first), comments, attrs, ("nop",)))
            else:
                place = self.parse_place()
                self.expect("=")
                if self.at("call"):
                    self.advance()
                    callee = self.parse_callee()
                    self.expect("(")
                    args = []
                    while not self.at(")"):
                        args.append(self.parse_operand())
                        if not self.accept(","):
                            break
                    self.expect(")")
                    self.expect("->")
                    target = self.parse_bb_label()
                    self.expect(";")
                    if attrs:
                        raise ParseError(
                            "syntax", "attributes are not allowed on terminators",
                            self.span_from(first),
                        )
                    term = STerm(self.span_from(first), comments, ("call", callee, args, place, target))
                else:
                    rvalue = self.parse_rvalue()
                    self.expect(";")
                    stmts.append(
                        SStmt(self.span_from(first), comments, attrs, ("assign", place, rvalue))
                    )
        self.expect("}")
        return SBlock(label, stmts, term, self.span_from(start))

    def parse_terminator(self, comments: list[str]) -> STerm:
        start = self.peek()
        kw = self.advance().text
        if kw == "goto":
            target = self.parse_bb_label()
            self.expect(";")
            return STerm(self.span_from(start), comments, ("goto", target))
        if kw == "switch":
            scrutinee = self.parse_operand()
            self.expect("{")
            cases: list[tuple[int, int]] = []
            otherwise: Optional[int] = None
            while not self.at("}"):
                if self.accept("otherwise"):
                    self.expect("->")
                    otherwise = self.parse_bb_label()
                else:
                    negative = self.accept("-")
                    value = self.expect_int()
                    if negative:
                        value = -value
                    self.expect("->")
                    cases.append((value, self.parse_bb_label()))
                if not self.accept(","):
                    break
            self.expect("}")
            self.accept(";")
            if otherwise is None:
                raise ParseError("syntax", "switch needs an otherwise arm", self.span_from(start))
            return STerm(self.span_from(start), comments, ("switch", scrutinee, cases, otherwise))
        if kw == "match":
            place = self.parse_place()
            self.expect("{")
            arms: list[tuple[str, int]] = []
            otherwise = None
            while not self.at("}"):
                if self.accept("otherwise"):
                    self.expect("->")
                    otherwise = self.parse_bb_label()
                else:
                    if self.at_kind("int"):
                        name: object = self.expect_int()
                    else:
                        name = self.expect_ident("variant name").text
                    self.expect("->")
                    arms.append((name, self.parse_bb_label()))
                if not self.accept(","):
                    break
            self.expect("}")
            self.accept(";")
            return STerm(self.span_from(start), comments, ("match", place, arms, otherwise))
        if kw == "assert":
            operand = self.parse_operand()
            self.expect("==")
            tok = self.advance()
            if tok.text not in ("true", "false"):
                raise ParseError("syntax", "assert expects true or false", tok.span(self.file_id))
            self.expect("->")
            target = self.parse_bb_label()
            self.expect(";")
            return STerm(
                self.span_from(start), comments, ("assert", operand, tok.text == "true", target)
            )
        if kw == "return":
            self.expect(";")
            return STerm(self.span_from(start), comments, ("return",))
        if kw == "abort":
            tok = self.advance()
            if tok.text not in ("panic", "ub"):
                raise ParseError("syntax", "abort expects panic or ub", tok.span(self.file_id))
            self.expect(";")
            return STerm(self.span_from(start), comments, ("abort", ir.AbortKind(tok.text)))
        if kw == "unreachable":
            self.expect(";")
            return STerm(self.span_from(start), comments, ("unreachable",))
        raise AssertionError(kw)

    # -- items ----------------------------------------------------------------------

    def parse_file(self) -> SFile:
        out = SFile(self.file_id)
        while not self.at_kind("eof"):
            self.skip_comments_before(self.peek().line)
            attrs = self.parse_attrs()
            tok = self.peek()
            if tok.text == "type":
                out.types.append(self.parse_type_decl(attrs))
            elif tok.text == "trait":
                out.traits.append(self.parse_trait_decl(attrs))
            elif tok.text == "impl":
                out.impls.append(self.parse_impl_decl(attrs))
            elif tok.text == "fn":
                out.funs.append(self.parse_fn_decl(attrs))
            else:
                raise ParseError(
                    "syntax", f"unexpected {tok.text!r}", tok.span(self.file_id),
                    ("type", "trait", "impl", "fn"),
                )
        self.comment_pos = len(self.comments)
        return out

    def parse_type_decl(self, attrs: list[str]) -> STypeDecl:
        start = self.expect("type")
        name = self.expect_ident("type name").text
        generics = self.parse_generics()
        self.expect("=")
        if self.accept("struct"):
            self.expect("{")
            fields = []
            while not self.at("}"):
                fields.append(self.parse_ty())
                if not self.accept(","):
                    break
            self.expect("}")
            kind = ("struct", fields)
        else:
            self.expect("enum")
            self.expect("{")
            variants = []
            while not self.at("}"):
                vname = self.expect_ident("variant name").text
                fields = []
                if self.at("{"):
                    self.advance()
                    while not self.at("}"):
                        fields.append(self.parse_ty())
                        if not self.accept(","):
                            break
                    self.expect("}")
                discr = None
                if self.accept("="):
                    negative = self.accept("-")
                    discr = self.expect_int()
                    if negative:
                        discr = -discr
                variants.append((vname, fields, discr))
                if not self.accept(","):
                    break
            self.expect("}")
            kind = ("enum", variants)
        return STypeDecl(name, attrs, generics, kind, self.span_from(start))

    def parse_trait_decl(self, attrs: list[str]) -> STraitDecl:
        start = self.expect("trait")
        name = self.expect_ident("trait name").text
        generics = self.parse_generics()
        parents: list[tuple[str, SArgs, ir.Span]] = []
        if self.accept(":"):
            while True:
                ptok = self.peek()
                pname = self.expect_ident("parent trait").text
                pargs = self.parse_generic_args() if self.at("<") else SArgs.empty()
                parents.append((pname, pargs, self.span_from(ptok)))
                if not self.accept("+") and not self.accept(","):
                    break
        self.expect("{")
        assoc_types = []
        methods = []
        while not self.at("}"):
            self.skip_comments_before(self.peek().line)
            if self.accept("type"):
                aname = self.expect_ident("associated type name").text
                bounds: list[tuple[str, SArgs, ir.Span]] = []
                if self.accept(":"):
                    while True:
                        btok = self.peek()
                        bname = self.expect_ident("bound trait").text
                        bargs = self.parse_generic_args() if self.at("<") else SArgs.empty()
                        bounds.append((bname, bargs, self.span_from(btok)))
                        if not self.accept("+"):
                            break
                self.expect(";")
                assoc_types.append((aname, bounds))
            else:
                mtok = self.expect("fn")
                mname = self.expect_ident("method name").text
                mgenerics = self.parse_generics()
                params, _ = self.parse_params()
                self.expect("->")
                ret = self.parse_ty()
                self.parse_where(mgenerics)
                self.expect(";")
                methods.append((mname, mgenerics, params, ret, self.span_from(mtok)))
        self.expect("}")
        return STraitDecl(name, attrs, generics, parents, assoc_types, methods, self.span_from(start))

    def parse_impl_decl(self, attrs: list[str]) -> SImplDecl:
        start = self.expect("impl")
        generics = self.parse_generics()
        trait_name = self.expect_ident("trait name").text
        trait_args = self.parse_generic_args() if self.at("<") else SArgs.empty()
        self.expect("for")
        self_ty = self.parse_ty()
        self.parse_where(generics)
        self.expect("{")
        assoc_values = []
        methods = []
        while not self.at("}"):
            self.skip_comments_before(self.peek().line)
            if self.accept("type"):
                aname = self.expect_ident("associated type name").text
                self.expect("=")
                assoc_values.append((aname, self.parse_ty()))
                self.expect(";")
            else:
                mtok = self.expect("fn")
                mname = self.expect_ident("method name").text
                self.expect("=")
                segments = [self.expect_ident("function path").text]
                while self.accept("::"):
                    segments.append(self.path_segment())
                self.expect(";")
                methods.append((mname, tuple(segments), self.span_from(mtok)))
        self.expect("}")
        return SImplDecl(
            attrs, generics, trait_name, trait_args, self_ty, assoc_values, methods,
            self.span_from(start),
        )

    def parse_params(self) -> tuple[list[tuple[str, STy]], list[str]]:
        """Returns (params, item attrs synthesized from param attributes).

        ``#[secret] key: u32`` becomes the item attribute ``secret::key``.
        """
        self.expect("(")
        params = []
        synthesized: list[str] = []
        while not self.at(")"):
            param_attrs = self.parse_attrs()
            name = self.expect_ident("parameter name").text
            self.expect(":")
            ty = self.parse_ty()
            params.append((name, ty))
            synthesized.extend(f"{attr}::{name}" for attr in param_attrs)
            if not self.accept(","):
                break
        self.expect(")")
        return params, synthesized

    def parse_fn_decl(self, attrs: list[str]) -> SFun:
        start = self.expect("fn")
        segments = [self.expect_ident("function name").text]
        while self.at("::"):
            self.advance()
            segments.append(self.path_segment())
        generics = self.parse_generics()
        params, param_attrs = self.parse_params()
        self.expect("->")
        ret = self.parse_ty()
        self.parse_where(generics)
        attrs = attrs + param_attrs
        body = None
        if not self.accept(";"):
            body = self.parse_body()
        return SFun(tuple(segments), attrs, generics, params, ret, body, self.span_from(start))


# ---------------------------------------------------------------------------
# Lowering


@dataclass
class TyEnv:
    """Name environment for lowering surface types within one binder."""

    regions: dict[str, int]
    types: dict[str, int]
    consts: dict[str, int]
    # (subject type-var index or None, trait decl id) per clause, for sugar.
    clause_heads: list[tuple[Optional[int], int]]
    self_ty: Optional[ir.Ty] = None  # set inside impls
    in_trait: bool = False  # `Self` / SelfRef allowed


class Lowerer:
    def __init__(self, files: list[SFile], file_names: list[str], crate_name: str):
        self.files = files
        self.file_names = file_names
        self.crate_name = crate_name
        self.type_ids: dict[str, int] = {}
        self.trait_ids: dict[str, int] = {}
        self.fun_ids: dict[str, int] = {}
        self.types: list[Optional[ir.TypeDecl]] = []
        self.traits: list[Optional[ir.TraitDecl]] = []
        self.impls: list[Optional[ir.TraitImpl]] = []
        self.funs: list[Optional[ir.FunDecl]] = []
        self.s_types: list[STypeDecl] = []
        self.s_traits: list[STraitDecl] = []
        self.s_impls: list[SImplDecl] = []
        self.s_funs: list[SFun] = []

    def err(self, code: str, message: str, span: ir.Span) -> ParseError:
        return ParseError(code, message, span)

    # -- name collection ----------------------------------------------------------

    def collect(self) -> None:
        for sfile in self.files:
            for st in sfile.types:
                if st.name in self.type_ids:
                    raise self.err("duplicate-name", f"type {st.name} declared twice", st.span)
                self.type_ids[st.name] = len(self.s_types)
                self.s_types.append(st)
            for st in sfile.traits:
                if st.name in self.trait_ids:
                    raise self.err("duplicate-name", f"trait {st.name} declared twice", st.span)
                self.trait_ids[st.name] = len(self.s_traits)
                self.s_traits.append(st)
            for si in sfile.impls:
                self.s_impls.append(si)
            for sf in sfile.funs:
                name = "::".join(sf.name)
                if name in self.fun_ids:
                    raise self.err("duplicate-name", f"fn {name} declared twice", sf.span)
                self.fun_ids[name] = len(self.s_funs)
                self.s_funs.append(sf)

    # -- environments ----------------------------------------------------------------

    def base_env(self, gen: SGenerics, span: ir.Span, *, in_trait: bool = False) -> TyEnv:
        regions = {}
        for r in gen.regions:
            if r in regions:
                raise self.err("duplicate-name", f"region {r} declared twice", span)
            regions[r] = len(regions)
        types = {}
        for t in gen.types:
            if t in types:
                raise self.err("duplicate-name", f"type parameter {t} declared twice", span)
            types[t] = len(types)
        consts = {}
        for c, _ in gen.consts:
            if c in consts:
                raise self.err("duplicate-name", f"const parameter {c} declared twice", span)
            consts[c] = len(consts)
        clause_heads = []
        for subject, trait, _args, cspan in gen.clauses:
            trait_id = self.trait_ids.get(trait)
            if trait_id is None:
                raise self.err("unknown-name", f"unknown trait {trait}", cspan)
            subject_var = types.get(subject[1]) if subject[0] == "name" and subject[2] is None and subject[3] is None else None
            clause_heads.append((subject_var, trait_id))
        return TyEnv(regions, types, consts, clause_heads, in_trait=in_trait)

    def lower_generics(self, gen: SGenerics, env: TyEnv, span: ir.Span) -> ir.GenericParams:
        clauses = []
        for i, (subject, trait, args, cspan) in enumerate(gen.clauses):
            trait_id = self.trait_ids[trait]
            subject_ty = self.lower_ty(subject, env, cspan)
            lowered = self.lower_args(args, env, cspan)
            full = ir.GenericArgs(
                regions=lowered.regions,
                types=(subject_ty,) + lowered.types,
                const_generics=lowered.const_generics,
                trait_refs=lowered.trait_refs,
            )
            self.check_arity_against_trait(trait_id, full, cspan)
            clauses.append(ir.TraitClause(i, trait_id, full))
        constraints = []
        for lhs, rhs, cspan in gen.constraints:
            lowered_lhs = self.lower_ty(lhs, env, cspan)
            if not isinstance(lowered_lhs, ir.TyAssoc):
                raise self.err(
                    "syntax", "left side of a type equality must be an associated type", cspan
                )
            constraints.append(
                ir.TraitTypeConstraint(lowered_lhs.base, lowered_lhs.item, self.lower_ty(rhs, env, cspan))
            )
        types_outlive = tuple(
            (self.lower_ty(t, env, span), r) for t, r in gen.types_outlive
        )
        return ir.GenericParams(
            regions=tuple(gen.regions),
            types=tuple(gen.types),
            const_generics=tuple(ir.ConstGenericVar(n, k) for n, k in gen.consts),
            trait_clauses=tuple(clauses),
            regions_outlive=tuple(gen.regions_outlive),
            types_outlive=types_outlive,
            trait_type_constraints=tuple(constraints),
        )

    def check_arity_against_trait(self, trait_id: int, args: ir.GenericArgs, span: ir.Span):
        st = self.s_traits[trait_id]
        expected_types = 1 + len(st.generics.types)
        if len(args.types) != expected_types:
            raise self.err(
                "arity",
                f"trait {st.name} expects {expected_types} type arguments "
                f"(including Self), got {len(args.types)}",
                span,
            )
        if len(args.regions) != len(st.generics.regions):
            raise self.err("arity", f"trait {st.name} region argument count mismatch", span)
        if len(args.const_generics) != len(st.generics.consts):
            raise self.err("arity", f"trait {st.name} const argument count mismatch", span)

    def check_arity_against_type(self, type_id: int, args: ir.GenericArgs, span: ir.Span):
        st = self.s_types[type_id]
        if len(args.types) != len(st.generics.types):
            raise self.err(
                "arity",
                f"type {st.name} expects {len(st.generics.types)} type arguments, "
                f"got {len(args.types)}",
                span,
            )
        if len(args.regions) != len(st.generics.regions):
            raise self.err("arity", f"type {st.name} region argument count mismatch", span)
        if len(args.const_generics) != len(st.generics.consts):
            raise self.err("arity", f"type {st.name} const argument count mismatch", span)

    # -- types -------------------------------------------------------------------------

    def lower_ty(self, sty: STy, env: TyEnv, span: ir.Span) -> ir.Ty:
        tag = sty[0]
        if tag == "scalar":
            return ir.TyScalar(sty[1])
        if tag == "bool":
            return ir.BOOL
        if tag == "tuple":
            return ir.TyTuple(tuple(self.lower_ty(t, env, span) for t in sty[1]))
        if tag == "ref":
            _, region, mutable, inner = sty
            if region != ir.ERASED_REGION and region not in env.regions:
                raise self.err("unknown-name", f"unknown region {region}", span)
            return ir.TyRef(region, self.lower_ty(inner, env, span), mutable)
        if tag == "self":
            assoc = sty[1]
            if env.self_ty is not None:
                base_ty = env.self_ty
            elif env.in_trait:
                base_ty = ir.TyVar(0)
            else:
                raise self.err("unknown-name", "Self is only valid in traits and impls", span)
            if assoc is None:
                return base_ty
            if env.in_trait and env.self_ty is None:
                return self.resolve_assoc_on_self(assoc, span)
            raise self.err("unknown-assoc", f"cannot project {assoc} from Self here", span)
        if tag == "canon":
            _, sref, item = sty
            return ir.TyAssoc(self.lower_trait_ref(sref, env, span), item)
        if tag == "name":
            _, name, sargs, assoc = sty
            if assoc is not None:
                if name not in env.types:
                    raise self.err(
                        "unknown-assoc",
                        f"associated type sugar needs a type variable, {name} is not one",
                        span,
                    )
                if sargs is not None:
                    raise self.err("syntax", "type variables take no arguments", span)
                return self.resolve_assoc_sugar(env.types[name], assoc, env, span)
            if name in env.types:
                if sargs is not None:
                    raise self.err("syntax", "type variables take no arguments", span)
                return ir.TyVar(env.types[name])
            if name in self.type_ids:
                type_id = self.type_ids[name]
                args = self.lower_args(sargs, env, span) if sargs is not None else ir.EMPTY_ARGS
                self.check_arity_against_type(type_id, args, span)
                return ir.TyAdt(type_id, args)
            raise self.err("unknown-name", f"unknown type {name}", span)
        raise AssertionError(tag)

    def lower_args(self, sargs: SArgs, env: TyEnv, span: ir.Span) -> ir.GenericArgs:
        for r in sargs.regions:
            if r != ir.ERASED_REGION and r not in env.regions:
                raise self.err("unknown-name", f"unknown region {r}", span)
        return ir.GenericArgs(
            regions=tuple(sargs.regions),
            types=tuple(self.lower_ty(t, env, span) for t in sargs.types),
            const_generics=tuple(sargs.consts),
            trait_refs=tuple(self.lower_trait_ref(r, env, span) for r in sargs.trait_refs),
        )

    def lower_trait_ref(self, sref: STraitRef, env: TyEnv, span: ir.Span) -> ir.TraitRefKind:
        tag = sref[0]
        if tag == "impl":
            _, impl_id, sargs = sref
            if not (0 <= impl_id < len(self.s_impls)):
                raise self.err("unknown-name", f"impl#{impl_id} does not exist", span)
            return ir.TraitImplRef(impl_id, self.lower_args(sargs, env, span))
        if tag == "clause":
            _, clause_id = sref
            if clause_id >= len(env.clause_heads):
                raise self.err("unknown-name", f"clause#{clause_id} does not exist", span)
            return ir.ClauseRef(clause_id)
        if tag == "parent":
            _, base, index = sref
            return ir.ParentClauseRef(self.lower_trait_ref(base, env, span), index)
        if tag == "item":
            _, base, name, index = sref
            return ir.ItemClauseRef(self.lower_trait_ref(base, env, span), name, index)
        if tag == "self":
            if not env.in_trait:
                raise self.err("unknown-name", "Self trait reference outside a trait", span)
            return ir.SelfRef()
        raise AssertionError(tag)

    # -- associated type sugar -----------------------------------------------------------

    def trait_assoc_path(
        self, trait_id: int, item: str, base: ir.TraitRefKind, span: ir.Span
    ) -> Optional[ir.TyAssoc]:
        """Search trait ``trait_id`` and its ancestors for ``item``; build the
        projection through parent-clause hops."""
        results: list[ir.TyAssoc] = []
        seen: set[tuple[int, ...]] = set()
        queue: list[tuple[int, ir.TraitRefKind]] = [(trait_id, base)]
        while queue:
            tid, ref = queue.pop(0)
            st = self.s_traits[tid]
            for aname, _bounds in st.assoc_types:
                if aname == item:
                    results.append(ir.TyAssoc(ref, item))
            for pi, (pname, _pargs, _pspan) in enumerate(st.parents):
                ptid = self.trait_ids.get(pname)
                if ptid is None:
                    continue
                queue.append((ptid, ir.ParentClauseRef(ref, pi)))
            if len(results) > 1:
                raise self.err("ambiguous-assoc", f"associated type {item} is ambiguous", span)
        return results[0] if results else None

    def resolve_assoc_sugar(self, var_index: int, item: str, env: TyEnv, span: ir.Span) -> ir.Ty:
        hits = []
        for clause_id, (subject_var, trait_id) in enumerate(env.clause_heads):
            if subject_var != var_index:
                continue
            found = self.trait_assoc_path(trait_id, item, ir.ClauseRef(clause_id), span)
            if found is not None:
                hits.append(found)
        if not hits:
            raise self.err("unknown-assoc", f"no clause provides associated type {item}", span)
        if len(hits) > 1:
            raise self.err("ambiguous-assoc", f"associated type {item} is ambiguous", span)
        return hits[0]

    def resolve_assoc_on_self(self, item: str, span: ir.Span) -> ir.Ty:
        st = self._current_trait
        assert st is not None
        found = self.trait_assoc_path(self.trait_ids[st.name], item, ir.SelfRef(), span)
        if found is None:
            raise self.err("unknown-assoc", f"trait {st.name} has no associated type {item}", span)
        return found

    # -- declarations -----------------------------------------------------------------------

    def lower_type_decl(self, st: STypeDecl, decl_id: int) -> ir.TypeDecl:
        env = self.base_env(st.generics, st.span)
        if st.generics.clauses:
            raise self.err("syntax", "type declarations cannot carry trait clauses", st.span)
        generics = self.lower_generics(st.generics, env, st.span)
        if st.kind[0] == "struct":
            kind: ir.TypeDeclKind = ir.StructKind(
                tuple(self.lower_ty(f, env, st.span) for f in st.kind[1])
            )
        else:
            variants = []
            next_discr = 0
            names = set()
            for vname, fields, discr in st.kind[1]:
                if vname in names:
                    raise self.err("duplicate-name", f"variant {vname} declared twice", st.span)
                names.add(vname)
                value = discr if discr is not None else next_discr
                next_discr = value + 1
                variants.append(
                    ir.Variant(vname, tuple(self.lower_ty(f, env, st.span) for f in fields), value)
                )
            kind = ir.EnumKind(tuple(variants))
        meta = ir.ItemMeta((st.name,), st.span, tuple(st.attrs))
        return ir.TypeDecl(decl_id, meta, generics, kind)

    def lower_trait_decl(self, st: STraitDecl, decl_id: int) -> ir.TraitDecl:
        self._current_trait = st
        gen = SGenerics(
            regions=list(st.generics.regions),
            types=["Self"] + list(st.generics.types),
            consts=list(st.generics.consts),
        )
        env = self.base_env(gen, st.span, in_trait=True)
        generics = self.lower_generics(gen, env, st.span)
        parents = []
        for i, (pname, pargs, pspan) in enumerate(st.parents):
            ptid = self.trait_ids.get(pname)
            if ptid is None:
                raise self.err("unknown-name", f"unknown trait {pname}", pspan)
            lowered = self.lower_args(pargs, env, pspan)
            full = ir.GenericArgs(
                regions=lowered.regions,
                types=(ir.TyVar(0),) + lowered.types,
                const_generics=lowered.const_generics,
                trait_refs=lowered.trait_refs,
            )
            self.check_arity_against_trait(ptid, full, pspan)
            parents.append(ir.TraitClause(i, ptid, full))
        assoc_types = []
        for aname, bounds in st.assoc_types:
            lowered_bounds = []
            for bi, (bname, bargs, bspan) in enumerate(bounds):
                btid = self.trait_ids.get(bname)
                if btid is None:
                    raise self.err("unknown-name", f"unknown trait {bname}", bspan)
                lowered = self.lower_args(bargs, env, bspan)
                full = ir.GenericArgs(
                    regions=lowered.regions,
                    types=(ir.TyAssoc(ir.SelfRef(), aname),) + lowered.types,
                    const_generics=lowered.const_generics,
                    trait_refs=lowered.trait_refs,
                )
                self.check_arity_against_trait(btid, full, bspan)
                lowered_bounds.append(ir.TraitClause(bi, btid, full))
            assoc_types.append(ir.AssocTypeDecl(aname, tuple(lowered_bounds)))
        methods = []
        for mname, mgen, mparams, mret, mspan in st.methods:
            merged = SGenerics(
                regions=list(st.generics.regions) + list(mgen.regions),
                types=["Self"] + list(st.generics.types) + list(mgen.types),
                consts=list(st.generics.consts) + list(mgen.consts),
                clauses=mgen.clauses,
                constraints=mgen.constraints,
                regions_outlive=mgen.regions_outlive,
                types_outlive=mgen.types_outlive,
            )
            menv = self.base_env(merged, mspan, in_trait=True)
            merged_params = self.lower_generics(merged, menv, mspan)
            method_generics = ir.GenericParams(
                regions=tuple(mgen.regions),
                types=tuple(mgen.types),
                const_generics=tuple(ir.ConstGenericVar(n, k) for n, k in mgen.consts),
                trait_clauses=merged_params.trait_clauses,
                regions_outlive=merged_params.regions_outlive,
                types_outlive=merged_params.types_outlive,
                trait_type_constraints=merged_params.trait_type_constraints,
            )
            inputs = tuple(self.lower_ty(t, menv, mspan) for _, t in mparams)
            output = self.lower_ty(mret, menv, mspan)
            methods.append(ir.TraitMethodDecl(mname, ir.FunSig(method_generics, inputs, output)))
        meta = ir.ItemMeta((st.name,), st.span, tuple(st.attrs))
        self._current_trait = None
        return ir.TraitDecl(
            decl_id, meta, generics, tuple(parents), tuple(assoc_types), tuple(methods)
        )

    def lower_impl_decl(self, si: SImplDecl, decl_id: int) -> ir.TraitImpl:
        env = self.base_env(si.generics, si.span)
        self_ty = self.lower_ty(si.self_ty, env, si.span)
        env.self_ty = self_ty
        generics = self.lower_generics(si.generics, env, si.span)
        trait_id = self.trait_ids.get(si.trait_name)
        if trait_id is None:
            raise self.err("unknown-name", f"unknown trait {si.trait_name}", si.span)
        lowered = self.lower_args(si.trait_args, env, si.span)
        trait_args = ir.GenericArgs(
            regions=lowered.regions,
            types=(self_ty,) + lowered.types,
            const_generics=lowered.const_generics,
            trait_refs=lowered.trait_refs,
        )
        self.check_arity_against_trait(trait_id, trait_args, si.span)
        assoc_values = tuple((n, self.lower_ty(t, env, si.span)) for n, t in si.assoc_values)
        methods = []
        for mname, fpath, mspan in si.methods:
            fname = "::".join(fpath)
            fid = self.fun_ids.get(fname)
            if fid is None:
                raise self.err("unknown-name", f"unknown function {fname}", mspan)
            methods.append((mname, fid))
        meta = ir.ItemMeta((f"impl#{decl_id}",), si.span, tuple(si.attrs))
        return ir.TraitImpl(
            decl_id, meta, generics, trait_id, trait_args, assoc_values, tuple(methods)
        )

    # -- function bodies -----------------------------------------------------------------------

    def lower_fn_decl(self, sf: SFun, decl_id: int) -> ir.FunDecl:
        env = self.base_env(sf.generics, sf.span)
        generics = self.lower_generics(sf.generics, env, sf.span)
        inputs = tuple(self.lower_ty(t, env, sf.span) for _, t in sf.params)
        output = self.lower_ty(sf.ret, env, sf.span)
        sig = ir.FunSig(generics, inputs, output)
        meta = ir.ItemMeta(sf.name, sf.span, tuple(sf.attrs))
        body: Optional[ir.Body] = None
        if sf.body is not None and OPAQUE_ATTR not in sf.attrs:
            body = self.lower_body(sf, sig, env)
        return ir.FunDecl(decl_id, meta, sig, body)

    def lower_body(self, sf: SFun, sig: ir.FunSig, env: TyEnv) -> ir.UllbcBody:
        assert sf.body is not None
        locals_list: list[ir.Local] = [ir.Local(RETURN_SLOT, sig.output)]
        local_ids: dict[str, int] = {RETURN_SLOT: 0}
        for (pname, _), pty in zip(sf.params, sig.inputs):
            if pname in local_ids:
                raise self.err("duplicate-name", f"parameter {pname} declared twice", sf.span)
            local_ids[pname] = len(locals_list)
            locals_list.append(ir.Local(pname, pty))
        for lname, lty, lspan in sf.body.lets:
            if lname in local_ids:
                raise self.err("duplicate-name", f"local {lname} declared twice", lspan)
            local_ids[lname] = len(locals_list)
            locals_list.append(ir.Local(lname, self.lower_ty(lty, env, lspan)))

        labels = [b.label for b in sf.body.blocks]
        if sorted(labels) != list(range(len(labels))):
            raise self.err(
                "unknown-block",
                f"block labels must be dense bb0..bb{len(labels) - 1}, got "
                f"{sorted('bb%d' % l for l in labels)}",
                sf.span,
            )
        n_blocks = len(labels)
        ctx = _BodyCtx(self, env, tuple(locals_list), local_ids, n_blocks)
        blocks: list[Optional[ir.BasicBlock]] = [None] * n_blocks
        for sblock in sf.body.blocks:
            stmts = tuple(ctx.lower_stmt(s) for s in sblock.stmts)
            term = ctx.lower_term(sblock.term)
            blocks[sblock.label] = ir.BasicBlock(stmts, term)
        return ir.UllbcBody(tuple(locals_list), len(sf.params), tuple(blocks))

class _BodyCtx:
    """Per-body lowering context: locals, place typing, callee resolution."""

    def __init__(self, lowerer: Lowerer, env: TyEnv, locals_: tuple[ir.Local, ...],
                 local_ids: dict[str, int], n_blocks: int):
        self.lowerer = lowerer
        self.env = env
        self.locals = locals_
        self.local_ids = local_ids
        self.n_blocks = n_blocks

    def err(self, code: str, message: str, span: ir.Span) -> ParseError:
        return ParseError(code, message, span)

    def check_block_id(self, bid: int, span: ir.Span) -> int:
        if not (0 <= bid < self.n_blocks):
            raise self.err("unknown-block", f"bb{bid} does not exist", span)
        return bid

    # -- typing helpers (for downcast/variant/match resolution) --------------------

    def ty_of_place(self, place: ir.Place, span: ir.Span) -> Optional[ir.Ty]:
        ty: Optional[ir.Ty] = self.locals[place.local].ty
        for proj in place.projections:
            if ty is None:
                return None
            ty = self.ty_after_projection(ty, proj, span)
        return ty

    def ty_after_projection(self, ty: ir.Ty, proj: ir.Projection, span) -> Optional[ir.Ty]:
        if isinstance(proj, ir.ProjDeref):
            if isinstance(ty, ir.TyRef):
                return ty.inner
            raise self.err("bad-projection", "deref of a non-reference", span)
        if isinstance(proj, ir.ProjField):
            if isinstance(ty, ir.TyTuple):
                if proj.index >= len(ty.items):
                    raise self.err("bad-projection", f"tuple field f{proj.index} out of range", span)
                return ty.items[proj.index]
            if isinstance(ty, ir.TyAdt):
                decl = self.lowerer.types[ty.decl_id]
                assert decl is not None
                if not isinstance(decl.kind, ir.StructKind):
                    raise self.err("bad-projection", "field access on an enum without downcast", span)
                if proj.index >= len(decl.kind.fields):
                    raise self.err("bad-projection", f"field f{proj.index} out of range", span)
                return ir.substitute(decl.kind.fields[proj.index], ty.args)
            if isinstance(ty, (ir.TyVar, ir.TyAssoc)):
                return None
            raise self.err("bad-projection", "field access on a non-aggregate", span)
        if isinstance(proj, ir.ProjDowncast):
            if isinstance(ty, ir.TyAdt):
                decl = self.lowerer.types[ty.decl_id]
                assert decl is not None and isinstance(decl.kind, ir.EnumKind)
                variant = decl.kind.variants[proj.variant]
                return ir.TyTuple(tuple(ir.substitute(f, ty.args) for f in variant.fields))
            return None
        if isinstance(proj, ir.ProjIndex):
            if isinstance(ty, ir.TyTuple) and ty.items:
                return ty.items[0]
            return None
        raise AssertionError(proj)

    def enum_decl_of(self, ty: Optional[ir.Ty], span: ir.Span) -> ir.TypeDecl:
        if not isinstance(ty, ir.TyAdt):
            raise self.err("bad-projection", "expected an enum-typed place", span)
        decl = self.lowerer.types[ty.decl_id]
        assert decl is not None
        if not isinstance(decl.kind, ir.EnumKind):
            raise self.err("bad-projection", f"{decl.meta.name_str} is not an enum", span)
        return decl

    def variant_id(self, decl: ir.TypeDecl, name: str, span: ir.Span) -> int:
        assert isinstance(decl.kind, ir.EnumKind)
        for i, v in enumerate(decl.kind.variants):
            if v.name == name:
                return i
        raise self.err("unknown-name", f"{decl.meta.name_str} has no variant {name}", span)

    # -- lowering ---------------------------------------------------------------------

    def lower_place(self, splace, span: ir.Span) -> ir.Place:
        base_name, sprojs = splace
        if base_name not in self.local_ids:
            raise self.err("unknown-name", f"unknown local {base_name}", span)
        local = self.local_ids[base_name]
        projections: list[ir.Projection] = []
        ty: Optional[ir.Ty] = self.locals[local].ty
        for sproj in sprojs:
            if sproj[0] == "f":
                proj: ir.Projection = ir.ProjField(sproj[1])
            elif sproj[0] == "as_idx":
                proj = ir.ProjDowncast(sproj[1])
            elif sproj[0] == "as":
                decl = self.enum_decl_of(ty, span)
                proj = ir.ProjDowncast(self.variant_id(decl, sproj[1], span))
            elif sproj[0] == "idx":
                proj = ir.ProjIndex(self.lower_operand(sproj[1], span))
            else:
                proj = ir.ProjDeref()
            projections.append(proj)
            if ty is not None:
                ty = self.ty_after_projection(ty, proj, span)
        return ir.Place(local, tuple(projections))

    def lower_operand(self, sop, span: ir.Span) -> ir.Operand:
        tag = sop[0]
        if tag == "move":
            return ir.OpMove(self.lower_place(sop[1], span))
        if tag == "copy":
            return ir.OpCopy(self.lower_place(sop[1], span))
        return ir.OpConst(self.lower_const(sop[1], span))

    def lower_const(self, sconst, span: ir.Span) -> ir.ConstantValue:
        tag = sconst[0]
        if tag == "scalar":
            value, kind = sconst[1], sconst[2]
            if not kind.in_range(value):
                raise self.err("arity", f"{value} does not fit {kind.value}", span)
            return ir.const_int(value, kind)
        if tag == "bool":
            return ir.const_bool(sconst[1])
        if tag == "unit":
            return ir.UNIT_CONST
        if tag == "raw":
            _, data, sty = sconst
            return ir.ConstantValue(self.lowerer.lower_ty(sty, self.env, span), ir.CRaw(data))
        if tag == "adt":
            _, sty, variant_name, sfields = sconst
            ty = self.lowerer.lower_ty(sty, self.env, span)
            fields = tuple(self.lower_const(f, span) for f in sfields)
            variant = None
            if variant_name is not None:
                if not isinstance(ty, ir.TyAdt):
                    raise self.err("syntax", "variant constant needs an enum type", span)
                decl = self.lowerer.types[ty.decl_id]
                assert decl is not None
                variant = self.variant_id(decl, variant_name, span)
            return ir.ConstantValue(ty, ir.CAdt(variant, fields))
        raise AssertionError(tag)

    def lower_rvalue(self, srv, span: ir.Span) -> ir.Rvalue:
        tag = srv[0]
        if tag == "use":
            return ir.RvUse(self.lower_operand(srv[1], span))
        if tag == "binop":
            return ir.RvBinOp(srv[1], self.lower_operand(srv[2], span), self.lower_operand(srv[3], span))
        if tag == "unop":
            return ir.RvUnOp(srv[1], self.lower_operand(srv[2], span))
        if tag == "discriminant":
            return ir.RvDiscriminant(self.lower_place(srv[1], span))
        if tag == "agg":
            _, sty, variant_name, soperands = srv
            # Aggregates record the declaration only, so the head type is
            # resolved by name without instantiation.
            if sty[0] != "name" or sty[1] not in self.lowerer.type_ids:
                raise self.err("unknown-name", "agg expects a declared type name", span)
            decl_id = self.lowerer.type_ids[sty[1]]
            variant = None
            if variant_name is not None:
                decl = self.lowerer.types[decl_id]
                assert decl is not None
                variant = self.variant_id(decl, variant_name, span)
            operands = tuple(self.lower_operand(o, span) for o in soperands)
            return ir.RvAggregate(decl_id, variant, operands)
        if tag == "ref":
            return ir.RvRef(self.lower_place(srv[2], span), srv[1])
        raise AssertionError(tag)

    def lower_stmt(self, s: SStmt) -> ir.Statement:
        tag = s.kind[0]
        if tag == "assign":
            kind: ir.StatementKind = ir.SAssign(
                self.lower_place(s.kind[1], s.span), self.lower_rvalue(s.kind[2], s.span)
            )
        elif tag == "drop":
            kind = ir.SDrop(self.lower_place(s.kind[1], s.span))
        else:
            kind = ir.SNop()
        return ir.Statement(s.span, kind, tuple(s.comments), tuple(s.attrs))

    def lower_term(self, t: STerm) -> ir.Terminator:
        tag = t.kind[0]
        span = t.span
        if tag == "goto":
            kind: ir.TerminatorKind = ir.TGoto(self.check_block_id(t.kind[1], span))
        elif tag == "switch":
            _, sop, cases, otherwise = t.kind
            kind = ir.TSwitchInt(
                self.lower_operand(sop, span),
                tuple((v, self.check_block_id(b, span)) for v, b in cases),
                self.check_block_id(otherwise, span),
            )
        elif tag == "match":
            _, splace, arms, otherwise = t.kind
            place = self.lower_place(splace, span)
            decl = self.enum_decl_of(self.ty_of_place(place, span), span)
            lowered_arms = []
            for n, b in arms:
                vid = n if isinstance(n, int) else self.variant_id(decl, n, span)
                lowered_arms.append((vid, self.check_block_id(b, span)))
            kind = ir.TMatch(
                place,
                tuple(lowered_arms),
                self.check_block_id(otherwise, span) if otherwise is not None else None,
            )
        elif tag == "assert":
            _, sop, expected, target = t.kind
            kind = ir.TAssert(self.lower_operand(sop, span), expected, self.check_block_id(target, span))
        elif tag == "call":
            _, scallee, sargs, sdest, target = t.kind
            func = self.lower_callee(scallee, span)
            args = tuple(self.lower_operand(a, span) for a in sargs)
            dest = self.lower_place(sdest, span)
            kind = ir.TCall(ir.Call(func, args, dest), self.check_block_id(target, span))
        elif tag == "return":
            kind = ir.TReturn()
        elif tag == "abort":
            kind = ir.TAbort(t.kind[1])
        else:
            kind = ir.TUnreachable()
        return ir.Terminator(span, kind, tuple(t.comments))

    def lower_callee(self, scallee, span: ir.Span) -> ir.FnOperand:
        tag = scallee[0]
        if tag == "move":
            return ir.FnOpMove(self.lower_place(scallee[1], span))
        if tag == "traitref":
            _, sref, method, sargs = scallee
            ref = self.lowerer.lower_trait_ref(sref, self.env, span)
            args = self.lowerer.lower_args(sargs, self.env, span) if sargs else ir.EMPTY_ARGS
            return ir.FnOpRegular(ir.FnPtr(ir.FnTraitMethod(ref, method), args))
        _, segments, sargs = scallee
        args = self.lowerer.lower_args(sargs, self.env, span) if sargs else ir.EMPTY_ARGS
        name = "::".join(segments)
        if name in self.lowerer.fun_ids:
            return ir.FnOpRegular(ir.FnPtr(ir.FnFun(self.lowerer.fun_ids[name]), args))
        if len(segments) == 2 and segments[0] in self.lowerer.trait_ids:
            trait_id = self.lowerer.trait_ids[segments[0]]
            st = self.lowerer.s_traits[trait_id]
            if not any(m[0] == segments[1] for m in st.methods):
                raise self.err(
                    "unknown-name", f"trait {segments[0]} has no method {segments[1]}", span
                )
            return ir.FnOpRegular(ir.FnPtr(ir.FnUnresolvedTraitMethod(trait_id, segments[1]), args))
        raise self.err("unknown-name", f"unknown function {name}", span)


def _prelower_types(lowerer: Lowerer) -> None:
    """Populate the type table before body lowering (bodies need field types)."""
    lowerer.types = [lowerer.lower_type_decl(st, i) for i, st in enumerate(lowerer.s_types)]


def parse_crate(
    sources: list[tuple[str, str]], crate_name: Optional[str] = None
) -> ir.TranslatedCrate:
    """Parse one or more (file name, text) pairs into a ULLBC-form crate.

    Raises ParseError on lexical, syntactic, or name-resolution problems; the
    resulting crate otherwise passes `validate_crate`.
    """
    if crate_name is None:
        crate_name = sources[0][0].rsplit("/", 1)[-1].removesuffix(".mirl") if sources else "crate"
    sfiles = []
    for file_id, (_name, text) in enumerate(sources):
        tokens, comments = tokenize(text, file_id)
        sfiles.append(Parser(tokens, comments, file_id).parse_file())
    lowerer = Lowerer(sfiles, [name for name, _ in sources], crate_name)
    lowerer.collect()
    lowerer._current_trait = None
    _prelower_types(lowerer)
    trait_decls = tuple(lowerer.lower_trait_decl(st, i) for i, st in enumerate(lowerer.s_traits))
    lowerer.traits = list(trait_decls)
    trait_impls = tuple(lowerer.lower_impl_decl(si, i) for i, si in enumerate(lowerer.s_impls))
    lowerer.impls = list(trait_impls)
    fun_decls = tuple(lowerer.lower_fn_decl(sf, i) for i, sf in enumerate(lowerer.s_funs))
    return ir.TranslatedCrate(
        crate_name=crate_name,
        files=tuple(ir.FileRecord(n) for n, _ in sources),
        type_decls=tuple(lowerer.types),
        fun_decls=fun_decls,
        trait_decls=trait_decls,
        trait_impls=trait_impls,
    )
