//! Restricted parser for pivot-language (Python) assert scaffolds.
//!
//! Accepted lines are single assertions over one call of the entrypoint with
//! literal arguments:
//!
//! ```text
//! assert f(1, [2, 3]) == 6
//! assert f("a") is True
//! assert not f(0)
//! assert math.isclose(f(2.0), 1.41421356, abs_tol=1e-6)
//! assert abs(f(2.0) - 1.41421356) < 1e-6
//! ```
//!
//! `import` lines, `def test_*():` / `def check(candidate):` wrappers and the
//! trailing `check(f)` call are structural and skipped. Everything else is
//! reported as a rejection with a reason.

use std::fmt;

use super::types::{EntrypointSignature, LiteralValue, TestCase, MAX_NESTING};
use super::TestSpecError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Int(i128),
    /// Integer literal that does not fit in i128.
    HugeInt,
    Float(f64),
    Str(String),
    Op(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(n) => write!(f, "{n}"),
            Tok::Int(i) => write!(f, "{i}"),
            Tok::HugeInt => f.write_str("<integer>"),
            Tok::Float(x) => write!(f, "{x:?}"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Op(o) => f.write_str(o),
        }
    }
}

/// A logical line: tokens plus the 1-based physical line where it starts.
#[derive(Debug)]
struct LogicalLine {
    line: usize,
    indent: usize,
    toks: Vec<Tok>,
}

const OPS: &[&str] = &[
    "**", "==", "!=", "<=", ">=", "->", "//", "(", ")", "[", "]", "{", "}", ",", ":", ".", "+",
    "-", "*", "/", "%", "<", ">", "=", ";", "@", "&", "|", "^", "~",
];

struct Lexer<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            src: text.as_bytes(),
            text,
            pos: 0,
            line: 1,
        }
    }

    fn err(&self, message: impl Into<String>) -> TestSpecError {
        TestSpecError::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn lines(mut self) -> Result<Vec<LogicalLine>, TestSpecError> {
        let mut out = Vec::new();
        let mut current: Option<LogicalLine> = None;
        let mut depth: usize = 0;
        let mut at_line_start = true;
        let mut indent = 0;

        while let Some(c) = self.peek() {
            if at_line_start {
                indent = 0;
                while let Some(b' ' | b'\t') = self.peek() {
                    indent += 1;
                    self.pos += 1;
                }
                at_line_start = false;
                continue;
            }
            match c {
                b'\n' => {
                    self.pos += 1;
                    self.line += 1;
                    if depth == 0 {
                        if let Some(l) = current.take() {
                            out.push(l);
                        }
                        at_line_start = true;
                    }
                }
                b'\\' if self.src.get(self.pos + 1) == Some(&b'\n') => {
                    self.pos += 2;
                    self.line += 1;
                }
                b' ' | b'\t' | b'\r' => self.pos += 1,
                b'#' => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.pos += 1;
                    }
                }
                _ => {
                    let line = self.line;
                    let tok = self.token()?;
                    match tok {
                        Tok::Op("(" | "[" | "{") => depth += 1,
                        Tok::Op(")" | "]" | "}") => {
                            depth = depth
                                .checked_sub(1)
                                .ok_or_else(|| self.err("unbalanced closing bracket"))?;
                        }
                        _ => {}
                    }
                    current
                        .get_or_insert_with(|| LogicalLine {
                            line,
                            indent,
                            toks: Vec::new(),
                        })
                        .toks
                        .push(tok);
                }
            }
        }
        if depth != 0 {
            return Err(self.err("unclosed bracket at end of scaffold"));
        }
        if let Some(l) = current.take() {
            out.push(l);
        }
        Ok(out)
    }

    fn token(&mut self) -> Result<Tok, TestSpecError> {
        let c = self.peek().expect("token() called at end of input");
        if c.is_ascii_digit() || (c == b'.' && self.src.get(self.pos + 1).is_some_and(u8::is_ascii_digit)) {
            return self.number();
        }
        if c.is_ascii_alphabetic() || c == b'_' || c >= 0x80 {
            let start = self.pos;
            while let Some(c) = self.peek() {
                if c.is_ascii_alphanumeric() || c == b'_' || c >= 0x80 {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            let word = &self.text[start..self.pos];
            // String prefixes.
            if let Some(q @ (b'"' | b'\'')) = self.peek() {
                let lower = word.to_ascii_lowercase();
                return match lower.as_str() {
                    "u" => self.string(q, false),
                    "r" => self.string(q, true),
                    _ => Err(self.err(format!("unsupported string prefix `{word}`"))),
                };
            }
            return Ok(Tok::Name(word.to_string()));
        }
        if c == b'"' || c == b'\'' {
            return self.string(c, false);
        }
        for op in OPS {
            if self.src[self.pos..].starts_with(op.as_bytes()) {
                self.pos += op.len();
                return Ok(Tok::Op(op));
            }
        }
        Err(self.err(format!("unexpected character {:?}", self.text[self.pos..].chars().next().unwrap())))
    }

    fn number(&mut self) -> Result<Tok, TestSpecError> {
        let start = self.pos;
        let rest = &self.src[self.pos..];
        if rest.len() > 1 && rest[0] == b'0' && matches!(rest[1], b'x' | b'X' | b'o' | b'O' | b'b' | b'B') {
            let radix = match rest[1] {
                b'x' | b'X' => 16,
                b'o' | b'O' => 8,
                _ => 2,
            };
            self.pos += 2;
            let digits_start = self.pos;
            while let Some(c) = self.peek() {
                if c.is_ascii_alphanumeric() || c == b'_' {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            let digits: String = self.text[digits_start..self.pos].replace('_', "");
            return match i128::from_str_radix(&digits, radix) {
                Ok(v) => Ok(Tok::Int(v)),
                Err(e) if matches!(e.kind(), std::num::IntErrorKind::PosOverflow) => Ok(Tok::HugeInt),
                Err(_) => Err(self.err(format!("malformed integer literal `{}`", &self.text[start..self.pos]))),
            };
        }
        let mut is_float = false;
        while let Some(c) = self.peek() {
            match c {
                b'0'..=b'9' | b'_' => self.pos += 1,
                b'.' => {
                    is_float = true;
                    self.pos += 1;
                }
                b'e' | b'E' => {
                    is_float = true;
                    self.pos += 1;
                    if let Some(b'+' | b'-') = self.peek() {
                        self.pos += 1;
                    }
                }
                b'j' | b'J' => return Err(self.err("complex literals are not supported")),
                _ => break,
            }
        }
        let raw: String = self.text[start..self.pos].replace('_', "");
        if is_float {
            raw.parse::<f64>()
                .map(Tok::Float)
                .map_err(|_| self.err(format!("malformed float literal `{raw}`")))
        } else {
            match raw.parse::<i128>() {
                Ok(v) => Ok(Tok::Int(v)),
                Err(_) if raw.bytes().all(|b| b.is_ascii_digit()) => Ok(Tok::HugeInt),
                Err(_) => Err(self.err(format!("malformed integer literal `{raw}`"))),
            }
        }
    }

    fn string(&mut self, quote: u8, raw: bool) -> Result<Tok, TestSpecError> {
        let triple = self.src[self.pos..].starts_with(&[quote, quote, quote]);
        self.pos += if triple { 3 } else { 1 };
        let mut out = String::new();
        loop {
            let Some(c) = self.peek() else {
                return Err(self.err("unterminated string literal"));
            };
            if c == quote {
                if !triple {
                    self.pos += 1;
                    return Ok(Tok::Str(out));
                }
                if self.src[self.pos..].starts_with(&[quote, quote, quote]) {
                    self.pos += 3;
                    return Ok(Tok::Str(out));
                }
            }
            if c == b'\n' {
                if !triple {
                    return Err(self.err("unterminated string literal"));
                }
                self.line += 1;
            }
            if c == b'\\' && !raw {
                self.pos += 1;
                self.escape(&mut out)?;
                continue;
            }
            if c == b'\\' && raw {
                // A raw string still cannot end in an escaped quote.
                out.push('\\');
                self.pos += 1;
                if self.peek() == Some(quote) {
                    out.push(quote as char);
                    self.pos += 1;
                }
                continue;
            }
            let ch = self.text[self.pos..].chars().next().unwrap();
            out.push(ch);
            self.pos += ch.len_utf8();
        }
    }

    fn escape(&mut self, out: &mut String) -> Result<(), TestSpecError> {
        let Some(c) = self.peek() else {
            return Err(self.err("unterminated escape"));
        };
        self.pos += 1;
        let simple = match c {
            b'n' => Some('\n'),
            b't' => Some('\t'),
            b'r' => Some('\r'),
            b'0' if !self.peek().is_some_and(|d| d.is_ascii_digit()) => Some('\0'),
            b'\\' => Some('\\'),
            b'\'' => Some('\''),
            b'"' => Some('"'),
            b'a' => Some('\x07'),
            b'b' => Some('\x08'),
            b'f' => Some('\x0c'),
            b'v' => Some('\x0b'),
            b'\n' => {
                self.line += 1;
                return Ok(());
            }
            _ => None,
        };
        if let Some(ch) = simple {
            out.push(ch);
            return Ok(());
        }
        let width = match c {
            b'x' => 2,
            b'u' => 4,
            b'U' => 8,
            b'0'..=b'7' => {
                // Octal escape: up to three digits, first already consumed.
                let mut value = (c - b'0') as u32;
                for _ in 0..2 {
                    match self.peek() {
                        Some(d @ b'0'..=b'7') => {
                            value = value * 8 + (d - b'0') as u32;
                            self.pos += 1;
                        }
                        _ => break,
                    }
                }
                out.push(char::from_u32(value).ok_or_else(|| self.err("invalid octal escape"))?);
                return Ok(());
            }
            other => {
                // Python keeps unknown escapes verbatim.
                out.push('\\');
                out.push(other as char);
                return Ok(());
            }
        };
        let end = self.pos + width;
        let hex = self
            .text
            .get(self.pos..end)
            .ok_or_else(|| self.err("truncated escape sequence"))?;
        let value = u32::from_str_radix(hex, 16).map_err(|_| self.err(format!("bad escape `{hex}`")))?;
        let ch = char::from_u32(value).ok_or_else(|| self.err(format!("escape `{hex}` is not a scalar value")))?;
        out.push(ch);
        self.pos = end;
        Ok(())
    }
}

/// Small expression tree for the accepted assertion forms.
#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Name(String),
    Int(i128),
    HugeInt,
    Float(f64),
    Str(String),
    List(Vec<Expr>),
    Tuple(Vec<Expr>),
    Dict,
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Attr(Box<Expr>, String),
    Index(Box<Expr>, Box<Expr>),
    Call {
        func: Box<Expr>,
        args: Vec<Expr>,
        kwargs: Vec<(String, Expr)>,
    },
    Binary(Box<Expr>, &'static str, Box<Expr>),
    Compare(Box<Expr>, CmpOp, Box<Expr>),
    Lambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Is,
    IsNot,
    In,
}

struct ExprParser<'a> {
    toks: &'a [Tok],
    pos: usize,
}

type PResult<T> = Result<T, String>;

impl<'a> ExprParser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Op(o)) if *o == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_name(&mut self, name: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Name(n)) if n == name) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(match self.peek() {
                Some(t) => format!("expected `{op}`, found `{t}`"),
                None => format!("expected `{op}` at end of line"),
            })
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expr(&mut self) -> PResult<Expr> {
        if self.eat_name("lambda") {
            // Consume the rest; lambdas are never literals.
            self.pos = self.toks.len();
            return Ok(Expr::Lambda);
        }
        self.or_expr()
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_name("or") {
            let rhs = self.and_expr()?;
            lhs = Expr::Binary(Box::new(lhs), "or", Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.eat_name("and") {
            let rhs = self.not_expr()?;
            lhs = Expr::Binary(Box::new(lhs), "and", Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_name("not") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let lhs = self.arith()?;
        let op = match self.peek() {
            Some(Tok::Op("==")) => CmpOp::Eq,
            Some(Tok::Op("!=")) => CmpOp::Ne,
            Some(Tok::Op("<")) => CmpOp::Lt,
            Some(Tok::Op("<=")) => CmpOp::Le,
            Some(Tok::Op(">")) => CmpOp::Gt,
            Some(Tok::Op(">=")) => CmpOp::Ge,
            Some(Tok::Name(n)) if n == "is" => CmpOp::Is,
            Some(Tok::Name(n)) if n == "in" => CmpOp::In,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let op = if op == CmpOp::Is && self.eat_name("not") {
            CmpOp::IsNot
        } else {
            op
        };
        let rhs = self.arith()?;
        if matches!(
            self.peek(),
            Some(Tok::Op("==" | "!=" | "<" | "<=" | ">" | ">="))
        ) {
            return Err("chained comparisons are not supported".into());
        }
        Ok(Expr::Compare(Box::new(lhs), op, Box::new(rhs)))
    }

    fn arith(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op(o @ ("+" | "-"))) => *o,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(Box::new(lhs), op, Box::new(rhs));
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op(o @ ("*" | "/" | "//" | "%" | "@"))) => *o,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(Box::new(lhs), op, Box::new(rhs));
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_op("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat_op("+") {
            return self.unary();
        }
        let base = self.postfix()?;
        if self.eat_op("**") {
            let exp = self.unary()?;
            return Ok(Expr::Binary(Box::new(base), "**", Box::new(exp)));
        }
        Ok(base)
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.eat_op("(") {
                let (args, kwargs) = self.call_args()?;
                e = Expr::Call {
                    func: Box::new(e),
                    args,
                    kwargs,
                };
            } else if self.eat_op(".") {
                match self.peek().cloned() {
                    Some(Tok::Name(n)) => {
                        self.pos += 1;
                        e = Expr::Attr(Box::new(e), n);
                    }
                    _ => return Err("expected attribute name after `.`".into()),
                }
            } else if self.eat_op("[") {
                let idx = self.expr()?;
                // Slices are tolerated syntactically and rejected later.
                while !self.eat_op("]") {
                    if self.at_end() {
                        return Err("unclosed subscript".into());
                    }
                    self.pos += 1;
                }
                e = Expr::Index(Box::new(e), Box::new(idx));
            } else {
                return Ok(e);
            }
        }
    }

    fn call_args(&mut self) -> PResult<(Vec<Expr>, Vec<(String, Expr)>)> {
        let mut args = Vec::new();
        let mut kwargs = Vec::new();
        if self.eat_op(")") {
            return Ok((args, kwargs));
        }
        loop {
            if let (Some(Tok::Name(n)), Some(Tok::Op("="))) =
                (self.toks.get(self.pos), self.toks.get(self.pos + 1))
            {
                let n = n.clone();
                self.pos += 2;
                kwargs.push((n, self.expr()?));
            } else if self.eat_op("*") || self.eat_op("**") {
                return Err("star-arguments are not supported".into());
            } else {
                if !kwargs.is_empty() {
                    return Err("positional argument follows keyword argument".into());
                }
                args.push(self.expr()?);
            }
            if self.eat_op(")") {
                return Ok((args, kwargs));
            }
            self.expect_op(",")?;
            if self.eat_op(")") {
                return Ok((args, kwargs));
            }
        }
    }

    fn seq_items(&mut self, close: &str) -> PResult<(Vec<Expr>, bool)> {
        let mut items = Vec::new();
        let mut trailing_comma = false;
        if self.eat_op(close) {
            return Ok((items, false));
        }
        loop {
            items.push(self.expr()?);
            if self.eat_op(close) {
                return Ok((items, trailing_comma));
            }
            self.expect_op(",")?;
            trailing_comma = true;
            if self.eat_op(close) {
                return Ok((items, trailing_comma));
            }
            if matches!(self.peek(), Some(Tok::Name(n)) if n == "for") {
                return Err("comprehensions are not supported".into());
            }
        }
    }

    fn atom(&mut self) -> PResult<Expr> {
        let Some(tok) = self.peek().cloned() else {
            return Err("unexpected end of line".into());
        };
        self.pos += 1;
        Ok(match tok {
            Tok::Name(n) => Expr::Name(n),
            Tok::Int(i) => Expr::Int(i),
            Tok::HugeInt => Expr::HugeInt,
            Tok::Float(x) => Expr::Float(x),
            Tok::Str(s) => {
                let mut s = s;
                while let Some(Tok::Str(more)) = self.peek() {
                    s.push_str(more);
                    self.pos += 1;
                }
                Expr::Str(s)
            }
            Tok::Op("[") => Expr::List(self.seq_items("]")?.0),
            Tok::Op("(") => {
                let (items, trailing) = self.seq_items(")")?;
                if items.len() == 1 && !trailing {
                    items.into_iter().next().unwrap()
                } else {
                    Expr::Tuple(items)
                }
            }
            Tok::Op("{") => {
                let mut depth = 1;
                while depth > 0 {
                    match self.peek() {
                        Some(Tok::Op("{")) => depth += 1,
                        Some(Tok::Op("}")) => depth -= 1,
                        None => return Err("unclosed `{`".into()),
                        _ => {}
                    }
                    self.pos += 1;
                }
                Expr::Dict
            }
            other => return Err(format!("unexpected `{other}`")),
        })
    }
}

/// Why one scaffold line did not become a test case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RejectReason {
    /// The line could not be parsed as an expression.
    Malformed(String),
    /// Side effects, non-entrypoint calls, non-assert statements and the like.
    UnsupportedConstruct(String),
    /// Literal kinds outside the portable set (tuples, dicts, sets, None args...).
    UnsupportedLiteral(String),
    /// An argument is a variable or other non-literal expression.
    NonLiteralArgument(String),
    ArityMismatch { expected: usize, found: usize },
    /// A literal does not fit the declared parameter/return type.
    TypeMismatch(String),
    IntegerOutOfRange,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::Malformed(m) => write!(f, "malformed assertion: {m}"),
            RejectReason::UnsupportedConstruct(m) => write!(f, "unsupported construct: {m}"),
            RejectReason::UnsupportedLiteral(m) => write!(f, "unsupported literal kind: {m}"),
            RejectReason::NonLiteralArgument(m) => write!(f, "non-literal argument: {m}"),
            RejectReason::ArityMismatch { expected, found } => {
                write!(f, "arity mismatch: expected {expected} arguments, found {found}")
            }
            RejectReason::TypeMismatch(m) => write!(f, "type mismatch: {m}"),
            RejectReason::IntegerOutOfRange => f.write_str("integer literal outside signed 64-bit range"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    /// 1-based line in the scaffold.
    pub line: usize,
    pub reason: RejectReason,
}

/// Output of a successful parse: the cases in textual order plus every line
/// that could not be converted.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedScaffold {
    pub cases: Vec<TestCase>,
    pub rejections: Vec<Rejection>,
    /// Tolerance annotated in the scaffold (`abs_tol=` or `abs(..) < tol`),
    /// largest seen.
    pub annotated_tolerance: Option<f64>,
}

pub(crate) fn parse_scaffold(
    text: &str,
    signature: &EntrypointSignature,
) -> Result<ParsedScaffold, TestSpecError> {
    let lines = Lexer::new(text).lines()?;
    let mut cases = Vec::new();
    let mut rejections = Vec::new();
    let mut annotated_tolerance: Option<f64> = None;
    // Names that refer to the entrypoint, e.g. `candidate` inside
    // `def check(candidate):`.
    let mut aliases: Vec<String> = vec![signature.function_name.clone()];
    let mut check_wrappers: Vec<String> = Vec::new();
    let mut wrapper_indent: Option<usize> = None;

    for l in &lines {
        if let Some(ind) = wrapper_indent {
            if l.indent <= ind {
                wrapper_indent = None;
                aliases.truncate(1);
            }
        }
        match classify_statement(&l.toks, signature, &check_wrappers) {
            Statement::Skip => {}
            Statement::CheckWrapper { name, param } => {
                check_wrappers.push(name);
                if let Some(p) = param {
                    aliases.push(p);
                }
                wrapper_indent = Some(l.indent);
            }
            Statement::TestFunction => {
                wrapper_indent = Some(l.indent);
            }
            Statement::Reject(reason) => rejections.push(Rejection { line: l.line, reason }),
            Statement::Assert(toks) => match convert_assert(toks, signature, &aliases) {
                Ok((case, tol)) => {
                    if let Some(t) = tol {
                        annotated_tolerance = Some(annotated_tolerance.map_or(t, |a: f64| a.max(t)));
                    }
                    cases.push(case);
                }
                Err(reason) => rejections.push(Rejection { line: l.line, reason }),
            },
        }
    }
    Ok(ParsedScaffold {
        cases,
        rejections,
        annotated_tolerance,
    })
}

enum Statement<'a> {
    Skip,
    CheckWrapper { name: String, param: Option<String> },
    TestFunction,
    Assert(&'a [Tok]),
    Reject(RejectReason),
}

fn classify_statement<'a>(
    toks: &'a [Tok],
    signature: &EntrypointSignature,
    check_wrappers: &[String],
) -> Statement<'a> {
    let first = match toks.first() {
        Some(Tok::Name(n)) => n.as_str(),
        Some(Tok::Str(_)) if toks.len() == 1 => return Statement::Skip, // docstring
        _ => {
            return Statement::Reject(RejectReason::UnsupportedConstruct(
                "statement is not an assertion".into(),
            ))
        }
    };
    match first {
        "assert" => Statement::Assert(&toks[1..]),
        "import" | "from" | "pass" => Statement::Skip,
        "def" => {
            let name = match toks.get(1) {
                Some(Tok::Name(n)) => n.clone(),
                _ => {
                    return Statement::Reject(RejectReason::Malformed("bad function header".into()))
                }
            };
            let params: Vec<&str> = toks
                .iter()
                .skip(3)
                .take_while(|t| **t != Tok::Op(")"))
                .filter_map(|t| match t {
                    Tok::Name(n) => Some(n.as_str()),
                    _ => None,
                })
                .collect();
            if name.starts_with("test") {
                if params.is_empty() {
                    Statement::TestFunction
                } else {
                    Statement::Reject(RejectReason::UnsupportedConstruct(
                        "test functions with fixtures are not supported".into(),
                    ))
                }
            } else if name == "check" || params.len() == 1 {
                Statement::CheckWrapper {
                    name,
                    param: params.first().map(|p| p.to_string()),
                }
            } else {
                Statement::Reject(RejectReason::UnsupportedConstruct(format!(
                    "helper function `{name}` is not supported"
                )))
            }
        }
        "class" => Statement::Reject(RejectReason::UnsupportedConstruct(
            "class-based tests are not supported".into(),
        )),
        name if check_wrappers.iter().any(|w| w == name) => {
            // `check(entrypoint)` at module level.
            let calls_entry = toks.iter().any(|t| matches!(t, Tok::Name(n) if *n == signature.function_name));
            if calls_entry {
                Statement::Skip
            } else {
                Statement::Reject(RejectReason::UnsupportedConstruct(
                    "wrapper invoked with a non-entrypoint argument".into(),
                ))
            }
        }
        "if" if toks.iter().any(|t| matches!(t, Tok::Name(n) if n == "__name__")) => Statement::Skip,
        _ => Statement::Reject(RejectReason::UnsupportedConstruct(
            "statement is not an assertion".into(),
        )),
    }
}

fn convert_assert(
    toks: &[Tok],
    signature: &EntrypointSignature,
    aliases: &[String],
) -> Result<(TestCase, Option<f64>), RejectReason> {
    let mut p = ExprParser { toks, pos: 0 };
    let expr = p.expr().map_err(RejectReason::Malformed)?;
    if !p.at_end() {
        // `assert cond, "message"` keeps only the condition.
        if !p.eat_op(",") {
            return Err(RejectReason::Malformed(format!(
                "unexpected `{}` after assertion",
                p.peek().unwrap()
            )));
        }
        p.expr().map_err(RejectReason::Malformed)?;
        if !p.at_end() {
            return Err(RejectReason::Malformed("trailing tokens after message".into()));
        }
    }

    let is_entry = |e: &Expr| matches!(e, Expr::Call { func, .. } if matches!(&**func, Expr::Name(n) if aliases.contains(n)));

    let (call, expected, tolerance) = match expr {
        Expr::Compare(lhs, CmpOp::Eq, rhs) => {
            if is_entry(&lhs) {
                (*lhs, *rhs, None)
            } else if is_entry(&rhs) {
                (*rhs, *lhs, None)
            } else {
                return Err(no_entry_call(&Expr::Compare(lhs, CmpOp::Eq, rhs), aliases));
            }
        }
        Expr::Compare(lhs, CmpOp::Is, rhs) if is_entry(&lhs) => match *rhs {
            Expr::Name(ref n) if n == "True" || n == "False" => (*lhs, *rhs, None),
            Expr::Name(ref n) if n == "None" => {
                return Err(RejectReason::UnsupportedLiteral("None".into()))
            }
            _ => {
                return Err(RejectReason::UnsupportedConstruct(
                    "identity comparison against a non-boolean".into(),
                ))
            }
        },
        Expr::Compare(lhs, CmpOp::Lt | CmpOp::Le, rhs) => {
            // abs(f(...) - expected) < tol
            let tol = literal_float(&rhs).ok_or_else(|| {
                RejectReason::UnsupportedConstruct("ordering comparison is not an equality oracle".into())
            })?;
            match *lhs {
                Expr::Call { func, mut args, kwargs }
                    if matches!(&*func, Expr::Name(n) if n == "abs") && args.len() == 1 && kwargs.is_empty() =>
                {
                    match args.pop().unwrap() {
                        Expr::Binary(a, "-", b) => {
                            if is_entry(&a) {
                                (*a, *b, Some(tol))
                            } else if is_entry(&b) {
                                (*b, *a, Some(tol))
                            } else {
                                return Err(RejectReason::UnsupportedConstruct(
                                    "tolerance comparison without an entrypoint call".into(),
                                ));
                            }
                        }
                        _ => {
                            return Err(RejectReason::UnsupportedConstruct(
                                "ordering comparison is not an equality oracle".into(),
                            ))
                        }
                    }
                }
                _ => {
                    return Err(RejectReason::UnsupportedConstruct(
                        "ordering comparison is not an equality oracle".into(),
                    ))
                }
            }
        }
        Expr::Compare(_, op, _) => {
            return Err(RejectReason::UnsupportedConstruct(format!(
                "comparison operator {op:?} is not an equality oracle"
            )))
        }
        Expr::Call { ref func, ref args, ref kwargs } if is_isclose(func) => {
            if args.len() != 2 {
                return Err(RejectReason::Malformed("isclose expects two arguments".into()));
            }
            let mut tol = None;
            for (k, v) in kwargs {
                match k.as_str() {
                    "abs_tol" => {
                        tol = Some(literal_float(v).ok_or_else(|| {
                            RejectReason::NonLiteralArgument("abs_tol must be a literal".into())
                        })?)
                    }
                    "rel_tol" => {}
                    other => {
                        return Err(RejectReason::UnsupportedConstruct(format!(
                            "isclose keyword `{other}`"
                        )))
                    }
                }
            }
            let (a, b) = (&args[0], &args[1]);
            if is_entry(a) {
                (a.clone(), b.clone(), tol)
            } else if is_entry(b) {
                (b.clone(), a.clone(), tol)
            } else {
                return Err(RejectReason::UnsupportedConstruct(
                    "isclose without an entrypoint call".into(),
                ));
            }
        }
        e @ Expr::Call { .. } if is_entry(&e) => (e, Expr::Name("True".into()), None),
        Expr::Not(inner) if is_entry(&inner) => (*inner, Expr::Name("False".into()), None),
        other => return Err(no_entry_call(&other, aliases)),
    };

    let Expr::Call { args, kwargs, .. } = call else {
        unreachable!("entry call checked above")
    };
    if !kwargs.is_empty() {
        return Err(RejectReason::UnsupportedConstruct(
            "keyword arguments to the entrypoint".into(),
        ));
    }
    let mut values = Vec::with_capacity(args.len());
    for a in &args {
        values.push(to_literal(a, aliases)?);
    }
    let expected = to_literal(&expected, aliases)?;

    if values.len() != signature.arity() {
        return Err(RejectReason::ArityMismatch {
            expected: signature.arity(),
            found: values.len(),
        });
    }
    let mut conformed = Vec::with_capacity(values.len());
    for (i, (v, ty)) in values.into_iter().zip(&signature.param_types).enumerate() {
        conformed.push(check_literal(v, ty).map_err(|m| {
            RejectReason::TypeMismatch(format!("argument {i}: {m}"))
        })?);
    }
    let expected = check_literal(expected, &signature.return_type)
        .map_err(|m| RejectReason::TypeMismatch(format!("expected value: {m}")))?;
    if tolerance.is_some() && !signature.return_type.contains_float() {
        return Err(RejectReason::UnsupportedConstruct(
            "tolerance comparison on a non-float return type".into(),
        ));
    }
    Ok((
        TestCase {
            args: conformed,
            expected,
        },
        tolerance,
    ))
}

fn check_literal(v: LiteralValue, ty: &super::types::SemanticType) -> Result<LiteralValue, String> {
    if let LiteralValue::Null = v {
        return Err("None has no portable rendering".into());
    }
    if !v.is_homogeneous() {
        return Err("heterogeneous list".into());
    }
    if v.depth() > MAX_NESTING {
        return Err(format!("nesting deeper than {MAX_NESTING}"));
    }
    if !v.is_finite() {
        return Err("non-finite float".into());
    }
    v.conform(ty)
        .map_err(|v| format!("{} literal does not fit declared type {ty}", v.kind_name()))
}

fn is_isclose(func: &Expr) -> bool {
    match func {
        Expr::Name(n) => n == "isclose",
        Expr::Attr(base, n) => n == "isclose" && matches!(&**base, Expr::Name(m) if m == "math"),
        _ => false,
    }
}

fn literal_float(e: &Expr) -> Option<f64> {
    match e {
        Expr::Float(x) => Some(*x),
        Expr::Int(i) => Some(*i as f64),
        _ => None,
    }
}

fn no_entry_call(e: &Expr, aliases: &[String]) -> RejectReason {
    if contains_call(e) {
        RejectReason::UnsupportedConstruct(format!(
            "assertion does not compare a call of `{}` against a literal",
            aliases[0]
        ))
    } else {
        RejectReason::UnsupportedConstruct("assertion does not call the entrypoint".into())
    }
}

fn contains_call(e: &Expr) -> bool {
    match e {
        Expr::Call { .. } => true,
        Expr::Neg(x) | Expr::Not(x) | Expr::Attr(x, _) => contains_call(x),
        Expr::Binary(a, _, b) | Expr::Compare(a, _, b) | Expr::Index(a, b) => {
            contains_call(a) || contains_call(b)
        }
        Expr::List(xs) | Expr::Tuple(xs) => xs.iter().any(contains_call),
        _ => false,
    }
}

fn to_literal(e: &Expr, aliases: &[String]) -> Result<LiteralValue, RejectReason> {
    Ok(match e {
        Expr::Int(i) => LiteralValue::Int(narrow(*i)?),
        Expr::HugeInt => return Err(RejectReason::IntegerOutOfRange),
        Expr::Float(x) => LiteralValue::Float(*x),
        Expr::Str(s) => LiteralValue::Str(s.clone()),
        Expr::Name(n) if n == "True" => LiteralValue::Bool(true),
        Expr::Name(n) if n == "False" => LiteralValue::Bool(false),
        Expr::Name(n) if n == "None" => LiteralValue::Null,
        Expr::Name(n) => return Err(RejectReason::NonLiteralArgument(format!("`{n}`"))),
        Expr::Neg(inner) => match &**inner {
            Expr::Int(i) => LiteralValue::Int(narrow(-*i)?),
            Expr::Float(x) => LiteralValue::Float(-*x),
            Expr::HugeInt => return Err(RejectReason::IntegerOutOfRange),
            Expr::Neg(_) => match to_literal(inner, aliases)? {
                LiteralValue::Int(i) => LiteralValue::Int(
                    i.checked_neg().ok_or(RejectReason::IntegerOutOfRange)?,
                ),
                LiteralValue::Float(x) => LiteralValue::Float(-x),
                other => {
                    return Err(RejectReason::NonLiteralArgument(format!(
                        "negated {}",
                        other.kind_name()
                    )))
                }
            },
            _ => return Err(RejectReason::NonLiteralArgument("negated expression".into())),
        },
        Expr::List(items) => LiteralValue::List(
            items
                .iter()
                .map(|i| to_literal(i, aliases))
                .collect::<Result<_, _>>()?,
        ),
        Expr::Tuple(_) => return Err(RejectReason::UnsupportedLiteral("tuple".into())),
        Expr::Dict => return Err(RejectReason::UnsupportedLiteral("dict or set".into())),
        Expr::Call { func, .. } => {
            return Err(match &**func {
                Expr::Name(n) if aliases.contains(n) => RejectReason::UnsupportedConstruct(
                    "nested entrypoint call".into(),
                ),
                _ => RejectReason::UnsupportedConstruct("call to a non-entrypoint function".into()),
            })
        }
        Expr::Lambda => return Err(RejectReason::NonLiteralArgument("lambda".into())),
        Expr::Binary(..) | Expr::Index(..) | Expr::Attr(..) | Expr::Not(_) | Expr::Compare(..) => {
            return Err(RejectReason::NonLiteralArgument("computed expression".into()))
        }
    })
}

fn narrow(i: i128) -> Result<i64, RejectReason> {
    i64::try_from(i).map_err(|_| RejectReason::IntegerOutOfRange)
}

/// Python source for a literal; the inverse of the literal grammar above.
pub fn python_literal(v: &LiteralValue) -> String {
    match v {
        LiteralValue::Null => "None".into(),
        LiteralValue::Bool(true) => "True".into(),
        LiteralValue::Bool(false) => "False".into(),
        LiteralValue::Int(i) => i.to_string(),
        LiteralValue::Float(x) => format_float(*x),
        LiteralValue::Str(s) => python_string(s),
        LiteralValue::List(items) => {
            let inner: Vec<String> = items.iter().map(python_literal).collect();
            format!("[{}]", inner.join(", "))
        }
    }
}

/// Shortest round-tripping decimal form; always contains `.` or an exponent.
pub fn format_float(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains(['.', 'e', 'E']) || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

fn python_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 || c as u32 == 0x7f => out.push_str(&format!("\\x{:02x}", c as u32)),
            c if c.is_ascii() => out.push(c),
            c if (c as u32) <= 0xffff => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push_str(&format!("\\U{:08x}", c as u32)),
        }
    }
    out.push('"');
    out
}

impl TestCase {
    /// Renders the case as a single pivot-language assertion.
    pub fn to_pivot_assertion(&self, function_name: &str) -> String {
        let args: Vec<String> = self.args.iter().map(python_literal).collect();
        format!(
            "assert {function_name}({}) == {}",
            args.join(", "),
            python_literal(&self.expected)
        )
    }
}
