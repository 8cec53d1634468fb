//! Recursive-descent parser producing a span-annotated syntax tree.

use super::lexer::{SourceSpan, Tok, Token};
use super::ParseError;
use crate::model::Builtin;

#[derive(Clone, Debug)]
pub enum Expr {
    Name(String, SourceSpan),
    Call(String, Vec<Expr>, SourceSpan),
    Nat(u64, SourceSpan),
    Real(f64, SourceSpan),
    Str(String, SourceSpan),
    Bool(bool, SourceSpan),
    Null(SourceSpan),
    Binary(Builtin, Box<Expr>, Box<Expr>, SourceSpan),
    Not(Box<Expr>, SourceSpan),
    /// `(Pub, 3)`
    Numbered(String, u64, SourceSpan),
    /// `Pub@A3F`
    IdentTok(String, String, SourceSpan),
    Map(Vec<(Expr, Expr)>, SourceSpan),
    /// `#Pub`
    Count(String, SourceSpan),
    /// `Pub p` inside `Uniform(...)`
    Typed(String, Option<String>, SourceSpan),
}

impl Expr {
    pub fn span(&self) -> SourceSpan {
        match self {
            Expr::Name(_, s)
            | Expr::Call(_, _, s)
            | Expr::Nat(_, s)
            | Expr::Real(_, s)
            | Expr::Str(_, s)
            | Expr::Bool(_, s)
            | Expr::Null(s)
            | Expr::Binary(_, _, _, s)
            | Expr::Not(_, s)
            | Expr::Numbered(_, _, s)
            | Expr::IdentTok(_, _, s)
            | Expr::Map(_, s)
            | Expr::Count(_, s)
            | Expr::Typed(_, _, s) => *s,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DistArg {
    pub name: Option<(String, SourceSpan)>,
    pub value: Expr,
}

#[derive(Clone, Debug)]
pub struct DistRef {
    pub name: String,
    pub span: SourceSpan,
    pub args: Vec<DistArg>,
}

#[derive(Clone, Debug)]
pub enum RhsAst {
    Dist(DistRef),
    Term(Expr),
}

#[derive(Clone, Debug)]
pub struct ClauseAst {
    pub guard: Option<Expr>,
    pub rhs: RhsAst,
}

pub type Named = (String, SourceSpan);

#[derive(Clone, Debug)]
pub enum Item {
    Type(Named),
    Guaranteed { ty: Named, names: Vec<Named> },
    Prior { name: Named, dist: DistRef },
    Number { ty: Named, dist: DistRef },
    Random {
        ret: Named,
        name: Named,
        params: Vec<(Named, Named)>,
        clauses: Vec<ClauseAst>,
    },
}

const KEYWORDS: &[&str] = &[
    "type", "guaranteed", "random", "prior", "if", "then", "else", "true", "false", "null", "query", "bound",
    "obs",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
    pub errors: Vec<ParseError>,
}

type PResult<T> = Result<T, ()>;

impl<'t> Parser<'t> {
    pub fn new(toks: &'t [Token]) -> Self {
        Parser {
            toks,
            pos: 0,
            errors: Vec::new(),
        }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn span(&self) -> SourceSpan {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> SourceSpan {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn join(&self, start: SourceSpan) -> SourceSpan {
        let end = self.prev_span();
        SourceSpan {
            end: end.end.max(start.start),
            ..start
        }
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn error_here(&mut self, expected: &str) {
        let span = self.span();
        let found = self.peek().clone();
        self.errors.push(ParseError {
            span,
            message: format!("unexpected {found}, expected {expected}"),
            expected: Some(expected.to_string()),
        });
    }

    pub fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error_here(&tok.to_string());
            Err(())
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.error_here(&format!("`{kw}`"));
            Err(())
        }
    }

    pub fn name(&mut self, what: &str) -> PResult<Named> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                let span = self.span();
                self.bump();
                Ok((s, span))
            }
            _ => {
                self.error_here(what);
                Err(())
            }
        }
    }

    /// Skips to just past the next `;` (or to end of input).
    pub fn recover(&mut self) {
        while !self.at_eof() {
            if self.bump() == Tok::Semi {
                return;
            }
        }
    }

    /// Skips past a `;` or to the first token on a later line than `line`.
    pub fn recover_line(&mut self, line: u32) {
        while !self.at_eof() && self.span().line == line {
            if self.bump() == Tok::Semi {
                return;
            }
        }
    }

    pub fn items(&mut self) -> Vec<Item> {
        let mut items = Vec::new();
        while !self.at_eof() {
            match self.item() {
                Ok(it) => items.push(it),
                Err(()) => self.recover(),
            }
        }
        items
    }

    fn item(&mut self) -> PResult<Item> {
        if self.is_kw("type") {
            self.bump();
            let n = self.name("type name")?;
            self.expect(Tok::Semi)?;
            return Ok(Item::Type(n));
        }
        if self.is_kw("guaranteed") {
            self.bump();
            let ty = self.name("type name")?;
            let mut names = vec![self.name("object name")?];
            while *self.peek() == Tok::Comma {
                self.bump();
                names.push(self.name("object name")?);
            }
            self.expect(Tok::Semi)?;
            return Ok(Item::Guaranteed { ty, names });
        }
        if self.is_kw("prior") {
            self.bump();
            let name = self.name("prior name")?;
            self.expect(Tok::Assign)?;
            let dist = self.dist_ref()?;
            self.expect(Tok::Semi)?;
            return Ok(Item::Prior { name, dist });
        }
        if *self.peek() == Tok::Hash {
            self.bump();
            let ty = self.name("type name")?;
            self.expect(Tok::Tilde)?;
            let dist = self.dist_ref()?;
            self.expect(Tok::Semi)?;
            return Ok(Item::Number { ty, dist });
        }
        if self.is_kw("random") {
            self.bump();
            let ret = self.name("return type")?;
            let name = self.name("function name")?;
            let mut params = Vec::new();
            if *self.peek() == Tok::LParen {
                self.bump();
                if *self.peek() != Tok::RParen {
                    loop {
                        let ty = self.name("parameter type")?;
                        let pn = self.name("parameter name")?;
                        params.push((ty, pn));
                        match self.peek() {
                            Tok::Comma => {
                                self.bump();
                            }
                            Tok::RParen => break,
                            _ => {
                                self.error_here("`,` or `)`");
                                return Err(());
                            }
                        }
                    }
                }
                self.expect(Tok::RParen)?;
            }
            let clauses = self.body()?;
            self.expect(Tok::Semi)?;
            return Ok(Item::Random {
                ret,
                name,
                params,
                clauses,
            });
        }
        self.error_here("`type`, `guaranteed`, `prior`, `#` or `random`");
        Err(())
    }

    fn body(&mut self) -> PResult<Vec<ClauseAst>> {
        if self.is_kw("if") {
            let mut clauses = Vec::new();
            loop {
                self.expect_kw("if")?;
                let guard = self.expr()?;
                self.expect_kw("then")?;
                let rhs = self.rhs()?;
                clauses.push(ClauseAst {
                    guard: Some(guard),
                    rhs,
                });
                if !self.is_kw("else") {
                    break;
                }
                self.bump();
                if self.is_kw("if") {
                    continue;
                }
                let rhs = self.rhs()?;
                clauses.push(ClauseAst { guard: None, rhs });
                break;
            }
            Ok(clauses)
        } else {
            Ok(vec![ClauseAst {
                guard: None,
                rhs: self.rhs()?,
            }])
        }
    }

    fn rhs(&mut self) -> PResult<RhsAst> {
        match self.peek() {
            Tok::Tilde => {
                self.bump();
                Ok(RhsAst::Dist(self.dist_ref()?))
            }
            Tok::Assign => {
                self.bump();
                Ok(RhsAst::Term(self.expr()?))
            }
            _ => {
                self.error_here("`~` or `=`");
                Err(())
            }
        }
    }

    fn dist_ref(&mut self) -> PResult<DistRef> {
        let (name, span) = self.name("distribution or prior name")?;
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            let uniform = name == "Uniform" || name == "UniformOverObjects";
            if *self.peek() != Tok::RParen {
                loop {
                    if uniform {
                        let start = self.span();
                        let (ty, _) = self.name("type name")?;
                        let dummy = match self.peek().clone() {
                            Tok::Ident(s) if !is_keyword(&s) => {
                                self.bump();
                                Some(s)
                            }
                            _ => None,
                        };
                        args.push(DistArg {
                            name: None,
                            value: Expr::Typed(ty, dummy, self.join(start)),
                        });
                    } else if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Assign {
                        let n = self.name("parameter name")?;
                        self.bump();
                        let value = self.expr()?;
                        args.push(DistArg {
                            name: Some(n),
                            value,
                        });
                    } else {
                        args.push(DistArg {
                            name: None,
                            value: self.expr()?,
                        });
                    }
                    match self.peek() {
                        Tok::Comma => {
                            self.bump();
                        }
                        Tok::RParen => break,
                        _ => {
                            self.error_here("`,` or `)`");
                            return Err(());
                        }
                    }
                }
            }
            self.expect(Tok::RParen)?;
        }
        Ok(DistRef {
            name,
            span: self.join(span),
            args,
        })
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let start = self.span();
        let mut lhs = self.and_expr()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = Expr::Binary(Builtin::Or, Box::new(lhs), Box::new(rhs), self.join(start));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let start = self.span();
        let mut lhs = self.cmp_expr()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.cmp_expr()?;
            lhs = Expr::Binary(Builtin::And, Box::new(lhs), Box::new(rhs), self.join(start));
        }
        Ok(lhs)
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let start = self.span();
        let lhs = self.unary()?;
        let op = match self.peek() {
            Tok::EqEq => Builtin::Eq,
            Tok::NotEq => Builtin::Ne,
            Tok::Lt => Builtin::Lt,
            Tok::Le => Builtin::Le,
            Tok::Gt => Builtin::Gt,
            Tok::Ge => Builtin::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.unary()?;
        Ok(Expr::Binary(op, Box::new(lhs), Box::new(rhs), self.join(start)))
    }

    fn unary(&mut self) -> PResult<Expr> {
        if *self.peek() == Tok::Bang {
            let start = self.span();
            self.bump();
            let e = self.unary()?;
            return Ok(Expr::Not(Box::new(e), self.join(start)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Nat(n) => {
                self.bump();
                Ok(Expr::Nat(n, start))
            }
            Tok::Hash => {
                self.bump();
                let (ty, _) = self.name("type name")?;
                Ok(Expr::Count(ty, start))
            }
            Tok::Real(x) => {
                self.bump();
                Ok(Expr::Real(x, start))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s, start))
            }
            Tok::LParen => {
                if matches!(self.peek_at(1), Tok::Ident(_)) && *self.peek_at(2) == Tok::Comma {
                    self.bump();
                    let (ty, _) = self.name("type name")?;
                    self.bump();
                    let idx = match self.bump() {
                        Tok::Nat(n) => n,
                        _ => {
                            self.pos -= 1;
                            self.error_here("object index");
                            return Err(());
                        }
                    };
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::Numbered(ty, idx, self.join(start)));
                }
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::LBrace => {
                self.bump();
                let mut entries = Vec::new();
                if *self.peek() != Tok::RBrace {
                    loop {
                        let k = self.expr()?;
                        self.expect(Tok::Colon)?;
                        let v = self.expr()?;
                        entries.push((k, v));
                        match self.peek() {
                            Tok::Comma => {
                                self.bump();
                            }
                            Tok::RBrace => break,
                            _ => {
                                self.error_here("`,` or `}`");
                                return Err(());
                            }
                        }
                    }
                }
                self.expect(Tok::RBrace)?;
                Ok(Expr::Map(entries, self.join(start)))
            }
            Tok::Ident(s) => {
                match s.as_str() {
                    "true" | "false" => {
                        self.bump();
                        return Ok(Expr::Bool(s == "true", start));
                    }
                    "null" => {
                        self.bump();
                        return Ok(Expr::Null(start));
                    }
                    _ if is_keyword(&s) => {
                        self.error_here("a term");
                        return Err(());
                    }
                    _ => {}
                }
                self.bump();
                if let Tok::At(tok) = self.peek().clone() {
                    self.bump();
                    return Ok(Expr::IdentTok(s, tok, self.join(start)));
                }
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        loop {
                            args.push(self.expr()?);
                            match self.peek() {
                                Tok::Comma => {
                                    self.bump();
                                }
                                Tok::RParen => break,
                                _ => {
                                    self.error_here("`,` or `)`");
                                    return Err(());
                                }
                            }
                        }
                    }
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::Call(s, args, self.join(start)));
                }
                Ok(Expr::Name(s, start))
            }
            _ => {
                self.error_here("a term");
                Err(())
            }
        }
    }
}
