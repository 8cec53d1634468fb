use std::fmt;

/// Location of a token or syntax node in the source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    /// `@` followed by an alphanumeric token, as in `Pub@A3F`.
    At(String),
    Nat(u64),
    Real(f64),
    Str(String),
    Hash,
    Semi,
    Comma,
    Colon,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Tilde,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Amp,
    Pipe,
    Bang,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::At(s) => write!(f, "`@{s}`"),
            Tok::Nat(n) => write!(f, "`{n}`"),
            Tok::Real(x) => write!(f, "`{x}`"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Eof => write!(f, "end of input"),
            other => {
                let s = match other {
                    Tok::Hash => "#",
                    Tok::Semi => ";",
                    Tok::Comma => ",",
                    Tok::Colon => ":",
                    Tok::LParen => "(",
                    Tok::RParen => ")",
                    Tok::LBrace => "{",
                    Tok::RBrace => "}",
                    Tok::Tilde => "~",
                    Tok::Assign => "=",
                    Tok::EqEq => "==",
                    Tok::NotEq => "!=",
                    Tok::Lt => "<",
                    Tok::Le => "<=",
                    Tok::Gt => ">",
                    Tok::Ge => ">=",
                    Tok::Amp => "&",
                    Tok::Pipe => "|",
                    Tok::Bang => "!",
                    _ => unreachable!(),
                };
                write!(f, "`{s}`")
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

pub struct LexError {
    pub span: SourceSpan,
    pub message: String,
}

/// Splits source text into tokens. `//` comments run to end of line.
pub fn lex(src: &str) -> Result<Vec<Token>, Vec<LexError>> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut errors = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut line_start = 0usize;
    let span = |start: usize, end: usize, line: u32, line_start: usize| SourceSpan {
        start,
        end,
        line,
        column: (src[line_start..start].chars().count() + 1) as u32,
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else if c == b'@' {
            i += 1;
            let s = i;
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            if s == i {
                errors.push(LexError {
                    span: span(start, i, line, line_start),
                    message: "expected identifier token after `@`".into(),
                });
                continue;
            }
            Tok::At(src[s..i].to_string())
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let mut real = false;
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                real = true;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'-' || bytes[j] == b'+') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    real = true;
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            if real {
                Tok::Real(text.parse().expect("valid float literal"))
            } else {
                match text.parse() {
                    Ok(n) => Tok::Nat(n),
                    Err(_) => {
                        errors.push(LexError {
                            span: span(start, i, line, line_start),
                            message: format!("integer literal `{text}` out of range"),
                        });
                        continue;
                    }
                }
            }
        } else if c == b'"' {
            i += 1;
            let mut s = String::new();
            let mut closed = false;
            while i < bytes.len() {
                match bytes[i] {
                    b'"' => {
                        closed = true;
                        i += 1;
                        break;
                    }
                    b'\\' if i + 1 < bytes.len() => {
                        s.push(match bytes[i + 1] {
                            b'n' => '\n',
                            b't' => '\t',
                            other => other as char,
                        });
                        i += 2;
                    }
                    b'\n' => break,
                    _ => {
                        let ch = src[i..].chars().next().unwrap();
                        s.push(ch);
                        i += ch.len_utf8();
                    }
                }
            }
            if !closed {
                errors.push(LexError {
                    span: span(start, i, line, line_start),
                    message: "unterminated string literal".into(),
                });
                continue;
            }
            Tok::Str(s)
        } else {
            let two = bytes.get(i + 1).copied();
            let (t, len) = match (c, two) {
                (b'=', Some(b'=')) => (Tok::EqEq, 2),
                (b'!', Some(b'=')) => (Tok::NotEq, 2),
                (b'<', Some(b'=')) => (Tok::Le, 2),
                (b'>', Some(b'=')) => (Tok::Ge, 2),
                (b'&', Some(b'&')) => (Tok::Amp, 2),
                (b'|', Some(b'|')) => (Tok::Pipe, 2),
                (b'#', _) => (Tok::Hash, 1),
                (b';', _) => (Tok::Semi, 1),
                (b',', _) => (Tok::Comma, 1),
                (b':', _) => (Tok::Colon, 1),
                (b'(', _) => (Tok::LParen, 1),
                (b')', _) => (Tok::RParen, 1),
                (b'{', _) => (Tok::LBrace, 1),
                (b'}', _) => (Tok::RBrace, 1),
                (b'~', _) => (Tok::Tilde, 1),
                (b'=', _) => (Tok::Assign, 1),
                (b'<', _) => (Tok::Lt, 1),
                (b'>', _) => (Tok::Gt, 1),
                (b'&', _) => (Tok::Amp, 1),
                (b'|', _) => (Tok::Pipe, 1),
                (b'!', _) => (Tok::Bang, 1),
                _ => {
                    let ch = src[i..].chars().next().unwrap();
                    i += ch.len_utf8();
                    errors.push(LexError {
                        span: span(start, i, line, line_start),
                        message: format!("unexpected character `{ch}`"),
                    });
                    continue;
                }
            };
            i += len;
            t
        };
        toks.push(Token {
            tok,
            span: span(start, i, line, line_start),
        });
    }
    toks.push(Token {
        tok: Tok::Eof,
        span: span(src.len(), src.len(), line, line_start),
    });
    if errors.is_empty() {
        Ok(toks)
    } else {
        Err(errors)
    }
}
