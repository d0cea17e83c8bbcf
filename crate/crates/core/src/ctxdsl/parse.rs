use std::fmt;

use thiserror::Error;

use super::syntax::{CtxExpr, CtxType, Lit};
use crate::effect::IoOp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(Vec<u8>),
    Backslash,
    Colon,
    Dot,
    Comma,
    LParen,
    RParen,
    Arrow,
    FatArrow,
    Bar,
    Eq,
    Star,
    Let,
    In,
    Case,
    Of,
    Inl,
    Inr,
    Fst,
    Snd,
    Io,
    Either,
    TUnit,
    TInt,
    TBytes,
    TFd,
    TErr,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(x) => return write!(f, "identifier `{x}`"),
            Tok::Int(n) => return write!(f, "integer {n}"),
            Tok::Str(_) => "string literal",
            Tok::Backslash => "`\\`",
            Tok::Colon => "`:`",
            Tok::Dot => "`.`",
            Tok::Comma => "`,`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::Arrow => "`->`",
            Tok::FatArrow => "`=>`",
            Tok::Bar => "`|`",
            Tok::Eq => "`=`",
            Tok::Star => "`*`",
            Tok::Let => "`let`",
            Tok::In => "`in`",
            Tok::Case => "`case`",
            Tok::Of => "`of`",
            Tok::Inl => "`inl`",
            Tok::Inr => "`inr`",
            Tok::Fst => "`fst`",
            Tok::Snd => "`snd`",
            Tok::Io => "`io`",
            Tok::Either => "`either`",
            Tok::TUnit => "`unit`",
            Tok::TInt => "`int`",
            Tok::TBytes => "`bytes`",
            Tok::TFd => "`fd`",
            Tok::TErr => "`err`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "let" => Tok::Let,
        "in" => Tok::In,
        "case" => Tok::Case,
        "of" => Tok::Of,
        "inl" | "Inl" => Tok::Inl,
        "inr" | "Inr" => Tok::Inr,
        "fst" => Tok::Fst,
        "snd" => Tok::Snd,
        "io" => Tok::Io,
        "either" => Tok::Either,
        "unit" => Tok::TUnit,
        "int" => Tok::TInt,
        "bytes" => Tok::TBytes,
        "fd" => Tok::TFd,
        "err" => Tok::TErr,
        _ => return None,
    })
}

/// Reserved words can't be used as variable names.
pub fn is_keyword(word: &str) -> bool {
    keyword(word).is_some()
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'-') if self.peek2() == Some(b'-') => {
                    while self.peek().is_some_and(|c| c != b'\n') {
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn number(&mut self, negative: bool) -> Result<Tok, ParseError> {
        let mut text = String::from(if negative { "-" } else { "" });
        while let Some(c) = self.peek().filter(u8::is_ascii_digit) {
            text.push(c as char);
            self.bump();
        }
        text.parse()
            .map(Tok::Int)
            .map_err(|_| self.err(format!("integer literal {text} is out of range")))
    }

    fn string(&mut self) -> Result<Tok, ParseError> {
        let mut out = Vec::new();
        loop {
            match self.bump() {
                None => return Err(self.err("unterminated string literal")),
                Some(b'"') => return Ok(Tok::Str(out)),
                Some(b'\\') => match self.bump() {
                    Some(b'n') => out.push(b'\n'),
                    Some(b'r') => out.push(b'\r'),
                    Some(b't') => out.push(b'\t'),
                    Some(b'\\') => out.push(b'\\'),
                    Some(b'"') => out.push(b'"'),
                    Some(b'x') => {
                        let hex: Vec<u8> = (0..2).filter_map(|_| self.bump()).collect();
                        let byte = std::str::from_utf8(&hex)
                            .ok()
                            .filter(|h| h.len() == 2)
                            .and_then(|h| u8::from_str_radix(h, 16).ok())
                            .ok_or_else(|| self.err("`\\x` needs two hex digits"))?;
                        out.push(byte);
                    }
                    Some(c) => return Err(self.err(format!("unknown escape `\\{}`", c as char))),
                    None => return Err(self.err("unterminated string literal")),
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn next(&mut self) -> Result<Spanned, ParseError> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        let Some(c) = self.peek() else {
            return Ok(Spanned { tok: Tok::Eof, line, col });
        };
        let tok = match c {
            b'0'..=b'9' => self.number(false)?,
            b'-' if self.peek2().is_some_and(|d| d.is_ascii_digit()) => {
                self.bump();
                self.number(true)?
            }
            b'-' if self.peek2() == Some(b'>') => {
                self.bump();
                self.bump();
                Tok::Arrow
            }
            b'=' if self.peek2() == Some(b'>') => {
                self.bump();
                self.bump();
                Tok::FatArrow
            }
            b'"' => {
                self.bump();
                self.string()?
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_' || c == b'\'') {
                    self.bump();
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                keyword(word).unwrap_or_else(|| Tok::Ident(word.to_string()))
            }
            _ => {
                self.bump();
                match c {
                    b'\\' => Tok::Backslash,
                    b':' => Tok::Colon,
                    b'.' => Tok::Dot,
                    b',' => Tok::Comma,
                    b'(' => Tok::LParen,
                    b')' => Tok::RParen,
                    b'|' => Tok::Bar,
                    b'=' => Tok::Eq,
                    b'*' => Tok::Star,
                    _ => {
                        return Err(ParseError {
                            line,
                            col,
                            msg: format!("unexpected character `{}`", c.escape_ascii()),
                        })
                    }
                }
            }
        };
        Ok(Spanned { tok, line, col })
    }
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut lx = Lexer {
        src: src.as_bytes(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        let t = lx.next()?;
        let eof = t.tok == Tok::Eof;
        out.push(t);
        if eof {
            return Ok(out);
        }
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError {
            line: s.line,
            col: s.col,
            msg: msg.into(),
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        self.err(format!("expected {wanted}, found {}", self.peek()))
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.advance();
                Ok(x)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn ty(&mut self) -> Result<CtxType, ParseError> {
        let a = self.ty_pair()?;
        if *self.peek() == Tok::Arrow {
            self.advance();
            Ok(CtxType::arrow(a, self.ty()?))
        } else {
            Ok(a)
        }
    }

    fn ty_pair(&mut self) -> Result<CtxType, ParseError> {
        let a = self.ty_base()?;
        if *self.peek() == Tok::Star {
            self.advance();
            Ok(CtxType::pair(a, self.ty_pair()?))
        } else {
            Ok(a)
        }
    }

    fn ty_base(&mut self) -> Result<CtxType, ParseError> {
        let t = match self.peek() {
            Tok::TUnit => CtxType::Unit,
            Tok::TInt => CtxType::Int,
            Tok::TBytes => CtxType::Bytes,
            Tok::TFd => CtxType::FileDescr,
            Tok::TErr => CtxType::Err,
            Tok::Either => {
                self.advance();
                let a = self.ty_base()?;
                let b = self.ty_base()?;
                return Ok(CtxType::either(a, b));
            }
            Tok::LParen => {
                self.advance();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                return Ok(t);
            }
            _ => return Err(self.unexpected("a type")),
        };
        self.advance();
        Ok(t)
    }

    fn expr(&mut self) -> Result<CtxExpr, ParseError> {
        match self.peek() {
            Tok::Backslash => {
                self.advance();
                let x = self.ident()?;
                self.expect(Tok::Colon)?;
                let t = self.ty()?;
                self.expect(Tok::Dot)?;
                Ok(CtxExpr::Lam(x, t, Box::new(self.expr()?)))
            }
            Tok::Let => {
                self.advance();
                let x = self.ident()?;
                self.expect(Tok::Eq)?;
                let a = self.expr()?;
                self.expect(Tok::In)?;
                Ok(CtxExpr::Let(x, Box::new(a), Box::new(self.expr()?)))
            }
            Tok::Case => {
                self.advance();
                let s = self.expr()?;
                self.expect(Tok::Of)?;
                self.expect(Tok::Inl)?;
                let x = self.ident()?;
                self.expect(Tok::FatArrow)?;
                let l = self.expr()?;
                self.expect(Tok::Bar)?;
                self.expect(Tok::Inr)?;
                let y = self.ident()?;
                self.expect(Tok::FatArrow)?;
                let r = self.expr()?;
                Ok(CtxExpr::Case(Box::new(s), x, Box::new(l), y, Box::new(r)))
            }
            _ => self.app(),
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::Int(_) | Tok::Str(_) | Tok::LParen)
    }

    fn app(&mut self) -> Result<CtxExpr, ParseError> {
        let mut e = match self.peek() {
            Tok::Fst => {
                self.advance();
                CtxExpr::Fst(Box::new(self.atom()?))
            }
            Tok::Snd => {
                self.advance();
                CtxExpr::Snd(Box::new(self.atom()?))
            }
            Tok::Inl => {
                self.advance();
                CtxExpr::Inl(Box::new(self.atom()?))
            }
            Tok::Inr => {
                self.advance();
                CtxExpr::Inr(Box::new(self.atom()?))
            }
            Tok::Io => {
                self.advance();
                let name = self.ident().map_err(|_| self.unexpected("an IO operation name"))?;
                let op = IoOp::from_name(&name).ok_or_else(|| {
                    let mut e = self.err(format!("unknown IO operation `{name}`"));
                    e.col = e.col.saturating_sub(name.len());
                    e
                })?;
                CtxExpr::Io(op, Box::new(self.atom()?))
            }
            _ => self.atom()?,
        };
        while self.starts_atom() {
            e = CtxExpr::App(Box::new(e), Box::new(self.atom()?));
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<CtxExpr, ParseError> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.advance();
                Ok(CtxExpr::Var(x))
            }
            Tok::Int(n) => {
                self.advance();
                Ok(CtxExpr::Lit(Lit::Int(n)))
            }
            Tok::Str(b) => {
                self.advance();
                Ok(CtxExpr::Lit(Lit::Bytes(b)))
            }
            Tok::LParen => {
                self.advance();
                if *self.peek() == Tok::RParen {
                    self.advance();
                    return Ok(CtxExpr::Lit(Lit::Unit));
                }
                let e = self.expr()?;
                if !matches!(self.peek(), Tok::RParen | Tok::Comma | Tok::Colon) {
                    return Err(self.unexpected("`)`, `,` or `:`"));
                }
                match self.advance() {
                    Tok::RParen => Ok(e),
                    Tok::Comma => {
                        let b = self.expr()?;
                        self.expect(Tok::RParen)?;
                        Ok(CtxExpr::Pair(Box::new(e), Box::new(b)))
                    }
                    Tok::Colon => {
                        let t = self.ty()?;
                        self.expect(Tok::RParen)?;
                        Ok(CtxExpr::Ann(Box::new(e), t))
                    }
                    _ => unreachable!(),
                }
            }
            _ => Err(self.unexpected("an expression")),
        }
    }
}

pub fn parse_expr(src: &str) -> Result<CtxExpr, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Ok(e)
}

pub fn parse_type(src: &str) -> Result<CtxType, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let t = p.ty()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Ok(t)
}
