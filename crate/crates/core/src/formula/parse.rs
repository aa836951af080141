//! Recursive-descent parser for the formula text grammar.
//!
//! Binding strength, tightest first: `NOT`, `AND`, `OR`, `IMPLIES` (right
//! associative), the binary temporal operators (right associative), then
//! `FREEZE`. Prefix temporal operators and `FREEZE` take everything to their
//! right as their body.

use super::{normalize, CmpOp, Formula, FormulaError, Term};
use crate::time::{parse_rational, Bound, Interval};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Str(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    Arrow,
    Star,
    Cmp(CmpOp),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, FormulaError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |pos: usize, msg: &str| FormulaError::Syntax { pos, msg: msg.to_string() };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let ident_char = |b: u8| b.is_ascii_alphanumeric() || b == b'_' || b == b'\'' || b == b'#';
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => Tok::LBrack,
            b']' => Tok::RBrack,
            b',' => Tok::Comma,
            b'.' => Tok::Dot,
            b'*' => Tok::Star,
            b'=' => Tok::Cmp(CmpOp::Eq),
            b'!' if bytes.get(i + 1) == Some(&b'=') => {
                i += 1;
                Tok::Cmp(CmpOp::Ne)
            }
            b'<' => match bytes.get(i + 1) {
                Some(b'-') => {
                    i += 1;
                    Tok::Arrow
                }
                Some(b'=') => {
                    i += 1;
                    Tok::Cmp(CmpOp::Le)
                }
                _ => Tok::Cmp(CmpOp::Lt),
            },
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 1;
                    Tok::Cmp(CmpOp::Ge)
                } else {
                    Tok::Cmp(CmpOp::Gt)
                }
            }
            b'"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match bytes.get(i) {
                        None => return Err(err(start, "unterminated string")),
                        Some(b'"') => break,
                        Some(b'\\') => {
                            let next = src[i + 1..].chars().next().ok_or_else(|| err(i, "dangling escape"))?;
                            s.push(next);
                            i += 1 + next.len_utf8();
                        }
                        Some(_) => {
                            let ch = src[i..].chars().next().expect("in bounds");
                            s.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                Tok::Str(s)
            }
            b'-' | b'0'..=b'9' => {
                let mut j = i + 1;
                if c == b'-' && !bytes.get(j).is_some_and(u8::is_ascii_digit) {
                    return Err(err(i, "expected digit after '-'"));
                }
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                for sep in *b"./" {
                    if bytes.get(j) == Some(&sep) && bytes.get(j + 1).is_some_and(u8::is_ascii_digit) {
                        j += 1;
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                    }
                }
                let t = Tok::Num(src[i..j].to_string());
                i = j;
                out.push((start, t));
                continue;
            }
            b if b.is_ascii_alphabetic() || b == b'_' => {
                let mut j = i + 1;
                while j < bytes.len() && ident_char(bytes[j]) {
                    j += 1;
                }
                let t = Tok::Ident(src[i..j].to_string());
                i = j;
                out.push((start, t));
                continue;
            }
            _ => return Err(err(i, &format!("unexpected character {:?}", src[i..].chars().next().unwrap_or('?')))),
        };
        i += 1;
        out.push((start, tok));
    }
    Ok(out)
}

const KEYWORDS: &[&str] = &[
    "NOT", "AND", "OR", "IMPLIES", "TRUE", "FALSE", "PREV", "NEXT", "SINCE", "UNTIL", "ONCE", "HIST", "EVENTUALLY",
    "ALWAYS", "WEAKUNTIL", "FREEZE",
];

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

type PResult<T> = Result<T, FormulaError>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, msg: &str) -> PResult<T> {
        Err(FormulaError::Syntax { pos: self.offset(), msg: msg.to_string() })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<()> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(&format!("expected {what}"))
        }
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err(&format!("expected {what}")),
        }
    }

    fn formula(&mut self) -> PResult<Formula> {
        let lhs = self.implies()?;
        if self.keyword("SINCE") || self.keyword("UNTIL") {
            let past = self.keyword("SINCE");
            self.pos += 1;
            let i = self.opt_interval()?;
            let rhs = self.formula()?;
            return Ok(if past { Formula::since(i, lhs, rhs) } else { Formula::until(i, lhs, rhs) });
        }
        if self.eat_keyword("WEAKUNTIL") {
            let rhs = self.formula()?;
            return Ok(Formula::weak_until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> PResult<Formula> {
        let lhs = self.or()?;
        if self.eat_keyword("IMPLIES") {
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> PResult<Formula> {
        let mut lhs = self.and()?;
        while self.eat_keyword("OR") {
            lhs = Formula::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> PResult<Formula> {
        let mut lhs = self.unary()?;
        while self.eat_keyword("AND") {
            lhs = Formula::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Formula> {
        let kw = match self.peek() {
            Some(Tok::Ident(s)) => s.clone(),
            _ => return self.primary(),
        };
        match kw.as_str() {
            "NOT" => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            "PREV" | "NEXT" | "ONCE" | "HIST" | "EVENTUALLY" | "ALWAYS" => {
                self.pos += 1;
                let i = self.opt_interval()?;
                let body = self.formula()?;
                Ok(match kw.as_str() {
                    "PREV" => Formula::prev(i, body),
                    "NEXT" => Formula::next(i, body),
                    "ONCE" => Formula::once(i, body),
                    "HIST" => Formula::historically(i, body),
                    "EVENTUALLY" => Formula::eventually(i, body),
                    _ => Formula::always(i, body),
                })
            }
            "FREEZE" => {
                self.pos += 1;
                let var = self.ident("variable")?;
                self.expect(Tok::Arrow, "'<-'")?;
                let reg = self.ident("register")?;
                self.expect(Tok::Dot, "'.'")?;
                let body = self.formula()?;
                Ok(Formula::Freeze { register: reg, var, body: Box::new(body) })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> PResult<Formula> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            Some(Tok::Ident(s)) if s == "TRUE" => {
                self.pos += 1;
                Ok(Formula::True)
            }
            Some(Tok::Ident(s)) if s == "FALSE" => {
                self.pos += 1;
                Ok(Formula::falsum())
            }
            Some(Tok::Ident(_)) => {
                let name = self.ident("atom")?;
                match self.peek() {
                    Some(Tok::LParen) => {
                        self.pos += 1;
                        let mut args = Vec::new();
                        if self.peek() != Some(&Tok::RParen) {
                            loop {
                                args.push(self.term()?);
                                if self.peek() == Some(&Tok::Comma) {
                                    self.pos += 1;
                                } else {
                                    break;
                                }
                            }
                        }
                        self.expect(Tok::RParen, "')' after arguments")?;
                        Ok(Formula::Pred { name, args })
                    }
                    Some(Tok::Cmp(_)) => self.comparison(Term::Var(name)),
                    _ => Ok(Formula::Pred { name, args: Vec::new() }),
                }
            }
            Some(Tok::Num(_)) | Some(Tok::Str(_)) => {
                let lhs = self.term()?;
                self.comparison(lhs)
            }
            _ => self.err("expected a formula"),
        }
    }

    fn comparison(&mut self, lhs: Term) -> PResult<Formula> {
        let op = match self.bump() {
            Some(Tok::Cmp(op)) => op,
            _ => {
                self.pos -= 1;
                return self.err("expected comparison operator");
            }
        };
        let rhs = self.term()?;
        Ok(Formula::Cmp { op, lhs, rhs })
    }

    fn term(&mut self) -> PResult<Term> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                let v = n.parse::<i64>().map_err(|_| FormulaError::Syntax {
                    pos: self.offset(),
                    msg: format!("constant {n:?} is not an integer"),
                })?;
                self.pos += 1;
                Ok(Term::Const(Value::Int(v)))
            }
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(Term::Const(Value::str(&s)))
            }
            Some(Tok::Ident(_)) => Ok(Term::Var(self.ident("term")?)),
            _ => self.err("expected a term"),
        }
    }

    /// An interval directly after a temporal keyword. A parenthesis only
    /// starts an interval when followed by a number and a comma.
    fn opt_interval(&mut self) -> PResult<Interval> {
        let starts = match self.peek() {
            Some(Tok::LBrack) => true,
            Some(Tok::LParen) => {
                matches!(self.peek_at(1), Some(Tok::Num(_))) && matches!(self.peek_at(2), Some(Tok::Comma))
            }
            _ => false,
        };
        if !starts {
            return Ok(Interval::all());
        }
        let at = self.offset();
        let lo_closed = self.bump() == Some(Tok::LBrack);
        let lo = self.bound_number()?;
        self.expect(Tok::Comma, "',' in interval")?;
        let hi = if self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            Bound::Infinity
        } else {
            Bound::Finite(self.bound_number()?)
        };
        let hi_closed = match self.bump() {
            Some(Tok::RBrack) => true,
            Some(Tok::RParen) => false,
            _ => {
                self.pos -= 1;
                return self.err("expected ']' or ')' closing interval");
            }
        };
        if hi == Bound::Infinity && hi_closed {
            return Err(FormulaError::Syntax { pos: at, msg: "infinite bound must be open".into() });
        }
        Interval::new(lo, lo_closed, hi, hi_closed).ok_or(FormulaError::EmptyInterval(at))
    }

    fn bound_number(&mut self) -> PResult<crate::Rational> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                let r = parse_rational(&n)
                    .map_err(|e| FormulaError::Syntax { pos: self.offset(), msg: e.to_string() })?;
                self.pos += 1;
                Ok(r)
            }
            _ => self.err("expected interval bound"),
        }
    }
}

/// Parses formula text into a normalized, closed [`Formula`].
pub fn parse_formula(text: &str) -> Result<Formula, FormulaError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let f = p.formula()?;
    if p.pos < p.toks.len() {
        return p.err("unexpected trailing input");
    }
    normalize(&f)
}
