//! Group words: `x^2*y`, `[y,x,x]`, `c3^-1*z(4,2)`, `([c2,c1]*y)^3`.
//!
//! word := term {"*" term}
//! term := atom ["^" int]
//! atom := "x" | "y" | "c" int | "z" "(" int "," int ")" | "(" word ")" | "[" word {"," word} "]"

use std::fmt;

use hspec_core::hdim::GroupArith;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    X,
    Y,
    C(u32),
    Z(u32, u32),
    Group(Word),
    /// left-normed: [a, b, c] = [[a, b], c]
    Bracket(Vec<Word>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub atom: Atom,
    pub exp: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word(pub Vec<Term>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{msg} at byte {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub msg: String,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, at: usize, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { offset: at, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            let found = self.found();
            self.err(self.pos, format!("expected '{}', found {found}", c as char))
        }
    }

    fn found(&mut self) -> String {
        match self.peek() {
            Some(c) => format!("'{}'", c as char),
            None => "end of input".into(),
        }
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        let digits = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits {
            self.pos = start;
            let found = self.found();
            return self.err(start, format!("expected an integer, found {found}"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse().or_else(|_| self.err(start, "integer out of range"))
    }

    fn index(&mut self) -> Result<u32, ParseError> {
        self.skip_ws();
        let at = self.pos;
        let v = self.int()?;
        if v < 1 || v > u32::MAX as i64 {
            return self.err(at, format!("generator index must be ≥ 1, got {v}"));
        }
        Ok(v as u32)
    }

    fn word(&mut self) -> Result<Word, ParseError> {
        let mut terms = vec![self.term()?];
        while self.eat(b'*') {
            terms.push(self.term()?);
        }
        Ok(Word(terms))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let atom = self.atom()?;
        let exp = if self.eat(b'^') { Some(self.int()?) } else { None };
        Ok(Term { atom, exp })
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let at = {
            self.skip_ws();
            self.pos
        };
        match self.peek() {
            Some(b'x') => {
                self.pos += 1;
                Ok(Atom::X)
            }
            Some(b'y') => {
                self.pos += 1;
                Ok(Atom::Y)
            }
            Some(b'c') => {
                self.pos += 1;
                Ok(Atom::C(self.index()?))
            }
            Some(b'z') => {
                self.pos += 1;
                self.expect(b'(')?;
                let m_at = {
                    self.skip_ws();
                    self.pos
                };
                let m = self.index()?;
                self.expect(b',')?;
                let n = self.index()?;
                self.expect(b')')?;
                if m == n {
                    return self.err(m_at, format!("z({m},{m}) is the identity; use distinct indices"));
                }
                Ok(Atom::Z(m, n))
            }
            Some(b'(') => {
                self.pos += 1;
                let w = self.word()?;
                self.expect(b')')?;
                Ok(Atom::Group(w))
            }
            Some(b'[') => {
                self.pos += 1;
                let mut ws = vec![self.word()?];
                while self.eat(b',') {
                    ws.push(self.word()?);
                }
                self.expect(b']')?;
                Ok(Atom::Bracket(ws))
            }
            _ => {
                let found = self.found();
                self.err(at, format!("expected x, y, c<i>, z(m,n), '(' or '[', found {found}"))
            }
        }
    }
}

pub fn parse_word(text: &str) -> Result<Word, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let w = p.word()?;
    if p.peek().is_some() {
        let found = p.found();
        return p.err(p.pos, format!("unexpected {found} after word"));
    }
    Ok(w)
}

/// Words separated by ';'. Offsets refer to the whole list.
pub fn parse_word_list(text: &str) -> Result<Vec<Word>, ParseError> {
    let mut out = Vec::new();
    let mut start = 0;
    for part in text.split(';') {
        if !part.trim().is_empty() {
            out.push(parse_word(part).map_err(|e| ParseError { offset: e.offset + start, msg: e.msg })?);
        }
        start += part.len() + 1;
    }
    if out.is_empty() {
        return Err(ParseError { offset: 0, msg: "no generators given".into() });
    }
    Ok(out)
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.atom)?;
        if let Some(e) = self.exp {
            write!(f, "^{e}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::X => f.write_str("x"),
            Atom::Y => f.write_str("y"),
            Atom::C(i) => write!(f, "c{i}"),
            Atom::Z(m, n) => write!(f, "z({m},{n})"),
            Atom::Group(w) => write!(f, "({w})"),
            Atom::Bracket(ws) => {
                f.write_str("[")?;
                for (i, w) in ws.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{w}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// Evaluate with any group arithmetic; generators beyond the window are
/// trivial there.
pub fn eval<A: GroupArith>(arith: &A, w: &Word) -> A::Elem {
    let mut acc = arith.identity();
    for t in &w.0 {
        let a = eval_atom(arith, &t.atom);
        let a = match t.exp {
            Some(e) => arith.pow(&a, e),
            None => a,
        };
        acc = arith.mul(&acc, &a);
    }
    acc
}

fn eval_atom<A: GroupArith>(arith: &A, a: &Atom) -> A::Elem {
    match a {
        Atom::X => arith.x_pow(1),
        Atom::Y => arith.gen_c(1),
        Atom::C(i) => arith.gen_c(*i),
        Atom::Z(m, n) => arith.gen_z(*m, *n),
        Atom::Group(w) => eval(arith, w),
        Atom::Bracket(ws) => {
            let mut it = ws.iter();
            let mut acc = eval(arith, it.next().expect("brackets hold at least one word"));
            for w in it {
                acc = arith.comm(&acc, &eval(arith, w));
            }
            acc
        }
    }
}
