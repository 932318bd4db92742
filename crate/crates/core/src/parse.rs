//! Text grammar for words and group-ring elements.
//!
//! Words: generators `y<k>` / `x<k>`, uppercase for inverses, `^<int>` powers,
//! `^<atom>` conjugation (`u^v = v^{-1} u v`), juxtaposition or `*` for
//! products, `[u,v]` commutators (left-normed for more entries), `(...)` and
//! `{...}` for grouping, `1` / `e` for the identity.
//!
//! Ring elements: `[<int>*]<word>` terms joined by `+` / `-`.

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::ring::RingElement;
use crate::words::{FreeGroup, Word};

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    rank: Option<u32>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, rank: Option<u32>) -> Self {
        Parser { src: src.as_bytes(), pos: 0, rank }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos + 1, msg: msg.into() })
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

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn digits(&mut self) -> Option<&'a str> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            None
        } else {
            std::str::from_utf8(&self.src[start..self.pos]).ok()
        }
    }

    fn starts_atom(&mut self) -> bool {
        matches!(self.peek(), Some(b'y' | b'x' | b'Y' | b'X' | b'(' | b'{' | b'[' | b'e'))
    }

    fn word(&mut self) -> Result<Word> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'*') {
                acc = acc.mul(&self.term()?);
            } else if self.starts_atom() {
                acc = acc.mul(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Word> {
        let mut base = self.atom()?;
        while self.eat(b'^') {
            match self.peek() {
                Some(b'-') | Some(b'+') | Some(b'0'..=b'9') => {
                    let n = self.int()?;
                    let n: i64 = n
                        .try_into()
                        .or_else(|_| self.err("exponent out of range"))?;
                    base = base.pow(n);
                }
                _ if self.starts_atom() => {
                    let f = self.atom()?;
                    base = base.conjugate(&f);
                }
                _ => return self.err("expected exponent or conjugator after '^'"),
            }
        }
        Ok(base)
    }

    fn int(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let neg = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        self.skip_ws();
        let d = match self.digits() {
            Some(d) => d,
            None => return self.err("expected integer"),
        };
        let v: BigInt = d.parse().expect("digits");
        Ok(if neg { -v } else { v })
    }

    fn atom(&mut self) -> Result<Word> {
        match self.peek() {
            Some(c @ (b'y' | b'x' | b'Y' | b'X')) => {
                self.pos += 1;
                let at = self.pos;
                let idx: u32 = match self.digits() {
                    Some(d) => match d.parse() {
                        Ok(i) => i,
                        Err(_) => return self.err("generator index too large"),
                    },
                    None => return self.err("expected generator index"),
                };
                if idx == 0 {
                    self.pos = at;
                    return self.err("generator indices start at 1");
                }
                if let Some(rank) = self.rank {
                    if idx > rank {
                        self.pos = at;
                        return self.err(format!("generator {idx} exceeds rank {rank}"));
                    }
                }
                let exp = if c.is_ascii_uppercase() { -1 } else { 1 };
                Ok(Word::gen_pow(idx, exp))
            }
            Some(b'e') => {
                self.pos += 1;
                Ok(Word::identity())
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(Word::identity())
            }
            Some(b'(') => {
                self.pos += 1;
                let w = self.word()?;
                self.expect(b')')?;
                Ok(w)
            }
            Some(b'{') => {
                self.pos += 1;
                let w = self.word()?;
                self.expect(b'}')?;
                Ok(w)
            }
            Some(b'[') => {
                self.pos += 1;
                let mut acc = self.word()?;
                let mut parts = 1;
                while self.eat(b',') {
                    let next = self.word()?;
                    acc = Word::commutator(&acc, &next);
                    parts += 1;
                }
                if parts < 2 {
                    return self.err("commutator needs at least two entries");
                }
                self.expect(b']')?;
                Ok(acc)
            }
            Some(c) => self.err(format!("unexpected character '{}'", c as char)),
            None => self.err("unexpected end of input"),
        }
    }

    fn finish(&mut self) -> Result<()> {
        if self.peek().is_some() {
            self.err("trailing input")
        } else {
            Ok(())
        }
    }

    fn ring_term(&mut self) -> Result<(BigInt, Word)> {
        match self.peek() {
            Some(b'0'..=b'9') => {
                let start = self.pos;
                let c = self.int()?;
                if self.eat(b'*') {
                    let w = self.word()?;
                    Ok((c, w))
                } else if self.starts_atom() {
                    let w = self.word()?;
                    Ok((c, w))
                } else if self.pos == start + 1 && c == BigInt::from(1) && self.peek() == Some(b'^') {
                    // `1^k` is still the identity
                    self.pos = start;
                    Ok((BigInt::from(1), self.word()?))
                } else {
                    Ok((c, Word::identity()))
                }
            }
            _ => Ok((BigInt::from(1), self.word()?)),
        }
    }

    fn ring_element(&mut self) -> Result<RingElement> {
        let mut acc = RingElement::zero();
        let mut sign = if self.eat(b'-') {
            -1
        } else {
            self.eat(b'+');
            1
        };
        loop {
            let (c, w) = self.ring_term()?;
            acc.add_term(w, c * sign);
            if self.eat(b'+') {
                sign = 1;
            } else if self.eat(b'-') {
                sign = -1;
            } else {
                return Ok(acc);
            }
        }
    }
}

/// Parses a word; generator indices are checked against `rank` when given.
pub fn parse_word(src: &str, rank: Option<u32>) -> Result<Word> {
    let mut p = Parser::new(src, rank);
    if p.peek().is_none() {
        return Ok(Word::identity());
    }
    let w = p.word()?;
    p.finish()?;
    Ok(w)
}

pub fn parse_word_in(group: &FreeGroup, src: &str) -> Result<Word> {
    parse_word(src, Some(group.rank()))
}

pub fn parse_ring_element(src: &str, rank: Option<u32>) -> Result<RingElement> {
    let mut p = Parser::new(src, rank);
    if p.peek().is_none() {
        return Ok(RingElement::zero());
    }
    let e = p.ring_element()?;
    p.finish()?;
    Ok(e)
}

/// `;`-separated list of words, e.g. `"[y1,y2];[y3,y4]"`.
pub fn parse_word_list(src: &str, rank: Option<u32>) -> Result<Vec<Word>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for part in src.split(';') {
        if !part.trim().is_empty() {
            out.push(parse_word(part, rank).map_err(|e| match e {
                Error::Parse { pos, msg } => Error::Parse { pos: pos + offset, msg },
                other => other,
            })?);
        }
        offset += part.len() + 1;
    }
    Ok(out)
}

/// Comma-separated generator indices, e.g. `"1,2"`.
pub fn parse_index_set(src: &str) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    let mut col = 1;
    for part in src.split(',') {
        let t = part.trim();
        if !t.is_empty() {
            match t.trim_start_matches(['y', 'x']).parse::<u32>() {
                Ok(i) if i > 0 => out.push(i),
                _ => return Err(Error::Parse { pos: col, msg: format!("bad index '{t}'") }),
            }
        }
        col += part.len() + 1;
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::Syllable;

    #[test]
    fn grammar_example() {
        let w = parse_word("[y1,y3]*y2^-2", Some(3)).unwrap();
        let expect = Word::commutator(&Word::gen(1), &Word::gen(3)).mul(&Word::gen_pow(2, -2));
        assert_eq!(w, expect);
    }

    #[test]
    fn inverse_forms_agree() {
        assert_eq!(parse_word("Y1 y2", None).unwrap(), parse_word("y1^-1*y2", None).unwrap());
        assert_eq!(parse_word("x1 X1", None).unwrap(), Word::identity());
    }

    #[test]
    fn conjugation_and_nesting() {
        let w = parse_word("[y1,y2]^{y3}", Some(3)).unwrap();
        let c = Word::commutator(&Word::gen(1), &Word::gen(2));
        assert_eq!(w, c.conjugate(&Word::gen(3)));
        let n = parse_word("[y1,y2,y3]", None).unwrap();
        assert_eq!(n, Word::commutator(&c, &Word::gen(3)));
        assert_eq!(parse_word("(y1 y2)^2", None).unwrap().len(), 4);
    }

    #[test]
    fn errors_carry_position() {
        match parse_word("y1*y4", Some(3)) {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_word("y1 ]", None), Err(Error::Parse { pos: 4, .. })));
        assert!(matches!(parse_word("[y1]", None), Err(Error::Parse { .. })));
        assert!(matches!(parse_word("y0", None), Err(Error::Parse { .. })));
    }

    #[test]
    fn ring_elements() {
        let e = parse_ring_element("2*y1*y2 - 3*y2 + 1", Some(2)).unwrap();
        assert_eq!(e.augmentation(), BigInt::from(0));
        let f = parse_ring_element("y1 - 1", None).unwrap();
        assert_eq!(f.terms().count(), 2);
        let g = parse_ring_element("-y1^-1 + y1", None).unwrap();
        assert_eq!(
            g.coefficient(&Word::from_syllables([Syllable::new(1, -1)])),
            BigInt::from(-1)
        );
    }

    #[test]
    fn display_round_trip() {
        for src in ["y1^-1*y3^-1*y1*y3", "1", "y2^5*y1^-2"] {
            let w = parse_word(src, None).unwrap();
            assert_eq!(w.to_string(), src);
            assert_eq!(parse_word(&w.to_string(), None).unwrap(), w);
        }
    }

    #[test]
    fn lists_and_indices() {
        let l = parse_word_list("[y1,y2];[y3,y4]", Some(4)).unwrap();
        assert_eq!(l.len(), 2);
        assert_eq!(parse_index_set("2, 1,y3").unwrap(), vec![1, 2, 3]);
    }
}
