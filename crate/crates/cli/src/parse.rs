//! Parsers for command-line values: exact numbers, partitions, word letters.

use gjs_core::gjs::{GjsModel, Letter};
use gjs_core::kac::Vector;
use gjs_core::{AlgebraicReal, NCPartition};
use num_bigint::BigInt;
use num_rational::BigRational;

/// Exact numbers such as `3/4`, `0.25`, `sqrt(6)`, `√6`, `1/sqrt(2)`,
/// `2*√3 - 1`.
pub fn number(src: &str) -> Result<AlgebraicReal, String> {
    let mut p = Parser { s: src.chars().filter(|c| !c.is_whitespace()).collect(), i: 0 };
    let v = p.expr()?;
    if p.i != p.s.len() {
        return Err(format!("unexpected {:?} in {src:?}", p.s[p.i]));
    }
    Ok(v)
}

struct Parser {
    s: Vec<char>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.s.get(self.i).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<AlgebraicReal, String> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<AlgebraicReal, String> {
        let mut acc = self.factor()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.factor()?;
            } else if self.eat('/') {
                let d = self.factor()?;
                acc = &acc * &d.inv().map_err(|_| "division by zero".to_string())?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<AlgebraicReal, String> {
        if self.eat('-') {
            return Ok(-self.factor()?);
        }
        if self.eat('(') {
            let v = self.expr()?;
            return if self.eat(')') { Ok(v) } else { Err("missing ')'".into()) };
        }
        if self.eat('√') {
            return self.radical();
        }
        if self.s[self.i..].starts_with(&['s', 'q', 'r', 't']) {
            self.i += 4;
            return self.radical();
        }
        self.decimal().map(AlgebraicReal::from_rational)
    }

    fn radical(&mut self) -> Result<AlgebraicReal, String> {
        let paren = self.eat('(');
        let neg = self.eat('-');
        let q = self.decimal()?;
        if paren && !self.eat(')') {
            return Err("missing ')'".into());
        }
        if !q.is_integer() {
            return Err("square roots take integer arguments".into());
        }
        let n: i64 = q.to_integer().try_into().map_err(|_| "radicand too large".to_string())?;
        Ok(AlgebraicReal::sqrt(if neg { -n } else { n }))
    }

    fn decimal(&mut self) -> Result<BigRational, String> {
        let start = self.i;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.i += 1;
        }
        let int: String = self.s[start..self.i].iter().collect();
        let mut frac = String::new();
        if self.eat('.') {
            let fs = self.i;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.i += 1;
            }
            frac = self.s[fs..self.i].iter().collect();
        }
        if int.is_empty() && frac.is_empty() {
            return Err(match self.peek() {
                Some(c) => format!("expected a number at {c:?}"),
                None => "expected a number".into(),
            });
        }
        let digits: BigInt = format!("{int}{frac}").parse().map_err(|e| format!("{e}"))?;
        Ok(BigRational::new(digits, BigInt::from(10).pow(frac.len() as u32)))
    }
}

/// `{{1,3},{2}}` or `1,3|2`.
pub fn partition(src: &str) -> Result<NCPartition, String> {
    let s = src.trim();
    let groups: Vec<&str> = if s.starts_with('{') {
        let inner = s.strip_prefix('{').and_then(|t| t.strip_suffix('}')).ok_or("unbalanced braces")?;
        inner
            .split('}')
            .map(|g| g.trim().trim_start_matches(',').trim().trim_start_matches('{'))
            .filter(|g| !g.trim().is_empty())
            .collect()
    } else {
        s.split('|').collect()
    };
    let mut classes = Vec::new();
    for g in groups {
        classes.push(list(g)?);
    }
    NCPartition::from_classes(classes).map_err(|e| e.to_string())
}

/// Comma-separated positive integers.
pub fn list(src: &str) -> Result<Vec<usize>, String> {
    src.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().map_err(|_| format!("{t:?} is not a positive integer")))
        .collect()
}

/// A comma-separated word: basis labels, `X`, or `@γ:p:q` matrix units
/// (all 1-based).
pub fn word(model: &GjsModel, src: &str) -> Result<Vec<Letter>, String> {
    src.split(',').map(str::trim).filter(|t| !t.is_empty()).map(|t| letter(model, t)).collect()
}

fn letter(model: &GjsModel, t: &str) -> Result<Letter, String> {
    if t == "X" {
        return Ok(Letter::X);
    }
    Ok(Letter::Kac { coeffs: kac_letter(model, t)? })
}

fn kac_letter(model: &GjsModel, t: &str) -> Result<Vector, String> {
    let k = model.algebra();
    if let Some(spec) = t.strip_prefix('@') {
        let idx: Vec<usize> = spec
            .split(':')
            .map(|x| x.parse::<usize>().map_err(|_| format!("bad matrix unit {t:?}")))
            .collect::<Result<_, _>>()?;
        let dims = model.irreps().dims();
        return match idx.as_slice() {
            &[g, p, q] if (1..=dims.len()).contains(&g) && (1..=dims[g - 1]).contains(&p) && (1..=dims[g - 1]).contains(&q) => {
                Ok(model.unit_letter(g - 1, p - 1, q - 1))
            }
            _ => Err(format!("matrix unit {t:?} out of range (irrep dimensions {dims:?})")),
        };
    }
    k.basis_index(t)
        .map(|i| k.basis_vector(i))
        .ok_or_else(|| format!("unknown letter {t:?}; basis is {}", k.basis().join(", ")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(number("3/4").unwrap(), AlgebraicReal::rational(3, 4));
        assert_eq!(number("0.25").unwrap(), AlgebraicReal::rational(1, 4));
        assert_eq!(number("√6").unwrap(), AlgebraicReal::sqrt(6));
        assert_eq!(number("1/sqrt(2)").unwrap(), AlgebraicReal::sqrt(2).inv().unwrap());
        assert_eq!(number("2*sqrt(3) - 1").unwrap(), AlgebraicReal::from_integer(2) * AlgebraicReal::sqrt(3) - AlgebraicReal::one());
        assert_eq!(number("-(1+2)").unwrap(), AlgebraicReal::from_integer(-3));
        assert!(number("1/0").is_err());
        assert!(number("sqrt(2.5)").is_err());
        assert!(number("abc").is_err());
        assert!(number("2)").is_err());
    }

    #[test]
    fn partitions() {
        let want = NCPartition::from_classes(vec![vec![1, 3], vec![2]]).unwrap();
        assert_eq!(partition("{{1,3},{2}}").unwrap(), want);
        assert_eq!(partition("1,3|2").unwrap(), want);
        assert_eq!(partition("{ {1, 3}, {2} }").unwrap(), want);
        assert!(partition("1,3|2,4").is_err());
    }

    #[test]
    fn letters() {
        let model = GjsModel::builtin("dual-s3").unwrap();
        let w = word(&model, "X, d_e, @3:1:2").unwrap();
        assert_eq!(w[0], Letter::X);
        assert!(matches!(&w[2], Letter::Kac { coeffs } if *coeffs == model.unit_letter(2, 0, 1)));
        assert!(word(&model, "@3:3:1").is_err());
        assert!(word(&model, "nope").is_err());
    }
}
