//! A small scalar expression language for coupling components.
//!
//! Functions are linear combinations of monomials `x^k` and `sin(x)`, e.g.
//! `"2*x - 0.5*x^3 + 0.25*sin(x)"`. The representation keeps polynomial
//! coefficients by power, so oddness (`f(-x) = -f(x)`) is a static syntactic
//! check: all even-power coefficients vanish (`sin` is odd).

use std::fmt;

use rand::Rng;

use crate::{Error, Result};

/// A scalar function `p(x) + c * sin(x)` with polynomial `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarFunction {
    /// `coeffs[k]` multiplies `x^k`.
    coeffs: Vec<f64>,
    sin_coeff: f64,
}

impl ScalarFunction {
    pub fn zero() -> Self {
        ScalarFunction { coeffs: Vec::new(), sin_coeff: 0.0 }
    }

    /// The identity `x`.
    pub fn identity() -> Self {
        ScalarFunction::polynomial(vec![0.0, 1.0])
    }

    /// A polynomial from coefficients by ascending power.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let mut f = ScalarFunction { coeffs, sin_coeff: 0.0 };
        f.trim();
        f
    }

    /// `c * sin(x)`.
    pub fn sin(c: f64) -> Self {
        ScalarFunction { coeffs: Vec::new(), sin_coeff: c }
    }

    /// `c * x^k`.
    pub fn monomial(c: f64, k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = c;
        ScalarFunction::polynomial(coeffs)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc + self.sin_coeff * x.sin()
    }

    /// True iff the function is syntactically odd: no even-power coefficient.
    pub fn is_odd(&self) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(k, &c)| k % 2 == 1 || c == 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.sin_coeff == 0.0
    }

    /// Sum of two functions.
    pub fn add(&self, other: &ScalarFunction) -> ScalarFunction {
        let mut coeffs = vec![0.0; self.coeffs.len().max(other.coeffs.len())];
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c = self.coeffs.get(k).copied().unwrap_or(0.0)
                + other.coeffs.get(k).copied().unwrap_or(0.0);
        }
        let mut f = ScalarFunction { coeffs, sin_coeff: self.sin_coeff + other.sin_coeff };
        f.trim();
        f
    }

    /// A random odd cubic or quintic with coefficients from
    /// `{±1, ±2, ±3}` over fixed denominators, for oracle couplings.
    pub fn random_odd<R: Rng>(rng: &mut R) -> ScalarFunction {
        fn small(rng: &mut impl Rng) -> f64 {
            let mag = rng.random_range(1..=3) as f64;
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        }
        let mut coeffs = vec![0.0, small(rng), 0.0, small(rng) / 3.0];
        if rng.random_bool(0.5) {
            coeffs.push(0.0);
            coeffs.push(small(rng) / 10.0);
        }
        ScalarFunction::polynomial(coeffs)
    }

    /// Parses a linear combination of `x^k`, `x`, `sin(x)` and constants.
    pub fn parse(src: &str) -> Result<Self> {
        Parser { src: src.as_bytes(), pos: 0 }.parse_expr()
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0.0) {
            self.coeffs.pop();
        }
    }
}

impl fmt::Display for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut write_term = |f: &mut fmt::Formatter<'_>, c: f64, body: Option<String>| {
            if c == 0.0 {
                return Ok(());
            }
            let (sign, mag) = if c < 0.0 { ("-", -c) } else { ("+", c) };
            if first {
                first = false;
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            match body {
                None => write!(f, "{mag}"),
                Some(b) if mag == 1.0 => write!(f, "{b}"),
                Some(b) => write!(f, "{mag}*{b}"),
            }
        };
        for (k, &c) in self.coeffs.iter().enumerate() {
            let body = match k {
                0 => None,
                1 => Some("x".to_string()),
                _ => Some(format!("x^{k}")),
            };
            write_term(f, c, body)?;
        }
        write_term(f, self.sin_coeff, Some("sin(x)".to_string()))?;
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn parse_expr(&mut self) -> Result<ScalarFunction> {
        let mut total = ScalarFunction::zero();
        let mut sign = 1.0;
        self.skip_ws();
        if self.eat(b'-') {
            sign = -1.0;
        } else {
            self.eat(b'+');
        }
        loop {
            let term = self.parse_term(sign)?;
            total = total.add(&term);
            self.skip_ws();
            if self.pos >= self.src.len() {
                return Ok(total);
            }
            sign = if self.eat(b'+') {
                1.0
            } else if self.eat(b'-') {
                -1.0
            } else {
                return Err(self.error("expected '+' or '-'"));
            };
        }
    }

    fn parse_term(&mut self, sign: f64) -> Result<ScalarFunction> {
        self.skip_ws();
        let mut coeff = sign;
        let mut have_coeff = false;
        if let Some(n) = self.try_number()? {
            coeff *= n;
            have_coeff = true;
            self.skip_ws();
            if !self.eat(b'*') {
                return Ok(ScalarFunction::monomial(coeff, 0));
            }
            self.skip_ws();
        }
        if self.eat_keyword(b"sin") {
            self.skip_ws();
            self.expect(b'(')?;
            self.skip_ws();
            self.expect(b'x')?;
            self.skip_ws();
            self.expect(b')')?;
            return Ok(ScalarFunction::sin(coeff));
        }
        if self.eat(b'x') {
            let k = if self.eat(b'^') {
                self.parse_uint()?
            } else {
                1
            };
            return Ok(ScalarFunction::monomial(coeff, k));
        }
        if have_coeff {
            Err(self.error("expected 'x' or 'sin(x)' after '*'"))
        } else {
            Err(self.error("expected a number, 'x' or 'sin(x)'"))
        }
    }

    fn try_number(&mut self) -> Result<Option<f64>> {
        let start = self.pos;
        let mut end = self.pos;
        let bytes = self.src;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end == start {
            return Ok(None);
        }
        // Exponent suffix like 1e-3.
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut e = end + 1;
            if e < bytes.len() && (bytes[e] == b'+' || bytes[e] == b'-') {
                e += 1;
            }
            let digits_start = e;
            while e < bytes.len() && bytes[e].is_ascii_digit() {
                e += 1;
            }
            if e > digits_start {
                end = e;
            }
        }
        let text = std::str::from_utf8(&bytes[start..end]).expect("ascii");
        let value: f64 = text
            .parse()
            .map_err(|_| Error::Parse(format!("bad number {text:?}")))?;
        self.pos = end;
        Ok(Some(value))
    }

    fn parse_uint(&mut self) -> Result<usize> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected an exponent"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii")
            .parse()
            .map_err(|_| self.error("exponent too large"))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.pos < self.src.len() && self.src[self.pos] == b {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, kw: &[u8]) -> bool {
        if self.src[self.pos..].starts_with(kw) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, b: u8) -> Result<()> {
        if self.eat(b) {
            Ok(())
        } else {
            Err(self.error(&format!("expected {:?}", b as char)))
        }
    }

    fn error(&self, msg: &str) -> Error {
        Error::Parse(format!(
            "{msg} at byte {} of {:?}",
            self.pos,
            String::from_utf8_lossy(self.src)
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_basic_forms() {
        let f = ScalarFunction::parse("x").unwrap();
        assert_eq!(f.eval(2.0), 2.0);
        let f = ScalarFunction::parse("x^3").unwrap();
        assert_eq!(f.eval(2.0), 8.0);
        let f = ScalarFunction::parse("2*x - 0.5*x^3 + 0.25*sin(x)").unwrap();
        let x = 1.3;
        assert!((f.eval(x) - (2.0 * x - 0.5 * x * x * x + 0.25 * x.sin())).abs() < 1e-15);
        let f = ScalarFunction::parse("-x + 1e-3*x^5").unwrap();
        assert!((f.eval(2.0) - (-2.0 + 1e-3 * 32.0)).abs() < 1e-15);
    }

    #[test]
    fn parses_constants_and_even_powers() {
        let f = ScalarFunction::parse("x^2 + 1").unwrap();
        assert_eq!(f.eval(3.0), 10.0);
        assert!(!f.is_odd());
    }

    #[test]
    fn oddness_is_syntactic() {
        assert!(ScalarFunction::parse("x").unwrap().is_odd());
        assert!(ScalarFunction::parse("x^3 - 2*x^5").unwrap().is_odd());
        assert!(ScalarFunction::parse("sin(x)").unwrap().is_odd());
        assert!(!ScalarFunction::parse("x^2").unwrap().is_odd());
        assert!(!ScalarFunction::parse("1").unwrap().is_odd());
        assert!(ScalarFunction::parse("0").unwrap().is_odd());
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(ScalarFunction::parse("").is_err());
        assert!(ScalarFunction::parse("x +").is_err());
        assert!(ScalarFunction::parse("sin(y)").is_err());
        assert!(ScalarFunction::parse("2 ** x").is_err());
        assert!(ScalarFunction::parse("x^").is_err());
    }

    #[test]
    fn display_round_trips() {
        for src in ["x", "x^3", "2*x - 0.5*x^3 + 0.25*sin(x)", "x^2 + 1", "0", "-x"] {
            let f = ScalarFunction::parse(src).unwrap();
            let g = ScalarFunction::parse(&f.to_string()).unwrap();
            assert_eq!(f, g, "{src} -> {f} failed to round-trip");
        }
    }

    #[test]
    fn random_odd_functions_are_odd() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let f = ScalarFunction::random_odd(&mut rng);
            assert!(f.is_odd());
            let x = 0.7;
            assert!((f.eval(-x) + f.eval(x)).abs() < 1e-12);
        }
    }
}
