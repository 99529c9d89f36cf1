//! Exact rational helpers: parsing, `p/q` formatting, and best rational
//! approximation by continued fractions.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational, always kept in lowest terms with a
/// positive denominator.
pub type Rational = BigRational;

/// Largest reduced denominator accepted for an exact decimal when no
/// rationalization cap is configured.
pub const DEFAULT_EXACT_DEN_LIMIT: u64 = 1_000_000_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RationalError {
    #[error("malformed number {0:?}")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
    #[error("decimal {text:?} needs denominator {den}, above the limit {limit}; pass a rationalization cap")]
    DenominatorTooLarge { text: String, den: String, limit: u64 },
    #[error("value {0} is not finite")]
    NotFinite(String),
}

/// How decimal strings are turned into rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RationalizeOptions {
    /// When set, decimals are replaced by the nearest rational whose
    /// denominator does not exceed this cap.
    pub max_den: Option<u64>,
    /// Without a cap, exact decimals whose reduced denominator exceeds this
    /// limit are rejected.
    pub exact_den_limit: u64,
}

impl Default for RationalizeOptions {
    fn default() -> Self {
        Self {
            max_den: None,
            exact_den_limit: DEFAULT_EXACT_DEN_LIMIT,
        }
    }
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Formats as `p/q` in lowest terms, including integers (`1/1`, `0/1`).
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses either `p/q` (or a bare integer) or a plain decimal such as
/// `-0.125`.
pub fn parse_rational(text: &str, opts: &RationalizeOptions) -> Result<Rational, RationalError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(RationalError::Malformed(text.to_string()));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p
            .trim()
            .parse()
            .map_err(|_| RationalError::Malformed(text.to_string()))?;
        let q: BigInt = q
            .trim()
            .parse()
            .map_err(|_| RationalError::Malformed(text.to_string()))?;
        if q.is_zero() {
            return Err(RationalError::ZeroDenominator(text.to_string()));
        }
        return Ok(Rational::new(p, q));
    }
    let exact = parse_decimal(s).ok_or_else(|| RationalError::Malformed(text.to_string()))?;
    match opts.max_den {
        Some(cap) => Ok(best_approximation(&exact, cap)),
        None => {
            if exact.denom() > &BigInt::from(opts.exact_den_limit) {
                Err(RationalError::DenominatorTooLarge {
                    text: text.to_string(),
                    den: exact.denom().to_string(),
                    limit: opts.exact_den_limit,
                })
            } else {
                Ok(exact)
            }
        }
    }
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (neg, body) = match s.as_bytes()[0] {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.bytes().chain(frac.bytes()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{whole}{frac}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let r = Rational::new(numer, denom);
    Some(if neg { -r } else { r })
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// using convergents and semiconvergents of the continued fraction.
pub fn best_approximation(x: &Rational, max_den: u64) -> Rational {
    let max_den = BigInt::from(max_den.max(1));
    if x.denom() <= &max_den {
        return x.clone();
    }
    // convergents p/q, previous p0/q0
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let mut rem = x.clone();
    loop {
        let a = rem.floor().to_integer();
        let q2 = &q0 + &a * &q1;
        if q2 > max_den {
            // largest semiconvergent that still fits
            let k = (&max_den - &q0).div_floor(&q1);
            let semi = Rational::new(&p0 + &k * &p1, &q0 + &k * &q1);
            let conv = Rational::new(p1.clone(), q1.clone());
            let ds = (&semi - x).abs();
            let dc = (&conv - x).abs();
            return if ds < dc { semi } else { conv };
        }
        let p2 = &p0 + &a * &p1;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let frac = &rem - Rational::from_integer(a);
        if frac.is_zero() {
            return Rational::new(p1, q1);
        }
        rem = frac.recip();
    }
}

/// Exact rational value of a finite float.
pub fn from_f64(x: f64) -> Result<Rational, RationalError> {
    Rational::from_float(x).ok_or_else(|| RationalError::NotFinite(x.to_string()))
}

/// Nearest rational with denominator at most `max_den` to a finite float.
pub fn rationalize_f64(x: f64, max_den: u64) -> Result<Rational, RationalError> {
    Ok(best_approximation(&from_f64(x)?, max_den))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> RationalizeOptions {
        RationalizeOptions::default()
    }

    #[test]
    fn parses_fraction_and_reduces() {
        assert_eq!(parse_rational("1/3", &opts()).unwrap(), ratio(1, 3));
        assert_eq!(parse_rational("2/6", &opts()).unwrap(), ratio(1, 3));
        assert_eq!(parse_rational("-4/-8", &opts()).unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("7", &opts()).unwrap(), int(7));
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("0.125", &opts()).unwrap(), ratio(1, 8));
        assert_eq!(parse_rational("-.5", &opts()).unwrap(), ratio(-1, 2));
        assert_eq!(parse_rational("1.", &opts()).unwrap(), int(1));
        assert_eq!(parse_rational("0.1", &opts()).unwrap(), ratio(1, 10));
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "abc", "1/0", "1e-3", "--1", ".", "1/2/3"] {
            assert!(parse_rational(bad, &opts()).is_err(), "{bad}");
        }
    }

    #[test]
    fn long_decimal_needs_cap() {
        let s = "0.3333333333333333";
        assert!(matches!(
            parse_rational(s, &opts()),
            Err(RationalError::DenominatorTooLarge { .. })
        ));
        let capped = RationalizeOptions {
            max_den: Some(100),
            ..opts()
        };
        assert_eq!(parse_rational(s, &capped).unwrap(), ratio(1, 3));
    }

    #[test]
    fn best_approximation_known_values() {
        let pi = from_f64(std::f64::consts::PI).unwrap();
        assert_eq!(best_approximation(&pi, 10), ratio(22, 7));
        assert_eq!(best_approximation(&pi, 200), ratio(355, 113));
        // semiconvergent case: 0.1 + tiny, cap 3
        assert_eq!(best_approximation(&ratio(1, 3), 3), ratio(1, 3));
        assert_eq!(best_approximation(&ratio(5, 7), 2), ratio(1, 2));
        assert_eq!(best_approximation(&ratio(-5, 7), 2), ratio(-1, 2));
    }

    #[test]
    fn formats_integers_as_fractions() {
        assert_eq!(format_rational(&int(1)), "1/1");
        assert_eq!(format_rational(&int(0)), "0/1");
        assert_eq!(format_rational(&ratio(-2, 4)), "-1/2");
    }
}
