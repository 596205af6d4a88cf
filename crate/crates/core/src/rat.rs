//! Exact rational scalars and the `p/q` text form used by the CLI and
//! the JSON dumps.

use num::bigint::BigInt;
use num::rational::BigRational;

pub type Rat = BigRational;

pub fn rat_i(v: i64) -> Rat {
    BigRational::from_integer(BigInt::from(v))
}

pub fn rat_frac(p: i64, q: i64) -> Rat {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Renders a rational as `p` or `p/q` (always in lowest terms, sign on
/// the numerator).
pub fn rat_str(x: &Rat) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `p` or `p/q` with an optional leading sign. Returns `None` on
/// malformed input or a zero denominator.
pub fn rat_parse(s: &str) -> Option<Rat> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), Some(b.trim())),
        None => (s, None),
    };
    let p: BigInt = num.parse().ok()?;
    let q: BigInt = match den {
        Some(d) => d.parse().ok()?,
        None => BigInt::from(1),
    };
    if q == BigInt::from(0) {
        return None;
    }
    Some(BigRational::new(p, q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        for s in ["0", "5", "-3", "1/2", "-7/3"] {
            let r = rat_parse(s).unwrap();
            assert_eq!(rat_str(&r), s);
        }
    }

    #[test]
    fn normalizes() {
        assert_eq!(rat_str(&rat_parse("2/4").unwrap()), "1/2");
        assert_eq!(rat_str(&rat_parse("4/-2").unwrap()), "-2");
        assert_eq!(rat_parse("1/0"), None);
        assert_eq!(rat_parse("a"), None);
        assert_eq!(rat_parse("1/2/3"), None);
    }
}
