//! Exact densities. Backed by `num-rational`, which keeps values reduced
//! with a positive denominator.

use num_bigint::BigInt;
use num_traits::ToPrimitive;

pub type Rational = num_rational::BigRational;

pub fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Rational {
    Rational::new(num.into(), den.into())
}

pub fn int(n: impl Into<BigInt>) -> Rational {
    Rational::from_integer(n.into())
}

/// `"num/den"`, or just `"num"` for integers; lossless.
pub fn render(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(n), Some(d)) => n / d,
        _ => f64::NAN,
    }
}

/// Parses `"a/b"` or `"a"`.
pub fn parse(s: &str) -> Option<Rational> {
    match s.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = d.trim().parse().ok()?;
            if d == BigInt::from(0) {
                return None;
            }
            Some(Rational::new(n.trim().parse().ok()?, d))
        }
        None => Some(int(s.trim().parse::<BigInt>().ok()?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_and_parse() {
        assert_eq!(render(&ratio(10, 48)), "5/24");
        assert_eq!(render(&ratio(-3, -9)), "1/3");
        assert_eq!(render(&ratio(4, 2)), "2");
        assert_eq!(parse("5/24"), Some(ratio(5, 24)));
        assert_eq!(parse("7"), Some(int(7)));
        assert_eq!(parse("1/0"), None);
        assert!((to_f64(&ratio(11, 1200)) - 0.009166).abs() < 1e-5);
    }
}
