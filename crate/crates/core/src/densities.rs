//! Closed-form Chebotarev densities, as exact rationals in `p`, and the
//! report comparing one of them with an empirical prime count.

use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::rational::{ratio, render, to_f64, Rational};

/// One prime set: its exact limiting density against `count / π(x)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityReport {
    pub set: String,
    pub theoretical: Rational,
    pub count: u64,
    /// `π(x)`, the number of primes below `x`.
    pub total: u64,
    pub x: u64,
}

impl DensityReport {
    pub fn new(set: impl Into<String>, theoretical: Rational, count: u64, total: u64, x: u64) -> Self {
        DensityReport {
            set: set.into(),
            theoretical,
            count,
            total,
            x,
        }
    }

    pub fn empirical(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count as f64 / self.total as f64
        }
    }

    /// `count/total` without reduction, so both integers survive.
    pub fn empirical_fraction(&self) -> String {
        format!("{}/{}", self.count, self.total)
    }

    pub fn deviation(&self) -> f64 {
        (self.empirical() - to_f64(&self.theoretical)).abs()
    }

    /// Binomial standard error of the empirical proportion if the true
    /// density were the theoretical one.
    pub fn standard_error(&self) -> f64 {
        let q = to_f64(&self.theoretical);
        if self.total == 0 {
            return f64::INFINITY;
        }
        (q * (1.0 - q) / self.total as f64).sqrt()
    }

    /// Signed distance from the theoretical value in standard errors.
    pub fn z_score(&self) -> f64 {
        (self.empirical() - to_f64(&self.theoretical)) / self.standard_error()
    }

    pub fn within(&self, tolerance: f64) -> bool {
        self.deviation() <= tolerance
    }
}

impl Serialize for DensityReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("DensityReport", 8)?;
        st.serialize_field("set", &self.set)?;
        st.serialize_field("x", &self.x)?;
        st.serialize_field("theoretical", &render(&self.theoretical))?;
        st.serialize_field("theoretical_decimal", &to_f64(&self.theoretical))?;
        st.serialize_field("empirical", &self.empirical_fraction())?;
        st.serialize_field("empirical_decimal", &self.empirical())?;
        st.serialize_field("deviation", &self.deviation())?;
        st.serialize_field("standard_error", &self.standard_error())?;
        st.end()
    }
}

fn p128(p: u64) -> i128 {
    p as i128
}

/// `|GL_2(F_p)| = p (p-1)^2 (p+1)`.
pub fn gl2_order(p: u64) -> u128 {
    let p = p as u128;
    p * (p - 1) * (p - 1) * (p + 1)
}

/// Proportion of `GL_2(F_p)` with trace 0.
pub fn trace_zero(p: u64) -> Rational {
    let p = p128(p);
    ratio(p, p * p - 1)
}

/// Proportion with trace equal to a fixed nonzero residue.
pub fn trace_nonzero(p: u64) -> Rational {
    let p = p128(p);
    ratio(p * p - p - 1, (p - 1) * (p - 1) * (p + 1))
}

/// Proportion with `trace = ±(det + 1)`, for either fixed sign.
pub fn trace_det_linked(p: u64) -> Rational {
    let p = p128(p);
    ratio(p * p - 2, (p - 1) * (p - 1) * (p + 1))
}

/// Cubic-denominator variant of the Set 1 density, `2(p-3)/(p-1)^3`. Kept only so reports can show the count rejects it.
pub fn set1_stated(p: u64) -> Rational {
    let p = p128(p);
    ratio(2 * (p - 3), (p - 1).pow(3))
}

/// Set 1 density as the census actually gives it, `2(p-3)/(p-1)^2`.
pub fn set1(p: u64) -> Rational {
    let p = p128(p);
    ratio(2 * (p - 3), (p - 1).pow(2))
}

/// Set 2: `l ≡ -1`, `a_l ≡ 0`.
pub fn set2(p: u64) -> Rational {
    let p = p128(p);
    ratio(1, (p - 1).pow(2))
}

/// Set 3: `l ≡ 1`.
pub fn set3(p: u64) -> Rational {
    ratio(1, p128(p) - 1)
}

/// Set 1 primes with vanishing local factor: `(p-3)/(p-1)^2`.
pub fn set1_delta_zero(p: u64) -> Rational {
    let p = p128(p);
    ratio(p - 3, (p - 1).pow(2))
}

/// Set 3 primes with vanishing local factor: `(p^2-p-1)/((p-1)(p^2-1))`.
pub fn set3_delta_zero(p: u64) -> Rational {
    let p = p128(p);
    ratio(p * p - p - 1, (p - 1) * (p * p - 1))
}

/// Set 3 primes where 1 is a double root: `p/((p-1)(p^2-1))`.
pub fn set3_double_root(p: u64) -> Rational {
    let p = p128(p);
    ratio(p, (p - 1) * (p * p - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn values_at_small_primes() {
        assert_eq!(trace_zero(5), ratio(5, 24));
        assert_eq!(trace_zero(3), ratio(3, 8));
        assert_eq!(trace_nonzero(5), ratio(19, 96));
        assert_eq!(trace_det_linked(5), ratio(23, 96));
        assert_eq!(set1(7), ratio(2, 9));
        assert_eq!(set1_stated(7), ratio(1, 27));
        assert_eq!(set2(7), ratio(1, 36));
        assert_eq!(set3(7), ratio(1, 6));
        assert_eq!(set1_delta_zero(7), ratio(1, 9));
        assert_eq!(set3_delta_zero(7), ratio(41, 288));
        assert_eq!(set3_double_root(7), ratio(7, 288));
        assert_eq!(set3_double_root(11), ratio(11, 1200));
        assert_eq!(set3_double_root(3), ratio(3, 16));
        assert_eq!(set1_delta_zero(3), int(0));
        assert_eq!(gl2_order(7), 2016);
    }

    #[test]
    fn identities() {
        for p in crate::primes::primes_below(102).into_iter().skip(1) {
            assert_eq!(trace_zero(p) + trace_nonzero(p) * int(p - 1), int(1));
            assert_eq!(set3(p), set3_delta_zero(p) + set3_double_root(p));
            if p > 3 {
                assert_eq!(set1_delta_zero(p) / set1(p), ratio(1, 2));
            }
        }
    }
}
