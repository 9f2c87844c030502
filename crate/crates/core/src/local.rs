//! Local factors `δ(·, l) = s_l · d_l` and the λ-transfer identity
//!
//! ```text
//! λ(g) + Σ_{l | M} δ(g, l) = λ(f) + Σ_{l | M} δ(f, l)
//! ```
//!
//! `s_l` is the largest power of `p` dividing `(l^{p-1} - 1)/p`; it also
//! counts the primes above `l` in the cyclotomic `Z_p`-extension, and is the
//! same for both forms. `d_l` is the multiplicity of 1 as a root mod `p` of
//! the local Frobenius polynomial: `l - a_l X + X^2` at good primes and
//! `l - a_l X` at primes dividing the level.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::ap::{get_ap, ApCache};
use crate::carayol::AnalysisContext;
use crate::error::{Error, Result};
use crate::ffmat::Modulus;
use crate::primes::{is_prime, prime_divisors};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorRole {
    /// `l` divides the level; degree-1 polynomial.
    OldPrime,
    /// `l` does not divide the level of `g`; degree-2 polynomial.
    NewPrime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LocalFactor {
    pub ell: u64,
    pub s: u64,
    pub d: u8,
    pub delta: u64,
    pub role: FactorRole,
}

impl LocalFactor {
    pub fn new(ell: u64, s: u64, d: u8, role: FactorRole) -> Result<Self> {
        let delta = s
            .checked_mul(d as u64)
            .ok_or(Error::Overflow("delta = s * d"))?;
        Ok(LocalFactor {
            ell,
            s,
            d,
            delta,
            role,
        })
    }
}

/// `p^{v_p((l^{p-1} - 1)/p)}`, with exact big-integer arithmetic.
pub fn s_factor(p: u64, ell: u64) -> Result<u64> {
    Modulus::new(p)?;
    if ell == p {
        return Err(Error::EllEqualsP(p));
    }
    if !is_prime(ell) {
        return Err(Error::NotPrime(ell));
    }
    let big_p = BigUint::from(p);
    let mut q = (BigUint::from(ell).pow((p - 1) as u32) - BigUint::one()) / &big_p;
    let mut s = 1u64;
    while !q.is_zero() && (&q % &big_p).is_zero() {
        q /= &big_p;
        s = s.checked_mul(p).ok_or(Error::Overflow("s_l"))?;
    }
    Ok(s)
}

/// Multiplicity of `X = 1` in `l - a X + X^2 (mod p)`.
pub fn d_factor_good(p: u64, ell: u64, ap: i64) -> u8 {
    let l = (ell % p) as i64;
    let a = ap.rem_euclid(p as i64);
    if (1 + l).rem_euclid(p as i64) != a {
        0
    } else if l == 1 {
        2
    } else {
        1
    }
}

/// Multiplicity of `X = 1` in `l - a X (mod p)`: 1 iff `a ≡ l`.
pub fn d_factor_bad(p: u64, ell: u64, ap: i64) -> u8 {
    u8::from(ap.rem_euclid(p as i64) == (ell % p) as i64)
}

/// Local factor of `g` at `l`, with the polynomial chosen by whether `l`
/// divides the level of `g`.
pub fn local_factor(ctx: &AnalysisContext, ell: u64, ap: i64) -> Result<LocalFactor> {
    let p = ctx.p();
    let s = s_factor(p, ell)?;
    if ctx.form.divides_level(ell) {
        LocalFactor::new(ell, s, d_factor_bad(p, ell, ap), FactorRole::OldPrime)
    } else {
        LocalFactor::new(ell, s, d_factor_good(p, ell, ap), FactorRole::NewPrime)
    }
}

/// The two values `δ(f, l)` can take at a prime dividing `M` but not `N`,
/// where `f` has a degree-1 polynomial with 1 at most a simple root.
pub fn f_side_bounds(p: u64, ell: u64) -> Result<[u64; 2]> {
    Ok([0, s_factor(p, ell)?])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BadPrimeReport {
    pub hyp_bad: bool,
    pub hyp_bad_prime: bool,
    pub factors: Vec<LocalFactor>,
}

/// Evaluates `d_l(g)` at every `l | N`. `Hyp bad` holds when all vanish,
/// `Hyp bad'` when all equal 1.
pub fn check_bad_hypotheses(ctx: &AnalysisContext, cache: &mut ApCache) -> Result<BadPrimeReport> {
    let factors = prime_divisors(ctx.level())
        .into_iter()
        .map(|l| {
            let ap = get_ap(&ctx.form, l, cache)?;
            local_factor(ctx, l, ap)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BadPrimeReport {
        hyp_bad: factors.iter().all(|f| f.d == 0),
        hyp_bad_prime: factors.iter().all(|f| f.d == 1),
        factors,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignedTag {
    Plus,
    Minus,
}

/// User-supplied Iwasawa invariants of a form. The ordinary/non-ordinary
/// distinction only shows up as an optional `±` tag.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LambdaProfile {
    pub lambda: u64,
    pub mu: u64,
    pub label: String,
    pub signed: Option<SignedTag>,
}

impl LambdaProfile {
    pub fn new(lambda: u64, mu: u64, label: impl Into<String>) -> Self {
        LambdaProfile {
            lambda,
            mu,
            label: label.into(),
            signed: None,
        }
    }

    pub fn require_mu_zero(&self) -> Result<()> {
        if self.mu == 0 {
            Ok(())
        } else {
            Err(Error::MuNonZero(self.mu))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Transfer {
    pub lambda_f: u64,
    pub sum_delta_g: u64,
    pub sum_delta_f: u64,
    /// `λ(f) > λ(g)`, which holds iff `Σδ(g) > Σδ(f)`.
    pub growth: bool,
}

fn delta_sum(factors: &[LocalFactor]) -> Result<u64> {
    factors.iter().try_fold(0u64, |acc, f| {
        acc.checked_add(f.delta).ok_or(Error::Overflow("local factor sum"))
    })
}

/// `λ(f) = λ(g) + Σ δ(g, l) - Σ δ(f, l)` over a common prime set.
pub fn lambda_transfer(g: &LambdaProfile, delta_g: &[LocalFactor], delta_f: &[LocalFactor]) -> Result<Transfer> {
    g.require_mu_zero()?;
    let mut primes_g: Vec<u64> = delta_g.iter().map(|f| f.ell).collect();
    let mut primes_f: Vec<u64> = delta_f.iter().map(|f| f.ell).collect();
    primes_g.sort_unstable();
    primes_f.sort_unstable();
    if primes_g != primes_f {
        return Err(Error::FactorPrimeMismatch);
    }
    let sum_g = delta_sum(delta_g)?;
    let sum_f = delta_sum(delta_f)?;
    let lambda_f = g.lambda as i128 + sum_g as i128 - sum_f as i128;
    if lambda_f < 0 {
        return Err(Error::NegativeLambda(lambda_f.to_i64().unwrap_or(i64::MIN)));
    }
    Ok(Transfer {
        lambda_f: lambda_f as u64,
        sum_delta_g: sum_g,
        sum_delta_f: sum_f,
        growth: sum_g > sum_f,
    })
}
