//! Prime sets that certify λ-stability (`R_1`, `R_2`) or λ-growth (`R`),
//! and the raised levels built from them.
//!
//! - `R_1`: Set 1 primes with `a_l ≡ -(l + 1)`, so `δ(g, l) = 0`;
//! - `R_2`: Set 3 primes with `a_l ≢ 2`, so `δ(g, l) = 0`;
//! - `R`: Set 3 primes with `a_l ≡ 2`, where 1 is a double root.
//!
//! A level built from `R_1` (exponent ≤ 1) and `R_2` (exponent ≤ 2) carries
//! some `f` with `λ(f) = λ(g)`, given `Hyp bad` and `Hyp min`. A level built
//! from `R` (exponent ≤ 2) has `λ(f) > λ(g)` for every `f`, given `Hyp bad'`.

use num_bigint::BigUint;
use serde::Serialize;

use crate::ap::{bulk_ap, ApCache};
use crate::carayol::{classify_all, AnalysisContext, LevelCandidate, LevelStream, PrimeLabel, PrimeRecord};
use crate::densities::{self, DensityReport};
use crate::error::{Error, Result};
use crate::local::{check_bad_hypotheses, BadPrimeReport, LambdaProfile};
use crate::rational::{ratio, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrimeSet {
    pub name: &'static str,
    pub primes: Vec<u64>,
    pub report: DensityReport,
}

fn select(
    ctx: &AnalysisContext,
    records: &[PrimeRecord],
    name: &'static str,
    theoretical: Rational,
    keep: impl Fn(&PrimeRecord) -> bool,
) -> PrimeSet {
    let primes: Vec<u64> = records.iter().filter(|r| keep(r)).map(|r| r.ell).collect();
    let report = DensityReport::new(name, theoretical, primes.len() as u64, records.len() as u64, ctx.x);
    PrimeSet {
        name,
        primes,
        report,
    }
}

/// Set 1 primes on the `a_l ≡ -(l + 1)` branch, where `δ(g, l) = 0`.
pub fn build_r1(ctx: &AnalysisContext, records: &[PrimeRecord]) -> PrimeSet {
    let p = ctx.p;
    select(ctx, records, "R1", densities::set1_delta_zero(ctx.p()), |r| {
        r.label == PrimeLabel::Set1 && p.elem(r.ap) == -(p.elem(r.ell as i64) + p.one())
    })
}

/// Set 3 primes with `a_l ≢ 2`.
pub fn build_r2(ctx: &AnalysisContext, records: &[PrimeRecord]) -> PrimeSet {
    let two = 2 % ctx.p();
    select(ctx, records, "R2", densities::set3_delta_zero(ctx.p()), |r| {
        r.label == PrimeLabel::Set3 && r.ap_mod_p != two
    })
}

/// Set 3 primes with `a_l ≡ 2`, contributing `d_l(g) = 2`.
pub fn build_r_growth(ctx: &AnalysisContext, records: &[PrimeRecord]) -> PrimeSet {
    let two = 2 % ctx.p();
    select(ctx, records, "R", densities::set3_double_root(ctx.p()), |r| {
        r.label == PrimeLabel::Set3 && r.ap_mod_p == two
    })
}

/// `𝔡(S_{1,δ=0}) / 𝔡(S_1)`; defined for `p > 3`, where it is 1/2.
pub fn r1_share_of_set1(p: u64) -> Option<Rational> {
    (p > 3).then(|| densities::set1_delta_zero(p) / densities::set1(p))
}

/// Density of all primes with `δ(g, l) = 0` that can divide a stable level.
pub fn stable_density(p: u64) -> Rational {
    densities::set1_delta_zero(p) + densities::set3_delta_zero(p)
}

/// `(2p^2 - 3p - 4)/((p-1)^2 (p+1))`.
pub fn stable_density_closed(p: u64) -> Rational {
    let q = p as i128;
    ratio(2 * q * q - 3 * q - 4, (q - 1) * (q - 1) * (q + 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Stable,
    Growth,
}

/// Every hypothesis a verdict depends on. `optimal` and `min` are taken on
/// the user's word; the rest are checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HypothesisFlags {
    pub optimal: bool,
    pub mu_zero: bool,
    pub min: bool,
    pub bad: bool,
    pub bad_prime: bool,
}

impl HypothesisFlags {
    pub fn from_checks(profile: &LambdaProfile, min_asserted: bool, bad: &BadPrimeReport) -> Self {
        HypothesisFlags {
            optimal: true,
            mu_zero: profile.mu == 0,
            min: min_asserted,
            bad: bad.hyp_bad,
            bad_prime: bad.hyp_bad_prime,
        }
    }

    fn require(&self, mode: Mode, bad: &BadPrimeReport) -> Result<()> {
        let failing = |hyp: &str, want: u8| {
            let primes: Vec<String> = bad
                .factors
                .iter()
                .filter(|f| f.d != want)
                .map(|f| format!("d_{} = {}", f.ell, f.d))
                .collect();
            Error::HypothesisViolation(format!("{hyp} fails ({})", primes.join(", ")))
        };
        if !self.mu_zero {
            return Err(Error::HypothesisViolation("Hyp mu fails (mu(g) != 0)".into()));
        }
        match mode {
            Mode::Stable if !self.bad => Err(failing("Hyp bad", 0)),
            Mode::Stable if !self.min => Err(Error::HypothesisViolation(
                "Hyp min not asserted (lambda(g) minimal in its family)".into(),
            )),
            Mode::Growth if !self.bad_prime => Err(failing("Hyp bad'", 1)),
            _ => Ok(()),
        }
    }
}

/// Levels `N · ∏_{R_1} l^{≤1} · ∏_{R_2} l^{≤2}`, excluding `N`.
pub fn stable_levels(
    ctx: &AnalysisContext,
    flags: &HypothesisFlags,
    bad: &BadPrimeReport,
    r1: &PrimeSet,
    r2: &PrimeSet,
    max_m: Option<BigUint>,
) -> Result<LevelStream> {
    flags.require(Mode::Stable, bad)?;
    let factors = r1
        .primes
        .iter()
        .map(|&l| (l, 1))
        .chain(r2.primes.iter().map(|&l| (l, 2)))
        .collect();
    Ok(LevelStream::new(ctx.level(), factors, max_m))
}

/// Levels `N · ∏_R l^{≤2}`, excluding `N`.
pub fn growth_levels(
    ctx: &AnalysisContext,
    flags: &HypothesisFlags,
    bad: &BadPrimeReport,
    r: &PrimeSet,
    max_m: Option<BigUint>,
) -> Result<LevelStream> {
    flags.require(Mode::Growth, bad)?;
    let factors = r.primes.iter().map(|&l| (l, 2)).collect();
    Ok(LevelStream::new(ctx.level(), factors, max_m))
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityVerdict {
    pub mode: Mode,
    pub form: String,
    pub p: u64,
    pub x: u64,
    pub lambda_g: u64,
    pub hypotheses: HypothesisFlags,
    pub bad_primes: BadPrimeReport,
    /// What each sample level certifies.
    pub claim: &'static str,
    pub primes: Vec<u64>,
    /// Density of the union of the certifying prime sets.
    pub density: DensityReport,
    /// The individual sets (`R1`, `R2` or just `R`).
    pub sets: Vec<PrimeSet>,
    pub sample_levels: Vec<LevelCandidate>,
}

#[derive(Clone, Debug)]
pub struct AnalyzeOptions {
    pub mode: Mode,
    pub profile: LambdaProfile,
    /// User assertion that `λ(g)` is minimal in its family. `None` means
    /// "assume it when `λ(g) = 0`".
    pub min_asserted: Option<bool>,
    pub max_m: Option<BigUint>,
    pub sample_limit: usize,
}

/// The full pipeline: fill coefficients below `x`, check the hypotheses for
/// the requested mode, build the certifying prime sets and sample levels.
pub fn analyze(ctx: &AnalysisContext, cache: &mut ApCache, opts: &AnalyzeOptions) -> Result<StabilityVerdict> {
    opts.profile.require_mu_zero()?;
    let bad = check_bad_hypotheses(ctx, cache)?;
    let min = opts.min_asserted.unwrap_or(opts.profile.lambda == 0);
    let flags = HypothesisFlags::from_checks(&opts.profile, min, &bad);
    flags.require(opts.mode, &bad)?;

    bulk_ap(&ctx.form, ctx.x, cache)?;
    let cls = classify_all(ctx, cache)?;
    let pi = cls.records.len() as u64;

    let (sets, stream, theoretical, claim) = match opts.mode {
        Mode::Stable => {
            let r1 = build_r1(ctx, &cls.records);
            let r2 = build_r2(ctx, &cls.records);
            let stream = stable_levels(ctx, &flags, &bad, &r1, &r2, opts.max_m.clone())?;
            (
                vec![r1, r2],
                stream,
                stable_density(ctx.p()),
                "some f of level M in the family has lambda(f) = lambda(g)",
            )
        }
        Mode::Growth => {
            let r = build_r_growth(ctx, &cls.records);
            let stream = growth_levels(ctx, &flags, &bad, &r, opts.max_m.clone())?;
            (
                vec![r],
                stream,
                densities::set3_double_root(ctx.p()),
                "every f of level M in the family has lambda(f) > lambda(g)",
            )
        }
    };
    let mut primes: Vec<u64> = sets.iter().flat_map(|s| s.primes.iter().copied()).collect();
    primes.sort_unstable();
    let name = if opts.mode == Mode::Stable { "R1+R2" } else { "R" };
    let density = DensityReport::new(name, theoretical, primes.len() as u64, pi, ctx.x);
    Ok(StabilityVerdict {
        mode: opts.mode,
        form: ctx.form.label.clone(),
        p: ctx.p(),
        x: ctx.x,
        lambda_g: opts.profile.lambda,
        hypotheses: flags,
        bad_primes: bad,
        claim,
        primes,
        density,
        sets,
        sample_levels: stream.take(opts.sample_limit).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ap::FormSpec;
    use crate::carayol::is_admissible;
    use crate::rational::int;

    fn setup(label: &str, p: u64, x: u64) -> (AnalysisContext, Vec<PrimeRecord>, ApCache) {
        let form = FormSpec::registry(label).unwrap();
        let ctx = AnalysisContext::new(p, form.clone(), x).unwrap();
        let mut cache = ApCache::new();
        bulk_ap(&form, x, &mut cache).unwrap();
        let cls = classify_all(&ctx, &cache).unwrap();
        (ctx, cls.records, cache)
    }

    fn opts(mode: Mode) -> AnalyzeOptions {
        AnalyzeOptions {
            mode,
            profile: LambdaProfile::new(0, 0, "g"),
            min_asserted: None,
            max_m: Some(BigUint::from(10_000u32)),
            sample_limit: 50,
        }
    }

    #[test]
    fn r_sets_small_window() {
        let (ctx, records, _) = setup("11a1", 7, 20);
        let r1 = build_r1(&ctx, &records);
        assert_eq!(r1.primes, vec![5]);
        assert_eq!(r1.report.theoretical, ratio(1, 9));
        assert!(build_r2(&ctx, &records).primes.is_empty());
        assert_eq!(build_r2(&ctx, &records).report.theoretical, ratio(41, 288));

        // a_29(11a1) = 0 ≢ 2 mod 7
        let (ctx, records, _) = setup("11a1", 7, 30);
        assert_eq!(build_r2(&ctx, &records).primes, vec![29]);
        assert!(build_r_growth(&ctx, &records).primes.is_empty());
    }

    #[test]
    fn theoretical_values() {
        assert_eq!(densities::set1_delta_zero(3), int(0));
        assert_eq!(densities::set3_double_root(11), ratio(11, 1200));
        assert_eq!(densities::set3_double_root(3), ratio(3, 16));
        assert_eq!(r1_share_of_set1(7), Some(ratio(1, 2)));
        assert_eq!(r1_share_of_set1(3), None);
        for p in [3, 5, 7, 11, 13, 101] {
            assert_eq!(stable_density(p), stable_density_closed(p));
            assert_eq!(
                densities::set3(p) - densities::set3_delta_zero(p),
                densities::set3_double_root(p)
            );
        }
    }

    #[test]
    fn r1_splits_set1() {
        let (ctx, records, _) = setup("11a1", 7, 5000);
        let r1 = build_r1(&ctx, &records);
        let set1: Vec<u64> = records
            .iter()
            .filter(|r| r.label == PrimeLabel::Set1)
            .map(|r| r.ell)
            .collect();
        let rest: Vec<u64> = set1.iter().copied().filter(|l| !r1.primes.contains(l)).collect();
        assert_eq!(r1.primes.len() + rest.len(), set1.len());
        // the other branch is a_l ≡ +(l + 1)
        for r in records.iter().filter(|r| rest.contains(&r.ell)) {
            assert_eq!(r.ap_mod_p, (r.ell + 1) % 7);
        }
    }

    #[test]
    fn stable_levels_for_11a1() {
        let (ctx, records, mut cache) = setup("11a1", 7, 30);
        let bad = check_bad_hypotheses(&ctx, &mut cache).unwrap();
        let flags = HypothesisFlags::from_checks(&LambdaProfile::new(0, 0, "g"), true, &bad);
        let r1 = build_r1(&ctx, &records);
        let r2 = build_r2(&ctx, &records);
        let levels: Vec<u64> = stable_levels(&ctx, &flags, &bad, &r1, &r2, Some(10_000u32.into()))
            .unwrap()
            .map(|c| u64::try_from(c.m).unwrap())
            .collect();
        assert_eq!(levels, vec![55, 319, 1595, 9251]);
        let none: Vec<_> = stable_levels(&ctx, &flags, &bad, &r1, &r2, Some(11u32.into()))
            .unwrap()
            .collect();
        assert!(none.is_empty());
    }

    #[test]
    fn mode_hypotheses() {
        let (ctx, _, mut cache) = setup("43a1", 11, 10);
        assert!(matches!(
            analyze(&ctx, &mut cache, &opts(Mode::Stable)),
            Err(Error::HypothesisViolation(msg)) if msg.contains("d_43 = 1")
        ));
        let (ctx, _, mut cache) = setup("11a1", 7, 10);
        assert!(matches!(
            analyze(&ctx, &mut cache, &opts(Mode::Growth)),
            Err(Error::HypothesisViolation(msg)) if msg.contains("d_11 = 0")
        ));
        let mut o = opts(Mode::Stable);
        o.profile = LambdaProfile::new(0, 1, "g");
        assert!(matches!(analyze(&ctx, &mut cache, &o), Err(Error::MuNonZero(1))));
        let mut o = opts(Mode::Stable);
        o.profile = LambdaProfile::new(2, 0, "g");
        assert!(matches!(
            analyze(&ctx, &mut cache, &o),
            Err(Error::HypothesisViolation(msg)) if msg.contains("Hyp min")
        ));
        o.min_asserted = Some(true);
        assert!(analyze(&ctx, &mut cache, &o).is_ok());
    }

    #[test]
    fn growth_for_43a1() {
        let (ctx, records, mut cache) = setup("43a1", 11, 20_000);
        let verdict = analyze(&ctx, &mut cache, &opts(Mode::Growth)).unwrap();
        assert!(verdict.hypotheses.bad_prime);
        assert_eq!(verdict.density.theoretical, ratio(11, 1200));
        assert!(!verdict.primes.is_empty());
        for &l in &verdict.primes {
            assert_eq!(l % 11, 1);
            assert_eq!(cache.get(l).unwrap().rem_euclid(11), 2);
        }
        // the smallest qualifying prime, found by a direct scan
        let first = records
            .iter()
            .find(|r| r.ell % 11 == 1 && r.ap.rem_euclid(11) == 2)
            .unwrap()
            .ell;
        assert_eq!(verdict.primes[0], first);
        if 43 * first <= 10_000 {
            assert_eq!(verdict.sample_levels[0].m, BigUint::from(43 * first));
        }
        for lvl in &verdict.sample_levels {
            assert!(is_admissible(43, &records, &lvl.m));
        }
    }
}
