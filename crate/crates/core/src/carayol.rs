//! Carayol's conditions on raised levels, made countable.
//!
//! Every prime `l < x` gets one label. Primes not dividing `Np` fall into
//! Sets 1, 1', 2, 2', 3 according to `l mod p` and `a_l mod p`; only Sets
//! 1, 2 and 3 can divide a raised level: Set 1 with exponent 1, Sets 2 and
//! 3 with exponent 1 or 2.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::ap::{ApCache, FormSpec};
use crate::densities::{self, DensityReport};
use crate::error::{Error, Result};
use crate::ffmat::Modulus;
use crate::primes::primes_below;

/// The fixed prime `p`, the optimal-level form `g`, and the prime bound `x`.
#[derive(Clone, Debug)]
pub struct AnalysisContext {
    pub p: Modulus,
    pub form: FormSpec,
    pub x: u64,
}

impl AnalysisContext {
    pub fn new(p: u64, form: FormSpec, x: u64) -> Result<Self> {
        let modulus = Modulus::new(p)?;
        if form.divides_level(p) {
            return Err(Error::PDividesLevel {
                p,
                level: form.level,
            });
        }
        Ok(AnalysisContext {
            p: modulus,
            form,
            x,
        })
    }

    pub fn p(&self) -> u64 {
        self.p.get()
    }

    pub fn level(&self) -> u64 {
        self.form.level
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum PrimeLabel {
    Set1,
    Set1Prime,
    Set2,
    Set2Prime,
    Set3,
    DividesN,
    IsP,
}

impl PrimeLabel {
    pub const ALL: [PrimeLabel; 7] = [
        PrimeLabel::Set1,
        PrimeLabel::Set1Prime,
        PrimeLabel::Set2,
        PrimeLabel::Set2Prime,
        PrimeLabel::Set3,
        PrimeLabel::DividesN,
        PrimeLabel::IsP,
    ];

    /// Largest `α(l)` Carayol's theorem allows for this label; 0 when the
    /// prime can never divide `M/N`.
    pub fn max_exponent(self) -> u32 {
        match self {
            PrimeLabel::Set1 => 1,
            PrimeLabel::Set2 | PrimeLabel::Set3 => 2,
            _ => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PrimeLabel::Set1 => "set1",
            PrimeLabel::Set1Prime => "set1_prime",
            PrimeLabel::Set2 => "set2",
            PrimeLabel::Set2Prime => "set2_prime",
            PrimeLabel::Set3 => "set3",
            PrimeLabel::DividesN => "divides_n",
            PrimeLabel::IsP => "is_p",
        }
    }
}

impl fmt::Display for PrimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct PrimeRecord {
    pub ell: u64,
    pub ap: i64,
    pub ell_mod_p: u64,
    pub ap_mod_p: u64,
    pub label: PrimeLabel,
}

/// Labels `l` by the five-way split, with the trace condition of case (1)
/// in its simplified form `a_l ≡ ±(1 + l) (mod p)`.
pub fn classify_prime(ctx: &AnalysisContext, ell: u64, ap: i64) -> PrimeRecord {
    let p = ctx.p;
    let l = p.elem(ell as i64);
    let a = p.elem(ap);
    let one = p.one();
    let label = if ell == ctx.p() {
        PrimeLabel::IsP
    } else if ctx.form.divides_level(ell) {
        PrimeLabel::DividesN
    } else if l == one {
        PrimeLabel::Set3
    } else if l == -one {
        if a.is_zero() {
            PrimeLabel::Set2
        } else {
            PrimeLabel::Set2Prime
        }
    } else if a == one + l || a == -(one + l) {
        PrimeLabel::Set1
    } else {
        PrimeLabel::Set1Prime
    };
    PrimeRecord {
        ell,
        ap,
        ell_mod_p: l.value(),
        ap_mod_p: a.value(),
        label,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationSummary {
    pub p: u64,
    pub x: u64,
    pub pi: u64,
    pub s1: u64,
    pub s1_prime: u64,
    pub s2: u64,
    pub s2_prime: u64,
    pub s3: u64,
    pub divides_n: u64,
    pub is_p: u64,
}

impl ClassificationSummary {
    pub fn from_records(p: u64, x: u64, records: &[PrimeRecord]) -> Self {
        let count = |label| records.iter().filter(|r| r.label == label).count() as u64;
        ClassificationSummary {
            p,
            x,
            pi: records.len() as u64,
            s1: count(PrimeLabel::Set1),
            s1_prime: count(PrimeLabel::Set1Prime),
            s2: count(PrimeLabel::Set2),
            s2_prime: count(PrimeLabel::Set2Prime),
            s3: count(PrimeLabel::Set3),
            divides_n: count(PrimeLabel::DividesN),
            is_p: count(PrimeLabel::IsP),
        }
    }

    pub fn partition_total(&self) -> u64 {
        self.s1 + self.s1_prime + self.s2 + self.s2_prime + self.s3 + self.divides_n + self.is_p
    }

    fn report(&self, set: &str, theoretical: crate::rational::Rational, count: u64) -> DensityReport {
        DensityReport::new(set, theoretical, count, self.pi, self.x)
    }

    /// `s_1(x)/π(x)` against `2(p-3)/(p-1)^2`.
    pub fn set1_report(&self) -> DensityReport {
        self.report("set1", densities::set1(self.p), self.s1)
    }

    /// The same count against the cubic variant `2(p-3)/(p-1)^3`.
    pub fn set1_stated_report(&self) -> DensityReport {
        self.report("set1_stated_cubic", densities::set1_stated(self.p), self.s1)
    }

    pub fn set2_report(&self) -> DensityReport {
        self.report("set2", densities::set2(self.p), self.s2)
    }

    pub fn set3_report(&self) -> DensityReport {
        self.report("set3", densities::set3(self.p), self.s3)
    }

    pub fn reports(&self) -> Vec<DensityReport> {
        vec![
            self.set1_report(),
            self.set1_stated_report(),
            self.set2_report(),
            self.set3_report(),
        ]
    }
}

impl Serialize for ClassificationSummary {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("ClassificationSummary", 12)?;
        st.serialize_field("p", &self.p)?;
        st.serialize_field("x", &self.x)?;
        st.serialize_field("pi", &self.pi)?;
        st.serialize_field("s1", &self.s1)?;
        st.serialize_field("s1_prime", &self.s1_prime)?;
        st.serialize_field("s2", &self.s2)?;
        st.serialize_field("s2_prime", &self.s2_prime)?;
        st.serialize_field("s3", &self.s3)?;
        st.serialize_field("divides_n", &self.divides_n)?;
        st.serialize_field("is_p", &self.is_p)?;
        st.serialize_field("level_count", &count_levels(self).to_string())?;
        st.serialize_field("densities", &self.reports())?;
        st.end()
    }
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub records: Vec<PrimeRecord>,
    pub summary: ClassificationSummary,
}

/// Labels every prime `l < x`. The cache must already hold each `a_l`.
pub fn classify_all(ctx: &AnalysisContext, cache: &ApCache) -> Result<Classification> {
    let records: Vec<PrimeRecord> = primes_below(ctx.x)
        .into_par_iter()
        .map(|l| {
            cache
                .get(l)
                .map(|a| classify_prime(ctx, l, a))
                .ok_or(Error::MissingCoefficient(l))
        })
        .collect::<Result<_>>()?;
    let summary = ClassificationSummary::from_records(ctx.p(), ctx.x, &records);
    Ok(Classification { records, summary })
}

/// Writes `ell,ap,ell_mod_p,ap_mod_p,label` rows.
pub fn write_records_csv<W: std::io::Write>(records: &[PrimeRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "ell,ap,ell_mod_p,ap_mod_p,label")?;
    for r in records {
        writeln!(out, "{},{},{},{},{}", r.ell, r.ap, r.ell_mod_p, r.ap_mod_p, r.label)?;
    }
    Ok(())
}

/// `2^{s_1} · 3^{s_2 + s_3} - 1`: raised levels, excluding `M = N`.
pub fn count_levels(summary: &ClassificationSummary) -> BigUint {
    let two = BigUint::from(2u32).pow(summary.s1 as u32);
    let three = BigUint::from(3u32).pow((summary.s2 + summary.s3) as u32);
    two * three - BigUint::one()
}

/// `M = N · ∏ l^{α(l)}` with its exponent vector (nonzero exponents only,
/// ascending by prime).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LevelCandidate {
    pub m: BigUint,
    pub exponents: Vec<(u64, u32)>,
}

impl Serialize for LevelCandidate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("LevelCandidate", 2)?;
        st.serialize_field("m", &self.m.to_string())?;
        st.serialize_field("exponents", &self.exponents)?;
        st.end()
    }
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct Node {
    value: BigUint,
    next: usize,
    exponents: Vec<(u64, u32)>,
}

/// Ascending stream of `N · ∏ l^{α(l)}` over `1 ≤ α(l) ≤ cap(l)` for some
/// nonempty subset of the given primes, optionally bounded above.
///
/// Each product is reached from exactly one parent (the product with its
/// largest prime removed), and a parent is popped before its children, so a
/// min-heap yields every value once and in order.
pub struct LevelStream {
    level: BigUint,
    factors: Vec<(u64, u32)>,
    bound: Option<BigUint>,
    heap: BinaryHeap<Reverse<Node>>,
}

impl LevelStream {
    pub fn new(level: u64, mut factors: Vec<(u64, u32)>, bound: Option<BigUint>) -> Self {
        factors.retain(|&(_, cap)| cap > 0);
        factors.sort_unstable();
        factors.dedup_by_key(|f| f.0);
        let mut stream = LevelStream {
            level: BigUint::from(level),
            factors,
            bound,
            heap: BinaryHeap::new(),
        };
        let root = Node {
            value: stream.level.clone(),
            next: 0,
            exponents: Vec::new(),
        };
        stream.push_children(&root);
        stream
    }

    fn exceeds(&self, v: &BigUint) -> bool {
        self.bound.as_ref().is_some_and(|b| v > b)
    }

    fn push_children(&mut self, node: &Node) {
        for j in node.next..self.factors.len() {
            let (ell, cap) = self.factors[j];
            let mut value = &node.value * ell;
            if self.exceeds(&value) {
                // primes are ascending, so every later prime overshoots too
                break;
            }
            for alpha in 1..=cap {
                if alpha > 1 {
                    value *= ell;
                    if self.exceeds(&value) {
                        break;
                    }
                }
                let mut exponents = node.exponents.clone();
                exponents.push((ell, alpha));
                self.heap.push(Reverse(Node {
                    value: value.clone(),
                    next: j + 1,
                    exponents,
                }));
            }
        }
    }
}

impl Iterator for LevelStream {
    type Item = LevelCandidate;

    fn next(&mut self) -> Option<LevelCandidate> {
        let Reverse(node) = self.heap.pop()?;
        self.push_children(&node);
        Some(LevelCandidate {
            m: node.value,
            exponents: node.exponents,
        })
    }
}

/// Raised levels `M ≤ max_m` (unbounded when `None`) from the Set 1, 2 and
/// 3 primes in `records`.
pub fn enumerate_levels(
    ctx: &AnalysisContext,
    records: &[PrimeRecord],
    max_m: Option<BigUint>,
) -> LevelStream {
    let factors = records
        .iter()
        .map(|r| (r.ell, r.label.max_exponent()))
        .collect();
    LevelStream::new(ctx.level(), factors, max_m)
}

/// Whether `m` is `N · ∏ l^{α(l)}` with every `α(l)` allowed by the label
/// of `l` in `records`, and `m ≠ N`.
pub fn is_admissible(level: u64, records: &[PrimeRecord], m: &BigUint) -> bool {
    let n = BigUint::from(level);
    let (mut rest, rem) = m.div_rem(&n);
    if !rem.is_zero() || rest.is_one() || rest.is_zero() {
        return false;
    }
    for r in records {
        let cap = r.label.max_exponent();
        let ell = BigUint::from(r.ell);
        let mut alpha = 0;
        while (&rest % &ell).is_zero() {
            rest /= &ell;
            alpha += 1;
        }
        if alpha > cap {
            return false;
        }
    }
    rest.is_one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ap::bulk_ap;

    fn ctx7(x: u64) -> (AnalysisContext, Classification) {
        let form = FormSpec::registry("11a1").unwrap();
        let ctx = AnalysisContext::new(7, form.clone(), x).unwrap();
        let mut cache = ApCache::new();
        bulk_ap(&form, x, &mut cache).unwrap();
        let cls = classify_all(&ctx, &cache).unwrap();
        (ctx, cls)
    }

    #[test]
    fn context_rejects_p_dividing_level() {
        let form = FormSpec::registry("11a1").unwrap();
        assert!(matches!(
            AnalysisContext::new(11, form.clone(), 10),
            Err(Error::PDividesLevel { p: 11, level: 11 })
        ));
        assert!(matches!(AnalysisContext::new(9, form, 10), Err(Error::NotPrime(9))));
    }

    #[test]
    fn single_prime_labels() {
        let (ctx, _) = ctx7(3);
        // 1 + 5 = 6 ≡ -1, and a_5 = 1 ≡ -(1 + 5) mod 7
        assert_eq!(classify_prime(&ctx, 5, 1).label, PrimeLabel::Set1);
        assert_eq!(classify_prime(&ctx, 13, 4).label, PrimeLabel::Set2Prime);
        assert_eq!(classify_prime(&ctx, 13, 7).label, PrimeLabel::Set2);
        assert_eq!(classify_prime(&ctx, 29, 0).label, PrimeLabel::Set3);
        assert_eq!(classify_prime(&ctx, 7, -2).label, PrimeLabel::IsP);
        assert_eq!(classify_prime(&ctx, 11, 1).label, PrimeLabel::DividesN);
        let r = classify_prime(&ctx, 2, -2);
        assert_eq!((r.ap_mod_p, r.label), (5, PrimeLabel::Set1Prime));
    }

    #[test]
    fn window_below_twenty() {
        let (_, cls) = ctx7(20);
        let s = &cls.summary;
        assert_eq!((s.s1, s.s2, s.s3), (1, 0, 0));
        assert_eq!(s.pi, 8);
        assert_eq!(s.partition_total(), s.pi);
        assert_eq!((s.divides_n, s.is_p), (1, 1));
        let set1: Vec<u64> = cls
            .records
            .iter()
            .filter(|r| r.label == PrimeLabel::Set1)
            .map(|r| r.ell)
            .collect();
        assert_eq!(set1, vec![5]);
        assert_eq!(count_levels(s), BigUint::from(1u32));
    }

    #[test]
    fn tiny_windows() {
        let (_, cls) = ctx7(3);
        assert_eq!(cls.records.len(), 1);
        assert_eq!(cls.records[0].label, PrimeLabel::Set1Prime);
        let (_, cls) = ctx7(2);
        assert!(cls.records.is_empty());
        assert_eq!(count_levels(&cls.summary), BigUint::zero());
    }

    #[test]
    fn level_count_formula() {
        let s = ClassificationSummary {
            p: 7,
            x: 0,
            pi: 0,
            s1: 2,
            s1_prime: 0,
            s2: 1,
            s2_prime: 0,
            s3: 1,
            divides_n: 0,
            is_p: 0,
        };
        assert_eq!(count_levels(&s), BigUint::from(35u32));
    }

    #[test]
    fn missing_coefficient_propagates() {
        let form = FormSpec::registry("11a1").unwrap();
        let ctx = AnalysisContext::new(7, form, 20).unwrap();
        assert!(matches!(
            classify_all(&ctx, &ApCache::new()),
            Err(Error::MissingCoefficient(2))
        ));
    }

    #[test]
    fn levels_below_twenty() {
        let (ctx, cls) = ctx7(20);
        let levels: Vec<BigUint> = enumerate_levels(&ctx, &cls.records, Some(600u32.into()))
            .map(|c| c.m)
            .collect();
        assert_eq!(levels, vec![BigUint::from(55u32)]);
        let none: Vec<_> = enumerate_levels(&ctx, &cls.records, Some(11u32.into())).collect();
        assert!(none.is_empty());
    }

    #[test]
    fn set2_prime_takes_both_exponents() {
        let (ctx, _) = ctx7(3);
        let rec = classify_prime(&ctx, 13, 0);
        assert_eq!(rec.label, PrimeLabel::Set2);
        let levels: Vec<LevelCandidate> = enumerate_levels(&ctx, &[rec], None).collect();
        assert_eq!(
            levels,
            vec![
                LevelCandidate {
                    m: BigUint::from(143u32),
                    exponents: vec![(13, 1)]
                },
                LevelCandidate {
                    m: BigUint::from(11u32 * 169),
                    exponents: vec![(13, 2)]
                },
            ]
        );
    }

    #[test]
    fn stream_is_ascending_and_admissible() {
        let (ctx, cls) = ctx7(200);
        let bound = BigUint::from(10u64.pow(9));
        let mut prev = BigUint::zero();
        let mut n = 0;
        for cand in enumerate_levels(&ctx, &cls.records, Some(bound.clone())) {
            assert!(cand.m > prev);
            assert!(cand.m <= bound);
            assert!(is_admissible(11, &cls.records, &cand.m));
            assert!((&cand.m % 7u32) != BigUint::zero());
            prev = cand.m;
            n += 1;
        }
        assert!(n > 0);
        assert!(!is_admissible(11, &cls.records, &BigUint::from(11u32)));
        assert!(!is_admissible(11, &cls.records, &BigUint::from(11u32 * 25)));
        assert!(!is_admissible(11, &cls.records, &BigUint::from(11u32 * 3)));
    }

    #[test]
    fn records_csv() {
        let (_, cls) = ctx7(6);
        let mut buf = Vec::new();
        write_records_csv(&cls.records, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "ell,ap,ell_mod_p,ap_mod_p,label\n2,-2,2,5,set1_prime\n3,-1,3,6,set1_prime\n5,1,5,1,set1\n"
        );
    }
}
