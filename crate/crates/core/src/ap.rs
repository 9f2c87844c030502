//! Fourier coefficients `a_l` of the input form.
//!
//! For a rational elliptic curve the coefficient is `l + 1 - #E(F_l)`, with
//! the projective count taken on the reduced long Weierstrass model. At a
//! bad prime the singular point is counted too, which yields `+1`, `-1` or
//! `0` for split multiplicative, non-split multiplicative and additive
//! reduction. Forms that do not come from a curve are supplied as a
//! coefficient table.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primes::{is_prime, primes_below};

/// `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeierstrassCurve {
    pub a1: i64,
    pub a2: i64,
    pub a3: i64,
    pub a4: i64,
    pub a6: i64,
}

impl WeierstrassCurve {
    pub fn new(a1: i64, a2: i64, a3: i64, a4: i64, a6: i64) -> Self {
        WeierstrassCurve { a1, a2, a3, a4, a6 }
    }

    /// `(b2, b4, b6, b8)`.
    pub fn b_invariants(&self) -> [BigInt; 4] {
        let [a1, a2, a3, a4, a6] = self.coeffs().map(BigInt::from);
        let b2 = &a1 * &a1 + 4 * &a2;
        let b4 = 2 * &a4 + &a1 * &a3;
        let b6 = &a3 * &a3 + 4 * &a6;
        let b8 = &a1 * &a1 * &a6 + 4 * &a2 * &a6 - &a1 * &a3 * &a4 + &a2 * &a3 * &a3 - &a4 * &a4;
        [b2, b4, b6, b8]
    }

    pub fn discriminant(&self) -> BigInt {
        let [b2, b4, b6, b8] = self.b_invariants();
        -&b2 * &b2 * &b8 - 8 * &b4 * &b4 * &b4 - 27 * &b6 * &b6 + 9 * &b2 * &b4 * &b6
    }

    pub fn has_bad_reduction_at(&self, ell: u64) -> bool {
        (self.discriminant() % BigInt::from(ell)).is_zero()
    }

    pub fn coeffs(&self) -> [i64; 5] {
        [self.a1, self.a2, self.a3, self.a4, self.a6]
    }

    /// Parses `"a1,a2,a3,a4,a6"`.
    pub fn parse(s: &str) -> Option<Self> {
        let v: Vec<i64> = s
            .split(',')
            .map(|t| t.trim().parse().ok())
            .collect::<Option<_>>()?;
        match v[..] {
            [a1, a2, a3, a4, a6] => Some(Self::new(a1, a2, a3, a4, a6)),
            _ => None,
        }
    }
}

impl fmt::Display for WeierstrassCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a1, a2, a3, a4, a6] = self.coeffs();
        write!(f, "[{a1},{a2},{a3},{a4},{a6}]")
    }
}

/// Curves shipped with the binary: `(label, model, conductor)`.
pub const REGISTRY: [(&str, WeierstrassCurve, u64); 3] = [
    ("11a1", WeierstrassCurve { a1: 0, a2: -1, a3: 1, a4: -10, a6: -20 }, 11),
    ("43a1", WeierstrassCurve { a1: 0, a2: 1, a3: 1, a4: 0, a6: 0 }, 43),
    ("53a1", WeierstrassCurve { a1: 1, a2: -1, a3: 1, a4: 0, a6: 0 }, 53),
];

pub fn registry_curve(label: &str) -> Option<(WeierstrassCurve, u64)> {
    REGISTRY
        .iter()
        .find(|(l, _, _)| *l == label)
        .map(|&(_, c, n)| (c, n))
}

fn reduce(v: i64, ell: u64) -> u64 {
    v.rem_euclid(ell as i64) as u64
}

/// Affine points on the reduced model by trying every `(x, y)`.
fn affine_count_naive(curve: &WeierstrassCurve, ell: u64) -> u64 {
    let [a1, a2, a3, a4, a6] = curve.coeffs().map(|a| reduce(a, ell));
    let mut n = 0;
    for x in 0..ell {
        let rhs = (((x + a2) * x % ell + a4) * x + a6) % ell;
        for y in 0..ell {
            let lhs = (y * y + a1 * x % ell * y + a3 * y) % ell;
            if lhs == rhs {
                n += 1;
            }
        }
    }
    n
}

/// Affine points via `(2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6`:
/// each `x` contributes `1 + χ(f(x))`. `f` is stepped by finite differences
/// and squares are tabulated incrementally, so the loop is division-free.
fn affine_count_character_sum(curve: &WeierstrassCurve, ell: u64) -> u64 {
    debug_assert!(ell > 3 && ell < 1 << 32);
    let [b2, b4, _, _] = curve.b_invariants();
    let big_ell = BigInt::from(ell);
    let red = |v: &BigInt| -> u64 {
        let r = v % &big_ell;
        let r = if r < BigInt::zero() { r + &big_ell } else { r };
        r.to_u64().expect("residue fits")
    };
    let b2 = red(&b2);
    let b4 = red(&b4);
    let b6 = red(&curve.b_invariants()[2]);

    let n = ell as usize;
    let mut square = vec![false; n];
    let (mut sq, mut step) = (0u64, 1u64);
    for _ in 0..n.div_ceil(2) {
        square[sq as usize] = true;
        sq += step;
        if sq >= ell {
            sq -= ell;
        }
        step += 2;
        if step >= ell {
            step -= ell;
        }
    }

    let add = |a: u64, b: u64| {
        let s = a + b;
        if s >= ell {
            s - ell
        } else {
            s
        }
    };
    let mut f = b6;
    let mut d1 = (4 + b2 + 2 * b4) % ell;
    let mut d2 = (24 + 2 * b2) % ell;
    let d3 = 24 % ell;
    let mut count = 0u64;
    for _ in 0..n {
        count += if f == 0 {
            1
        } else if square[f as usize] {
            2
        } else {
            0
        };
        f = add(f, d1);
        d1 = add(d1, d2);
        d2 = add(d2, d3);
    }
    count
}

/// `l + 1 - #E(F_l)` on the reduced model, singular point included.
pub fn count_ap(curve: &WeierstrassCurve, ell: u64) -> i64 {
    assert!(is_prime(ell), "{ell} is not prime");
    let affine = if ell <= 3 {
        affine_count_naive(curve, ell)
    } else {
        affine_count_character_sum(curve, ell)
    };
    ell as i64 - affine as i64
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormSource {
    Curve(WeierstrassCurve),
    CoefficientTable(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormSpec {
    pub source: FormSource,
    pub level: u64,
    pub label: String,
}

impl FormSpec {
    pub fn curve(curve: WeierstrassCurve, level: u64, label: impl Into<String>) -> Result<Self> {
        if curve.discriminant().is_zero() {
            return Err(Error::SingularCurve);
        }
        if level == 0 {
            return Err(Error::ConductorMismatch {
                ell: 0,
                level,
                reason: "level must be positive",
            });
        }
        Ok(FormSpec {
            source: FormSource::Curve(curve),
            level,
            label: label.into(),
        })
    }

    pub fn registry(label: &str) -> Option<Self> {
        let (curve, level) = registry_curve(label)?;
        Self::curve(curve, level, label).ok()
    }

    pub fn table(path: impl Into<PathBuf>, level: u64, label: impl Into<String>) -> Self {
        FormSpec {
            source: FormSource::CoefficientTable(path.into()),
            level,
            label: label.into(),
        }
    }

    pub fn divides_level(&self, ell: u64) -> bool {
        self.level.is_multiple_of(ell)
    }

    /// Counts `a_l` for a curve source, after checking that the supplied
    /// level and the discriminant agree on whether `l` is bad.
    fn count(&self, curve: &WeierstrassCurve, ell: u64) -> Result<i64> {
        match (curve.has_bad_reduction_at(ell), self.divides_level(ell)) {
            (true, false) => Err(Error::ConductorMismatch {
                ell,
                level: self.level,
                reason: "discriminant is divisible by l but the level is not (non-minimal model?)",
            }),
            (false, true) => Err(Error::ConductorMismatch {
                ell,
                level: self.level,
                reason: "level is divisible by l but the curve has good reduction",
            }),
            _ => Ok(count_ap(curve, ell)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Counted,
    Ingested,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApEntry {
    pub ap: i64,
    pub provenance: Provenance,
}

/// Memoized `l -> a_l`, ordered by `l`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ApCache {
    entries: BTreeMap<u64, ApEntry>,
}

impl ApCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Empty for curve sources; the whole table for table sources.
    pub fn for_form(form: &FormSpec) -> Result<Self> {
        match &form.source {
            FormSource::Curve(_) => Ok(Self::new()),
            FormSource::CoefficientTable(path) => Self::load(path),
        }
    }

    pub fn get(&self, ell: u64) -> Option<i64> {
        self.entries.get(&ell).map(|e| e.ap)
    }

    pub fn entry(&self, ell: u64) -> Option<ApEntry> {
        self.entries.get(&ell).copied()
    }

    pub fn insert(&mut self, ell: u64, ap: i64, provenance: Provenance) {
        self.entries.insert(ell, ApEntry { ap, provenance });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, ApEntry)> + '_ {
        self.entries.iter().map(|(&l, &e)| (l, e))
    }

    /// Merges `other` into `self`; existing entries win.
    pub fn merge(&mut self, other: ApCache) {
        for (l, e) in other.entries {
            self.entries.entry(l).or_insert(e);
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "ell,ap")?;
        for (l, e) in &self.entries {
            writeln!(out, "{l},{}", e.ap)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), path)
    }

    /// Reads the `ell,ap` format: header line, then one row per prime with
    /// `ell` strictly ascending. Entries are tagged as ingested.
    pub fn read_csv<R: BufRead>(input: R, path: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut cache = ApCache::new();
        let mut last = 0u64;
        for (idx, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let lineno = idx + 1;
            if idx == 0 {
                if line.trim_end_matches('\r') != "ell,ap" {
                    return Err(err(lineno, format!("expected header `ell,ap`, got `{line}`")));
                }
                continue;
            }
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let (l, a) = line
                .split_once(',')
                .ok_or_else(|| err(lineno, "expected `ell,ap`".into()))?;
            let ell: u64 = l
                .parse()
                .map_err(|_| err(lineno, format!("bad ell `{l}`")))?;
            let ap: i64 = a
                .parse()
                .map_err(|_| err(lineno, format!("bad ap `{a}`")))?;
            if !is_prime(ell) {
                return Err(err(lineno, format!("{ell} is not prime")));
            }
            if ell <= last {
                return Err(err(lineno, format!("{ell} is out of order or repeated")));
            }
            last = ell;
            cache.insert(ell, ap, Provenance::Ingested);
        }
        Ok(cache)
    }

    /// Checks the Hasse bound at good primes and, for curve sources,
    /// `a_l ∈ {-1, 0, 1}` at primes dividing the level.
    pub fn validate(&self, form: &FormSpec) -> std::result::Result<(), Vec<u64>> {
        let is_curve = matches!(form.source, FormSource::Curve(_));
        let bad: Vec<u64> = self
            .iter()
            .filter(|&(l, e)| {
                if form.divides_level(l) {
                    is_curve && e.ap.abs() > 1
                } else {
                    (e.ap as i128).pow(2) > 4 * l as i128
                }
            })
            .map(|(l, _)| l)
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(bad)
        }
    }
}

/// `a_l` for one prime, memoized. Table sources never compute: a gap is
/// reported as [`Error::MissingCoefficient`].
pub fn get_ap(form: &FormSpec, ell: u64, cache: &mut ApCache) -> Result<i64> {
    if !is_prime(ell) {
        return Err(Error::NotPrime(ell));
    }
    if let Some(ap) = cache.get(ell) {
        return Ok(ap);
    }
    match &form.source {
        FormSource::Curve(curve) => {
            let ap = form.count(curve, ell)?;
            cache.insert(ell, ap, Provenance::Counted);
            Ok(ap)
        }
        FormSource::CoefficientTable(_) => Err(Error::MissingCoefficient(ell)),
    }
}

/// Fills `cache` with `a_l` for every prime `l < x`. Missing primes are
/// counted in parallel on the current rayon pool; the result does not
/// depend on the number of workers.
pub fn bulk_ap(form: &FormSpec, x: u64, cache: &mut ApCache) -> Result<()> {
    let missing: Vec<u64> = primes_below(x)
        .into_iter()
        .filter(|l| cache.get(*l).is_none())
        .collect();
    if missing.is_empty() {
        return Ok(());
    }
    match &form.source {
        FormSource::CoefficientTable(_) => Err(Error::MissingCoefficient(missing[0])),
        FormSource::Curve(curve) => {
            let counted: Vec<(u64, i64)> = missing
                .par_iter()
                .map(|&l| form.count(curve, l).map(|a| (l, a)))
                .collect::<Result<_>>()?;
            for (l, a) in counted {
                cache.insert(l, a, Provenance::Counted);
            }
            Ok(())
        }
    }
}
