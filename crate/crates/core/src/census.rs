//! Brute-force census of `GL_2(F_p)` by `(det, trace)` and the trace
//! densities derived from it.
//!
//! Every density here is computed twice: once by summing cells of the
//! enumeration, once from its closed form in [`crate::densities`]. A
//! disagreement is a hard error.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::densities;
use crate::error::{Error, Result};
use crate::ffmat::{classify, ClassLabel, Matrix2, Modulus};
use crate::rational::{ratio, render, Rational};

/// Largest prime enumerated unless the caller raises the bound.
pub const DEFAULT_CENSUS_BOUND: u64 = 101;

/// Counts `#C_{m,n}` of invertible matrices with `det = m`, `trace = n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassCount {
    modulus: Modulus,
    cells: Vec<u64>,
}

impl ClassCount {
    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn p(&self) -> u64 {
        self.modulus.get()
    }

    /// `#C_{det, trace}`; arguments are reduced mod `p`.
    pub fn count(&self, det: i64, trace: i64) -> u64 {
        let p = self.p() as i64;
        let (m, n) = (det.rem_euclid(p), trace.rem_euclid(p));
        self.cells[(m * p + n) as usize]
    }

    pub fn group_order(&self) -> u64 {
        self.cells.iter().sum()
    }

    /// Writes `p,det,trace,count` rows for every `det != 0`, ordered by
    /// det then trace.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let p = self.p();
        writeln!(out, "p,det,trace,count")?;
        for det in 1..p {
            for trace in 0..p {
                writeln!(
                    out,
                    "{p},{det},{trace},{}",
                    self.count(det as i64, trace as i64)
                )?;
            }
        }
        Ok(())
    }

    fn ratio_of(&self, n: u64) -> Rational {
        ratio(n, self.group_order())
    }
}

/// Enumerates all `p^4` matrices over `F_p`, keeping the invertible ones.
/// Work is split on the top-left entry and the partial tables merged.
pub fn enumerate_census(p: u64, bound: u64) -> Result<ClassCount> {
    let modulus = Modulus::new(p)?;
    if p > bound {
        return Err(Error::CensusBound { p, bound });
    }
    let size = (p * p) as usize;
    let cells = (0..p)
        .into_par_iter()
        .map(|a| {
            let mut local = vec![0u64; size];
            for b in 0..p {
                for c in 0..p {
                    let bc = b * c % p;
                    for d in 0..p {
                        let det = (a * d + p - bc) % p;
                        if det != 0 {
                            local[(det * p + (a + d) % p) as usize] += 1;
                        }
                    }
                }
            }
            local
        })
        .reduce(
            || vec![0u64; size],
            |mut acc, part| {
                acc.iter_mut().zip(part).for_each(|(x, y)| *x += y);
                acc
            },
        );
    Ok(ClassCount { modulus, cells })
}

/// Trace distribution of the matrices with a fixed determinant, in
/// `O(p^3)`: for `a != 0` the entry `d` is forced, for `a = 0` it is free.
/// Independent of [`enumerate_census`]; used to reach primes where the full
/// census is slow.
pub fn enumerate_det_slice(p: u64, det: u64) -> Result<Vec<u64>> {
    let modulus = Modulus::new(p)?;
    let det = det % p;
    if det == 0 {
        return Err(Error::Singular(p));
    }
    let mut by_trace = vec![0u64; p as usize];
    let inverses: Vec<u64> = modulus
        .elements()
        .map(|x| x.inv().map_or(0, |y| y.value()))
        .collect();
    for a in 0..p {
        for b in 0..p {
            for c in 0..p {
                let bc = b * c % p;
                if a == 0 {
                    if (p - bc) % p == det {
                        for d in 0..p {
                            by_trace[d as usize] += 1;
                        }
                    }
                } else {
                    let d = (det + bc) % p * inverses[a as usize] % p;
                    by_trace[((a + d) % p) as usize] += 1;
                }
            }
        }
    }
    Ok(by_trace)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FormulaCheck {
    pub name: &'static str,
    /// `(number of classes, size of each)` from the closed forms.
    pub expected: (u64, u64),
    /// Observed number of classes, and the distinct sizes seen.
    pub observed_classes: u64,
    pub observed_sizes: Vec<u64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassSizeReport {
    pub p: u64,
    pub group_order: u64,
    pub checks: Vec<FormulaCheck>,
}

impl ClassSizeReport {
    pub fn all_pass(&self) -> bool {
        let p = self.p as u128;
        self.checks.iter().all(|c| c.pass)
            && self.group_order as u128 == densities::gl2_order(self.p)
            && self
                .checks
                .iter()
                .map(|c| c.expected.0 as u128 * c.expected.1 as u128)
                .sum::<u128>()
                == p * (p - 1) * (p - 1) * (p + 1)
    }
}

/// Classifies every element of `GL_2(F_p)` and checks the number and size of
/// each family of conjugacy classes against the textbook formulas.
pub fn class_size_check(p: u64, bound: u64) -> Result<ClassSizeReport> {
    let modulus = Modulus::new(p)?;
    if p > bound {
        return Err(Error::CensusBound { p, bound });
    }
    let mut sizes: HashMap<ClassLabel, u64> = HashMap::new();
    let mut order = 0u64;
    for entries in (0..p.pow(4)).map(|k| [k % p, k / p % p, k / p / p % p, k / p / p / p]) {
        let [a, b, c, d] = entries.map(|v| modulus.elem(v as i64));
        if let Ok(m) = Matrix2::new(a, b, c, d) {
            *sizes.entry(classify(&m)).or_default() += 1;
            order += 1;
        }
    }

    let family = |label: &ClassLabel| match label {
        ClassLabel::SplitSemisimple { .. } => 0,
        ClassLabel::NonDiagonalRepeated(_) => 1,
        ClassLabel::Central(_) => 2,
        ClassLabel::IrreducibleQuadratic { .. } => 3,
    };
    let expected = [
        ("split_semisimple", ((p - 1) * (p - 2) / 2, p * (p + 1))),
        ("non_diagonal_repeated", (p - 1, p * p - 1)),
        ("central", (p - 1, 1)),
        ("irreducible_quadratic", (p * (p - 1) / 2, p * p - p)),
    ];
    let checks = expected
        .iter()
        .enumerate()
        .map(|(k, &(name, expected))| {
            let mut seen: Vec<u64> = sizes
                .iter()
                .filter(|(label, _)| family(label) == k)
                .map(|(_, &n)| n)
                .collect();
            let observed_classes = seen.len() as u64;
            seen.sort_unstable();
            seen.dedup();
            let pass = observed_classes == expected.0 && seen == [expected.1];
            FormulaCheck {
                name,
                expected,
                observed_classes,
                observed_sizes: seen,
                pass,
            }
        })
        .collect();
    Ok(ClassSizeReport {
        p,
        group_order: order,
        checks,
    })
}

fn confirm(what: String, counted: Rational, formula: Rational) -> Result<Rational> {
    if counted == formula {
        Ok(counted)
    } else {
        Err(Error::ClosedFormMismatch {
            what,
            counted: render(&counted),
            formula: render(&formula),
        })
    }
}

/// `Σ_i #C_{i,0} / |GL_2|`, confirmed against `p/(p^2-1)`.
pub fn density_trace_zero(census: &ClassCount) -> Result<Rational> {
    let p = census.p();
    let total: u64 = (1..p).map(|i| census.count(i as i64, 0)).sum();
    confirm(
        "trace 0".into(),
        census.ratio_of(total),
        densities::trace_zero(p),
    )
}

/// `Σ_i #C_{i,a} / |GL_2|` for `a ≢ 0`, confirmed against
/// `(p^2-p-1)/((p-1)^2(p+1))`.
pub fn density_trace_nonzero(census: &ClassCount, a: i64) -> Result<Rational> {
    let p = census.p();
    if a.rem_euclid(p as i64) == 0 {
        return Err(Error::ZeroTrace(p));
    }
    let total: u64 = (1..p).map(|i| census.count(i as i64, a)).sum();
    confirm(
        format!("trace {a}"),
        census.ratio_of(total),
        densities::trace_nonzero(p),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn apply(self, v: i64) -> i64 {
        match self {
            Sign::Plus => v,
            Sign::Minus => -v,
        }
    }
}

/// `Σ_i #C_{i, ±(i+1)} / |GL_2|`, confirmed against `(p^2-2)/((p-1)^2(p+1))`.
pub fn density_trace_det_linked(census: &ClassCount, sign: Sign) -> Result<Rational> {
    let p = census.p();
    let total: u64 = (1..p)
        .map(|i| census.count(i as i64, sign.apply(i as i64 + 1)))
        .sum();
    confirm(
        format!("trace {}(det+1)", if sign == Sign::Plus { "+" } else { "-" }),
        census.ratio_of(total),
        densities::trace_det_linked(p),
    )
}
