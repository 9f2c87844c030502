//! Arithmetic in a prime field and in `GL_2` over it.
//!
//! Moduli are odd primes that fit in a machine word; products are formed in
//! `u128` so any `u64` prime works, though every caller in this crate uses
//! primes far below `2^32`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::primes::is_prime;

/// An odd prime modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Modulus(u64);

impl Modulus {
    pub fn new(p: u64) -> Result<Self> {
        if p < 3 || p.is_multiple_of(2) {
            return Err(if is_prime(p) {
                Error::BadModulus(p)
            } else {
                Error::NotPrime(p)
            });
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Modulus(p))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn elem(self, v: i64) -> FieldElem {
        FieldElem {
            value: v.rem_euclid(self.0 as i64) as u64,
            modulus: self,
        }
    }

    pub fn zero(self) -> FieldElem {
        self.elem(0)
    }

    pub fn one(self) -> FieldElem {
        self.elem(1)
    }

    /// All residues `0..p`, in order.
    pub fn elements(self) -> impl Iterator<Item = FieldElem> {
        (0..self.0).map(move |value| FieldElem {
            value,
            modulus: self,
        })
    }

    fn reduce128(self, v: u128) -> u64 {
        (v % self.0 as u128) as u64
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A residue in `[0, p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElem {
    value: u64,
    modulus: Modulus,
}

impl FieldElem {
    pub fn value(self) -> u64 {
        self.value
    }

    pub fn modulus(self) -> Modulus {
        self.modulus
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    /// The representative in `(-p/2, p/2]`.
    pub fn centered(self) -> i64 {
        let p = self.modulus.0;
        if self.value > p / 2 {
            self.value as i64 - p as i64
        } else {
            self.value as i64
        }
    }

    pub fn pow(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = self.modulus.one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat; `None` for zero.
    pub fn inv(self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.pow(self.modulus.0 - 2))
        }
    }

    pub fn is_square(self) -> bool {
        self.is_zero() || self.pow((self.modulus.0 - 1) / 2).value == 1
    }

    fn check(self, other: Self) {
        assert_eq!(
            self.modulus, other.modulus,
            "mixed moduli {} and {}",
            self.modulus, other.modulus
        );
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl std::ops::Add for FieldElem {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.check(rhs);
        let m = self.modulus;
        FieldElem {
            value: m.reduce128(self.value as u128 + rhs.value as u128),
            modulus: m,
        }
    }
}

impl std::ops::Sub for FieldElem {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl std::ops::Neg for FieldElem {
    type Output = Self;
    fn neg(self) -> Self {
        let p = self.modulus.0;
        FieldElem {
            value: if self.value == 0 { 0 } else { p - self.value },
            modulus: self.modulus,
        }
    }
}

impl std::ops::Mul for FieldElem {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.check(rhs);
        let m = self.modulus;
        FieldElem {
            value: m.reduce128(self.value as u128 * rhs.value as u128),
            modulus: m,
        }
    }
}

/// Smallest square root of `a`, found by exhaustive search over `[0, p)`.
///
/// Linear in `p`; the census primes are tiny so this is never the
/// bottleneck.
pub fn sqrt_mod_p(a: FieldElem) -> Option<FieldElem> {
    a.modulus().elements().find(|&r| r * r == a)
}

/// An element of `GL_2(F_p)`, stored row-major as `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Matrix2 {
    modulus: Modulus,
    entries: [u64; 4],
}

impl Matrix2 {
    pub fn new(a: FieldElem, b: FieldElem, c: FieldElem, d: FieldElem) -> Result<Self> {
        let m = a.modulus();
        for e in [b, c, d] {
            if e.modulus() != m {
                return Err(Error::ModulusMismatch(m.get(), e.modulus().get()));
            }
        }
        let mat = Matrix2 {
            modulus: m,
            entries: [a.value, b.value, c.value, d.value],
        };
        if mat.det().is_zero() {
            return Err(Error::Singular(m.get()));
        }
        Ok(mat)
    }

    /// Convenience constructor from signed integers, reduced mod `p`.
    pub fn from_ints(modulus: Modulus, rows: [[i64; 2]; 2]) -> Result<Self> {
        Self::new(
            modulus.elem(rows[0][0]),
            modulus.elem(rows[0][1]),
            modulus.elem(rows[1][0]),
            modulus.elem(rows[1][1]),
        )
    }

    pub fn identity(modulus: Modulus) -> Self {
        Matrix2 {
            modulus,
            entries: [1, 0, 0, 1],
        }
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    /// Entry at row `i`, column `j`.
    pub fn entry(&self, i: usize, j: usize) -> FieldElem {
        FieldElem {
            value: self.entries[2 * i + j],
            modulus: self.modulus,
        }
    }

    pub fn det(&self) -> FieldElem {
        self.entry(0, 0) * self.entry(1, 1) - self.entry(0, 1) * self.entry(1, 0)
    }

    pub fn trace(&self) -> FieldElem {
        self.entry(0, 0) + self.entry(1, 1)
    }

    pub fn inverse(&self) -> Self {
        let inv = self.det().inv().expect("GL_2 element has a unit determinant");
        let [a, b, c, d] = [0, 1, 2, 3].map(|k| FieldElem {
            value: self.entries[k],
            modulus: self.modulus,
        });
        Matrix2 {
            modulus: self.modulus,
            entries: [d * inv, -b * inv, -c * inv, a * inv].map(FieldElem::value),
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.entries[1] == 0 && self.entries[2] == 0 && self.entries[0] == self.entries[3]
    }
}

impl std::ops::Mul for Matrix2 {
    type Output = Matrix2;
    fn mul(self, rhs: Matrix2) -> Matrix2 {
        assert_eq!(self.modulus, rhs.modulus, "mixed moduli");
        let e = |i, j| self.entry(i, j);
        let f = |i, j| rhs.entry(i, j);
        let out = [
            e(0, 0) * f(0, 0) + e(0, 1) * f(1, 0),
            e(0, 0) * f(0, 1) + e(0, 1) * f(1, 1),
            e(1, 0) * f(0, 0) + e(1, 1) * f(1, 0),
            e(1, 0) * f(0, 1) + e(1, 1) * f(1, 1),
        ];
        Matrix2 {
            modulus: self.modulus,
            entries: out.map(FieldElem::value),
        }
    }
}

/// `(det, trace)` of a `GL_2` element.
pub fn det_trace(m: &Matrix2) -> (FieldElem, FieldElem) {
    (m.det(), m.trace())
}

/// Conjugacy class of an element of `GL_2(F_p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    /// Diagonalizable with distinct eigenvalues; stored with `low < high`.
    SplitSemisimple { low: FieldElem, high: FieldElem },
    /// A single eigenvalue, not scalar.
    NonDiagonalRepeated(FieldElem),
    /// Scalar matrix.
    Central(FieldElem),
    /// Characteristic polynomial `X^2 - trace X + det` irreducible over `F_p`.
    IrreducibleQuadratic { trace: FieldElem, det: FieldElem },
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::SplitSemisimple { low, high } => write!(f, "D({low},{high})"),
            ClassLabel::NonDiagonalRepeated(a) => write!(f, "N({a})"),
            ClassLabel::Central(a) => write!(f, "Z({a})"),
            ClassLabel::IrreducibleQuadratic { trace, det } => {
                write!(f, "E(X^2-{trace}X+{det})")
            }
        }
    }
}

/// Conjugacy class of `m`, read off from its characteristic polynomial
/// (and, for a repeated eigenvalue, whether `m` is scalar).
pub fn classify(m: &Matrix2) -> ClassLabel {
    let p = m.modulus();
    let (det, trace) = det_trace(m);
    let two_inv = p.elem(2).inv().expect("p is odd");
    let disc = trace * trace - p.elem(4) * det;
    if disc.is_zero() {
        let eig = trace * two_inv;
        return if m.is_scalar() {
            ClassLabel::Central(eig)
        } else {
            ClassLabel::NonDiagonalRepeated(eig)
        };
    }
    match sqrt_mod_p(disc) {
        Some(root) => {
            let r1 = (trace + root) * two_inv;
            let r2 = (trace - root) * two_inv;
            ClassLabel::SplitSemisimple {
                low: r1.min(r2),
                high: r1.max(r2),
            }
        }
        None => ClassLabel::IrreducibleQuadratic { trace, det },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fp(p: u64) -> Modulus {
        Modulus::new(p).unwrap()
    }

    #[test]
    fn modulus_validation() {
        assert!(matches!(Modulus::new(4), Err(Error::NotPrime(4))));
        assert!(matches!(Modulus::new(2), Err(Error::BadModulus(2))));
        assert!(matches!(Modulus::new(1), Err(Error::NotPrime(1))));
        assert_eq!(Modulus::new(101).unwrap().get(), 101);
    }

    #[test]
    fn det_trace_examples() {
        let f5 = fp(5);
        let (d, t) = det_trace(&Matrix2::identity(f5));
        assert_eq!((d.value(), t.value()), (1, 2));
        let rot = Matrix2::from_ints(f5, [[0, -1], [1, 0]]).unwrap();
        let (d, t) = det_trace(&rot);
        assert_eq!((d.value(), t.value()), (1, 0));
        let uni = Matrix2::from_ints(fp(7), [[1, 1], [0, 1]]).unwrap();
        let (d, t) = det_trace(&uni);
        assert_eq!((d.value(), t.value()), (1, 2));
    }

    #[test]
    fn classify_examples() {
        let f5 = fp(5);
        let m = Matrix2::from_ints(f5, [[2, 0], [0, 3]]).unwrap();
        assert_eq!(
            classify(&m),
            ClassLabel::SplitSemisimple {
                low: f5.elem(2),
                high: f5.elem(3)
            }
        );
        let m = Matrix2::from_ints(f5, [[1, 1], [0, 1]]).unwrap();
        assert_eq!(classify(&m), ClassLabel::NonDiagonalRepeated(f5.elem(1)));
        let m = Matrix2::from_ints(f5, [[3, 0], [0, 3]]).unwrap();
        assert_eq!(classify(&m), ClassLabel::Central(f5.elem(3)));

        // -1 is not a square mod 3: the squares of F_3 are {0, 1}.
        let f3 = fp(3);
        let squares: Vec<u64> = f3.elements().map(|x| (x * x).value()).collect();
        assert!(!squares.contains(&2));
        let m = Matrix2::from_ints(f3, [[0, -1], [1, 0]]).unwrap();
        assert_eq!(
            classify(&m),
            ClassLabel::IrreducibleQuadratic {
                trace: f3.elem(0),
                det: f3.elem(1)
            }
        );
    }

    #[test]
    fn singular_rejected() {
        let f5 = fp(5);
        assert!(matches!(
            Matrix2::from_ints(f5, [[1, 2], [2, 4]]),
            Err(Error::Singular(5))
        ));
        let f7 = fp(7);
        assert!(matches!(
            Matrix2::new(f5.one(), f5.zero(), f5.zero(), f7.one()),
            Err(Error::ModulusMismatch(5, 7))
        ));
    }

    #[test]
    fn sqrt_examples() {
        assert_eq!(sqrt_mod_p(fp(7).elem(4)).map(FieldElem::value), Some(2));
        // squares mod 7 are {0, 1, 2, 4}
        assert_eq!(sqrt_mod_p(fp(7).elem(3)), None);
        assert_eq!(sqrt_mod_p(fp(11).elem(0)).map(FieldElem::value), Some(0));
    }

    #[test]
    fn sqrt_agrees_with_euler() {
        for p in [3, 5, 7, 11, 13, 97] {
            for a in fp(p).elements() {
                assert_eq!(sqrt_mod_p(a).is_some(), a.is_square(), "{a} mod {p}");
            }
        }
    }

    fn arb_gl2() -> impl Strategy<Value = (Matrix2, Matrix2)> {
        prop::sample::select(vec![3u64, 5, 7, 11, 13]).prop_flat_map(|p| {
            let e = 0..p as i64;
            (
                [e.clone(), e.clone(), e.clone(), e.clone()],
                [e.clone(), e.clone(), e.clone(), e],
            )
                .prop_filter_map("singular", move |(m, g)| {
                    let f = fp(p);
                    let m = Matrix2::from_ints(f, [[m[0], m[1]], [m[2], m[3]]]).ok()?;
                    let g = Matrix2::from_ints(f, [[g[0], g[1]], [g[2], g[3]]]).ok()?;
                    Some((m, g))
                })
        })
    }

    proptest! {
        #[test]
        fn class_is_conjugation_invariant((m, g) in arb_gl2()) {
            let conj = g * m * g.inverse();
            prop_assert_eq!(classify(&conj), classify(&m));
            prop_assert_eq!(det_trace(&conj), det_trace(&m));
        }

        #[test]
        fn inverse_is_two_sided((m, _g) in arb_gl2()) {
            let id = Matrix2::identity(m.modulus());
            prop_assert_eq!(m * m.inverse(), id);
            prop_assert_eq!(m.inverse() * m, id);
        }
    }
}
