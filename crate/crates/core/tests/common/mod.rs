#![allow(dead_code)]

use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;

use banded_esa_core::operator::{BandProfile, EntryOracle, OperatorSpec};
use banded_esa_core::section::{BandedSection, Shift};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

fn unit_hash(parts: &[i64]) -> f64 {
    let mut h = DefaultHasher::new();
    parts.hash(&mut h);
    (h.finish() >> 11) as f64 / (1u64 << 53) as f64
}

/// Fully populated band with hashed entries in `[-bound, bound]`.
#[derive(Debug)]
pub struct HashedBand {
    pub seed: i64,
    pub profile: BandProfile,
    pub bound: f64,
    /// Extra upper entry placed outside the band.
    pub stray: Option<(i64, i64)>,
}

impl EntryOracle for HashedBand {
    fn upper(&self, x: i64, y: i64) -> Complex64 {
        let z = y - x;
        if z > self.profile.upper_width(x) && self.stray != Some((x, y)) {
            return Complex64::new(0.0, 0.0);
        }
        let re = self.bound * (2.0 * unit_hash(&[self.seed, x, y, 0]) - 1.0);
        let im = if z == 0 { 0.0 } else { self.bound * (2.0 * unit_hash(&[self.seed, x, y, 1]) - 1.0) };
        Complex64::new(re, im)
    }
}

pub fn hashed_spec(seed: i64, profile: BandProfile, bound: f64) -> OperatorSpec {
    OperatorSpec::custom(profile, Arc::new(HashedBand { seed, profile, bound, stray: None }))
}

/// Real-entry variant: imaginary parts dropped.
#[derive(Debug)]
pub struct RealBand(pub HashedBand);

impl EntryOracle for RealBand {
    fn upper(&self, x: i64, y: i64) -> Complex64 {
        Complex64::new(self.0.upper(x, y).re, 0.0)
    }
}

pub fn dense_matrix(section: &BandedSection) -> DMatrix<Complex64> {
    let n = section.dim();
    DMatrix::from_fn(n, n, |i, j| section.get(i, j))
}

/// `(I - s i A)^{-1} g` by dense LU.
pub fn dense_solve(section: &BandedSection, shift: Shift, g: &[Complex64]) -> Vec<Complex64> {
    let n = section.dim();
    let a = dense_matrix(section);
    let m = DMatrix::<Complex64>::identity(n, n) + a * shift.coefficient();
    let rhs = DVector::from_column_slice(g);
    m.lu().solve(&rhs).expect("nonsingular").iter().copied().collect()
}

/// `<Tf, (TA - AT) f>` with dense matrices, inner product linear in the first slot.
pub fn dense_commutator_form(section: &BandedSection, t: &[f64], f: &[Complex64]) -> Complex64 {
    let n = section.dim();
    let a = dense_matrix(section);
    let tm = DMatrix::<Complex64>::from_diagonal(&DVector::from_iterator(n, t.iter().map(|&w| Complex64::new(w, 0.0))));
    let fv = DVector::from_column_slice(f);
    let tf = &tm * &fv;
    let comm = (&tm * &a - &a * &tm) * &fv;
    tf.iter().zip(comm.iter()).map(|(u, h)| u * h.conj()).sum()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
