//! Finite sections of an [`OperatorSpec`] and the shifted solves
//! `(I - s i A) f = g`, `s = +1 or -1`.
//!
//! Sections use zero-Dirichlet closure: couplings that leave the window are
//! dropped. The solver is a banded LU with partial pivoting (same layout as
//! LAPACK `zgbtrf`: `kl` extra superdiagonals hold pivoting fill-in).

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::operator::{bracket_pow, Family, OperatorSpec};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Clamps real and imaginary parts independently to `[-level, level]`.
///
/// Commutes with complex conjugation, so a clamped Hermitian matrix stays Hermitian.
pub fn chi_clamp(value: Complex64, level: u64) -> Complex64 {
    let n = level as f64;
    Complex64::new(value.re.clamp(-n, n), value.im.clamp(-n, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TruncationParams {
    level: u64,
}

impl TruncationParams {
    pub fn new(level: u64) -> Option<Self> {
        (level >= 1).then_some(Self { level })
    }

    pub fn level(&self) -> u64 {
        self.level
    }
}

/// Bounded approximant `a_N(x, y) = chi_N(a(x, y)) 1[|x - y| <= N]`.
pub fn truncate_spec(spec: &OperatorSpec, params: TruncationParams) -> OperatorSpec {
    OperatorSpec::new(
        *spec.profile(),
        Family::Truncated { inner: Arc::new(spec.clone()), level: params.level },
    )
}

/// Inclusive index window `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self, SectionError> {
        if lo > hi {
            return Err(SectionError::EmptyWindow { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn contains(&self, x: i64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }

    pub fn index(&self, x: i64) -> Option<usize> {
        self.contains(x).then(|| (x - self.lo) as usize)
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }

    /// Window of roughly twice the width with the same center.
    pub fn doubled(&self) -> Self {
        let ext = (self.width() as i64 + 1) / 2;
        Self { lo: self.lo - ext, hi: self.hi + ext }
    }

    /// Whether position `i` belongs to the outer half: the first and last quarter.
    pub fn is_outer(&self, i: usize) -> bool {
        let w = self.width();
        let q = (w / 4).max(1);
        i < q || i + q >= w
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SectionError {
    #[error("empty window [{lo}, {hi}]")]
    EmptyWindow { lo: i64, hi: i64 },
    #[error("section of width {width} needs {needed} stored entries, above the cap of {cap}")]
    TooLarge { width: usize, needed: usize, cap: usize },
    #[error("right-hand side has length {got}, window has width {expected}")]
    RhsLength { expected: usize, got: usize },
    #[error("banded factorization broke down at row {row}: pivot {pivot}")]
    Breakdown { row: i64, pivot: Complex64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectionConfig {
    /// Upper bound on complex values held by the LU factors.
    pub max_stored: usize,
}

impl Default for SectionConfig {
    fn default() -> Self {
        Self { max_stored: 1 << 26 }
    }
}

/// Finite Hermitian banded section in row-major band storage.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSection {
    window: Window,
    /// Structural `(lower, upper)` widths per row, clipped to the window.
    row_bands: Vec<(usize, usize)>,
    kl: usize,
    ku: usize,
    /// `entry(i, j)` lives at `i * (kl + ku + 1) + (j + kl - i)`.
    data: Vec<Complex64>,
    hermitian: bool,
}

impl BandedSection {
    pub fn window(&self) -> Window {
        self.window
    }

    pub fn dim(&self) -> usize {
        self.window.width()
    }

    /// Actual `(lower, upper)` bandwidths of the stored nonzeros.
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn row_bands(&self) -> &[(usize, usize)] {
        &self.row_bands
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    fn stride(&self) -> usize {
        self.kl + self.ku + 1
    }

    /// Entry at window positions `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if j + self.kl < i || j > i + self.ku {
            return ZERO;
        }
        self.data[i * self.stride() + (j + self.kl - i)]
    }

    /// Entry at matrix coordinates; zero outside the window.
    pub fn entry(&self, x: i64, y: i64) -> Complex64 {
        match (self.window.index(x), self.window.index(y)) {
            (Some(i), Some(j)) => self.get(i, j),
            _ => ZERO,
        }
    }

    /// Column positions with possibly nonzero entries in row `i`.
    pub fn row_columns(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.dim())
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim());
        (0..self.dim())
            .map(|i| self.row_columns(i).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Maximum absolute row sum over the section.
    pub fn max_row_l1(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.row_columns(i).map(|j| self.get(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Restricts `spec` to `window`, dropping couplings to indices outside it.
pub fn build_section(spec: &OperatorSpec, window: Window) -> Result<BandedSection, SectionError> {
    build_section_with(spec, window, &SectionConfig::default())
}

pub fn build_section_with(
    spec: &OperatorSpec,
    window: Window,
    config: &SectionConfig,
) -> Result<BandedSection, SectionError> {
    let width = window.width();
    if width > config.max_stored {
        return Err(SectionError::TooLarge { width, needed: width, cap: config.max_stored });
    }
    let rows: Vec<((usize, usize), Vec<(usize, Complex64)>)> = window
        .iter()
        .into_par_iter()
        .map(|x| {
            let (first, last) = spec.row_support(x);
            let first = first.max(window.lo);
            let last = last.min(window.hi);
            let entries = (first..=last)
                .filter_map(|y| {
                    let v = spec.entry(x, y);
                    (v != ZERO).then(|| ((y - window.lo) as usize, v))
                })
                .collect();
            (((x - first) as usize, (last - x) as usize), entries)
        })
        .collect();

    let mut kl = 0;
    let mut ku = 0;
    for (i, (_, entries)) in rows.iter().enumerate() {
        for &(j, _) in entries {
            kl = kl.max(i.saturating_sub(j));
            ku = ku.max(j.saturating_sub(i));
        }
    }
    let needed = width.saturating_mul(2 * kl + ku + 1);
    if needed > config.max_stored {
        return Err(SectionError::TooLarge { width, needed, cap: config.max_stored });
    }

    let stride = kl + ku + 1;
    let mut data = vec![ZERO; width * stride];
    let mut row_bands = Vec::with_capacity(width);
    for (i, (bands, entries)) in rows.into_iter().enumerate() {
        row_bands.push(bands);
        for (j, v) in entries {
            data[i * stride + (j + kl - i)] = v;
        }
    }
    let mut section = BandedSection { window, row_bands, kl, ku, data, hermitian: false };
    section.hermitian = (0..width).all(|i| {
        section.row_columns(i).all(|j| section.get(i, j) == section.get(j, i).conj())
    });
    Ok(section)
}

/// Sign `s` of the shift in `(I - s i A)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Shift {
    /// `I - iA`
    Plus,
    /// `I + iA`
    Minus,
}

impl Shift {
    pub fn from_sign(sign: i32) -> Option<Self> {
        match sign {
            1 => Some(Self::Plus),
            -1 => Some(Self::Minus),
            _ => None,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }

    /// Coefficient `-s i` multiplying `A`.
    pub fn coefficient(self) -> Complex64 {
        -I * self.sign()
    }
}

/// LU factors of `I - s i A` for a banded section.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    /// Row `r` stores columns `[r - kl, r + kl + ku]`.
    stride: usize,
    factors: Vec<Complex64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(section: &BandedSection, shift: Shift) -> Result<Self, SectionError> {
        let n = section.dim();
        let (kl, ku) = (section.kl, section.ku);
        let stride = 2 * kl + ku + 1;
        let c = shift.coefficient();
        let mut a = vec![ZERO; n * stride];
        for i in 0..n {
            for j in section.row_columns(i) {
                let identity = if i == j { Complex64::new(1.0, 0.0) } else { ZERO };
                a[i * stride + (j + kl - i)] = identity + c * section.get(i, j);
            }
        }
        let at = |r: usize, col: usize| r * stride + (col + kl - r);
        let mut pivots = Vec::with_capacity(n);
        for i in 0..n {
            let last_row = (i + kl).min(n - 1);
            let last_col = (i + kl + ku).min(n - 1);
            let mut p = i;
            let mut best = a[at(i, i)].norm();
            for r in i + 1..=last_row {
                let m = a[at(r, i)].norm();
                if m > best {
                    best = m;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(SectionError::Breakdown {
                    row: section.window.lo + i as i64,
                    pivot: a[at(p, i)],
                });
            }
            pivots.push(p);
            if p != i {
                for col in i..=last_col {
                    a.swap(at(i, col), at(p, col));
                }
            }
            let pivot = a[at(i, i)];
            for r in i + 1..=last_row {
                let m = a[at(r, i)] / pivot;
                a[at(r, i)] = m;
                if m != ZERO {
                    for col in i + 1..=last_col {
                        let u = a[at(i, col)];
                        a[at(r, col)] -= m * u;
                    }
                }
            }
        }
        Ok(Self { n, kl, stride, factors: a, pivots })
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(rhs.len(), self.n);
        let (n, kl, stride) = (self.n, self.kl, self.stride);
        let ku = stride - 2 * kl - 1;
        let at = |r: usize, col: usize| r * stride + (col + kl - r);
        let mut b = rhs.to_vec();
        for i in 0..n {
            b.swap(i, self.pivots[i]);
            let bi = b[i];
            if bi != ZERO {
                for r in i + 1..=(i + kl).min(n.saturating_sub(1)) {
                    b[r] -= self.factors[at(r, i)] * bi;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for col in i + 1..=(i + kl + ku).min(n - 1) {
                s -= self.factors[at(i, col)] * b[col];
            }
            b[i] = s / self.factors[at(i, i)];
        }
        b
    }
}

/// Quality record of a windowed solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveCertificate {
    /// `||(I - s i A) f - g||_2` on the window.
    pub residual_norm: f64,
    /// `sum |f_x|^2` over the outer half of the window.
    pub boundary_mass: f64,
    pub window_used: Window,
    pub growth_steps: usize,
    pub rhs_norm: f64,
    pub solution_norm: f64,
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves `(I - s i A_section) f = g` by banded LU.
pub fn solve_shifted(
    section: &BandedSection,
    shift: Shift,
    g: &[Complex64],
) -> Result<(Vec<Complex64>, SolveCertificate), SectionError> {
    if g.len() != section.dim() {
        return Err(SectionError::RhsLength { expected: section.dim(), got: g.len() });
    }
    let lu = BandedLu::factor(section, shift)?;
    let f = lu.solve(g);
    let af = section.matvec(&f);
    let c = shift.coefficient();
    let residual: Vec<Complex64> = f
        .iter()
        .zip(&af)
        .zip(g)
        .map(|((fx, ax), gx)| fx + c * ax - gx)
        .collect();
    let window = section.window();
    let boundary_mass = f
        .iter()
        .enumerate()
        .filter(|(i, _)| window.is_outer(*i))
        .map(|(_, z)| z.norm_sqr())
        .sum();
    let certificate = SolveCertificate {
        residual_norm: l2(&residual),
        boundary_mass,
        window_used: window,
        growth_steps: 0,
        rhs_norm: l2(g),
        solution_norm: l2(&f),
    };
    Ok((f, certificate))
}

/// Compactly supported vector on the integers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector(BTreeMap<i64, Complex64>);

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Unit vector `e_x`.
    pub fn unit(x: i64) -> Self {
        Self::from_entries([(x, Complex64::new(1.0, 0.0))])
    }

    /// Builds from `(x, value)` pairs; repeated indices accumulate.
    pub fn from_entries(entries: impl IntoIterator<Item = (i64, Complex64)>) -> Self {
        let mut map = BTreeMap::new();
        for (x, v) in entries {
            *map.entry(x).or_insert(ZERO) += v;
        }
        Self(map)
    }

    pub fn get(&self, x: i64) -> Complex64 {
        self.0.get(&x).copied().unwrap_or(ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.0.iter().map(|(&x, &v)| (x, v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Smallest and largest index carrying an entry.
    pub fn support_hull(&self) -> Option<(i64, i64)> {
        Some((*self.0.keys().next()?, *self.0.keys().next_back()?))
    }

    pub fn on_window(&self, window: Window) -> Vec<Complex64> {
        window.iter().map(|x| self.get(x)).collect()
    }

    pub fn norm(&self) -> f64 {
        self.0.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub max_growth: usize,
    pub section: SectionConfig,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self { max_growth: 24, section: SectionConfig::default() }
    }
}

/// One window of the growth sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRecord {
    pub window: Window,
    pub boundary_mass: f64,
    /// `sum <x>^(2k) |f_x|^2` over the outer half of the window.
    pub weighted_tail: f64,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSolution {
    pub window: Window,
    pub values: Vec<Complex64>,
    pub certificate: SolveCertificate,
    pub history: Vec<GrowthRecord>,
}

impl ResolventSolution {
    pub fn value(&self, x: i64) -> Complex64 {
        self.window.index(x).map(|i| self.values[i]).unwrap_or(ZERO)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResolventError {
    #[error("right-hand side has empty support")]
    EmptyRhs,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("no convergence after {steps} window doublings (boundary mass {:e})", last.boundary_mass)]
    NotConverged { steps: usize, last: SolveCertificate, history: Vec<GrowthRecord> },
    #[error("section failure after {steps} window doublings: {source}")]
    Section {
        steps: usize,
        source: SectionError,
        last: Option<SolveCertificate>,
    },
}

/// Solves `(I - s i A) f = g` on growing windows until the outer half of the
/// window carries less than `tol^2` of `|f|^2` and the `<x>^(2k)`-weighted
/// outer mass is zero or smaller than on the previous window.
pub fn adaptive_resolvent(
    spec: &OperatorSpec,
    g: &SparseVector,
    shift: Shift,
    tol: f64,
    k: u32,
) -> Result<ResolventSolution, ResolventError> {
    adaptive_resolvent_with(spec, g, shift, tol, k, &AdaptiveConfig::default())
}

pub fn adaptive_resolvent_with(
    spec: &OperatorSpec,
    g: &SparseVector,
    shift: Shift,
    tol: f64,
    k: u32,
    config: &AdaptiveConfig,
) -> Result<ResolventSolution, ResolventError> {
    if !(tol > 0.0) {
        return Err(ResolventError::Parameter(format!("tol must be positive, got {tol}")));
    }
    if k < 1 {
        return Err(ResolventError::Parameter("k must be >= 1".into()));
    }
    let (smin, smax) = g.support_hull().ok_or(ResolventError::EmptyRhs)?;
    let profile = spec.profile();
    let mut window = Window {
        lo: smin - profile.lower_width(smin),
        hi: smax + profile.lower_width(smax),
    };
    let mut history: Vec<GrowthRecord> = Vec::new();
    let mut last: Option<SolveCertificate> = None;
    let weight_exp = 2.0 * f64::from(k);

    for step in 0..=config.max_growth {
        let section = build_section_with(spec, window, &config.section)
            .map_err(|source| ResolventError::Section { steps: step, source, last: last.clone() })?;
        let rhs = g.on_window(window);
        let (values, mut certificate) = solve_shifted(&section, shift, &rhs)
            .map_err(|source| ResolventError::Section { steps: step, source, last: last.clone() })?;
        certificate.growth_steps = step;
        let weighted_tail = window
            .iter()
            .zip(&values)
            .enumerate()
            .filter(|(i, _)| window.is_outer(*i))
            .map(|(_, (x, v))| bracket_pow(x as f64, weight_exp) * v.norm_sqr())
            .sum::<f64>();
        let previous_tail = history.last().map(|r| r.weighted_tail);
        history.push(GrowthRecord {
            window,
            boundary_mass: certificate.boundary_mass,
            weighted_tail,
            residual_norm: certificate.residual_norm,
        });
        let tail_ok = weighted_tail == 0.0 || previous_tail.is_some_and(|p| weighted_tail < p);
        if certificate.boundary_mass < tol * tol && tail_ok {
            return Ok(ResolventSolution { window, values, certificate, history });
        }
        last = Some(certificate);
        window = window.doubled();
    }
    Err(ResolventError::NotConverged {
        steps: config.max_growth,
        last: last.expect("at least one solve ran"),
        history,
    })
}
