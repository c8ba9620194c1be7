//! Infinite Hermitian matrices indexed by the integers.
//!
//! An [`OperatorSpec`] pairs a [`BandProfile`] `(n, gamma)` with an entry
//! oracle. Built-in families only define the upper triangle `x <= y`; the
//! lower triangle is the conjugate mirror, so they are Hermitian by
//! construction.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `<a> = (1 + a^2)^(1/2)`.
#[inline]
pub fn bracket(a: f64) -> f64 {
    a.hypot(1.0)
}

/// `<a>^2 = 1 + a^2`, exact for integers with `|a| <= 2^26`.
#[inline]
pub fn bracket_sq(a: f64) -> f64 {
    1.0 + a * a
}

/// `<x>^p`, computed through the squared bracket so that integer arguments
/// lose no precision before the power.
#[inline]
pub fn bracket_pow(x: f64, p: f64) -> f64 {
    bracket_sq(x).powf(0.5 * p)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("band multiplier n must be >= 1, got {0}")]
    BandMultiplier(i64),
    #[error("band growth exponent gamma must lie in [0, 1), got {0}")]
    GrowthExponent(f64),
}

/// Band profile `(n, gamma)`: entries `a(x, x+z)` vanish for `z > n <x>^gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandProfile {
    n: u32,
    gamma: f64,
}

impl BandProfile {
    pub fn new(n: i64, gamma: f64) -> Result<Self, ProfileError> {
        if n < 1 || n > u32::MAX as i64 {
            return Err(ProfileError::BandMultiplier(n));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(ProfileError::GrowthExponent(gamma));
        }
        Ok(Self { n: n as u32, gamma })
    }

    /// Nearest-neighbour (Jacobi) profile `n = 1, gamma = 0`.
    pub fn jacobi() -> Self {
        Self { n: 1, gamma: 0.0 }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Lower band constant `c_n = max{2n, 2^((1+gamma/2)/(1-gamma)) n^(1/(1-gamma))}`.
    pub fn c_n(&self) -> f64 {
        let n = f64::from(self.n);
        let g = self.gamma;
        let second = 2f64.powf((1.0 + 0.5 * g) / (1.0 - g)) * n.powf(1.0 / (1.0 - g));
        (2.0 * n).max(second)
    }

    /// Real upper reach `n <x>^gamma` of row `x`.
    pub fn upper_reach(&self, x: i64) -> f64 {
        f64::from(self.n) * bracket_pow(x as f64, self.gamma)
    }

    /// Real lower reach `c_n <x>^gamma` of row `x`.
    pub fn lower_reach(&self, x: i64) -> f64 {
        self.c_n() * bracket_pow(x as f64, self.gamma)
    }

    /// Largest integer offset `z` with `z <= n <x>^gamma`.
    pub fn upper_width(&self, x: i64) -> i64 {
        self.upper_reach(x).floor() as i64
    }

    /// Integer span `ceil(c_n <x>^gamma)` scanned below the diagonal of row `x`.
    pub fn lower_width(&self, x: i64) -> i64 {
        self.lower_reach(x).ceil() as i64
    }
}

/// Upper-triangle entry oracle for user-defined matrices.
///
/// Only queried with `x <= y`; the diagonal must be real for the resulting
/// matrix to be Hermitian.
pub trait EntryOracle: Send + Sync + fmt::Debug {
    fn upper(&self, x: i64, y: i64) -> Complex64;
}

/// Diagonal values of the `diagonal` family.
#[derive(Clone)]
pub enum DiagonalValues {
    Constant(f64),
    Function(Arc<dyn Fn(i64) -> f64 + Send + Sync>),
}

impl DiagonalValues {
    fn at(&self, x: i64) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::Function(f) => f(x),
        }
    }
}

impl fmt::Debug for DiagonalValues {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Self::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// Matrix families understood by the toolkit.
#[derive(Debug, Clone)]
pub enum Family {
    /// One-sided Jacobi matrix with `a(x, x+1) = x^growth_exponent` for `x > 0`.
    Counterexample { growth_exponent: f64 },
    /// `a(x, x+z) = scale <x>^beta` for `1 <= z <= floor(n <x>^gamma)`, zero diagonal.
    PolyGrowthBand { beta: f64, scale: f64 },
    /// Complex Jacobi matrix whose rows all have l1 norm at most one.
    BoundedTest,
    Diagonal(DiagonalValues),
    /// Explicitly listed entries. A pair given in both orders is used as
    /// given; otherwise the missing order is the conjugate mirror.
    Explicit(BTreeMap<(i64, i64), Complex64>),
    /// Entry-wise clamp `chi_N` of real and imaginary parts, restricted to `|x - y| <= N`.
    Truncated { inner: Arc<OperatorSpec>, level: u64 },
    Scaled { inner: Arc<OperatorSpec>, factor: f64 },
    Custom(Arc<dyn EntryOracle>),
}

/// An infinite Hermitian matrix with a declared band profile.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    profile: BandProfile,
    family: Family,
}

impl OperatorSpec {
    pub fn new(profile: BandProfile, family: Family) -> Self {
        Self { profile, family }
    }

    pub fn counterexample(growth_exponent: f64) -> Self {
        Self::new(BandProfile::jacobi(), Family::Counterexample { growth_exponent })
    }

    pub fn poly_growth_band(n: i64, gamma: f64, beta: f64, scale: f64) -> Result<Self, ProfileError> {
        Ok(Self::new(BandProfile::new(n, gamma)?, Family::PolyGrowthBand { beta, scale }))
    }

    pub fn bounded_test() -> Self {
        Self::new(BandProfile::jacobi(), Family::BoundedTest)
    }

    pub fn diagonal(value: f64) -> Self {
        Self::new(BandProfile::jacobi(), Family::Diagonal(DiagonalValues::Constant(value)))
    }

    pub fn diagonal_fn(values: impl Fn(i64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(
            BandProfile::jacobi(),
            Family::Diagonal(DiagonalValues::Function(Arc::new(values))),
        )
    }

    pub fn zero(profile: BandProfile) -> Self {
        Self::new(profile, Family::Explicit(BTreeMap::new()))
    }

    pub fn explicit(profile: BandProfile, entries: impl IntoIterator<Item = ((i64, i64), Complex64)>) -> Self {
        Self::new(profile, Family::Explicit(entries.into_iter().collect()))
    }

    pub fn custom(profile: BandProfile, oracle: Arc<dyn EntryOracle>) -> Self {
        Self::new(profile, Family::Custom(oracle))
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(
            self.profile,
            Family::Scaled { inner: Arc::new(self.clone()), factor },
        )
    }

    pub fn profile(&self) -> &BandProfile {
        &self.profile
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Short family name as used in spec files.
    pub fn family_name(&self) -> &'static str {
        match &self.family {
            Family::Counterexample { .. } => "counterexample",
            Family::PolyGrowthBand { .. } => "poly_growth_band",
            Family::BoundedTest => "bounded_test",
            Family::Diagonal(_) => "diagonal",
            Family::Explicit(map) if map.is_empty() => "zero",
            Family::Explicit(_) => "explicit",
            Family::Truncated { .. } => "truncated",
            Family::Scaled { .. } => "scaled",
            Family::Custom(_) => "custom",
        }
    }

    /// Whether every entry is real (so that the conjugate mirror is a transpose).
    pub fn is_real(&self) -> bool {
        match &self.family {
            Family::Counterexample { .. } | Family::PolyGrowthBand { .. } | Family::Diagonal(_) => true,
            Family::BoundedTest | Family::Custom(_) => false,
            Family::Explicit(map) => map.values().all(|v| v.im == 0.0),
            Family::Truncated { inner, .. } | Family::Scaled { inner, .. } => inner.is_real(),
        }
    }

    /// Matrix entry `a(x, y)`.
    pub fn entry(&self, x: i64, y: i64) -> Complex64 {
        match &self.family {
            Family::Explicit(map) => match map.get(&(x, y)) {
                Some(v) => *v,
                None => map.get(&(y, x)).map(|v| v.conj()).unwrap_or(ZERO),
            },
            Family::Truncated { inner, level } => {
                if x.abs_diff(y) > *level {
                    ZERO
                } else {
                    crate::section::chi_clamp(inner.entry(x, y), *level)
                }
            }
            Family::Scaled { inner, factor } => inner.entry(x, y) * *factor,
            _ => {
                if x <= y {
                    self.upper(x, y)
                } else {
                    self.upper(y, x).conj()
                }
            }
        }
    }

    fn upper(&self, x: i64, y: i64) -> Complex64 {
        let z = y - x;
        match &self.family {
            Family::Counterexample { growth_exponent } => {
                if x > 0 && z == 1 {
                    Complex64::new((x as f64).powf(*growth_exponent), 0.0)
                } else {
                    ZERO
                }
            }
            Family::PolyGrowthBand { beta, scale } => {
                if z >= 1 && z <= self.profile.upper_width(x) {
                    Complex64::new(scale * bracket_pow(x as f64, *beta), 0.0)
                } else {
                    ZERO
                }
            }
            Family::BoundedTest => match z {
                0 => Complex64::new(0.5 * (x as f64).cos(), 0.0),
                1 => Complex64::from_polar(0.25, x as f64),
                _ => ZERO,
            },
            Family::Diagonal(values) => {
                if z == 0 {
                    Complex64::new(values.at(x), 0.0)
                } else {
                    ZERO
                }
            }
            Family::Custom(oracle) => oracle.upper(x, y),
            Family::Explicit(_) | Family::Truncated { .. } | Family::Scaled { .. } => {
                unreachable!("handled in entry")
            }
        }
    }

    /// Inclusive column range `[x - ceil(c_n <x>^gamma), x + floor(n <x>^gamma)]`
    /// that contains every nonzero entry of row `x`.
    pub fn row_support(&self, x: i64) -> (i64, i64) {
        (x - self.profile.lower_width(x), x + self.profile.upper_width(x))
    }
}

/// Inclusive integer interval of row indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndexRange {
    pub lo: i64,
    pub hi: i64,
}

impl IndexRange {
    pub fn new(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi, "empty index range [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn symmetric(radius: i64) -> Self {
        Self::new(-radius, radius)
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NotHermitian,
    UpperBand,
    LowerBand,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub x: i64,
    pub y: i64,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub range: IndexRange,
    pub pairs_checked: u64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

fn collect_rows<F>(range: IndexRange, row: F) -> ValidationReport
where
    F: Fn(i64) -> (u64, Vec<Violation>) + Sync + Send,
{
    let per_row: Vec<(u64, Vec<Violation>)> = range.iter().into_par_iter().map(row).collect();
    let mut pairs_checked = 0;
    let mut violations = Vec::new();
    for (checked, mut found) in per_row {
        pairs_checked += checked;
        violations.append(&mut found);
    }
    ValidationReport { range, pairs_checked, violations }
}

/// Checks `a(x, y) == conj(a(y, x))` bit for bit, for `x` in `range` and
/// `|y - x| <= c_n <x>^gamma`.
pub fn verify_hermitian(spec: &OperatorSpec, range: IndexRange) -> ValidationReport {
    collect_rows(range, |x| {
        let reach = spec.profile().lower_reach(x).floor() as i64;
        let mut found = Vec::new();
        for y in x - reach..=x + reach {
            let a = spec.entry(x, y);
            if a != spec.entry(y, x).conj() {
                found.push(Violation { kind: ViolationKind::NotHermitian, x, y, value: a });
            }
        }
        ((2 * reach + 1) as u64, found)
    })
}

/// Band probe with the default margin of 2.
pub fn verify_band(spec: &OperatorSpec, range: IndexRange) -> ValidationReport {
    verify_band_with_margin(spec, range, 2.0)
}

/// Probes `a(x, x+z) = 0` for `n<x>^gamma < z <= margin c_n <x>^gamma` and
/// `a(x, x-z) = 0` for `c_n<x>^gamma < z <= margin c_n <x>^gamma`.
///
/// An offset exactly equal to the real threshold counts as inside the band.
/// Explicit families additionally have every stored entry in `range` checked.
pub fn verify_band_with_margin(spec: &OperatorSpec, range: IndexRange, margin: f64) -> ValidationReport {
    let profile = *spec.profile();
    let mut report = collect_rows(range, |x| {
        let upper = profile.upper_reach(x);
        let lower = profile.lower_reach(x);
        let outer = (margin * lower).floor() as i64;
        let mut found = Vec::new();
        let mut checked = 0;
        for z in 1..=outer {
            let zf = z as f64;
            if zf > upper {
                checked += 1;
                let a = spec.entry(x, x + z);
                if a != ZERO {
                    found.push(Violation { kind: ViolationKind::UpperBand, x, y: x + z, value: a });
                }
            }
            if zf > lower {
                checked += 1;
                let a = spec.entry(x, x - z);
                if a != ZERO {
                    found.push(Violation { kind: ViolationKind::LowerBand, x, y: x - z, value: a });
                }
            }
        }
        (checked, found)
    });

    if let Family::Explicit(map) = spec.family() {
        for (&(x, y), &value) in map.range((range.lo, i64::MIN)..=(range.hi, i64::MAX)) {
            if value == ZERO {
                continue;
            }
            let z = y - x;
            let (kind, outside) = if z >= 0 {
                (ViolationKind::UpperBand, z as f64 > profile.upper_reach(x))
            } else {
                (ViolationKind::LowerBand, (-z) as f64 > profile.lower_reach(x))
            };
            let already = report.violations.iter().any(|v| v.x == x && v.y == y);
            if outside && !already {
                report.violations.push(Violation { kind, x, y, value });
            }
        }
    }
    report
}
