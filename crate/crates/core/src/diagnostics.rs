//! Numerical checks of the weighted a-priori estimate for `(I - s i A) f = g`.
//!
//! The weight `t_x` is `<X>^k` inside `|x| < X`, `<x>^k` on the ramp
//! `X <= |x| <= Y` and `<Y>^k` beyond. Commuting it through `A` produces the
//! form `<Tf, [T, A] f>`, which is bounded by the Young split `I1 + I2`; both
//! halves are at most `delta/2 ||Tf||^2` once the weighted row sums are small
//! beyond `X_bar = X - c_n <X>^gamma`. Everything here evaluates those
//! quantities on finite sections and sampled rows; nothing is symbolic.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::operator::{bracket_pow, BandProfile, OperatorSpec};
use crate::section::{BandedSection, Shift, SparseVector, Window};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("weight exponent k must be positive and finite, got {0}")]
    Exponent(f64),
    #[error("weight plateau X must be positive, got {0}")]
    Plateau(f64),
    #[error("weight cap Y must exceed X (X = {x}, Y = {y})")]
    Cap { x: f64, y: f64 },
    #[error("working margin delta must lie in (0, 1), got {0}")]
    Delta(f64),
    #[error("vector of length {got} does not match window width {expected}")]
    Length { expected: usize, got: usize },
}

/// Clamped polynomial weight `t_x` with parameters `(k, X, Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightProfile {
    k: f64,
    plateau: f64,
    cap: f64,
}

impl WeightProfile {
    pub fn new(k: f64, plateau: f64, cap: f64) -> Result<Self, DiagnosticsError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(DiagnosticsError::Exponent(k));
        }
        if !(plateau > 0.0) {
            return Err(DiagnosticsError::Plateau(plateau));
        }
        if !(cap > plateau) || !cap.is_finite() {
            return Err(DiagnosticsError::Cap { x: plateau, y: cap });
        }
        Ok(Self { k, plateau, cap })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `X`
    pub fn plateau(&self) -> f64 {
        self.plateau
    }

    /// `Y`
    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn weight(&self, x: i64) -> f64 {
        let ax = (x as f64).abs();
        if ax < self.plateau {
            bracket_pow(self.plateau, self.k)
        } else if ax <= self.cap {
            bracket_pow(ax, self.k)
        } else {
            bracket_pow(self.cap, self.k)
        }
    }

    /// Same profile with a different cap `Y`.
    pub fn with_cap(&self, cap: f64) -> Result<Self, DiagnosticsError> {
        Self::new(self.k, self.plateau, cap)
    }
}

pub fn weight_values(profile: &WeightProfile, range: Window) -> Vec<(i64, f64)> {
    range.iter().map(|x| (x, profile.weight(x))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzViolation {
    pub x: i64,
    pub y: i64,
    pub weight_gap: f64,
    pub envelope_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub pairs_checked: u64,
    /// Smallest `|<x>^k - <y>^k| - |t_x - t_y|` over the checked pairs.
    pub min_slack: f64,
    /// Largest slack over the checked pairs.
    pub max_slack: f64,
    pub violations: Vec<LipschitzViolation>,
}

/// Checks `|t_x - t_y| <= |<x>^k - <y>^k|` for `x, y` in `range` with `|x - y| <= bandwidth`.
pub fn check_weight_lipschitz(profile: &WeightProfile, range: Window, bandwidth: i64) -> LipschitzReport {
    let mut report = LipschitzReport {
        pairs_checked: 0,
        min_slack: f64::INFINITY,
        max_slack: f64::NEG_INFINITY,
        violations: Vec::new(),
    };
    for x in range.iter() {
        let tx = profile.weight(x);
        let ex = bracket_pow(x as f64, profile.k);
        for y in (x - bandwidth).max(range.lo)..=(x + bandwidth).min(range.hi) {
            let weight_gap = (tx - profile.weight(y)).abs();
            let envelope_gap = (ex - bracket_pow(y as f64, profile.k)).abs();
            let slack = envelope_gap - weight_gap;
            report.pairs_checked += 1;
            report.min_slack = report.min_slack.min(slack);
            report.max_slack = report.max_slack.max(slack);
            if weight_gap > envelope_gap {
                report.violations.push(LipschitzViolation { x, y, weight_gap, envelope_gap });
            }
        }
    }
    report
}

/// Constants tying the weight to `<x>^k` near the ramp.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeConstants {
    pub c_n: f64,
    /// `(c_n + 1)^(k/2)`
    pub c_n_plus_one_pow: f64,
    /// `max(t_x / <x>^k, <x>^k / t_x)` over the extended range of `|x|`.
    pub c_star: f64,
    /// `X - c_n <X>^gamma`
    pub x_bar: f64,
    /// `Y + c_n <Y>^gamma`
    pub y_bar: f64,
    /// Integer range of `|x|` over which `c_star` is taken.
    pub extended: (i64, i64),
    /// Largest `<x>^k / t_x` for `x_bar <= |x| <= y_bar`.
    pub gauge_ratio: f64,
    /// Witness `|x|` when `gauge_ratio` exceeds `c_n_plus_one_pow`.
    pub gauge_witness: Option<i64>,
}

impl GaugeConstants {
    pub fn gauge_holds(&self) -> bool {
        self.gauge_witness.is_none()
    }
}

pub fn gauge_constants(weight: &WeightProfile, band: &BandProfile) -> GaugeConstants {
    let c_n = band.c_n();
    let g = band.gamma();
    let k = weight.k;
    let x_bar = weight.plateau - c_n * bracket_pow(weight.plateau, g);
    let y_bar = weight.cap + c_n * bracket_pow(weight.cap, g);
    let ext_lo = x_bar - c_n * bracket_pow(x_bar, g);
    let ext_hi = y_bar + c_n * bracket_pow(y_bar, g);
    let lo = ext_lo.ceil().max(0.0) as i64;
    let hi = ext_hi.floor() as i64;

    // t_x / <x>^k decreases in |x| below the ramp and <x>^k / t_x increases
    // above it, so the extremes sit at the range ends.
    let ratio = |x: i64| weight.weight(x) / bracket_pow(x as f64, k);
    let c_star = [1.0, ratio(lo), 1.0 / ratio(hi)].into_iter().fold(1.0, f64::max);

    let c_n_plus_one_pow = (c_n + 1.0).powf(0.5 * k);
    let gauge_lo = x_bar.ceil().max(0.0) as i64;
    let gauge_hi = (y_bar.floor() as i64).max(gauge_lo);
    let gauge_ratio = [gauge_lo, gauge_hi]
        .into_iter()
        .map(|x| 1.0 / ratio(x))
        .fold(f64::NEG_INFINITY, f64::max);
    let gauge_witness = if gauge_ratio > c_n_plus_one_pow {
        Some(if 1.0 / ratio(gauge_hi) >= 1.0 / ratio(gauge_lo) { gauge_hi } else { gauge_lo })
    } else {
        None
    };
    GaugeConstants {
        c_n,
        c_n_plus_one_pow,
        c_star,
        x_bar,
        y_bar,
        extended: (lo, hi),
        gauge_ratio,
        gauge_witness,
    }
}

/// The two weighted row sums of row `x`:
/// `s1 = sum_y |a_xy| |<y>^k/<x>^k - 1|` and
/// `s2 = sum_y |a_xy| (<y>^k/<x>^k) |<y>^k/<x>^k - 1|`.
pub fn weighted_row_sums(spec: &OperatorSpec, k: f64, x: i64) -> (f64, f64) {
    let (first, last) = spec.row_support(x);
    let ex = bracket_pow(x as f64, k);
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for y in first..=last {
        let a = spec.entry(x, y).norm();
        if a == 0.0 {
            continue;
        }
        let q = bracket_pow(y as f64, k) / ex;
        s1 += a * (q - 1.0).abs();
        s2 += a * q * (q - 1.0).abs();
    }
    (s1, s2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallnessConfig {
    /// Largest row index probed.
    pub horizon: i64,
    /// Cap `Y = cap_factor * X` for each candidate `X`.
    pub cap_factor: f64,
    /// Every `|x|` up to this value is sampled; beyond it the grid is geometric.
    pub dense_limit: i64,
    /// Points per doubling on the geometric part of the grid.
    pub per_octave: u32,
    /// Rows in `[X_bar, Y_bar]` above which the exhaustive confirmation is skipped.
    pub confirm_limit: i64,
}

impl SmallnessConfig {
    pub fn with_horizon(horizon: i64) -> Self {
        Self { horizon, ..Self::default() }
    }
}

impl Default for SmallnessConfig {
    fn default() -> Self {
        Self {
            horizon: 10_000,
            cap_factor: 2.0,
            dense_limit: 2048,
            per_octave: 64,
            confirm_limit: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowSample {
    pub x: i64,
    pub s1: f64,
    pub s2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallnessFound {
    /// `X`
    pub plateau: f64,
    /// `Y`
    pub cap: f64,
    pub x_bar: f64,
    pub y_bar: f64,
    pub c_star: f64,
    /// `delta / (c_n + 1)^(k/2)`
    pub threshold_i1: f64,
    /// `delta / C_star^3`
    pub threshold_i2: f64,
    /// Smallest `threshold - s` over sampled rows with `|x| >= X_bar`.
    pub margin_i1: f64,
    pub margin_i2: f64,
    /// Whether every integer row in `[X_bar, Y_bar]` (both signs) was confirmed.
    pub confirmed_exhaustively: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SmallnessOutcome {
    Found(SmallnessFound),
    NotFound {
        horizon: i64,
        threshold_i1: f64,
        /// Sampled `(|x|, s1, s2)` profile, largest violations last.
        profile: Vec<RowSample>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallnessReport {
    pub k: f64,
    pub delta: f64,
    pub horizon: i64,
    pub rows_sampled: usize,
    pub outcome: SmallnessOutcome,
}

impl SmallnessReport {
    pub fn found(&self) -> Option<&SmallnessFound> {
        match &self.outcome {
            SmallnessOutcome::Found(f) => Some(f),
            SmallnessOutcome::NotFound { .. } => None,
        }
    }
}

fn sample_grid(config: &SmallnessConfig) -> Vec<i64> {
    let mut grid: Vec<i64> = (0..=config.dense_limit.min(config.horizon)).collect();
    let step = 2f64.powf(1.0 / f64::from(config.per_octave.max(1)));
    let mut v = config.dense_limit as f64;
    while (v as i64) < config.horizon {
        v *= step;
        let x = (v.round() as i64).min(config.horizon);
        if x > *grid.last().unwrap() {
            grid.push(x);
        }
    }
    grid
}

/// Searches the smallest `X` on a geometric ladder such that every sampled row
/// with `|x| >= X_bar` has `s1 < delta/(c_n+1)^(k/2)` and `s2 < delta/C_star^3`,
/// with `Y = cap_factor * X` and `Y_bar` inside the probe horizon.
pub fn weighted_row_smallness(
    spec: &OperatorSpec,
    k: f64,
    delta: f64,
    config: &SmallnessConfig,
) -> Result<SmallnessReport, DiagnosticsError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(DiagnosticsError::Delta(delta));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(DiagnosticsError::Exponent(k));
    }
    let band = *spec.profile();
    let grid = sample_grid(config);
    // Row data for |x| on the grid, worst of the two signs.
    let rows: Vec<RowSample> = grid
        .par_iter()
        .map(|&ax| {
            let (p1, p2) = weighted_row_sums(spec, k, ax);
            let (m1, m2) = weighted_row_sums(spec, k, -ax);
            RowSample { x: ax, s1: p1.max(m1), s2: p2.max(m2) }
        })
        .collect();
    let threshold_i1 = delta / (band.c_n() + 1.0).powf(0.5 * k);

    // Suffix maxima for the "for all |x| >= X_bar" test.
    let mut suffix = vec![(0.0f64, 0.0f64); rows.len() + 1];
    for i in (0..rows.len()).rev() {
        suffix[i] = (suffix[i + 1].0.max(rows[i].s1), suffix[i + 1].1.max(rows[i].s2));
    }

    let ladder_step = 2f64.powf(1.0 / 8.0);
    let mut plateau = 1.0f64;
    while plateau < config.horizon as f64 {
        let weight = WeightProfile::new(k, plateau, config.cap_factor * plateau)?;
        let gauge = gauge_constants(&weight, &band);
        if gauge.y_bar > config.horizon as f64 {
            break;
        }
        let threshold_i2 = delta / gauge.c_star.powi(3);
        let start = rows.partition_point(|r| (r.x as f64) < gauge.x_bar);
        let (max1, max2) = suffix[start];
        if gauge.gauge_holds() && max1 < threshold_i1 && max2 < threshold_i2 {
            let lo = gauge.x_bar.ceil().max(0.0) as i64;
            let hi = gauge.y_bar.floor() as i64;
            let exhaustive = hi - lo < config.confirm_limit;
            let confirmed = !exhaustive
                || (lo..=hi).into_par_iter().all(|ax| {
                    [ax, -ax].into_iter().all(|x| {
                        let (s1, s2) = weighted_row_sums(spec, k, x);
                        s1 < threshold_i1 && s2 < threshold_i2
                    })
                });
            if confirmed {
                return Ok(SmallnessReport {
                    k,
                    delta,
                    horizon: config.horizon,
                    rows_sampled: rows.len(),
                    outcome: SmallnessOutcome::Found(SmallnessFound {
                        plateau,
                        cap: weight.cap,
                        x_bar: gauge.x_bar,
                        y_bar: gauge.y_bar,
                        c_star: gauge.c_star,
                        threshold_i1,
                        threshold_i2,
                        margin_i1: threshold_i1 - max1,
                        margin_i2: threshold_i2 - max2,
                        confirmed_exhaustively: exhaustive,
                    }),
                });
            }
        }
        plateau *= ladder_step;
    }

    let stride = (rows.len() / 64).max(1);
    let profile = rows.iter().step_by(stride).cloned().collect();
    Ok(SmallnessReport {
        k,
        delta,
        horizon: config.horizon,
        rows_sampled: rows.len(),
        outcome: SmallnessOutcome::NotFound { horizon: config.horizon, threshold_i1, profile },
    })
}

/// Young split of the commutator form for one vector on one section.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutatorSplit {
    pub i1: f64,
    pub i2: f64,
    pub delta_margin: f64,
    /// `||Tf||^2` on the window.
    pub weighted_norm_sq: f64,
    /// `sum_x sum_y a_yx (t_x - t_y) t_x f_x conj(f_y)`
    pub bilinear_form: Complex64,
    /// `<Tf, T(Af) - A(Tf)>` assembled from matrix-vector products.
    pub direct_form: Complex64,
    /// `Re(i <Tf, A Tf>)`, zero for Hermitian sections.
    pub symmetric_real_part: f64,
    /// `|<Tf, A Tf>|`
    pub symmetric_magnitude: f64,
    /// `sum_x sum_y |t_x f_x| |a_xy| (t_x + t_y) |f_y|`, the size of the summed
    /// terms and so the scale of cancellation error in every form above.
    pub term_magnitude: f64,
    pub x_bar: f64,
    pub y_bar: f64,
}

impl CommutatorSplit {
    /// `|<Tf, [T, A] f>| <= I1 + I2`, with `rel` slack for rounding.
    pub fn young_bound_holds(&self, rel: f64) -> bool {
        self.direct_form.norm() <= self.i1 + self.i2 + rel * self.term_magnitude
    }

    /// Relative gap between the double-sum and matrix-vector assemblies.
    pub fn assembly_gap(&self) -> f64 {
        relative(self.bilinear_form - self.direct_form, self.term_magnitude)
    }

    /// `Re(i <Tf, A Tf>)` relative to the term magnitude.
    pub fn symmetric_gap(&self) -> f64 {
        relative(Complex64::new(self.symmetric_real_part, 0.0), self.term_magnitude)
    }

    /// `I1 <= delta/2 ||Tf||^2 + slack ||Tf||^2`
    pub fn i1_bound_holds(&self, slack: f64) -> bool {
        self.i1 <= (0.5 * self.delta_margin + slack) * self.weighted_norm_sq
    }

    pub fn i2_bound_holds(&self, slack: f64) -> bool {
        self.i2 <= (0.5 * self.delta_margin + slack) * self.weighted_norm_sq
    }
}

fn relative(err: Complex64, scale: f64) -> f64 {
    if scale == 0.0 {
        err.norm()
    } else {
        err.norm() / scale
    }
}

pub fn commutator_split(
    section: &BandedSection,
    f: &[Complex64],
    weight: &WeightProfile,
    band: &BandProfile,
    delta: f64,
) -> Result<CommutatorSplit, DiagnosticsError> {
    let n = section.dim();
    if f.len() != n {
        return Err(DiagnosticsError::Length { expected: n, got: f.len() });
    }
    let window = section.window();
    let t: Vec<f64> = window.iter().map(|x| weight.weight(x)).collect();

    let mut i1 = 0.0;
    let mut i2 = 0.0;
    let mut bilinear = ZERO;
    let mut terms = 0.0;
    for x in 0..n {
        for y in section.row_columns(x) {
            let a = section.get(x, y);
            if a != ZERO {
                terms += t[x] * f[x].norm() * a.norm() * (t[x] + t[y]) * f[y].norm();
                let mass = a.norm() * t[x] * (t[y] - t[x]).abs();
                i1 += mass * f[x].norm_sqr();
                i2 += mass * f[y].norm_sqr();
            }
            let a_yx = section.get(y, x);
            if a_yx != ZERO {
                bilinear += a_yx * (t[x] - t[y]) * t[x] * f[x] * f[y].conj();
            }
        }
    }
    i1 *= 0.5;
    i2 *= 0.5;

    let tf: Vec<Complex64> = f.iter().zip(&t).map(|(v, w)| v * w).collect();
    let af = section.matvec(f);
    let atf = section.matvec(&tf);
    let commutator: Vec<Complex64> = af.iter().zip(&t).zip(&atf).map(|((a, w), b)| a * w - b).collect();
    let direct_form: Complex64 = tf.iter().zip(&commutator).map(|(u, h)| u * h.conj()).sum();
    let symmetric: Complex64 = tf.iter().zip(&atf).map(|(u, h)| u * h.conj()).sum();
    let weighted_norm_sq = tf.iter().map(|z| z.norm_sqr()).sum();

    let g = band.gamma();
    let c_n = band.c_n();
    Ok(CommutatorSplit {
        i1,
        i2,
        delta_margin: delta,
        weighted_norm_sq,
        bilinear_form: bilinear,
        direct_form,
        symmetric_real_part: (Complex64::i() * symmetric).re,
        symmetric_magnitude: symmetric.norm(),
        term_magnitude: terms,
        x_bar: weight.plateau - c_n * bracket_pow(weight.plateau, g),
        y_bar: weight.cap + c_n * bracket_pow(weight.cap, g),
    })
}

/// Residual of `||Tf||^2 - s Im<Tf, [T,A] f> = Re<Tf, Tg>` for a solve of
/// `(I - s i A) f = g` on `section`, relative to `||Tf||^2`.
pub fn energy_identity_residual(
    section: &BandedSection,
    shift: Shift,
    f: &[Complex64],
    g: &[Complex64],
    weight: &WeightProfile,
) -> Result<f64, DiagnosticsError> {
    let n = section.dim();
    for len in [f.len(), g.len()] {
        if len != n {
            return Err(DiagnosticsError::Length { expected: n, got: len });
        }
    }
    let split = commutator_split(section, f, weight, &BandProfile::jacobi(), 0.5)?;
    let t: Vec<f64> = section.window().iter().map(|x| weight.weight(x)).collect();
    let cross: Complex64 = (0..n).map(|i| (f[i] * t[i]) * (g[i] * t[i]).conj()).sum();
    let lhs = split.weighted_norm_sq - shift.sign() * split.direct_form.im;
    Ok((lhs - cross.re).abs() / split.weighted_norm_sq.max(f64::MIN_POSITIVE))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AprioriRung {
    pub cap: f64,
    pub weighted_solution: f64,
    pub weighted_rhs: f64,
    /// `||Tf|| / ||Tg||`
    pub ratio: f64,
    /// `1 / (1 - delta)`
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AprioriReport {
    pub k: f64,
    pub plateau: f64,
    pub delta: f64,
    pub rungs: Vec<AprioriRung>,
}

impl AprioriReport {
    pub fn passed(&self) -> bool {
        !self.rungs.is_empty() && self.rungs.iter().all(|r| r.passed)
    }

    pub fn worst_ratio(&self) -> f64 {
        self.rungs.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }
}

/// Checks `||Tf|| <= ||Tg|| / (1 - delta)` for each cap `Y` in `caps`, with
/// `f` given on `window` and `g` compactly supported.
pub fn apriori_bound_check(
    window: Window,
    f: &[Complex64],
    g: &SparseVector,
    k: f64,
    plateau: f64,
    delta: f64,
    caps: &[f64],
) -> Result<AprioriReport, DiagnosticsError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(DiagnosticsError::Delta(delta));
    }
    if f.len() != window.width() {
        return Err(DiagnosticsError::Length { expected: window.width(), got: f.len() });
    }
    let bound = 1.0 / (1.0 - delta);
    let mut rungs = Vec::with_capacity(caps.len());
    for &cap in caps {
        let weight = WeightProfile::new(k, plateau, cap)?;
        let weighted_solution = window
            .iter()
            .zip(f)
            .map(|(x, v)| (weight.weight(x) * v.norm()).powi(2))
            .sum::<f64>()
            .sqrt();
        let weighted_rhs = g
            .iter()
            .map(|(x, v)| (weight.weight(x) * v.norm()).powi(2))
            .sum::<f64>()
            .sqrt();
        let ratio = weighted_solution / weighted_rhs;
        rungs.push(AprioriRung {
            cap,
            weighted_solution,
            weighted_rhs,
            ratio,
            bound,
            passed: weighted_solution <= weighted_rhs * bound,
        });
    }
    Ok(AprioriReport { k, plateau, delta, rungs })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketSweep {
    pub n: u32,
    pub k0: f64,
    pub horizon: i64,
    /// The constant `C` being tested.
    pub constant: f64,
    /// `sup <x> |(<x+m>/<x>)^k0 - 1|` over `1 <= |x| <= horizon`, `|m| <= n`.
    pub required: f64,
    pub witness: (i64, i64),
}

impl BracketSweep {
    pub fn passed(&self) -> bool {
        self.required <= self.constant
    }
}

/// Sweeps `|(<x+m>/<x>)^k0 - 1| <= C / <x>` with `C = 3 k0 n`.
pub fn bracket_ratio_sweep(n: u32, k0: f64, horizon: i64) -> BracketSweep {
    let nn = i64::from(n);
    let (required, witness) = (1..=horizon)
        .into_par_iter()
        .flat_map_iter(|ax| [ax, -ax])
        .map(|x| {
            let bx = bracket_pow(x as f64, 1.0);
            let ex = bracket_pow(x as f64, k0);
            (-nn..=nn)
                .map(|m| (bx * (bracket_pow((x + m) as f64, k0) / ex - 1.0).abs(), (x, m)))
                .fold((0.0, (x, 0)), |a, b| if b.0 > a.0 { b } else { a })
        })
        .reduce(|| (0.0, (0, 0)), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 > a.1) { b } else { a });
    BracketSweep { n, k0, horizon, constant: 3.0 * k0 * f64::from(n), required, witness }
}
