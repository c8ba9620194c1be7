//! Limit-point / limit-circle probe for one-sided Jacobi matrices.
//!
//! Rows `x <= 0` vanish, so a solution of `A u = +-i u` has `u_x = 0` for
//! `x <= 0` and is fixed up to scale by `u_1`. The forward recurrence
//!
//! ```text
//! u_{x+1} = ((+-i - a_xx) u_x - a_{x,x-1} u_{x-1}) / a_{x,x+1}
//! ```
//!
//! generates it. Square-summability is read off the power-law decay of
//! `|u_x|`, fitted separately on even and odd `x`.
//!
//! With frozen coefficients the growing mode gains `ln|rho_x|` per step, where
//! `rho_x` is the larger root of `|b| rho^2 - (+-i - a_xx) rho + |b| = 0`,
//! `b = a_{x,x+1}`. For `b_x = x^delta` this drift is about
//! `sum_j 1/(2 j^delta)`: convergent only for `delta > 1`, and so slowly near
//! 1 that it bends the log-log slope over any practical window. The fit is
//! taken after subtracting the accumulated drift.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::operator::OperatorSpec;
use crate::section::Shift;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Magnitudes outside `[1/RESCALE, RESCALE]` are folded into the log scale.
const RESCALE: f64 = 1e150;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeficiencyError {
    #[error("x_max must be at least 100, got {0}")]
    HorizonTooSmall(i64),
    #[error("defect recurrence needs a Jacobi profile (n = 1, gamma = 0)")]
    NotJacobi,
    #[error("row {x} of a one-sided matrix must vanish, found a({x}, {y}) = {value}")]
    NotOneSided { x: i64, y: i64, value: Complex64 },
    #[error("off-diagonal a({x}, {}) vanishes; the recurrence cannot continue", x + 1)]
    ZeroOffDiagonal { x: i64 },
    #[error("margin must be in [0, 1), got {0}")]
    Margin(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Summability {
    SquareSummable,
    Divergent,
    Borderline,
}

impl Summability {
    /// Classifies from the decay exponent `p` of `|u_x| ~ x^(-p)`.
    pub fn from_exponent(p: f64, margin: f64) -> Self {
        if 2.0 * p > 1.0 + margin {
            Self::SquareSummable
        } else if 2.0 * p < 1.0 - margin {
            Self::Divergent
        } else {
            Self::Borderline
        }
    }
}

/// Solution of the defect equation on `x = 1..=x_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectSolution {
    pub shift: Shift,
    pub x_max: i64,
    /// `u_x = mantissa[x-1] * exp(log_scale[x-1])`.
    mantissa: Vec<Complex64>,
    log_scale: Vec<f64>,
    /// `S_m = sum_{x <= m} |u_x|^2`.
    pub partial_sums: Vec<f64>,
    /// Fitted `p` in `|u_x| ~ x^(-p) exp(D_x)`, mean of the two parity classes.
    pub decay_exponent: f64,
    pub parity_exponents: [f64; 2],
    /// Slope fitted to `ln|u_x|` alone.
    pub raw_exponent: f64,
    /// `D_hi - D_lo` across the fit window.
    pub drift_increment: f64,
    pub fit_window: (i64, i64),
    pub classification: Summability,
}

impl DefectSolution {
    /// `u_x` as a plain complex number; `None` outside `[1, x_max]` or when
    /// the value leaves double range.
    pub fn value(&self, x: i64) -> Option<Complex64> {
        let i = self.slot(x)?;
        let v = self.mantissa[i] * self.log_scale[i].exp();
        v.is_finite().then_some(v)
    }

    /// `(ln |u_x|, arg u_x)`, defined wherever `u_x != 0`.
    pub fn log_polar(&self, x: i64) -> Option<(f64, f64)> {
        let i = self.slot(x)?;
        let m = self.mantissa[i];
        (m != ZERO).then(|| (m.norm().ln() + self.log_scale[i], m.arg()))
    }

    fn slot(&self, x: i64) -> Option<usize> {
        (1..=self.x_max).contains(&x).then(|| (x - 1) as usize)
    }

    /// `S_{x_max} - S_{x_max/2}`.
    pub fn partial_sum_tail(&self) -> f64 {
        let last = *self.partial_sums.last().expect("x_max >= 100");
        last - self.partial_sums[(self.x_max / 2 - 1) as usize]
    }

    /// `u_{x-1}, u_x, u_{x+1}` on the scale of `u_x`.
    fn triple(&self, x: i64) -> Option<[Complex64; 3]> {
        let i = self.slot(x)?;
        let s = self.log_scale[i];
        let at = |j: Option<usize>| match j {
            Some(j) => self.mantissa[j] * (self.log_scale[j] - s).exp(),
            None => ZERO,
        };
        let prev = if x == 1 { None } else { Some(i - 1) };
        let next = self.slot(x + 1)?;
        Some([at(prev), self.mantissa[i], at(Some(next))])
    }
}

fn check_one_sided(spec: &OperatorSpec) -> Result<(), DeficiencyError> {
    let profile = spec.profile();
    if profile.n() != 1 || profile.gamma() != 0.0 {
        return Err(DeficiencyError::NotJacobi);
    }
    for x in -4..=0 {
        for y in x - 2..=x + 2 {
            let value = spec.entry(x, y);
            if value != ZERO {
                return Err(DeficiencyError::NotOneSided { x, y, value });
            }
        }
    }
    Ok(())
}

/// Least-squares slope of `ln|u_x| - drift[x-1]` against `ln x` on one parity class.
fn parity_slope(sol: &DefectSolution, drift: &[f64], lo: i64, hi: i64, parity: i64) -> f64 {
    let pts: Vec<(f64, f64)> = (lo..=hi)
        .filter(|x| x.rem_euclid(2) == parity)
        .filter_map(|x| sol.log_polar(x).map(|(l, _)| ((x as f64).ln(), l - drift[(x - 1) as usize])))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Default summability margin.
pub const DEFAULT_MARGIN: f64 = 0.1;

/// Largest drift increment over the fit window that still allows a
/// square-summable verdict.
pub const DRIFT_LIMIT: f64 = 1.0;

/// `ln|rho|` for the larger root of `b rho^2 - c rho + b = 0`.
fn step_growth(b: f64, c: Complex64) -> f64 {
    let s = (c * c - 4.0 * b * b).sqrt();
    let r1 = ((c + s) / (2.0 * b)).norm();
    let r2 = ((c - s) / (2.0 * b)).norm();
    r1.max(r2).ln()
}

pub fn defect_recurrence(spec: &OperatorSpec, x_max: i64, shift: Shift) -> Result<DefectSolution, DeficiencyError> {
    defect_recurrence_with(spec, x_max, shift, Complex64::new(1.0, 0.0), DEFAULT_MARGIN)
}

/// Runs the recurrence with `u_1 = start`.
pub fn defect_recurrence_with(
    spec: &OperatorSpec,
    x_max: i64,
    shift: Shift,
    start: Complex64,
    margin: f64,
) -> Result<DefectSolution, DeficiencyError> {
    if x_max < 100 {
        return Err(DeficiencyError::HorizonTooSmall(x_max));
    }
    if !(0.0..1.0).contains(&margin) {
        return Err(DeficiencyError::Margin(margin));
    }
    check_one_sided(spec)?;
    let eig = Complex64::new(0.0, shift.sign());
    let len = (x_max + 1) as usize;
    let mut mantissa = Vec::with_capacity(len);
    let mut log_scale = Vec::with_capacity(len);
    mantissa.push(start);
    log_scale.push(0.0);
    let (mut prev, mut cur, mut scale) = (ZERO, start, 0.0f64);
    for x in 1..=x_max {
        let up = spec.entry(x, x + 1);
        if up == ZERO {
            return Err(DeficiencyError::ZeroOffDiagonal { x });
        }
        let next = ((eig - spec.entry(x, x)) * cur - spec.entry(x, x - 1) * prev) / up;
        prev = cur;
        cur = next;
        let mag = cur.norm();
        if mag > RESCALE || (mag > 0.0 && mag < 1.0 / RESCALE) {
            prev /= mag;
            cur /= mag;
            scale += mag.ln();
        }
        mantissa.push(cur);
        log_scale.push(scale);
    }
    mantissa.truncate(x_max as usize);
    log_scale.truncate(x_max as usize);

    let mut partial_sums = Vec::with_capacity(x_max as usize);
    let mut acc = 0.0;
    for (m, s) in mantissa.iter().zip(&log_scale) {
        acc += m.norm_sqr() * (2.0 * s).exp();
        partial_sums.push(acc);
    }

    // drift[x-1] = D_x = sum_{j < x} ln|rho_j|
    let mut drift = Vec::with_capacity(x_max as usize);
    let mut d = 0.0;
    for j in 1..=x_max {
        drift.push(d);
        d += step_growth(spec.entry(j, j + 1).norm(), eig - spec.entry(j, j));
    }

    let fit_window = (x_max / 100, x_max);
    let mut sol = DefectSolution {
        shift,
        x_max,
        mantissa,
        log_scale,
        partial_sums,
        decay_exponent: f64::NAN,
        parity_exponents: [f64::NAN; 2],
        raw_exponent: f64::NAN,
        drift_increment: drift[(x_max - 1) as usize] - drift[(fit_window.0 - 1) as usize],
        fit_window,
        classification: Summability::Borderline,
    };
    let flat = vec![0.0; drift.len()];
    let even = -parity_slope(&sol, &drift, fit_window.0, fit_window.1, 0);
    let odd = -parity_slope(&sol, &drift, fit_window.0, fit_window.1, 1);
    sol.parity_exponents = [even, odd];
    sol.decay_exponent = 0.5 * (even + odd);
    sol.raw_exponent = -0.5
        * (parity_slope(&sol, &flat, fit_window.0, fit_window.1, 0)
            + parity_slope(&sol, &flat, fit_window.0, fit_window.1, 1));
    sol.classification = match Summability::from_exponent(sol.decay_exponent, margin) {
        _ if !sol.decay_exponent.is_finite() => Summability::Borderline,
        // the drift has not settled; decay of the power part alone proves nothing
        Summability::SquareSummable if sol.drift_increment > DRIFT_LIMIT => Summability::Borderline,
        c => c,
    };
    // The other branch that vanishes on x <= 0 does not exist, so the
    // recurrence output already spans the defect space.
    Ok(sol)
}

/// Largest relative residual of the rows `1..x_max` of `(A - +-i) u = 0`.
pub fn recurrence_residual(spec: &OperatorSpec, sol: &DefectSolution) -> f64 {
    let eig = Complex64::new(0.0, sol.shift.sign());
    (1..sol.x_max)
        .filter_map(|x| {
            let [prev, cur, next] = sol.triple(x)?;
            let terms = [
                spec.entry(x, x - 1) * prev,
                (spec.entry(x, x) - eig) * cur,
                spec.entry(x, x + 1) * next,
            ];
            let scale: f64 = terms.iter().map(|t| t.norm()).sum();
            let sum: Complex64 = terms.iter().sum();
            Some(if scale == 0.0 { 0.0 } else { sum.norm() / scale })
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectSummary {
    pub shift: Shift,
    pub exponent: f64,
    pub parity_exponents: [f64; 2],
    pub raw_exponent: f64,
    pub drift_increment: f64,
    pub partial_sum_tail: f64,
    pub classification: Summability,
}

impl From<&DefectSolution> for DefectSummary {
    fn from(s: &DefectSolution) -> Self {
        Self {
            shift: s.shift,
            exponent: s.decay_exponent,
            parity_exponents: s.parity_exponents,
            raw_exponent: s.raw_exponent,
            drift_increment: s.drift_increment,
            partial_sum_tail: s.partial_sum_tail(),
            classification: s.classification,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeficiencyReport {
    pub x_max: i64,
    pub plus: DefectSummary,
    pub minus: DefectSummary,
    /// `(n+, n-)`; `None` when either side is borderline.
    pub deficiency_estimate: Option<(u8, u8)>,
    /// Whether the probe agrees with essential self-adjointness; `None` when inconclusive.
    pub esa_consistent: Option<bool>,
}

impl DeficiencyReport {
    pub fn inconclusive(&self) -> bool {
        self.deficiency_estimate.is_none()
    }
}

pub fn classify_deficiency(spec: &OperatorSpec, x_max: i64) -> Result<DeficiencyReport, DeficiencyError> {
    let (plus, minus) = rayon::join(
        || defect_recurrence(spec, x_max, Shift::Plus),
        || defect_recurrence(spec, x_max, Shift::Minus),
    );
    let (plus, minus) = (DefectSummary::from(&plus?), DefectSummary::from(&minus?));
    let index = |c: Summability| match c {
        Summability::SquareSummable => Some(1u8),
        Summability::Divergent => Some(0u8),
        Summability::Borderline => None,
    };
    let deficiency_estimate = index(plus.classification).zip(index(minus.classification));
    let esa_consistent = deficiency_estimate.map(|(p, m)| p == 0 && m == 0);
    Ok(DeficiencyReport { x_max, plus, minus, deficiency_estimate, esa_consistent })
}
