//! Parameters, drive waveforms, simulation grids and the Bose-Einstein
//! occupation.
//!
//! Natural units throughout: ħ = k_B = 1. Frequencies and rates are measured
//! in units of the undriven resonator frequency ω̄₀, temperatures as
//! k_B T / ħω̄₀ and times in units of 1/ω̄₀. Nothing stops a caller from
//! choosing `omega_bar != 1`; every formula is written dimensionally.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reservoir and coupling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Undriven resonator frequency ω̄₀.
    pub omega_bar: f64,
    /// Reservoir coupling γ.
    pub gamma: f64,
    /// Reservoir temperature k_B T_e.
    #[serde(rename = "T_e")]
    pub t_e: f64,
}

impl SystemParams {
    pub fn new(omega_bar: f64, gamma: f64, t_e: f64) -> Result<Self> {
        let p = SystemParams {
            omega_bar,
            gamma,
            t_e,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_bar.is_finite() && self.omega_bar > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "omega_bar must be positive, got {}",
                self.omega_bar
            )));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be non-negative, got {}",
                self.gamma
            )));
        }
        if !(self.t_e.is_finite() && self.t_e > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "T_e must be positive, got {}",
                self.t_e
            )));
        }
        Ok(())
    }

    /// Non-fatal warnings about the parameter regime.
    pub fn advisories(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.gamma >= self.omega_bar {
            out.push(format!(
                "gamma = {} is not small compared to omega_bar = {}; the weak-coupling master equation may not apply",
                self.gamma, self.omega_bar
            ));
        }
        out
    }

    /// Dimensionless inverse temperature x = ħω̄₀ / k_B T_e.
    pub fn x(&self) -> f64 {
        self.omega_bar / self.t_e
    }

    /// Equilibrium occupation of the undriven resonator.
    pub fn n_bar(&self) -> f64 {
        1.0 / self.x().exp_m1()
    }
}

/// Bose-Einstein occupation 1/(e^{ω/T} − 1).
pub fn bose_einstein(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "bose_einstein: omega must be positive, got {omega}"
        )));
    }
    if !(temperature > 0.0) {
        return Err(Error::Domain(format!(
            "bose_einstein: temperature must be positive, got {temperature}"
        )));
    }
    Ok(occupation(omega / temperature))
}

/// Frequency derivative ∂n_B/∂ω = −n_B(1 + n_B)/T.
pub fn bose_einstein_derivative(omega: f64, temperature: f64) -> Result<f64> {
    let n = bose_einstein(omega, temperature)?;
    Ok(-n * (1.0 + n) / temperature)
}

/// 1/(e^x − 1) without domain checks, for hot loops with validated input.
#[inline]
pub(crate) fn occupation(x: f64) -> f64 {
    1.0 / x.exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveKind {
    Constant,
    Square,
    Sawtooth,
    Harmonic,
    Tabulated,
}

/// Drive section of the configuration document, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub kind: DriveKind,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(default)]
    pub phase: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<[f64; 2]>>,
}

impl DriveConfig {
    pub fn build(&self, omega_bar: f64) -> Result<DriveWaveform> {
        let need_period = || {
            self.period.ok_or_else(|| {
                Error::InvalidConfig(format!("drive kind {:?} requires a period", self.kind))
            })
        };
        match self.kind {
            DriveKind::Constant => DriveWaveform::constant(omega_bar),
            DriveKind::Square => {
                DriveWaveform::square(omega_bar, self.amplitude, need_period()?, self.phase)
            }
            DriveKind::Sawtooth => {
                DriveWaveform::sawtooth(omega_bar, self.amplitude, need_period()?, self.phase)
            }
            DriveKind::Harmonic => {
                DriveWaveform::harmonic(omega_bar, self.amplitude, need_period()?, self.phase)
            }
            DriveKind::Tabulated => {
                let knots = self
                    .knots
                    .as_ref()
                    .ok_or_else(|| Error::InvalidConfig("tabulated drive requires knots".into()))?;
                DriveWaveform::tabulated(knots.iter().map(|k| (k[0], k[1])).collect())
            }
        }
    }
}

/// Closed form of ω₀(t) on one smooth stretch of the drive.
///
/// Each variant is valid on its whole closed stretch, so both one-sided
/// limits at a jump are available exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    Constant(f64),
    Linear {
        t0: f64,
        w0: f64,
        slope: f64,
    },
    Harmonic {
        base: f64,
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
}

impl Piece {
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Piece::Constant(w) => w,
            Piece::Linear { t0, w0, slope } => w0 + slope * (t - t0),
            Piece::Harmonic {
                base,
                amplitude,
                omega,
                phase,
            } => base + amplitude * (omega * t + phase).sin(),
        }
    }

    /// Time derivative ∂t ω₀.
    #[inline]
    pub fn slope(&self, t: f64) -> f64 {
        match *self {
            Piece::Constant(_) => 0.0,
            Piece::Linear { slope, .. } => slope,
            Piece::Harmonic {
                amplitude,
                omega,
                phase,
                ..
            } => amplitude * omega * (omega * t + phase).cos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Constant,
    Square {
        amplitude: f64,
        period: f64,
        phase: f64,
    },
    Sawtooth {
        amplitude: f64,
        period: f64,
        phase: f64,
    },
    Harmonic {
        amplitude: f64,
        period: f64,
        phase: f64,
    },
    Tabulated {
        knots: Vec<(f64, f64)>,
    },
}

/// A point where the closed form of the drive changes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub t: f64,
    /// `true` for a value jump, `false` for a slope kink.
    pub jump: bool,
}

/// Validated, immutable time-dependent resonator frequency ω₀(t).
///
/// Periodic shapes are written as ω₀(t) = ω̄₀ + Δω₀ f(Ωt + φ) with f of
/// period 2π:
/// - square: f = +1 on [0, π), −1 on [π, 2π); right-continuous at jumps;
/// - sawtooth: f(θ) = θ/π − 1 on [0, 2π), resetting from +1 to −1;
/// - harmonic: f = sin.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveWaveform {
    base: f64,
    shape: Shape,
}

impl DriveWaveform {
    pub fn constant(omega_bar: f64) -> Result<Self> {
        Self::checked(omega_bar, Shape::Constant)
    }

    pub fn square(omega_bar: f64, amplitude: f64, period: f64, phase: f64) -> Result<Self> {
        Self::checked(
            omega_bar,
            Shape::Square {
                amplitude,
                period,
                phase,
            },
        )
    }

    pub fn sawtooth(omega_bar: f64, amplitude: f64, period: f64, phase: f64) -> Result<Self> {
        Self::checked(
            omega_bar,
            Shape::Sawtooth {
                amplitude,
                period,
                phase,
            },
        )
    }

    pub fn harmonic(omega_bar: f64, amplitude: f64, period: f64, phase: f64) -> Result<Self> {
        Self::checked(
            omega_bar,
            Shape::Harmonic {
                amplitude,
                period,
                phase,
            },
        )
    }

    /// Piecewise-linear drive through `(t, ω)` knots.
    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        let base = knots.first().map(|k| k.1).unwrap_or(f64::NAN);
        Self::checked(base, Shape::Tabulated { knots })
    }

    fn checked(base: f64, shape: Shape) -> Result<Self> {
        let d = DriveWaveform { base, shape };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if let Shape::Tabulated { knots } = &self.shape {
            if knots.len() < 2 {
                return bad("tabulated drive needs at least two knots".into());
            }
            for w in knots.windows(2) {
                if !(w[1].0 > w[0].0) {
                    return bad(format!(
                        "tabulated knot times must increase strictly ({} then {})",
                        w[0].0, w[1].0
                    ));
                }
            }
            for &(t, w) in knots {
                if !t.is_finite() || !w.is_finite() || w <= 0.0 {
                    return bad(format!(
                        "tabulated knot ({t}, {w}) must be finite with ω > 0"
                    ));
                }
            }
            // Piecewise linear: the minimum sits on a knot.
            return Ok(());
        }
        if !(self.base.is_finite() && self.base > 0.0) {
            return bad(format!("omega_bar must be positive, got {}", self.base));
        }
        if let Some((amplitude, period, phase)) = self.periodic_parts() {
            if !amplitude.is_finite() || !phase.is_finite() {
                return bad("drive amplitude and phase must be finite".into());
            }
            if !(period.is_finite() && period > 0.0) {
                return bad(format!("drive period must be positive, got {period}"));
            }
            if self.base - amplitude.abs() <= 0.0 {
                return bad(format!(
                    "drive reaches non-positive frequency: omega_bar - |amplitude| = {}",
                    self.base - amplitude.abs()
                ));
            }
            // Dense check over one period, both sides of every jump.
            let t0 = self.time_reference();
            let samples = 4096;
            for i in 0..=samples {
                let t = t0 + period * i as f64 / samples as f64;
                if self.piece_at(t)?.value(t) <= 0.0 {
                    return bad(format!("drive frequency non-positive at t = {t}"));
                }
            }
            for bp in self.breakpoints(t0, t0 + period)? {
                let (before, after) = self.one_sided(bp.t)?;
                if before <= 0.0 || after <= 0.0 {
                    return bad(format!("drive frequency non-positive at jump t = {}", bp.t));
                }
            }
        }
        Ok(())
    }

    fn periodic_parts(&self) -> Option<(f64, f64, f64)> {
        match self.shape {
            Shape::Square {
                amplitude,
                period,
                phase,
            }
            | Shape::Sawtooth {
                amplitude,
                period,
                phase,
            }
            | Shape::Harmonic {
                amplitude,
                period,
                phase,
            } => Some((amplitude, period, phase)),
            _ => None,
        }
    }

    pub fn kind(&self) -> DriveKind {
        match self.shape {
            Shape::Constant => DriveKind::Constant,
            Shape::Square { .. } => DriveKind::Square,
            Shape::Sawtooth { .. } => DriveKind::Sawtooth,
            Shape::Harmonic { .. } => DriveKind::Harmonic,
            Shape::Tabulated { .. } => DriveKind::Tabulated,
        }
    }

    /// Undriven frequency ω̄₀ (first knot value for tabulated drives).
    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn amplitude(&self) -> f64 {
        self.periodic_parts().map_or(0.0, |p| p.0)
    }

    /// Drive period τ; `None` for constant and tabulated drives.
    pub fn period(&self) -> Option<f64> {
        self.periodic_parts().map(|p| p.1)
    }

    /// Drive angular frequency Ω = 2π/τ.
    pub fn angular_frequency(&self) -> Option<f64> {
        self.period().map(|tau| 2.0 * PI / tau)
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.shape, Shape::Constant) || self.period().is_some()
    }

    /// Time at which the phase Ωt + φ crosses zero.
    fn time_reference(&self) -> f64 {
        match self.periodic_parts() {
            Some((_, period, phase)) => -phase * period / (2.0 * PI),
            None => 0.0,
        }
    }

    /// Spacing between consecutive jumps, for shapes that have them.
    fn jump_spacing(&self) -> Option<f64> {
        match self.shape {
            Shape::Square { period, .. } => Some(0.5 * period),
            Shape::Sawtooth { period, .. } => Some(period),
            _ => None,
        }
    }

    #[inline]
    fn jump_time(&self, k: i64, spacing: f64) -> f64 {
        self.time_reference() + k as f64 * spacing
    }

    /// Index k with jump_time(k) <= t < jump_time(k + 1), using the same
    /// arithmetic as `discontinuities` so edge times land consistently.
    fn segment_index(&self, t: f64, spacing: f64) -> i64 {
        let mut k = ((t - self.time_reference()) / spacing).floor() as i64;
        while self.jump_time(k + 1, spacing) <= t {
            k += 1;
        }
        while self.jump_time(k, spacing) > t {
            k -= 1;
        }
        k
    }

    /// Closed form valid on the stretch that contains `t`, right-continuous.
    pub fn piece_at(&self, t: f64) -> Result<Piece> {
        let base = self.base;
        Ok(match &self.shape {
            Shape::Constant => Piece::Constant(base),
            Shape::Square { amplitude, .. } => {
                let k = self.segment_index(t, self.jump_spacing().unwrap());
                let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                Piece::Constant(base + sign * amplitude)
            }
            Shape::Sawtooth {
                amplitude, period, ..
            } => {
                let k = self.segment_index(t, *period);
                Piece::Linear {
                    t0: self.jump_time(k, *period),
                    w0: base - amplitude,
                    slope: 2.0 * amplitude / period,
                }
            }
            Shape::Harmonic {
                amplitude,
                period,
                phase,
            } => Piece::Harmonic {
                base,
                amplitude: *amplitude,
                omega: 2.0 * PI / period,
                phase: *phase,
            },
            Shape::Tabulated { knots } => {
                let (lo, hi) = (knots[0].0, knots[knots.len() - 1].0);
                if !(t >= lo && t <= hi) {
                    return Err(Error::OutsideKnots { t, lo, hi });
                }
                let i = match knots.partition_point(|k| k.0 <= t) {
                    0 => 0,
                    i if i >= knots.len() => knots.len() - 2,
                    i => i - 1,
                };
                let (t0, w0) = knots[i];
                let (t1, w1) = knots[i + 1];
                Piece::Linear {
                    t0,
                    w0,
                    slope: (w1 - w0) / (t1 - t0),
                }
            }
        })
    }

    /// Piece used on the stretch immediately before `t`.
    pub fn piece_before(&self, t: f64) -> Result<Piece> {
        match &self.shape {
            Shape::Square { .. } | Shape::Sawtooth { .. } => {
                let spacing = self.jump_spacing().unwrap();
                let k = self.segment_index(t, spacing);
                let at_jump = self.jump_time(k, spacing) == t;
                if !at_jump {
                    return self.piece_at(t);
                }
                // Evaluate the previous stretch by its own start.
                let prev_start = self.jump_time(k - 1, spacing);
                let probe = 0.5 * (prev_start + t);
                self.piece_at(probe)
            }
            Shape::Tabulated { knots } => {
                let i = knots.partition_point(|k| k.0 < t);
                if i >= 1 && i < knots.len() && knots[i].0 == t {
                    self.piece_at(0.5 * (knots[i - 1].0 + t))
                } else {
                    self.piece_at(t)
                }
            }
            _ => self.piece_at(t),
        }
    }

    /// (ω₀(t⁻), ω₀(t⁺)).
    pub fn one_sided(&self, t: f64) -> Result<(f64, f64)> {
        Ok((self.piece_before(t)?.value(t), self.piece_at(t)?.value(t)))
    }

    /// ω₀(t), right-continuous at jumps.
    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.piece_at(t)?.value(t))
    }

    /// ∂t ω₀(t) on the stretch containing `t` (zero-width jumps excluded).
    pub fn slope(&self, t: f64) -> Result<f64> {
        Ok(self.piece_at(t)?.slope(t))
    }

    /// Exact value-jump times in [t0, t1), sorted.
    pub fn discontinuities(&self, t0: f64, t1: f64) -> Vec<f64> {
        let Some(spacing) = self.jump_spacing() else {
            return Vec::new();
        };
        if !(t1 > t0) {
            return Vec::new();
        }
        let mut k = self.segment_index(t0, spacing);
        if self.jump_time(k, spacing) < t0 {
            k += 1;
        }
        let mut out = Vec::new();
        loop {
            let t = self.jump_time(k, spacing);
            if t >= t1 {
                break;
            }
            out.push(t);
            k += 1;
        }
        out
    }

    /// All times in [t0, t1] where the closed form changes: jumps plus
    /// tabulated knots.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Result<Vec<Breakpoint>> {
        let mut out: Vec<Breakpoint> = self
            .discontinuities(t0, t1)
            .into_iter()
            .map(|t| Breakpoint { t, jump: true })
            .collect();
        // Include a jump sitting exactly on t1.
        if let Some(spacing) = self.jump_spacing() {
            let k = self.segment_index(t1, spacing);
            if self.jump_time(k, spacing) == t1 && t1 > t0 {
                out.push(Breakpoint { t: t1, jump: true });
            }
        }
        if let Shape::Tabulated { knots } = &self.shape {
            let (lo, hi) = (knots[0].0, knots[knots.len() - 1].0);
            for t in [t0, t1] {
                if !(t >= lo && t <= hi) {
                    return Err(Error::OutsideKnots { t, lo, hi });
                }
            }
            out.extend(
                knots
                    .iter()
                    .filter(|k| k.0 >= t0 && k.0 <= t1)
                    .map(|k| Breakpoint {
                        t: k.0,
                        jump: false,
                    }),
            );
        }
        Ok(out)
    }
}

/// Time span, integrator step cap and output sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub dt_max: f64,
    pub n_samples: usize,
    /// Whole drive periods of pre-run before `t_start`; `None` selects
    /// max(10/γ, 20τ) rounded up.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relax_periods: Option<u64>,
}

impl SimulationGrid {
    pub fn new(t_start: f64, t_end: f64, dt_max: f64, n_samples: usize) -> Result<Self> {
        let g = SimulationGrid {
            t_start,
            t_end,
            dt_max,
            n_samples,
            relax_periods: None,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_relax_periods(mut self, periods: u64) -> Self {
        self.relax_periods = Some(periods);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_end > self.t_start) {
            return Err(Error::InvalidConfig(format!(
                "grid requires t_end > t_start, got [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "dt_max must be positive, got {}",
                self.dt_max
            )));
        }
        if self.n_samples < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_samples must be at least 2, got {}",
                self.n_samples
            )));
        }
        Ok(())
    }

    /// Uniform sample times with both endpoints hit exactly.
    pub fn sample_times(&self) -> Vec<f64> {
        uniform_times(self.t_start, self.t_end, self.n_samples)
    }
}

pub(crate) fn uniform_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    let last = n - 1;
    (0..n)
        .map(|i| {
            if i == last {
                t1
            } else {
                t0 + (t1 - t0) * (i as f64 / last as f64)
            }
        })
        .collect()
}

/// Full configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub system: SystemParams,
    pub drive: DriveConfig,
    pub grid: SimulationGrid,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.grid.validate()?;
        self.drive.build(self.system.omega_bar)?;
        Ok(())
    }

    pub fn waveform(&self) -> Result<DriveWaveform> {
        self.drive.build(self.system.omega_bar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TAU: f64 = 2.0 * PI / 0.1;

    #[test]
    fn bose_einstein_reference_values() {
        // e^{0.25} = 1.2840254166877414
        let n = bose_einstein(1.0, 4.0).unwrap();
        assert!((n - 1.0 / (1.2840254166877414 - 1.0)).abs() < 1e-12);
        assert!((n - 3.520812).abs() < 1e-6);
        assert_eq!(bose_einstein(1.0, 1e-4).unwrap(), 0.0);
        let one = bose_einstein(1.0, 1.0 / 2f64.ln()).unwrap();
        assert!((one - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bose_einstein_domain() {
        assert!(matches!(bose_einstein(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(bose_einstein(1.0, -1.0), Err(Error::Domain(_))));
        assert!(bose_einstein(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn detailed_balance_identity() {
        for &w in &[0.1, 0.5, 1.0, 2.0, 7.0] {
            for &t in &[0.2, 1.0, 1.5, 4.0, 30.0] {
                let n = bose_einstein(w, t).unwrap();
                let lhs = n / (1.0 + n);
                let rhs = (-w / t).exp();
                assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs, "{w} {t}");
            }
        }
    }

    #[test]
    fn bose_einstein_monotone() {
        let a = bose_einstein(1.0, 1.5).unwrap();
        assert!(bose_einstein(1.1, 1.5).unwrap() < a);
        assert!(bose_einstein(1.0, 1.6).unwrap() > a);
        let d = bose_einstein_derivative(1.0, 1.5).unwrap();
        let h = 1e-6;
        let fd = (bose_einstein(1.0 + h, 1.5).unwrap() - bose_einstein(1.0 - h, 1.5).unwrap())
            / (2.0 * h);
        assert!((d - fd).abs() < 1e-8);
    }

    #[test]
    fn harmonic_at_origin() {
        let d = DriveWaveform::harmonic(1.0, 0.1, TAU, 0.0).unwrap();
        assert_eq!(d.eval(0.0).unwrap(), 1.0);
        assert!((d.angular_frequency().unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn constant_drive() {
        let d = DriveWaveform::constant(1.0).unwrap();
        for t in [-3.0, 0.0, 17.5] {
            assert_eq!(d.eval(t).unwrap(), 1.0);
            assert_eq!(d.slope(t).unwrap(), 0.0);
        }
        assert!(d.discontinuities(0.0, 100.0).is_empty());
    }

    #[test]
    fn square_quarter_points_alternate() {
        let d = DriveWaveform::square(1.0, 0.7, TAU, 0.0).unwrap();
        for k in 0..8 {
            let t = (2 * k + 1) as f64 * TAU / 4.0;
            let expect = if k % 2 == 0 { 1.7 } else { 0.3 };
            assert!((d.eval(t).unwrap() - expect).abs() < 1e-15, "k = {k}");
        }
    }

    #[test]
    fn square_is_right_continuous() {
        let d = DriveWaveform::square(1.0, 0.7, TAU, 0.0).unwrap();
        let jumps = d.discontinuities(0.0, TAU);
        assert_eq!(jumps, vec![0.0, TAU / 2.0]);
        assert!((d.eval(jumps[0]).unwrap() - 1.7).abs() < 1e-15);
        assert!((d.eval(jumps[1]).unwrap() - 0.3).abs() < 1e-15);
        let (before, after) = d.one_sided(jumps[1]).unwrap();
        assert!((before - 1.7).abs() < 1e-15 && (after - 0.3).abs() < 1e-15);
    }

    #[test]
    fn sawtooth_resets() {
        let d = DriveWaveform::sawtooth(1.0, 0.7, TAU, 0.0).unwrap();
        assert_eq!(d.discontinuities(0.0, 2.0 * TAU), vec![0.0, TAU]);
        let (before, after) = d.one_sided(TAU).unwrap();
        assert!((before - 1.7).abs() < 1e-12);
        assert!((after - 0.3).abs() < 1e-12);
        assert!((d.eval(0.5 * TAU).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn smooth_drives_have_no_jumps() {
        let h = DriveWaveform::harmonic(1.0, 0.7, TAU, 0.3).unwrap();
        assert!(h.discontinuities(-100.0, 1000.0).is_empty());
    }

    #[test]
    fn phase_shifts_jumps() {
        let d = DriveWaveform::square(1.0, 0.2, 10.0, PI / 2.0).unwrap();
        // Ωt + φ = 0 at t = -2.5.
        assert_eq!(d.discontinuities(0.0, 10.0), vec![2.5, 7.5]);
    }

    #[test]
    fn drive_rejects_nonpositive_frequency() {
        assert!(DriveWaveform::harmonic(1.0, 1.0, TAU, 0.0).is_err());
        assert!(DriveWaveform::square(1.0, -1.2, TAU, 0.0).is_err());
        assert!(DriveWaveform::tabulated(vec![(0.0, 1.0), (1.0, -0.1)]).is_err());
        assert!(DriveWaveform::tabulated(vec![(0.0, 1.0), (0.0, 1.1)]).is_err());
        assert!(DriveWaveform::harmonic(1.0, 0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn tabulated_interpolates_and_bounds() {
        let d = DriveWaveform::tabulated(vec![(0.0, 1.0), (2.0, 2.0), (3.0, 1.0)]).unwrap();
        assert!((d.eval(1.0).unwrap() - 1.5).abs() < 1e-15);
        assert!((d.eval(2.5).unwrap() - 1.5).abs() < 1e-15);
        assert!((d.eval(3.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(d.eval(3.5), Err(Error::OutsideKnots { .. })));
        assert!(d.discontinuities(0.0, 3.0).is_empty());
        let kinks = d.breakpoints(0.0, 3.0).unwrap();
        assert!(kinks.iter().all(|b| !b.jump));
        assert_eq!(kinks.len(), 3);
    }

    fn period_mean(d: &DriveWaveform, tau: f64) -> f64 {
        // Midpoint rule; exact for the piecewise-linear shapes when the
        // jumps fall on cell edges.
        let n = 4096;
        (0..n)
            .map(|i| d.eval(tau * (i as f64 + 0.5) / n as f64).unwrap())
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn modulation_has_zero_mean() {
        for d in [
            DriveWaveform::square(1.0, 0.7, TAU, 0.0).unwrap(),
            DriveWaveform::sawtooth(1.0, 0.7, TAU, 0.0).unwrap(),
            DriveWaveform::harmonic(1.0, 0.7, TAU, 0.0).unwrap(),
        ] {
            assert!((period_mean(&d, TAU) - 1.0).abs() < 1e-12, "{:?}", d.kind());
        }
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let text = r#"{"system":{"omega_bar":1,"gamma":0.1,"T_e":1.5,"extra":1},
            "drive":{"kind":"constant"},
            "grid":{"t_start":0,"t_end":1,"dt_max":0.1,"n_samples":3}}"#;
        assert!(matches!(Config::from_json(text), Err(Error::Parse(_))));
        let top = r#"{"system":{"omega_bar":1,"gamma":0.1,"T_e":1.5},
            "drive":{"kind":"constant"}, "oops": 2,
            "grid":{"t_start":0,"t_end":1,"dt_max":0.1,"n_samples":3}}"#;
        assert!(Config::from_json(top).is_err());
    }

    #[test]
    fn weak_coupling_advisory_does_not_reject() {
        let p = SystemParams::new(1.0, 2.0, 1.0).unwrap();
        assert_eq!(p.advisories().len(), 1);
        assert!(SystemParams::new(1.0, 0.05, 1.0)
            .unwrap()
            .advisories()
            .is_empty());
    }

    #[test]
    fn grid_validation() {
        assert!(SimulationGrid::new(1.0, 1.0, 0.1, 10).is_err());
        assert!(SimulationGrid::new(0.0, 1.0, 0.0, 10).is_err());
        assert!(SimulationGrid::new(0.0, 1.0, 0.1, 1).is_err());
        let g = SimulationGrid::new(0.0, 1.0, 0.1, 7).unwrap();
        let t = g.sample_times();
        assert_eq!(t.len(), 7);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[6], 1.0);
    }

    proptest! {
        #[test]
        fn config_roundtrips_exactly(
            omega_bar in 0.1f64..10.0,
            gamma in 0.0f64..0.5,
            t_e in 0.01f64..50.0,
            frac in 0.0f64..0.99,
            period in 0.5f64..500.0,
            phase in -7.0f64..7.0,
            t_end in 0.001f64..1e4,
            dt_max in 1e-4f64..10.0,
            n_samples in 2usize..100_000,
            relax in proptest::option::of(0u64..1000),
            kind in 0usize..4,
        ) {
            let kind = [DriveKind::Constant, DriveKind::Square, DriveKind::Sawtooth, DriveKind::Harmonic][kind];
            let cfg = Config {
                system: SystemParams { omega_bar, gamma, t_e },
                drive: DriveConfig {
                    kind,
                    amplitude: frac * omega_bar,
                    period: Some(period),
                    phase,
                    knots: None,
                },
                grid: SimulationGrid { t_start: -t_end / 3.0, t_end, dt_max, n_samples, relax_periods: relax },
            };
            let back = Config::from_json(&cfg.to_json()).unwrap();
            prop_assert_eq!(back, cfg);
        }

        #[test]
        fn eval_matches_one_sided_away_from_jumps(t in -500.0f64..500.0) {
            let d = DriveWaveform::square(1.0, 0.4, 7.3, 0.9).unwrap();
            let (b, a) = d.one_sided(t).unwrap();
            let jumps = d.discontinuities(t, t + 1e-300_f64.max(f64::EPSILON * t.abs()));
            if jumps.first() != Some(&t) {
                prop_assert_eq!(a, b);
            }
            prop_assert_eq!(a, d.eval(t).unwrap());
        }
    }
}
