//! Closed-form linear response to a small frequency modulation, and the
//! equilibrium (undriven, long-time) counting statistics.
//!
//! Responses are transfer functions per unit drive amplitude: an input
//! Δω₀(t) = Re(A e^{iΩt}) produces ΔX(t) = Re(R(Ω) A e^{iΩt}).

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{bose_einstein, bose_einstein_derivative, SystemParams};
use crate::series::Series;

/// A complex response at drive angular frequency Ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseValue {
    pub omega: f64,
    pub value: Complex64,
}

impl ResponseValue {
    pub fn amplitude(&self) -> f64 {
        self.value.norm()
    }

    pub fn phase(&self) -> f64 {
        self.value.arg()
    }

    /// Time by which the response leads the drive.
    pub fn time_shift(&self) -> f64 {
        self.phase() / self.omega
    }
}

/// γ/(γ + iΩ); zero-frequency limit taken as 1 even at γ = 0.
fn lowpass(gamma: f64, omega: f64) -> Complex64 {
    if omega == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::new(gamma, 0.0) / Complex64::new(gamma, omega)
}

/// iΩ/(γ + iΩ).
fn highpass(gamma: f64, omega: f64) -> Complex64 {
    Complex64::new(1.0, 0.0) - lowpass(gamma, omega)
}

/// ΔT(Ω)/Δω₀(Ω) = [iΩ/(γ + iΩ)] T_e/ω̄₀.
pub fn temp_response(omega: f64, params: &SystemParams) -> Complex64 {
    highpass(params.gamma, omega) * (params.t_e / params.omega_bar)
}

/// P(Ω)/Δω₀(Ω) = iΩ n_B(ω̄₀).
pub fn power_response(omega: f64, params: &SystemParams) -> Complex64 {
    Complex64::new(0.0, omega * params.n_bar())
}

/// J(Ω)/Δω₀(Ω) = ω̄₀ [iγΩ/(γ + iΩ)] n_B′(ω̄₀).
pub fn heat_response(omega: f64, params: &SystemParams) -> Complex64 {
    let dn = bose_einstein_derivative(params.omega_bar, params.t_e).expect("validated parameters");
    highpass(params.gamma, omega) * (params.omega_bar * params.gamma * dn)
}

/// Complex e^z − 1 without cancellation near z = 0.
fn exp_m1(z: Complex64) -> Complex64 {
    let half = (0.5 * z.im).sin();
    let re = z.re.exp_m1() * z.im.cos() - 2.0 * half * half;
    let im = z.re.exp() * z.im.sin();
    Complex64::new(re, im)
}

/// n̄(s) = 1/(e^{x+s} − 1) for complex counting field s.
pub fn equilibrium_occupation_s(s: Complex64, x: f64) -> Result<Complex64> {
    let denom = exp_m1(Complex64::new(x, 0.0) + s);
    if denom == Complex64::new(0.0, 0.0) {
        return Err(Error::Pole(x + s.re));
    }
    Ok(denom.inv())
}

/// n̄(s) for real s.
pub fn equilibrium_occupation(s: f64, x: f64) -> Result<f64> {
    let denom = (x + s).exp_m1();
    if denom == 0.0 {
        return Err(Error::Pole(x + s));
    }
    Ok(1.0 / denom)
}

fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!(
            "x = ħω̄₀/k_BT_e must be positive, got {x}"
        )));
    }
    Ok(())
}

/// C̄(s) = ln(n̄(s)/n̄(0)) + ln(n̄(−s)/n̄(0)) inside |s| < x.
pub fn equilibrium_cgf(s: f64, x: f64) -> Result<f64> {
    check_x(x)?;
    if !(s.abs() < x) {
        return Err(Error::OutOfWindow { s: s.abs(), x });
    }
    let n0 = equilibrium_occupation(0.0, x)?;
    Ok((equilibrium_occupation(s, x)? / n0).ln() + (equilibrium_occupation(-s, x)? / n0).ln())
}

/// M̄(s) = n̄(s) n̄(−s)/n̄(0)², for complex s (characteristic function on the
/// imaginary axis).
pub fn equilibrium_mgf(s: Complex64, x: f64) -> Result<Complex64> {
    check_x(x)?;
    let n0 = equilibrium_occupation(0.0, x)?;
    Ok(equilibrium_occupation_s(s, x)? * equilibrium_occupation_s(-s, x)? / (n0 * n0))
}

/// Taylor series of n̄(s) = 1/(e^x e^s − 1) about s = 0.
pub fn equilibrium_occupation_series(x: f64, order: usize) -> Result<Series> {
    check_x(x)?;
    Series::exp_of_scaled_variable(1.0, order)?
        .scale(x.exp())
        .add_scalar(-1.0)
        .recip()
}

/// Cumulants of the undriven long-time photon transfer, orders 1..=K.
pub fn equilibrium_cumulants(x: f64, max_order: usize) -> Result<Vec<f64>> {
    check_x(x)?;
    if max_order == 0 {
        return Err(Error::Domain("max_order must be at least 1".into()));
    }
    let nb = bose_einstein(x, 1.0)?;
    let c2 = 2.0 * nb * (1.0 + nb);
    let c4 = c2 * (1.0 + 6.0 * nb + 6.0 * nb * nb);
    let series = if max_order > 4 {
        let n_s = equilibrium_occupation_series(x, max_order)?;
        let ln_n0 = nb.ln();
        Some((n_s.ln()? + n_s.reflect().ln()?).add_scalar(-2.0 * ln_n0))
    } else {
        None
    };
    Ok((1..=max_order)
        .map(|k| match k {
            _ if k % 2 == 1 => 0.0,
            2 => c2,
            4 => c4,
            _ => series.as_ref().unwrap().derivative(k),
        })
        .collect())
}

/// Equilibrium statistics at fixed x.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumStats {
    pub x: f64,
    pub cumulants: Vec<f64>,
}

impl EquilibriumStats {
    pub fn new(x: f64, max_order: usize) -> Result<Self> {
        Ok(EquilibriumStats {
            x,
            cumulants: equilibrium_cumulants(x, max_order)?,
        })
    }

    pub fn n_bar(&self, s: f64) -> Result<f64> {
        equilibrium_occupation(s, self.x)
    }

    pub fn cgf(&self, s: f64) -> Result<f64> {
        equilibrium_cgf(s, self.x)
    }
}

/// Σ_{l=0}^{k−1} C(k,l) n̄^{(l)}(0)/n̄(0), with the derivatives taken from
/// the series of n̄(s).
pub fn lr_cumulant_bracket(k: usize, x: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("cumulant order must be at least 1".into()));
    }
    let n_s = equilibrium_occupation_series(x, k - 1)?;
    let n0 = n_s.coeff(0);
    let mut binom = 1.0;
    let mut sum = 0.0;
    for l in 0..k {
        sum += binom * n_s.derivative(l) / n0;
        binom = binom * (k - l) as f64 / (l + 1) as f64;
    }
    Ok(sum)
}

/// Δ⟨⟨m⟩⟩(Ω)/Δω₀(Ω) = [γ/(γ + iΩ)] (1 + n̄)n̄ / k_BT_e.
pub fn lr_first_cumulant_response(omega: f64, params: &SystemParams) -> Complex64 {
    let nb = params.n_bar();
    lowpass(params.gamma, omega) * ((1.0 + nb) * nb / params.t_e)
}

/// Δ⟨⟨m^k⟩⟩(Ω)/Δω₀(Ω).
pub fn lr_cumulant_response(k: usize, omega: f64, params: &SystemParams) -> Result<Complex64> {
    Ok(lr_first_cumulant_response(omega, params) * lr_cumulant_bracket(k, params.x())?)
}
