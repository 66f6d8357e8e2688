//! Full counting statistics of the net number m of photons emitted into the
//! reservoir.
//!
//! The tilted state stays of thermal form, so the moment generating
//! function is carried by two numbers: C(s,t) = ln M(s,t) and the
//! s-dependent occupation n(s,t),
//!
//! ```text
//! ∂t C = γ(e^s − 1) n (1 + n_B) + γ(e^{−s} − 1) n_B (1 + n)
//! ∂t n = γ(e^s − 1) n² (1 + n_B) + γ(e^{−s} − 1) n_B (1 + n)² + γ(n_B − n)
//! ```
//!
//! with n_B = n_B(ω₀(t)). Cumulants come from propagating the same pair on
//! truncated power series in s; the distribution from evaluating M on the
//! unit circle s = iθ and inverting the Fourier series.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::relax_to_periodic;
use crate::error::{Error, Result};
use crate::model::{
    bose_einstein, occupation, DriveKind, DriveWaveform, SimulationGrid, SystemParams,
};
use crate::ode::{propagate, DormandPrince};
use crate::series::{Series, JET_CAPACITY};

/// Largest Re C accepted before e^C is considered an overflow.
pub const OVERFLOW_BOUND: f64 = 700.0;

/// Integrator used for the counting equations.
pub fn counting_stepper(grid: &SimulationGrid) -> DormandPrince {
    DormandPrince::with_tolerances(1e-12, 1e-12).with_h_max(grid.dt_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountingState {
    pub t: f64,
    pub s: Complex64,
    /// Cumulant generating function C(s,t), continuous in t (no branch cuts).
    pub c: Complex64,
    /// s-dependent occupation n(s,t).
    pub n_s: Complex64,
}

impl CountingState {
    /// Moment generating function M = e^C.
    pub fn mgf(&self) -> Complex64 {
        self.c.exp()
    }
}

fn complex_exp_m1(z: Complex64) -> Complex64 {
    let half = (0.5 * z.im).sin();
    Complex64::new(
        z.re.exp_m1() * z.im.cos() - 2.0 * half * half,
        z.re.exp() * z.im.sin(),
    )
}

/// Integrates C and n_s for one counting field from `grid.t_start`, with
/// C = 0 and n_s = `n_init` there.
pub fn evolve_counting(
    s: Complex64,
    params: &SystemParams,
    drive: &DriveWaveform,
    grid: &SimulationGrid,
    n_init: f64,
) -> Result<Vec<CountingState>> {
    params.validate()?;
    grid.validate()?;
    let mut out = evolve_counting_batch(
        &[s],
        params,
        drive,
        &grid.sample_times(),
        n_init,
        &counting_stepper(grid),
    )?;
    Ok(out.pop().unwrap())
}

/// Integrates several counting fields as one system, so every field sees
/// the same step sequence. Result is indexed `[field][sample]`.
pub fn evolve_counting_batch(
    s_values: &[Complex64],
    params: &SystemParams,
    drive: &DriveWaveform,
    times: &[f64],
    n_init: f64,
    stepper: &DormandPrince,
) -> Result<Vec<Vec<CountingState>>> {
    if !(n_init >= 0.0 && n_init.is_finite()) {
        return Err(Error::Domain(format!(
            "initial occupation must be non-negative, got {n_init}"
        )));
    }
    let gamma = params.gamma;
    let t_e = params.t_e;
    let tilts: Vec<(Complex64, Complex64)> = s_values
        .iter()
        .map(|&s| (complex_exp_m1(s), complex_exp_m1(-s)))
        .collect();
    let mut y: Vec<f64> = s_values
        .iter()
        .flat_map(|_| [0.0, 0.0, n_init, 0.0])
        .collect();
    let mut out: Vec<Vec<CountingState>> = s_values
        .iter()
        .map(|_| Vec::with_capacity(times.len()))
        .collect();
    propagate(
        stepper,
        drive,
        times,
        &mut y,
        |piece, t, y, dy| {
            let nb = occupation(piece.value(t) / t_e);
            for (j, &(ep, em)) in tilts.iter().enumerate() {
                let n = Complex64::new(y[4 * j + 2], y[4 * j + 3]);
                let one_n = n + 1.0;
                let dc = (ep * n * (1.0 + nb) + em * nb * one_n) * gamma;
                let dn = (ep * n * n * (1.0 + nb) + em * nb * one_n * one_n - n + nb) * gamma;
                dy[4 * j] = dc.re;
                dy[4 * j + 1] = dc.im;
                dy[4 * j + 2] = dn.re;
                dy[4 * j + 3] = dn.im;
            }
        },
        |_, t, y| {
            for (j, (&s, series)) in s_values.iter().zip(out.iter_mut()).enumerate() {
                let c = Complex64::new(y[4 * j], y[4 * j + 1]);
                if c.re > OVERFLOW_BOUND {
                    return Err(Error::Overflow {
                        re_c: c.re,
                        bound: OVERFLOW_BOUND,
                        t,
                    });
                }
                series.push(CountingState {
                    t,
                    s,
                    c,
                    n_s: Complex64::new(y[4 * j + 2], y[4 * j + 3]),
                });
            }
            Ok(())
        },
        |_, _| Ok(()),
    )?;
    Ok(out)
}

/// Occupation at the counting origin `grid.t_start`.
///
/// Periodic drives start from the certified periodic state, constant drives
/// from equilibrium and tabulated drives from the thermal state at T_e and
/// the initial frequency.
pub fn counting_initial_occupation(
    params: &SystemParams,
    drive: &DriveWaveform,
    grid: &SimulationGrid,
) -> Result<f64> {
    match drive.kind() {
        DriveKind::Constant => bose_einstein(drive.base(), params.t_e),
        DriveKind::Tabulated => bose_einstein(drive.eval(grid.t_start)?, params.t_e),
        _ => {
            let mut g = *grid;
            g.n_samples = 2;
            Ok(relax_to_periodic(params, drive, &g)?.n_start())
        }
    }
}

/// Cumulants ⟨⟨m^k⟩⟩(t), k = 1..=K, and the occupation jet along a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CumulantTrajectories {
    pub order: usize,
    pub times: Vec<f64>,
    /// `cumulants[i][k - 1]` is ⟨⟨m^k⟩⟩ at `times[i]`.
    pub cumulants: Vec<Vec<f64>>,
    /// `occupation[i][k]` is n_k = ∂_s^k n(s)|₀ at `times[i]`.
    pub occupation: Vec<Vec<f64>>,
    /// c₀ = C(0,t), identically zero up to rounding.
    pub c0: Vec<f64>,
    pub n_init: f64,
}

impl CumulantTrajectories {
    pub fn cumulant(&self, k: usize) -> Vec<f64> {
        self.cumulants.iter().map(|row| row[k - 1]).collect()
    }
}

/// Right-hand side of the jet hierarchy: `state` holds the Taylor
/// coefficients of C then n, each of length order + 1.
pub(crate) fn jet_rhs(order: usize, gamma: f64, nb: f64, state: &[f64], dstate: &mut [f64]) {
    let len = order + 1;
    let e_plus = Series::exp_of_scaled_variable(1.0, order)
        .expect("order checked")
        .add_scalar(-1.0);
    let e_minus = Series::exp_of_scaled_variable(-1.0, order)
        .expect("order checked")
        .add_scalar(-1.0);
    let n = Series::from_coeffs(&state[len..], order).expect("order checked");
    let one_n = n.add_scalar(1.0);
    let dc = (e_plus * n * (1.0 + nb) + e_minus * one_n * nb) * gamma;
    let dn =
        (e_plus * n * n * (1.0 + nb) + e_minus * one_n * one_n * nb - n.add_scalar(-nb)) * gamma;
    dstate[..len].copy_from_slice(dc.coeffs());
    dstate[len..].copy_from_slice(dn.coeffs());
}

/// Propagates the order-K jet from the counting origin `grid.t_start`,
/// starting from the certified periodic state for periodic drives.
pub fn cumulant_trajectories(
    order: usize,
    params: &SystemParams,
    drive: &DriveWaveform,
    grid: &SimulationGrid,
) -> Result<CumulantTrajectories> {
    params.validate()?;
    grid.validate()?;
    let n_init = counting_initial_occupation(params, drive, grid)?;
    cumulant_trajectories_from(
        order,
        params,
        drive,
        &grid.sample_times(),
        n_init,
        &counting_stepper(grid),
    )
}

/// Jet propagation from an explicit initial occupation.
pub fn cumulant_trajectories_from(
    order: usize,
    params: &SystemParams,
    drive: &DriveWaveform,
    times: &[f64],
    n_init: f64,
    stepper: &DormandPrince,
) -> Result<CumulantTrajectories> {
    if order == 0 {
        return Err(Error::Domain("cumulant order must be at least 1".into()));
    }
    Series::check_order(order)?;
    debug_assert!(order <= JET_CAPACITY);
    let len = order + 1;
    let gamma = params.gamma;
    let t_e = params.t_e;
    let mut y = vec![0.0; 2 * len];
    y[len] = n_init;
    let factorials: Vec<f64> = (0..len)
        .scan(1.0, |f, k| {
            let v = *f;
            *f *= (k + 1) as f64;
            Some(v)
        })
        .collect();
    let mut out = CumulantTrajectories {
        order,
        times: times.to_vec(),
        cumulants: Vec::with_capacity(times.len()),
        occupation: Vec::with_capacity(times.len()),
        c0: Vec::with_capacity(times.len()),
        n_init,
    };
    propagate(
        stepper,
        drive,
        times,
        &mut y,
        |piece, t, y, dy| jet_rhs(order, gamma, occupation(piece.value(t) / t_e), y, dy),
        |_, _, y| {
            out.c0.push(y[0]);
            out.cumulants
                .push((1..len).map(|k| factorials[k] * y[k]).collect());
            out.occupation
                .push((0..len).map(|k| factorials[k] * y[len + k]).collect());
            Ok(())
        },
        |_, _| Ok(()),
    )?;
    Ok(out)
}

/// p(m) over m ∈ [−m_max, m_max].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhotonDistribution {
    pub t: f64,
    pub m_max: usize,
    /// `p[i]` is the probability of m = i − m_max.
    pub p: Vec<f64>,
    pub n_theta: usize,
    /// Largest imaginary part discarded by the inversion.
    pub max_imag: f64,
    /// |p(±m_max)| above [`ALIASING_THRESHOLD`]: the window is too small.
    pub aliased: bool,
}

impl PhotonDistribution {
    pub fn m_values(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.p.len()).map(|i| i as i64 - self.m_max as i64)
    }

    pub fn prob(&self, m: i64) -> f64 {
        let i = m + self.m_max as i64;
        if i < 0 || i as usize >= self.p.len() {
            0.0
        } else {
            self.p[i as usize]
        }
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Mean, variance and third and fourth cumulants.
    pub fn cumulants(&self) -> [f64; 4] {
        crate::analysis::cumulants_of(-(self.m_max as i64), &self.p)
    }
}

pub const ALIASING_THRESHOLD: f64 = 1e-6;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;
pub const NEGATIVITY_TOLERANCE: f64 = 1e-10;
pub const IMAGINARY_TOLERANCE: f64 = 1e-10;

/// Number of θ points for a window: next power of two ≥ 4(2m_max + 1).
pub fn theta_grid_size(m_max: usize) -> usize {
    (4 * (2 * m_max + 1)).next_power_of_two()
}

/// θ_j = −π + 2π(j + 1)/N, covering (−π, π].
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| -PI + 2.0 * PI * (j + 1) as f64 / n as f64)
        .collect()
}

/// Inverts M(iθ_j) on a uniform θ grid to p(m), m ∈ [−m_max, m_max], and
/// applies the negativity, imaginary-part and normalization checks.
pub fn invert_characteristic(
    t: f64,
    m_max: usize,
    thetas: &[f64],
    mgf: &[Complex64],
) -> Result<PhotonDistribution> {
    let n = thetas.len();
    if mgf.len() != n || n < 2 * m_max + 1 {
        return Err(Error::Distribution(format!(
            "θ grid of {n} points cannot resolve m_max = {m_max}"
        )));
    }
    let mut p = Vec::with_capacity(2 * m_max + 1);
    let mut max_imag = 0.0f64;
    for m in -(m_max as i64)..=(m_max as i64) {
        let sum: Complex64 = thetas
            .iter()
            .zip(mgf)
            .map(|(&th, &mv)| Complex64::from_polar(1.0, -(m as f64) * th) * mv)
            .sum();
        let val = sum / n as f64;
        max_imag = max_imag.max(val.im.abs());
        p.push(val.re);
    }
    if max_imag > IMAGINARY_TOLERANCE {
        return Err(Error::Distribution(format!(
            "imaginary part {max_imag:e} exceeds {IMAGINARY_TOLERANCE:e}"
        )));
    }
    let most_negative = p.iter().cloned().fold(0.0, f64::min);
    if most_negative < -NEGATIVITY_TOLERANCE {
        return Err(Error::Distribution(format!(
            "probability {most_negative:e} below −{NEGATIVITY_TOLERANCE:e}"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Distribution(format!(
            "probabilities sum to 1 {:+e}; widen the m window",
            total - 1.0
        )));
    }
    let clipped: f64 = p.iter().filter(|&&x| x < 0.0).map(|x| -x).sum();
    if clipped > 0.0 {
        for x in &mut p {
            *x = x.max(0.0);
        }
        if clipped < NORMALIZATION_TOLERANCE {
            let total: f64 = p.iter().sum();
            for x in &mut p {
                *x /= total;
            }
        }
    }
    let aliased = p[0].abs() > ALIASING_THRESHOLD || p[2 * m_max].abs() > ALIASING_THRESHOLD;
    Ok(PhotonDistribution {
        t,
        m_max,
        p,
        n_theta: n,
        max_imag,
        aliased,
    })
}

/// Distribution of photons transferred between the counting origin
/// `grid.t_start` and `t`.
pub fn distribution(
    t: f64,
    m_max: usize,
    params: &SystemParams,
    drive: &DriveWaveform,
    grid: &SimulationGrid,
) -> Result<PhotonDistribution> {
    params.validate()?;
    grid.validate()?;
    let n_init = counting_initial_occupation(params, drive, grid)?;
    distribution_from(t, m_max, params, drive, grid, n_init)
}

/// As [`distribution`], from an explicit occupation at `grid.t_start`.
pub fn distribution_from(
    t: f64,
    m_max: usize,
    params: &SystemParams,
    drive: &DriveWaveform,
    grid: &SimulationGrid,
    n_init: f64,
) -> Result<PhotonDistribution> {
    if m_max == 0 {
        return Err(Error::Domain("m_max must be at least 1".into()));
    }
    if !(t >= grid.t_start && t <= grid.t_end) {
        return Err(Error::GridMismatch(format!(
            "time {t} outside grid [{}, {}]",
            grid.t_start, grid.t_end
        )));
    }
    let thetas = theta_grid(theta_grid_size(m_max));
    let stepper = counting_stepper(grid);
    let times = [grid.t_start, t];
    let mgf = thetas
        .par_iter()
        .map(|&th| {
            let run = evolve_counting_batch(
                &[Complex64::new(0.0, th)],
                params,
                drive,
                &times,
                n_init,
                &stepper,
            )?;
            Ok(run[0][1].mgf())
        })
        .collect::<Result<Vec<_>>>()?;
    invert_characteristic(t, m_max, &thetas, &mgf)
}

/// Long-time undriven distribution e^{−|m|x} tanh(x/2).
pub fn equilibrium_distribution(x: f64, m: i64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("x must be positive, got {x}")));
    }
    Ok((-(m.unsigned_abs() as f64) * x).exp() * (0.5 * x).tanh())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::occupancy_trajectory;
    use crate::linear_response::{equilibrium_cgf, equilibrium_occupation};

    fn params(gamma: f64, t_e: f64) -> SystemParams {
        SystemParams::new(1.0, gamma, t_e).unwrap()
    }

    #[test]
    fn zero_field_reproduces_occupancy() {
        let p = params(0.1, 1.5);
        let tau = 2.0 * PI / 0.1;
        for drive in [
            DriveWaveform::square(1.0, 0.7, tau, 0.0).unwrap(),
            DriveWaveform::sawtooth(1.0, 0.7, tau, 0.0).unwrap(),
            DriveWaveform::harmonic(1.0, 0.7, tau, 0.0).unwrap(),
        ] {
            let grid = SimulationGrid::new(0.0, 2.0 * tau, 1.0, 257).unwrap();
            let occ = occupancy_trajectory(&p, &drive, &grid, 0.3).unwrap();
            let cs = evolve_counting(Complex64::new(0.0, 0.0), &p, &drive, &grid, 0.3).unwrap();
            for (st, &n) in cs.iter().zip(&occ.n) {
                assert_eq!(st.c, Complex64::new(0.0, 0.0));
                assert!((st.n_s.re - n).abs() < 1e-9);
                assert_eq!(st.n_s.im, 0.0);
            }
        }
    }

    #[test]
    fn undriven_cgf_converges_to_equilibrium() {
        let x = 0.25;
        let gamma = 0.1;
        let p = params(gamma, 1.0 / x);
        let drive = DriveWaveform::constant(1.0).unwrap();
        let grid = SimulationGrid::new(0.0, 40.0 / gamma, 5.0, 2).unwrap();
        let nb = p.n_bar();
        let run = evolve_counting(Complex64::new(0.1, 0.0), &p, &drive, &grid, nb).unwrap();
        let last = run.last().unwrap();
        let expect = equilibrium_cgf(0.1, x).unwrap();
        assert!(
            (last.c.re - expect).abs() < 1e-6,
            "{} vs {expect}",
            last.c.re
        );
        assert!(last.c.im.abs() < 1e-15);
    }

    #[test]
    fn shifted_occupation_is_stationary_in_time() {
        let x = 0.25;
        let p = params(0.1, 1.0 / x);
        let drive = DriveWaveform::constant(1.0).unwrap();
        let grid = SimulationGrid::new(0.0, 200.0, 5.0, 41).unwrap();
        for s in [-0.1, 0.05, 0.2] {
            let n_s = equilibrium_occupation(s, x).unwrap();
            let run = evolve_counting(Complex64::new(s, 0.0), &p, &drive, &grid, n_s).unwrap();
            for st in &run {
                assert!((st.n_s.re - n_s).abs() < 1e-9 * n_s.max(1.0));
            }
        }
    }

    #[test]
    fn conjugate_fields_give_conjugate_cgf() {
        let p = params(0.1, 1.0);
        let drive = DriveWaveform::harmonic(1.0, 0.3, 2.0 * PI / 0.1, 0.0).unwrap();
        let grid = SimulationGrid::new(0.0, 60.0, 1.0, 13).unwrap();
        let a = evolve_counting(Complex64::new(0.0, 0.7), &p, &drive, &grid, 0.5).unwrap();
        let b = evolve_counting(Complex64::new(0.0, -0.7), &p, &drive, &grid, 0.5).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.c - y.c.conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn overflow_guard_trips() {
        // Large real s on a hot resonator drives Re C past the bound.
        let p = params(0.5, 50.0);
        let drive = DriveWaveform::constant(1.0).unwrap();
        let grid = SimulationGrid::new(0.0, 400.0, 1.0, 401).unwrap();
        let err = evolve_counting(Complex64::new(0.0199, 0.0), &p, &drive, &grid, 200.0);
        assert!(
            matches!(
                err,
                Err(Error::Overflow { .. }) | Err(Error::StepFailure { .. })
            ),
            "{err:?}"
        );
    }

    #[test]
    fn jet_rhs_reproduces_hand_derived_orders() {
        // ∂t⟨⟨m⟩⟩ = γ(n₀ − n_B), ∂t⟨⟨m²⟩⟩ = γ(n_B(2n₀ + 1) + 2n₁ + n₀),
        // ∂t n₀ = γ(n_B − n₀), ∂t n₁ = γ(n₀² − n₁) − γ n_B(1 + 2n₀).
        let gamma = 0.37;
        for &(nb, n0, n1) in &[(0.5, 0.8, -0.2), (3.52, 2.0, 4.0), (0.01, 1.3, 0.7)] {
            let order = 2;
            let mut state = vec![0.0; 6];
            state[3] = n0;
            state[4] = n1; // plain coefficient equals n₁/1!
            let mut d = vec![0.0; 6];
            jet_rhs(order, gamma, nb, &state, &mut d);
            assert!((d[1] - gamma * (n0 - nb)).abs() < 1e-14);
            let dc2 = 2.0 * d[2];
            let expect = gamma * (nb * (2.0 * n0 + 1.0) + 2.0 * n1 + n0);
            assert!((dc2 - expect).abs() < 1e-13);
            assert!((d[3] - gamma * (nb - n0)).abs() < 1e-14);
            let expect_n1 = gamma * (n0 * n0 - n1) - gamma * nb * (1.0 + 2.0 * n0);
            assert!((d[4] - expect_n1).abs() < 1e-13);
            assert_eq!(d[0], 0.0);
        }
    }

    #[test]
    fn first_cumulant_tracks_occupation_loss() {
        // Integrating ∂t⟨⟨m⟩⟩ = γ(n₀ − n_B) against ∂t n₀ = γ(n_B − n₀)
        // gives ⟨⟨m⟩⟩(t) = n(t₀) − n₀(t).
        let p = params(0.1, 1.5);
        let drive = DriveWaveform::harmonic(1.0, 0.6, 2.0 * PI / 0.1, 0.0).unwrap();
        let grid = SimulationGrid::new(0.0, 150.0, 1.0, 151).unwrap();
        let jets = cumulant_trajectories(1, &p, &drive, &grid).unwrap();
        for (c, n) in jets.cumulants.iter().zip(&jets.occupation) {
            assert!((c[0] - (jets.n_init - n[0])).abs() < 1e-9);
        }
        assert!(jets.c0.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn order_limits() {
        let p = params(0.1, 1.5);
        let drive = DriveWaveform::constant(1.0).unwrap();
        let grid = SimulationGrid::new(0.0, 1.0, 0.5, 2).unwrap();
        assert!(matches!(
            cumulant_trajectories(JET_CAPACITY + 1, &p, &drive, &grid),
            Err(Error::OrderOverflow { .. })
        ));
        assert!(cumulant_trajectories(0, &p, &drive, &grid).is_err());
        assert!(cumulant_trajectories(JET_CAPACITY, &p, &drive, &grid).is_ok());
    }

    #[test]
    fn undriven_equilibrium_odd_cumulants_vanish() {
        let x = 0.25;
        let p = params(0.1, 1.0 / x);
        let drive = DriveWaveform::constant(1.0).unwrap();
        let grid = SimulationGrid::new(0.0, 400.0, 5.0, 41).unwrap();
        let jets = cumulant_trajectories(6, &p, &drive, &grid).unwrap();
        let eq = crate::linear_response::equilibrium_cumulants(x, 6).unwrap();
        for row in &jets.cumulants {
            assert!(row[0].abs() < 1e-9 && row[2].abs() < 1e-9 && row[4].abs() < 1e-9 * eq[5]);
        }
        let last = jets.cumulants.last().unwrap();
        for k in [2, 4, 6] {
            assert!(
                ((last[k - 1] - eq[k - 1]) / eq[k - 1]).abs() < 1e-8,
                "k = {k}"
            );
        }
    }

    #[test]
    fn sign_convention_hot_resonator_emits() {
        let p = params(0.1, 1.5);
        let drive = DriveWaveform::constant(1.0).unwrap();
        let grid = SimulationGrid::new(0.0, 0.01, 0.01, 2).unwrap();
        let n_hot = 2.0 * p.n_bar();
        let jets = cumulant_trajectories_from(
            1,
            &p,
            &drive,
            &grid.sample_times(),
            n_hot,
            &counting_stepper(&grid),
        )
        .unwrap();
        let rate = jets.cumulants[1][0] / 0.01;
        assert!(rate > 0.0);
        // Heat leaves the resonator: J = −ħω₀ ∂t⟨⟨m⟩⟩.
        let j = 1.0 * 0.1 * (p.n_bar() - n_hot);
        assert!((j + rate).abs() < 1e-3 * rate);
    }

    #[test]
    fn zero_duration_distribution_is_point_mass() {
        let p = params(0.1, 4.0);
        let drive = DriveWaveform::harmonic(1.0, 0.6, 2.0 * PI / 0.1, 0.0).unwrap();
        let grid = SimulationGrid::new(0.0, 10.0, 1.0, 2).unwrap();
        let d = distribution(0.0, 5, &p, &drive, &grid).unwrap();
        assert_eq!(d.p.len(), 11);
        assert!((d.prob(0) - 1.0).abs() < 1e-14);
        for m in d.m_values().filter(|&m| m != 0) {
            assert!(d.prob(m).abs() < 1e-14);
        }
        assert_eq!(d.n_theta, 64);
    }

    #[test]
    fn undriven_distribution_matches_equilibrium() {
        let x = 0.25;
        let gamma = 0.1;
        let p = params(gamma, 1.0 / x);
        let drive = DriveWaveform::constant(1.0).unwrap();
        let t = 40.0 / gamma;
        let grid = SimulationGrid::new(0.0, t, 5.0, 2).unwrap();
        let d = distribution(t, 100, &p, &drive, &grid).unwrap();
        assert!(!d.aliased);
        for m in d.m_values() {
            let expect = equilibrium_distribution(x, m).unwrap();
            assert!((d.prob(m) - expect).abs() < 1e-8, "m = {m}");
        }
        let c = d.cumulants();
        assert!(c[0].abs() < 1e-8);
        let eq = crate::linear_response::equilibrium_cumulants(x, 2).unwrap();
        assert!(((c[1] - eq[1]) / eq[1]).abs() < 1e-6);
    }

    #[test]
    fn distribution_argument_checks() {
        let p = params(0.1, 4.0);
        let drive = DriveWaveform::constant(1.0).unwrap();
        let grid = SimulationGrid::new(0.0, 10.0, 1.0, 2).unwrap();
        assert!(distribution(1.0, 0, &p, &drive, &grid).is_err());
        assert!(matches!(
            distribution(11.0, 3, &p, &drive, &grid),
            Err(Error::GridMismatch(_))
        ));
        // Too small a window loses mass.
        let long = SimulationGrid::new(0.0, 400.0, 5.0, 2).unwrap();
        assert!(matches!(
            distribution(400.0, 3, &p, &drive, &long),
            Err(Error::Distribution(_))
        ));
    }

    #[test]
    fn theta_grid_layout() {
        assert_eq!(theta_grid_size(1), 16);
        assert_eq!(theta_grid_size(30), 256);
        assert_eq!(theta_grid_size(100), 1024);
        let th = theta_grid(8);
        assert!((th[7] - PI).abs() < 1e-15);
        assert!(th[0] > -PI);
        assert!(th[3].abs() < 1e-15);
    }

    #[test]
    fn equilibrium_distribution_values() {
        let p0 = equilibrium_distribution(0.25, 0).unwrap();
        assert!((p0 - 0.1243530).abs() < 1e-7);
        let p1 = equilibrium_distribution(0.25, 1).unwrap();
        assert_eq!(p1, equilibrium_distribution(0.25, -1).unwrap());
        assert!((p1 - 0.1243530017715962 * (-0.25f64).exp()).abs() < 1e-15);
        assert!((p1 - 0.0968462).abs() < 1e-7);
        let total: f64 = (-200..=200)
            .map(|m| equilibrium_distribution(0.25, m).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(equilibrium_distribution(0.0, 1).is_err());
    }
}
