//! Occupation, temperature, energy, power and heat of the driven resonator.
//!
//! The resonator stays in a thermal state at all times, so the mean
//! occupation n(t) is the only dynamical variable: ∂t n = γ(n_B(ω₀(t)) − n).
//! Temperature is read off n by inverting the Bose-Einstein form at the
//! instantaneous frequency. The integrator also carries the running work
//! ∫P dt and heat ∫J dt so energy bookkeeping is exact to tolerance.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{bose_einstein, occupation, DriveWaveform, SimulationGrid, SystemParams};
use crate::ode::{propagate, DormandPrince};

/// Default occupancy integrator: tighter than needed for the scalar ODE,
/// which costs nothing and keeps the periodicity certificate meaningful at
/// low temperature.
pub fn occupancy_stepper(grid: &SimulationGrid) -> DormandPrince {
    DormandPrince::with_tolerances(1e-12, 1e-12).with_h_max(grid.dt_max)
}

/// A frequency jump crossed by the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpRecord {
    pub t: f64,
    /// Occupation at the jump (continuous across it).
    pub n: f64,
    pub omega_before: f64,
    pub omega_after: f64,
}

/// Sampled solution of the population equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupancyTrajectory {
    pub times: Vec<f64>,
    /// ω₀ at each sample, right-continuous.
    pub omega: Vec<f64>,
    pub n: Vec<f64>,
    /// Running ∫P dt over smooth stretches, from the first sample.
    pub work: Vec<f64>,
    /// Running ∫J dt from the first sample.
    pub heat: Vec<f64>,
    pub jumps: Vec<JumpRecord>,
}

impl OccupancyTrajectory {
    pub fn temperatures(&self) -> Result<Vec<f64>> {
        self.n
            .iter()
            .zip(&self.omega)
            .map(|(&n, &w)| {
                if n == 0.0 {
                    Ok(0.0)
                } else {
                    temperature_from_occupancy(n, w)
                }
            })
            .collect()
    }
}

/// Integrates the population equation from `n_init` at `grid.t_start`.
pub fn occupancy_trajectory(
    params: &SystemParams,
    drive: &DriveWaveform,
    grid: &SimulationGrid,
    n_init: f64,
) -> Result<OccupancyTrajectory> {
    params.validate()?;
    grid.validate()?;
    occupancy_on(
        params,
        drive,
        &grid.sample_times(),
        n_init,
        &occupancy_stepper(grid),
    )
}

pub(crate) fn occupancy_on(
    params: &SystemParams,
    drive: &DriveWaveform,
    times: &[f64],
    n_init: f64,
    stepper: &DormandPrince,
) -> Result<OccupancyTrajectory> {
    if !(n_init >= 0.0 && n_init.is_finite()) {
        return Err(Error::Domain(format!(
            "initial occupation must be non-negative, got {n_init}"
        )));
    }
    let gamma = params.gamma;
    let t_e = params.t_e;
    let len = times.len();
    let mut out = OccupancyTrajectory {
        times: times.to_vec(),
        omega: Vec::with_capacity(len),
        n: Vec::with_capacity(len),
        work: Vec::with_capacity(len),
        heat: Vec::with_capacity(len),
        jumps: Vec::new(),
    };
    let mut y = [n_init, 0.0, 0.0];
    propagate(
        stepper,
        drive,
        times,
        &mut y,
        |piece, t, y, dy| {
            let w = piece.value(t);
            let relax = gamma * (occupation(w / t_e) - y[0]);
            dy[0] = relax;
            dy[1] = y[0] * piece.slope(t);
            dy[2] = w * relax;
        },
        |_, t, y| {
            out.omega.push(drive.eval(t)?);
            out.n.push(y[0]);
            out.work.push(y[1]);
            out.heat.push(y[2]);
            Ok(())
        },
        |ev, y| {
            out.jumps.push(JumpRecord {
                t: ev.t,
                n: y[0],
                omega_before: ev.omega_before,
                omega_after: ev.omega_after,
            });
            Ok(())
        },
    )?;
    Ok(out)
}

/// Temperature of a thermal state with occupation `n` at frequency `omega`.
pub fn temperature_from_occupancy(n: f64, omega: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(Error::Domain(format!(
            "occupation must be positive, got {n}"
        )));
    }
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "frequency must be positive, got {omega}"
        )));
    }
    Ok(omega / (1.0 / n).ln_1p())
}

/// Temperature after an isolated frequency change: ω/T is conserved.
pub fn adiabatic_temperature(omega_t: f64, omega_ref: f64, t_ref: f64) -> Result<f64> {
    if !(omega_t > 0.0 && omega_ref > 0.0 && t_ref > 0.0) {
        return Err(Error::Domain(format!(
            "adiabatic_temperature needs positive arguments, got ({omega_t}, {omega_ref}, {t_ref})"
        )));
    }
    Ok(omega_t / omega_ref * t_ref)
}

/// Work delivered instantaneously by a frequency jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Impulse {
    pub t: f64,
    pub work: f64,
}

/// Thermodynamic observables along a trajectory. Energies in units of ħω̄₀,
/// powers and heat currents in ħω̄₀².
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermoTrajectory {
    pub times: Vec<f64>,
    pub omega: Vec<f64>,
    pub n: Vec<f64>,
    pub temperature: Vec<f64>,
    /// U = ħω₀ n, measured from the ground-state energy.
    pub energy: Vec<f64>,
    /// P = n ħ ∂t ω₀ on smooth stretches.
    pub power: Vec<f64>,
    /// J = ħω₀ γ (n_B(ω₀) − n).
    pub heat_current: Vec<f64>,
    /// Running ∫P dt (smooth part only).
    pub work: Vec<f64>,
    /// Running ∫J dt.
    pub heat: Vec<f64>,
    pub impulses: Vec<Impulse>,
}

impl ThermoTrajectory {
    /// |ΔU − ∫P − ∫J − ΣW_impulse| for every sample interval.
    pub fn first_law_residuals(&self) -> Vec<f64> {
        let mut imp = self.impulses.iter().peekable();
        self.times
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let mut impulse = 0.0;
                while let Some(ev) = imp.peek() {
                    if ev.t <= w[0] {
                        imp.next();
                    } else if ev.t <= w[1] {
                        impulse += ev.work;
                        imp.next();
                    } else {
                        break;
                    }
                }
                let du = self.energy[i + 1] - self.energy[i];
                let dw = self.work[i + 1] - self.work[i];
                let dq = self.heat[i + 1] - self.heat[i];
                (du - dw - dq - impulse).abs()
            })
            .collect()
    }
}

/// Energy, power, heat current and impulse work from an occupation
/// trajectory produced under the same drive.
pub fn thermo_observables(
    occ: &OccupancyTrajectory,
    drive: &DriveWaveform,
    params: &SystemParams,
) -> Result<ThermoTrajectory> {
    let len = occ.times.len();
    if [occ.omega.len(), occ.n.len(), occ.work.len(), occ.heat.len()]
        .iter()
        .any(|&l| l != len)
    {
        return Err(Error::GridMismatch(
            "trajectory columns differ in length".into(),
        ));
    }
    for (&t, &w) in occ.times.iter().zip(&occ.omega) {
        let expect = drive.eval(t)?;
        if expect != w {
            return Err(Error::GridMismatch(format!(
                "trajectory frequency {w} at t = {t} differs from drive value {expect}"
            )));
        }
    }
    let mut power = Vec::with_capacity(len);
    let mut heat_current = Vec::with_capacity(len);
    for ((&t, &w), &n) in occ.times.iter().zip(&occ.omega).zip(&occ.n) {
        power.push(n * drive.slope(t)?);
        heat_current.push(w * params.gamma * (bose_einstein(w, params.t_e)? - n));
    }
    Ok(ThermoTrajectory {
        times: occ.times.clone(),
        omega: occ.omega.clone(),
        n: occ.n.clone(),
        temperature: occ.temperatures()?,
        energy: occ.omega.iter().zip(&occ.n).map(|(w, n)| w * n).collect(),
        power,
        heat_current,
        work: occ.work.clone(),
        heat: occ.heat.clone(),
        impulses: occ
            .jumps
            .iter()
            .map(|j| Impulse {
                t: j.t,
                work: j.n * (j.omega_after - j.omega_before),
            })
            .collect(),
    })
}

/// One certified period of the long-time periodic state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicState {
    /// Samples over [t_start, t_start + τ].
    pub trajectory: OccupancyTrajectory,
    /// Whole periods integrated before `t_start`.
    pub relax_periods: u64,
    /// |n(t_start + τ) − n(t_start)|.
    pub residual: f64,
}

impl PeriodicState {
    pub fn n_start(&self) -> f64 {
        self.trajectory.n[0]
    }
}

/// Relative periodicity certificate on n.
pub const PERIODICITY_TOLERANCE: f64 = 1e-9;

/// Default pre-run: max(10/γ, 20τ) rounded up to whole periods.
pub fn default_relax_periods(gamma: f64, period: f64) -> u64 {
    if gamma == 0.0 {
        return 0;
    }
    ((10.0 / gamma).max(20.0 * period) / period).ceil() as u64
}

/// Relaxes from the reservoir-temperature thermal state to the periodic
/// state and returns one period starting at `grid.t_start`, sampled with
/// `grid.n_samples` points.
///
/// Constant drives use the grid span as the period. The pre-run length is
/// doubled up to twice if the certificate fails.
pub fn relax_to_periodic(
    params: &SystemParams,
    drive: &DriveWaveform,
    grid: &SimulationGrid,
) -> Result<PeriodicState> {
    params.validate()?;
    grid.validate()?;
    if !drive.is_periodic() {
        return Err(Error::InvalidConfig(
            "relax_to_periodic requires a periodic drive".into(),
        ));
    }
    let n_start = bose_einstein(params.omega_bar, params.t_e)?;
    let stepper = occupancy_stepper(grid);
    let t0 = grid.t_start;
    let period = drive.period().unwrap_or(grid.t_end - grid.t_start);
    let one_period = crate::model::uniform_times(t0, t0 + period, grid.n_samples);

    let mut periods = if drive.period().is_none() {
        0
    } else {
        grid.relax_periods
            .unwrap_or_else(|| default_relax_periods(params.gamma, period))
    };
    let threshold = PERIODICITY_TOLERANCE * n_start;
    let mut last_residual = f64::INFINITY;
    for _attempt in 0..3 {
        let n0 = if periods == 0 {
            n_start
        } else {
            let relax_from = t0 - periods as f64 * period;
            let pre = occupancy_on(params, drive, &[relax_from, t0], n_start, &stepper)?;
            pre.n[1]
        };
        let trajectory = occupancy_on(params, drive, &one_period, n0, &stepper)?;
        let residual = (trajectory.n[trajectory.n.len() - 1] - trajectory.n[0]).abs();
        if residual < threshold {
            return Ok(PeriodicState {
                trajectory,
                relax_periods: periods,
                residual,
            });
        }
        last_residual = residual;
        periods = (periods * 2).max(1);
    }
    Err(Error::NonConvergence {
        residual: last_residual,
        periods: periods / 2,
    })
}
