//! Brute-force Fock-space reference for the counting statistics.
//!
//! Density matrices live on levels 0..=N_max. The tilted generator is
//!
//! ```text
//! L(s)ρ = −i[ω a†a, ρ] + γ(1+n_B)(e^s aρa† − ½{a†a, ρ}) + γ n_B(e^{−s} a†ρa − ½{aa†, ρ})
//! ```
//!
//! with a the truncated lowering operator, so (aa†)_NN = 0 and the s = 0
//! generator preserves the trace exactly. Nothing here assumes the state is
//! thermal or diagonal.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::counting::{
    counting_initial_occupation, counting_stepper, cumulant_trajectories_from, distribution_from,
    equilibrium_distribution, evolve_counting_batch, invert_characteristic, theta_grid,
    theta_grid_size, PhotonDistribution,
};
use crate::dynamics::default_relax_periods;
use crate::error::{Error, Result};
use crate::model::{
    bose_einstein, occupation, DriveKind, DriveWaveform, SimulationGrid, SystemParams,
};
use crate::ode::{propagate, DormandPrince};

/// Largest supported truncation.
pub const MAX_N_MAX: usize = 80;
/// Largest population allowed in the top Fock level.
pub const TRUNCATION_TOLERANCE: f64 = 1e-8;
/// Largest weight allowed at the edges of the m window.
pub const LEAKAGE_TOLERANCE: f64 = 1e-8;

fn check_n_max(n_max: usize) -> Result<()> {
    if !(2..=MAX_N_MAX).contains(&n_max) {
        return Err(Error::Domain(format!(
            "N_max must lie in [2, {MAX_N_MAX}], got {n_max}"
        )));
    }
    Ok(())
}

/// Density matrix (or tilted density matrix) on the truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub n_max: usize,
    pub rho: DMatrix<Complex64>,
    /// Counting field the state is evolved with.
    pub s: Complex64,
}

impl FockState {
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn with_field(mut self, s: Complex64) -> Self {
        self.s = s;
        self
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// tr(a†a ρ).
    pub fn occupation(&self) -> Complex64 {
        (0..self.dim()).map(|k| self.rho[(k, k)] * k as f64).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.rho[(k, k)].re).collect()
    }

    /// Modulus of the top-level population.
    pub fn top_population(&self) -> f64 {
        self.rho[(self.n_max, self.n_max)].norm()
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let d = self.dim();
        let mut max = 0.0f64;
        for l in 0..d {
            for k in 0..d {
                if k != l {
                    max = max.max(self.rho[(k, l)].norm());
                }
            }
        }
        max
    }

    /// max |ρ − ρ†|.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.rho - self.rho.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigen().eigenvalues.iter().copied().collect()
    }

    fn to_flat(&self) -> Vec<f64> {
        self.rho.iter().flat_map(|z| [z.re, z.im]).collect()
    }

    fn from_flat(n_max: usize, s: Complex64, y: &[f64]) -> Self {
        let d = n_max + 1;
        FockState {
            n_max,
            rho: DMatrix::from_iterator(
                d,
                d,
                y.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])),
            ),
            s,
        }
    }
}

/// Thermal state with mean occupation `n_occ`, renormalized on the
/// truncated space.
pub fn thermal_state(n_occ: f64, n_max: usize) -> Result<FockState> {
    check_n_max(n_max)?;
    if !(n_occ >= 0.0 && n_occ.is_finite()) {
        return Err(Error::Domain(format!(
            "occupation must be non-negative, got {n_occ}"
        )));
    }
    let q = n_occ / (1.0 + n_occ);
    let top = q.powi(n_max as i32);
    if top > TRUNCATION_TOLERANCE {
        return Err(Error::Truncation {
            weight: top,
            t: f64::NAN,
            n_max,
        });
    }
    let d = n_max + 1;
    let weights: Vec<f64> = (0..d).map(|k| q.powi(k as i32)).collect();
    let z: f64 = weights.iter().sum();
    let mut rho = DMatrix::zeros(d, d);
    for (k, w) in weights.iter().enumerate() {
        rho[(k, k)] = Complex64::new(w / z, 0.0);
    }
    Ok(FockState {
        n_max,
        rho,
        s: Complex64::new(0.0, 0.0),
    })
}

/// Entrywise action of the generator on column-major, re/im interleaved
/// matrices.
struct Kernel {
    n_max: usize,
    sqrt: Vec<f64>,
}

impl Kernel {
    fn new(n_max: usize) -> Self {
        Kernel {
            n_max,
            sqrt: (0..=n_max + 1).map(|k| (k as f64).sqrt()).collect(),
        }
    }

    fn d(&self) -> usize {
        self.n_max + 1
    }

    /// (aa†)_kk on the truncated space.
    fn aa_dag(&self, k: usize) -> f64 {
        if k < self.n_max {
            (k + 1) as f64
        } else {
            0.0
        }
    }

    fn no_jump_coeff(&self, k: usize, l: usize, omega: f64, ge: f64, ga: f64) -> Complex64 {
        Complex64::new(
            -0.5 * (ge * (k + l) as f64 + ga * (self.aa_dag(k) + self.aa_dag(l))),
            -omega * (k as f64 - l as f64),
        )
    }

    /// out = L₀ src.
    fn no_jump(&self, omega: f64, ge: f64, ga: f64, src: &[f64], out: &mut [f64]) {
        let d = self.d();
        for l in 0..d {
            for k in 0..d {
                let i = k + l * d;
                let c = self.no_jump_coeff(k, l, omega, ge, ga);
                let (a, b) = (src[2 * i], src[2 * i + 1]);
                out[2 * i] = c.re * a - c.im * b;
                out[2 * i + 1] = c.re * b + c.im * a;
            }
        }
    }

    /// out += w·ge·a src a†.
    fn add_emission(&self, w: Complex64, src: &[f64], out: &mut [f64]) {
        let d = self.d();
        for l in 0..self.n_max {
            for k in 0..self.n_max {
                let c = w * (self.sqrt[k + 1] * self.sqrt[l + 1]);
                let i = k + l * d;
                let j = (k + 1) + (l + 1) * d;
                let (a, b) = (src[2 * j], src[2 * j + 1]);
                out[2 * i] += c.re * a - c.im * b;
                out[2 * i + 1] += c.re * b + c.im * a;
            }
        }
    }

    /// out += w·ga·a† src a.
    fn add_absorption(&self, w: Complex64, src: &[f64], out: &mut [f64]) {
        let d = self.d();
        for l in 1..d {
            for k in 1..d {
                let c = w * (self.sqrt[k] * self.sqrt[l]);
                let i = k + l * d;
                let j = (k - 1) + (l - 1) * d;
                let (a, b) = (src[2 * j], src[2 * j + 1]);
                out[2 * i] += c.re * a - c.im * b;
                out[2 * i + 1] += c.re * b + c.im * a;
            }
        }
    }

    fn tilted(
        &self,
        omega: f64,
        ge: f64,
        ga: f64,
        ep: Complex64,
        em: Complex64,
        src: &[f64],
        out: &mut [f64],
    ) {
        self.no_jump(omega, ge, ga, src, out);
        self.add_emission(ep * ge, src, out);
        self.add_absorption(em * ga, src, out);
    }
}

fn rates(gamma: f64, nb: f64) -> (f64, f64) {
    (gamma * (1.0 + nb), gamma * nb)
}

/// Dense tilted generator on vec(ρ), column-major: index k + l(N_max+1).
pub fn build_tilted_generator(
    s: Complex64,
    omega: f64,
    params: &SystemParams,
    n_max: usize,
) -> Result<DMatrix<Complex64>> {
    params.validate()?;
    check_n_max(n_max)?;
    let nb = bose_einstein(omega, params.t_e)?;
    let (ge, ga) = rates(params.gamma, nb);
    let kernel = Kernel::new(n_max);
    let d = n_max + 1;
    let (ep, em) = (s.exp(), (-s).exp());
    let mut g = DMatrix::zeros(d * d, d * d);
    for l in 0..d {
        for k in 0..d {
            let col = k + l * d;
            g[(col, col)] = kernel.no_jump_coeff(k, l, omega, ge, ga);
            if k >= 1 && l >= 1 {
                g[((k - 1) + (l - 1) * d, col)] = ep * ge * kernel.sqrt[k] * kernel.sqrt[l];
            }
            if k < n_max && l < n_max {
                g[((k + 1) + (l + 1) * d, col)] = em * ga * kernel.sqrt[k + 1] * kernel.sqrt[l + 1];
            }
        }
    }
    Ok(g)
}

/// Applies the tilted generator at frequency `omega` without forming it.
pub fn apply_tilted_generator(
    state: &FockState,
    omega: f64,
    params: &SystemParams,
) -> Result<DMatrix<Complex64>> {
    let nb = bose_einstein(omega, params.t_e)?;
    let (ge, ga) = rates(params.gamma, nb);
    let kernel = Kernel::new(state.n_max);
    let src = state.to_flat();
    let mut out = vec![0.0; src.len()];
    kernel.tilted(
        omega,
        ge,
        ga,
        state.s.exp(),
        (-state.s).exp(),
        &src,
        &mut out,
    );
    Ok(FockState::from_flat(state.n_max, state.s, &out).rho)
}

/// Adaptive stepper for oracle runs.
pub fn oracle_stepper(dt_max: f64) -> DormandPrince {
    DormandPrince::with_tolerances(1e-10, 1e-10).with_h_max(dt_max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockEvolution {
    pub times: Vec<f64>,
    /// M(s,t) = tr ρ(s,t).
    pub mgf: Vec<Complex64>,
    /// tr(a†a ρ(s,t)).
    pub occupation: Vec<Complex64>,
    pub final_state: FockState,
}

/// Evolves `initial` from `grid.t_start` under its counting field.
pub fn evolve_fock(
    initial: &FockState,
    drive: &DriveWaveform,
    params: &SystemParams,
    grid: &SimulationGrid,
) -> Result<FockEvolution> {
    grid.validate()?;
    evolve_fock_on(
        initial,
        drive,
        params,
        &grid.sample_times(),
        &oracle_stepper(grid.dt_max),
    )
}

/// As [`evolve_fock`] on explicit sample times, the first being the start.
pub fn evolve_fock_on(
    initial: &FockState,
    drive: &DriveWaveform,
    params: &SystemParams,
    times: &[f64],
    stepper: &DormandPrince,
) -> Result<FockEvolution> {
    params.validate()?;
    check_n_max(initial.n_max)?;
    let n_max = initial.n_max;
    let d = n_max + 1;
    let kernel = Kernel::new(n_max);
    let (ep, em) = (initial.s.exp(), (-initial.s).exp());
    let (gamma, t_e) = (params.gamma, params.t_e);
    let mut y = initial.to_flat();
    let mut mgf = Vec::with_capacity(times.len());
    let mut occ = Vec::with_capacity(times.len());
    propagate(
        stepper,
        drive,
        times,
        &mut y,
        |piece, t, y, dy| {
            let omega = piece.value(t);
            let (ge, ga) = rates(gamma, occupation(omega / t_e));
            kernel.tilted(omega, ge, ga, ep, em, y, dy);
        },
        |_, t, y| {
            let diag = |k: usize| Complex64::new(y[2 * (k + k * d)], y[2 * (k + k * d) + 1]);
            let top = diag(n_max).norm();
            if top > TRUNCATION_TOLERANCE {
                return Err(Error::Truncation {
                    weight: top,
                    t,
                    n_max,
                });
            }
            mgf.push((0..d).map(diag).sum());
            occ.push((0..d).map(|k| diag(k) * k as f64).sum());
            Ok(())
        },
        |_, _| Ok(()),
    )?;
    Ok(FockEvolution {
        times: times.to_vec(),
        mgf,
        occupation: occ,
        final_state: FockState::from_flat(n_max, initial.s, &y),
    })
}

/// Number-resolved density matrices ρ(m), m ∈ [−M, M].
#[derive(Debug, Clone, PartialEq)]
pub struct MResolvedState {
    pub n_max: usize,
    pub m_max: usize,
    pub rho: Vec<DMatrix<Complex64>>,
}

impl MResolvedState {
    pub fn probabilities(&self) -> Vec<f64> {
        self.rho.iter().map(|r| r.trace().re).collect()
    }

    /// Σ_m ρ(m).
    pub fn marginal(&self) -> DMatrix<Complex64> {
        let d = self.n_max + 1;
        self.rho.iter().fold(DMatrix::zeros(d, d), |acc, r| acc + r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MResolvedEvolution {
    pub times: Vec<f64>,
    /// `p[i][j]` is p(m = j − M) at `times[i]`.
    pub p: Vec<Vec<f64>>,
    pub final_state: MResolvedState,
}

impl MResolvedEvolution {
    pub fn distribution_at(&self, i: usize) -> Vec<f64> {
        self.p[i].clone()
    }
}

/// Evolves the m-resolved ladder from ρ(0) = initial at `grid.t_start`.
pub fn m_resolved_evolve(
    initial: &FockState,
    drive: &DriveWaveform,
    params: &SystemParams,
    m_max: usize,
    grid: &SimulationGrid,
) -> Result<MResolvedEvolution> {
    grid.validate()?;
    m_resolved_evolve_on(
        initial,
        drive,
        params,
        m_max,
        &grid.sample_times(),
        &oracle_stepper(grid.dt_max),
    )
}

/// As [`m_resolved_evolve`] on explicit sample times.
pub fn m_resolved_evolve_on(
    initial: &FockState,
    drive: &DriveWaveform,
    params: &SystemParams,
    m_max: usize,
    times: &[f64],
    stepper: &DormandPrince,
) -> Result<MResolvedEvolution> {
    params.validate()?;
    check_n_max(initial.n_max)?;
    if m_max == 0 {
        return Err(Error::Domain("m window must be at least 1".into()));
    }
    let n_max = initial.n_max;
    let d = n_max + 1;
    let block = 2 * d * d;
    let width = 2 * m_max + 1;
    let kernel = Kernel::new(n_max);
    let (gamma, t_e) = (params.gamma, params.t_e);
    let one = Complex64::new(1.0, 0.0);
    let mut y = vec![0.0; width * block];
    y[m_max * block..(m_max + 1) * block].copy_from_slice(&initial.to_flat());
    let mut p_out = Vec::with_capacity(times.len());
    propagate(
        stepper,
        drive,
        times,
        &mut y,
        |piece, t, y, dy| {
            let omega = piece.value(t);
            let (ge, ga) = rates(gamma, occupation(omega / t_e));
            for j in 0..width {
                let out = &mut dy[j * block..(j + 1) * block];
                kernel.no_jump(omega, ge, ga, &y[j * block..(j + 1) * block], out);
                // Emission raises m by one, absorption lowers it.
                if j >= 1 {
                    kernel.add_emission(one * ge, &y[(j - 1) * block..j * block], out);
                }
                if j + 1 < width {
                    kernel.add_absorption(one * ga, &y[(j + 1) * block..(j + 2) * block], out);
                }
            }
        },
        |_, t, y| {
            let tr = |j: usize| -> f64 { (0..d).map(|k| y[j * block + 2 * (k + k * d)]).sum() };
            let p: Vec<f64> = (0..width).map(tr).collect();
            let edge = p[0].abs().max(p[width - 1].abs());
            let total: f64 = p.iter().sum();
            let lost = (total - 1.0).abs();
            if edge > LEAKAGE_TOLERANCE || lost > LEAKAGE_TOLERANCE {
                return Err(Error::Leakage {
                    weight: edge.max(lost),
                    t,
                    window: m_max,
                });
            }
            let top: f64 = (0..width)
                .map(|j| y[j * block + 2 * (n_max + n_max * d)])
                .sum::<f64>()
                .abs();
            if top > TRUNCATION_TOLERANCE {
                return Err(Error::Truncation {
                    weight: top,
                    t,
                    n_max,
                });
            }
            p_out.push(p);
            Ok(())
        },
        |_, _| Ok(()),
    )?;
    let rho = (0..width)
        .map(|j| {
            FockState::from_flat(
                n_max,
                Complex64::new(0.0, 0.0),
                &y[j * block..(j + 1) * block],
            )
            .rho
        })
        .collect();
    Ok(MResolvedEvolution {
        times: times.to_vec(),
        p: p_out,
        final_state: MResolvedState { n_max, m_max, rho },
    })
}

/// Distribution at `t1` from tilted Fock runs on the θ grid, counting from
/// `t0` with ρ = initial.
pub fn tilted_distribution(
    initial: &FockState,
    drive: &DriveWaveform,
    params: &SystemParams,
    t0: f64,
    t1: f64,
    m_max: usize,
    stepper: &DormandPrince,
) -> Result<PhotonDistribution> {
    if m_max == 0 {
        return Err(Error::Domain("m_max must be at least 1".into()));
    }
    let thetas = theta_grid(theta_grid_size(m_max));
    let times = [t0, t1];
    let mgf = thetas
        .par_iter()
        .map(|&th| {
            let start = initial.clone().with_field(Complex64::new(0.0, th));
            let run = evolve_fock_on(&start, drive, params, &times, stepper)?;
            Ok(run.mgf[1])
        })
        .collect::<Result<Vec<_>>>()?;
    invert_characteristic(t1, m_max, &thetas, &mgf)
}

/// Fock state at `grid.t_start` matching the counting origin: relaxed onto
/// the periodic state for periodic drives, thermal otherwise.
pub fn periodic_fock_state(
    params: &SystemParams,
    drive: &DriveWaveform,
    grid: &SimulationGrid,
    n_max: usize,
) -> Result<FockState> {
    params.validate()?;
    grid.validate()?;
    let n_eq = bose_einstein(params.omega_bar, params.t_e)?;
    match (drive.kind(), drive.period()) {
        (DriveKind::Constant, _) => thermal_state(n_eq, n_max),
        (DriveKind::Tabulated, _) | (_, None) => {
            thermal_state(bose_einstein(drive.eval(grid.t_start)?, params.t_e)?, n_max)
        }
        (_, Some(tau)) => {
            let periods = grid
                .relax_periods
                .unwrap_or_else(|| default_relax_periods(params.gamma, tau));
            let start = thermal_state(n_eq, n_max)?;
            if periods == 0 {
                return Ok(start);
            }
            let t0 = grid.t_start - periods as f64 * tau;
            let run = evolve_fock_on(
                &start,
                drive,
                params,
                &[t0, grid.t_start],
                &oracle_stepper(grid.dt_max),
            )?;
            Ok(run.final_state)
        }
    }
}

/// Half the ℓ¹ distance between two distributions on a common window.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::WindowMismatch(p.len(), q.len()));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// One line of the cross-method report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub metric: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl OracleCheck {
    fn new(name: &str, metric: &str, value: f64, threshold: f64) -> Self {
        OracleCheck {
            name: name.into(),
            metric: metric.into(),
            value,
            threshold,
            passed: value.is_finite() && value < threshold,
        }
    }
}

/// Parameters of the driven cross-method case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivenCase {
    pub params: SystemParams,
    pub drive_amplitude: f64,
    pub drive_frequency: f64,
    pub n_max: usize,
    pub m_max: usize,
}

impl Default for DrivenCase {
    fn default() -> Self {
        DrivenCase {
            params: SystemParams {
                omega_bar: 1.0,
                gamma: 0.1,
                t_e: 1.0,
            },
            drive_amplitude: 0.3,
            drive_frequency: 0.1,
            n_max: 40,
            m_max: 30,
        }
    }
}

/// Distances between the counting module and both oracle routes after one
/// period of counting from the periodic state.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivenComparison {
    pub counting: PhotonDistribution,
    pub tilted: PhotonDistribution,
    pub ladder: Vec<f64>,
    pub tv_tilted: f64,
    pub tv_ladder: f64,
    /// |Σ m p_ladder − ⟨⟨m⟩⟩| against the first-order jet.
    pub mean_gap: f64,
}

pub fn compare_driven(case: &DrivenCase) -> Result<DrivenComparison> {
    let params = case.params;
    let tau = 2.0 * PI / case.drive_frequency;
    let drive = DriveWaveform::harmonic(params.omega_bar, case.drive_amplitude, tau, 0.0)?;
    let grid = SimulationGrid::new(0.0, tau, 0.5, 2)?;
    let n_init = counting_initial_occupation(&params, &drive, &grid)?;
    let counting = distribution_from(tau, case.m_max, &params, &drive, &grid, n_init)?;
    let start = periodic_fock_state(&params, &drive, &grid, case.n_max)?;
    let stepper = oracle_stepper(grid.dt_max);
    let tilted = tilted_distribution(&start, &drive, &params, 0.0, tau, case.m_max, &stepper)?;
    let ladder = m_resolved_evolve_on(&start, &drive, &params, case.m_max, &[0.0, tau], &stepper)?;
    let p_ladder = ladder.p[1].clone();
    let jets = cumulant_trajectories_from(
        1,
        &params,
        &drive,
        &[0.0, tau],
        n_init,
        &counting_stepper(&grid),
    )?;
    let mean: f64 = p_ladder
        .iter()
        .enumerate()
        .map(|(j, p)| (j as f64 - case.m_max as f64) * p)
        .sum();
    Ok(DrivenComparison {
        tv_tilted: total_variation(&counting.p, &tilted.p)?,
        tv_ladder: total_variation(&counting.p, &p_ladder)?,
        mean_gap: (mean - jets.cumulants[1][0]).abs(),
        counting,
        tilted,
        ladder: p_ladder,
    })
}

/// Largest |ln(M_oracle / e^C)| over the undriven equivalence points:
/// x = 1, θ ∈ {π/4, π/2}, γt ∈ {1, 5, 20}.
pub fn undriven_field_equivalence(n_max: usize) -> Result<f64> {
    let params = SystemParams::new(1.0, 0.1, 1.0)?;
    let drive = DriveWaveform::constant(1.0)?;
    let nb = params.n_bar();
    let times: Vec<f64> = [0.0, 1.0, 5.0, 20.0]
        .iter()
        .map(|g| g / params.gamma)
        .collect();
    let start = thermal_state(nb, n_max)?;
    let stepper = oracle_stepper(0.5);
    let mut worst = 0.0f64;
    for theta in [PI / 4.0, PI / 2.0] {
        let s = Complex64::new(0.0, theta);
        let fock = evolve_fock_on(
            &start.clone().with_field(s),
            &drive,
            &params,
            &times,
            &stepper,
        )?;
        let ode = evolve_counting_batch(&[s], &params, &drive, &times, nb, &stepper)?;
        for (m, st) in fock.mgf.iter().zip(&ode[0]).skip(1) {
            worst = worst.max((m / st.mgf()).ln().norm());
        }
    }
    Ok(worst)
}

/// Total variation between the undriven ladder at γt = 30 and the
/// equilibrium distribution, x = 1.
pub fn undriven_ladder_distance(n_max: usize, m_max: usize) -> Result<f64> {
    let params = SystemParams::new(1.0, 0.1, 1.0)?;
    let drive = DriveWaveform::constant(1.0)?;
    let start = thermal_state(params.n_bar(), n_max)?;
    let t = 30.0 / params.gamma;
    let run = m_resolved_evolve_on(
        &start,
        &drive,
        &params,
        m_max,
        &[0.0, t],
        &oracle_stepper(0.5),
    )?;
    let eq: Vec<f64> = (-(m_max as i64)..=m_max as i64)
        .map(|m| equilibrium_distribution(params.x(), m))
        .collect::<Result<_>>()?;
    total_variation(&run.p[1], &eq)
}

/// The default cross-method suite.
pub fn verification_suite() -> Result<Vec<OracleCheck>> {
    let field = undriven_field_equivalence(40)?;
    let ladder_eq = undriven_ladder_distance(40, 30)?;
    let driven = compare_driven(&DrivenCase::default())?;
    Ok(vec![
        OracleCheck::new("undriven_tilted_vs_counting", "max |ln M - C|", field, 1e-6),
        OracleCheck::new(
            "undriven_ladder_vs_equilibrium",
            "total variation",
            ladder_eq,
            1e-5,
        ),
        OracleCheck::new(
            "driven_tilted_vs_counting",
            "total variation",
            driven.tv_tilted,
            1e-4,
        ),
        OracleCheck::new(
            "driven_ladder_vs_counting",
            "total variation",
            driven.tv_ladder,
            1e-4,
        ),
        OracleCheck::new(
            "driven_ladder_mean_vs_jet",
            "|mean - c1|",
            driven.mean_gap,
            1e-6,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{occupancy_trajectory, thermo_observables};

    fn params(gamma: f64, t_e: f64) -> SystemParams {
        SystemParams::new(1.0, gamma, t_e).unwrap()
    }

    /// Deterministic pseudo-random density matrix supported on levels 0..6.
    fn mixed_state(n_max: usize, seed: u64) -> FockState {
        let active = n_max.min(6);
        let d = n_max + 1;
        let mut x = seed;
        let mut next = || {
            x = x
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut b = DMatrix::<Complex64>::zeros(d, d);
        for l in 0..d {
            for k in 0..active {
                b[(k, l)] = Complex64::new(next(), next());
            }
        }
        let rho = &b * b.adjoint();
        let tr = rho.trace();
        FockState {
            n_max,
            rho: rho / tr,
            s: Complex64::new(0.0, 0.0),
        }
    }

    #[test]
    fn thermal_state_examples() {
        let g = thermal_state(0.0, 5).unwrap();
        assert_eq!(g.rho[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(g.trace(), Complex64::new(1.0, 0.0));

        let h = thermal_state(1.0, 60).unwrap();
        assert!((h.trace().re - 1.0).abs() < 1e-12);
        for (k, p) in h.populations().iter().enumerate().take(50) {
            assert!((p - 0.5f64.powi(k as i32 + 1)).abs() < 1e-12);
        }

        let nb = 1.0 / (1f64.exp() - 1.0);
        let t = thermal_state(nb, 40).unwrap();
        assert!((t.occupation().re - nb).abs() < 1e-8);

        assert!(matches!(
            thermal_state(1.0, 10),
            Err(Error::Truncation { .. })
        ));
        assert!(thermal_state(-0.1, 10).is_err());
        assert!(thermal_state(0.5, 1).is_err());
        assert!(thermal_state(0.5, MAX_N_MAX + 1).is_err());
    }

    #[test]
    fn dense_generator_matches_matrix_free() {
        let p = params(0.3, 1.2);
        let state = mixed_state(6, 7).with_field(Complex64::new(0.2, -0.9));
        let g = build_tilted_generator(state.s, 1.3, &p, 6).unwrap();
        let vec_rho = DMatrix::from_column_slice(49, 1, state.rho.as_slice());
        let dense = &g * vec_rho;
        let free = apply_tilted_generator(&state, 1.3, &p).unwrap();
        for (a, b) in dense.iter().zip(free.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_field_generator_preserves_trace() {
        let p = params(0.4, 2.0);
        let n = 7;
        let d = n + 1;
        let g = build_tilted_generator(Complex64::new(0.0, 0.0), 0.8, &p, n).unwrap();
        for col in 0..d * d {
            let tr: Complex64 = (0..d).map(|k| g[(k + k * d, col)]).sum();
            assert!(tr.norm() < 1e-12, "column {col}");
        }
    }

    #[test]
    fn thermal_state_is_stationary() {
        let p = params(0.2, 1.0);
        let n = 40;
        let state = thermal_state(p.n_bar(), n).unwrap();
        let g = build_tilted_generator(Complex64::new(0.0, 0.0), 1.0, &p, n).unwrap();
        let vec_rho = DMatrix::from_column_slice((n + 1) * (n + 1), 1, state.rho.as_slice());
        let out = &g * vec_rho;
        assert!(out.iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn unitary_limit_keeps_trace() {
        let p = params(0.0, 1.0);
        let drive = DriveWaveform::harmonic(1.0, 0.3, 20.0, 0.0).unwrap();
        let state = mixed_state(6, 3).with_field(Complex64::new(0.4, 0.7));
        let g = build_tilted_generator(state.s, 1.0, &p, 6).unwrap();
        for l in 0..7 {
            for k in 0..7 {
                let i = k + 7 * l;
                for j in 0..49 {
                    let expect = if i == j {
                        Complex64::new(0.0, -(k as f64 - l as f64))
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    assert!((g[(i, j)] - expect).norm() < 1e-15);
                }
            }
        }
        let grid = SimulationGrid::new(0.0, 30.0, 0.5, 7).unwrap();
        let run = evolve_fock(&state, &drive, &p, &grid).unwrap();
        for m in &run.mgf {
            assert!((m - state.trace()).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_field_evolution_is_a_density_matrix() {
        let p = params(0.2, 1.0);
        let drive = DriveWaveform::square(1.0, 0.3, 30.0, 0.0).unwrap();
        let start = mixed_state(40, 11);
        let grid = SimulationGrid::new(0.0, 60.0, 0.5, 13).unwrap();
        let run = evolve_fock(&start, &drive, &p, &grid).unwrap();
        for m in &run.mgf {
            assert!((m - 1.0).norm() < 1e-9);
        }
        let end = &run.final_state;
        assert!(end.hermiticity_defect() < 1e-9);
        assert!(end.eigenvalues().iter().all(|&e| e >= -1e-9));
    }

    #[test]
    fn generator_first_moment_is_population_equation() {
        let p = params(0.3, 1.4);
        let omega = 0.9;
        let nb = bose_einstein(omega, p.t_e).unwrap();
        for seed in 1..5 {
            let state = mixed_state(12, seed);
            let l = apply_tilted_generator(&state, omega, &p).unwrap();
            let d_n: Complex64 = (0..13).map(|k| l[(k, k)] * k as f64).sum();
            let n = state.occupation().re;
            assert!((d_n.re - p.gamma * (nb - n)).abs() < 1e-10);
            assert!(d_n.im.abs() < 1e-12);
        }
    }

    #[test]
    fn undriven_tilted_trace_matches_counting() {
        assert!(undriven_field_equivalence(40).unwrap() < 1e-6);
    }

    #[test]
    fn undriven_tilted_state_stays_geometric() {
        let p = params(0.1, 1.0);
        let drive = DriveWaveform::constant(1.0).unwrap();
        let start = thermal_state(p.n_bar(), 40)
            .unwrap()
            .with_field(Complex64::new(0.0, PI / 2.0));
        let grid = SimulationGrid::new(0.0, 50.0, 0.5, 2).unwrap();
        let end = evolve_fock(&start, &drive, &p, &grid).unwrap().final_state;
        assert!(end.max_off_diagonal() < 1e-10);
        let r0 = end.rho[(1, 1)] / end.rho[(0, 0)];
        for k in 1..12 {
            let r = end.rho[(k + 1, k + 1)] / end.rho[(k, k)];
            assert!((r - r0).norm() < 1e-8, "level {k}");
        }
    }

    #[test]
    fn heat_current_matches_occupancy_dynamics() {
        let p = params(0.1, 1.0);
        let drive = DriveWaveform::harmonic(1.0, 0.3, 2.0 * PI / 0.1, 0.0).unwrap();
        let grid = SimulationGrid::new(0.0, 80.0, 0.5, 41).unwrap();
        let start = thermal_state(p.n_bar(), 40).unwrap();
        let fock = evolve_fock(&start, &drive, &p, &grid).unwrap();
        let occ = occupancy_trajectory(&p, &drive, &grid, start.occupation().re).unwrap();
        let thermo = thermo_observables(&occ, &drive, &p).unwrap();
        for (i, n) in fock.occupation.iter().enumerate() {
            let omega = thermo.omega[i];
            let nb = bose_einstein(omega, p.t_e).unwrap();
            let j = omega * p.gamma * (nb - n.re);
            assert!((j - thermo.heat_current[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn ladder_starts_at_zero_count() {
        let p = params(0.1, 1.0);
        let drive = DriveWaveform::constant(1.0).unwrap();
        let start = thermal_state(p.n_bar(), 30).unwrap();
        let grid = SimulationGrid::new(0.0, 1.0, 0.5, 2).unwrap();
        let run = m_resolved_evolve(&start, &drive, &p, 12, &grid).unwrap();
        assert!((run.p[0][12] - 1.0).abs() < 1e-14);
        assert!(run.p[0]
            .iter()
            .enumerate()
            .all(|(j, &v)| j == 12 || v == 0.0));
        assert!((run.p[1].iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn undriven_ladder_relaxes_to_equilibrium_distribution() {
        assert!(undriven_ladder_distance(30, 30).unwrap() < 1e-5);
    }

    #[test]
    fn ladder_marginal_is_zero_field_evolution() {
        let p = params(0.2, 1.0);
        let drive = DriveWaveform::sawtooth(1.0, 0.3, 15.0, 0.0).unwrap();
        let start = mixed_state(40, 5);
        let grid = SimulationGrid::new(0.0, 20.0, 0.5, 2).unwrap();
        let ladder = m_resolved_evolve(&start, &drive, &p, 25, &grid).unwrap();
        let plain = evolve_fock(&start, &drive, &p, &grid).unwrap();
        let marginal = ladder.final_state.marginal();
        for (a, b) in marginal.iter().zip(plain.final_state.rho.iter()) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn narrow_window_reports_leakage() {
        let p = params(0.2, 1.0);
        let drive = DriveWaveform::constant(1.0).unwrap();
        let start = thermal_state(p.n_bar(), 30).unwrap();
        let grid = SimulationGrid::new(0.0, 100.0, 0.5, 11).unwrap();
        assert!(matches!(
            m_resolved_evolve(&start, &drive, &p, 2, &grid),
            Err(Error::Leakage { .. })
        ));
    }

    #[test]
    fn hot_start_trips_truncation() {
        let p = params(0.2, 30.0);
        let drive = DriveWaveform::constant(1.0).unwrap();
        let start = thermal_state(0.5, 30).unwrap();
        let grid = SimulationGrid::new(0.0, 200.0, 0.5, 21).unwrap();
        assert!(matches!(
            evolve_fock(&start, &drive, &p, &grid),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn total_variation_examples() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(total_variation(&p, &p).unwrap(), 0.0);
        assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!(matches!(
            total_variation(&[1.0], &[0.5, 0.5]),
            Err(Error::WindowMismatch(1, 2))
        ));
        let eq = |x: f64| -> Vec<f64> {
            (-200..=200)
                .map(|m| equilibrium_distribution(x, m).unwrap())
                .collect()
        };
        let tv = total_variation(&eq(0.25), &eq(0.5)).unwrap();
        assert!((tv - 0.25332785099695224).abs() < 1e-13);
    }
}
