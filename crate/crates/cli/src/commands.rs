//! Subcommand bodies. Each default configuration is a reference setting
//! documented in the README; `--params` replaces it wholesale.

use std::f64::consts::PI;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use resonator_core::analysis::{harmonic, period_mean};
use resonator_core::counting::{
    counting_initial_occupation, counting_stepper, cumulant_trajectories,
    cumulant_trajectories_from, distribution,
};
use resonator_core::dynamics::{occupancy_trajectory, relax_to_periodic, thermo_observables};
use resonator_core::linear_response::{
    equilibrium_cumulants, heat_response, lr_cumulant_response, power_response, temp_response,
};
use resonator_core::oracle::verification_suite;
use resonator_core::{Config, DriveConfig, DriveKind, SimulationGrid, SystemParams};

use crate::output::{Run, Table};

const TAU: f64 = 2.0 * PI / 0.1;

fn config(kind: DriveKind, amplitude: f64, gamma: f64, t_e: f64, periods: f64, n: usize) -> Config {
    Config {
        system: SystemParams {
            omega_bar: 1.0,
            gamma,
            t_e,
        },
        drive: DriveConfig {
            kind,
            amplitude,
            period: Some(TAU),
            phase: 0.0,
            knots: None,
        },
        grid: SimulationGrid {
            t_start: 0.0,
            t_end: periods * TAU,
            dt_max: 0.5,
            n_samples: n,
            relax_periods: None,
        },
    }
}

/// Square drive, Δω₀ = 0.1, τ = 2π/0.1, T_e = 1.5, γ = 0.05, two periods.
pub fn default_temperature() -> Config {
    config(DriveKind::Square, 0.1, 0.05, 1.5, 2.0, 1025)
}

/// Square drive, Δω₀ = 0.7, γ = 0.05, T_e = 1.5, one period.
pub fn default_thermo() -> Config {
    config(DriveKind::Square, 0.7, 0.05, 1.5, 1.0, 1025)
}

/// Harmonic drive, Δω₀ = 0.1, Ω = γ = 0.1, T_e = 1.5, one period.
pub fn default_linear_response() -> Config {
    config(DriveKind::Harmonic, 0.1, 0.1, 1.5, 1.0, 1025)
}

/// Harmonic drive, Δω₀ = 0.6, Ω = γ = 0.1, T_e = 4, seven periods.
pub fn default_cumulants() -> Config {
    config(DriveKind::Harmonic, 0.6, 0.1, 4.0, 7.0, 897)
}

/// Harmonic drive, Δω₀ = 0.01, Ω = γ = 0.1, T_e = 4, seven periods.
pub fn default_lr_cumulants() -> Config {
    config(DriveKind::Harmonic, 0.01, 0.1, 4.0, 7.0, 257)
}

/// Same setting as [`default_cumulants`].
pub fn default_distribution() -> Config {
    default_cumulants()
}

pub struct Options {
    pub order: usize,
    pub at_time: Option<f64>,
    pub m_max: usize,
}

fn units(cfg: &Config) -> String {
    format!(
        "units: hbar = k_B = 1, frequencies in omega_bar = {}; gamma = {}, T_e = {}",
        cfg.system.omega_bar, cfg.system.gamma, cfg.system.t_e
    )
}

pub fn temperature(cfg: &Config, run: &mut Run) -> Result<()> {
    let drive = cfg.waveform()?;
    let n0 = counting_initial_occupation(&cfg.system, &drive, &cfg.grid)?;
    let occ = occupancy_trajectory(&cfg.system, &drive, &cfg.grid, n0)?;
    let temps = occ.temperatures()?;
    let mut t = Table::new(&["t", "omega", "n", "T"])
        .comment(units(cfg))
        .comment("t in 1/omega_bar, T in hbar omega_bar / k_B");
    for i in 0..occ.times.len() {
        t.row(&[occ.times[i], occ.omega[i], occ.n[i], temps[i]]);
    }
    run.write("temperature.csv", &t)
}

pub fn thermo(cfg: &Config, run: &mut Run) -> Result<()> {
    let drive = cfg.waveform()?;
    let n0 = counting_initial_occupation(&cfg.system, &drive, &cfg.grid)?;
    let occ = occupancy_trajectory(&cfg.system, &drive, &cfg.grid, n0)?;
    let th = thermo_observables(&occ, &drive, &cfg.system)?;
    let mut t = Table::new(&["t", "omega", "n", "T", "U", "P", "J", "W", "Q"])
        .comment(units(cfg))
        .comment("U, W, Q in hbar omega_bar; P, J in hbar omega_bar^2; W excludes impulses");
    for i in 0..th.times.len() {
        t.row(&[
            th.times[i],
            th.omega[i],
            th.n[i],
            th.temperature[i],
            th.energy[i],
            th.power[i],
            th.heat_current[i],
            th.work[i],
            th.heat[i],
        ]);
    }
    run.write("thermo.csv", &t)?;
    let mut imp = Table::new(&["t", "work"])
        .comment(units(cfg))
        .comment("impulse work n (omega_after - omega_before) at frequency jumps");
    for ev in &th.impulses {
        imp.row(&[ev.t, ev.work]);
    }
    run.write("impulses.csv", &imp)
}

fn harmonic_period(cfg: &Config) -> Result<f64> {
    if cfg.drive.kind != DriveKind::Harmonic {
        bail!("this subcommand requires a harmonic drive");
    }
    Ok(cfg
        .waveform()?
        .period()
        .expect("harmonic drives are periodic"))
}

fn log_sweep(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn response_table(cfg: &Config, what: &str, f: impl Fn(f64) -> Complex64) -> Table {
    let mut t = Table::new(&["Omega", "Re", "Im", "modulus", "argument"])
        .comment(units(cfg))
        .comment(format!("{what} per unit frequency modulation"));
    for w in log_sweep(1e-3, 1e1, 81) {
        let h = f(w);
        t.row(&[w, h.re, h.im, h.norm(), h.arg()]);
    }
    t
}

pub fn linear_response(cfg: &Config, run: &mut Run) -> Result<()> {
    let tau = harmonic_period(cfg)?;
    let drive = cfg.waveform()?;
    let p = &cfg.system;
    let grid = SimulationGrid {
        t_end: cfg.grid.t_start + tau,
        ..cfg.grid
    };
    let state = relax_to_periodic(p, &drive, &grid)?;
    let th = thermo_observables(&state.trajectory, &drive, p)?;
    let omega = 2.0 * PI / tau;
    let d_hat = harmonic(&th.times, &th.omega, 1);
    let responses = [
        temp_response(omega, p),
        power_response(omega, p),
        heat_response(omega, p),
    ];
    let baselines = [p.t_e, 0.0, 0.0];
    let lr = |k: usize, t: f64| -> f64 {
        baselines[k] + (responses[k] * d_hat * Complex64::from_polar(1.0, omega * t)).re
    };
    let mut t = Table::new(&["t", "omega", "T", "T_lr", "P", "P_lr", "J", "J_lr"])
        .comment(units(cfg))
        .comment("one period of the periodic state; *_lr columns are linear-response predictions");
    for i in 0..th.times.len() {
        let s = th.times[i];
        t.row(&[
            s,
            th.omega[i],
            th.temperature[i],
            lr(0, s),
            th.power[i],
            lr(1, s),
            th.heat_current[i],
            lr(2, s),
        ]);
    }
    run.write("linear_response.csv", &t)?;
    run.write(
        "temp_response.csv",
        &response_table(cfg, "temperature response", |w| temp_response(w, p)),
    )?;
    run.write(
        "power_response.csv",
        &response_table(cfg, "power response", |w| power_response(w, p)),
    )?;
    run.write(
        "heat_response.csv",
        &response_table(cfg, "heat-current response", |w| heat_response(w, p)),
    )
}

fn equilibrium_comment(x: f64, order: usize) -> Result<String> {
    let eq = equilibrium_cumulants(x, order)?;
    Ok(format!(
        "undriven equilibrium cumulants: {}",
        eq.iter()
            .enumerate()
            .map(|(k, c)| format!("c{}={}", k + 1, crate::output::num(*c)))
            .collect::<Vec<_>>()
            .join(" ")
    ))
}

pub fn cumulants(cfg: &Config, opts: &Options, run: &mut Run) -> Result<()> {
    let drive = cfg.waveform()?;
    let jets = cumulant_trajectories(opts.order, &cfg.system, &drive, &cfg.grid)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=opts.order).map(|k| format!("c{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new(&header)
        .comment(units(cfg))
        .comment(
            "cumulants of the net photon number emitted into the reservoir, counted from t_start",
        )
        .comment(equilibrium_comment(cfg.system.x(), opts.order)?);
    for (i, row) in jets.cumulants.iter().enumerate() {
        let mut cells = vec![jets.times[i]];
        cells.extend(row);
        t.row(&cells);
    }
    run.write("cumulants.csv", &t)
}

pub fn lr_cumulants(cfg: &Config, opts: &Options, run: &mut Run) -> Result<()> {
    let tau = harmonic_period(cfg)?;
    let drive = cfg.waveform()?;
    let p = &cfg.system;
    let g = &cfg.grid;
    if g.t_end - tau < g.t_start {
        bail!("lr-cumulants needs at least one drive period in the grid");
    }
    let cells = g.n_samples.max(3) - 1;
    let mut times = vec![g.t_start];
    times.extend((0..=cells).map(|i| {
        if i == cells {
            g.t_end
        } else {
            g.t_end - tau + tau * i as f64 / cells as f64
        }
    }));
    if times[1] == times[0] {
        times.remove(0);
    }
    let n0 = counting_initial_occupation(p, &drive, g)?;
    let jets = cumulant_trajectories_from(opts.order, p, &drive, &times, n0, &counting_stepper(g))?;
    let skip = times.len() - (cells + 1);
    let period_times = &times[skip..];
    let omega_t: Vec<f64> = period_times
        .iter()
        .map(|&t| drive.eval(t))
        .collect::<Result<_, _>>()?;
    let omega = 2.0 * PI / tau;
    let d_hat = harmonic(period_times, &omega_t, 1);

    let mut header = vec!["t".to_string(), "omega".to_string()];
    for k in 1..=opts.order {
        header.push(format!("c{k}"));
        header.push(format!("c{k}_lr"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut series = Table::new(&header).comment(units(cfg)).comment(
        "last drive period; c_k_lr is the period mean plus the linear-response modulation",
    );
    let mut table = Table::new(&[
        "k",
        "Omega",
        "Re",
        "Im",
        "modulus",
        "argument",
        "sim_Re",
        "sim_Im",
        "sim_modulus",
        "sim_argument",
    ])
    .comment(units(cfg))
    .comment("cumulant response per unit frequency modulation at the drive frequency");

    let mut lr_rows = Vec::new();
    for k in 1..=opts.order {
        let ck: Vec<f64> = jets.cumulant(k)[skip..].to_vec();
        let mean = period_mean(&ck);
        let h = lr_cumulant_response(k, omega, p)?;
        let sim = harmonic(period_times, &ck, 1) / d_hat;
        table.labelled_row(
            k as i64,
            &[
                omega,
                h.re,
                h.im,
                h.norm(),
                h.arg(),
                sim.re,
                sim.im,
                sim.norm(),
                sim.arg(),
            ],
        );
        let lr: Vec<f64> = period_times
            .iter()
            .map(|&t| mean + (h * d_hat * Complex64::from_polar(1.0, omega * t)).re)
            .collect();
        lr_rows.push((ck, lr));
    }
    for (i, &t) in period_times.iter().enumerate() {
        let mut cells = vec![t, omega_t[i]];
        for (ck, lr) in &lr_rows {
            cells.push(ck[i]);
            cells.push(lr[i]);
        }
        series.row(&cells);
    }
    run.write("lr_cumulants.csv", &series)?;
    run.write("lr_cumulant_response.csv", &table)
}

pub fn distribution_cmd(cfg: &Config, opts: &Options, run: &mut Run) -> Result<Vec<String>> {
    let drive = cfg.waveform()?;
    let g = &cfg.grid;
    let t = opts.at_time.unwrap_or(g.t_end);
    let mut warnings = Vec::new();
    let mut table = Table::new(&["m", "p"]).comment(units(cfg)).comment(format!(
        "net photons emitted into the reservoir between t_start = {} and t = {}",
        g.t_start, t
    ));
    if t == g.t_start {
        table.labelled_row(0, &[1.0]);
    } else {
        let d = distribution(t, opts.m_max, &cfg.system, &drive, g)
            .with_context(|| format!("distribution at t = {t}"))?;
        if d.aliased {
            warnings.push(format!(
                "p(±{}) exceeds 1e-6: widen --m-max to avoid aliasing",
                opts.m_max
            ));
        }
        for (m, p) in d.m_values().zip(&d.p) {
            table.labelled_row(m, &[*p]);
        }
    }
    run.write("distribution.csv", &table)?;
    Ok(warnings)
}

pub fn verify_oracle(run: &mut Run) -> Result<bool> {
    let report = verification_suite()?;
    let mut table = Table::new(&["case", "metric", "value", "threshold", "passed"])
        .comment("cross-method checks between the counting equations and the Fock-space oracle");
    for c in &report {
        println!(
            "{} {}: {} = {:.3e} (threshold {:.0e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.metric,
            c.value,
            c.threshold
        );
        table.raw_row(&[
            c.name.clone(),
            c.metric.clone(),
            crate::output::num(c.value),
            crate::output::num(c.threshold),
            c.passed.to_string(),
        ]);
    }
    run.write("oracle_report.csv", &table)?;
    Ok(report.iter().all(|c| c.passed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for cfg in [
            default_temperature(),
            default_thermo(),
            default_linear_response(),
            default_cumulants(),
            default_lr_cumulants(),
            default_distribution(),
        ] {
            cfg.validate().unwrap();
            let back = Config::from_json(&cfg.to_json()).unwrap();
            assert_eq!(back.to_json(), cfg.to_json());
        }
    }

    #[test]
    fn sweep_spans_its_endpoints() {
        let w = log_sweep(1e-3, 1e1, 81);
        assert!((w[0] - 1e-3).abs() < 1e-15);
        assert!((w[80] - 1e1).abs() < 1e-12);
        assert!((w[40] - 0.1).abs() < 1e-12);
    }
}
