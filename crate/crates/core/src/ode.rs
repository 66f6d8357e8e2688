//! Embedded Dormand-Prince 5(4) integrator and a drive-aware driver that
//! places mandatory step boundaries at every drive breakpoint and output
//! sample.

use crate::error::{Error, Result};
use crate::model::{DriveWaveform, Piece};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
// Fifth-order weights; also the last stage row (FSAL).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth minus fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Step-size controller settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DormandPrince {
    pub atol: f64,
    pub rtol: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for DormandPrince {
    fn default() -> Self {
        DormandPrince {
            atol: 1e-10,
            rtol: 1e-10,
            h_max: f64::INFINITY,
            h_min: 1e-14,
            max_steps: 50_000_000,
        }
    }
}

/// Accepted and rejected step counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Scratch buffers reused across steps.
#[derive(Debug, Clone)]
pub struct Workspace {
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
    y_new: Vec<f64>,
}

impl Workspace {
    pub fn new(dim: usize) -> Self {
        Workspace {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            stage: vec![0.0; dim],
            y_new: vec![0.0; dim],
        }
    }
}

impl DormandPrince {
    pub fn with_tolerances(atol: f64, rtol: f64) -> Self {
        DormandPrince {
            atol,
            rtol,
            ..Default::default()
        }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    /// Advances `y` from `t0` to exactly `t1`. `h` carries the step-size
    /// proposal in and out.
    pub fn integrate<F>(
        &self,
        f: &mut F,
        t0: f64,
        t1: f64,
        y: &mut [f64],
        h: &mut f64,
        ws: &mut Workspace,
        stats: &mut StepStats,
    ) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(());
        }
        let dim = y.len();
        if !(*h > 0.0) || !h.is_finite() {
            *h = (0.01 * span).min(self.h_max);
        }
        let mut t = t0;
        f(t, y, &mut ws.k[0]);
        stats.evaluations += 1;
        loop {
            let remaining = t1 - t;
            let mut step = h.min(self.h_max);
            let last = step >= remaining * (1.0 - 1e-12);
            if last {
                step = remaining;
            }
            self.stages(f, t, step, y, ws);
            stats.evaluations += 6;

            let mut err = 0.0f64;
            for i in 0..dim {
                let e = step
                    * (E1 * ws.k[0][i]
                        + E3 * ws.k[2][i]
                        + E4 * ws.k[3][i]
                        + E5 * ws.k[4][i]
                        + E6 * ws.k[5][i]
                        + E7 * ws.k[6][i]);
                let scale = self.atol + self.rtol * y[i].abs().max(ws.y_new[i].abs());
                err = err.max(e.abs() / scale);
            }
            if !err.is_finite() {
                return Err(Error::StepFailure {
                    t,
                    reason: "non-finite error estimate".into(),
                });
            }
            if err <= 1.0 {
                stats.accepted += 1;
                y.copy_from_slice(&ws.y_new);
                ws.k.swap(0, 6);
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if last {
                    // Keep the proposal from the regular steps when the last
                    // one was clipped short.
                    if step >= *h {
                        *h = step * factor;
                    }
                    return Ok(());
                }
                t += step;
                *h = step * factor;
            } else {
                stats.rejected += 1;
                *h = step * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            }
            if *h < self.h_min {
                return Err(Error::StepFailure {
                    t,
                    reason: format!("step size {:e} below minimum {:e}", *h, self.h_min),
                });
            }
            if stats.accepted + stats.rejected > self.max_steps {
                return Err(Error::StepFailure {
                    t,
                    reason: format!("exceeded {} steps", self.max_steps),
                });
            }
        }
    }

    fn stages<F>(&self, f: &mut F, t: f64, h: f64, y: &[f64], ws: &mut Workspace)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let dim = y.len();
        let Workspace { k, stage, y_new } = ws;
        let [k1, k2, k3, k4, k5, k6, k7] = k;
        for i in 0..dim {
            stage[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, stage, k2);
        for i in 0..dim {
            stage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, stage, k3);
        for i in 0..dim {
            stage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, stage, k4);
        for i in 0..dim {
            stage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, stage, k5);
        for i in 0..dim {
            stage[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, stage, k6);
        for i in 0..dim {
            y_new[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        f(t + h, y_new, k7);
    }
}

/// A frequency jump crossed during propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub t: f64,
    pub omega_before: f64,
    pub omega_after: f64,
}

/// Integrates `y` across `sample_times` under `drive`.
///
/// Steps never straddle a drive breakpoint: on each stretch the right-hand
/// side sees the closed-form [`Piece`] valid there. `on_jump` fires for
/// value jumps in (t_first, t_last], before the sample at the same time.
pub fn propagate<R, S, J>(
    stepper: &DormandPrince,
    drive: &DriveWaveform,
    sample_times: &[f64],
    y: &mut [f64],
    mut rhs: R,
    mut on_sample: S,
    mut on_jump: J,
) -> Result<StepStats>
where
    R: FnMut(&Piece, f64, &[f64], &mut [f64]),
    S: FnMut(usize, f64, &[f64]) -> Result<()>,
    J: FnMut(JumpEvent, &[f64]) -> Result<()>,
{
    let mut stats = StepStats::default();
    let Some(&t_first) = sample_times.first() else {
        return Ok(stats);
    };
    let t_last = *sample_times.last().unwrap();
    if sample_times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::GridMismatch(
            "sample times must be non-decreasing".into(),
        ));
    }

    #[derive(Clone, Copy)]
    enum Stop {
        Break { jump: bool },
        Sample(usize),
    }
    let mut stops: Vec<(f64, Stop)> = drive
        .breakpoints(t_first, t_last)?
        .into_iter()
        .filter(|b| b.t > t_first)
        .map(|b| (b.t, Stop::Break { jump: b.jump }))
        .collect();
    stops.extend(
        sample_times
            .iter()
            .enumerate()
            .map(|(i, &t)| (t, Stop::Sample(i))),
    );
    // Breakpoints sort before samples at equal times.
    stops.sort_by(|a, b| {
        a.0.total_cmp(&b.0).then_with(|| {
            let rank = |s: &Stop| matches!(s, Stop::Sample(_)) as u8;
            rank(&a.1).cmp(&rank(&b.1))
        })
    });

    let mut ws = Workspace::new(y.len());
    let mut h = f64::NAN;
    let mut t = t_first;
    for (t_stop, stop) in stops {
        if t_stop > t {
            let piece = drive.piece_at(t)?;
            let mut f = |tt: f64, yy: &[f64], dy: &mut [f64]| rhs(&piece, tt, yy, dy);
            stepper.integrate(&mut f, t, t_stop, y, &mut h, &mut ws, &mut stats)?;
            t = t_stop;
        }
        match stop {
            Stop::Sample(i) => on_sample(i, t, y)?,
            Stop::Break { jump: true } => {
                let (omega_before, omega_after) = drive.one_sided(t)?;
                on_jump(
                    JumpEvent {
                        t,
                        omega_before,
                        omega_after,
                    },
                    y,
                )?;
            }
            Stop::Break { jump: false } => {}
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_to_tolerance() {
        let dp = DormandPrince::default();
        let mut y = [1.0];
        let mut h = f64::NAN;
        let mut ws = Workspace::new(1);
        let mut stats = StepStats::default();
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = -0.7 * y[0];
        dp.integrate(&mut f, 0.0, 10.0, &mut y, &mut h, &mut ws, &mut stats)
            .unwrap();
        assert!((y[0] - (-7.0f64).exp()).abs() < 1e-10);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let dp = DormandPrince::with_tolerances(1e-12, 1e-12);
        let mut y = [1.0, 0.0];
        let mut h = f64::NAN;
        let mut ws = Workspace::new(2);
        let mut stats = StepStats::default();
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let t1 = 20.0 * std::f64::consts::PI;
        dp.integrate(&mut f, 0.0, t1, &mut y, &mut h, &mut ws, &mut stats)
            .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9);
    }

    #[test]
    fn lands_exactly_on_end() {
        let dp = DormandPrince::default().with_h_max(0.3);
        let mut y = [0.0];
        let mut h = f64::NAN;
        let mut ws = Workspace::new(1);
        let mut stats = StepStats::default();
        let mut f = |_t: f64, _y: &[f64], dy: &mut [f64]| dy[0] = 1.0;
        dp.integrate(&mut f, 0.1, 1.0, &mut y, &mut h, &mut ws, &mut stats)
            .unwrap();
        assert!((y[0] - 0.9).abs() < 1e-15);
        assert!(stats.accepted >= 3);
    }

    #[test]
    fn step_failure_is_reported() {
        let dp = DormandPrince {
            max_steps: 5,
            ..Default::default()
        };
        let mut y = [1.0];
        let mut h = f64::NAN;
        let mut ws = Workspace::new(1);
        let mut stats = StepStats::default();
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = -y[0];
        let err = dp
            .integrate(&mut f, 0.0, 1000.0, &mut y, &mut h, &mut ws, &mut stats)
            .unwrap_err();
        assert!(matches!(err, Error::StepFailure { .. }));
    }

    #[test]
    fn propagate_integrates_square_drive_exactly() {
        // ∂t y = ω₀(t): the integral of a square wave over whole periods is
        // ω̄₀ times the span, with jumps only at exact boundaries.
        let tau = 10.0;
        let drive = DriveWaveform::square(1.0, 0.5, tau, 0.3).unwrap();
        let times: Vec<f64> = (0..=7).map(|i| i as f64 * 5.0).collect();
        let mut y = [0.0];
        let mut jumps = Vec::new();
        let mut samples = Vec::new();
        propagate(
            &DormandPrince::default(),
            &drive,
            &times,
            &mut y,
            |p, t, _y, dy| dy[0] = p.value(t),
            |_, t, y| {
                samples.push((t, y[0]));
                Ok(())
            },
            |ev, _| {
                jumps.push(ev);
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(samples.len(), times.len());
        assert!((samples[2].1 - 10.0).abs() < 1e-12);
        assert!((samples[6].1 - 30.0).abs() < 1e-12);
        assert_eq!(jumps.len(), 7);
        for ev in &jumps {
            assert!((ev.omega_before - ev.omega_after).abs() > 0.99);
        }
    }
}
