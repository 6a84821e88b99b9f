//! Pulse programs: coin rotations, dipole-force pulses and waits in
//! absolute time, and the protocols built from them (combined pulse, walk
//! program, `T_D` scans and position calibration).

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dipole::{HybridState, Propagator};
use crate::error::{Error, Result};
use crate::fock::{coherent_state, MotionalState};
use crate::params::{SimParams, HBAR};

/// One element of a pulse program.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseEvent {
    /// Instantaneous coin rotation `R(θ, φ)`.
    Rf { theta: f64, phi: f64 },
    /// Dipole force switched on for `duration` seconds.
    Dipole { duration: f64 },
    /// Free evolution; the drive phase keeps advancing.
    Wait { duration: f64 },
}

impl PulseEvent {
    pub fn duration(&self) -> f64 {
        match *self {
            PulseEvent::Rf { .. } => 0.0,
            PulseEvent::Dipole { duration } | PulseEvent::Wait { duration } => duration,
        }
    }
}

/// A pulse event with its absolute start time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedEvent {
    pub start: f64,
    #[serde(flatten)]
    pub event: PulseEvent,
}

/// Timing of one shift operation in units of `T_D`.
///
/// The second dipole pulse starts `(1 + wait)·T_D` after the first one; for
/// `T_D = π/δ` and even `wait` this reverses the force direction, which
/// together with the coin swap sends both branches apart by equal amounts.
/// `post_wait` adds free evolution after the second coin swap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLayout {
    pub wait: f64,
    pub post_wait: f64,
}

impl StepLayout {
    pub fn new(wait: f64) -> Self {
        StepLayout { wait, post_wait: 0.0 }
    }

    pub fn with_post_wait(mut self, post_wait: f64) -> Self {
        self.post_wait = post_wait;
        self
    }

    /// Duration of one shift in units of `T_D`.
    pub fn period(&self) -> f64 {
        2.0 + self.wait + self.post_wait
    }
}

/// Wait of `4 T_D` and post-wait of `6 T_D`, a 12 `T_D` step period.
impl Default for StepLayout {
    fn default() -> Self {
        StepLayout::new(4.0).with_post_wait(6.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseProgram {
    pub events: Vec<PulseEvent>,
    pub params: SimParams,
    pub layout: StepLayout,
}

impl PulseProgram {
    pub fn new(events: Vec<PulseEvent>, params: SimParams, layout: StepLayout) -> Result<Self> {
        let p = PulseProgram { events, params, layout };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.events.is_empty() {
            return Err(Error::invalid("pulse program is empty"));
        }
        for e in &self.events {
            let d = e.duration();
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::invalid(format!("event duration must be >= 0, got {d}")));
            }
            if let PulseEvent::Rf { theta, phi } = e {
                if !theta.is_finite() || !phi.is_finite() {
                    return Err(Error::invalid("non-finite RF angle"));
                }
            }
        }
        if !(self.layout.wait >= 0.0 && self.layout.post_wait >= 0.0) {
            return Err(Error::invalid("wait multipliers must be >= 0"));
        }
        self.params.validate()
    }

    /// Events with absolute start times, starting at `t0`.
    pub fn timeline(&self, t0: f64) -> Vec<TimedEvent> {
        let mut t = t0;
        self.events
            .iter()
            .map(|e| {
                let te = TimedEvent { start: t, event: *e };
                t += e.duration();
                te
            })
            .collect()
    }

    pub fn total_duration(&self) -> f64 {
        self.events.iter().map(PulseEvent::duration).sum()
    }

    /// Runs the program on `state`.
    pub fn execute(&self, state: &HybridState) -> Result<HybridState> {
        let prop = Propagator::new(&self.params)?;
        self.execute_with(&prop, state)
    }

    /// Runs the program with a prebuilt propagator (which must share
    /// `self.params`).
    pub fn execute_with(&self, prop: &Propagator, state: &HybridState) -> Result<HybridState> {
        let mut s = state.clone();
        for e in &self.events {
            s = match *e {
                PulseEvent::Rf { theta, phi } => s.rotate_coin(theta, phi),
                PulseEvent::Dipole { duration } => prop.propagate(&s, duration)?,
                PulseEvent::Wait { duration } => s.wait(duration),
            };
        }
        Ok(s)
    }

    /// Serializable view with absolute start times.
    pub fn export(&self) -> ProgramExport {
        ProgramExport {
            params: self.params,
            layout: self.layout,
            total_duration: self.total_duration(),
            events: self.timeline(0.0),
        }
    }
}

/// A pulse program as written to disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramExport {
    pub params: SimParams,
    pub layout: StepLayout,
    pub total_duration: f64,
    pub events: Vec<TimedEvent>,
}

/// `[Dipole(T_D), RF(π,0), Wait(wait·T_D), Dipole(T_D), RF(π,0)]`, followed by
/// `Wait(post_wait·T_D)` when the layout asks for one.
pub fn combined_pulse(t_d: f64, layout: StepLayout) -> Vec<PulseEvent> {
    let mut v = vec![
        PulseEvent::Dipole { duration: t_d },
        PulseEvent::Rf { theta: PI, phi: 0.0 },
        PulseEvent::Wait {
            duration: layout.wait * t_d,
        },
        PulseEvent::Dipole { duration: t_d },
        PulseEvent::Rf { theta: PI, phi: 0.0 },
    ];
    if layout.post_wait > 0.0 {
        v.push(PulseEvent::Wait {
            duration: layout.post_wait * t_d,
        });
    }
    v
}

/// The shift run backwards: a `π/δ` wait flips the force direction of the
/// following combined pulse.
pub fn combined_pulse_inverse(t_d: f64, layout: StepLayout, params: &SimParams) -> Vec<PulseEvent> {
    let mut v = vec![PulseEvent::Wait {
        duration: params.half_period(),
    }];
    v.extend(combined_pulse(t_d, layout));
    v
}

/// Coin `R(π/2, φ)` followed by a combined pulse, `n_steps` times. In the
/// symmetric variant the first coin phase is shifted by `π/2`.
pub fn walk_program(
    n_steps: usize,
    t_d: f64,
    symmetric: bool,
    params: &SimParams,
    layout: StepLayout,
    phi: f64,
) -> Result<PulseProgram> {
    if n_steps == 0 {
        return Err(Error::invalid("walk program needs at least one step"));
    }
    if !(t_d > 0.0 && t_d.is_finite()) {
        return Err(Error::invalid(format!("T_D must be > 0, got {t_d}")));
    }
    let mut events = Vec::new();
    for i in 0..n_steps {
        let coin_phi = if symmetric && i == 0 { phi + FRAC_PI_2 } else { phi };
        events.push(PulseEvent::Rf {
            theta: FRAC_PI_2,
            phi: coin_phi,
        });
        events.extend(combined_pulse(t_d, layout));
    }
    PulseProgram::new(events, *params, layout)
}

/// One point of a `T_D` scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub t_d: f64,
    pub p_t: f64,
    pub p_h: f64,
}

impl ScanPoint {
    pub fn ratio(&self) -> f64 {
        self.p_t / self.p_h
    }
}

/// Runs the program returned by `make` on `|T⟩|0⟩` and reports the coin
/// probabilities.
pub fn scan_point<F>(make: &F, t_d: f64) -> Result<ScanPoint>
where
    F: Fn(f64) -> Result<PulseProgram>,
{
    let prog = make(t_d)?;
    let out = prog.execute(&HybridState::ground_tails(prog.params.dim))?;
    let (p_t, p_h) = out.coin_probabilities();
    Ok(ScanPoint { t_d, p_t, p_h })
}

/// Evaluates `points` equally spaced `T_D` values in `[lo, hi]` in parallel.
pub fn scan_td<F>(make: F, lo: f64, hi: f64, points: usize) -> Result<Vec<ScanPoint>>
where
    F: Fn(f64) -> Result<PulseProgram> + Sync,
{
    if !(lo > 0.0 && hi > lo) || points < 2 {
        return Err(Error::invalid("scan needs 0 < lo < hi and at least 2 points"));
    }
    (0..points)
        .into_par_iter()
        .map(|i| scan_point(&make, lo + (hi - lo) * i as f64 / (points - 1) as f64))
        .collect()
}

/// Golden-section search for the `T_D` maximizing `P_T/P_H` in `[lo, hi]`.
pub fn optimize_td<F>(make: F, lo: f64, hi: f64, rel_tol: f64) -> Result<ScanPoint>
where
    F: Fn(f64) -> Result<PulseProgram>,
{
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = scan_point(&make, c)?;
    let mut fd = scan_point(&make, d)?;
    while (b - a) > rel_tol * 0.5 * (a + b) {
        if fc.ratio() > fd.ratio() {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = scan_point(&make, c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = scan_point(&make, d)?;
        }
    }
    Ok(if fc.ratio() > fd.ratio() { fc } else { fd })
}

/// Local maxima of `P_T/P_H` along a scan, strongest first.
pub fn ratio_maxima(scan: &[ScanPoint]) -> Vec<ScanPoint> {
    let mut m: Vec<ScanPoint> = scan
        .windows(3)
        .filter(|w| w[1].ratio() > w[0].ratio() && w[1].ratio() >= w[2].ratio())
        .map(|w| w[1])
        .collect();
    m.sort_by(|a, b| b.ratio().total_cmp(&a.ratio()));
    m
}

/// Local maxima of the splitting `|P_T − P_H|` above `min_abs`, in scan
/// order. Sign-flipped splittings (`P_H > P_T`) are included.
pub fn splitting_extrema(scan: &[ScanPoint], min_abs: f64) -> Vec<ScanPoint> {
    let s = |p: &ScanPoint| (p.p_t - p.p_h).abs();
    scan.windows(3)
        .filter(|w| s(&w[1]) > s(&w[0]) && s(&w[1]) >= s(&w[2]) && s(&w[1]) > min_abs)
        .map(|w| w[1])
        .collect()
}

/// Calibration record of the position state reached after `k` shifts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionState {
    pub k: usize,
    pub state: MotionalState,
    pub mean_n: f64,
    /// `|⟨α̃_k|α̃_{k+1}⟩|²`; absent for the last position.
    pub overlap_next: Option<f64>,
    /// `|⟨α̃_k|α⟩|²` with the coherent state of equal mean amplitude `⟨a⟩`.
    pub fidelity: f64,
}

/// Applies `k = 0..=k_max` combined pulses (no coins) to `|T⟩|0⟩`.
pub fn calibrate_positions(
    k_max: usize,
    params: &SimParams,
    t_d: f64,
    layout: StepLayout,
) -> Result<Vec<PositionState>> {
    let prog = PulseProgram::new(combined_pulse(t_d, layout), *params, layout)?;
    let prop = Propagator::new(params)?;
    let mut s = HybridState::ground_tails(params.dim);
    let mut states = vec![s.t_part.clone()];
    for _ in 0..k_max {
        s = prog.execute_with(&prop, &s)?;
        if s.h_part.norm_sqr() > 1e-6 {
            return Err(Error::invalid("combined pulse left population in |H⟩"));
        }
        states.push(s.t_part.normalized()?);
    }
    let mut out = Vec::with_capacity(states.len());
    for (k, m) in states.iter().enumerate() {
        let ideal = coherent_state(m.mean_a(), params.dim)?;
        out.push(PositionState {
            k,
            state: m.clone(),
            mean_n: m.mean_n(),
            overlap_next: states.get(k + 1).map(|n| m.fidelity(n)),
            fidelity: m.fidelity(&ideal),
        });
    }
    Ok(out)
}

/// Dipole-force amplitude `F_T = ħηΩ_D/(2z₀)` in newtons.
pub fn force_amplitude(params: &SimParams) -> f64 {
    HBAR * params.eta * params.omega_d / (2.0 * params.z0)
}

/// Step `Δα` of the combined pulse in the LDA at `T_D = π/δ` and for the
/// given layout: `(1 − force_ratio)·ηΩ_D/δ` along the first pulse direction.
pub fn lda_step(params: &SimParams) -> C64 {
    let first = crate::dipole::lda_map(params, 1.0, 0.0, params.half_period()).beta;
    first * (1.0 - params.force_ratio)
}
