//! Coin ⊗ motion dynamics under the state-dependent optical dipole force.
//!
//! The interaction-picture Hamiltonian is coin-diagonal, so the `|T⟩` and
//! `|H⟩` motional components evolve independently; they only differ in the
//! coupling strength (`Ω_D` for `|T⟩`, `force_ratio·Ω_D` for `|H⟩`).
//! Matrix element `(n+d, n)` of either branch reads
//!
//! ```text
//! (Ω/2) X_{n+d,n} [e^{i((dω_z − ω_L)t + φ₀)} + (−1)^d e^{i((dω_z + ω_L)t − φ₀)}]
//! ```
//!
//! with `X = exp(iη(a + a†))`. The approximation level decides which bands
//! and rotating terms are kept.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{displacement_element, sideband_ceiling, sideband_peak, Displacer, MotionalState, PhasePoint};
use crate::params::{ApproxLevel, SimParams};
use crate::walk::coin_matrix;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Tolerance on the total norm of a hybrid state.
pub const HYBRID_NORM_TOL: f64 = 1e-9;
/// Largest norm change a single propagation may introduce.
pub const MAX_NORM_DRIFT: f64 = 1e-6;

/// `|T⟩⊗|M_T⟩ + |H⟩⊗|M_H⟩` at interaction-picture time `time`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridState {
    pub t_part: MotionalState,
    pub h_part: MotionalState,
    /// Absolute time (s); sets the phase of the drive.
    pub time: f64,
}

impl HybridState {
    pub fn new(t_part: MotionalState, h_part: MotionalState, time: f64) -> Result<Self> {
        if t_part.dim() != h_part.dim() {
            return Err(Error::invalid("branch dimensions differ"));
        }
        let n = t_part.norm_sqr() + h_part.norm_sqr();
        if (n - 1.0).abs() > HYBRID_NORM_TOL {
            return Err(Error::invalid(format!("hybrid state norm {n} is not 1")));
        }
        Ok(HybridState { t_part, h_part, time })
    }

    /// `(c_T|T⟩ + c_H|H⟩) ⊗ |motion⟩`, coin amplitudes normalized.
    pub fn product(c_t: C64, c_h: C64, motion: &MotionalState) -> Result<Self> {
        let n = (c_t.norm_sqr() + c_h.norm_sqr()).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::invalid("coin amplitudes must be finite and non-zero"));
        }
        let m = motion.normalized()?;
        Ok(HybridState {
            t_part: m.scaled(c_t / n),
            h_part: m.scaled(c_h / n),
            time: 0.0,
        })
    }

    /// `|T⟩|0⟩`.
    pub fn ground_tails(dim: usize) -> Self {
        let vac = MotionalState::vacuum(dim);
        HybridState {
            h_part: MotionalState::zeros(dim),
            t_part: vac,
            time: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.t_part.dim()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.t_part.norm_sqr() + self.h_part.norm_sqr()
    }

    /// `(P_T, P_H)` normalized to the state norm.
    pub fn coin_probabilities(&self) -> (f64, f64) {
        let (t, h) = (self.t_part.norm_sqr(), self.h_part.norm_sqr());
        (t / (t + h), h / (t + h))
    }

    /// Instantaneous coin rotation `R(θ, φ)`; motion is untouched.
    pub fn rotate_coin(&self, theta: f64, phi: f64) -> HybridState {
        let m = coin_matrix(theta, phi);
        let (t, h) = (self.t_part.amps(), self.h_part.amps());
        let new_h = t.iter().zip(h).map(|(t, h)| m[0][0] * h + m[0][1] * t).collect();
        let new_t = t.iter().zip(h).map(|(t, h)| m[1][0] * h + m[1][1] * t).collect();
        HybridState {
            t_part: MotionalState::from_raw(new_t),
            h_part: MotionalState::from_raw(new_h),
            time: self.time,
        }
    }

    /// Free evolution: nothing happens in the interaction picture except that
    /// the drive clock keeps running.
    pub fn wait(&self, duration: f64) -> HybridState {
        let mut s = self.clone();
        s.time += duration;
        s
    }

    pub fn check_leakage(&self) -> Result<()> {
        self.t_part.check_leakage("T branch")?;
        self.h_part.check_leakage("H branch")
    }

    /// Same state with total norm rescaled to 1.
    pub fn renormalized(&self) -> HybridState {
        let n = self.norm_sqr().sqrt();
        let f = C64::new(1.0 / n, 0.0);
        HybridState {
            t_part: self.t_part.scaled(f),
            h_part: self.h_part.scaled(f),
            time: self.time,
        }
    }
}

/// Geometric phases of a full LDA loop and the sideband thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedPhases {
    pub phi_t: f64,
    pub phi_h: f64,
    pub g1: usize,
    pub g2: usize,
}

/// One oscillating factor `sign · e^{i(freq·t + phase)}`.
#[derive(Clone, Copy, Debug)]
struct Term {
    freq: f64,
    phase: f64,
    sign: f64,
}

#[derive(Clone, Debug)]
struct Band {
    d: isize,
    /// First column `n` with a valid row `n + d`.
    first: usize,
    elems: Vec<C64>,
    terms: Vec<Term>,
}

impl Band {
    fn coef(&self, t: f64) -> C64 {
        self.terms
            .iter()
            .map(|k| C64::from_polar(k.sign, k.freq * t + k.phase))
            .sum()
    }
}

fn build_bands(p: &SimParams) -> Vec<Band> {
    let dim = p.dim;
    let wl = p.omega_l();
    let beta = C64::new(0.0, p.eta);
    let exact = |d: isize| -> (usize, Vec<C64>) {
        let first = if d < 0 { (-d) as usize } else { 0 };
        let last = if d > 0 { dim - d as usize } else { dim };
        let elems = (first..last)
            .map(|n| displacement_element((n as isize + d) as usize, n, beta))
            .collect();
        (first, elems)
    };
    let co = |d: isize| Term {
        freq: d as f64 * p.omega_z - wl,
        phase: p.phi0,
        sign: 1.0,
    };
    let counter = |d: isize| Term {
        freq: d as f64 * p.omega_z + wl,
        phase: -p.phi0,
        sign: if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 },
    };
    match p.level {
        ApproxLevel::ThreeSideband => (-3..=3)
            .map(|d| {
                let (first, elems) = exact(d);
                Band {
                    d,
                    first,
                    elems,
                    terms: vec![co(d), counter(d)],
                }
            })
            .collect(),
        ApproxLevel::Rwa => {
            let (f1, e1) = exact(1);
            let (f2, e2) = exact(-1);
            vec![
                Band {
                    d: 1,
                    first: f1,
                    elems: e1,
                    terms: vec![co(1)],
                },
                Band {
                    d: -1,
                    first: f2,
                    elems: e2,
                    terms: vec![counter(-1)],
                },
            ]
        }
        ApproxLevel::Lda => {
            let up = (0..dim - 1)
                .map(|n| C64::new(0.0, p.eta * ((n + 1) as f64).sqrt()))
                .collect();
            let down = (1..dim).map(|n| C64::new(0.0, p.eta * (n as f64).sqrt())).collect();
            vec![
                Band {
                    d: 1,
                    first: 0,
                    elems: up,
                    terms: vec![co(1)],
                },
                Band {
                    d: -1,
                    first: 1,
                    elems: down,
                    terms: vec![counter(-1)],
                },
            ]
        }
    }
}

/// Coin ⊗ motion interaction Hamiltonian (ħ = 1) at time `t`, in the basis
/// `|T,0⟩ … |T,dim−1⟩, |H,0⟩ … |H,dim−1⟩`.
pub fn hamiltonian(params: &SimParams, t: f64) -> Result<DMatrix<C64>> {
    params.validate()?;
    let dim = params.dim;
    let mut h = DMatrix::<C64>::zeros(2 * dim, 2 * dim);
    let g = [0.5 * params.omega_d, 0.5 * params.omega_d * params.force_ratio];
    for band in build_bands(params) {
        let c = band.coef(t);
        for (j, x) in band.elems.iter().enumerate() {
            let n = band.first + j;
            let m = (n as isize + band.d) as usize;
            for (b, gb) in g.iter().enumerate() {
                h[(b * dim + m, b * dim + n)] += c * x * *gb;
            }
        }
    }
    Ok(h)
}

/// A sample of a propagated state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub alpha_t: PhasePoint,
    pub alpha_h: PhasePoint,
    pub n_t: f64,
    pub n_h: f64,
    pub p_t: f64,
    pub p_h: f64,
}

impl Sample {
    pub fn of(state: &HybridState) -> Sample {
        let branch = |m: &MotionalState| {
            if m.norm_sqr() > 1e-12 {
                (PhasePoint::from(m.mean_a()), m.mean_n())
            } else {
                (PhasePoint::new(0.0, 0.0), 0.0)
            }
        };
        let (a_t, n_t) = branch(&state.t_part);
        let (a_h, n_h) = branch(&state.h_part);
        let (p_t, p_h) = state.coin_probabilities();
        Sample {
            t: state.time,
            alpha_t: a_t,
            alpha_h: a_h,
            n_t,
            n_h,
            p_t,
            p_h,
        }
    }
}

/// Fixed-step RK4 propagator for one parameter set.
///
/// The banded Hamiltonian is built once and reused for every call.
#[derive(Clone, Debug)]
pub struct Propagator {
    params: SimParams,
    bands: Vec<Band>,
    h_max: f64,
}

impl Propagator {
    pub fn new(params: &SimParams) -> Result<Self> {
        params.validate()?;
        let bands = build_bands(params);
        let fastest_term = bands
            .iter()
            .flat_map(|b| b.terms.iter().map(|k| k.freq.abs()))
            .fold(0.0, f64::max);
        let w_fast = match params.level {
            ApproxLevel::ThreeSideband => (3.0 * params.omega_z + params.delta.abs()).max(fastest_term),
            _ => params.delta.abs(),
        };
        let coupling = params.omega_d.abs() * params.force_ratio.abs().max(1.0);
        let mut h_max = f64::INFINITY;
        if w_fast > 0.0 {
            h_max = h_max.min(TAU / (50.0 * w_fast));
        }
        if coupling > 0.0 {
            // finer than the 2π/(50 Ω_D) ceiling so RK4's intrinsic norm loss
            // stays far below 1e-8 per μs
            h_max = h_max.min(TAU / (400.0 * coupling));
        }
        Ok(Propagator {
            params: *params,
            bands,
            h_max,
        })
    }

    /// Caps the RK4 step below the default.
    pub fn with_max_step(mut self, h: f64) -> Self {
        if h > 0.0 {
            self.h_max = self.h_max.min(h);
        }
        self
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn max_step(&self) -> f64 {
        self.h_max
    }

    fn coefs(&self, t: f64, out: &mut [C64]) {
        for (c, b) in out.iter_mut().zip(&self.bands) {
            *c = b.coef(t);
        }
    }

    fn deriv(&self, coefs: &[C64], g: f64, psi: &[C64], out: &mut [C64]) {
        out.fill(ZERO);
        for (b, c) in self.bands.iter().zip(coefs) {
            let f = C64::new(0.0, -g) * c;
            let rows = &mut out[(b.first as isize + b.d) as usize..];
            let cols = &psi[b.first..];
            for ((o, x), p) in rows.iter_mut().zip(&b.elems).zip(cols) {
                *o += f * x * p;
            }
        }
    }

    /// Evolves with the drive on for `duration`.
    pub fn propagate(&self, state: &HybridState, duration: f64) -> Result<HybridState> {
        Ok(self.propagate_sampled(state, duration, 1)?.0)
    }

    /// Evolves for `duration`, returning `segments + 1` equally spaced samples
    /// including both end points.
    pub fn propagate_sampled(
        &self,
        state: &HybridState,
        duration: f64,
        segments: usize,
    ) -> Result<(HybridState, Vec<Sample>)> {
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(Error::invalid(format!(
                "duration must be finite and >= 0, got {duration}"
            )));
        }
        if state.dim() != self.params.dim {
            return Err(Error::invalid(format!(
                "state dim {} does not match params dim {}",
                state.dim(),
                self.params.dim
            )));
        }
        let segments = segments.max(1);
        let seg = duration / segments as f64;
        let n_steps = if seg > 0.0 {
            (seg / self.h_max).ceil().max(1.0) as usize
        } else {
            0
        };
        let h = if n_steps > 0 { seg / n_steps as f64 } else { 0.0 };
        let g = [
            0.5 * self.params.omega_d,
            0.5 * self.params.omega_d * self.params.force_ratio,
        ];

        let t0 = state.time;
        let norm0 = state.norm_sqr();
        let mut psi = [state.t_part.amps().to_vec(), state.h_part.amps().to_vec()];
        let active = [state.t_part.norm_sqr() > 0.0, state.h_part.norm_sqr() > 0.0];
        let dim = self.params.dim;
        let nb = self.bands.len();
        let (mut c1, mut c2, mut c3) = (vec![ZERO; nb], vec![ZERO; nb], vec![ZERO; nb]);
        let mut k = vec![vec![ZERO; dim]; 4];
        let mut tmp = vec![ZERO; dim];

        let mut samples = Vec::with_capacity(segments + 1);
        samples.push(Sample::of(state));
        let mut out = state.clone();
        for s in 0..segments {
            let seg_start = t0 + s as f64 * seg;
            for i in 0..n_steps {
                let t = seg_start + i as f64 * h;
                self.coefs(t, &mut c1);
                self.coefs(t + 0.5 * h, &mut c2);
                self.coefs(t + h, &mut c3);
                for b in 0..2 {
                    if !active[b] {
                        continue;
                    }
                    let y = &mut psi[b];
                    self.deriv(&c1, g[b], y, &mut k[0]);
                    for j in 0..dim {
                        tmp[j] = y[j] + k[0][j] * (0.5 * h);
                    }
                    self.deriv(&c2, g[b], &tmp, &mut k[1]);
                    for j in 0..dim {
                        tmp[j] = y[j] + k[1][j] * (0.5 * h);
                    }
                    self.deriv(&c2, g[b], &tmp, &mut k[2]);
                    for j in 0..dim {
                        tmp[j] = y[j] + k[2][j] * h;
                    }
                    self.deriv(&c3, g[b], &tmp, &mut k[3]);
                    for j in 0..dim {
                        y[j] += (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]) * (h / 6.0);
                    }
                }
            }
            out = HybridState {
                t_part: MotionalState::from_raw(psi[0].clone()),
                h_part: MotionalState::from_raw(psi[1].clone()),
                time: seg_start + seg,
            };
            let drift = (out.norm_sqr() - norm0).abs();
            if drift > MAX_NORM_DRIFT || !drift.is_finite() {
                return Err(Error::Step { drift, time: out.time });
            }
            out.check_leakage()?;
            samples.push(Sample::of(&out));
        }
        out.time = t0 + duration;
        Ok((out, samples))
    }
}

/// Convenience wrapper around [`Propagator::propagate`].
pub fn propagate(state: &HybridState, params: &SimParams, duration: f64) -> Result<HybridState> {
    Propagator::new(params)?.propagate(state, duration)
}

/// `⟨a⟩` of each motional state: the co-rotating phase-space point.
///
/// Branches with norm below 1e-6 are rejected.
pub fn trajectory(states: &[MotionalState]) -> Result<Vec<PhasePoint>> {
    states
        .iter()
        .map(|s| {
            if s.norm_sqr() <= 1e-6 {
                Err(Error::invalid("trajectory of a branch with negligible norm"))
            } else {
                Ok(PhasePoint::from(s.mean_a()))
            }
        })
        .collect()
}

/// Co-rotating point from lab-frame expectation values `⟨z⟩` (m) and `⟨p⟩`
/// (kg m/s) at time `t`: `α = e^{iω_z t}(⟨z⟩/(2z₀) + i z₀⟨p⟩/ħ)`.
pub fn corotating_point(z_mean: f64, p_mean: f64, z0: f64, omega_z: f64, t: f64) -> PhasePoint {
    let lab = C64::new(z_mean / (2.0 * z0), z0 * p_mean / crate::params::HBAR);
    PhasePoint::from(lab * C64::from_polar(1.0, omega_z * t))
}

/// Signed area enclosed by the path and the chord closing it; positive for a
/// counter-clockwise path. Insensitive to small fast wiggles.
pub fn rotation_sense(points: &[PhasePoint]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (points[i], points[(i + 1) % n]);
            a.re * b.im - b.re * a.im
        })
        .sum::<f64>()
}

/// Displacement and phase of the exact LDA evolution of one branch:
/// `U = e^{iΦ} D(β)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LdaMap {
    pub beta: C64,
    pub phase: f64,
}

/// LDA evolution of a branch with force factor `force` (1 for `|T⟩`,
/// `force_ratio` for `|H⟩`) from `t0` over `duration`.
pub fn lda_map(params: &SimParams, force: f64, t0: f64, duration: f64) -> LdaMap {
    let g = 0.5 * force * params.omega_d * params.eta;
    let d = params.delta;
    let x = d * duration;
    if d == 0.0 || x.abs() < 1e-12 {
        // δ → 0 limit: straight line, no enclosed area
        let beta = C64::from_polar(g * duration, params.phi0 + d * t0);
        return LdaMap { beta, phase: 0.0 };
    }
    let arc = (C64::from_polar(1.0, d * (t0 + duration)) - C64::from_polar(1.0, d * t0)) / C64::new(0.0, d);
    let beta = arc * C64::from_polar(g, params.phi0);
    let phase = (g / d).powi(2) * (x - x.sin());
    LdaMap { beta, phase }
}

/// Applies the analytic LDA evolution to both branches.
pub fn lda_analytic(state: &HybridState, params: &SimParams, duration: f64) -> Result<HybridState> {
    let disp = Displacer::new(state.dim());
    let apply = |m: &MotionalState, force: f64| {
        let map = lda_map(params, force, state.time, duration);
        let out = disp.apply(map.beta, m.amps());
        MotionalState::from_raw(out.into_iter().map(|a| a * C64::from_polar(1.0, map.phase)).collect())
    };
    let out = HybridState {
        t_part: apply(&state.t_part, 1.0),
        h_part: apply(&state.h_part, params.force_ratio),
        time: state.time + duration,
    };
    out.check_leakage()?;
    Ok(out)
}

/// Full-loop LDA phases `Φ_T = 2π(ηΩ_D/2δ)²`, `Φ_H = force_ratio²·Φ_T`, and
/// the sideband thresholds for `η`.
pub fn derived_phases(params: &SimParams) -> DerivedPhases {
    let period = TAU / params.delta;
    DerivedPhases {
        phi_t: lda_map(params, 1.0, 0.0, period).phase,
        phi_h: lda_map(params, params.force_ratio, 0.0, period).phase,
        g1: sideband_peak(params.eta),
        g2: sideband_ceiling(params.eta),
    }
}

/// `⟨n⟩`, Fock variance and Fano factor of the `|T⟩` branch over time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockStats {
    pub t: f64,
    pub mean_n: f64,
    pub variance: f64,
    pub fano: f64,
    pub alpha: PhasePoint,
}

impl FockStats {
    pub fn of(m: &MotionalState, t: f64) -> FockStats {
        let mean_n = m.mean_n();
        let variance = m.variance_n();
        let fano = if mean_n > 0.0 { variance / mean_n } else { 1.0 };
        FockStats {
            t,
            mean_n,
            variance,
            fano,
            alpha: m.mean_a().into(),
        }
    }
}

/// Result of a driven excitation from `|T⟩|0⟩`.
#[derive(Clone, Debug)]
pub struct Excitation {
    pub state: HybridState,
    pub stats: Vec<FockStats>,
}

/// Resonant (`δ = 0`) drive from `|T⟩|0⟩`, sampled `segments + 1` times.
pub fn resonant_excitation(params: &SimParams, duration: f64, segments: usize) -> Result<Excitation> {
    let p = params.with_delta(0.0);
    let prop = Propagator::new(&p)?;
    let mut state = HybridState::ground_tails(p.dim);
    let segments = segments.max(1);
    let mut stats = vec![FockStats::of(&state.t_part, 0.0)];
    let seg = duration / segments as f64;
    for _ in 0..segments {
        state = prop.propagate(&state, seg)?;
        stats.push(FockStats::of(&state.t_part, state.time));
    }
    Ok(Excitation { state, stats })
}

/// Alternating drive pulses and free waits from `|T⟩|0⟩`; the drive phase
/// keeps advancing at `δ` during the waits. Samples are taken
/// `samples_per_pulse + 1` times per pulse (drive on only).
pub fn stepwise_excitation(
    params: &SimParams,
    n_pulses: usize,
    pulse_duration: f64,
    wait_duration: f64,
    samples_per_pulse: usize,
) -> Result<(Excitation, Vec<Vec<PhasePoint>>)> {
    if pulse_duration < 0.0 || wait_duration < 0.0 {
        return Err(Error::invalid("durations must be >= 0"));
    }
    let prop = Propagator::new(params)?;
    let mut state = HybridState::ground_tails(params.dim);
    let mut stats = vec![FockStats::of(&state.t_part, 0.0)];
    let mut paths = Vec::with_capacity(n_pulses);
    for i in 0..n_pulses {
        if i > 0 {
            state = state.wait(wait_duration);
        }
        let (next, samples) = prop.propagate_sampled(&state, pulse_duration, samples_per_pulse.max(1))?;
        paths.push(samples.iter().map(|s| s.alpha_t).collect());
        state = next;
        stats.push(FockStats::of(&state.t_part, state.time));
    }
    Ok((Excitation { state, stats }, paths))
}

/// First local minimum of `⟨n⟩` below half the peak value after the peak,
/// refined by a parabola through the neighbouring samples. Fast wiggles that
/// stay above half the peak are skipped.
pub fn return_time(stats: &[FockStats]) -> Option<f64> {
    let (peak, top) = stats
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.mean_n.total_cmp(&b.1.mean_n))
        .map(|(i, s)| (i, s.mean_n))?;
    let i = (peak + 1..stats.len().saturating_sub(1))
        .find(|&i| {
            stats[i].mean_n < 0.5 * top
                && stats[i].mean_n <= stats[i - 1].mean_n
                && stats[i].mean_n <= stats[i + 1].mean_n
        })
        .or_else(|| {
            let last = stats.len() - 1;
            (last > peak && stats[last].mean_n < 0.5 * top).then_some(last)
        })?;
    if i + 1 >= stats.len() {
        return Some(stats[i].t);
    }
    let (y0, y1, y2) = (stats[i - 1].mean_n, stats[i].mean_n, stats[i + 1].mean_n);
    let h = stats[i + 1].t - stats[i].t;
    let denom = y0 - 2.0 * y1 + y2;
    let shift = if denom > 0.0 { 0.5 * (y0 - y2) / denom } else { 0.0 };
    Some(stats[i].t + shift.clamp(-1.0, 1.0) * h)
}

/// Angle (rad) in which the LDA force pushes at time `t0`: `φ₀ + δ·t0`.
pub fn drive_direction(params: &SimParams, t0: f64) -> f64 {
    (params.phi0 + params.delta * t0).rem_euclid(TAU)
}
