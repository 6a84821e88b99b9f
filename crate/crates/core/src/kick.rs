//! Shift operation by short resonant π-pulses ("photon kicks").
//!
//! A π-pulse on a transition with Lamb–Dicke factor `η` flips the coin and
//! displaces the motion by `±iη`. The full model adds the trap Hamiltonian
//! `ω_z a†a` during the pulse, which is what limits the pulse duration for
//! large motional amplitudes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dipole::HybridState;
use crate::error::{Error, Result};
use crate::fock::{coherent_state, Displacer, MotionalState};
use crate::linalg::lstsq;
use crate::params::angular;

/// Shortest pulse for which the two-level description is used (s).
pub const MIN_DURATION: f64 = 5e-12;

/// Longest pulse tried when searching thresholds (s).
pub const MAX_DURATION: f64 = 1e-6;

const PI_PULSE_TOL: f64 = 1e-9;
const NORM_DRIFT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KickParams {
    /// Rabi frequency Ω (rad/s).
    pub omega: f64,
    /// Pulse duration (s).
    pub t_p: f64,
    pub eta: f64,
    /// Trap frequency (rad/s).
    pub omega_z: f64,
    pub dim: usize,
    /// Sign of the effective wave vector, ±1.
    pub direction: i32,
}

impl KickParams {
    /// π-pulse of duration `t_p`.
    pub fn pi_pulse(t_p: f64, eta: f64, omega_z: f64, dim: usize) -> Self {
        KickParams {
            omega: PI / t_p,
            t_p,
            eta,
            omega_z,
            dim,
            direction: 1,
        }
    }

    /// η = 0.31, ω_z = 2π·2.13 MHz, dim 64.
    pub fn experimental(t_p: f64) -> Self {
        KickParams::pi_pulse(t_p, 0.31, angular(2.13e6), 64)
    }

    /// Same pulse area, new duration.
    pub fn with_duration(mut self, t_p: f64) -> Self {
        self.omega *= self.t_p / t_p;
        self.t_p = t_p;
        self
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn with_omega_z(mut self, omega_z: f64) -> Self {
        self.omega_z = omega_z;
        self
    }

    pub fn with_direction(mut self, direction: i32) -> Self {
        self.direction = direction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_p >= MIN_DURATION) || !self.t_p.is_finite() {
            return Err(Error::invalid(format!(
                "T_p = {:e} s is below the {MIN_DURATION:e} s floor",
                self.t_p
            )));
        }
        if (self.omega * self.t_p - PI).abs() > PI_PULSE_TOL * PI {
            return Err(Error::invalid("Ω·T_p must equal π"));
        }
        if !(self.eta > 0.0) || !(self.omega_z >= 0.0) || !self.omega_z.is_finite() {
            return Err(Error::invalid("η must be > 0 and ω_z >= 0"));
        }
        if self.direction != 1 && self.direction != -1 {
            return Err(Error::invalid("direction must be ±1"));
        }
        if self.dim < 2 {
            return Err(Error::invalid("dim must be >= 2"));
        }
        Ok(())
    }

    /// RK4 step bound: `min(T_p/200, 2π/(100·max(Ω, ω_z·dim)))`.
    pub fn max_step(&self) -> f64 {
        let fast = self.omega.max(self.omega_z * self.dim as f64);
        (self.t_p / 200.0).min(2.0 * PI / (100.0 * fast))
    }
}

/// Smallest truncation used for amplitude `|α|`: `(|α| + 6)²`.
pub fn required_dim(alpha_abs: f64) -> usize {
    ((alpha_abs + 6.0).powi(2)).ceil() as usize
}

/// Displacement `D(iη)` and its adjoint in a fixed truncation.
pub struct Kicker {
    eta: f64,
    up: DMatrix<C64>,
    down: DMatrix<C64>,
}

impl Kicker {
    pub fn new(eta: f64, dim: usize) -> Self {
        let d = Displacer::new(dim);
        let up = d.matrix(C64::new(0.0, eta));
        let down = up.adjoint();
        Kicker { eta, up, down }
    }

    pub fn dim(&self) -> usize {
        self.up.nrows()
    }

    fn disp(&self, direction: i32) -> (&DMatrix<C64>, &DMatrix<C64>) {
        if direction >= 0 {
            (&self.up, &self.down)
        } else {
            (&self.down, &self.up)
        }
    }

    /// `U₀ = −i(σ₊⊗D(±iη) + σ₋⊗D(∓iη))`, `σ₊ = |T⟩⟨H|`.
    pub fn ideal(&self, state: &HybridState, direction: i32) -> Result<HybridState> {
        self.check_dim(state)?;
        let (e, ed) = self.disp(direction);
        let mi = C64::new(0.0, -1.0);
        let t = e * DVector::from_column_slice(state.h_part.amps()) * mi;
        let h = ed * DVector::from_column_slice(state.t_part.amps()) * mi;
        Ok(HybridState {
            t_part: MotionalState::from_raw(t.as_slice().to_vec()),
            h_part: MotionalState::from_raw(h.as_slice().to_vec()),
            time: state.time,
        })
    }

    /// RK4 integration of `H = (Ω/2)(σ₊⊗E + σ₋⊗E†) + ω_z a†a` over `[0, T_p]`.
    pub fn full(&self, state: &HybridState, kp: &KickParams) -> Result<HybridState> {
        kp.validate()?;
        self.check_dim(state)?;
        if (kp.eta - self.eta).abs() > 0.0 {
            return Err(Error::invalid("kick parameters use a different η"));
        }
        let (e, ed) = self.disp(kp.direction);
        let dim = self.dim();
        let n_steps = (kp.t_p / kp.max_step()).ceil() as usize;
        let h = kp.t_p / n_steps as f64;
        let half_omega = 0.5 * kp.omega;
        let diag: Vec<f64> = (0..dim).map(|n| kp.omega_z * n as f64).collect();
        let mi = C64::new(0.0, -1.0);

        let deriv = |t: &DVector<C64>, hh: &DVector<C64>| {
            let mut dt = e * hh * C64::from(half_omega);
            let mut dh = ed * t * C64::from(half_omega);
            for n in 0..dim {
                dt[n] = (dt[n] + t[n] * diag[n]) * mi;
                dh[n] = (dh[n] + hh[n] * diag[n]) * mi;
            }
            (dt, dh)
        };

        let mut t = DVector::from_column_slice(state.t_part.amps());
        let mut hv = DVector::from_column_slice(state.h_part.amps());
        let norm0 = state.norm_sqr();
        let hc = C64::from(h);
        let two = C64::from(2.0);
        for _ in 0..n_steps {
            let (k1t, k1h) = deriv(&t, &hv);
            let (k2t, k2h) = deriv(&(&t + &k1t * (hc * 0.5)), &(&hv + &k1h * (hc * 0.5)));
            let (k3t, k3h) = deriv(&(&t + &k2t * (hc * 0.5)), &(&hv + &k2h * (hc * 0.5)));
            let (k4t, k4h) = deriv(&(&t + &k3t * hc), &(&hv + &k3h * hc));
            t += (k1t + k2t * two + k3t * two + k4t) * (hc / 6.0);
            hv += (k1h + k2h * two + k3h * two + k4h) * (hc / 6.0);
        }
        let out = HybridState {
            t_part: MotionalState::from_raw(t.as_slice().to_vec()),
            h_part: MotionalState::from_raw(hv.as_slice().to_vec()),
            time: state.time + kp.t_p,
        };
        let drift = (out.norm_sqr() - norm0).abs();
        if drift > NORM_DRIFT {
            return Err(Error::Step { drift, time: out.time });
        }
        out.check_leakage()?;
        Ok(out)
    }

    /// Compares the full pulse with the ideal kick on `state`.
    pub fn compare(&self, state: &HybridState, kp: &KickParams) -> Result<KickComparison> {
        let full = self.full(state, kp)?;
        let ideal = self.ideal(state, kp.direction)?;
        let deviation = (diff_sqr(&full.t_part, &ideal.t_part) + diff_sqr(&full.h_part, &ideal.h_part)).sqrt();
        let rotated = trap_rotation(&full, kp.omega_z, kp.t_p);
        let ov = ideal.t_part.inner(&rotated.t_part) + ideal.h_part.inner(&rotated.h_part);
        Ok(KickComparison {
            t_p: kp.t_p,
            fidelity: ov.norm_sqr(),
            deviation,
        })
    }

    fn check_dim(&self, state: &HybridState) -> Result<()> {
        if state.dim() != self.dim() {
            return Err(Error::invalid(format!(
                "state dim {} != kicker dim {}",
                state.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

fn diff_sqr(a: &MotionalState, b: &MotionalState) -> f64 {
    a.amps().iter().zip(b.amps()).map(|(x, y)| (x - y).norm_sqr()).sum()
}

/// Applies `e^{iω_z N τ}`, undoing free trap evolution over `τ`.
fn trap_rotation(state: &HybridState, omega_z: f64, tau: f64) -> HybridState {
    let rot = |m: &MotionalState| {
        MotionalState::from_raw(
            m.amps()
                .iter()
                .enumerate()
                .map(|(n, a)| a * C64::from_polar(1.0, omega_z * n as f64 * tau))
                .collect(),
        )
    };
    HybridState {
        t_part: rot(&state.t_part),
        h_part: rot(&state.h_part),
        time: state.time,
    }
}

/// Ideal kick on `state`.
pub fn kick_ideal(state: &HybridState, eta: f64, direction: i32) -> Result<HybridState> {
    Kicker::new(eta, state.dim()).ideal(state, direction)
}

/// Full-Hamiltonian pulse on `state`.
pub fn kick_full(state: &HybridState, kp: &KickParams) -> Result<HybridState> {
    if state.dim() != kp.dim {
        return Err(Error::invalid("state dim differs from kick dim"));
    }
    Kicker::new(kp.eta, kp.dim).full(state, kp)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KickComparison {
    pub t_p: f64,
    /// `|⟨ψ|U₀† e^{iω_z N T_p} U|ψ⟩|²`, the full pulse seen from the frame
    /// co-rotating with the trap.
    pub fidelity: f64,
    /// `‖(U − U₀)ψ‖` in the lab frame.
    pub deviation: f64,
}

/// First-order deviation estimate `T_p·ω_z·|α|²`.
pub fn error_bound(alpha_abs: f64, omega_z: f64, t_p: f64) -> f64 {
    t_p * omega_z * alpha_abs * alpha_abs
}

/// Longest pulse with `error_bound ≤ epsilon`; `+∞` for `α = 0`.
pub fn max_duration(alpha_abs: f64, omega_z: f64, epsilon: f64) -> f64 {
    let d = omega_z * alpha_abs * alpha_abs;
    if d == 0.0 {
        f64::INFINITY
    } else {
        epsilon / d
    }
}

/// `|H⟩|α⟩`.
pub fn kick_input(alpha: C64, dim: usize) -> Result<HybridState> {
    HybridState::product(C64::new(0.0, 0.0), C64::new(1.0, 0.0), &coherent_state(alpha, dim)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub alpha: C64,
    /// Longest pulse found with `f ≥ f_min`.
    pub t_p: f64,
    pub fidelity: f64,
    pub deviation: f64,
    /// `false` if a longer pulse was seen with a higher fidelity during the search.
    pub monotone: bool,
    pub evaluations: usize,
}

/// Longest π-pulse with fidelity `≥ f_min` on `|H⟩|α⟩`.
///
/// Doubles `T_p` from the validity floor until the fidelity drops below
/// `f_min`, then bisects `ln T_p` (at most 20 times, to 1% relative width).
/// The truncation is raised to [`required_dim`] if needed.
pub fn fidelity_threshold(alpha: C64, f_min: f64, template: &KickParams) -> Result<Threshold> {
    if !(f_min > 0.0 && f_min < 1.0) {
        return Err(Error::invalid("f_min must lie in (0, 1)"));
    }
    let dim = template.dim.max(required_dim(alpha.norm()));
    let base = template.with_dim(dim).with_duration(MIN_DURATION);
    base.validate()?;
    let kicker = Kicker::new(base.eta, dim);
    let psi = kick_input(alpha, dim)?;
    let mut seen: Vec<KickComparison> = Vec::new();
    let mut eval = |t_p: f64| -> Result<KickComparison> {
        let c = kicker.compare(&psi, &base.with_duration(t_p))?;
        seen.push(c);
        Ok(c)
    };

    let mut lo = eval(MIN_DURATION)?;
    if lo.fidelity < f_min {
        return Err(Error::NoThreshold {
            fidelity: lo.fidelity,
            f_min,
            t_p: MIN_DURATION,
        });
    }
    let mut hi_t = 2.0 * MIN_DURATION;
    loop {
        if hi_t > MAX_DURATION {
            return Err(Error::invalid(format!(
                "fidelity stays above {f_min} up to {MAX_DURATION:e} s"
            )));
        }
        let c = eval(hi_t)?;
        if c.fidelity < f_min {
            break;
        }
        lo = c;
        hi_t *= 2.0;
    }
    for _ in 0..20 {
        if hi_t / lo.t_p < 1.01 {
            break;
        }
        let mid = (lo.t_p * hi_t).sqrt();
        let c = eval(mid)?;
        if c.fidelity >= f_min {
            lo = c;
        } else {
            hi_t = mid;
        }
    }

    let mut sorted = seen.clone();
    sorted.sort_by(|a, b| a.t_p.total_cmp(&b.t_p));
    let monotone = sorted.windows(2).all(|w| w[1].fidelity <= w[0].fidelity + 1e-9);
    Ok(Threshold {
        alpha,
        t_p: lo.t_p,
        fidelity: lo.fidelity,
        deviation: lo.deviation,
        monotone,
        evaluations: seen.len(),
    })
}

/// `ln T = c0 + c1·ln|α| + c2·(ln|α|)²`, `T` in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFit {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl ThresholdFit {
    pub fn eval(&self, alpha_abs: f64) -> f64 {
        let x = alpha_abs.ln();
        (self.c0 + self.c1 * x + self.c2 * x * x).exp()
    }
}

/// Reference fit for kicks at the trap center (imaginary α), f = 0.99.
pub const REFERENCE_IMAGINARY: ThresholdFit = ThresholdFit {
    c0: -17.55,
    c1: -0.63,
    c2: -0.05,
};

/// Reference fit for kicks at the turning point (real α), f = 0.99.
pub const REFERENCE_REAL: ThresholdFit = ThresholdFit {
    c0: -17.03,
    c1: -0.02,
    c2: -0.1,
};

/// Quadratic least-squares fit in `(ln|α|, ln T)`.
pub fn fit_threshold_curve(pairs: &[(f64, f64)]) -> Result<ThresholdFit> {
    if pairs.len() < 5 {
        return Err(Error::invalid("threshold fit needs at least 5 points"));
    }
    if pairs.iter().any(|&(a, t)| !(a > 0.0 && t > 0.0)) {
        return Err(Error::invalid("threshold fit needs |α| > 0 and T > 0"));
    }
    let a = DMatrix::from_fn(pairs.len(), 3, |i, j| pairs[i].0.ln().powi(j as i32));
    let b = DVector::from_iterator(pairs.len(), pairs.iter().map(|p| p.1.ln()));
    let c = lstsq(&a, &b)?;
    Ok(ThresholdFit {
        c0: c[0],
        c1: c[1],
        c2: c[2],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KickTrain {
    pub state: HybridState,
    /// Product of ideal kicks applied to the input.
    pub target: HybridState,
    /// Overlap with `target` after undoing the trap rotation over the train.
    pub fidelity: f64,
}

/// `n_kicks` back-to-back pulses, flipping the wave vector between pulses if
/// `alternate`.
pub fn kick_train(n_kicks: usize, alternate: bool, kp: &KickParams, state: &HybridState) -> Result<KickTrain> {
    if n_kicks == 0 {
        return Err(Error::invalid("kick train needs at least one kick"));
    }
    kp.validate()?;
    if state.dim() != kp.dim {
        return Err(Error::invalid("state dim differs from kick dim"));
    }
    let kicker = Kicker::new(kp.eta, kp.dim);
    let mut s = state.clone();
    let mut target = state.clone();
    for i in 0..n_kicks {
        let dir = if alternate && i % 2 == 1 {
            -kp.direction
        } else {
            kp.direction
        };
        s = kicker.full(&s, &kp.with_direction(dir))?;
        target = kicker.ideal(&target, dir)?;
    }
    let rotated = trap_rotation(&s, kp.omega_z, kp.t_p * n_kicks as f64);
    let ov = target.t_part.inner(&rotated.t_part) + target.h_part.inner(&rotated.h_part);
    Ok(KickTrain {
        state: s,
        target,
        fidelity: ov.norm_sqr(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn state_close(a: &HybridState, b: &HybridState, tol: f64) -> bool {
        (diff_sqr(&a.t_part, &b.t_part) + diff_sqr(&a.h_part, &b.h_part)).sqrt() < tol
    }

    #[test]
    fn ideal_kick_flips_coin_and_kicks_momentum() {
        let dim = 32;
        let out = kick_ideal(&kick_input(c(0.0, 0.0), dim).unwrap(), 0.31, 1).unwrap();
        assert!(out.h_part.norm_sqr() < 1e-24);
        let expect = coherent_state(c(0.0, 0.31), dim).unwrap().scaled(c(0.0, -1.0));
        assert!(diff_sqr(&out.t_part, &expect) < 1e-20);
    }

    #[test]
    fn same_direction_pair_is_minus_identity() {
        let dim = 40;
        let k = Kicker::new(0.31, dim);
        let psi = HybridState::product(c(0.6, 0.0), c(0.0, 0.8), &coherent_state(c(1.0, 0.5), dim).unwrap()).unwrap();
        let twice = k.ideal(&k.ideal(&psi, 1).unwrap(), 1).unwrap();
        let minus = HybridState {
            t_part: psi.t_part.scaled(c(-1.0, 0.0)),
            h_part: psi.h_part.scaled(c(-1.0, 0.0)),
            time: psi.time,
        };
        assert!(state_close(&twice, &minus, 1e-10));
    }

    #[test]
    fn alternating_pair_is_coin_diagonal_displacement() {
        let dim = 48;
        let eta = 0.31;
        let k = Kicker::new(eta, dim);
        let m = coherent_state(c(0.7, 0.0), dim).unwrap();
        let psi = HybridState::product(c(0.6, 0.0), c(0.8, 0.0), &m).unwrap();
        let out = k.ideal(&k.ideal(&psi, 1).unwrap(), -1).unwrap();
        let d = Displacer::new(dim);
        let t = d.apply(c(0.0, -2.0 * eta), psi.t_part.amps());
        let h = d.apply(c(0.0, 2.0 * eta), psi.h_part.amps());
        let expect = HybridState {
            t_part: MotionalState::from_raw(t.into_iter().map(|x| -x).collect()),
            h_part: MotionalState::from_raw(h.into_iter().map(|x| -x).collect()),
            time: 0.0,
        };
        assert!(state_close(&out, &expect, 1e-10));
    }

    #[test]
    fn ideal_kick_is_unitary() {
        let dim = 40;
        let k = Kicker::new(0.31, dim);
        for (ct, ch, a) in [
            (1.0, 0.0, c(0.0, 0.0)),
            (0.6, 0.8, c(1.5, -1.0)),
            (0.0, 1.0, c(-2.0, 0.3)),
        ] {
            let psi = HybridState::product(c(ct, 0.0), c(ch, 0.0), &coherent_state(a, dim).unwrap()).unwrap();
            let out = k.ideal(&psi, -1).unwrap();
            assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn full_kick_without_trap_matches_ideal() {
        let kp = KickParams::experimental(1e-9).with_omega_z(0.0).with_dim(48);
        let k = Kicker::new(kp.eta, kp.dim);
        let psi = kick_input(c(1.0, 1.0), kp.dim).unwrap();
        let cmp = k.compare(&psi, &kp).unwrap();
        assert!(cmp.fidelity > 1.0 - 1e-8, "{}", cmp.fidelity);
    }

    #[test]
    fn short_kick_from_ground_state() {
        let kp = KickParams::experimental(1e-10).with_dim(32);
        let cmp = Kicker::new(kp.eta, kp.dim)
            .compare(&kick_input(c(0.0, 0.0), 32).unwrap(), &kp)
            .unwrap();
        assert!(cmp.fidelity >= 0.9999);
    }

    #[test]
    fn deviation_within_first_order_estimate() {
        for r in [2.0, 5.0, 10.0] {
            let dim = required_dim(r);
            let k = Kicker::new(0.31, dim);
            for phase in [0.0, PI / 2.0] {
                let alpha = C64::from_polar(r, phase);
                let psi = kick_input(alpha, dim).unwrap();
                for t_p in [1e-10, 5e-10] {
                    let kp = KickParams::experimental(t_p).with_dim(dim);
                    let cmp = k.compare(&psi, &kp).unwrap();
                    let bound = error_bound(r, kp.omega_z, t_p);
                    assert!(
                        cmp.deviation <= 2.0 * bound,
                        "|α|={r} T={t_p}: {} vs {bound}",
                        cmp.deviation
                    );
                }
            }
        }
    }

    #[test]
    fn bound_and_duration() {
        let wz = angular(2.13e6);
        assert!(max_duration(0.0, wz, 0.1).is_infinite());
        let t = max_duration(200.0, wz, 0.1);
        assert!((t - 1.87e-13).abs() / 1.87e-13 < 0.01);
        assert!((error_bound(200.0, wz, t) - 0.1).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for r in [0.5, 1.0, 2.0, 10.0, 200.0] {
            let d = max_duration(r, wz, 0.1);
            assert!(d < prev);
            prev = d;
        }
    }

    #[test]
    fn reference_fits_at_large_amplitude() {
        assert!((REFERENCE_IMAGINARY.eval(200.0) - 0.21e-9).abs() < 0.01e-9);
        assert!((REFERENCE_REAL.eval(200.0) - 2.18e-9).abs() < 0.01e-9);
    }

    #[test]
    fn fit_recovers_exact_quadratic() {
        let f = ThresholdFit {
            c0: -17.2,
            c1: -0.4,
            c2: -0.07,
        };
        let pairs: Vec<(f64, f64)> = [1.0, 1.5, 2.0, 3.0, 5.0, 7.0, 10.0]
            .iter()
            .map(|&r| (r, f.eval(r)))
            .collect();
        let g = fit_threshold_curve(&pairs).unwrap();
        assert!((g.c0 - f.c0).abs() < 1e-10 && (g.c1 - f.c1).abs() < 1e-10 && (g.c2 - f.c2).abs() < 1e-10);
        assert!(fit_threshold_curve(&pairs[..4]).is_err());
    }

    #[test]
    fn threshold_ordering_at_small_amplitude() {
        let tpl = KickParams::experimental(1e-9);
        let im = fidelity_threshold(c(0.0, 2.0), 0.99, &tpl).unwrap();
        let re = fidelity_threshold(c(2.0, 0.0), 0.99, &tpl).unwrap();
        assert!(re.t_p > im.t_p);
        assert!(im.monotone && re.monotone);
        assert!(im.fidelity >= 0.99);
        for (th, reference) in [(&im, REFERENCE_IMAGINARY), (&re, REFERENCE_REAL)] {
            let rel = (th.t_p - reference.eval(2.0)).abs() / reference.eval(2.0);
            assert!(rel < 0.2, "{} vs {}", th.t_p, reference.eval(2.0));
        }
    }

    #[test]
    fn unreachable_threshold_reported() {
        let tpl = KickParams::experimental(1e-9);
        match fidelity_threshold(c(0.0, 2.0), 1.0 - 1e-15, &tpl) {
            Err(Error::NoThreshold { .. }) => {}
            other => panic!("expected NoThreshold, got {other:?}"),
        }
    }

    #[test]
    fn alternating_train_adds_displacements() {
        let eta = 0.25;
        let kp = KickParams::pi_pulse(1e-9, eta, 0.0, 48);
        let psi = kick_input(c(0.0, 0.0), 48).unwrap();
        let tr = kick_train(8, true, &kp, &psi).unwrap();
        assert!(tr.fidelity > 1.0 - 1e-8);
        let a = tr.state.h_part.normalized().unwrap().mean_a();
        assert!((a.norm() - 2.0).abs() < 1e-6, "{a}");
        let same = kick_train(8, false, &kp, &psi).unwrap();
        assert!(same.state.h_part.mean_a().norm() < 1e-6);
        assert!((same.state.h_part.norm_sqr() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn single_kick_train_is_full_kick() {
        let kp = KickParams::experimental(2e-10).with_dim(48);
        let psi = kick_input(c(1.0, 0.0), 48).unwrap();
        let tr = kick_train(1, true, &kp, &psi).unwrap();
        let one = kick_full(&psi, &kp).unwrap();
        assert!(state_close(&tr.state, &one, 1e-14));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(KickParams::experimental(1e-12).validate().is_err());
        let mut kp = KickParams::experimental(1e-9);
        kp.omega *= 1.1;
        assert!(kp.validate().is_err());
        assert!(kick_train(
            0,
            true,
            &KickParams::experimental(1e-9),
            &kick_input(c(0.0, 0.0), 64).unwrap()
        )
        .is_err());
    }
}
