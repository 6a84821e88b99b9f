//! The ideal walk on a lattice of coherent states `|α_k⟩ = |k·Δα⟩`.
//!
//! Positions are collinear, so the shift `D(±Δα)` maps lattice states onto
//! lattice states without any extra phase and the walker is represented
//! exactly by one amplitude pair `(c_k^T, c_k^H)` per site. Non-orthogonality
//! of neighbouring sites only enters through the Gram overlaps
//! `⟨α_k|α_l⟩ = exp(−(k−l)²|Δα|²/2)`.

use std::ops::RangeInclusive;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Overlap `⟨α_k|α_{k+m}⟩` of two lattice sites `m` apart.
pub fn gram(m: i64, step_size: f64) -> f64 {
    let x = m as f64 * step_size;
    (-0.5 * x * x).exp()
}

/// The coin rotation `R(θ, φ)` in the `(H, T)` basis.
pub fn coin_matrix(theta: f64, phi: f64) -> [[C64; 2]; 2] {
    let (s, c) = (0.5 * theta).sin_cos();
    [
        [C64::new(c, 0.0), C64::from_polar(s, phi)],
        [-C64::from_polar(s, -phi), C64::new(c, 0.0)],
    ]
}

/// Walker amplitudes `(c_k^T, c_k^H)` for `k ∈ [−n, n]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeState {
    step_size: f64,
    n_steps: usize,
    t: Vec<C64>,
    h: Vec<C64>,
}

impl LatticeState {
    /// Walker at `k = 0` with coin amplitudes `(c_T, c_H)`, normalized.
    pub fn origin(step_size: f64, c_t: C64, c_h: C64) -> Result<Self> {
        if !(step_size > 0.0 && step_size.is_finite()) {
            return Err(Error::invalid(format!("step size must be > 0, got {step_size}")));
        }
        let n = (c_t.norm_sqr() + c_h.norm_sqr()).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::invalid("coin amplitudes must be finite and non-zero"));
        }
        Ok(LatticeState {
            step_size,
            n_steps: 0,
            t: vec![c_t / n],
            h: vec![c_h / n],
        })
    }

    /// `|T⟩|α₀⟩`.
    pub fn tails(step_size: f64) -> Result<Self> {
        Self::origin(step_size, C64::new(1.0, 0.0), ZERO)
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    /// Support bound: all non-zero amplitudes sit at `|k| ≤ n_steps`.
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn positions(&self) -> RangeInclusive<i64> {
        let n = self.n_steps as i64;
        -n..=n
    }

    /// `(c_k^T, c_k^H)`; zero outside the support.
    pub fn coeff(&self, k: i64) -> (C64, C64) {
        let n = self.n_steps as i64;
        if k < -n || k > n {
            return (ZERO, ZERO);
        }
        let i = (k + n) as usize;
        (self.t[i], self.h[i])
    }

    /// `Σ_k |c_k^T|² + |c_k^H|²`: lattice norm, not a physical probability.
    pub fn lattice_norm(&self) -> f64 {
        self.t.iter().chain(&self.h).map(|c| c.norm_sqr()).sum()
    }

    /// Largest coefficient difference to `other` over both supports.
    pub fn max_diff(&self, other: &LatticeState) -> f64 {
        let n = self.n_steps.max(other.n_steps) as i64;
        (-n..=n)
            .map(|k| {
                let (a, b) = (self.coeff(k), other.coeff(k));
                (a.0 - b.0).norm().max((a.1 - b.1).norm())
            })
            .fold(0.0, f64::max)
    }

    pub fn apply_coin(&self, theta: f64, phi: f64) -> LatticeState {
        let m = coin_matrix(theta, phi);
        let mut out = self.clone();
        for i in 0..self.t.len() {
            let (h, t) = (self.h[i], self.t[i]);
            out.h[i] = m[0][0] * h + m[0][1] * t;
            out.t[i] = m[1][0] * h + m[1][1] * t;
        }
        out
    }

    fn moved(&self, t_dir: i64) -> LatticeState {
        let n = self.n_steps + 1;
        let len = 2 * n + 1;
        let mut t = vec![ZERO; len];
        let mut h = vec![ZERO; len];
        for i in 0..self.t.len() {
            // index i at k maps to index i + 1 at k in the wider array
            t[(i as i64 + 1 + t_dir) as usize] = self.t[i];
            h[(i as i64 + 1 - t_dir) as usize] = self.h[i];
        }
        LatticeState {
            step_size: self.step_size,
            n_steps: n,
            t,
            h,
        }
    }

    /// `S`: `T` moves to `k+1`, `H` to `k−1`.
    pub fn apply_shift(&self) -> LatticeState {
        self.moved(1)
    }

    /// `S⁻¹`: `T` moves to `k−1`, `H` to `k+1`.
    pub fn apply_shift_inverse(&self) -> LatticeState {
        self.moved(-1)
    }

    /// `⟨α_L|ψ_T⟩` and `⟨α_L|ψ_H⟩` in lattice units.
    pub fn projections(&self, l: i64) -> (C64, C64) {
        let n = self.n_steps as i64;
        let mut pt = ZERO;
        let mut ph = ZERO;
        for k in -n..=n {
            let g = gram(k - l, self.step_size);
            let i = (k + n) as usize;
            pt += self.t[i] * g;
            ph += self.h[i] * g;
        }
        (pt, ph)
    }

    /// Coin-resolved physical weights `(‖ψ_T‖², ‖ψ_H‖²)`, Gram-weighted and
    /// normalized to sum 1.
    pub fn coin_probabilities(&self) -> (f64, f64) {
        let q = |c: &[C64]| -> f64 {
            let n = c.len();
            let mut acc = 0.0;
            for i in 0..n {
                if c[i] == ZERO {
                    continue;
                }
                for j in 0..n {
                    acc += (c[i].conj() * c[j]).re * gram(i as i64 - j as i64, self.step_size);
                }
            }
            acc
        };
        let (qt, qh) = (q(&self.t), q(&self.h));
        (qt / (qt + qh), qh / (qt + qh))
    }

    /// Site range wide enough that overlaps beyond it are below `e^{-32}`.
    pub fn probability_range(&self) -> RangeInclusive<i64> {
        let margin = (8.0 / self.step_size).ceil() as i64;
        let n = self.n_steps as i64 + margin;
        -n..=n
    }

    /// `P(α_L) = |⟨α_L|ψ_T⟩|² + |⟨α_L|ψ_H⟩|²` over `range`, optionally
    /// renormalized so that the values sum to 1.
    pub fn position_probabilities(&self, range: RangeInclusive<i64>, normalize: bool) -> Vec<f64> {
        let mut p: Vec<f64> = range
            .map(|l| {
                let (a, b) = self.projections(l);
                a.norm_sqr() + b.norm_sqr()
            })
            .collect();
        if normalize {
            let s: f64 = p.iter().sum();
            if s > 0.0 {
                p.iter_mut().for_each(|v| *v /= s);
            }
        }
        p
    }

    /// Standard deviation of the renormalized position distribution, in
    /// lattice sites.
    pub fn std_dev(&self) -> f64 {
        let range = self.probability_range();
        let start = *range.start();
        let p = self.position_probabilities(range, true);
        let (mut m1, mut m2) = (0.0, 0.0);
        for (i, v) in p.iter().enumerate() {
            let l = (start + i as i64) as f64;
            m1 += l * v;
            m2 += l * l * v;
        }
        (m2 - m1 * m1).max(0.0).sqrt()
    }
}

/// Parameters of an ideal walk started from `|T⟩|α₀⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkSpec {
    pub n_steps: usize,
    pub step_size: f64,
    /// Coin phase φ of `C = R(π/2, φ)`.
    pub phi: f64,
    /// Use `R(π/2, φ + π/2)` for every coin after the first.
    pub symmetric: bool,
}

impl WalkSpec {
    pub fn new(n_steps: usize, step_size: f64) -> Self {
        WalkSpec {
            n_steps,
            step_size,
            phi: 0.0,
            symmetric: false,
        }
    }

    pub fn symmetric(mut self, yes: bool) -> Self {
        self.symmetric = yes;
        self
    }

    fn coin_phase(&self, step: usize) -> f64 {
        if self.symmetric && step > 0 {
            self.phi + std::f64::consts::FRAC_PI_2
        } else {
            self.phi
        }
    }

    /// Applies coin and shift `n_steps` times.
    pub fn run(&self) -> Result<LatticeState> {
        let mut s = LatticeState::tails(self.step_size)?;
        for i in 0..self.n_steps {
            s = self.step(&s, i);
        }
        Ok(s)
    }

    fn step(&self, s: &LatticeState, i: usize) -> LatticeState {
        s.apply_coin(std::f64::consts::FRAC_PI_2, self.coin_phase(i))
            .apply_shift()
    }

    /// `σ_N` for `N = 0..=n_steps`.
    pub fn sigma_series(&self) -> Result<Vec<f64>> {
        let mut s = LatticeState::tails(self.step_size)?;
        let mut out = Vec::with_capacity(self.n_steps + 1);
        out.push(s.std_dev());
        for i in 0..self.n_steps {
            s = self.step(&s, i);
            out.push(s.std_dev());
        }
        Ok(out)
    }
}

/// Slope of `σ_N` against `N` from a least-squares line over
/// `N ∈ [n_max/2, n_max]`.
pub fn scaling_factor(step_size: f64, n_max: usize) -> Result<f64> {
    if n_max < 40 {
        return Err(Error::invalid(format!("n_max must be >= 40, got {n_max}")));
    }
    let sigma = WalkSpec::new(n_max, step_size).sigma_series()?;
    let pts: Vec<(f64, f64)> = (n_max / 2..=n_max).map(|n| (n as f64, sigma[n])).collect();
    Ok(line_slope(&pts))
}

pub(crate) fn line_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `P_H / P_T` after three steps from `|T⟩` in closed form.
pub fn three_step_ratio(step_size: f64) -> f64 {
    let e = (-8.0 * step_size * step_size).exp();
    (1.0 + e) / (3.0 - e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn coin_identity_and_flip() {
        let s = LatticeState::origin(1.0, c(0.3, 0.1), c(-0.2, 0.7)).unwrap();
        assert!(s.apply_coin(0.0, 1.3).max_diff(&s) < 1e-15);
        let h = LatticeState::tails(1.0).unwrap().apply_coin(PI / 2.0, 0.0);
        let (t, hh) = h.coeff(0);
        assert!((t - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((hh - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn double_pi_rotation_is_minus_identity() {
        let m = coin_matrix(PI, 0.0);
        let mut p = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                p[i][j] = m[i][0] * m[0][j] + m[i][1] * m[1][j];
            }
        }
        assert!((p[0][0] + 1.0).norm() < 1e-15 && (p[1][1] + 1.0).norm() < 1e-15);
        assert!(p[0][1].norm() < 1e-15 && p[1][0].norm() < 1e-15);
    }

    #[test]
    fn three_step_amplitudes() {
        let s = WalkSpec::new(3, 1.0).run().unwrap();
        let r = 1.0 / 8f64.sqrt();
        let expected_t = [(1, -2.0), (3, 1.0), (-1, -1.0)];
        let expected_h = [(-3, 1.0), (1, 1.0)];
        for k in -3..=3 {
            let (t, h) = s.coeff(k);
            let et = expected_t.iter().find(|e| e.0 == k).map_or(0.0, |e| e.1 * r);
            let eh = expected_h.iter().find(|e| e.0 == k).map_or(0.0, |e| e.1 * r);
            assert!((t - c(et, 0.0)).norm() < 1e-14, "T at {k}: {t}");
            assert!((h - c(eh, 0.0)).norm() < 1e-14, "H at {k}: {h}");
        }
    }

    #[test]
    fn tails_moves_right() {
        let s = LatticeState::tails(1.0).unwrap().apply_shift();
        assert_eq!(s.coeff(1), (c(1.0, 0.0), ZERO));
    }

    #[test]
    fn coin_ratio() {
        for d in [0.5, 1.0, 2.0] {
            let (pt, ph) = WalkSpec::new(3, d).run().unwrap().coin_probabilities();
            assert!((ph / pt - three_step_ratio(d)).abs() < 1e-12);
        }
    }

    #[test]
    fn orthogonal_limit() {
        let s = WalkSpec::new(7, 6.0).run().unwrap();
        let p = s.position_probabilities(s.positions(), false);
        for (i, k) in s.positions().enumerate() {
            let (t, h) = s.coeff(k);
            assert!((p[i] - t.norm_sqr() - h.norm_sqr()).abs() < 1e-6);
        }
    }

    #[test]
    fn odd_sites_vanish() {
        // exactly on the lattice, and within the overlap tails once sites are
        // far enough apart
        let s = WalkSpec::new(100, 2.0).run().unwrap();
        for k in s.positions().filter(|k| k % 2 != 0) {
            assert_eq!(s.coeff(k), (ZERO, ZERO));
        }
        let odd_max = |d: f64| {
            let s = WalkSpec::new(100, d).run().unwrap();
            let range = s.probability_range();
            let start = *range.start();
            let p = s.position_probabilities(range, true);
            let peak = p.iter().cloned().fold(0.0, f64::max);
            let odd = p
                .iter()
                .enumerate()
                .filter(|(i, _)| (start + *i as i64) % 2 != 0)
                .map(|(_, v)| *v)
                .fold(0.0, f64::max);
            (odd, peak)
        };
        let (odd, peak) = odd_max(2.0);
        assert!(odd < 0.02 * peak);
        assert!(odd_max(4.0).0 < 1e-6);
    }

    #[test]
    fn small_sigma_limits() {
        // σ_0² = Σ_L L² e^{-L²|Δα|²} / Σ_L e^{-L²|Δα|²}
        let s0 = WalkSpec::new(0, 2.0).run().unwrap().std_dev();
        let w = |l: i32| (-4.0 * (l * l) as f64).exp();
        let num: f64 = (-5..=5).map(|l| (l * l) as f64 * w(l)).sum();
        let den: f64 = (-5..=5).map(w).sum();
        assert!((s0 - (num / den).sqrt()).abs() < 1e-9);
        assert!(WalkSpec::new(0, 3.0).run().unwrap().std_dev() < 0.05);
        assert!((WalkSpec::new(1, 4.0).run().unwrap().std_dev() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn sigma_grows_linearly_for_small_steps() {
        let sig = WalkSpec::new(100, 0.1).sigma_series().unwrap();
        // the overlap width alone gives σ_0 = 1/(√2·0.1) ≈ 7 sites
        assert!(sig[0] > 5.0);
        let late: Vec<(f64, f64)> = (60..=100).map(|n| (n as f64, sig[n])).collect();
        let slope = line_slope(&late);
        let resid = late
            .iter()
            .map(|(n, s)| (s - sig[60] - slope * (n - 60.0)).abs())
            .fold(0.0, f64::max);
        assert!(sig[100] - sig[0] > 2.0);
        assert!(slope > 0.02 && resid < 0.1, "slope {slope} resid {resid}");
    }

    #[test]
    fn symmetric_walk_is_mirror_symmetric() {
        let s = WalkSpec::new(40, 2.0).symmetric(true).run().unwrap();
        let p = s.position_probabilities(s.probability_range(), true);
        let n = p.len();
        for i in 0..n {
            assert!((p[i] - p[n - 1 - i]).abs() < 1e-9);
        }
    }

    #[test]
    fn scaling_factor_requires_window() {
        assert!(scaling_factor(2.0, 20).is_err());
    }

    proptest! {
        #[test]
        fn shift_inverse_roundtrip(re in -1.0f64..1.0, im in -1.0f64..1.0, steps in 0usize..12) {
            let mut s = LatticeState::origin(1.0, c(re, im), c(0.4, -0.1)).unwrap();
            for _ in 0..steps {
                s = s.apply_coin(PI / 2.0, 0.3).apply_shift();
            }
            let back = s.apply_shift().apply_shift_inverse();
            prop_assert!(back.max_diff(&s) == 0.0);
        }

        #[test]
        fn coins_preserve_lattice_norm(theta in 0.0f64..6.3, phi in -3.2f64..3.2, steps in 0usize..100) {
            let s = WalkSpec { n_steps: steps, step_size: 1.0, phi, symmetric: false }.run().unwrap();
            let r = s.apply_coin(theta, phi);
            prop_assert!((r.lattice_norm() - 1.0).abs() < 1e-12);
        }
    }
}
