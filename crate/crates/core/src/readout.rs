//! Blue-sideband readout: forward model of the detection probability and its
//! inversion to Fock and position probabilities.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fock::sideband_element;
use crate::linalg::{condition_number, nnls};

/// Largest accepted condition number of a fit dictionary.
pub const MAX_CONDITION: f64 = 1e8;

const PROB_SUM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutConfig {
    /// Damping rate γ in 1/s.
    pub gamma: f64,
    /// Sample times in s.
    pub t_grid: Vec<f64>,
    /// Highest Fock index fitted.
    pub n_max: usize,
    /// Carrier Rabi frequency scaling the sideband elements (rad/s).
    pub base_rabi: f64,
}

impl ReadoutConfig {
    /// 200 samples over 5 periods of `Ω_{1,0}`, no damping.
    pub fn new(eta: f64, base_rabi: f64, n_max: usize) -> Result<Self> {
        let w10 = base_rabi * sideband_element(0, eta).norm();
        if !(w10 > 0.0 && w10.is_finite()) {
            return Err(Error::invalid("Ω_{1,0} must be positive"));
        }
        let span = 5.0 * 2.0 * PI / w10;
        let t_grid = (0..200).map(|i| span * i as f64 / 199.0).collect();
        let cfg = ReadoutConfig {
            gamma: 0.0,
            t_grid,
            n_max,
            base_rabi,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_grid(mut self, t_grid: Vec<f64>) -> Self {
        self.t_grid = t_grid;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.base_rabi > 0.0) || !self.base_rabi.is_finite() {
            return Err(Error::invalid("base Rabi frequency must be > 0"));
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("t_grid must be non-empty and finite"));
        }
        if self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("t_grid must be strictly increasing"));
        }
        Ok(())
    }

    /// `Ω_{n+1,n}` in rad/s.
    pub fn rabi(&self, n: usize, eta: f64) -> f64 {
        self.base_rabi * sideband_element(n, eta).norm()
    }
}

fn check_probs(p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::invalid("probabilities must be finite and non-negative"));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::invalid(format!("probabilities sum to {s}, expected 1")));
    }
    Ok(())
}

/// `P_T(t) = ½(1 + Σ_n p_n cos(Ω_{n+1,n} t) e^{−γt})` on the config grid.
pub fn bsb_signal(fock_probs: &[f64], cfg: &ReadoutConfig, eta: f64) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_probs(fock_probs)?;
    let rabi: Vec<f64> = (0..fock_probs.len()).map(|n| cfg.rabi(n, eta)).collect();
    Ok(cfg
        .t_grid
        .iter()
        .map(|&t| {
            let damp = (-cfg.gamma * t).exp();
            let s: f64 = fock_probs.iter().zip(&rabi).map(|(p, w)| p * (w * t).cos()).sum();
            0.5 * (1.0 + s * damp)
        })
        .collect())
}

/// Cosine dictionary with one column per Fock index `0..=n_max`.
pub fn dictionary(cfg: &ReadoutConfig, eta: f64) -> DMatrix<f64> {
    let cols = cfg.n_max + 1;
    DMatrix::from_fn(cfg.t_grid.len(), cols, |i, n| {
        let t = cfg.t_grid[i];
        (cfg.rabi(n, eta) * t).cos() * (-cfg.gamma * t).exp()
    })
}

fn normalize(x: &DVector<f64>) -> Result<Vec<f64>> {
    let v: Vec<f64> = x.iter().map(|&p| p.max(0.0)).collect();
    let s: f64 = v.iter().sum();
    if !(s > 0.0) {
        return Err(Error::invalid("fit returned an all-zero distribution"));
    }
    Ok(v.into_iter().map(|p| p / s).collect())
}

/// Fits `p_0..p_{n_max}` to a measured signal by non-negative least squares
/// on the cosine dictionary plus a normalization row.
///
/// `prior` seeds the active set of the fit.
pub fn invert_bsb(signal: &[f64], cfg: &ReadoutConfig, eta: f64, prior: Option<&[f64]>) -> Result<Vec<f64>> {
    cfg.validate()?;
    if signal.len() != cfg.t_grid.len() {
        return Err(Error::invalid(format!(
            "signal has {} samples, grid has {}",
            signal.len(),
            cfg.t_grid.len()
        )));
    }
    let slowest = (0..=cfg.n_max).map(|n| cfg.rabi(n, eta)).fold(f64::INFINITY, f64::min);
    let span = cfg.t_grid[cfg.t_grid.len() - 1] - cfg.t_grid[0];
    if !(slowest > 0.0) || span * slowest < 3.0 * 2.0 * PI {
        return Err(Error::invalid(
            "t_grid must span at least 3 periods of the slowest sideband frequency",
        ));
    }

    let d = dictionary(cfg, eta);
    let (rows, cols) = d.shape();
    let mut a = DMatrix::zeros(rows + 1, cols);
    a.rows_mut(0, rows).copy_from(&d);
    a.row_mut(rows).fill(1.0);
    let cond = condition_number(&a);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned {
            condition: cond,
            limit: MAX_CONDITION,
        });
    }
    let b = DVector::from_iterator(rows + 1, signal.iter().map(|s| 2.0 * s - 1.0).chain([1.0]));

    let start = match prior {
        Some(p) => {
            let mut v = vec![0.0; cols];
            for (i, &x) in p.iter().take(cols).enumerate() {
                v[i] = x;
            }
            Some(v)
        }
        None => None,
    };
    let x = nnls(&a, &b, start.as_deref())?;
    normalize(&x)
}

/// Fock distributions of the walker state and of its copies shifted by one
/// step towards `+k` and `−k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftedReadout {
    pub plain: Vec<f64>,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionFit {
    pub positions: Vec<i64>,
    pub probs: Vec<f64>,
    /// Euclidean norm of the fit residual over all three distributions.
    pub residual: f64,
}

impl PositionFit {
    pub fn prob(&self, k: i64) -> f64 {
        self.positions
            .iter()
            .position(|&j| j == k)
            .map_or(0.0, |i| self.probs[i])
    }
}

/// Forward model: Fock distributions produced by position weights
/// `weights[k + k_max]`, `k ∈ −k_max..=k_max`, with `basis[|k|]` the Fock
/// distribution of position `|k|`.
pub fn shifted_readout(weights: &[f64], basis: &[Vec<f64>]) -> Result<ShiftedReadout> {
    if weights.len().is_multiple_of(2) {
        return Err(Error::invalid("position weights must cover −k_max..=k_max"));
    }
    let k_max = (weights.len() / 2) as i64;
    if basis.len() < k_max as usize + 2 {
        return Err(Error::invalid("position basis must cover |k| ≤ k_max + 1"));
    }
    let len = basis.iter().map(Vec::len).max().unwrap_or(0);
    let mix = |offset: i64| {
        let mut out = vec![0.0; len];
        for (i, w) in weights.iter().enumerate() {
            let k = i as i64 - k_max + offset;
            for (o, p) in out.iter_mut().zip(&basis[k.unsigned_abs() as usize]) {
                *o += w * p;
            }
        }
        out
    };
    Ok(ShiftedReadout {
        plain: mix(0),
        plus: mix(1),
        minus: mix(-1),
    })
}

/// Joint non-negative fit of position weights `k ∈ −k_max..=k_max` to the
/// three measured Fock distributions.
///
/// `basis[j]` is the Fock distribution of the calibrated position state
/// `|α̃_j⟩`, `j = 0..=k_max + 1`; `|α̃_{−j}⟩` is assumed to share it.
pub fn disambiguate_positions(measured: &ShiftedReadout, basis: &[Vec<f64>], k_max: usize) -> Result<PositionFit> {
    if basis.len() < k_max + 2 {
        return Err(Error::invalid(format!(
            "position basis needs {} entries, got {}",
            k_max + 2,
            basis.len()
        )));
    }
    for b in basis.iter().chain([&measured.plain, &measured.plus, &measured.minus]) {
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite probability"));
        }
    }
    let len = basis
        .iter()
        .chain([&measured.plain, &measured.plus, &measured.minus])
        .map(Vec::len)
        .max()
        .unwrap_or(0);
    let cols = 2 * k_max + 1;
    let rows = 3 * len;
    let get = |v: &Vec<f64>, n: usize| v.get(n).copied().unwrap_or(0.0);

    let mut a = DMatrix::zeros(rows + 1, cols);
    for c in 0..cols {
        let k = c as i64 - k_max as i64;
        for (block, off) in [0i64, 1, -1].iter().enumerate() {
            let prof = &basis[(k + off).unsigned_abs() as usize];
            for n in 0..len {
                a[(block * len + n, c)] = get(prof, n);
            }
        }
        a[(rows, c)] = 1.0;
    }
    let mut b = DVector::zeros(rows + 1);
    for (block, v) in [&measured.plain, &measured.plus, &measured.minus].iter().enumerate() {
        for n in 0..len {
            b[block * len + n] = get(v, n);
        }
    }
    b[rows] = 1.0;

    let cond = condition_number(&a);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned {
            condition: cond,
            limit: MAX_CONDITION,
        });
    }
    let x = nnls(&a, &b, None)?;
    let r = &a * &x - &b;
    let residual = r.rows(0, rows).norm();
    Ok(PositionFit {
        positions: (-(k_max as i64)..=k_max as i64).collect(),
        probs: normalize(&x)?,
        residual,
    })
}
