//! Truncated Fock-space primitives: motional states, coherent states,
//! displacement operators, sideband matrix elements and the Wigner function.

use std::f64::consts::{FRAC_2_PI, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Number of top Fock levels watched by the leakage guard.
pub const LEAKAGE_BAND: usize = 10;
/// Maximum population allowed in the top [`LEAKAGE_BAND`] levels.
pub const LEAKAGE_TOL: f64 = 1e-6;
/// Minimum truncated norm of a freshly built coherent state.
pub const COHERENT_NORM_TOL: f64 = 1e-9;

/// `ln n!` by direct summation; exact enough for every `n` used here.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Generalized Laguerre polynomial `L_n^{(k)}(x)` by the three-term recurrence.
pub fn assoc_laguerre(n: usize, k: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + k - x;
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + k - x) * cur - (jf + k) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Closed-form matrix element `⟨m|D(β)|n⟩` of the (untruncated) displacement
/// operator.
///
/// Intended for moderate `|β|` (a few units); the Laguerre recurrence loses
/// precision for `|β|² ≫ n`.
pub fn displacement_element(m: usize, n: usize, beta: C64) -> C64 {
    let r2 = beta.norm_sqr();
    if r2 == 0.0 {
        return if m == n { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
    }
    let r = r2.sqrt();
    let (lo, hi) = if m >= n { (n, m) } else { (m, n) };
    let diff = hi - lo;
    let ln_mag = 0.5 * (ln_factorial(lo) - ln_factorial(hi)) + diff as f64 * r.ln() - 0.5 * r2;
    let lag = assoc_laguerre(lo, diff as f64, r2);
    // β^(m-n) for m >= n, (-β*)^(n-m) otherwise
    let arg = if m >= n {
        diff as f64 * beta.arg()
    } else {
        diff as f64 * (PI - beta.arg())
    };
    C64::from_polar(ln_mag.exp() * lag, arg)
}

/// Sideband coupling `⟨n+1| exp(iη(a + a†)) |n⟩`.
pub fn sideband_element(n: usize, eta: f64) -> C64 {
    displacement_element(n + 1, n, C64::new(0.0, eta))
}

/// `|⟨n+1|e^{iη(a+a†)}|n⟩|` for `n = 0..count`.
pub fn sideband_profile(count: usize, eta: f64) -> Vec<f64> {
    (0..count).map(|n| sideband_element(n, eta).norm()).collect()
}

/// Fock index at which the first-sideband coupling is largest (g₁).
pub fn sideband_peak(eta: f64) -> usize {
    let mut best = (0, 0.0);
    let mut n = 0;
    loop {
        let v = sideband_element(n, eta).norm();
        if v > best.1 {
            best = (n, v);
        } else if n > best.0 + 4 * (best.0 + 1) {
            return best.0;
        }
        n += 1;
    }
}

/// First Fock index above g₁ where the first-sideband coupling vanishes (g₂):
/// the index with the smaller magnitude on either side of the first sign change.
pub fn sideband_ceiling(eta: f64) -> usize {
    let g1 = sideband_peak(eta);
    // the coupling is iη e^{-η²/2} L_n^{(1)}(η²)/√(n+1): track the real factor
    let factor = |n: usize| assoc_laguerre(n, 1.0, eta * eta);
    let mut n = g1;
    while factor(n + 1).signum() == factor(n).signum() {
        n += 1;
        if n > 1_000_000 {
            return n;
        }
    }
    let a = sideband_element(n, eta).norm();
    let b = sideband_element(n + 1, eta).norm();
    if a <= b {
        n
    } else {
        n + 1
    }
}

/// Population in the top `band` levels of an amplitude vector.
pub fn tail_population(amps: &[C64], band: usize) -> f64 {
    let start = amps.len().saturating_sub(band);
    amps[start..].iter().map(|a| a.norm_sqr()).sum()
}

pub(crate) fn norm_sqr(amps: &[C64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Complex amplitudes over the truncated Fock basis `|0⟩ … |dim−1⟩`.
///
/// Public constructors return unit-norm states. Branch components of a
/// coin ⊗ motion state are stored as sub-normalized `MotionalState`s whose
/// norm carries the branch weight.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionalState {
    amps: Vec<C64>,
}

impl MotionalState {
    /// Normalizes `amps` to unit norm.
    pub fn from_amps(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::invalid("empty amplitude vector"));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::invalid("non-finite amplitude"));
        }
        let n = norm_sqr(&amps).sqrt();
        if n == 0.0 {
            return Err(Error::invalid("zero state"));
        }
        Ok(MotionalState {
            amps: amps.into_iter().map(|a| a / n).collect(),
        })
    }

    /// Wraps amplitudes without renormalizing (branch components).
    pub(crate) fn from_raw(amps: Vec<C64>) -> Self {
        MotionalState { amps }
    }

    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::invalid(format!("Fock index {n} outside dim {dim}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[n] = C64::new(1.0, 0.0);
        Ok(MotionalState { amps })
    }

    pub fn vacuum(dim: usize) -> Self {
        Self::fock(0, dim.max(1)).expect("index 0 always fits")
    }

    pub fn zeros(dim: usize) -> Self {
        MotionalState {
            amps: vec![C64::new(0.0, 0.0); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    /// Unit-norm copy.
    pub fn normalized(&self) -> Result<Self> {
        Self::from_amps(self.amps.clone())
    }

    pub fn scaled(&self, factor: C64) -> Self {
        MotionalState {
            amps: self.amps.iter().map(|a| a * factor).collect(),
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &MotionalState) -> C64 {
        inner(&self.amps, &other.amps)
    }

    /// `|⟨self|other⟩|² / (‖self‖² ‖other‖²)`.
    pub fn fidelity(&self, other: &MotionalState) -> f64 {
        let d = self.norm_sqr() * other.norm_sqr();
        if d == 0.0 {
            0.0
        } else {
            self.inner(other).norm_sqr() / d
        }
    }

    /// Fock populations normalized to the state norm.
    pub fn populations(&self) -> Vec<f64> {
        let n = self.norm_sqr();
        self.amps.iter().map(|a| a.norm_sqr() / n).collect()
    }

    pub fn mean_n(&self) -> f64 {
        let n = self.norm_sqr();
        self.amps
            .iter()
            .enumerate()
            .map(|(k, a)| k as f64 * a.norm_sqr())
            .sum::<f64>()
            / n
    }

    /// Variance of the Fock distribution.
    pub fn variance_n(&self) -> f64 {
        let p = self.populations();
        let mean: f64 = p.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
        p.iter().enumerate().map(|(k, v)| (k as f64 - mean).powi(2) * v).sum()
    }

    /// `⟨a⟩ / ‖ψ‖²`.
    pub fn mean_a(&self) -> C64 {
        let n = self.norm_sqr();
        let s: C64 = (1..self.amps.len())
            .map(|k| self.amps[k - 1].conj() * self.amps[k] * (k as f64).sqrt())
            .sum();
        s / n
    }

    pub fn tail_population(&self) -> f64 {
        tail_population(&self.amps, LEAKAGE_BAND)
    }

    /// Leakage guard: the top levels must stay (nearly) empty.
    pub fn check_leakage(&self, what: &str) -> Result<()> {
        let tail = self.tail_population();
        if tail >= LEAKAGE_TOL {
            Err(Error::Truncation {
                what: what.to_string(),
                dim: self.dim(),
                tail,
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for MotionalState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateRepr {
            dim: self.dim(),
            re: self.amps.iter().map(|a| a.re).collect(),
            im: self.amps.iter().map(|a| a.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MotionalState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = StateRepr::deserialize(d)?;
        if r.re.len() != r.dim || r.im.len() != r.dim {
            return Err(D::Error::custom("re/im length does not match dim"));
        }
        let amps = r.re.into_iter().zip(r.im).map(|(a, b)| C64::new(a, b)).collect();
        Ok(MotionalState::from_raw(amps))
    }
}

/// A point `α = re + i·im` of the co-rotating phase space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub re: f64,
    pub im: f64,
}

impl PhasePoint {
    pub fn new(re: f64, im: f64) -> Self {
        PhasePoint { re, im }
    }

    pub fn as_complex(self) -> C64 {
        C64::new(self.re, self.im)
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn abs(self) -> f64 {
        self.as_complex().norm()
    }
}

impl From<C64> for PhasePoint {
    fn from(z: C64) -> Self {
        PhasePoint { re: z.re, im: z.im }
    }
}

/// Untruncated coherent-state amplitudes `e^{-|α|²/2} αⁿ/√n!` for `n < dim`,
/// without renormalization.
pub fn coherent_amplitudes(alpha: C64, dim: usize) -> Vec<C64> {
    let r2 = alpha.norm_sqr();
    if r2 == 0.0 {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        if dim > 0 {
            v[0] = C64::new(1.0, 0.0);
        }
        return v;
    }
    let ln_r = r2.sqrt().ln();
    let theta = alpha.arg();
    let mut ln_fact = 0.0;
    (0..dim)
        .map(|n| {
            if n > 1 {
                ln_fact += (n as f64).ln();
            }
            let ln_mag = -0.5 * r2 + n as f64 * ln_r - 0.5 * ln_fact;
            C64::from_polar(ln_mag.exp(), n as f64 * theta)
        })
        .collect()
}

/// Coherent state `|α⟩` truncated to `dim` levels and renormalized.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<MotionalState> {
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::invalid("non-finite coherent amplitude"));
    }
    if dim == 0 {
        return Err(Error::invalid("dim must be positive"));
    }
    let amps = coherent_amplitudes(alpha, dim);
    let kept = norm_sqr(&amps);
    let tail = tail_population(&amps, LEAKAGE_BAND.min(dim));
    if kept < 1.0 - COHERENT_NORM_TOL || tail >= LEAKAGE_TOL {
        return Err(Error::Truncation {
            what: format!("coherent state |α| = {:.3}", alpha.norm()),
            dim,
            tail: (1.0 - kept).max(tail),
        });
    }
    MotionalState::from_amps(amps)
}

/// Spectral decomposition of the truncated quadrature `a + a†`, from which
/// exact exponentials of the truncated displacement generator follow.
///
/// With `S = diag(iⁿ)`, `a† − a = −i S (a + a†) S†`, so for `β = r e^{iθ}`
/// `D(β) = e^{iθN} S V e^{−irΛ} Vᵀ S† e^{−iθN}`.
#[derive(Clone, Debug)]
pub struct Displacer {
    dim: usize,
    vecs: DMatrix<f64>,
    vals: Vec<f64>,
}

impl Displacer {
    pub fn new(dim: usize) -> Self {
        let mut x = DMatrix::<f64>::zeros(dim, dim);
        for n in 0..dim.saturating_sub(1) {
            let s = ((n + 1) as f64).sqrt();
            x[(n + 1, n)] = s;
            x[(n, n + 1)] = s;
        }
        let eig = SymmetricEigen::new(x);
        Displacer {
            dim,
            vecs: eig.eigenvectors,
            vals: eig.eigenvalues.iter().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn side_phases(&self, beta: C64) -> Vec<C64> {
        let theta = beta.arg();
        // e^{iθn} iⁿ
        (0..self.dim)
            .map(|n| C64::from_polar(1.0, n as f64 * (theta + 0.5 * PI)))
            .collect()
    }

    /// `D(β) ψ` on the truncated space.
    pub fn apply(&self, beta: C64, psi: &[C64]) -> Vec<C64> {
        assert_eq!(psi.len(), self.dim, "state dimension mismatch");
        let r = beta.norm();
        let side = self.side_phases(beta);
        let d = self.dim;
        let rhs: Vec<C64> = psi.iter().zip(&side).map(|(p, s)| p * s.conj()).collect();
        let mut proj = vec![C64::new(0.0, 0.0); d];
        for j in 0..d {
            let col = self.vecs.column(j);
            let mut acc = C64::new(0.0, 0.0);
            for n in 0..d {
                acc += rhs[n] * col[n];
            }
            proj[j] = acc * C64::from_polar(1.0, -r * self.vals[j]);
        }
        let mut out = vec![C64::new(0.0, 0.0); d];
        for j in 0..d {
            let col = self.vecs.column(j);
            let pj = proj[j];
            for m in 0..d {
                out[m] += pj * col[m];
            }
        }
        for (o, s) in out.iter_mut().zip(&side) {
            *o *= s;
        }
        out
    }

    /// Dense `D(β)` on the truncated space.
    pub fn matrix(&self, beta: C64) -> DMatrix<C64> {
        let r = beta.norm();
        let side = self.side_phases(beta);
        let d = self.dim;
        let phases: Vec<C64> = self.vals.iter().map(|l| C64::from_polar(1.0, -r * l)).collect();
        let mut out = DMatrix::<C64>::zeros(d, d);
        for n in 0..d {
            for m in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..d {
                    acc += phases[j] * (self.vecs[(m, j)] * self.vecs[(n, j)]);
                }
                out[(m, n)] = side[m] * acc * side[n].conj();
            }
        }
        out
    }
}

/// `exp(α a† − α* a)` on the truncated space.
///
/// Fails when `D(α)|0⟩` does not fit in `dim` levels.
pub fn displacement_matrix(alpha: C64, dim: usize) -> Result<DMatrix<C64>> {
    coherent_state(alpha, dim)?;
    Ok(Displacer::new(dim).matrix(alpha))
}

/// Wigner function `W(α) = (2/π) ⟨ψ| D(α) Π D†(α) |ψ⟩`, normalized so that
/// the vacuum peaks at `2/π`.
pub fn wigner(state: &MotionalState, grid: &[PhasePoint]) -> Result<Vec<f64>> {
    if grid.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("non-finite grid point"));
    }
    state.check_leakage("wigner input")?;
    let psi = state.normalized()?;
    let disp = Displacer::new(state.dim());
    grid.iter()
        .map(|p| {
            let shifted = disp.apply(-p.as_complex(), psi.amps());
            let tail = tail_population(&shifted, LEAKAGE_BAND);
            if tail >= LEAKAGE_TOL {
                return Err(Error::Truncation {
                    what: format!("wigner at ({:.3}, {:.3})", p.re, p.im),
                    dim: state.dim(),
                    tail,
                });
            }
            let parity: f64 = shifted
                .iter()
                .enumerate()
                .map(|(n, a)| if n % 2 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
                .sum();
            Ok(FRAC_2_PI * parity)
        })
        .collect()
}

/// Rectangular grid of phase points, row-major in `im`.
pub fn phase_grid(re: (f64, f64), im: (f64, f64), n_re: usize, n_im: usize) -> Vec<PhasePoint> {
    let step = |lo: f64, hi: f64, n: usize, k: usize| {
        if n <= 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    };
    (0..n_im)
        .flat_map(|j| (0..n_re).map(move |i| PhasePoint::new(step(re.0, re.1, n_re, i), step(im.0, im.1, n_im, j))))
        .collect()
}
