use ionwalk::dipole::*;
use ionwalk::fock::{sideband_ceiling, sideband_peak};
use ionwalk::params::{angular, ApproxLevel, SimParams};
use ionwalk::PhasePoint;
use rustfft::{num_complex::Complex64 as C, FftPlanner};
use std::f64::consts::PI;

fn fig5(level: ApproxLevel) -> SimParams {
    SimParams::experimental().with_omega_d(angular(1.2e6)).with_level(level)
}

fn samples(p: &SimParams, duration: f64, segments: usize) -> Vec<Sample> {
    let prop = Propagator::new(p).unwrap();
    prop.propagate_sampled(&HybridState::ground_tails(p.dim), duration, segments)
        .unwrap()
        .1
}

fn stats(s: &[Sample]) -> Vec<FockStats> {
    s.iter()
        .map(|x| FockStats {
            t: x.t,
            mean_n: x.n_t,
            variance: 0.0,
            fano: 1.0,
            alpha: x.alpha_t,
        })
        .collect()
}

fn dist(a: PhasePoint, b: PhasePoint) -> f64 {
    (a.as_complex() - b.as_complex()).norm()
}

#[test]
fn lda_returns_after_full_period_rwa_earlier() {
    let lda = return_time(&stats(&samples(&fig5(ApproxLevel::Lda), 12e-6, 600))).unwrap();
    assert!((lda - 10e-6).abs() < 0.01 * 10e-6, "{lda}");
    let rwa = return_time(&stats(&samples(&fig5(ApproxLevel::Rwa), 12e-6, 600))).unwrap();
    assert!(rwa < 10e-6, "{rwa}");
}

#[test]
fn rwa_follows_lda_near_origin() {
    let lda = samples(&fig5(ApproxLevel::Lda), 10e-6, 400);
    let rwa = samples(&fig5(ApproxLevel::Rwa), 10e-6, 400);
    for (a, b) in lda.iter().zip(&rwa).take_while(|(a, _)| a.n_t < 0.5) {
        assert!(dist(a.alpha_t, b.alpha_t) < 0.05);
    }
    // the RWA elements carry e^{-η²/2} already at n = 0
    let p = fig5(ApproxLevel::Lda);
    let dressed = p.with_eta(p.eta * (-0.5 * p.eta * p.eta).exp());
    let lda = samples(&dressed, 10e-6, 400);
    let mut checked = 0;
    for (a, b) in lda.iter().zip(&rwa).take_while(|(a, _)| a.n_t < 1.0) {
        assert!(dist(a.alpha_t, b.alpha_t) < 0.05, "t = {}", a.t);
        checked += 1;
    }
    assert!(checked > 10);
}

#[test]
fn trap_averaged_3sb_follows_rwa() {
    let p = fig5(ApproxLevel::ThreeSideband);
    let per = 2.0 * PI / p.omega_z;
    let window = 20;
    let dur = 5e-6;
    let segs = (dur / per * window as f64).round() as usize;
    let full = samples(&p, dur, segs);
    let rwa = samples(&p.with_level(ApproxLevel::Rwa), dur, segs);
    let limit = sideband_peak(p.eta) as f64 / 2.0;
    let mut checked = 0;
    for i in window / 2..full.len() - window / 2 {
        if rwa[i].n_t >= limit {
            break;
        }
        let avg = full[i - window / 2..i + window / 2]
            .iter()
            .map(|s| s.alpha_t.as_complex())
            .sum::<C>()
            / window as f64;
        assert!((avg - rwa[i].alpha_t.as_complex()).norm() < 0.1, "t = {}", full[i].t);
        checked += 1;
    }
    assert!(checked > 40);
}

fn spectrum_peaks(p: &SimParams) -> Vec<(f64, f64)> {
    let n = 1000;
    let dur = 20e-6;
    let s = samples(p, dur, n);
    let xs: Vec<f64> = s.iter().take(n).map(|x| x.alpha_t.re).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<C> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos();
            C::new((x - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mag: Vec<f64> = buf[..n / 2].iter().map(|c| c.norm()).collect();
    let top = mag.iter().cloned().fold(0.0, f64::max);
    (1..n / 2 - 1)
        .filter(|&i| mag[i] > mag[i - 1] && mag[i] >= mag[i + 1])
        .map(|i| (i as f64 / dur, mag[i] / top))
        .collect()
}

#[test]
fn micromotion_sidebands_only_in_3sb() {
    let p = fig5(ApproxLevel::ThreeSideband);
    let peaks = spectrum_peaks(&p);
    let nu_z = p.omega_z / (2.0 * PI);
    let nu_d = p.delta / (2.0 * PI);
    for k in [2.0, 3.0] {
        let f = k * nu_z + nu_d;
        assert!(
            peaks.iter().any(|&(x, m)| (x - f).abs() <= 150e3 && m > 1e-3),
            "no peak near {f:.3e} Hz"
        );
    }
    let rwa = spectrum_peaks(&p.with_level(ApproxLevel::Rwa));
    assert!(rwa.iter().all(|&(x, m)| x < 1e6 || m < 1e-4));
}

fn fig6() -> SimParams {
    SimParams::experimental()
        .with_omega_d(angular(2e6))
        .with_omega_z(angular(2e6))
        .with_eta(0.3)
}

#[test]
fn resonant_drive_saturates_below_ceiling() {
    let p = fig6();
    let g1 = sideband_peak(p.eta) as f64;
    let g2 = sideband_ceiling(p.eta);
    let ex = resonant_excitation(&p, 8e-6, 32).unwrap();
    let pops = ex.state.t_part.populations();
    assert!(pops[g2 + 5..].iter().sum::<f64>() < 1e-3);
    assert!(ex.stats.iter().all(|s| s.mean_n < g2 as f64));
    let past: Vec<&FockStats> = ex.stats.iter().filter(|s| s.mean_n > g1).collect();
    assert!(!past.is_empty());
    assert!(past.iter().all(|s| s.fano < 1.0));
}

#[test]
fn resonant_lda_grows_linearly() {
    let p = fig6().with_level(ApproxLevel::Lda);
    let ex = resonant_excitation(&p, 2e-6, 8).unwrap();
    let rate = p.eta * p.omega_d / 2.0;
    for s in &ex.stats {
        assert!((s.alpha.abs() - rate * s.t).abs() < 1e-6);
    }
}

fn fig7() -> SimParams {
    SimParams::experimental()
        .with_omega_d(angular(0.4e6))
        .with_omega_z(angular(2e6))
        .with_eta(0.3)
}

#[test]
fn two_pulses_step_twice_in_line() {
    let p = fig7();
    let hp = p.half_period();
    let (ex, _) = stepwise_excitation(&p, 2, hp, hp, 20).unwrap();
    let a1 = ex.stats[1].alpha.as_complex();
    let a2 = ex.stats[2].alpha.as_complex();
    let turn = ((a2 - a1) / a1).arg().abs();
    assert!(turn < 0.3, "{turn}");
    assert!(((a2 - a1).norm() / a1.norm() - 1.0).abs() < 0.2);
    let lda = p.with_level(ApproxLevel::Lda);
    let (ex, _) = stepwise_excitation(&lda, 2, hp, hp, 20).unwrap();
    let expect = 2.0 * lda.eta * lda.omega_d / lda.delta;
    assert!((ex.stats[2].alpha.abs() - expect).abs() < 1e-6);
    assert!((ex.stats[2].alpha.abs() - a2.norm()).abs() < 0.2 * expect);
}

#[test]
fn rotation_reverses_beyond_peak_coupling() {
    let p = fig7();
    let hp = p.half_period();
    let (ex, paths) = stepwise_excitation(&p, 8, hp, hp, 40).unwrap();
    let g1 = sideband_peak(p.eta) as f64;
    assert!(ex.stats.last().unwrap().mean_n > g1);
    assert!(rotation_sense(&paths[0]) > 0.0);
    assert!(rotation_sense(&paths[7]) < 0.0);
    for (s, path) in ex.stats[1..].iter().zip(&paths) {
        if s.mean_n > 1.5 * g1 {
            assert!(rotation_sense(path) < 0.0, "n = {}", s.mean_n);
        }
    }
}

#[test]
fn zero_pulses_stay_in_ground_state() {
    let (ex, paths) = stepwise_excitation(&fig7(), 0, 1e-6, 1e-6, 4).unwrap();
    assert!(paths.is_empty());
    assert!((ex.state.t_part.amps()[0].norm() - 1.0).abs() < 1e-15);
}
