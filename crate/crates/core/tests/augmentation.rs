//! The Poisson and Pólya-Gamma augmentation must leave the exact conditional
//! of a state untouched once the auxiliary variables are integrated out.

use fssm::augment::{make_pseudo_obs, sample_omega, sample_z_log};
use fssm::samplers::RngStream;
use fssm::specials::integrate;
use rand_distr::{Distribution, StandardNormal};

/// Mean and variance of `p(u) ∝ exp{−(b v² + 2c v s + d s²)/(v+s)²} N(u; m0, v0)`.
fn exact_moments(b: f64, c: f64, d: f64, s: f64, m0: f64, v0: f64) -> (f64, f64) {
    let log_lik = |u: f64| {
        let v = u.exp();
        -(b * v * v + 2.0 * c * v * s + d * s * s) / ((v + s) * (v + s)) - 0.5 * (u - m0).powi(2) / v0
    };
    let (lo, hi) = (m0 - 14.0 * v0.sqrt(), m0 + 14.0 * v0.sqrt());
    let w = |k: i32| move |u: f64| u.powi(k) * log_lik(u).exp();
    let z = integrate(w(0), lo, hi, 1e-13).unwrap();
    let m = integrate(w(1), lo, hi, 1e-13).unwrap() / z;
    let m2 = integrate(w(2), lo, hi, 1e-13).unwrap() / z;
    (m, m2 - m * m)
}

#[allow(clippy::too_many_arguments)]
fn augmented_chain(b: f64, c: f64, d: f64, s: f64, m0: f64, v0: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = RngStream::new(seed, 0);
    let log_s = s.ln();
    let mut u = m0;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let (z1, z2) = sample_z_log(&mut rng, b, c, d, u, log_s).unwrap();
        let omega = sample_omega(&mut rng, z1, z2, u, log_s).unwrap();
        let obs = make_pseudo_obs(z1, omega, log_s, b < d).unwrap();
        let (prec, lin) = if obs.is_missing() {
            (1.0 / v0, m0 / v0)
        } else {
            (1.0 / v0 + obs.precision, m0 / v0 + obs.precision * obs.value)
        };
        let z: f64 = StandardNormal.sample(&mut rng);
        u = lin / prec + z / prec.sqrt();
        out.push(u);
    }
    out
}

fn batch_mean_se(xs: &[f64]) -> (f64, f64) {
    let batches = 100;
    let size = xs.len() / batches;
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.chunks_exact(size).map(|c| (c.iter().sum::<f64>() / size as f64 - m).powi(2)).sum::<f64>()
        / (batches - 1) as f64;
    (m, (var / batches as f64).sqrt())
}

#[test]
fn augmented_chain_targets_the_exact_conditional() {
    // (b, c, d, s, prior mean, prior variance); B is PSD in every case
    let cases = [
        (2.0, 0.5, 0.4, 1.0, 0.0, 1.0),
        (0.3, -0.2, 3.0, 0.5, 1.0, 2.0),
        (5.0, 4.0, 4.0, 2.0, -0.5, 0.5),
        (1.0, 0.0, 1.0, 1.0, 0.0, 4.0),
        (0.0, 0.0, 6.0, 3.0, 2.0, 1.0),
    ];
    for (i, &(b, c, d, s, m0, v0)) in cases.iter().enumerate() {
        let (m, v) = exact_moments(b, c, d, s, m0, v0);
        let xs = augmented_chain(b, c, d, s, m0, v0, 200_000, i as u64);
        let (em, se) = batch_mean_se(&xs);
        assert!((em - m).abs() < 4.0 * se, "case {i}: mean {em} vs exact {m} (se {se})");
        let sq: Vec<f64> = xs.iter().map(|x| (x - m).powi(2)).collect();
        let (ev, se_v) = batch_mean_se(&sq);
        assert!((ev - v).abs() < 4.0 * se_v, "case {i}: variance {ev} vs exact {v} (se {se_v})");
    }
}
