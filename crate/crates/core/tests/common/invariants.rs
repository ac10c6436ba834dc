//! Property checks run through a deterministic proptest runner so that the
//! acceptance harness and `cargo test` exercise the same cases.

use fssm::basis::{BasisFunction, BasisSet, Family};
use fssm::experiments::{polygon_gini_bounds, posterior_predictive_loss};
use fssm::gibbs::{run_chain, FssmSampler, McmcConfig, Sampler};
use fssm::mixture::{default_mixture_prior, run_mixture_chain, MixtureSampler};
use fssm::model::{compute_a, quad_parts, FunctionalPanel, PriorHyperparams};
use fssm::augment::poisson_rates;
use fssm::samplers::RngStream;
use nalgebra::DMatrix;
use ndarray::Array2;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

/// Lorenz-curve bases with known convex shapes.
pub const POOL: [(Family, f64, f64); 6] = [
    (Family::Beta, 1.0, 1.0),
    (Family::Beta, 3.0, 1.0),
    (Family::Beta, 1.0, 0.3),
    (Family::Beta, 2.0, 0.5),
    (Family::Pareto, 0.5, 0.5),
    (Family::Pareto, 0.9, 0.3),
];

fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn report<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

fn pool_basis(n_bases: usize, n_args: usize) -> BasisSet<f64> {
    let args: Vec<f64> = (1..=n_args).map(|k| k as f64 / (n_args + 1) as f64).collect();
    BasisSet::from_spec(&POOL[..n_bases], &args).unwrap()
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

fn check_simplex(pi: &Array2<f64>) -> Result<(), TestCaseError> {
    for (t, row) in pi.outer_iter().enumerate() {
        let sum: f64 = row.sum();
        check(row.iter().all(|&p| p >= 0.0) && (sum - 1.0).abs() <= 1e-12, || format!("row {t} = {row} sums to {sum}"))?;
    }
    Ok(())
}

/// Weights stay on the simplex after every sweep of either sampler, and
/// mixture label counts always total `K`.
pub fn simplex(cases: u32) -> Result<(), String> {
    let strategy = (any::<u64>(), 2usize..8, 1usize..5, 2usize..=POOL.len(), any::<bool>());
    report(runner(cases).run(&strategy, |(seed, n_times, n_args, n_bases, mixture)| {
        let basis = pool_basis(n_bases, n_args);
        let mut rng = RngStream::new(seed, 0);
        let y = Array2::from_shape_fn((n_times, n_args), |_| rand::Rng::random::<f64>(&mut rng));
        let panel = FunctionalPanel::new(y, basis.arguments().to_vec()).unwrap();
        let n_free = n_bases - 1;
        let mut rp = rng.substream(&[1]);
        let mut rs = rng.substream(&[2]);
        if mixture {
            let mut s = MixtureSampler::new(panel, basis, default_mixture_prior(n_free), &mut rng).unwrap();
            for _ in 0..5 {
                s.sweep(&mut rp, &mut rs).unwrap();
                check_simplex(s.latent().pi())?;
                let counts = s.label_counts();
                check(counts.rows().into_iter().all(|r| r.sum() == n_args), || format!("label counts {counts}"))?;
            }
        } else {
            let mut s = FssmSampler::new(panel, basis, PriorHyperparams::default_for(n_free)).unwrap();
            for _ in 0..5 {
                s.sweep(&mut rp, &mut rs).unwrap();
                check_simplex(s.latent().pi())?;
            }
        }
        Ok(())
    }))
}

fn a_strategy() -> impl Strategy<Value = (Vec<f64>, usize, Vec<f64>)> {
    (1usize..7, 2usize..=POOL.len()).prop_flat_map(|(k, l)| {
        (prop::collection::vec(0.0..1.0f64, k), Just(l), prop::collection::vec(0.5..2.0f64, k))
    })
}

/// `A_t` is symmetric positive semidefinite.
pub fn a_psd(cases: u32) -> Result<(), String> {
    report(runner(cases).run(&a_strategy(), |(y, n_bases, nu2)| {
        let basis = pool_basis(n_bases, y.len());
        let a = compute_a(&y, basis.matrix().view(), &nu2).unwrap();
        let m = DMatrix::from_fn(n_bases, n_bases, |i, j| a[[i, j]]);
        check(m == m.transpose(), || format!("A not symmetric: {m}"))?;
        let scale = 1.0 + m.amax();
        let low = m.symmetric_eigenvalues().min();
        check(low >= -1e-12 * scale, || format!("eigenvalue {low} of {m}"))
    }))
}

/// `max(b, d) − c ≥ −1e-12` and both Poisson rates are nonnegative, for any
/// state vector.
pub fn quad_gap_and_rates(cases: u32) -> Result<(), String> {
    let strategy = a_strategy().prop_flat_map(|(y, l, nu2)| {
        (Just(y), Just(l), Just(nu2), prop::collection::vec(-30.0..30.0f64, l - 1), 1..l)
    });
    report(runner(cases).run(&strategy, |(y, n_bases, nu2, u, ell)| {
        let basis = pool_basis(n_bases, y.len());
        let a = compute_a(&y, basis.matrix().view(), &nu2).unwrap();
        let mut log_v = vec![0.0];
        log_v.extend(&u);
        let q = quad_parts(a.view(), &log_v, ell).unwrap();
        let gap = q.b.max(q.d) - q.c;
        check(gap >= -1e-12, || format!("max(b,d) − c = {gap} for {q:?}"))?;
        let (l1, l2) = poisson_rates(q.b, q.c, q.d, log_v[ell], q.log_s).unwrap();
        check(l1 >= 0.0 && l2 >= 0.0, || format!("rates ({l1}, {l2})"))
    }))
}

fn basis_strategy() -> impl Strategy<Value = BasisFunction<f64>> {
    prop_oneof![
        (1.0..6.0f64, 0.1..=1.0f64).prop_map(|(a, b)| BasisFunction::beta(a, b).unwrap()),
        (0.05..=1.0f64, 0.05..=1.0f64).prop_map(|(a, b)| BasisFunction::pareto(a, b).unwrap()),
    ]
}

/// Every basis is pinned at `(0,0)` and `(1,1)`, nondecreasing and convex.
pub fn basis_shape(cases: u32) -> Result<(), String> {
    report(runner(cases).run(&basis_strategy(), |f| {
        check(f.eval(0.0).unwrap() == 0.0 && (f.eval(1.0).unwrap() - 1.0).abs() < 1e-15, || format!("{f:?} not pinned"))?;
        let n = 400;
        let v: Vec<f64> = (0..=n).map(|i| f.eval(i as f64 / n as f64).unwrap()).collect();
        for i in 1..=n {
            check(v[i] >= v[i - 1], || format!("{f:?} decreases at {i}"))?;
        }
        for i in 1..n {
            let second = v[i + 1] - 2.0 * v[i] + v[i - 1];
            check(second >= -1e-12, || format!("{f:?} concave at {i}: {second}"))?;
        }
        Ok(())
    }))
}

/// Polygon bounds are ordered and contain the Gini of the convex curve
/// the points were taken from.
pub fn polygon_bounds(cases: u32) -> Result<(), String> {
    let strategy = (
        prop::collection::vec(0.0..1.0f64, POOL.len()),
        prop::collection::btree_set(1u32..999, 1..10),
    );
    report(runner(cases).run(&strategy, |(raw, grid)| {
        let total: f64 = raw.iter().sum::<f64>() + 1e-12;
        let w: Vec<f64> = raw.iter().map(|r| (r + 1e-12) / total).collect();
        let bases: Vec<BasisFunction<f64>> =
            POOL.iter().map(|&(fam, a, b)| BasisFunction::new(fam, a, b).unwrap()).collect();
        let curve = |x: f64| bases.iter().zip(&w).map(|(f, wi)| wi * f.eval(x).unwrap()).sum::<f64>();
        let gini: f64 = bases.iter().zip(&w).map(|(f, wi)| wi * f.gini().unwrap()).sum();
        let points: Vec<(f64, f64)> = grid.iter().map(|&k| (k as f64 / 1000.0, curve(k as f64 / 1000.0))).collect();
        let (lo, hi) = polygon_gini_bounds(&points).unwrap();
        check(lo <= hi, || format!("lower {lo} above upper {hi}"))?;
        check(lo <= gini + 1e-9 && gini <= hi + 1e-9, || format!("Gini {gini} outside [{lo}, {hi}]"))
    }))
}

/// `PPSE ≥ PPV ≥ 0`.
pub fn ppse_at_least_ppv(cases: u32) -> Result<(), String> {
    let strategy = (1usize..6, 1usize..6).prop_flat_map(|(t, k)| {
        (
            prop::collection::vec(-5.0..5.0f64, t * k),
            prop::collection::vec(-5.0..5.0f64, t * k),
            prop::collection::vec(0.0..3.0f64, t * k),
            Just((t, k)),
        )
    });
    report(runner(cases).run(&strategy, |(y, m, v, dim)| {
        let a = |x: Vec<f64>| Array2::from_shape_vec(dim, x).unwrap();
        let loss = posterior_predictive_loss(&a(y), &a(m), &a(v)).unwrap();
        check(loss.ppse >= loss.ppv && loss.ppv >= 0.0, || format!("{loss:?}"))
    }))
}

/// Equal seeds give identical stores; different seeds do not.
pub fn determinism(cases: u32) -> Result<(), String> {
    let strategy = (any::<u64>(), any::<bool>());
    report(runner(cases).run(&strategy, |(seed, mixture)| {
        let basis = pool_basis(3, 4);
        let mut rng = RngStream::new(seed, 9);
        let y = Array2::from_shape_fn((6, 4), |(_, k)| basis.matrix()[[k, 1]] + 0.01 * rand::Rng::random::<f64>(&mut rng));
        let panel = FunctionalPanel::new(y, basis.arguments().to_vec()).unwrap();
        let run = |seed: u64| {
            let config = McmcConfig { n_iter: 20, n_burnin: 5, thin: 2, seed, n_chains: 1, store_states: true };
            let store = if mixture {
                run_mixture_chain(&config, 0, &panel, &basis, &default_mixture_prior(2)).unwrap()
            } else {
                run_chain(&config, 0, &panel, &basis, &PriorHyperparams::default_for(2)).unwrap()
            };
            (store.params, store.weights, store.gini)
        };
        let first = run(seed);
        check(first == run(seed), || "same seed, different draws".into())?;
        check(first != run(seed.wrapping_add(1)), || "different seeds, same draws".into())
    }))
}

pub type Invariant = (&'static str, fn(u32) -> Result<(), String>, u32);

/// Every invariant with its default number of cases.
pub const ALL: [Invariant; 7] = [
    ("simplex", simplex, 48),
    ("A psd", a_psd, 256),
    ("quad gap and rates", quad_gap_and_rates, 512),
    ("basis shape", basis_shape, 128),
    ("polygon bounds", polygon_bounds, 64),
    ("PPSE >= PPV", ppse_at_least_ppv, 256),
    ("determinism", determinism, 16),
];
