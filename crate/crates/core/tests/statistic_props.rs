mod common;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{ar1, cholesky, gaussian_columns, mean_var};
use ritest::methods::{Unweighted, WeightedL2};
use ritest::{
    compute_tn, theoretical_mean, theoretical_variance, PopulationSpec, SampleSet, TestMethod,
    WeightMatrix, WeightSpec,
};

fn sample_set(p: usize, sizes: &[usize], betas: Vec<f64>, seed: u64) -> SampleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = cholesky(&ar1(p, 0.3, 1.0));
    let groups = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| gaussian_columns(&mut rng, &DVector::from_element(p, 0.1 * i as f64), &l, n))
        .collect();
    SampleSet::from_columns(groups, betas).unwrap()
}

fn weights() -> impl Strategy<Value = WeightSpec> {
    (1usize..12).prop_flat_map(|p| {
        (
            prop::collection::vec(-2.0f64..2.0, p),
            prop::collection::vec(0.05f64..3.0, p),
        )
            .prop_map(|(a, o)| WeightSpec::new(a, o).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn row_permutation_leaves_tn_unchanged(seed in any::<u64>(), n1 in 2usize..12, n2 in 2usize..12) {
        let s = sample_set(6, &[n1, n2], vec![1.0, -1.0], seed);
        let w = WeightMatrix::new(WeightSpec::default_for(6).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let shuffled: Vec<DMatrix<f64>> = s
            .groups()
            .iter()
            .map(|g| {
                let mut idx: Vec<usize> = (0..g.ncols()).collect();
                idx.shuffle(&mut rng);
                g.select_columns(&idx)
            })
            .collect();
        let t = SampleSet::from_columns(shuffled, vec![1.0, -1.0]).unwrap();
        let (a, b) = (compute_tn(&s, &w).unwrap(), compute_tn(&t, &w).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn beta_scaling_is_quadratic(seed in any::<u64>(), c in -5.0f64..5.0) {
        prop_assume!(c.abs() > 1e-3);
        let s = sample_set(5, &[4, 6, 5], vec![2.0, -2.0, -1.0], seed);
        let w = WeightMatrix::new(WeightSpec::default_for(5).unwrap());
        let base = compute_tn(&s, &w).unwrap();
        let scaled = compute_tn(&s.with_betas(vec![2.0 * c, -2.0 * c, -c]).unwrap(), &w).unwrap();
        prop_assert!((scaled - c * c * base).abs() <= 1e-12 * (c * c * base).abs().max(1e-300) + 1e-14);
    }

    #[test]
    fn theoretical_mean_nonnegative(spec in weights(), seed in any::<u64>()) {
        let p = spec.dim();
        let w = WeightMatrix::new(spec);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = DMatrix::identity(p, p);
        let mus: Vec<DVector<f64>> = (0..3)
            .map(|_| gaussian_columns(&mut rng, &DVector::zeros(p), &l, 1).column(0).into())
            .collect();
        let pop = PopulationSpec::new(mus, vec![DMatrix::identity(p, p); 3]).unwrap();
        let m = theoretical_mean(&pop, &[1.0, -0.5, 2.0], &w).unwrap();
        prop_assert!(m >= 0.0);
        let comb = pop.combined_mean(&[1.0, -0.5, 2.0]).unwrap();
        prop_assert!(comb.norm() < 1e-12 || m > 0.0);
    }
}

#[test]
fn theoretical_mean_vanishes_on_null_combination() {
    let p = 7;
    let w = WeightMatrix::new(WeightSpec::default_for(p).unwrap());
    let mu = DVector::from_fn(p, |i, _| (i as f64).sin());
    // 2 mu - 2 (mu/2) - mu = 0
    let pop = PopulationSpec::new(
        vec![mu.clone(), mu.clone() * 0.5, mu.clone()],
        vec![DMatrix::identity(p, p); 3],
    )
    .unwrap();
    assert_relative_eq!(theoretical_mean(&pop, &[2.0, -2.0, -1.0], &w).unwrap(), 0.0, epsilon = 1e-12);
}

#[test]
fn identity_spec_reproduces_unweighted_method() {
    let s = sample_set(9, &[5, 8, 11], vec![2.0, -2.0, -1.0], 3);
    let tu = WeightMatrix::new(Unweighted.weight_spec(9).unwrap());
    let id = WeightMatrix::new(WeightSpec::identity(9).unwrap());
    assert_eq!(compute_tn(&s, &tu).unwrap(), compute_tn(&s, &id).unwrap());

    // U-statistic of the unweighted form, written out directly
    let g = s.groups();
    let mut naive = 0.0;
    for (i1, a) in g.iter().enumerate() {
        for (i2, b) in g.iter().enumerate() {
            let (n1, n2) = (a.ncols(), b.ncols());
            let c = s.betas()[i1] * s.betas()[i2];
            let mut acc = 0.0;
            for j1 in 0..n1 {
                for j2 in 0..n2 {
                    if i1 == i2 && j1 == j2 {
                        continue;
                    }
                    acc += a.column(j1).dot(&b.column(j2));
                }
            }
            naive += if i1 == i2 {
                c * acc / (n1 * (n1 - 1)) as f64
            } else {
                c * acc / (n1 * n2) as f64
            };
        }
    }
    assert_relative_eq!(compute_tn(&s, &id).unwrap(), naive, max_relative = 1e-10);
    let tl = WeightMatrix::new(WeightedL2.weight_spec(9).unwrap());
    assert_ne!(compute_tn(&s, &tl).unwrap(), naive);
}

#[test]
fn monte_carlo_variance_matches_decomposition() {
    let (p, n, reps) = (5, 20, 100_000);
    let betas = [1.0, -1.0];
    let sig1 = ar1(p, 0.5, 1.0);
    let sig2 = ar1(p, -0.3, 1.5);
    let mu1 = DVector::from_vec(vec![0.4, 0.0, -0.2, 0.1, 0.3]);
    let mu2 = DVector::from_vec(vec![0.1, 0.2, 0.0, 0.0, -0.1]);
    let w = WeightMatrix::new(WeightSpec::default_for(p).unwrap());
    let pop = PopulationSpec::new(vec![mu1.clone(), mu2.clone()], vec![sig1.clone(), sig2.clone()]).unwrap();
    let parts = theoretical_variance(&pop, &betas, &[n, n], &w).unwrap();
    assert!(parts.sigma_q2_sq > 0.1 * parts.sigma_q1_sq, "signal part too small to matter");

    let (l1, l2) = (cholesky(&sig1), cholesky(&sig2));
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let tn: Vec<f64> = (0..reps)
        .map(|_| {
            let g = vec![
                gaussian_columns(&mut rng, &mu1, &l1, n),
                gaussian_columns(&mut rng, &mu2, &l2, n),
            ];
            compute_tn(&SampleSet::from_columns(g, betas.to_vec()).unwrap(), &w).unwrap()
        })
        .collect();
    let (mean, var) = mean_var(&tn);
    let target = theoretical_mean(&pop, &betas, &w).unwrap();
    assert!((mean - target).abs() < 4.0 * (var / reps as f64).sqrt(), "mean {mean} vs {target}");
    let ratio = var / parts.total();
    assert!((0.95..=1.05).contains(&ratio), "variance ratio {ratio}");
}
