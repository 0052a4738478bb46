use super::*;
use crate::model::{EnergyModel, LogTable, PerSite, RRangeModel, SingletonPairModel};
use crate::oracle::{brute_constant, brute_marginal_table, EnumerationBudget};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_chain(rng: &mut ChaCha8Rng, n: usize, t: usize) -> ChainModel {
    let tables = (0..t - 1)
        .map(|_| LogTable::from_fn(n, |_, _| rng.random_range(-2.0..2.0)).unwrap())
        .collect();
    ChainModel::explicit(tables).unwrap()
}

fn example_one(t: usize) -> ChainModel {
    let psi = LogTable::new(2, vec![0.0, 0.0, 0.0, -0.8]).unwrap();
    SingletonPairModel::homogeneous(t, vec![0.0, 1.0], psi)
        .unwrap()
        .to_chain_form()
}

fn close_in_log(a: LogValue, b: LogValue, tol: f64) -> bool {
    (a.ln() - b.ln()).abs() <= tol * b.ln().abs().max(1.0)
}

#[test]
fn uniform_constant_is_power_of_two() {
    let m = ChainModel::homogeneous(10, LogTable::zeros(2)).unwrap();
    let c = normalizing_constant(&m).unwrap();
    assert!((c.to_f64() - 1024.0).abs() < 1e-9);
}

#[test]
fn example_one_small_lengths() {
    for (t, log10) in [(10, 4.52428), (25, 11.14531)] {
        let c = normalizing_constant(&example_one(t)).unwrap();
        assert!((c.log10() - log10).abs() < 1e-3, "T={t}: {}", c.log10());
    }
}

#[test]
fn sweeps_and_power_agree() {
    let m = example_one(300);
    let chain = TransferChain::from_model(&m);
    let a = chain.constant_sweep().unwrap();
    let b = chain.constant_sweep_reversed().unwrap();
    let c = chain.constant_power().unwrap();
    assert!(close_in_log(a, c, 1e-12));
    assert!(close_in_log(b, c, 1e-12));
}

#[test]
fn power_needs_uniform_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let chain = TransferChain::from_model(&random_chain(&mut rng, 3, 5));
    assert!(matches!(chain.constant_power(), Err(Error::Inapplicable { .. })));
    assert_eq!(chain.preferred_evaluation(), Evaluation::Sweep);
}

#[test]
fn constant_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m = random_chain(&mut rng, 3, 8);
    let c = normalizing_constant(&m).unwrap();
    let o = brute_constant(&m, EnumerationBudget::default()).unwrap();
    assert!(close_in_log(c, o, 1e-10));
}

#[test]
fn single_step_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = random_chain(&mut rng, 3, 2);
    let h1 = ScaledNonNegMatrix::from_log_table(3, 3, m.table(1).values()).unwrap();
    let b = backward_vectors(&m).unwrap();
    let f = forward_vectors(&m).unwrap();
    let ones_c = ScaledVector::ones(3, Orientation::Column);
    let ones_r = ScaledVector::ones(3, Orientation::Row);
    let b1 = h1.mul_vector(&ones_c).unwrap();
    let f2 = ones_r.mul_matrix(&h1).unwrap();
    for i in 0..3 {
        assert!((b[0].ln_at(i) - b1.ln_at(i)).abs() < 1e-14);
        assert!((f[1].ln_at(i) - f2.ln_at(i)).abs() < 1e-14);
    }
}

#[test]
fn backward_and_forward_give_the_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let n = rng.random_range(2..5);
        let t = rng.random_range(2..20);
        let m = random_chain(&mut rng, n, t);
        let c = normalizing_constant(&m).unwrap();
        let b = backward_vectors(&m).unwrap();
        let f = forward_vectors(&m).unwrap();
        let via_b = ScaledVector::ones(n, Orientation::Row).dot(&b[0]).unwrap();
        let via_f = f[t - 1].dot(&ScaledVector::ones(n, Orientation::Column)).unwrap();
        assert!(close_in_log(via_b, c, 1e-10));
        assert!(close_in_log(via_f, c, 1e-10));
    }
}

#[test]
fn uniform_backward_vectors_are_flat() {
    let m = ChainModel::homogeneous(7, LogTable::zeros(3)).unwrap();
    for b in backward_vectors(&m).unwrap() {
        assert!(b.mantissa().iter().all(|&x| x == 1.0));
    }
}

#[test]
fn prefix_marginal_uniform_and_full() {
    let m = ChainModel::homogeneous(6, LogTable::zeros(4)).unwrap();
    for z in 0..4 {
        assert!((prefix_marginal(&m, 1, &[z]).unwrap() - 0.25).abs() < 1e-14);
    }
    let e = example_one(4);
    let c = normalizing_constant(&e).unwrap();
    let z = [1, 0, 1, 1];
    let full = prefix_marginal(&e, 4, &z).unwrap();
    let direct = e.unnormalized_density(&z).unwrap().div(c).to_f64();
    assert!((full - direct).abs() < 1e-14);
}

#[test]
fn prefix_marginal_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = random_chain(&mut rng, 2, 6);
    let table = brute_marginal_table(&m, &[1, 2, 3], EnumerationBudget::default()).unwrap();
    let mut total = 0.0;
    for (z, p) in table.iter() {
        let got = prefix_marginal(&m, 3, &z).unwrap();
        assert!((got - p).abs() < 1e-12);
        total += got;
    }
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn prefix_site_checked() {
    let m = example_one(4);
    assert!(matches!(
        prefix_marginal(&m, 5, &[0; 5]),
        Err(Error::SiteOutOfRange { .. })
    ));
    assert!(prefix_marginal(&m, 0, &[]).is_err());
}

#[test]
fn subset_marginal_uniform_ends() {
    let m = ChainModel::homogeneous(9, LogTable::zeros(3)).unwrap();
    let t = subset_marginal(&m, &[1, 9]).unwrap();
    assert!(t.probs().iter().all(|p| (p - 1.0 / 9.0).abs() < 1e-14));
}

#[test]
fn subset_marginal_example_one() {
    let m = example_one(6);
    let t = subset_marginal(&m, &[2, 5]).unwrap();
    let o = brute_marginal_table(&m, &[2, 5], EnumerationBudget::default()).unwrap();
    assert_eq!(t.len(), 4);
    for (a, b) in t.probs().iter().zip(o.probs()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn subset_marginal_all_endpoint_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let m = random_chain(&mut rng, 3, 6);
    for sites in [vec![1, 6], vec![1, 3], vec![2, 6], vec![2, 4], vec![3], vec![1, 2, 6]] {
        let t = subset_marginal(&m, &sites).unwrap();
        let o = brute_marginal_table(&m, &sites, EnumerationBudget::default()).unwrap();
        for (a, b) in t.probs().iter().zip(o.probs()) {
            assert!((a - b).abs() < 1e-12, "{sites:?}");
        }
        assert!((t.total() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn subset_marginal_errors() {
    let m = example_one(6);
    assert_eq!(subset_marginal(&m, &[]), Err(Error::InvalidSubset));
    assert_eq!(subset_marginal(&m, &[3, 2]), Err(Error::InvalidSubset));
    assert!(matches!(
        subset_marginal(&m, &[2, 7]),
        Err(Error::SiteOutOfRange { .. })
    ));
    let chain = TransferChain::from_model(&m);
    assert!(chain
        .subset_marginal(&[1, 2, 3, 4, 5], 16)
        .unwrap_err()
        .is_capacity());
}

#[test]
fn uniform_chain_with_last_step() {
    // long homogeneous chain whose marginals exercise the body run plus the
    // distinct last step
    let m = example_one(40);
    let chain = TransferChain::from_model(&m);
    let t = chain.subset_marginal(&[3, 39, 40], DEFAULT_TABLE_CAP).unwrap();
    let explicit = ChainModel::explicit((1..40).map(|s| m.table(s).clone()).collect()).unwrap();
    let u = subset_marginal(&explicit, &[3, 39, 40]).unwrap();
    for (a, b) in t.probs().iter().zip(u.probs()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn lift_with_unit_range_is_the_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = random_chain(&mut rng, 3, 7);
    let factors = (1..7).map(|s| m.table(s).values().to_vec()).collect();
    let r = RRangeModel::new(3, 7, 1, PerSite::Varying(factors)).unwrap();
    let lifted = lift_r_range(&r, DEFAULT_TABLE_CAP).unwrap();
    assert_eq!(lifted.chain().n_states(), 3);
    assert_eq!(lifted.chain().length(), 7);
    let a = lifted.normalizing_constant().unwrap();
    let b = normalizing_constant(&m).unwrap();
    assert!(close_in_log(a, b, 1e-12));
}

#[test]
fn lift_range_two_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let factors = (0..4)
        .map(|_| (0..8).map(|_| rng.random_range(-1.5..1.5)).collect())
        .collect();
    let r = RRangeModel::new(2, 6, 2, PerSite::Varying(factors)).unwrap();
    let lifted = lift_r_range(&r, DEFAULT_TABLE_CAP).unwrap();
    let a = lifted.normalizing_constant().unwrap();
    let b = brute_constant(&r, EnumerationBudget::default()).unwrap();
    assert!(close_in_log(a, b, 1e-12));
    for sites in [vec![1], vec![2, 5], vec![5, 6], vec![1, 3, 6]] {
        let t = lifted.subset_marginal(&sites, DEFAULT_TABLE_CAP).unwrap();
        let o = brute_marginal_table(&r, &sites, EnumerationBudget::default()).unwrap();
        for (x, y) in t.probs().iter().zip(o.probs()) {
            assert!((x - y).abs() < 1e-12, "{sites:?}");
        }
    }
}

#[test]
fn lift_uniform_factors() {
    let r = RRangeModel::new(2, 5, 2, PerSite::Shared(vec![0.0; 8])).unwrap();
    let lifted = lift_r_range(&r, DEFAULT_TABLE_CAP).unwrap();
    assert!((lifted.normalizing_constant().unwrap().to_f64() - 32.0).abs() < 1e-10);
}

#[test]
fn lift_cap() {
    let r = RRangeModel::new(4, 8, 3, PerSite::Shared(vec![0.0; 256])).unwrap();
    assert!(lift_r_range(&r, 1000).unwrap_err().is_capacity());
}
