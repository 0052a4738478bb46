//! Frozen reference values. Enumeration values were produced by the
//! exhaustive oracle; published values are compared in log10.

use gibbs_transfer::dichotomous::{build_ladder, IsingChainParams};
use gibbs_transfer::method::{compute_constant, ConstantMethod, Limits};
use gibbs_transfer::model_file::{bundled, parse_model, ModelDocument};
use gibbs_transfer::scaled::constant_via_analytic;
use gibbs_transfer::spatial::{spatial_constant, SpatialIsingModel};
use gibbs_transfer::transfer::{normalizing_constant, subset_marginal};

fn doc(name: &str, length: usize) -> ModelDocument {
    bundled(name).unwrap().with_length(length).unwrap()
}

fn ln_constant(d: &ModelDocument) -> f64 {
    compute_constant(d, ConstantMethod::Auto, Limits::default()).unwrap().value.ln()
}

#[test]
fn binary_chain_enumeration_values() {
    for (t, ln) in [
        (2, 2.27795223803275e0),
        (3, 3.30466208291560e0),
        (10, 1.04175349440179e1),
        (20, 2.05811937383445e1),
    ] {
        let got = ln_constant(&doc("example1", t));
        assert!((got - ln).abs() < 1e-12 * ln.abs().max(1.0), "T={t}: {got}");
    }
}

#[test]
fn binary_chain_two_sites_by_hand() {
    // 1 + e + e + e^{2 − 0.8}
    let e = 1f64.exp();
    let expected = (1.0 + 2.0 * e + 1.2f64.exp()).ln();
    assert!((ln_constant(&doc("example1", 2)) - expected).abs() < 1e-14);
}

#[test]
fn binary_chain_published_values() {
    for (t, log10, tol) in [
        (10, 4.52427, 1e-3),
        (20, 8.93830, 1e-3),
        (25, 11.14532, 1e-3),
        (500, 220.8113, 1e-3),
        (1000, 441.5124, 1e-3),
        (10_000, 4414.13118, 1e-3),
        (1_000_000, 441402.21, 1e-2),
    ] {
        let c = normalizing_constant(&doc("example1", t).to_chain().unwrap()).unwrap();
        assert!((c.log10() - log10).abs() < tol, "T={t}: {}", c.log10());
    }
}

#[test]
fn binary_chain_display() {
    let c = normalizing_constant(&doc("example1", 10).to_chain().unwrap()).unwrap();
    assert_eq!(c.scientific(), "3.3441E+04");
    let c = normalizing_constant(&doc("example1", 500).to_chain().unwrap()).unwrap();
    assert_eq!(c.scientific(), "6.4759E+220");
}

#[test]
fn closed_form_matches_published_value() {
    let c = constant_via_analytic(1.0, -0.8, 10).unwrap();
    assert!((c.to_f64() - 3.3441e4).abs() < 1.0);
}

#[test]
fn bivariate_chain_enumeration_values() {
    for (t, ln) in [(2, 3.20435945071289e0), (5, 8.04509483060141e0), (10, 1.61129893715635e1)] {
        let got = ln_constant(&doc("example2", t));
        assert!((got - ln).abs() < 1e-12 * ln.abs(), "T={t}: {got}");
    }
}

#[test]
fn bivariate_chain_published_values() {
    for (t, log10) in [(500, 350.3743), (1000, 700.7585), (10_000, 7007.67)] {
        let got = ln_constant(&doc("example2", t)) / std::f64::consts::LN_10;
        assert!((got - log10).abs() < 1e-2, "T={t}: {got}");
    }
}

#[test]
fn bivariate_marginal_entries() {
    let chain = doc("example2", 7).to_chain().unwrap();
    let table = subset_marginal(&chain, &[1, 4, 7]).unwrap();
    assert_eq!(table.len(), 64);
    assert!((table.get(&[0, 0, 0]).unwrap() - 7.72314398767941e-3).abs() < 1e-15);
    assert!((table.get(&[0, 0, 1]).unwrap() - 3.50474782573729e-3).abs() < 1e-15);
}

#[test]
fn range_two_enumeration_value() {
    let d = parse_model(
        r#"{"kind": "r_range", "n_states": 2, "length": 7, "range": 2, "homogeneous": true,
            "factor": [0.0, 0.3, -0.1, 0.2, 0.5, 0.0, 0.1, -0.4]}"#,
    )
    .unwrap();
    assert!((ln_constant(&d) - 5.39676881803757e0).abs() < 1e-13);
}

#[test]
fn lattice_enumeration_value() {
    let sm = SpatialIsingModel::new(3, 4, 0.5, -0.3, 0.2).unwrap();
    assert!((spatial_constant(&sm).unwrap().ln() - 1.00618672770893e1).abs() < 1e-13);
}

#[test]
fn ladder_values() {
    let ladder = build_ladder(IsingChainParams::new(1.0, -0.8).unwrap(), 3).unwrap();
    let expected = [
        (3, 1.288905317141869e-1, 3.03731962290436e-1),
        (2, 1.985207260525074e-1, 8.58706633421364e-2),
        (1, 2.31859333832951e-1, 7.0599908348908e-3),
    ];
    for (j, a, b) in expected {
        let l = ladder.level(j).unwrap();
        assert!((l.alpha - a).abs() < 1e-14 && (l.beta - b).abs() < 1e-14, "level {j}");
    }
}
