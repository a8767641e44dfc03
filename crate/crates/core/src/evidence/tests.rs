use super::*;
use crate::rng::Rng as ChainRng;
use crate::treespace::{parse_newick, TaxonSet};
use rand::SeedableRng;

fn t(n: usize) -> TaxonSet {
    TaxonSet::numbered(n).unwrap()
}

fn nw(s: &str, taxa: &TaxonSet) -> Tree {
    parse_newick(s, taxa).unwrap()
}

fn rng(seed: u64) -> ChainRng {
    ChainRng::seed_from_u64(seed)
}

fn small() -> EvidenceConfig {
    EvidenceConfig {
        m1: 2000,
        m2: 2000,
        h: 20,
        k: 20,
        burnin: 200,
        thin: 5,
        ss_samples: 200,
        bootstrap: 50,
        tuning: ProposalTuning::default(),
    }
}

/// Walk density on `BHV_4` from `a` on one axis to `b` on the same or another axis in `m` steps of
/// variance `t0/m`, by Simpson quadrature over the intermediate points.
fn four_taxon_walk_density(a: f64, b: f64, same_axis: bool, t0: f64, m: usize) -> f64 {
    let (g, zmax) = (1200usize, 4.0);
    let h = zmax / g as f64;
    let w = |i: usize| if i == 0 || i == g { 1.0 / 3.0 } else if i % 2 == 1 { 4.0 / 3.0 } else { 2.0 / 3.0 };
    let z: Vec<f64> = (0..=g).map(|i| i as f64 * h).collect();
    let tau = t0 / m as f64;
    let phi = |d: f64| (-d * d / (2.0 * tau)).exp() / (2.0 * std::f64::consts::PI * tau).sqrt();
    // density on the source axis and on one given other axis
    let mut same: Vec<f64> = z.iter().map(|&y| phi(y - a)).collect();
    let mut other: Vec<f64> = z.iter().map(|&y| 0.5 * phi(y + a)).collect();
    for _ in 1..m - 1 {
        let mut ns = vec![0.0; g + 1];
        let mut no = vec![0.0; g + 1];
        for j in 0..=g {
            let (mut s, mut o) = (0.0, 0.0);
            for i in 0..=g {
                let wi = w(i) * h;
                let (k_same, k_other) = (phi(z[j] - z[i]), 0.5 * phi(z[j] + z[i]));
                s += wi * (same[i] * k_same + 2.0 * other[i] * k_other);
                o += wi * (same[i] * k_other + other[i] * (k_same + k_other));
            }
            ns[j] = s;
            no[j] = o;
        }
        same = ns;
        other = no;
    }
    (0..=g)
        .map(|i| {
            let (k_same, k_other) = (phi(b - z[i]), 0.5 * phi(b + z[i]));
            w(i) * h
                * if same_axis {
                    same[i] * k_same + 2.0 * other[i] * k_other
                } else {
                    same[i] * k_other + other[i] * (k_same + k_other)
                }
        })
        .sum()
}

#[test]
fn quadrature_oracle_matches_spider_limit() {
    // m = 2 reduces to one intermediate integral; a far-from-origin pair is Gaussian
    let d = four_taxon_walk_density(2.0, 2.1, true, 0.02, 2);
    let g = (-0.01f64 / 0.04).exp() / (2.0 * std::f64::consts::PI * 0.02).sqrt();
    assert!((d / g - 1.0).abs() < 1e-6, "{d} {g}");
}

#[test]
fn config_validation() {
    assert!(EvidenceConfig::default().validate().is_ok());
    let bad = [
        EvidenceConfig { m1: 0, ..small() },
        EvidenceConfig { m2: 0, ..small() },
        EvidenceConfig { h: 0, ..small() },
        EvidenceConfig { h: 3000, ..small() },
        EvidenceConfig { k: 0, ..small() },
        EvidenceConfig { thin: 0, ..small() },
    ];
    for c in bad {
        assert!(c.validate().is_err(), "{c:?}");
    }
}

#[test]
fn one_step_is_exact() {
    let taxa = t(6);
    let x0 = nw("((1,2):0.5,(3,4):0.3,(5,6):0.4);", &taxa);
    let x = nw("((1,2):0.6,(3,(4,(5,6):0.2):0.1):0.3);", &taxa);
    let exact = ggf_log_density(&x, &x0, 0.7);
    let c = small();
    let (a, b) = chib_and_tunnel(&x, &x0, 0.7, 1, &c, &mut rng(1)).unwrap();
    let s = stepping_stone_log_ml(&x, &x0, 0.7, 1, &c, &mut rng(1)).unwrap();
    for e in [a, b, s] {
        assert_eq!(e, Estimate::exact(exact));
    }
}

#[test]
fn mismatched_taxa_rejected() {
    let x0 = nw("((1,2):0.5,3,4);", &t(4));
    let x = nw("((1,2):0.5,3,(4,5):0.2);", &t(5));
    assert!(chib_log_ml(&x, &x0, 1.0, 1, &small(), &mut rng(0)).is_err());
    assert!(stepping_stone_log_ml(&x, &x0, 1.0, 3, &small(), &mut rng(0)).is_err());
}

#[test]
fn single_rung_is_importance_sampling() {
    let taxa = t(5);
    let x0 = nw("((1,2):0.4,(3,4):0.3,5);", &taxa);
    let x = nw("((1,3):0.5,(2,4):0.2,5);", &taxa);
    let c = EvidenceConfig { k: 1, bootstrap: 0, ..small() };
    let e = stepping_stone_log_ml(&x, &x0, 0.8, 4, &c, &mut rng(9)).unwrap();
    let mut r = rng(9);
    let w: Vec<f64> = (0..c.m2)
        .map(|_| match propose_independence(&x0, &x, 0.8, 4, &c.tuning, &mut r).unwrap() {
            Some((p, lq)) => p.log_target(0.8) - lq,
            None => f64::NEG_INFINITY,
        })
        .collect();
    assert!((e.log_ml - log_mean_exp(&w)).abs() < 1e-12);
}

#[test]
fn chib_and_tunnel_from_known_weights() {
    // constant weights: every method returns that constant
    let s = DatumSamples {
        posterior: vec![-1.5; 50],
        proposal: vec![-1.5; 50],
    };
    assert!((chib_from(&s, 5).unwrap() + 1.5).abs() < 1e-12);
    assert!((tunnel_from(&s, 50).unwrap() + 1.5).abs() < 1e-12);
    let none = DatumSamples {
        posterior: vec![0.0; 10],
        proposal: vec![f64::NEG_INFINITY; 10],
    };
    assert!(matches!(chib_from(&none, 2), Err(EvidenceError::ChibDenominator { valid: 0, total: 10 })));
}

#[test]
fn bayes_factor_and_star() {
    assert!((log_bayes_factor(3.0, 3.0 - std::f64::consts::LN_10) - 1.0).abs() < 1e-15);
    let taxa = t(5);
    let x = nw("((1,2):0.4,(3,4):0.3,5);", &taxa);
    let e = dataset_log_ml(&[x.clone(), x.clone()], &x, 0.5, 3, Method::StarExact, &small(), 0).unwrap();
    assert!((e.total - 2.0 * star_source_log_density(&x, 0.5)).abs() < 1e-12);
    assert_eq!(e.se, 0.0);
    assert_eq!("stepping-stone".parse::<Method>(), Ok(Method::SteppingStone));
    assert!("bogus".parse::<Method>().is_err());
}

#[test]
fn euclidean_limit() {
    // deep inside one orthant the walk density is the Gaussian of variance t0
    let taxa = t(5);
    let x0 = nw("((1,2):3.0,(3,4):3.2,5);", &taxa);
    let x = nw("((1,2):3.3,(3,4):2.9,5);", &taxa);
    let t0 = 0.2;
    let exact = -(0.09 + 0.09) / (2.0 * t0) - (2.0 * std::f64::consts::PI * t0).ln();
    let c = small();
    let (ch, tu) = chib_and_tunnel(&x, &x0, t0, 4, &c, &mut rng(3)).unwrap();
    let ss = stepping_stone_log_ml(&x, &x0, t0, 4, &c, &mut rng(4)).unwrap();
    for e in [ch, tu, ss] {
        assert!((e.log_ml - exact).abs() < 0.03, "{e:?} vs {exact}");
        assert!(e.se.is_finite() && e.se < 0.03, "{e:?}");
    }
}

#[test]
fn four_taxon_walk_density_recovered() {
    let taxa = t(4);
    let x0 = nw("((1,2):0.3,3,4);", &taxa);
    let x = nw("((1,2):0.5,3,4);", &taxa);
    let (t0, m) = (0.6, 3);
    let exact = four_taxon_walk_density(0.3, 0.5, true, t0, m).ln();
    let c = small();
    let (ch, tu) = chib_and_tunnel(&x, &x0, t0, m, &c, &mut rng(11)).unwrap();
    let ss = stepping_stone_log_ml(&x, &x0, t0, m, &c, &mut rng(12)).unwrap();
    for e in [ch, tu, ss] {
        let tol = (4.0 * e.se).max(0.01);
        assert!((e.log_ml - exact).abs() < tol, "{e:?} vs {exact}");
    }
    // crossing to another axis
    let y = nw("((1,3):0.4,2,4);", &taxa);
    let exact_y = four_taxon_walk_density(0.3, 0.4, false, t0, m).ln();
    let (ch, tu) = chib_and_tunnel(&y, &x0, t0, m, &c, &mut rng(13)).unwrap();
    for e in [ch, tu] {
        let tol = (4.0 * e.se).max(0.01);
        assert!((e.log_ml - exact_y).abs() < tol, "{e:?} vs {exact_y}");
    }
}

#[test]
fn dataset_sums_per_datum() {
    let taxa = t(5);
    let x0 = nw("((1,2):0.4,(3,4):0.3,5);", &taxa);
    let data = [nw("((1,2):0.5,(3,4):0.1,5);", &taxa), nw("((1,3):0.2,(2,4):0.3,5);", &taxa)];
    let c = EvidenceConfig { m1: 200, m2: 200, h: 5, bootstrap: 10, ..small() };
    let e = dataset_log_ml(&data, &x0, 0.5, 3, Method::Chib, &c, 5).unwrap();
    assert!((e.total - e.per_datum.iter().map(|d| d.log_ml).sum::<f64>()).abs() < 1e-12);
    let again = dataset_log_ml(&data, &x0, 0.5, 3, Method::Chib, &c, 5).unwrap();
    assert_eq!(e, again);
}
