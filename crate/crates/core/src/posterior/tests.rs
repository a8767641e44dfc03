use super::*;
use crate::fixtures::random_tree;
use crate::geodesic::geodesic;
use crate::kernels::ggf_sample;
use crate::rng::Rng as ChainRng;
use crate::stats::{batch_means_se, mean};
use crate::treespace::{parse_newick, Split, TaxonSet};
use rand::SeedableRng;

fn t(n: usize) -> TaxonSet {
    TaxonSet::numbered(n).unwrap()
}

fn nw(s: &str, taxa: &TaxonSet) -> Tree {
    parse_newick(s, taxa).unwrap()
}

fn quick(m: usize, iters: usize) -> InferenceConfig {
    InferenceConfig {
        m,
        iters,
        burnin: 0,
        thin: 1,
        ..InferenceConfig::default()
    }
}

#[test]
fn prior_rates() {
    let p = Prior::new(10);
    assert!((p.d2 - 2.5).abs() < 1e-15);
    assert!((p.gamma_rate - 1.327).abs() < 1e-12);
    assert!((p.exp_rate - 12.908).abs() < 1e-12);
}

#[test]
fn prior_d2_quantile() {
    // P(s <= D²) for s ~ Ga(1/2, β) is 2 sqrt(β/π) ∫_0^D exp(-β u²) du
    for n in [4usize, 5, 8, 10, 20] {
        let p = Prior::new(n);
        let d = p.d2.sqrt();
        let k = 20_000;
        let h = d / k as f64;
        let f = |u: f64| (-p.gamma_rate * u * u).exp();
        let mut acc = f(0.0) + f(d);
        for i in 1..k {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        let prob = 2.0 * (p.gamma_rate / std::f64::consts::PI).sqrt() * acc * h / 3.0;
        assert!((prob - 0.99).abs() < 1e-6, "n = {n}: {prob}");
    }
}

#[test]
fn prior_density_shape() {
    let taxa = t(6);
    let p = Prior::new(6);
    let x = nw("((1,2):0.3,3,((4,5):0.4,6):0.2);", &taxa);
    let lp = log_prior(&x, 0.1, &p).unwrap();
    assert!(lp.is_finite());
    assert!(log_prior(&x, 0.0, &p).is_err());
    assert!(log_prior(&x, -1.0, &p).is_err());
    assert!((p.log_t0(1e-300) - p.exp_rate.ln()).abs() < 1e-12);
    // radial profile: s^{-(k-1)/2} exp(-β s)
    let y = nw("((1,2):0.6,3,((4,5):0.8,6):0.4);", &taxa);
    let (s1, s2) = (x.norm_sq(), y.norm_sq());
    let want = -(3.0 - 1.0) / 2.0 * (s2 / s1).ln() - p.gamma_rate * (s2 - s1);
    assert!((p.log_x0(&y) - p.log_x0(&x) - want).abs() < 1e-12);
}

#[test]
fn config_validation() {
    assert!(InferenceConfig::default().validate().is_ok());
    for bad in [
        InferenceConfig { m: 1, ..Default::default() },
        InferenceConfig { thin: 0, ..Default::default() },
        InferenceConfig { alpha_b: 0.0, ..Default::default() },
        InferenceConfig { alpha_0: 1.0, ..Default::default() },
        InferenceConfig { lambda0: 0.0, ..Default::default() },
        InferenceConfig { sigma0: -1.0, ..Default::default() },
        InferenceConfig { burnin: 20_000, ..Default::default() },
    ] {
        assert!(bad.validate().is_err(), "{bad:?}");
    }
}

#[test]
fn initialize_single_datum() {
    let taxa = t(5);
    let x = nw("((1,2):1,3,(4,5):2);", &taxa);
    let prior = Prior::new(5);
    let s = initialize(std::slice::from_ref(&x), &prior, &quick(5, 0)).unwrap();
    assert_eq!(s.x0().edges(), x.edges());
    assert_eq!(s.t0(), T0_INIT_FLOOR);
    assert!(s.check(&prior, 1e-10));
}

#[test]
fn initialize_picks_datum_near_weighted_mean() {
    let taxa = t(5);
    let x = nw("((1,2):1,3,(4,5):2);", &taxa);
    let y = nw("((1,3):1.5,2,(4,5):0.5);", &taxa);
    let prior = Prior::new(5);
    let data = vec![x.clone(), x.clone(), y.clone()];
    let s = initialize(&data, &prior, &quick(5, 0)).unwrap();
    // the mean sits a third of the way from x to y, nearer x
    let z = geodesic(&x, &y).unwrap().point(1.0 / 3.0);
    let want = if crate::geodesic::distance(&x, &z).unwrap() < crate::geodesic::distance(&y, &z).unwrap() { &x } else { &y };
    assert_eq!(s.x0().edges(), want.edges());
}

#[test]
fn initialize_euclidean_variance() {
    let taxa = t(6);
    let data: Vec<Tree> = [(1.0, 2.0, 1.5), (1.2, 2.4, 1.1), (0.9, 1.7, 1.9), (1.4, 2.2, 1.4)]
        .iter()
        .map(|(a, b, c)| nw(&format!("(((1,2):{a},3):{b},(4,5):{c},6);"), &taxa))
        .collect();
    let coords: Vec<[f64; 3]> = data
        .iter()
        .map(|x| {
            let e = x.edges();
            [e[0].1, e[1].1, e[2].1]
        })
        .collect();
    let n = coords.len() as f64;
    let c: Vec<f64> = (0..3).map(|k| coords.iter().map(|v| v[k]).sum::<f64>() / n).collect();
    let var: f64 = coords
        .iter()
        .map(|v| (0..3).map(|k| (v[k] - c[k]).powi(2)).sum::<f64>())
        .sum::<f64>()
        / n;
    let config = InferenceConfig { frechet_iters: 4000, ..quick(5, 0) };
    let s = initialize(&data, &Prior::new(6), &config).unwrap();
    assert!((s.t0() - var).abs() < 1e-4 * var, "{} vs {var}", s.t0());
}

#[test]
fn initialize_errors() {
    let taxa = t(5);
    let prior = Prior::new(5);
    assert_eq!(initialize(&[], &prior, &quick(5, 0)).unwrap_err(), PosteriorError::EmptyData);
    let x = nw("((1,2):1,3,(4,5):2);", &taxa);
    let u = nw("((1,2):1,3,4,5);", &taxa);
    assert_eq!(
        initialize(&[x.clone(), u], &prior, &quick(5, 0)).unwrap_err(),
        PosteriorError::UnresolvedDatum { index: 1 }
    );
    let other = nw("((a,b):1,c,(d,e):2);", &TaxonSet::new(&["a", "b", "c", "d", "e"]).unwrap());
    assert_eq!(
        initialize(&[x, other], &prior, &quick(5, 0)).unwrap_err(),
        PosteriorError::TaxaMismatch { index: 1 }
    );
}

#[test]
fn zero_iteration_run() {
    let taxa = t(5);
    let x = nw("((1,2):1,3,(4,5):2);", &taxa);
    let y = nw("((1,2):1.2,3,(4,5):1.7);", &taxa);
    let prior = Prior::new(5);
    let tr = run_inference(&[x, y], &prior, &quick(5, 0)).unwrap();
    assert!(tr.rows.is_empty());
    assert_eq!(tr.n_samples(), 0);
    assert!(tr.init_log_joint.is_finite());
    assert!(tr.t0_interval(0.95).is_none());
    assert_eq!(tr.acceptance.x0.proposed, 0);
}

#[test]
fn state_invariants_hold_through_sweeps() {
    let taxa = t(6);
    let mut r = ChainRng::seed_from_u64(8);
    let x0 = random_tree(&taxa, &mut r, 0.0);
    let data: Vec<Tree> = (0..4).map(|_| ggf_sample(&x0, 0.2, &mut r)).collect();
    let prior = Prior::new(6);
    let config = InferenceConfig { lambda0: 0.05, alpha_0: 0.5, ..quick(6, 0) };
    let state = initialize(&data, &prior, &config).unwrap();
    let mut s = Sampler::new(state, prior, config);
    for _ in 0..150 {
        s.sweep();
        assert!(s.state().check(&prior, 1e-8));
        for (p, x) in s.state().bridges().zip(&data) {
            assert_eq!(p.target().edges(), x.edges());
        }
    }
    let a = s.acceptance();
    assert!(a.x0.accepted > 0 && a.t0.accepted > 0 && a.bridge.accepted > 0);
    assert_eq!(a.bridge.proposed, 150 * 4);
}

#[test]
fn identity_moves_always_accept() {
    let taxa = t(5);
    let x = nw("((1,2):1,3,(4,5):2);", &taxa);
    let y = nw("((1,2):1.3,3,(4,5):1.6);", &taxa);
    let prior = Prior::new(5);
    let config = InferenceConfig {
        lambda0: 1e-9,
        alpha_0: 1.0 - 1e-9,
        sigma0: 1e-9,
        ..quick(5, 0)
    };
    let state = initialize(&[x, y], &prior, &config).unwrap();
    let mut s = Sampler::new(state, prior, config);
    for _ in 0..200 {
        assert!(s.step_x0());
        assert!(s.step_t0());
    }
}

#[test]
fn deterministic_given_seed() {
    let taxa = t(5);
    let mut r = ChainRng::seed_from_u64(2);
    let x0 = random_tree(&taxa, &mut r, 0.0);
    let data: Vec<Tree> = (0..3).map(|_| ggf_sample(&x0, 0.1, &mut r)).collect();
    let prior = Prior::new(5);
    let config = InferenceConfig { iters: 60, thin: 3, burnin: 6, ..quick(5, 60) };
    let a = run_inference(&data, &prior, &config).unwrap();
    let b = run_inference(&data, &prior, &config).unwrap();
    assert_eq!(a.rows.len(), (60 - 6) / 3);
    for (u, v) in a.rows.iter().zip(&b.rows) {
        assert_eq!(u.t0.to_bits(), v.t0.to_bits());
        assert_eq!(u.log_joint.to_bits(), v.log_joint.to_bits());
        assert_eq!(u.x0.edges(), v.x0.edges());
    }
    assert!(a.rows.windows(2).all(|w| w[0].iter < w[1].iter));
}

#[test]
fn suggest_m_counts_topologies() {
    let taxa = t(6);
    let x = nw("(((1,2):0.2,3):0.3,(4,5):0.25,6);", &taxa);
    let out = suggest_m(&x, 0.3, &[5, 20], 300, 4);
    assert_eq!(out.len(), 2);
    assert!(out.iter().all(|&(_, c)| (1..=105).contains(&c)));
}

/// Posterior mean of `t0` and posterior probability that `x0` shares the
/// datum's axis, for one datum at `xb` on axis 0 and three walk steps. The step
/// kernel on four taxa is `φ(b − a)` on the same axis and `φ(a + b)/2` on each other axis.
fn four_taxon_posterior(xb: f64, prior: &Prior) -> (f64, f64) {
    let (g, zmax) = (900usize, 3.6);
    let h = zmax / g as f64;
    let simpson = |i: usize, n: usize| if i == 0 || i == n { 1.0 / 3.0 } else if i % 2 == 1 { 4.0 / 3.0 } else { 2.0 / 3.0 };
    let z: Vec<f64> = (0..=g).map(|i| (i as f64 * h).max(1e-12)).collect();
    let wz: Vec<f64> = (0..=g).map(|i| simpson(i, g) * h).collect();
    let (nt, tmax) = (240usize, 2.4);
    let ht = tmax / nt as f64;
    let (mut norm, mut t_acc, mut same_acc) = (0.0, 0.0, 0.0);
    let mut same = vec![vec![0.0; g + 1]; g + 1];
    let mut other = vec![vec![0.0; g + 1]; g + 1];
    for it in 0..=nt {
        let t0 = (it as f64 * ht).max(1e-9);
        let wt = simpson(it, nt) * ht;
        let tau = t0 / 3.0;
        let phi = |d: f64| (-d * d / (2.0 * tau)).exp() / (2.0 * std::f64::consts::PI * tau).sqrt();
        let prior_t = prior.exp_rate * (-prior.exp_rate * t0).exp();
        // [datum's axis, one given other axis]
        let post = if t0 < 0.005 {
            // Euclidean limit: ∫ π(x0) f(x | x0, t0) dx0 → π(x)
            [(-prior.gamma_rate * xb * xb).exp(), 0.0]
        } else {
            for i in 0..=g {
                for j in 0..=g {
                    same[i][j] = phi(z[j] - z[i]);
                    other[i][j] = 0.5 * phi(z[j] + z[i]);
                }
            }
            let to_x_same: Vec<f64> = z.iter().map(|&y| phi(xb - y)).collect();
            let to_x_other: Vec<f64> = z.iter().map(|&y| 0.5 * phi(xb + y)).collect();
            // u[c][i]: density of reaching x in two steps from z_i on the datum's
            // axis (c = 0) or on another axis (c = 1)
            let mut u = [vec![0.0; g + 1], vec![0.0; g + 1]];
            for i in 0..=g {
                let (mut a0, mut a1) = (0.0, 0.0);
                for j in 0..=g {
                    a0 += wz[j] * (same[i][j] * to_x_same[j] + 2.0 * other[i][j] * to_x_other[j]);
                    a1 += wz[j] * (other[i][j] * to_x_same[j] + (same[i][j] + other[i][j]) * to_x_other[j]);
                }
                u[0][i] = a0;
                u[1][i] = a1;
            }
            let mut mass = [0.0, 0.0];
            for i in 0..=g {
                let (mut f0, mut f1) = (0.0, 0.0);
                for j in 0..=g {
                    f0 += wz[j] * (same[i][j] * u[0][j] + 2.0 * other[i][j] * u[1][j]);
                    f1 += wz[j] * (other[i][j] * u[0][j] + (same[i][j] + other[i][j]) * u[1][j]);
                }
                let pr = wz[i] * (-prior.gamma_rate * z[i] * z[i]).exp();
                mass[0] += pr * f0;
                mass[1] += pr * f1;
            }
            mass
        };
        let tot = (post[0] + 2.0 * post[1]) * prior_t * wt;
        norm += tot;
        t_acc += t0 * tot;
        same_acc += post[0] * prior_t * wt;
    }
    (t_acc / norm, same_acc / norm)
}

#[test]
fn single_datum_posterior_matches_quadrature() {
    let taxa = t(4);
    let xb = 0.8;
    let x = nw(&format!("((1,2):{xb},3,4);"), &taxa);
    let prior = Prior::new(4);
    let (t_mean, p_same) = four_taxon_posterior(xb, &prior);

    let config = InferenceConfig {
        m: 3,
        iters: 120_000,
        burnin: 2_000,
        thin: 1,
        lambda0: 0.25,
        alpha_0: 0.5,
        sigma0: 0.6,
        seed: 5,
        ..InferenceConfig::default()
    };
    let axis = Split::from_labels(&taxa, &["1", "2"]).unwrap();
    let mut same = Vec::new();
    let tr = run_inference_with(std::slice::from_ref(&x), &prior, &config, |r| {
        same.push(if r.x0.contains(&axis) { 1.0 } else { 0.0 })
    })
    .unwrap();
    let ts = &tr.t0_samples;
    let se = batch_means_se(ts, 50);
    assert!((mean(ts) - t_mean).abs() < 3.0 * se, "t0 mean {} vs {t_mean} (se {se})", mean(ts));
    let se_axis = batch_means_se(&same, 50);
    assert!((mean(&same) - p_same).abs() < 3.0 * se_axis, "axis {} vs {p_same} (se {se_axis})", mean(&same));
}
