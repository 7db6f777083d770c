mod common;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use common::*;
use tempest::graph::*;
use tempest::oracle::*;
use tempest::spectral::dense_spectral_abscissa;
use tempest::threshold::*;

fn check_pi_structure(sub: &SubgraphEnumeration) {
    let pi = sub.pi_matrix();
    let l = sub.labels();
    assert_eq!(pi.nrows(), 1 << sub.m());
    for a in 0..l {
        assert!(pi.row(a).sum().abs() < 1e-12, "row {a} does not sum to zero");
        for b in 0..l {
            let d = (a ^ b).count_ones();
            let v = pi[(a, b)];
            match d {
                0 => assert!(v <= 0.0),
                1 => assert!(v > 0.0, "adjacent labels {a} {b} have rate {v}"),
                _ => assert_eq!(v, 0.0),
            }
        }
    }
}

#[test]
fn pi_structure_for_small_edge_counts() {
    let mut r = stream(1, "pi");
    for m in [0, 1, 3, 5] {
        let g = random_markov_graph(&mut r, 5, m, GraphKind::Amei, TimeModel::Ct);
        let sub = enumerate_subgraphs(&g).unwrap();
        assert_eq!(sub.m(), m);
        check_pi_structure(&sub);
        for l in 0..sub.labels() {
            let f = sub.f_matrix(l);
            assert_eq!(f, f.transpose());
            let on = sub.chi(l).iter().filter(|&&c| c).count();
            assert_eq!(f.iter().filter(|&&v| v > 0.0).count(), 2 * on);
        }
    }
}

#[test]
fn single_edge_matches_hand_assembly() {
    let (q, s) = (0.7, 1.9);
    let mut g = DynamicGraphModel::new(3, GraphKind::Amei);
    g.insert(0, 1, build_edge_markovian(q, s, TimeModel::Ct).unwrap())
        .unwrap();
    g.insert(1, 2, EdgeProcessModel::static_on(TimeModel::Ct))
        .unwrap();
    let p = EpidemicParams::new(vec![0.8, 1.1, 0.6], vec![0.9, 0.5, 1.2]).unwrap();
    let n = 3;

    // labels: 0 = edge off, 1 = edge on
    let mut f = [DMatrix::<f64>::zeros(n, n), DMatrix::zeros(n, n)];
    for m in &mut f {
        m[(1, 2)] = 1.0;
        m[(2, 1)] = 1.0;
    }
    f[1][(0, 1)] = 1.0;
    f[1][(1, 0)] = 1.0;
    let mut big = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for (l, rate_out) in [(0, q), (1, s)] {
        let blk = p.ct_matrix(&f[l]);
        for i in 0..n {
            for j in 0..n {
                big[(l * n + i, l * n + j)] = blk[(i, j)];
            }
            big[(l * n + i, l * n + i)] -= rate_out;
            big[(l * n + i, (1 - l) * n + i)] = rate_out;
        }
    }
    let sub = enumerate_subgraphs(&g).unwrap();
    assert_eq!(dense_kronecker(&sub, &p), big);
    let want = dense_spectral_abscissa(&big);
    let got = exponential_abscissa(&sub, &p).unwrap();
    assert!((got - want).abs() < 1e-9, "{got} vs {want}");
}

#[test]
fn sparse_and_dense_assembly_agree() {
    let mut r = stream(2, "sparse-dense");
    for _ in 0..20 {
        let n = r.random_range(3..=6);
        let m = r.random_range(1..=4);
        let kind = if r.random_bool(0.5) { GraphKind::Amei } else { GraphKind::Amai };
        let g = random_markov_graph(&mut r, n, m, kind, TimeModel::Ct);
        let w: Vec<f64> = (0..n).map(|_| uniform(&mut r, 0.2, 2.0)).collect();
        let d: Vec<f64> = (0..n).map(|_| uniform(&mut r, 0.5, 1.5)).collect();
        let p = scaled_params(1.0, &w, &d);
        let sub = enumerate_subgraphs(&g).unwrap();
        let want = dense_spectral_abscissa(&dense_kronecker(&sub, &p));
        let got = exponential_abscissa(&sub, &p).unwrap();
        assert!((got - want).abs() < 1e-8 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn abscissa_increases_along_a_beta_sweep() {
    let mut r = stream(3, "sweep");
    let g = random_markov_graph(&mut r, 6, 6, GraphKind::Amei, TimeModel::Ct);
    let mut last = f64::NEG_INFINITY;
    for k in 0..12 {
        let beta = 0.05 * (k + 1) as f64;
        let p = EpidemicParams::homogeneous(6, beta, 1.0).unwrap();
        let v = exponential_condition(&g, &p).unwrap();
        assert_eq!(v.m, 6);
        assert_eq!(v.dim, 6 << 6);
        assert_eq!(v.stable, v.eta < 0.0);
        assert!(v.eta >= last - 1e-12, "beta {beta}: {} < {last}", v.eta);
        last = v.eta;
    }
}

#[test]
fn discrete_graphs_are_rejected() {
    let mut r = stream(4, "dt");
    let g = random_markov_graph(&mut r, 4, 2, GraphKind::Amei, TimeModel::Dt);
    assert!(enumerate_subgraphs(&g).is_err());
}

#[test]
fn deterministic_means_give_deterministic_samplers() {
    let n = 5;
    let p = EpidemicParams::homogeneous(n, 0.3, 0.7).unwrap();

    let complete = MeanMatrix::new(DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 }))
        .unwrap();
    let s = RandomMatrixSampler::new(SamplerKind::M2, &complete, &p).unwrap();
    assert_eq!(s.random_terms(), 0);
    let e = expected_certificate(&s, ExpectationMode::Exhaustive, 0, 0).unwrap();
    assert!((e.value - (0.3 * (n - 1) as f64 - 0.7)).abs() < 1e-12);
    assert_eq!(e.samples, 1);
    assert_eq!(sample_certificate_matrix(&s, 1), sample_certificate_matrix(&s, 2));

    let empty = MeanMatrix::new(DMatrix::zeros(n, n)).unwrap();
    for kind in [SamplerKind::M1, SamplerKind::M2] {
        let s = RandomMatrixSampler::new(kind, &empty, &p).unwrap();
        assert_eq!(s.random_terms(), 0);
        let e = expected_certificate(&s, ExpectationMode::Exhaustive, 0, 0).unwrap();
        assert!((e.value + 0.7).abs() < 1e-12);
    }
    let s = RandomMatrixSampler::new(SamplerKind::M4, &empty, &p).unwrap();
    let e = expected_certificate(&s, ExpectationMode::Exhaustive, 0, 0).unwrap();
    assert!((e.value - 0.3f64.ln()).abs() < 1e-12);
}

fn random_mean<R: Rng>(r: &mut R, n: usize) -> MeanMatrix {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let u: f64 = r.random();
            let v = if u < 0.2 { 0.0 } else if u < 0.3 { 1.0 } else { uniform(r, 0.05, 0.95) };
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    MeanMatrix::new(a).unwrap()
}

#[test]
fn monte_carlo_agrees_with_enumeration() {
    let mut r = stream(5, "mc-vs-exact");
    for kind in [SamplerKind::M1, SamplerKind::M2, SamplerKind::M3, SamplerKind::M4] {
        for _ in 0..3 {
            let n = r.random_range(3..=5);
            let mean = random_mean(&mut r, n);
            let w: Vec<f64> = (0..n).map(|_| uniform(&mut r, 0.1, 0.3)).collect();
            let d: Vec<f64> = (0..n).map(|_| uniform(&mut r, 0.2, 0.6)).collect();
            let p = scaled_params(1.0, &w, &d);
            let s = RandomMatrixSampler::new(kind, &mean, &p).unwrap();
            let exact = expected_certificate(&s, ExpectationMode::Exhaustive, 0, 0).unwrap();
            let mc = expected_certificate(&s, ExpectationMode::MonteCarlo, 20_000, 9).unwrap();
            assert_eq!(exact.samples, 1 << s.random_terms());
            assert!(
                (mc.value - exact.value).abs() <= 4.0 * mc.std_error + 1e-12,
                "{kind:?}: mc {} +- {} vs exact {}",
                mc.value,
                mc.std_error,
                exact.value
            );
        }
    }
}

/// Enumeration by brute force over all `h` configurations, independent of the
/// Gray-code walk.
#[test]
fn enumeration_matches_direct_sum() {
    let mut r = stream(6, "direct-sum");
    let n = 4;
    let mean = random_mean(&mut r, n);
    let p = EpidemicParams::homogeneous(n, 0.4, 0.9).unwrap();
    let s = RandomMatrixSampler::new(SamplerKind::M2, &mean, &p).unwrap();
    let a = &mean.a_bar;
    let upper: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let mut total = 0.0;
    for mask in 0u32..(1 << upper.len()) {
        let mut m = DMatrix::from_diagonal_element(n, n, -0.9);
        let mut w = 1.0;
        for (k, &(i, j)) in upper.iter().enumerate() {
            let on = mask >> k & 1 == 1;
            w *= if on { a[(i, j)] } else { 1.0 - a[(i, j)] };
            if on {
                m[(i, j)] = 0.4;
                m[(j, i)] = 0.4;
            }
        }
        if w > 0.0 {
            total += w * SymmetricEigen::new(m).eigenvalues.max();
        }
    }
    let e = expected_certificate(&s, ExpectationMode::Exhaustive, 0, 0).unwrap();
    assert!((e.value - total).abs() < 1e-12, "{} vs {total}", e.value);
}

#[test]
fn monte_carlo_error_shrinks_like_root_n() {
    let mut r = stream(7, "clt");
    let mean = random_mean(&mut r, 6);
    let p = EpidemicParams::homogeneous(6, 0.3, 0.5).unwrap();
    let s = RandomMatrixSampler::new(SamplerKind::M2, &mean, &p).unwrap();
    let small = expected_certificate(&s, ExpectationMode::MonteCarlo, 2_000, 1).unwrap();
    let large = expected_certificate(&s, ExpectationMode::MonteCarlo, 32_000, 1).unwrap();
    let ratio = small.std_error / large.std_error;
    assert!((ratio - 4.0).abs() < 0.6, "SE ratio {ratio}");
}

#[test]
fn certified_instances_have_negative_expected_abscissa() {
    let mut r = stream(8, "t2-expectation");
    let mut certified = 0;
    let mut tried = 0;
    while certified < 100 {
        tried += 1;
        assert!(tried < 2_000);
        let n = r.random_range(3..=6);
        let m = r.random_range(1..=8);
        let g = random_markov_graph(&mut r, n, m, GraphKind::Amei, TimeModel::Ct);
        let mean = g.mean_matrix().unwrap();
        let w: Vec<f64> = (0..n).map(|_| uniform(&mut r, 0.6, 1.4)).collect();
        let d: Vec<f64> = (0..n).map(|_| uniform(&mut r, 0.5, 1.5)).collect();
        let p = scaled_params(log_uniform(&mut r, 0.05, 2.0), &w, &d);
        if !t2_report(&mean, &p).unwrap().stable {
            continue;
        }
        certified += 1;
        let s = RandomMatrixSampler::new(SamplerKind::M2, &mean, &p).unwrap();
        let e = expected_certificate(&s, ExpectationMode::Exhaustive, 0, 0).unwrap();
        assert!(e.value < 0.0, "E[eta(M2)] = {} on a certified instance", e.value);
    }
}

#[test]
fn tail_check_reports_every_grid_point() {
    let mut r = stream(9, "chung");
    let mean = random_mean(&mut r, 8);
    let p = EpidemicParams::homogeneous(8, 1.0, 1.0).unwrap();
    let s = RandomMatrixSampler::new(SamplerKind::M2, &mean, &p).unwrap();
    let grid: Vec<f64> = (0..10).map(|k| 0.3 * k as f64).collect();
    let pts = chung_tail_check(&s, &grid, 5_000, 4).unwrap();
    assert_eq!(pts.len(), grid.len());
    for w in pts.windows(2) {
        assert!(w[1].empirical <= w[0].empirical);
    }
    assert!(pts.iter().all(ChungPoint::holds));
    assert!(chung_tail_check(&s, &grid, 0, 4).is_err());
}

#[test]
fn nonsymmetric_means_need_the_arc_sampler() {
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.3, 0.6, 0.0]);
    let mean = MeanMatrix::new(a).unwrap();
    let p = EpidemicParams::homogeneous(2, 0.5, 1.0).unwrap();
    assert!(RandomMatrixSampler::new(SamplerKind::M2, &mean, &p).is_err());
    assert!(RandomMatrixSampler::new(SamplerKind::M1, &mean, &p).is_ok());
}
