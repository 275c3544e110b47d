use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qmetric::charts::{
    complexify_pairs, hopf_chart, jacobian, minkowski_line_element, pullback_metric,
    wick_chart, ChartMap, Displacement, MetricTensor, SYMMETRY_TOL, WICK_TWIST,
    twisted_pair_line_element, wick_pair_line_element,
};
use qmetric::dsl::parse_family_file;
use qmetric::{builtin_family, inner_product, Chart, DifferentiationScheme, Interval, StateFamily, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cvec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| Complex64::new(a, b)), n)
}

fn hopf_point(rng: &mut impl Rng) -> [f64; 3] {
    [
        rng.random_range(0.05..PI - 0.05),
        rng.random_range(0.05..2.0 * PI - 0.05),
        rng.random_range(0.05..4.0 * PI - 0.05),
    ]
}

/// Hand-derived `∂(x¹..x⁴)/∂(θ, φ, χ)` for the Euler chart at radius `r`.
fn hopf_jacobian_oracle(r: f64, p: [f64; 3]) -> DMatrix<f64> {
    let [t, f, c] = p;
    let (a, b) = ((c + f) / 2.0, (c - f) / 2.0);
    let (ct, st) = ((t / 2.0).cos(), (t / 2.0).sin());
    #[rustfmt::skip]
    let rows = [
        -0.5 * r * st * a.cos(), -0.5 * r * ct * a.sin(), -0.5 * r * ct * a.sin(),
        -0.5 * r * st * a.sin(),  0.5 * r * ct * a.cos(),  0.5 * r * ct * a.cos(),
         0.5 * r * ct * b.cos(),  0.5 * r * st * b.sin(), -0.5 * r * st * b.sin(),
         0.5 * r * ct * b.sin(), -0.5 * r * st * b.cos(),  0.5 * r * st * b.cos(),
    ];
    DMatrix::from_row_slice(4, 3, &rows)
}

proptest! {
    #[test]
    fn inner_product_is_conjugate_symmetric(a in cvec(3), b in cvec(3)) {
        let (a, b) = (StateVector(a), StateVector(b));
        prop_assert_eq!(inner_product(&a, &b).unwrap(), inner_product(&b, &a).unwrap().conj());
    }

    #[test]
    fn inner_product_is_linear_in_second_argument(
        a in cvec(3), b in cvec(3), c in cvec(3), alpha in (-2.0f64..2.0, -2.0f64..2.0)
    ) {
        let alpha = Complex64::new(alpha.0, alpha.1);
        let mix = StateVector(b.iter().zip(&c).map(|(x, y)| alpha * x + y).collect());
        let (a, b, c) = (StateVector(a), StateVector(b), StateVector(c));
        let lhs = inner_product(&a, &mix).unwrap();
        let rhs = alpha * inner_product(&a, &b).unwrap() + inner_product(&a, &c).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-15 * 1f64.max(lhs.norm()) * 8.0);
    }

    #[test]
    fn line_element_identity(d in proptest::collection::vec(-5.0f64..5.0, 4), c in 0.1f64..10.0) {
        let disp = Displacement(d.clone());
        let mink = minkowski_line_element(&disp, c).unwrap();
        let x = wick_chart(c).unwrap().evaluate(&d).unwrap();
        let (z1, z2) = complexify_pairs([x[0], x[1], x[2], x[3]]);
        let twisted = twisted_pair_line_element(z1, z2, 1.0, 1.0, WICK_TWIST);
        prop_assert!((mink - twisted).abs() < 1e-13 * 1f64.max(mink.abs()));
        prop_assert_eq!(wick_pair_line_element(&disp, c).unwrap(), twisted);
    }
}

#[test]
fn hopf_norm_is_r_squared() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for r in [1.0, 0.7, 2.5] {
        let consts: BTreeMap<String, f64> = [("r".to_string(), r)].into_iter().collect();
        let fam = builtin_family("hopf_s3", &consts).unwrap();
        for _ in 0..1000 {
            let p = hopf_point(&mut rng);
            let n = fam.evaluate(&p).unwrap().norm_sqr();
            assert!((n - r * r).abs() <= 1e-14 * r * r * 4.0, "r={r} norm={n}");
        }
    }
}

#[test]
fn central4_converges_on_hopf() {
    let fam = builtin_family("hopf_s3", &BTreeMap::new()).unwrap();
    let p: [f64; 3] = [1.1, 2.0, 5.0];
    // ∂Z¹/∂θ = −½ sin(θ/2) e^{i(χ+φ)/2}
    let exact = Complex64::from_polar(-0.5 * (p[0] / 2.0).sin(), (p[2] + p[1]) / 2.0);
    let err = |h: f64| {
        let d = fam.differentiate(&p, 0, &DifferentiationScheme::central4(h)).unwrap();
        (d.0[0] - exact).norm()
    };
    let mut h = 0.2;
    let mut prev = err(h);
    while prev > 1e-11 {
        h /= 2.0;
        let next = err(h);
        assert!(prev / next >= 8.0 || next < 1e-11, "h={h}: {prev} -> {next}");
        prev = next;
    }
}

#[test]
fn dsl_hopf_matches_builtin() {
    let def = parse_family_file(qmetric::states::shipped_source("hopf_s3").unwrap()).unwrap();
    let dsl = StateFamily::from_definition(&def, &BTreeMap::new()).unwrap();
    let builtin = builtin_family("hopf_s3", &BTreeMap::new()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let p = hopf_point(&mut rng);
        let (a, b) = (dsl.evaluate(&p).unwrap(), builtin.evaluate(&p).unwrap());
        for (x, y) in a.0.iter().zip(&b.0) {
            assert!((x - y).norm() < 1e-14);
        }
    }
}

#[test]
fn hopf_jacobian_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let scheme = DifferentiationScheme::default();
    for r in [1.0, 1.7] {
        let map = hopf_chart(Some(r)).unwrap();
        for _ in 0..100 {
            let p = hopf_point(&mut rng);
            let j = jacobian(&map, &p, &scheme).unwrap();
            let diff = (j - hopf_jacobian_oracle(r, p)).amax();
            assert!(diff < 1e-9, "{diff}");
        }
    }
}

#[test]
fn wick_jacobian_is_exact() {
    let map = wick_chart(2.5).unwrap();
    let j = jacobian(&map, &[0.3, -1.0, 4.0, 2.0], &DifferentiationScheme::default()).unwrap();
    assert_eq!(j, DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[1.0, 1.0, 1.0, 2.5])));
}

#[test]
fn hopf_pullback_is_round_metric() {
    let map = hopf_chart(Some(1.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let p = hopf_point(&mut rng);
        let g = pullback_metric(&MetricTensor::flat(4), &map, &p, &DifferentiationScheme::default()).unwrap();
        let ct = p[0].cos();
        let expect = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, ct, 0.0, ct, 1.0]) * 0.25;
        assert!((g.components() - &expect).amax() < 1e-9);
        let m = g.components();
        assert!((m - m.transpose()).amax() <= SYMMETRY_TOL);
    }
}

#[test]
fn hopf_singular_band_is_rank_deficient() {
    let map = hopf_chart(Some(1.0)).unwrap();
    let err = jacobian(&map, &[0.001, 1.0, 1.0], &DifferentiationScheme::default()).unwrap_err();
    assert!(matches!(err, qmetric::charts::ChartError::RankDeficient { .. }));
}

fn poly_map(name: &str, dim: usize, seed: u64) -> ChartMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lin: Vec<f64> = (0..dim * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let quad: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.3..0.3)).collect();
    let source = Chart::new(name, &["a", "b", "c"][..dim], vec![Interval::closed(-3.0, 3.0); dim]);
    ChartMap::from_fn(name, source, dim, move |p| {
        Ok((0..dim)
            .map(|i| {
                let l: f64 = (0..dim).map(|j| lin[i * dim + j] * p[j]).sum();
                p[i] + l * 0.5 + quad[i] * (p[(i + 1) % dim]).sin()
            })
            .collect())
    })
}

#[test]
fn pullback_is_functorial() {
    let scheme = DifferentiationScheme::default();
    let target = MetricTensor::diagonal(&[2.0, 1.0, -0.5]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for seed in 0..10 {
        let f = poly_map("f", 3, seed);
        let g = poly_map("g", 3, seed + 100);
        let composed = f.then(&g).unwrap();
        for _ in 0..5 {
            let p: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..0.5)).collect();
            let direct = pullback_metric(&target, &composed, &p, &scheme).unwrap();
            let fp = f.evaluate(&p).unwrap();
            let middle = pullback_metric(&target, &g, &fp, &scheme).unwrap();
            let seq = pullback_metric(&middle, &f, &p, &scheme).unwrap();
            let diff = (direct.components() - seq.components()).amax();
            assert!(diff < 1e-7, "{diff}");
        }
    }
}
