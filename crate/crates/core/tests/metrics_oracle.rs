use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reluapprox::cpl::cpl_from_net_1d;
use reluapprox::metrics::QuadratureRule;
use reluapprox::{exact_l1_cpl, extract_cpl, lemma1_interpolant, measure, rate_fit, CplFunction, GridSpec, SampleSet};

fn random_cpl(rng: &mut ChaCha8Rng, pieces: usize) -> CplFunction {
    let mut xs: Vec<f64> = (0..pieces - 1).map(|_| rng.gen_range(0.02..0.98)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    let mut breaks = vec![0.0];
    breaks.extend(xs);
    breaks.push(1.0);
    let values = (0..breaks.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
    CplFunction::new(breaks, values).unwrap()
}

#[test]
fn quadrature_agrees_with_exact_piecewise_integral() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid = GridSpec::new(1, 200_000, QuadratureRule::Midpoint);
    for _ in 0..20 {
        let pieces = rng.gen_range(2..12);
        let f = random_cpl(&mut rng, pieces);
        let pieces = rng.gen_range(2..12);
        let g = random_cpl(&mut rng, pieces);
        let pts: Vec<(f64, f64)> = g.breaks().iter().zip(g.values()).map(|(x, y)| (*x, *y)).collect();
        let net = lemma1_interpolant(&SampleSet::from_points(&pts).unwrap()).unwrap();
        let exact = exact_l1_cpl(&f, &g, 0.0, 1.0).unwrap();
        let m = measure(&|x: &[f64]| f.eval(x[0]), &net, &grid).unwrap();
        assert!((m.l1 - exact).abs() <= 1e-4, "{} vs {exact}", m.l1);
        assert!(m.l1 <= m.linf + 1e-15);
    }
}

#[test]
fn extraction_routes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let pieces = rng.gen_range(2..10);
        let g = random_cpl(&mut rng, pieces);
        let pts: Vec<(f64, f64)> = g.breaks().iter().zip(g.values()).map(|(x, y)| (*x, *y)).collect();
        let net = lemma1_interpolant(&SampleSet::from_points(&pts).unwrap()).unwrap();
        let exact = extract_cpl(&net, 0.0, 1.0).unwrap();
        let probed = cpl_from_net_1d(&net, 0.0, 1.0, 4096).unwrap();
        assert!(exact_l1_cpl(&exact, &g, 0.0, 1.0).unwrap() <= 1e-12);
        assert!(exact_l1_cpl(&probed, &g, 0.0, 1.0).unwrap() <= 1e-9);
    }
}

#[test]
fn refinement_converges() {
    let f = |x: &[f64]| (7.0 * x[0]).sin() + x[1] * x[1];
    let pts = [(0.0, 0.0), (0.3, 1.0), (1.0, -0.5)];
    let inner = lemma1_interpolant(&SampleSet::from_points(&pts).unwrap()).unwrap();
    // Lift to two inputs by ignoring the second coordinate.
    let l0 = &inner.layers()[0];
    let mut w = Vec::new();
    for r in 0..l0.rows() {
        w.extend([l0.weight_at(r, 0), 0.0]);
    }
    let net = reluapprox::ReluNetwork::new(
        2,
        vec![
            reluapprox::Layer::new(l0.rows(), 2, w, l0.bias().to_vec()).unwrap(),
            inner.layers()[1].clone(),
        ],
    )
    .unwrap();
    let at = |p: usize| measure(&f, &net, &GridSpec::new(2, p, QuadratureRule::Midpoint)).unwrap().l1;
    let (coarse, mid, fine) = (at(128), at(512), at(2048));
    assert!((mid - fine).abs() < (coarse - fine).abs() + 1e-12);
    assert!((mid - fine).abs() < 1e-4);
}

#[test]
fn quadrature_is_thread_count_independent() {
    let pts = [(0.0, 0.2), (0.25, 1.0), (0.6, -0.3), (1.0, 0.5)];
    let net = lemma1_interpolant(&SampleSet::from_points(&pts).unwrap()).unwrap();
    let f = |x: &[f64]| x[0].sqrt();
    let grid = GridSpec::new(1, 1_000_000, QuadratureRule::Trapezoid);
    let run = |t: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .unwrap()
            .install(|| measure(&f, &net, &grid).unwrap())
    };
    let (a, b) = (run(1), run(7));
    assert_eq!(a.l1.to_bits(), b.l1.to_bits());
    assert_eq!(a.linf.to_bits(), b.linf.to_bits());
}

#[test]
fn rate_fit_is_scale_invariant() {
    let base: Vec<(usize, f64)> = [2usize, 4, 8, 16].iter().map(|&n| (n, 3.0 / (n * n) as f64)).collect();
    let scaled: Vec<(usize, f64)> = base.iter().map(|&(n, e)| (n, 1e-3 * e)).collect();
    let (a, b) = (rate_fit(&base).unwrap(), rate_fit(&scaled).unwrap());
    assert!((a.slope + 2.0).abs() < 1e-12);
    assert!((a.slope - b.slope).abs() < 1e-12);
    assert!((a.intercept - b.intercept - 1e3f64.ln()).abs() < 1e-9);
    assert!((a.r_squared - 1.0).abs() < 1e-12);
}

#[test]
fn rate_fit_recovers_noisy_slope() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let pts: Vec<(usize, f64)> = (1..=10)
        .map(|k| {
            let n = 1usize << k;
            (n, (n as f64).powi(-2) * (1.0 + rng.gen_range(-0.1..0.1)))
        })
        .collect();
    let fit = rate_fit(&pts).unwrap();
    assert!((fit.slope + 2.0).abs() <= 0.1, "{}", fit.slope);
}
