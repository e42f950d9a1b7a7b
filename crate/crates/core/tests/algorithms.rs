use proptest::prelude::*;
use surro_core::linalg::{self, SymMatrix};
use surro_core::models::{
    alpha_em_problem, boundary_counterexample, em_population_problem, em_sample_problem,
    gradient_descent_problem, mirror_descent_problem, mirror_prox_problem, newton_problem,
    AlphaIndex, AlphaMode, GaussianLatentModel, MirrorMap, MixtureEm, Objective, SymmetricMixture,
};
use surro_core::rates::{accelerate, curvature_at, FdSpec};
use surro_core::rng;
use surro_core::surrogate::{
    inner_minimize, inner_minimize_with, iterate, InnerOptions, StopRule,
};
use surro_core::{ConvexDomain, ParamVector, Surrogate};

fn zoo() -> Vec<Box<dyn Surrogate>> {
    let lat = GaussianLatentModel::new(1.0, 2.0, 0.3).unwrap();
    let data = lat.sample(50, &mut rng::seeded(1, 0));
    let mix = SymmetricMixture::new(1.5).unwrap();
    let mix_data = mix.sample(200, &mut rng::seeded(2, 0));
    let quad = Objective::quadratic(
        SymMatrix::from_rows(&[vec![2.0, 0.4], vec![0.4, 1.0]]),
        vec![1.5, -0.2],
    )
    .unwrap();
    let simplex_f = Objective::quadratic(SymMatrix::identity(3), vec![0.6, 0.3, 0.1]).unwrap();
    let lse = Objective::smooth_log_sum_exp(1.0, vec![0.3, -0.2]).unwrap();
    let ball = ConvexDomain::ball(vec![0.0, 0.0], 1.0, false).unwrap();
    vec![
        Box::new(
            gradient_descent_problem(
                quad.clone(),
                0.3,
                ConvexDomain::box_(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
            )
            .unwrap(),
        ),
        Box::new(
            mirror_descent_problem(
                simplex_f.clone(),
                MirrorMap::NegEntropy,
                0.5,
                ConvexDomain::simplex(3, 0.0).unwrap(),
            )
            .unwrap(),
        ),
        Box::new(
            mirror_prox_problem(
                simplex_f,
                MirrorMap::NegEntropy,
                0.5,
                ConvexDomain::simplex(3, 0.0).unwrap(),
            )
            .unwrap(),
        ),
        Box::new(
            mirror_descent_problem(lse.clone(), MirrorMap::ball(2.0).unwrap(), 0.3, ball.clone())
                .unwrap(),
        ),
        Box::new(mirror_prox_problem(lse, MirrorMap::ball(2.0).unwrap(), 0.3, ball).unwrap()),
        Box::new(em_population_problem(lat)),
        Box::new(em_sample_problem(lat, data).unwrap()),
        Box::new(MixtureEm::sample(mix, mix_data).unwrap()),
        Box::new(newton_problem(Objective::Quartic1D).unwrap()),
        Box::new(boundary_counterexample()),
    ]
}

#[test]
fn numeric_inner_solve_agrees_with_closed_forms() {
    let mut r = rng::seeded(0xa9, 0);
    for p in zoo() {
        for _ in 0..100 {
            let theta = ParamVector::from(p.domain().sample(&mut r));
            let closed = inner_minimize(p.as_ref(), &theta).unwrap();
            let numeric = inner_minimize_with(p.as_ref(), &theta, &InnerOptions::numeric()).unwrap();
            assert!(
                linalg::dist2(&closed, &numeric) <= 1e-6,
                "{} at {:?}: {:?} vs {:?}",
                p.label(),
                theta.coords(),
                closed.coords(),
                numeric.coords()
            );
        }
    }
}

#[test]
fn traces_descend_and_stay_feasible() {
    let mut r = rng::seeded(0xb7, 0);
    let stop = StopRule {
        max_iters: 300,
        ..StopRule::default()
    };
    for p in zoo() {
        for _ in 0..5 {
            let theta0 = ParamVector::from(p.domain().sample(&mut r));
            let tr = iterate(p.as_ref(), &theta0, &stop).unwrap();
            for (n, w) in tr.iterates.windows(2).enumerate() {
                let next = p.value(&w[0], &w[1]).unwrap();
                let here = p.value(&w[0], &w[0]).unwrap();
                assert!(next <= here + 1e-10, "{} step {n}: {next} > {here}", p.label());
            }
            assert!(tr.max_surrogate_increase <= 1e-10);
            for t in tr.iterates.iter().chain(tr.aux_iterates.iter().flatten()) {
                assert!(p.domain().contains(t), "{} left the domain at {:?}", p.label(), t.coords());
            }
            if let Some(inc) = tr.max_lyapunov_increase() {
                assert!(inc <= 1e-10, "{}: Lyapunov increase {inc}", p.label());
            }
        }
    }
}

#[test]
fn sample_em_likelihood_is_monotone() {
    let m = GaussianLatentModel::new(2.0, 0.5, -1.0).unwrap();
    for seed in 0..10 {
        let data = m.sample(30, &mut rng::seeded(seed, 3));
        let p = em_sample_problem(m, data).unwrap();
        let tr = iterate(&p, &ParamVector::scalar(8.0), &StopRule::default()).unwrap();
        let l = tr.lyapunov.as_ref().unwrap();
        assert!(l.len() > 5);
        assert!(tr.max_lyapunov_increase().unwrap() <= 1e-12);
    }
}

#[test]
fn prox_constants_hold_on_sampled_points() {
    let lse = Objective::smooth_log_sum_exp(0.5, vec![0.1, 0.2]).unwrap();
    let dom = ConvexDomain::ball(vec![0.0, 0.0], 1.0, false).unwrap();
    let phi = MirrorMap::ball(2.0).unwrap();
    let p = mirror_prox_problem(lse.clone(), phi, 0.1, dom.clone()).unwrap();
    let (gamma, beta) = p.constants();
    let (gamma, beta) = (gamma.unwrap(), beta.unwrap());
    assert!(p.warnings().is_empty());
    let mut r = rng::seeded(5, 0);
    for _ in 0..1000 {
        let x = dom.sample(&mut r);
        assert!(gamma <= linalg::eigh(&phi.hess(&x).unwrap()).unwrap().min() + 1e-12);
        assert!(linalg::spectral_norm(lse.hess(&x).unwrap().as_matrix()) <= beta + 1e-12);
    }
    let too_big = mirror_prox_problem(lse, phi, 10.0, dom).unwrap();
    assert!(!too_big.warnings().is_empty());
}

#[test]
fn mirror_prox_with_ball_map_converges_globally() {
    let center = vec![0.3, -0.4];
    let lse = Objective::smooth_log_sum_exp(0.5, center.clone()).unwrap();
    let dom = ConvexDomain::ball(vec![0.0, 0.0], 1.0, false).unwrap();
    let phi = MirrorMap::ball(1.5).unwrap();
    let probe = mirror_prox_problem(lse.clone(), phi, 1.0, dom.clone()).unwrap();
    let (gamma, beta) = probe.constants();
    let eta = 0.9 * gamma.unwrap() / beta.unwrap();
    let p = mirror_prox_problem(lse, phi, eta, dom.clone()).unwrap();
    assert!(p.warnings().is_empty());
    let mut r = rng::seeded(9, 0);
    let mut starts: Vec<Vec<f64>> = (0..5).map(|_| dom.sample(&mut r)).collect();
    for angle in [0.0f64, 2.0, 4.0] {
        starts.push(vec![(1.0 - 1e-7) * angle.cos(), (1.0 - 1e-7) * angle.sin()]);
    }
    for s in starts {
        let tr = iterate(&p, &ParamVector::from(s.clone()), &StopRule::default()).unwrap();
        let err = linalg::dist2(tr.last(), &center);
        assert!(err <= 1e-10, "start {s:?}: error {err}");
    }
}

#[test]
fn alpha_em_converges_to_the_same_fixed_point() {
    let m = GaussianLatentModel::new(1.0, 1.0, 0.25).unwrap();
    for alpha in [0.25, 0.5, -1.0] {
        let p = alpha_em_problem(m, AlphaIndex::new(alpha).unwrap(), AlphaMode::Population).unwrap();
        let tr = iterate(&p, &ParamVector::scalar(2.0), &StopRule::default()).unwrap();
        assert!((tr.last()[0] - 0.25).abs() < 1e-9, "alpha {alpha}: {}", tr.last()[0]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn acceleration_is_exact_on_affine_em(
        sx2 in 0.1f64..5.0,
        sy2 in 0.1f64..5.0,
        star in -3.0f64..3.0,
        offset in -2.0f64..2.0,
    ) {
        let m = GaussianLatentModel::new(sx2, sy2, star).unwrap();
        let p = em_population_problem(m);
        let tn = [star + offset];
        let next = inner_minimize(&p, &ParamVector::from(tn.to_vec())).unwrap();
        let frame = curvature_at(&p, &tn, &FdSpec::default()).unwrap();
        let acc = accelerate(&tn, &next, &frame).unwrap();
        prop_assert!((acc[0] - star).abs() <= 1e-8 * (1.0 + star.abs()));
    }

    #[test]
    fn acceleration_is_newton_on_quadratics(
        diag in prop::collection::vec(0.2f64..3.0, 1..5),
        seed in 0u64..500,
    ) {
        let d = diag.len();
        let mut r = rng::seeded(seed, 0);
        let center = rng::normal_vec(&mut r, d);
        let f = Objective::quadratic(SymMatrix::from_diag(&diag), center.clone()).unwrap();
        let eta = 0.5 / diag.iter().cloned().fold(0.0, f64::max);
        let p = gradient_descent_problem(f, eta, ConvexDomain::full_space(d).unwrap()).unwrap();
        let t0 = rng::normal_vec(&mut r, d);
        let t1 = inner_minimize(&p, &ParamVector::from(t0.clone())).unwrap();
        let frame = curvature_at(&p, &t0, &FdSpec::default()).unwrap();
        let acc = accelerate(&t0, &t1, &frame).unwrap();
        prop_assert!(linalg::dist2(&acc, &center) <= 1e-10 * (1.0 + linalg::norm2(&center)));
    }
}
