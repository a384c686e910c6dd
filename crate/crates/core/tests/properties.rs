use std::f64::consts::{FRAC_PI_2, TAU};

use bcn_duality::duality::{backward_full, backward_map, forward_map};
use bcn_duality::dynamics::{FlowSpec, Integrator, System};
use bcn_duality::io::format_real;
use bcn_duality::matrix::{self, Structure, I};
use bcn_duality::params::{angle_diff, lambda_membership, lambda_of_z, strongly_regular, wrap_angle, z_from_angles};
use bcn_duality::verification::{run_suite, sampling, Suite, SuiteConfig};
use bcn_duality::{rsvd, sutherland, CouplingParams, DualPoint, Membership, OscillatorPoint, SutherlandPoint};
use num_complex::Complex64;
use proptest::prelude::*;

fn couplings(n: usize) -> impl Strategy<Value = CouplingParams> {
    (0.5..1.5f64, 0.3..2.5f64, -0.9..0.9f64).prop_map(move |(mu, nu, r)| CouplingParams::from_rsvd(mu, nu, nu * r, n).unwrap())
}

/// Decreasing `q` in `(0, pi/2)` with gaps of at least `0.05`, built from positive spacings.
fn positions(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, n + 1).prop_map(move |w| {
        let eps = 0.05;
        let room = FRAC_PI_2 - (n + 1) as f64 * eps;
        let total: f64 = w.iter().sum();
        let mut q = Vec::with_capacity(n);
        let mut x = 0.0;
        for wi in &w[..n] {
            x += eps + wi / total * room;
            q.push(x);
        }
        q.reverse();
        q
    })
}

fn phase_point(n: usize) -> impl Strategy<Value = SutherlandPoint> {
    (positions(n), prop::collection::vec(-2.5..2.5f64, n)).prop_map(|(q, p)| SutherlandPoint::new(q, p))
}

/// Couplings with an interior dual point, `lambda` built from gaps in `(0.1, 3)`.
fn dual_sample(n: usize) -> impl Strategy<Value = (CouplingParams, DualPoint)> {
    couplings(n).prop_flat_map(move |p| {
        (Just(p), prop::collection::vec(0.1..3.0f64, n), prop::collection::vec(0.0..TAU, n)).prop_map(|(p, gaps, theta)| {
            let mut l = vec![0.0; gaps.len()];
            let n = l.len();
            l[n - 1] = p.nu.max(p.kappa.abs()) + gaps[n - 1];
            for k in (0..n - 1).rev() {
                l[k] = l[k + 1] + 2.0 * p.mu + gaps[k];
            }
            (p, DualPoint::new(l, theta))
        })
    })
}

fn oscillator(n: usize) -> impl Strategy<Value = OscillatorPoint> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), n)
        .prop_map(|v| OscillatorPoint::new(v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn couplings_round_trip_through_sutherland_form(p in (1usize..5).prop_flat_map(couplings)) {
        let back = CouplingParams::from_sutherland(p.gamma, p.gamma1, p.gamma2, p.n).unwrap();
        prop_assert!((back.mu - p.mu).abs() < 1e-12);
        prop_assert!((back.nu - p.nu).abs() < 1e-12);
        prop_assert!((back.kappa - p.kappa).abs() < 1e-12);
    }

    #[test]
    fn oscillator_chart_inverts_angle_chart((p, d) in (1usize..5).prop_flat_map(dual_sample)) {
        let z = z_from_angles(&d, &p).unwrap();
        let l = lambda_of_z(&z, &p);
        prop_assert!(max_abs_diff(&l, &d.lambda) <= 1e-12 * d.lambda[0]);
    }

    #[test]
    fn oscillator_image_lies_in_closed_chamber(
        (p, z, zero) in (1usize..5).prop_flat_map(|n| (couplings(n), oscillator(n), 0..=n))
    ) {
        let n = p.n;
        let l = lambda_of_z(&z, &p);
        prop_assert_ne!(lambda_membership(&l, &p, 0.0), Membership::Outside);
        let mut zz = z.clone();
        if zero < n {
            zz.z[zero] = Complex64::new(0.0, 0.0);
            prop_assert_eq!(lambda_membership(&lambda_of_z(&zz, &p), &p, 1e-12), Membership::Boundary);
        } else if z.nonzero_count(1e-3) == n {
            prop_assert_eq!(lambda_membership(&l, &p, 1e-12), Membership::Inside);
        }
    }

    #[test]
    fn gamma_split_adds_back(seed in any::<u64>(), n in 1usize..9) {
        let mut rng = sampling::stream(seed, "prop/split", n, 0);
        let y = sampling::anti_hermitian(&mut rng, 2 * n);
        let (plus, minus) = matrix::gamma_split(&y, 1e-12).unwrap();
        prop_assert!((&plus + &minus - &y).norm() <= 1e-15 * y.norm());
        prop_assert!(matrix::structure_residual(&plus, Structure::LiePlus).unwrap() <= 1e-14 * y.norm());
        prop_assert!(matrix::structure_residual(&minus, Structure::LieMinus).unwrap() <= 1e-14 * y.norm());
    }

    #[test]
    fn structured_decompositions_reconstruct(seed in any::<u64>(), n in 1usize..9) {
        let mut rng = sampling::stream(seed, "prop/decompose", n, 0);
        let ym = sampling::lie_minus(&mut rng, n);
        let s = matrix::pair_diagonalize_gminus(&ym, 1e-10).unwrap();
        prop_assert!((s.reconstruct() - &ym).norm() <= 1e-10 * ym.norm().max(1.0));
        let c = matrix::exchange(n);
        prop_assert!((&s.frame * &c - &c * &s.frame).norm() <= 1e-12);
        let (b, _) = sampling::group_minus(&mut rng, n);
        let (eta, q) = matrix::cartan_decompose_gminus(&b, 1e-10).unwrap();
        let rebuilt = &eta * matrix::diag(&matrix::exp_iq(&q, 2.0)) * eta.adjoint();
        prop_assert!((rebuilt - &b).norm() <= 1e-10);
        prop_assert!((&eta * &c - &c * &eta).norm() <= 1e-12);
    }

    #[test]
    fn cartan_angles_ignore_frame_phases(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = sampling::stream(seed, "prop/phases", n, 0);
        let (b, _) = sampling::group_minus(&mut rng, n);
        let g = sampling::g_plus(&mut rng, n);
        let (_, q1) = matrix::cartan_decompose_gminus(&b, 1e-10).unwrap();
        let (_, q2) = matrix::cartan_decompose_gminus(&(&g * &b * g.adjoint()), 1e-10).unwrap();
        prop_assert!(max_abs_diff(&q1, &q2) <= 1e-9);
    }

    #[test]
    fn sutherland_spectrum_is_paired((p, x) in (1usize..5).prop_flat_map(|n| (couplings(n), phase_point(n)))) {
        let lax = sutherland::lax_y(&x, &p).unwrap();
        let mut ev = sutherland::spectrum(&lax);
        let lambda = sutherland::action_map(&x, &p).unwrap();
        let scale = lambda[0].max(1.0);
        let mut want: Vec<f64> = lambda.iter().flat_map(|l| [*l, -*l]).collect();
        want.sort_by(f64::total_cmp);
        ev.sort_by(f64::total_cmp);
        prop_assert!(max_abs_diff(&ev, &want) <= 1e-10 * scale);
        let tr = sutherland::power_traces(&lax, 7);
        for m in [1, 3, 5, 7] {
            prop_assert!(tr[m - 1].abs() <= 1e-10 * scale.powi(m as i32) * 2.0 * p.n as f64);
        }
        let h = sutherland::hamiltonians_by_trace(&x, &p, p.n).unwrap();
        for (k, hk) in h.iter().enumerate() {
            let k = k + 1;
            let closed = lambda.iter().map(|l| l.powi(2 * k as i32)).sum::<f64>() / (2.0 * k as f64);
            prop_assert!((hk - closed).abs() <= 1e-10 * closed.max(1.0));
        }
    }

    #[test]
    fn dual_lax_matrices_are_unitary((p, d) in (1usize..5).prop_flat_map(dual_sample)) {
        let a = rsvd::a_check(&d, &p).unwrap();
        prop_assert!(matrix::unitarity_residual(&a) <= 1e-10);
        prop_assert!(matrix::structure_residual(&a, Structure::GMinus).unwrap() <= 1e-10);
        let f = rsvd::f_vector(&d, &p).unwrap();
        prop_assert!(rsvd::a_constraint_residual(&a, &d.lambda, &f, &p) <= 1e-10 * d.lambda[0]);
        let z = z_from_angles(&d, &p).unwrap();
        prop_assert!(matrix::unitarity_residual(&rsvd::l_tilde(&z, &p)) <= 1e-10);
        let h0 = rsvd::dual_h0(&d, &p).unwrap();
        prop_assert!((h0 - rsvd::dual_h0_trace(&d, &p).unwrap()).abs() <= 1e-10 * p.n as f64);
        if strongly_regular(&d.lambda, &p, 1e-3) {
            let direct = rsvd::a_check_direct(&d, &p).unwrap();
            prop_assert!((direct - &a).norm() <= 1e-9);
        }
    }

    #[test]
    fn branch_weights_and_sums((p, d) in (1usize..5).prop_flat_map(dual_sample)) {
        let w = rsvd::f_squared_branches(&d.lambda, &p).unwrap();
        let big_n = 2.0 * p.n as f64;
        prop_assert!((w.sum_plus() - big_n).abs() <= 1e-10 * big_n);
        prop_assert!((w.sum_minus() + big_n).abs() <= 1e-10 * big_n);
        prop_assert!(w.fsq_plus.iter().all(|f| *f > 0.0));
        for c in 0..p.n {
            prop_assert!(w.fsq_minus[c] < 0.0 || w.fsq_minus[p.n + c] < 0.0);
        }
        let (r1, r2) = rsvd::w_system_residual(&d.lambda, &w.fsq_plus, &p).unwrap();
        prop_assert!(r1.max(r2) <= 1e-9);
    }

    #[test]
    fn duality_round_trip((p, x) in (1usize..5).prop_flat_map(|n| (couplings(n), phase_point(n)))) {
        let d = forward_map(&x, &p).unwrap();
        let back = backward_map(&d, &p).unwrap();
        prop_assert!(max_abs_diff(&back.q, &x.q) <= 1e-8);
        prop_assert!(max_abs_diff(&back.p, &x.p) <= 1e-8 * x.p.iter().fold(1.0f64, |m, v| m.max(v.abs())));
    }

    #[test]
    fn dual_hamiltonians_pull_back_to_cosines((p, x) in (1usize..5).prop_flat_map(|n| (couplings(n), phase_point(n)))) {
        let d = forward_map(&x, &p).unwrap();
        let z = z_from_angles(&d, &p).unwrap();
        let hk = rsvd::dual_hk(&z, &p, 4);
        for (k, h) in hk.iter().enumerate() {
            let k = (k + 1) as i32;
            let want = (-1f64).powi(k) / k as f64 * x.q.iter().map(|q| (2.0 * k as f64 * q).cos()).sum::<f64>();
            prop_assert!((h - want).abs() <= 1e-8, "k={}: {} vs {}", k, h, want);
        }
    }

    #[test]
    fn unreduced_lax_spectrum((p, d) in (1usize..5).prop_flat_map(dual_sample)) {
        let b = backward_full(&d, &p).unwrap();
        let c = matrix::exchange(p.n);
        let l = -(matrix::inverse(&b.y).unwrap() * &c * &b.y * &c);
        let ev = matrix::eigenvalues(&l).unwrap();
        let mut want: Vec<Complex64> =
            b.point.q.iter().flat_map(|q| [-(I * 2.0 * q).exp(), -(-I * 2.0 * q).exp()]).collect();
        for e in &ev {
            let (i, dist) = want.iter().enumerate().map(|(i, w)| (i, (w - e).norm())).fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            prop_assert!(dist <= 1e-8, "{:?} not in spectrum", e);
            want.remove(i);
        }
    }

    #[test]
    fn equilibrium_is_the_minimum((p, z) in (1usize..5).prop_flat_map(|n| (couplings(n), oscillator(n)))) {
        let l = lambda_of_z(&z, &p);
        let h = 0.5 * l.iter().map(|x| x * x).sum::<f64>();
        let h0 = 0.5 * p.lambda_min().iter().map(|x| x * x).sum::<f64>();
        prop_assert!(h >= h0);
        if z.nonzero_count(1e-6) > 0 {
            prop_assert!(h > h0);
        }
    }

    #[test]
    fn reals_print_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(format_real(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn angle_helpers(a in -50.0..50.0f64, b in -50.0..50.0f64) {
        let w = wrap_angle(a);
        prop_assert!((0.0..TAU).contains(&w));
        prop_assert!(((w - a) / TAU - ((w - a) / TAU).round()).abs() < 1e-9);
        let d = angle_diff(a, b);
        prop_assert!(d.abs() <= std::f64::consts::PI + 1e-12);
        let e = (wrap_angle(b + d) - wrap_angle(a)).abs();
        prop_assert!(e < 1e-9 || e > TAU - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn midpoint_family_is_time_reversible(
        (p, x) in (1usize..4).prop_flat_map(|n| (couplings(n), phase_point(n)))
    ) {
        let spec = FlowSpec::new(System::SutherlandH1, 1e-4, 1e-2);
        let integ = Integrator::new(&spec, &p).unwrap();
        let mut s = x.to_vec();
        for _ in 0..20 {
            s = integ.step(&s, 1e-4).unwrap();
        }
        for _ in 0..20 {
            s = integ.step(&s, -1e-4).unwrap();
        }
        prop_assert!(max_abs_diff(&s, &x.to_vec()) <= 1e-9 * x.to_vec().iter().fold(1.0f64, |m, v| m.max(v.abs())));
    }

    #[test]
    fn suite_reports_are_reproducible(seed in any::<u64>()) {
        let mut cfg = SuiteConfig::new(Suite::Rsvd, seed);
        cfg.n_max = 2;
        cfg.samples = 10;
        let a = run_suite(&cfg).unwrap();
        cfg.jobs = 1;
        let b = run_suite(&cfg).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
    }
}
