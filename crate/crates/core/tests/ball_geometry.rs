use geolab::ball::*;
use geolab::disc::{poincare_distance, poincare_metric, DiscPoint, DiscTangent};
use geolab::sampling::{ball_point_by_depth, disc_point_by_depth, stream_rng, unit_vector};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn random_point<R: Rng>(rng: &mut R, n: usize, depth: f64) -> BallPoint {
    BallPoint::new(ball_point_by_depth(rng, n, depth)).unwrap()
}

fn dist(a: &CVector, b: &CVector) -> f64 {
    (a - b).norm()
}

#[test]
fn distance_on_the_first_axis_is_the_disc_distance() {
    let d = kobayashi_distance(&BallPoint::origin(2), &BallPoint::from_reals(&[0.5, 0.0]).unwrap()).unwrap();
    let oracle = poincare_distance(&DiscPoint::origin(), &DiscPoint::from_re_im(0.5, 0.0).unwrap());
    assert_eq!(d, oracle);
    let z = BallPoint::from_reals(&[0.1, -0.3]).unwrap();
    assert_eq!(kobayashi_distance(&z, &z).unwrap(), 0.0);
}

#[test]
fn slice_consistency_on_grid() {
    let grid: Vec<Complex64> = (0..50)
        .map(|k| Complex64::from_polar(0.98 * (k as f64 / 49.0), 0.37 * k as f64))
        .collect();
    for n in [1usize, 2, 3] {
        for z in &grid {
            for w in &grid {
                let mut a = vec![c(0.0); n];
                let mut b = vec![c(0.0); n];
                a[0] = *z;
                b[0] = *w;
                let ball = kobayashi_distance(&BallPoint::new(a).unwrap(), &BallPoint::new(b).unwrap()).unwrap();
                let disc = poincare_distance(&DiscPoint::new(*z).unwrap(), &DiscPoint::new(*w).unwrap());
                assert!((ball - disc).abs() < 1e-12, "{z} {w}: {ball} vs {disc}");
            }
        }
    }
}

#[test]
fn unitary_invariance() {
    let mut rng = stream_rng(21, 0);
    for k in 0..1000 {
        let n = 2 + k % 2;
        let u = Unitary::random(&mut rng, n);
        let z = random_point(&mut rng, n, 4.0);
        let w = random_point(&mut rng, n, 4.0);
        let uz = BallPoint::from_vector(u.apply(z.value())).unwrap();
        let uw = BallPoint::from_vector(u.apply(w.value())).unwrap();
        let before = kobayashi_distance(&z, &w).unwrap();
        let after = kobayashi_distance(&uz, &uw).unwrap();
        assert!((before - after).abs() < 1e-12, "{before} vs {after}");
    }
}

#[test]
fn mobius_invariance() {
    let mut rng = stream_rng(22, 0);
    for k in 0..200 {
        let n = 2 + k % 2;
        let m = BallMobius::new(random_point(&mut rng, n, 2.5), Unitary::random(&mut rng, n)).unwrap();
        for _ in 0..5 {
            let z = random_point(&mut rng, n, 3.0);
            let w = random_point(&mut rng, n, 3.0);
            let before = kobayashi_distance(&z, &w).unwrap();
            let after = kobayashi_distance(&m.apply(&z).unwrap(), &m.apply(&w).unwrap()).unwrap();
            assert!((before - after).abs() < 1e-11, "{before} vs {after}");
        }
    }
}

#[test]
fn involution_defining_properties_and_round_trip() {
    let mut rng = stream_rng(23, 0);
    for k in 0..100 {
        let n = 1 + k % 3;
        let a = random_point(&mut rng, n, 5.0);
        let m = ball_mobius(&a);
        assert!(m.apply(&a).unwrap().norm() < 1e-13);
        let twice = m.apply(&m.apply(&BallPoint::origin(n)).unwrap()).unwrap();
        // the inner step rounds a, and φ_a amplifies that by 1/(1 − |a|²)
        let amplification = 1.0 / (1.0 - a.norm() * a.norm());
        assert!(twice.norm() < 1e-15 * amplification, "{} {}", a.norm(), twice.norm());
    }
    for k in 0..1000 {
        let n = 1 + k % 3;
        let m = BallMobius::new(random_point(&mut rng, n, 3.0), Unitary::random(&mut rng, n)).unwrap();
        let z = random_point(&mut rng, n, 3.0);
        let back = ball_mobius_invert(&m).apply(&ball_mobius_apply(&m, &z).unwrap()).unwrap();
        assert!(dist(back.value(), z.value()) < 1e-12);
        let inv = ball_mobius(&m.a);
        let invol = inv.apply(&inv.apply(&z).unwrap()).unwrap();
        assert!(dist(invol.value(), z.value()) < 1e-12);
    }
}

#[test]
fn metric_matches_distance_difference_quotients() {
    let h = 1e-6;
    let base = BallPoint::from_reals(&[0.5, 0.0]).unwrap();
    for (v, expected) in [([1.0, 0.0], 4.0 / 3.0), ([0.0, 1.0], 1.0 / 0.75f64.sqrt())] {
        let moved = BallPoint::new(vec![c(0.5 + h * v[0]), c(h * v[1])]).unwrap();
        let fd = kobayashi_distance(&base, &moved).unwrap() / h;
        let t = BallTangent::new(base.clone(), vec![c(v[0]), c(v[1])]).unwrap();
        assert!((fd - expected).abs() < 1e-5);
        assert!((kobayashi_metric(&t) - expected).abs() < 1e-14);
    }
    let t1 = BallTangent::new(BallPoint::from_reals(&[0.5]).unwrap(), vec![c(1.0)]).unwrap();
    let td = DiscTangent::new(DiscPoint::from_re_im(0.5, 0.0).unwrap(), c(1.0)).unwrap();
    assert!((kobayashi_metric(&t1) - poincare_metric(&td)).abs() < 1e-15);

    let mut rng = stream_rng(24, 0);
    for k in 0..500 {
        let n = 2 + k % 2;
        let mut z = random_point(&mut rng, n, 3.0);
        if z.norm() > 0.9 {
            z = BallPoint::from_vector(z.value() * c(0.9 / z.norm())).unwrap();
        }
        let v = DVector::from_vec(unit_vector(&mut rng, n));
        let hh = 1e-8;
        let moved = BallPoint::from_vector(z.value() + &v * c(hh)).unwrap();
        let fd = kobayashi_distance(&z, &moved).unwrap() / hh;
        let t = BallTangent::new(z.clone(), v.iter().copied().collect()).unwrap();
        assert!((fd - kobayashi_metric(&t)).abs() < 1e-5);
    }
}

#[test]
fn geodesic_through_pins_both_points() {
    let mut rng = stream_rng(25, 0);
    for k in 0..500 {
        let n = 2 + k % 2;
        let z = random_point(&mut rng, n, 3.0);
        let w = random_point(&mut rng, n, 3.0);
        let d = geodesic_through(&z, &w).unwrap();
        assert!(d.t_param() > 0.0 && d.t_param() < 1.0);
        assert!((d.t_param() - kobayashi_distance(&z, &w).unwrap().tanh()).abs() < 1e-12);
        let at_zero = d.phi(&DiscPoint::origin());
        let at_t = d.phi(&DiscPoint::from_re_im(d.t_param(), 0.0).unwrap());
        assert!(dist(at_zero.value(), z.value()) < 1e-12);
        assert!(dist(at_t.value(), w.value()) < 1e-12);
    }
}

#[test]
fn geodesics_are_isometric_embeddings() {
    let mut rng = stream_rng(26, 0);
    for k in 0..500 {
        let n = 2 + k % 2;
        let d = geodesic_through(&random_point(&mut rng, n, 2.0), &random_point(&mut rng, n, 2.0)).unwrap();
        let zeta = DiscPoint::new(disc_point_by_depth(&mut rng, 3.0)).unwrap();
        let eta = DiscPoint::new(disc_point_by_depth(&mut rng, 3.0)).unwrap();
        let ball = kobayashi_distance(&d.phi(&zeta), &d.phi(&eta)).unwrap();
        let disc = poincare_distance(&zeta, &eta);
        assert!((ball - disc).abs() < 1e-11, "{ball} vs {disc}");
    }
}

#[test]
fn geodesic_tangent_is_parallel_to_the_input() {
    let mut rng = stream_rng(27, 0);
    let h = 1e-7;
    for k in 0..200 {
        let n = 2 + k % 2;
        let base = random_point(&mut rng, n, 2.0);
        let v: Vec<Complex64> = unit_vector(&mut rng, n).into_iter().map(|x| x * 0.7).collect();
        let d = geodesic_tangent(&BallTangent::new(base.clone(), v.clone()).unwrap()).unwrap();
        assert!(dist(d.phi(&DiscPoint::origin()).value(), base.value()) < 1e-12);
        let fd = (d.phi_value(c(h)) - d.phi_value(c(-h))) / c(2.0 * h);
        // real angle between fd and v viewed in R^{2n}
        let v = DVector::from_vec(v);
        let cos = v.dotc(&fd).re / (v.norm() * fd.norm());
        let angle = cos.clamp(-1.0, 1.0).acos();
        assert!(angle < 1e-6, "angle {angle}");
    }
}

#[test]
fn tangent_and_two_point_geodesics_share_their_image() {
    let mut rng = stream_rng(28, 0);
    for k in 0..20 {
        let n = 2 + k % 2;
        let base = random_point(&mut rng, n, 2.0);
        let v = unit_vector(&mut rng, n);
        let d1 = geodesic_tangent(&BallTangent::new(base.clone(), v).unwrap()).unwrap();
        let d2 = geodesic_through(&base, &d1.phi(&DiscPoint::from_re_im(0.5, 0.0).unwrap())).unwrap();
        // every sampled point of φ₁(𝔻) lies on φ₂(𝔻) and vice versa: ρ₂ fixes it
        let mut gap: f64 = 0.0;
        for j in 0..100 {
            let zeta = DiscPoint::new(Complex64::from_polar(0.9 * (j as f64 / 99.0), 0.61 * j as f64)).unwrap();
            let p1 = d1.phi(&zeta);
            let p2 = d2.phi(&zeta);
            gap = gap.max(dist(d2.project(&p1).unwrap().value(), p1.value()));
            gap = gap.max(dist(d1.project(&p2).unwrap().value(), p2.value()));
        }
        assert!(gap < 1e-9, "hausdorff gap {gap}");
    }
}

#[test]
fn device_identities() {
    let mut rng = stream_rng(29, 0);
    for k in 0..200 {
        let n = 2 + k % 2;
        let d = geodesic_through(&random_point(&mut rng, n, 2.5), &random_point(&mut rng, n, 2.5)).unwrap();
        for _ in 0..10 {
            let zeta = DiscPoint::new(disc_point_by_depth(&mut rng, 3.0)).unwrap();
            let img = d.phi(&zeta);
            let back = device_left_inverse(&d, &img).unwrap();
            assert!((back.value() - zeta.value()).norm() < 1e-12);
            assert!(dist(device_project(&d, &img).unwrap().value(), img.value()) < 1e-12);

            let x = random_point(&mut rng, n, 3.0);
            let p = d.project(&x).unwrap();
            let pp = d.project(&p).unwrap();
            assert!(dist(p.value(), pp.value()) < 1e-12);

            let y = random_point(&mut rng, n, 3.0);
            let lhs = poincare_distance(&d.left_inverse(&x).unwrap(), &d.left_inverse(&y).unwrap());
            let rhs = kobayashi_distance(&x, &y).unwrap();
            assert!(lhs <= rhs + 1e-11);
        }
    }
}

#[test]
fn canonical_projection_fibers_are_affine() {
    let d = geodesic_tangent(&BallTangent::new(BallPoint::origin(2), vec![c(1.0), c(0.0)]).unwrap()).unwrap();
    // fibers of the canonical device are the vertical lines {z₁ = const}
    for k in 0..50 {
        let z1 = Complex64::from_polar(0.6 * k as f64 / 50.0, 0.3 * k as f64);
        let room = (1.0 - z1.norm_sqr()).sqrt();
        let a = BallPoint::new(vec![z1, Complex64::from_polar(0.9 * room, 0.1 * k as f64)]).unwrap();
        let b = BallPoint::new(vec![z1, Complex64::from_polar(0.4 * room, -1.3)]).unwrap();
        assert!(dist(d.project(&a).unwrap().value(), d.project(&b).unwrap().value()) < 1e-15);
    }
}

#[test]
fn bidisc_retractions_are_idempotent_and_fix_the_diagonal() {
    let mut rng = stream_rng(30, 0);
    for _ in 0..1000 {
        let z = disc_point_by_depth(&mut rng, 3.0);
        let w = disc_point_by_depth(&mut rng, 3.0);
        let (p1, p2) = bidisc_projections_demo(z, w).unwrap();
        assert_eq!(bidisc_projections_demo(p1.0, p1.1).unwrap().0, p1);
        assert_eq!(bidisc_projections_demo(p2.0, p2.1).unwrap().1, p2);
        let (d1, d2) = bidisc_projections_demo(z, z).unwrap();
        assert_eq!(d1, (z, z));
        assert_eq!(d2, (z, z));
    }
}

#[test]
fn boundary_distance_of_the_axis_slice() {
    let d = geodesic_tangent(&BallTangent::new(BallPoint::origin(2), vec![c(1.0), c(0.0)]).unwrap()).unwrap();
    let e1 = DVector::from_vec(vec![c(1.0), c(0.0)]);
    assert!(d.boundary_distance(&e1) < 1e-12);
    let e2 = DVector::from_vec(vec![c(0.0), c(1.0)]);
    assert!((d.boundary_distance(&e2) - 2f64.sqrt()).abs() < 1e-12);
    // brute force over the boundary circle for a random device
    let mut rng = stream_rng(31, 0);
    for _ in 0..20 {
        let dev = geodesic_through(&random_point(&mut rng, 2, 2.0), &random_point(&mut rng, 2, 2.0)).unwrap();
        let gap = |angle: f64| dist(&dev.phi_value(Complex64::from_polar(1.0, angle)), &e1);
        let step = std::f64::consts::TAU / 20000.0;
        let coarse = (0..20000).map(|k| k as f64 * step).fold(0.0, |best, a| if gap(a) < gap(best) { a } else { best });
        // golden-section refinement of the coarse minimizer along the boundary circle
        let (mut lo, mut hi) = (coarse - step, coarse + step);
        for _ in 0..200 {
            let m1 = lo + (hi - lo) * 0.382;
            let m2 = lo + (hi - lo) * 0.618;
            if gap(m1) < gap(m2) { hi = m2 } else { lo = m1 }
        }
        let brute = gap(0.5 * (lo + hi));
        assert!((dev.boundary_distance(&e1) - brute).abs() < 1e-6, "{} {}", dev.boundary_distance(&e1), brute);
    }
}
