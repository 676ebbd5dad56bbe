use coamoeba_core::curve::{fiber_roots, jacobian_determinants, sample_curve, GridSpec};
use coamoeba_core::Polynomial;
use num_complex::Complex64;

const QUADRIC: &str =
    "(0.6-0.6i) + (0.35+1.9i)*w + (0.74+0.1i)*w^2 + (2.3+0.2i)*z + (0.4+0.54i)*z*w + (-1.5+0.53i)*z^2";

#[test]
fn far_fibers_keep_every_root() {
    let p = Polynomial::parse(QUADRIC).unwrap();
    for r in [1e4, 1e8, 1e12] {
        let z = Complex64::from_polar(r, 0.7);
        let roots = fiber_roots(&p, z).unwrap();
        assert_eq!(roots.len(), 2, "|z| = {r}");
        for w in roots {
            let ev = p.eval_log(z, w);
            assert!(ev.f.norm() <= 1e-12 * ev.scale, "|z| = {r}: residual {}", ev.f.norm() / ev.scale);
        }
    }
}

#[test]
fn every_sample_lies_on_the_curve() {
    let p = Polynomial::parse(QUADRIC).unwrap();
    let cloud = sample_curve(&p, &GridSpec::new(GridSpec::for_polynomial(&p).window, 40, 40).unwrap()).unwrap();
    assert_eq!(cloud.len(), 2 * 2 * 40 * 40);
    for q in cloud.points() {
        let ev = p.eval_log(q.z, q.w);
        assert!(ev.f.norm() <= 1e-10 * ev.scale);
    }
}

#[test]
fn tentacle_jacobians_match_slope() {
    let p = Polynomial::parse("1 + z^2*w + z*w^2 - 4*z*w").unwrap();
    let cloud = sample_curve(&p, &GridSpec::new(GridSpec::for_polynomial(&p).window, 30, 30).unwrap()).unwrap();
    let far = cloud.points().filter(|q| !q.singular && q.log()[0].abs() > 15.0);
    let mut n = 0;
    for q in far {
        let j = jacobian_determinants(&p, q, q.base, 1e-3).unwrap();
        let rel = (j.det_arg.abs() - j.im_m.abs()).abs() / j.im_m.abs();
        assert!(rel <= 1e-6, "rel {rel} at {:?}", q.log());
        assert!((j.det_arg - j.det_log).abs() <= 1e-9);
        n += 1;
    }
    assert!(n > 100);
}
