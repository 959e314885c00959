//! Analytic gradients against central finite differences (h = 1e-6).

mod common;

use common::*;
use poseamm::geometry::Mat3;
use poseamm::objective::{quadratic_rotation_gradient, quadratic_translation_gradient};
use poseamm::{build_gec_form, build_gpnp_form, build_upnp_form, Objective, QuadraticPoseForm};
use rand::Rng;

const TOL: f64 = 1e-5;

fn check<O: Objective>(obj: &O, r: &Mat3, t: &poseamm::Vec3, label: &str) {
    let (er, et) = gradient_mismatch(obj, r, t);
    assert!(er < TOL, "{label}: rotation gradient off by {er:e}");
    assert!(et < TOL, "{label}: translation gradient off by {et:e}");
}

#[test]
fn gec_gradients() {
    let mut rng = rng(21);
    for _ in 0..100 {
        let n = rng.random_range(5..40);
        let form = build_gec_form(&random_ray_pairs(&mut rng, n)).unwrap();
        let r = *random_rotation(&mut rng).matrix();
        check(&form, &r, &uniform_vec(&mut rng, 2.0), "gec");
    }
}

#[test]
fn gpnp_gradients() {
    let mut rng = rng(22);
    for k in 0..100 {
        let n = rng.random_range(3..40);
        let form = build_gpnp_form(&random_point_rays(&mut rng, n, k % 2 == 0)).unwrap().form;
        let r = *random_rotation(&mut rng).matrix();
        check(&form, &r, &uniform_vec(&mut rng, 2.0), "gpnp");
    }
}

#[test]
fn upnp_gradients() {
    let mut rng = rng(23);
    for k in 0..100 {
        let n = rng.random_range(3..40);
        let form = build_upnp_form(&random_point_rays(&mut rng, n, k % 2 == 0)).unwrap();
        let r = *random_rotation(&mut rng).matrix();
        check(&form, &r, &uniform_vec(&mut rng, 2.0), "upnp");
    }
}

#[test]
fn gradients_hold_off_the_manifold() {
    // the rotation argument is an arbitrary matrix for the Euclidean gradient
    let mut rng = rng(24);
    let gec = build_gec_form(&random_ray_pairs(&mut rng, 20)).unwrap();
    let gpnp = build_gpnp_form(&random_point_rays(&mut rng, 20, false)).unwrap().form;
    for _ in 0..20 {
        let r = gaussian_mat(&mut rng);
        let t = gaussian_vec(&mut rng);
        check(&gec, &r, &t, "gec");
        check(&gpnp, &r, &t, "gpnp");
    }
}

#[test]
fn pure_rotation_quadratic_gradient() {
    let mut f = QuadraticPoseForm::zeros();
    f.m_rr = poseamm::objective::Mat9::identity();
    let mut rng = rng(25);
    let r = *random_rotation(&mut rng).matrix();
    let t = gaussian_vec(&mut rng);
    assert!((quadratic_rotation_gradient(&f, &r, &t) - 2.0 * r).norm() < 1e-14);
    assert_eq!(quadratic_translation_gradient(&f, &r, &t), poseamm::Vec3::zeros());
}
