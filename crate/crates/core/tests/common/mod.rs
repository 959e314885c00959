//! Random data and independent reference evaluators shared by the integration tests.
//!
//! The reference evaluators work from raw correspondences and generic dense algebra,
//! never from the assembled forms they are compared against.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use poseamm::geometry::{Mat3, ObservedRay, PlueckerLine, Rotation, Vec3};
use poseamm::{Objective, PointRayCorrespondence, RayCorrespondence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut impl Rng) -> Vec3 {
    Vec3::from_fn(|_, _| StandardNormal.sample(rng))
}

pub fn gaussian_mat(rng: &mut impl Rng) -> Mat3 {
    Mat3::from_fn(|_, _| StandardNormal.sample(rng))
}

pub fn uniform_vec(rng: &mut impl Rng, half: f64) -> Vec3 {
    Vec3::from_fn(|_, _| rng.random_range(-half..half))
}

pub fn random_rotation(rng: &mut impl Rng) -> Rotation {
    let axis = gaussian_vec(rng).normalize();
    Rotation::from_axis_angle(&axis, rng.random_range(0.0..std::f64::consts::PI))
}

/// Point/ray pairs with no geometric consistency, for algebraic comparisons.
pub fn random_point_rays(rng: &mut impl Rng, n: usize, central: bool) -> Vec<PointRayCorrespondence> {
    (0..n)
        .map(|_| {
            let point = uniform_vec(rng, 3.0);
            let offset = if central { Vec3::zeros() } else { uniform_vec(rng, 0.5) };
            PointRayCorrespondence::new(point, ObservedRay::new(gaussian_vec(rng), offset).unwrap())
        })
        .collect()
}

pub fn random_ray_pairs(rng: &mut impl Rng, n: usize) -> Vec<RayCorrespondence> {
    (0..n)
        .map(|_| {
            let l1 = PlueckerLine::from_point_direction(&uniform_vec(rng, 1.0), &gaussian_vec(rng)).unwrap();
            let l2 = PlueckerLine::from_point_direction(&uniform_vec(rng, 1.0), &gaussian_vec(rng)).unwrap();
            RayCorrespondence::new(l1, l2)
        })
        .collect()
}

fn cross_matrix(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// `Σ (l₁ᵀ F l₂)²` with `F = [[t×R, R], [R, 0]]`, written out per line pair.
pub fn gec_reference(corrs: &[RayCorrespondence], r: &Mat3, t: &Vec3) -> f64 {
    let e = cross_matrix(t) * r;
    corrs
        .iter()
        .map(|c| {
            let (d1, m1) = (c.line1.direction(), c.line1.moment());
            let (d2, m2) = (c.line2.direction(), c.line2.moment());
            let s = d1.dot(&(e * d2)) + d1.dot(&(r * m2)) + m1.dot(&(r * d2));
            s * s
        })
        .sum()
}

/// `Σ |(I - v vᵀ)(R x + t - c)|²` using the rejection `w - (w·v̂) v̂`.
pub fn gpnp_reference(corrs: &[PointRayCorrespondence], r: &Mat3, t: &Vec3) -> f64 {
    corrs
        .iter()
        .map(|c| {
            let v = c.ray.bearing().normalize();
            let w = r * c.point + t - c.ray.offset();
            (w - v * w.dot(&v)).norm_squared()
        })
        .sum()
}

/// Stacked system `α_i v_i - t = R p_i - c_i` as a dense `3N x (N+3)` matrix and rhs.
pub fn upnp_dense_system(corrs: &[PointRayCorrespondence], r: &Mat3) -> (DMatrix<f64>, DVector<f64>) {
    let n = corrs.len();
    let mut a = DMatrix::zeros(3 * n, n + 3);
    let mut b = DVector::zeros(3 * n);
    for (i, c) in corrs.iter().enumerate() {
        let rhs = r * c.point - c.ray.offset();
        for k in 0..3 {
            a[(3 * i + k, i)] = c.ray.bearing()[k];
            a[(3 * i + k, n + k)] = -1.0;
            b[3 * i + k] = rhs[k];
        }
    }
    (a, b)
}

/// Least-squares `[α; t]` of the stacked system via a dense SVD.
pub fn upnp_dense_solution(corrs: &[PointRayCorrespondence], r: &Mat3) -> DVector<f64> {
    let (a, b) = upnp_dense_system(corrs, r);
    a.svd(true, true).solve(&b, 1e-14).unwrap()
}

/// `Σ |α_i v_i + c_i - R p_i - t|²` with depths from the dense solver and the given `t`.
pub fn upnp_reference(corrs: &[PointRayCorrespondence], r: &Mat3, t: &Vec3) -> f64 {
    let x = upnp_dense_solution(corrs, r);
    corrs
        .iter()
        .enumerate()
        .map(|(i, c)| (c.ray.bearing() * x[i] + c.ray.offset() - r * c.point - t).norm_squared())
        .sum()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Central differences of `F` in each entry of `R` and of `t`.
pub fn finite_difference_gradients<O: Objective>(obj: &O, r: &Mat3, t: &Vec3, h: f64) -> (Mat3, Vec3) {
    let mut gr = Mat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut plus = *r;
            let mut minus = *r;
            plus[(i, j)] += h;
            minus[(i, j)] -= h;
            gr[(i, j)] = (obj.value(&plus, t) - obj.value(&minus, t)) / (2.0 * h);
        }
    }
    let mut gt = Vec3::zeros();
    for k in 0..3 {
        let mut plus = *t;
        let mut minus = *t;
        plus[k] += h;
        minus[k] -= h;
        gt[k] = (obj.value(r, &plus) - obj.value(r, &minus)) / (2.0 * h);
    }
    (gr, gt)
}

/// Worst normwise relative gradient mismatch against central differences.
pub fn gradient_mismatch<O: Objective>(obj: &O, r: &Mat3, t: &Vec3) -> (f64, f64) {
    let (fr, ft) = finite_difference_gradients(obj, r, t, 1e-6);
    let ar = obj.rotation_gradient(r, t);
    let at = obj.translation_gradient(r, t);
    let rel = |d: f64, n: f64| d / n.max(1e-12);
    (rel((ar - fr).norm(), ar.norm()), rel((at - ft).norm(), at.norm()))
}
