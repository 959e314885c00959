//! Absolute-pose objective from the stacked ray equations `αᵢ vᵢ + cᵢ = R pᵢ + t`,
//! with the per-ray depths `αᵢ` eliminated by least squares while `t` stays explicit.
//!
//! Writing the stacked system as `A x = W b - w` with `x = [α; t]`, the depths are
//! `α = U (W b - w)` where `U` is the top `N` rows of `(AᵀA)⁻¹Aᵀ`. `AᵀA` has an arrow
//! shape (diagonal depth block, 3-column border), so `U` is never formed densely: every
//! 3-vector block `u_ij` has the closed form
//!
//! `u_ij = (δ_ij / dᵢ + vᵢᵀ S⁻¹ v_j / (dᵢ d_j)) v_j - S⁻¹ vᵢ / dᵢ`
//!
//! with `dᵢ = vᵢᵀvᵢ` and Schur complement `S = N I - Σ v_j v_jᵀ / d_j`.

use nalgebra::{DMatrix, SMatrix, SymmetricEigen};

use crate::error::PoseError;
use crate::geometry::{Mat3, Translation, Vec3, Vec9};
use crate::gpnp::PointRayCorrespondence;
use crate::objective::QuadraticPoseForm;

const RANK_TOL: f64 = 1e-10;

/// Structured representation of the depth rows `U` of the stacked pseudo-inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct UpnpFactorization {
    bearings: Vec<Vec3>,
    inv_norms: Vec<f64>,
    schur_inv: Mat3,
}

impl UpnpFactorization {
    pub fn len(&self) -> usize {
        self.bearings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bearings.is_empty()
    }

    pub fn schur_inverse(&self) -> &Mat3 {
        &self.schur_inv
    }

    /// The 3-vector block `u_ij` (row `i` of `U`, columns `3j..3j+3`).
    pub fn u_block(&self, i: usize, j: usize) -> Vec3 {
        let vi = &self.bearings[i];
        let vj = &self.bearings[j];
        let di = self.inv_norms[i];
        let dj = self.inv_norms[j];
        let s_vi = self.schur_inv * vi;
        let delta = if i == j { di } else { 0.0 };
        vj * (delta + s_vi.dot(vj) * di * dj) - s_vi * di
    }

    /// Dense `N x 3N` matrix `U`. Quadratic in memory; meant for inspection and tests.
    pub fn u_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut u = DMatrix::zeros(n, 3 * n);
        for i in 0..n {
            for j in 0..n {
                let b = self.u_block(i, j);
                for k in 0..3 {
                    u[(i, 3 * j + k)] = b[k];
                }
            }
        }
        u
    }

    /// Least-squares depths of every ray at rotation `R`, in O(N).
    pub fn depths(&self, corrs: &[PointRayCorrespondence], rotation: &Mat3) -> Vec<f64> {
        let ys: Vec<Vec3> = corrs.iter().map(|c| rotation * c.point - c.ray.offset()).collect();
        let sum_y: Vec3 = ys.iter().sum();
        let weighted: Vec3 = self
            .bearings
            .iter()
            .zip(&self.inv_norms)
            .zip(&ys)
            .map(|((v, d), y)| v * (v.dot(y) * d))
            .sum();
        let rhs = weighted - sum_y;
        self.bearings
            .iter()
            .zip(&self.inv_norms)
            .zip(&ys)
            .map(|((v, d), y)| d * (v.dot(y) + (self.schur_inv * v).dot(&rhs)))
            .collect()
    }
}

pub fn build_upnp_factorization(corrs: &[PointRayCorrespondence]) -> Result<UpnpFactorization, PoseError> {
    if corrs.is_empty() {
        return Err(PoseError::EmptyData);
    }
    let n = corrs.len();
    let bearings: Vec<Vec3> = corrs.iter().map(|c| *c.ray.bearing()).collect();
    let inv_norms: Vec<f64> = bearings.iter().map(|v| 1.0 / v.norm_squared()).collect();
    let mut schur = Mat3::identity() * n as f64;
    for (v, d) in bearings.iter().zip(&inv_norms) {
        schur -= v * v.transpose() * *d;
    }
    let eig = SymmetricEigen::new(schur);
    let min_eigenvalue = eig.eigenvalues.min();
    if !(min_eigenvalue >= RANK_TOL) {
        return Err(PoseError::RankDeficientSystem { min_eigenvalue });
    }
    let schur_inv =
        eig.eigenvectors * Mat3::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l)) * eig.eigenvectors.transpose();
    Ok(UpnpFactorization { bearings, inv_norms, schur_inv })
}

/// Joint least-squares depth of ray `i`. Does not depend on `t`.
pub fn upnp_depth(
    fact: &UpnpFactorization,
    corrs: &[PointRayCorrespondence],
    i: usize,
    rotation: &Mat3,
    _translation: &Translation,
) -> f64 {
    corrs
        .iter()
        .enumerate()
        .map(|(j, c)| fact.u_block(i, j).dot(&(rotation * c.point - c.ray.offset())))
        .sum()
}

/// Residual `αᵢ vᵢ + cᵢ - R pᵢ - t` with the eliminated depth.
pub fn upnp_residual(
    fact: &UpnpFactorization,
    corrs: &[PointRayCorrespondence],
    i: usize,
    rotation: &Mat3,
    translation: &Translation,
) -> Vec3 {
    let alpha = upnp_depth(fact, corrs, i, rotation, translation);
    let c = &corrs[i];
    c.ray.bearing() * alpha + c.ray.offset() - rotation * c.point - translation
}

pub fn build_upnp_form(corrs: &[PointRayCorrespondence]) -> Result<QuadraticPoseForm, PoseError> {
    let fact = build_upnp_factorization(corrs)?;
    Ok(build_upnp_form_with(&fact, corrs))
}

/// Assembles the form from an existing factorization in O(N).
///
/// With `αᵢ = gᵢᵀ r - hᵢ`, the residual is `Gᵢ r + dᵢ - t` where
/// `Gᵢ = vᵢ gᵢᵀ - (pᵢᵀ ⊗ I)` and `dᵢ = cᵢ - hᵢ vᵢ`.
pub fn build_upnp_form_with(fact: &UpnpFactorization, corrs: &[PointRayCorrespondence]) -> QuadraticPoseForm {
    let s_inv = fact.schur_inv;
    // K = Σ (p_j ⊗ v_j) v_jᵀ / d_j, P = Σ p_j, L = Σ v_j (v_jᵀ c_j) / d_j, C = Σ c_j
    let mut k = SMatrix::<f64, 9, 3>::zeros();
    let mut p_sum = Vec3::zeros();
    let mut l_sum = Vec3::zeros();
    let mut c_sum = Vec3::zeros();
    for ((corr, v), d) in corrs.iter().zip(&fact.bearings).zip(&fact.inv_norms) {
        k += kron3(&corr.point, v) * v.transpose() * *d;
        p_sum += corr.point;
        l_sum += v * (v.dot(corr.ray.offset()) * d);
        c_sum += corr.ray.offset();
    }
    let lc = l_sum - c_sum;

    let mut form = QuadraticPoseForm::zeros();
    for ((corr, v), d) in corrs.iter().zip(&fact.bearings).zip(&fact.inv_norms) {
        let s_v = s_inv * v;
        let g = (kron3(&corr.point, v) + k * s_v - kron3(&p_sum, &s_v)) * *d;
        let h = (v.dot(corr.ray.offset()) + s_v.dot(&lc)) * d;

        let mut big_g = v * g.transpose();
        for j in 0..3 {
            for i in 0..3 {
                big_g[(i, 3 * j + i)] -= corr.point[j];
            }
        }
        let dv = corr.ray.offset() - v * h;
        form.m_rr += big_g.transpose() * big_g;
        form.v_r += 2.0 * big_g.transpose() * dv;
        form.m_tr -= 2.0 * big_g;
        form.v_t -= 2.0 * dv;
        form.c += dv.dot(&dv);
    }
    form.m_tt = Mat3::identity() * corrs.len() as f64;
    form
}

/// `a ⊗ b` for 3-vectors; `(pᵀ ⊗ uᵀ) vec(R) = uᵀ R p`.
fn kron3(a: &Vec3, b: &Vec3) -> Vec9 {
    let mut out = Vec9::zeros();
    for i in 0..3 {
        for j in 0..3 {
            out[3 * i + j] = a[i] * b[j];
        }
    }
    out
}
