//! Point-to-ray distance objective for absolute pose with central or non-central
//! cameras.
//!
//! The residual of a world point `x` against the ray `(v, c)` is
//! `(I - v vᵀ)(R x + t - c)`; summing the squared residuals expands into a
//! [`QuadraticPoseForm`].

use crate::error::PoseError;
use crate::geometry::{kron_row_matrix, Mat3, ObservedRay, Point3, Translation, Vec3};
use crate::objective::QuadraticPoseForm;

/// A known world point matched to the ray it was observed along.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointRayCorrespondence {
    pub point: Point3,
    pub ray: ObservedRay,
}

impl PointRayCorrespondence {
    pub fn new(point: Point3, ray: ObservedRay) -> Self {
        PointRayCorrespondence { point, ray }
    }
}

/// Absolute-pose form together with a flag telling whether enough data went in.
#[derive(Debug, Clone, PartialEq)]
pub struct GpnpForm {
    pub form: QuadraticPoseForm,
    /// False with fewer than three correspondences.
    pub well_posed: bool,
}

/// `I - v vᵀ / vᵀv`, the projector onto the plane orthogonal to `v`.
pub fn orthogonal_projector(v: &Vec3) -> Mat3 {
    Mat3::identity() - v * v.transpose() / v.norm_squared()
}

pub fn gpnp_residual(corr: &PointRayCorrespondence, rotation: &Mat3, translation: &Translation) -> Vec3 {
    let q = orthogonal_projector(corr.ray.bearing());
    q * (rotation * corr.point + translation - corr.ray.offset())
}

pub fn build_gpnp_form(corrs: &[PointRayCorrespondence]) -> Result<GpnpForm, PoseError> {
    if corrs.is_empty() {
        return Err(PoseError::EmptyData);
    }
    let mut form = QuadraticPoseForm::zeros();
    for corr in corrs {
        let x = &corr.point;
        let c = corr.ray.offset();
        let i_v = orthogonal_projector(corr.ray.bearing());
        let q = i_v.transpose() * i_v;
        let a = kron_row_matrix(x, &i_v);
        form.m_rr += a.transpose() * a;
        // -2 (xᵀ ⊗ cᵀQ)ᵀ
        let cq = q.transpose() * c;
        for j in 0..3 {
            for i in 0..3 {
                form.v_r[3 * j + i] -= 2.0 * x[j] * cq[i];
            }
        }
        form.m_tr += 2.0 * kron_row_matrix(x, &q);
        form.m_tt += q;
        form.v_t -= 2.0 * q * c;
        form.c += c.dot(&(q * c));
    }
    Ok(GpnpForm { form, well_posed: corrs.len() >= 3 })
}
