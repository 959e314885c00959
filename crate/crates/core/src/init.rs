//! Linear initial guesses for the alternating solver.

use nalgebra::{DMatrix, SMatrix, SVector};

use crate::error::PoseError;
use crate::gec::{build_gec_vector, RayCorrespondence};
use crate::geometry::{project_to_so3, unskew, unvec9, Mat3, Pose, Rotation, Translation, Vec9};
use crate::objective::QuadraticPoseForm;

pub const MIN_RELATIVE_CORRESPONDENCES: usize = 17;

/// Relative tolerance on the gap between the two smallest singular values.
const NULLSPACE_GAP: f64 = 1e-10;
/// Relative conditioning threshold for the 12x12 stationarity system.
const SINGULAR_TOL: f64 = 1e-12;

pub fn init_identity() -> Pose {
    Pose::new(Rotation::identity(), Translation::zeros())
}

/// Linear 17-point estimate from the null vector of the stacked `aᵢᵀ` rows.
pub fn init_relative_17pt(corrs: &[RayCorrespondence]) -> Result<Pose, PoseError> {
    let n = corrs.len();
    if n < MIN_RELATIVE_CORRESPONDENCES {
        return Err(PoseError::InsufficientData { needed: MIN_RELATIVE_CORRESPONDENCES, got: n });
    }
    // pad to at least 18 rows so the thin SVD still returns the full right basis
    let rows = n.max(18);
    let mut a = DMatrix::<f64>::zeros(rows, 18);
    for (i, c) in corrs.iter().enumerate() {
        a.row_mut(i).copy_from(&build_gec_vector(c).transpose());
    }
    let (null, sv) = smallest_right_singular_vector(a)?;
    let s_max = sv[0].max(f64::MIN_POSITIVE);
    if (sv[16] - sv[17]).abs() <= NULLSPACE_GAP * s_max {
        return Err(PoseError::DegenerateNullspace);
    }
    let e_block = Vec9::from_iterator(null.iter().take(9).copied());
    let r_block = Vec9::from_iterator(null.iter().skip(9).copied());
    let (rotation, sign, scale) = rotation_from_scaled_block(&unvec9(&r_block))?;
    let e = unvec9(&e_block) * (sign / scale);
    let translation = unskew(&(e * rotation.matrix().transpose()));
    Ok(Pose::new(rotation, translation))
}

/// Stacked `[vec(E); vec(R)]` null-space residual `|A v| / |A|`, for diagnostics.
pub fn relative_nullspace_residual(corrs: &[RayCorrespondence], pose: &Pose) -> f64 {
    let v = crate::gec::stacked_unknowns(pose.rotation.matrix(), &pose.translation);
    let v = v / v.norm();
    let mut num = 0.0;
    let mut den = 0.0;
    for c in corrs {
        let a = build_gec_vector(c);
        num += a.dot(&v).powi(2);
        den += a.norm_squared();
    }
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// Absolute pose from the unconstrained stationary point of the quadratic form,
/// projected onto SO(3), followed by the exact translation at that rotation.
///
/// Central data make the form homogeneous in `(r, t)`; there the estimate comes from
/// the one-dimensional null space of the Hessian instead.
pub fn init_absolute_linear(form: &QuadraticPoseForm) -> Result<Pose, PoseError> {
    let mut h = SMatrix::<f64, 12, 12>::zeros();
    h.fixed_view_mut::<9, 9>(0, 0).copy_from(&(2.0 * form.m_rr));
    h.fixed_view_mut::<9, 3>(0, 9).copy_from(&form.m_tr.transpose());
    h.fixed_view_mut::<3, 9>(9, 0).copy_from(&form.m_tr);
    h.fixed_view_mut::<3, 3>(9, 9).copy_from(&(2.0 * form.m_tt));
    let mut rhs = SVector::<f64, 12>::zeros();
    rhs.fixed_rows_mut::<9>(0).copy_from(&(-form.v_r));
    rhs.fixed_rows_mut::<3>(9).copy_from(&(-form.v_t));

    if !h.iter().chain(rhs.iter()).all(|v| v.is_finite()) {
        return Err(PoseError::NonFiniteInput);
    }
    let (null, sv) = smallest_right_singular_vector(DMatrix::from_column_slice(12, 12, h.as_slice()))?;
    let s_max = sv[0];
    if !(s_max > 0.0) {
        return Err(PoseError::SingularSystem);
    }

    // central data carry no offsets, so every linear coefficient vanishes identically
    let homogeneous = rhs.norm() <= 1e-12 * s_max;
    let rotation = if homogeneous {
        if !(sv[10] > SINGULAR_TOL * s_max) {
            return Err(PoseError::SingularSystem);
        }
        let r_block = Vec9::from_iterator(null.iter().take(9).copied());
        rotation_from_scaled_block(&unvec9(&r_block))?.0
    } else {
        if !(sv[11] > SINGULAR_TOL * s_max) {
            return Err(PoseError::SingularSystem);
        }
        let sol = h.svd(true, true).solve(&rhs, 0.0).map_err(|_| PoseError::SingularSystem)?;
        let r = Vec9::from_iterator(sol.iter().take(9).copied());
        project_to_so3(&unvec9(&r))?
    };
    let t = form.closed_form_translation_at(rotation.matrix()).map_err(|_| PoseError::SingularSystem)?;
    Ok(Pose::new(rotation, t))
}

/// Picks the sign of `±B` whose nearest rotation agrees best with it, returning that
/// rotation, the sign, and the mean singular value of `B` as its scale.
fn rotation_from_scaled_block(b: &Mat3) -> Result<(Rotation, f64, f64), PoseError> {
    let scale = b.singular_values().mean();
    if !(scale > 0.0) {
        return Err(PoseError::DegenerateNullspace);
    }
    let mut best: Option<(Rotation, f64, f64)> = None;
    for sign in [1.0, -1.0] {
        let signed = b * sign;
        if let Ok(r) = project_to_so3(&signed) {
            let score = (signed.transpose() * r.matrix()).trace();
            if best.as_ref().is_none_or(|(_, _, s)| score > *s) {
                best = Some((r, sign, score));
            }
        }
    }
    let (r, sign, _) = best.ok_or(PoseError::AmbiguousProjection)?;
    Ok((r, sign, scale))
}

/// Right singular vector of the smallest singular value, and all singular values in
/// descending order. Expects at least as many rows as columns.
fn smallest_right_singular_vector(a: DMatrix<f64>) -> Result<(Vec<f64>, Vec<f64>), PoseError> {
    let cols = a.ncols();
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or(PoseError::DegenerateNullspace)?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    if sv.len() < cols {
        return Err(PoseError::DegenerateNullspace);
    }
    let last = *order.last().unwrap();
    let null: Vec<f64> = (0..cols).map(|k| v_t[(last, k)]).collect();
    Ok((null, sv))
}
