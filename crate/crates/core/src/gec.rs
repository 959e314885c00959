//! Generalized epipolar constraint objective for relative pose between two
//! (possibly non-central) cameras observed through Plücker rays.
//!
//! For a ray `l₁` in frame 1 and its match `l₂` in frame 2, the rays intersect iff
//! `l₁ᵀ [[E, R], [R, 0]] l₂ = 0` with `E = [t]ₓ R`. Vectorizing gives `aᵀ v = 0` with
//! `v = [vec(E); vec(R)]`, and the objective is `F = vᵀ M v`, `M = Σ a aᵀ`.

use nalgebra::{SMatrix, SVector};

use crate::error::PoseError;
use crate::geometry::{kron, skew, vec9, Mat3, PlueckerLine, Translation, Vec3};
use crate::objective::Objective;

pub type Vec18 = SVector<f64, 18>;
pub type Mat18 = SMatrix<f64, 18, 18>;

/// A ray seen in frame 1 matched to a ray seen in frame 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayCorrespondence {
    pub line1: PlueckerLine,
    pub line2: PlueckerLine,
}

impl RayCorrespondence {
    pub fn new(line1: PlueckerLine, line2: PlueckerLine) -> Self {
        RayCorrespondence { line1, line2 }
    }
}

/// Accumulated `M = Σ aᵢ aᵢᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GecForm {
    pub m: Mat18,
    pub count: usize,
}

/// The 6x6 matrix `[[E, R], [R, 0]]` with `E = [t]ₓ R`.
pub fn epipolar_block_matrix(rotation: &Mat3, translation: &Translation) -> SMatrix<f64, 6, 6> {
    let e = skew(translation) * rotation;
    let mut f = SMatrix::<f64, 6, 6>::zeros();
    f.fixed_view_mut::<3, 3>(0, 0).copy_from(&e);
    f.fixed_view_mut::<3, 3>(0, 3).copy_from(rotation);
    f.fixed_view_mut::<3, 3>(3, 0).copy_from(rotation);
    f
}

/// The stacked unknown `v = [vec([t]ₓ R); vec(R)]`.
pub fn stacked_unknowns(rotation: &Mat3, translation: &Translation) -> Vec18 {
    let mut v = Vec18::zeros();
    v.fixed_rows_mut::<9>(0).copy_from(&vec9(&(skew(translation) * rotation)));
    v.fixed_rows_mut::<9>(9).copy_from(&vec9(rotation));
    v
}

/// Coefficient vector `a` with `aᵀ v = l₁ᵀ F l₂`.
///
/// `k = l₂ ⊗ l₁` pairs with `vec(F)`. For column j of `F`, entries `6j..6j+3` multiply
/// `E(:, j)` and entries `6j+3..6j+6` multiply `R(:, j)` (lower-left block); the
/// upper-right block contributes `R(:, j)` again at `18+6j..18+6j+3`. Entries hitting
/// the zero block are dropped.
pub fn build_gec_vector(corr: &RayCorrespondence) -> Vec18 {
    let l1 = corr.line1.to_vector();
    let l2 = corr.line2.to_vector();
    let k = kron(l2.as_slice(), l1.as_slice());
    let mut a = Vec18::zeros();
    for j in 0..3 {
        for i in 0..3 {
            a[3 * j + i] = k[6 * j + i];
            a[9 + 3 * j + i] = k[6 * j + 3 + i] + k[18 + 6 * j + i];
        }
    }
    a
}

pub fn build_gec_form(corrs: &[RayCorrespondence]) -> Result<GecForm, PoseError> {
    if corrs.is_empty() {
        return Err(PoseError::EmptyData);
    }
    let mut m = Mat18::zeros();
    for c in corrs {
        let a = build_gec_vector(c);
        m += a * a.transpose();
    }
    Ok(GecForm { m, count: corrs.len() })
}

impl GecForm {
    /// Number of correspondences folded into `m`.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

pub fn gec_value(form: &GecForm, rotation: &Mat3, translation: &Translation) -> f64 {
    let v = stacked_unknowns(rotation, translation);
    v.dot(&(form.m * v))
}

/// `2 (dvᵀ/dr) M v` with `dvᵀ/dr = [blockdiag(-[t]ₓ) | I₉]`.
pub fn gec_rotation_gradient(form: &GecForm, rotation: &Mat3, translation: &Translation) -> Mat3 {
    let w = form.m * stacked_unknowns(rotation, translation);
    let neg_tx = -skew(translation);
    let mut g = Mat3::zeros();
    for j in 0..3 {
        let we: Vec3 = w.fixed_rows::<3>(3 * j).into();
        let wr: Vec3 = w.fixed_rows::<3>(9 + 3 * j).into();
        g.set_column(j, &(2.0 * (neg_tx * we + wr)));
    }
    g
}

/// `2 (dvᵀ/dt) M v` with `dvᵀ/dt = [[r₁]ₓ [r₂]ₓ [r₃]ₓ 0]`.
pub fn gec_translation_gradient(form: &GecForm, rotation: &Mat3, translation: &Translation) -> Vec3 {
    let w = form.m * stacked_unknowns(rotation, translation);
    let mut g = Vec3::zeros();
    for j in 0..3 {
        let we: Vec3 = w.fixed_rows::<3>(3 * j).into();
        g += skew(&rotation.column(j).into()) * we;
    }
    2.0 * g
}

impl Objective for GecForm {
    fn value(&self, rotation: &Mat3, translation: &Translation) -> f64 {
        gec_value(self, rotation, translation)
    }

    fn rotation_gradient(&self, rotation: &Mat3, translation: &Translation) -> Mat3 {
        gec_rotation_gradient(self, rotation, translation)
    }

    fn translation_gradient(&self, rotation: &Mat3, translation: &Translation) -> Vec3 {
        gec_translation_gradient(self, rotation, translation)
    }
}
