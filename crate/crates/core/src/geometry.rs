//! Rotation, line and correspondence primitives shared by every objective.
//!
//! Matrices are stored column-major (nalgebra's native layout), so
//! `vec9(m)[3 * j + i] == m[(i, j)]` with zero-based indices.

use nalgebra::{DVector, Matrix3, SVector, Vector3};

use crate::error::PoseError;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Vec9 = SVector<f64, 9>;

/// Translation vector in scene units.
pub type Translation = Vec3;

/// World point in scene units.
pub type Point3 = Vec3;

const ORTHO_TOL: f64 = 1e-9;

/// A 3x3 rotation matrix, kept on SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Mat3::identity())
    }

    /// Wraps `m` after checking `m mᵀ = I` and `det m = 1` to 1e-9.
    pub fn from_matrix(m: Mat3) -> Result<Self, PoseError> {
        let err = orthogonality_error(&m);
        let det = m.determinant();
        if !err.is_finite() || err > ORTHO_TOL || (det - 1.0).abs() > ORTHO_TOL {
            return Err(PoseError::NotARotation { orthogonality: err, determinant: det });
        }
        Ok(Rotation(m))
    }

    /// Wraps `m` without checking. Callers guarantee it came from an SO(3)-preserving
    /// construction.
    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        Rotation(m)
    }

    /// Rotation by `angle` radians about the unit vector `axis`.
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        rodrigues_step(&(axis.normalize()), angle)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn into_inner(self) -> Mat3 {
        self.0
    }

    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0 * other.0)
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Rotation::identity()
    }
}

/// Frobenius norm of `m mᵀ - I`.
pub fn orthogonality_error(m: &Mat3) -> f64 {
    (m * m.transpose() - Mat3::identity()).norm()
}

/// Rigid transform estimated by every solver.
///
/// Absolute problems map world points into the camera frame (`R x + t`); relative
/// problems map frame-2 coordinates into frame 1.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub rotation: Rotation,
    pub translation: Translation,
}

impl Pose {
    pub fn new(rotation: Rotation, translation: Translation) -> Self {
        Pose { rotation, translation }
    }

    pub fn transform(&self, p: &Point3) -> Point3 {
        self.rotation.matrix() * p + self.translation
    }
}

/// A 3D line as (unit direction; moment), with `moment = point × direction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlueckerLine {
    direction: Vec3,
    moment: Vec3,
}

impl PlueckerLine {
    /// Line through `point` along `direction`. The direction is normalized.
    pub fn from_point_direction(point: &Vec3, direction: &Vec3) -> Result<Self, PoseError> {
        let n = direction.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(PoseError::InvalidLine("direction must be non-zero and finite".into()));
        }
        let d = direction / n;
        Ok(PlueckerLine { direction: d, moment: point.cross(&d) })
    }

    /// Builds a line from raw coordinates, rescaling both parts so the direction is
    /// unit length. Rejects lines whose Plücker constraint residual exceeds `tol`.
    pub fn from_coordinates(direction: &Vec3, moment: &Vec3, tol: f64) -> Result<Self, PoseError> {
        let n = direction.norm();
        if !(n > 0.0) || !n.is_finite() || !moment.iter().all(|v| v.is_finite()) {
            return Err(PoseError::InvalidLine("direction must be non-zero and finite".into()));
        }
        let n = unit_scale(n);
        let d = direction / n;
        let m = moment / n;
        let residual = d.dot(&m);
        if residual.abs() > tol {
            return Err(PoseError::PlueckerConstraint { residual });
        }
        // remove a component along d that is larger than rounding could explain
        let m = if residual.abs() > 1e-12 * (1.0 + m.norm()) { m - d * residual } else { m };
        Ok(PlueckerLine { direction: d, moment: m })
    }

    pub fn direction(&self) -> &Vec3 {
        &self.direction
    }

    pub fn moment(&self) -> &Vec3 {
        &self.moment
    }

    /// Stacked 6-vector `[direction; moment]`.
    pub fn to_vector(&self) -> SVector<f64, 6> {
        let mut out = SVector::<f64, 6>::zeros();
        out.fixed_rows_mut::<3>(0).copy_from(&self.direction);
        out.fixed_rows_mut::<3>(3).copy_from(&self.moment);
        out
    }

    /// Point on the line closest to the origin.
    pub fn closest_point_to_origin(&self) -> Vec3 {
        self.direction.cross(&self.moment)
    }
}

/// Norms within a few ulps of 1 are treated as exactly 1, so renormalizing a stored
/// unit vector leaves its bits alone and files reload unchanged.
fn unit_scale(n: f64) -> f64 {
    if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
        1.0
    } else {
        n
    }
}

/// A measured projection ray: unit bearing plus the ray's origin in the camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedRay {
    bearing: Vec3,
    offset: Vec3,
}

impl ObservedRay {
    /// Normalizes `bearing`; fails on a zero or non-finite direction.
    pub fn new(bearing: Vec3, offset: Vec3) -> Result<Self, PoseError> {
        let n = bearing.norm();
        if !(n > 0.0) || !n.is_finite() || !offset.iter().all(|v| v.is_finite()) {
            return Err(PoseError::InvalidLine("bearing must be non-zero and finite".into()));
        }
        Ok(ObservedRay { bearing: bearing / unit_scale(n), offset })
    }

    /// Central-camera ray through the origin.
    pub fn central(bearing: Vec3) -> Result<Self, PoseError> {
        Self::new(bearing, Vec3::zeros())
    }

    pub fn bearing(&self) -> &Vec3 {
        &self.bearing
    }

    pub fn offset(&self) -> &Vec3 {
        &self.offset
    }

    pub fn to_pluecker(&self) -> PlueckerLine {
        PlueckerLine { direction: self.bearing, moment: self.offset.cross(&self.bearing) }
    }
}

/// Cross-product matrix: `skew(v) * w == v × w`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`skew`] applied to the skew-symmetric part `(S - Sᵀ)/2`.
pub fn unskew(s: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (s[(2, 1)] - s[(1, 2)]),
        0.5 * (s[(0, 2)] - s[(2, 0)]),
        0.5 * (s[(1, 0)] - s[(0, 1)]),
    )
}

/// Exact rotation by `angle * |axis|` about `axis / |axis|`, i.e. `exp(angle * skew(axis))`.
///
/// Axes shorter than 1e-14 yield the identity.
pub fn rodrigues_step(axis: &Vec3, angle: f64) -> Rotation {
    let n = axis.norm();
    if n < 1e-14 {
        return Rotation::identity();
    }
    let k = skew(&(axis / n));
    let theta = angle * n;
    let m = Mat3::identity() + k * theta.sin() + k * k * (1.0 - theta.cos());
    Rotation(m)
}

/// Nearest rotation in Frobenius norm, via `B = U Σ Vᵀ`, `R = U diag(1, 1, det(U Vᵀ)) Vᵀ`.
pub fn project_to_so3(b: &Mat3) -> Result<Rotation, PoseError> {
    if !b.iter().all(|v| v.is_finite()) {
        return Err(PoseError::NonFiniteInput);
    }
    let svd = b.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(PoseError::AmbiguousProjection),
    };
    let mut sv = svd.singular_values;
    let mut u = u;
    let mut v_t = v_t;
    // nalgebra does not guarantee descending order
    sort_svd3(&mut sv, &mut u, &mut v_t);
    let det = (u * v_t).determinant();
    if det < 0.0 && (sv[1] - sv[2]).abs() <= 1e-12 {
        return Err(PoseError::AmbiguousProjection);
    }
    let d = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, det.signum()));
    Ok(Rotation(u * d * v_t))
}

fn sort_svd3(sv: &mut Vec3, u: &mut Mat3, v_t: &mut Mat3) {
    for i in 0..3 {
        for j in (i + 1)..3 {
            if sv[j] > sv[i] {
                sv.swap_rows(i, j);
                u.swap_columns(i, j);
                v_t.swap_rows(i, j);
            }
        }
    }
}

/// Column-major stacking of a 3x3 matrix.
pub fn vec9(m: &Mat3) -> Vec9 {
    Vec9::from_column_slice(m.as_slice())
}

/// Inverse of [`vec9`].
pub fn unvec9(v: &Vec9) -> Mat3 {
    Mat3::from_column_slice(v.as_slice())
}

/// Kronecker product of two column vectors: `out[q * i + j] = a[i] * b[j]`.
pub fn kron(a: &[f64], b: &[f64]) -> DVector<f64> {
    let q = b.len();
    let mut out = DVector::zeros(a.len() * q);
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[q * i + j] = ai * bj;
        }
    }
    out
}

/// The 3x9 matrix `xᵀ ⊗ Q`, satisfying `(xᵀ ⊗ Q) vec(R) = Q R x`.
pub fn kron_row_matrix(x: &Vec3, q: &Mat3) -> nalgebra::SMatrix<f64, 3, 9> {
    let mut out = nalgebra::SMatrix::<f64, 3, 9>::zeros();
    for j in 0..3 {
        out.fixed_view_mut::<3, 3>(0, 3 * j).copy_from(&(q * x[j]));
    }
    out
}
