//! The objective contract consumed by the alternating solver, and the quadratic form
//! shared by both absolute-pose objectives.

use nalgebra::{SMatrix, SymmetricEigen};

use crate::error::PoseError;
use crate::geometry::{unvec9, vec9, Mat3, Rotation, Translation, Vec3, Vec9};

pub type Mat9 = SMatrix<f64, 9, 9>;
pub type Mat3x9 = SMatrix<f64, 3, 9>;

/// A pose objective `F(R, t)` with its Euclidean gradients.
///
/// Rotation arguments are plain matrices so the gradients can be probed off SO(3)
/// (finite differences, linear initializers).
pub trait Objective {
    fn value(&self, rotation: &Mat3, translation: &Translation) -> f64;

    /// `∇g(R)`: gradient with respect to the entries of `R`, shaped 3x3.
    fn rotation_gradient(&self, rotation: &Mat3, translation: &Translation) -> Mat3;

    /// `∇h(t)`: gradient with respect to `t`.
    fn translation_gradient(&self, rotation: &Mat3, translation: &Translation) -> Vec3;

    /// Exact minimizer over `t` at fixed `R`, when the objective has one in closed form.
    fn closed_form_translation(&self, _rotation: &Rotation) -> Option<Result<Translation, PoseError>> {
        None
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn value(&self, rotation: &Mat3, translation: &Translation) -> f64 {
        (**self).value(rotation, translation)
    }

    fn rotation_gradient(&self, rotation: &Mat3, translation: &Translation) -> Mat3 {
        (**self).rotation_gradient(rotation, translation)
    }

    fn translation_gradient(&self, rotation: &Mat3, translation: &Translation) -> Vec3 {
        (**self).translation_gradient(rotation, translation)
    }

    fn closed_form_translation(&self, rotation: &Rotation) -> Option<Result<Translation, PoseError>> {
        (**self).closed_form_translation(rotation)
    }
}

/// `F(R, t) = rᵀ M_rr r + v_rᵀ r + tᵀ M_tr r + tᵀ M_tt t + v_tᵀ t + c` with `r = vec(R)`.
///
/// Evaluation cost does not depend on how many correspondences were folded in.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPoseForm {
    pub m_rr: Mat9,
    pub v_r: Vec9,
    pub m_tr: Mat3x9,
    pub m_tt: Mat3,
    pub v_t: Vec3,
    pub c: f64,
}

impl QuadraticPoseForm {
    pub fn zeros() -> Self {
        QuadraticPoseForm {
            m_rr: Mat9::zeros(),
            v_r: Vec9::zeros(),
            m_tr: Mat3x9::zeros(),
            m_tt: Mat3::zeros(),
            v_t: Vec3::zeros(),
            c: 0.0,
        }
    }

    /// Checks symmetry of `M_rr`, `M_tt` and positive semi-definiteness of `M_tt`.
    pub fn check_invariants(&self) -> bool {
        let scale = 1.0 + self.m_rr.amax().max(self.m_tt.amax());
        let sym = (self.m_rr - self.m_rr.transpose()).amax() <= 1e-10 * scale
            && (self.m_tt - self.m_tt.transpose()).amax() <= 1e-10 * scale;
        let min_eig = SymmetricEigen::new(self.m_tt).eigenvalues.min();
        sym && min_eig >= -1e-10 * scale
    }

    pub fn value_vec(&self, r: &Vec9, t: &Vec3) -> f64 {
        r.dot(&(self.m_rr * r)) + self.v_r.dot(r) + t.dot(&(self.m_tr * r)) + t.dot(&(self.m_tt * t))
            + self.v_t.dot(t)
            + self.c
    }

    /// `2 M_rr r + v_r + M_trᵀ t`.
    pub fn rotation_gradient_vec(&self, r: &Vec9, t: &Vec3) -> Vec9 {
        2.0 * (self.m_rr * r) + self.v_r + self.m_tr.transpose() * t
    }

    /// `2 M_tt t + M_tr r + v_t`.
    pub fn translation_gradient_vec(&self, r: &Vec9, t: &Vec3) -> Vec3 {
        2.0 * (self.m_tt * t) + self.m_tr * r + self.v_t
    }

    /// Solves `2 M_tt t = -(M_tr r + v_t)`.
    pub fn closed_form_translation_at(&self, rotation: &Mat3) -> Result<Translation, PoseError> {
        let eig = SymmetricEigen::new(self.m_tt);
        let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
        if !(min > 1e-12) {
            return Err(PoseError::SingularTranslationSystem);
        }
        let rhs = -(self.m_tr * vec9(rotation) + self.v_t);
        let inv = eig.eigenvectors
            * Mat3::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / (2.0 * l)))
            * eig.eigenvectors.transpose();
        Ok(inv * rhs)
    }

    /// Adds another form term by term.
    pub fn accumulate(&mut self, other: &QuadraticPoseForm) {
        self.m_rr += other.m_rr;
        self.v_r += other.v_r;
        self.m_tr += other.m_tr;
        self.m_tt += other.m_tt;
        self.v_t += other.v_t;
        self.c += other.c;
    }
}

impl Objective for QuadraticPoseForm {
    fn value(&self, rotation: &Mat3, translation: &Translation) -> f64 {
        self.value_vec(&vec9(rotation), translation)
    }

    fn rotation_gradient(&self, rotation: &Mat3, translation: &Translation) -> Mat3 {
        unvec9(&self.rotation_gradient_vec(&vec9(rotation), translation))
    }

    fn translation_gradient(&self, rotation: &Mat3, translation: &Translation) -> Vec3 {
        self.translation_gradient_vec(&vec9(rotation), translation)
    }

    fn closed_form_translation(&self, rotation: &Rotation) -> Option<Result<Translation, PoseError>> {
        Some(self.closed_form_translation_at(rotation.matrix()))
    }
}

pub fn quadratic_value(form: &QuadraticPoseForm, rotation: &Mat3, translation: &Translation) -> f64 {
    form.value(rotation, translation)
}

pub fn quadratic_rotation_gradient(form: &QuadraticPoseForm, rotation: &Mat3, translation: &Translation) -> Mat3 {
    form.rotation_gradient(rotation, translation)
}

pub fn quadratic_translation_gradient(form: &QuadraticPoseForm, rotation: &Mat3, translation: &Translation) -> Vec3 {
    form.translation_gradient(rotation, translation)
}

pub fn closed_form_translation(form: &QuadraticPoseForm, rotation: &Rotation) -> Result<Translation, PoseError> {
    form.closed_form_translation_at(rotation.matrix())
}
