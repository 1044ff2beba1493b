use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

/// Mass properties of a single link, expressed in the link frame.
///
/// The rotational inertia is taken about the link's center of mass, which
/// sits at `com_offset` from the link origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialInertia {
    pub mass: f64,
    pub com_offset: Vector3<f64>,
    pub inertia_about_com: Matrix3<f64>,
}

impl SpatialInertia {
    pub fn new(mass: f64, com_offset: Vector3<f64>, inertia_about_com: Matrix3<f64>) -> Self {
        Self {
            mass,
            com_offset,
            inertia_about_com,
        }
    }

    /// A frame with no mass, used for sole and hand frames.
    pub fn massless() -> Self {
        Self::new(0.0, Vector3::zeros(), Matrix3::zeros())
    }

    pub fn from_diagonal(mass: f64, com_offset: Vector3<f64>, ixx: f64, iyy: f64, izz: f64) -> Self {
        Self::new(mass, com_offset, Matrix3::from_diagonal(&Vector3::new(ixx, iyy, izz)))
    }

    /// Checks mass sign, symmetry, positive semidefiniteness and the
    /// triangle inequality on principal moments. Returns a short reason on
    /// failure.
    pub fn validate(&self) -> Result<(), String> {
        let m = self.mass;
        if !m.is_finite() || m < 0.0 {
            return Err(format!("mass {m} must be finite and non-negative"));
        }
        if !self.com_offset.iter().all(|v| v.is_finite()) {
            return Err("center of mass offset is not finite".into());
        }
        let i = &self.inertia_about_com;
        if !i.iter().all(|v| v.is_finite()) {
            return Err("inertia tensor is not finite".into());
        }
        for (label, v) in [("ixx", i[(0, 0)]), ("iyy", i[(1, 1)]), ("izz", i[(2, 2)])] {
            if v < 0.0 {
                return Err(format!("{label} < 0"));
            }
        }
        let scale = i.abs().max().max(f64::MIN_POSITIVE);
        let asym = (i - i.transpose()).abs().max();
        if asym > 1e-9 * scale {
            return Err(format!("inertia tensor is not symmetric (asymmetry {asym:e})"));
        }
        let sym = (i + i.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym).eigenvalues;
        let tol = 1e-12 * scale;
        if eig.iter().any(|&e| e < -tol) {
            return Err(format!(
                "inertia tensor is not positive semidefinite (eigenvalues {:?})",
                eig.as_slice()
            ));
        }
        let total: f64 = eig.iter().sum();
        for &e in eig.iter() {
            if e > total - e + tol {
                return Err("principal moments violate the triangle inequality".into());
            }
        }
        if m == 0.0 && i.abs().max() > 0.0 {
            return Err("massless frame carries rotational inertia".into());
        }
        Ok(())
    }
}

/// Skew-symmetric cross-product matrix: `skew(a) * b == a.cross(&b)`.
pub fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Inertia of a point mass at offset `d` about the origin: `m (|d|² I - d dᵀ)`.
#[inline]
pub fn point_mass_inertia(mass: f64, d: &Vector3<f64>) -> Matrix3<f64> {
    (Matrix3::identity() * d.norm_squared() - d * d.transpose()) * mass
}
