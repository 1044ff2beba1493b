//! Polynomial joint trajectories over the flight interval.
//!
//! Row `i` of the coefficient matrix holds joint `i`'s polynomial with
//! columns ordered from the highest power down to the constant term, so
//! `q(t) = Γ [tᵐ … t 1]ᵀ`. Time runs in seconds from liftoff.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::rbd::RobotModel;

pub const DEFAULT_DEGREE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMatrix {
    gamma: DMatrix<f64>,
    t_f: f64,
}

impl TrajectoryMatrix {
    pub fn new(gamma: DMatrix<f64>, t_f: f64) -> Result<Self> {
        if !(t_f > 0.0 && t_f.is_finite()) {
            return Err(Error::InvalidInput(format!("horizon t_f = {t_f} must be positive")));
        }
        if gamma.ncols() == 0 {
            return Err(Error::InvalidInput(
                "trajectory needs at least one coefficient column".into(),
            ));
        }
        Ok(Self { gamma, t_f })
    }

    /// Every joint holds `q` for the whole horizon.
    pub fn hold(q: &[f64], degree: usize, t_f: f64) -> Result<Self> {
        let mut gamma = DMatrix::zeros(q.len(), degree + 1);
        gamma.column_mut(degree).copy_from_slice(q);
        Self::new(gamma, t_f)
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn degree(&self) -> usize {
        self.gamma.ncols() - 1
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn n(&self) -> usize {
        self.gamma.nrows()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-9 * self.t_f.max(1.0);
        if t.is_finite() && t >= -slack && t <= self.t_f + slack {
            Ok(())
        } else {
            Err(Error::OutsideHorizon { t, t_f: self.t_f })
        }
    }

    /// Joint positions `q^d(t)`.
    pub fn eval(&self, t: f64) -> Result<DVector<f64>> {
        self.check_time(t)?;
        let mut out = DVector::zeros(self.n());
        self.eval_into(t, out.as_mut_slice());
        Ok(out)
    }

    /// Joint rates `q̇^d(t)`.
    pub fn eval_rate(&self, t: f64) -> Result<DVector<f64>> {
        self.check_time(t)?;
        let mut out = DVector::zeros(self.n());
        self.eval_rate_into(t, out.as_mut_slice());
        Ok(out)
    }

    pub(crate) fn eval_into(&self, t: f64, out: &mut [f64]) {
        let m = self.degree();
        for (i, q) in out.iter_mut().enumerate() {
            let mut acc = self.gamma[(i, 0)];
            for k in 1..=m {
                acc = acc * t + self.gamma[(i, k)];
            }
            *q = acc;
        }
    }

    pub(crate) fn eval_rate_into(&self, t: f64, out: &mut [f64]) {
        let m = self.degree();
        for (i, qd) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in 0..m {
                acc = acc * t + (m - k) as f64 * self.gamma[(i, k)];
            }
            *qd = acc;
        }
    }

    /// Positions and rates of the listed rows only; other entries of `q`
    /// and `qdot` are left untouched.
    pub(crate) fn eval_rows_into(&self, t: f64, rows: &[usize], q: &mut [f64], qdot: &mut [f64]) {
        let n = self.n();
        let m = self.degree();
        let coeffs = self.gamma.as_slice();
        for &i in rows {
            let (mut acc, mut rate) = (coeffs[i], 0.0);
            for k in 1..=m {
                rate = rate * t + acc;
                acc = acc * t + coeffs[k * n + i];
            }
            q[i] = acc;
            qdot[i] = rate;
        }
    }

    /// Coefficients of `q̇^d` in the same highest-power-first layout, n×m.
    pub fn derivative_coefficients(&self) -> DMatrix<f64> {
        let m = self.degree();
        let mut d = DMatrix::zeros(self.n(), m.max(1));
        for k in 0..m {
            let power = (m - k) as f64;
            for i in 0..self.n() {
                d[(i, k)] = power * self.gamma[(i, k)];
            }
        }
        d
    }
}

/// How optimizer variables map to polynomial coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeScaling {
    /// Variables are the raw coefficients in seconds.
    #[default]
    Seconds,
    /// Variables are coefficients of the polynomial in `τ = t / t_f`.
    Normalized,
}

/// The free coefficients exposed to the optimizer: every column of every
/// inertially significant joint, joint-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeVariableLayout {
    n: usize,
    degree: usize,
    dofs: Vec<usize>,
    scaling: TimeScaling,
}

impl FreeVariableLayout {
    pub fn new(n: usize, degree: usize, dofs: Vec<usize>, scaling: TimeScaling) -> Result<Self> {
        if let Some(&bad) = dofs.iter().find(|&&d| d >= n) {
            return Err(Error::InvalidInput(format!(
                "joint index {bad} out of range for n = {n}"
            )));
        }
        Ok(Self {
            n,
            degree,
            dofs,
            scaling,
        })
    }

    pub fn for_model(model: &RobotModel, degree: usize, scaling: TimeScaling) -> Self {
        Self {
            n: model.n(),
            degree,
            dofs: model.significant_dofs(),
            scaling,
        }
    }

    /// Number of optimizer variables.
    pub fn dim(&self) -> usize {
        self.dofs.len() * (self.degree + 1)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dofs(&self) -> &[usize] {
        &self.dofs
    }

    pub fn scaling(&self) -> TimeScaling {
        self.scaling
    }

    /// `(joint index, coefficient column)` of each variable in order.
    pub fn entries(&self) -> Vec<(usize, usize)> {
        self.dofs
            .iter()
            .flat_map(|&d| (0..=self.degree).map(move |c| (d, c)))
            .collect()
    }

    fn column_scale(&self, column: usize, t_f: f64) -> f64 {
        match self.scaling {
            TimeScaling::Seconds => 1.0,
            TimeScaling::Normalized => t_f.powi((self.degree - column) as i32),
        }
    }

    pub fn pack(&self, traj: &TrajectoryMatrix) -> Result<DVector<f64>> {
        check_len("trajectory rows", self.n, traj.n())?;
        check_len("trajectory degree", self.degree, traj.degree())?;
        let mut x = DVector::zeros(self.dim());
        for (k, (dof, col)) in self.entries().into_iter().enumerate() {
            x[k] = traj.gamma[(dof, col)] * self.column_scale(col, traj.t_f);
        }
        Ok(x)
    }

    /// Builds the full coefficient matrix: significant rows from `x`, frozen
    /// rows holding `holds`.
    pub fn unpack(&self, x: &[f64], holds: &[f64], t_f: f64) -> Result<TrajectoryMatrix> {
        check_len("optimizer variables", self.dim(), x.len())?;
        check_len("hold angles", self.n, holds.len())?;
        let mut gamma = DMatrix::zeros(self.n, self.degree + 1);
        gamma.column_mut(self.degree).copy_from_slice(holds);
        for &dof in &self.dofs {
            gamma[(dof, self.degree)] = 0.0;
        }
        let mut traj = TrajectoryMatrix::new(gamma, t_f)?;
        self.write_free_rows(x, &mut traj);
        Ok(traj)
    }

    /// Overwrites the significant rows of `traj` from `x`, leaving the
    /// frozen rows alone. Dimensions must already match.
    pub(crate) fn write_free_rows(&self, x: &[f64], traj: &mut TrajectoryMatrix) {
        let width = self.degree + 1;
        for (r, &dof) in self.dofs.iter().enumerate() {
            for col in 0..width {
                traj.gamma[(dof, col)] = x[r * width + col] / self.column_scale(col, traj.t_f);
            }
        }
    }
}

/// On-disk form of a trajectory: row-major coefficients plus metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaFile {
    pub degree: usize,
    pub t_f: f64,
    pub joint_names: Vec<String>,
    pub gamma: Vec<Vec<f64>>,
}

impl GammaFile {
    pub fn from_trajectory(traj: &TrajectoryMatrix, model: &RobotModel) -> Self {
        Self {
            degree: traj.degree(),
            t_f: traj.t_f(),
            joint_names: (0..model.n()).map(|d| model.dof_name(d).to_owned()).collect(),
            gamma: traj.gamma().row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }

    pub fn to_trajectory(&self) -> Result<TrajectoryMatrix> {
        let cols = self.degree + 1;
        if let Some(row) = self.gamma.iter().find(|r| r.len() != cols) {
            return Err(Error::Dimension {
                what: "gamma row",
                expected: cols,
                got: row.len(),
            });
        }
        check_len("gamma rows", self.joint_names.len(), self.gamma.len())?;
        let flat: Vec<f64> = self.gamma.iter().flatten().copied().collect();
        TrajectoryMatrix::new(DMatrix::from_row_slice(self.gamma.len(), cols, &flat), self.t_f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn power_sum(row: &[f64], t: f64) -> f64 {
        let m = row.len() - 1;
        row.iter().enumerate().map(|(k, c)| c * t.powi((m - k) as i32)).sum()
    }

    #[test]
    fn row_evaluation_matches_full() {
        let traj = TrajectoryMatrix::new(
            DMatrix::from_row_slice(3, 4, &[0.5, -1.0, 2.0, 0.1, 3.0, 0.2, -0.7, 1.5, -2.0, 0.0, 0.3, -0.4]),
            0.4,
        )
        .unwrap();
        let (mut q, mut qdot) = (vec![9.0; 3], vec![9.0; 3]);
        traj.eval_rows_into(0.3, &[0, 2], &mut q, &mut qdot);
        let (full, rate) = (traj.eval(0.3).unwrap(), traj.eval_rate(0.3).unwrap());
        for i in [0, 2] {
            assert!((q[i] - full[i]).abs() < 1e-14);
            assert!((qdot[i] - rate[i]).abs() < 1e-14);
        }
        assert_eq!((q[1], qdot[1]), (9.0, 9.0));
    }

    #[test]
    fn hold_is_constant() {
        let traj = TrajectoryMatrix::hold(&[0.3, -0.1], 3, 0.4).unwrap();
        for t in [0.0, 0.1, 0.4] {
            assert_eq!(traj.eval(t).unwrap().as_slice(), &[0.3, -0.1]);
            assert_eq!(traj.eval_rate(t).unwrap().as_slice(), &[0.0, 0.0]);
        }
    }

    #[test]
    fn cubic_monomial() {
        let traj = TrajectoryMatrix::new(DMatrix::from_row_slice(1, 4, &[1.0, 0.0, 0.0, 0.0]), 1.0).unwrap();
        assert_eq!(traj.eval(0.5).unwrap()[0], 0.125);
        assert_eq!(traj.eval_rate(0.5).unwrap()[0], 0.75);
    }

    #[test]
    fn outside_horizon_rejected() {
        let traj = TrajectoryMatrix::hold(&[0.0], 3, 0.3).unwrap();
        assert!(matches!(traj.eval(0.31), Err(Error::OutsideHorizon { .. })));
        assert!(matches!(traj.eval_rate(-0.01), Err(Error::OutsideHorizon { .. })));
        assert!(TrajectoryMatrix::hold(&[0.0], 3, 0.0).is_err());
    }

    #[test]
    fn layout_dimensions() {
        let l = FreeVariableLayout::new(12, 3, vec![1, 2, 3, 7, 8, 9], TimeScaling::Seconds).unwrap();
        assert_eq!(l.dim(), 24);
        let l = FreeVariableLayout::new(20, 3, (0..8).collect(), TimeScaling::Seconds).unwrap();
        assert_eq!(l.dim(), 32);
    }

    #[test]
    fn unpack_restores_frozen_holds() {
        let l = FreeVariableLayout::new(3, 2, vec![1], TimeScaling::Seconds).unwrap();
        let traj = l.unpack(&[1.0, 2.0, 3.0], &[0.5, 9.0, -0.5], 1.0).unwrap();
        assert_eq!(traj.gamma().row(0).iter().copied().collect::<Vec<_>>(), [0.0, 0.0, 0.5]);
        assert_eq!(traj.gamma().row(1).iter().copied().collect::<Vec<_>>(), [1.0, 2.0, 3.0]);
        assert!(l.unpack(&[1.0], &[0.0; 3], 1.0).is_err());
    }

    #[test]
    fn normalized_scaling_matches_tau_polynomial() {
        let l = FreeVariableLayout::new(1, 3, vec![0], TimeScaling::Normalized).unwrap();
        let x = [0.4, -1.0, 0.7, 0.2];
        let t_f = 0.31;
        let traj = l.unpack(&x, &[0.0], t_f).unwrap();
        for t in [0.0, 0.1, 0.2, t_f] {
            let tau = t / t_f;
            assert!((traj.eval(t).unwrap()[0] - power_sum(&x, tau)).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn eval_matches_power_sum(coeffs in prop::collection::vec(-5.0f64..5.0, 8), t_f in 0.1f64..2.0) {
            let traj = TrajectoryMatrix::new(DMatrix::from_row_slice(2, 4, &coeffs), t_f).unwrap();
            for s in 0..11 {
                let t = t_f * s as f64 / 10.0;
                let q = traj.eval(t).unwrap();
                for i in 0..2 {
                    let expect = power_sum(&coeffs[4 * i..4 * i + 4], t);
                    prop_assert!((q[i] - expect).abs() <= 1e-14 * (1.0 + expect.abs()) * 8.0);
                }
            }
        }

        #[test]
        fn rate_matches_central_difference(coeffs in prop::collection::vec(-5.0f64..5.0, 4), t in 0.1f64..0.9) {
            let traj = TrajectoryMatrix::new(DMatrix::from_row_slice(1, 4, &coeffs), 1.0).unwrap();
            let h = 1e-6;
            let fd = (traj.eval(t + h).unwrap()[0] - traj.eval(t - h).unwrap()[0]) / (2.0 * h);
            prop_assert!((traj.eval_rate(t).unwrap()[0] - fd).abs() < 1e-6);
        }

        #[test]
        fn derivative_coefficients_are_exact(coeffs in prop::collection::vec(-5.0f64..5.0, 5)) {
            let traj = TrajectoryMatrix::new(DMatrix::from_row_slice(1, 5, &coeffs), 1.0).unwrap();
            let d = traj.derivative_coefficients();
            prop_assert_eq!(d[(0, 0)], 4.0 * coeffs[0]);
            prop_assert_eq!(d[(0, 3)], coeffs[3]);
            for s in 0..5 {
                let t = s as f64 / 4.0;
                let from_coeffs = power_sum(d.row(0).iter().copied().collect::<Vec<_>>().as_slice(), t);
                prop_assert!((traj.eval_rate(t).unwrap()[0] - from_coeffs).abs() < 1e-12);
            }
        }

        #[test]
        fn pack_unpack_round_trip(x in prop::collection::vec(-3.0f64..3.0, 8), normalized in any::<bool>()) {
            let scaling = if normalized { TimeScaling::Normalized } else { TimeScaling::Seconds };
            let l = FreeVariableLayout::new(4, 3, vec![0, 2], scaling).unwrap();
            let holds = [0.1, 0.2, 0.3, 0.4];
            let traj = l.unpack(&x, &holds, 0.31).unwrap();
            let back = l.pack(&traj).unwrap();
            for (a, b) in back.iter().zip(&x) {
                prop_assert!((a - b).abs() <= 1e-14 * (1.0 + b.abs()));
            }
            prop_assert_eq!(traj.gamma()[(1, 3)], 0.2);
            prop_assert_eq!(traj.gamma()[(3, 3)], 0.4);
        }
    }
}
