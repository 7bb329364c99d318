use nalgebra::{DMatrix, DVector, Matrix6, Vector3, Vector6};

use super::kinematics::{cross_force, Kinematics};

impl Kinematics<'_> {
    /// Composite-rigid-body mass matrix.
    pub fn mass_matrix(&self) -> DMatrix<f64> {
        let n = self.model.dof();
        let mut composite: Vec<Matrix6<f64>> = self.link_inertia.clone();
        for joint in self.model.joints.iter().rev() {
            let ic = composite[joint.child];
            composite[joint.parent] += ic;
        }
        let mut m = DMatrix::zeros(n + 6, n + 6);
        let psi = &self.base_axes;
        let base_block = psi.transpose() * composite[self.model.base] * psi;
        m.view_mut((0, 0), (6, 6)).copy_from(&base_block);
        for (j, joint) in self.model.joints.iter().enumerate() {
            let force = composite[joint.child] * self.joint_axis[j];
            m[(6 + j, 6 + j)] = self.joint_axis[j].dot(&force);
            for &k in &self.model.support[joint.parent] {
                let v = self.joint_axis[k].dot(&force);
                m[(6 + j, 6 + k)] = v;
                m[(6 + k, 6 + j)] = v;
            }
            let base_col = psi.transpose() * force;
            for c in 0..6 {
                m[(c, 6 + j)] = base_col[c];
                m[(6 + j, c)] = base_col[c];
            }
        }
        m
    }

    /// `C(q, nu) nu + G(q)` by recursive Newton-Euler at zero `nu_dot`.
    pub fn bias_forces(&self, gravity: &Vector3<f64>) -> DVector<f64> {
        let n = self.model.dof();
        let g = Vector6::new(0.0, 0.0, 0.0, -gravity.x, -gravity.y, -gravity.z);
        let mut force: Vec<Vector6<f64>> = (0..self.model.links.len())
            .map(|i| {
                let v = &self.link_velocity[i];
                let iv = self.link_inertia[i] * v;
                self.link_inertia[i] * (self.link_bias[i] + g) + cross_force(v, &iv)
            })
            .collect();
        let mut h = DVector::zeros(n + 6);
        for (j, joint) in self.model.joints.iter().enumerate().rev() {
            h[6 + j] = self.joint_axis[j].dot(&force[joint.child]);
            let fc = force[joint.child];
            force[joint.parent] += fc;
        }
        let base = self.base_axes.transpose() * force[self.model.base];
        h.rows_mut(0, 6).copy_from(&base);
        h
    }

    /// Gravity-only term `G(q)`.
    pub fn gravity_forces(&self, gravity: &Vector3<f64>) -> DVector<f64> {
        let still = self.state.clone_at_rest();
        let kin = Kinematics::new(self.model, &still).expect("state already validated");
        kin.bias_forces(gravity)
    }

    /// Kinetic energy `nu' M nu / 2`.
    pub fn kinetic_energy(&self) -> f64 {
        self.link_velocity
            .iter()
            .zip(&self.link_inertia)
            .map(|(v, i)| 0.5 * v.dot(&(i * v)))
            .sum()
    }
}

impl super::RobotState {
    pub(crate) fn clone_at_rest(&self) -> Self {
        let mut out = self.clone();
        out.base_linear_velocity = Vector3::zeros();
        out.base_angular_velocity = Vector3::zeros();
        out.joint_velocities.fill(0.0);
        out
    }
}
