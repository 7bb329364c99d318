use nalgebra::{Matrix4, Matrix4x2, SMatrix, Vector2, Vector4};

/// Exact zero-order-hold discretization of the planar LIPM
/// `p_ddot = (p - r) / b^2` with state `(p_x, p_y, v_x, v_y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipmDiscretization {
    pub b: f64,
    pub period: f64,
    pub a: Matrix4<f64>,
    pub input: Matrix4x2<f64>,
}

impl LipmDiscretization {
    pub fn new(b: f64, period: f64) -> Self {
        assert!(b > 0.0 && period > 0.0, "LIPM needs b > 0 and T > 0");
        let mut m = SMatrix::<f64, 6, 6>::zeros();
        m.fixed_view_mut::<4, 4>(0, 0).copy_from(&Self::continuous(b));
        let w = 1.0 / (b * b);
        m[(2, 4)] = -w;
        m[(3, 5)] = -w;
        let e = (m * period).exp();
        Self {
            b,
            period,
            a: e.fixed_view::<4, 4>(0, 0).into_owned(),
            input: e.fixed_view::<4, 2>(0, 4).into_owned(),
        }
    }

    /// Continuous state matrix; its eigenvalues are `+-1/b`, each twice.
    pub fn continuous(b: f64) -> Matrix4<f64> {
        let mut a = Matrix4::zeros();
        a[(0, 2)] = 1.0;
        a[(1, 3)] = 1.0;
        a[(2, 0)] = 1.0 / (b * b);
        a[(3, 1)] = 1.0 / (b * b);
        a
    }

    pub fn step(&self, p: &Vector2<f64>, v: &Vector2<f64>, r: &Vector2<f64>) -> (Vector2<f64>, Vector2<f64>) {
        let x = self.a * Vector4::new(p.x, p.y, v.x, v.y) + self.input * r;
        (Vector2::new(x[0], x[1]), Vector2::new(x[2], x[3]))
    }
}

/// One exact LIPM step of length `period`.
pub fn lipm_step(p: &Vector2<f64>, v: &Vector2<f64>, r: &Vector2<f64>, b: f64, period: f64) -> (Vector2<f64>, Vector2<f64>) {
    LipmDiscretization::new(b, period).step(p, v, r)
}
