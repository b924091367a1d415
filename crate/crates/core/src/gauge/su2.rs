//! SU(2) elements as unit quaternions `a₀·I + i a·σ`.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2 {
    pub a0: f64,
    pub a: [f64; 3],
}

impl Su2 {
    pub const IDENTITY: Self = Self {
        a0: 1.0,
        a: [0.0; 3],
    };

    /// `exp(i v·σ) = cos|v| + i sin|v| (v/|v|)·σ`.
    pub fn exp_i(v: [f64; 3]) -> Self {
        let theta = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let s = if theta < 1e-8 {
            1.0 - theta * theta / 6.0
        } else {
            theta.sin() / theta
        };
        Self {
            a0: theta.cos(),
            a: [s * v[0], s * v[1], s * v[2]],
        }
    }

    /// Group product `self · other`.
    pub fn mul(self, o: Self) -> Self {
        let (a, b) = (self.a, o.a);
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let cr = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        Self {
            a0: self.a0 * o.a0 - dot,
            a: std::array::from_fn(|k| self.a0 * b[k] + o.a0 * a[k] - cr[k]),
        }
    }

    pub fn inverse(self) -> Self {
        Self {
            a0: self.a0,
            a: self.a.map(|x| -x),
        }
    }

    /// Determinant of the 2×2 matrix, `a₀² + |a|²`; one on the group.
    pub fn norm_sqr(self) -> f64 {
        self.a0 * self.a0 + self.a.iter().map(|x| x * x).sum::<f64>()
    }

    /// `½ Re tr U`.
    pub fn half_trace(self) -> f64 {
        self.a0
    }

    /// Complex 2×2 matrix as `(re, im)` pairs, row-major.
    pub fn matrix(self) -> [[(f64, f64); 2]; 2] {
        let [a1, a2, a3] = self.a;
        [
            [(self.a0, a3), (a2, a1)],
            [(-a2, a1), (self.a0, -a3)],
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn to_c(u: Su2) -> [[Complex64; 2]; 2] {
        u.matrix().map(|r| r.map(|(re, im)| Complex64::new(re, im)))
    }

    fn matmul(x: [[Complex64; 2]; 2], y: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
        std::array::from_fn(|i| std::array::from_fn(|j| x[i][0] * y[0][j] + x[i][1] * y[1][j]))
    }

    /// exp(i v·σ) by power series of the explicit matrix.
    fn series_exp(v: [f64; 3]) -> [[Complex64; 2]; 2] {
        let i = Complex64::i();
        let h = [
            [i * v[2], i * v[0] + v[1]],
            [i * v[0] - v[1], -i * v[2]],
        ];
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let mut term = [[one, zero], [zero, one]];
        let mut sum = term;
        for k in 1..40 {
            term = matmul(term, h).map(|r| r.map(|z| z / k as f64));
            for r in 0..2 {
                for c in 0..2 {
                    sum[r][c] += term[r][c];
                }
            }
        }
        sum
    }

    #[test]
    fn identity_and_inverse() {
        let u = Su2::exp_i([0.3, -0.7, 1.1]);
        let p = u.mul(u.inverse());
        assert!((p.a0 - 1.0).abs() < 1e-15 && p.a.iter().all(|x| x.abs() < 1e-15));
        assert_eq!(Su2::IDENTITY.mul(u), u);
    }

    #[test]
    fn long_products_stay_unitary() {
        let mut u = Su2::IDENTITY;
        for k in 0..1000 {
            let t = k as f64 * 0.37;
            u = u.mul(Su2::exp_i([0.1 * t.sin(), 0.2 * t.cos(), 0.05]));
        }
        assert!((u.norm_sqr() - 1.0).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn exponential_matches_series(v in proptest::array::uniform3(-2.0f64..2.0)) {
            let a = to_c(Su2::exp_i(v));
            let b = series_exp(v);
            for r in 0..2 {
                for c in 0..2 {
                    prop_assert!((a[r][c] - b[r][c]).norm() < 1e-12);
                }
            }
        }

        #[test]
        fn product_matches_matrix_product(
            v in proptest::array::uniform3(-2.0f64..2.0),
            w in proptest::array::uniform3(-2.0f64..2.0),
        ) {
            let (x, y) = (Su2::exp_i(v), Su2::exp_i(w));
            let q = to_c(x.mul(y));
            let m = matmul(to_c(x), to_c(y));
            for r in 0..2 {
                for c in 0..2 {
                    prop_assert!((q[r][c] - m[r][c]).norm() < 1e-13);
                }
            }
            // unitary with unit determinant
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            prop_assert!((det - Complex64::new(1.0, 0.0)).norm() < 1e-13);
        }
    }
}
