//! Order-4 Taylor jets in one variable.
//!
//! A `Jet` carries a value and its first four derivatives; arithmetic
//! propagates them exactly (machine precision), so the analytic surface
//! families can expose derivatives through order four without any
//! differencing.

/// Value and derivatives f, f', f'', f''', f'''' at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub d: [f64; 5],
}

const BINOM: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0, 0.0],
    [1.0, 3.0, 3.0, 1.0, 0.0],
    [1.0, 4.0, 6.0, 4.0, 1.0],
];

impl Jet {
    /// The identity function evaluated at `x`.
    pub fn variable(x: f64) -> Jet {
        Jet {
            d: [x, 1.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn constant(c: f64) -> Jet {
        Jet {
            d: [c, 0.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn value(&self) -> f64 {
        self.d[0]
    }

    pub fn add(&self, o: &Jet) -> Jet {
        let mut d = [0.0; 5];
        for k in 0..5 {
            d[k] = self.d[k] + o.d[k];
        }
        Jet { d }
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        let mut d = [0.0; 5];
        for k in 0..5 {
            d[k] = self.d[k] - o.d[k];
        }
        Jet { d }
    }

    pub fn scale(&self, a: f64) -> Jet {
        let mut d = [0.0; 5];
        for k in 0..5 {
            d[k] = a * self.d[k];
        }
        Jet { d }
    }

    /// Leibniz product rule through order 4.
    pub fn mul(&self, o: &Jet) -> Jet {
        let mut d = [0.0; 5];
        for k in 0..5 {
            let mut acc = 0.0;
            for j in 0..=k {
                acc += BINOM[k][j] * self.d[j] * o.d[k - j];
            }
            d[k] = acc;
        }
        Jet { d }
    }

    /// Reciprocal, from (g·h)^{(k)} = δ_{k0} with g = 1/h.
    pub fn recip(&self) -> Jet {
        let h = &self.d;
        let mut g = [0.0; 5];
        g[0] = 1.0 / h[0];
        for k in 1..5 {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += BINOM[k][j] * h[j] * g[k - j];
            }
            g[k] = -acc / h[0];
        }
        Jet { d: g }
    }

    pub fn div(&self, o: &Jet) -> Jet {
        self.mul(&o.recip())
    }

    /// exp ∘ self, via e' = h' e.
    pub fn exp(&self) -> Jet {
        let h = &self.d;
        let mut e = [0.0; 5];
        e[0] = h[0].exp();
        // e^{(k)} = sum_{j=1..k} C(k-1, j-1) h^{(j)} e^{(k-j)}
        for k in 1..5 {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += BINOM[k - 1][j - 1] * h[j] * e[k - j];
            }
            e[k] = acc;
        }
        Jet { d: e }
    }

    /// sin ∘ self and cos ∘ self together (they feed each other).
    pub fn sin_cos(&self) -> (Jet, Jet) {
        let h = &self.d;
        let mut s = [0.0; 5];
        let mut c = [0.0; 5];
        s[0] = h[0].sin();
        c[0] = h[0].cos();
        for k in 1..5 {
            let mut sa = 0.0;
            let mut ca = 0.0;
            for j in 1..=k {
                sa += BINOM[k - 1][j - 1] * h[j] * c[k - j];
                ca += BINOM[k - 1][j - 1] * h[j] * s[k - j];
            }
            s[k] = sa;
            c[k] = -ca;
        }
        (Jet { d: s }, Jet { d: c })
    }

    pub fn sin(&self) -> Jet {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Jet {
        self.sin_cos().1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_jet_close(j: &Jet, expect: [f64; 5], tol: f64) {
        for k in 0..5 {
            assert!(
                (j.d[k] - expect[k]).abs() < tol,
                "order {k}: got {} want {}",
                j.d[k],
                expect[k]
            );
        }
    }

    #[test]
    fn sin_jet_derivatives() {
        let x = 0.7;
        let j = Jet::variable(x).sin();
        assert_jet_close(&j, [x.sin(), x.cos(), -x.sin(), -x.cos(), x.sin()], 1e-14);
    }

    #[test]
    fn composite_exp_of_negative_square() {
        // f = exp(-x^2): f' = -2x f, f'' = (4x^2 - 2) f, ...
        let x = 0.4;
        let xv = Jet::variable(x);
        let f = xv.mul(&xv).scale(-1.0).exp();
        let e = (-x * x_f64(x)).exp();
        fn x_f64(x: f64) -> f64 {
            x
        }
        let expect = [
            e,
            -2.0 * x * e,
            (4.0 * x * x - 2.0) * e,
            (-8.0 * x * x * x + 12.0 * x) * e,
            (16.0 * x.powi(4) - 48.0 * x * x + 12.0) * e,
        ];
        assert_jet_close(&f, expect, 1e-12);
    }

    #[test]
    fn reciprocal_jet() {
        // f = 1/(1+x): f^{(k)} = (-1)^k k! / (1+x)^{k+1}
        let x = 0.3;
        let f = Jet::variable(x).add(&Jet::constant(1.0)).recip();
        let b = 1.0 + x;
        let expect = [
            1.0 / b,
            -1.0 / b.powi(2),
            2.0 / b.powi(3),
            -6.0 / b.powi(4),
            24.0 / b.powi(5),
        ];
        assert_jet_close(&f, expect, 1e-12);
    }
}
