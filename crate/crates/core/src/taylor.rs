//! Truncated bivariate Taylor arithmetic.
//!
//! A [`Series2`] holds the Taylor coefficients of a function of `(S, T)`
//! about a base point, `sum c[i][j] dS^i dT^j` over `i + j <= order`. Bi-radial
//! fields are written as expressions in `S = |x|^2`, `T = |y|^2`, which keeps
//! every derivative even in `|x|` and `|y|`.

use std::ops::{Add, Mul, Neg, Sub};

pub const MAX_ORDER: usize = 7;
const W: usize = MAX_ORDER + 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Series2 {
    c: [[f64; W]; W],
    order: usize,
}

impl Series2 {
    pub fn zero(order: usize) -> Self {
        assert!(order <= MAX_ORDER, "series order {order} exceeds {MAX_ORDER}");
        Series2 { c: [[0.0; W]; W], order }
    }

    pub fn constant(v: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.c[0][0] = v;
        s
    }

    /// The variable `S` expanded about `s0`.
    pub fn var_s(s0: f64, order: usize) -> Self {
        let mut s = Self::constant(s0, order);
        if order > 0 {
            s.c[1][0] = 1.0;
        }
        s
    }

    /// The variable `T` expanded about `t0`.
    pub fn var_t(t0: f64, order: usize) -> Self {
        let mut s = Self::constant(t0, order);
        if order > 0 {
            s.c[0][1] = 1.0;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0][0]
    }

    /// Raw coefficient of `dS^i dT^j`.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if i + j > self.order {
            return f64::NAN;
        }
        self.c[i][j]
    }

    /// Partial derivative `d^{i+j} / dS^i dT^j` at the base point.
    pub fn partial(&self, i: usize, j: usize) -> f64 {
        self.coeff(i, j) * factorial(i) * factorial(j)
    }

    pub fn scale(mut self, k: f64) -> Self {
        self.for_each(|v| *v *= k);
        self
    }

    pub fn add_scalar(mut self, k: f64) -> Self {
        self.c[0][0] += k;
        self
    }

    fn for_each(&mut self, mut f: impl FnMut(&mut f64)) {
        for i in 0..=self.order {
            for j in 0..=self.order - i {
                f(&mut self.c[i][j]);
            }
        }
    }

    pub fn d_s(&self) -> Self {
        let mut r = Self::zero(self.order.saturating_sub(1));
        if self.order == 0 {
            return r;
        }
        for i in 0..=r.order {
            for j in 0..=r.order - i {
                r.c[i][j] = (i + 1) as f64 * self.c[i + 1][j];
            }
        }
        r
    }

    pub fn d_t(&self) -> Self {
        let mut r = Self::zero(self.order.saturating_sub(1));
        if self.order == 0 {
            return r;
        }
        for i in 0..=r.order {
            for j in 0..=r.order - i {
                r.c[i][j] = (j + 1) as f64 * self.c[i][j + 1];
            }
        }
        r
    }

    /// Drops coefficients above `order`.
    pub fn truncate(mut self, order: usize) -> Self {
        if order >= self.order {
            return self;
        }
        let old = self.order;
        for i in 0..=old {
            for j in 0..=old - i {
                if i + j > order {
                    self.c[i][j] = 0.0;
                }
            }
        }
        self.order = order;
        self
    }

    /// `f(self)` given `derivs[k] = f^{(k)}(self.value())` for `k <= order`.
    pub fn compose(&self, derivs: &[f64]) -> Self {
        let order = self.order;
        let mut h = *self;
        h.c[0][0] = 0.0;
        let mut out = Self::constant(derivs[0], order);
        let mut pow = Self::constant(1.0, order);
        let mut kfact = 1.0;
        for (k, d) in derivs.iter().enumerate().take(order + 1).skip(1) {
            pow = pow * h;
            kfact *= k as f64;
            if *d != 0.0 {
                let coef = d / kfact;
                for i in 0..=order {
                    for j in 0..=order - i {
                        // zero powers of h must not pick up an infinite derivative
                        if pow.c[i][j] != 0.0 {
                            out.c[i][j] += coef * pow.c[i][j];
                        }
                    }
                }
            }
        }
        out
    }

    pub fn powf(&self, p: f64) -> Self {
        let x0 = self.value();
        let mut d = Vec::with_capacity(self.order + 1);
        let mut fall = 1.0;
        for k in 0..=self.order {
            let e = p - k as f64;
            d.push(if fall == 0.0 { 0.0 } else { fall * x0.powf(e) });
            fall *= e;
        }
        self.compose(&d)
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose(&vec![e; self.order + 1])
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

impl Add for Series2 {
    type Output = Series2;
    fn add(self, o: Series2) -> Series2 {
        let mut r = self.truncate(o.order);
        for i in 0..=r.order {
            for j in 0..=r.order - i {
                r.c[i][j] += o.c[i][j];
            }
        }
        r
    }
}

impl Sub for Series2 {
    type Output = Series2;
    fn sub(self, o: Series2) -> Series2 {
        self + (-o)
    }
}

impl Neg for Series2 {
    type Output = Series2;
    fn neg(self) -> Series2 {
        self.scale(-1.0)
    }
}

impl Mul for Series2 {
    type Output = Series2;
    fn mul(self, o: Series2) -> Series2 {
        let order = self.order.min(o.order);
        let mut r = Series2::zero(order);
        for i1 in 0..=order {
            for j1 in 0..=order - i1 {
                let a = self.c[i1][j1];
                if a == 0.0 {
                    continue;
                }
                for i2 in 0..=order - i1 - j1 {
                    for j2 in 0..=order - i1 - j1 - i2 {
                        r.c[i1 + i2][j1 + j2] += a * o.c[i2][j2];
                    }
                }
            }
        }
        r
    }
}

impl Mul<f64> for Series2 {
    type Output = Series2;
    fn mul(self, k: f64) -> Series2 {
        self.scale(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn product_rule() {
        let s = Series2::var_s(0.7, 4);
        let t = Series2::var_t(1.3, 4);
        let f = s * s * t;
        assert_relative_eq!(f.value(), 0.49 * 1.3);
        assert_relative_eq!(f.partial(1, 0), 2.0 * 0.7 * 1.3);
        assert_relative_eq!(f.partial(2, 1), 2.0);
        assert_eq!(f.partial(3, 0), 0.0);
    }

    #[test]
    fn powf_and_exp_derivatives() {
        let s = Series2::var_s(2.0, 5);
        let f = s.powf(1.5);
        for k in 0..=5 {
            let mut expect = 1.0;
            for i in 0..k {
                expect *= 1.5 - i as f64;
            }
            expect *= 2f64.powf(1.5 - k as f64);
            assert_relative_eq!(f.partial(k, 0), expect, max_relative = 1e-13);
        }
        let g = (Series2::var_s(0.3, 4) + Series2::var_t(0.2, 4)).exp();
        assert_relative_eq!(g.partial(2, 2), 0.5f64.exp(), max_relative = 1e-13);
    }

    #[test]
    fn composition_matches_closed_form() {
        // (1 + S T)^{-1/2}
        let (s0, t0) = (0.4, 0.9);
        let u = (Series2::var_s(s0, 3) * Series2::var_t(t0, 3)).add_scalar(1.0).powf(-0.5);
        let b = 1.0 + s0 * t0;
        assert_relative_eq!(u.partial(1, 0), -0.5 * t0 * b.powf(-1.5), max_relative = 1e-14);
        assert_relative_eq!(u.partial(1, 1), -0.5 * b.powf(-1.5) + 0.75 * s0 * t0 * b.powf(-2.5), max_relative = 1e-13);
    }

    #[test]
    fn derivative_lowers_order() {
        let f = Series2::var_s(1.0, 3).powf(3.0);
        let d = f.d_s();
        assert_eq!(d.order(), 2);
        assert_relative_eq!(d.value(), 3.0);
        assert_relative_eq!(d.partial(1, 0), 6.0);
    }

    #[test]
    fn powf_at_zero_keeps_low_coefficients_finite() {
        let f = Series2::var_s(0.0, 3).powf(1.5);
        assert_eq!(f.value(), 0.0);
        assert_eq!(f.partial(1, 0), 0.0);
        assert!(f.partial(2, 0).is_infinite());
    }
}
