use crate::error::{input, Result};

/// Radial cutoff `eta(rho)`: 1 on `[0, r]`, 0 beyond `2r`, joined by the
/// quintic smoothstep so that `eta` is `C^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cutoff {
    r: f64,
}

impl Cutoff {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return input(format!("cutoff radius must be positive, got {r}"));
        }
        Ok(Cutoff { r })
    }

    pub fn inner(&self) -> f64 {
        self.r
    }

    pub fn outer(&self) -> f64 {
        2.0 * self.r
    }

    /// Bounds `(sup |eta'| r, sup |eta''| r^2)` implied by the smoothstep.
    pub fn derivative_constants() -> (f64, f64) {
        (15.0 / 8.0, 10.0 / 3f64.sqrt())
    }

    /// `(eta, eta', eta'')` at gauge radius `rho`.
    pub fn eval(&self, rho: f64) -> (f64, f64, f64) {
        let x = (rho - self.r) / self.r;
        if x <= 0.0 {
            return (1.0, 0.0, 0.0);
        }
        if x >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let s = x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
        let ds = 30.0 * x * x * (1.0 - x) * (1.0 - x);
        let dds = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
        (1.0 - s, -ds / self.r, -dds / (self.r * self.r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_and_bounds() {
        let c = Cutoff::new(0.5).unwrap();
        assert_eq!(c.eval(0.3), (1.0, 0.0, 0.0));
        assert_eq!(c.eval(1.2), (0.0, 0.0, 0.0));
        let (c1, c2) = Cutoff::derivative_constants();
        let mut max1: f64 = 0.0;
        let mut max2: f64 = 0.0;
        for k in 0..=20000 {
            let rho = 0.5 + 0.5 * k as f64 / 20000.0;
            let (e, d1, d2) = c.eval(rho);
            assert!((0.0..=1.0).contains(&e));
            max1 = max1.max(d1.abs() * 0.5);
            max2 = max2.max(d2.abs() * 0.25);
        }
        assert!(max1 <= c1 + 1e-12 && max1 > c1 - 1e-6);
        assert!(max2 <= c2 + 1e-12 && max2 > c2 - 1e-3);
        // continuity of value and first two derivatives at both joints
        let (a, b, _) = c.eval(0.5 + 1e-9);
        assert!((a - 1.0).abs() < 1e-12 && b.abs() < 1e-12);
        assert!(Cutoff::new(-1.0).is_err());
    }
}
