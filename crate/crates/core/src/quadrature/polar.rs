use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

use super::{fixed_sum, Method, Node, QuadSettings, QuadratureResult, Weight};
use crate::error::Result;
use crate::geometry::SpaceParams;

const GL_ORDER: usize = 10;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub(super) fn gl01() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let rule = GaussLegendre::new(NonZeroUsize::new(GL_ORDER).unwrap());
        let mut v: Vec<(f64, f64)> = rule.as_node_weight_pairs().iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    })
}

/// `Gamma(k / 2)` for integer `k >= 1`.
fn gamma_half(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        (1..k / 2).map(|v| v as f64).product()
    } else {
        // Gamma(1/2) = sqrt(pi), Gamma(j + 1/2) = (j - 1/2) Gamma(j - 1/2)
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x + 1.0 <= k as f64 / 2.0 + 1e-12 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Area of the unit sphere in `R^k`.
fn sigma(k: usize) -> f64 {
    2.0 * PI.powf(k as f64 / 2.0) / gamma_half(k)
}

/// `sigma_m sigma_n a^{-n}`, the constant in the polar density.
pub fn sphere_measure_constant(sp: &SpaceParams) -> f64 {
    sigma(sp.m()) * sigma(sp.n()) * sp.a().powi(-(sp.n() as i32))
}

/// Polar coordinates adapted to the gauge: `s = rho sin(theta)^{1/a}`,
/// `t = rho^a cos(theta) / a` for `theta` in `[0, pi/2]`, so `gauge(s, t) = rho`.
/// In these coordinates `dx dy = J(rho, theta) drho dtheta` with
/// `J = sigma_m sigma_n a^{-n} rho^{Q-1} sin^{m/a - 1} cos^{n-1}`.
#[derive(Clone, Debug)]
pub struct PolarChart {
    sp: SpaceParams,
    c: f64,
}

#[derive(Clone, Copy, Debug)]
struct AngleNode {
    w: f64,
    sin_1a: f64,
    cos: f64,
    psi: f64,
    ang: f64,
}

impl PolarChart {
    pub fn new(sp: SpaceParams) -> Self {
        PolarChart { c: sphere_measure_constant(&sp), sp }
    }

    pub fn map(&self, rho: f64, theta: f64) -> (f64, f64) {
        let a = self.sp.a();
        (rho * theta.sin().powf(1.0 / a), rho.powf(a) * theta.cos() / a)
    }

    pub fn density(&self, rho: f64, theta: f64) -> f64 {
        let (m, n, a) = (self.sp.m() as f64, self.sp.n() as f64, self.sp.a());
        self.c * rho.powf(self.sp.q() - 1.0) * theta.sin().powf(m / a - 1.0) * theta.cos().powf(n - 1.0)
    }

    fn angle_node(&self, theta: f64, w: f64) -> AngleNode {
        let (m, n, a) = (self.sp.m() as f64, self.sp.n() as f64, self.sp.a());
        let (sn, cs) = theta.sin_cos();
        AngleNode {
            w,
            sin_1a: sn.powf(1.0 / a),
            cos: cs,
            psi: sn.powf(2.0 * self.sp.alpha() / a),
            ang: sn.powf(m / a - 1.0) * cs.powi(n as i32 - 1),
        }
    }

    /// Angular rule at refinement `level`: dyadic panels toward the axis
    /// `theta = 0`, uniform panels on `[pi/4, pi/2]`.
    fn angles(&self, level: usize) -> Vec<AngleNode> {
        let depth = 24 + 12 * level;
        let sub = level + 1;
        let mut panels = Vec::new();
        let tail = FRAC_PI_4 * 0.5f64.powi(depth as i32);
        panels.push((0.0, tail));
        for k in (0..depth).rev() {
            let hi = FRAC_PI_4 * 0.5f64.powi(k as i32);
            let lo = 0.5 * hi;
            for q in 0..sub {
                panels.push((lo + (hi - lo) * q as f64 / sub as f64, lo + (hi - lo) * (q + 1) as f64 / sub as f64));
            }
        }
        let upper = 1usize << level;
        for q in 0..upper {
            panels.push((FRAC_PI_4 + FRAC_PI_4 * q as f64 / upper as f64, FRAC_PI_4 + FRAC_PI_4 * (q + 1) as f64 / upper as f64));
        }
        let gl = gl01();
        let mut out = Vec::with_capacity(panels.len() * GL_ORDER);
        for (lo, hi) in panels {
            let hi = hi.min(FRAC_PI_2);
            for &(x, w) in gl {
                out.push(self.angle_node(lo + (hi - lo) * x, (hi - lo) * w));
            }
        }
        out
    }

    /// Radial rule on `[0, r]`: the first segment uses `rho = b xi^2`, which
    /// absorbs the `rho^{-1/2}` endpoint behaviour of half-integer exponents.
    fn radii(&self, r: f64, breaks: &[f64], level: usize) -> Vec<(f64, f64)> {
        let mut cuts: Vec<f64> = breaks.iter().copied().filter(|b| *b > 0.0 && *b < r * (1.0 - 1e-12)).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.push(r);
        let panels = 2usize << level;
        let gl = gl01();
        let mut out = Vec::with_capacity(cuts.len() * panels * GL_ORDER);
        let b0 = cuts[0];
        for p in 0..panels {
            let (lo, hi) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
            for &(x, w) in gl {
                let xi = lo + (hi - lo) * x;
                out.push((b0 * xi * xi, 2.0 * b0 * xi * (hi - lo) * w));
            }
        }
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            for p in 0..panels {
                let lo = a + (b - a) * p as f64 / panels as f64;
                let hi = a + (b - a) * (p + 1) as f64 / panels as f64;
                for &(x, w) in gl {
                    out.push((lo + (hi - lo) * x, (hi - lo) * w));
                }
            }
        }
        out
    }

    fn node(&self, rho: f64, an: &AngleNode) -> Node<'static> {
        let a = self.sp.a();
        Node { rho, psi: an.psi, s: rho * an.sin_1a, t: rho.powf(a) * an.cos / a, point: None }
    }

    pub(super) fn ball<F>(
        &self,
        r: f64,
        weights: &[Weight],
        breaks: &[f64],
        settings: &QuadSettings,
        f: &F,
    ) -> Result<Vec<QuadratureResult>>
    where
        F: Fn(&Node, &mut [f64]) -> Result<()> + Sync,
    {
        let q1 = self.sp.q() - 1.0;
        self.refine(weights.len(), settings, |level| {
            let rads = self.radii(r, breaks, level);
            let angs = self.angles(level);
            let na = angs.len();
            let len = rads.len() * na;
            let (sum, abs) = fixed_sum(len, weights.len(), |k, out| {
                let (rho, wr) = rads[k / na];
                let an = &angs[k % na];
                let node = self.node(rho, an);
                f(&node, out)?;
                let base = wr * an.w * self.c * rho.powf(q1) * an.ang;
                for (o, w) in out.iter_mut().zip(weights) {
                    *o *= base * w.eval(rho, node.s);
                }
                Ok(true)
            })?;
            Ok((sum, abs, len))
        })
    }

    pub(super) fn sphere<F>(&self, r: f64, weights: &[Weight], settings: &QuadSettings, f: &F) -> Result<Vec<QuadratureResult>>
    where
        F: Fn(&Node, &mut [f64]) -> Result<()> + Sync,
    {
        let radial = self.c * r.powf(self.sp.q() - 1.0);
        self.refine(weights.len(), settings, |level| {
            let angs = self.angles(level);
            let (sum, abs) = fixed_sum(angs.len(), weights.len(), |k, out| {
                let an = &angs[k];
                let node = self.node(r, an);
                f(&node, out)?;
                let base = an.w * radial * an.ang;
                for (o, w) in out.iter_mut().zip(weights) {
                    *o *= base * w.eval(r, node.s);
                }
                Ok(true)
            })?;
            Ok((sum, abs, angs.len()))
        })
    }

    /// Runs `rule` on successive levels until every output agrees with the
    /// previous level to `rel_tol` times its absolute integral.
    fn refine<R>(&self, n_out: usize, settings: &QuadSettings, rule: R) -> Result<Vec<QuadratureResult>>
    where
        R: Fn(usize) -> Result<(Vec<f64>, Vec<f64>, usize)>,
    {
        let first = settings.level_offset;
        let last = settings.max_level + settings.level_offset;
        let (mut prev, _, _) = rule(first)?;
        let mut level = first + 1;
        loop {
            let (cur, abs, nodes) = rule(level)?;
            let diffs: Vec<f64> = cur.iter().zip(&prev).map(|(a, b)| (a - b).abs()).collect();
            let done = diffs.iter().zip(&abs).all(|(d, s)| *d <= settings.rel_tol * s);
            if done || level >= last {
                return Ok((0..n_out)
                    .map(|k| QuadratureResult {
                        value: cur[k],
                        error_estimate: diffs[k].max(4.0 * f64::EPSILON * abs[k]),
                        method: Method::Reduced2d,
                        nodes,
                    })
                    .collect());
            }
            prev = cur;
            level += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::gauge_st;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sigma(1), 2.0, max_relative = 1e-15);
        assert_relative_eq!(sigma(2), 2.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(sigma(3), 4.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(sigma(5), 8.0 * PI * PI / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn chart_lands_on_gauge_spheres() {
        for alpha in [0.5, 1.0] {
            let sp = SpaceParams::new(5, 1, alpha).unwrap();
            let ch = PolarChart::new(sp);
            for k in 0..=50 {
                let th = FRAC_PI_2 * k as f64 / 50.0;
                for rho in [0.1, 0.7, 2.5] {
                    let (s, t) = ch.map(rho, th);
                    assert!((gauge_st(s, t, &sp) - rho).abs() <= 1e-12 * rho);
                    assert!(ch.density(rho, th) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn density_matches_numerical_jacobian() {
        // dx dy = sigma_m sigma_n s^{m-1} t^{n-1} ds dt; compare with d(s,t)/d(rho,theta)
        let sp = SpaceParams::new(3, 2, 0.5).unwrap();
        let ch = PolarChart::new(sp);
        let (rho, th) = (0.8, 0.6);
        let h = 1e-6;
        let (sp_, tp) = ch.map(rho + h, th);
        let (sm, tm) = ch.map(rho - h, th);
        let (sq, tq) = ch.map(rho, th + h);
        let (sn, tn) = ch.map(rho, th - h);
        let det = ((sp_ - sm) * (tq - tn) - (sq - sn) * (tp - tm)).abs() / (4.0 * h * h);
        let (s, t) = ch.map(rho, th);
        let expect = sigma(3) * sigma(2) * s * s * t * det;
        assert_relative_eq!(ch.density(rho, th), expect, max_relative = 1e-8);
    }
}
