//! Gauge geometry of the Baouendi-Grushin operator on R^m x R^n.
//!
//! Coordinates are stacked as `z = (x_1, .., x_m, y_1, .., y_n)` everywhere a
//! flat vector is needed (jets, gradients).

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::fields::AnalyticField;

/// Ambient dimensions and the degeneracy exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "RawSpace")]
pub struct SpaceParams {
    m: usize,
    n: usize,
    alpha: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    m: usize,
    n: usize,
    alpha: f64,
}

impl TryFrom<RawSpace> for SpaceParams {
    type Error = Error;
    fn try_from(r: RawSpace) -> Result<Self> {
        SpaceParams::new(r.m, r.n, r.alpha)
    }
}

impl From<SpaceParams> for RawSpace {
    fn from(sp: SpaceParams) -> Self {
        RawSpace { m: sp.m, n: sp.n, alpha: sp.alpha }
    }
}

impl SpaceParams {
    pub fn new(m: usize, n: usize, alpha: f64) -> Result<Self> {
        if m == 0 || n == 0 {
            return input(format!("dimensions must be positive, got m = {m}, n = {n}"));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return input(format!("alpha must lie in (0, 1], got {alpha}"));
        }
        Ok(SpaceParams { m, n, alpha })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `alpha + 1`, the weight of `y` under the dilations.
    pub fn a(&self) -> f64 {
        self.alpha + 1.0
    }

    /// Homogeneous dimension `m + (alpha + 1) n`.
    pub fn q(&self) -> f64 {
        self.m as f64 + self.a() * self.n as f64
    }

    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    pub fn hardy_ok(&self) -> bool {
        self.m > 2
    }

    pub fn rellich_ok(&self) -> bool {
        self.q() > 6.0
    }

    pub fn suc_ok(&self) -> bool {
        self.m > 4 && self.rellich_ok()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Point {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        Point { x, y }
    }

    pub fn origin(sp: &SpaceParams) -> Self {
        Point { x: vec![0.0; sp.m], y: vec![0.0; sp.n] }
    }

    /// Splits a stacked coordinate vector.
    pub fn from_flat(z: &[f64], sp: &SpaceParams) -> Self {
        Point { x: z[..sp.m].to_vec(), y: z[sp.m..sp.m + sp.n].to_vec() }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    /// `|x|`
    pub fn s(&self) -> f64 {
        norm(&self.x)
    }

    /// `|y|`
    pub fn t(&self) -> f64 {
        norm(&self.y)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Value and Euclidean partial derivatives of a scalar field at a point.
///
/// `hess` is row-major `dim x dim`, `third` is `dim^3` with index
/// `(i * dim + j) * dim + k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
    pub third: Option<Vec<f64>>,
}

impl Jet {
    pub fn constant(value: f64, dim: usize) -> Self {
        Jet { value, grad: vec![0.0; dim], hess: vec![0.0; dim * dim], third: Some(vec![0.0; dim * dim * dim]) }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn h(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }
}

/// Gauge norm `(|x|^{2a} + a^2 |y|^2)^{1/(2a)}` with `a = alpha + 1`.
pub fn gauge(p: &Point, sp: &SpaceParams) -> f64 {
    gauge_st(p.s(), p.t(), sp)
}

/// Gauge norm as a function of `s = |x|`, `t = |y|`.
pub fn gauge_st(s: f64, t: f64, sp: &SpaceParams) -> f64 {
    let a = sp.a();
    if t == 0.0 {
        return s;
    }
    (s.powf(2.0 * a) + a * a * t * t).powf(1.0 / (2.0 * a))
}

/// Angle function `|x|^{2 alpha} / rho^{2 alpha}`.
pub fn psi(p: &Point, sp: &SpaceParams) -> Result<f64> {
    psi_st(p.s(), p.t(), sp)
}

pub fn psi_st(s: f64, t: f64, sp: &SpaceParams) -> Result<f64> {
    let rho = gauge_st(s, t, sp);
    if rho == 0.0 {
        return Err(Error::DegeneratePoint("psi"));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    Ok((s / rho).powf(2.0 * sp.alpha).min(1.0))
}

/// `(X_1 f, .., X_{m+n} f)` with `X_i = d/dx_i` and `X_{m+j} = |x|^alpha d/dy_j`.
pub fn horizontal_gradient(j: &Jet, p: &Point, sp: &SpaceParams) -> Vec<f64> {
    let w = p.s().powf(sp.alpha);
    let mut g = j.grad.clone();
    for v in &mut g[sp.m..] {
        *v *= w;
    }
    g
}

/// `Delta_x f + |x|^{2 alpha} Delta_y f`.
pub fn laplace_x(j: &Jet, p: &Point, sp: &SpaceParams) -> f64 {
    let lx: f64 = (0..sp.m).map(|i| j.h(i, i)).sum();
    let ly: f64 = (sp.m..sp.dim()).map(|i| j.h(i, i)).sum();
    lx + p.s().powf(2.0 * sp.alpha) * ly
}

/// Horizontal gradient of `Delta_X f`; needs third derivatives in the jet.
pub fn grad_laplace_x(j: &Jet, p: &Point, sp: &SpaceParams) -> Result<Vec<f64>> {
    let third = j.third.as_ref().ok_or_else(|| Error::Input("jet lacks third derivatives".into()))?;
    let d = sp.dim();
    let t3 = |i: usize, k: usize| third[(i * d + i) * d + k];
    let s = p.s();
    let w2 = s.powf(2.0 * sp.alpha);
    let ly: f64 = (sp.m..d).map(|i| j.h(i, i)).sum();
    let mut out = vec![0.0; d];
    for (k, o) in out.iter_mut().enumerate() {
        let mut v: f64 = (0..sp.m).map(|i| t3(i, k)).sum::<f64>() + w2 * (sp.m..d).map(|i| t3(i, k)).sum::<f64>();
        if k < sp.m && s > 0.0 {
            v += 2.0 * sp.alpha * s.powf(2.0 * sp.alpha - 2.0) * p.x[k] * ly;
        }
        *o = v;
    }
    let w = s.powf(sp.alpha);
    for v in &mut out[sp.m..] {
        *v *= w;
    }
    Ok(out)
}

/// Generator of the dilations applied to `f`: `x . grad_x f + a y . grad_y f`.
pub fn z_derivative(j: &Jet, p: &Point, sp: &SpaceParams) -> f64 {
    let a = sp.a();
    let zx: f64 = p.x.iter().zip(&j.grad[..sp.m]).map(|(x, g)| x * g).sum();
    let zy: f64 = p.y.iter().zip(&j.grad[sp.m..]).map(|(y, g)| y * g).sum();
    zx + a * zy
}

/// `(lambda x, lambda^a y)`.
pub fn dilate(p: &Point, lambda: f64, sp: &SpaceParams) -> Point {
    let la = lambda.powf(sp.a());
    Point { x: p.x.iter().map(|v| v * lambda).collect(), y: p.y.iter().map(|v| v * la).collect() }
}

/// Closed-form jet of the gauge up to second order.
pub fn rho_jet(p: &Point, sp: &SpaceParams) -> Result<Jet> {
    let (m, d, a) = (sp.m, sp.dim(), sp.a());
    let s = p.s();
    let big_f = s.powf(2.0 * a) + a * a * p.t().powi(2);
    if big_f == 0.0 {
        return Err(Error::DegeneratePoint("grad rho"));
    }
    let z = p.flat();
    // derivatives of F = |x|^{2a} + a^2 |y|^2
    let mut f1 = vec![0.0; d];
    let mut f2 = vec![0.0; d * d];
    let sp2 = if s > 0.0 { s.powf(2.0 * a - 2.0) } else { 0.0 };
    let sp4 = if s > 0.0 { s.powf(2.0 * a - 4.0) } else { 0.0 };
    for i in 0..m {
        f1[i] = 2.0 * a * sp2 * z[i];
        for k in 0..m {
            let delta = if i == k { sp2 } else { 0.0 };
            f2[i * d + k] = 2.0 * a * (delta + (2.0 * a - 2.0) * sp4 * z[i] * z[k]);
        }
    }
    for i in m..d {
        f1[i] = 2.0 * a * a * z[i];
        f2[i * d + i] = 2.0 * a * a;
    }
    let c = 1.0 / (2.0 * a);
    let value = big_f.powf(c);
    let g1 = c * big_f.powf(c - 1.0);
    let g2 = c * (c - 1.0) * big_f.powf(c - 2.0);
    let grad = f1.iter().map(|v| g1 * v).collect();
    let mut hess = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            hess[i * d + k] = g1 * f2[i * d + k] + g2 * f1[i] * f1[k];
        }
    }
    Ok(Jet { value, grad, hess, third: None })
}

/// Central finite-difference jet of an arbitrary scalar function.
///
/// Gradient steps are `eps^{1/3} max(1, |z_i|)`; Hessian steps use `eps^{1/4}`,
/// the balanced choice for second differences.
pub fn fd_jet(f: impl Fn(&Point) -> f64, p: &Point, sp: &SpaceParams, with_hessian: bool) -> Jet {
    let d = sp.dim();
    let z = p.flat();
    let eval = |zz: &[f64]| f(&Point::from_flat(zz, sp));
    let value = eval(&z);
    let h1 = |i: usize| f64::EPSILON.cbrt() * z[i].abs().max(1.0);
    let h2 = |i: usize| f64::EPSILON.powf(0.25) * z[i].abs().max(1.0);
    let shifted = |pairs: &[(usize, f64)]| {
        let mut zz = z.clone();
        for &(i, h) in pairs {
            zz[i] += h;
        }
        eval(&zz)
    };
    let grad = (0..d)
        .map(|i| {
            let h = h1(i);
            (shifted(&[(i, h)]) - shifted(&[(i, -h)])) / (2.0 * h)
        })
        .collect();
    let mut hess = vec![0.0; d * d];
    if with_hessian {
        for i in 0..d {
            let hi = h2(i);
            hess[i * d + i] = (shifted(&[(i, hi)]) - 2.0 * value + shifted(&[(i, -hi)])) / (hi * hi);
            for k in i + 1..d {
                let hk = h2(k);
                let v = (shifted(&[(i, hi), (k, hk)]) - shifted(&[(i, hi), (k, -hk)]) - shifted(&[(i, -hi), (k, hk)])
                    + shifted(&[(i, -hi), (k, -hk)]))
                    / (4.0 * hi * hk);
                hess[i * d + k] = v;
                hess[k * d + i] = v;
            }
        }
    }
    Jet { value, grad, hess, third: None }
}

/// `count` points uniform in `[-1, 1]^{m+n}`, keeping `|x| >= 1e-2` so that
/// finite differences stay clear of the degenerate set.
pub fn random_points(sp: &SpaceParams, count: usize, seed: u64) -> Vec<Point> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z: Vec<f64> = (0..sp.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = Point::from_flat(&z, sp);
        if p.s() >= 1e-2 {
            out.push(p);
        }
    }
    out
}

/// Absolute residuals of the gauge identities at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityResiduals {
    /// `Delta_X rho - (Q - 1) psi / rho`
    pub lap_rho: f64,
    /// `Z rho - rho`
    pub z_rho: f64,
    /// `grad_X f . grad_X rho - (Z f) psi / rho`
    pub pairing: f64,
    /// `|grad_X rho|^2 - psi`
    pub grad_rho_sq: f64,
    /// `[X_i, Z] f - X_i f`, one entry per vector field.
    pub commutator: Vec<f64>,
    /// `[X_i, Z] f - Z f`; expected to be large for generic `f`.
    pub commutator_vs_z: Vec<f64>,
    /// `rho psi^{-1/2} |grad_X f| - |Z f|`, only where `psi >= 1e-10`.
    pub z_bound_slack: Option<f64>,
}

impl IdentityResiduals {
    /// Largest residual among the equalities (a)-(e).
    pub fn max_equality(&self) -> f64 {
        self.commutator
            .iter()
            .map(|v| v.abs())
            .fold(self.lap_rho.abs().max(self.z_rho.abs()).max(self.pairing.abs()).max(self.grad_rho_sq.abs()), f64::max)
    }
}

/// Checks the gauge identities at `p` against the test field `f`.
///
/// Commutators are formed by nested derivatives: the inner derivative comes
/// from the field's jet, the outer one is a central difference.
pub fn identity_residuals(p: &Point, sp: &SpaceParams, f: &dyn AnalyticField) -> Result<IdentityResiduals> {
    let rho = gauge(p, sp);
    if rho == 0.0 {
        return Err(Error::DegeneratePoint("identity residuals"));
    }
    let psi_v = psi(p, sp)?;
    let rj = rho_jet(p, sp)?;
    let gr = horizontal_gradient(&rj, p, sp);
    let lap_rho = laplace_x(&rj, p, sp) - (sp.q() - 1.0) * psi_v / rho;
    let z_rho = z_derivative(&rj, p, sp) - rho;
    let grad_rho_sq = gr.iter().map(|v| v * v).sum::<f64>() - psi_v;

    let fj = f.jet(p, sp, 1)?;
    let gf = horizontal_gradient(&fj, p, sp);
    let zf = z_derivative(&fj, p, sp);
    let pairing = gf.iter().zip(&gr).map(|(a, b)| a * b).sum::<f64>() - zf * psi_v / rho;

    let d = sp.dim();
    let z = p.flat();
    let zf_at = |q: &Point| -> Result<f64> { Ok(z_derivative(&f.jet(q, sp, 1)?, q, sp)) };
    let xi_at = |q: &Point, i: usize| -> Result<f64> { Ok(horizontal_gradient(&f.jet(q, sp, 1)?, q, sp)[i]) };
    let mut commutator = Vec::with_capacity(d);
    let mut commutator_vs_z = Vec::with_capacity(d);
    let sa = p.s().powf(sp.alpha);
    for i in 0..d {
        // X_i (Z f)
        let h = f64::EPSILON.cbrt() * z[i].abs().max(1.0);
        let mut zp = z.clone();
        zp[i] += h;
        let mut zm = z.clone();
        zm[i] -= h;
        let dz = (zf_at(&Point::from_flat(&zp, sp))? - zf_at(&Point::from_flat(&zm, sp))?) / (2.0 * h);
        let xi_zf = if i < sp.m { dz } else { sa * dz };
        // Z (X_i f) = d/dlambda X_i f(delta_lambda p) at lambda = 1
        let hl = f64::EPSILON.cbrt();
        let z_xif = (xi_at(&dilate(p, 1.0 + hl, sp), i)? - xi_at(&dilate(p, 1.0 - hl, sp), i)?) / (2.0 * hl);
        let comm = xi_zf - z_xif;
        commutator.push(comm - gf[i]);
        commutator_vs_z.push(comm - zf);
    }
    let z_bound_slack = (psi_v >= 1e-10).then(|| {
        let g = gf.iter().map(|v| v * v).sum::<f64>().sqrt();
        rho * g / psi_v.sqrt() - zf.abs()
    });
    Ok(IdentityResiduals { lap_rho, z_rho, pairing, grad_rho_sq, commutator, commutator_vs_z, z_bound_slack })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sp511() -> SpaceParams {
        SpaceParams::new(5, 1, 1.0).unwrap()
    }

    fn e1() -> Vec<f64> {
        vec![1.0, 0.0, 0.0, 0.0, 0.0]
    }

    #[test]
    fn params_validate() {
        assert!(SpaceParams::new(5, 1, 0.0).is_err());
        assert!(SpaceParams::new(5, 1, 1.5).is_err());
        assert!(SpaceParams::new(0, 1, 1.0).is_err());
        let sp = sp511();
        assert_eq!(sp.q(), 7.0);
        assert!(sp.hardy_ok() && sp.rellich_ok() && sp.suc_ok());
        let sp = SpaceParams::new(5, 1, 0.5).unwrap();
        assert_eq!(sp.q(), 6.5);
        let sp = SpaceParams::new(3, 1, 1.0).unwrap();
        assert!(sp.hardy_ok() && !sp.rellich_ok() && !sp.suc_ok());
    }

    #[test]
    fn params_reject_unknown_json_keys() {
        let ok: SpaceParams = serde_json::from_str(r#"{"m":5,"n":1,"alpha":1.0}"#).unwrap();
        assert_eq!(ok, sp511());
        assert!(serde_json::from_str::<SpaceParams>(r#"{"m":5,"n":1,"alpha":1.0,"q":7}"#).is_err());
        assert!(serde_json::from_str::<SpaceParams>(r#"{"m":5,"n":1,"alpha":0}"#).is_err());
    }

    #[test]
    fn gauge_examples() {
        let sp = sp511();
        assert_eq!(gauge(&Point::new(e1(), vec![0.0]), &sp), 1.0);
        assert_relative_eq!(gauge(&Point::new(vec![0.0; 5], vec![1.0]), &sp), 2f64.sqrt(), max_relative = 1e-15);
        let p = Point::new(vec![0.3, -0.2, 0.1, 0.5, 0.0], vec![0.7]);
        assert_relative_eq!(gauge(&dilate(&p, 3.0, &sp), &sp), 3.0 * gauge(&p, &sp), max_relative = 1e-14);
    }

    #[test]
    fn psi_examples() {
        let sp = sp511();
        assert_eq!(psi(&Point::new(vec![0.2, 0.0, 0.0, 0.0, 0.0], vec![0.0]), &sp).unwrap(), 1.0);
        assert_eq!(psi(&Point::new(vec![0.0; 5], vec![0.4]), &sp).unwrap(), 0.0);
        assert_relative_eq!(psi(&Point::new(e1(), vec![1.0]), &sp).unwrap(), 1.0 / 5f64.sqrt(), max_relative = 1e-14);
        assert!(matches!(psi(&Point::origin(&sp), &sp), Err(Error::DegeneratePoint(_))));
        assert_eq!(gauge(&Point::origin(&sp), &sp), 0.0);
    }

    #[test]
    fn dilate_examples() {
        let sp = sp511();
        let p = Point::new(e1(), vec![1.0]);
        assert_eq!(dilate(&p, 1.0, &sp), p);
        let q = dilate(&p, 2.0, &sp);
        assert_eq!(q.x, vec![2.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(q.y, vec![4.0]);
    }

    #[test]
    fn horizontal_gradient_of_coordinates() {
        let sp = sp511();
        let p = Point::new(vec![2.0, 0.0, 0.0, 0.0, 0.0], vec![0.3]);
        let mut j = Jet::constant(0.0, 6);
        j.grad[0] = 1.0;
        assert_eq!(horizontal_gradient(&j, &p, &sp), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let mut j = Jet::constant(0.0, 6);
        j.grad[5] = 1.0;
        assert_eq!(horizontal_gradient(&j, &p, &sp), vec![0.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn laplace_of_squares() {
        let sp = sp511();
        let p = Point::new(vec![0.5, 1.0, 0.0, -0.2, 0.1], vec![0.3]);
        let mut j = Jet::constant(0.0, 6);
        for i in 0..5 {
            j.hess[i * 6 + i] = 2.0;
        }
        assert_eq!(laplace_x(&j, &p, &sp), 10.0);
        let mut j = Jet::constant(0.0, 6);
        j.hess[35] = 2.0;
        assert_relative_eq!(laplace_x(&j, &p, &sp), 2.0 * p.s().powi(2), max_relative = 1e-14);
    }

    #[test]
    fn rho_jet_matches_finite_differences() {
        for alpha in [0.5, 1.0] {
            let sp = SpaceParams::new(5, 1, alpha).unwrap();
            let p = Point::new(vec![0.3, -0.4, 0.2, 0.1, 0.25], vec![-0.35]);
            let exact = rho_jet(&p, &sp).unwrap();
            let fd = fd_jet(|q| gauge(q, &sp), &p, &sp, true);
            for (a, b) in exact.grad.iter().zip(&fd.grad) {
                assert!((a - b).abs() < 1e-9, "{a} {b}");
            }
            for (a, b) in exact.hess.iter().zip(&fd.hess) {
                assert!((a - b).abs() < 1e-6, "{a} {b}");
            }
        }
    }

    #[test]
    fn z_of_gauge_is_gauge() {
        let sp = SpaceParams::new(3, 2, 1.0).unwrap();
        let p = Point::new(vec![0.1, 0.7, -0.3], vec![0.2, -0.6]);
        let j = rho_jet(&p, &sp).unwrap();
        assert_relative_eq!(z_derivative(&j, &p, &sp), gauge(&p, &sp), max_relative = 1e-14);
        assert_eq!(z_derivative(&Jet::constant(3.0, 5), &p, &sp), 0.0);
    }
}
