use std::sync::Arc;

use super::{finite_jet, AnalyticField, FieldMeta, FieldRef, ProfileField, RadialData, Smoothness};
use crate::error::{input, Error, Result};
use crate::geometry::{dilate, gauge_st, psi_st, Jet, Point, SpaceParams};
use crate::taylor::Series2;

/// Names accepted by [`by_name`] for bi-radial catalog fields.
pub const CATALOG: [&str; 9] = ["one", "s2", "t2", "s2t2", "poly_mix", "rho2", "rho4", "gauss", "bump"];

pub fn catalog_names() -> Vec<&'static str> {
    let mut v = CATALOG.to_vec();
    v.extend(["zero", "x1"]);
    v
}

/// Looks up a named field; `r` is the support radius used by `bump`.
pub fn by_name(name: &str, r: f64) -> Result<FieldRef> {
    Ok(match name {
        "zero" => zero(),
        "one" => rho_power(0.0),
        "s2" => biradial_polynomial("s2", &[(1, 0, 1.0)]),
        "t2" => biradial_polynomial("t2", &[(0, 1, 1.0)]),
        "s2t2" => biradial_polynomial("s2t2", &[(1, 1, 1.0)]),
        "poly_mix" => biradial_polynomial("poly_mix", &[(0, 0, 1.0), (1, 0, 1.0), (0, 1, 1.0)]),
        "rho2" => rho_power(2.0),
        "rho4" => rho_power(4.0),
        "gauss" => gaussian(),
        "bump" => bump(r)?,
        "x1" => coordinate_field(1)?,
        other => return input(format!("unknown field `{other}`")),
    })
}

/// `|x|^{2a} + a^2 |y|^2 = rho^{2a}` in profile variables.
fn gauge_power(s: &Series2, t: &Series2, sp: &SpaceParams) -> Series2 {
    let a = sp.a();
    s.powf(a) + t.scale(a * a)
}

pub fn zero() -> FieldRef {
    let mut meta = FieldMeta::new("zero");
    meta.harmonic = true;
    Arc::new(
        ProfileField::new(meta, Arc::new(|s: &Series2, _: &Series2, _: &SpaceParams| Series2::zero(s.order())))
            .with_exact_laplacian(Arc::new(|_, _, _| 0.0)),
    )
}

/// `rho^beta`, with `Delta_X rho^beta = beta (beta + Q - 2) rho^{beta - 2} psi`.
pub fn rho_power(beta: f64) -> FieldRef {
    let name = if beta == 0.0 { "one".to_string() } else { format!("rho{beta}") };
    let mut meta = FieldMeta::new(name);
    meta.homogeneity = Some(beta);
    meta.harmonic = beta == 0.0;
    if beta != 0.0 && !(beta.fract() == 0.0 && beta >= 0.0) {
        meta.smoothness = Smoothness::C(0);
    }
    let expr = move |s: &Series2, t: &Series2, sp: &SpaceParams| {
        if beta == 0.0 {
            return Series2::constant(1.0, s.order());
        }
        gauge_power(s, t, sp).powf(beta / (2.0 * sp.a()))
    };
    let lap = move |s: f64, t: f64, sp: &SpaceParams| {
        if beta == 0.0 {
            return 0.0;
        }
        let rho = gauge_st(s, t, sp);
        let psi = psi_st(s, t, sp).unwrap_or(f64::NAN);
        beta * (beta + sp.q() - 2.0) * rho.powf(beta - 2.0) * psi
    };
    Arc::new(ProfileField::new(meta, Arc::new(expr)).with_exact_laplacian(Arc::new(lap)))
}

/// `sum c |x|^{2i} |y|^{2j}` over the `(i, j, c)` terms.
pub fn biradial_polynomial(name: &str, terms: &[(u32, u32, f64)]) -> FieldRef {
    let terms: Vec<(u32, u32, f64)> = terms.to_vec();
    let mut meta = FieldMeta::new(name);
    let t2 = terms.clone();
    meta.harmonic = terms.iter().all(|&(i, j, c)| c == 0.0 || (i == 0 && j == 0));
    let expr = move |s: &Series2, t: &Series2, _: &SpaceParams| {
        let mut acc = Series2::zero(s.order());
        for &(i, j, c) in &t2 {
            let mut term = Series2::constant(c, s.order());
            for _ in 0..i {
                term = term * *s;
            }
            for _ in 0..j {
                term = term * *t;
            }
            acc = acc + term;
        }
        acc
    };
    let t3 = terms.clone();
    let lap = move |s: f64, t: f64, sp: &SpaceParams| {
        let (m, n, al) = (sp.m() as f64, sp.n() as f64, sp.alpha());
        let (ss, tt) = (s * s, t * t);
        let mut acc = 0.0;
        for &(i, j, c) in &t3 {
            let (fi, fj) = (i as f64, j as f64);
            if i > 0 {
                acc += c * tt.powi(j as i32) * (2.0 * m * fi + 4.0 * fi * (fi - 1.0)) * ss.powi(i as i32 - 1);
            }
            if j > 0 {
                acc += c * ss.powf(fi + al) * (2.0 * n * fj + 4.0 * fj * (fj - 1.0)) * tt.powi(j as i32 - 1);
            }
        }
        acc
    };
    let field = ProfileField::new(meta, Arc::new(expr)).with_exact_laplacian(Arc::new(lap));
    Arc::new(PolyField { inner: field, terms })
}

/// Wrapper resolving the homogeneity degree, which depends on `alpha`.
struct PolyField {
    inner: ProfileField,
    terms: Vec<(u32, u32, f64)>,
}

impl PolyField {
    fn degree(&self, sp: &SpaceParams) -> Option<f64> {
        let mut degs = self.terms.iter().filter(|t| t.2 != 0.0).map(|&(i, j, _)| 2.0 * i as f64 + 2.0 * sp.a() * j as f64);
        let first = degs.next().unwrap_or(0.0);
        degs.all(|d| d == first).then_some(first)
    }
}

impl AnalyticField for PolyField {
    fn meta(&self) -> &FieldMeta {
        self.inner.meta()
    }
    fn jet(&self, p: &Point, sp: &SpaceParams, order: usize) -> Result<Jet> {
        self.inner.jet(p, sp, order)
    }
    fn radial(&self, s: f64, t: f64, sp: &SpaceParams, depth: usize) -> Result<RadialData> {
        self.inner.radial(s, t, sp, depth)
    }
    fn exact_laplacian(&self, p: &Point, sp: &SpaceParams) -> Option<Result<f64>> {
        self.inner.exact_laplacian(p, sp)
    }
    fn value_st(&self, s: f64, t: f64, sp: &SpaceParams) -> Result<f64> {
        self.inner.value_st(s, t, sp)
    }
    fn laplacian_st(&self, s: f64, t: f64, sp: &SpaceParams) -> Result<f64> {
        self.inner.laplacian_st(s, t, sp)
    }
    fn homogeneity(&self, sp: &SpaceParams) -> Option<f64> {
        self.degree(sp)
    }
}

/// `(1 - (rho / r)^{2a})_+^3`; `C^2` across the gauge sphere of radius `r`.
pub fn bump(r: f64) -> Result<FieldRef> {
    if !(r > 0.0 && r.is_finite()) {
        return input(format!("bump radius must be positive, got {r}"));
    }
    let mut meta = FieldMeta::new("bump");
    meta.smoothness = Smoothness::C(2);
    let expr = move |s: &Series2, t: &Series2, sp: &SpaceParams| {
        let q = gauge_power(s, t, sp).scale(1.0 / r.powf(2.0 * sp.a()));
        let base = (-q).add_scalar(1.0);
        if base.value() <= 0.0 {
            return Series2::zero(s.order());
        }
        base * base * base
    };
    let lap = move |s: f64, t: f64, sp: &SpaceParams| {
        let a = sp.a();
        let rho = gauge_st(s, t, sp);
        if rho >= r {
            return 0.0;
        }
        let psi = psi_st(s, t, sp).unwrap_or(f64::NAN);
        let q = (rho / r).powf(2.0 * a);
        let dq = 2.0 * a * rho.powf(2.0 * a - 1.0) / r.powf(2.0 * a);
        let ddq = 2.0 * a * (2.0 * a - 1.0) * rho.powf(2.0 * a - 2.0) / r.powf(2.0 * a);
        let h1 = -3.0 * (1.0 - q).powi(2) * dq;
        let h2 = 6.0 * (1.0 - q) * dq * dq - 3.0 * (1.0 - q).powi(2) * ddq;
        if rho == 0.0 {
            return h2 * psi;
        }
        h2 * psi + h1 * (sp.q() - 1.0) * psi / rho
    };
    Ok(Arc::new(ProfileField::new(meta, Arc::new(expr)).with_exact_laplacian(Arc::new(lap))))
}

/// `exp(-|x|^2 - |y|^2)`.
pub fn gaussian() -> FieldRef {
    let meta = FieldMeta::new("gauss");
    let expr = |s: &Series2, t: &Series2, _: &SpaceParams| (-(*s + *t)).exp();
    let lap = |s: f64, t: f64, sp: &SpaceParams| {
        let (ss, tt) = (s * s, t * t);
        let (m, n) = (sp.m() as f64, sp.n() as f64);
        (-ss - tt).exp() * (-2.0 * m + 4.0 * ss + ss.powf(sp.alpha()) * (-2.0 * n + 4.0 * tt))
    };
    Arc::new(ProfileField::new(meta, Arc::new(expr)).with_exact_laplacian(Arc::new(lap)))
}

/// The coordinate function `x_i` (1-based).
pub fn coordinate_field(i: usize) -> Result<FieldRef> {
    if i == 0 {
        return input("coordinate index is 1-based");
    }
    let mut meta = FieldMeta::new(format!("x{i}"));
    meta.biradial = false;
    meta.homogeneity = Some(1.0);
    meta.harmonic = true;
    Ok(Arc::new(CoordinateField { i: i - 1, meta }))
}

struct CoordinateField {
    i: usize,
    meta: FieldMeta,
}

impl AnalyticField for CoordinateField {
    fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    fn jet(&self, p: &Point, sp: &SpaceParams, _order: usize) -> Result<Jet> {
        if self.i >= sp.m() {
            return input(format!("coordinate x{} needs m >= {}", self.i + 1, self.i + 1));
        }
        let mut j = Jet::constant(p.x[self.i], sp.dim());
        j.grad[self.i] = 1.0;
        Ok(j)
    }

    fn exact_laplacian(&self, _p: &Point, _sp: &SpaceParams) -> Option<Result<f64>> {
        Some(Ok(0.0))
    }
}

/// `exp(k . z)`, a smooth probe without any symmetry.
pub fn exp_linear(k: Vec<f64>) -> FieldRef {
    let mut meta = FieldMeta::new("exp_linear");
    meta.biradial = false;
    Arc::new(ExpLinear { k, meta })
}

struct ExpLinear {
    k: Vec<f64>,
    meta: FieldMeta,
}

impl AnalyticField for ExpLinear {
    fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    fn jet(&self, p: &Point, sp: &SpaceParams, order: usize) -> Result<Jet> {
        let d = sp.dim();
        if self.k.len() != d {
            return input(format!("exp_linear needs {d} wave numbers, got {}", self.k.len()));
        }
        let z = p.flat();
        let e = z.iter().zip(&self.k).map(|(a, b)| a * b).sum::<f64>().exp();
        let k = &self.k;
        let grad = k.iter().map(|v| v * e).collect();
        let mut hess = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..d {
                hess[a * d + b] = k[a] * k[b] * e;
            }
        }
        let third = (order >= 3).then(|| {
            let mut t = vec![0.0; d * d * d];
            for a in 0..d {
                for b in 0..d {
                    for c in 0..d {
                        t[(a * d + b) * d + c] = k[a] * k[b] * k[c] * e;
                    }
                }
            }
            t
        });
        finite_jet(Jet { value: e, grad, hess, third }, order, "exp_linear")
    }

    fn exact_laplacian(&self, p: &Point, sp: &SpaceParams) -> Option<Result<f64>> {
        let e = p.flat().iter().zip(&self.k).map(|(a, b)| a * b).sum::<f64>().exp();
        let kx: f64 = self.k[..sp.m()].iter().map(|v| v * v).sum();
        let ky: f64 = self.k[sp.m()..].iter().map(|v| v * v).sum();
        Some(Ok(e * (kx + p.s().powf(2.0 * sp.alpha()) * ky)))
    }
}

/// `u o delta_lambda`.
pub struct Dilated {
    inner: FieldRef,
    lambda: f64,
    meta: FieldMeta,
}

impl Dilated {
    pub fn new(inner: FieldRef, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return input(format!("dilation factor must be positive, got {lambda}"));
        }
        let mut meta = inner.meta().clone();
        meta.name = format!("{}@{lambda}", meta.name);
        Ok(Dilated { inner, lambda, meta })
    }
}

impl AnalyticField for Dilated {
    fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    fn jet(&self, p: &Point, sp: &SpaceParams, order: usize) -> Result<Jet> {
        let q = dilate(p, self.lambda, sp);
        let j = self.inner.jet(&q, sp, order)?;
        let d = sp.dim();
        let la = self.lambda.powf(sp.a());
        let c: Vec<f64> = (0..d).map(|i| if i < sp.m() { self.lambda } else { la }).collect();
        let grad = j.grad.iter().zip(&c).map(|(g, ci)| g * ci).collect();
        let mut hess = j.hess.clone();
        for a in 0..d {
            for b in 0..d {
                hess[a * d + b] *= c[a] * c[b];
            }
        }
        let third = j.third.map(|mut t| {
            for a in 0..d {
                for b in 0..d {
                    for e in 0..d {
                        t[(a * d + b) * d + e] *= c[a] * c[b] * c[e];
                    }
                }
            }
            t
        });
        Ok(Jet { value: j.value, grad, hess, third })
    }

    fn radial(&self, s: f64, t: f64, sp: &SpaceParams, depth: usize) -> Result<RadialData> {
        let la = self.lambda.powf(sp.a());
        let r = self.inner.radial(self.lambda * s, la * t, sp, depth)?;
        let levels = r
            .levels
            .iter()
            .enumerate()
            .map(|(k, &[v, vs, vt])| {
                let f = self.lambda.powi(2 * k as i32);
                [f * v, f * self.lambda * vs, f * la * vt]
            })
            .collect();
        Ok(RadialData { levels })
    }

    fn exact_laplacian(&self, p: &Point, sp: &SpaceParams) -> Option<Result<f64>> {
        let q = dilate(p, self.lambda, sp);
        self.inner.exact_laplacian(&q, sp).map(|r| r.map(|v| v * self.lambda * self.lambda))
    }

    fn value_st(&self, s: f64, t: f64, sp: &SpaceParams) -> Result<f64> {
        self.inner.value_st(self.lambda * s, self.lambda.powf(sp.a()) * t, sp)
    }

    fn laplacian_st(&self, s: f64, t: f64, sp: &SpaceParams) -> Result<f64> {
        Ok(self.lambda * self.lambda * self.inner.laplacian_st(self.lambda * s, self.lambda.powf(sp.a()) * t, sp)?)
    }

    fn homogeneity(&self, sp: &SpaceParams) -> Option<f64> {
        self.inner.homogeneity(sp)
    }
}

/// `Delta_X u` as a field of its own.
pub struct LaplacianOf {
    inner: FieldRef,
    meta: FieldMeta,
}

impl LaplacianOf {
    pub fn new(inner: FieldRef) -> FieldRef {
        if inner.meta().harmonic {
            return zero();
        }
        let mut meta = inner.meta().clone();
        meta.name = format!("lap({})", meta.name);
        Arc::new(LaplacianOf { inner, meta })
    }
}

impl AnalyticField for LaplacianOf {
    fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    fn jet(&self, _p: &Point, _sp: &SpaceParams, _order: usize) -> Result<Jet> {
        Err(Error::NonBiradial(format!("{} has no ambient jet", self.meta.name)))
    }

    fn radial(&self, s: f64, t: f64, sp: &SpaceParams, depth: usize) -> Result<RadialData> {
        let mut r = self.inner.radial(s, t, sp, depth + 1)?;
        r.levels.remove(0);
        Ok(r)
    }

    fn value_st(&self, s: f64, t: f64, sp: &SpaceParams) -> Result<f64> {
        self.inner.laplacian_st(s, t, sp)
    }

    fn homogeneity(&self, sp: &SpaceParams) -> Option<f64> {
        self.inner.homogeneity(sp).map(|k| k - 2.0)
    }
}
