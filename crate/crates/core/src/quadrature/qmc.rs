use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sobol::params::JoeKuoD6;
use sobol::Sobol;

use super::{fixed_sum, Method, Node, QuadSettings, QuadratureResult, Weight};
use crate::error::{input, Result};
use crate::geometry::{gauge, Point, SpaceParams};

/// Randomly shifted Sobol rule on the box `[-1, 1]^m x [-1/a, 1/a]^n`, which
/// contains the unit gauge ball. Radius `r` is reached by dilation, so one
/// point set serves every radius.
#[derive(Debug)]
pub struct QmcRule {
    sp: SpaceParams,
    dim: usize,
    per_replicate: usize,
    /// Unit-cube points, row-major.
    points: Vec<f64>,
    shifts: Vec<Vec<f64>>,
    box_volume: f64,
}

impl QmcRule {
    pub fn new(sp: &SpaceParams, settings: &QuadSettings) -> Result<Self> {
        let dim = sp.dim();
        let per_replicate = settings.qmc_points / settings.qmc_replicates;
        if per_replicate == 0 {
            return input("QMC rule needs at least one point per replicate");
        }
        let params = JoeKuoD6::minimal();
        if dim > 1000 {
            return input(format!("dimension {dim} is too large for the Sobol tables"));
        }
        let mut points = Vec::with_capacity(per_replicate * dim);
        for p in Sobol::<f64>::new(dim, &params).take(per_replicate) {
            points.extend(p);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        let shifts = (0..settings.qmc_replicates).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect();
        let box_volume = 2f64.powi(sp.m() as i32) * (2.0 / sp.a()).powi(sp.n() as i32);
        Ok(QmcRule { sp: *sp, dim, per_replicate, points, shifts, box_volume })
    }

    pub fn points_per_replicate(&self) -> usize {
        self.per_replicate
    }

    fn unit_point(&self, rep: usize, k: usize) -> Point {
        let u = &self.points[k * self.dim..(k + 1) * self.dim];
        let shift = &self.shifts[rep];
        let inv_a = 1.0 / self.sp.a();
        let mut z = Vec::with_capacity(self.dim);
        for (i, (ui, si)) in u.iter().zip(shift).enumerate() {
            let v = (ui + si).fract();
            z.push(if i < self.sp.m() { 2.0 * v - 1.0 } else { inv_a * (2.0 * v - 1.0) });
        }
        Point::from_flat(&z, &self.sp)
    }

    fn run<F>(&self, n_out: usize, scale: f64, f: F) -> Result<Vec<QuadratureResult>>
    where
        F: Fn(usize, usize, &mut [f64]) -> Result<bool> + Sync,
    {
        let reps = self.shifts.len();
        let mut per_rep = Vec::with_capacity(reps);
        for rep in 0..reps {
            let (sum, _) = fixed_sum(self.per_replicate, n_out, |k, out| f(rep, k, out))?;
            per_rep.push(sum.into_iter().map(|v| v * scale / self.per_replicate as f64).collect::<Vec<f64>>());
        }
        Ok((0..n_out)
            .map(|o| {
                let vals: Vec<f64> = per_rep.iter().map(|v| v[o]).collect();
                let mean = vals.iter().sum::<f64>() / reps as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
                QuadratureResult {
                    value: mean,
                    error_estimate: (var / reps as f64).sqrt(),
                    method: Method::Qmc,
                    nodes: reps * self.per_replicate,
                }
            })
            .collect())
    }

    pub(super) fn ball<F>(&self, r: f64, weights: &[Weight], f: &F) -> Result<Vec<QuadratureResult>>
    where
        F: Fn(&Node, &mut [f64]) -> Result<()> + Sync,
    {
        let sp = &self.sp;
        let scale = r.powf(sp.q()) * self.box_volume;
        self.run(weights.len(), scale, |rep, k, out| {
            let z = self.unit_point(rep, k);
            let rho1 = gauge(&z, sp);
            if rho1 >= 1.0 || rho1 == 0.0 {
                return Ok(false);
            }
            let p = crate::geometry::dilate(&z, r, sp);
            self.eval_at(&p, r * rho1, weights, f, out)?;
            Ok(true)
        })
    }

    /// Sphere integrals through the radial projection `z -> delta_{1/rho(z)} z`
    /// of ball samples: `S_r[f] = Q r^{Q-1} int_{B_1} f(delta_r pi(z)) dz`.
    pub(super) fn sphere<F>(&self, r: f64, weights: &[Weight], f: &F) -> Result<Vec<QuadratureResult>>
    where
        F: Fn(&Node, &mut [f64]) -> Result<()> + Sync,
    {
        let sp = &self.sp;
        let scale = sp.q() * r.powf(sp.q() - 1.0) * self.box_volume;
        self.run(weights.len(), scale, |rep, k, out| {
            let z = self.unit_point(rep, k);
            let rho1 = gauge(&z, sp);
            if rho1 >= 1.0 || rho1 == 0.0 {
                return Ok(false);
            }
            let p = crate::geometry::dilate(&z, r / rho1, sp);
            self.eval_at(&p, r, weights, f, out)?;
            Ok(true)
        })
    }

    fn eval_at<F>(&self, p: &Point, rho: f64, weights: &[Weight], f: &F, out: &mut [f64]) -> Result<()>
    where
        F: Fn(&Node, &mut [f64]) -> Result<()> + Sync,
    {
        let s = p.s();
        let psi = if p.y.iter().all(|v| *v == 0.0) { 1.0 } else { (s / rho).powf(2.0 * self.sp.alpha()).min(1.0) };
        let node = Node { rho, psi, s, t: p.t(), point: Some(p) };
        f(&node, out)?;
        for (o, w) in out.iter_mut().zip(weights) {
            *o *= w.eval(rho, s);
        }
        Ok(())
    }
}
