//! Brillouin-zone quadrature.
//!
//! All integrals are normalized by the zone volume: the returned value is
//! |Λ̂|⁻¹ ∫_Λ̂ f(p) dp, computed as a midpoint rule over the unit cube in
//! B-coordinates (p = B·u, u ∈ [−½,½)³). Grids use an odd per-axis count so
//! that p = 0 is the exact center of one cell.
//!
//! Integrands with an inverse-quadratic singularity at p = 0 (the Green's
//! function class 1/ε) are handled by excising the center cell and putting
//! back an analytic approximation: the singular model c/(pᵀMp), with M the
//! half-Hessian of the dispersion at zero, integrated exactly over the
//! inscribed ellipsoid of the cell, plus a scale-invariant corner factor
//! for the rest of the cell. The leftover error is first order in the cell
//! width and is removed by Richardson extrapolation over grid refinements.
//!
//! Integrands that are functions of ε(p) alone (the thermodynamic energy
//! and depletion integrands, sharply peaked near p = 0 at small density)
//! get a dedicated split evaluator: an inner ellipsoid εq ≤ δ where the
//! integral reduces to an adaptive 1D radial integral (with the quartic
//! dispersion correction applied analytically), and an outer midpoint sum.
//! This mirrors the small-ball/large-ball split used in the energy
//! estimates themselves and stays accurate when the structure of the
//! integrand lives far below any affordable grid resolution.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::LatticeModel;
use crate::numerics::{adaptive_simpson, extrapolate_powers, pairwise_sum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularOrder {
    None,
    InverseQuadratic,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureParams {
    /// Per-axis midpoint count; rounded up to the next odd integer so the
    /// origin is a cell center.
    pub n_q: usize,
    /// Sets the size of the region treated analytically around p = 0,
    /// as a fraction of the zone inradius.
    pub singularity_radius: f64,
    /// Number of refinement levels for Richardson extrapolation.
    pub refinement_levels: usize,
    pub target_rel_error: f64,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        QuadratureParams {
            n_q: 128,
            singularity_radius: 0.125,
            refinement_levels: 3,
            target_rel_error: 1e-6,
        }
    }
}

impl QuadratureParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_q < 8 {
            return Err(Error::BadConfig(format!(
                "quadrature grid resolution {} is below the minimum of 8",
                self.n_q
            )));
        }
        if !(self.singularity_radius > 0.0 && self.singularity_radius <= 0.25) {
            return Err(Error::BadConfig(format!(
                "singularity radius fraction {} outside (0, 0.25]",
                self.singularity_radius
            )));
        }
        if self.refinement_levels < 2 {
            return Err(Error::BadConfig(
                "at least two refinement levels are required".into(),
            ));
        }
        if !(self.target_rel_error > 0.0) {
            return Err(Error::BadConfig("target relative error must be positive".into()));
        }
        Ok(())
    }

    fn level_counts(&self) -> Vec<usize> {
        let mut n = if self.n_q % 2 == 0 { self.n_q + 1 } else { self.n_q };
        let mut counts = Vec::with_capacity(self.refinement_levels);
        for _ in 0..self.refinement_levels {
            counts.push(n);
            n = 2 * n - 1;
        }
        counts
    }
}

/// Hopping data in B-coordinates: v·p = 2π m·u, so only the integer m and
/// the weight enter grid evaluations.
struct UHops {
    m: Vec<[i64; 3]>,
    two_t: Vec<f64>,
}

impl UHops {
    fn new(model: &LatticeModel) -> Self {
        UHops {
            m: model.hops.iter().map(|h| h.m).collect(),
            two_t: model.hops.iter().map(|h| 2.0 * h.t).collect(),
        }
    }

    /// ε at the point p = B·u.
    fn eps(&self, u: [f64; 3]) -> f64 {
        let tau = 2.0 * std::f64::consts::PI;
        let mut acc = 0.0;
        for (m, two_t) in self.m.iter().zip(&self.two_t) {
            let theta = tau * (m[0] as f64 * u[0] + m[1] as f64 * u[1] + m[2] as f64 * u[2]);
            acc += two_t * (1.0 - theta.cos());
        }
        acc
    }
}

/// Geometry of the singular region shared by the evaluators.
struct SingularGeometry {
    /// M̃ = BᵀMB: the dispersion Hessian form pulled back to u-space,
    /// εq(B·u) = uᵀM̃u.
    m_tilde: Matrix3<f64>,
    /// 1/√det(M̃).
    inv_sqrt_det: f64,
    /// Largest σ with {uᵀM̃u ≤ σ·w²} inside the cube of half-width w.
    sigma_unit: f64,
}

impl SingularGeometry {
    fn new(model: &LatticeModel) -> Self {
        let m = model.dispersion_hessian_form();
        let m_tilde = model.b.transpose() * m * model.b;
        let det = m_tilde.determinant();
        let inv = m_tilde.try_inverse().expect("dispersion Hessian is positive definite");
        let max_diag = inv[(0, 0)].max(inv[(1, 1)]).max(inv[(2, 2)]);
        SingularGeometry {
            m_tilde,
            inv_sqrt_det: 1.0 / det.sqrt(),
            sigma_unit: 1.0 / max_diag,
        }
    }

    fn form(&self, u: [f64; 3]) -> f64 {
        let v = Vector3::new(u[0], u[1], u[2]);
        (v.transpose() * self.m_tilde * v)[(0, 0)]
    }

    /// Corner factor: ∫ over the unit cell minus its inscribed ellipsoid of
    /// dw/(wᵀM̃w), by a fixed reference subdivision. Scale invariance of the
    /// quadratic form makes this a per-model constant; its small quadrature
    /// error only perturbs the first-order term that extrapolation removes.
    fn corner_factor(&self) -> f64 {
        let sigma = 0.25 * self.sigma_unit;
        let n = 64usize;
        let h = 1.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let wx = (i as f64 + 0.5) * h - 0.5;
            for j in 0..n {
                let wy = (j as f64 + 0.5) * h - 0.5;
                for k in 0..n {
                    let wz = (k as f64 + 0.5) * h - 0.5;
                    let q = self.form([wx, wy, wz]);
                    if q > sigma {
                        acc += 1.0 / q;
                    }
                }
            }
        }
        acc * h * h * h
    }
}

fn node(k: usize, n: usize) -> f64 {
    (k as f64 + 0.5) / n as f64 - 0.5
}

/// One midpoint level of a general integrand f(p). Returns (sum of f·h³,
/// sum of |f|·h³, first non-finite node if any). The center cell is skipped
/// when `excise_center` is set.
fn level_sum_general<F>(
    model: &LatticeModel,
    n: usize,
    excise_center: bool,
    f: &F,
) -> (f64, f64, Option<[f64; 3]>)
where
    F: Fn(&Vector3<f64>) -> f64 + Sync,
{
    let center = (n - 1) / 2;
    let b1 = model.b.column(0).into_owned();
    let b2 = model.b.column(1).into_owned();
    let b3 = model.b.column(2).into_owned();
    let h3 = (1.0 / n as f64).powi(3);

    let slabs: Vec<(f64, f64, Option<[f64; 3]>)> = (0..n)
        .into_par_iter()
        .map(|k1| {
            let u1 = node(k1, n);
            let mut acc = 0.0;
            let mut acc_abs = 0.0;
            let mut bad = None;
            for k2 in 0..n {
                let u2 = node(k2, n);
                let base = b1 * u1 + b2 * u2;
                for k3 in 0..n {
                    if excise_center && k1 == center && k2 == center && k3 == center {
                        continue;
                    }
                    let u3 = node(k3, n);
                    let p = base + b3 * u3;
                    let v = f(&p);
                    if !v.is_finite() && bad.is_none() {
                        bad = Some([p[0], p[1], p[2]]);
                    }
                    acc += v;
                    acc_abs += v.abs();
                }
            }
            (acc * h3, acc_abs * h3, bad)
        })
        .collect();

    let sum = pairwise_sum(&slabs.iter().map(|s| s.0).collect::<Vec<_>>());
    let abs = pairwise_sum(&slabs.iter().map(|s| s.1).collect::<Vec<_>>());
    let bad = slabs.iter().find_map(|s| s.2);
    (sum, abs, bad)
}

/// One midpoint level of an integrand g(cos(p·x), ε(p)) with x = A·m_x a
/// lattice site (m_x = 0 gives a plain function of ε). All phases advance
/// by constant rotations along the innermost axis, so each node costs a
/// handful of multiplies per tracked direction instead of transcendental
/// calls. On failure the second slot of the reported point carries ε.
fn level_sum_eps<G>(
    hops: &UHops,
    phase_m: [i64; 3],
    n: usize,
    excise_center: bool,
    g: &G,
) -> (f64, f64, Option<f64>)
where
    G: Fn(f64, f64) -> f64 + Sync,
{
    let tau = 2.0 * std::f64::consts::PI;
    let center = (n - 1) / 2;
    let n_h = hops.m.len();
    // the phase factor is tracked as one more rotating direction
    let mut dir_m: Vec<[i64; 3]> = hops.m.clone();
    dir_m.push(phase_m);
    let n_dir = n_h + 1;
    let h3 = (1.0 / n as f64).powi(3);

    let slabs: Vec<(f64, f64, Option<f64>)> = (0..n)
        .into_par_iter()
        .map(|k1| {
            let u1 = node(k1, n);
            let mut acc = 0.0;
            let mut acc_abs = 0.0;
            let mut bad = None;
            let mut zr = vec![0.0f64; n_dir];
            let mut zi = vec![0.0f64; n_dir];
            let mut wr = vec![0.0f64; n_dir];
            let mut wi = vec![0.0f64; n_dir];
            for k2 in 0..n {
                let u2 = node(k2, n);
                for (di, m) in dir_m.iter().enumerate() {
                    let theta0 =
                        tau * (m[0] as f64 * u1 + m[1] as f64 * u2 + m[2] as f64 * node(0, n));
                    zr[di] = theta0.cos();
                    zi[di] = theta0.sin();
                    let step = tau * m[2] as f64 / n as f64;
                    wr[di] = step.cos();
                    wi[di] = step.sin();
                }
                for k3 in 0..n {
                    let skip = excise_center && k1 == center && k2 == center && k3 == center;
                    if !skip {
                        let mut eps = 0.0;
                        for hi in 0..n_h {
                            eps += hops.two_t[hi] * (1.0 - zr[hi]);
                        }
                        let v = g(zr[n_h], eps);
                        if !v.is_finite() && bad.is_none() {
                            bad = Some(eps);
                        }
                        acc += v;
                        acc_abs += v.abs();
                    }
                    for di in 0..n_dir {
                        let r = zr[di] * wr[di] - zi[di] * wi[di];
                        zi[di] = zr[di] * wi[di] + zi[di] * wr[di];
                        zr[di] = r;
                    }
                }
            }
            (acc * h3, acc_abs * h3, bad)
        })
        .collect();

    let sum = pairwise_sum(&slabs.iter().map(|s| s.0).collect::<Vec<_>>());
    let abs = pairwise_sum(&slabs.iter().map(|s| s.1).collect::<Vec<_>>());
    let bad = slabs.iter().find_map(|s| s.2);
    (sum, abs, bad)
}

/// Estimates the singular strength c = lim_{p→0} f(p)·(pᵀMp) by averaging
/// over a symmetric star of tiny offsets. An inaccurate estimate only
/// shifts the first-order error term, which extrapolation removes.
fn estimate_strength<F>(model: &LatticeModel, f: &F) -> Result<f64>
where
    F: Fn(&Vector3<f64>) -> f64 + Sync,
{
    let m = model.dispersion_hessian_form();
    let eta = 1e-4;
    let mut dirs: Vec<[f64; 3]> = Vec::new();
    for i in 0..3 {
        for s in [-1.0, 1.0] {
            let mut d = [0.0; 3];
            d[i] = s;
            dirs.push(d);
        }
    }
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                let r = (3.0f64).sqrt();
                dirs.push([sx / r, sy / r, sz / r]);
            }
        }
    }
    let mut acc = 0.0;
    for d in &dirs {
        let u = Vector3::new(d[0] * eta, d[1] * eta, d[2] * eta);
        let p = model.b * u;
        let quad = (p.transpose() * m * p)[(0, 0)];
        let v = f(&p) * quad;
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { p: [p[0], p[1], p[2]] });
        }
        acc += v;
    }
    Ok(acc / dirs.len() as f64)
}

/// Extrapolates the level sums and enforces the error target. `exponents`
/// are the known orders of the level error expansion. Relative error is
/// measured against max(|I|, 10⁻⁷·∫|f|): an integral below 10⁻⁷ of its
/// absolute mass has cancelled to rounding dust and cannot be held to a
/// relative standard against itself.
fn finish_levels(
    widths: &[f64],
    values: &[f64],
    exponents: &[f64],
    abs_mass: f64,
    params: &QuadratureParams,
) -> Result<(f64, f64)> {
    let last = values[values.len() - 1];
    let spread = values
        .iter()
        .map(|v| (v - last).abs())
        .fold(0.0_f64, f64::max);
    let (value, abs_err) = if spread <= 1e-12 * abs_mass.max(last.abs()) {
        // converged to rounding level before extrapolation
        (last, spread)
    } else {
        extrapolate_powers(widths, values, exponents)
    };
    let denom = value.abs().max(1e-7 * abs_mass).max(1e-300);
    let rel = abs_err / denom;
    if rel > params.target_rel_error {
        return Err(Error::NoConvergence {
            estimate: rel,
            target: params.target_rel_error,
            levels: values.len(),
        });
    }
    Ok((value, rel))
}

/// Error exponents of the excised-cell midpoint scheme: the near-origin
/// shells contribute a first-order term, Euler-Maclaurin corrections a
/// third-order one.
const CELL_EXPONENTS: [f64; 2] = [1.0, 3.0];

/// Error exponents of the split scheme's outer sum: boundary cells of the
/// cut domain contribute at second order even after subdivision.
const SPLIT_EXPONENTS: [f64; 2] = [2.0, 3.0];

/// |Λ̂|⁻¹ ∫_Λ̂ f(p) dp for a general integrand.
pub fn bz_integrate<F>(
    model: &LatticeModel,
    f: F,
    order: SingularOrder,
    params: &QuadratureParams,
) -> Result<(f64, f64)>
where
    F: Fn(&Vector3<f64>) -> f64 + Sync,
{
    params.validate()?;
    let singular = order == SingularOrder::InverseQuadratic;
    let (geom, corner, strength) = if singular {
        let geom = SingularGeometry::new(model);
        let corner = geom.corner_factor();
        let c = estimate_strength(model, &f)?;
        (Some(geom), corner, c)
    } else {
        (None, 0.0, 0.0)
    };

    let counts = params.level_counts();
    let mut widths = Vec::new();
    let mut values = Vec::new();
    let mut abs_mass = 0.0;
    for &n in &counts {
        let (mut sum, abs, bad) = level_sum_general(model, n, singular, &f);
        if let Some(p) = bad {
            return Err(Error::NonFiniteIntegrand { p });
        }
        if let Some(geom) = &geom {
            let h = 1.0 / n as f64;
            let sigma = 0.25 * geom.sigma_unit;
            let ellipsoid = 4.0 * std::f64::consts::PI * sigma.sqrt() * geom.inv_sqrt_det;
            sum += strength * h * (ellipsoid + corner);
        }
        widths.push(1.0 / n as f64);
        values.push(sum);
        abs_mass = abs;
    }
    finish_levels(&widths, &values, &CELL_EXPONENTS, abs_mass, params)
}

/// |Λ̂|⁻¹ ∫_Λ̂ g(ε(p)) dp with the same excision scheme as `bz_integrate`
/// but the fast phase-rotation evaluator. `strength` is the analytically
/// known singular coefficient c with g(ε) ≈ c/ε near ε = 0 (None for a
/// regular integrand).
pub fn bz_integrate_eps<G>(
    model: &LatticeModel,
    g: G,
    strength: Option<f64>,
    params: &QuadratureParams,
) -> Result<(f64, f64)>
where
    G: Fn(f64) -> f64 + Sync,
{
    bz_integrate_eps_phase(model, [0, 0, 0], |_, e| g(e), strength, params)
}

/// |Λ̂|⁻¹ ∫_Λ̂ g(cos(p·x), ε(p)) dp for a lattice site x = A·m_x, sharing
/// the excision scheme and the rotation evaluator. `strength` is the
/// coefficient c with g ≈ c/ε near p = 0 (the cosine tends to 1 there, so
/// the singular model is unchanged).
pub fn bz_integrate_eps_phase<G>(
    model: &LatticeModel,
    phase_m: [i64; 3],
    g: G,
    strength: Option<f64>,
    params: &QuadratureParams,
) -> Result<(f64, f64)>
where
    G: Fn(f64, f64) -> f64 + Sync,
{
    params.validate()?;
    let hops = UHops::new(model);
    let singular = strength.is_some();
    let (geom, corner) = if singular {
        let geom = SingularGeometry::new(model);
        let corner = geom.corner_factor();
        (Some(geom), corner)
    } else {
        (None, 0.0)
    };

    let counts = params.level_counts();
    let mut widths = Vec::new();
    let mut values = Vec::new();
    let mut abs_mass = 0.0;
    for &n in &counts {
        let (mut sum, abs, bad) = level_sum_eps(&hops, phase_m, n, singular, &g);
        if let Some(eps) = bad {
            return Err(Error::NonFiniteIntegrand { p: [f64::NAN, f64::NAN, eps] });
        }
        if let (Some(geom), Some(c)) = (&geom, strength) {
            let h = 1.0 / n as f64;
            let sigma = 0.25 * geom.sigma_unit;
            let ellipsoid = 4.0 * std::f64::consts::PI * sigma.sqrt() * geom.inv_sqrt_det;
            sum += c * h * (ellipsoid + corner);
        }
        widths.push(1.0 / n as f64);
        values.push(sum);
        abs_mass = abs;
    }
    finish_levels(&widths, &values, &CELL_EXPONENTS, abs_mass, params)
}

/// Split evaluator for integrands g(ε) whose structure concentrates near
/// p = 0 (scale set by the density, far below any affordable grid).
///
/// The zone is split at the ellipsoid εq(p) = pᵀMp = δ. Inside, the exact
/// coarea reduction gives |Λ̂|⁻¹∫ g(εq) dp = (4π/√detM̃)∫₀^√δ g(r²) r² dr,
/// corrected for ε ≠ εq by the analytically integrated quartic term (its
/// radial part integrates by parts, so no derivative of g is needed).
/// Outside, a midpoint sum with cells straddling the boundary subdivided.
/// The inner pieces are level-independent, so Richardson extrapolation of
/// the totals acts on the outer sum alone.
pub fn integrate_eps_split<G>(
    model: &LatticeModel,
    g: G,
    params: &QuadratureParams,
) -> Result<(f64, f64)>
where
    G: Fn(f64) -> f64 + Sync,
{
    params.validate()?;
    let hops = UHops::new(model);
    let geom = SingularGeometry::new(model);
    // inner ellipsoid εq ≤ δ sized as a fraction of the largest ellipsoid
    // inscribed in the zone
    let sigma_bz = 0.25 * geom.sigma_unit;
    let frac = 2.0 * params.singularity_radius;
    let delta = frac * frac * sigma_bz;

    // Radial inner integral. g may carry an integrable 1/ε singularity,
    // so g(r²)·r² has a finite limit at r = 0 that floating point cannot
    // reach head on; the first sliver [0, r_lo] uses that limit directly.
    let sqrt_delta = delta.sqrt();
    let r_lo = 1e-8 * sqrt_delta;
    let strength_hat = g(r_lo * r_lo) * r_lo * r_lo;
    let scale_r2 = [0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|&f| {
            let r = f * sqrt_delta;
            (g(r * r) * r * r).abs()
        })
        .fold(strength_hat.abs(), f64::max);
    let tol2 = 1e-12 * scale_r2 * sqrt_delta;
    let radial = strength_hat * r_lo
        + adaptive_simpson(&|r: f64| g(r * r) * r * r, r_lo, sqrt_delta, tol2);
    let four_pi = 4.0 * std::f64::consts::PI;
    let inner = four_pi * geom.inv_sqrt_det * radial;

    // ∫_{S²} ε₄(M^{−1/2}ω) dΩ via a Fibonacci sphere; smooth integrand,
    // fixed node count, fully deterministic
    let m = model.dispersion_hessian_form();
    let m_inv_sqrt = inv_sqrt_spd(&m);
    let eta_int = sphere_integral(8192, |w| model.dispersion_quartic(&(m_inv_sqrt * w)));
    // g(ε) = g(εq) − g'(εq)·ε₄ + …, and the radial part of the correction
    // integrates by parts so no derivative of g is needed:
    // ∫₀^R g'(r²) r⁶ dr = ½ g(R²) R⁵ − (5/2) ∫₀^R g(r²) r⁴ dr
    let tol4 = 1e-12 * scale_r2 * delta * sqrt_delta;
    let radial4 = strength_hat * r_lo.powi(3) / 3.0
        + adaptive_simpson(&|r: f64| g(r * r) * r.powi(4), r_lo, sqrt_delta, tol4);
    let gprime_radial = 0.5 * g(delta) * sqrt_delta.powi(5) - 2.5 * radial4;
    let quartic_corr = -eta_int * geom.inv_sqrt_det * gprime_radial;

    let inner_total = inner + quartic_corr;

    // outer midpoint sum with straddle-cell subdivision
    let counts = params.level_counts();
    let mut widths = Vec::new();
    let mut values = Vec::new();
    let mut abs_mass = 0.0;
    // conservative estimate of how much √(uᵀM̃u) can vary across a cell
    let lam_max = spd_max_eigenvalue(&geom.m_tilde);
    for &n in &counts {
        let h = 1.0 / n as f64;
        let band = 0.9 * h * lam_max.sqrt() * 3f64.sqrt();
        let (sum, abs, bad) = level_sum_eps_outer(&hops, &geom, n, delta, band, &g);
        if let Some(eps) = bad {
            return Err(Error::NonFiniteIntegrand { p: [f64::NAN, f64::NAN, eps] });
        }
        widths.push(h);
        values.push(sum + inner_total);
        abs_mass = abs + inner_total.abs();
    }
    finish_levels(&widths, &values, &SPLIT_EXPONENTS, abs_mass, params)
}

/// Outer part of the split evaluator: midpoint sum over cells with
/// εq > δ, subdividing cells near the boundary 16³-fold.
fn level_sum_eps_outer<G>(
    hops: &UHops,
    geom: &SingularGeometry,
    n: usize,
    delta: f64,
    band: f64,
    g: &G,
) -> (f64, f64, Option<f64>)
where
    G: Fn(f64) -> f64 + Sync,
{
    let h = 1.0 / n as f64;
    let h3 = h * h * h;
    let sqrt_delta = delta.sqrt();
    const SUB: usize = 8;
    let sub_h = h / SUB as f64;
    let sub_vol = sub_h * sub_h * sub_h;

    let slabs: Vec<(f64, f64, Option<f64>)> = (0..n)
        .into_par_iter()
        .map(|k1| {
            let u1 = node(k1, n);
            let mut acc = 0.0;
            let mut acc_abs = 0.0;
            let mut bad = None;
            let mut push = |eps: f64, weight: f64, bad: &mut Option<f64>| -> f64 {
                let v = g(eps);
                if !v.is_finite() && bad.is_none() {
                    *bad = Some(eps);
                }
                acc_abs += v.abs() * weight;
                v * weight
            };
            for k2 in 0..n {
                let u2 = node(k2, n);
                for k3 in 0..n {
                    let u3 = node(k3, n);
                    let u = [u1, u2, u3];
                    let q = geom.form(u);
                    let dist = q.sqrt() - sqrt_delta;
                    if dist.abs() <= band {
                        // straddling cell: classify subcells
                        for s1 in 0..SUB {
                            let w1 = u1 - 0.5 * h + (s1 as f64 + 0.5) * sub_h;
                            for s2 in 0..SUB {
                                let w2 = u2 - 0.5 * h + (s2 as f64 + 0.5) * sub_h;
                                for s3 in 0..SUB {
                                    let w3 = u3 - 0.5 * h + (s3 as f64 + 0.5) * sub_h;
                                    let w = [w1, w2, w3];
                                    if geom.form(w) > delta {
                                        acc += push(hops.eps(w), sub_vol, &mut bad);
                                    }
                                }
                            }
                        }
                    } else if dist > 0.0 {
                        acc += push(hops.eps(u), h3, &mut bad);
                    }
                }
            }
            (acc, acc_abs, bad)
        })
        .collect();

    let sum = pairwise_sum(&slabs.iter().map(|s| s.0).collect::<Vec<_>>());
    let abs = pairwise_sum(&slabs.iter().map(|s| s.1).collect::<Vec<_>>());
    let bad = slabs.iter().find_map(|s| s.2);
    (sum, abs, bad)
}

/// Independent cross-check for the Green's-function integral: plain
/// midpoint summation of 1/ε over the zone minus a fixed Cartesian ball,
/// plus the analytic ball integral of the quadratic model with its quartic
/// correction,
///   ∫_{|p|<r} dp/ε ≈ r ∫_{S²} dΩ/(ωᵀMω) + (r³/3) ∫_{S²} ε₄(ω)/(ωᵀMω)² dΩ.
/// Cells straddling the sphere are subdivided. No extrapolation, no shared
/// machinery with the production path. Returns |Λ̂|⁻¹ ∫ dp/ε(p).
pub fn green_integral_ball_oracle(model: &LatticeModel, n: usize, radius_frac: f64) -> f64 {
    assert!(n % 2 == 0, "even grid keeps nodes off the origin");
    let hops = UHops::new(model);
    let b = model.b;
    let r = radius_frac * bz_inradius(model);
    let m = model.dispersion_hessian_form();

    let s2 = sphere_integral(20_000, |w| 1.0 / (w.transpose() * m * w)[(0, 0)]);
    let s4 = sphere_integral(20_000, |w| {
        let q = (w.transpose() * m * w)[(0, 0)];
        model.dispersion_quartic(&w) / (q * q)
    });
    let ball = (r * s2 + r * r * r / 3.0 * s4) / model.bz_volume();

    let h = 1.0 / n as f64;
    let h3 = h * h * h;
    // |B·u| varies by at most ‖B‖·|Δu| across a cell
    let band = model.b.norm() * h * 3f64.sqrt() / 2.0 * 1.05;
    const SUB: usize = 12;
    let sub_h = h / SUB as f64;
    let sub_vol = sub_h * sub_h * sub_h;

    let slabs: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k1| {
            let u1 = node(k1, n);
            let mut acc = 0.0;
            for k2 in 0..n {
                let u2 = node(k2, n);
                for k3 in 0..n {
                    let u3 = node(k3, n);
                    let u = [u1, u2, u3];
                    let p = b * Vector3::new(u[0], u[1], u[2]);
                    let dist = p.norm() - r;
                    if dist.abs() <= band {
                        for s1 in 0..SUB {
                            let w1 = u1 - 0.5 * h + (s1 as f64 + 0.5) * sub_h;
                            for s2i in 0..SUB {
                                let w2 = u2 - 0.5 * h + (s2i as f64 + 0.5) * sub_h;
                                for s3 in 0..SUB {
                                    let w3 = u3 - 0.5 * h + (s3 as f64 + 0.5) * sub_h;
                                    let w = [w1, w2, w3];
                                    let pw = b * Vector3::new(w[0], w[1], w[2]);
                                    if pw.norm() > r {
                                        acc += sub_vol / hops.eps(w);
                                    }
                                }
                            }
                        }
                    } else if dist > 0.0 {
                        acc += h3 / hops.eps(u);
                    }
                }
            }
            acc
        })
        .collect();

    pairwise_sum(&slabs) + ball
}

/// Distance from the origin to the nearest face of the Brillouin-zone
/// parallelepiped B·[−½,½)³.
pub fn bz_inradius(model: &LatticeModel) -> f64 {
    let b_inv = model.b.try_inverse().expect("reciprocal basis invertible");
    let mut r = f64::INFINITY;
    for i in 0..3 {
        let row = b_inv.row(i);
        r = r.min(0.5 / row.norm());
    }
    r
}

/// ∫_{S²} f(ω) dΩ over the unit sphere by a Fibonacci point set.
fn sphere_integral<F: Fn(Vector3<f64>) -> f64>(k: usize, f: F) -> f64 {
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut terms = Vec::with_capacity(k);
    for i in 0..k {
        let z = 1.0 - (2.0 * i as f64 + 1.0) / k as f64;
        let phi = 2.0 * std::f64::consts::PI * (i as f64 / golden).fract();
        let s = (1.0 - z * z).sqrt();
        terms.push(f(Vector3::new(s * phi.cos(), s * phi.sin(), z)));
    }
    pairwise_sum(&terms) * 4.0 * std::f64::consts::PI / k as f64
}

/// M^{−1/2} for a symmetric positive definite 3×3 matrix.
fn inv_sqrt_spd(m: &Matrix3<f64>) -> Matrix3<f64> {
    let eig = m.symmetric_eigen();
    let mut d = Matrix3::zeros();
    for i in 0..3 {
        d[(i, i)] = 1.0 / eig.eigenvalues[i].sqrt();
    }
    eig.eigenvectors * d * eig.eigenvectors.transpose()
}

fn spd_max_eigenvalue(m: &Matrix3<f64>) -> f64 {
    m.symmetric_eigen().eigenvalues.amax()
}
