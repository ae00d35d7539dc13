//! Bravais lattice geometry, hopping tables, and the dispersion relation.
//!
//! A lattice is Λ = A·Z³ with the primitive vectors as the columns of A.
//! Hopping is specified on the positive-direction set D: integer vectors m
//! whose first nonzero component is positive, each carrying a weight
//! t(v) > 0 for the physical direction v = A·m. The three primitive
//! directions e₁, e₂, e₃ must always be present; the smallest of their
//! weights is the gap constant c_gap that controls every spectral bound
//! downstream.
//!
//! The dispersion is ε(p) = Σ_{v∈D} 2 t(v) (1 − cos(v·p)). It vanishes
//! quadratically at p = 0 and is periodic under the reciprocal lattice
//! Λ* = B·Z³ with AᵀB = 2π·I.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One hopping entry of a lattice configuration document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoppingEntry {
    pub m: [i64; 3],
    pub t: f64,
}

/// Lattice configuration document; see the JSON schema in the README.
/// `primitive_vectors` lists the rows of A (so column j is aⱼ).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub primitive_vectors: [[f64; 3]; 3],
    pub hopping: Vec<HoppingEntry>,
    #[serde(rename = "U")]
    pub u: f64,
}

impl LatticeConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::BadConfig(e.to_string()))
    }
}

/// A validated hopping direction: integer coordinates, Cartesian direction,
/// and weight.
#[derive(Debug, Clone)]
pub struct Hop {
    pub m: [i64; 3],
    pub v: Vector3<f64>,
    pub t: f64,
}

/// Validated lattice model with derived geometry.
#[derive(Debug, Clone)]
pub struct LatticeModel {
    /// Primitive vectors as columns.
    pub a: Matrix3<f64>,
    /// Reciprocal primitive vectors as columns, AᵀB = 2π·I.
    pub b: Matrix3<f64>,
    /// Hopping table over the positive-direction set D.
    pub hops: Vec<Hop>,
    /// On-site repulsion. Zero is accepted as the free-gas edge case used
    /// by validation tests; negative values are rejected.
    pub u: f64,
    /// Hopping length: smallest even L with every m in {−L/2,…,L/2}³.
    pub r0: i64,
    /// min{t(a₁), t(a₂), t(a₃)}.
    pub c_gap: f64,
}

/// Returns true when the first nonzero component of m is positive.
fn in_positive_set(m: &[i64; 3]) -> bool {
    for &c in m {
        if c != 0 {
            return c > 0;
        }
    }
    false
}

/// B = 2π (Aᵀ)⁻¹, so that aᵢ·bⱼ = 2π δᵢⱼ.
pub fn reciprocal_basis(a: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let det = a.determinant();
    if !det.is_finite() || det.abs() < 1e-12 * a.norm().powi(3).max(1e-300) {
        return Err(Error::SingularBasis { det });
    }
    let inv_t = a
        .transpose()
        .try_inverse()
        .ok_or(Error::SingularBasis { det })?;
    Ok(inv_t * (2.0 * std::f64::consts::PI))
}

pub fn build_lattice(config: &LatticeConfig) -> Result<LatticeModel> {
    let a = Matrix3::from_fn(|i, j| config.primitive_vectors[i][j]);
    let b = reciprocal_basis(&a)?;

    if config.u < 0.0 || !config.u.is_finite() {
        return Err(Error::NegativeInteraction { u: config.u });
    }

    let mut hops: Vec<Hop> = Vec::with_capacity(config.hopping.len());
    for entry in &config.hopping {
        if !in_positive_set(&entry.m) {
            return Err(Error::DirectionNotPositive { m: entry.m });
        }
        if !(entry.t > 0.0) || !entry.t.is_finite() {
            return Err(Error::NonPositiveWeight {
                m: entry.m,
                t: entry.t,
            });
        }
        if hops.iter().any(|h| h.m == entry.m) {
            return Err(Error::DuplicateDirection { m: entry.m });
        }
        let mf = Vector3::new(entry.m[0] as f64, entry.m[1] as f64, entry.m[2] as f64);
        hops.push(Hop {
            m: entry.m,
            v: a * mf,
            t: entry.t,
        });
    }

    let mut c_gap = f64::INFINITY;
    for i in 0..3 {
        let mut e = [0i64; 3];
        e[i] = 1;
        match hops.iter().find(|h| h.m == e) {
            Some(h) => c_gap = c_gap.min(h.t),
            None => return Err(Error::MissingPrimitiveHopping { index: i + 1 }),
        }
    }

    let max_comp = hops
        .iter()
        .flat_map(|h| h.m.iter().map(|c| c.abs()))
        .max()
        .unwrap_or(1);
    let r0 = 2 * max_comp.max(1);

    Ok(LatticeModel {
        a,
        b,
        hops,
        u: config.u,
        r0,
        c_gap,
    })
}

impl LatticeModel {
    /// Convenience constructor used throughout the tests: simple cubic
    /// lattice with nearest-neighbor hopping t and repulsion U.
    pub fn cubic_nn(t: f64, u: f64) -> LatticeModel {
        let config = LatticeConfig {
            primitive_vectors: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            hopping: vec![
                HoppingEntry { m: [1, 0, 0], t },
                HoppingEntry { m: [0, 1, 0], t },
                HoppingEntry { m: [0, 0, 1], t },
            ],
            u,
        };
        build_lattice(&config).expect("cubic lattice is always valid")
    }

    /// ε(p) = Σ_{v∈D} 2 t(v) (1 − cos(v·p)).
    pub fn dispersion(&self, p: &Vector3<f64>) -> f64 {
        let mut eps = 0.0;
        for h in &self.hops {
            eps += 2.0 * h.t * (1.0 - h.v.dot(p).cos());
        }
        eps
    }

    /// Brillouin-zone volume |Λ̂| = |det B|.
    pub fn bz_volume(&self) -> f64 {
        self.b.determinant().abs()
    }

    /// Hessian form of the dispersion at p = 0: ε(p) = pᵀMp + O(|p|⁴)
    /// with M = Σ_v t(v) v vᵀ.
    pub fn dispersion_hessian_form(&self) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        for h in &self.hops {
            m += h.v * h.v.transpose() * h.t;
        }
        m
    }

    /// Quartic Taylor term: ε(p) = pᵀMp − ε₄(p) + O(|p|⁶) with
    /// ε₄(p) = Σ_v t(v) (v·p)⁴ / 12.
    pub fn dispersion_quartic(&self, p: &Vector3<f64>) -> f64 {
        let mut e4 = 0.0;
        for h in &self.hops {
            e4 += h.t * h.v.dot(p).powi(4) / 12.0;
        }
        e4
    }

    /// Largest radius p₀ (found by coarse search on a fixed sample) such
    /// that ε(p) ≥ c_gap |p|²/2 holds for all sampled |p| ≤ p₀. Diagnostic
    /// only; algorithms never consume it.
    pub fn quadratic_bound_radius(&self) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9d5a_b1ce);
        // The binding directions concentrate where the dispersion is
        // slowest, typically along a single hopping vector, so those and
        // the Cartesian axes are sampled explicitly alongside the random
        // bulk.
        let mut dirs: Vec<Vector3<f64>> = Vec::new();
        for i in 0..3 {
            let mut d = Vector3::zeros();
            d[i] = 1.0;
            dirs.push(d);
            dirs.push(-d);
        }
        for h in &self.hops {
            dirs.push(h.v / h.v.norm());
            dirs.push(-h.v / h.v.norm());
        }
        dirs.extend((0..256).map(|_| loop {
            let v = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let n = v.norm();
            if n > 1e-3 && n <= 1.0 {
                break v / n;
            }
        }));
        // Start from the scale of the BZ and shrink until the bound holds
        // at every sampled radius fraction below.
        let mut r = self.b.norm();
        for _ in 0..400 {
            let ok = dirs.iter().all(|d| {
                (1..=24).all(|k| {
                    let p = d * (r * k as f64 / 24.0);
                    self.dispersion(&p) >= 0.5 * self.c_gap * p.norm_squared()
                })
            });
            if ok {
                return 0.98 * r;
            }
            r *= 0.98;
        }
        0.98 * r
    }
}

/// Finite periodic box Λ_L with sites indexed by {−L/2,…,L/2}³, L even.
#[derive(Debug, Clone)]
pub struct FiniteLattice {
    pub l: i64,
    pub side: i64,
    pub r0: i64,
}

impl FiniteLattice {
    pub fn new(model: &LatticeModel, l: i64) -> Result<FiniteLattice> {
        if l <= 0 || l % 2 != 0 {
            return Err(Error::OddLatticeSize { l });
        }
        if l < model.r0 {
            return Err(Error::GridTooCoarse { l, r0: model.r0 });
        }
        Ok(FiniteLattice {
            l,
            side: l + 1,
            r0: model.r0,
        })
    }

    /// A box of the same indexing but without the hopping-range guard,
    /// used for Neumann boxes where any even l ≥ 2 is meaningful.
    pub fn new_unchecked(l: i64) -> Result<FiniteLattice> {
        if l <= 0 || l % 2 != 0 {
            return Err(Error::OddLatticeSize { l });
        }
        Ok(FiniteLattice {
            l,
            side: l + 1,
            r0: 0,
        })
    }

    pub fn n_sites(&self) -> usize {
        (self.side * self.side * self.side) as usize
    }

    pub fn site_index(&self, n: [i64; 3]) -> usize {
        let h = self.l / 2;
        let s = self.side;
        debug_assert!(n.iter().all(|&c| -h <= c && c <= h));
        ((n[0] + h) + s * ((n[1] + h) + s * (n[2] + h))) as usize
    }

    pub fn site_coords(&self, idx: usize) -> [i64; 3] {
        let s = self.side;
        let h = self.l / 2;
        let i = idx as i64;
        [i % s - h, (i / s) % s - h, i / (s * s) - h]
    }

    /// Wraps an integer coordinate into {−L/2,…,L/2} (periodic images).
    pub fn wrap(&self, c: i64) -> i64 {
        let s = self.side;
        let h = self.l / 2;
        (((c + h) % s + s) % s) - h
    }

    pub fn contains(&self, n: [i64; 3]) -> bool {
        let h = self.l / 2;
        n.iter().all(|&c| -h <= c && c <= h)
    }
}

/// Dual momentum grid Λ̂_L = {Σ mⱼ bⱼ/(L+1)} with mⱼ ∈ {−L/2,…,L/2},
/// indexed exactly like the sites.
#[derive(Debug, Clone)]
pub struct MomentumGrid {
    pub l: i64,
    pub side: i64,
    pub points: Vec<Vector3<f64>>,
    pub zero_index: usize,
}

pub fn momentum_grid(model: &LatticeModel, fl: &FiniteLattice) -> MomentumGrid {
    let s = fl.side;
    let mut points = Vec::with_capacity(fl.n_sites());
    for idx in 0..fl.n_sites() {
        let m = fl.site_coords(idx);
        let frac = Vector3::new(m[0] as f64, m[1] as f64, m[2] as f64) / s as f64;
        points.push(model.b * frac);
    }
    MomentumGrid {
        l: fl.l,
        side: s,
        points,
        zero_index: fl.site_index([0, 0, 0]),
    }
}

impl MomentumGrid {
    /// Plane-wave phase p·x for grid momentum index `pi` and site `n`:
    /// exactly 2π (m·n)/(L+1) because BᵀA = 2π·I.
    pub fn phase(&self, fl: &FiniteLattice, pi: usize, n: [i64; 3]) -> f64 {
        let m = fl.site_coords(pi);
        let dot = (m[0] * n[0] + m[1] * n[1] + m[2] * n[2]) as f64;
        2.0 * std::f64::consts::PI * dot / self.side as f64
    }
}

/// Finite-lattice Fourier transform f̂(p) = |Λ_L|^{−1/2} Σ_x f(x) e^{−ip·x},
/// returned on the momentum grid's indexing. Direct summation; used for
/// unitarity checks and small-lattice spot checks, not in hot paths.
pub fn fourier_transform(
    model: &LatticeModel,
    fl: &FiniteLattice,
    f: &[f64],
) -> Vec<nalgebra::Complex<f64>> {
    let _ = model;
    let n_sites = fl.n_sites();
    assert_eq!(f.len(), n_sites);
    let norm = 1.0 / (n_sites as f64).sqrt();
    let grid_side = fl.side as f64;
    let mut out = vec![nalgebra::Complex::new(0.0, 0.0); n_sites];
    for (pi, out_p) in out.iter_mut().enumerate() {
        let m = fl.site_coords(pi);
        let mut acc = nalgebra::Complex::new(0.0, 0.0);
        for (xi, &fx) in f.iter().enumerate() {
            let n = fl.site_coords(xi);
            let dot = (m[0] * n[0] + m[1] * n[1] + m[2] * n[2]) as f64;
            let angle = -2.0 * std::f64::consts::PI * dot / grid_side;
            acc += nalgebra::Complex::new(angle.cos(), angle.sin()) * fx;
        }
        *out_p = acc * norm;
    }
    out
}
