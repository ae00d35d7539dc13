//! Hopping Laplacians on finite boxes and their spectral diagnostics.
//!
//! Three operators live on the box {−L/2,…,L/2}³ (side L+1, L even): the
//! periodic Laplacian with hopping wrapped through the boundary, the
//! Neumann Laplacian keeping only edges with both endpoints inside the
//! box, and the special Neumann Laplacian that further restricts hopping
//! to the three primitive directions. The last one separates into
//! one-dimensional chains and is exactly solvable: eigenvalues
//! 4 Σᵢ t(aᵢ) sin²(kᵢπ/(2(L+1))) over k ∈ {0,…,L}³ with shifted-cosine
//! eigenvectors. As quadratic forms the three are ordered
//! special ≤ Neumann ≤ periodic, which pins the Neumann spectrum between
//! two explicit ones. That ordering yields the (L+1)⁻² bounds on the
//! spectral gap and the trace-inverse comparison against the momentum-grid
//! sum, the two spectral inputs consumed by the box-localized lower bound.

use nalgebra::DMatrix;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lattice::{momentum_grid, FiniteLattice, LatticeModel};
use crate::linalg::smallest_nonzero_eigenvalue;
use crate::numerics::pairwise_sum;

/// Largest dimension (ℓ+1)³ handed to the dense symmetric eigensolver.
pub const DENSE_EIG_CAP: usize = 3375;

const ORDER_TOL: f64 = 1e-10;
const GAP_TOL: f64 = 1e-10;
const ITERATIVE_GAP_SEED: u64 = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianKind {
    Periodic,
    Neumann,
    NeumannSpecial,
}

impl LaplacianKind {
    pub fn label(self) -> &'static str {
        match self {
            LaplacianKind::Periodic => "periodic",
            LaplacianKind::Neumann => "neumann",
            LaplacianKind::NeumannSpecial => "neumann_special",
        }
    }
}

/// Symmetric hopping Laplacian in compressed sparse rows. Off-diagonal
/// entries are stored per row with sorted column indices; the diagonal is
/// the negated row sum of those entries, so the constant vector is an
/// exact kernel vector for every kind.
#[derive(Debug, Clone)]
pub struct LaplacianMatrix {
    pub kind: LaplacianKind,
    pub l: i64,
    pub size: usize,
    row_offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

fn is_primitive(m: [i64; 3]) -> bool {
    matches!(m, [1, 0, 0] | [0, 1, 0] | [0, 0, 1])
}

pub fn build_laplacian(
    model: &LatticeModel,
    l: i64,
    kind: LaplacianKind,
) -> Result<LaplacianMatrix> {
    // Periodic wrapping needs the full hopping range inside the box;
    // the Neumann kinds only drop edges, so any even l ≥ 2 is meaningful.
    let fl = match kind {
        LaplacianKind::Periodic => FiniteLattice::new(model, l)?,
        LaplacianKind::Neumann | LaplacianKind::NeumannSpecial => FiniteLattice::new_unchecked(l)?,
    };
    let n = fl.n_sites();
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut diag = Vec::with_capacity(n);
    row_offsets.push(0);

    for idx in 0..n {
        let x = fl.site_coords(idx);
        let mut row: BTreeMap<usize, f64> = BTreeMap::new();
        for hop in &model.hops {
            if kind == LaplacianKind::NeumannSpecial && !is_primitive(hop.m) {
                continue;
            }
            for sign in [1i64, -1] {
                let y = [
                    x[0] + sign * hop.m[0],
                    x[1] + sign * hop.m[1],
                    x[2] + sign * hop.m[2],
                ];
                let j = match kind {
                    LaplacianKind::Periodic => {
                        Some(fl.site_index([fl.wrap(y[0]), fl.wrap(y[1]), fl.wrap(y[2])]))
                    }
                    _ => fl.contains(y).then(|| fl.site_index(y)),
                };
                if let Some(j) = j {
                    *row.entry(j).or_insert(0.0) -= hop.t;
                }
            }
        }
        // Accumulation order per entry is hop-major for every row, so the
        // transposed entry receives the same additions in the same order
        // and the matrix is symmetric bit for bit.
        let mut row_sum = 0.0;
        for (j, v) in row {
            row_sum += v;
            cols.push(j);
            vals.push(v);
        }
        diag.push(-row_sum);
        row_offsets.push(cols.len());
    }

    Ok(LaplacianMatrix {
        kind,
        l,
        size: n,
        row_offsets,
        cols,
        vals,
        diag,
    })
}

impl LaplacianMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn off_diagonal_count(&self) -> usize {
        self.vals.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        match self.cols[lo..hi].binary_search(&j) {
            Ok(pos) => self.vals[lo + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal entries of row `i` as (column, value) pairs, columns
    /// ascending.
    pub fn off_diagonal_row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        self.cols[lo..hi]
            .iter()
            .zip(&self.vals[lo..hi])
            .map(|(&c, &v)| (c, v))
    }

    /// Largest off-diagonal row length, an upper bound on moves per site.
    pub fn max_row_entries(&self) -> usize {
        (0..self.size)
            .map(|i| self.row_offsets[i + 1] - self.row_offsets[i])
            .max()
            .unwrap_or(0)
    }

    /// y = M x. Off-diagonals are summed in storage order before the
    /// diagonal term, so constants map to exact zeros.
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.size {
            let mut acc = 0.0;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[i] = acc + self.diag[i] * x[i];
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.size];
        self.apply_into(x, &mut y);
        y
    }

    /// ⟨u, M u⟩.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        let mu = self.apply(u);
        let terms: Vec<f64> = u.iter().zip(&mu).map(|(a, b)| a * b).collect();
        pairwise_sum(&terms)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for i in 0..self.size {
            m[(i, i)] = self.diag[i];
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                m[(i, self.cols[k])] = self.vals[k];
            }
        }
        m
    }

    /// All eigenvalues, ascending, by dense symmetric diagonalization.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if self.size > DENSE_EIG_CAP {
            return Err(Error::DimensionCap {
                estimate: (self.size as u64) * (self.size as u64),
                cap: (DENSE_EIG_CAP as u64) * (DENSE_EIG_CAP as u64),
                dim: self.size as u64,
            });
        }
        let mut eigs: Vec<f64> = self.to_dense().symmetric_eigenvalues().iter().copied().collect();
        eigs.sort_unstable_by(f64::total_cmp);
        Ok(eigs)
    }

    pub fn spectrum(&self) -> Result<SpectrumResult> {
        SpectrumResult::from_sorted(self.kind, self.l, self.eigenvalues()?)
    }
}

/// Sorted spectrum of one box Laplacian. Construction checks that the
/// lowest eigenvalue is the zero mode of the constant vector and that
/// nothing dips below zero beyond roundoff.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub kind: LaplacianKind,
    pub l: i64,
    pub eigenvalues: Vec<f64>,
    /// Second smallest eigenvalue.
    pub gap: f64,
}

impl SpectrumResult {
    fn from_sorted(kind: LaplacianKind, l: i64, eigenvalues: Vec<f64>) -> Result<SpectrumResult> {
        assert!(eigenvalues.len() >= 2);
        assert!(
            eigenvalues[0].abs() <= 1e-10,
            "{} lowest eigenvalue {:.3e} is not the constant zero mode",
            kind.label(),
            eigenvalues[0]
        );
        assert!(
            eigenvalues.iter().all(|&e| e >= -1e-10),
            "{} spectrum dips below zero",
            kind.label()
        );
        let gap = eigenvalues[1];
        assert!(gap > 0.0, "{} spectral gap is not positive", kind.label());
        Ok(SpectrumResult {
            kind,
            l,
            eigenvalues,
            gap,
        })
    }
}

fn primitive_weights(model: &LatticeModel) -> [f64; 3] {
    let mut w = [0.0; 3];
    for (i, wi) in w.iter_mut().enumerate() {
        let mut e = [0i64; 3];
        e[i] = 1;
        // Primitive hops are guaranteed by model validation.
        *wi = model.hops.iter().find(|h| h.m == e).map(|h| h.t).unwrap();
    }
    w
}

/// One-dimensional Neumann factor 4 t sin²(kπ/(2(L+1))).
pub fn neumann_factor_1d(t: f64, k: i64, l: i64) -> f64 {
    let s = (std::f64::consts::PI * k as f64 / (2.0 * (l + 1) as f64)).sin();
    4.0 * t * s * s
}

/// Closed-form eigenvalue of the special Neumann Laplacian at label
/// k ∈ {0,…,L}³.
pub fn special_neumann_eigenvalue(model: &LatticeModel, l: i64, k: [i64; 3]) -> f64 {
    let w = primitive_weights(model);
    neumann_factor_1d(w[0], k[0], l) + neumann_factor_1d(w[1], k[1], l) + neumann_factor_1d(w[2], k[2], l)
}

/// Full special Neumann spectrum from the closed formula, sorted. Works at
/// any even l; no diagonalization involved.
pub fn special_neumann_eigs(model: &LatticeModel, l: i64) -> Result<SpectrumResult> {
    let fl = FiniteLattice::new_unchecked(l)?;
    let w = primitive_weights(model);
    let side = fl.side;
    let mut factors: Vec<Vec<f64>> = Vec::with_capacity(3);
    for wi in w {
        factors.push((0..side).map(|k| neumann_factor_1d(wi, k, l)).collect());
    }
    let mut eigs = Vec::with_capacity(fl.n_sites());
    for f1 in &factors[0] {
        for f2 in &factors[1] {
            for f3 in &factors[2] {
                eigs.push(f1 + f2 + f3);
            }
        }
    }
    eigs.sort_unstable_by(f64::total_cmp);
    SpectrumResult::from_sorted(LaplacianKind::NeumannSpecial, l, eigs)
}

/// Sorted spectra of the three kinds with the eigenvalue-wise ordering
/// special ≤ neumann ≤ periodic verified index by index.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub l: i64,
    pub special: Vec<f64>,
    pub neumann: Vec<f64>,
    pub periodic: Vec<f64>,
}

fn check_ordering(
    lower_kind: &'static str,
    lower: &[f64],
    upper_kind: &'static str,
    upper: &[f64],
) -> Result<()> {
    for (index, (&lo, &up)) in lower.iter().zip(upper).enumerate() {
        if lo > up + ORDER_TOL {
            return Err(Error::OrderingViolation {
                index,
                lower_kind,
                upper_kind,
                lower: lo,
                upper: up,
            });
        }
    }
    Ok(())
}

pub fn comparison_check(model: &LatticeModel, l: i64) -> Result<ComparisonReport> {
    let special = special_neumann_eigs(model, l)?.eigenvalues;
    let neumann = build_laplacian(model, l, LaplacianKind::Neumann)?
        .spectrum()?
        .eigenvalues;
    let periodic = build_laplacian(model, l, LaplacianKind::Periodic)?
        .spectrum()?
        .eigenvalues;
    check_ordering("neumann_special", &special, "neumann", &neumann)?;
    check_ordering("neumann", &neumann, "periodic", &periodic)?;
    Ok(ComparisonReport {
        l,
        special,
        neumann,
        periodic,
    })
}

/// Neumann spectral gap: dense diagonalization when the box fits the
/// eigensolver cap, deflated inverse power iteration beyond it.
pub fn neumann_gap(model: &LatticeModel, l: i64) -> Result<f64> {
    let lap = build_laplacian(model, l, LaplacianKind::Neumann)?;
    if lap.size <= DENSE_EIG_CAP {
        Ok(lap.spectrum()?.gap)
    } else {
        smallest_nonzero_eigenvalue(
            |x, y| lap.apply_into(x, y),
            lap.size,
            ITERATIVE_GAP_SEED,
            1e-10,
        )
    }
}

#[derive(Debug, Clone)]
pub struct GapReport {
    pub l: i64,
    pub gap: f64,
    /// c_gap/(l+1)².
    pub lower_bound: f64,
    /// gap·(l+1)².
    pub scaled: f64,
}

#[derive(Debug, Clone)]
pub struct GapCheck {
    pub reports: Vec<GapReport>,
    pub c_gap: f64,
    /// max over l of gap·(l+1)², an empirical upper-bound constant.
    pub fitted_upper: f64,
}

/// Verifies gap ≥ c_gap/(l+1)² for every listed box and reports the
/// scaled gaps whose stability exhibits the matching upper bound.
pub fn gap_check(model: &LatticeModel, ls: &[i64]) -> Result<GapCheck> {
    let mut reports = Vec::with_capacity(ls.len());
    let mut fitted_upper: f64 = 0.0;
    for &l in ls {
        let gap = neumann_gap(model, l)?;
        let side2 = ((l + 1) * (l + 1)) as f64;
        let lower_bound = model.c_gap / side2;
        if gap < lower_bound - GAP_TOL {
            return Err(Error::GapBoundViolation {
                l,
                gap,
                bound: lower_bound,
            });
        }
        let scaled = gap * side2;
        fitted_upper = fitted_upper.max(scaled);
        reports.push(GapReport {
            l,
            gap,
            lower_bound,
            scaled,
        });
    }
    Ok(GapCheck {
        reports,
        c_gap: model.c_gap,
        fitted_upper,
    })
}

/// Volume-normalized trace of the inverse periodic Laplacian on the
/// complement of the zero mode: Σ_{p≠0} 1/ε(p) / (l+1)³ over the momentum
/// grid, with phases evaluated from exact rational multiples of 2π.
pub fn periodic_trace_per_volume(model: &LatticeModel, l: i64) -> Result<f64> {
    let fl = FiniteLattice::new(model, l)?;
    let grid = momentum_grid(model, &fl);
    let n = fl.n_sites();
    let mut terms = Vec::with_capacity(n - 1);
    for pi in 0..n {
        if pi == grid.zero_index {
            continue;
        }
        let mut eps = 0.0;
        for hop in &model.hops {
            eps += 2.0 * hop.t * (1.0 - grid.phase(&fl, pi, hop.m).cos());
        }
        terms.push(1.0 / eps);
    }
    Ok(pairwise_sum(&terms) / n as f64)
}

#[derive(Debug, Clone)]
pub struct TraceReport {
    pub l: i64,
    /// |Λ|⁻¹ Σ_{p≠0} 1/ε(p), exact on the momentum grid.
    pub periodic: f64,
    /// |Λ|⁻¹ Σ over nonzero Neumann eigenvalues of 1/λ.
    pub neumann: f64,
    /// d(l) = |periodic − neumann|.
    pub difference: f64,
}

#[derive(Debug, Clone)]
pub struct TraceComparison {
    pub reports: Vec<TraceReport>,
    /// max over l of d(l)·(l+1)^{1/3}.
    pub fitted_constant: f64,
}

pub fn trace_inverse_comparison(model: &LatticeModel, ls: &[i64]) -> Result<TraceComparison> {
    let mut reports = Vec::with_capacity(ls.len());
    let mut fitted_constant: f64 = 0.0;
    for &l in ls {
        let periodic = periodic_trace_per_volume(model, l)?;
        let spectrum = build_laplacian(model, l, LaplacianKind::Neumann)?.spectrum()?;
        let volume = spectrum.eigenvalues.len() as f64;
        let recips: Vec<f64> = spectrum.eigenvalues[1..].iter().map(|&lam| 1.0 / lam).collect();
        let neumann = pairwise_sum(&recips) / volume;
        let difference = (periodic - neumann).abs();
        fitted_constant = fitted_constant.max(difference * ((l + 1) as f64).cbrt());
        reports.push(TraceReport {
            l,
            periodic,
            neumann,
            difference,
        });
    }
    Ok(TraceComparison {
        reports,
        fitted_constant,
    })
}

/// |Λ|⁻¹ Σ_{k≠0} λ_k^{−ν} over the nonzero Neumann spectrum. Requires
/// ν > 3/2 so the small-eigenvalue end dominates with a finite sum
/// exponent; the measured growth in l is l^{2ν−3}.
pub fn trace_power(model: &LatticeModel, l: i64, nu: f64) -> Result<f64> {
    if !(nu > 1.5) {
        return Err(Error::BadConfig(format!(
            "inverse trace power needs nu > 3/2, got {nu}"
        )));
    }
    let spectrum = build_laplacian(model, l, LaplacianKind::Neumann)?.spectrum()?;
    let volume = spectrum.eigenvalues.len() as f64;
    let terms: Vec<f64> = spectrum.eigenvalues[1..]
        .iter()
        .map(|&lam| lam.powf(-nu))
        .collect();
    Ok(pairwise_sum(&terms) / volume)
}
