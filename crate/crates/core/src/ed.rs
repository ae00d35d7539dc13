//! Exact diagonalization of the Bose-Hubbard Hamiltonian on finite boxes.
//!
//! The basis is the set of occupation vectors (n_1, ..., n_sites) with
//! Σ n_x = n, ranked in ascending lexicographic order. Internally each
//! state is stored as the sorted tuple of occupied sites, which keeps the
//! footprint proportional to the particle number rather than the box
//! volume; ranks are computed combinatorially from the tuple.
//!
//! Ground-state energies come from Lanczos on a sparse matrix. Boxes too
//! large for the nonzero cap can instead be diagonalized in the
//! symmetry-reduced basis of point-group orbits, which shrinks the
//! dimension by up to the group order while leaving the lowest eigenvalue
//! unchanged: the kinetic graph is connected, so the ground vector is
//! strictly positive and therefore invariant under every verified lattice
//! symmetry.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lattice::{FiniteLattice, LatticeModel};
use crate::linalg::lanczos_ground_state;
use crate::numerics::{aic, fit_line, fit_quadratic};
use crate::scattering::ScatteringData;
use crate::spectra::{build_laplacian, LaplacianKind, LaplacianMatrix, DENSE_EIG_CAP};

/// Default cap on stored Hamiltonian nonzeros.
pub const DEFAULT_NNZ_CAP: u64 = 2_000_000;

/// Hard cap on enumerated basis states, independent of the nonzero cap.
const BASIS_STATE_CAP: u64 = 20_000_000;

/// Relative residual above which a 1/L extrapolation is rejected.
const EXTRAPOLATION_TOL: f64 = 1e-2;

/// Solver and size-budget knobs for the diagonalization routines.
#[derive(Debug, Clone)]
pub struct EdParams {
    pub nnz_cap: u64,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    /// Dimension up to which Lanczos stores the full Krylov basis; larger
    /// problems run the memory-bounded restarted scheme.
    pub reorth_budget: usize,
}

impl Default for EdParams {
    fn default() -> Self {
        EdParams {
            nnz_cap: DEFAULT_NNZ_CAP,
            seed: 7,
            tol: 1e-10,
            max_iter: 500,
            reorth_budget: 50_000,
        }
    }
}

/// C(sites + n − 1, n), saturating at u64::MAX.
pub fn basis_dimension(sites: usize, n: usize) -> u64 {
    let mut acc: u128 = 1;
    for i in 0..n {
        acc = acc * (sites + i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Rank arithmetic for occupation states stored as sorted site tuples.
///
/// With sites s and tuple x_0 ≤ … ≤ x_{n−1}, the ascending lexicographic
/// rank of the corresponding occupation vector is
/// Σ_j C(s + n − 2 − x_j − j, n − j).
#[derive(Debug)]
struct Ranker {
    sites: usize,
    n: usize,
    /// cols[k][a] = C(a, k), saturating; nondecreasing in a.
    cols: Vec<Vec<u64>>,
}

impl Ranker {
    fn new(sites: usize, n: usize) -> Ranker {
        let amax = sites + n;
        let mut cols: Vec<Vec<u64>> = vec![vec![1; amax + 1]];
        for k in 1..=n {
            let mut col = vec![0u64; amax + 1];
            for a in 1..=amax {
                col[a] = col[a - 1].saturating_add(cols[k - 1][a - 1]);
            }
            cols.push(col);
        }
        Ranker { sites, n, cols }
    }

    fn dimension(&self) -> u64 {
        if self.n == 0 {
            return 1;
        }
        self.cols[self.n][self.sites + self.n - 1]
    }

    fn rank(&self, t: &[u16]) -> u64 {
        let s = self.sites;
        let n = self.n;
        let mut r = 0u64;
        for (j, &x) in t.iter().enumerate() {
            let a = s + n - 2 - x as usize - j;
            r += self.cols[n - j][a];
        }
        r
    }

    fn unrank(&self, mut r: u64, out: &mut [u16]) {
        let s = self.sites;
        let n = self.n;
        for j in 0..n {
            let col = &self.cols[n - j];
            let a = col.partition_point(|&v| v <= r) - 1;
            debug_assert!(a <= s + n - 2 - j);
            out[j] = (s + n - 2 - j - a) as u16;
            r -= col[a];
        }
        debug_assert_eq!(r, 0);
    }
}

/// Next sorted tuple in ascending tuple-lexicographic order; false once the
/// last tuple (all entries at `max`) has been consumed.
fn advance(t: &mut [u16], max: u16) -> bool {
    for j in (0..t.len()).rev() {
        if t[j] < max {
            let v = t[j] + 1;
            for slot in &mut t[j..] {
                *slot = v;
            }
            return true;
        }
    }
    false
}

/// Enumerated n-boson basis over a fixed site count.
#[derive(Debug)]
pub struct FockBasis {
    pub sites: usize,
    pub n: usize,
    pub dim: usize,
    ranker: Ranker,
    /// Sorted site tuples, rank-major, n entries per state.
    states: Vec<u16>,
}

impl FockBasis {
    pub fn new(sites: usize, n: usize) -> Result<FockBasis> {
        if sites == 0 || sites > u16::MAX as usize {
            return Err(Error::BadConfig(format!(
                "site count {sites} outside the supported range"
            )));
        }
        let ranker = Ranker::new(sites, n);
        let dim64 = ranker.dimension();
        if dim64 > BASIS_STATE_CAP {
            return Err(Error::DimensionCap {
                estimate: dim64,
                cap: BASIS_STATE_CAP,
                dim: dim64,
            });
        }
        let dim = dim64 as usize;
        let mut states = vec![0u16; dim * n];
        if n > 0 {
            // ascending tuple order is descending occupation-vector order
            let mut t = vec![0u16; n];
            let mut c = 0usize;
            loop {
                let slot = dim - 1 - c;
                states[slot * n..(slot + 1) * n].copy_from_slice(&t);
                c += 1;
                if !advance(&mut t, (sites - 1) as u16) {
                    break;
                }
            }
            debug_assert_eq!(c, dim);
        }
        Ok(FockBasis {
            sites,
            n,
            dim,
            ranker,
            states,
        })
    }

    /// Sorted occupied-site tuple of the state with the given rank.
    pub fn state(&self, r: usize) -> &[u16] {
        &self.states[r * self.n..(r + 1) * self.n]
    }

    pub fn rank(&self, t: &[u16]) -> usize {
        self.ranker.rank(t) as usize
    }

    /// Tuple of rank `r` recomputed from rank arithmetic alone, without
    /// the enumeration table.
    pub fn unrank(&self, r: usize) -> Vec<u16> {
        let mut t = vec![0u16; self.n];
        self.ranker.unrank(r as u64, &mut t);
        t
    }

    /// Occupation vector (n_1, ..., n_sites) of the state with rank `r`.
    pub fn occupations(&self, r: usize) -> Vec<u32> {
        let mut occ = vec![0u32; self.sites];
        for &x in self.state(r) {
            occ[x as usize] += 1;
        }
        occ
    }
}

/// Sparse symmetric matrix with the diagonal held separately.
#[derive(Debug)]
struct Csr {
    dim: usize,
    diag: Vec<f64>,
    row_offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl Csr {
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.dim {
            let mut acc = 0.0;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            y[i] = acc + self.diag[i] * x[i];
        }
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        match self.cols[lo..hi].binary_search(&(j as u32)) {
            Ok(pos) => self.vals[lo + pos],
            Err(_) => 0.0,
        }
    }
}

/// n-boson Hamiltonian −Σᵢ Δᵢ + (U/2) Σₓ nₓ(nₓ−1) in the occupation basis.
#[derive(Debug)]
pub struct Hamiltonian {
    pub basis: FockBasis,
    pub l: i64,
    pub kind: LaplacianKind,
    pub u: f64,
    csr: Csr,
}

/// Occupation multiplicity of site `x` in a sorted tuple.
fn multiplicity(t: &[u16], x: u16) -> usize {
    t.iter().filter(|&&s| s == x).count()
}

/// Diagonal matrix element of a state: one-body diagonal plus pair count.
fn diagonal_element(lap: &LaplacianMatrix, u: f64, t: &[u16]) -> f64 {
    let one_body: f64 = t.iter().map(|&x| lap.diagonal()[x as usize]).sum();
    let mut pairs = 0usize;
    let mut j = 0;
    while j < t.len() {
        let mut m = 1;
        while j + m < t.len() && t[j + m] == t[j] {
            m += 1;
        }
        pairs += m * (m - 1);
        j += m;
    }
    one_body + 0.5 * u * pairs as f64
}

/// Enumerates the hopping moves out of a state. For each occupied site y
/// with multiplicity m_y and each one-body entry (y → x, w) the move
/// carries amplitude w·√(m_y(n_x+1)) into the tuple with one y replaced
/// by x. Distinct moves land on distinct target states.
fn for_each_move<F: FnMut(&[u16], f64)>(
    lap: &LaplacianMatrix,
    t: &[u16],
    scratch: &mut [u16],
    mut visit: F,
) {
    let n = t.len();
    let mut j = 0;
    while j < n {
        let y = t[j];
        let mut mult = 1;
        while j + mult < n && t[j + mult] == y {
            mult += 1;
        }
        for (x, w) in lap.off_diagonal_row(y as usize) {
            let nx = multiplicity(t, x as u16);
            let amp = w * ((mult * (nx + 1)) as f64).sqrt();
            scratch.copy_from_slice(t);
            scratch[j] = x as u16;
            scratch.sort_unstable();
            visit(scratch, amp);
        }
        j += mult;
    }
}

pub fn build_hamiltonian(
    model: &LatticeModel,
    l: i64,
    n: usize,
    kind: LaplacianKind,
    params: &EdParams,
) -> Result<Hamiltonian> {
    let lap = build_laplacian(model, l, kind)?;
    let sites = lap.size();
    let dim64 = basis_dimension(sites, n);
    let row_width = 1 + n as u64 * lap.max_row_entries() as u64;
    let estimate = dim64.saturating_mul(row_width);
    if estimate > params.nnz_cap {
        return Err(Error::DimensionCap {
            estimate,
            cap: params.nnz_cap,
            dim: dim64,
        });
    }
    let basis = FockBasis::new(sites, n)?;
    let dim = basis.dim;

    let mut diag = vec![0.0; dim];
    let mut row_offsets = Vec::with_capacity(dim + 1);
    row_offsets.push(0usize);
    let mut cols: Vec<u32> = Vec::new();
    let mut vals: Vec<f64> = Vec::new();
    let mut scratch = vec![0u16; n];
    let mut entries: Vec<(u32, f64)> = Vec::new();

    for r in 0..dim {
        let t = basis.state(r);
        diag[r] = diagonal_element(&lap, model.u, t);
        entries.clear();
        for_each_move(&lap, t, &mut scratch, |target, amp| {
            entries.push((basis.ranker.rank(target) as u32, amp));
        });
        entries.sort_unstable_by_key(|e| e.0);
        for &(c, v) in &entries {
            cols.push(c);
            vals.push(v);
        }
        row_offsets.push(cols.len());
    }

    Ok(Hamiltonian {
        basis,
        l,
        kind,
        u: model.u,
        csr: Csr {
            dim,
            diag,
            row_offsets,
            cols,
            vals,
        },
    })
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.csr.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.csr.entry(i, j)
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.csr.apply_into(x, y);
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let dim = self.csr.dim;
        assert!(dim <= DENSE_EIG_CAP, "dense form requested above the cap");
        let mut m = nalgebra::DMatrix::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = self.csr.diag[i];
            for k in self.csr.row_offsets[i]..self.csr.row_offsets[i + 1] {
                m[(i, self.csr.cols[k] as usize)] = self.csr.vals[k];
            }
        }
        m
    }

    /// Smallest eigenvalue by dense diagonalization, for cross-checks.
    pub fn dense_ground_energy(&self) -> f64 {
        let eigs = self.to_dense().symmetric_eigenvalues();
        eigs.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Ground-state result of one diagonalization.
#[derive(Debug, Clone)]
pub struct EdResult {
    pub e0: f64,
    pub residual: f64,
    pub iterations: usize,
    pub kind: LaplacianKind,
    /// Dimension actually diagonalized (the orbit count on the
    /// symmetry-reduced path).
    pub basis_dim: usize,
}

fn ground_state_of_csr(
    csr: &Csr,
    kind: LaplacianKind,
    u: f64,
    params: &EdParams,
) -> Result<EdResult> {
    if csr.dim == 1 {
        return Ok(EdResult {
            e0: csr.diag[0],
            residual: 0.0,
            iterations: 0,
            kind,
            basis_dim: 1,
        });
    }
    let gs = lanczos_ground_state(
        |x, y| csr.apply_into(x, y),
        csr.dim,
        params.seed,
        params.tol,
        params.max_iter,
        params.reorth_budget,
    )?;
    assert!(
        gs.eigenvalue > -1e-8 * (1.0 + u),
        "nonnegative operator produced a negative ground energy {}",
        gs.eigenvalue
    );
    Ok(EdResult {
        e0: gs.eigenvalue,
        residual: gs.residual,
        iterations: gs.iterations,
        kind,
        basis_dim: csr.dim,
    })
}

pub fn ground_state_energy(h: &Hamiltonian, params: &EdParams) -> Result<EdResult> {
    ground_state_of_csr(&h.csr, h.kind, h.u, params)
}

/// Ground vector alongside the energy, for observables on the state.
pub fn ground_state_vector(h: &Hamiltonian, params: &EdParams) -> Result<(EdResult, Vec<f64>)> {
    if h.dim() == 1 {
        return Ok((ground_state_energy(h, params)?, vec![1.0]));
    }
    let gs = lanczos_ground_state(
        |x, y| h.apply_into(x, y),
        h.dim(),
        params.seed,
        params.tol,
        params.max_iter,
        params.reorth_budget,
    )?;
    let result = EdResult {
        e0: gs.eigenvalue,
        residual: gs.residual,
        iterations: gs.iterations,
        kind: h.kind,
        basis_dim: h.dim(),
    };
    Ok((result, gs.eigenvector))
}

/// The 48 signed coordinate permutations as site maps on the centered box.
fn signed_permutations(fl: &FiniteLattice, sites: usize) -> Vec<Vec<u16>> {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut maps = Vec::with_capacity(48);
    for perm in PERMS {
        for signs in 0..8u32 {
            let sgn = [
                if signs & 1 == 0 { 1i64 } else { -1 },
                if signs & 2 == 0 { 1i64 } else { -1 },
                if signs & 4 == 0 { 1i64 } else { -1 },
            ];
            let mut map = vec![0u16; sites];
            for (idx, slot) in map.iter_mut().enumerate() {
                let m = fl.site_coords(idx);
                let image = [
                    sgn[0] * m[perm[0]],
                    sgn[1] * m[perm[1]],
                    sgn[2] * m[perm[2]],
                ];
                *slot = fl.site_index(image) as u16;
            }
            maps.push(map);
        }
    }
    maps
}

/// Signed coordinate permutations that leave the one-body matrix invariant.
/// The identity is always first.
fn model_symmetries(lap: &LaplacianMatrix, fl: &FiniteLattice) -> Vec<Vec<u16>> {
    let sites = lap.size();
    let tol = 1e-12;
    let close = |a: f64, b: f64| (a - b).abs() <= tol * (1.0 + a.abs());
    signed_permutations(fl, sites)
        .into_iter()
        .filter(|map| {
            (0..sites).all(|i| {
                let pi = map[i] as usize;
                if !close(lap.diagonal()[pi], lap.diagonal()[i]) {
                    return false;
                }
                let row: Vec<(usize, f64)> = lap.off_diagonal_row(i).collect();
                let mapped_len = lap.off_diagonal_row(pi).count();
                row.len() == mapped_len
                    && row
                        .iter()
                        .all(|&(j, w)| close(lap.entry(pi, map[j] as usize), w))
            })
        })
        .collect()
}

fn apply_map(map: &[u16], t: &[u16], out: &mut [u16]) {
    for (o, &x) in out.iter_mut().zip(t) {
        *o = map[x as usize];
    }
    out.sort_unstable();
}

fn pack(t: &[u16]) -> u128 {
    let mut key = 0u128;
    for &x in t {
        key = key << 16 | x as u128;
    }
    key
}

/// Ground state in the basis of point-group orbit sums. The reduced matrix
/// acts on the isotypic sector of symmetric combinations, which contains
/// the (strictly positive) ground vector, so its lowest eigenvalue equals
/// the full ground energy at a fraction of the dimension.
pub fn symmetry_reduced_ground_state(
    model: &LatticeModel,
    l: i64,
    n: usize,
    kind: LaplacianKind,
    params: &EdParams,
) -> Result<EdResult> {
    if n > 8 {
        return Err(Error::BadConfig(format!(
            "symmetry reduction supports at most 8 particles, got {n}"
        )));
    }
    let lap = build_laplacian(model, l, kind)?;
    let fl = FiniteLattice::new_unchecked(l)?;
    let sites = lap.size();
    if sites > u16::MAX as usize {
        return Err(Error::BadConfig(format!(
            "site count {sites} outside the supported range"
        )));
    }
    let ranker = Ranker::new(sites, n);
    let dim64 = ranker.dimension();
    if dim64 > BASIS_STATE_CAP {
        return Err(Error::DimensionCap {
            estimate: dim64,
            cap: BASIS_STATE_CAP,
            dim: dim64,
        });
    }
    let maps = model_symmetries(&lap, &fl);

    // orbit representatives: tuple-lexicographic minima of their orbits,
    // discovered in ascending tuple order (descending rank order)
    let mut reps_rev: Vec<u16> = Vec::new();
    let mut sizes_rev: Vec<u8> = Vec::new();
    let mut img = vec![0u16; n];
    let mut keys: Vec<u128> = Vec::with_capacity(maps.len());
    if n == 0 {
        reps_rev.clear();
        sizes_rev.push(1);
    } else {
        let max = (sites - 1) as u16;
        let mut t = vec![0u16; n];
        loop {
            let mut canonical = true;
            for map in &maps[1..] {
                apply_map(map, &t, &mut img);
                if img[..] < t[..] {
                    canonical = false;
                    break;
                }
            }
            if canonical {
                keys.clear();
                for map in &maps {
                    apply_map(map, &t, &mut img);
                    keys.push(pack(&img));
                }
                keys.sort_unstable();
                keys.dedup();
                reps_rev.extend_from_slice(&t);
                sizes_rev.push(keys.len() as u8);
            }
            if !advance(&mut t, max) {
                break;
            }
        }
    }

    let orbits = sizes_rev.len();
    let row_width = 1 + n as u64 * lap.max_row_entries() as u64;
    let estimate = (orbits as u64).saturating_mul(row_width);
    if estimate > params.nnz_cap {
        return Err(Error::DimensionCap {
            estimate,
            cap: params.nnz_cap,
            dim: orbits as u64,
        });
    }

    // reorder to ascending rank and index representatives by rank
    let mut reps = vec![0u16; reps_rev.len()];
    for i in 0..orbits {
        reps[(orbits - 1 - i) * n..(orbits - i) * n].copy_from_slice(&reps_rev[i * n..(i + 1) * n]);
    }
    let sizes: Vec<u8> = sizes_rev.into_iter().rev().collect();
    let mut index: HashMap<u64, u32> = HashMap::with_capacity(orbits);
    for oi in 0..orbits {
        index.insert(ranker.rank(&reps[oi * n..(oi + 1) * n]), oi as u32);
    }

    let mut diag = vec![0.0; orbits];
    let mut row_offsets = Vec::with_capacity(orbits + 1);
    row_offsets.push(0usize);
    let mut cols: Vec<u32> = Vec::new();
    let mut vals: Vec<f64> = Vec::new();
    let mut scratch = vec![0u16; n];
    let mut best = vec![0u16; n];
    let mut entries: Vec<(u32, f64)> = Vec::new();

    for oi in 0..orbits {
        let t = &reps[oi * n..(oi + 1) * n];
        let mut diag_val = diagonal_element(&lap, model.u, t);
        entries.clear();
        for_each_move(&lap, t, &mut scratch, |target, amp| {
            best.copy_from_slice(target);
            for map in &maps[1..] {
                apply_map(map, target, &mut img);
                if img[..] < best[..] {
                    best.copy_from_slice(&img);
                }
            }
            let col = index[&ranker.rank(&best)];
            let weight = amp * (sizes[oi] as f64 / sizes[col as usize] as f64).sqrt();
            entries.push((col, weight));
        });
        // moves within the source orbit belong on the reduced diagonal
        entries.sort_by_key(|e| e.0);
        let mut k = 0;
        while k < entries.len() {
            let col = entries[k].0;
            let mut sum = entries[k].1;
            let mut j = k + 1;
            while j < entries.len() && entries[j].0 == col {
                sum += entries[j].1;
                j += 1;
            }
            if col as usize == oi {
                diag_val += sum;
            } else {
                cols.push(col);
                vals.push(sum);
            }
            k = j;
        }
        diag[oi] = diag_val;
        row_offsets.push(cols.len());
    }

    let csr = Csr {
        dim: orbits,
        diag,
        row_offsets,
        cols,
        vals,
    };
    ground_state_of_csr(&csr, kind, model.u, params)
}

/// Ground energy of two bosons in relative coordinates: the zero total
/// momentum block is (−2Δ + U δ_0) on the periodic box, diagonalized
/// densely.
pub fn relative_two_body_energy(model: &LatticeModel, l: i64) -> Result<f64> {
    let lap = build_laplacian(model, l, LaplacianKind::Periodic)?;
    let size = lap.size();
    if size > DENSE_EIG_CAP {
        return Err(Error::DimensionCap {
            estimate: (size as u64).pow(2),
            cap: (DENSE_EIG_CAP as u64).pow(2),
            dim: size as u64,
        });
    }
    let fl = FiniteLattice::new(model, l)?;
    let origin = fl.site_index([0, 0, 0]);
    let mut h = lap.to_dense();
    h *= 2.0;
    h[(origin, origin)] += model.u;
    let e0 = h
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    assert!(
        e0 > -1e-9 * (1.0 + model.u),
        "relative two-body operator produced a negative ground energy {e0}"
    );
    Ok(e0)
}

#[derive(Debug, Clone)]
pub struct TwoBodyPoint {
    pub l: i64,
    pub e0: f64,
    /// e(L) = E₀(2,L) · (L+1)³.
    pub scaled: f64,
}

#[derive(Debug, Clone)]
pub struct TwoBodyExtraction {
    pub points: Vec<TwoBodyPoint>,
    /// Extrapolated L → ∞ limit of e(L).
    pub limit: f64,
    /// True when AIC preferred the quadratic 1/L model over the linear one.
    pub quadratic_fit: bool,
    /// Root-mean-square residual of the accepted fit.
    pub fit_residual: f64,
    pub eight_pi_a: f64,
    /// |limit − 8π𝑎| / 8π𝑎 (absolute limit when the interaction is zero).
    pub relative_gap: f64,
}

/// Extracts U·φ(0) = 8π𝑎 from the finite-volume two-body ground energies
/// via e(L) = E₀(2,L)·|Λ_L| and a 1/L polynomial extrapolation.
pub fn two_body_scattering_extraction(
    model: &LatticeModel,
    ls: &[i64],
    scat: &ScatteringData,
) -> Result<TwoBodyExtraction> {
    if ls.len() < 2 {
        return Err(Error::BadConfig(format!(
            "extrapolation needs at least two box sizes, got {}",
            ls.len()
        )));
    }
    if ls.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadConfig(
            "box sizes must be strictly increasing".into(),
        ));
    }
    let mut points = Vec::with_capacity(ls.len());
    for &l in ls {
        let e0 = relative_two_body_energy(model, l)?;
        let volume = ((l + 1) as f64).powi(3);
        points.push(TwoBodyPoint {
            l,
            e0,
            scaled: e0 * volume,
        });
    }
    let xs: Vec<f64> = ls.iter().map(|&l| 1.0 / l as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.scaled).collect();
    let npts = xs.len();

    let line = fit_line(&xs, &ys);
    let mut limit = line.intercept;
    let mut rss = line.rss;
    let mut quadratic_fit = false;
    if npts >= 4 {
        let (c0, _, _, qrss) = fit_quadratic(&xs, &ys);
        if aic(npts, 3, qrss) < aic(npts, 2, line.rss) {
            limit = c0;
            rss = qrss;
            quadratic_fit = true;
        }
    }
    let fit_residual = (rss / npts as f64).sqrt();
    let scale = ys
        .iter()
        .fold(limit.abs(), |m, v| m.max(v.abs()))
        .max(1e-8);
    let threshold = EXTRAPOLATION_TOL * scale;
    if fit_residual > threshold {
        return Err(Error::PoorFit {
            residual: fit_residual,
            threshold,
        });
    }
    let relative_gap = if scat.eight_pi_a > 0.0 {
        (limit - scat.eight_pi_a).abs() / scat.eight_pi_a
    } else {
        limit.abs()
    };
    Ok(TwoBodyExtraction {
        points,
        limit,
        quadratic_fit,
        fit_residual,
        eight_pi_a: scat.eight_pi_a,
        relative_gap,
    })
}

#[derive(Debug, Clone)]
pub struct EnsembleRow {
    pub mu: f64,
    /// Sector attaining the grand-canonical minimum.
    pub minimizer: usize,
    /// min over m ≤ n of E₀(m) + μ(n − m).
    pub grand_canonical: f64,
    pub canonical: f64,
}

#[derive(Debug, Clone)]
pub struct EnsembleReport {
    pub l: i64,
    pub n: usize,
    /// E₀(m) for m = 0..=n on the Neumann box.
    pub sector_energies: Vec<f64>,
    pub rows: Vec<EnsembleRow>,
}

/// Lifts canonical ground energies to the grand-canonical sector minimum
/// and checks it never exceeds the canonical value.
pub fn ensemble_inequality_check(
    model: &LatticeModel,
    l: i64,
    n: usize,
    mus: &[f64],
    params: &EdParams,
) -> Result<EnsembleReport> {
    let mut sector_energies = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let h = build_hamiltonian(model, l, m, LaplacianKind::Neumann, params)?;
        sector_energies.push(ground_state_energy(&h, params)?.e0);
    }
    let mut rows = Vec::with_capacity(mus.len());
    for &mu in mus {
        let mut minimizer = 0usize;
        let mut grand_canonical = f64::INFINITY;
        for (m, &e) in sector_energies.iter().enumerate() {
            let value = e + mu * (n - m) as f64;
            if value < grand_canonical {
                grand_canonical = value;
                minimizer = m;
            }
        }
        let canonical = sector_energies[n];
        assert!(
            grand_canonical <= canonical + 1e-12,
            "sector minimum exceeded the canonical energy"
        );
        rows.push(EnsembleRow {
            mu,
            minimizer,
            grand_canonical,
            canonical,
        });
    }
    Ok(EnsembleReport {
        l,
        n,
        sector_energies,
        rows,
    })
}
