//! Crate-wide error type.
//!
//! One enum covers all modules: lattice validation, quadrature failures,
//! variational-state pathologies, spectra consistency checks, certificate
//! window violations, and exact-diagonalization guards. Variants that signal
//! an implementation bug rather than bad input say so in their message.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // lattice validation
    #[error("primitive vectors are singular: |det A| = {det:.3e}")]
    SingularBasis { det: f64 },
    #[error("hopping table has no entry for primitive direction e{index}")]
    MissingPrimitiveHopping { index: usize },
    #[error("hopping weight t = {t} for direction {m:?} is not positive")]
    NonPositiveWeight { m: [i64; 3], t: f64 },
    #[error("hopping direction {m:?} is not in the positive-direction set (first nonzero component must be positive)")]
    DirectionNotPositive { m: [i64; 3] },
    #[error("hopping direction {m:?} appears more than once")]
    DuplicateDirection { m: [i64; 3] },
    #[error("interaction strength U = {u} is negative")]
    NegativeInteraction { u: f64 },
    #[error("lattice size L = {l} is odd; only even sizes index a symmetric box")]
    OddLatticeSize { l: i64 },
    #[error("lattice size L = {l} is too small for the hopping range R0 = {r0}")]
    GridTooCoarse { l: i64, r0: i64 },
    #[error("bad lattice configuration: {0}")]
    BadConfig(String),

    // quadrature
    #[error("quadrature did not converge: estimated relative error {estimate:.3e} exceeds target {target:.3e} after {levels} levels")]
    NoConvergence {
        estimate: f64,
        target: f64,
        levels: usize,
    },
    #[error("integrand returned a non-finite value at p = {p:?} (outside the excised region)")]
    NonFiniteIntegrand { p: [f64; 3] },

    // bogoliubov
    #[error("mode minimum is undefined: radicand 1 + 2(B-C)/(A+2C) = {radicand:.3e} is negative")]
    DomainError { radicand: f64 },
    #[error("condensate occupation is negative: N0 = {n0:.3e} at rho = {rho:.3e}, L = {l} (density too small for this box)")]
    NegativeCondensate { n0: f64, rho: f64, l: i64 },
    #[error("thermodynamic integrand is negative at a quadrature node (eps = {eps:.6e}, value = {value:.6e}); this signals an implementation bug")]
    IntegrandNegative { eps: f64, value: f64 },

    // spectra
    #[error("spectral ordering violated at index {index}: {lower_kind} eigenvalue {lower:.12e} exceeds {upper_kind} eigenvalue {upper:.12e}; this signals an implementation bug")]
    OrderingViolation {
        index: usize,
        lower_kind: &'static str,
        upper_kind: &'static str,
        lower: f64,
        upper: f64,
    },
    #[error("spectral gap {gap:.6e} at l = {l} falls below the bound c_gap/(l+1)^2 = {bound:.6e}")]
    GapBoundViolation { l: i64, gap: f64, bound: f64 },

    // lower bound
    #[error("chemical-potential window is empty for n = {n}, l = {l}: requires 24*pi*a*n/|box| < gap/2 (mu_min = {mu_min:.6e}, mu_max = {mu_max:.6e})")]
    EmptyWindow {
        n: u64,
        l: i64,
        mu_min: f64,
        mu_max: f64,
    },
    #[error("mu = {mu:.6e} lies outside the admissible window ({mu_min:.6e}, {mu_max:.6e})")]
    InvalidMu { mu: f64, mu_min: f64, mu_max: f64 },
    #[error("discriminant (eps - mu)^2 - (n U phi0 / |box|)^2 = {value:.6e} is negative at eps = {eps:.6e}; unreachable inside the window, signals an implementation bug")]
    NegativeDiscriminant { value: f64, eps: f64 },
    #[error("superadditivity violated: E0({n1}+{n2}) = {e_sum:.12e} < E0({n1}) + E0({n2}) = {e_parts:.12e} - slack")]
    SuperadditivityViolation {
        n1: u64,
        n2: u64,
        e_sum: f64,
        e_parts: f64,
    },

    // exact diagonalization
    #[error("Hamiltonian size exceeds the cap: estimated {estimate} nonzeros > {cap} (basis dimension {dim})")]
    DimensionCap { estimate: u64, cap: u64, dim: u64 },
    #[error("eigensolver did not converge: residual {residual:.3e} after {iterations} iterations (tolerance {tol:.3e})")]
    SolverNoConvergence {
        residual: f64,
        iterations: usize,
        tol: f64,
    },
    #[error("finite-size extrapolation fit is poor: residual {residual:.3e} exceeds threshold {threshold:.3e}")]
    PoorFit { residual: f64, threshold: f64 },
}
