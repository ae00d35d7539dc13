//! Certified lower bounds on the n-particle ground energy of a finite box.
//!
//! The bound comes from completing the square in the Neumann-mode
//! representation of the Hamiltonian. For a chemical potential mu inside an
//! admissible window, every n-particle state obeys
//!
//!   E >= -S(mu) + min_m [ mu*m + U(2*phi0 - phi0^2)/(2|box|) * (n-m)(n-m-1) ],
//!
//! where S(mu) sums the Bogoliubov square-root defects over the nonzero
//! Neumann modes and m runs over the possible excited-particle counts. The
//! window exists whenever the particle number is small compared to the
//! threshold c_gap*(l+1)/(48*pi*a); inside it every discriminant is
//! strictly positive, so the bound is a finite, checkable expression.

use crate::error::{Error, Result};
use crate::lattice::LatticeModel;
use crate::numerics::pairwise_sum;
use crate::scattering::ScatteringData;
use crate::spectra::{neumann_gap, LaplacianKind, SpectrumResult};

use std::f64::consts::PI;

/// Admissible chemical-potential window for one box and particle number.
#[derive(Debug, Clone, Copy)]
pub struct MuWindow {
    /// Lower endpoint 16*pi*a*n / |box|.
    pub mu_min: f64,
    /// Upper endpoint gap/2 - 8*pi*a*n / |box|, using the exact gap.
    pub mu_max: f64,
    /// Exact Neumann spectral gap of the box.
    pub gap: f64,
    /// Conservative gap bound c_gap / (l+1)^2, reported for comparison.
    pub gap_lower_bound: f64,
    /// Particle-number threshold c_gap*(l+1)/(48*pi*a). Admissible inputs
    /// have n strictly below it.
    pub threshold: f64,
}

impl MuWindow {
    pub fn width(&self) -> f64 {
        self.mu_max - self.mu_min
    }

    pub fn contains(&self, mu: f64) -> bool {
        mu > self.mu_min && mu < self.mu_max
    }
}

/// Chemical-potential window for `n` particles on the Neumann box of side
/// `l + 1`. Errors with `EmptyWindow` when the density hypothesis
/// n/(l+1) < c_gap/(48*pi*a) fails; under that hypothesis the window built
/// from the exact gap is provably nonempty.
pub fn mu_window(
    model: &LatticeModel,
    n: usize,
    l: i64,
    scat: &ScatteringData,
) -> Result<MuWindow> {
    let gap = neumann_gap(model, l)?;
    let volume = ((l + 1) as f64).powi(3);
    let eight_pi_a = scat.eight_pi_a;
    let per_volume = eight_pi_a * n as f64 / volume;
    let mu_min = 2.0 * per_volume;
    let mu_max = 0.5 * gap - per_volume;
    let gap_lower_bound = model.c_gap / ((l + 1) as f64).powi(2);
    let threshold = model.c_gap * (l + 1) as f64 / (6.0 * eight_pi_a);
    if n as f64 >= threshold {
        // The gate is equivalent to emptiness of the window built from
        // the conservative gap bound, so report that interval.
        return Err(Error::EmptyWindow {
            n: n as u64,
            l,
            mu_min,
            mu_max: 0.5 * gap_lower_bound - per_volume,
        });
    }
    // The density hypothesis gives 24*pi*a*n/|box| < gap/2 even for the
    // conservative gap bound, so the exact-gap window cannot be empty.
    assert!(mu_min < mu_max);
    Ok(MuWindow {
        mu_min,
        mu_max,
        gap,
        gap_lower_bound,
        threshold,
    })
}

/// Geometric midpoint of the window, the default evaluation point. For
/// n = 0 the lower endpoint is zero and the arithmetic midpoint of the
/// upper half is used instead.
pub fn default_mu(window: &MuWindow) -> f64 {
    if window.mu_min > 0.0 {
        (window.mu_min * window.mu_max).sqrt()
    } else {
        0.5 * window.mu_max
    }
}

/// Bogoliubov square-root defect sum over the nonzero modes,
///
///   S = 1/2 * sum_k [ d_k - sqrt(d_k^2 - coupling^2) ],  d_k = eps_k - mu,
///
/// with `coupling = n*U*phi0 / |box|`. Every term is nonnegative. A
/// negative discriminant means mu sits outside the admissible window and
/// is reported as an error, though it is unreachable for validated input.
pub fn bogoliubov_sum(spectrum: &SpectrumResult, mu: f64, coupling: f64) -> Result<f64> {
    let modes = &spectrum.eigenvalues[1..];
    let mut terms = Vec::with_capacity(modes.len());
    for &eps in modes {
        if coupling == 0.0 {
            terms.push(0.0);
            continue;
        }
        let d = eps - mu;
        let disc = d * d - coupling * coupling;
        if d <= 0.0 || disc < 0.0 {
            return Err(Error::NegativeDiscriminant { value: disc, eps });
        }
        terms.push(d - disc.sqrt());
    }
    Ok(0.5 * pairwise_sum(&terms))
}

/// Evaluation point for one certificate.
#[derive(Debug, Clone, Copy)]
pub struct CertificateInput {
    pub n: usize,
    pub l: i64,
    pub mu: f64,
}

/// Certified lower bound and its ingredients.
#[derive(Debug, Clone, Copy)]
pub struct CertificateResult {
    /// Rigorous lower bound on the n-particle Neumann ground energy.
    pub lb_energy: f64,
    /// The defect sum S(mu).
    pub bogoliubov_sum: f64,
    /// Window the chemical potential was validated against.
    pub window: (f64, f64),
    /// True once every hypothesis has been checked on the exact spectrum.
    pub valid: bool,
}

/// Lower bound on the n-particle ground energy from the Neumann spectrum.
/// The spectrum must belong to the same box; both the assembled Neumann
/// Laplacian and the closed-form variant are accepted.
pub fn certificate(
    model: &LatticeModel,
    input: &CertificateInput,
    spectrum: &SpectrumResult,
    scat: &ScatteringData,
) -> Result<CertificateResult> {
    match spectrum.kind {
        LaplacianKind::Neumann | LaplacianKind::NeumannSpecial => {}
        LaplacianKind::Periodic => {
            return Err(Error::BadConfig(
                "certificate requires a Neumann spectrum".into(),
            ));
        }
    }
    if spectrum.l != input.l {
        return Err(Error::BadConfig(format!(
            "spectrum is for l = {}, certificate input has l = {}",
            spectrum.l, input.l
        )));
    }
    let window = mu_window(model, input.n, input.l, scat)?;
    if !window.contains(input.mu) {
        return Err(Error::InvalidMu {
            mu: input.mu,
            mu_min: window.mu_min,
            mu_max: window.mu_max,
        });
    }
    let volume = ((input.l + 1) as f64).powi(3);
    let coupling = input.n as f64 * model.u * scat.phi0 / volume;
    let defect = bogoliubov_sum(spectrum, input.mu, coupling)?;
    let condensate_pairing =
        model.u * (2.0 * scat.phi0 - scat.phi0 * scat.phi0) / (2.0 * volume);
    let mut sector_min = f64::INFINITY;
    for excited in 0..=input.n {
        let condensed = (input.n - excited) as i64;
        let pairs = (condensed * (condensed - 1)) as f64;
        let value = input.mu * excited as f64 + condensate_pairing * pairs;
        sector_min = sector_min.min(value);
    }
    Ok(CertificateResult {
        lb_energy: sector_min - defect,
        bogoliubov_sum: defect,
        window: (window.mu_min, window.mu_max),
        valid: true,
    })
}

/// Box side exponent for the Gross-Pitaevskii regime at density `rho`,
/// before and after rounding to an admissible value.
#[derive(Debug, Clone, Copy)]
pub struct GpLength {
    /// Raw formula value ceil((192*pi*a*rho/c_gap)^(-1/2)) - 1.
    pub formula: i64,
    /// Nearest even value at least max(formula, r0, 2).
    pub l: i64,
}

/// Side length of the box used to localize the gas at density `rho`. The
/// raw value balances the spectral gap against the interaction density;
/// it is then rounded up to an even length no smaller than the hopping
/// range so the box tiles the lattice admissibly.
pub fn gp_length(rho: f64, a: f64, c_gap: f64, r0: i64) -> Result<GpLength> {
    if !(rho > 0.0) || !(a > 0.0) || !(c_gap > 0.0) {
        return Err(Error::BadConfig(format!(
            "gp_length needs positive rho, a, c_gap; got {rho}, {a}, {c_gap}"
        )));
    }
    let raw = (192.0 * PI * a * rho / c_gap).powf(-0.5);
    let formula = raw.ceil() as i64 - 1;
    let mut l = formula.max(r0).max(2);
    if l % 2 != 0 {
        l += 1;
    }
    Ok(GpLength { formula, l })
}

/// Summary of a superadditivity audit over sector ground energies.
#[derive(Debug, Clone, Copy)]
pub struct SuperadditivityReport {
    pub n_max: usize,
    pub pairs_checked: usize,
    /// Smallest value of E(n1+n2) - E(n1) - E(n2) seen; nonnegative up to
    /// solver slack.
    pub worst_slack: f64,
}

/// Checks E(n1+n2) >= E(n1) + E(n2) for all splittings, with `energies[k]`
/// the k-particle ground energy. Tolerates 1e-9 of solver slack.
pub fn superadditivity_check(energies: &[f64]) -> Result<SuperadditivityReport> {
    if energies.is_empty() {
        return Err(Error::BadConfig(
            "superadditivity check needs at least the zero-particle energy".into(),
        ));
    }
    let n_max = energies.len() - 1;
    let mut worst_slack = f64::INFINITY;
    let mut pairs_checked = 0;
    for n1 in 0..=n_max {
        for n2 in n1..=n_max - n1 {
            let slack = energies[n1 + n2] - energies[n1] - energies[n2];
            if slack < -1e-9 {
                return Err(Error::SuperadditivityViolation {
                    n1: n1 as u64,
                    n2: n2 as u64,
                    e_sum: energies[n1 + n2],
                    e_parts: energies[n1] + energies[n2],
                });
            }
            worst_slack = worst_slack.min(slack);
            pairs_checked += 1;
        }
    }
    Ok(SuperadditivityReport {
        n_max,
        pairs_checked,
        worst_slack,
    })
}
