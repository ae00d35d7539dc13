//! Property-based checks of the crate's structural invariants, driven
//! through the public API only. Numerical reference values live in the
//! module tests; here we assert the relations that must hold for every
//! admissible input.

use proptest::prelude::*;

use bosegas::bogoliubov::{log_grid, mode_minimum};
use bosegas::ed::FockBasis;
use bosegas::lower_bound::gp_length;
use bosegas::numerics::{fit_line, pairwise_sum};
use bosegas::scattering::scattering_data;
use bosegas::spectra::{build_laplacian, comparison_check, special_neumann_eigs, LaplacianKind};
use bosegas::{build_lattice, LatticeConfig, LatticeModel, QuadratureParams};

fn anisotropic_model(tx: f64, ty: f64, tz: f64) -> LatticeModel {
    let config = LatticeConfig {
        primitive_vectors: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        hopping: vec![
            bosegas::lattice::HoppingEntry { m: [1, 0, 0], t: tx },
            bosegas::lattice::HoppingEntry { m: [0, 1, 0], t: ty },
            bosegas::lattice::HoppingEntry { m: [0, 0, 1], t: tz },
        ],
        u: 1.0,
    };
    build_lattice(&config).expect("axis-aligned lattice is valid")
}

proptest! {
    /// Every rank round-trips through the occupied-site tuple, and the
    /// arithmetic unranking agrees with the enumeration table.
    #[test]
    fn fock_ranks_round_trip(sites in 1usize..14, n in 0usize..4) {
        let basis = FockBasis::new(sites, n).unwrap();
        for r in 0..basis.dim {
            prop_assert_eq!(basis.rank(basis.state(r)), r);
            let arithmetic = basis.unrank(r);
            prop_assert_eq!(arithmetic.as_slice(), basis.state(r));
        }
    }

    /// Pairwise summation agrees with sequential summation far inside the
    /// worst-case error of the latter.
    #[test]
    fn pairwise_sum_matches_sequential(xs in prop::collection::vec(-1e3f64..1e3, 0..400)) {
        let sequential: f64 = xs.iter().sum();
        let abs: f64 = xs.iter().map(|x| x.abs()).sum();
        prop_assert!((pairwise_sum(&xs) - sequential).abs() <= 1e-10 * abs.max(1.0));
    }

    /// An exact affine relation is recovered to machine precision.
    #[test]
    fn fit_line_recovers_affine_data(
        slope in -10.0f64..10.0,
        intercept in -10.0f64..10.0,
        jitter in prop::collection::vec(0.0f64..0.9, 3..40),
    ) {
        let xs: Vec<f64> = jitter.iter().enumerate().map(|(i, j)| i as f64 + j).collect();
        let ys: Vec<f64> = xs.iter().map(|x| intercept + slope * x).collect();
        let fit = fit_line(&xs, &ys);
        prop_assert!((fit.slope - slope).abs() <= 1e-9 * slope.abs().max(1.0));
        prop_assert!((fit.intercept - intercept).abs() <= 1e-8 * intercept.abs().max(1.0));
    }

    /// Geometric density grids hit both endpoints and keep a constant
    /// ratio between neighbors.
    #[test]
    fn log_grid_is_geometric(
        rho_min in 1e-8f64..1e-4,
        factor in 1.5f64..1e4,
        points in 2usize..40,
    ) {
        let rho_max = rho_min * factor;
        let grid = log_grid(rho_min, rho_max, points).unwrap();
        prop_assert_eq!(grid.len(), points);
        prop_assert!((grid[0] - rho_min).abs() <= 1e-12 * rho_min);
        prop_assert!((grid[points - 1] - rho_max).abs() <= 1e-12 * rho_max);
        let step = (rho_max / rho_min).powf(1.0 / (points as f64 - 1.0));
        for pair in grid.windows(2) {
            prop_assert!((pair[1] / pair[0] - step).abs() <= 1e-9 * step);
        }
    }

    /// The closed-form per-mode minimum really is the minimum of
    /// F(x) = A x²/(1−2x) + B x/(1−2x) − C x on x < 1/2.
    #[test]
    fn mode_minimum_is_a_minimum(
        a in 0.1f64..10.0,
        b in 0.0f64..10.0,
        c_frac in 0.0f64..1.0,
        probes in prop::collection::vec(-0.49f64..0.49, 1..20),
    ) {
        let c = c_frac * b;
        let minimum = mode_minimum(a, b, c).unwrap();
        let f = |x: f64| (a * x * x + b * x) / (1.0 - 2.0 * x) - c * x;
        let scale = a + b + 1.0;
        prop_assert!((f(minimum.x0) - minimum.f_min).abs() <= 1e-9 * scale);
        for &x in &probes {
            prop_assert!(minimum.f_min <= f(x) + 1e-9 * scale);
        }
    }

    /// The closed special-Neumann formula matches dense diagonalization
    /// for arbitrary positive axis weights.
    #[test]
    fn special_formula_matches_dense_for_random_weights(
        tx in 0.2f64..3.0,
        ty in 0.2f64..3.0,
        tz in 0.2f64..3.0,
    ) {
        let model = anisotropic_model(tx, ty, tz);
        let formula = special_neumann_eigs(&model, 2).unwrap();
        let dense = build_laplacian(&model, 2, LaplacianKind::NeumannSpecial)
            .unwrap()
            .spectrum()
            .unwrap();
        for (a, b) in formula.eigenvalues.iter().zip(&dense.eigenvalues) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    /// The eigenvalue-wise operator ordering is not specific to the
    /// bundled lattices.
    #[test]
    fn operator_ordering_holds_for_random_weights(
        tx in 0.2f64..3.0,
        ty in 0.2f64..3.0,
        tz in 0.2f64..3.0,
    ) {
        let report = comparison_check(&anisotropic_model(tx, ty, tz), 2).unwrap();
        for k in 0..report.special.len() {
            prop_assert!(report.special[k] <= report.neumann[k] + 1e-10);
            prop_assert!(report.neumann[k] <= report.periodic[k] + 1e-10);
        }
    }

    /// The localization box grows as the gas gets more dilute and never
    /// shrinks below the hopping range.
    #[test]
    fn gp_length_monotone_in_density(
        rho_lo in 1e-8f64..1e-4,
        factor in 1.01f64..100.0,
        a in 1e-3f64..0.2,
        r0 in (1i64..6).prop_map(|k| 2 * k),
    ) {
        let c_gap = 2.0;
        let lo = gp_length(rho_lo, a, c_gap, r0).unwrap();
        let hi = gp_length(rho_lo * factor, a, c_gap, r0).unwrap();
        prop_assert!(lo.l >= hi.l);
        prop_assert!(hi.l >= r0);
        prop_assert!(lo.l % 2 == 0 && hi.l % 2 == 0);
    }
}

proptest! {
    // each case runs a full zone integration, so keep the sample small
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The advertised algebra between the scattering outputs holds for
    /// arbitrary interaction strength.
    #[test]
    fn scattering_chain_holds_for_random_u(u in 0.01f64..8.0) {
        let params = QuadratureParams { n_q: 48, ..QuadratureParams::default() };
        let s = scattering_data(&LatticeModel::cubic_nn(1.0, u), &params).unwrap();
        let denom = 1.0 + u * s.gamma;
        prop_assert!((s.eight_pi_a - u / denom).abs() <= 1e-12);
        prop_assert!((s.eight_pi_a - u * s.phi0).abs() <= 1e-12);
        prop_assert!((s.phi0 + s.w0 - 1.0).abs() <= 1e-12);
        prop_assert!((s.w0 - u * s.gamma / denom).abs() <= 1e-12);
        prop_assert!(s.scattering_length > 0.0);
    }
}
