//! Shared numerical utilities: deterministic summation, Richardson
//! extrapolation, 1D adaptive quadrature, and least-squares fits.

use rayon::prelude::*;

/// Pairwise tree summation. Reduction order depends only on the slice
/// length, so results are reproducible regardless of how the terms were
/// produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Chunk size for parallel index sums. Fixed so that the reduction tree is
/// identical at every thread count.
const PAR_CHUNK: usize = 1 << 14;

/// Sums `f(i)` for `i in 0..n` with a fixed chunked pairwise reduction.
/// Chunks are evaluated in parallel but combined in index order, so the
/// result is bit-for-bit identical at any worker count.
pub fn par_index_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let n_chunks = n.div_ceil(PAR_CHUNK);
    let partials: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * PAR_CHUNK;
            let end = (start + PAR_CHUNK).min(n);
            let mut acc = 0.0;
            for i in start..end {
                acc += f(i);
            }
            acc
        })
        .collect();
    pairwise_sum(&partials)
}

/// Result of a Richardson extrapolation over a refinement sequence.
#[derive(Debug, Clone, Copy)]
pub struct Extrapolated {
    pub value: f64,
    /// Estimated relative error of `value`.
    pub rel_error: f64,
    /// Observed convergence order, NaN when the sequence converged below
    /// rounding before an order could be measured.
    pub order: f64,
}

/// Extrapolates a sequence of approximations `values[i]` computed at mesh
/// widths `widths[i]` (decreasing), assuming a single dominant error term
/// C·h^q with q estimated from the data. Needs at least three levels; with
/// exactly two, returns the last value with the last difference as the
/// error estimate.
pub fn richardson(widths: &[f64], values: &[f64]) -> Extrapolated {
    assert_eq!(widths.len(), values.len());
    assert!(values.len() >= 2);
    let n = values.len();
    let last = values[n - 1];
    let scale = last.abs().max(1e-300);

    if n == 2 {
        let diff = (values[1] - values[0]).abs();
        return Extrapolated {
            value: last,
            rel_error: diff / scale,
            order: f64::NAN,
        };
    }

    let e1 = values[n - 2] - values[n - 3];
    let e2 = values[n - 1] - values[n - 2];
    if e2.abs() <= 1e-15 * scale {
        // converged to rounding level
        return Extrapolated {
            value: last,
            rel_error: (e2.abs() / scale).max(1e-16),
            order: f64::NAN,
        };
    }
    let ratio = e1 / e2;
    let r1 = widths[n - 3] / widths[n - 2];
    let r2 = widths[n - 2] / widths[n - 1];
    if !(ratio > 1.2) {
        // no convergence trend; report the raw difference
        return Extrapolated {
            value: last,
            rel_error: e2.abs() / scale,
            order: f64::NAN,
        };
    }
    // with e_i ≈ C (h_{i-1}^q − h_i^q) and nearly uniform ratios,
    // ratio ≈ r^q up to the mild non-uniformity of the mesh
    let r_mean = (r1 * r2).sqrt();
    let q = ratio.ln() / r_mean.ln();
    let factor = r2.powf(q) - 1.0;
    let corrected = last + e2 / factor;
    // error estimate: difference between the extrapolants of the last two
    // level pairs, i.e. how much the correction itself is still moving
    let prev_corrected = values[n - 2] + e1 / (r1.powf(q) - 1.0);
    let est = (corrected - prev_corrected).abs() / corrected.abs().max(1e-300);
    Extrapolated {
        value: corrected,
        rel_error: est.max(f64::EPSILON),
        order: q,
    }
}

/// Extrapolation with known error exponents: fits the last
/// `exponents.len() + 1` levels to L + Σ_j C_j h^{q_j} and returns
/// (L, error estimate). The estimate is the shift of L when the
/// highest-order term is dropped from the model (and the coarsest level
/// with it), which bounds the residual conservatively whenever the stated
/// exponents are right.
pub fn extrapolate_powers(widths: &[f64], values: &[f64], exponents: &[f64]) -> (f64, f64) {
    assert_eq!(widths.len(), values.len());
    assert!(values.len() >= exponents.len() + 1);

    fn solve_limit(widths: &[f64], values: &[f64], exponents: &[f64]) -> f64 {
        let k = exponents.len() + 1;
        let n = values.len();
        let mut m = nalgebra::DMatrix::<f64>::zeros(k, k);
        let mut rhs = nalgebra::DVector::<f64>::zeros(k);
        for (row, i) in (n - k..n).enumerate() {
            m[(row, 0)] = 1.0;
            for (j, &q) in exponents.iter().enumerate() {
                m[(row, j + 1)] = widths[i].powf(q);
            }
            rhs[row] = values[i];
        }
        let sol = m.lu().solve(&rhs).expect("distinct mesh widths");
        sol[0]
    }

    let full = solve_limit(widths, values, exponents);
    let reduced = solve_limit(widths, values, &exponents[..exponents.len() - 1]);
    (full, (full - reduced).abs())
}

/// Adaptive Simpson quadrature on [a, b].
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Ordinary least squares for y = intercept + slope·x.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Residual sum of squares.
    pub rss: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    LineFit {
        slope,
        intercept,
        rss,
    }
}

/// Power-law exponent fit: log y = log C + q log x, on strictly positive
/// data.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> LineFit {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}

/// Least squares for y = c0 + c1·x + c2·x² (used by 1/L extrapolations).
pub fn fit_quadratic(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len();
    assert!(n >= 3);
    // normal equations for the 3-parameter model
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for i in 0..n {
        let basis = [1.0, x[i], x[i] * x[i]];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += basis[r] * basis[c];
            }
            rhs[r] += basis[r] * y[i];
        }
    }
    let mat = nalgebra::Matrix3::from_fn(|r, c| m[r][c]);
    let v = nalgebra::Vector3::new(rhs[0], rhs[1], rhs[2]);
    let sol = mat.lu().solve(&v).expect("normal equations solvable");
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = b - sol[0] - sol[1] * a - sol[2] * a * a;
            r * r
        })
        .sum();
    (sol[0], sol[1], sol[2], rss)
}

/// Akaike information criterion for a least-squares fit.
pub fn aic(n: usize, k: usize, rss: f64) -> f64 {
    let n = n as f64;
    n * (rss.max(1e-300) / n).ln() + 2.0 * k as f64
}
