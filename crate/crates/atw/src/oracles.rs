//! Closed-form reference solutions anchoring the quantitative tests: the
//! shrinking ball, the torus curvature bound, and the arrival-time PDE
//! residual.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

/// Shrinking-ball reference for one implicit step of size `h` in dimension
/// `n`.
#[derive(Clone, Copy, Debug)]
pub struct BallOracle {
    pub r0: f64,
    pub n: usize,
    pub h: f64,
}

/// Larger root of `r'^2 - r r' + (n-1) h = 0` while it exists, else 0.
///
/// This is the interior critical point of the radial step energy; see
/// [`ball_radius_next_argmin`] for the global minimizer, which goes extinct
/// slightly earlier.
pub fn ball_radius_next(r: f64, h: f64, n: usize) -> f64 {
    assert!(r >= 0.0 && h >= 0.0);
    let disc = r * r - 4.0 * (n as f64 - 1.0) * h;
    if disc >= 0.0 {
        0.5 * (r + disc.sqrt())
    } else {
        0.0
    }
}

/// Step energy of the candidate ball of radius `rho <= r` against the
/// previous ball of radius `r`, divided by the measure of the unit sphere:
/// `rho^{n-1} + (1/h) int_rho^r s^{n-1} (r - s) ds`.
pub fn ball_step_energy(rho: f64, r: f64, h: f64, n: usize) -> f64 {
    debug_assert!(rho <= r);
    let m = n as f64;
    // int s^{n-1} (r - s) ds = r s^n / n - s^{n+1} / (n+1)
    let anti = |s: f64| r * s.powi(n as i32) / m - s.powi(n as i32 + 1) / (m + 1.0);
    rho.powi(n as i32 - 1) + (anti(r) - anti(rho)) / h
}

/// Radius of the global minimizer of the radial step energy: the critical
/// point while the ball still beats the empty set, else 0.
///
/// Comparing the two candidate energies directly shows extinction strictly
/// before the discriminant of the critical-point quadratic vanishes: the
/// cutoff radius is `(4/sqrt 3) sqrt(h)` for n = 2 and `3 sqrt(h)` for
/// n = 3, against `2 sqrt(h)` and `2 sqrt(2 h)` for the root to exist.
pub fn ball_radius_next_argmin(r: f64, h: f64, n: usize) -> f64 {
    let rho = ball_radius_next(r, h, n);
    if rho == 0.0 {
        return 0.0;
    }
    if ball_step_energy(rho, r, h, n) < ball_step_energy(0.0, r, h, n) {
        rho
    } else {
        0.0
    }
}

/// Extinction convention for iterated radius sequences.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BallExtinction {
    /// Critical point while the discriminant is non-negative (closed form).
    Discriminant,
    /// Global minimizer of the radial energy (empty set wins earlier).
    Argmin,
}

impl BallOracle {
    pub fn new(r0: f64, n: usize, h: f64) -> Result<Self> {
        if !(r0 > 0.0 && h > 0.0) || !(n == 2 || n == 3) {
            return Err(Error::Precondition(format!(
                "ball oracle needs r0 > 0, h > 0, n in {{2,3}}: r0={r0} h={h} n={n}"
            )));
        }
        Ok(BallOracle { r0, n, h })
    }

    /// Radii `r_0, r_1, ..` up to `k_max` entries or the first zero.
    pub fn radius_seq(&self, k_max: usize, ext: BallExtinction) -> Vec<f64> {
        let mut out = vec![self.r0];
        let mut r = self.r0;
        for _ in 0..k_max {
            r = match ext {
                BallExtinction::Discriminant => ball_radius_next(r, self.h, self.n),
                BallExtinction::Argmin => ball_radius_next_argmin(r, self.h, self.n),
            };
            out.push(r);
            if r == 0.0 {
                break;
            }
        }
        out
    }

    /// `sqrt(r0^2 - 2 k (n-1) h)`, clamped at 0.
    ///
    /// The exact iterates satisfy `r_k^2 = r0^2 - 2k(n-1)h - D_k` with
    /// `D_k = (n-1) h sum_j (r_{j-1}/r_j - 1) > 0`, so they run slightly
    /// *below* this curve, by O(h^2) per step away from extinction and by
    /// O(sqrt h) in the final steps.
    pub fn lower_bound(&self, k: usize) -> f64 {
        (self.r0 * self.r0 - 2.0 * k as f64 * (self.n as f64 - 1.0) * self.h)
            .max(0.0)
            .sqrt()
    }

    /// Exact arrival time of the shrinking ball sampled at cell centers:
    /// `(r0^2 - |x|^2) / (2 (n-1))` inside, 0 outside.
    pub fn arrival_exact(&self, grid: &GridSpec) -> Result<ScalarField> {
        if grid.dim() != self.n {
            return Err(Error::GridMismatch);
        }
        let r0sq = self.r0 * self.r0;
        let denom = 2.0 * (self.n as f64 - 1.0);
        ScalarField::from_fn(grid.clone(), |x| {
            let rsq: f64 = x.iter().map(|v| v * v).sum();
            ((r0sq - rsq) / denom).max(0.0)
        })
    }

    /// Total variation of the exact arrival time:
    /// `n omega_n r0^{n+1} / ((n+1)(n-1))`.
    pub fn arrival_tv_exact(&self) -> f64 {
        let m = self.n as f64;
        let omega = unit_ball_volume(self.n);
        m * omega * self.r0.powi(self.n as i32 + 1) / ((m + 1.0) * (m - 1.0))
    }

    /// Continuum extinction time `r0^2 / (2(n-1))`.
    pub fn extinction_time_exact(&self) -> f64 {
        self.r0 * self.r0 / (2.0 * (self.n as f64 - 1.0))
    }
}

pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => panic!("unsupported dimension {n}"),
    }
}

/// Minimum of the sum of principal curvatures over a torus surface:
/// `1/r_tube - 1/(R - r_tube)`; positive iff `R > 2 r_tube`.
pub fn torus_min_h(major: f64, tube: f64) -> f64 {
    1.0 / tube - 1.0 / (major - tube)
}

/// Statistics of the arrival-time PDE residual `|Du| div(Du/|Du|) + 1` on a
/// radial band, by central differences.
#[derive(Clone, Debug)]
pub struct ResidualStats {
    pub max_abs: f64,
    pub mean_abs: f64,
    pub evaluated: usize,
    /// Band cells excluded because |Du| was below the cutoff.
    pub excluded: usize,
}

/// Evaluate the residual on cells with `band_lo <= |x| <= band_hi`,
/// excluding near-critical points of `u` (|Du| below `grad_floor`).
pub fn viscosity_residual(
    u: &ScalarField,
    band_lo: f64,
    band_hi: f64,
    grad_floor: f64,
) -> Result<ResidualStats> {
    let grid = u.grid();
    let dim = grid.dim();
    let dx = grid.spacing();
    let shape = grid.shape3();
    let strides = grid.strides();
    let v = u.values();

    let mut max_abs: f64 = 0.0;
    let mut sum_abs = 0.0;
    let mut evaluated = 0usize;
    let mut excluded = 0usize;

    'cells: for lin in 0..grid.ncells() {
        let idx = grid.unlinear(lin);
        for a in 0..dim {
            if idx[a] == 0 || idx[a] + 1 == shape[a] {
                continue 'cells;
            }
        }
        let x = grid.center_of_linear(lin);
        let r: f64 = x[..dim].iter().map(|c| c * c).sum::<f64>().sqrt();
        if r < band_lo || r > band_hi {
            continue;
        }

        // central first and second differences
        let mut grad = [0.0f64; 3];
        let mut hess = [[0.0f64; 3]; 3];
        for a in 0..dim {
            let sa = strides[a];
            grad[a] = (v[lin + sa] - v[lin - sa]) / (2.0 * dx);
            hess[a][a] = (v[lin + sa] - 2.0 * v[lin] + v[lin - sa]) / (dx * dx);
            for b in (a + 1)..dim {
                let sb = strides[b];
                let m = (v[lin + sa + sb] - v[lin + sa - sb] - v[lin - sa + sb]
                    + v[lin - sa - sb])
                    / (4.0 * dx * dx);
                hess[a][b] = m;
                hess[b][a] = m;
            }
        }
        let gnorm2: f64 = grad[..dim].iter().map(|g| g * g).sum();
        let gnorm = gnorm2.sqrt();
        if gnorm < grad_floor {
            excluded += 1;
            continue;
        }
        let mut lap = 0.0;
        let mut quad = 0.0;
        for a in 0..dim {
            lap += hess[a][a];
            for b in 0..dim {
                quad += hess[a][b] * grad[a] * grad[b];
            }
        }
        // |Du| div(Du/|Du|) = lap - D2u[Du,Du]/|Du|^2
        let residual = lap - quad / gnorm2 + 1.0;
        max_abs = max_abs.max(residual.abs());
        sum_abs += residual.abs();
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(Error::Precondition(
            "no band cells with usable gradient".into(),
        ));
    }
    Ok(ResidualStats { max_abs, mean_abs: sum_abs / evaluated as f64, evaluated, excluded })
}

/// Separable Gaussian smoothing with standard deviation `sigma_cells` (in
/// cells), kernel truncated at 4 sigma, renormalized, replicated ends.
pub fn gaussian_smooth(f: &ScalarField, sigma_cells: f64) -> ScalarField {
    let grid = f.grid().clone();
    let dim = grid.dim();
    let shape = grid.shape3();
    let strides = grid.strides();
    let radius = (4.0 * sigma_cells).ceil() as usize;
    let mut kernel = Vec::with_capacity(2 * radius + 1);
    for i in 0..=2 * radius {
        let t = i as f64 - radius as f64;
        kernel.push((-0.5 * t * t / (sigma_cells * sigma_cells)).exp());
    }
    let norm: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= norm;
    }

    let mut values = f.values().to_vec();
    let mut scratch = values.clone();
    for axis in 0..dim {
        let n = shape[axis];
        let stride = strides[axis];
        let (a1, a2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for i1 in 0..shape[a1] {
            for i2 in 0..shape[a2] {
                let base = i1 * strides[a1] + i2 * strides[a2];
                for i in 0..n {
                    let mut acc = 0.0;
                    for (k, w) in kernel.iter().enumerate() {
                        let j = (i + k).saturating_sub(radius).min(n - 1);
                        acc += w * values[base + j * stride];
                    }
                    scratch[base + i * stride] = acc;
                }
            }
        }
        std::mem::swap(&mut values, &mut scratch);
    }
    ScalarField::new(grid, values).expect("smoothing preserves finiteness")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_next_matches_closed_form() {
        assert_eq!(ball_radius_next(1.0, 0.0, 2), 1.0);
        let r = ball_radius_next(1.0, 0.01, 2);
        assert!((r - 0.5 * (1.0 + 0.96f64.sqrt())).abs() < 1e-15);
        assert!((r - 0.9898979485566356).abs() < 1e-12);
        assert_eq!(ball_radius_next(0.1, 0.01, 2), 0.0);
    }

    #[test]
    fn radius_next_solves_quadratic() {
        for &(r, h, n) in &[(1.0, 0.01, 2usize), (0.7, 0.003, 3), (2.5, 0.1, 2)] {
            let rp = ball_radius_next(r, h, n);
            if rp > 0.0 {
                let res = rp * rp - r * rp + (n as f64 - 1.0) * h;
                assert!(res.abs() < 1e-12 * r * r, "residual {res}");
            }
        }
    }

    #[test]
    fn argmin_extinction_thresholds() {
        // n=2 cutoff at (4/sqrt3) sqrt(h); n=3 at 3 sqrt(h)
        let h: f64 = 0.01;
        let c2 = 4.0 / 3.0f64.sqrt() * h.sqrt();
        assert_eq!(ball_radius_next_argmin(c2 * 1.001, h, 2) > 0.0, true);
        assert_eq!(ball_radius_next_argmin(c2 * 0.999, h, 2), 0.0);
        let c3 = 3.0 * h.sqrt();
        assert!(ball_radius_next_argmin(c3 * 1.001, h, 3) > 0.0);
        assert_eq!(ball_radius_next_argmin(c3 * 0.999, h, 3), 0.0);
        // between the discriminant root and the cutoff, the critical point
        // exists but the empty set has lower energy
        let r_band = 2.2 * h.sqrt();
        assert!(ball_radius_next(r_band, h, 2) > 0.0);
        assert_eq!(ball_radius_next_argmin(r_band, h, 2), 0.0);
    }

    #[test]
    fn sequence_monotone_and_square_identity() {
        let oracle = BallOracle::new(1.0, 2, 0.01).unwrap();
        let seq = oracle.radius_seq(1000, BallExtinction::Argmin);
        assert!(seq.windows(2).all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0)));
        assert_eq!(*seq.last().unwrap(), 0.0);
        // extinct after ~ r0^2/(2h) = 50 steps, within 10%
        let n_ext = seq.len() - 1;
        assert!((45..=55).contains(&n_ext), "extinct at {n_ext}");

        // exact square identity vs the sqrt curve:
        // r_k^2 = r0^2 - 2kh - h * sum_j (r_{j-1}/r_j - 1)
        let mut deficit = 0.0;
        for (k, w) in seq.windows(2).enumerate() {
            if w[1] == 0.0 {
                break;
            }
            deficit += 0.01 * (w[0] / w[1] - 1.0);
            let lhs = w[1] * w[1];
            let rhs = 1.0 - 2.0 * (k + 1) as f64 * 0.01 - deficit;
            assert!((lhs - rhs).abs() < 1e-12, "k={k}: {lhs} vs {rhs}");
            // below the sqrt curve, but only by the deficit
            let bound = oracle.lower_bound(k + 1);
            assert!(w[1] <= bound + 1e-12);
            assert!(w[1] * w[1] >= bound * bound - deficit - 1e-12);
        }
    }

    #[test]
    fn richardson_limit_of_sequence() {
        // h -> 0 with kh = t fixed: r_k -> sqrt(r0^2 - 2t), error O(h)
        let t = 0.3;
        let exact = (1.0f64 - 2.0 * t).sqrt();
        let mut errs = Vec::new();
        for &h in &[1e-3, 5e-4] {
            let k = (t / h).round() as usize;
            let oracle = BallOracle::new(1.0, 2, h).unwrap();
            let seq = oracle.radius_seq(k, BallExtinction::Discriminant);
            errs.push((seq[k] - exact).abs());
        }
        assert!(errs[1] < errs[0]);
        assert!(errs[0] < 10.0 * 1e-3, "error {}", errs[0]);
    }

    #[test]
    fn arrival_exact_values() {
        let g = GridSpec::centered(2, 64, 2.5).unwrap();
        let oracle = BallOracle::new(1.0, 2, 0.01).unwrap();
        let u = oracle.arrival_exact(&g).unwrap();
        // value at the center cell: centers at +-dx/2, so r^2 = dx^2/2
        let lin = g.linear([32, 32, 0]);
        let x = g.center_of_linear(lin);
        let rsq = x[0] * x[0] + x[1] * x[1];
        assert!((u.values()[lin] - (1.0 - rsq) / 2.0).abs() < 1e-15);
        // superlevel sets are the shrinking balls
        for &t in &[0.1, 0.25, 0.4] {
            let rt = (1.0f64 - 2.0 * t).sqrt();
            for lin in 0..g.ncells() {
                let x = g.center_of_linear(lin);
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                assert_eq!(u.values()[lin] > t, r < rt, "t={t} r={r}");
            }
        }
        let o3 = BallOracle::new(1.0, 3, 0.01).unwrap();
        let g3 = GridSpec::centered(3, 16, 2.5).unwrap();
        let u3 = o3.arrival_exact(&g3).unwrap();
        let c3 = g3.linear([8, 8, 8]);
        let x = g3.center_of_linear(c3);
        let rsq: f64 = x.iter().map(|v| v * v).sum();
        assert!((u3.values()[c3] - (1.0 - rsq) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn arrival_tv_closed_form_vs_quadrature() {
        // |Du| = |x|/(n-1) integrated over the ball, radial quadrature
        for &(n, r0) in &[(2usize, 1.0f64), (3, 1.0), (2, 0.6)] {
            let oracle = BallOracle::new(r0, n, 0.01).unwrap();
            let exact = oracle.arrival_tv_exact();
            let m = n as f64;
            let surface = m * unit_ball_volume(n); // |S^{n-1}| r^{n-1} at r=1
            let steps = 200_000;
            let dr = r0 / steps as f64;
            let mut acc = 0.0;
            for i in 0..steps {
                let r = (i as f64 + 0.5) * dr;
                acc += surface * r.powi(n as i32 - 1) * (r / (m - 1.0)) * dr;
            }
            assert!(
                (acc - exact).abs() < 1e-6 * exact,
                "n={n} r0={r0}: quadrature {acc} vs {exact}"
            );
        }
        assert!((BallOracle::new(1.0, 2, 0.01).unwrap().arrival_tv_exact()
            - 2.0 * std::f64::consts::PI / 3.0)
            .abs()
            < 1e-14);
        assert!((BallOracle::new(1.0, 3, 0.01).unwrap().arrival_tv_exact()
            - std::f64::consts::PI / 2.0)
            .abs()
            < 1e-14);
    }

    #[test]
    fn torus_curvature_values() {
        let h = torus_min_h(1.0, 0.35);
        assert!((h - 0.3 / (0.35 * 0.65)).abs() < 1e-12);
        assert!((h - 1.3186813186813187).abs() < 1e-10);
        assert_eq!(torus_min_h(1.0, 0.5), 0.0);
        assert!((torus_min_h(1.0, 0.1) - (10.0 - 1.0 / 0.9)).abs() < 1e-12);
    }

    #[test]
    fn residual_zero_on_exact_arrival() {
        // the exact field is quadratic: central differences are exact, so
        // the residual vanishes to rounding
        let g = GridSpec::centered(2, 128, 2.5).unwrap();
        let oracle = BallOracle::new(1.0, 2, 0.01).unwrap();
        let u = oracle.arrival_exact(&g).unwrap();
        let stats = viscosity_residual(&u, 0.2, 0.8, 1e-6).unwrap();
        assert!(stats.max_abs < 5.0 * g.spacing(), "max residual {}", stats.max_abs);
        assert!(stats.max_abs < 1e-9, "should be near-exact, got {}", stats.max_abs);
        assert_eq!(stats.excluded, 0);
    }

    #[test]
    fn residual_excludes_flat_fields() {
        let g = GridSpec::centered(2, 64, 2.5).unwrap();
        let f = ScalarField::constant(g, 1.0);
        assert!(viscosity_residual(&f, 0.2, 0.8, 1e-9).is_err());
    }

    #[test]
    fn gaussian_smoothing_preserves_quadratics_inside() {
        // symmetric kernel: convolution of a quadratic adds a constant, so
        // second differences are unchanged away from the boundary
        let g = GridSpec::centered(2, 96, 2.0).unwrap();
        let f = ScalarField::from_fn(g.clone(), |x| x[0] * x[0] + 0.5 * x[1] * x[1]).unwrap();
        let s = gaussian_smooth(&f, 2.0);
        let lin = g.linear([48, 48, 0]);
        let dx = g.spacing();
        let d2 = (s.values()[lin + g.strides()[0]] - 2.0 * s.values()[lin]
            + s.values()[lin - g.strides()[0]])
            / (dx * dx);
        assert!((d2 - 2.0).abs() < 1e-9, "d2={d2}");
    }
}
