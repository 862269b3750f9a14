//! Malliavin derivatives of the numerical and the exact solution.
//!
//! For the scheme, `D_s X_n = G_n(s)` with
//! `G_n(s) = (σ/2) ∏_{j=i}^{n} (1 − f'(X_j)h)^{-1}` for `s ∈ (t_{i−1}, t_i]`.
//! For the exact solution, `D_s X(t) = (σ/2) exp(∫_s^t f'(X(τ))dτ)` on
//! `s ≤ t`. The product is the implicit-Euler discretisation of the
//! exponential, so the two agree to first order in `h`.

use crate::error::{domain, Error, Result};
use crate::fbm::GridSpec;
use crate::model::CirParams;
use crate::scheme::SolutionPath;

fn require_positive_kappa(params: &CirParams) -> Result<()> {
    if params.kappa() > 0.0 {
        Ok(())
    } else {
        Err(Error::UnsupportedRegime(format!(
            "discrete Malliavin derivative is only available for kappa > 0, got {}",
            params.kappa()
        )))
    }
}

/// Piecewise-constant profile `s ↦ G_n(s)` on `(0, t_n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MalliavinProfile {
    node: usize,
    step: f64,
    /// `values[i − 1]` is the value on `(t_{i−1}, t_i]`.
    values: Vec<f64>,
}

impl MalliavinProfile {
    pub fn node(&self) -> usize {
        self.node
    }

    /// Value on the interval `(t_{i−1}, t_i]`, `1 ≤ i ≤ n`.
    pub fn on_interval(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `G_n(s)·1_{[0, t_n]}(s)`; `s = 0` is assigned to the first interval.
    pub fn at(&self, s: f64) -> f64 {
        if self.node == 0 || s < 0.0 {
            return 0.0;
        }
        let i = ((s / self.step).ceil() as usize).max(1);
        if i > self.node {
            return 0.0;
        }
        self.values[i - 1]
    }
}

/// `G_n` by a single backward sweep over `j = n, n−1, …, 1`.
pub fn numeric_malliavin_g(path: &SolutionPath, n: usize) -> Result<MalliavinProfile> {
    let params = path.params();
    require_positive_kappa(params)?;
    let steps = path.grid().steps();
    if n < 1 || n > steps {
        return domain(format!("node index {n} outside 1..={steps}"));
    }
    let h = path.grid().step();
    let x = path.levels();
    let mut values = vec![0.0; n];
    let mut acc = 0.5 * params.sigma();
    for i in (1..=n).rev() {
        acc /= 1.0 - params.drift_prime(x[i]) * h;
        values[i - 1] = acc;
    }
    Ok(MalliavinProfile {
        node: n,
        step: h,
        values,
    })
}

/// `D_s[X^h(t)]` for the piecewise-linear interpolant.
pub fn numeric_malliavin_interpolated(path: &SolutionPath, t: f64, s: f64) -> Result<f64> {
    require_positive_kappa(path.params())?;
    let grid = path.grid();
    let horizon = grid.horizon();
    if !(0.0..=horizon).contains(&t) || !(0.0..=horizon).contains(&s) {
        return domain(format!("(t, s) = ({t}, {s}) outside [0, {horizon}]²"));
    }
    if t == 0.0 || s > t {
        return Ok(0.0);
    }
    let h = grid.step();
    let n = ((t / h).ceil() as usize).clamp(1, grid.steps()) - 1;
    let upper = n + 1;
    let w_upper = (t - grid.node(n)) / h;
    let mut value = w_upper * numeric_malliavin_g(path, upper)?.at(s);
    if n >= 1 {
        value += (1.0 - w_upper) * numeric_malliavin_g(path, n)?.at(s);
    }
    Ok(value)
}

/// `(σ/2) exp(∫_s^t f'(X(τ))dτ)`, with the integral taken by the trapezoid
/// rule along the piecewise-linear path through `levels` on `grid`.
pub fn exact_malliavin_quadrature(
    grid: &GridSpec,
    levels: &[f64],
    s: f64,
    t: f64,
    params: &CirParams,
) -> Result<f64> {
    if levels.len() != grid.steps() + 1 {
        return domain(format!("expected {} levels, got {}", grid.steps() + 1, levels.len()));
    }
    if s > t {
        return Ok(0.0);
    }
    if s < 0.0 || t > grid.horizon() {
        return domain(format!("[{s}, {t}] not covered by [0, {}]", grid.horizon()));
    }
    let h = grid.step();
    let first = ((s / h).floor() as usize).min(grid.steps().saturating_sub(1));
    let last = ((t / h).ceil() as usize).min(grid.steps());
    for &x in &levels[first..=last] {
        if !(x > 0.0) {
            return domain(format!("levels must be positive, got {x}"));
        }
    }
    let level_at = |tau: f64, k: usize| {
        let w = (tau - grid.node(k)) / h;
        levels[k] + w * (levels[k + 1] - levels[k])
    };
    let mut integral = 0.0;
    for k in first..last {
        let a = s.max(grid.node(k));
        let b = t.min(grid.node(k + 1));
        if b <= a {
            continue;
        }
        let fa = params.drift_prime(level_at(a, k));
        let fb = params.drift_prime(level_at(b, k));
        integral += 0.5 * (fa + fb) * (b - a);
    }
    Ok(0.5 * params.sigma() * integral.exp())
}

/// Mean absolute gap between the discrete profile and the exponential form
/// over all node pairs `s = t_a < t = t_b` of a comparison grid with step
/// `comparison_step` (a multiple of the path step).
///
/// The profile is taken at `s⁺`, i.e. on the interval that starts at `t_a`.
pub fn malliavin_gap(path: &SolutionPath, comparison_step: f64) -> Result<f64> {
    let grid = path.grid();
    let ratio = comparison_step / grid.step();
    let factor = ratio.round() as usize;
    if factor == 0 || (ratio - factor as f64).abs() > 1e-9 * ratio || grid.steps() % factor != 0 {
        return domain(format!(
            "comparison step {comparison_step} is not a multiple of the path step {}",
            grid.step()
        ));
    }
    let coarse_nodes = grid.steps() / factor;
    let mut total = 0.0;
    let mut count = 0usize;
    for b in 1..=coarse_nodes {
        let nb = b * factor;
        let profile = numeric_malliavin_g(path, nb)?;
        for a in 0..b {
            let discrete = profile.on_interval(a * factor + 1);
            let exact = exact_malliavin_quadrature(
                grid,
                path.levels(),
                grid.node(a * factor),
                grid.node(nb),
                path.params(),
            )?;
            total += (discrete - exact).abs();
            count += 1;
        }
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{sample_fbm_circulant, FbmPath, HurstParameter};
    use crate::scheme::simulate_path;

    fn fixed_point_path(steps: usize) -> SolutionPath {
        let q = CirParams::new(2.0, 0.5, 0.5, 0.5).unwrap();
        let grid = GridSpec::new(1.0, steps).unwrap();
        simulate_path(&FbmPath::zero(grid, HurstParameter::new(0.7).unwrap()), &q).unwrap()
    }

    fn noisy_path(seed: u64) -> SolutionPath {
        let grid = GridSpec::new(1.0, 64).unwrap();
        let noise = sample_fbm_circulant(grid, HurstParameter::new(0.7).unwrap(), seed).unwrap();
        simulate_path(&noise, &CirParams::default()).unwrap()
    }

    #[test]
    fn fixed_point_profile_closed_form() {
        let path = fixed_point_path(32);
        let h = path.grid().step();
        for n in [1, 5, 32] {
            let g = numeric_malliavin_g(&path, n).unwrap();
            for i in 1..=n {
                let expect = 0.25 * (1.0 + 2.0 * h).powi(-((n - i + 1) as i32));
                assert!((g.on_interval(i) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn last_interval_and_bounds() {
        let path = noisy_path(3);
        let q = path.params();
        let h = path.grid().step();
        for n in 1..=64 {
            let g = numeric_malliavin_g(&path, n).unwrap();
            let x = path.levels()[n];
            let last = 0.25 / (1.0 - q.drift_prime(x) * h);
            assert!((g.on_interval(n) - last).abs() < 1e-15);
            for w in g.values().windows(2) {
                assert!(w[0] <= w[1]);
            }
            assert!(g.values().iter().all(|&v| v > 0.0 && v <= 0.25));
        }
        assert!(numeric_malliavin_g(&path, 0).is_err());
        assert!(numeric_malliavin_g(&path, 65).is_err());
    }

    #[test]
    fn negative_kappa_is_unsupported() {
        let q = CirParams::new(-0.5, -0.5, 0.5, 1.0).unwrap();
        let grid = GridSpec::new(1.0, 8).unwrap();
        let path = simulate_path(&FbmPath::zero(grid, HurstParameter::new(0.7).unwrap()), &q).unwrap();
        assert!(matches!(numeric_malliavin_g(&path, 3), Err(Error::UnsupportedRegime(_))));
        assert!(numeric_malliavin_interpolated(&path, 0.5, 0.2).is_err());
    }

    #[test]
    fn profile_lookup() {
        let path = noisy_path(8);
        let g = numeric_malliavin_g(&path, 10).unwrap();
        let h = path.grid().step();
        assert_eq!(g.at(0.0), g.on_interval(1));
        assert_eq!(g.at(2.5 * h), g.on_interval(3));
        assert_eq!(g.at(3.0 * h), g.on_interval(3));
        assert_eq!(g.at(10.0 * h), g.on_interval(10));
        assert_eq!(g.at(10.5 * h), 0.0);
    }

    #[test]
    fn interpolated_derivative() {
        let path = noisy_path(5);
        let h = path.grid().step();
        let n = 20;
        let g_next = numeric_malliavin_g(&path, n + 1).unwrap();
        let t_next = path.grid().node(n + 1);
        for k in 0..=(n + 1) {
            let s = k as f64 * h * 0.999;
            let v = numeric_malliavin_interpolated(&path, t_next, s).unwrap();
            assert!((v - g_next.at(s)).abs() < 1e-15);
        }
        let mid = path.grid().node(n) + 0.5 * h;
        let s = path.grid().node(n) + 0.3 * h;
        let v = numeric_malliavin_interpolated(&path, mid, s).unwrap();
        assert!((v - 0.5 * g_next.at(s)).abs() < 1e-15);
        assert_eq!(numeric_malliavin_interpolated(&path, 0.3, 0.31).unwrap(), 0.0);
        assert_eq!(numeric_malliavin_interpolated(&path, 0.0, 0.0).unwrap(), 0.0);
        assert!(numeric_malliavin_interpolated(&path, 1.5, 0.1).is_err());
        let v = numeric_malliavin_interpolated(&path, 0.4, 0.1).unwrap();
        assert!(v > 0.0 && v <= 0.25);
    }

    #[test]
    fn exact_form_examples() {
        let path = fixed_point_path(16);
        let q = path.params();
        let grid = path.grid();
        let lv = path.levels();
        assert_eq!(exact_malliavin_quadrature(grid, lv, 0.4, 0.4, q).unwrap(), 0.25);
        for &(s, t) in &[(0.0, 1.0), (0.1, 0.73), (0.5, 0.5625)] {
            let v = exact_malliavin_quadrature(grid, lv, s, t, q).unwrap();
            assert!((v - 0.25 * (-2.0 * (t - s)).exp()).abs() < 1e-12);
        }
        assert_eq!(exact_malliavin_quadrature(grid, lv, 0.7, 0.3, q).unwrap(), 0.0);
        let mut bad = lv.to_vec();
        bad[3] = 0.0;
        assert!(exact_malliavin_quadrature(grid, &bad, 0.0, 0.5, q).is_err());
        assert!(exact_malliavin_quadrature(grid, &lv[1..], 0.0, 0.5, q).is_err());
        let noisy = noisy_path(2);
        let v = exact_malliavin_quadrature(noisy.grid(), noisy.levels(), 0.1, 0.9, noisy.params()).unwrap();
        assert!(v > 0.0 && v <= 0.25);
    }

    #[test]
    fn gap_requires_commensurate_grid() {
        let path = noisy_path(1);
        assert!(malliavin_gap(&path, 1.0 / 48.0).is_err());
        assert!(malliavin_gap(&path, 1.0 / 8.0).unwrap() > 0.0);
    }
}
