//! Drift-implicit (backward) Euler scheme for `dX = f(X)dt + (σ/2)dB`.
//!
//! The implicit relation `X_{n+1} = X_n + f(X_{n+1})h + σΔB_{n+1}/2` is a
//! quadratic in `X_{n+1}` whose positive root is
//! `[a + √(a² + c)] / (2 + κh)` with `a = X_n + σΔB/2` and
//! `c = κhθ(2 + κh) > 0`.

use std::io::Write;

use crate::error::{domain, Error, Result};
use crate::fbm::{FbmPath, GridSpec};
use crate::fmt_f64;
use crate::model::CirParams;

fn check_step(h: f64, params: &CirParams) -> Result<()> {
    if !(h > 0.0) {
        return domain(format!("step must be positive, got {h}"));
    }
    if h * (-0.5 * params.kappa()).max(0.0) >= 1.0 {
        return domain(format!(
            "step {h} violates h*max(0, -kappa/2) < 1 for kappa = {}",
            params.kappa()
        ));
    }
    let k = params.kappa() * h;
    let c = k * params.theta() * (2.0 + k);
    assert!(c > 0.0 && 2.0 + k > 0.0, "root constant must be positive");
    Ok(())
}

#[inline]
fn step_unchecked(x: f64, db: f64, h: f64, params: &CirParams) -> f64 {
    let kh = params.kappa() * h;
    let c = kh * params.theta() * (2.0 + kh);
    let a = x + 0.5 * params.sigma() * db;
    let root = (a * a + c).sqrt();
    let numerator = if a >= 0.0 { a + root } else { c / (root - a) };
    numerator / (2.0 + kh)
}

/// One backward Euler step from `x_n > 0` with noise increment `db`.
pub fn backward_euler_step(x_n: f64, db: f64, h: f64, params: &CirParams) -> Result<f64> {
    if !(x_n > 0.0) {
        return domain(format!("level must be positive, got {x_n}"));
    }
    check_step(h, params)?;
    Ok(step_unchecked(x_n, db, h, params))
}

/// Numerical solution `X_0..X_N` on a grid, all strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPath {
    grid: GridSpec,
    params: CirParams,
    x: Vec<f64>,
    seed: Option<u64>,
}

/// Runs the scheme along a driving path. Requires `H > 1/2`.
pub fn simulate_path(noise: &FbmPath, params: &CirParams) -> Result<SolutionPath> {
    noise.hurst().require_long_memory()?;
    let grid = *noise.grid();
    let h = grid.step();
    check_step(h, params)?;
    let mut x = Vec::with_capacity(grid.steps() + 1);
    let mut level = params.x0();
    x.push(level);
    for db in noise.increments() {
        level = step_unchecked(level, db, h, params);
        if !(level > 0.0) {
            return Err(Error::Numerical(format!(
                "non-positive level {level} after {} steps",
                x.len()
            )));
        }
        x.push(level);
    }
    Ok(SolutionPath {
        grid,
        params: *params,
        x,
        seed: noise.seed(),
    })
}

impl SolutionPath {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &CirParams {
        &self.params
    }

    /// Node values `X_n`.
    pub fn levels(&self) -> &[f64] {
        &self.x
    }

    /// Seed of the driving fBm path.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Piecewise-linear interpolant `X^h(t)`.
    pub fn interpolate(&self, t: f64) -> Result<f64> {
        let horizon = self.grid.horizon();
        if !(0.0..=horizon).contains(&t) {
            return domain(format!("t = {t} outside [0, {horizon}]"));
        }
        let n_steps = self.grid.steps();
        let h = self.grid.step();
        let k = ((t / h).round() as usize).min(n_steps);
        if t == self.grid.node(k) {
            return Ok(self.x[k]);
        }
        // t in (t_n, t_{n+1}]
        let n = ((t / h).ceil() as usize).clamp(1, n_steps) - 1;
        let w = (t - self.grid.node(n)) / h;
        Ok(self.x[n] + w * (self.x[n + 1] - self.x[n]))
    }

    /// `r_n = X_n²` at every node.
    pub fn rate_path(&self) -> Vec<f64> {
        self.x.iter().map(|x| x * x).collect()
    }

    /// `r^h(t) = X^h(t)²`.
    pub fn rate_interpolate(&self, t: f64) -> Result<f64> {
        self.interpolate(t).map(|x| x * x)
    }

    /// Residual of the implicit relation at step `n → n + 1`.
    pub fn implicit_residual(&self, n: usize, db: f64) -> f64 {
        let h = self.grid.step();
        let next = self.x[n + 1];
        next - self.x[n] - self.params.drift(next) * h - 0.5 * self.params.sigma() * db
    }

    /// Writes `t,X,r` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,X,r")?;
        for (n, x) in self.x.iter().enumerate() {
            writeln!(
                out,
                "{},{},{}",
                fmt_f64(self.grid.node(n)),
                fmt_f64(*x),
                fmt_f64(x * x)
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{sample_fbm_circulant, HurstParameter};

    fn hurst(h: f64) -> HurstParameter {
        HurstParameter::new(h).unwrap()
    }

    /// Bisection on `g(y) = y − x − f(y)h − σ db/2`, increasing in `y` for
    /// `κ > 0`.
    fn bisection_root(x: f64, db: f64, h: f64, q: &CirParams) -> f64 {
        let g = |y: f64| y - x - q.drift(y) * h - 0.5 * q.sigma() * db;
        let (mut lo, mut hi) = (1e-12, 1e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn fixed_point_is_preserved() {
        let q = CirParams::default();
        let fixed = 0.5f64.sqrt();
        for &h in &[1e-4, 0.01, 0.1, 1.0, 10.0] {
            let y = backward_euler_step(fixed, 0.0, h, &q).unwrap();
            assert!((y - fixed).abs() < 1e-15, "h = {h}");
        }
    }

    #[test]
    fn step_matches_bisection() {
        let q = CirParams::default();
        let oracle = bisection_root(1.0, 0.0, 0.1, &q);
        assert!((oracle - 0.956_61).abs() < 1e-5);
        let y = backward_euler_step(1.0, 0.0, 0.1, &q).unwrap();
        assert!((y - oracle).abs() < 1e-13);
        for &(x, db) in &[(0.3, 0.2), (1.2, -0.5), (0.05, -1.0), (2.0, 3.0)] {
            let y = backward_euler_step(x, db, 0.03, &q).unwrap();
            assert!((y - bisection_root(x, db, 0.03, &q)).abs() < 1e-12);
        }
    }

    #[test]
    fn large_negative_noise_stays_positive() {
        let q = CirParams::default();
        // σ·dB/2 = −10
        let y = backward_euler_step(1.0, -40.0, 0.1, &q).unwrap();
        assert!(y > 0.0);
        let c: f64 = 2.0 * 0.1 * 0.5 * (2.0 + 0.2);
        let a: f64 = -9.0;
        let expect = c / ((a * a + c).sqrt() - a) / 2.2;
        assert!((y - expect).abs() <= 1e-15 * expect);
        let y = backward_euler_step(1.0, -4e9, 0.1, &q).unwrap();
        assert!(y > 0.0 && y.is_finite());
    }

    #[test]
    fn step_errors() {
        let q = CirParams::default();
        assert!(backward_euler_step(0.0, 0.0, 0.1, &q).is_err());
        assert!(backward_euler_step(1.0, 0.0, 0.0, &q).is_err());
        let neg = CirParams::new(-2.0, -0.5, 0.5, 1.0).unwrap();
        assert!(backward_euler_step(1.0, 0.0, 0.99, &neg).is_ok());
        assert!(backward_euler_step(1.0, 0.0, 1.0, &neg).is_err());
    }

    #[test]
    fn zero_noise_relaxes_monotonically_from_above() {
        let q = CirParams::new(2.0, 0.5, 0.5, 1.5).unwrap();
        let grid = GridSpec::new(1.0, 64).unwrap();
        let path = simulate_path(&FbmPath::zero(grid, hurst(0.7)), &q).unwrap();
        // Independent recursion through the bisection oracle.
        let mut x = q.x0();
        for (n, w) in path.levels().windows(2).enumerate() {
            assert!(w[1] < w[0], "step {n}");
            assert!(w[1] > 0.5f64.sqrt());
            x = bisection_root(x, 0.0, grid.step(), &q);
            assert!((w[1] - x).abs() < 1e-12);
        }
    }

    #[test]
    fn single_step_path() {
        let q = CirParams::default();
        let grid = GridSpec::new(0.5, 1).unwrap();
        let noise = sample_fbm_circulant(grid, hurst(0.7), 9).unwrap();
        let path = simulate_path(&noise, &q).unwrap();
        let expect = backward_euler_step(1.0, noise.terminal(), 0.5, &q).unwrap();
        assert_eq!(path.levels(), &[1.0, expect]);
        assert_eq!(path.seed(), Some(9));
    }

    #[test]
    fn rejects_short_memory_noise() {
        let grid = GridSpec::new(1.0, 4).unwrap();
        let noise = FbmPath::zero(grid, hurst(0.5));
        assert!(simulate_path(&noise, &CirParams::default()).is_err());
        let neg = CirParams::new(-2.0, -0.5, 0.5, 1.0).unwrap();
        let coarse = FbmPath::zero(GridSpec::new(4.0, 2).unwrap(), hurst(0.7));
        assert!(simulate_path(&coarse, &neg).is_err());
    }

    #[test]
    fn interpolation() {
        let q = CirParams::default();
        let grid = GridSpec::new(1.0, 16).unwrap();
        let noise = sample_fbm_circulant(grid, hurst(0.7), 1).unwrap();
        let path = simulate_path(&noise, &q).unwrap();
        let x = path.levels();
        for n in 0..=16 {
            assert_eq!(path.interpolate(grid.node(n)).unwrap(), x[n]);
        }
        for n in 0..16 {
            let mid = 0.5 * (grid.node(n) + grid.node(n + 1));
            let v = path.interpolate(mid).unwrap();
            assert!((v - 0.5 * (x[n] + x[n + 1])).abs() < 1e-15);
            for k in 1..10 {
                let t = grid.node(n) + k as f64 / 10.0 * grid.step();
                let v = path.interpolate(t).unwrap();
                assert!(v >= x[n].min(x[n + 1]) - 1e-15 && v <= x[n].max(x[n + 1]) + 1e-15);
            }
        }
        assert!(path.interpolate(-1e-9).is_err());
        assert!(path.interpolate(1.0 + 1e-9).is_err());
    }

    #[test]
    fn rates() {
        let q = CirParams::new(2.0, 0.5, 0.5, 0.81).unwrap();
        let grid = GridSpec::new(1.0, 32).unwrap();
        let noise = sample_fbm_circulant(grid, hurst(0.6), 4).unwrap();
        let path = simulate_path(&noise, &q).unwrap();
        let r = path.rate_path();
        assert_eq!(r[0], 0.81f64.sqrt().powi(2));
        assert!((path.rate_interpolate(0.0).unwrap() - 0.81).abs() < 1e-15);
        for (n, x) in path.levels().iter().enumerate() {
            assert_eq!(r[n], x * x);
            assert!(r[n] > 0.0);
        }
        for k in 0..100 {
            let t = (k as f64 * 0.618_033_988_75).fract();
            let x = path.interpolate(t).unwrap();
            assert_eq!(path.rate_interpolate(t).unwrap(), x * x);
        }
    }

    #[test]
    fn csv_rows() {
        let grid = GridSpec::new(1.0, 4).unwrap();
        let path = simulate_path(&FbmPath::zero(grid, hurst(0.7)), &CirParams::default()).unwrap();
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,X,r\n"));
        assert_eq!(text.lines().count(), 6);
    }
}
