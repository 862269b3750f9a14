//! Model parameters, the transformed drift, and the inverse-moment conditions.
//!
//! With `X = √r` the rate equation becomes
//! `dX = f(X)dt + (σ/2)dB` where `f(x) = κθ/(2x) − κx/2`.

use std::fmt;

use crate::error::{domain, Result};
use crate::fbm::HurstParameter;
use crate::{fmt_f64, quadrature};

/// Parameters of `dr = κ(θ − r)dt + σ√r dB`, `r(0) = r₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    kappa: f64,
    theta: f64,
    sigma: f64,
    r0: f64,
}

impl CirParams {
    /// Requires `κθ > 0`, `σ > 0` and `r₀ > 0`.
    pub fn new(kappa: f64, theta: f64, sigma: f64, r0: f64) -> Result<Self> {
        if !(kappa * theta > 0.0) || !kappa.is_finite() || !theta.is_finite() {
            return domain(format!("need kappa*theta > 0, got kappa = {kappa}, theta = {theta}"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return domain(format!("need sigma > 0, got {sigma}"));
        }
        if !(r0 > 0.0 && r0.is_finite()) {
            return domain(format!("need r0 > 0, got {r0}"));
        }
        Ok(Self { kappa, theta, sigma, r0 })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// `X₀ = √r₀`.
    pub fn x0(&self) -> f64 {
        self.r0.sqrt()
    }

    /// `f(x)` without the positivity check.
    #[inline]
    pub fn drift(&self, x: f64) -> f64 {
        0.5 * self.kappa * self.theta / x - 0.5 * self.kappa * x
    }

    /// `f'(x) = −κθ/(2x²) − κ/2` without the positivity check.
    #[inline]
    pub fn drift_prime(&self, x: f64) -> f64 {
        -0.5 * self.kappa * self.theta / (x * x) - 0.5 * self.kappa
    }
}

impl Default for CirParams {
    /// `r₀ = 1, κ = 2, θ = 0.5, σ = 0.5`.
    fn default() -> Self {
        Self {
            kappa: 2.0,
            theta: 0.5,
            sigma: 0.5,
            r0: 1.0,
        }
    }
}

fn positive_level(x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        domain(format!("drift is defined for x > 0, got {x}"))
    }
}

/// `f(x) = κθ/(2x) − κx/2`.
pub fn drift_f(x: f64, params: &CirParams) -> Result<f64> {
    positive_level(x)?;
    Ok(params.drift(x))
}

/// `f'(x) = −κθ/(2x²) − κ/2`.
pub fn drift_f_prime(x: f64, params: &CirParams) -> Result<f64> {
    positive_level(x)?;
    Ok(params.drift_prime(x))
}

/// `f''(x) = κθ/x³`.
pub fn drift_f_double_prime(x: f64, params: &CirParams) -> Result<f64> {
    positive_level(x)?;
    Ok(params.kappa * params.theta / (x * x * x))
}

/// `x = √r`.
pub fn lamperti_forward(r: f64) -> Result<f64> {
    if r < 0.0 {
        return domain(format!("rate must be nonnegative, got {r}"));
    }
    Ok(r.sqrt())
}

/// `r = x²`.
pub fn lamperti_inverse(x: f64) -> Result<f64> {
    if x < 0.0 {
        return domain(format!("level must be nonnegative, got {x}"));
    }
    Ok(x * x)
}

/// `Z = e^{κt/2} x`.
pub fn z_transform(x: f64, t: f64, params: &CirParams) -> Result<f64> {
    if t < 0.0 {
        return domain(format!("time must be nonnegative, got {t}"));
    }
    Ok((0.5 * params.kappa * t).exp() * x)
}

/// Relative tolerance of the smooth part of the kernel integral.
const KERNEL_REL_TOL: f64 = 1e-10;

/// `α_H ∫₀ˢ e^{-rate·u} u^{2H−2} du`.
///
/// The piece on `[0, s/1000]` is integrated term by term from the Taylor
/// series of the exponential; the remainder is smooth and goes to adaptive
/// Gauss–Kronrod.
pub(crate) fn damped_kernel_moment(s: f64, rate: f64, hurst: HurstParameter) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    let a = 2.0 * hurst.value() - 2.0;
    let eps = s / 1000.0;

    let mut near = 0.0;
    let mut coeff = 1.0; // (-rate)^k / k!
    let mut power = eps.powf(a + 1.0); // eps^{a+k+1}
    for k in 0..200 {
        let term = coeff * power / (a + k as f64 + 1.0);
        near += term;
        if term.abs() <= 1e-17 * near.abs() {
            break;
        }
        coeff *= -rate / (k as f64 + 1.0);
        power *= eps;
    }

    let far = quadrature::integrate(|u| (-rate * u).exp() * u.powf(a), eps, s, KERNEL_REL_TOL)?;
    Ok(hurst.alpha() * (near + far))
}

/// `∫₀ˢ (σ²/2) e^{κτ/2} φ(τ, s) dτ`, the right-hand side of the
/// inverse-moment condition without its multiplier.
pub fn weighted_kernel_integral(s: f64, params: &CirParams, hurst: HurstParameter) -> Result<f64> {
    let hurst = hurst.require_long_memory()?;
    if s < 0.0 {
        return domain(format!("s must be nonnegative, got {s}"));
    }
    let k = params.kappa;
    let moment = damped_kernel_moment(s, 0.5 * k, hurst)?;
    Ok(0.5 * params.sigma * params.sigma * (0.5 * k * s).exp() * moment)
}

/// Multiplier in front of the kernel integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplier {
    /// `p + 1`: bounded inverse moments of the exact solution.
    PPlusOne,
    /// `3p + 1`: assumption of the strong convergence theorem.
    ThreePPlusOne,
}

impl Multiplier {
    pub fn value(self, p: u32) -> u32 {
        match self {
            Multiplier::PPlusOne => p + 1,
            Multiplier::ThreePPlusOne => 3 * p + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMethod {
    SufficientClosedForm,
    Quadrature,
}

impl fmt::Display for CheckMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckMethod::SufficientClosedForm => "sufficient-closed-form",
            CheckMethod::Quadrature => "quadrature",
        })
    }
}

/// Outcome of an inverse-moment condition check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    pub holds: bool,
    /// Minimum over the checked `s` of left-hand side minus right-hand side.
    pub worst_margin: f64,
    pub worst_s: f64,
    pub multiplier: u32,
    pub method: CheckMethod,
}

impl ConditionReport {
    pub const CSV_HEADER: &'static str = "holds,worst_margin,worst_s,multiplier,method";

    /// `holds,worst_margin,worst_s,multiplier,method`
    pub fn csv_record(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.holds,
            fmt_f64(self.worst_margin),
            fmt_f64(self.worst_s),
            self.multiplier,
            self.method
        )
    }
}

pub const DEFAULT_CONDITION_GRID: usize = 1000;

/// Margin `κθ e^{κs/2} − m ∫₀ˢ (σ²/2) e^{κτ/2} φ(τ, s) dτ` at one `s`.
pub fn condition_margin(s: f64, multiplier: u32, params: &CirParams, hurst: HurstParameter) -> Result<f64> {
    let lhs = params.kappa * params.theta * (0.5 * params.kappa * s).exp();
    Ok(lhs - multiplier as f64 * weighted_kernel_integral(s, params, hurst)?)
}

/// Evaluates the condition on `s_i = T·i/grid_size`, `i = 0..=grid_size`.
pub fn check_condition(
    p: u32,
    multiplier: Multiplier,
    params: &CirParams,
    hurst: HurstParameter,
    horizon: f64,
    grid_size: usize,
) -> Result<ConditionReport> {
    if p < 1 {
        return domain("moment order p must be at least 1");
    }
    if !(horizon > 0.0) {
        return domain(format!("horizon must be positive, got {horizon}"));
    }
    let grid_size = grid_size.max(1);
    let m = multiplier.value(p);
    let mut worst_margin = f64::INFINITY;
    let mut worst_s = 0.0;
    for i in 0..=grid_size {
        let s = horizon * i as f64 / grid_size as f64;
        let margin = condition_margin(s, m, params, hurst)?;
        if margin < worst_margin {
            worst_margin = margin;
            worst_s = s;
        }
    }
    Ok(ConditionReport {
        holds: worst_margin >= 0.0,
        worst_margin,
        worst_s,
        multiplier: m,
        method: CheckMethod::Quadrature,
    })
}

/// Closed-form sufficient condition for the `p + 1` condition, as a report.
///
/// For `κ > 0`: `T^{2H−1} ≤ 2κθ/(σ²H(p+1))`. For `κ < 0`:
/// `s^{2H−1} ≤ 2κθe^{κs/2}/(σ²H(p+1))` on `[0, T]`; the right side
/// decreases and the left side increases in `s`, so `s = T` is decisive.
pub fn sufficient_condition_report(
    p: u32,
    params: &CirParams,
    hurst: HurstParameter,
    horizon: f64,
) -> Result<ConditionReport> {
    let hurst = hurst.require_long_memory()?;
    if p < 1 {
        return domain("moment order p must be at least 1");
    }
    if !(horizon > 0.0) {
        return domain(format!("horizon must be positive, got {horizon}"));
    }
    let h = hurst.value();
    let m = Multiplier::PPlusOne.value(p);
    let base = 2.0 * params.kappa * params.theta / (params.sigma * params.sigma * h * m as f64);
    let bound = if params.kappa > 0.0 {
        base
    } else {
        base * (0.5 * params.kappa * horizon).exp()
    };
    let margin = bound - horizon.powf(2.0 * h - 1.0);
    Ok(ConditionReport {
        holds: margin >= 0.0,
        worst_margin: margin,
        worst_s: horizon,
        multiplier: m,
        method: CheckMethod::SufficientClosedForm,
    })
}

/// Whether the closed-form sufficient condition holds.
pub fn sufficient_condition(p: u32, params: &CirParams, hurst: HurstParameter, horizon: f64) -> Result<bool> {
    Ok(sufficient_condition_report(p, params, hurst, horizon)?.holds)
}

/// Supremum of admissible step sizes under `h·max{0, −κ/2} < 1 − ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepBound {
    Unbounded,
    /// Steps must be strictly below this value.
    Below(f64),
}

impl StepBound {
    pub fn admits(self, h: f64) -> bool {
        match self {
            StepBound::Unbounded => h > 0.0,
            StepBound::Below(limit) => h > 0.0 && h < limit,
        }
    }
}

pub const DEFAULT_XI: f64 = 0.5;

pub fn max_step(params: &CirParams, xi: f64) -> Result<StepBound> {
    if !(xi > 0.0 && xi < 1.0) {
        return domain(format!("xi must lie in (0, 1), got {xi}"));
    }
    if params.kappa >= 0.0 {
        Ok(StepBound::Unbounded)
    } else {
        Ok(StepBound::Below((1.0 - xi) / (-0.5 * params.kappa)))
    }
}
