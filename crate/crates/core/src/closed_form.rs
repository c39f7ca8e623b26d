//! Analytic losses of the candidate geometries.
//!
//! Covers the class-collapsed simplex, the two-atom `mu_theta` family for
//! `K = 2` and `K = 3`, and the uniform measure (through the Wiener constant of
//! the Gaussian kernel), plus the optimal angle, the resulting spread and the
//! upper end `c(tau, d)` of the alpha window.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::loss::LossWeights;
use crate::numeric::{log_weighted_sum_exp, softplus};
use crate::special::{gauss_legendre_256, integrate, ln_gamma};

/// `-(1 - alpha) K / ((K - 1) tau)`: simplex cross distance^2 is `2K/(K-1)`.
pub fn loss_collapsed(weights: LossWeights, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::Domain(format!("K = {} < 2", k)));
    }
    let kf = k as f64;
    Ok(-(1.0 - weights.alpha()) * kf / ((kf - 1.0) * weights.tau()))
}

fn check_angle(theta: f64) -> Result<()> {
    if (0.0..=FRAC_PI_2).contains(&theta) {
        Ok(())
    } else {
        Err(Error::Domain(format!("theta = {} outside [0, pi/2]", theta)))
    }
}

/// Loss of the `K = 2` two-atom measure at angle `theta`.
pub fn loss_mu_theta(theta: f64, weights: LossWeights) -> Result<f64> {
    check_angle(theta)?;
    let (a, t) = (weights.alpha(), weights.tau());
    let s2 = theta.sin().powi(2);
    let x = 2.0 * s2 / t;
    Ok(-(2f64.ln()) - 2.0 * (1.0 - a) / t
        + (1.0 - a) * softplus(x)
        + a * softplus(-x)
        + (1.0 - a) * s2 / t)
}

/// Optimal angle `arcsin sqrt((tau/2) log((3a - 1)/(3 - 3a)))`.
pub fn theta_star(weights: LossWeights) -> Result<f64> {
    Ok(spread_star(weights)?.asin())
}

/// Spread of the optimal two-atom measure, `sin(theta_star)`.
pub fn spread_star(weights: LossWeights) -> Result<f64> {
    let (a, t) = (weights.alpha(), weights.tau());
    if a <= 2.0 / 3.0 {
        return Err(Error::BelowWindow { alpha: a });
    }
    if a >= 1.0 {
        return Err(Error::AboveWindow { alpha: a, tau: t });
    }
    let r = 0.5 * t * ((3.0 * a - 1.0) / (3.0 - 3.0 * a)).ln();
    if r > 1.0 {
        return Err(Error::AboveWindow { alpha: a, tau: t });
    }
    Ok(r.max(0.0).sqrt())
}

/// Loss of `mu_theta` at the optimal angle, in closed form.
pub fn loss_mu_theta_star(weights: LossWeights) -> Result<f64> {
    let (a, t) = (weights.alpha(), weights.tau());
    spread_star(weights)?;
    let p = 3.0 - 3.0 * a;
    let q = 3.0 * a - 1.0;
    Ok(-2.0 * (1.0 - a) / t - 0.5 * p * p.ln() - 0.5 * q * q.ln())
}

/// Wiener constant of the Gaussian `1/(2 tau)` energy on `S^{d-1}`.
///
/// Evaluated as `Gamma(d/2) / (sqrt(pi) Gamma((d-1)/2)) *
/// int_0^pi exp(-(1 - cos phi)/tau) sin^{d-2}(phi) dphi` with 256-point
/// Gauss-Legendre.
pub fn wiener_constant(d: usize, tau: f64) -> Result<f64> {
    wiener_constant_with_rule(d, tau, gauss_legendre_256())
}

pub fn wiener_constant_with_rule(d: usize, tau: f64, rule: &(Vec<f64>, Vec<f64>)) -> Result<f64> {
    if d < 2 {
        return Err(Error::Domain(format!("Wiener constant needs d >= 2, got {}", d)));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("tau = {} must be positive", tau)));
    }
    let df = d as f64;
    let log_norm = ln_gamma(df / 2.0) - ln_gamma((df - 1.0) / 2.0) - 0.5 * PI.ln();
    let power = df - 2.0;
    let value = integrate(rule, 0.0, PI, |phi| {
        let log_sin = if power == 0.0 { 0.0 } else { power * phi.sin().ln() };
        (log_norm - (1.0 - phi.cos()) / tau + log_sin).exp()
    });
    Ok(value)
}

/// `c(tau, d) = (2 + 1/tau - sqrt(radicand)) / 3`.
pub fn c_tau_d(tau: f64, d: usize) -> Result<f64> {
    let w = wiener_constant(d, tau)?;
    c_from_log_wiener(tau, w.ln())
}

/// Window bound from a given `log W`; errors on a negative radicand.
pub fn c_from_log_wiener(tau: f64, log_w: f64) -> Result<f64> {
    let inv = 1.0 / tau;
    let radicand = inv * (-2.0 + inv) - 2.0 * log_w;
    if !(radicand >= 0.0) {
        return Err(Error::WindowUndefined { tau, radicand });
    }
    Ok((2.0 + inv - radicand.sqrt()) / 3.0)
}

/// `log W + (1 - alpha)/tau`.
pub fn loss_uniform(weights: LossWeights, d: usize) -> Result<f64> {
    Ok(wiener_constant(d, weights.tau())?.ln() + (1.0 - weights.alpha()) / weights.tau())
}

/// Loss of the `K = 3` family (simplex mixed with its rotated copy).
pub fn k3_loss_mu_theta(theta: f64, weights: LossWeights) -> Result<f64> {
    check_angle(theta)?;
    let (a, t) = (weights.alpha(), weights.tau());
    let c = theta.cos();
    // squared distances
    let simplex = 3.0;
    let cross = 2.0 + c; // |v_0 - R v_1|^2
    let far = (7.0 - c) / 2.0; // |v_1 - R v_2|^2
    let own0 = 2.0 - 2.0 * c; // |v_0 - R v_0|^2
    let own1 = (1.0 - c) / 2.0; // |v_1 - R v_1|^2
    let k = |d2: f64| -d2 / (2.0 * t);

    let diff = log_weighted_sum_exp(&[(k(simplex), 0.5), (k(cross), 0.5)]) / 3.0
        + 2.0 / 3.0 * log_weighted_sum_exp(&[(k(simplex), 0.5), (k(far), 0.25), (k(cross), 0.25)]);
    let same = log_weighted_sum_exp(&[(0.0, 0.5), (k(own0), 0.5)]) / 3.0
        + 2.0 / 3.0 * log_weighted_sum_exp(&[(0.0, 0.5), (k(own1), 0.5)]);
    let align = (1.0 - c) / (4.0 * t);
    Ok((1.0 - a) * diff + a * same + (1.0 - a) * align)
}
