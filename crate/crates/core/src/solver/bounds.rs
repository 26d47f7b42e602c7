//! Closed-form cost bounds, evaluated with constants as written.

use serde::{Deserialize, Serialize};

use super::readout::{multiple_epsilon, unique_epsilon};
use super::ReadoutMode;
use crate::encoding::Angle;
use crate::error::{Error, Result};

/// Convergence information: `μ` directly, or the uniform gap with the
/// non-commutation degree, giving `ln μ⁻¹ ≥ Δ_uni/(4g²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateInput {
    Mu(f64),
    UniformGap { delta_uni: f64, g: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub theta: Angle,
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    /// 1 for plain repetition, 2 for the amplitude-amplified variant.
    pub q: u32,
    pub rate: RateInput,
    pub readout: ReadoutMode,
    /// Defaults to the readout mode's tolerance.
    pub epsilon: Option<f64>,
    pub d_sol: usize,
}

impl BoundInputs {
    pub fn new(theta: Angle, n: usize, m: usize, delta: f64, mu: f64) -> Self {
        BoundInputs {
            theta,
            n,
            m,
            delta,
            q: 1,
            rate: RateInput::Mu(mu),
            readout: ReadoutMode::Unique,
            epsilon: None,
            d_sol: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// `ln μ⁻¹`; infinite when `μ = 0`.
    pub log_mu_inv: f64,
    pub epsilon: f64,
    /// State preparation `T_S`.
    pub state_prep: f64,
    pub t_unique: f64,
    pub t_multiple: f64,
    /// Overall `T` with the selected readout overhead.
    pub overall: f64,
    /// `m ln(1/δ) (2^n/d_sol)^{1/q}`.
    pub unrotated: f64,
}

pub fn theory_bounds(inp: &BoundInputs) -> Result<BoundReport> {
    if !(inp.q == 1 || inp.q == 2) {
        return Err(Error::InvalidParameter(format!("q must be 1 or 2, got {}", inp.q)));
    }
    if !(inp.delta > 0.0 && inp.delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta {} outside (0, 1)", inp.delta)));
    }
    if inp.n == 0 || inp.d_sol == 0 {
        return Err(Error::InvalidParameter("n and d_sol must be positive".into()));
    }
    let log_mu_inv = match inp.rate {
        RateInput::Mu(mu) if (0.0..1.0).contains(&mu) => {
            if mu == 0.0 {
                f64::INFINITY
            } else {
                (1.0 / mu).ln()
            }
        }
        RateInput::UniformGap { delta_uni, g } if delta_uni > 0.0 && g >= 1 => delta_uni / (4.0 * (g * g) as f64),
        other => return Err(Error::InvalidParameter(format!("invalid rate input {other:?}"))),
    };
    let epsilon = inp.epsilon.unwrap_or(match inp.readout {
        ReadoutMode::Unique => unique_epsilon(inp.theta),
        ReadoutMode::Multiple => multiple_epsilon(inp.theta),
    });
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside (0, 1)")));
    }
    let (n, m) = (inp.n as f64, inp.m as f64);
    let cos = inp.theta.cos();
    let sin2 = inp.theta.sin().powi(2);
    let half = (1.0 / (inp.theta.radians() / 2.0).cos()).ln();
    let ln_delta = (1.0 / inp.delta).ln();
    let amplification = (2.0 / (1.0 + cos)).powf(n / inp.q as f64);

    let cycles =
        if log_mu_inv.is_infinite() { 1.0 } else { (((1.0 / epsilon).ln() + n * half) / log_mu_inv).ceil().max(1.0) };
    let state_prep = m * cycles * ln_delta * amplification;

    let t_unique = (n / inp.delta).ln() / (2.0 / (1.0 + cos * cos)).ln();
    let t_multiple = (n / inp.delta).ln() / sin2;
    let t = match inp.readout {
        ReadoutMode::Unique => t_unique,
        ReadoutMode::Multiple => t_multiple,
    };
    let rate_term =
        if log_mu_inv.is_infinite() { 1.0 } else { ((1.0 / (1.0 - cos * cos)).ln() + n * half) / log_mu_inv };
    let overall = n.ln() * rate_term * ln_delta * amplification * t;
    let unrotated = m * ln_delta * (2f64.powf(n) / inp.d_sol as f64).powf(1.0 / inp.q as f64);
    Ok(BoundReport { log_mu_inv, epsilon, state_prep, t_unique, t_multiple, overall, unrotated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unrotated_scaling() {
        let mut b = BoundInputs::new(Angle::right(), 10, 40, 0.1, 0.0);
        let r = theory_bounds(&b).unwrap();
        assert_relative_eq!(r.unrotated, 40.0 * 10f64.ln() * 1024.0, max_relative = 1e-12);
        b.q = 2;
        let r2 = theory_bounds(&b).unwrap();
        assert_relative_eq!(r2.unrotated, 40.0 * 10f64.ln() * 32.0, max_relative = 1e-12);
    }

    #[test]
    fn amplified_prep_exponent_halves() {
        let theta = Angle::from_fraction(0.6).unwrap();
        let mut b = BoundInputs::new(theta, 12, 30, 0.1, 0.5);
        let r1 = theory_bounds(&b).unwrap();
        b.q = 2;
        let r2 = theory_bounds(&b).unwrap();
        let full = (2.0 / (1.0 + theta.cos())).powi(12);
        assert_relative_eq!(r1.state_prep / r2.state_prep, full / full.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn unate_angle_is_polynomial() {
        let ratio = |n: usize| {
            let b = BoundInputs::new(Angle::unate_schedule(n).unwrap(), n, n, 0.1, 0.0);
            let nf = n as f64;
            theory_bounds(&b).unwrap().overall / (nf * nf.ln().powi(2))
        };
        let (a, z) = (ratio(100), ratio(100_000));
        assert!(z / a < 3.0 && a / z < 3.0, "{a} {z}");
    }

    #[test]
    fn uniform_gap_rate() {
        let theta = Angle::from_fraction(0.5).unwrap();
        let mut b = BoundInputs::new(theta, 6, 10, 0.1, 0.5);
        b.rate = RateInput::UniformGap { delta_uni: 0.2, g: 2 };
        assert_relative_eq!(theory_bounds(&b).unwrap().log_mu_inv, 0.2 / 16.0, max_relative = 1e-15);
        b.rate = RateInput::UniformGap { delta_uni: 0.2, g: 0 };
        assert!(theory_bounds(&b).is_err());
        b.rate = RateInput::Mu(1.0);
        assert!(theory_bounds(&b).is_err());
    }
}
