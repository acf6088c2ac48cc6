//! Losses for tuning a text model on co-labeled output.
//!
//! Agreed nodes supply instruction examples scored by negative log
//! likelihood. Kept disagreements supply preference pairs (judge label
//! chosen, text-model label rejected) scored by the log-sigmoid of the
//! log-odds-ratio margin. The combined objective is the instruction mean
//! plus `lambda` times the preference mean.

use crate::error::{Error, Result};

/// Weighting and clipping for [`combined_loss`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossConfig {
    /// Weight on the preference term.
    pub lambda: f64,
    /// Probabilities are clipped into `[epsilon_clip, 1 - epsilon_clip]`
    /// before any odds or log is taken.
    pub epsilon_clip: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            lambda: 0.1,
            epsilon_clip: 1e-7,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(Error::invalid(format!(
                "lambda {} must be finite and nonnegative",
                self.lambda
            )));
        }
        if !(0.0..0.5).contains(&self.epsilon_clip) || self.epsilon_clip == 0.0 {
            return Err(Error::invalid(format!(
                "epsilon_clip {} must lie in (0, 0.5)",
                self.epsilon_clip
            )));
        }
        Ok(())
    }
}

/// Alternative preference margins plug in here; the shipped one is
/// [`orpo_preference_function`].
pub type PreferenceFunction = fn(f64, f64) -> Result<f64>;

fn check_unit(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("{name} {p} outside [0, 1]")));
    }
    Ok(())
}

/// Clips a probability into `[eps, 1 - eps]`; the input must already be a
/// probability.
pub fn clamp_prob(p: f64, eps: f64) -> Result<f64> {
    check_unit("probability", p)?;
    Ok(p.clamp(eps, 1.0 - eps))
}

/// Negative log likelihood of a correct-label probability, clipped by `eps`.
pub fn instruction_loss(p: f64, eps: f64) -> Result<f64> {
    Ok(-clamp_prob(p, eps)?.ln())
}

/// `p / (1 - p)`; defined only on the open interval.
pub fn odds(p: f64) -> Result<f64> {
    check_unit("probability", p)?;
    if p == 0.0 || p == 1.0 {
        return Err(Error::invalid(format!("odds undefined at p = {p}")));
    }
    Ok(p / (1.0 - p))
}

/// Log-odds-ratio margin between the chosen and rejected probabilities.
pub fn orpo_preference_function(p_chosen: f64, p_rejected: f64) -> Result<f64> {
    Ok(odds(p_chosen)?.ln() - odds(p_rejected)?.ln())
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Negative log-sigmoid of an arbitrary preference margin.
pub fn preference_loss_with(
    pref: PreferenceFunction,
    p_chosen: f64,
    p_rejected: f64,
) -> Result<f64> {
    Ok(softplus(-pref(p_chosen, p_rejected)?))
}

/// Negative log-sigmoid of the log-odds-ratio margin.
pub fn preference_loss(p_chosen: f64, p_rejected: f64) -> Result<f64> {
    preference_loss_with(orpo_preference_function, p_chosen, p_rejected)
}

/// Analytic gradient of [`preference_loss`] in the two probabilities.
pub fn preference_loss_grad(p_chosen: f64, p_rejected: f64) -> Result<(f64, f64)> {
    let g = orpo_preference_function(p_chosen, p_rejected)?;
    let s = sigmoid(g);
    let d_chosen = (s - 1.0) / (p_chosen * (1.0 - p_chosen));
    let d_rejected = (1.0 - s) / (p_rejected * (1.0 - p_rejected));
    Ok((d_chosen, d_rejected))
}

/// Mean instruction loss plus `lambda` times mean preference loss.
///
/// `instruction_probs` holds the model probability of the target label per
/// instruction example; `preference_pairs` holds (chosen, rejected)
/// probabilities per preference example. The instruction set must be
/// nonempty; the preference set may be empty only when `lambda` is zero.
pub fn combined_loss(
    instruction_probs: &[f64],
    preference_pairs: &[(f64, f64)],
    config: &LossConfig,
) -> Result<f64> {
    config.validate()?;
    if instruction_probs.is_empty() {
        return Err(Error::invalid("instruction set is empty"));
    }
    if preference_pairs.is_empty() && config.lambda > 0.0 {
        return Err(Error::invalid(
            "preference set is empty but lambda is positive",
        ));
    }
    let eps = config.epsilon_clip;
    let mut instr = 0.0;
    for &p in instruction_probs {
        instr += instruction_loss(p, eps)?;
    }
    instr /= instruction_probs.len() as f64;

    let pref = if preference_pairs.is_empty() {
        0.0
    } else {
        let mut total = 0.0;
        for &(p_c, p_r) in preference_pairs {
            total += preference_loss(clamp_prob(p_c, eps)?, clamp_prob(p_r, eps)?)?;
        }
        total / preference_pairs.len() as f64
    };
    Ok(instr + config.lambda * pref)
}
