//! Distillation losses and temperature softmax, with analytic gradients.

use crate::{PdError, Result};

/// Per-action unnormalized action values.
pub type QVector = Vec<f64>;

/// Per-action probabilities (nonnegative, summing to one).
pub type ProbVector = Vec<f64>;

/// Index of the maximum entry; ties break toward the lowest index.
pub fn argmax_tie_low(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) {
        return Err(PdError::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    Ok(())
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(PdError::ShapeMismatch(format!(
            "vector lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Log-softmax of `q / tau`, stabilized by max subtraction. The low
/// temperatures used for sharpening (tau = 0.01) put raw exponents around a
/// hundred times the Q-values, so the shift is required, not cosmetic.
pub fn log_softmax(q: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_tau(tau)?;
    if q.is_empty() {
        return Err(PdError::InvalidArgument("empty Q-vector".into()));
    }
    let m = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / tau;
    let shifted: Vec<f64> = q.iter().map(|&v| v / tau - m).collect();
    let log_z = shifted.iter().map(|&v| v.exp()).sum::<f64>().ln();
    Ok(shifted.iter().map(|&v| v - log_z).collect())
}

/// Softmax at temperature one.
pub fn softmax(q: &[f64]) -> Result<ProbVector> {
    softmax_temperature(q, 1.0)
}

/// `softmax(q / tau)`: the sharpened (tau < 1) or softened (tau > 1) action
/// distribution used as a distillation target.
pub fn softmax_temperature(q: &[f64], tau: f64) -> Result<ProbVector> {
    Ok(log_softmax(q, tau)?.iter().map(|&v| v.exp()).collect())
}

/// Squared L2 distance between teacher and student Q-vectors.
/// Returns the loss and its gradient with respect to the student vector.
pub fn loss_mse(q_teacher: &[f64], q_student: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_lengths(q_teacher, q_student)?;
    let mut loss = 0.0;
    let mut grad = vec![0.0; q_student.len()];
    for i in 0..q_student.len() {
        let d = q_student[i] - q_teacher[i];
        loss += d * d;
        grad[i] = 2.0 * d;
    }
    Ok((loss, grad))
}

/// Negative log likelihood of the teacher's best action under the student
/// softmax (temperature one). Gradient is `softmax(q) - onehot(best)`.
pub fn loss_nll(q_student: &[f64], best_action: usize) -> Result<(f64, Vec<f64>)> {
    if best_action >= q_student.len() {
        return Err(PdError::ActionOutOfRange {
            action: best_action,
            count: q_student.len(),
        });
    }
    let log_s = log_softmax(q_student, 1.0)?;
    let loss = -log_s[best_action];
    let mut grad: Vec<f64> = log_s.iter().map(|&v| v.exp()).collect();
    grad[best_action] -= 1.0;
    Ok((loss, grad))
}

/// KL divergence from the student distribution (temperature one) to the
/// teacher distribution sharpened at `tau`:
/// `sum_a p_a ln(p_a / s_a)` with `p = softmax(q_teacher / tau)` and
/// `s = softmax(q_student)`. Gradient with respect to the student Q-vector
/// is `s - p`.
pub fn loss_kl(q_teacher: &[f64], q_student: &[f64], tau: f64) -> Result<(f64, Vec<f64>)> {
    check_lengths(q_teacher, q_student)?;
    let log_p = log_softmax(q_teacher, tau)?;
    let log_s = log_softmax(q_student, 1.0)?;
    let mut loss = 0.0;
    let mut grad = vec![0.0; q_student.len()];
    for i in 0..q_student.len() {
        let p = log_p[i].exp();
        if p > 0.0 {
            loss += p * (log_p[i] - log_s[i]);
        }
        grad[i] = log_s[i].exp() - p;
    }
    // The divergence is nonnegative; absorb the last-ulp negatives roundoff
    // can produce at matched distributions.
    if loss < 0.0 && loss > -1e-12 {
        loss = 0.0;
    }
    Ok((loss, grad))
}
