use serde::{Deserialize, Serialize};

/// Outcome of a joint `(y, eta)` optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmaSolution {
    pub y_star: f64,
    pub eta_star: usize,
    /// SNR (linear) for a single user, sum rate in bits/s/Hz otherwise.
    pub objective: f64,
    /// Objective after initialization and after every alternating round.
    pub trace: Vec<f64>,
    /// Objective evaluations, over every start.
    pub evals: usize,
    /// Alternating rounds of the returned run.
    pub rounds: usize,
    /// Inner iterations per round (SCA steps, or grid refinements).
    pub inner_iterations: Vec<usize>,
}

impl GmaSolution {
    /// Objective in dB; only meaningful for SNR objectives.
    pub fn objective_db(&self) -> f64 {
        10.0 * self.objective.log10()
    }
}
