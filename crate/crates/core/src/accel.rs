//! One-step acceleration of the dual sequence.
//!
//! Every scheme maps the freshly updated multiplier `lambda_hat^i` (and the
//! history kept in [`AccelState`]) to an extrapolated `lambda^i`, which the
//! driver then projects. Notation:
//!
//! ```text
//! delta^i = lambda_hat^i - lambda^{i-1}        fixed-point residual
//! lambda^i = lambda_hat^i + beta (lambda_hat^i - lambda_hat^{i-1})   FISTA, Anderson-1
//! lambda^i = lambda_hat^i - beta delta^i                             Crossed-Secant
//! ```

use crate::linalg::{dot, norm2};

/// Denominators below this are treated as a stalled secant.
pub const DEGENERATE_SECANT: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AccelKind {
    #[default]
    None,
    FistaAR,
    Anderson1,
    Anderson1AR,
    CrossedSecant,
}

impl AccelKind {
    pub const ALL: [AccelKind; 5] = [
        AccelKind::None,
        AccelKind::FistaAR,
        AccelKind::Anderson1,
        AccelKind::Anderson1AR,
        AccelKind::CrossedSecant,
    ];

    /// Placement that converges in the widest parameter range for this scheme.
    pub fn default_placement(self) -> Placement {
        match self {
            AccelKind::CrossedSecant => Placement::ProjectAfterOnly,
            _ => Placement::ProjectBeforeAndAfter,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AccelKind::None => "none",
            AccelKind::FistaAR => "fista-ar",
            AccelKind::Anderson1 => "anderson1",
            AccelKind::Anderson1AR => "anderson1-ar",
            AccelKind::CrossedSecant => "crossed-secant",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        Some(match s.as_str() {
            "none" | "standard" => AccelKind::None,
            "fista-ar" | "fista" => AccelKind::FistaAR,
            "anderson1" | "anderson-1" | "anderson" => AccelKind::Anderson1,
            "anderson1-ar" | "anderson-1-ar" | "anderson-ar" => AccelKind::Anderson1AR,
            "crossed-secant" | "cs" => AccelKind::CrossedSecant,
            _ => return None,
        })
    }
}

/// Where the projection sits around the acceleration operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Placement {
    /// `Pi o A o Pi`: the scheme sees projected multipliers.
    ProjectBeforeAndAfter,
    /// `Pi o A`: the scheme sees the raw update.
    ProjectAfterOnly,
}

impl Placement {
    pub fn name(self) -> &'static str {
        match self {
            Placement::ProjectBeforeAndAfter => "before-and-after",
            Placement::ProjectAfterOnly => "after-only",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "before-and-after" | "both" | "pi-a-pi" => Some(Placement::ProjectBeforeAndAfter),
            "after-only" | "after" | "pi-a" => Some(Placement::ProjectAfterOnly),
            _ => None,
        }
    }
}

/// `true` selects the accelerated branch: `gap . (lambda_hat - lambda_hat_prev) <= 0`.
pub fn restart_test(gap: &[f64], lambda_hat: &[f64], lambda_hat_prev: &[f64]) -> bool {
    let s: f64 = gap
        .iter()
        .zip(lambda_hat.iter().zip(lambda_hat_prev))
        .map(|(g, (a, b))| g * (a - b))
        .sum();
    s <= 0.0
}

/// FISTA momentum: returns `(tau^i, beta^i)` from `tau^{i-1}`.
pub fn fista_momentum(tau_prev: f64) -> (f64, f64) {
    let tau = 0.5 * (1.0 + (1.0 + 4.0 * tau_prev * tau_prev).sqrt());
    (tau, (tau_prev - 1.0) / tau)
}

/// `lambda_hat + beta (lambda_hat - lambda_hat_prev)`
pub fn extrapolate(lambda_hat: &[f64], lambda_hat_prev: &[f64], beta: f64) -> Vec<f64> {
    lambda_hat
        .iter()
        .zip(lambda_hat_prev)
        .map(|(a, b)| a + beta * (a - b))
        .collect()
}

fn diff_norm2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Anderson-1 coefficient `((delta_prev - delta) . delta) / ||delta - delta_prev||^2`;
/// `None` when the secant is degenerate.
pub fn anderson1_beta(delta: &[f64], delta_prev: &[f64]) -> Option<f64> {
    let den = diff_norm2(delta, delta_prev);
    if den.sqrt() < DEGENERATE_SECANT {
        return None;
    }
    let num: f64 = delta.iter().zip(delta_prev).map(|(d, p)| (p - d) * d).sum();
    let beta = num / den;
    beta.is_finite().then_some(beta)
}

/// Crossed-Secant coefficient
/// `((lambda_hat - lambda_hat_prev) . (delta - delta_prev)) / ||delta - delta_prev||^2`.
pub fn crossed_secant_beta(
    lambda_hat: &[f64],
    lambda_hat_prev: &[f64],
    delta: &[f64],
    delta_prev: &[f64],
) -> Option<f64> {
    let den = diff_norm2(delta, delta_prev);
    if den.sqrt() < DEGENERATE_SECANT {
        return None;
    }
    let num: f64 = lambda_hat
        .iter()
        .zip(lambda_hat_prev)
        .zip(delta.iter().zip(delta_prev))
        .map(|((a, b), (d, p))| (a - b) * (d - p))
        .sum();
    let beta = num / den;
    beta.is_finite().then_some(beta)
}

/// Barzilai-Borwein iterate `lambda^{i-1} - alpha g^i` with
/// `alpha = -((lambda^{i-2} - lambda^{i-1}) . (g^i - g^{i-1})) / ||g^i - g^{i-1}||^2`.
///
/// `None` when `g^i = g^{i-1}`.
pub fn barzilai_borwein_step(lambda_prev: &[f64], lambda_prev2: &[f64], g: &[f64], g_prev: &[f64]) -> Option<Vec<f64>> {
    let den = diff_norm2(g, g_prev);
    if den.sqrt() < DEGENERATE_SECANT {
        return None;
    }
    let num: f64 = lambda_prev2
        .iter()
        .zip(lambda_prev)
        .zip(g.iter().zip(g_prev))
        .map(|((a, b), (x, y))| (a - b) * (x - y))
        .sum();
    let alpha = -num / den;
    if !alpha.is_finite() {
        return None;
    }
    Some(lambda_prev.iter().zip(g).map(|(l, gi)| l - alpha * gi).collect())
}

/// Scalars produced by one acceleration step, for the traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// `NaN` when no coefficient was computed this iteration.
    pub beta: f64,
    pub tau: f64,
    pub accelerated: bool,
    pub restarted: bool,
    pub degenerate: bool,
}

impl StepInfo {
    fn plain(tau: f64) -> Self {
        Self {
            beta: f64::NAN,
            tau,
            accelerated: false,
            restarted: false,
            degenerate: false,
        }
    }

    /// Relaxation factor `omega = 1 - beta` of the Crossed-Secant form.
    pub fn omega(&self) -> f64 {
        1.0 - self.beta
    }
}

/// History of one accelerated solve.
#[derive(Debug, Clone)]
pub struct AccelState {
    pub kind: AccelKind,
    pub minit_accel: usize,
    /// Index of the last completed iteration (0 before the first).
    pub iteration: usize,
    pub lambda_hat_prev: Vec<f64>,
    /// Final (projected) multiplier of the last iteration.
    pub lambda_prev: Vec<f64>,
    pub delta_prev: Vec<f64>,
    pub tau_prev: f64,
}

impl AccelState {
    pub fn new(kind: AccelKind, lambda0: &[f64], minit_accel: usize) -> Self {
        Self {
            kind,
            minit_accel,
            iteration: 0,
            lambda_hat_prev: lambda0.to_vec(),
            lambda_prev: lambda0.to_vec(),
            delta_prev: vec![0.0; lambda0.len()],
            tau_prev: 1.0,
        }
    }

    /// Accelerated multiplier for iteration `self.iteration + 1`.
    ///
    /// `lambda_hat` must already carry the placement's pre-projection. The
    /// history advances here; the driver must follow with [`Self::commit`].
    pub fn step(&mut self, lambda_hat: &[f64], gap: &[f64]) -> (Vec<f64>, StepInfo) {
        let i = self.iteration + 1;
        let delta: Vec<f64> = lambda_hat
            .iter()
            .zip(&self.lambda_prev)
            .map(|(a, b)| a - b)
            .collect();
        let (lambda, info) = if self.kind == AccelKind::None || i < self.minit_accel.max(2) {
            (lambda_hat.to_vec(), StepInfo::plain(self.tau_prev))
        } else {
            self.accelerate(lambda_hat, gap, &delta)
        };
        self.lambda_hat_prev = lambda_hat.to_vec();
        self.delta_prev = delta;
        self.tau_prev = info.tau;
        self.iteration = i;
        (lambda, info)
    }

    fn accelerate(&self, lambda_hat: &[f64], gap: &[f64], delta: &[f64]) -> (Vec<f64>, StepInfo) {
        let mut info = StepInfo::plain(self.tau_prev);
        let guarded = matches!(self.kind, AccelKind::FistaAR | AccelKind::Anderson1AR);
        if guarded && !restart_test(gap, lambda_hat, &self.lambda_hat_prev) {
            info.restarted = true;
            info.tau = 1.0;
            return (lambda_hat.to_vec(), info);
        }
        let beta = match self.kind {
            AccelKind::FistaAR => {
                let (tau, beta) = fista_momentum(self.tau_prev);
                info.tau = tau;
                Some(beta)
            }
            AccelKind::Anderson1 | AccelKind::Anderson1AR => anderson1_beta(delta, &self.delta_prev),
            AccelKind::CrossedSecant => {
                crossed_secant_beta(lambda_hat, &self.lambda_hat_prev, delta, &self.delta_prev)
            }
            AccelKind::None => unreachable!(),
        };
        let Some(beta) = beta else {
            info.degenerate = true;
            return (lambda_hat.to_vec(), info);
        };
        info.beta = beta;
        info.accelerated = true;
        let lambda = if self.kind == AccelKind::CrossedSecant {
            lambda_hat.iter().zip(delta).map(|(a, d)| a - beta * d).collect()
        } else {
            extrapolate(lambda_hat, &self.lambda_hat_prev, beta)
        };
        (lambda, info)
    }

    /// Record the projected multiplier actually emitted this iteration.
    pub fn commit(&mut self, lambda: &[f64]) {
        self.lambda_prev.clear();
        self.lambda_prev.extend_from_slice(lambda);
    }
}

/// Quantities for the Crossed-Secant residual-decrease check at one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecantAudit {
    pub iteration: usize,
    /// `2 delta^i . delta^{i-1} < ||delta^{i-1}||^2`
    pub condition: bool,
    /// `||lambda^i - lambda^{i-1}||`
    pub step: f64,
    /// `(||delta^i|| / ||delta^i - delta^{i-1}||) ||lambda^{i-1} - lambda^{i-2}||`
    pub bound: f64,
}

impl SecantAudit {
    pub fn new(iteration: usize, delta: &[f64], delta_prev: &[f64], step: f64, prev_step: f64) -> Self {
        let condition = 2.0 * dot(delta, delta_prev) < dot(delta_prev, delta_prev);
        let dd = diff_norm2(delta, delta_prev).sqrt();
        let bound = if dd > 0.0 {
            norm2(delta) / dd * prev_step
        } else {
            f64::INFINITY
        };
        Self {
            iteration,
            condition,
            step,
            bound,
        }
    }

    pub fn holds(&self, slack: f64) -> bool {
        !self.condition || self.step <= self.bound + slack
    }
}
