//! Epoch-based adaptive tomography with bandit feedback.
//!
//! A run is a warm-up followed by epochs. Epoch `m` fixes a base state
//! `C_m` and an orthonormal tangent basis, hot-starts the design at
//! `μ_{m−1}`, and for `T_m = ⌈α μ_{m−1}⌉` steps measures every symmetric
//! pair `retract(C_m, v_i, ±1/√λ)` once per repetition block. At the end the
//! block estimates are aggregated by MoM and the base moves along the
//! selected tangent estimate. Epochs continue until the copy budget is spent;
//! the last one is usually truncated.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::environment::{Environment, Evaluator};
use crate::error::{Error, Result};
use crate::estimation::{design_init, mom_select, BlockAccumulator, DesignState};
use crate::geometry::{complete_tangent_basis, outside_update_domain, retract, update_base, PureState, TangentBasis};
use crate::rng::StreamKey;
use crate::warmup::{run_warmup_observed, WarmupConfig, DEFAULT_C_W};

const TAG_WARMUP: u64 = 0;
const TAG_EPOCH: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Constants exactly as required by the regret analysis.
    Paper,
    /// Same structure with small constants, so epochs fit a desktop budget.
    Practical,
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Preset::Paper => "paper",
            Preset::Practical => "practical",
        })
    }
}

/// Keys accepted in the overrides map.
pub const OVERRIDE_KEYS: &[&str] = &[
    "n_blocks", "beta_stat", "beta_max", "l_r", "beta_var", "alpha", "mu_0", "delta", "delta_w", "c_w",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConstants {
    pub d: usize,
    pub d_tan: usize,
    /// Number of MoM repetition blocks `N`.
    pub n_blocks: usize,
    pub c0_sq: f64,
    pub beta_stat: f64,
    pub beta_max: f64,
    pub l_r: f64,
    pub beta_var: f64,
    pub alpha: u64,
    pub mu_0: f64,
    pub delta: f64,
    pub delta_w: f64,
    /// Warm-up sample multiplier.
    pub c_w: f64,
}

impl AlgorithmConstants {
    /// Lower bound `√(1 + 16 L_r⁴)` on the per-epoch precision growth.
    pub fn growth_ratio(&self) -> f64 {
        (1.0 + 16.0 * self.l_r.powi(4)).sqrt()
    }

    pub fn warmup_config(&self) -> WarmupConfig {
        WarmupConfig { c_w: self.c_w, delta_w: self.delta_w, n_directions: None }
    }

    /// Copies spent by one full step: a pair per direction per block.
    pub fn copies_per_step(&self) -> u64 {
        2 * self.n_blocks as u64 * self.d_tan as u64
    }

    pub fn epoch_length(&self, mu_prev: f64) -> u64 {
        (self.alpha as f64 * mu_prev).ceil() as u64
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta_var >= 1.0) {
            return Err(Error::config(format!("beta_var must be >= 1, got {}", self.beta_var)));
        }
        if !(self.mu_0 >= 2.0) || !self.mu_0.is_finite() {
            return Err(Error::config(format!("mu_0 must be >= 2, got {}", self.mu_0)));
        }
        if self.n_blocks < 2 || !self.n_blocks.is_multiple_of(2) {
            return Err(Error::config(format!("n_blocks must be even and >= 2, got {}", self.n_blocks)));
        }
        if self.alpha == 0 {
            return Err(Error::config("alpha must be >= 1"));
        }
        for (key, v) in [("delta", self.delta), ("delta_w", self.delta_w)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::config(format!("{key} must lie in (0, 1], got {v}")));
            }
        }
        if !(self.c_w > 0.0 && self.c_w.is_finite()) {
            return Err(Error::config(format!("c_w must be positive, got {}", self.c_w)));
        }
        if !(self.l_r > 0.0) || !(self.beta_stat > 0.0) || !(self.beta_max > 0.0) {
            return Err(Error::config("l_r, beta_stat and beta_max must be positive"));
        }
        Ok(())
    }
}

fn integral_override(key: &str, v: f64) -> Result<u64> {
    if v.fract() != 0.0 || v < 0.0 || !v.is_finite() {
        return Err(Error::config(format!("override {key} must be a non-negative integer, got {v}")));
    }
    Ok(v as u64)
}

/// Derives every algorithm parameter for dimension `d` and budget `t_total`.
///
/// Both presets set `δ = δ_w = 1/T_total²`. Overrides are applied last,
/// verbatim (no re-derivation of dependent fields).
pub fn derive_constants(
    d: usize,
    t_total: u64,
    preset: Preset,
    overrides: &BTreeMap<String, f64>,
) -> Result<AlgorithmConstants> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    if t_total == 0 {
        return Err(Error::config("horizon must be at least 1"));
    }
    let t = t_total as f64;
    let delta = 1.0 / (t * t);
    let log_term = (t / delta).ln();
    let c0_sq = 1f64.sin().powi(2);
    let l_r = 6.0;
    let dm1 = (d - 1) as f64;
    let mut k = match preset {
        Preset::Paper => {
            let beta_stat = 72.0 * dm1;
            let beta_max = 4.0 * beta_stat;
            let beta_var = l_r * l_r * beta_max + 1.0;
            AlgorithmConstants {
                d,
                d_tan: 2 * (d - 1),
                n_blocks: 2 * (12.0 * log_term).ceil() as usize,
                c0_sq,
                beta_stat,
                beta_max,
                l_r,
                beta_var,
                alpha: (8.0 * l_r.powi(4) * beta_var / c0_sq).ceil() as u64,
                mu_0: 4.0 * l_r * l_r * beta_max,
                delta,
                delta_w: delta,
                c_w: DEFAULT_C_W,
            }
        }
        Preset::Practical => {
            let beta_stat = 2.0 * dm1;
            AlgorithmConstants {
                d,
                d_tan: 2 * (d - 1),
                n_blocks: 2 * (3.0 * log_term).ceil() as usize,
                c0_sq,
                beta_stat,
                beta_max: 4.0 * beta_stat,
                l_r,
                beta_var: 4.0,
                alpha: 8,
                mu_0: 16.0,
                delta,
                delta_w: delta,
                c_w: DEFAULT_C_W,
            }
        }
    };
    // T_total = 1 makes the log term vanish
    k.n_blocks = k.n_blocks.max(2);
    for (key, &v) in overrides {
        match key.as_str() {
            "n_blocks" => k.n_blocks = integral_override(key, v)? as usize,
            "beta_stat" => k.beta_stat = v,
            "beta_max" => k.beta_max = v,
            "l_r" => k.l_r = v,
            "beta_var" => k.beta_var = v,
            "alpha" => k.alpha = integral_override(key, v)?,
            "mu_0" => k.mu_0 = v,
            "delta" => k.delta = v,
            "delta_w" => k.delta_w = v,
            "c_w" => k.c_w = v,
            other => {
                return Err(Error::config(format!(
                    "unknown override key `{other}` (expected one of {})",
                    OVERRIDE_KEYS.join(", ")
                )))
            }
        }
    }
    k.validate()?;
    Ok(k)
}

/// Where a measured copy sits in the run.
#[derive(Clone, Copy, Debug)]
pub enum Phase<'a> {
    Warmup,
    Epoch {
        m: u32,
        /// 1-based step index within the epoch.
        s: u64,
        /// Design scalar `λ_{s−1}` that set this step's actions.
        lambda_prev: f64,
        mu_prev: f64,
        omega: f64,
        base: &'a PureState,
    },
}

#[derive(Clone, Copy, Debug)]
pub struct CopyEvent<'a> {
    /// Global copy index, 1-based.
    pub t: u64,
    pub phase: Phase<'a>,
    pub action: &'a PureState,
}

/// Hook called after every measured copy. Observers see learner state only;
/// ground truth must come from an [`Evaluator`] they hold themselves.
pub trait CopyObserver {
    fn on_copy(&mut self, event: &CopyEvent<'_>);
}

impl CopyObserver for () {
    fn on_copy(&mut self, _: &CopyEvent<'_>) {}
}

impl<F: FnMut(&CopyEvent<'_>)> CopyObserver for F {
    fn on_copy(&mut self, event: &CopyEvent<'_>) {
        self(event)
    }
}

/// State carried through one epoch.
#[derive(Clone, Debug)]
pub struct EpochState {
    pub m: u32,
    pub base: PureState,
    pub mu_prev: f64,
    pub omega: f64,
    pub t_m: u64,
    pub design: DesignState,
    pub basis: TangentBasis,
    pub blocks: Vec<BlockAccumulator>,
}

impl EpochState {
    /// Fresh epoch at `base` hot-started with precision `mu_prev`.
    pub fn new(m: u32, base: PureState, mu_prev: f64, consts: &AlgorithmConstants) -> Result<Self> {
        let omega = mu_prev / consts.beta_var;
        let design = design_init(mu_prev)?.with_omega(omega);
        let basis = complete_tangent_basis(&base)?;
        let blocks = (0..consts.n_blocks).map(|j| BlockAccumulator::new(base.clone(), j)).collect();
        Ok(EpochState {
            m,
            t_m: consts.epoch_length(mu_prev),
            base,
            mu_prev,
            omega,
            design,
            basis,
            blocks,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub m: u32,
    pub mu_prev: f64,
    pub omega: f64,
    pub t_m: u64,
    pub steps_completed: u64,
    /// Final design scalar `μ_m`; absent for a truncated epoch.
    pub mu: Option<f64>,
    pub mom_norm: Option<f64>,
    pub selected_block: Option<usize>,
    /// The selected estimate exceeded the `√(3/8)` update domain (the angle clamp applies).
    pub outside_update_domain: bool,
    pub truncated: bool,
    pub copies_used: u64,
}

#[derive(Clone, Debug)]
pub struct EpochOutcome {
    pub next: Option<EpochState>,
    pub summary: EpochSummary,
    pub copies_used: u64,
}

/// Runs one epoch with at most `budget_remaining` copies.
pub fn run_epoch(
    env: &mut Environment,
    mut es: EpochState,
    consts: &AlgorithmConstants,
    budget_remaining: u64,
    observer: &mut dyn CopyObserver,
) -> Result<EpochOutcome> {
    let start = env.copies_consumed();
    let mut used = 0u64;
    let mut truncated = false;
    'steps: for s in 1..=es.t_m {
        let lambda_prev = es.design.lambda;
        let tau = es.design.step_size();
        let scale = es.design.observation_scale();
        for (i, v) in es.basis.vectors().iter().enumerate() {
            let a_plus = retract(&es.base, v, tau)?;
            let a_minus = retract(&es.base, v, -tau)?;
            for (j, block) in es.blocks.iter_mut().enumerate() {
                let mut bits = [false; 2];
                for (sign, action) in [&a_plus, &a_minus].into_iter().enumerate() {
                    if used == budget_remaining {
                        truncated = true;
                        break 'steps;
                    }
                    bits[sign] = env.measure_tagged(action, &[TAG_EPOCH, u64::from(es.m), s, i as u64, j as u64, sign as u64])?;
                    used += 1;
                    observer.on_copy(&CopyEvent {
                        t: env.copies_consumed(),
                        phase: Phase::Epoch {
                            m: es.m,
                            s,
                            lambda_prev,
                            mu_prev: es.mu_prev,
                            omega: es.omega,
                            base: &es.base,
                        },
                        action,
                    });
                }
                let obs = crate::environment::DifferenceObservation { x_plus: bits[0], x_minus: bits[1] };
                block.accumulate(&obs, v, scale, es.omega)?;
            }
        }
        es.design = es.design.step();
    }
    debug_assert_eq!(env.copies_consumed() - start, used);

    let mut summary = EpochSummary {
        m: es.m,
        mu_prev: es.mu_prev,
        omega: es.omega,
        t_m: es.t_m,
        steps_completed: es.design.steps_applied,
        mu: None,
        mom_norm: None,
        selected_block: None,
        outside_update_domain: false,
        truncated,
        copies_used: used,
    };
    if truncated {
        return Ok(EpochOutcome { next: None, summary, copies_used: used });
    }
    let lambda = es.design.lambda;
    let estimates = es.blocks.iter().map(|b| b.solve(lambda)).collect::<Result<Vec<_>>>()?;
    let mom = mom_select(&estimates, lambda)?;
    let norm = mom.estimate.norm();
    let outside = outside_update_domain(norm);
    if outside {
        log::debug!("epoch {}: MoM estimate norm {norm:.4} exceeds the update domain; angle clamped", es.m);
    }
    let next_base = update_base(&es.base, &mom.estimate)?;
    summary.mu = Some(lambda);
    summary.mom_norm = Some(norm);
    summary.selected_block = Some(mom.selected_index);
    summary.outside_update_domain = outside;
    let next = EpochState::new(es.m + 1, next_base, lambda, consts)?;
    Ok(EpochOutcome { next: Some(next), summary, copies_used: used })
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub d: usize,
    pub t_total: u64,
    pub preset: Preset,
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
    /// Periodic checkpoint interval in copies; `⌈T_total/1000⌉` when unset.
    pub checkpoint_every: Option<u64>,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(d: usize, t_total: u64, preset: Preset, seed: u64) -> Self {
        RunConfig { d, t_total, preset, overrides: BTreeMap::new(), checkpoint_every: None, seed }
    }

    pub fn checkpoint_interval(&self) -> u64 {
        self.checkpoint_every.unwrap_or_else(|| self.t_total.div_ceil(1000)).max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: u64,
    pub epoch: u32,
    pub step: u64,
    /// Design scalar in force; absent during warm-up.
    pub lambda: Option<f64>,
    pub cumulative_regret: f64,
    /// `1 − F(ρ, current base)`; absent for `t ≤ T_0` or without an evaluator.
    pub online_infidelity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub constants: AlgorithmConstants,
    /// Copies spent in warm-up (`T_0`).
    pub warmup_samples: u64,
    /// Whether `‖ρ − C_1‖² ≤ 1/4`, when an evaluator was available.
    pub warmup_success: Option<bool>,
    pub trace: Vec<Checkpoint>,
    pub epochs: Vec<EpochSummary>,
    pub final_estimate: PureState,
    pub total_copies: u64,
    pub final_regret: f64,
}

struct Tracker<'e> {
    evaluator: Option<&'e Evaluator>,
    regret: CompensatedSum,
    every: u64,
    t_total: u64,
    trace: Vec<Checkpoint>,
}

impl Tracker<'_> {
    fn push(&mut self, row: Checkpoint) {
        match self.trace.last_mut() {
            Some(last) if last.t == row.t => *last = row,
            _ => self.trace.push(row),
        }
    }

    fn boundary(&mut self, t: u64, epoch: u32, step: u64, lambda: Option<f64>, base: Option<&PureState>) {
        let online_infidelity = match (self.evaluator, base) {
            (Some(ev), Some(b)) => Some(ev.infidelity(b)),
            _ => None,
        };
        self.push(Checkpoint { t, epoch, step, lambda, cumulative_regret: self.regret.value(), online_infidelity });
    }
}

impl CopyObserver for Tracker<'_> {
    fn on_copy(&mut self, ev: &CopyEvent<'_>) {
        if let Some(e) = self.evaluator {
            self.regret.add(e.regret_increment(ev.action));
        }
        if ev.t.is_multiple_of(self.every) || ev.t == self.t_total {
            match ev.phase {
                Phase::Warmup => self.boundary(ev.t, 0, 0, None, None),
                Phase::Epoch { m, s, lambda_prev, base, .. } => {
                    self.boundary(ev.t, m, s, Some(lambda_prev), Some(base))
                }
            }
        }
    }
}

struct Chain<'a, 'b> {
    first: &'a mut dyn CopyObserver,
    second: &'b mut dyn CopyObserver,
}

impl CopyObserver for Chain<'_, '_> {
    fn on_copy(&mut self, ev: &CopyEvent<'_>) {
        self.first.on_copy(ev);
        self.second.on_copy(ev);
    }
}

/// Runs warm-up and epochs until `cfg.t_total` copies are spent.
///
/// With an evaluator, regret is accumulated per copy and online infidelity is
/// recorded; without one the learner behaves identically but the trace carries
/// zero regret and no infidelity.
pub fn run(env: &mut Environment, evaluator: Option<&Evaluator>, cfg: &RunConfig) -> Result<RunRecord> {
    run_observed(env, evaluator, cfg, &mut ())
}

pub fn run_observed(
    env: &mut Environment,
    evaluator: Option<&Evaluator>,
    cfg: &RunConfig,
    observer: &mut dyn CopyObserver,
) -> Result<RunRecord> {
    if env.dim() != cfg.d {
        return Err(Error::DimensionMismatch { expected: cfg.d, found: env.dim() });
    }
    let consts = derive_constants(cfg.d, cfg.t_total, cfg.preset, &cfg.overrides)?;
    let wcfg = consts.warmup_config();
    let plan = wcfg.plan(cfg.d)?;
    if plan.total_samples > cfg.t_total {
        return Err(Error::config(format!(
            "horizon {} is below the warm-up cost of {} copies",
            cfg.t_total, plan.total_samples
        )));
    }
    let start = env.copies_consumed();
    let mut tracker = Tracker {
        evaluator,
        regret: CompensatedSum::default(),
        every: cfg.checkpoint_interval(),
        t_total: start + cfg.t_total,
        trace: Vec::new(),
    };
    let key = StreamKey::new(cfg.seed).named("warmup");
    let warm = {
        let mut chain = Chain { first: &mut tracker, second: observer };
        let t0 = env.copies_consumed();
        let mut n = 0u64;
        run_warmup_observed(env, &wcfg, key, TAG_WARMUP, |action| {
            n += 1;
            chain.on_copy(&CopyEvent { t: t0 + n, phase: Phase::Warmup, action });
        })?
    };
    let t0 = env.copies_consumed();
    tracker.boundary(t0, 0, 0, None, None);
    let warmup_success = evaluator.map(|ev| ev.dist2(&warm.estimate) <= 0.25);

    let mut epochs = Vec::new();
    let mut state = Some(EpochState::new(1, warm.estimate.clone(), consts.mu_0, &consts)?);
    let mut final_estimate = warm.estimate;
    while let Some(es) = state.take() {
        let remaining = cfg.t_total - (env.copies_consumed() - start);
        if remaining == 0 {
            break;
        }
        let out = {
            let mut chain = Chain { first: &mut tracker, second: observer };
            run_epoch(env, es, &consts, remaining, &mut chain)?
        };
        if let Some(next) = &out.next {
            final_estimate = next.base.clone();
            tracker.boundary(
                env.copies_consumed(),
                out.summary.m,
                out.summary.steps_completed,
                out.summary.mu,
                Some(&next.base),
            );
        }
        epochs.push(out.summary);
        state = out.next;
    }
    let total_copies = env.copies_consumed() - start;
    debug_assert_eq!(total_copies, cfg.t_total);
    Ok(RunRecord {
        config: cfg.clone(),
        constants: consts,
        warmup_samples: t0 - start,
        warmup_success,
        final_regret: tracker.regret.value(),
        trace: tracker.trace,
        epochs,
        final_estimate,
        total_copies,
    })
}

/// Smallest `M` with `Σ_{m≤M} 2N·d_tan·⌈α μ_0 q^{m−1}⌉ ≥ budget`, using the
/// analytic growth ratio `q = √(1 + 16 L_r⁴)`.
pub fn epoch_count_bound(consts: &AlgorithmConstants, mu_0: f64, budget: u64) -> u64 {
    epoch_count_bound_with_ratio(consts, mu_0, budget, consts.growth_ratio())
}

/// As [`epoch_count_bound`] with an explicit growth ratio `q > 1`.
pub fn epoch_count_bound_with_ratio(consts: &AlgorithmConstants, mu_0: f64, budget: u64, q: f64) -> u64 {
    let per_step = consts.copies_per_step() as f64;
    let mut spent = 0.0;
    let mut mu = mu_0;
    let mut m = 0u64;
    loop {
        m += 1;
        spent += per_step * (consts.alpha as f64 * mu).ceil();
        if spent >= budget as f64 || !(q > 1.0) || m >= 100_000 {
            return m;
        }
        mu *= q;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlannedEpoch {
    pub mu_prev: f64,
    pub t_m: u64,
    pub copies: u64,
}

/// Epoch schedule for an epoch budget, by iterating the exact design recursion.
///
/// The precision sequence does not depend on outcomes, so this predicts the
/// engine's epoch lengths exactly. Only practical for modest `α μ`.
pub fn epoch_plan(consts: &AlgorithmConstants, budget: u64) -> Result<Vec<PlannedEpoch>> {
    let mut out = Vec::new();
    let mut left = budget;
    let mut mu = consts.mu_0;
    while left > 0 {
        let t_m = consts.epoch_length(mu);
        let full = t_m.saturating_mul(consts.copies_per_step());
        let copies = full.min(left);
        out.push(PlannedEpoch { mu_prev: mu, t_m, copies });
        left -= copies;
        let mut ds = design_init(mu)?.with_omega(mu / consts.beta_var);
        for _ in 0..t_m {
            ds = ds.step();
        }
        mu = ds.lambda;
    }
    Ok(out)
}
