//! Minimum-budget search: each query is classified at the default epsilon
//! and, when the estimated accuracy overshoots the requirement, walked down
//! an eta-grid until the estimate lands inside the tolerance band. A batch
//! controller retunes the default epsilon and step size from satisfaction
//! counts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dp::{
    expected_accuracy, perturb, tolerance_satisfied, BudgetAccountant, Eps, LaplaceParams, NType,
    RngBundle, SensitivityRegistry,
};
use crate::error::{Error, Result};
use crate::table::{true_value, AggregateFunction, DataTable, Predicate, Schema};

#[derive(Debug, Clone)]
pub struct QueryRequest {
    pub query_id: String,
    pub user_id: String,
    pub a_req: f64,
    pub function: AggregateFunction,
    pub n_type: NType,
    pub predicate: Predicate,
}

impl QueryRequest {
    pub fn validate(&self, schema: &Schema) -> Result<()> {
        if !(self.a_req.is_finite() && self.a_req > 0.0 && self.a_req < 1.0) {
            return Err(Error::BadAccuracyTarget(self.a_req));
        }
        self.function.validate(schema)?;
        self.predicate.validate(schema)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeStatus {
    SatisfiedAtDefault,
    SatisfiedAdjusted,
    Skipped,
    BudgetExhausted,
}

impl OutcomeStatus {
    pub fn is_satisfied(self) -> bool {
        matches!(self, OutcomeStatus::SatisfiedAtDefault | OutcomeStatus::SatisfiedAdjusted)
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub query_id: String,
    pub status: OutcomeStatus,
    /// Zero unless a value was released.
    pub epsilon_spent: Eps,
    pub released_value: Option<f64>,
    /// Estimated accuracy at the epsilon the decision was made at: the final
    /// epsilon for releases, the default for skips, 0 when the budget guard
    /// fired before anything was estimated.
    pub a_act_estimate: f64,
    pub a_req: f64,
}

/// Tuning knobs for the per-query search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    pub epsilon_def: Eps,
    pub eta: Eps,
    pub tau: f64,
    pub epsilon_floor: Eps,
    pub estimation_samples: u32,
}

impl Default for SearchParams {
    fn default() -> SearchParams {
        SearchParams {
            epsilon_def: Eps::from_f64(0.5),
            eta: Eps::from_f64(0.0005),
            tau: 0.02,
            epsilon_floor: Eps::from_f64(0.001),
            estimation_samples: 1000,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if !self.epsilon_def.is_positive() {
            return Err(Error::Config("epsilon_def must be positive".into()));
        }
        if !self.eta.is_positive() {
            return Err(Error::Config("eta must be positive".into()));
        }
        if !self.epsilon_floor.is_positive() {
            return Err(Error::Config("epsilon_floor must be positive".into()));
        }
        if !(self.tau.is_finite() && (0.0..1.0).contains(&self.tau)) {
            return Err(Error::Config(format!("tau must lie in [0, 1), got {}", self.tau)));
        }
        if self.estimation_samples == 0 {
            return Err(Error::Config("estimation_samples must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AdjustFailure {
    /// Every candidate above the floor still overshot the band.
    #[error("epsilon floor reached before the accuracy band")]
    FloorReached,
    /// The very first candidate already fell below the band, so no
    /// adjusted epsilon below the default exists.
    #[error("candidate accuracies jumped over the band; eta is too coarse")]
    BandMissed,
}

#[derive(Debug, Clone, Copy)]
pub struct Adjustment {
    pub epsilon: Eps,
    /// Eta-steps between the default and the returned candidate.
    pub decrements: u32,
    /// Accuracy estimate observed at the returned candidate.
    pub a_act: f64,
}

/// Core downward walk, generic over the accuracy evaluator so callers can
/// drive it with the Monte-Carlo estimator or an analytic stand-in.
///
/// Candidates are epsilon_def - j*eta for j = 1, 2, ...; the walk stops at
/// the first candidate whose evaluated accuracy lies inside
/// [a_req - tau, a_req + tau]. A candidate below the band means the band was
/// jumped over: the previous candidate is returned (its accuracy exceeds the
/// requirement), or BandMissed if no previous candidate below the default
/// exists. Candidates never go below the floor.
pub fn adjust_epsilon_with<E>(
    params: &SearchParams,
    a_req: f64,
    mut eval: E,
) -> std::result::Result<Adjustment, AdjustFailure>
where
    E: FnMut(Eps) -> f64,
{
    let lo = a_req - params.tau;
    let hi = a_req + params.tau;
    let mut prev: Option<Adjustment> = None;
    let mut steps: u32 = 0;
    let mut candidate = params.epsilon_def - params.eta;
    while candidate >= params.epsilon_floor {
        steps += 1;
        let a = eval(candidate);
        if a >= lo && a <= hi {
            return Ok(Adjustment { epsilon: candidate, decrements: steps, a_act: a });
        }
        if a < lo {
            return prev.ok_or(AdjustFailure::BandMissed);
        }
        prev = Some(Adjustment { epsilon: candidate, decrements: steps, a_act: a });
        candidate = candidate - params.eta;
    }
    Err(AdjustFailure::FloorReached)
}

/// Monte-Carlo-evaluated adjustment. Preconditions: `true_val` nonzero,
/// `sensitivity` positive (both established by the calling pipeline).
pub fn adjust_epsilon<R: rand::Rng + ?Sized>(
    true_val: f64,
    a_req: f64,
    sensitivity: f64,
    params: &SearchParams,
    rng: &mut R,
) -> std::result::Result<Adjustment, AdjustFailure> {
    assert!(true_val != 0.0, "true value must be nonzero");
    adjust_epsilon_with(params, a_req, |eps| {
        let p = LaplaceParams::from_eps(eps, sensitivity).expect("positive candidate epsilon");
        expected_accuracy(true_val, &p, params.estimation_samples, rng)
            .expect("nonzero true value")
    })
}

/// Answers one query end to end: budget guard, classification at the default
/// epsilon, optional downward adjustment, charge, and noisy release.
/// `query_seq` addresses the query's private estimation stream.
pub fn answer_one(
    table: &DataTable,
    query: &QueryRequest,
    params: &SearchParams,
    sens: &SensitivityRegistry,
    acct: &mut BudgetAccountant,
    rng: &mut RngBundle,
    query_seq: u64,
) -> Result<SearchOutcome> {
    params.validate()?;
    query.validate(table.schema())?;

    // Guard on the default charge: without room for a full-price release the
    // query is refused outright rather than answered with leftovers.
    if !acct.can_afford(params.epsilon_def) {
        return Ok(SearchOutcome {
            query_id: query.query_id.clone(),
            status: OutcomeStatus::BudgetExhausted,
            epsilon_spent: Eps::ZERO,
            released_value: None,
            a_act_estimate: 0.0,
            a_req: query.a_req,
        });
    }

    let true_val = true_value(table, &query.function, &query.predicate)?;
    if true_val == 0.0 {
        return Err(Error::ZeroTrueValue);
    }
    let sensitivity = sens.get(query.function.kind);
    let mut est_rng = rng.estimation_rng(query_seq);
    let p_def = LaplaceParams::from_eps(params.epsilon_def, sensitivity)?;
    let a_def = expected_accuracy(true_val, &p_def, params.estimation_samples, &mut est_rng)?;

    let (eps_final, status, a_final) = if tolerance_satisfied(a_def, query.a_req, params.tau) {
        (params.epsilon_def, OutcomeStatus::SatisfiedAtDefault, a_def)
    } else if a_def < query.a_req {
        // Even the default cannot reach the requirement; spend nothing.
        return Ok(SearchOutcome {
            query_id: query.query_id.clone(),
            status: OutcomeStatus::Skipped,
            epsilon_spent: Eps::ZERO,
            released_value: None,
            a_act_estimate: a_def,
            a_req: query.a_req,
        });
    } else {
        match adjust_epsilon(true_val, query.a_req, sensitivity, params, &mut est_rng) {
            Ok(adj) => (adj.epsilon, OutcomeStatus::SatisfiedAdjusted, adj.a_act),
            // Failed adjustment degrades to a default-price release; the
            // user still gets at least the accuracy they asked for.
            Err(_) => (params.epsilon_def, OutcomeStatus::SatisfiedAtDefault, a_def),
        }
    };

    acct.charge(&query.query_id, eps_final, query.n_type)?;
    let p_rel = LaplaceParams::from_eps(eps_final, sensitivity)?;
    let released = perturb(true_val, &p_rel, rng.release_rng());
    Ok(SearchOutcome {
        query_id: query.query_id.clone(),
        status,
        epsilon_spent: eps_final,
        released_value: Some(released),
        a_act_estimate: a_final,
        a_req: query.a_req,
    })
}

/// Runs the search over a query sequence in order, numbering estimation
/// streams from `first_seq`.
pub fn run_hsa(
    table: &DataTable,
    queries: &[QueryRequest],
    params: &SearchParams,
    sens: &SensitivityRegistry,
    acct: &mut BudgetAccountant,
    rng: &mut RngBundle,
    first_seq: u64,
) -> Result<Vec<SearchOutcome>> {
    let mut outcomes = Vec::with_capacity(queries.len());
    for (i, q) in queries.iter().enumerate() {
        outcomes.push(answer_one(table, q, params, sens, acct, rng, first_seq + i as u64)?);
    }
    Ok(outcomes)
}

/// Batch feedback rule: too few satisfied users raises the default epsilon
/// (capped one step under the total) and refines eta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerParams {
    pub batch_size: u32,
    pub rho: u32,
    pub epsilon_def_step: Eps,
    pub eta_shrink: f64,
}

impl Default for ControllerParams {
    fn default() -> ControllerParams {
        ControllerParams {
            batch_size: 10,
            rho: 10,
            epsilon_def_step: Eps::from_f64(0.1),
            eta_shrink: 0.1,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.rho > self.batch_size {
            return Err(Error::Config("rho cannot exceed batch_size".into()));
        }
        if !self.epsilon_def_step.is_positive() {
            return Err(Error::Config("epsilon_def_step must be positive".into()));
        }
        if !(self.eta_shrink.is_finite() && self.eta_shrink > 0.0 && self.eta_shrink <= 1.0) {
            return Err(Error::Config("eta_shrink must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerEvent {
    pub batch: u32,
    pub satisfied: u32,
    pub epsilon_def: Eps,
    pub eta: Eps,
    pub changed: bool,
}

#[derive(Debug, Clone)]
pub struct Controller {
    params: ControllerParams,
    history: Vec<ControllerEvent>,
}

impl Controller {
    pub fn new(params: ControllerParams) -> Result<Controller> {
        params.validate()?;
        Ok(Controller { params, history: Vec::new() })
    }

    pub fn params(&self) -> &ControllerParams {
        &self.params
    }

    /// Every batch is recorded, changed or not.
    pub fn history(&self) -> &[ControllerEvent] {
        &self.history
    }

    pub fn observe_batch(
        &mut self,
        search: &mut SearchParams,
        epsilon_total: Eps,
        satisfied: u32,
    ) -> ControllerEvent {
        let changed = satisfied < self.params.rho;
        if changed {
            let bumped = search.epsilon_def + self.params.epsilon_def_step;
            let cap = epsilon_total - self.params.epsilon_def_step;
            search.epsilon_def = bumped.min(cap);
            let shrunk = (search.eta.micros() as f64 * self.params.eta_shrink).round() as i64;
            // Resolution floor: eta stays on the representable grid.
            search.eta = Eps::from_micros(shrunk.max(1));
        }
        let event = ControllerEvent {
            batch: self.history.len() as u32,
            satisfied,
            epsilon_def: search.epsilon_def,
            eta: search.eta,
            changed,
        };
        self.history.push(event);
        event
    }
}
