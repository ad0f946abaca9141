//! The query broker: cache lookup, budget guard, accuracy-driven search,
//! write-ahead ledger append, cache fill, respond. Owner audits are served
//! read-only from the ledger.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::cache::{CacheEntry, CacheKey, ResponseCache};
use crate::dp::{BudgetAccountant, Eps, NType, RngBundle, SensitivityRegistry};
use crate::error::{Error, Result};
use crate::ledger::{
    verify_file, BudgetReport, HistoryFilter, Ledger, LedgerRecord, Scope, VerifyReport,
};
use crate::search::{
    answer_one, Controller, ControllerParams, OutcomeStatus, QueryRequest, SearchParams,
};
use crate::table::{load_csv, load_schema_sidecar, DataTable, FunctionKind};

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// The total budget is what the most conservative owner granted.
pub fn select_total_budget(owner_budgets: &[f64]) -> Result<Eps> {
    if owner_budgets.is_empty() {
        return Err(Error::Config("at least one owner budget is required".into()));
    }
    let mut min = f64::INFINITY;
    for &b in owner_budgets {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::BadEpsilon(b));
        }
        min = min.min(b);
    }
    Ok(Eps::from_f64(min))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseStatus {
    SatisfiedAtDefault,
    SatisfiedAdjusted,
    Skipped,
    BudgetExhausted,
    CacheHit,
}

impl ResponseStatus {
    fn from_outcome(status: OutcomeStatus) -> ResponseStatus {
        match status {
            OutcomeStatus::SatisfiedAtDefault => ResponseStatus::SatisfiedAtDefault,
            OutcomeStatus::SatisfiedAdjusted => ResponseStatus::SatisfiedAdjusted,
            OutcomeStatus::Skipped => ResponseStatus::Skipped,
            OutcomeStatus::BudgetExhausted => ResponseStatus::BudgetExhausted,
        }
    }

    /// Cache hits satisfy their users just like fresh releases.
    pub fn is_satisfied(self) -> bool {
        matches!(
            self,
            ResponseStatus::SatisfiedAtDefault
                | ResponseStatus::SatisfiedAdjusted
                | ResponseStatus::CacheHit
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UserResponse {
    pub query_id: String,
    pub status: ResponseStatus,
    pub released_value: Option<f64>,
    pub epsilon_spent: Eps,
    pub a_act_estimate: f64,
}

/// Owner-visible view of a ledger record: spend and metadata, never the
/// released value, which only the issuing user and the curator may see.
#[derive(Debug, Clone, Serialize)]
pub struct RedactedRecord {
    pub seq: u64,
    pub query_id: String,
    pub user_id: String,
    pub function: FunctionKind,
    pub attribute: Option<String>,
    pub n_type: NType,
    pub predicate: String,
    pub epsilon_spent: Eps,
    pub a_req: f64,
    pub timestamp_ms: u64,
}

impl RedactedRecord {
    fn from_record(rec: &LedgerRecord) -> RedactedRecord {
        RedactedRecord {
            seq: rec.seq,
            query_id: rec.query_id.clone(),
            user_id: rec.user_id.clone(),
            function: rec.function,
            attribute: rec.attribute.clone(),
            n_type: rec.n_type,
            predicate: rec.predicate.clone(),
            epsilon_spent: rec.epsilon_spent,
            a_req: rec.a_req,
            timestamp_ms: rec.timestamp_ms,
        }
    }
}

#[derive(Debug, Clone)]
pub enum AuditRequest {
    Report { scope: Scope },
    History { filter: HistoryFilter },
    Verify,
}

#[derive(Debug, Clone)]
pub enum AuditResponse {
    Report(BudgetReport),
    History(Vec<RedactedRecord>),
    Verify { report: VerifyReport, head_ok: bool },
}

/// Everything a broker needs besides the data itself.
#[derive(Debug, Clone)]
pub struct BrokerParams {
    pub ledger: PathBuf,
    pub epsilon_total: Eps,
    pub seed: u64,
    pub search: SearchParams,
    pub controller: ControllerParams,
    pub sensitivity: SensitivityRegistry,
}

#[derive(Debug)]
pub struct Broker {
    table: Arc<DataTable>,
    params: BrokerParams,
    search: SearchParams,
    controller: Controller,
    acct: BudgetAccountant,
    cache: ResponseCache,
    ledger: Ledger,
    rng: RngBundle,
    query_seq: u64,
    batch_answered: u32,
    batch_satisfied: u32,
}

impl Broker {
    /// Loads the dataset (with optional schema sidecar) and starts a broker
    /// on it.
    pub fn start(dataset: &Path, schema: Option<&Path>, params: BrokerParams) -> Result<Broker> {
        let sidecar = schema.map(load_schema_sidecar).transpose()?;
        let loaded = load_csv(dataset, sidecar.as_ref())?;
        Broker::with_table(Arc::new(loaded.table), params)
    }

    /// Starts a broker over an in-memory table. An existing ledger is
    /// replayed to rebuild the accountant and response cache; its recorded
    /// total budget is authoritative and must match the configured one.
    pub fn with_table(table: Arc<DataTable>, params: BrokerParams) -> Result<Broker> {
        params.search.validate()?;
        let ledger = Ledger::open_or_create(&params.ledger, params.epsilon_total, now_ms())?;
        if ledger.epsilon_total() != params.epsilon_total {
            return Err(Error::Config(format!(
                "ledger records a total budget of {}, configuration says {}",
                ledger.epsilon_total(),
                params.epsilon_total
            )));
        }
        let mut acct = BudgetAccountant::new(params.epsilon_total)?;
        let mut cache = ResponseCache::new();
        for rec in ledger.records() {
            acct.charge(&rec.query_id, rec.epsilon_spent, rec.n_type)?;
            let key = CacheKey::new(
                rec.a_req,
                rec.function,
                rec.attribute.clone(),
                rec.n_type,
                rec.predicate.clone(),
            );
            cache.record(
                key,
                CacheEntry {
                    released_value: rec.released_value,
                    epsilon_spent_originally: rec.epsilon_spent,
                    ledger_seq: rec.seq,
                    a_act_estimate: rec.a_act_estimate,
                },
            );
        }
        let controller = Controller::new(params.controller)?;
        let query_seq = ledger.records().len() as u64;
        let search = params.search;
        let rng = RngBundle::new(params.seed);
        Ok(Broker {
            table,
            params,
            search,
            controller,
            acct,
            cache,
            ledger,
            rng,
            query_seq,
            batch_answered: 0,
            batch_satisfied: 0,
        })
    }

    pub fn handle_user_query(&mut self, req: &QueryRequest) -> Result<UserResponse> {
        req.validate(self.table.schema())?;
        let key = CacheKey::from_request(req);
        if let Some(hit) = self.cache.lookup(&key) {
            // A repeat answers from the cache: same bits, zero charge.
            let resp = UserResponse {
                query_id: req.query_id.clone(),
                status: ResponseStatus::CacheHit,
                released_value: Some(hit.released_value),
                epsilon_spent: Eps::ZERO,
                a_act_estimate: hit.a_act_estimate,
            };
            self.note_answer(true);
            return Ok(resp);
        }

        // Every fresh query consumes one estimation-stream slot, answered
        // or not, so outcomes stay stable under config sweeps.
        let seq = self.query_seq;
        self.query_seq += 1;
        let outcome = answer_one(
            &self.table,
            req,
            &self.search,
            &self.params.sensitivity,
            &mut self.acct,
            &mut self.rng,
            seq,
        )?;

        let resp = match outcome.released_value {
            None => UserResponse {
                query_id: req.query_id.clone(),
                status: ResponseStatus::from_outcome(outcome.status),
                released_value: None,
                epsilon_spent: Eps::ZERO,
                a_act_estimate: outcome.a_act_estimate,
            },
            Some(value) => {
                // Write-ahead: the spend is durable before anyone sees the
                // value. If the append fails the in-memory charge stands;
                // over-counting spend is the safe failure direction.
                let seq = self.ledger.append(LedgerRecord {
                    seq: 0,
                    query_id: req.query_id.clone(),
                    user_id: req.user_id.clone(),
                    function: req.function.kind,
                    attribute: if req.function.kind == FunctionKind::Count {
                        None
                    } else {
                        req.function.target.clone()
                    },
                    n_type: req.n_type,
                    predicate: req.predicate.canonical(),
                    epsilon_spent: outcome.epsilon_spent,
                    a_req: req.a_req,
                    a_act_estimate: outcome.a_act_estimate,
                    released_value: value,
                    timestamp_ms: now_ms(),
                })?;
                self.cache.record(
                    key,
                    CacheEntry {
                        released_value: value,
                        epsilon_spent_originally: outcome.epsilon_spent,
                        ledger_seq: seq,
                        a_act_estimate: outcome.a_act_estimate,
                    },
                );
                UserResponse {
                    query_id: req.query_id.clone(),
                    status: ResponseStatus::from_outcome(outcome.status),
                    released_value: Some(value),
                    epsilon_spent: outcome.epsilon_spent,
                    a_act_estimate: outcome.a_act_estimate,
                }
            }
        };
        self.note_answer(resp.status.is_satisfied());
        Ok(resp)
    }

    fn note_answer(&mut self, satisfied: bool) {
        self.batch_answered += 1;
        if satisfied {
            self.batch_satisfied += 1;
        }
        if self.batch_answered == self.controller.params().batch_size {
            let satisfied_count = self.batch_satisfied;
            self.batch_answered = 0;
            self.batch_satisfied = 0;
            self.controller.observe_batch(
                &mut self.search,
                self.acct.epsilon_total(),
                satisfied_count,
            );
        }
    }

    /// Audits never mutate broker state and never touch the RNG.
    pub fn handle_owner_audit(&self, req: &AuditRequest) -> Result<AuditResponse> {
        match req {
            AuditRequest::Report { scope } => {
                Ok(AuditResponse::Report(self.ledger.budget_query(*scope)))
            }
            AuditRequest::History { filter } => Ok(AuditResponse::History(
                self.ledger.history(filter).into_iter().map(RedactedRecord::from_record).collect(),
            )),
            AuditRequest::Verify => {
                let report = verify_file(self.ledger.path())?;
                let head_ok = match self.ledger.check_disk_head() {
                    Ok(()) => true,
                    Err(Error::Io(e)) => return Err(Error::Io(e)),
                    Err(_) => false,
                };
                Ok(AuditResponse::Verify { report, head_ok })
            }
        }
    }

    pub fn table(&self) -> &Arc<DataTable> {
        &self.table
    }

    pub fn accountant(&self) -> &BudgetAccountant {
        &self.acct
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }

    pub fn search_params(&self) -> &SearchParams {
        &self.search
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }
}

/// On-disk configuration; every knob is optional so the command line can
/// fill gaps, but dataset, ledger, and a budget must come from somewhere.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dataset: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub ledger: Option<PathBuf>,
    pub epsilon_total: Option<f64>,
    pub owner_budgets: Option<Vec<f64>>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub sensitivity: SensitivitySection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub epsilon_def: Option<f64>,
    pub eta: Option<f64>,
    pub tau: Option<f64>,
    pub epsilon_floor: Option<f64>,
    pub estimation_samples: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub batch_size: Option<u32>,
    pub rho: Option<u32>,
    pub epsilon_def_step: Option<f64>,
    pub eta_shrink: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySection {
    pub count: Option<f64>,
    pub average: Option<f64>,
    pub maximum: Option<f64>,
    pub minimum: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BrokerSetup {
    pub dataset: PathBuf,
    pub schema: Option<PathBuf>,
    pub params: BrokerParams,
}

impl ConfigFile {
    pub fn parse_toml(text: &str) -> Result<ConfigFile> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<ConfigFile> {
        ConfigFile::parse_toml(&std::fs::read_to_string(path)?)
    }

    /// Validates and fills defaults. The effective total budget is the
    /// minimum over everything granted: each owner's budget and, when set,
    /// the explicit epsilon_total bound.
    pub fn resolve(self) -> Result<BrokerSetup> {
        let dataset =
            self.dataset.ok_or_else(|| Error::Config("dataset path is required".into()))?;
        let ledger = self.ledger.ok_or_else(|| Error::Config("ledger path is required".into()))?;
        let mut budgets = self.owner_budgets.unwrap_or_default();
        if let Some(total) = self.epsilon_total {
            budgets.push(total);
        }
        let epsilon_total = select_total_budget(&budgets)?;

        // TOML admits inf/nan float literals; reject them before Eps
        // conversion, which only accepts finite amounts.
        let finite_eps = |v: Option<f64>| match v {
            Some(v) if !v.is_finite() => Err(Error::BadEpsilon(v)),
            Some(v) => Ok(Some(Eps::from_f64(v))),
            None => Ok(None),
        };

        let d = SearchParams::default();
        let search = SearchParams {
            epsilon_def: finite_eps(self.search.epsilon_def)?.unwrap_or(d.epsilon_def),
            eta: finite_eps(self.search.eta)?.unwrap_or(d.eta),
            tau: self.search.tau.unwrap_or(d.tau),
            epsilon_floor: finite_eps(self.search.epsilon_floor)?.unwrap_or(d.epsilon_floor),
            estimation_samples: self.search.estimation_samples.unwrap_or(d.estimation_samples),
        };
        search.validate()?;
        if search.epsilon_def >= epsilon_total {
            return Err(Error::Config(format!(
                "epsilon_def {} must stay under the total budget {}",
                search.epsilon_def, epsilon_total
            )));
        }

        let c = ControllerParams::default();
        let controller = ControllerParams {
            batch_size: self.controller.batch_size.unwrap_or(c.batch_size),
            rho: self.controller.rho.unwrap_or(c.rho),
            epsilon_def_step: finite_eps(self.controller.epsilon_def_step)?
                .unwrap_or(c.epsilon_def_step),
            eta_shrink: self.controller.eta_shrink.unwrap_or(c.eta_shrink),
        };
        controller.validate()?;

        let mut sensitivity = SensitivityRegistry::default();
        for (kind, v) in [
            (FunctionKind::Count, self.sensitivity.count),
            (FunctionKind::Average, self.sensitivity.average),
            (FunctionKind::Maximum, self.sensitivity.maximum),
            (FunctionKind::Minimum, self.sensitivity.minimum),
        ] {
            if let Some(v) = v {
                sensitivity.set(kind, v)?;
            }
        }

        Ok(BrokerSetup {
            dataset,
            schema: self.schema,
            params: BrokerParams {
                ledger,
                epsilon_total,
                seed: self.seed.unwrap_or(42),
                search,
                controller,
                sensitivity,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{parse_csv, AggregateFunction, Cmp, Conjunct, Constant, Predicate};

    fn test_table() -> Arc<DataTable> {
        let mut csv = String::from("age,hours\n");
        for i in 0..2000 {
            csv.push_str(&format!("{},{}\n", 20 + (i % 50), 20 + (i % 60)));
        }
        Arc::new(parse_csv(csv.as_bytes(), None).unwrap().table)
    }

    fn params(dir: &Path, seed: u64) -> BrokerParams {
        BrokerParams {
            ledger: dir.join(format!("l{seed}.ledger")),
            epsilon_total: Eps::from_f64(8.0),
            seed,
            search: SearchParams::default(),
            controller: ControllerParams::default(),
            sensitivity: SensitivityRegistry::default(),
        }
    }

    fn query(id: &str, a_req: f64, age_below: f64) -> QueryRequest {
        QueryRequest {
            query_id: id.into(),
            user_id: format!("user-{id}"),
            a_req,
            function: AggregateFunction::count(),
            n_type: NType::Portion,
            predicate: Predicate::new(vec![Conjunct {
                attr: "age".into(),
                cmp: Cmp::Lt,
                constant: Constant::Num(age_below),
            }]),
        }
    }

    #[test]
    fn repeat_queries_hit_the_cache_bit_for_bit() {
        let dir = tempfile::tempdir().unwrap();
        let mut broker = Broker::with_table(test_table(), params(dir.path(), 3)).unwrap();
        let first = broker.handle_user_query(&query("q0", 0.95, 45.0)).unwrap();
        assert!(first.status.is_satisfied());
        assert!(first.epsilon_spent.is_positive());
        let spent_after_first = broker.accountant().spent_sequential();

        let again = broker.handle_user_query(&query("q1", 0.95, 45.0)).unwrap();
        assert_eq!(again.status, ResponseStatus::CacheHit);
        assert_eq!(again.epsilon_spent, Eps::ZERO);
        assert_eq!(
            again.released_value.unwrap().to_bits(),
            first.released_value.unwrap().to_bits()
        );
        assert_eq!(broker.accountant().spent_sequential(), spent_after_first);
        // Only the first release reached the ledger.
        assert_eq!(broker.ledger().records().len(), 1);
    }

    #[test]
    fn skipped_queries_leave_no_trace() {
        let dir = tempfile::tempdir().unwrap();
        let mut broker = Broker::with_table(test_table(), params(dir.path(), 3)).unwrap();
        // 40 rows match; at the default epsilon this cannot reach 0.99999.
        let resp = broker.handle_user_query(&query("q0", 0.99999, 21.0)).unwrap();
        assert_eq!(resp.status, ResponseStatus::Skipped);
        assert_eq!(resp.epsilon_spent, Eps::ZERO);
        assert!(resp.released_value.is_none());
        assert_eq!(broker.ledger().records().len(), 0);
        assert_eq!(broker.cache_len(), 0);
        assert_eq!(broker.accountant().spent_sequential(), Eps::ZERO);
    }

    #[test]
    fn restart_replays_spend_and_cache_from_the_ledger() {
        let dir = tempfile::tempdir().unwrap();
        let p = params(dir.path(), 3);
        let table = test_table();
        let (first, spent) = {
            let mut broker = Broker::with_table(table.clone(), p.clone()).unwrap();
            let r = broker.handle_user_query(&query("q0", 0.95, 45.0)).unwrap();
            (r, broker.accountant().spent_sequential())
        };
        // Same ledger, fresh process.
        let mut broker = Broker::with_table(table, p).unwrap();
        assert_eq!(broker.accountant().spent_sequential(), spent);
        assert_eq!(broker.cache_len(), 1);
        let replayed = broker.handle_user_query(&query("q9", 0.95, 45.0)).unwrap();
        assert_eq!(replayed.status, ResponseStatus::CacheHit);
        assert_eq!(
            replayed.released_value.unwrap().to_bits(),
            first.released_value.unwrap().to_bits()
        );
    }

    #[test]
    fn restart_rejects_budget_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = params(dir.path(), 3);
        let table = test_table();
        drop(Broker::with_table(table.clone(), p.clone()).unwrap());
        let mut other = p.clone();
        other.epsilon_total = Eps::from_f64(4.0);
        assert!(matches!(Broker::with_table(table, other), Err(Error::Config(_))));
    }

    #[test]
    fn audits_are_read_only_and_redacted() {
        let dir = tempfile::tempdir().unwrap();
        let mut broker = Broker::with_table(test_table(), params(dir.path(), 3)).unwrap();
        broker.handle_user_query(&query("q0", 0.95, 45.0)).unwrap();
        let before = broker.accountant().spent_sequential();

        let report = broker.handle_owner_audit(&AuditRequest::Report { scope: Scope::All });
        match report.unwrap() {
            AuditResponse::Report(r) => {
                assert_eq!(r.utilized, before);
                assert_eq!(r.remaining, broker.accountant().remaining());
            }
            other => panic!("unexpected audit response {other:?}"),
        }
        let history = broker
            .handle_owner_audit(&AuditRequest::History { filter: HistoryFilter::default() })
            .unwrap();
        match history {
            AuditResponse::History(recs) => {
                assert_eq!(recs.len(), 1);
                // The serialized view must not contain the released value.
                let json = serde_json::to_string(&recs[0]).unwrap();
                assert!(!json.contains("released_value"));
            }
            other => panic!("unexpected audit response {other:?}"),
        }
        match broker.handle_owner_audit(&AuditRequest::Verify).unwrap() {
            AuditResponse::Verify { report, head_ok } => {
                assert!(report.ok);
                assert!(head_ok);
            }
            other => panic!("unexpected audit response {other:?}"),
        }
        assert_eq!(broker.accountant().spent_sequential(), before);
    }

    #[test]
    fn controller_fires_every_batch() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = params(dir.path(), 3);
        p.controller.batch_size = 3;
        p.controller.rho = 3;
        p.search.epsilon_def = Eps::from_f64(0.1);
        let mut broker = Broker::with_table(test_table(), p).unwrap();
        // Three unsatisfiable queries form one failed batch.
        for i in 0..3 {
            let r = broker
                .handle_user_query(&query(&format!("q{i}"), 0.99999, 21.0 + i as f64))
                .unwrap();
            assert_eq!(r.status, ResponseStatus::Skipped);
        }
        assert_eq!(broker.controller().history().len(), 1);
        assert!(broker.controller().history()[0].changed);
        assert_eq!(broker.search_params().epsilon_def, Eps::from_f64(0.2));
    }

    #[test]
    fn config_file_resolves_with_defaults_and_overrides() {
        let text = r#"
            dataset = "census.csv"
            ledger = "spend.ledger"
            owner_budgets = [9.0, 8.0, 10.5]

            [search]
            epsilon_def = 0.3

            [sensitivity]
            average = 2.5
        "#;
        let setup = ConfigFile::parse_toml(text).unwrap().resolve().unwrap();
        assert_eq!(setup.params.epsilon_total, Eps::from_f64(8.0));
        assert_eq!(setup.params.search.epsilon_def, Eps::from_f64(0.3));
        assert_eq!(setup.params.search.eta, Eps::from_f64(0.0005));
        assert_eq!(setup.params.sensitivity.get(FunctionKind::Average), 2.5);
        assert_eq!(setup.params.sensitivity.get(FunctionKind::Count), 1.0);
        assert_eq!(setup.params.seed, 42);

        assert!(ConfigFile::parse_toml("dataset = 3").is_err());
        assert!(ConfigFile::parse_toml("unknown_knob = true").is_err());
        let no_budget = ConfigFile::parse_toml("dataset = \"a\"\nledger = \"b\"").unwrap();
        assert!(no_budget.resolve().is_err());
    }

    #[test]
    fn epsilon_def_must_fit_under_the_budget() {
        let text = r#"
            dataset = "census.csv"
            ledger = "spend.ledger"
            epsilon_total = 0.4

            [search]
            epsilon_def = 0.5
        "#;
        assert!(ConfigFile::parse_toml(text).unwrap().resolve().is_err());
    }

    #[test]
    fn non_finite_config_floats_are_rejected_not_panicked_on() {
        for (knob, section) in [
            ("epsilon_total", ""),
            ("epsilon_def", "[search]\n"),
            ("eta", "[search]\n"),
            ("epsilon_floor", "[search]\n"),
            ("epsilon_def_step", "[controller]\n"),
        ] {
            for bad in ["inf", "-inf", "nan"] {
                let text = format!(
                    "dataset = \"a\"\nledger = \"b\"\nowner_budgets = [8.0]\n{section}{knob} = {bad}\n"
                );
                let cfg = ConfigFile::parse_toml(&text).unwrap();
                assert!(cfg.resolve().is_err(), "{knob} = {bad} should be a config error");
            }
        }
    }
}
