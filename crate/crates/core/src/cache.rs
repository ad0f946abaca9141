//! Exact-repeat response cache. A hit replays the original noisy release
//! bit-for-bit and charges nothing; giving the same answer to the same
//! question leaks nothing beyond the first release.

use std::collections::HashMap;

use crate::dp::{Eps, NType};
use crate::search::QueryRequest;
use crate::table::FunctionKind;

/// Everything that must coincide for two queries to count as the same
/// question: required accuracy (exact bits), aggregate, target attribute,
/// query type, and the canonicalized predicate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    a_req_bits: u64,
    kind: FunctionKind,
    target: Option<String>,
    n_type: NType,
    predicate: String,
}

impl CacheKey {
    pub fn new(
        a_req: f64,
        kind: FunctionKind,
        target: Option<String>,
        n_type: NType,
        predicate_canonical: String,
    ) -> CacheKey {
        CacheKey {
            a_req_bits: a_req.to_bits(),
            kind,
            // Count ignores its target, so it must not split cache lines.
            target: if kind == FunctionKind::Count { None } else { target },
            n_type,
            predicate: predicate_canonical,
        }
    }

    pub fn from_request(req: &QueryRequest) -> CacheKey {
        CacheKey::new(
            req.a_req,
            req.function.kind,
            req.function.target.clone(),
            req.n_type,
            req.predicate.canonical(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub released_value: f64,
    pub epsilon_spent_originally: Eps,
    /// Sequence number of the ledger record that paid for this answer.
    pub ledger_seq: u64,
    pub a_act_estimate: f64,
}

#[derive(Debug, Default)]
pub struct ResponseCache {
    map: HashMap<CacheKey, CacheEntry>,
}

impl ResponseCache {
    pub fn new() -> ResponseCache {
        ResponseCache::default()
    }

    pub fn lookup(&self, key: &CacheKey) -> Option<&CacheEntry> {
        self.map.get(key)
    }

    /// First release wins; a later insert under the same key is ignored and
    /// reported as false.
    pub fn record(&mut self, key: CacheKey, entry: CacheEntry) -> bool {
        match self.map.entry(key) {
            std::collections::hash_map::Entry::Occupied(_) => false,
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(entry);
                true
            }
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::NType;
    use crate::table::{AggregateFunction, Cmp, Conjunct, Constant, Predicate};

    fn req(a_req: f64, conjuncts: Vec<Conjunct>) -> QueryRequest {
        QueryRequest {
            query_id: "q".into(),
            user_id: "u".into(),
            a_req,
            function: AggregateFunction::count(),
            n_type: NType::Portion,
            predicate: Predicate::new(conjuncts),
        }
    }

    fn conj(attr: &str, cmp: Cmp, v: f64) -> Conjunct {
        Conjunct { attr: attr.into(), cmp, constant: Constant::Num(v) }
    }

    #[test]
    fn key_ignores_conjunct_order() {
        let a = CacheKey::from_request(&req(
            0.95,
            vec![conj("age", Cmp::Lt, 25.0), conj("hours", Cmp::Ge, 40.0)],
        ));
        let b = CacheKey::from_request(&req(
            0.95,
            vec![conj("hours", Cmp::Ge, 40.0), conj("age", Cmp::Lt, 25.0)],
        ));
        assert_eq!(a, b);
    }

    #[test]
    fn key_distinguishes_every_component() {
        let base = req(0.95, vec![conj("age", Cmp::Lt, 25.0)]);
        let k0 = CacheKey::from_request(&base);

        let mut different_acc = base.clone();
        different_acc.a_req = 0.96;
        assert_ne!(k0, CacheKey::from_request(&different_acc));

        let mut different_pred = base.clone();
        different_pred.predicate = Predicate::new(vec![conj("age", Cmp::Le, 25.0)]);
        assert_ne!(k0, CacheKey::from_request(&different_pred));

        let mut different_type = base.clone();
        different_type.n_type = NType::Whole;
        assert_ne!(k0, CacheKey::from_request(&different_type));

        let mut different_fn = base.clone();
        different_fn.function =
            AggregateFunction::new(crate::table::FunctionKind::Maximum, Some("age".into()));
        assert_ne!(k0, CacheKey::from_request(&different_fn));
    }

    #[test]
    fn count_target_never_splits_keys() {
        let mut a = req(0.95, vec![]);
        a.function = AggregateFunction::new(FunctionKind::Count, Some("age".into()));
        let b = req(0.95, vec![]);
        assert_eq!(CacheKey::from_request(&a), CacheKey::from_request(&b));
    }

    #[test]
    fn first_release_wins() {
        let mut cache = ResponseCache::new();
        let key = CacheKey::from_request(&req(0.95, vec![]));
        let first = CacheEntry {
            released_value: 12.5,
            epsilon_spent_originally: Eps::from_f64(0.5),
            ledger_seq: 0,
            a_act_estimate: 0.97,
        };
        assert!(cache.record(key.clone(), first.clone()));
        let second = CacheEntry { released_value: 99.0, ledger_seq: 1, ..first.clone() };
        assert!(!cache.record(key.clone(), second));
        assert_eq!(cache.lookup(&key).unwrap().released_value, 12.5);
        assert_eq!(cache.len(), 1);
    }
}
