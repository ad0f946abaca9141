//! JSON-lines wire protocol. One request per line in, one reply per line
//! out; malformed input earns an error reply, never a dropped connection.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::broker::{AuditRequest, AuditResponse, Broker, RedactedRecord, UserResponse};
use crate::dp::{Eps, NType};
use crate::error::{Error, Result};
use crate::ledger::{HistoryFilter, Scope};
use crate::search::QueryRequest;
use crate::table::{AggregateFunction, Cmp, Conjunct, Constant, FunctionKind, Predicate};

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Request {
    UserQuery(UserQueryMsg),
    OwnerAudit(OwnerAuditMsg),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserQueryMsg {
    pub query_id: String,
    pub user_id: String,
    pub a_req: f64,
    pub function: String,
    #[serde(default)]
    pub attribute: Option<String>,
    pub n_type: u8,
    #[serde(default)]
    pub predicate: Vec<ConjunctMsg>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjunctMsg {
    pub attr: String,
    pub op: String,
    pub value: Value,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OwnerAuditMsg {
    pub kind: String,
    #[serde(default)]
    pub scope: Option<String>,
    #[serde(default)]
    pub user_id: Option<String>,
    #[serde(default)]
    pub n_type: Option<u8>,
    #[serde(default)]
    pub seq_range: Option<[u64; 2]>,
}

#[derive(Debug, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Reply {
    Response(UserResponse),
    Report { scope: String, epsilon_total: Eps, utilized: Eps, remaining: Eps },
    History { records: Vec<RedactedRecord> },
    Verify { ok: bool, blocks: u64, first_bad_index: Option<u64>, head_ok: bool },
    Error { message: String },
}

pub fn parse_request(line: &str) -> Result<Request> {
    serde_json::from_str(line).map_err(|e| Error::Protocol(e.to_string()))
}

fn parse_constant(value: &Value) -> Result<Constant> {
    match value {
        Value::Number(n) => {
            let f = n.as_f64().ok_or(Error::NonFiniteValue)?;
            if !f.is_finite() {
                return Err(Error::NonFiniteValue);
            }
            Ok(Constant::Num(f))
        }
        Value::String(s) => Ok(Constant::Text(s.clone())),
        other => Err(Error::Protocol(format!("constant must be a number or string, got {other}"))),
    }
}

fn parse_function(name: &str) -> Result<FunctionKind> {
    FunctionKind::parse(name).ok_or_else(|| Error::Protocol(format!("unknown function {name:?}")))
}

fn parse_n_type(raw: u8) -> Result<NType> {
    NType::from_u8(raw).ok_or_else(|| Error::Protocol(format!("n_type must be 0 or 1, got {raw}")))
}

pub fn to_query_request(msg: &UserQueryMsg) -> Result<QueryRequest> {
    let kind = parse_function(&msg.function)?;
    let mut conjuncts = Vec::with_capacity(msg.predicate.len());
    for c in &msg.predicate {
        conjuncts.push(Conjunct {
            attr: c.attr.clone(),
            cmp: Cmp::parse(&c.op)
                .ok_or_else(|| Error::Protocol(format!("unknown comparator {:?}", c.op)))?,
            constant: parse_constant(&c.value)?,
        });
    }
    Ok(QueryRequest {
        query_id: msg.query_id.clone(),
        user_id: msg.user_id.clone(),
        a_req: msg.a_req,
        function: AggregateFunction::new(kind, msg.attribute.clone()),
        n_type: parse_n_type(msg.n_type)?,
        predicate: Predicate::new(conjuncts),
    })
}

pub fn to_audit_request(msg: &OwnerAuditMsg) -> Result<AuditRequest> {
    match msg.kind.as_str() {
        "report" => {
            let scope = match msg.scope.as_deref() {
                None | Some("all") => Scope::All,
                Some("whole") => Scope::Type(NType::Whole),
                Some("portion") => Scope::Type(NType::Portion),
                Some(other) => {
                    return Err(Error::Protocol(format!("unknown scope {other:?}")));
                }
            };
            Ok(AuditRequest::Report { scope })
        }
        "history" => Ok(AuditRequest::History {
            filter: HistoryFilter {
                user_id: msg.user_id.clone(),
                n_type: msg.n_type.map(parse_n_type).transpose()?,
                seq_range: msg.seq_range.map(|[lo, hi]| (lo, hi)),
            },
        }),
        "verify" => Ok(AuditRequest::Verify),
        other => Err(Error::Protocol(format!("unknown audit kind {other:?}"))),
    }
}

fn scope_name(scope: Scope) -> &'static str {
    match scope {
        Scope::All => "all",
        Scope::Type(NType::Whole) => "whole",
        Scope::Type(NType::Portion) => "portion",
    }
}

fn audit_reply(resp: AuditResponse) -> Reply {
    match resp {
        AuditResponse::Report(r) => Reply::Report {
            scope: scope_name(r.scope).to_string(),
            epsilon_total: r.epsilon_total,
            utilized: r.utilized,
            remaining: r.remaining,
        },
        AuditResponse::History(records) => Reply::History { records },
        AuditResponse::Verify { report, head_ok } => Reply::Verify {
            ok: report.ok && head_ok,
            blocks: report.blocks,
            first_bad_index: report.first_bad_index,
            head_ok,
        },
    }
}

/// Serves one request line. All failures become an error reply so a bad
/// client cannot wedge the loop.
pub fn handle_line(broker: &mut Broker, line: &str) -> Reply {
    let outcome = parse_request(line).and_then(|req| match req {
        Request::UserQuery(msg) => {
            let q = to_query_request(&msg)?;
            broker.handle_user_query(&q).map(Reply::Response)
        }
        Request::OwnerAudit(msg) => {
            let a = to_audit_request(&msg)?;
            broker.handle_owner_audit(&a).map(audit_reply)
        }
    });
    outcome.unwrap_or_else(|e| Reply::Error { message: e.to_string() })
}

pub fn render_reply(reply: &Reply) -> String {
    serde_json::to_string(reply).expect("replies always serialize")
}

/// Request-reply loop over any line-oriented transport until EOF.
pub fn serve<R: BufRead, W: Write>(broker: &mut Broker, input: R, mut output: W) -> Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = handle_line(broker, &line);
        writeln!(output, "{}", render_reply(&reply))?;
        output.flush()?;
    }
    Ok(())
}
