//! Append-only, hash-chained spend ledger.
//!
//! One JSON block per line. Block 0 holds the broker configuration (the
//! total budget); every later block records one paid release. Each block
//! stores SHA-256(canonical entry JSON || raw previous hash), so any edit to
//! a committed block, or any reordering, breaks the chain at a specific
//! index. The file itself is the interchange format: auditors verify it
//! without the broker's help.

use std::fs::{File, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dp::{Eps, NType};
use crate::error::{CorruptKind, Error, Result};
use crate::table::FunctionKind;

pub const GENESIS_PREV: [u8; 32] = [0u8; 32];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenesisConfig {
    pub epsilon_total: Eps,
    pub created_ms: u64,
}

/// One committed release. `seq` numbers releases densely from zero and is
/// assigned by the ledger on append.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub seq: u64,
    pub query_id: String,
    pub user_id: String,
    pub function: FunctionKind,
    pub attribute: Option<String>,
    pub n_type: NType,
    /// Canonical predicate text; with the other fields this reconstructs
    /// the full cache key on replay.
    pub predicate: String,
    pub epsilon_spent: Eps,
    pub a_req: f64,
    pub a_act_estimate: f64,
    pub released_value: f64,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntryBody {
    Config(GenesisConfig),
    Release(LedgerRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LedgerLine {
    entry: EntryBody,
    prev_hash: String,
    this_hash: String,
}

fn canonical_entry_bytes(entry: &EntryBody) -> Vec<u8> {
    serde_json::to_vec(entry).expect("ledger entries always serialize")
}

fn block_hash(entry_bytes: &[u8], prev: &[u8; 32]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(entry_bytes);
    h.update(prev);
    h.finalize().into()
}

fn is_lower_hex_64(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

fn render_line(entry: &EntryBody, prev: &[u8; 32]) -> (String, [u8; 32]) {
    let this = block_hash(&canonical_entry_bytes(entry), prev);
    let line = LedgerLine {
        entry: entry.clone(),
        prev_hash: hex::encode(prev),
        this_hash: hex::encode(this),
    };
    (serde_json::to_string(&line).expect("ledger lines always serialize"), this)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyReport {
    pub ok: bool,
    pub blocks: u64,
    pub first_bad_index: Option<u64>,
}

struct ParsedChain {
    genesis: GenesisConfig,
    records: Vec<LedgerRecord>,
    head: [u8; 32],
    blocks: u64,
}

/// Full chain walk. Each line must be the canonical serialization of its
/// block (a parse-equal but byte-different line is tampering), carry
/// lowercase hex hashes, hash-check against the canonical entry bytes, and
/// link to its predecessor; release sequence numbers must be dense from
/// zero with positive finite spends.
fn parse_chain(bytes: &[u8]) -> std::result::Result<ParsedChain, (u64, CorruptKind)> {
    let mut segments: Vec<&[u8]> = bytes.split(|&b| b == b'\n').collect();
    if segments.last().is_some_and(|s| s.is_empty()) {
        segments.pop();
    }
    if segments.is_empty() {
        return Err((0, CorruptKind::BadGenesis));
    }

    let mut prev = GENESIS_PREV;
    let mut genesis: Option<GenesisConfig> = None;
    let mut records: Vec<LedgerRecord> = Vec::new();
    for (i, seg) in segments.iter().enumerate() {
        let index = i as u64;
        let bad = |kind| Err((index, kind));
        let Ok(text) = std::str::from_utf8(seg) else {
            return bad(CorruptKind::Malformed);
        };
        let Ok(line) = serde_json::from_str::<LedgerLine>(text) else {
            return bad(CorruptKind::Malformed);
        };
        // Canonical-form equality: semantics-preserving byte edits (number
        // respellings, stray whitespace) are still tampering.
        if serde_json::to_string(&line).expect("reserialize") != text {
            return bad(CorruptKind::Malformed);
        }
        if !is_lower_hex_64(&line.prev_hash) || !is_lower_hex_64(&line.this_hash) {
            return bad(CorruptKind::Malformed);
        }
        let mut stored_prev = [0u8; 32];
        hex::decode_to_slice(&line.prev_hash, &mut stored_prev).expect("validated hex");
        let mut stored_this = [0u8; 32];
        hex::decode_to_slice(&line.this_hash, &mut stored_this).expect("validated hex");

        if stored_prev != prev {
            return bad(if index == 0 { CorruptKind::BadGenesis } else { CorruptKind::BrokenLink });
        }
        let recomputed = block_hash(&canonical_entry_bytes(&line.entry), &prev);
        if recomputed != stored_this {
            return bad(CorruptKind::HashMismatch);
        }

        match line.entry {
            EntryBody::Config(cfg) => {
                if index != 0 {
                    return bad(CorruptKind::Malformed);
                }
                if !cfg.epsilon_total.is_positive() {
                    return bad(CorruptKind::BadGenesis);
                }
                genesis = Some(cfg);
            }
            EntryBody::Release(rec) => {
                if index == 0 {
                    return bad(CorruptKind::BadGenesis);
                }
                if rec.seq != records.len() as u64 {
                    return bad(CorruptKind::BadSeq);
                }
                if !rec.epsilon_spent.is_positive()
                    || !rec.released_value.is_finite()
                    || !rec.a_req.is_finite()
                    || !rec.a_act_estimate.is_finite()
                {
                    return bad(CorruptKind::BadAmount);
                }
                records.push(rec);
            }
        }
        prev = stored_this;
    }

    Ok(ParsedChain {
        genesis: genesis.expect("block 0 parsed as config"),
        records,
        head: prev,
        blocks: segments.len() as u64,
    })
}

/// Verifies a serialized ledger without any broker state.
pub fn verify_bytes(bytes: &[u8]) -> VerifyReport {
    let total = {
        let mut segs: Vec<&[u8]> = bytes.split(|&b| b == b'\n').collect();
        if segs.last().is_some_and(|s| s.is_empty()) {
            segs.pop();
        }
        segs.len() as u64
    };
    match parse_chain(bytes) {
        Ok(chain) => VerifyReport { ok: true, blocks: chain.blocks, first_bad_index: None },
        Err((index, _)) => VerifyReport { ok: false, blocks: total, first_bad_index: Some(index) },
    }
}

pub fn verify_file(path: &Path) -> Result<VerifyReport> {
    Ok(verify_bytes(&std::fs::read(path)?))
}

/// Budget scope for utilization reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    All,
    Type(NType),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetReport {
    pub scope: Scope,
    pub epsilon_total: Eps,
    /// Sum of spends inside the scope.
    pub utilized: Eps,
    /// Always relative to overall spend: total minus spend across all scopes.
    pub remaining: Eps,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HistoryFilter {
    pub user_id: Option<String>,
    pub n_type: Option<NType>,
    /// Inclusive sequence-number range.
    pub seq_range: Option<(u64, u64)>,
}

impl HistoryFilter {
    fn admits(&self, rec: &LedgerRecord) -> bool {
        if let Some(u) = &self.user_id {
            if &rec.user_id != u {
                return false;
            }
        }
        if let Some(nt) = self.n_type {
            if rec.n_type != nt {
                return false;
            }
        }
        if let Some((lo, hi)) = self.seq_range {
            if rec.seq < lo || rec.seq > hi {
                return false;
            }
        }
        true
    }
}

#[derive(Debug)]
pub struct Ledger {
    path: PathBuf,
    file: File,
    genesis: GenesisConfig,
    records: Vec<LedgerRecord>,
    head: [u8; 32],
    blocks: u64,
}

impl Ledger {
    /// Starts a fresh ledger; refuses to clobber an existing file.
    pub fn create(path: &Path, epsilon_total: Eps, created_ms: u64) -> Result<Ledger> {
        if !epsilon_total.is_positive() {
            return Err(Error::BadEpsilon(epsilon_total.as_f64()));
        }
        let mut file = OpenOptions::new().write(true).create_new(true).open(path)?;
        let genesis = GenesisConfig { epsilon_total, created_ms };
        let (line, head) = render_line(&EntryBody::Config(genesis), &GENESIS_PREV);
        file.write_all(line.as_bytes())?;
        file.write_all(b"\n")?;
        file.sync_data()?;
        Ok(Ledger { path: path.to_path_buf(), file, genesis, records: Vec::new(), head, blocks: 1 })
    }

    /// Loads and fully verifies an existing ledger; any corruption refuses
    /// the open with the offending block index.
    pub fn open(path: &Path) -> Result<Ledger> {
        let bytes = std::fs::read(path)?;
        let chain = parse_chain(&bytes)
            .map_err(|(index, kind)| Error::LedgerCorrupt { index, kind })?;
        let file = OpenOptions::new().append(true).open(path)?;
        Ok(Ledger {
            path: path.to_path_buf(),
            file,
            genesis: chain.genesis,
            records: chain.records,
            head: chain.head,
            blocks: chain.blocks,
        })
    }

    pub fn open_or_create(path: &Path, epsilon_total: Eps, created_ms: u64) -> Result<Ledger> {
        if path.exists() {
            Ledger::open(path)
        } else {
            Ledger::create(path, epsilon_total, created_ms)
        }
    }

    /// Commits one release. The ledger assigns the sequence number; the
    /// write is flushed to disk before the call returns.
    pub fn append(&mut self, mut record: LedgerRecord) -> Result<u64> {
        if !record.epsilon_spent.is_positive() {
            return Err(Error::ZeroCharge);
        }
        if !record.released_value.is_finite()
            || !record.a_req.is_finite()
            || !record.a_act_estimate.is_finite()
        {
            return Err(Error::NonFiniteValue);
        }
        record.seq = self.records.len() as u64;
        let (line, head) = render_line(&EntryBody::Release(record.clone()), &self.head);
        self.file.write_all(line.as_bytes())?;
        self.file.write_all(b"\n")?;
        self.file.sync_data()?;
        let seq = record.seq;
        self.records.push(record);
        self.head = head;
        self.blocks += 1;
        Ok(seq)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn epsilon_total(&self) -> Eps {
        self.genesis.epsilon_total
    }

    pub fn genesis(&self) -> &GenesisConfig {
        &self.genesis
    }

    pub fn head_hash(&self) -> [u8; 32] {
        self.head
    }

    pub fn records(&self) -> &[LedgerRecord] {
        &self.records
    }

    /// Blocks on disk, genesis included.
    pub fn block_count(&self) -> u64 {
        self.blocks
    }

    /// Detects truncation or rewriting behind a live broker: the last block
    /// on disk must still be the head this ledger remembers.
    pub fn check_disk_head(&self) -> Result<()> {
        let bytes = std::fs::read(&self.path)?;
        let chain = parse_chain(&bytes)
            .map_err(|(index, kind)| Error::LedgerCorrupt { index, kind })?;
        if chain.head != self.head || chain.blocks != self.blocks {
            return Err(Error::LedgerHeadMismatch);
        }
        Ok(())
    }

    pub fn budget_query(&self, scope: Scope) -> BudgetReport {
        budget_of(&self.records, self.genesis.epsilon_total, scope)
    }

    pub fn history(&self, filter: &HistoryFilter) -> Vec<&LedgerRecord> {
        self.records.iter().filter(|r| filter.admits(r)).collect()
    }
}

fn budget_of(records: &[LedgerRecord], epsilon_total: Eps, scope: Scope) -> BudgetReport {
    let in_scope = |rec: &&LedgerRecord| match scope {
        Scope::All => true,
        Scope::Type(nt) => rec.n_type == nt,
    };
    let utilized: Eps = records.iter().filter(in_scope).map(|r| r.epsilon_spent).sum();
    let spent_all: Eps = records.iter().map(|r| r.epsilon_spent).sum();
    BudgetReport { scope, epsilon_total, utilized, remaining: epsilon_total - spent_all }
}

/// Read-only parsed view for auditors: full verification on load, no write
/// handle, so it works on files the auditor cannot modify.
#[derive(Debug)]
pub struct LedgerSnapshot {
    genesis: GenesisConfig,
    records: Vec<LedgerRecord>,
    head: [u8; 32],
    blocks: u64,
}

impl LedgerSnapshot {
    pub fn from_bytes(bytes: &[u8]) -> Result<LedgerSnapshot> {
        let chain =
            parse_chain(bytes).map_err(|(index, kind)| Error::LedgerCorrupt { index, kind })?;
        Ok(LedgerSnapshot {
            genesis: chain.genesis,
            records: chain.records,
            head: chain.head,
            blocks: chain.blocks,
        })
    }

    pub fn load(path: &Path) -> Result<LedgerSnapshot> {
        LedgerSnapshot::from_bytes(&std::fs::read(path)?)
    }

    pub fn genesis(&self) -> &GenesisConfig {
        &self.genesis
    }

    pub fn epsilon_total(&self) -> Eps {
        self.genesis.epsilon_total
    }

    pub fn records(&self) -> &[LedgerRecord] {
        &self.records
    }

    pub fn head_hash(&self) -> [u8; 32] {
        self.head
    }

    pub fn block_count(&self) -> u64 {
        self.blocks
    }

    pub fn budget_query(&self, scope: Scope) -> BudgetReport {
        budget_of(&self.records, self.genesis.epsilon_total, scope)
    }

    pub fn history(&self, filter: &HistoryFilter) -> Vec<&LedgerRecord> {
        self.records.iter().filter(|r| filter.admits(r)).collect()
    }
}
