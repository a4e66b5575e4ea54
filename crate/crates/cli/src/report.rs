//! Reports: per-check records, tables and convergence traces.
//!
//! Every float is written as a decimal string with 17 significant digits and
//! every complex number as `[re, im]`, so reports round-trip doubles and are
//! byte-identical across runs.

use kernel_duality::Cdd;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn cnum(z: Complex64) -> [String; 2] {
    [num(z.re), num(z.im)]
}

pub fn cdd(z: Cdd) -> [String; 2] {
    cnum(z.to_c64())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Record {
    pub check: String,
    pub anchor: &'static str,
    pub inputs_digest: String,
    pub residual: String,
    pub bound: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TraceRow {
    pub n: usize,
    pub value: [String; 2],
    pub bound: Option<String>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Trace {
    pub name: String,
    pub rows: Vec<TraceRow>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Environment {
    pub version: &'static str,
    pub config_digest: String,
}

/// Output of one subcommand.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Section {
    pub command: &'static str,
    pub records: Vec<Record>,
    pub tables: Value,
    pub traces: Vec<Trace>,
    /// Set when the command refused to run outside the theorem regime.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refusal: Option<String>,
}

impl Section {
    pub fn new(command: &'static str) -> Self {
        Section { command, records: Vec::new(), tables: json!({}), traces: Vec::new(), refusal: None }
    }

    pub fn pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Report {
    pub environment: Environment,
    pub sections: Vec<Section>,
    pub pass: bool,
}

impl Report {
    pub fn new(config_digest: String, sections: Vec<Section>) -> Self {
        let pass = sections.iter().all(|s| s.pass() && s.refusal.is_none());
        Report { environment: Environment { version: env!("CARGO_PKG_VERSION"), config_digest }, sections, pass }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// `trace,n,re,im,bound` rows for every trace of every section.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("command,trace,n,re,im,bound\n");
        for sec in &self.sections {
            for t in &sec.traces {
                for r in &t.rows {
                    let bound = r.bound.as_deref().unwrap_or("");
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        sec.command, t.name, r.n, r.value[0], r.value[1], bound
                    ));
                }
            }
        }
        out
    }

    pub fn records(&self) -> impl Iterator<Item = &Record> {
        self.sections.iter().flat_map(|s| &s.records)
    }
}

/// Builds records whose inputs digest chains the config digest, the command
/// and a description of the check's own inputs.
pub struct Recorder<'a> {
    pub config_digest: &'a str,
    pub command: &'static str,
}

impl Recorder<'_> {
    /// Pass iff `residual <= bound`; NaN fails.
    pub fn record(
        &self,
        check: impl Into<String>,
        anchor: &'static str,
        inputs: &str,
        residual: f64,
        bound: f64,
    ) -> Record {
        let check = check.into();
        let digest = sha256_hex(format!("{}|{}|{}|{}", self.config_digest, self.command, check, inputs).as_bytes());
        Record {
            pass: residual <= bound,
            check,
            anchor,
            inputs_digest: digest[..16].to_string(),
            residual: num(residual),
            bound: num(bound),
        }
    }
}
