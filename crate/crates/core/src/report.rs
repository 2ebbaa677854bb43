//! Instance and report file formats, and the mapping from failures to
//! process exit codes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diameter::{partition_diameters, DiameterError, DiameterOptions, Engine};
use crate::families::FamilyError;
use crate::field::{is_prime, FpMatrix, FpScalar, PrimeField};
use crate::group::{close_group, is_irreducible, orbits_on_v, AffineInstance, GroupError};
use crate::power_sums::SolverError;
use crate::witness::{certify_with, Branch, CertifyOptions, TargetPolicy, WitnessError, WitnessRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_CAP_EXCEEDED: i32 = 3;
pub const EXIT_REDUCIBLE: i32 = 4;
pub const EXIT_NOT_APPLICABLE: i32 = 5;
pub const EXIT_THEOREM_VIOLATION: i32 = 6;
pub const EXIT_BUDGET_EXCEEDED: i32 = 7;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("invalid instance: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Diameter(#[from] DiameterError),
    #[error(transparent)]
    Witness(#[from] WitnessError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

impl ReportError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ReportError::Parse(_) => EXIT_PARSE,
            ReportError::Io { .. } => EXIT_IO,
            ReportError::Group(e) => group_code(e),
            ReportError::Diameter(DiameterError::Reducible) => EXIT_REDUCIBLE,
            // A non-spanning orbit means the instance was reducible after all.
            ReportError::Diameter(DiameterError::NonSpanning { .. }) => EXIT_REDUCIBLE,
            ReportError::Witness(e) => match e {
                WitnessError::NotApplicable { .. } => EXIT_NOT_APPLICABLE,
                WitnessError::Reducible => EXIT_REDUCIBLE,
                WitnessError::Group(g) => group_code(g),
                WitnessError::Solver(SolverError::SearchBudgetExceeded { .. }) => EXIT_BUDGET_EXCEEDED,
                _ => EXIT_THEOREM_VIOLATION,
            },
            ReportError::Solver(SolverError::SearchBudgetExceeded { .. }) => EXIT_BUDGET_EXCEEDED,
            ReportError::Solver(_) => EXIT_PARSE,
            ReportError::Family(FamilyError::Group(g)) => group_code(g),
            ReportError::Family(_) => EXIT_PARSE,
        }
    }
}

fn group_code(e: &GroupError) -> i32 {
    match e {
        GroupError::CapExceeded { .. } => EXIT_CAP_EXCEEDED,
        GroupError::SpanFailure => EXIT_REDUCIBLE,
        _ => EXIT_PARSE,
    }
}

pub type Result<T> = std::result::Result<T, ReportError>;

/// On-disk instance: generators are lists of rows with entries in `[0, p)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub label: String,
    pub p: u64,
    pub d: usize,
    pub generators: Vec<Vec<Vec<u64>>>,
}

impl InstanceFile {
    pub fn from_instance(inst: &AffineInstance) -> Self {
        Self {
            label: inst.label().to_string(),
            p: inst.p() as u64,
            d: inst.dim(),
            generators: inst.generators().iter().map(matrix_rows).collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ReportError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    /// Validates the file and builds the instance.
    pub fn to_instance(&self) -> Result<AffineInstance> {
        let bad = |msg: String| Err(ReportError::Parse(msg));
        if self.p > u32::MAX as u64 || !is_prime(self.p) {
            return bad(format!("p = {} is not a supported prime", self.p));
        }
        if self.d == 0 {
            return bad("d must be positive".into());
        }
        if self.generators.is_empty() {
            return bad("at least one generator is required".into());
        }
        let field = PrimeField::new(self.p as u32).map_err(|e| ReportError::Parse(e.to_string()))?;
        let mut gens = Vec::with_capacity(self.generators.len());
        for (i, g) in self.generators.iter().enumerate() {
            if g.len() != self.d || g.iter().any(|row| row.len() != self.d) {
                return bad(format!("generator {i} is not {0}x{0}", self.d));
            }
            if let Some(&c) = g.iter().flatten().find(|&&c| c >= self.p) {
                return bad(format!("generator {i} has entry {c} outside [0, {})", self.p));
            }
            let entries = g.iter().flatten().map(|&c| c as FpScalar).collect();
            gens.push(FpMatrix::new(field, self.d, entries).map_err(|e| ReportError::Parse(e.to_string()))?);
        }
        AffineInstance::new(self.label.clone(), field, self.d, gens).map_err(|e| match e {
            GroupError::SingularGenerator(i) => ReportError::Parse(format!("generator {i} is singular")),
            other => ReportError::Group(other),
        })
    }
}

fn matrix_rows(m: &FpMatrix) -> Vec<Vec<u64>> {
    m.rows().into_iter().map(|r| r.iter().map(|&c| c as u64).collect()).collect()
}

pub fn load_instance(path: &Path) -> Result<AffineInstance> {
    let text = fs::read_to_string(path)
        .map_err(|source| ReportError::Io { path: path.display().to_string(), source })?;
    InstanceFile::from_json(&text)?.to_instance()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitRow {
    pub id: usize,
    pub representative: Vec<FpScalar>,
    pub size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directed_diameter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub undirected_diameter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_witness_length: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CertificationBlock {
    Certified {
        branch: Branch,
        k: Option<usize>,
        m: Option<usize>,
        max_witness_length: usize,
        bound: usize,
        branch_bound: usize,
        targets_exhaustive: bool,
        targets_per_orbit: usize,
        seed: u64,
        verified: bool,
    },
    NotApplicable {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportFile {
    pub instance: InstanceFile,
    pub group_order: usize,
    pub orbit_count: usize,
    pub orbits: Vec<OrbitRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overall_directed: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overall_undirected: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certification: Option<CertificationBlock>,
}

impl ReportFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn is_not_applicable(&self) -> bool {
        matches!(self.certification, Some(CertificationBlock::NotApplicable { .. }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiameterRun {
    pub undirected: bool,
    pub engine: Engine,
    pub cap: usize,
}

/// Exact orbital diameters for every nonzero orbit.
pub fn diameter_report(inst: &AffineInstance, run: DiameterRun) -> Result<ReportFile> {
    let group = close_group(inst, run.cap)?;
    let partition = orbits_on_v(inst);
    if !is_irreducible(inst, &partition) {
        return Err(DiameterError::Reducible.into());
    }
    let diam = partition_diameters(inst, &partition, DiameterOptions { undirected: run.undirected, engine: run.engine })?;
    Ok(ReportFile {
        instance: InstanceFile::from_instance(inst),
        group_order: group.order(),
        orbit_count: partition.len(),
        orbits: diam
            .orbits
            .into_iter()
            .map(|o| OrbitRow {
                id: o.id,
                representative: o.representative,
                size: o.size,
                directed_diameter: Some(o.directed_diameter),
                undirected_diameter: o.undirected_diameter,
                max_witness_length: None,
            })
            .collect(),
        overall_directed: Some(diam.overall_directed),
        overall_undirected: diam.overall_undirected,
        certification: None,
    })
}

/// Certification report, optionally with exact diameters alongside. When p
/// does not divide |G| the report carries a not-applicable marker instead of
/// failing. Also returns the longest witness found for each orbit.
pub fn certify_report(
    inst: &AffineInstance,
    options: CertifyOptions,
    diameters: Option<DiameterRun>,
) -> Result<(ReportFile, Vec<WitnessRecord>)> {
    let mut report = match diameters {
        Some(run) => diameter_report(inst, DiameterRun { cap: options.cap, ..run })?,
        None => {
            let group = close_group(inst, options.cap)?;
            let partition = orbits_on_v(inst);
            ReportFile {
                instance: InstanceFile::from_instance(inst),
                group_order: group.order(),
                orbit_count: partition.len(),
                orbits: partition
                    .orbits()
                    .iter()
                    .map(|o| OrbitRow {
                        id: o.id(),
                        representative: o.representative().coords().to_vec(),
                        size: o.size(),
                        directed_diameter: None,
                        undirected_diameter: None,
                        max_witness_length: None,
                    })
                    .collect(),
                overall_directed: None,
                overall_undirected: None,
                certification: None,
            }
        }
    };
    let group = close_group(inst, options.cap)?;
    let partition = orbits_on_v(inst);
    let cert = match certify_with(inst, &group, &partition, options) {
        Ok(c) => c,
        Err(WitnessError::NotApplicable { p, group_order }) => {
            report.certification = Some(CertificationBlock::NotApplicable {
                reason: format!("p = {p} does not divide |G| = {group_order}"),
            });
            return Ok((report, Vec::new()));
        }
        Err(e) => return Err(e.into()),
    };
    let space = inst.space();
    let mut witnesses = Vec::new();
    for (row, oc) in report.orbits.iter_mut().zip(&cert.orbits) {
        row.max_witness_length = Some(oc.max_length);
        if let Some(w) = &oc.longest {
            witnesses.push(w.record(space, &partition.orbits()[oc.orbit]));
        }
    }
    let verified = cert.verified && witnesses.iter().all(|w| w.verified);
    report.certification = Some(CertificationBlock::Certified {
        branch: cert.branch,
        k: cert.k,
        m: cert.m,
        max_witness_length: cert.max_witness_length,
        bound: cert.bound,
        branch_bound: cert.branch_bound,
        targets_exhaustive: cert.targets_exhaustive,
        targets_per_orbit: cert.orbits.first().map_or(0, |o| o.targets_checked),
        seed: options.seed,
        verified,
    });
    Ok((report, witnesses))
}

/// Parses `all` or a sample size.
pub fn parse_targets(s: &str) -> std::result::Result<TargetPolicy, String> {
    match s {
        "all" => Ok(TargetPolicy::All),
        "auto" => Ok(TargetPolicy::Auto),
        n => n
            .parse()
            .map(TargetPolicy::Sample)
            .map_err(|_| format!("expected `all`, `auto` or a sample size, got `{n}`")),
    }
}
