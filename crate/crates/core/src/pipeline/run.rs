use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fragment::{
    detect_peptide_bonds, detect_special_links, fragment_amino_acid, fragment_peptide, FragmentPlan, Mode,
    ResidueLibrary,
};
use crate::hf::ScfResult;
use crate::metrics::{ErrorReport, ErrorRow, UnreferencedRow};
use crate::molio::pubchem::offline_from_env;
use crate::molio::{parse_sdf, Dataset, DatasetError, Identifier, Molecule, PubChemClient, Role};
use crate::reassembly::{
    reassemble, EnergyEngine, EnergyKey, EnergyRecord, EnergyTable, Fingerprint, HfEngine, Provenance, ReassemblyResult,
};

use super::cache::{CacheRecord, DiskCache};
use super::config::{ConfigError, PipelineConfig, RunMode, SourceKind};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("dataset: {0}")]
    Dataset(#[from] DatasetError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("reference report: {0}")]
    Reference(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Input,
    Fragment,
    Energy,
    Reassemble,
    Metrics,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Failure {
    pub label: String,
    pub mode: Option<Mode>,
    pub stage: Stage,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Fragment,
    Correction,
    GroundTruth,
}

/// One SCF run, as written to `scf_log.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScfLogEntry {
    pub labels: Vec<String>,
    pub purpose: Purpose,
    pub fingerprint: String,
    pub method: String,
    pub energy: f64,
    pub converged: bool,
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub final_energy_change: f64,
    pub s_squared: Option<f64>,
    pub level_shift_used: bool,
    pub direct_minimization_used: bool,
    pub nbf: usize,
}

impl ScfLogEntry {
    fn new(req: &Request, r: &ScfResult) -> Self {
        Self {
            labels: req.labels.iter().cloned().collect(),
            purpose: req.purpose,
            fingerprint: req.fingerprint.hash.clone(),
            method: r.method.clone(),
            energy: r.total_energy,
            converged: r.converged,
            iterations: r.iterations,
            final_gradient_norm: r.final_gradient_norm,
            final_energy_change: r.final_energy_change,
            s_squared: r.s_squared,
            level_shift_used: r.level_shift_used,
            direct_minimization_used: r.direct_minimization_used,
            nbf: r.nbf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GtSource {
    Dataset,
    Computed,
}

/// Per-molecule breakdown written to `molecules/<mode>/<label>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MoleculeReport {
    pub label: String,
    pub mode: Mode,
    pub gt: Option<f64>,
    pub gt_source: Option<GtSource>,
    pub em: f64,
    pub re_pct: Option<f64>,
    pub reassembly: ReassemblyResult,
    pub plan: FragmentPlan,
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOutcome {
    pub reports: BTreeMap<Mode, ErrorReport>,
    pub molecules: Vec<MoleculeReport>,
    pub failures: Vec<Failure>,
    pub scf_log: Vec<ScfLogEntry>,
    pub scf_invocations: usize,
    pub cache_hits: usize,
}

impl PipelineOutcome {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

struct Input {
    label: String,
    molecule: Molecule,
    role: Option<Role>,
    gt: Option<f64>,
}

struct Request {
    fingerprint: Fingerprint,
    molecule: Molecule,
    labels: BTreeSet<String>,
    purpose: Purpose,
}

fn gather_inputs(config: &PipelineConfig, dataset: &Dataset, failures: &mut Vec<Failure>) -> Vec<Input> {
    let fail = |label: &str, message: String| Failure {
        label: label.to_string(),
        mode: None,
        stage: Stage::Input,
        message,
    };
    let i = &config.input;
    match i.source {
        SourceKind::Fixtures => {
            let roles: Vec<Role> = match (i.role, config.run.mode) {
                (Some(r), _) => vec![r],
                (None, RunMode::PeptideLevel) => vec![Role::Peptide],
                (None, RunMode::AminoAcidLevel) => vec![Role::AminoAcid],
                (None, RunMode::Both) => vec![Role::Peptide, Role::AminoAcid],
            };
            let entries: Vec<_> = if i.labels.is_empty() {
                dataset.entries().iter().filter(|e| roles.contains(&e.role)).collect()
            } else {
                i.labels.iter().filter_map(|l| dataset.get(l)).collect()
            };
            entries
                .into_iter()
                .map(|e| Input {
                    label: e.label.clone(),
                    molecule: e.molecule.clone(),
                    role: Some(e.role),
                    gt: e.ground_truth_energy,
                })
                .collect()
        }
        SourceKind::SdfDir => {
            let dir = i.dir.as_ref().expect("validated");
            let mut paths: Vec<PathBuf> = match std::fs::read_dir(dir) {
                Ok(rd) => rd
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("sdf")))
                    .collect(),
                Err(e) => {
                    failures.push(fail(&dir.display().to_string(), e.to_string()));
                    return Vec::new();
                }
            };
            paths.sort();
            let mut out = Vec::new();
            for p in paths {
                let label = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                match std::fs::read(&p).map_err(|e| e.to_string()).and_then(|b| parse_sdf(&b).map_err(|e| e.to_string()))
                {
                    Ok(m) => out.push(Input { molecule: m.with_name(label.clone()), label, role: None, gt: None }),
                    Err(e) => failures.push(fail(&label, e)),
                }
            }
            out
        }
        SourceKind::Pubchem => {
            let client = PubChemClient::new(config.cache.path.join("pubchem")).offline(offline_from_env());
            let mut out = Vec::new();
            for raw in &i.identifiers {
                let id: Identifier = raw.parse().expect("validated");
                let fetched = client
                    .fetch(&id)
                    .map_err(|e| e.to_string())
                    .and_then(|f| {
                        if let Some(w) = &f.warning {
                            log::warn!("{w}");
                        }
                        parse_sdf(&f.bytes).map_err(|e| e.to_string())
                    });
                match fetched {
                    Ok(m) => out.push(Input {
                        molecule: m.with_name(raw.clone()),
                        label: raw.clone(),
                        role: None,
                        gt: None,
                    }),
                    Err(e) => failures.push(fail(raw, e)),
                }
            }
            out
        }
    }
}

fn mode_for(input: &Input, mode: RunMode) -> Mode {
    match (mode, input.role) {
        (RunMode::PeptideLevel, _) => Mode::PeptideLevel,
        (RunMode::AminoAcidLevel, _) => Mode::AminoAcidLevel,
        (RunMode::Both, Some(Role::Peptide)) => Mode::PeptideLevel,
        (RunMode::Both, Some(_)) => Mode::AminoAcidLevel,
        (RunMode::Both, None) => {
            if detect_peptide_bonds(&input.molecule).is_empty() && detect_special_links(&input.molecule).is_empty() {
                Mode::AminoAcidLevel
            } else {
                Mode::PeptideLevel
            }
        }
    }
}

/// Runs the configured batch with the built-in Hartree–Fock engine and
/// writes every artifact under `config.output.dir`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome, PipelineError> {
    let engine = HfEngine {
        spin: config.run.spin,
        options: config.scf.clone(),
    };
    let outcome = execute(config, &engine)?;
    write_outputs(&outcome, &config.output.dir)?;
    Ok(outcome)
}

/// Runs the batch without writing artifacts.
pub fn execute(config: &PipelineConfig, engine: &dyn EnergyEngine) -> Result<PipelineOutcome, PipelineError> {
    let dataset = Dataset::load(config.data_dir())?;
    config.validate(&dataset)?;
    let library = ResidueLibrary::from_dataset(&dataset);
    let mut out = PipelineOutcome::default();
    let inputs = gather_inputs(config, &dataset, &mut out.failures);

    let mut jobs: Vec<(usize, FragmentPlan)> = Vec::new();
    let mut modes_run = BTreeSet::new();
    for (k, input) in inputs.iter().enumerate() {
        let mode = mode_for(input, config.run.mode);
        modes_run.insert(mode);
        let plan = match mode {
            Mode::PeptideLevel => fragment_peptide(&input.molecule, &library, config.run.fragmentation),
            Mode::AminoAcidLevel => fragment_amino_acid(&input.molecule),
        };
        match plan {
            Ok(p) => jobs.push((k, p)),
            Err(e) => out.failures.push(Failure {
                label: input.label.clone(),
                mode: Some(mode),
                stage: Stage::Fragment,
                message: e.to_string(),
            }),
        }
    }

    let level = engine.level();
    let mut table = EnergyTable::new(level);
    let mut requests: BTreeMap<String, Request> = BTreeMap::new();
    let mut want = |label: &str, m: &Molecule, purpose: Purpose| {
        let fp = Fingerprint::new(m, &level);
        requests
            .entry(fp.hash.clone())
            .or_insert_with(|| Request {
                fingerprint: fp,
                molecule: m.clone(),
                labels: BTreeSet::new(),
                purpose,
            })
            .labels
            .insert(label.to_string());
    };
    for (k, plan) in &jobs {
        for f in &plan.fragments {
            want(&f.label, &f.molecule, Purpose::Fragment);
        }
        for c in &plan.corrections {
            want(&c.label, &c.species, Purpose::Correction);
        }
        if config.run.compute_ground_truth {
            want(&inputs[*k].label, &inputs[*k].molecule, Purpose::GroundTruth);
        }
    }

    let cache = config.cache.enabled.then(|| DiskCache::new(&config.cache.path));
    let mut pending = Vec::new();
    for req in requests.values() {
        match cache.as_ref().and_then(|c| c.get(&req.fingerprint)) {
            Some(hit) => {
                out.cache_hits += 1;
                let record = EnergyRecord {
                    energy: hit.energy,
                    converged: hit.converged,
                    provenance: Provenance::Cache,
                    method: hit.method,
                    iterations: Some(hit.iterations),
                };
                for label in &req.labels {
                    table
                        .insert(EnergyKey::new(label, req.fingerprint.clone()), record.clone())
                        .expect("fresh table");
                }
            }
            None => pending.push(req),
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.run.parallelism)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    let label_of = |req: &Request| req.labels.iter().next().cloned().unwrap_or_default();
    let computed: Vec<_> = pool.install(|| {
        pending
            .par_iter()
            .map(|req| {
                let label = label_of(req);
                log::info!("SCF {label} ({} atoms)", req.molecule.len());
                let r = engine.compute(&label, &req.molecule);
                if let (Ok(r), Some(c)) = (&r, &cache) {
                    if r.converged {
                        if let Err(e) = c.put(&CacheRecord::from_scf(&req.fingerprint, r)) {
                            log::warn!("cache write for {label} failed: {e}");
                        }
                    }
                }
                r
            })
            .collect()
    });
    let mut energy_errors: BTreeMap<String, String> = BTreeMap::new();
    for (req, r) in pending.iter().zip(computed) {
        out.scf_invocations += 1;
        match r {
            Ok(r) => {
                out.scf_log.push(ScfLogEntry::new(req, &r));
                for label in &req.labels {
                    table
                        .insert(EnergyKey::new(label, req.fingerprint.clone()), EnergyRecord::from_scf(&r))
                        .expect("fresh table");
                }
            }
            Err(e) => {
                energy_errors.insert(req.fingerprint.hash.clone(), e.to_string());
            }
        }
    }

    let mut rows: BTreeMap<Mode, (Vec<ErrorRow>, Vec<UnreferencedRow>)> =
        modes_run.iter().map(|&m| (m, Default::default())).collect();
    for (k, plan) in jobs {
        let input = &inputs[k];
        let fail = |stage: Stage, message: String| Failure {
            label: input.label.clone(),
            mode: Some(plan.mode),
            stage,
            message,
        };
        let needed = plan
            .fragments
            .iter()
            .map(|f| &f.molecule)
            .chain(plan.corrections.iter().map(|c| &c.species))
            .chain(config.run.compute_ground_truth.then_some(&input.molecule));
        if let Some(msg) = needed
            .filter_map(|m| energy_errors.get(&Fingerprint::new(m, &level).hash))
            .next()
        {
            out.failures.push(fail(Stage::Energy, msg.clone()));
            continue;
        }
        let result = match reassemble(&plan, &table) {
            Ok(r) => r,
            Err(e) => {
                out.failures.push(fail(Stage::Reassemble, e.to_string()));
                continue;
            }
        };
        let (gt, gt_source) = if config.run.compute_ground_truth {
            match table.energy(&input.label, &input.molecule) {
                Ok(e) => (Some(e), Some(GtSource::Computed)),
                Err(e) => {
                    out.failures.push(fail(Stage::Reassemble, format!("ground truth: {e}")));
                    continue;
                }
            }
        } else {
            (input.gt, input.gt.map(|_| GtSource::Dataset))
        };
        let entry = rows.get_mut(&plan.mode).expect("mode registered");
        let re_pct = match gt {
            Some(gt) => match ErrorRow::new(input.label.clone(), gt, result.em) {
                Ok(row) => {
                    let re = row.re_pct;
                    entry.0.push(row);
                    Some(re)
                }
                Err(e) => {
                    out.failures.push(fail(Stage::Metrics, e.to_string()));
                    continue;
                }
            },
            None => {
                entry.1.push(UnreferencedRow { label: input.label.clone(), em: result.em });
                None
            }
        };
        out.molecules.push(MoleculeReport {
            label: input.label.clone(),
            mode: plan.mode,
            gt,
            gt_source,
            em: result.em,
            re_pct,
            reassembly: result,
            plan,
        });
    }
    out.reports = rows
        .into_iter()
        .map(|(m, (r, u))| (m, ErrorReport::with_unreferenced(r, u)))
        .collect();
    out.molecules.sort_by(|a, b| (a.mode, &a.label).cmp(&(b.mode, &b.label)));
    out.failures.sort();
    out.scf_log.sort_by(|a, b| (&a.labels, &a.fingerprint).cmp(&(&b.labels, &b.fingerprint)));
    Ok(out)
}

/// File-name-safe form of a label.
pub fn slug(label: &str) -> String {
    let mut s = String::with_capacity(label.len());
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            s.push(c.to_ascii_lowercase());
        } else if !s.ends_with('_') {
            s.push('_');
        }
    }
    s.trim_matches('_').to_string()
}

#[derive(Serialize)]
struct FailureSummary<'a> {
    failed: usize,
    failures: &'a [Failure],
}

#[derive(Serialize)]
struct RunSummary {
    molecules: usize,
    failed: usize,
    scf_invocations: usize,
    cache_hits: usize,
}

/// Writes summary CSV and JSON per mode, per-molecule JSON, the SCF log,
/// the failure summary and run counters.
pub fn write_outputs(outcome: &PipelineOutcome, dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let write = |path: PathBuf, bytes: &[u8]| -> Result<(), PipelineError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        std::fs::write(&path, bytes).map_err(io_err(&path))
    };
    for (mode, report) in &outcome.reports {
        write(dir.join(format!("summary_{mode}.csv")), report.to_csv_string().as_bytes())?;
        write(dir.join(format!("report_{mode}.json")), report.to_json().as_bytes())?;
    }
    for m in &outcome.molecules {
        let json = serde_json::to_vec_pretty(m).expect("report serializes");
        write(dir.join("molecules").join(m.mode.to_string()).join(format!("{}.json", slug(&m.label))), &json)?;
    }
    let mut log = String::new();
    for e in &outcome.scf_log {
        log.push_str(&serde_json::to_string(e).expect("log serializes"));
        log.push('\n');
    }
    write(dir.join("scf_log.jsonl"), log.as_bytes())?;
    let failures = FailureSummary {
        failed: outcome.failures.len(),
        failures: &outcome.failures,
    };
    write(dir.join("failures.json"), &serde_json::to_vec_pretty(&failures).expect("serializes"))?;
    let run = RunSummary {
        molecules: outcome.molecules.len(),
        failed: outcome.failures.len(),
        scf_invocations: outcome.scf_invocations,
        cache_hits: outcome.cache_hits,
    };
    write(dir.join("run.json"), &serde_json::to_vec_pretty(&run).expect("serializes"))?;
    Ok(())
}
