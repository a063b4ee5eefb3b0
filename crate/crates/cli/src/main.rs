use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use pepfrag::fragment::{
    fragment_amino_acid, fragment_peptide, FragmentOptions, FragmentPlan, ResidueLibrary, Strategy,
};
use pepfrag::hf::{run_scf, ScfOptions, SpinTreatment};
use pepfrag::molio::pubchem::offline_from_env;
use pepfrag::molio::{parse_sdf, Dataset, Identifier, Molecule, PubChemClient};
use pepfrag::pipeline::{diff_golden, reference_reports, run_pipeline, PipelineConfig};
use pepfrag::reassembly::{reassemble, resolve_energy, EnergyEngine, EnergyTable, HfEngine};

#[derive(Parser)]
#[command(name = "pepfrag", version, about = "Fragment-based Hartree–Fock energies for peptides")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    PeptideLevel,
    AminoAcidLevel,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Hartree–Fock/STO-3G energy of one SDF structure.
    Energy {
        sdf: PathBuf,
        /// Unrestricted even for singlets.
        #[arg(long)]
        uhf: bool,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        charge: i32,
        /// Defaults to the lowest value allowed by the electron count.
        #[arg(long)]
        multiplicity: Option<u32>,
        /// Recompute integrals every iteration instead of storing them.
        #[arg(long)]
        direct: bool,
        /// Print the full result as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Fragment one SDF structure and, unless --dry-run, reassemble its energy.
    Fragment {
        sdf: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Print the plan only; no SCF.
        #[arg(long)]
        dry_run: bool,
        /// Cap residues in place instead of substituting library amino acids.
        #[arg(long)]
        capping: bool,
        /// Dataset directory with templates and species.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Reference reports from tabulated energies; --golden diffs them
    /// against the bundled golden files.
    Report {
        #[arg(long)]
        golden: bool,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Write the report files here instead of printing them.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Download a compound SDF by CID or name.
    Fetch {
        identifier: String,
        #[arg(long, default_value = ".pepfrag-cache/pubchem")]
        cache: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn read_molecule(path: &Path) -> Result<Molecule> {
    let raw = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_sdf(&raw).with_context(|| format!("parsing {}", path.display()))
}

fn load_dataset(dir: Option<PathBuf>) -> Result<Dataset> {
    let dir = dir.unwrap_or_else(Dataset::default_dir);
    Dataset::load(&dir).with_context(|| format!("loading dataset from {}", dir.display()))
}

fn cmd_run(config: &Path) -> Result<ExitCode> {
    let config = PipelineConfig::from_file(config)?;
    let outcome = run_pipeline(&config)?;
    for (mode, report) in &outcome.reports {
        match report.summary {
            Some(s) => println!("{mode}: {} rows, mean RE {:.5}% ± {:.5}%", s.n, s.mean, s.std),
            None => println!("{mode}: {} rows", report.rows.len() + report.unreferenced.len()),
        }
    }
    println!(
        "SCF runs: {}, cache hits: {}, output: {}",
        outcome.scf_invocations,
        outcome.cache_hits,
        config.output.dir.display()
    );
    if outcome.succeeded() {
        return Ok(ExitCode::SUCCESS);
    }
    for f in &outcome.failures {
        eprintln!("failed: {} ({:?}): {}", f.label, f.stage, f.message);
    }
    eprintln!("{} row(s) failed; see failures.json", outcome.failures.len());
    Ok(ExitCode::from(2))
}

fn cmd_energy(sdf: &Path, uhf: bool, charge: i32, multiplicity: Option<u32>, direct: bool, json: bool) -> Result<ExitCode> {
    let m = read_molecule(sdf)?.with_charge_and_multiplicity(charge, multiplicity)?;
    let spin = if uhf { SpinTreatment::Unrestricted } else { SpinTreatment::Auto };
    let opts = ScfOptions {
        integral_direct: direct,
        ..Default::default()
    };
    let r = run_scf(&m, spin, &opts)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&r)?);
    } else {
        println!("{} {} charge {} multiplicity {}", m.name(), r.method, m.net_charge(), m.multiplicity());
        println!("E_total = {:.10} Ha", r.total_energy);
        println!("converged = {} after {} iterations", r.converged, r.iterations);
        if let Some(s2) = r.s_squared {
            println!("<S^2> = {s2:.6}");
        }
    }
    Ok(if r.converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_fragment(sdf: &Path, mode: ModeArg, dry_run: bool, capping: bool, data: Option<PathBuf>) -> Result<ExitCode> {
    let m = read_molecule(sdf)?;
    let plan: FragmentPlan = match mode {
        ModeArg::PeptideLevel => {
            let library = ResidueLibrary::from_dataset(&load_dataset(data)?);
            let options = FragmentOptions {
                strategy: if capping { Strategy::Capping } else { Strategy::Library },
                ..Default::default()
            };
            fragment_peptide(&m, &library, options)?
        }
        ModeArg::AminoAcidLevel => fragment_amino_acid(&m)?,
    };
    if dry_run {
        println!("{}", serde_json::to_string_pretty(&plan)?);
        return Ok(ExitCode::SUCCESS);
    }
    let engine = HfEngine::default();
    let mut table = EnergyTable::new(engine.level());
    for f in &plan.fragments {
        resolve_energy(&f.label, &f.molecule, &engine, &mut table)?;
    }
    for c in &plan.corrections {
        resolve_energy(&c.label, &c.species, &engine, &mut table)?;
    }
    let result = reassemble(&plan, &table)?;
    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(golden: bool, data: Option<PathBuf>, out: Option<PathBuf>) -> Result<ExitCode> {
    let dir = data.clone().unwrap_or_else(Dataset::default_dir);
    let dataset = load_dataset(data)?;
    if golden {
        let diffs = diff_golden(&dataset, &dir.join("golden"))?;
        if diffs.is_empty() {
            println!("golden reports match");
            return Ok(ExitCode::SUCCESS);
        }
        for d in &diffs {
            println!("{d}");
        }
        return Ok(ExitCode::from(1));
    }
    for (file, report) in reference_reports(&dataset)? {
        match &out {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join(file), report.to_csv_string())?;
            }
            None => {
                println!("# {file}");
                print!("{}", report.to_csv_string());
                if let Some(s) = report.summary {
                    println!("# mean RE {:.5}% ± {:.5}% (n = {})", s.mean, s.std, s.n);
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_fetch(identifier: &str, cache: &Path, out: Option<PathBuf>) -> Result<ExitCode> {
    let id: Identifier = identifier.parse()?;
    let client = PubChemClient::new(cache).offline(offline_from_env());
    let fetched = client.fetch(&id)?;
    if let Some(w) = &fetched.warning {
        log::warn!("{w}");
    }
    let m = parse_sdf(&fetched.bytes).context("PubChem returned an unreadable SDF")?;
    eprintln!("{}: {} ({} atoms)", id, m.formula(), m.len());
    match out {
        Some(path) => std::fs::write(&path, &fetched.bytes).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(&fetched.bytes)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Energy { sdf, uhf, charge, multiplicity, direct, json } => {
            cmd_energy(&sdf, uhf, charge, multiplicity, direct, json)
        }
        Command::Fragment { sdf, mode, dry_run, capping, data } => cmd_fragment(&sdf, mode, dry_run, capping, data),
        Command::Report { golden, data, out } => cmd_report(golden, data, out),
        Command::Fetch { identifier, cache, out } => cmd_fetch(&identifier, &cache, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
