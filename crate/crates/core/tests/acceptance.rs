//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! non-zero when the set of failing criteria differs from `EXPECTED_RED`.
//!
//! Set `PEPFRAG_SLOW=1` to include the slow end-to-end tier (all twenty
//! peptides).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use pepfrag::fragment::{
    fragment_amino_acid, fragment_peptide, identify_residue, BondKind, EsterConvention, FragmentOptions, FragmentPlan,
    Residue, ResidueLibrary,
};
use pepfrag::hf::integrals::{eri_element, kinetic_matrix, nuclear_matrix, overlap_matrix};
use pepfrag::hf::{build_basis, run_scf, ScfOptions, SpinTreatment, BOHR_PER_ANGSTROM};
use pepfrag::metrics::{relative_error_pct, summarize};
use pepfrag::molio::{parse_sdf, Atom, Dataset, Element, Molecule, Role};
use pepfrag::pipeline::{execute, write_outputs, PipelineConfig, PipelineOutcome};
use pepfrag::reassembly::{reassemble, EnergyTable, HfEngine, LevelOfTheory};
use serde_json::Value;

const ORACLE_TOL: f64 = 1e-6;
const GT_SUBSET_TOL: f64 = 5e-3;
const ARITHMETIC_TOL: f64 = 1e-4;
const ROW_RE_TOL: f64 = 1e-5;
const PEPTIDE_SUMMARY_TOL: f64 = 1e-4;
const AMINO_SUMMARY_TOL: f64 = 1e-3;
const END_TO_END_TOL_PP: f64 = 2e-3;
const TRANSLATION_TOL: f64 = 1e-8;
const ROTATION_TOL: f64 = 1e-6;
const SYMMETRY_TOL: f64 = 1e-10;
const AMINO_LEVEL_TOL_PCT: f64 = 0.5;

/// Criteria currently red, with the analysis kept in the project notes.
/// A criterion leaving or joining this set fails the suite.
const EXPECTED_RED: &[&str] = &["6c", "7"];

/// Printed peptide results: label, GT, Em, RE %.
const PEPTIDE_TABLE: [(&str, f64, f64, f64); 20] = [
    ("Gly-Gly", -483.23779, -483.25713, 0.00400),
    ("Gly-Ala", -521.82046, -521.83697, 0.00317),
    ("Gly-Ser", -595.64593, -595.66156, 0.00262),
    ("Carnosine (Ala-His)", -781.24420, -781.25935, 0.00194),
    ("Aspartame (Asp-Phe)", -1010.80954, -1011.31538, 0.05004),
    ("Cystine (Cys-Cys)", -1420.58943, -1420.59711, 0.00054),
    ("Leu-Thr", -788.53834, -788.55273, 0.00182),
    ("Thr-Lys", -842.85520, -842.87108, 0.00188),
    ("Trp-His", -1137.12083, -1137.14177, 0.00184),
    ("Phe-Ile", -902.88517, -902.89959, 0.00160),
    ("Arg-Met", -1308.21468, -1308.22803, 0.00102),
    ("Ser-Cys", -1027.39113, -1027.40735, 0.00158),
    ("Tyr-Asp", -1046.06184, -1046.07719, 0.00147),
    ("Glu-Gly", -745.47664, -745.49542, 0.00252),
    ("His-Arg-Val", -1378.59438, -1378.62213, 0.00201),
    ("Val-Asp-Ser", -1139.16790, -1139.19877, 0.00271),
    ("Gly-His-Lys", -1155.42028, -1155.45421, 0.00294),
    ("Val-Ala-Ser", -954.09354, -954.12300, 0.00309),
    ("Gly-Val-Ala", -841.68835, -841.71857, 0.00359),
    ("Ser-Gly-Glu", -1062.00937, -1062.04546, 0.00340),
];

/// Printed amino-acid results: label, GT, Em, RE %.
const AMINO_TABLE: [(&str, f64, f64, f64); 20] = [
    ("Histidine", -538.53389, -537.58932, 0.17540),
    ("Leucine", -433.42225, -434.01055, 0.13573),
    ("Isoleucine", -433.42805, -434.01055, 0.13439),
    ("Lysine", -487.74061, -487.36827, 0.076339),
    ("Methionine", -788.02139, -787.09064, 0.11811),
    ("Phenylalanine", -544.43743, -544.04328, 0.072395),
    ("Threonine", -430.09637, -429.12416, 0.22604),
    ("Tryptophan", -673.57378, -673.15017, 0.062891),
    ("Valine", -394.84750, -394.45688, 0.098928),
    ("Arginine", -595.17255, -594.18510, 0.16591),
    ("Cysteine", -710.85730, -715.26885, 0.62060),
    ("Glutamine", -521.82179, -516.80354, 0.96168),
    ("Asparagine", -483.23923, -479.61163, 0.75068),
    ("Tyrosine", -618.27595, -611.07066, 1.1654),
    ("Serine", -391.51594, -391.12360, 0.10021),
    ("Glycine", -279.11151, -278.67407, 0.15673),
    ("Aspartic acid", -502.76713, -502.31178, 0.090569),
    ("Glutamic acid", -541.34980, -540.89235, 0.084502),
    ("Proline", -393.70020, -393.87365, 0.044055),
    ("Alanine", -317.69136, -317.28420, 0.12816),
];

const SPECIES_ENERGIES: [(&str, f64); 3] = [("H2O", -74.96589), ("H2", -1.11749), ("CH3", -39.07671)];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    Skip,
}

struct Verdict {
    id: &'static str,
    title: &'static str,
    status: Status,
    detail: String,
}

impl Verdict {
    fn new(id: &'static str, title: &'static str, ok: bool, detail: String) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self { id, title, status, detail }
    }
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn load(rel: &str) -> Molecule {
    let path = data_dir().join(rel);
    parse_sdf(&std::fs::read(&path).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn energy(m: &Molecule) -> f64 {
    let r = run_scf(m, SpinTreatment::Auto, &ScfOptions::default()).unwrap();
    assert!(r.converged, "{} did not converge", m.name());
    r.total_energy
}

fn oracle_molecule(rec: &Value, name: &str) -> Molecule {
    let scale = if rec["unit"] == "Bohr" { 1.0 / BOHR_PER_ANGSTROM } else { 1.0 };
    let atoms = rec["atoms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| {
            let e: Element = a[0].as_str().unwrap().parse().unwrap();
            let p: Vec<f64> = a[1].as_array().unwrap().iter().map(|x| x.as_f64().unwrap() * scale).collect();
            Atom::new(e, [p[0], p[1], p[2]])
        })
        .collect();
    Molecule::new(name, atoms, vec![], 0, None).unwrap()
}

fn criterion_1() -> Verdict {
    let oracles: Value = serde_json::from_str(include_str!("data/oracles.json")).unwrap();
    let sys = &oracles["systems"];
    let cases = [
        ("H2", oracle_molecule(&sys["h2"], "H2"), sys["h2"]["energy"].as_f64().unwrap()),
        ("H2O", load("species/h2o.sdf"), sys["water"]["energy"].as_f64().unwrap()),
        ("CH4", oracle_molecule(&sys["methane"], "CH4"), sys["methane"]["energy"].as_f64().unwrap()),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, m, reference) in cases {
        let dev = (energy(&m) - reference).abs();
        worst = worst.max(dev);
        parts.push(format!("{name} {dev:.1e}"));
    }
    Verdict::new(
        "1",
        "HF oracle equivalence (H2, H2O, CH4)",
        worst <= ORACLE_TOL,
        format!("|dE| {} Ha (tol {ORACLE_TOL:.0e})", parts.join(", ")),
    )
}

fn criterion_2(dataset: &Dataset) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, printed) in [("Glycine", -279.11151), ("Alanine", -317.69136), ("Serine", -391.51594)] {
        let e = energy(&dataset.get(label).unwrap().molecule);
        let dev = (e - printed).abs();
        ok &= dev <= GT_SUBSET_TOL;
        parts.push(format!("{label} {e:.5} (dE {dev:.1e})"));
    }
    Verdict::new(
        "2",
        "Amino-acid reference energies (Gly, Ala, Ser)",
        ok,
        format!("{} (tol {GT_SUBSET_TOL:.0e} Ha)", parts.join(", ")),
    )
}

fn criterion_3(dataset: &Dataset) -> Verdict {
    let library = ResidueLibrary::from_dataset(dataset);
    let mut table = EnergyTable::new(LevelOfTheory::default());
    for (label, gt, _, _) in AMINO_TABLE {
        let code = &dataset.get(label).unwrap().sequence[0];
        table.insert_fixture(code, &library.template(code).unwrap().molecule, gt).unwrap();
    }
    for (label, e) in SPECIES_ENERGIES {
        table.insert_fixture(label, library.species(label).unwrap(), e).unwrap();
    }
    let mut worst = (0.0f64, "");
    for (label, _, em, _) in PEPTIDE_TABLE {
        let plan = fragment_peptide(&dataset.get(label).unwrap().molecule, &library, FragmentOptions::default()).unwrap();
        let dev = (reassemble(&plan, &table).unwrap().em - em).abs();
        if dev > worst.0 {
            worst = (dev, label);
        }
    }
    Verdict::new(
        "3",
        "Reassembly arithmetic on all 20 peptides",
        worst.0 <= ARITHMETIC_TOL,
        format!("max |dEm| {:.1e} Ha ({}) (tol {ARITHMETIC_TOL:.0e})", worst.0, worst.1),
    )
}

fn criterion_4() -> Verdict {
    let mut worst_row: f64 = 0.0;
    let mut re = Vec::new();
    for (_, gt, em, printed) in PEPTIDE_TABLE {
        let r = relative_error_pct(gt, em).unwrap();
        worst_row = worst_row.max((r - printed).abs());
        re.push(r);
    }
    let peptides = summarize(&re).unwrap();
    let amino: Vec<f64> = AMINO_TABLE.iter().map(|&(_, gt, em, _)| relative_error_pct(gt, em).unwrap()).collect();
    let amino = summarize(&amino).unwrap();
    let ok = worst_row <= ROW_RE_TOL
        && (peptides.mean - 0.00469).abs() <= PEPTIDE_SUMMARY_TOL
        && (peptides.std - 0.01071).abs() <= PEPTIDE_SUMMARY_TOL
        && (amino.mean - 0.26844).abs() <= AMINO_SUMMARY_TOL
        && (amino.std - 0.32794).abs() <= AMINO_SUMMARY_TOL;
    Verdict::new(
        "4",
        "Relative-error metrics from printed pairs",
        ok,
        format!(
            "max row dRE {worst_row:.1e} pp; peptides {:.5} ± {:.5}; amino acids {:.5} ± {:.5}",
            peptides.mean, peptides.std, amino.mean, amino.std
        ),
    )
}

fn pipeline_config(labels: &[&str], role: Option<&str>, mode: &str, gt: bool, cache: &Path) -> PipelineConfig {
    let labels: Vec<String> = labels.iter().map(|l| format!("{l:?}")).collect();
    let role = role.map(|r| format!("role = {r:?}\n")).unwrap_or_default();
    let text = format!(
        "[input]\nsource = \"fixtures\"\nlabels = [{}]\n{role}data_dir = {:?}\n\
         [run]\nmode = {mode:?}\ncompute_ground_truth = {gt}\n\
         [cache]\npath = {:?}\n",
        labels.join(", "),
        data_dir().display().to_string(),
        cache.display().to_string(),
    );
    PipelineConfig::from_toml(&text).unwrap()
}

fn end_to_end(labels: &[&str], cache: &Path) -> (PipelineOutcome, Vec<String>, bool) {
    let config = pipeline_config(labels, None, "peptide_level", true, cache);
    let outcome = execute(&config, &HfEngine::default()).unwrap();
    let mut ok = outcome.succeeded();
    let mut parts = Vec::new();
    for label in labels {
        let printed = PEPTIDE_TABLE.iter().find(|r| r.0 == *label).unwrap().3;
        match outcome.molecules.iter().find(|m| m.label == *label).and_then(|m| m.re_pct) {
            Some(re) => {
                let dev = (re - printed).abs();
                ok &= dev <= END_TO_END_TOL_PP;
                parts.push(format!("{label} {re:.5}% (d {dev:.5})"));
            }
            None => {
                ok = false;
                parts.push(format!("{label} missing"));
            }
        }
    }
    (outcome, parts, ok)
}

fn criterion_5(cache: &Path) -> Verdict {
    let (_, parts, ok) = end_to_end(&["Gly-Gly", "Gly-Ala", "Gly-Ser"], cache);
    Verdict::new(
        "5",
        "End-to-end dipeptides",
        ok,
        format!("{} (tol ±{END_TO_END_TOL_PP} pp)", parts.join(", ")),
    )
}

fn criterion_5_slow(cache: &Path) -> Verdict {
    if std::env::var_os("PEPFRAG_SLOW").is_none() {
        return Verdict {
            id: "5-slow",
            title: "End-to-end, all peptides",
            status: Status::Skip,
            detail: "set PEPFRAG_SLOW=1 to run".into(),
        };
    }
    let labels: Vec<&str> = PEPTIDE_TABLE.iter().map(|r| r.0).collect();
    let (_, parts, ok) = end_to_end(&labels, cache);
    Verdict::new("5-slow", "End-to-end, all peptides", ok, parts.join(", "))
}

fn criterion_6a(dataset: &Dataset) -> Verdict {
    let mut failures = Vec::new();
    for e in dataset.entries() {
        let b = build_basis(&e.molecule).unwrap();
        let n = b.len();
        let s = overlap_matrix(&b);
        let t = kinetic_matrix(&b);
        let v = nuclear_matrix(&b, &e.molecule);
        let mut ok = [&s, &t, &v].iter().all(|x| (*x - x.transpose()).abs().max() < SYMMETRY_TOL)
            && (0..n).all(|k| (s[(k, k)] - 1.0).abs() < SYMMETRY_TOL)
            && s.clone().symmetric_eigen().eigenvalues.min() > 0.0;
        for q in 0..24 {
            let (i, j, k, l) = ((7 * q + 1) % n, (11 * q + 3) % n, (13 * q + 5) % n, (17 * q + 2) % n);
            let x = eri_element(&b, i, j, k, l);
            ok &= [(j, i, k, l), (i, j, l, k), (k, l, i, j), (l, k, j, i)]
                .iter()
                .all(|&(p, q, r, s)| (eri_element(&b, p, q, r, s) - x).abs() < SYMMETRY_TOL);
        }
        if !ok {
            failures.push(e.label.clone());
        }
    }
    Verdict::new(
        "6a",
        "Integral symmetries, S positive definite",
        failures.is_empty(),
        format!("{} fixtures; failing: {:?}", dataset.len(), failures),
    )
}

fn criterion_6b() -> Verdict {
    let m = load("species/h2o.sdf");
    let e0 = energy(&m);
    let identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut dt: f64 = 0.0;
    for shift in [[3.0, -2.0, 7.5], [-40.0, 0.1, 12.0]] {
        dt = dt.max((energy(&m.transformed(identity, shift)) - e0).abs());
    }
    let mut dr: f64 = 0.0;
    for angle in [0.7f64, 2.9] {
        let (s, c) = angle.sin_cos();
        let rz = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
        let rx = [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]];
        for r in [rz, rx] {
            dr = dr.max((energy(&m.transformed(r, [0.0; 3])) - e0).abs());
        }
    }
    Verdict::new(
        "6b",
        "Translation and rotation invariance (H2O)",
        dt < TRANSLATION_TOL && dr < ROTATION_TOL,
        format!("translation {dt:.1e} Ha, rotation {dr:.1e} Ha"),
    )
}

fn plans(dataset: &Dataset, library: &ResidueLibrary, options: FragmentOptions) -> Vec<FragmentPlan> {
    let mut out = Vec::new();
    for e in dataset.with_role(Role::Peptide) {
        out.push(fragment_peptide(&e.molecule, library, options).unwrap());
    }
    for e in dataset.with_role(Role::AminoAcid) {
        out.push(fragment_amino_acid(&e.molecule).unwrap());
    }
    out
}

fn criterion_6c(dataset: &Dataset, library: &ResidueLibrary) -> Verdict {
    let unbalanced = |options| -> Vec<String> {
        plans(dataset, library, options)
            .iter()
            .filter(|p| !p.is_balanced())
            .map(|p| format!("{} residual {}", p.source, p.residual()))
            .collect()
    };
    let default = unbalanced(FragmentOptions::default());
    let alternative = unbalanced(FragmentOptions {
        ester_convention: EsterConvention::MethylForHydrogen,
        ..Default::default()
    });
    Verdict::new(
        "6c",
        "Exact atom bookkeeping on 40 fixtures",
        default.is_empty(),
        format!(
            "default ledger unbalanced: {default:?}; methyl-for-hydrogen ledger unbalanced: {alternative:?}"
        ),
    )
}

fn criterion_6d(dataset: &Dataset, library: &ResidueLibrary) -> Verdict {
    let mut checked = 0;
    let mut bad = Vec::new();
    for e in dataset.with_role(Role::Peptide) {
        let plan = fragment_peptide(&e.molecule, library, FragmentOptions::default()).unwrap();
        if plan.sites.iter().any(|s| s.kind == BondKind::Disulfide) {
            continue;
        }
        checked += 1;
        let l = e.sequence.len() as u32;
        if plan.fragments.len() as u32 != l || plan.correction_count("H2O", -1) != l - 1 {
            bad.push(e.label.clone());
        }
    }
    Verdict::new(
        "6d",
        "L residues give L-1 water corrections",
        bad.is_empty(),
        format!("{checked} linear peptides; failing: {bad:?}"),
    )
}

fn criterion_6e(library: &ResidueLibrary) -> Verdict {
    let mirror = [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let bad: Vec<&str> = library
        .templates()
        .iter()
        .filter(|t| {
            let want = Residue::Known(t.code.clone());
            identify_residue(&t.molecule, library) != want
                || identify_residue(&t.molecule.transformed(mirror, [1.0, 2.0, 3.0]), library) != want
        })
        .map(|t| t.code.as_str())
        .collect();
    Verdict::new(
        "6e",
        "Residue identification round trip",
        library.templates().len() == 20 && bad.is_empty(),
        format!("{} templates (and mirror images); failing: {bad:?}", library.templates().len()),
    )
}

fn criterion_6f() -> Verdict {
    let cache = tempfile::tempdir().unwrap();
    let config = pipeline_config(&["Gly-Gly", "Gly-Ala", "Gly-Ser"], None, "peptide_level", true, cache.path());
    let engine = HfEngine::default();
    let run = |dir: &Path| -> (PipelineOutcome, Vec<u8>) {
        let o = execute(&config, &engine).unwrap();
        write_outputs(&o, dir).unwrap();
        (o, std::fs::read(dir.join("summary_peptide_level.csv")).unwrap())
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (cold, first) = run(a.path());
    let (warm, second) = run(b.path());
    Verdict::new(
        "6f",
        "Warm-cache rerun is byte-identical",
        first == second && cold.scf_invocations > 0 && warm.scf_invocations == 0,
        format!(
            "SCF runs cold {} / warm {}, warm cache hits {}, identical {}",
            cold.scf_invocations,
            warm.scf_invocations,
            warm.cache_hits,
            first == second
        ),
    )
}

fn criterion_7(cache: &Path) -> Verdict {
    let config = pipeline_config(&[], Some("amino_acid"), "amino_acid_level", false, cache);
    let outcome = execute(&config, &HfEngine::default()).unwrap();
    let mut over = Vec::new();
    let mut structure = Vec::new();
    let mut worst: f64 = 0.0;
    for (label, _, printed_em, _) in AMINO_TABLE {
        let Some(m) = outcome.molecules.iter().find(|m| m.label == label) else {
            over.push(format!("{label} missing"));
            continue;
        };
        let dev = relative_error_pct(printed_em, m.em).unwrap();
        worst = worst.max(dev);
        if dev > AMINO_LEVEL_TOL_PCT {
            over.push(format!("{label} {dev:.3}%"));
        }
        if m.plan.fragments.len() != 4 || !m.plan.corrections.is_empty() {
            structure.push(format!("{label} {} fragments", m.plan.fragments.len()));
        }
    }
    Verdict::new(
        "7",
        "Amino-acid-level reassembly",
        outcome.succeeded() && over.is_empty() && structure.is_empty(),
        format!(
            "max |dEm| {worst:.3}% (tol {AMINO_LEVEL_TOL_PCT}%); over tolerance: {over:?}; not four fragments: {structure:?}"
        ),
    )
}

fn main() -> ExitCode {
    let dataset = Dataset::load(data_dir()).unwrap();
    let library = ResidueLibrary::from_dataset(&dataset);
    let cache = tempfile::tempdir().unwrap();

    let steps: Vec<Box<dyn Fn() -> Verdict + '_>> = vec![
        Box::new(criterion_1),
        Box::new(|| criterion_2(&dataset)),
        Box::new(|| criterion_3(&dataset)),
        Box::new(criterion_4),
        Box::new(|| criterion_5(cache.path())),
        Box::new(|| criterion_5_slow(cache.path())),
        Box::new(|| criterion_6a(&dataset)),
        Box::new(criterion_6b),
        Box::new(|| criterion_6c(&dataset, &library)),
        Box::new(|| criterion_6d(&dataset, &library)),
        Box::new(|| criterion_6e(&library)),
        Box::new(criterion_6f),
        Box::new(|| criterion_7(cache.path())),
    ];

    let mut red = BTreeSet::new();
    for step in steps {
        let start = Instant::now();
        let v = step();
        let tag = match v.status {
            Status::Pass => "PASS",
            Status::Fail => {
                red.insert(v.id);
                "FAIL"
            }
            Status::Skip => "SKIP",
        };
        println!(
            "[{tag}] {:<6} {} ({:.1} s): {}",
            v.id,
            v.title,
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }

    let expected: BTreeSet<&str> = EXPECTED_RED.iter().copied().collect();
    if red == expected {
        println!("acceptance: failing set {red:?} matches the recorded known-red set");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing set {red:?} differs from the recorded known-red set {expected:?}");
        ExitCode::FAILURE
    }
}
