use std::sync::OnceLock;

use pepfrag::fragment::{
    fragment_amino_acid, fragment_peptide, identify_residue, BondKind, FragmentOptions, FragmentPlan, Residue,
    ResidueLibrary, Strategy as Cut,
};
use pepfrag::molio::{Atom, Bond, Dataset, Molecule, Role};
use proptest::prelude::*;
use proptest::sample::{select, Index};

fn dataset() -> &'static Dataset {
    static D: OnceLock<Dataset> = OnceLock::new();
    D.get_or_init(|| Dataset::load_default().unwrap())
}

fn library() -> &'static ResidueLibrary {
    static L: OnceLock<ResidueLibrary> = OnceLock::new();
    L.get_or_init(|| ResidueLibrary::from_dataset(dataset()))
}

fn labels(role: Role) -> Vec<String> {
    dataset().with_role(role).map(|e| e.label.clone()).collect()
}

/// Same molecule with atoms relabelled by a permutation drawn from `seed`.
fn permuted(m: &Molecule, seed: &[Index]) -> Molecule {
    let n = m.len();
    let mut order: Vec<usize> = (0..n).collect();
    for (k, ix) in seed.iter().enumerate().take(n) {
        order.swap(k, k + ix.index(n - k));
    }
    let mut new_of = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        new_of[old] = new;
    }
    let atoms: Vec<Atom> = order.iter().map(|&old| m.atoms()[old]).collect();
    let bonds: Vec<Bond> = m.bonds().iter().map(|b| Bond::new(new_of[b.i], new_of[b.j], b.order)).collect();
    Molecule::new(m.name(), atoms, bonds, m.net_charge(), Some(m.multiplicity())).unwrap()
}

fn rotation(a: f64, b: f64) -> [[f64; 3]; 3] {
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    [[ca, -sa * cb, sa * sb], [sa, ca * cb, -ca * sb], [0.0, sb, cb]]
}

fn summary(p: &FragmentPlan) -> (Vec<String>, Vec<(String, i8, u32)>, String) {
    let mut f: Vec<String> = p.fragments.iter().map(|f| format!("{} {}", f.label, f.formula())).collect();
    f.sort();
    let mut c: Vec<(String, i8, u32)> = p.corrections.iter().map(|c| (c.label.clone(), c.sign, c.count)).collect();
    c.sort();
    (f, c, p.residual().to_string())
}

fn options() -> impl Strategy<Value = FragmentOptions> {
    prop_oneof![Just(Cut::Library), Just(Cut::Capping)]
        .prop_map(|strategy| FragmentOptions { strategy, ..Default::default() })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn peptide_ledger_matches_declared_residual(label in select(labels(Role::Peptide)), opts in options()) {
        let e = dataset().get(&label).unwrap();
        let plan = fragment_peptide(&e.molecule, library(), opts).unwrap();
        prop_assert_eq!(plan.residual(), plan.declared_residual.clone());
        prop_assert_eq!(plan.fragments.len(), e.sequence.len());
        let amides = plan.sites.iter().filter(|s| s.kind == BondKind::BackboneAmide).count() as u32;
        prop_assert_eq!(plan.correction_count("H2O", -1), amides);
        prop_assert!(plan.corrections.iter().all(|c| c.count >= 1));
    }

    #[test]
    fn peptide_plan_ignores_atom_order_and_pose(
        label in select(labels(Role::Peptide)),
        seed in prop::collection::vec(any::<Index>(), 80),
        a in 0.0f64..6.3, b in 0.0f64..6.3, shift in prop::array::uniform3(-20.0f64..20.0),
    ) {
        let m = &dataset().get(&label).unwrap().molecule;
        let moved = permuted(m, &seed).transformed(rotation(a, b), shift);
        let p = fragment_peptide(m, library(), FragmentOptions::default()).unwrap();
        let q = fragment_peptide(&moved, library(), FragmentOptions::default()).unwrap();
        prop_assert_eq!(summary(&p), summary(&q));
    }

    #[test]
    fn amino_acid_plan_is_balanced_and_order_independent(
        label in select(labels(Role::AminoAcid)),
        seed in prop::collection::vec(any::<Index>(), 30),
    ) {
        let m = &dataset().get(&label).unwrap().molecule;
        let p = fragment_amino_acid(m).unwrap();
        prop_assert!(p.is_balanced());
        prop_assert!(p.corrections.is_empty());
        prop_assert_eq!(summary(&p), summary(&fragment_amino_acid(&permuted(m, &seed)).unwrap()));
    }

    #[test]
    fn templates_identify_under_relabelling(
        code in select(library().templates().iter().map(|t| t.code.clone()).collect::<Vec<_>>()),
        seed in prop::collection::vec(any::<Index>(), 30),
        a in 0.0f64..6.3,
    ) {
        let t = library().template(&code).unwrap();
        let m = permuted(&t.molecule, &seed).transformed(rotation(a, 1.0), [0.5, -3.0, 2.0]);
        prop_assert_eq!(identify_residue(&m, library()), Residue::Known(code));
    }
}

#[test]
fn fragmenting_twice_gives_identical_plans() {
    for e in dataset().with_role(Role::Peptide) {
        let a = fragment_peptide(&e.molecule, library(), FragmentOptions::default()).unwrap();
        let b = fragment_peptide(&e.molecule, library(), FragmentOptions::default()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
