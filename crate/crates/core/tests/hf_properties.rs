use pepfrag::hf::integrals::{eri_element, overlap_matrix};
use pepfrag::hf::{build_basis, run_scf, ScfOptions, SpinTreatment};
use pepfrag::molio::{parse_sdf, Atom, Element, Molecule};
use proptest::prelude::*;

fn water() -> Molecule {
    Molecule::new(
        "water",
        vec![
            Atom::new(Element::O, [0.0, 0.0, 0.1173]),
            Atom::new(Element::H, [0.0, 0.7572, -0.4692]),
            Atom::new(Element::H, [0.0, -0.7572, -0.4692]),
        ],
        vec![],
        0,
        None,
    )
    .unwrap()
}

fn glycine() -> Molecule {
    let raw = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/amino_acids/gly.sdf")).unwrap();
    parse_sdf(&raw).unwrap()
}

fn rotation(axis: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = [axis[0] / norm, axis[1] / norm, axis[2] / norm];
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

fn energy(m: &Molecule) -> f64 {
    let r = run_scf(m, SpinTreatment::Auto, &ScfOptions::default()).unwrap();
    assert!(r.converged);
    r.total_energy
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn eri_has_eightfold_symmetry(i in 0usize..30, j in 0usize..30, k in 0usize..30, l in 0usize..30) {
        use std::sync::OnceLock;
        static BASIS: OnceLock<pepfrag::hf::BasisSet> = OnceLock::new();
        let b = BASIS.get_or_init(|| build_basis(&glycine()).unwrap());
        let v = eri_element(b, i, j, k, l);
        for (p, q, r, s) in [(j, i, k, l), (i, j, l, k), (j, i, l, k), (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i)] {
            let w = eri_element(b, p, q, r, s);
            prop_assert!((v - w).abs() < 1e-10, "({i}{j}|{k}{l}) = {v} but ({p}{q}|{r}{s}) = {w}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn energy_is_translation_invariant(dx in -10.0f64..10.0, dy in -10.0f64..10.0, dz in -10.0f64..10.0) {
        let m = water();
        let moved = m.transformed([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], [dx, dy, dz]);
        prop_assert!((energy(&m) - energy(&moved)).abs() < 1e-8);
    }

    #[test]
    fn energy_is_rotation_invariant(
        ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in 0.1f64..1.0, angle in 0.0f64..std::f64::consts::TAU
    ) {
        let m = water();
        let turned = m.transformed(rotation([ax, ay, az], angle), [0.0; 3]);
        prop_assert!((energy(&m) - energy(&turned)).abs() < 1e-6);
    }
}

#[test]
fn overlap_is_positive_definite_with_unit_diagonal() {
    for m in [water(), glycine()] {
        let s = overlap_matrix(&build_basis(&m).unwrap());
        for k in 0..s.nrows() {
            assert!((s[(k, k)] - 1.0).abs() < 1e-10);
        }
        assert!((&s - s.transpose()).abs().max() < 1e-14);
        assert!(s.clone().symmetric_eigen().eigenvalues.min() > 0.0);
    }
}
