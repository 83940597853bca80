use std::path::Path;

use nalgebra::DMatrix;
use soft_floer::carnot::{line_samples, CarnotAlgebra};
use soft_floer::degree::{ls_degree, DegreeOptions, FiniteRankMap};
use soft_floer::galerkin::{index_galerkin, GalerkinOptions};
use soft_floer::symplectic::{index_maslov, FamilySpec, TimeSymmetricFamily};
use soft_floer::torus::{find_periodic_orbits, hessian_family, OrbitSearch, TorusHamiltonian};

fn read(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)).unwrap()
}

#[test]
fn sample_inputs_parse() {
    for f in ["family_scalar.json", "family_trig.json", "family_degenerate.json"] {
        let spec: FamilySpec = serde_json::from_str(&read(f)).unwrap();
        TimeSymmetricFamily::try_from(spec).unwrap();
    }
    for f in ["hamiltonian_two_well.json", "hamiltonian_zero.json"] {
        serde_json::from_str::<TorusHamiltonian>(&read(f)).unwrap();
    }
    serde_json::from_str::<CarnotAlgebra>(&read("carnot_commuting.json")).unwrap();
    serde_json::from_str::<CarnotAlgebra>(&read("carnot_dimw3.json")).unwrap();
    for f in ["map_identity.json", "map_antipodal.json", "map_circle_square.json"] {
        serde_json::from_str::<FiniteRankMap>(&read(f)).unwrap();
    }
}

#[test]
fn orbit_hessians_index_the_same_both_ways() {
    let h: TorusHamiltonian = serde_json::from_str(&read("hamiltonian_two_well.json")).unwrap();
    let orbits = find_periodic_orbits(&h, &OrbitSearch::default()).unwrap();
    assert_eq!(orbits.len(), 4);
    let opts = GalerkinOptions {
        cutoffs: vec![8, 16, 32, 64],
        ..Default::default()
    };
    for orbit in &orbits {
        let fam = hessian_family(&h, orbit).unwrap();
        let maslov = index_maslov(&fam, 0.01, 2048).unwrap();
        assert_eq!(index_galerkin(&fam, &opts).unwrap().value, maslov);
        // the prefix length does not matter once it is small
        for eps in [0.005, 0.02] {
            assert_eq!(index_maslov(&fam, eps, 2048).unwrap(), maslov);
        }
    }
}

#[test]
fn conjugated_family_keeps_its_index() {
    let spec: FamilySpec = serde_json::from_str(&read("family_trig.json")).unwrap();
    let fam = TimeSymmetricFamily::try_from(spec).unwrap();
    // a rotation of R^2 is unitary and symplectic
    let (c, s) = (0.6f64, 0.8f64);
    let u = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    let rotated = fam.conjugated(&u).unwrap();
    assert_eq!(
        index_maslov(&fam, 0.01, 2048).unwrap(),
        index_maslov(&rotated, 0.01, 2048).unwrap()
    );
}

#[test]
fn carnot_line_is_convex() {
    let alg: CarnotAlgebra = serde_json::from_str(&read("carnot_commuting.json")).unwrap();
    let taus: Vec<f64> = (0..=200).map(|i| -4.0 + 0.04 * i as f64).collect();
    let s = line_samples(&alg, &[0.7, -0.4], &taus).unwrap();
    for w in s.windows(3) {
        assert!(w[0].phi + w[2].phi - 2.0 * w[1].phi >= -1e-12);
    }
}

#[test]
fn sample_maps_have_stable_degrees() {
    let opts = DegreeOptions::default();
    let square: FiniteRankMap = serde_json::from_str(&read("map_circle_square.json")).unwrap();
    assert_eq!(ls_degree(&square, &[2, 3], &opts).unwrap().degree, 2);
    let anti: FiniteRankMap = serde_json::from_str(&read("map_antipodal.json")).unwrap();
    assert_eq!(ls_degree(&anti, &[3], &opts).unwrap().degree, -1);
}
