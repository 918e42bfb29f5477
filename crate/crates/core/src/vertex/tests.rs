use std::sync::OnceLock;

use super::*;
use crate::atlas::{AtlasConfig, BasisAtlas, ComplexLiteral};
use crate::tables::{compute_tables, TablesConfig};

fn tables0() -> &'static StructureTables {
    static CELL: OnceLock<StructureTables> = OnceLock::new();
    CELL.get_or_init(|| {
        let a = BasisAtlas::build(AtlasConfig::genus0(9).with_lambdas(-3, 4)).unwrap();
        compute_tables(&a, &TablesConfig { k_max: 3 }).unwrap()
    })
}

fn tables1() -> &'static StructureTables {
    static CELL: OnceLock<StructureTables> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = AtlasConfig::genus1(
            BasisIndex(15),
            30,
            ComplexLiteral::new("0", "1"),
            ComplexLiteral::new("0.17", "0.31"),
            ComplexLiteral::new("-0.21", "0.12"),
        )
        .with_lambdas(-2, 3);
        compute_tables(&BasisAtlas::build(cfg).unwrap(), &TablesConfig { k_max: 3 }).unwrap()
    })
}

fn int(n: i64) -> BasisIndex {
    BasisIndex::from_int(n)
}

fn states(v: &Vertex, d: u32) -> Vec<FockVector> {
    Monomial::up_to_degree(d).into_iter().map(|m| FockVector::basis(v.mode(), m)).collect()
}

#[test]
fn field_literals_and_state_map() {
    let f = FieldSpec::parse(":D2 a . D0 a:").unwrap();
    assert_eq!(f.orders, vec![2, 0]);
    assert_eq!(f.to_string(), ":D2 a . D0 a:");
    assert_eq!(FieldSpec::parse(&f.to_string()).unwrap(), f);
    assert_eq!(FieldSpec::parse("a").unwrap(), FieldSpec::generator());
    assert_eq!(FieldSpec::parse("id").unwrap(), FieldSpec::identity());
    assert!(FieldSpec::parse(":D a:").is_err());
    assert!(FieldSpec::parse(":Dx a . a:").is_err());
    assert_eq!(Y(&Monomial::vacuum()), FieldSpec::identity());
    assert_eq!(Y(&Monomial::new(vec![1]).unwrap()), FieldSpec::generator());
    assert_eq!(Y(&Monomial::new(vec![1, 3]).unwrap()).orders, vec![2, 0]);
    assert_eq!(FieldSpec::new(vec![1, 0]).target(), Monomial::new(vec![2, 1]).unwrap());
}

#[test]
fn generator_coefficients() {
    let v = Vertex::new(tables0());
    let op = v.generator_field_coefficient(0, int(3)).unwrap();
    assert_eq!(op.words.len(), 1);
    assert_eq!(op.words[&vec![int(3)]], v.mode().one());
    for u in -7..=7 {
        let op = v.generator_field_coefficient(1, int(u)).unwrap();
        if u == 0 {
            assert!(op.words.is_empty());
        } else {
            assert_eq!(op.words.len(), 1);
            assert_eq!(op.words[&vec![int(u - 1)]], v.mode().from_int(-u));
        }
    }
    let v = Vertex::new(tables1());
    let half = v.half_genus();
    let op = v.generator_field_coefficient(2, half).unwrap();
    assert!(op.words.iter().all(|(w, c)| w[0] >= half || c.magnitude() < 1e-20));
}

#[test]
fn identity_field_and_unit_product() {
    for t in [tables0(), tables1()] {
        let v = Vertex::new(t);
        let id = FieldSpec::identity();
        let op = v.coefficient_operator(&id, BasisIndex(-(t.genus as i64)), 3).unwrap();
        assert_eq!(op.to_string(), "id");
        // l^{j,-g/2}_n = delta_{jn} at weight 0
        let minus_half = BasisIndex(-(t.genus as i64));
        for &j in &t.indices()[2..t.indices().len() - 2] {
            for &n in &t.indices()[2..t.indices().len() - 2] {
                let l = v.ell(0, j, minus_half, n).unwrap();
                let want = if j == n { 1.0 } else { 0.0 };
                assert!((l.magnitude() - want).abs() < 1e-20, "l^{{{j},-g/2}}_{n}");
            }
        }
    }
}

#[test]
fn genus0_normal_product_is_classical() {
    let v = Vertex::new(tables0());
    let aa = FieldSpec::new(vec![0, 0]);
    for s in states(&v, 3) {
        for n in -5..=5 {
            // sum_{j<0} a_j a_{n-j} + sum_{j>=0} a_{n-j} a_j
            let mut want = FockVector::zero(v.mode());
            for j in -12i64..=12 {
                let w = if j < 0 { [int(j), int(n - j)] } else { [int(n - j), int(j)] };
                if w.iter().all(|i| i.doubled().abs() <= 2 * 9) {
                    want.add(&v.fock.apply_word(&w, &s).unwrap());
                }
            }
            assert_eq!(v.apply_coefficient(&aa, int(n), &s).unwrap(), want, "n={n} on {s}");
        }
    }
}

#[test]
fn words_match_direct_evaluation() {
    for t in [tables0(), tables1()] {
        let v = Vertex::new(t);
        let spec = FieldSpec::new(vec![1, 0]);
        for s in states(&v, 2) {
            for n in [-2i64, -1, 0, 1] {
                let n = BasisIndex(2 * n + t.genus as i64);
                let op = v.coefficient_operator(&spec, n, 2).unwrap();
                let direct = v.apply_coefficient(&spec, n, &s).unwrap();
                assert!(op.apply(&v.fock, &s).unwrap().distance(&direct) < 1e-20);
            }
        }
    }
}

#[test]
fn vacuum_examples() {
    let v = Vertex::new(tables0());
    let r = v.check_vacuum(&FieldSpec::new(vec![1, 0])).unwrap();
    assert!(r.passed, "{r:?}");
    assert_eq!(r.vacuum_index, "-2");
    assert_eq!(r.tail, "0");
    assert_eq!(r.leading, v.mode().one());
    let v = Vertex::new(tables1());
    for spec in [FieldSpec::generator(), FieldSpec::derivative(2), FieldSpec::new(vec![0, 0])] {
        let r = v.check_vacuum(&spec).unwrap();
        assert!(r.passed, "{r:?}");
    }
    assert_eq!(v.check_vacuum(&FieldSpec::generator()).unwrap().vacuum_index, "-1/2");
}

#[test]
fn translation_examples() {
    let v = Vertex::new(tables0());
    let idx: Vec<BasisIndex> = (-3..=3).map(int).collect();
    for spec in [FieldSpec::identity(), FieldSpec::generator(), FieldSpec::new(vec![1, 0])] {
        let r = v.check_translation(&spec, &states(&v, 2), &idx).unwrap();
        assert_eq!(r.max_residual, 0.0, "{spec}");
    }
    let v = Vertex::new(tables1());
    let idx: Vec<BasisIndex> = (-2..=2).map(|k| BasisIndex(2 * k + 1)).collect();
    for spec in [FieldSpec::generator(), FieldSpec::derivative(1)] {
        let r = v.check_translation(&spec, &states(&v, 2), &idx[..4]).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.central_anomaly, 0.0);
    }
    // zeta entries crossing g/2 make the split non-covariant: the defect is a scalar
    let r = v.check_translation(&FieldSpec::new(vec![1, 0]), &states(&v, 2), &idx).unwrap();
    assert!(r.leibniz_residual < 1e-20, "{r:?}");
    assert!(r.non_central_residual < 1e-20, "{r:?}");
    assert!(r.central_anomaly > 1.0 && !r.passed, "{r:?}");
}

#[test]
fn locality_examples() {
    let v = Vertex::new(tables0());
    let a = FieldSpec::generator();
    let r = v.check_locality(&a, &a, &states(&v, 2), int(4), 4).unwrap();
    assert_eq!(r.min_order, Some(2));
    assert!(r.passed);
    let r = v.check_locality(&FieldSpec::identity(), &a, &states(&v, 2), int(3), 2).unwrap();
    assert_eq!(r.min_order, Some(0));
    let v = Vertex::new(tables1());
    let r = v.check_locality(&a, &a, &states(&v, 2), BasisIndex(5), 0).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(r.generator_residual.unwrap() < 1e-20);
    let c = v.check_minus_commute(1, 0, &states(&v, 2), BasisIndex(5)).unwrap();
    assert!(c.passed, "{c:?}");
    let c = v.check_double_bracket(1, 0, 0, &states(&v, 1), BasisIndex(3)).unwrap();
    assert!(c.passed, "{c:?}");
}

#[test]
fn wick_examples() {
    let v = Vertex::new(tables0());
    let a = FieldSpec::generator();
    let r = v.check_wick(&a, &a, &states(&v, 2), int(3)).unwrap();
    assert_eq!(r.max_residual, 0.0);
    assert_eq!(r.matchings, 2);
    let r = v.check_wick(&FieldSpec::new(vec![0, 1]), &FieldSpec::new(vec![1, 0]), &states(&v, 2), int(2)).unwrap();
    assert_eq!(r.max_residual, 0.0);
    let v = Vertex::new(tables1());
    let r = v.check_wick(&FieldSpec::new(vec![0, 0]), &a, &states(&v, 1), BasisIndex(3)).unwrap();
    assert!(r.passed, "{r:?}");
}
