use knva::atlas::{load_atlas, save_atlas, AtlasConfig, BasisAtlas, BasisIndex, ComplexLiteral};
use knva::fock::{FockVector, Monomial};
use knva::tables::{check_tables, compute_tables, load_tables, save_tables, tables_from_json, tables_to_json, Table, TablesConfig};
use knva::vertex::{FieldSpec, Vertex};
use knva::Error;

fn gap<K: Ord + Copy>(a: &Table<K>, b: &Table<K>) -> f64 {
    a.entries.keys().chain(b.entries.keys()).map(|k| (&a.get(k) - &b.get(k)).magnitude()).fold(0.0, f64::max)
}

fn configs() -> Vec<AtlasConfig> {
    vec![
        AtlasConfig::genus0(6),
        AtlasConfig::genus1(
            BasisIndex(7),
            30,
            ComplexLiteral::new("0", "1"),
            ComplexLiteral::new("0.17", "0.31"),
            ComplexLiteral::new("-0.21", "0.12"),
        ),
    ]
}

#[test]
fn files_round_trip_through_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    for (i, cfg) in configs().into_iter().enumerate() {
        let atlas = BasisAtlas::build(cfg).unwrap();
        let ap = dir.path().join(format!("atlas{i}.json"));
        save_atlas(&atlas, &ap).unwrap();
        let loaded = load_atlas(&ap).unwrap();
        let t = compute_tables(&atlas, &TablesConfig { k_max: 2 }).unwrap();
        let t2 = compute_tables(&loaded, &TablesConfig { k_max: 2 }).unwrap();
        let text = tables_to_json(&t).unwrap();
        assert!(gap(&t.gamma, &t2.gamma).max(gap(&t.zeta, &t2.zeta)).max(gap(&t.beta[&1], &t2.beta[&1])) < 1e-35);
        assert_eq!(t.bands, t2.bands);

        let tp = dir.path().join(format!("tables{i}.json"));
        save_tables(&t, &tp).unwrap();
        let back = load_tables(&tp).unwrap();
        assert_eq!(tables_to_json(&back).unwrap(), text);
        assert_eq!(back.bands, t.bands);
        assert!(check_tables(&back, &loaded).unwrap().passed());

        let (v, w) = (Vertex::new(&t), Vertex::new(&back));
        let spec = FieldSpec::derivative(1);
        let s = FockVector::basis(v.mode(), Monomial::new(vec![1]).unwrap());
        for n in [-2i64, -1, 0] {
            let n = BasisIndex(2 * n + i as i64);
            let a = v.apply_coefficient(&spec, n, &s).unwrap();
            let b = w.apply_coefficient(&spec, n, &s).unwrap();
            assert!(a.distance(&b) <= v.tolerance(), "{spec}_{n}");
        }
    }
}

#[test]
fn malformed_tables_are_rejected() {
    let t = compute_tables(&BasisAtlas::build(AtlasConfig::genus0(4)).unwrap(), &TablesConfig { k_max: 1 }).unwrap();
    let text = tables_to_json(&t).unwrap();
    assert!(matches!(tables_from_json("{}"), Err(Error::Parse(_) | Error::Schema(_))));
    assert!(tables_from_json(&text.replace("\"gamma\"", "\"gamma_\"")).is_err());
    assert!(tables_from_json(&text[..text.len() / 2]).is_err());
}
