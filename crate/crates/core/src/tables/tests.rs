use super::*;
use crate::atlas::{AtlasConfig, ComplexLiteral};

fn genus0(w: i64) -> (BasisAtlas, StructureTables) {
    let a = BasisAtlas::build(AtlasConfig::genus0(w)).unwrap();
    let t = compute_tables(&a, &TablesConfig { k_max: 3 }).unwrap();
    (a, t)
}

fn genus1(window: i64, digits: u32) -> BasisAtlas {
    BasisAtlas::build(AtlasConfig::genus1(
        BasisIndex(window),
        digits,
        ComplexLiteral::new("0", "1"),
        ComplexLiteral::new("0.17", "0.31"),
        ComplexLiteral::new("-0.21", "0.12"),
    ))
    .unwrap()
}

fn int(n: i64) -> BasisIndex {
    BasisIndex::from_int(n)
}

fn q(v: i64) -> Scalar {
    ScalarMode::Exact.from_int(v)
}

#[test]
fn genus0_closed_forms() {
    let (_, t) = genus0(5);
    let r = -5..=5;
    for n in r.clone() {
        for m in r.clone() {
            let want = if n + m == 0 { m } else { 0 };
            assert_eq!(t.gamma.get(&(int(n), int(m))), q(want), "gamma {n} {m}");
            let want = if m == n + 1 { -m } else { 0 };
            assert_eq!(t.zeta.get(&(int(m), int(n))), q(want), "zeta^{n}_{m}");
            for k in r.clone() {
                for (&l, beta) in &t.beta {
                    let want = i64::from(k == m - n);
                    assert_eq!(beta.get(&(int(n), int(m), int(k))), q(want), "beta {l} {n} {m} {k}");
                }
                for ell in t.ell.values() {
                    let want = i64::from(k - n == m);
                    assert_eq!(ell.get(&(int(n), int(m), int(k))), q(want));
                }
            }
        }
    }
    for (&l, z) in &t.zeta_lambda {
        for u in r.clone() {
            for n in r.clone() {
                let want = if u == n + 1 { -(u - 1 + l) } else { 0 };
                assert_eq!(z.get(&(int(u), int(n))), q(want), "zeta_{l} {u} {n}");
            }
        }
    }
}

#[test]
fn genus0_q_is_falling_factorial() {
    let (_, t) = genus0(6);
    for (&k, table) in &t.q {
        for u in -6i64..=6 {
            let key = (int(u), int(u - k as i64));
            if u - (k as i64) < -6 || !table.is_reliable(&key) {
                continue;
            }
            let ff: i64 = (0..k as i64).map(|i| u - i).product();
            let sign = if k % 2 == 0 { 1 } else { -1 };
            assert_eq!(table.get(&key), q(sign * ff), "q^({k}) at u={u}");
            assert!(table.entries.keys().filter(|(uu, _)| *uu == int(u)).count() <= 1);
        }
    }
}

#[test]
fn genus0_report_is_clean() {
    let (a, t) = genus0(5);
    let rep = check_tables(&t, &a).unwrap();
    for c in &rep.checks {
        assert!(c.passed, "{}: {}", c.name, c.detail);
        assert_eq!(c.residual, 0.0, "{}", c.name);
    }
    assert_eq!(rep.bands.zeta, -1);
    assert_eq!(rep.bands.beta[&1], (0, 0));
}

#[test]
fn genus1_invariants_hold() {
    let a = genus1(13, 40);
    let t = compute_tables(&a, &TablesConfig { k_max: 3 }).unwrap();
    let rep = check_tables(&t, &a).unwrap();
    for c in &rep.checks {
        assert!(c.passed, "{}: {} (residual {:e})", c.name, c.detail, c.residual);
    }
    assert!(rep.bands.zeta >= 0);
    assert!(t.beta[&0].unreliable.len() < t.indices().len().pow(3));
}

#[test]
fn genus1_truncation_stable() {
    let a = genus1(7, 40);
    let mut cfg = a.config.clone();
    cfg.trunc += 8;
    let b = BasisAtlas::build(cfg).unwrap();
    let (ga, gb) = (compute_gamma(&a).unwrap(), compute_gamma(&b).unwrap());
    let (za, _) = compute_zeta(&a).unwrap();
    let (zb, _) = compute_zeta(&b).unwrap();
    for n in a.indices() {
        for m in a.indices() {
            assert!((&ga.get(&(n, m)) - &gb.get(&(n, m))).magnitude() < 1e-20);
            assert!((&za.get(&(n, m)) - &zb.get(&(n, m))).magnitude() < 1e-20);
        }
    }
}

#[test]
fn tables_file_round_trip() {
    let (_, t) = genus0(3);
    let s = tables_to_json(&t).unwrap();
    let back = tables_from_json(&s).unwrap();
    assert_eq!(back.gamma, t.gamma);
    assert_eq!(back.beta, t.beta);
    assert_eq!(tables_to_json(&back).unwrap(), s);
    let a = genus1(5, 30);
    let t = compute_tables(&a, &TablesConfig::default()).unwrap();
    let s = tables_to_json(&t).unwrap();
    assert_eq!(tables_to_json(&tables_from_json(&s).unwrap()).unwrap(), s);
    assert!(matches!(tables_from_json("{\"format_version\":1}"), Err(Error::Schema(_))));
}
