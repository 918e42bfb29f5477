use serde::Serialize;

use super::{expansion_gap, BandConstants, StructureTables};
use crate::atlas::{is_regular_index, BasisAtlas, BasisIndex};
use crate::numeric::{series_mul, LaurentExpansion, Point};
use crate::Error;

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Largest numerical residual, or the number of violating entries for pattern checks.
    pub residual: f64,
    pub checked: usize,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TablesReport {
    pub checks: Vec<CheckOutcome>,
    pub bands: BandConstants,
    pub tolerance: f64,
}

impl TablesReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Acc {
    name: String,
    residual: f64,
    violations: usize,
    checked: usize,
    first: Option<String>,
    numeric: bool,
}

impl Acc {
    fn numeric(name: impl Into<String>) -> Self {
        Acc { name: name.into(), residual: 0.0, violations: 0, checked: 0, first: None, numeric: true }
    }

    fn pattern(name: impl Into<String>) -> Self {
        Acc { numeric: false, ..Acc::numeric(name) }
    }

    fn value(&mut self, r: f64, tol: f64, what: impl FnOnce() -> String) {
        self.checked += 1;
        if r > self.residual || r.is_nan() {
            self.residual = if r.is_nan() { f64::INFINITY } else { r };
        }
        if r.is_nan() || r > tol {
            self.violations += 1;
            if self.first.is_none() {
                self.first = Some(what());
            }
        }
    }

    fn flag(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.first.is_none() {
                self.first = Some(what());
            }
        }
    }

    fn finish(self) -> CheckOutcome {
        let residual = if self.numeric { self.residual } else { self.violations as f64 };
        let detail = match self.first {
            Some(f) => format!("{} violation(s); first: {f}", self.violations),
            None => format!("{} entries", self.checked),
        };
        CheckOutcome { name: self.name, passed: self.violations == 0, residual, checked: self.checked, detail }
    }
}

fn bi(d: i64) -> BasisIndex {
    BasisIndex(d)
}

/// Runs every band, vanishing, symmetry and expansion identity on the tables.
pub fn check_tables(t: &StructureTables, atlas: &BasisAtlas) -> Result<TablesReport, Error> {
    let tol = t.tolerance;
    let g = t.genus as i64;
    let half = BasisIndex(g);
    let idx = t.indices();
    let mut out = Vec::new();

    let mut cross = Acc::numeric("cross_point");
    cross.value(t.gamma.cross_residual, tol, || "gamma".into());
    for (l, b) in &t.beta {
        cross.value(b.cross_residual, tol, || format!("beta lambda={l}"));
    }
    for (l, b) in &t.ell {
        cross.value(b.cross_residual, tol, || format!("ell lambda={l}"));
    }
    for (l, b) in &t.zeta_lambda {
        cross.value(b.cross_residual, tol, || format!("zeta lambda={l}"));
    }
    out.push(cross.finish());

    let mut band = Acc::pattern("gamma_band");
    for &(n, m) in t.gamma.entries.keys() {
        let s = (n.doubled() + m.doubled()).abs();
        let limit = if n.doubled().abs() > g && m.doubled().abs() > g { 2 * g } else { 2 * g + 2 };
        band.flag(s <= limit, || format!("gamma_{{{n},{m}}} nonzero"));
    }
    out.push(band.finish());

    let mut anti = Acc::numeric("gamma_antisymmetry");
    let mut unit = Acc::numeric("gamma_unit");
    for &n in &idx {
        for &m in &idx {
            let r = (&t.gamma.get(&(n, m)) + &t.gamma.get(&(m, n))).magnitude();
            anti.value(r, tol, || format!("({n},{m}) off by {r:e}"));
        }
        let r = t.gamma.get(&(n, half)).magnitude();
        unit.value(r, tol, || format!("gamma_{{{n},g/2}} = {r:e}"));
    }
    out.push(anti.finish());
    out.push(unit.finish());

    for (&l, beta) in &t.beta {
        if let Some(dual) = t.beta.get(&(1 - l)) {
            let mut sym = Acc::numeric(format!("beta_symmetry[{l}]"));
            for &n in &idx {
                for &m in &idx {
                    for &k in &idx {
                        let a = beta.get(&(n, m, k));
                        let b = dual.get(&(n, -k, -m));
                        let r = (&a - &b).magnitude();
                        sym.value(r, tol, || format!("(n,m,k)=({n},{m},{k}) off by {r:e}"));
                    }
                }
            }
            out.push(sym.finish());
        }
        let mut unit = Acc::numeric(format!("beta_unit[{l}]"));
        for &m in &idx {
            for &k in &idx {
                let target = if k == m { t.mode.one() } else { t.mode.zero() };
                let r = (&beta.get(&(half, m, k)) - &target).magnitude();
                unit.value(r, tol, || format!("beta^{{{l},{m}}}_{{g/2,{k}}} off by {r:e}"));
            }
        }
        out.push(unit.finish());

        let mut exp = Acc::numeric(format!("beta_expansion[{l}]"));
        for &n in &idx {
            for &m in &idx {
                if !beta.is_reliable(&(n, m, idx[0])) {
                    continue;
                }
                let lhs = series_mul(&atlas.a(n)?.plus, &atlas.f_upper(l, m)?.plus)?;
                let terms: Vec<(BasisIndex, &LaurentExpansion)> = idx
                    .iter()
                    .filter(|&&k| beta.get_ref(&(n, m, k)).is_some())
                    .map(|&k| Ok((k, &atlas.f_upper(l, k)?.plus)))
                    .collect::<Result<_, Error>>()?;
                let rhs = linear_combination(&lhs, &terms, |k| beta.get(&(n, m, *k)))?;
                let hi = lhs.trunc.min(atlas.config.trunc);
                let r = expansion_gap(&lhs, &rhs, lhs.lead.min(rhs.lead), hi)?;
                exp.value(r, tol, || format!("A_{n} f^{m} off by {r:e}"));
            }
        }
        out.push(exp.finish());
    }

    if let Some(alpha) = t.alpha() {
        let mut sym = Acc::numeric("alpha_symmetry");
        for &n in &idx {
            for &m in &idx {
                for &k in &idx {
                    let r = (&alpha.get(&(n, m, k)) - &alpha.get(&(k, m, n))).magnitude();
                    sym.value(r, tol, || format!("alpha^{m}_{{{n},{k}}} off by {r:e}"));
                }
            }
        }
        out.push(sym.finish());
        if let Some(beta0) = t.beta.get(&0) {
            let mut prod = Acc::numeric("product_consistency");
            for &n in &idx {
                for &k in &idx {
                    if !beta0.is_reliable(&(n, -k, idx[0])) {
                        continue;
                    }
                    let lhs = series_mul(&atlas.a(n)?.plus, &atlas.a(k)?.plus)?;
                    let terms: Vec<(BasisIndex, &LaurentExpansion)> = idx
                        .iter()
                        .filter(|&&m| alpha.get_ref(&(n, m, k)).is_some())
                        .map(|&m| Ok((m, &atlas.a(m)?.plus)))
                        .collect::<Result<_, Error>>()?;
                    let rhs = linear_combination(&lhs, &terms, |m| alpha.get(&(n, *m, k)))?;
                    let hi = lhs.trunc.min(atlas.config.trunc);
                    let r = expansion_gap(&lhs, &rhs, lhs.lead.min(rhs.lead), hi)?;
                    prod.value(r, tol, || format!("A_{n} A_{k} off by {r:e}"));
                }
            }
            out.push(prod.finish());
        }
    }

    let mut zu = Acc::numeric("zeta_unit");
    for &n in &idx {
        let r = t.zeta.get(&(half, n)).magnitude();
        zu.value(r, tol, || format!("zeta^{n}_{{g/2}} = {r:e}"));
    }
    out.push(zu.finish());
    let mut zb = Acc::pattern("zeta_band");
    for &(u, m) in t.zeta.entries.keys() {
        zb.flag(m.doubled() >= u.doubled() - 2, || format!("zeta^{m}_{u} nonzero below u-1"));
    }
    let mut zb = zb.finish();
    zb.detail = format!("{}; measured C = {}", zb.detail, t.bands.zeta);
    out.push(zb);
    let mut zl = Acc::numeric("zeta_literal");
    zl.value(t.zeta_literal_gap, tol, || format!("calibrated and literal forms differ by {:e}", t.zeta_literal_gap));
    out.push(zl.finish());
    if let Some(z1) = t.zeta_lambda.get(&1) {
        let mut c = Acc::numeric("zeta_weight_one");
        for &u in &idx {
            for &n in &idx {
                let r = (&z1.get(&(u, n)) - &t.zeta.get(&(u, n))).magnitude();
                c.value(r, tol, || format!("({u},{n})"));
            }
        }
        out.push(c.finish());
    }

    for (&l, ell) in &t.ell {
        let mut b = Acc::pattern(format!("ell_band[{l}]"));
        let mut exceptional = 0usize;
        for &(j, m, n) in ell.entries.keys() {
            let lo = n.doubled() - j.doubled() - g;
            let hi = n.doubled() - j.doubled() + g;
            let inside = m.doubled() >= lo && m.doubled() <= hi;
            let regular = is_regular_index(t.genus, 1, -j)
                && is_regular_index(t.genus, l, -m)
                && is_regular_index(t.genus, -l, n);
            if regular {
                b.flag(inside, || format!("l^{{{j},{m}}}_{n} nonzero"));
            } else if !inside {
                exceptional += 1;
            }
        }
        let mut b = b.finish();
        let (o1, o2) = t.bands.ell.get(&l).copied().unwrap_or((0, g));
        b.detail = format!(
            "{}; {exceptional} entries with a middle-range index lie outside, measured offsets [{o1}, {o2}]",
            b.detail
        );
        out.push(b);
        if !atlas.has_lambda(l + 1) {
            continue;
        }
        let mut exp = Acc::numeric(format!("ell_expansion[{l}]"));
        for &j in &idx {
            for &m in &idx {
                if !ell.is_reliable(&(j, m, idx[0])) {
                    continue;
                }
                let lhs = series_mul(&atlas.omega(j)?.plus, &atlas.f_upper(l, m)?.plus)?;
                let terms: Vec<(BasisIndex, &LaurentExpansion)> = idx
                    .iter()
                    .filter(|&&n| ell.get_ref(&(j, m, n)).is_some())
                    .map(|&n| Ok((n, &atlas.f_upper(l + 1, n)?.plus)))
                    .collect::<Result<_, Error>>()?;
                let rhs = linear_combination(&lhs, &terms, |n| ell.get(&(j, m, *n)))?;
                let hi = lhs.trunc.min(atlas.config.trunc);
                let r = expansion_gap(&lhs, &rhs, lhs.lead.min(rhs.lead), hi)?;
                exp.value(r, tol, || format!("omega^{j} f^{m} off by {r:e}"));
            }
        }
        out.push(exp.finish());
    }

    for (&k, q) in &t.q {
        let mut v = Acc::numeric(format!("q_vanishing[{k}]"));
        for d in g..=g + 2 * (k as i64 - 1) {
            if d % 2 != g % 2 || d.abs() > t.window.doubled() {
                continue;
            }
            let u = bi(d);
            if !q.is_reliable(&(u, idx[0])) {
                continue;
            }
            for &j in idx.iter().filter(|j| j.doubled() < g) {
                let r = q.get(&(u, j)).magnitude();
                v.value(r, tol, || format!("q^{{({k}),{j}}}_{u} = {r:e}"));
            }
        }
        out.push(v.finish());
    }
    if let Some(q1) = t.q.get(&1) {
        let mut c = Acc::numeric("q_first_order");
        c.value(if q1.entries == t.zeta.entries { 0.0 } else { f64::INFINITY }, tol, || "q^(1) differs from zeta".into());
        out.push(c.finish());
    }

    Ok(TablesReport { checks: out, bands: t.bands.clone(), tolerance: tol })
}

/// `sum_k c(k) f_k` on the grid of `like`.
fn linear_combination<K>(
    like: &LaurentExpansion,
    terms: &[(K, &LaurentExpansion)],
    coeff: impl Fn(&K) -> crate::Scalar,
) -> Result<LaurentExpansion, Error> {
    let mode = like.mode().unwrap_or(crate::ScalarMode::Exact);
    let lead = terms.iter().map(|(_, f)| f.lead).min().unwrap_or(like.lead).min(like.lead);
    let trunc = terms.iter().map(|(_, f)| f.trunc).min().unwrap_or(like.trunc);
    let mut acc = LaurentExpansion::zero(Point::Plus, like.weight, lead, trunc, mode);
    acc.point = like.point;
    for (k, f) in terms {
        acc = acc.add(&f.scale(&coeff(k)))?;
    }
    Ok(acc)
}
