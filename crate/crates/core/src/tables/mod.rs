//! Residue structure constants of an atlas as sparse tables.

mod checks;
mod io;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::atlas::{BasisAtlas, BasisIndex};
use crate::numeric::{d_function, lie_derivative, residue_of_product, series_mul, LaurentExpansion, Point, Scalar, ScalarMode};
use crate::{par, Error};

pub use checks::{check_tables, CheckOutcome, TablesReport};
pub use io::{load_tables, save_tables, tables_from_json, tables_to_json};

pub type Key2 = (BasisIndex, BasisIndex);
pub type Key3 = (BasisIndex, BasisIndex, BasisIndex);

/// Sparse table: absent keys are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Table<K: Ord> {
    pub mode: ScalarMode,
    pub entries: BTreeMap<K, Scalar>,
    /// Keys whose identity checks may see truncation by the window edge.
    pub unreliable: BTreeSet<K>,
    /// Largest |value at P+ - value at P-| seen while computing.
    pub cross_residual: f64,
}

impl<K: Ord + Copy> Table<K> {
    pub fn new(mode: ScalarMode) -> Self {
        Table { mode, entries: BTreeMap::new(), unreliable: BTreeSet::new(), cross_residual: 0.0 }
    }

    pub fn get(&self, k: &K) -> Scalar {
        self.entries.get(k).cloned().unwrap_or_else(|| self.mode.zero())
    }

    pub fn get_ref(&self, k: &K) -> Option<&Scalar> {
        self.entries.get(k)
    }

    pub fn is_reliable(&self, k: &K) -> bool {
        !self.unreliable.contains(k)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn from_values(mode: ScalarMode, tol: f64, values: Vec<(K, Scalar, Scalar)>) -> Self {
        let mut t = Table::new(mode);
        for (k, plus, minus) in values {
            t.cross_residual = t.cross_residual.max((&plus - &minus).magnitude());
            if !plus.is_negligible(tol) {
                t.entries.insert(k, plus);
            }
        }
        t
    }
}

/// Band widths measured on the computed window.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BandConstants {
    /// Per weight: `(c1, c2)` with `m-n+g/2-c1 <= k <= m-n+g/2+c2` whenever `beta^{lambda,m}_{nk} != 0`.
    pub beta: BTreeMap<i64, (i64, i64)>,
    /// `C` with `zeta^m_n != 0 => m <= n + C`.
    pub zeta: i64,
    /// Largest `|n + m|` with `gamma_{nm} != 0`.
    pub gamma: i64,
    /// Per weight: number of distinct `m` with `l^{jm}_n != 0` for fixed `(j, n)`, maximised.
    pub ell_width: BTreeMap<i64, usize>,
    /// Per weight: range of `m - (n - j - g/2)` over nonzero `l^{jm}_n`.
    pub ell: BTreeMap<i64, (i64, i64)>,
}

#[derive(Clone, Debug)]
pub struct StructureTables {
    pub genus: u32,
    pub mode: ScalarMode,
    pub window: BasisIndex,
    pub tolerance: f64,
    /// `gamma_{nm} = Res(A_n dA_m)`, keyed `(n, m)`.
    pub gamma: Table<Key2>,
    /// `beta^{lambda,m}_{nk}` keyed `(n, m, k)`.
    pub beta: BTreeMap<i64, Table<Key3>>,
    /// `zeta^n_u = Res(A_u L_e omega^n)`, keyed `(u, n)`.
    pub zeta: Table<Key2>,
    /// Largest gap between `zeta` and `-Res(omega^n e(dA_u))`.
    pub zeta_literal_gap: f64,
    /// `Res(f_{1-lambda,u} L_e f^n_lambda)` keyed `(u, n)`; weight 1 equals `zeta`.
    pub zeta_lambda: BTreeMap<i64, Table<Key2>>,
    /// `l^{jm}_n` keyed `(j, m, n)`.
    pub ell: BTreeMap<i64, Table<Key3>>,
    /// `q^{(k),j}_u` keyed `(u, j)`.
    pub q: BTreeMap<u32, Table<Key2>>,
    pub bands: BandConstants,
}

impl StructureTables {
    /// `alpha^m_{nk} = beta^{1,m}_{nk}`.
    pub fn alpha(&self) -> Option<&Table<Key3>> {
        self.beta.get(&1)
    }

    pub fn in_window(&self, n: BasisIndex) -> bool {
        n.doubled().abs() <= self.window.doubled() && n.valid_for(self.genus)
    }

    pub fn indices(&self) -> Vec<BasisIndex> {
        let w = self.window.doubled();
        (-w..=w)
            .filter(|d| (d - self.genus as i64).rem_euclid(2) == 0)
            .map(BasisIndex)
            .collect()
    }
}

fn both_points<F>(f: F) -> Result<(Scalar, Scalar), Error>
where
    F: Fn(Point) -> Result<Scalar, Error>,
{
    Ok((f(Point::Plus)?, f(Point::Minus)?))
}

fn pairs(idx: &[BasisIndex]) -> Vec<Key2> {
    idx.iter().flat_map(|&a| idx.iter().map(move |&b| (a, b))).collect()
}

/// `gamma_{nm} = Res(A_n dA_m)` at both points.
pub fn compute_gamma(atlas: &BasisAtlas) -> Result<Table<Key2>, Error> {
    let idx = atlas.indices();
    let keys = pairs(&idx);
    let values = par::try_map(&keys, |&(n, m)| {
        let (p, q) = both_points(|pt| {
            let a = atlas.a(n)?.at(pt);
            let da = d_function(atlas.a(m)?.at(pt))?;
            residue_of_product(a, &da)
        })?;
        Ok::<_, Error>(((n, m), p, q))
    })?;
    Ok(Table::from_values(atlas.mode(), atlas.tolerance(), values))
}

/// `beta^{lambda,m}_{nk} = Res(A_n f^m_lambda f_{1-lambda,k})`.
pub fn compute_beta(atlas: &BasisAtlas, lambda: i64) -> Result<Table<Key3>, Error> {
    require(atlas, &[lambda, 1 - lambda, 0])?;
    let idx = atlas.indices();
    let keys = pairs(&idx);
    let rows = par::try_map(&keys, |&(n, m)| -> Result<Vec<(Key3, Scalar, Scalar)>, Error> {
        let prods: Vec<LaurentExpansion> = Point::BOTH
            .iter()
            .map(|&pt| series_mul(atlas.a(n)?.at(pt), atlas.f_upper(lambda, m)?.at(pt)))
            .collect::<Result<_, _>>()?;
        idx.iter()
            .map(|&k| {
                let h = atlas.f(1 - lambda, k)?;
                let p = residue_of_product(&prods[0], &h.plus)?;
                let q = residue_of_product(&prods[1], &h.minus)?;
                Ok(((n, m, k), p, q))
            })
            .collect()
    })?;
    Ok(Table::from_values(atlas.mode(), atlas.tolerance(), rows.into_iter().flatten().collect()))
}

/// Generalized translation constants `Res(f_{1-lambda,u} L_e f^n_lambda)`.
pub fn compute_zeta_lambda(atlas: &BasisAtlas, lambda: i64) -> Result<Table<Key2>, Error> {
    require(atlas, &[lambda, 1 - lambda, -1])?;
    let e = atlas.nabla_field()?;
    let idx = atlas.indices();
    let lie: BTreeMap<(BasisIndex, Point), LaurentExpansion> = par::try_map(&idx, |&n| {
        Point::BOTH
            .iter()
            .map(|&pt| Ok(((n, pt), lie_derivative(e.at(pt), atlas.f_upper(lambda, n)?.at(pt))?)))
            .collect::<Result<Vec<_>, Error>>()
    })?
    .into_iter()
    .flatten()
    .collect();
    let keys = pairs(&idx);
    let values = par::try_map(&keys, |&(u, n)| {
        let (p, q) = both_points(|pt| residue_of_product(atlas.f(1 - lambda, u)?.at(pt), &lie[&(n, pt)]))?;
        Ok::<_, Error>(((u, n), p, q))
    })?;
    Ok(Table::from_values(atlas.mode(), atlas.tolerance(), values))
}

/// `zeta^n_u` together with the largest gap to the form `-Res(omega^n e(dA_u))`.
pub fn compute_zeta(atlas: &BasisAtlas) -> Result<(Table<Key2>, f64), Error> {
    let table = compute_zeta_lambda(atlas, 1)?;
    let e = atlas.nabla_field()?;
    let idx = atlas.indices();
    let keys = pairs(&idx);
    let gaps = par::try_map(&keys, |&(u, n)| -> Result<f64, Error> {
        let mut gap: f64 = 0.0;
        for pt in Point::BOTH {
            let ed = series_mul(e.at(pt), &d_function(atlas.a(u)?.at(pt))?)?;
            let lit = residue_of_product(atlas.omega(n)?.at(pt), &ed)?;
            let cal = table.get(&(u, n));
            gap = gap.max((&cal + &lit).magnitude());
        }
        Ok(gap)
    })?;
    Ok((table, gaps.into_iter().fold(0.0, f64::max)))
}

/// `l^{jm}_n = Res(omega^j f^m_lambda f^{-n}_{-lambda})`.
pub fn compute_ell(atlas: &BasisAtlas, lambda: i64) -> Result<Table<Key3>, Error> {
    require(atlas, &[lambda, -lambda, 1])?;
    let idx = atlas.indices();
    let keys = pairs(&idx);
    let rows = par::try_map(&keys, |&(j, m)| -> Result<Vec<(Key3, Scalar, Scalar)>, Error> {
        let prods: Vec<LaurentExpansion> = Point::BOTH
            .iter()
            .map(|&pt| series_mul(atlas.omega(j)?.at(pt), atlas.f_upper(lambda, m)?.at(pt)))
            .collect::<Result<_, _>>()?;
        idx.iter()
            .map(|&n| {
                let h = atlas.f(-lambda, n)?;
                let p = residue_of_product(&prods[0], &h.plus)?;
                let q = residue_of_product(&prods[1], &h.minus)?;
                Ok(((j, m, n), p, q))
            })
            .collect()
    })?;
    Ok(Table::from_values(atlas.mode(), atlas.tolerance(), rows.into_iter().flatten().collect()))
}

/// `q^{(k)} = zeta^k` as matrices, `q^{(k),j}_u = sum_v zeta^v_u q^{(k-1),j}_v`.
pub fn compute_q(zeta: &Table<Key2>, idx: &[BasisIndex], k_max: u32, tol: f64) -> BTreeMap<u32, Table<Key2>> {
    let mut out = BTreeMap::new();
    if k_max == 0 {
        return out;
    }
    let mut rows: BTreeMap<BasisIndex, Vec<(BasisIndex, &Scalar)>> = BTreeMap::new();
    for (&(u, v), s) in &zeta.entries {
        rows.entry(u).or_default().push((v, s));
    }
    let mut prev = zeta.clone();
    prev.unreliable.clear();
    prev.cross_residual = zeta.cross_residual;
    out.insert(1, prev.clone());
    for k in 2..=k_max {
        let mut next = Table::new(zeta.mode);
        let per_u = par::map(idx, |&u| {
            let mut acc: BTreeMap<BasisIndex, Scalar> = BTreeMap::new();
            if let Some(r) = rows.get(&u) {
                for &(v, z) in r {
                    for (&(v2, j), s) in prev.entries.range((v, BasisIndex(i64::MIN))..=(v, BasisIndex(i64::MAX))) {
                        debug_assert_eq!(v2, v);
                        let t = z * s;
                        match acc.get_mut(&j) {
                            Some(a) => *a += &t,
                            None => {
                                acc.insert(j, t);
                            }
                        }
                    }
                }
            }
            (u, acc)
        });
        for (u, acc) in per_u {
            for (j, s) in acc {
                if !s.is_negligible(tol) {
                    next.entries.insert((u, j), s);
                }
            }
        }
        out.insert(k, next.clone());
        prev = next;
    }
    out
}

fn require(atlas: &BasisAtlas, lambdas: &[i64]) -> Result<(), Error> {
    for &l in lambdas {
        if !atlas.has_lambda(l) {
            return Err(Error::Config(format!("atlas lacks weight {l}")));
        }
    }
    Ok(())
}

/// Options for [`compute_tables`].
#[derive(Clone, Debug)]
pub struct TablesConfig {
    pub k_max: u32,
}

impl Default for TablesConfig {
    fn default() -> Self {
        TablesConfig { k_max: 3 }
    }
}

/// Every table the atlas supports, with measured bands and edge flags.
pub fn compute_tables(atlas: &BasisAtlas, cfg: &TablesConfig) -> Result<StructureTables, Error> {
    let mode = atlas.mode();
    let tol = atlas.tolerance();
    let idx = atlas.indices();
    let gamma = compute_gamma(atlas)?;
    let mut beta = BTreeMap::new();
    let mut zeta_lambda = BTreeMap::new();
    let mut ell = BTreeMap::new();
    for &l in &atlas.config.lambda_range {
        if atlas.has_lambda(1 - l) {
            beta.insert(l, compute_beta(atlas, l)?);
            if atlas.has_lambda(-1) {
                zeta_lambda.insert(l, compute_zeta_lambda(atlas, l)?);
            }
        }
        if atlas.has_lambda(-l) && atlas.has_lambda(l + 1) {
            ell.insert(l, compute_ell(atlas, l)?);
        }
    }
    let (zeta, zeta_literal_gap) = compute_zeta(atlas)?;
    let q = compute_q(&zeta, &idx, cfg.k_max, tol);
    let mut t = StructureTables {
        genus: atlas.genus(),
        mode,
        window: atlas.config.window,
        tolerance: tol,
        gamma,
        beta,
        zeta,
        zeta_literal_gap,
        zeta_lambda,
        ell,
        q,
        bands: BandConstants::default(),
    };
    t.bands = measure_bands(&t);
    flag_boundary(&mut t);
    Ok(t)
}

/// Half the doubled difference; callers only pass same-parity pairs.
fn half(d: i64) -> i64 {
    debug_assert!(d % 2 == 0);
    d / 2
}

pub fn measure_bands(t: &StructureTables) -> BandConstants {
    let g = t.genus as i64;
    let mut b = BandConstants::default();
    for (&l, table) in &t.beta {
        let (mut c1, mut c2) = (0, 0);
        for &(n, m, k) in table.entries.keys() {
            let off = half(k.doubled() - (m.doubled() - n.doubled() + g));
            c1 = c1.max(-off);
            c2 = c2.max(off);
        }
        b.beta.insert(l, (c1, c2));
    }
    b.zeta = t
        .zeta
        .entries
        .keys()
        .map(|&(u, m)| half(m.doubled() - u.doubled()))
        .max()
        .unwrap_or(0);
    b.gamma = t
        .gamma
        .entries
        .keys()
        .map(|&(n, m)| half((n.doubled() + m.doubled()).abs()))
        .max()
        .unwrap_or(0);
    for (&l, table) in &t.ell {
        let mut counts: BTreeMap<(BasisIndex, BasisIndex), usize> = BTreeMap::new();
        for &(j, _, n) in table.entries.keys() {
            *counts.entry((j, n)).or_default() += 1;
        }
        b.ell_width.insert(l, counts.values().copied().max().unwrap_or(0));
        let offs = table.entries.keys().map(|&(j, m, n)| half(m.doubled() - n.doubled() + j.doubled() + g));
        let lo = offs.clone().min().unwrap_or(0);
        let hi = offs.max().unwrap_or(g);
        b.ell.insert(l, (lo.min(0), hi.max(g)));
    }
    b
}

/// Marks entries whose expansion identity needs indices beyond the window.
fn flag_boundary(t: &mut StructureTables) {
    let g = t.genus as i64;
    let w = t.window.doubled();
    let idx = t.indices();
    let inside = |d: i64| d.abs() <= w;
    for (&l, table) in t.beta.iter_mut() {
        let (c1, c2) = t.bands.beta[&l];
        for &n in &idx {
            for &m in &idx {
                let centre = m.doubled() - n.doubled() + g;
                if !(inside(centre - 2 * c1) && inside(centre + 2 * c2)) {
                    for &k in &idx {
                        table.unreliable.insert((n, m, k));
                    }
                }
            }
        }
    }
    for (&l, table) in t.ell.iter_mut() {
        let (o1, o2) = t.bands.ell[&l];
        for &j in &idx {
            for &m in &idx {
                // n = m + j + g/2 - off
                let base = j.doubled() + m.doubled() + g;
                if !(inside(base - 2 * o2) && inside(base - 2 * o1)) {
                    for &n in &idx {
                        table.unreliable.insert((j, m, n));
                    }
                }
            }
        }
    }
    let c = t.bands.zeta.max(1);
    for (&k, table) in t.q.iter_mut() {
        let k = k as i64;
        for &u in &idx {
            if !(inside(u.doubled() - 2 * k) && inside(u.doubled() + 2 * k * c)) {
                for &j in &idx {
                    table.unreliable.insert((u, j));
                }
            }
        }
    }
}

/// Largest coefficient gap between two expansions over `lo..=hi`.
pub(crate) fn expansion_gap(a: &LaurentExpansion, b: &LaurentExpansion, lo: i64, hi: i64) -> Result<f64, Error> {
    let mut gap: f64 = 0.0;
    for k in lo..=hi {
        let d = &a.coeff(k)? - &b.coeff(k)?;
        gap = gap.max(d.magnitude());
    }
    Ok(gap)
}

#[cfg(test)]
mod tests;
