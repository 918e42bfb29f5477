use std::collections::BTreeMap;

use serde::Serialize;

use super::{overflow, FieldSpec, Vertex};
use crate::atlas::BasisIndex;
use crate::fock::{FockVector, Monomial};
use crate::numeric::Scalar;
use crate::Error;

#[derive(Clone, Debug, Serialize)]
pub struct VacuumReport {
    pub field: String,
    /// `-s_M`, in the usual half-integer notation.
    pub vacuum_index: String,
    /// Largest `|Phi_n v0|` over window indices `n > -s_M`.
    pub annihilation_residual: f64,
    pub indices_checked: usize,
    pub target: String,
    /// Coefficient of the target monomial in `Phi_{-s_M} v0`.
    pub leading: Scalar,
    /// `Phi_{-s_M} v0 - leading * target`.
    pub tail: String,
    pub tail_norm: f64,
    /// Every tail monomial has degree below the target degree.
    pub tail_lower_degree: bool,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TranslationReport {
    pub field: String,
    pub indices: Vec<String>,
    pub states: usize,
    pub checked: usize,
    /// `|nabla Phi_u v - [T, Phi_u] v|`, with `nabla` acting on the basis of the field's weight.
    pub max_residual: f64,
    /// `|[T, Phi_u] v - sum_i (Phi with k_i raised)_u v|`.
    pub leibniz_residual: f64,
    /// Largest `|c_u|` where `nabla Phi_u - sum_i (...)_u = c_u id` on the test states.
    pub central_anomaly: f64,
    /// How far that difference is from a multiple of the identity.
    pub non_central_residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalityReport {
    pub a: String,
    pub b: String,
    /// Largest `|n|` of the coefficient range examined.
    pub range: String,
    /// Largest `|n + m|` with `[A_n, B_m] != 0` on some test state.
    pub band: Option<String>,
    /// Largest `n + m` with `[A_n, B_m] != 0` on some test state.
    pub upper_band: Option<String>,
    /// Degree-count bound on `upper_band`; the doubled sum is `2 deg + D_A + D_B`.
    pub upper_bound: String,
    /// Smallest `N` with `(z - w)^N [A(z), B(w)] = 0` (genus 0 only).
    pub min_order: Option<u32>,
    /// Largest `|[a_n, a_m] v - bracket(n, m) v|` for the generator pair.
    pub generator_residual: Option<f64>,
    pub checked: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractionReport {
    pub name: String,
    pub checked: usize,
    pub max_residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WickReport {
    pub a: String,
    pub b: String,
    pub matchings: usize,
    pub checked: usize,
    pub max_residual: f64,
    pub passed: bool,
}

fn indices_up_to(v: &Vertex, r2: i64) -> Vec<BasisIndex> {
    (-r2..=r2).filter(|d| (d - v.g()).rem_euclid(2) == 0).map(BasisIndex).collect()
}

fn binomial(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * i64::from(n - i) / i64::from(i + 1))
}

impl<'a> Vertex<'a> {
    /// Vacuum property of `spec`: coefficients above `-s_M` kill `v0`, the one at `-s_M`
    /// returns the target monomial plus lower-degree terms.
    pub fn check_vacuum(&self, spec: &FieldSpec) -> Result<VacuumReport, Error> {
        let tol = self.tolerance();
        let mode = self.mode();
        let v0 = FockVector::vacuum(mode);
        let start = self.vacuum_index(spec.weight());
        if !self.inside(start) {
            return Err(overflow(format!("vacuum index {start} of {spec} lies outside the window")));
        }
        let mut residual: f64 = 0.0;
        let mut checked = 0;
        let mut n = start.shift(1);
        while n.doubled() <= self.w2() {
            residual = residual.max(self.apply_coefficient(spec, n, &v0)?.norm());
            checked += 1;
            n = n.shift(1);
        }
        let value = self.apply_coefficient(spec, start, &v0)?;
        let target = spec.target();
        let leading = value.coeff(&target);
        let mut tail = value.clone();
        tail.sub(&FockVector::basis(mode, target.clone()).scaled(&leading));
        tail.prune(tol);
        let tail_lower_degree = tail.terms.keys().all(|m| m.degree() < target.degree());
        let passed = residual <= tol && !leading.is_negligible(tol) && tail_lower_degree;
        Ok(VacuumReport {
            field: spec.to_string(),
            vacuum_index: start.to_string(),
            annihilation_residual: residual,
            indices_checked: checked,
            target: target.to_string(),
            leading,
            tail_norm: tail.norm(),
            tail: tail.to_string(),
            tail_lower_degree,
            passed,
        })
    }

    /// `(nabla Phi)_u v = T Phi_u v - Phi_u T v` for each index and state.
    pub fn check_translation(&self, spec: &FieldSpec, states: &[FockVector], indices: &[BasisIndex]) -> Result<TranslationReport, Error> {
        let tol = self.tolerance();
        let vacuum = FockVector::vacuum(self.mode());
        let raised: Vec<FieldSpec> = (0..spec.weight())
            .map(|i| {
                let mut o = spec.orders.clone();
                o[i] += 1;
                FieldSpec::new(o)
            })
            .collect();
        let leibniz = |u: BasisIndex, v: &FockVector| -> Result<FockVector, Error> {
            let mut out = FockVector::zero(self.mode());
            for r in &raised {
                out.add(&self.apply_coefficient(r, u, v)?);
            }
            Ok(out)
        };
        let mut central = Vec::with_capacity(indices.len());
        for &u in indices {
            let mut d = self.apply_nabla(spec, u, &vacuum)?;
            d.sub(&leibniz(u, &vacuum)?);
            central.push(d.coeff(&Monomial::vacuum()));
        }
        let (mut residual, mut lres, mut nonc): (f64, f64, f64) = (0.0, 0.0, 0.0);
        let mut checked = 0;
        for v in states {
            let tv = self.fock.apply_t(v)?;
            for (&u, c) in indices.iter().zip(&central) {
                let lhs = self.apply_nabla(spec, u, v)?;
                let mut rhs = self.fock.apply_t(&self.apply_coefficient(spec, u, v)?)?;
                rhs.sub(&self.apply_coefficient(spec, u, &tv)?);
                let expanded = leibniz(u, v)?;
                residual = residual.max(lhs.distance(&rhs));
                lres = lres.max(rhs.distance(&expanded));
                let mut d = lhs;
                d.sub(&expanded);
                nonc = nonc.max(d.distance(&v.scaled(c)));
                checked += 1;
            }
        }
        Ok(TranslationReport {
            field: spec.to_string(),
            indices: indices.iter().map(|n| n.to_string()).collect(),
            states: states.len(),
            checked,
            max_residual: residual,
            leibniz_residual: lres,
            central_anomaly: central.iter().map(Scalar::magnitude).fold(0.0, f64::max),
            non_central_residual: nonc,
            passed: residual <= tol,
        })
    }

    /// Commutator kernel `[A_n, B_m]` for `|n|, |m| <= range` on the test states.
    pub fn check_locality(
        &self,
        a: &FieldSpec,
        b: &FieldSpec,
        states: &[FockVector],
        range: BasisIndex,
        max_order: u32,
    ) -> Result<LocalityReport, Error> {
        let tol = self.tolerance();
        let idx = indices_up_to(self, range.doubled());
        let mut kernel: BTreeMap<(BasisIndex, BasisIndex), Vec<FockVector>> = BTreeMap::new();
        let mut band: Option<i64> = None;
        let mut upper: Option<i64> = None;
        let mut gen_res: Option<f64> = None;
        let generators = a.orders == [0] && b.orders == [0];
        for &n in &idx {
            for &m in &idx {
                let mut row = Vec::with_capacity(states.len());
                for v in states {
                    let mut k = self.apply_coefficient(a, n, &self.apply_coefficient(b, m, v)?)?;
                    k.sub(&self.apply_coefficient(b, m, &self.apply_coefficient(a, n, v)?)?);
                    k.prune(tol);
                    if k.norm() > tol {
                        let s = (n.doubled() + m.doubled()).abs();
                        band = Some(band.map_or(s, |b| b.max(s)));
                        let u = n.doubled() + m.doubled();
                        upper = Some(upper.map_or(u, |b| b.max(u)));
                    }
                    if generators {
                        let want = v.scaled(&self.fock.bracket(n, m)?);
                        let r = gen_res.unwrap_or(0.0).max(k.distance(&want));
                        gen_res = Some(r);
                    }
                    row.push(k);
                }
                kernel.insert((n, m), row);
            }
        }
        let checked = idx.len() * idx.len() * states.len();
        let mut min_order = None;
        if self.genus() == 0 {
            'order: for order in 0..=max_order {
                for &p in &idx {
                    for &r in &idx {
                        if !(self.within(p.shift(order as i64), range) && self.within(r.shift(order as i64), range)) {
                            continue;
                        }
                        for (s, _) in states.iter().enumerate() {
                            let mut acc = FockVector::zero(self.mode());
                            for i in 0..=order {
                                let c = binomial(order, i) * if i % 2 == 0 { 1 } else { -1 };
                                let key = (p.shift((order - i) as i64), r.shift(i as i64));
                                acc.add_scaled(&kernel[&key][s], &self.mode().from_int(c));
                            }
                            if acc.norm() > tol {
                                continue 'order;
                            }
                        }
                    }
                }
                min_order = Some(order);
                break;
            }
        }
        // A_n B_m v and B_m A_n v vanish once n + m exceeds deg v + (D_A + D_B)/2
        let max_deg = states.iter().filter(|v| !v.is_zero()).map(|v| v.degree(0.0)).collect::<Result<Vec<_>, _>>()?;
        let bound = 2 * max_deg.into_iter().max().unwrap_or(0) as i64 + self.degree_shift(&a.orders)? + self.degree_shift(&b.orders)?;
        let band_ok = match (band, upper) {
            (Some(b), _) if generators => b <= 2 * self.tables.bands.gamma,
            (_, Some(u)) => u <= bound,
            _ => true,
        };
        let passed = band_ok
            && gen_res.is_none_or(|r| r <= tol)
            && (self.genus() != 0 || min_order.is_some());
        Ok(LocalityReport {
            a: a.to_string(),
            b: b.to_string(),
            range: range.to_string(),
            band: band.map(|b| BasisIndex(b).to_string()),
            upper_band: upper.map(|b| BasisIndex(b).to_string()),
            upper_bound: BasisIndex(bound).to_string(),
            min_order,
            generator_residual: gen_res,
            checked,
            passed,
        })
    }

    fn within(&self, n: BasisIndex, range: BasisIndex) -> bool {
        n.doubled().abs() <= range.doubled()
    }

    /// `[D^k a_-, D^h a_-] = 0`: annihilation parts commute.
    pub fn check_minus_commute(&self, k: u32, h: u32, states: &[FockVector], range: BasisIndex) -> Result<ContractionReport, Error> {
        let idx: Vec<BasisIndex> = indices_up_to(self, range.doubled()).into_iter().filter(|n| *n >= self.half_genus()).collect();
        let mut residual: f64 = 0.0;
        let mut checked = 0;
        for v in states {
            for &n in &idx {
                for &m in &idx {
                    let mut c = self.apply_derivative(k, n, &self.apply_derivative(h, m, v)?)?;
                    c.sub(&self.apply_derivative(h, m, &self.apply_derivative(k, n, v)?)?);
                    residual = residual.max(c.norm());
                    checked += 1;
                }
            }
        }
        Ok(ContractionReport {
            name: format!("[D{k} a_-, D{h} a_-]"),
            checked,
            max_residual: residual,
            passed: residual <= self.tolerance(),
        })
    }

    /// `[[D^k a_-, D^h a], D^f a] = 0`: contractions are central.
    pub fn check_double_bracket(&self, k: u32, h: u32, f: u32, states: &[FockVector], range: BasisIndex) -> Result<ContractionReport, Error> {
        let all = indices_up_to(self, range.doubled());
        let minus: Vec<BasisIndex> = all.iter().copied().filter(|n| *n >= self.half_genus()).collect();
        let mut residual: f64 = 0.0;
        let mut checked = 0;
        let inner = |n: BasisIndex, m: BasisIndex, v: &FockVector| -> Result<FockVector, Error> {
            let mut c = self.apply_derivative(k, n, &self.apply_derivative(h, m, v)?)?;
            c.sub(&self.apply_derivative(h, m, &self.apply_derivative(k, n, v)?)?);
            Ok(c)
        };
        for v in states {
            for &n in &minus {
                for &m in &all {
                    for &p in &all {
                        let mut c = inner(n, m, &self.apply_derivative(f, p, v)?)?;
                        c.sub(&self.apply_derivative(f, p, &inner(n, m, v)?)?);
                        residual = residual.max(c.norm());
                        checked += 1;
                    }
                }
            }
        }
        Ok(ContractionReport {
            name: format!("[[D{k} a_-, D{h} a], D{f} a]"),
            checked,
            max_residual: residual,
            passed: residual <= self.tolerance(),
        })
    }

    /// Coefficient of `f^n_M` in the product of the one-forms `omega^{u_1} ... omega^{u_M}`.
    pub fn product_coefficient(&self, us: &[BasisIndex], n: BasisIndex) -> Result<Scalar, Error> {
        let mode = self.mode();
        match us {
            [] => Ok(if n.doubled() == -self.g() { mode.one() } else { mode.zero() }),
            [u] => Ok(if *u == n { mode.one() } else { mode.zero() }),
            [u, rest @ ..] => {
                let lambda = rest.len();
                let (o1, o2) = self.ell_band(lambda)?;
                let mut acc = mode.zero();
                for o in o1..=o2 {
                    let m = BasisIndex(n.doubled() - u.doubled() - self.g() + 2 * o);
                    if !self.product_feasible(rest, m)? {
                        continue;
                    }
                    let l = self.ell(lambda, *u, m, n)?;
                    if l.is_exact_zero() {
                        continue;
                    }
                    let e = self.product_coefficient(rest, m)?;
                    acc += &(&l * &e);
                }
                Ok(acc)
            }
        }
    }

    /// Whether the index pattern alone allows `product_coefficient(us, n) != 0`.
    fn product_feasible(&self, us: &[BasisIndex], n: BasisIndex) -> Result<bool, Error> {
        match us {
            [] => Ok(n.doubled() == -self.g()),
            [u] => Ok(*u == n),
            [u, rest @ ..] => {
                let (o1, o2) = self.ell_band(rest.len())?;
                for o in o1..=o2 {
                    if self.product_feasible(rest, BasisIndex(n.doubled() - u.doubled() - self.g() + 2 * o))? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }

    /// `[a^{(k)}_u, a^{(h)}_w]` as a scalar.
    pub fn contraction(&self, k: u32, u: BasisIndex, h: u32, w: BasisIndex) -> Result<Scalar, Error> {
        let mut acc = self.mode().zero();
        for (i, x) in self.q_row(k, u)? {
            for (j, y) in self.q_row(h, w)? {
                let b = self.fock.bracket(i, j)?;
                if !b.is_exact_zero() {
                    acc += &(&(&x * &y) * &b);
                }
            }
        }
        Ok(acc)
    }

    /// Both sides of the Wick expansion of `A(P) B(Q)` at coefficient level.
    pub fn check_wick(
        &self,
        a: &FieldSpec,
        b: &FieldSpec,
        states: &[FockVector],
        range: BasisIndex,
    ) -> Result<WickReport, Error> {
        let idx = indices_up_to(self, range.doubled());
        let matchings = matchings(a.weight(), b.weight());
        let mut residual: f64 = 0.0;
        let mut checked = 0;
        for v in states {
            for &n in &idx {
                for &m in &idx {
                    let lhs = self.apply_coefficient(a, n, &self.apply_coefficient(b, m, v)?)?;
                    let mut rhs = FockVector::zero(self.mode());
                    for mu in &matchings {
                        rhs.add(&self.wick_term(&a.orders, &b.orders, mu, n, m, v)?);
                    }
                    residual = residual.max(lhs.distance(&rhs));
                    checked += 1;
                }
            }
        }
        Ok(WickReport {
            a: a.to_string(),
            b: b.to_string(),
            matchings: matchings.len(),
            checked,
            max_residual: residual,
            passed: residual <= self.tolerance(),
        })
    }

    /// One matching's contribution: contracted pairs times the normal product of the rest.
    fn wick_term(
        &self,
        xs: &[u32],
        ys: &[u32],
        mu: &[Option<usize>],
        n: BasisIndex,
        m: BasisIndex,
        v: &FockVector,
    ) -> Result<FockVector, Error> {
        let mode = self.mode();
        let mut out = FockVector::zero(mode);
        if v.is_zero() {
            return Ok(out);
        }
        let g = self.g();
        let deg2 = 2 * v.degree(0.0)? as i64;
        let matched_y: Vec<bool> = (0..ys.len()).map(|j| mu.contains(&Some(j))).collect();
        let mut iv: Vec<Interval> = Vec::new();
        for (i, &k) in xs.iter().enumerate() {
            iv.push(if mu[i].is_some() {
                Interval { lo: Some(g), hi: None }
            } else {
                Interval { lo: None, hi: Some((g - 2).max(self.floor_parity(deg2 + self.degree_shift(&[k])?))) }
            });
        }
        for (j, &h) in ys.iter().enumerate() {
            iv.push(if matched_y[j] {
                Interval { lo: None, hi: None }
            } else {
                Interval { lo: None, hi: Some((g - 2).max(self.floor_parity(deg2 + self.degree_shift(&[h])?))) }
            });
        }
        let mut sums = Vec::new();
        let xi: Vec<usize> = (0..xs.len()).collect();
        let yi: Vec<usize> = (xs.len()..xs.len() + ys.len()).collect();
        for (vars, target) in [(&xi, n), (&yi, m)] {
            if vars.is_empty() {
                continue;
            }
            let (mut lo, mut hi) = (0, 0);
            for lambda in 1..vars.len() {
                let (o1, o2) = self.ell_band(lambda)?;
                lo += o1;
                hi += o2;
            }
            let base = target.doubled() - (vars.len() as i64 - 1) * g;
            sums.push((vars.clone(), base + 2 * lo, base + 2 * hi));
        }
        let (zlo, zhi) = self.zeta_offsets();
        let gam = self.tables.bands.gamma;
        for (i, j) in mu.iter().enumerate().filter_map(|(i, j)| j.map(|j| (i, j))) {
            let kh = i64::from(xs[i] + ys[j]);
            sums.push((vec![i, xs.len() + j], 2 * (-gam - zhi * kh), 2 * (gam - zlo * kh)));
        }
        propagate(&mut iv, &sums);
        let w2 = self.w2();
        let mut bounds = Vec::new();
        for (t, b) in iv.iter().enumerate() {
            match (b.lo, b.hi) {
                (Some(lo), Some(hi)) => {
                    if lo > hi {
                        return Ok(out);
                    }
                    if lo < -w2 || hi > w2 {
                        return Err(overflow(format!("Wick term index {t} ranges over [{}, {}] beyond the window", BasisIndex(lo), BasisIndex(hi))));
                    }
                    bounds.push((lo, hi));
                }
                _ => return Err(overflow("Wick term index range is unbounded".into())),
            }
        }
        let mut tuple = vec![0i64; iv.len()];
        let mut tuples = Vec::new();
        enumerate(&bounds, &sums, g, 0, &mut tuple, &mut tuples);
        for t in tuples {
            let us: Vec<BasisIndex> = t[..xs.len()].iter().map(|&d| BasisIndex(d)).collect();
            let ws: Vec<BasisIndex> = t[xs.len()..].iter().map(|&d| BasisIndex(d)).collect();
            let half = self.half_genus();
            // word: X+ (nest order) Y+ (nest order) then every minus factor
            let mut word: Vec<(u32, BasisIndex)> = Vec::new();
            word.extend(xs.iter().zip(&us).enumerate().filter(|(i, (_, u))| mu[*i].is_none() && **u < half).map(|(_, (k, u))| (*k, *u)));
            word.extend(ys.iter().zip(&ws).enumerate().filter(|(j, (_, w))| !matched_y[*j] && **w < half).map(|(_, (h, w))| (*h, *w)));
            word.extend(xs.iter().zip(&us).enumerate().filter(|(i, (_, u))| mu[*i].is_none() && **u >= half).map(|(_, (k, u))| (*k, *u)));
            word.extend(ys.iter().zip(&ws).enumerate().filter(|(j, (_, w))| !matched_y[*j] && **w >= half).map(|(_, (h, w))| (*h, *w)));
            let mut cur = v.clone();
            for &(k, u) in word.iter().rev() {
                if cur.is_zero() {
                    break;
                }
                cur = self.apply_derivative(k, u, &cur)?;
            }
            if cur.is_zero() {
                continue;
            }
            let mut coef = self.product_coefficient(&us, n)?;
            if coef.is_exact_zero() {
                continue;
            }
            coef *= &self.product_coefficient(&ws, m)?;
            if coef.is_exact_zero() {
                continue;
            }
            for (i, j) in mu.iter().enumerate().filter_map(|(i, j)| j.map(|j| (i, j))) {
                coef *= &self.contraction(xs[i], us[i], ys[j], ws[j])?;
            }
            if coef.is_negligible(0.0) {
                continue;
            }
            out.add_scaled(&cur, &coef);
        }
        out.prune(self.tolerance());
        Ok(out)
    }
}

/// Every partial injection from `0..m` into `0..n`, as `x -> Option<y>`.
fn matchings(m: usize, n: usize) -> Vec<Vec<Option<usize>>> {
    fn go(i: usize, m: usize, n: usize, used: &mut Vec<bool>, cur: &mut Vec<Option<usize>>, out: &mut Vec<Vec<Option<usize>>>) {
        if i == m {
            out.push(cur.clone());
            return;
        }
        cur.push(None);
        go(i + 1, m, n, used, cur, out);
        cur.pop();
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                cur.push(Some(j));
                go(i + 1, m, n, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(0, m, n, &mut vec![false; n], &mut Vec::new(), &mut out);
    out
}

/// Doubled index bounds; `None` is unbounded.
#[derive(Clone, Copy, Debug)]
struct Interval {
    lo: Option<i64>,
    hi: Option<i64>,
}

/// Tightens `iv` against `sum_{t in vars} x_t in [lo, hi]` until nothing changes.
fn propagate(iv: &mut [Interval], sums: &[(Vec<usize>, i64, i64)]) {
    for _ in 0..4 * iv.len() + 4 {
        let mut changed = false;
        for (vars, lo, hi) in sums {
            for &t in vars {
                let others = vars.iter().filter(|&&s| s != t);
                let max_others: Option<i64> = others.clone().map(|&s| iv[s].hi).sum();
                let min_others: Option<i64> = others.map(|&s| iv[s].lo).sum();
                if let Some(mo) = max_others {
                    let cand = lo - mo;
                    if iv[t].lo.is_none_or(|l| cand > l) {
                        iv[t].lo = Some(cand);
                        changed = true;
                    }
                }
                if let Some(mo) = min_others {
                    let cand = hi - mo;
                    if iv[t].hi.is_none_or(|h| cand < h) {
                        iv[t].hi = Some(cand);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
}

fn enumerate(bounds: &[(i64, i64)], sums: &[(Vec<usize>, i64, i64)], g: i64, t: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    if t == bounds.len() {
        if sums.iter().all(|(vars, lo, hi)| {
            let s: i64 = vars.iter().map(|&i| cur[i]).sum();
            s >= *lo && s <= *hi
        }) {
            out.push(cur.clone());
        }
        return;
    }
    let (lo, hi) = bounds[t];
    let start = if (lo - g).rem_euclid(2) == 0 { lo } else { lo + 1 };
    let mut d = start;
    while d <= hi {
        cur[t] = d;
        // prune sums whose variables are all assigned
        let ok = sums.iter().all(|(vars, lo, hi)| {
            if vars.iter().any(|&i| i > t) {
                return true;
            }
            let s: i64 = vars.iter().map(|&i| cur[i]).sum();
            s >= *lo && s <= *hi
        });
        if ok {
            enumerate(bounds, sums, g, t + 1, cur, out);
        }
        d += 2;
    }
}
