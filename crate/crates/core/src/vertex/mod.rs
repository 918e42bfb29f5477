//! Fields built from the Heisenberg generator, their normal-ordered products and the
//! state-field map, evaluated coefficientwise on the Fock module.

mod checks;
#[cfg(test)]
mod tests;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Mutex;

use crate::atlas::BasisIndex;
use crate::fock::{FockSpace, FockVector, Monomial};
use crate::numeric::{Scalar, ScalarMode};
use crate::tables::StructureTables;
use crate::Error;

pub use checks::{
    ContractionReport, LocalityReport, TranslationReport, VacuumReport, WickReport,
};

/// `(j, coefficient)` pairs of an operator row.
pub type Row = Vec<(BasisIndex, Scalar)>;

/// The iterated normal-ordered word `:D^{k_1} a : D^{k_2} a : ... ::`, nested from the right.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldSpec {
    pub orders: Vec<u32>,
}

impl FieldSpec {
    pub fn identity() -> Self {
        FieldSpec { orders: Vec::new() }
    }

    pub fn generator() -> Self {
        Self::derivative(0)
    }

    pub fn derivative(k: u32) -> Self {
        FieldSpec { orders: vec![k] }
    }

    pub fn new(orders: Vec<u32>) -> Self {
        FieldSpec { orders }
    }

    pub fn weight(&self) -> usize {
        self.orders.len()
    }

    pub fn is_identity(&self) -> bool {
        self.orders.is_empty()
    }

    /// Monomial whose vacuum image leads this field: parts `k_i + 1`.
    pub fn target(&self) -> Monomial {
        Monomial::new(self.orders.iter().map(|k| k + 1).collect()).expect("parts are positive")
    }

    /// Conformal dimension: the degree of [`FieldSpec::target`].
    pub fn dimension(&self) -> u64 {
        self.target().degree()
    }

    /// Parses `":D2 a . D0 a:"`, `"a"`, `"D1 a"` and `"id"`.
    pub fn parse(s: &str) -> Result<Self, Error> {
        let t = s.trim();
        let bad = || Error::Parse(format!("bad field literal '{s}' (expected e.g. ':D2 a . D0 a:' or 'id')"));
        if t == "id" || t == "1" {
            return Ok(Self::identity());
        }
        let body = match t.strip_prefix(':') {
            Some(b) => b.strip_suffix(':').ok_or_else(bad)?,
            None => t,
        };
        let mut orders = Vec::new();
        for factor in body.split('.') {
            let f: String = factor.chars().filter(|c| !c.is_whitespace()).collect();
            let k = if f == "a" {
                0
            } else {
                let k = f.strip_prefix('D').and_then(|r| r.strip_suffix('a')).ok_or_else(bad)?;
                k.parse::<u32>().map_err(|_| bad())?
            };
            orders.push(k);
        }
        Ok(FieldSpec { orders })
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.orders.is_empty() {
            return write!(f, "id");
        }
        let parts: Vec<String> = self.orders.iter().map(|k| format!("D{k} a")).collect();
        write!(f, ":{}:", parts.join(" . "))
    }
}

/// State-field map: parts `(n_1, ..., n_M)` go to `:D^{n_1-1} a ... D^{n_M-1} a:`.
#[allow(non_snake_case)]
pub fn Y(state: &Monomial) -> FieldSpec {
    FieldSpec { orders: state.parts().iter().map(|p| p - 1).collect() }
}

/// A coefficient of a field as a finite sum of generator words.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientOperator {
    pub mode: ScalarMode,
    /// Words act rightmost letter first.
    pub words: BTreeMap<Vec<BasisIndex>, Scalar>,
}

impl CoefficientOperator {
    pub fn apply(&self, fock: &FockSpace, v: &FockVector) -> Result<FockVector, Error> {
        let mut out = FockVector::zero(self.mode);
        for (w, c) in &self.words {
            out.add_scaled(&fock.apply_word(w, v)?, c);
        }
        out.prune(fock.tolerance);
        Ok(out)
    }

    fn add(&mut self, w: Vec<BasisIndex>, c: Scalar) {
        if c.is_exact_zero() {
            return;
        }
        match self.words.get_mut(&w) {
            Some(s) => {
                *s += &c;
                if s.is_exact_zero() {
                    self.words.remove(&w);
                }
            }
            None => {
                self.words.insert(w, c);
            }
        }
    }
}

impl fmt::Display for CoefficientOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.words.is_empty() {
            return write!(f, "0");
        }
        if self.words.len() == 1 {
            if let Some(c) = self.words.get(&Vec::new()) {
                if *c == self.mode.one() {
                    return write!(f, "id");
                }
            }
        }
        for (i, (w, c)) in self.words.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            if w.is_empty() {
                write!(f, "*id")?;
            }
            for n in w {
                write!(f, "*a_{{{n}}}")?;
            }
        }
        Ok(())
    }
}

type CacheKey = (Vec<u32>, BasisIndex, Monomial);

/// Field evaluation against a fixed tables bundle.
pub struct Vertex<'a> {
    pub tables: &'a StructureTables,
    pub fock: FockSpace,
    zeta_lo: i64,
    cache: Mutex<HashMap<CacheKey, FockVector>>,
}

fn overflow(what: String) -> Error {
    Error::WindowOverflow(what)
}

impl<'a> Vertex<'a> {
    pub fn new(tables: &'a StructureTables) -> Self {
        let zeta_lo = tables
            .zeta
            .entries
            .keys()
            .map(|(u, n)| (n.doubled() - u.doubled()) / 2)
            .min()
            .unwrap_or(-1)
            .min(0);
        Vertex { tables, fock: FockSpace::new(tables), zeta_lo, cache: Mutex::new(HashMap::new()) }
    }

    pub fn genus(&self) -> u32 {
        self.tables.genus
    }

    pub fn mode(&self) -> ScalarMode {
        self.tables.mode
    }

    pub fn tolerance(&self) -> f64 {
        self.tables.tolerance
    }

    pub fn half_genus(&self) -> BasisIndex {
        BasisIndex(self.genus() as i64)
    }

    fn g(&self) -> i64 {
        self.genus() as i64
    }

    fn w2(&self) -> i64 {
        self.tables.window.doubled()
    }

    fn inside(&self, n: BasisIndex) -> bool {
        n.doubled().abs() <= self.w2()
    }

    /// Largest doubled index `<= x` of the right parity.
    fn floor_parity(&self, x: i64) -> i64 {
        if (x - self.g()).rem_euclid(2) == 0 {
            x
        } else {
            x - 1
        }
    }

    /// `-s_M`: the index at which a weight-`M` field first fails to kill the vacuum.
    pub fn vacuum_index(&self, weight: usize) -> BasisIndex {
        let m = weight as i64;
        BasisIndex(-((1 - 2 * m) * self.g() + 2 * m))
    }

    /// Offsets `(lo, hi)` of `zeta^n_u` around `u`.
    pub fn zeta_offsets(&self) -> (i64, i64) {
        (self.zeta_lo, self.tables.bands.zeta)
    }

    fn ell_band(&self, lambda: usize) -> Result<(i64, i64), Error> {
        self.tables
            .bands
            .ell
            .get(&(lambda as i64))
            .copied()
            .ok_or_else(|| Error::Config(format!("tables lack the weight-{lambda} product table (extend the atlas weights)")))
    }

    /// `l^{jm}_n` for products against a weight-`lambda` field.
    pub fn ell(&self, lambda: usize, j: BasisIndex, m: BasisIndex, n: BasisIndex) -> Result<Scalar, Error> {
        let table = self
            .tables
            .ell
            .get(&(lambda as i64))
            .ok_or_else(|| Error::Config(format!("tables lack the weight-{lambda} product table (extend the atlas weights)")))?;
        if !(self.inside(j) && self.inside(m) && self.inside(n)) {
            return Err(overflow(format!("l^{{{j},{m}}}_{n} at weight {lambda} lies outside the window {}", self.tables.window)));
        }
        Ok(table.get(&(j, m, n)))
    }

    /// `q^{(k),j}_u` for all `j`; `k = 0` is the identity row.
    pub fn q_row(&self, k: u32, u: BasisIndex) -> Result<Row, Error> {
        let (row, cut) = self.q_row_raw(k, u)?;
        match cut {
            Some(_) => Err(overflow(format!("derivative row q^({k})_{u} is cut by the window {}", self.tables.window))),
            None => Ok(row),
        }
    }

    /// The stored row and, if the window cuts it, the smallest doubled `j` whose entry may be incomplete.
    fn q_row_raw(&self, k: u32, u: BasisIndex) -> Result<(Row, Option<i64>), Error> {
        if k == 0 {
            return Ok((vec![(u, self.mode().one())], None));
        }
        let table = self
            .tables
            .q
            .get(&k)
            .ok_or_else(|| Error::Config(format!("tables carry derivative orders up to {}, need {k}", self.tables.q.len())))?;
        let (lo, hi) = self.zeta_offsets();
        let k = k as i64;
        let cut = if self.inside(u.shift(lo * k)) && self.inside(u.shift(hi * k)) {
            None
        } else {
            Some(self.w2() + 2 + 2 * lo * (k - 1))
        };
        let row = table
            .entries
            .range((u, BasisIndex(i64::MIN))..=(u, BasisIndex(i64::MAX)))
            .map(|(&(_, j), s)| (j, s.clone()))
            .collect();
        Ok((row, cut))
    }

    /// `a^{(k)}_u = sum_j q^{(k),j}_u a_j`.
    pub fn generator_field_coefficient(&self, k: u32, u: BasisIndex) -> Result<CoefficientOperator, Error> {
        let mut op = CoefficientOperator { mode: self.mode(), words: BTreeMap::new() };
        for (j, c) in self.q_row(k, u)? {
            op.add(vec![j], c);
        }
        Ok(op)
    }

    /// `a^{(k)}_u v`. A row cut by the window is accepted when its incomplete entries annihilate `v`.
    pub fn apply_derivative(&self, k: u32, u: BasisIndex, v: &FockVector) -> Result<FockVector, Error> {
        let mut out = FockVector::zero(self.mode());
        if v.is_zero() {
            return Ok(out);
        }
        let (row, cut) = self.q_row_raw(k, u)?;
        if let Some(j2) = cut {
            let deg2 = 2 * v.degree(0.0)? as i64;
            if j2 <= deg2 + self.degree_shift(&[0])? {
                return Err(overflow(format!("derivative row q^({k})_{u} is cut by the window {}", self.tables.window)));
            }
        }
        for (j, c) in row {
            out.add_scaled(&self.fock.apply_generator(j, v)?, &c);
        }
        out.prune(self.tolerance());
        Ok(out)
    }

    /// Doubled `D` with `deg(Phi_n v) <= deg v - n + D/2` for every coefficient of the field.
    pub fn degree_shift(&self, orders: &[u32]) -> Result<i64, Error> {
        let g = self.g();
        let gam = self.tables.bands.gamma;
        match orders {
            [] => Ok(-g),
            [k] => Ok(-2 * self.zeta_lo * i64::from(*k) + g.max(2 * gam - g)),
            [k, rest @ ..] => {
                let (o1, _) = self.ell_band(rest.len())?;
                Ok(self.degree_shift(&[*k])? + self.degree_shift(rest)? + g - 2 * o1)
            }
        }
    }

    /// `Phi_n v` for the field `spec`.
    pub fn apply_coefficient(&self, spec: &FieldSpec, n: BasisIndex, v: &FockVector) -> Result<FockVector, Error> {
        self.apply_orders(&spec.orders, n, v)
    }

    fn apply_orders(&self, orders: &[u32], n: BasisIndex, v: &FockVector) -> Result<FockVector, Error> {
        let mut out = FockVector::zero(self.mode());
        for (m, c) in &v.terms {
            out.add_scaled(&self.on_monomial(orders, n, m)?, c);
        }
        out.prune(self.tolerance());
        Ok(out)
    }

    fn on_monomial(&self, orders: &[u32], n: BasisIndex, mono: &Monomial) -> Result<FockVector, Error> {
        let key = (orders.to_vec(), n, mono.clone());
        if let Some(v) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(v.clone());
        }
        let v = self.compute_on_monomial(orders, n, mono)?;
        self.cache.lock().expect("cache poisoned").insert(key, v.clone());
        Ok(v)
    }

    fn compute_on_monomial(&self, orders: &[u32], n: BasisIndex, mono: &Monomial) -> Result<FockVector, Error> {
        let mode = self.mode();
        let g = self.g();
        let basis = FockVector::basis(mode, mono.clone());
        let deg2 = 2 * mono.degree() as i64;
        if n.doubled() > deg2 + self.degree_shift(orders)? {
            return Ok(FockVector::zero(mode));
        }
        let (k, rest) = match orders {
            [] => return Ok(if n.doubled() == -g { basis } else { FockVector::zero(mode) }),
            [k] => return self.apply_derivative(*k, n, &basis),
            [k, rest @ ..] => (*k, rest),
        };
        let lambda = rest.len();
        let (o1, o2) = self.ell_band(lambda)?;
        let mut out = FockVector::zero(mode);
        // creation side: j < g/2 with m = n - j - g/2 + o
        let m_lo = n.doubled() - 2 * g + 2 * o1 + 2;
        let m_hi = self.floor_parity(deg2 + self.degree_shift(rest)?);
        let mut m2 = m_lo;
        while m2 <= m_hi {
            let m = BasisIndex(m2);
            m2 += 2;
            if !self.inside(m) {
                return Err(overflow(format!("coefficient {n} of {} needs index {m} beyond the window {}", FieldSpec::new(orders.to_vec()), self.tables.window)));
            }
            let y = self.on_monomial(rest, m, mono)?;
            if y.is_zero() {
                continue;
            }
            for o in o1..=o2 {
                let j = BasisIndex(n.doubled() - g + 2 * o - m.doubled());
                if j.doubled() >= g {
                    continue;
                }
                let l = self.ell(lambda, j, m, n)?;
                if l.is_exact_zero() {
                    continue;
                }
                out.add_scaled(&self.apply_derivative(k, j, &y)?, &l);
            }
        }
        // annihilation side: j >= g/2, applied first
        let j_hi = self.floor_parity(deg2 + self.degree_shift(&[k])?);
        let mut j2 = g;
        while j2 <= j_hi {
            let j = BasisIndex(j2);
            j2 += 2;
            let x = self.apply_derivative(k, j, &basis)?;
            if x.is_zero() {
                continue;
            }
            for o in o1..=o2 {
                let m = BasisIndex(n.doubled() - j.doubled() - g + 2 * o);
                let l = self.ell(lambda, j, m, n)?;
                if l.is_exact_zero() {
                    continue;
                }
                out.add_scaled(&self.apply_orders(rest, m, &x)?, &l);
            }
        }
        out.prune(self.tolerance());
        Ok(out)
    }

    /// Word expansion of `Phi_n`, exact on every state of degree at most `max_degree`.
    pub fn coefficient_operator(&self, spec: &FieldSpec, n: BasisIndex, max_degree: u32) -> Result<CoefficientOperator, Error> {
        let mut op = CoefficientOperator { mode: self.mode(), words: BTreeMap::new() };
        for (w, c) in self.words(&spec.orders, n, 2 * i64::from(max_degree))? {
            op.add(w, c);
        }
        Ok(op)
    }

    /// `:D^k a . B:_n` as words, for a weight-one left factor.
    pub fn nop_coefficient(&self, k: u32, b: &FieldSpec, n: BasisIndex, max_degree: u32) -> Result<CoefficientOperator, Error> {
        let mut orders = vec![k];
        orders.extend_from_slice(&b.orders);
        self.coefficient_operator(&FieldSpec::new(orders), n, max_degree)
    }

    fn words(&self, orders: &[u32], n: BasisIndex, deg2: i64) -> Result<Vec<(Vec<BasisIndex>, Scalar)>, Error> {
        let g = self.g();
        let one = self.mode().one();
        let (k, rest) = match orders {
            [] => return Ok(if n.doubled() == -g { vec![(Vec::new(), one)] } else { Vec::new() }),
            [k] => {
                return Ok(self.q_row(*k, n)?.into_iter().map(|(j, c)| (vec![j], c)).collect());
            }
            [k, rest @ ..] => (*k, rest),
        };
        if deg2 < 0 {
            return Ok(Vec::new());
        }
        let lambda = rest.len();
        let (o1, o2) = self.ell_band(lambda)?;
        let mut out = Vec::new();
        let m_lo = n.doubled() - 2 * g + 2 * o1 + 2;
        let m_hi = self.floor_parity(deg2 + self.degree_shift(rest)?);
        for m2 in (m_lo..=m_hi).step_by(2) {
            let m = BasisIndex(m2);
            if !self.inside(m) {
                return Err(overflow(format!("coefficient {n} needs index {m} beyond the window {}", self.tables.window)));
            }
            let ys = self.words(rest, m, deg2)?;
            if ys.is_empty() {
                continue;
            }
            for o in o1..=o2 {
                let j = BasisIndex(n.doubled() - g + 2 * o - m2);
                if j.doubled() >= g {
                    continue;
                }
                let l = self.ell(lambda, j, m, n)?;
                if l.is_exact_zero() {
                    continue;
                }
                for (i, q) in self.q_row(k, j)? {
                    let lq = &l * &q;
                    for (w, c) in &ys {
                        let mut word = vec![i];
                        word.extend_from_slice(w);
                        out.push((word, &lq * c));
                    }
                }
            }
        }
        let j_hi = self.floor_parity(deg2 + self.degree_shift(&[k])?);
        for j2 in (g..=j_hi).step_by(2) {
            let j = BasisIndex(j2);
            for o in o1..=o2 {
                let m = BasisIndex(n.doubled() - j2 - g + 2 * o);
                let l = self.ell(lambda, j, m, n)?;
                if l.is_exact_zero() {
                    continue;
                }
                let ys = self.words(rest, m, deg2)?;
                for (i, q) in self.q_row(k, j)? {
                    let lq = &l * &q;
                    for (w, c) in &ys {
                        let mut word = w.clone();
                        word.push(i);
                        out.push((word, &lq * c));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Smallest `n0` (scanning down from the degree bound) with `Phi_n v = 0` for all `n >= n0`.
    pub fn field_threshold(&self, spec: &FieldSpec, v: &FockVector) -> Result<BasisIndex, Error> {
        let deg2 = 2 * v.degree(0.0)? as i64;
        let top = self.floor_parity(deg2 + self.degree_shift(&spec.orders)?);
        let mut n2 = top;
        while n2 >= -self.w2() {
            if !self.apply_coefficient(spec, BasisIndex(n2), v)?.is_zero() {
                return Ok(BasisIndex(n2 + 2));
            }
            n2 -= 2;
        }
        Err(overflow(format!("{spec} acts nontrivially nowhere inside the window")))
    }

    /// `(nabla Phi)_u v = sum_n zeta_M[u][n] Phi_n v`.
    pub fn apply_nabla(&self, spec: &FieldSpec, u: BasisIndex, v: &FockVector) -> Result<FockVector, Error> {
        let lambda = spec.weight() as i64;
        let table = self
            .tables
            .zeta_lambda
            .get(&lambda)
            .ok_or_else(|| Error::Config(format!("tables lack translation constants of weight {lambda}")))?;
        let (lo, hi) = zeta_lambda_offsets(table);
        if !(self.inside(u.shift(lo)) && self.inside(u.shift(hi))) {
            return Err(overflow(format!("translation row {u} of weight {lambda} is cut by the window")));
        }
        let mut out = FockVector::zero(self.mode());
        for (&(_, n), z) in table.entries.range((u, BasisIndex(i64::MIN))..=(u, BasisIndex(i64::MAX))) {
            out.add_scaled(&self.apply_coefficient(spec, n, v)?, z);
        }
        out.prune(self.tolerance());
        Ok(out)
    }
}

fn zeta_lambda_offsets(t: &crate::tables::Table<crate::tables::Key2>) -> (i64, i64) {
    let offs = t.entries.keys().map(|(u, n)| (n.doubled() - u.doubled()) / 2);
    (offs.clone().min().unwrap_or(0).min(0), offs.max().unwrap_or(0).max(0))
}
