//! Heisenberg Fock module: ordered monomials in the creation generators over a vacuum.

use std::collections::BTreeMap;
use std::fmt;

use crate::atlas::BasisIndex;
use crate::numeric::{Scalar, ScalarMode};
use crate::tables::{Key2, StructureTables, Table};
use crate::Error;

/// Sign relating the realized bracket to the residue table: `[a_n, a_m] = BRACKET_SIGN * gamma_{nm}`.
pub const BRACKET_SIGN: i64 = -1;

/// `a_{g/2-n_1} ... a_{g/2-n_M} v0` with `n_1 >= ... >= n_M >= 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn vacuum() -> Self {
        Monomial(Vec::new())
    }

    /// Sorts `parts` into non-increasing order.
    pub fn new(mut parts: Vec<u32>) -> Result<Self, Error> {
        if parts.contains(&0) {
            return Err(Error::Parse("monomial parts must be positive".into()));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Monomial(parts))
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&p| u64::from(p)).sum()
    }

    /// Number of generators, which is the weight of the associated field.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Every monomial of degree exactly `d`.
    pub fn of_degree(d: u32) -> Vec<Monomial> {
        fn go(rest: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
            if rest == 0 {
                out.push(Monomial(cur.clone()));
                return;
            }
            for p in (1..=rest.min(max)).rev() {
                cur.push(p);
                go(rest - p, p, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        go(d, d, &mut Vec::new(), &mut out);
        out
    }

    /// Every monomial of degree at most `d`, by degree.
    pub fn up_to_degree(d: u32) -> Vec<Monomial> {
        (0..=d).flat_map(Monomial::of_degree).collect()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "a[-{p}]")?;
        }
        write!(f, "|0>")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    pub mode: ScalarMode,
    pub terms: BTreeMap<Monomial, Scalar>,
}

impl FockVector {
    pub fn zero(mode: ScalarMode) -> Self {
        FockVector { mode, terms: BTreeMap::new() }
    }

    pub fn vacuum(mode: ScalarMode) -> Self {
        Self::basis(mode, Monomial::vacuum())
    }

    pub fn basis(mode: ScalarMode, m: Monomial) -> Self {
        let mut v = Self::zero(mode);
        v.terms.insert(m, mode.one());
        v
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_else(|| self.mode.zero())
    }

    pub fn add_term(&mut self, m: Monomial, c: &Scalar) {
        if c.is_exact_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(s) => {
                *s += c;
                if s.is_exact_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c.clone());
            }
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &FockVector, c: &Scalar) {
        for (m, s) in &other.terms {
            self.add_term(m.clone(), &(s * c));
        }
    }

    pub fn add(&mut self, other: &FockVector) {
        for (m, s) in &other.terms {
            self.add_term(m.clone(), s);
        }
    }

    pub fn sub(&mut self, other: &FockVector) {
        for (m, s) in &other.terms {
            self.add_term(m.clone(), &-s);
        }
    }

    pub fn scaled(&self, c: &Scalar) -> FockVector {
        let mut v = Self::zero(self.mode);
        v.add_scaled(self, c);
        v
    }

    /// Drops coefficients below `tol`; exact vectors are unchanged.
    pub fn prune(&mut self, tol: f64) {
        if !self.mode.is_exact() {
            self.terms.retain(|_, s| !s.is_negligible(tol));
        }
    }

    /// Largest coefficient magnitude.
    pub fn norm(&self) -> f64 {
        self.terms.values().map(Scalar::magnitude).fold(0.0, f64::max)
    }

    /// Largest coefficient magnitude of `self - other`.
    pub fn distance(&self, other: &FockVector) -> f64 {
        let mut d = self.clone();
        d.sub(other);
        d.norm()
    }

    /// Highest degree of a monomial with a coefficient above `tol`.
    pub fn degree(&self, tol: f64) -> Result<u64, Error> {
        self.terms
            .iter()
            .filter(|(_, s)| !s.is_negligible(tol))
            .map(|(m, _)| m.degree())
            .max()
            .ok_or_else(|| Error::Invariant("the zero vector has no degree".into()))
    }

    /// Part of `self` of degree below `d`.
    pub fn below_degree(&self, d: u64) -> FockVector {
        FockVector {
            mode: self.mode,
            terms: self.terms.iter().filter(|(m, _)| m.degree() < d).map(|(m, s)| (m.clone(), s.clone())).collect(),
        }
    }
}

impl fmt::Display for FockVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, s)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{s}*{m}")?;
        }
        Ok(())
    }
}

/// Result of [`FockSpace::check_admissibility`].
#[derive(Clone, Debug, PartialEq)]
pub struct Admissibility {
    /// Smallest `n0` with `a_n v = 0` for all `n >= n0`.
    pub n0: BasisIndex,
    /// Largest index examined; beyond it the degree bound forces zero.
    pub scanned_to: BasisIndex,
}

/// The Heisenberg action on the Fock module, driven by a tables bundle.
#[derive(Clone, Debug)]
pub struct FockSpace {
    pub genus: u32,
    pub mode: ScalarMode,
    pub window: BasisIndex,
    pub tolerance: f64,
    gamma: Table<Key2>,
    gamma_band: i64,
    zeta: Table<Key2>,
    zeta_band: i64,
}

impl FockSpace {
    pub fn new(t: &StructureTables) -> Self {
        FockSpace {
            genus: t.genus,
            mode: t.mode,
            window: t.window,
            tolerance: t.tolerance,
            gamma: t.gamma.clone(),
            gamma_band: t.bands.gamma,
            zeta: t.zeta.clone(),
            zeta_band: t.bands.zeta,
        }
    }

    pub fn half_genus(&self) -> BasisIndex {
        BasisIndex(self.genus as i64)
    }

    pub fn in_window(&self, n: BasisIndex) -> bool {
        n.doubled().abs() <= self.window.doubled()
    }

    pub fn is_creation(&self, n: BasisIndex) -> bool {
        n < self.half_genus()
    }

    /// Index of the generator behind part `p`.
    pub fn part_index(&self, p: u32) -> BasisIndex {
        BasisIndex(self.genus as i64 - 2 * i64::from(p))
    }

    fn index_part(&self, n: BasisIndex) -> u32 {
        debug_assert!(self.is_creation(n));
        ((self.genus as i64 - n.doubled()) / 2) as u32
    }

    /// Largest `|n + m|` for which a bracket may be nonzero.
    pub fn bracket_band(&self) -> i64 {
        self.gamma_band
    }

    /// `[a_n, a_m]` as a multiple of the identity.
    pub fn bracket(&self, n: BasisIndex, m: BasisIndex) -> Result<Scalar, Error> {
        if !n.valid_for(self.genus) || !m.valid_for(self.genus) {
            return Err(Error::Config(format!("index {n} or {m} has the wrong parity for genus {}", self.genus)));
        }
        if self.in_window(n) && self.in_window(m) {
            return Ok(self.gamma.get(&(n, m)).scale_int(BRACKET_SIGN));
        }
        if (n.doubled() + m.doubled()).abs() > 2 * self.gamma_band {
            return Ok(self.mode.zero());
        }
        Err(Error::WindowOverflow(format!("bracket [a_{n}, a_{m}] lies outside the window {}", self.window)))
    }

    /// `a_n` applied to the ordered monomial `prefix ++ parts`, with `prefix` already in place.
    fn apply_parts(
        &self,
        n: BasisIndex,
        prefix: &mut Vec<u32>,
        parts: &[u32],
        c: &Scalar,
        out: &mut FockVector,
    ) -> Result<(), Error> {
        let creation = self.is_creation(n);
        let place = |prefix: &Vec<u32>, rest: &[u32], p: u32| {
            let mut v = prefix.clone();
            v.push(p);
            v.extend_from_slice(rest);
            Monomial(v)
        };
        let Some((&first, rest)) = parts.split_first() else {
            if creation {
                out.add_term(place(prefix, &[], self.index_part(n)), c);
            }
            return Ok(());
        };
        if creation && self.index_part(n) >= first {
            out.add_term(place(prefix, parts, self.index_part(n)), c);
            return Ok(());
        }
        let b = self.bracket(n, self.part_index(first))?;
        if !b.is_exact_zero() {
            let mut v = prefix.clone();
            v.extend_from_slice(rest);
            out.add_term(Monomial(v), &(c * &b));
        }
        prefix.push(first);
        let r = self.apply_parts(n, prefix, rest, c, out);
        prefix.pop();
        r
    }

    /// `a_n v`.
    pub fn apply_generator(&self, n: BasisIndex, v: &FockVector) -> Result<FockVector, Error> {
        if !n.valid_for(self.genus) {
            return Err(Error::Config(format!("index {n} has the wrong parity for genus {}", self.genus)));
        }
        let mut out = FockVector::zero(self.mode);
        for (m, c) in &v.terms {
            self.apply_parts(n, &mut Vec::new(), &m.0, c, &mut out)?;
        }
        out.prune(self.tolerance);
        Ok(out)
    }

    /// Applies `a_{w_1} ... a_{w_k}` (rightmost first).
    pub fn apply_word(&self, word: &[BasisIndex], v: &FockVector) -> Result<FockVector, Error> {
        let mut cur = v.clone();
        for &n in word.iter().rev() {
            if cur.is_zero() {
                break;
            }
            cur = self.apply_generator(n, &cur)?;
        }
        Ok(cur)
    }

    /// `[T, a_u] = sum_n zeta^n_u a_n`, as `(n, zeta^n_u)` pairs.
    pub fn translation_row(&self, u: BasisIndex) -> Result<Vec<(BasisIndex, Scalar)>, Error> {
        let lo = u.shift(-1);
        let hi = u.shift(self.zeta_band.max(0));
        if !self.in_window(lo) || !self.in_window(hi) {
            return Err(Error::WindowOverflow(format!(
                "[T, a_{u}] needs zeta entries for {lo}..{hi} beyond the window {}",
                self.window
            )));
        }
        Ok(self
            .zeta
            .entries
            .range((u, BasisIndex(i64::MIN))..=(u, BasisIndex(i64::MAX)))
            .map(|(&(_, n), s)| (n, s.clone()))
            .collect())
    }

    fn apply_t_parts(&self, parts: &[u32]) -> Result<FockVector, Error> {
        let Some((&first, rest)) = parts.split_first() else {
            return Ok(FockVector::zero(self.mode));
        };
        let u = self.part_index(first);
        let w = FockVector::basis(self.mode, Monomial(rest.to_vec()));
        let mut out = self.apply_generator(u, &self.apply_t_parts(rest)?)?;
        for (n, z) in self.translation_row(u)? {
            out.add_scaled(&self.apply_generator(n, &w)?, &z);
        }
        Ok(out)
    }

    /// The translation operator, fixed by `T v0 = 0` and `[T, a_u] = sum_n zeta^n_u a_n`.
    pub fn apply_t(&self, v: &FockVector) -> Result<FockVector, Error> {
        let mut out = FockVector::zero(self.mode);
        for (m, c) in &v.terms {
            out.add_scaled(&self.apply_t_parts(&m.0)?, c);
        }
        out.prune(self.tolerance);
        Ok(out)
    }

    /// Smallest `n0` with `a_n v = 0` for every `n >= n0`.
    pub fn check_admissibility(&self, v: &FockVector) -> Result<Admissibility, Error> {
        let g = self.genus as i64;
        let deg = v.degree(0.0)? as i64;
        // a_n removes a part p with n + g/2 - band <= p, so n > deg + band - g/2 kills v
        let top = BasisIndex(2 * deg + 2 * self.gamma_band - g);
        let mut n = top;
        // a_{g/2-1} never kills a nonzero vector
        while n.doubled() >= g - 2 {
            if !self.apply_generator(n, v)?.is_zero() {
                break;
            }
            n = n.shift(-1);
        }
        Ok(Admissibility { n0: n.shift(1), scanned_to: top })
    }

    /// Parses `"a[-3]a[-1]|0>"`, sums such as `"2*a[-2]|0> - 1/2*|0>"`, and `"0"`.
    ///
    /// `a[k]` denotes the generator `a_{k+g/2}`, so `a[-k]` with `k >= 1` creates part `k`.
    pub fn parse_state(&self, s: &str) -> Result<FockVector, Error> {
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = |why: &str| Error::Parse(format!("bad state literal '{s}': {why}"));
        if text == "0" {
            return Ok(FockVector::zero(self.mode));
        }
        if text.is_empty() {
            return Err(bad("empty"));
        }
        let mut out = FockVector::zero(self.mode);
        for (neg, term) in split_terms(&text).map_err(|e| bad(&e))? {
            let (coef, body) = match term.rsplit_once('*') {
                Some((c, b)) => (self.parse_coefficient(c)?, b),
                None => (self.mode.one(), term.as_str()),
            };
            let coef = if neg { -coef } else { coef };
            let mut rest = body.strip_suffix("|0>").ok_or_else(|| bad("each term must end in |0>"))?;
            let mut word = Vec::new();
            while !rest.is_empty() {
                let inner = rest.strip_prefix("a[").ok_or_else(|| bad("expected a[k]"))?;
                let (k, tail) = inner.split_once(']').ok_or_else(|| bad("unclosed bracket"))?;
                let k: i64 = k.parse().map_err(|_| bad("generator offsets are integers"))?;
                word.push(BasisIndex(self.genus as i64 + 2 * k));
                rest = tail;
            }
            let v = self.apply_word(&word, &FockVector::vacuum(self.mode))?;
            out.add_scaled(&v, &coef);
        }
        out.prune(self.tolerance);
        Ok(out)
    }

    fn parse_coefficient(&self, c: &str) -> Result<Scalar, Error> {
        let s: Scalar = c.parse()?;
        match (&s, self.mode) {
            (Scalar::Exact(q), mode) => Ok(mode.from_rational(q)),
            (Scalar::Approx(z), ScalarMode::Complex { .. }) => self.mode.from_complex(z),
            (Scalar::Approx(_), ScalarMode::Exact) => Err(Error::Parse(format!("complex coefficient '{c}' in an exact module"))),
        }
    }
}

/// Splits on top-level `+`/`-`, keeping signs inside brackets and parentheses.
fn split_terms(s: &str) -> Result<Vec<(bool, String)>, String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let mut neg = false;
    for ch in s.chars() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            '+' | '-' if depth == 0 && !cur.ends_with('*') && !cur.ends_with('/') => {
                if !cur.is_empty() {
                    out.push((neg, std::mem::take(&mut cur)));
                }
                neg = ch == '-';
                continue;
            }
            _ => {}
        }
        if depth < 0 {
            return Err("unbalanced brackets".into());
        }
        cur.push(ch);
    }
    if cur.is_empty() {
        return Err("dangling sign".into());
    }
    out.push((neg, cur));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{AtlasConfig, BasisAtlas, ComplexLiteral};
    use crate::tables::{compute_tables, TablesConfig};
    use proptest::prelude::*;

    fn space0(w: i64) -> FockSpace {
        let a = BasisAtlas::build(AtlasConfig::genus0(w)).unwrap();
        FockSpace::new(&compute_tables(&a, &TablesConfig { k_max: 1 }).unwrap())
    }

    fn space1() -> FockSpace {
        static CELL: std::sync::OnceLock<FockSpace> = std::sync::OnceLock::new();
        CELL.get_or_init(build_space1).clone()
    }

    fn build_space1() -> FockSpace {
        let a = BasisAtlas::build(AtlasConfig::genus1(
            BasisIndex(11),
            30,
            ComplexLiteral::new("0", "1"),
            ComplexLiteral::new("0.17", "0.31"),
            ComplexLiteral::new("-0.21", "0.12"),
        ))
        .unwrap();
        FockSpace::new(&compute_tables(&a, &TablesConfig { k_max: 1 }).unwrap())
    }

    fn mono(p: &[u32]) -> Monomial {
        Monomial::new(p.to_vec()).unwrap()
    }

    #[test]
    fn generator_examples() {
        for f in [space0(4), space1()] {
            let g = f.half_genus();
            let v0 = FockVector::vacuum(f.mode);
            assert!(f.apply_generator(g.shift(3), &v0).unwrap().is_zero());
            let v = f.apply_generator(g.shift(-2), &v0).unwrap();
            assert_eq!(v, FockVector::basis(f.mode, mono(&[2])));
            assert_eq!(f.check_admissibility(&v0).unwrap().n0, g);
        }
        let f = space0(4);
        let v0 = FockVector::vacuum(f.mode);
        let v = f.apply_generator(BasisIndex::from_int(-1), &v0).unwrap();
        assert_eq!(f.apply_generator(BasisIndex::from_int(1), &v).unwrap(), v0);
        assert_eq!(f.check_admissibility(&v).unwrap().n0, BasisIndex::from_int(2));
    }

    #[test]
    fn degree_examples() {
        let f = space1();
        let v = f.parse_state("a[-2]a[-1]|0>").unwrap();
        assert_eq!(v.degree(0.0).unwrap(), 3);
        assert_eq!(FockVector::vacuum(f.mode).degree(0.0).unwrap(), 0);
        assert!(FockVector::zero(f.mode).degree(0.0).is_err());
    }

    #[test]
    fn translation_genus0_is_classical() {
        let f = space0(6);
        let v = f.parse_state("a[-1]|0>").unwrap();
        assert_eq!(f.apply_t(&v).unwrap(), f.parse_state("a[-2]|0>").unwrap());
        assert!(f.apply_t(&FockVector::vacuum(f.mode)).unwrap().is_zero());
        // L_{-1} a_{-2} a_{-1} v0 = 2 a_{-3} a_{-1} v0 + a_{-2} a_{-2} v0
        let w = f.parse_state("a[-2]a[-1]|0>").unwrap();
        assert_eq!(f.apply_t(&w).unwrap(), f.parse_state("2*a[-3]a[-1]|0> + a[-2]a[-2]|0>").unwrap());
    }

    #[test]
    fn translation_raises_degree_by_one() {
        let f = space1();
        for m in Monomial::up_to_degree(3) {
            let v = FockVector::basis(f.mode, m.clone());
            let t = f.apply_t(&v).unwrap();
            if m.is_empty() {
                assert!(t.is_zero());
            } else {
                assert_eq!(t.degree(f.tolerance).unwrap(), m.degree() + 1, "{m}");
            }
        }
    }

    #[test]
    fn state_literals() {
        let f = space0(5);
        let v = f.parse_state("a[-3]a[-1]|0>").unwrap();
        assert_eq!(v.terms.keys().next().unwrap().parts(), &[3, 1]);
        assert_eq!(v.terms.keys().next().unwrap().to_string(), "a[-3]a[-1]|0>");
        let w = f.parse_state("a[-1]a[-3]|0> - 1/2*|0>").unwrap();
        assert_eq!(w.coeff(&mono(&[3, 1])), f.mode.one());
        assert_eq!(w.coeff(&Monomial::vacuum()), f.mode.from_ratio(-1, 2));
        // a_1 a_{-1} v0 = v0 at genus 0
        assert_eq!(f.parse_state("a[1]a[-1]|0>").unwrap(), FockVector::vacuum(f.mode));
        for bad in ["", "a[-1]", "a[x]|0>", "a[-1|0>", "2*"] {
            assert!(f.parse_state(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn out_of_window_creation_is_free() {
        let f = space0(3);
        let v = f.apply_generator(BasisIndex::from_int(-9), &FockVector::vacuum(f.mode)).unwrap();
        assert_eq!(v, FockVector::basis(f.mode, mono(&[9])));
        assert!(matches!(
            f.apply_generator(BasisIndex::from_int(9), &v),
            Err(Error::WindowOverflow(_))
        ));
    }

    #[test]
    fn genus0_brackets_on_basis() {
        let f = space0(4);
        for m in Monomial::up_to_degree(3) {
            let v = FockVector::basis(f.mode, m);
            for n in -4i64..=4 {
                for k in -4i64..=4 {
                    let (n, k) = (BasisIndex::from_int(n), BasisIndex::from_int(k));
                    let mut lhs = f.apply_word(&[n, k], &v).unwrap();
                    lhs.sub(&f.apply_word(&[k, n], &v).unwrap());
                    let want = v.scaled(&f.bracket(n, k).unwrap());
                    assert_eq!(lhs, want);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn genus1_bracket_realized(parts in proptest::collection::vec(1u32..4, 0..3), n in -4i64..4, k in -4i64..4) {
            let f = space1();
            let v = FockVector::basis(f.mode, Monomial::new(parts).unwrap());
            let (n, k) = (BasisIndex(2 * n + 1), BasisIndex(2 * k + 1));
            let mut lhs = f.apply_word(&[n, k], &v).unwrap();
            lhs.sub(&f.apply_word(&[k, n], &v).unwrap());
            let want = v.scaled(&f.bracket(n, k).unwrap());
            prop_assert!(lhs.distance(&want) < 1e-20);
        }

        #[test]
        fn creation_raises_degree(parts in proptest::collection::vec(1u32..4, 0..3), p in 1u32..5) {
            let f = space1();
            let m = Monomial::new(parts).unwrap();
            let v = FockVector::basis(f.mode, m.clone());
            let w = f.apply_generator(f.part_index(p), &v).unwrap();
            prop_assert_eq!(w.degree(f.tolerance).unwrap(), m.degree() + u64::from(p));
        }
    }
}
