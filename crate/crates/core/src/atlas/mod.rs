//! KN basis atlases: sections `f_{lambda,n}` stored as expansion pairs at P+ and P-.

mod genus0;
mod genus1;
mod io;
pub mod weierstrass;

use std::collections::BTreeMap;
use std::fmt;

use rug::Rational;
use serde::{Deserialize, Serialize};

use crate::numeric::{residue_of_product, LaurentExpansion, Point, Scalar, ScalarMode};
use crate::{par, Error};

pub use genus1::{periodicity_residual, Genus1Data};
pub use io::{atlas_from_json, atlas_to_json, load_atlas, save_atlas, FORMAT_VERSION};

/// Basis index `n`, stored doubled so half-integers are exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BasisIndex(pub i64);

impl BasisIndex {
    pub fn from_doubled(d: i64) -> Self {
        BasisIndex(d)
    }

    pub fn from_int(n: i64) -> Self {
        BasisIndex(2 * n)
    }

    /// `g/2 + k` for integer `k`.
    pub fn half_genus_plus(genus: u32, k: i64) -> Self {
        BasisIndex(genus as i64 + 2 * k)
    }

    pub fn doubled(self) -> i64 {
        self.0
    }

    pub fn shift(self, k: i64) -> Self {
        BasisIndex(self.0 + 2 * k)
    }

    pub fn abs(self) -> Self {
        BasisIndex(self.0.abs())
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn to_rational(self) -> Rational {
        Rational::from((self.0, 2))
    }

    /// Integer part of an index that is known to be integral.
    pub fn as_int(self) -> Option<i64> {
        (self.0 % 2 == 0).then_some(self.0 / 2)
    }

    pub fn valid_for(self, genus: u32) -> bool {
        (self.0 - genus as i64).rem_euclid(2) == 0
    }

    /// Parses `7`, `-3.5`, `13/2`, `g/2`, `g/2+3`, `g/2-1.5`.
    pub fn parse(s: &str, genus: u32) -> Result<Self, Error> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Parse(format!("bad index '{s}'"));
        let idx = if let Some(rest) = t.strip_prefix("g/2") {
            let base = genus as i64;
            if rest.is_empty() {
                BasisIndex(base)
            } else {
                let (sign, body) = match rest.as_bytes()[0] {
                    b'+' => (1, &rest[1..]),
                    b'-' => (-1, &rest[1..]),
                    _ => return Err(bad()),
                };
                BasisIndex(base + sign * parse_doubled(body).ok_or_else(bad)?)
            }
        } else {
            BasisIndex(parse_doubled(&t).ok_or_else(bad)?)
        };
        if !idx.valid_for(genus) {
            return Err(Error::Parse(format!(
                "index {idx} has the wrong parity for genus {genus} (need n = g/2 mod 1)"
            )));
        }
        Ok(idx)
    }
}

fn parse_doubled(s: &str) -> Option<i64> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let d = if let Some((n, den)) = body.split_once('/') {
        let n: i64 = n.parse().ok()?;
        match den {
            "1" => 2 * n,
            "2" => n,
            _ => return None,
        }
    } else if let Some((i, f)) = body.split_once('.') {
        let i: i64 = if i.is_empty() { 0 } else { i.parse().ok()? };
        let f = f.trim_end_matches('0');
        match f {
            "" => 2 * i,
            "5" => 2 * i + 1,
            _ => return None,
        }
    } else {
        2 * body.parse::<i64>().ok()?
    };
    Some(if neg { -d } else { d })
}

impl std::ops::Neg for BasisIndex {
    type Output = BasisIndex;

    fn neg(self) -> Self {
        BasisIndex(-self.0)
    }
}

impl std::ops::Add for BasisIndex {
    type Output = BasisIndex;

    fn add(self, other: BasisIndex) -> Self {
        BasisIndex(self.0 + other.0)
    }
}

impl std::ops::Sub for BasisIndex {
    type Output = BasisIndex;

    fn sub(self, other: BasisIndex) -> Self {
        BasisIndex(self.0 - other.0)
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Complex number given as decimal literals, kept verbatim for exact re-parsing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexLiteral {
    pub re: String,
    pub im: String,
}

impl ComplexLiteral {
    pub fn new(re: &str, im: &str) -> Self {
        ComplexLiteral { re: re.to_string(), im: im.to_string() }
    }

    /// Parses `a+bi`, `a-bi`, `bi`, `a`.
    pub fn parse(s: &str) -> Result<Self, Error> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Parse(format!("bad complex literal '{s}'"));
        let check = |x: &str| -> Result<(), Error> {
            x.parse::<f64>().map(|_| ()).map_err(|_| bad())
        };
        if let Some(body) = t.strip_suffix('i') {
            let split = body
                .char_indices()
                .skip(1)
                .filter(|&(i, c)| (c == '+' || c == '-') && !matches!(body.as_bytes()[i - 1], b'e' | b'E'))
                .map(|(i, _)| i)
                .last();
            let (re, im) = match split {
                Some(i) => (&body[..i], &body[i..]),
                None => ("0", body),
            };
            let im = match im {
                "" | "+" => "1",
                "-" => "-1",
                x => x.strip_prefix('+').unwrap_or(x),
            };
            check(re)?;
            check(im)?;
            Ok(ComplexLiteral::new(re, im))
        } else {
            check(&t)?;
            Ok(ComplexLiteral::new(&t, "0"))
        }
    }

    pub fn to_complex(&self, bits: u32) -> Result<rug::Complex, Error> {
        let p = |x: &str| -> Result<rug::Float, Error> {
            let v = rug::Float::parse(x).map_err(|e| Error::Parse(format!("bad decimal '{x}': {e}")))?;
            Ok(rug::Float::with_val(bits, v))
        };
        Ok(rug::Complex::with_val(bits, (p(&self.re)?, p(&self.im)?)))
    }
}

impl fmt::Display for ComplexLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.starts_with('-') {
            write!(f, "{}{}i", self.re, self.im)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    /// Riemann sphere with P+ = 0 and P- = infinity.
    Sphere,
    /// Torus C/(Z + tau Z) with marked points p+ and p-.
    Torus { tau: ComplexLiteral, p_plus: ComplexLiteral, p_minus: ComplexLiteral },
    /// Geometry not reconstructible here; atlas came from a file.
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtlasConfig {
    pub genus: u32,
    /// Largest |n| constructed, doubled.
    pub window: BasisIndex,
    pub trunc: i64,
    pub lambda_range: Vec<i64>,
    pub scalar_mode: ScalarMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub geometry: Geometry,
}

impl AtlasConfig {
    pub fn min_trunc(window: BasisIndex) -> i64 {
        3 * window.doubled().abs() + 6
    }

    pub fn genus0(window: i64) -> Self {
        let window = BasisIndex::from_int(window);
        let lambda_range = vec![-1, 0, 1, 2];
        AtlasConfig {
            genus: 0,
            window,
            trunc: Self::min_trunc(window) + 2 * 2,
            lambda_range,
            scalar_mode: ScalarMode::Exact,
            tolerance: None,
            geometry: Geometry::Sphere,
        }
    }

    pub fn genus1(window: BasisIndex, digits: u32, tau: ComplexLiteral, p_plus: ComplexLiteral, p_minus: ComplexLiteral) -> Self {
        AtlasConfig {
            genus: 1,
            window,
            trunc: Self::min_trunc(window),
            lambda_range: vec![-1, 0, 1, 2],
            scalar_mode: ScalarMode::Complex { digits },
            tolerance: None,
            geometry: Geometry::Torus { tau, p_plus, p_minus },
        }
    }

    /// Widens the weight range to cover `lo..=hi` and bumps trunc if needed.
    pub fn with_lambdas(mut self, lo: i64, hi: i64) -> Self {
        for l in lo..=hi {
            if !self.lambda_range.contains(&l) {
                self.lambda_range.push(l);
            }
        }
        self.lambda_range.sort_unstable();
        self.trunc = self.trunc.max(self.required_trunc());
        self
    }

    pub fn required_trunc(&self) -> i64 {
        let base = Self::min_trunc(self.window);
        if self.genus == 0 {
            let lmax = self.lambda_range.iter().map(|l| l.abs()).max().unwrap_or(0);
            base + 2 * lmax
        } else {
            base
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or_else(|| self.scalar_mode.default_tolerance())
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.window.doubled() <= 0 {
            return Err(Error::Config("window must be positive".into()));
        }
        if self.trunc < Self::min_trunc(self.window) {
            return Err(Error::Config(format!(
                "trunc {} below the minimum {} for window {}",
                self.trunc,
                Self::min_trunc(self.window),
                self.window
            )));
        }
        for l in [-1, 0, 1] {
            if !self.lambda_range.contains(&l) {
                return Err(Error::Config(format!("lambda range must contain {l}")));
            }
        }
        match (&self.geometry, self.genus) {
            (Geometry::Sphere, 0) => {
                if !self.scalar_mode.is_exact() {
                    return Err(Error::Config("genus 0 atlases are exact".into()));
                }
            }
            (Geometry::Torus { .. }, 1) => {
                if self.scalar_mode.is_exact() {
                    return Err(Error::Config("genus 1 atlases need a complex precision".into()));
                }
            }
            (Geometry::External, _) => {}
            (_, g) => return Err(Error::Config(format!("geometry does not match genus {g}"))),
        }
        Ok(())
    }

    /// All indices with |n| <= window and n = g/2 mod 1, ascending.
    pub fn indices(&self) -> Vec<BasisIndex> {
        let w = self.window.doubled();
        (-w..=w)
            .filter(|d| (d - self.genus as i64).rem_euclid(2) == 0)
            .map(BasisIndex)
            .collect()
    }

    pub fn in_window(&self, n: BasisIndex) -> bool {
        n.doubled().abs() <= self.window.doubled() && n.valid_for(self.genus)
    }
}

/// `s_lambda = (1 - 2 lambda) g / 2 + lambda`.
pub fn s_lambda(genus: u32, lambda: i64) -> Rational {
    Rational::from(((1 - 2 * lambda) * genus as i64, 2)) + lambda
}

/// Expected leading exponents `(P+, P-)` of `f_{lambda,n}`.
pub fn expected_leads(genus: u32, lambda: i64, n: BasisIndex) -> (i64, i64) {
    let g = genus as i64;
    let d = n.doubled();
    // twice the exponents are integral; all returned values are exact halves
    let s2 = (1 - 2 * lambda) * g + 2 * lambda;
    let mut plus = (d - s2) / 2;
    let mut minus = (-d - s2) / 2;
    // on the torus every weight follows the function pattern (K is trivial)
    let pattern = if genus == 1 { 0 } else { lambda };
    match pattern {
        0 => {
            if d == g {
                // A_{g/2} = 1
                plus = 0;
                minus = 0;
            } else if d >= -g && d < g {
                plus = (d - g) / 2;
                minus = (-d - g) / 2 - 1;
            }
        }
        1 => {
            // f_{1,m} = omega^{-m}
            let up = -d;
            if up == g {
                plus = -1;
                minus = -1;
            } else if up >= -g && up < g {
                plus = (-up + g) / 2 - 1;
                minus = (up + g) / 2;
            }
        }
        _ => {}
    }
    (plus, minus)
}

/// True when `f_{lambda,n}` has the generic leads `(n - s_lambda, -n - s_lambda)`.
pub fn is_regular_index(genus: u32, lambda: i64, n: BasisIndex) -> bool {
    let s2 = (1 - 2 * lambda) * genus as i64 + 2 * lambda;
    expected_leads(genus, lambda, n) == ((n.doubled() - s2) / 2, (-n.doubled() - s2) / 2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub plus: LaurentExpansion,
    pub minus: LaurentExpansion,
}

impl Section {
    pub fn at(&self, p: Point) -> &LaurentExpansion {
        match p {
            Point::Plus => &self.plus,
            Point::Minus => &self.minus,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BasisAtlas {
    pub config: AtlasConfig,
    pub sections: BTreeMap<(i64, BasisIndex), Section>,
    pub normalizations: BTreeMap<(i64, BasisIndex, Point), Scalar>,
    pub genus1: Option<Genus1Data>,
}

impl BasisAtlas {
    pub fn build(config: AtlasConfig) -> Result<Self, Error> {
        config.validate()?;
        match config.genus {
            0 => genus0::build_genus0(config),
            1 => genus1::build_genus1(config),
            g => Err(Error::Config(format!("genus {g} >= 2 requires --load of an atlas file"))),
        }
    }

    pub fn genus(&self) -> u32 {
        self.config.genus
    }

    pub fn mode(&self) -> ScalarMode {
        self.config.scalar_mode
    }

    pub fn tolerance(&self) -> f64 {
        self.config.tolerance()
    }

    pub fn half_genus(&self) -> BasisIndex {
        BasisIndex(self.config.genus as i64)
    }

    pub fn indices(&self) -> Vec<BasisIndex> {
        self.config.indices()
    }

    pub fn has_lambda(&self, lambda: i64) -> bool {
        self.config.lambda_range.contains(&lambda)
    }

    /// `f_{lambda,n}`.
    pub fn f(&self, lambda: i64, n: BasisIndex) -> Result<&Section, Error> {
        self.sections.get(&(lambda, n)).ok_or_else(|| {
            Error::WindowOverflow(format!("section f_{{{lambda},{n}}} not in atlas (window {})", self.config.window))
        })
    }

    /// `f^n_lambda = f_{lambda,-n}`.
    pub fn f_upper(&self, lambda: i64, n: BasisIndex) -> Result<&Section, Error> {
        self.f(lambda, -n)
    }

    /// `A_n`.
    pub fn a(&self, n: BasisIndex) -> Result<&Section, Error> {
        self.f(0, n)
    }

    /// `omega^n = f_{1,-n}`.
    pub fn omega(&self, n: BasisIndex) -> Result<&Section, Error> {
        self.f(1, -n)
    }

    /// `e_n = f_{-1,n}`.
    pub fn e(&self, n: BasisIndex) -> Result<&Section, Error> {
        self.f(-1, n)
    }

    /// The distinguished vector field `e_{3g/2-1}`.
    pub fn nabla_field(&self) -> Result<&Section, Error> {
        self.e(BasisIndex(3 * self.config.genus as i64 - 2))
    }

    pub(crate) fn fill_normalizations(&mut self) {
        let g = self.config.genus;
        let mut norms = BTreeMap::new();
        for (&(lambda, n), sec) in &self.sections {
            let (lp, lm) = expected_leads(g, lambda, n);
            for (p, lead) in [(Point::Plus, lp), (Point::Minus, lm)] {
                if let Ok(c) = sec.at(p).coeff(lead) {
                    norms.insert((lambda, n, p), c);
                }
            }
        }
        self.normalizations = norms;
    }

    /// Checks leads, leading coefficients, `A_{g/2} = 1` and `alpha^0_{n,+} = 1`.
    pub fn check_structure(&self) -> Result<(), Error> {
        let tol = self.tolerance().max(0.0);
        let g = self.config.genus;
        for &lambda in &self.config.lambda_range {
            for n in self.indices() {
                let sec = self.f(lambda, n)?;
                let (lp, lm) = expected_leads(g, lambda, n);
                for (p, lead) in [(Point::Plus, lp), (Point::Minus, lm)] {
                    let e = sec.at(p);
                    if e.weight != lambda || e.point != p {
                        return Err(Error::Invariant(format!("f_{{{lambda},{n}}} at {p:?} has wrong weight or point")));
                    }
                    if e.trunc < self.config.trunc {
                        return Err(Error::Invariant(format!("f_{{{lambda},{n}}} at {p:?} truncated below config")));
                    }
                    match e.valuation(tol * 1e-3) {
                        Some(v) if v == lead => {}
                        v => {
                            return Err(Error::Invariant(format!(
                                "f_{{{lambda},{n}}} at {p:?}: leading exponent {v:?}, expected {lead}"
                            )))
                        }
                    }
                }
            }
        }
        let one = self.a(self.half_genus())?;
        for p in Point::BOTH {
            let e = one.at(p);
            let ok = (e.lead..=e.trunc).all(|k| {
                let c = e.coeff(k).unwrap();
                let target = if k == 0 { self.mode().one() } else { self.mode().zero() };
                (c - target).is_negligible(tol)
            });
            if !ok {
                return Err(Error::Invariant("A_{g/2} is not the constant function 1".into()));
            }
        }
        for n in self.indices() {
            let lead = expected_leads(g, 0, n).0;
            let c = self.a(n)?.plus.coeff(lead)?;
            if !(c - self.mode().one()).is_negligible(tol) {
                return Err(Error::Invariant(format!("alpha^0_{{{n},+}} differs from 1")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DualityEntry {
    pub lambda: i64,
    pub n: BasisIndex,
    pub m: BasisIndex,
    pub residual: f64,
    pub cross: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DualityReport {
    pub pairs_checked: usize,
    pub max_residual: f64,
    pub max_cross: f64,
    pub worst: Option<DualityEntry>,
    pub lambdas: Vec<i64>,
}

impl DualityReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual <= tol && self.max_cross <= tol
    }
}

/// `Res(f_{lambda,n} f_{1-lambda,-m}) = delta_{nm}` at both points.
pub fn verify_duality(atlas: &BasisAtlas) -> Result<DualityReport, Error> {
    let lambdas: Vec<i64> = atlas
        .config
        .lambda_range
        .iter()
        .copied()
        .filter(|&l| atlas.has_lambda(1 - l))
        .collect();
    let idx = atlas.indices();
    let rows: Vec<(i64, BasisIndex)> = lambdas.iter().flat_map(|&l| idx.iter().map(move |&n| (l, n))).collect();
    let mode = atlas.mode();
    let per_row = par::try_map(&rows, |&(lambda, n)| -> Result<Vec<DualityEntry>, Error> {
        let f = atlas.f(lambda, n)?;
        let mut out = Vec::with_capacity(idx.len());
        for &m in &idx {
            let h = atlas.f_upper(1 - lambda, m)?;
            let rp = residue_of_product(&f.plus, &h.plus)?;
            let rm = residue_of_product(&f.minus, &h.minus)?;
            let target = if n == m { mode.one() } else { mode.zero() };
            out.push(DualityEntry {
                lambda,
                n,
                m,
                residual: (&rp - &target).magnitude(),
                cross: (&rp - &rm).magnitude(),
            });
        }
        Ok(out)
    })?;
    let mut report = DualityReport { pairs_checked: 0, max_residual: 0.0, max_cross: 0.0, worst: None, lambdas };
    for e in per_row.into_iter().flatten() {
        report.pairs_checked += 1;
        report.max_cross = report.max_cross.max(e.cross);
        if e.residual > report.max_residual || report.worst.is_none() {
            report.max_residual = report.max_residual.max(e.residual);
            report.worst = Some(e);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_lambda_examples() {
        assert_eq!(s_lambda(2, 0), 1);
        assert_eq!(s_lambda(2, 2), -1);
        for l in -4..5 {
            assert_eq!(s_lambda(0, l), l);
        }
        assert_eq!(s_lambda(1, 3), Rational::from((1, 2)));
    }

    #[test]
    fn index_parsing() {
        assert_eq!(BasisIndex::parse("6.5", 1).unwrap(), BasisIndex(13));
        assert_eq!(BasisIndex::parse("13/2", 1).unwrap(), BasisIndex(13));
        assert_eq!(BasisIndex::parse("g/2-1", 1).unwrap(), BasisIndex(-1));
        assert_eq!(BasisIndex::parse("g/2+3", 0).unwrap(), BasisIndex(6));
        assert_eq!(BasisIndex::parse("-4", 0).unwrap(), BasisIndex(-8));
        assert!(BasisIndex::parse("3", 1).is_err());
        assert!(BasisIndex::parse("0.25", 0).is_err());
        assert_eq!(BasisIndex(-13).to_string(), "-13/2");
        assert_eq!(BasisIndex(8).to_string(), "4");
    }

    #[test]
    fn complex_literals() {
        let c = ComplexLiteral::parse("0.17+0.31i").unwrap();
        assert_eq!((c.re.as_str(), c.im.as_str()), ("0.17", "0.31"));
        let c = ComplexLiteral::parse("-0.23-0.11i").unwrap();
        assert_eq!((c.re.as_str(), c.im.as_str()), ("-0.23", "-0.11"));
        let c = ComplexLiteral::parse("0+1i").unwrap();
        assert_eq!((c.re.as_str(), c.im.as_str()), ("0", "1"));
        let c = ComplexLiteral::parse("i").unwrap();
        assert_eq!(c.im, "1");
        let c = ComplexLiteral::parse("1e-3-2i").unwrap();
        assert_eq!((c.re.as_str(), c.im.as_str()), ("1e-3", "-2"));
        assert!(ComplexLiteral::parse("abc").is_err());
    }

    #[test]
    fn leads_follow_weight_pattern() {
        // genus 0: plain monomials
        assert_eq!(expected_leads(0, 0, BasisIndex::from_int(3)), (3, -3));
        assert_eq!(expected_leads(0, 1, BasisIndex::from_int(0)), (-1, -1));
        // genus 1: A_{1/2} = 1, A_{-1/2} two simple poles
        assert_eq!(expected_leads(1, 0, BasisIndex(1)), (0, 0));
        assert_eq!(expected_leads(1, 0, BasisIndex(-1)), (-1, -1));
        assert_eq!(expected_leads(1, 1, BasisIndex(-1)), (-1, -1));
        assert_eq!(expected_leads(1, 2, BasisIndex(5)), (2, -3));
        // genus 2 middle range for functions and differentials
        assert_eq!(expected_leads(2, 0, BasisIndex::from_int(-1)), (-2, -1));
        assert_eq!(expected_leads(2, 0, BasisIndex::from_int(0)), (-1, -2));
        assert_eq!(expected_leads(2, 1, BasisIndex::from_int(-1)), (-1, -1));
    }

    #[test]
    fn config_validation() {
        let mut c = AtlasConfig::genus0(4);
        c.validate().unwrap();
        c.trunc = 10;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = AtlasConfig::genus0(4);
        c.lambda_range = vec![0, 1];
        assert!(c.validate().is_err());
        let mut c = AtlasConfig::genus0(4);
        c.genus = 2;
        assert!(c.validate().is_err());
    }
}
