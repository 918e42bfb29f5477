use serde::{Deserialize, Serialize};

use super::scalar::{fma_into, Scalar, ScalarMode};
use crate::Error;

/// Marked point carrying the expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Point {
    #[serde(rename = "P+")]
    Plus,
    #[serde(rename = "P-")]
    Minus,
}

impl Point {
    pub fn orientation(self) -> i64 {
        match self {
            Point::Plus => 1,
            Point::Minus => -1,
        }
    }

    pub const BOTH: [Point; 2] = [Point::Plus, Point::Minus];
}

/// Truncated local expansion `sum_{k=lead}^{trunc} c_k z^k (dz)^weight`.
///
/// Exponents below `lead` are zero, exponents above `trunc` are unknown.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentExpansion {
    pub point: Point,
    pub weight: i64,
    pub lead: i64,
    pub coeffs: Vec<Scalar>,
    pub trunc: i64,
}

impl LaurentExpansion {
    pub fn new(point: Point, weight: i64, lead: i64, coeffs: Vec<Scalar>, trunc: i64) -> Result<Self, Error> {
        if trunc < lead - 1 {
            return Err(Error::Invariant(format!("trunc {trunc} below lead {lead}")));
        }
        if coeffs.len() as i64 != trunc - lead + 1 {
            return Err(Error::Invariant(format!(
                "expansion has {} coefficients, expected {}",
                coeffs.len(),
                trunc - lead + 1
            )));
        }
        if let Some(first) = coeffs.first() {
            if coeffs.iter().any(|c| !c.same_kind(first)) {
                return Err(Error::ModeMismatch);
            }
        }
        Ok(LaurentExpansion { point, weight, lead, coeffs, trunc })
    }

    /// `c z^k (dz)^weight`, faithful through `trunc`.
    pub fn monomial(point: Point, weight: i64, k: i64, c: Scalar, trunc: i64) -> Result<Self, Error> {
        if trunc < k {
            return Err(Error::Invariant(format!("monomial z^{k} beyond trunc {trunc}")));
        }
        let mut coeffs = vec![c.zero_like(); (trunc - k + 1) as usize];
        coeffs[0] = c;
        Self::new(point, weight, k, coeffs, trunc)
    }

    pub fn zero(point: Point, weight: i64, lead: i64, trunc: i64, mode: ScalarMode) -> Self {
        let n = (trunc - lead + 1).max(0) as usize;
        LaurentExpansion { point, weight, lead, coeffs: vec![mode.zero(); n], trunc }
    }

    pub fn mode(&self) -> Option<ScalarMode> {
        self.coeffs.first().map(|c| c.mode())
    }

    /// Coefficient of `z^k`; an error when `k` lies above the faithful window.
    pub fn coeff(&self, k: i64) -> Result<Scalar, Error> {
        if k > self.trunc {
            return Err(Error::OutsideWindow { exponent: k, lead: self.lead, trunc: self.trunc });
        }
        if k < self.lead {
            return Ok(self.zero_scalar());
        }
        Ok(self.coeffs[(k - self.lead) as usize].clone())
    }

    pub fn coeff_ref(&self, k: i64) -> Option<&Scalar> {
        if k < self.lead || k > self.trunc {
            None
        } else {
            Some(&self.coeffs[(k - self.lead) as usize])
        }
    }

    fn zero_scalar(&self) -> Scalar {
        match self.coeffs.first() {
            Some(c) => c.zero_like(),
            None => ScalarMode::Exact.zero(),
        }
    }

    /// Lowest exponent whose coefficient is not negligible.
    pub fn valuation(&self, tol: f64) -> Option<i64> {
        self.coeffs
            .iter()
            .position(|c| !c.is_negligible(tol))
            .map(|i| self.lead + i as i64)
    }

    fn check_compatible(&self, other: &Self) -> Result<(), Error> {
        if self.point != other.point {
            return Err(Error::PointMismatch);
        }
        match (self.coeffs.first(), other.coeffs.first()) {
            (Some(a), Some(b)) if !a.same_kind(b) => Err(Error::ModeMismatch),
            _ => Ok(()),
        }
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        LaurentExpansion {
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
            ..self.clone()
        }
    }

    /// Sum of two expansions of equal weight; faithful up to the smaller trunc.
    pub fn add(&self, other: &Self) -> Result<Self, Error> {
        self.combine(other, false)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, Error> {
        self.combine(other, true)
    }

    fn combine(&self, other: &Self, negate: bool) -> Result<Self, Error> {
        self.check_compatible(other)?;
        if self.weight != other.weight {
            return Err(Error::WeightMismatch { expected: self.weight, found: other.weight });
        }
        let lead = self.lead.min(other.lead);
        let trunc = self.trunc.min(other.trunc);
        let zero = if self.coeffs.is_empty() { other.zero_scalar() } else { self.zero_scalar() };
        let mut coeffs = Vec::with_capacity((trunc - lead + 1).max(0) as usize);
        for k in lead..=trunc {
            let mut c = self.coeff_ref(k).cloned().unwrap_or_else(|| zero.clone());
            if let Some(d) = other.coeff_ref(k) {
                if negate {
                    c -= d;
                } else {
                    c += d;
                }
            }
            coeffs.push(c);
        }
        Ok(LaurentExpansion { point: self.point, weight: self.weight, lead, coeffs, trunc })
    }

    /// Drops exponents above `trunc` (no-op when already shorter).
    pub fn truncate(&self, trunc: i64) -> Self {
        if trunc >= self.trunc {
            return self.clone();
        }
        let keep = (trunc - self.lead + 1).max(0) as usize;
        LaurentExpansion {
            coeffs: self.coeffs[..keep].to_vec(),
            trunc,
            ..self.clone()
        }
    }

    /// Plain derivative of the coefficient function, weight unchanged.
    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.scale_int(self.lead + i as i64))
            .collect();
        LaurentExpansion {
            point: self.point,
            weight: self.weight,
            lead: self.lead - 1,
            coeffs,
            trunc: self.trunc - 1,
        }
    }
}

/// Product of two expansions at the same point.
pub fn series_mul(a: &LaurentExpansion, b: &LaurentExpansion) -> Result<LaurentExpansion, Error> {
    a.check_compatible(b)?;
    let lead = a.lead + b.lead;
    let trunc = (a.trunc + b.lead).min(b.trunc + a.lead);
    let zero = if a.coeffs.is_empty() { b.zero_scalar() } else { a.zero_scalar() };
    let n = (trunc - lead + 1).max(0) as usize;
    let mut coeffs = vec![zero; n];
    for (i, x) in a.coeffs.iter().enumerate() {
        if i >= n {
            break;
        }
        if x.is_exact_zero() {
            continue;
        }
        for (j, y) in b.coeffs.iter().enumerate().take(n - i) {
            fma_into(&mut coeffs[i + j], x, y);
        }
    }
    Ok(LaurentExpansion { point: a.point, weight: a.weight + b.weight, lead, coeffs, trunc })
}

/// Single coefficient `z^k` of a product, without forming the product.
pub fn product_coeff(a: &LaurentExpansion, b: &LaurentExpansion, k: i64) -> Result<Scalar, Error> {
    a.check_compatible(b)?;
    let trunc = (a.trunc + b.lead).min(b.trunc + a.lead);
    if k > trunc {
        return Err(Error::OutsideWindow { exponent: k, lead: a.lead + b.lead, trunc });
    }
    let mut acc = a.zero_scalar();
    let lo = a.lead.max(k - b.trunc);
    let hi = a.trunc.min(k - b.lead);
    for i in lo..=hi {
        fma_into(&mut acc, &a.coeffs[(i - a.lead) as usize], &b.coeffs[(k - i - b.lead) as usize]);
    }
    Ok(acc)
}

/// Global residue read off at the carrying point (orientation -1 at P-).
pub fn residue_at(a: &LaurentExpansion) -> Result<Scalar, Error> {
    if a.weight != 1 {
        return Err(Error::WeightMismatch { expected: 1, found: a.weight });
    }
    let c = a.coeff(-1)?;
    Ok(match a.point {
        Point::Plus => c,
        Point::Minus => -c,
    })
}

/// Residue of a product of two expansions whose weights sum to one.
pub fn residue_of_product(a: &LaurentExpansion, b: &LaurentExpansion) -> Result<Scalar, Error> {
    if a.weight + b.weight != 1 {
        return Err(Error::WeightMismatch { expected: 1, found: a.weight + b.weight });
    }
    let c = product_coeff(a, b, -1)?;
    Ok(match a.point {
        Point::Plus => c,
        Point::Minus => -c,
    })
}

/// `e g' + lambda g e'` for a vector field `e` acting on a weight-lambda form `g`.
pub fn lie_derivative(e: &LaurentExpansion, g: &LaurentExpansion) -> Result<LaurentExpansion, Error> {
    if e.weight != -1 {
        return Err(Error::WeightMismatch { expected: -1, found: e.weight });
    }
    e.check_compatible(g)?;
    let first = series_mul(e, &g.derivative())?;
    let second = series_mul(&e.derivative(), g)?.scale_int(g.weight);
    let mut out = first.add(&second)?;
    out.weight = g.weight;
    Ok(out)
}

/// Exterior derivative of a function expansion.
pub fn d_function(a: &LaurentExpansion) -> Result<LaurentExpansion, Error> {
    if a.weight != 0 {
        return Err(Error::WeightMismatch { expected: 0, found: a.weight });
    }
    let mut d = a.derivative();
    d.weight = 1;
    Ok(d)
}

impl LaurentExpansion {
    pub fn scale_int(&self, k: i64) -> Self {
        LaurentExpansion {
            coeffs: self.coeffs.iter().map(|c| c.scale_int(k)).collect(),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ex(point: Point, weight: i64, lead: i64, cs: &[i64], trunc: i64) -> LaurentExpansion {
        let m = ScalarMode::Exact;
        let mut coeffs: Vec<Scalar> = cs.iter().map(|&c| m.from_int(c)).collect();
        coeffs.resize((trunc - lead + 1) as usize, m.zero());
        LaurentExpansion::new(point, weight, lead, coeffs, trunc).unwrap()
    }

    fn q(v: i64) -> Scalar {
        ScalarMode::Exact.from_int(v)
    }

    #[test]
    fn identity_product() {
        let a = ex(Point::Plus, 1, -1, &[1], 4);
        let one = ex(Point::Plus, 0, 0, &[1], 6);
        let p = series_mul(&a, &one).unwrap();
        assert_eq!(p.weight, 1);
        assert_eq!(p.lead, -1);
        assert_eq!(p.coeff(-1).unwrap(), q(1));
        assert_eq!(p.trunc, 4);
    }

    #[test]
    fn polynomial_product() {
        let a = ex(Point::Plus, 0, 0, &[1, 1], 3);
        let b = ex(Point::Plus, 0, 0, &[1, -1], 3);
        let p = series_mul(&a, &b).unwrap();
        assert_eq!(p.trunc, 3);
        let got: Vec<Scalar> = (0..=3).map(|k| p.coeff(k).unwrap()).collect();
        assert_eq!(got, vec![q(1), q(0), q(-1), q(0)]);
    }

    #[test]
    fn pessimistic_trunc() {
        let a = ex(Point::Plus, 0, -2, &[1], 5);
        let b = ex(Point::Plus, 0, 1, &[1], 4);
        let p = series_mul(&a, &b).unwrap();
        assert_eq!(p.trunc, 2);
        assert!(matches!(p.coeff(3), Err(Error::OutsideWindow { .. })));
    }

    #[test]
    fn residues() {
        assert_eq!(residue_at(&ex(Point::Plus, 1, -1, &[1], 2)).unwrap(), q(1));
        assert_eq!(residue_at(&ex(Point::Minus, 1, -1, &[1], 2)).unwrap(), q(-1));
        assert_eq!(residue_at(&ex(Point::Plus, 1, -3, &[2, 0, 5, 0, 1], 1)).unwrap(), q(5));
        assert!(residue_at(&ex(Point::Plus, 0, -1, &[1], 2)).is_err());
        assert!(residue_at(&ex(Point::Plus, 1, -5, &[1], -2)).is_err());
    }

    #[test]
    fn lie_derivative_examples() {
        let e = ex(Point::Plus, -1, 0, &[1], 8);
        let g = ex(Point::Plus, 1, 2, &[1], 8);
        let r = lie_derivative(&e, &g).unwrap();
        assert_eq!(r.weight, 1);
        assert_eq!(r.coeff(1).unwrap(), q(2));
        assert_eq!(r.coeff(2).unwrap(), q(0));
        let one = ex(Point::Plus, 0, 0, &[1], 8);
        let r = lie_derivative(&e, &one).unwrap();
        assert!(r.coeffs.iter().all(|c| c.is_exact_zero()));
    }

    #[test]
    fn lie_derivative_trunc_shrinks_by_one() {
        let e = ex(Point::Plus, -1, 1, &[1], 6);
        let g = ex(Point::Plus, 2, -3, &[1], 5);
        let r = lie_derivative(&e, &g).unwrap();
        assert_eq!(r.trunc, 2);
    }

    #[test]
    fn d_function_examples() {
        let f = ex(Point::Plus, 0, 3, &[1], 6);
        let d = d_function(&f).unwrap();
        assert_eq!((d.weight, d.coeff(2).unwrap()), (1, q(3)));
        let one = ex(Point::Plus, 0, 0, &[1], 6);
        assert!(d_function(&one).unwrap().coeffs.iter().all(|c| c.is_exact_zero()));
        let f = ex(Point::Plus, 0, -1, &[1, 0, 0, 1], 5);
        let d = d_function(&f).unwrap();
        assert_eq!(d.coeff(-2).unwrap(), q(-1));
        assert_eq!(d.coeff(1).unwrap(), q(2));
        assert!(d_function(&ex(Point::Plus, 1, 0, &[1], 3)).is_err());
    }

    #[test]
    fn mismatches_are_errors() {
        let a = ex(Point::Plus, 0, 0, &[1], 3);
        let b = ex(Point::Minus, 0, 0, &[1], 3);
        assert!(matches!(series_mul(&a, &b), Err(Error::PointMismatch)));
        let c = LaurentExpansion::monomial(Point::Plus, 0, 0, ScalarMode::Complex { digits: 20 }.one(), 3).unwrap();
        assert!(matches!(series_mul(&a, &c), Err(Error::ModeMismatch)));
    }

    fn arb_exp(weight: i64) -> impl Strategy<Value = LaurentExpansion> {
        (-4i64..3, prop::collection::vec(-9i64..9, 1..8), 0i64..4).prop_map(move |(lead, cs, extra)| {
            let trunc = lead + cs.len() as i64 - 1 + extra;
            ex(Point::Plus, weight, lead, &cs, trunc)
        })
    }

    proptest! {
        #[test]
        fn exact_form_has_no_residue(f in arb_exp(0), g in arb_exp(0)) {
            let a = series_mul(&f, &d_function(&g).unwrap()).unwrap();
            let b = series_mul(&g, &d_function(&f).unwrap()).unwrap();
            if a.trunc >= -1 && b.trunc >= -1 {
                let s = residue_at(&a).unwrap() + residue_at(&b).unwrap();
                prop_assert!(s.is_exact_zero());
            }
        }

        #[test]
        fn mul_commutes_and_associates(f in arb_exp(0), g in arb_exp(1), h in arb_exp(0)) {
            let fg = series_mul(&f, &g).unwrap();
            let gf = series_mul(&g, &f).unwrap();
            prop_assert_eq!(&fg, &gf);
            let l = series_mul(&fg, &h).unwrap();
            let r = series_mul(&f, &series_mul(&g, &h).unwrap()).unwrap();
            let t = l.trunc.min(r.trunc);
            for k in l.lead.max(r.lead)..=t {
                prop_assert_eq!(l.coeff(k).unwrap(), r.coeff(k).unwrap());
            }
        }

        #[test]
        fn lie_derivative_leibniz(e in arb_exp(-1), f in arb_exp(0), g in arb_exp(1)) {
            let lhs = lie_derivative(&e, &series_mul(&f, &g).unwrap()).unwrap();
            let ef = lie_derivative(&e, &f).unwrap();
            let eg = lie_derivative(&e, &g).unwrap();
            let rhs = series_mul(&ef, &g).unwrap().add(&series_mul(&f, &eg).unwrap()).unwrap();
            for k in lhs.lead.max(rhs.lead)..=lhs.trunc.min(rhs.trunc) {
                prop_assert_eq!(lhs.coeff(k).unwrap(), rhs.coeff(k).unwrap());
            }
        }

        #[test]
        fn product_coeff_matches_full_product(f in arb_exp(0), g in arb_exp(1)) {
            let p = series_mul(&f, &g).unwrap();
            for k in p.lead..=p.trunc {
                prop_assert_eq!(product_coeff(&f, &g, k).unwrap(), p.coeff(k).unwrap());
            }
        }
    }
}
