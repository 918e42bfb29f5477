//! Classical free boson on polynomials in `x_1, x_2, ...`.
//!
//! `a_{-k} = x_k`, `a_k = k d/dx_k`, `a_0 = 0`. Fields use the same mode
//! conventions as the library at genus 0: `(D^k a)_u = (-1)^k u(u-1)...(u-k+1) a_{u-k}`
//! and `(:X B:)_n = sum_{j<0} X_j B_{n-j} + sum_{j>=0} B_{n-j} X_j`.
#![allow(dead_code)]

use std::collections::BTreeMap;

use knva::fock::FockVector;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Q = BigRational;

/// Monomials keyed by parts in non-increasing order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Poly(pub BTreeMap<Vec<u32>, Q>);

fn q(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

impl Poly {
    pub fn vacuum() -> Self {
        Poly::monomial(&[])
    }

    pub fn monomial(parts: &[u32]) -> Self {
        let mut p = parts.to_vec();
        p.sort_unstable_by(|a, b| b.cmp(a));
        Poly(BTreeMap::from([(p, Q::one())]))
    }

    pub fn degree(&self) -> i64 {
        self.0.keys().map(|m| m.iter().map(|&k| i64::from(k)).sum::<i64>()).max().unwrap_or(0)
    }

    fn add_term(&mut self, m: Vec<u32>, c: Q) {
        let e = self.0.entry(m).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.0.retain(|_, v| !v.is_zero());
        }
    }

    pub fn add(&mut self, other: &Poly) {
        for (m, c) in &other.0 {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn scaled(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::default();
        }
        Poly(self.0.iter().map(|(m, v)| (m.clone(), v * c)).collect())
    }

    pub fn from_fock(v: &FockVector) -> Poly {
        let mut out = Poly::default();
        for (m, c) in &v.terms {
            out.add_term(m.parts().to_vec(), exact(c));
        }
        out
    }
}

pub fn exact(s: &knva::Scalar) -> Q {
    s.as_rational().expect("exact scalar").to_string().parse().unwrap()
}

/// `a_n p`.
pub fn apply_a(n: i64, p: &Poly) -> Poly {
    let mut out = Poly::default();
    for (m, c) in &p.0 {
        if n < 0 {
            let mut m2 = m.clone();
            m2.push((-n) as u32);
            m2.sort_unstable_by(|a, b| b.cmp(a));
            out.add_term(m2, c.clone());
        } else if n > 0 {
            let k = n as u32;
            let mult = m.iter().filter(|&&p| p == k).count() as i64;
            if mult > 0 {
                let pos = m.iter().position(|&p| p == k).unwrap();
                let mut m2 = m.clone();
                m2.remove(pos);
                out.add_term(m2, c * q(n * mult));
            }
        }
    }
    out
}

/// `(D^k a)_u p`.
pub fn apply_derivative(k: u32, u: i64, p: &Poly) -> Poly {
    let mut f = q(if k.is_multiple_of(2) { 1 } else { -1 });
    for i in 0..i64::from(k) {
        f *= q(u - i);
    }
    apply_a(u - i64::from(k), p).scaled(&f)
}

/// Mode `n` of the right-nested normal ordered product `:D^{k_1}a (:D^{k_2}a (...):):`.
pub fn apply_field(orders: &[u32], n: i64, p: &Poly) -> Poly {
    let Some((&k, rest)) = orders.split_first() else {
        return if n == 0 { p.clone() } else { Poly::default() };
    };
    if rest.is_empty() {
        return apply_derivative(k, n, p);
    }
    let d = p.degree();
    let k_rest: i64 = rest.iter().map(|&o| i64::from(o)).sum();
    let mut out = Poly::default();
    // B_m kills p once m > deg p + its derivative order
    for j in (n - d - k_rest).min(0)..0 {
        out.add(&apply_derivative(k, j, &apply_field(rest, n - j, p)));
    }
    for j in 0..=d + i64::from(k) {
        out.add(&apply_field(rest, n - j, &apply_derivative(k, j, p)));
    }
    out
}

/// `T = sum_k k x_{k+1} d/dx_k`, the classical translation.
pub fn apply_t(p: &Poly) -> Poly {
    let mut out = Poly::default();
    for (m, c) in &p.0 {
        for (i, &k) in m.iter().enumerate() {
            let mut m2 = m.clone();
            m2[i] = k + 1;
            m2.sort_unstable_by(|a, b| b.cmp(a));
            out.add_term(m2, c * q(i64::from(k)));
        }
    }
    out
}

/// Loop algebra of sl2 with its central extension,
/// `[x_n, y_m] = [x,y]_{n+m} + n (x|y) delta_{n+m,0} K`, labels `e`, `f`, `h`.
/// Returns the loop part keyed `(label, index)` and the coefficient of `K`.
pub fn sl2_affine_bracket(x: &str, n: i64, y: &str, m: i64) -> (BTreeMap<(String, i64), Q>, Q) {
    let lie: Vec<(&str, i64)> = match (x, y) {
        ("e", "f") => vec![("h", 1)],
        ("f", "e") => vec![("h", -1)],
        ("h", "e") => vec![("e", 2)],
        ("e", "h") => vec![("e", -2)],
        ("h", "f") => vec![("f", -2)],
        ("f", "h") => vec![("f", 2)],
        _ => vec![],
    };
    let form = match (x, y) {
        ("e", "f") | ("f", "e") => 1,
        ("h", "h") => 2,
        _ => 0,
    };
    let loop_part = lie.into_iter().map(|(z, c)| ((z.to_string(), n + m), q(c))).collect();
    let central = if n + m == 0 { q(n * form) } else { Q::zero() };
    (loop_part, central)
}
