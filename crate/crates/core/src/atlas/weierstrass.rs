//! Weierstrass functions for the lattice `Z + tau Z` via q-expansions.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float};

use crate::Error;

#[derive(Clone, Debug)]
pub struct Weierstrass {
    pub prec: u32,
    pub tau: Complex,
    pub q: Complex,
    pub pi: Float,
    pub g2: Complex,
    pub g3: Complex,
    /// `zeta(z + 1) - zeta(z)`.
    pub eta1: Complex,
    /// `zeta(z + tau) - zeta(z)`.
    pub eta2: Complex,
}

impl Weierstrass {
    pub fn new(tau: &Complex, prec: u32) -> Result<Self, Error> {
        if tau.imag().is_sign_negative() || tau.imag().is_zero() {
            return Err(Error::Config("tau must lie in the upper half plane".into()));
        }
        let pi = Float::with_val(prec, Constant::Pi);
        let two_pi_i = Complex::with_val(prec, (0, Float::with_val(prec, &pi * 2u32)));
        let tau = Complex::with_val(prec, tau);
        let q = Complex::with_val(prec, &two_pi_i * &tau).exp();
        let terms = Self::term_count(prec, tau.imag().to_f64(), 0.0);
        // sum_{n>=1} n^k q^n / (1 - q^n) for k = 1, 3, 5
        let mut s1 = Complex::with_val(prec, 0);
        let mut s3 = Complex::with_val(prec, 0);
        let mut s5 = Complex::with_val(prec, 0);
        let mut qn = Complex::with_val(prec, 1);
        for n in 1..=terms {
            qn *= &q;
            let denom = Complex::with_val(prec, 1 - &qn);
            let t = Complex::with_val(prec, &qn / &denom);
            let nf = n as u64;
            s1 += Complex::with_val(prec, &t * nf);
            s3 += Complex::with_val(prec, &t * (nf * nf * nf));
            s5 += Complex::with_val(prec, &t * (nf.pow(5)));
        }
        let e2 = Complex::with_val(prec, 1 - Complex::with_val(prec, &s1 * 24u32));
        let e4 = Complex::with_val(prec, 1 + Complex::with_val(prec, &s3 * 240u32));
        let e6 = Complex::with_val(prec, 1 - Complex::with_val(prec, &s5 * 504u32));
        let pi2 = Float::with_val(prec, pi.clone().pow(2u32));
        let pi4 = Float::with_val(prec, pi.clone().pow(4u32));
        let pi6 = Float::with_val(prec, pi.clone().pow(6u32));
        let eta1 = Complex::with_val(prec, &e2 * Float::with_val(prec, &pi2 / 3u32));
        let eta2 = Complex::with_val(prec, Complex::with_val(prec, &eta1 * &tau) - &two_pi_i);
        let g2 = Complex::with_val(prec, &e4 * Float::with_val(prec, Float::with_val(prec, &pi4 * 4u32) / 3u32));
        let g3 = Complex::with_val(prec, &e6 * Float::with_val(prec, Float::with_val(prec, &pi6 * 8u32) / 27u32));
        Ok(Weierstrass { prec, tau, q, pi, g2, g3, eta1, eta2 })
    }

    fn term_count(prec: u32, im_tau: f64, im_z: f64) -> usize {
        let gap = im_tau - im_z.abs();
        let per_term = 2.0 * std::f64::consts::PI * gap;
        (prec as f64 * std::f64::consts::LN_2 / per_term).ceil() as usize + 8
    }

    /// Splits `z = z' + k tau` with `|Im z'| <= Im tau / 2`.
    fn reduce(&self, z: &Complex) -> (Complex, i64) {
        let k = (z.imag().to_f64() / self.tau.imag().to_f64()).round() as i64;
        let zr = Complex::with_val(self.prec, z - Complex::with_val(self.prec, &self.tau * k));
        (zr, k)
    }

    fn u_powers(&self, z: &Complex) -> (Complex, Complex, usize) {
        let prec = self.prec;
        let two_pi_i = Complex::with_val(prec, (0, Float::with_val(prec, &self.pi * 2u32)));
        let u = Complex::with_val(prec, &two_pi_i * z).exp();
        let ui = Complex::with_val(prec, u.clone().recip());
        let terms = Self::term_count(prec, self.tau.imag().to_f64(), z.imag().to_f64());
        (u, ui, terms)
    }

    /// `zeta(z) = eta1 z + pi cot(pi z) - 2 pi i sum q^n/(1-q^n) (u^n - u^-n)`.
    pub fn zeta(&self, z: &Complex) -> Result<Complex, Error> {
        let prec = self.prec;
        let (z, shift) = self.reduce(z);
        let z = &z;
        let (u, ui, terms) = self.u_powers(z);
        let piz = Complex::with_val(prec, z * &self.pi);
        let cot = Complex::with_val(prec, piz.clone().cos() / piz.sin());
        let mut acc = Complex::with_val(prec, &self.eta1 * z);
        acc += Complex::with_val(prec, &cot * &self.pi);
        let mut sum = Complex::with_val(prec, 0);
        let (mut qn, mut un, mut uin) = (Complex::with_val(prec, 1), Complex::with_val(prec, 1), Complex::with_val(prec, 1));
        for _ in 1..=terms {
            qn *= &self.q;
            un *= &u;
            uin *= &ui;
            let c = Complex::with_val(prec, &qn / Complex::with_val(prec, 1 - &qn));
            sum += Complex::with_val(prec, &c * Complex::with_val(prec, &un - &uin));
        }
        let two_pi_i = Complex::with_val(prec, (0, Float::with_val(prec, &self.pi * 2u32)));
        acc -= Complex::with_val(prec, &two_pi_i * &sum);
        acc += Complex::with_val(prec, &self.eta2 * shift);
        Ok(acc)
    }

    /// `wp(z) = -eta1 + pi^2 / sin^2(pi z) - 4 pi^2 sum n q^n/(1-q^n) (u^n + u^-n)`.
    pub fn wp(&self, z: &Complex) -> Result<Complex, Error> {
        let prec = self.prec;
        let (z, _) = self.reduce(z);
        let z = &z;
        let (u, ui, terms) = self.u_powers(z);
        let pi2 = Float::with_val(prec, self.pi.clone().pow(2u32));
        let s = Complex::with_val(prec, z * &self.pi).sin();
        let mut acc = Complex::with_val(prec, Complex::with_val(prec, s.square().recip()) * &pi2);
        acc -= &self.eta1;
        let mut sum = Complex::with_val(prec, 0);
        let (mut qn, mut un, mut uin) = (Complex::with_val(prec, 1), Complex::with_val(prec, 1), Complex::with_val(prec, 1));
        for n in 1..=terms {
            qn *= &self.q;
            un *= &u;
            uin *= &ui;
            let c = Complex::with_val(prec, &qn / Complex::with_val(prec, 1 - &qn));
            let t = Complex::with_val(prec, &c * Complex::with_val(prec, &un + &uin));
            sum += Complex::with_val(prec, &t * n as u64);
        }
        acc -= Complex::with_val(prec, &sum * Float::with_val(prec, &pi2 * 4u32));
        Ok(acc)
    }

    /// `wp'(z) = -2 pi^3 cos/sin^3 - 8 pi^3 i sum n^2 q^n/(1-q^n) (u^n - u^-n)`.
    pub fn wp_prime(&self, z: &Complex) -> Result<Complex, Error> {
        let prec = self.prec;
        let (z, _) = self.reduce(z);
        let z = &z;
        let (u, ui, terms) = self.u_powers(z);
        let pi3 = Float::with_val(prec, self.pi.clone().pow(3u32));
        let piz = Complex::with_val(prec, z * &self.pi);
        let s = piz.clone().sin();
        let c = piz.cos();
        let s3 = Complex::with_val(prec, s.pow(3u32));
        let mut acc = Complex::with_val(prec, Complex::with_val(prec, &c / &s3) * Float::with_val(prec, &pi3 * -2i32));
        let mut sum = Complex::with_val(prec, 0);
        let (mut qn, mut un, mut uin) = (Complex::with_val(prec, 1), Complex::with_val(prec, 1), Complex::with_val(prec, 1));
        for n in 1..=terms {
            qn *= &self.q;
            un *= &u;
            uin *= &ui;
            let cq = Complex::with_val(prec, &qn / Complex::with_val(prec, 1 - &qn));
            let t = Complex::with_val(prec, &cq * Complex::with_val(prec, &un - &uin));
            sum += Complex::with_val(prec, &t * (n as u64 * n as u64));
        }
        let eight_pi3_i = Complex::with_val(prec, (0, Float::with_val(prec, &pi3 * 8u32)));
        acc -= Complex::with_val(prec, &eight_pi3_i * &sum);
        Ok(acc)
    }

    /// Laurent data `c_k`, `wp(z) = z^-2 + sum_{k>=2} c_k z^{2k-2}`; entry `i` holds `c_{i+2}`.
    pub fn laurent_coefficients(&self, count: usize) -> Vec<Complex> {
        let prec = self.prec;
        let mut c: Vec<Complex> = Vec::with_capacity(count);
        for k in 2..count + 2 {
            let v = match k {
                2 => Complex::with_val(prec, &self.g2 / 20u32),
                3 => Complex::with_val(prec, &self.g3 / 28u32),
                _ => {
                    let mut s = Complex::with_val(prec, 0);
                    for m in 2..=k - 2 {
                        s += Complex::with_val(prec, &c[m - 2] * &c[k - m - 2]);
                    }
                    let den = ((2 * k + 1) * (k - 3)) as u64;
                    Complex::with_val(prec, Complex::with_val(prec, &s * 3u32) / den)
                }
            };
            c.push(v);
        }
        c
    }

    /// Taylor coefficients `p_0..p_count-1` of `wp(d + t)` from `wp'' = 6 wp^2 - g2/2`.
    pub fn wp_taylor(&self, d: &Complex, count: usize) -> Result<Vec<Complex>, Error> {
        let prec = self.prec;
        let mut p = vec![self.wp(d)?, self.wp_prime(d)?];
        while p.len() < count {
            let k = p.len() - 2;
            let mut s = Complex::with_val(prec, 0);
            for i in 0..=k {
                s += Complex::with_val(prec, &p[i] * &p[k - i]);
            }
            s *= 6u32;
            if k == 0 {
                s -= Complex::with_val(prec, &self.g2 / 2u32);
            }
            let den = ((k + 2) * (k + 1)) as u64;
            p.push(Complex::with_val(prec, &s / den));
        }
        p.truncate(count);
        Ok(p)
    }

    /// Taylor coefficients of `zeta(d + t)`: `zeta(d) - sum p_k t^{k+1} / (k+1)`.
    pub fn zeta_taylor(&self, d: &Complex, count: usize) -> Result<Vec<Complex>, Error> {
        let prec = self.prec;
        let p = self.wp_taylor(d, count.max(2))?;
        let mut z = Vec::with_capacity(count);
        z.push(self.zeta(d)?);
        for k in 1..count {
            z.push(Complex::with_val(prec, -Complex::with_val(prec, &p[k - 1] / k as u64)));
        }
        Ok(z)
    }

    /// Value of `wp^{(k)}(z)` through the Taylor recursion at `z`.
    pub fn wp_derivative(&self, z: &Complex, k: usize) -> Result<Complex, Error> {
        let p = self.wp_taylor(z, k + 1)?;
        let mut fact = Float::with_val(self.prec, 1);
        for i in 2..=k as u64 {
            fact *= i;
        }
        Ok(Complex::with_val(self.prec, &p[k] * &fact))
    }
}
