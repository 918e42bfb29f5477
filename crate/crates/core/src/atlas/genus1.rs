use std::collections::BTreeMap;

use rug::ops::Pow;
use rug::{Complex, Float};

use super::weierstrass::Weierstrass;
use super::{expected_leads, AtlasConfig, BasisAtlas, BasisIndex, Geometry, Section};
use crate::numeric::linalg::solve;
use crate::numeric::{LaurentExpansion, Point, Scalar, ScalarMode};
use crate::Error;

/// Elliptic function `c_0 + c_Z Z + sum_k c_k wp^{(k)}(z - p) / (k+1)!`, `Z = zeta(z - p+) - zeta(z - p-)`.
#[derive(Clone, Debug)]
pub struct Combination {
    pub center: Option<Point>,
    pub coeffs: Vec<Complex>,
}

/// Closed-form data behind a torus atlas; not part of the file format.
#[derive(Clone, Debug)]
pub struct Genus1Data {
    pub weierstrass: Weierstrass,
    pub p_plus: Complex,
    pub p_minus: Complex,
    pub c_rho: Complex,
    pub functions: BTreeMap<BasisIndex, Combination>,
    pub duals: BTreeMap<BasisIndex, Combination>,
}

/// Dense series `sum c[i] t^{lo + i}`.
#[derive(Clone)]
struct Dense {
    lo: i64,
    c: Vec<Complex>,
}

impl Dense {
    fn zeros(lo: i64, hi: i64, prec: u32) -> Self {
        Dense { lo, c: vec![Complex::new(prec); (hi - lo + 1) as usize] }
    }

    fn hi(&self) -> i64 {
        self.lo + self.c.len() as i64 - 1
    }

    fn get(&self, k: i64) -> &Complex {
        &self.c[(k - self.lo) as usize]
    }

    fn set(&mut self, k: i64, v: Complex) {
        if k >= self.lo && k <= self.hi() {
            let i = (k - self.lo) as usize;
            self.c[i] = v;
        }
    }

    /// Derivative divided by `div`, kept on the same grid.
    fn derivative_over(&self, div: u64, prec: u32) -> Self {
        let mut out = Dense::zeros(self.lo, self.hi(), prec);
        for k in self.lo..=self.hi() {
            if k != 0 {
                let v = Complex::with_val(prec, self.get(k) * k);
                out.set(k - 1, Complex::with_val(prec, v / div));
            }
        }
        out
    }

    fn eval(&self, t: &Complex, upto: i64, prec: u32) -> Complex {
        let mut acc = Complex::new(prec);
        for k in self.lo..=upto.min(self.hi()) {
            let tk = Complex::with_val(prec, t.pow(k));
            acc += Complex::with_val(prec, self.get(k) * &tk);
        }
        acc
    }
}

/// Building blocks expanded at one marked point.
struct Blocks {
    one: Dense,
    z: Dense,
    /// `wp^{(k)}(z - p+) / (k+1)!`
    wp_plus: Vec<Dense>,
    /// `wp^{(k)}(z - p-) / (k+1)!`
    wp_minus: Vec<Dense>,
}

impl Blocks {
    fn column(&self, center: Option<Point>, j: usize) -> &Dense {
        match j {
            0 => &self.one,
            1 => &self.z,
            k => match center {
                Some(Point::Plus) => &self.wp_plus[k - 2],
                Some(Point::Minus) => &self.wp_minus[k - 2],
                None => unreachable!("constant combinations have two columns"),
            },
        }
    }

    fn combine(&self, comb: &Combination, prec: u32) -> Dense {
        let mut out = Dense::zeros(self.one.lo, self.one.hi(), prec);
        for (j, c) in comb.coeffs.iter().enumerate() {
            let col = self.column(comb.center, j);
            for (o, x) in out.c.iter_mut().zip(&col.c) {
                *o += Complex::with_val(prec, c * x);
            }
        }
        out
    }
}

fn laurent_zeta(w: &Weierstrass, lo: i64, hi: i64) -> Dense {
    let prec = w.prec;
    let cs = w.laurent_coefficients((hi / 2 + 2).max(1) as usize);
    let mut d = Dense::zeros(lo, hi, prec);
    d.set(-1, Complex::with_val(prec, 1));
    for (i, c) in cs.iter().enumerate() {
        let k = i as i64 + 2;
        let e = 2 * k - 1;
        d.set(e, Complex::with_val(prec, -Complex::with_val(prec, c / (e as u64))));
    }
    d
}

fn laurent_wp(w: &Weierstrass, lo: i64, hi: i64) -> Dense {
    let prec = w.prec;
    let cs = w.laurent_coefficients((hi / 2 + 2).max(1) as usize);
    let mut d = Dense::zeros(lo, hi, prec);
    d.set(-2, Complex::with_val(prec, 1));
    for (i, c) in cs.iter().enumerate() {
        let k = i as i64 + 2;
        d.set(2 * k - 2, c.clone());
    }
    d
}

fn taylor(coeffs: Vec<Complex>, lo: i64, hi: i64, prec: u32) -> Dense {
    let mut d = Dense::zeros(lo, hi, prec);
    for (k, c) in coeffs.into_iter().enumerate() {
        d.set(k as i64, c);
    }
    d
}

fn scaled_derivatives(base: Dense, count: usize, prec: u32) -> Vec<Dense> {
    let mut out = Vec::with_capacity(count);
    let mut cur = base;
    for k in 0..count {
        if k > 0 {
            cur = cur.derivative_over(k as u64 + 1, prec);
        }
        out.push(cur.clone());
    }
    out
}

fn blocks_at(w: &Weierstrass, point: Point, delta: &Complex, lo: i64, hi: i64, kmax: usize) -> Result<Blocks, Error> {
    let prec = w.prec;
    let count = (hi + 1).max(1) as usize;
    // the other marked point sits at offset `other` in the local coordinate
    let other = match point {
        Point::Plus => Complex::with_val(prec, -delta),
        Point::Minus => delta.clone(),
    };
    let own_zeta = laurent_zeta(w, lo, hi);
    let other_zeta = taylor(w.zeta_taylor(&other, count)?, lo, hi, prec);
    let own_wp = scaled_derivatives(laurent_wp(w, lo, hi), kmax, prec);
    let other_wp = scaled_derivatives(taylor(w.wp_taylor(&other, count)?, lo, hi, prec), kmax, prec);
    let mut z = Dense::zeros(lo, hi, prec);
    let (zp, zm) = match point {
        Point::Plus => (&own_zeta, &other_zeta),
        Point::Minus => (&other_zeta, &own_zeta),
    };
    for (i, o) in z.c.iter_mut().enumerate() {
        *o = Complex::with_val(prec, &zp.c[i] - &zm.c[i]);
    }
    let mut one = Dense::zeros(lo, hi, prec);
    one.set(0, Complex::with_val(prec, 1));
    let (wp_plus, wp_minus) = match point {
        Point::Plus => (own_wp, other_wp),
        Point::Minus => (other_wp, own_wp),
    };
    Ok(Blocks { one, z, wp_plus, wp_minus })
}

fn distance_to_lattice(z: &Complex, tau: &Complex) -> f64 {
    let (x, y) = (z.real().to_f64(), z.imag().to_f64());
    let (tx, ty) = (tau.real().to_f64(), tau.imag().to_f64());
    let k0 = (y / ty).round() as i64;
    let mut best = f64::INFINITY;
    for k in k0 - 2..=k0 + 2 {
        let rx = x - k as f64 * tx;
        let ry = y - k as f64 * ty;
        let m0 = rx.round() as i64;
        for m in m0 - 2..=m0 + 2 {
            best = best.min(((rx - m as f64).powi(2) + ry.powi(2)).sqrt());
        }
    }
    best
}

/// Rejects `p- - p+` of small torsion order.
///
/// If `N (p+ - p-)` lies in the lattice, Abel's theorem forces `A_{-(N-1/2)}` to vanish
/// to order `N` at P- and leaves no function with the required pole at `n = -(N+1/2)`.
fn check_generic(delta: &Complex, tau: &Complex, max_pole: i64) -> Result<(), Error> {
    let prec = delta.prec().0;
    let two = Complex::with_val(prec, delta * 2u32);
    if distance_to_lattice(&two, tau) < 0.05 {
        return Err(Error::Config("p- - p+ is too close to a 2-torsion point of the lattice".into()));
    }
    for order in 1..=max_pole.max(2) {
        let m = Complex::with_val(prec, delta * order);
        let d = distance_to_lattice(&m, tau);
        if d < 1e-6 {
            return Err(Error::Config(format!(
                "p- - p+ is a {order}-torsion point of the lattice; no basis with the required \
                 orders exists for |n| = {}/2 and {}/2",
                2 * order - 1,
                2 * order + 1
            )));
        }
    }
    Ok(())
}

/// `c_rho` makes `(Z + c_rho) dz` have purely imaginary periods.
fn third_kind_constant(w: &Weierstrass, delta: &Complex) -> Complex {
    let prec = w.prec;
    let w1 = Complex::with_val(prec, &w.eta1 * delta);
    let w2 = Complex::with_val(prec, &w.eta2 * delta);
    let x = Float::with_val(prec, -w1.real());
    let num = Float::with_val(prec, w2.real() + Float::with_val(prec, &x * w.tau.real()));
    let y = Float::with_val(prec, num / w.tau.imag());
    Complex::with_val(prec, (x, y))
}

fn to_scalar(mode: ScalarMode, z: &Complex) -> Scalar {
    mode.from_complex(z).expect("genus-1 atlases use complex scalars")
}

fn solve_combination(
    plus: &Blocks,
    minus: &Blocks,
    n: BasisIndex,
    mode: ScalarMode,
) -> Result<Combination, Error> {
    let d = n.doubled();
    let pole = (d.abs() + 1) / 2;
    // poles at P- for n > 0, at P+ for n < 0
    let (center, near, far) = if d > 0 {
        (Point::Minus, minus, plus)
    } else {
        (Point::Plus, plus, minus)
    };
    let size = (pole + 1) as usize;
    let mut rows: Vec<Vec<Scalar>> = Vec::with_capacity(size);
    let mut rhs = Vec::with_capacity(size);
    for k in -1..=pole - 2 {
        rows.push((0..size).map(|j| to_scalar(mode, far.column(Some(center), j).get(k))).collect());
        rhs.push(mode.zero());
    }
    let (norm_block, norm_exp) = if d > 0 { (far, pole - 1) } else { (near, -pole) };
    rows.push((0..size).map(|j| to_scalar(mode, norm_block.column(Some(center), j).get(norm_exp))).collect());
    rhs.push(mode.one());
    let x = solve(rows, rhs, 1e-250)?;
    Ok(Combination {
        center: Some(center),
        coeffs: x.iter().map(|s| s.as_complex().expect("complex").clone()).collect(),
    })
}

fn to_expansion(
    dense: &Dense,
    point: Point,
    lambda: i64,
    lead: i64,
    trunc: i64,
    mode: ScalarMode,
    tol: f64,
) -> Result<LaurentExpansion, Error> {
    let scale = dense.c.iter().map(|c| c.clone().abs().real().to_f64()).fold(1.0, f64::max);
    for k in dense.lo..lead {
        let m = dense.get(k).clone().abs().real().to_f64();
        if m > tol * scale {
            return Err(Error::Invariant(format!(
                "coefficient of t^{k} at {point:?} is {m:e}, expected to vanish below lead {lead}"
            )));
        }
    }
    let coeffs = (lead..=trunc).map(|k| to_scalar(mode, dense.get(k))).collect();
    LaurentExpansion::new(point, lambda, lead, coeffs, trunc)
}

pub(super) fn build_genus1(config: AtlasConfig) -> Result<BasisAtlas, Error> {
    let Geometry::Torus { tau, p_plus, p_minus } = &config.geometry else {
        return Err(Error::Config("genus-1 construction needs a torus geometry".into()));
    };
    let mode = config.scalar_mode;
    let prec = mode.bits();
    let tau = tau.to_complex(prec)?;
    let pp = p_plus.to_complex(prec)?;
    let pm = p_minus.to_complex(prec)?;
    let w = Weierstrass::new(&tau, prec)?;
    let delta = Complex::with_val(prec, &pm - &pp);
    let trunc = config.trunc;
    let max_pole = (config.window.doubled() + 1) / 2;
    check_generic(&delta, &tau, max_pole)?;
    let kmax = (max_pole - 1).max(1) as usize;
    let lo = -max_pole - 1;
    let hi = trunc + kmax as i64 + 2;
    let plus = blocks_at(&w, Point::Plus, &delta, lo, hi, kmax)?;
    let minus = blocks_at(&w, Point::Minus, &delta, lo, hi, kmax)?;

    let c_rho = third_kind_constant(&w, &delta);
    // zeta is odd, so zeta(p+ - p-) = -zeta(delta)
    let zeta_delta = w.zeta(&delta)?;
    let c_a = Complex::with_val(prec, Complex::with_val(prec, &zeta_delta * -2i32) - &c_rho);

    let idx = config.indices();
    let mut functions = BTreeMap::new();
    for &n in &idx {
        let comb = match n.doubled() {
            1 => Combination { center: None, coeffs: vec![Complex::with_val(prec, 1), Complex::new(prec)] },
            -1 => Combination { center: None, coeffs: vec![c_a.clone(), Complex::with_val(prec, 1)] },
            _ => solve_combination(&plus, &minus, n, mode)?,
        };
        functions.insert(n, comb);
    }

    let dense: BTreeMap<(BasisIndex, Point), Dense> = functions
        .iter()
        .flat_map(|(&n, c)| [((n, Point::Plus), plus.combine(c, prec)), ((n, Point::Minus), minus.combine(c, prec))])
        .collect();

    let mut duals = BTreeMap::new();
    for (&n, comb) in &functions {
        let dual = match n.doubled() {
            1 => comb.clone(),
            -1 => Combination { center: None, coeffs: vec![c_rho.clone(), Complex::with_val(prec, 1)] },
            _ => {
                let a = &dense[&(n, Point::Plus)];
                let b = &dense[&(-n, Point::Plus)];
                let mut r = Complex::new(prec);
                for k in a.lo..=a.hi() {
                    let j = -1 - k;
                    if j >= b.lo && j <= b.hi() {
                        r += Complex::with_val(prec, a.get(k) * b.get(j));
                    }
                }
                if r.clone().abs().real().to_f64() < 1e-200 {
                    return Err(Error::Singular(format!("Res(A_{} A_{n}) vanishes", -n)));
                }
                let inv = Complex::with_val(prec, r.recip());
                Combination {
                    center: comb.center,
                    coeffs: comb.coeffs.iter().map(|c| Complex::with_val(prec, c * &inv)).collect(),
                }
            }
        };
        duals.insert(n, dual);
    }
    let dual_dense: BTreeMap<(BasisIndex, Point), Dense> = duals
        .iter()
        .flat_map(|(&n, c)| [((n, Point::Plus), plus.combine(c, prec)), ((n, Point::Minus), minus.combine(c, prec))])
        .collect();

    let tol = config.tolerance();
    let mut sections = BTreeMap::new();
    for &lambda in &config.lambda_range {
        let source = if lambda <= 0 { &dense } else { &dual_dense };
        for &n in &idx {
            let (lp, lm) = expected_leads(1, lambda, n);
            let plus_e = to_expansion(&source[&(n, Point::Plus)], Point::Plus, lambda, lp, trunc, mode, tol)?;
            let minus_e = to_expansion(&source[&(n, Point::Minus)], Point::Minus, lambda, lm, trunc, mode, tol)?;
            sections.insert((lambda, n), Section { plus: plus_e, minus: minus_e });
        }
    }
    let data = Genus1Data { weierstrass: w, p_plus: pp, p_minus: pm, c_rho, functions, duals };
    let mut atlas = BasisAtlas { config, sections, normalizations: BTreeMap::new(), genus1: Some(data) };
    atlas.fill_normalizations();
    Ok(atlas)
}

impl Genus1Data {
    /// Direct value of a combination at `z`.
    pub fn evaluate(&self, comb: &Combination, z: &Complex) -> Result<Complex, Error> {
        let w = &self.weierstrass;
        let prec = w.prec;
        let zp = Complex::with_val(prec, z - &self.p_plus);
        let zm = Complex::with_val(prec, z - &self.p_minus);
        let zz = Complex::with_val(prec, w.zeta(&zp)? - w.zeta(&zm)?);
        let mut acc = Complex::with_val(prec, &comb.coeffs[0] + Complex::with_val(prec, &comb.coeffs[1] * &zz));
        if comb.coeffs.len() > 2 {
            let arg = match comb.center {
                Some(Point::Plus) => &zp,
                _ => &zm,
            };
            let taylor = w.wp_taylor(arg, comb.coeffs.len() - 1)?;
            // taylor[k] = wp^{(k)} / k!, so wp^{(k)} / (k+1)! = taylor[k] / (k+1)
            for (k, c) in comb.coeffs[2..].iter().enumerate() {
                let v = Complex::with_val(prec, &taylor[k] / (k as u64 + 1));
                acc += Complex::with_val(prec, c * v);
            }
        }
        Ok(acc)
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct PeriodicityReport {
    /// Largest `|f(z+1) - f(z)|`, `|f(z+tau) - f(z)|` relative to `|f(z)|`.
    pub max_period_residual: f64,
    /// Largest relative gap between a stored expansion and the closed form near its point.
    pub max_expansion_residual: f64,
    pub functions_checked: usize,
}

fn worse(acc: f64, x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        acc.max(x)
    }
}

/// Double periodicity of the basis functions and agreement of expansions with closed forms.
pub fn periodicity_residual(atlas: &BasisAtlas) -> Result<PeriodicityReport, Error> {
    let data = atlas
        .genus1
        .as_ref()
        .ok_or_else(|| Error::Config("periodicity check needs a constructed torus atlas".into()))?;
    let w = &data.weierstrass;
    let prec = w.prec;
    let tau = &w.tau;
    let mid = Complex::with_val(prec, Complex::with_val(prec, &data.p_plus + &data.p_minus) / 2u32);
    let z0 = Complex::with_val(prec, &mid + Complex::with_val(prec, (0.37, -0.41 * tau.imag().to_f64())));
    let z1 = Complex::with_val(prec, &z0 + 1u32);
    let zt = Complex::with_val(prec, &z0 + tau);
    let delta = Complex::with_val(prec, &data.p_minus - &data.p_plus);
    // shortest lattice vector is at least min(1, Im tau)
    let radius = distance_to_lattice(&delta, tau).min(tau.imag().to_f64()).min(1.0);
    let offset = Complex::with_val(prec, (0.08 * radius, 0.05 * radius));
    let mut period: f64 = 0.0;
    let mut expansion: f64 = 0.0;
    let mut count = 0;
    for (family, lambda) in [(&data.functions, 0i64), (&data.duals, 1)] {
        if !atlas.has_lambda(lambda) {
            continue;
        }
        for (&n, comb) in family {
            let v0 = data.evaluate(comb, &z0)?;
            let scale = v0.clone().abs().real().to_f64().max(1.0);
            for z in [&z1, &zt] {
                let v = data.evaluate(comb, z)?;
                let d = Complex::with_val(prec, &v - &v0).abs().real().to_f64();
                period = worse(period, d / scale);
            }
            let sec = atlas.f(lambda, n)?;
            for (p, base) in [(Point::Plus, &data.p_plus), (Point::Minus, &data.p_minus)] {
                let e = sec.at(p);
                let dense = Dense {
                    lo: e.lead,
                    c: e.coeffs.iter().map(|s| s.as_complex().expect("complex").clone()).collect(),
                };
                let z = Complex::with_val(prec, base + &offset);
                let direct = data.evaluate(comb, &z)?;
                let series = dense.eval(&offset, e.trunc, prec);
                let s = direct.clone().abs().real().to_f64().max(1.0);
                let d = Complex::with_val(prec, &series - &direct).abs().real().to_f64();
                expansion = worse(expansion, d / s);
            }
            count += 1;
        }
    }
    Ok(PeriodicityReport { max_period_residual: period, max_expansion_residual: expansion, functions_checked: count })
}
