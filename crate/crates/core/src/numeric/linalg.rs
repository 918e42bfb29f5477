use super::scalar::Scalar;
use crate::Error;

/// Solves `m x = rhs` by Gaussian elimination with partial pivoting.
///
/// `tol` is the pivot threshold for approximate scalars; exact systems only
/// reject exact zero pivots.
pub fn solve(mut m: Vec<Vec<Scalar>>, mut rhs: Vec<Scalar>, tol: f64) -> Result<Vec<Scalar>, Error> {
    let n = rhs.len();
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return Err(Error::Invariant("linear system is not square".into()));
    }
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !m[r][col].is_negligible(tol))
            .max_by(|&a, &b| m[a][col].magnitude().total_cmp(&m[b][col].magnitude()))
            .ok_or_else(|| Error::Singular(format!("no pivot in column {col} of {n}x{n} system")))?;
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = m[col][col].recip()?;
        for r in col + 1..n {
            if m[r][col].is_exact_zero() {
                continue;
            }
            let f = &m[r][col] * &inv;
            let (top, bottom) = m.split_at_mut(r);
            for (x, p) in bottom[0][col..n].iter_mut().zip(&top[col][col..n]) {
                *x -= &(&f * p);
            }
            let t = &f * &rhs[col];
            rhs[r] -= &t;
        }
    }
    let mut x = rhs.clone();
    for row in (0..n).rev() {
        let mut acc = rhs[row].clone();
        for c in row + 1..n {
            let t = &m[row][c] * &x[c];
            acc -= &t;
        }
        x[row] = &acc / &m[row][row];
    }
    Ok(x)
}
