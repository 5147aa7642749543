//! Dense linear algebra over [`MultiRat`].

use super::MultiRat;

/// Row-reduce `m` in place; returns pivot columns.
pub fn row_reduce(m: &mut [Vec<MultiRat>]) -> Vec<usize> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][c].inv().unwrap();
        for j in c..cols {
            m[r][j] = m[r][j].mul(&inv);
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..cols {
                    let d = f.mul(&m[r][j]);
                    m[i][j] = m[i][j].sub(&d);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(a: &[Vec<MultiRat>]) -> usize {
    let mut m = a.to_vec();
    row_reduce(&mut m).len()
}

/// Unique solution of `a x = b`, `None` if singular or inconsistent.
pub fn solve(a: &[Vec<MultiRat>], b: &[MultiRat]) -> Option<Vec<MultiRat>> {
    let n = a.first().map(|r| r.len()).unwrap_or(0);
    let mut m: Vec<Vec<MultiRat>> = a.iter().zip(b).map(|(r, x)| {
        let mut r = r.clone();
        r.push(x.clone());
        r
    }).collect();
    let piv = row_reduce(&mut m);
    if piv.len() != n || piv.contains(&n) {
        return None;
    }
    Some((0..n).map(|i| m[i][n].clone()).collect())
}

/// Determinant by fraction-free expansion along elimination.
pub fn det(a: &[Vec<MultiRat>]) -> MultiRat {
    let n = a.len();
    let mut m = a.to_vec();
    let mut d = MultiRat::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else { return MultiRat::zero() };
        if p != c {
            m.swap(p, c);
            d = d.neg();
        }
        d = d.mul(&m[c][c]);
        let inv = m[c][c].inv().unwrap();
        for i in c + 1..n {
            if m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].mul(&inv);
            for j in c..n {
                let x = f.mul(&m[c][j]);
                m[i][j] = m[i][j].sub(&x);
            }
        }
    }
    d
}
