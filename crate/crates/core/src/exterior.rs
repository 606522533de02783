//! Finite-dimensional exterior algebra on C^n: multi-indices, wedge maps,
//! derivation extensions and induced Hermitian forms.
//!
//! Basis of Λ^q C^n: e_I for strictly increasing I, ordered lexicographically.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Binomial coefficient C(n, k), zero for k > n.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Signed binomial with C(n, k) = 0 for k < 0.
pub fn binomial_i(n: i64, k: i64) -> i64 {
    if n < 0 || k < 0 || k > n {
        0
    } else {
        binomial(n as usize, k as usize) as i64
    }
}

/// All strictly increasing q-subsets of 0..n, lexicographic.
pub fn combinations(n: usize, q: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(q);
    fn rec(start: usize, n: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < q - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, q, cur, out);
            cur.pop();
        }
    }
    rec(0, n, q, &mut cur, &mut out);
    out
}

pub fn index_of(basis: &[Vec<usize>], idx: &[usize]) -> usize {
    basis
        .binary_search_by(|b| b.as_slice().cmp(idx))
        .expect("multi-index not in basis")
}

/// Sorts a multi-index, returning the permutation sign, or None if it repeats.
pub fn sort_signed(idx: &mut [usize]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

/// Matrix of α ↦ w ∧ α from Λ^q to Λ^{q+1}.
pub fn wedge_matrix(w: &[Complex64], q: usize) -> DMatrix<Complex64> {
    let n = w.len();
    let src = combinations(n, q);
    let dst = combinations(n, q + 1);
    let mut m = DMatrix::zeros(dst.len(), src.len());
    for (c, idx) in src.iter().enumerate() {
        for (j, &wj) in w.iter().enumerate() {
            if wj == Complex64::new(0.0, 0.0) || idx.contains(&j) {
                continue;
            }
            let before = idx.iter().filter(|&&i| i < j).count();
            let sign = if before % 2 == 0 { 1.0 } else { -1.0 };
            let mut out = idx.clone();
            out.insert(before, j);
            m[(index_of(&dst, &out), c)] += wj * sign;
        }
    }
    m
}

/// Derivation extension of F to Λ^q: e_{i1}∧…∧e_{iq} ↦ Σ_r e_{i1}∧…∧F e_{ir}∧…∧e_{iq}.
pub fn derivation_matrix(f: &DMatrix<Complex64>, q: usize) -> DMatrix<Complex64> {
    let n = f.nrows();
    let basis = combinations(n, q);
    let mut m = DMatrix::zeros(basis.len(), basis.len());
    for (c, idx) in basis.iter().enumerate() {
        for r in 0..q {
            for j in 0..n {
                let fji = f[(j, idx[r])];
                if fji == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let mut out = idx.clone();
                out[r] = j;
                if let Some(sign) = sort_signed(&mut out) {
                    m[(index_of(&basis, &out), c)] += fji * sign;
                }
            }
        }
    }
    m
}

/// Hermitian form on Λ^q induced by p: K[I, J] = det p[I, J].
/// Inner products are ⟨α, β⟩ = β^† K α.
pub fn induced_gram(p: &DMatrix<Complex64>, q: usize) -> DMatrix<Complex64> {
    let n = p.nrows();
    let basis = combinations(n, q);
    let mut k = DMatrix::zeros(basis.len(), basis.len());
    for (a, ia) in basis.iter().enumerate() {
        for (b, ib) in basis.iter().enumerate() {
            let minor = DMatrix::from_fn(q, q, |r, s| p[(ia[r], ib[s])]);
            k[(a, b)] = if q == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                minor.determinant()
            };
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(12, 6), 924);
        assert_eq!(binomial_i(3, -1), 0);
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn wedge_squares_to_zero() {
        let w = [c(1.0, 2.0), c(-0.5, 0.3), c(0.7, -1.1)];
        for q in 0..2 {
            let a = wedge_matrix(&w, q);
            let b = wedge_matrix(&w, q + 1);
            assert!((b * a).iter().all(|z| z.norm() < 1e-14));
        }
    }

    #[test]
    fn derivation_trace_of_diagonal() {
        let f = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.0, 0.0),
            c(2.0, 0.0),
            c(3.0, 0.0),
        ]));
        let d = derivation_matrix(&f, 2);
        assert_eq!(d.trace(), c(12.0, 0.0));
    }

    #[test]
    fn induced_gram_of_identity_is_identity() {
        let p = DMatrix::<Complex64>::identity(4, 4);
        let k = induced_gram(&p, 2);
        assert_eq!(k, DMatrix::identity(6, 6));
    }

    #[test]
    fn sort_signed_detects_repeats() {
        let mut a = [2, 0, 1];
        assert_eq!(sort_signed(&mut a), Some(1.0));
        assert_eq!(a, [0, 1, 2]);
        let mut b = [1, 0];
        assert_eq!(sort_signed(&mut b), Some(-1.0));
        assert_eq!(sort_signed(&mut [1, 1]), None);
    }
}
