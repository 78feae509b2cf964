use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{dot, Basis, LatticeError};

/// Fraction-free Gram–Schmidt data.
///
/// `d[0] = 1` and `d[i + 1] = d[i] * |b*_i|^2`, so `d[i]` is the Gram
/// determinant of the first `i` rows. `lambda[i][j] = d[j + 1] * mu_{i,j}` for
/// `j < i`. All entries are integers for an integer basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegralGso {
    pub d: Vec<BigInt>,
    pub lambda: Vec<Vec<BigInt>>,
}

impl IntegralGso {
    pub fn compute(basis: &Basis) -> Result<Self, LatticeError> {
        let n = basis.dim();
        let rows = basis.rows();
        let mut d = Vec::with_capacity(n + 1);
        d.push(BigInt::one());
        let mut lambda: Vec<Vec<BigInt>> = Vec::with_capacity(n);
        for k in 0..n {
            let mut row_k = Vec::with_capacity(k);
            for j in 0..=k {
                let mut u = dot(&rows[k], &rows[j]);
                for i in 0..j {
                    let lji = if j == k { &row_k[i] } else { &lambda[j][i] };
                    u = (&d[i + 1] * u - &row_k[i] * lji) / &d[i];
                }
                if j < k {
                    row_k.push(u);
                } else {
                    if u.is_zero() {
                        return Err(LatticeError::RankDeficient(k));
                    }
                    d.push(u);
                }
            }
            lambda.push(row_k);
        }
        Ok(IntegralGso { d, lambda })
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// `|b*_i|^2` as an exact rational.
    pub fn norm_sq(&self, i: usize) -> BigRational {
        BigRational::new(self.d[i + 1].clone(), self.d[i].clone())
    }

    pub fn mu(&self, i: usize, j: usize) -> BigRational {
        BigRational::new(self.lambda[i][j].clone(), self.d[j + 1].clone())
    }

    pub fn to_rational(&self) -> GsoData {
        let n = self.dim();
        let mu = (0..n)
            .map(|i| (0..i).map(|j| self.mu(i, j)).collect())
            .collect();
        let norms_sq = (0..n).map(|i| self.norm_sq(i)).collect();
        GsoData { mu, norms_sq }
    }
}

/// Exact Gram–Schmidt data: `mu[i][j]` for `j < i` and `|b*_i|^2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GsoData {
    pub mu: Vec<Vec<BigRational>>,
    pub norms_sq: Vec<BigRational>,
}

impl GsoData {
    pub fn dim(&self) -> usize {
        self.norms_sq.len()
    }

    /// Exact `|mu_{i,j}| <= 1/2` for all `j < i`.
    pub fn is_size_reduced(&self) -> bool {
        let half = BigRational::new(1.into(), 2.into());
        self.mu.iter().flatten().all(|m| m.abs() <= half)
    }

    /// Exact Lovász condition `delta |b*_{i-1}|^2 <= |b*_i|^2 + mu_{i,i-1}^2 |b*_{i-1}|^2`.
    pub fn satisfies_lovasz(&self, delta: &BigRational) -> bool {
        (1..self.dim()).all(|i| {
            let prev = &self.norms_sq[i - 1];
            let m = &self.mu[i][i - 1];
            delta * prev <= &self.norms_sq[i] + m * m * prev
        })
    }

    /// `4 |b*_i|^2 >= 2 |b*_{i-1}|^2` for every consecutive pair.
    pub fn satisfies_halving_chain(&self) -> bool {
        let two = BigRational::from_integer(2.into());
        let four = BigRational::from_integer(4.into());
        (1..self.dim()).all(|i| &four * &self.norms_sq[i] >= &two * &self.norms_sq[i - 1])
    }

    /// Rebuild the basis rows from `b_i = b*_i + sum_{j<i} mu_{i,j} b*_j`,
    /// given the orthogonal vectors. Used to check the data against a basis.
    pub fn orthogonal_vectors(&self, basis: &Basis) -> Vec<Vec<BigRational>> {
        let n = self.dim();
        let mut stars: Vec<Vec<BigRational>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut v: Vec<BigRational> = basis.row(i).iter().cloned().map(BigRational::from_integer).collect();
            for (j, star) in stars.iter().enumerate() {
                for (vk, sk) in v.iter_mut().zip(star) {
                    *vk -= &self.mu[i][j] * sk;
                }
            }
            stars.push(v);
        }
        stars
    }
}

/// Exact Gram–Schmidt orthogonalisation of a full-rank basis.
pub fn gso(basis: &Basis) -> Result<GsoData, LatticeError> {
    Ok(IntegralGso::compute(basis)?.to_rational())
}
