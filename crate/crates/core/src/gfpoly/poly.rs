use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::field::{FieldElement, FieldParams};
use crate::error::{Error, Result};
use crate::node::NodeId;

/// Symmetric bivariate polynomial `f(x, y) = sum a_ij x^i y^j` of degree `t`
/// in each variable, with `a_ij = a_ji`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BivariatePolynomial {
    field: FieldParams,
    coeffs: Vec<Vec<FieldElement>>,
}

impl BivariatePolynomial {
    /// Draws the upper triangle uniformly from the field and mirrors it.
    pub fn random_symmetric<R: Rng + ?Sized>(
        field: FieldParams,
        t: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if t < 1 {
            return Err(Error::InvalidDegree { got: t, min: 1 });
        }
        let mut coeffs = vec![vec![field.zero(); t + 1]; t + 1];
        for i in 0..=t {
            for j in i..=t {
                let a = field.random(rng);
                coeffs[i][j] = a;
                coeffs[j][i] = a;
            }
        }
        Ok(BivariatePolynomial { field, coeffs })
    }

    /// Builds a polynomial from an explicit coefficient matrix; rejects
    /// non-square, non-symmetric or unreduced input.
    pub fn from_coeffs(field: FieldParams, coeffs: Vec<Vec<u64>>) -> Result<Self> {
        let n = coeffs.len();
        if n == 0 || coeffs.iter().any(|row| row.len() != n) {
            return Err(Error::NotSymmetric);
        }
        for i in 0..n {
            for j in 0..n {
                if coeffs[i][j] >= field.modulus() || coeffs[i][j] != coeffs[j][i] {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        let coeffs = coeffs
            .into_iter()
            .map(|row| row.into_iter().map(|v| field.element(v)).collect())
            .collect();
        Ok(BivariatePolynomial { field, coeffs })
    }

    pub fn field(&self) -> FieldParams {
        self.field
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, i: usize, j: usize) -> FieldElement {
        self.coeffs[i][j]
    }

    pub fn coefficients(&self) -> &[Vec<FieldElement>] {
        &self.coeffs
    }

    /// Direct double sum; independent of the share path on purpose so it can
    /// serve as a test oracle.
    pub fn eval(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        let f = &self.field;
        let mut acc = f.zero();
        let mut xi = f.one();
        for row in &self.coeffs {
            let mut yj = f.one();
            for &a in row {
                acc = f.add(acc, f.mul(a, f.mul(xi, yj)));
                yj = f.mul(yj, y);
            }
            xi = f.mul(xi, x);
        }
        acc
    }

    pub fn eval_ids(&self, u: NodeId, v: NodeId) -> FieldElement {
        self.eval(self.field.element(u.get()), self.field.element(v.get()))
    }

    /// `f(owner, y)` as a coefficient vector in `y`: `c_j = sum_i a_ij owner^i`.
    pub fn share_for(&self, owner: NodeId) -> Result<PolynomialShare> {
        let f = &self.field;
        let x = f.element(owner.get());
        if x.is_zero() {
            return Err(Error::ZeroId(owner.get()));
        }
        let t = self.degree();
        let mut out = vec![f.zero(); t + 1];
        let mut xi = f.one();
        for row in &self.coeffs {
            for (c, &a) in out.iter_mut().zip(row) {
                *c = f.add(*c, f.mul(a, xi));
            }
            xi = f.mul(xi, x);
        }
        Ok(PolynomialShare { owner, field: self.field, coeffs: out })
    }
}

/// Univariate share `f(owner, y)` held by one node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolynomialShare {
    owner: NodeId,
    field: FieldParams,
    coeffs: Vec<FieldElement>,
}

impl PolynomialShare {
    pub fn new(owner: NodeId, field: FieldParams, coeffs: Vec<FieldElement>) -> Self {
        PolynomialShare { owner, field, coeffs }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn field(&self) -> FieldParams {
        self.field
    }

    pub fn coefficients(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Horner evaluation at the peer's field point.
    pub fn eval_at(&self, peer: NodeId) -> FieldElement {
        let f = &self.field;
        let y = f.element(peer.get());
        self.coeffs
            .iter()
            .rev()
            .fold(f.zero(), |acc, &c| f.add(f.mul(acc, y), c))
    }
}

/// Recovers the symmetric polynomial from at least `t + 1` shares.
///
/// Each coefficient column `c_j(x) = sum_i a_ij x^i` is interpolated
/// independently from the first `t + 1` shares; any further shares and the
/// symmetry `a_ij = a_ji` are then checked exactly. Fewer than `t + 1`
/// shares is reported as [`Error::Underdetermined`]: every candidate
/// polynomial is equally consistent with them.
pub fn lagrange_reconstruct(shares: &[PolynomialShare], t: usize) -> Result<BivariatePolynomial> {
    let need = t + 1;
    let mut seen = BTreeSet::new();
    for s in shares {
        if !seen.insert(s.field.element(s.owner.get())) {
            return Err(Error::DuplicateOwner(s.owner.get()));
        }
        if s.coeffs.len() != need {
            return Err(Error::ShareDegreeMismatch {
                owner: s.owner.get(),
                got: s.coeffs.len(),
                expected: need,
            });
        }
    }
    if shares.len() < need {
        return Err(Error::Underdetermined { have: shares.len(), need, degree: t });
    }
    let field = shares[0].field;
    if shares.iter().any(|s| s.field != field) {
        return Err(Error::InconsistentShares);
    }
    let f = &field;
    let basis_shares = &shares[..need];
    let xs: Vec<FieldElement> = basis_shares.iter().map(|s| f.element(s.owner.get())).collect();
    let basis = lagrange_basis(f, &xs);

    // coeffs[i][j]: coefficient of x^i in column j.
    let mut coeffs = vec![vec![f.zero(); need]; need];
    for (k, share) in basis_shares.iter().enumerate() {
        for (j, &yk) in share.coeffs.iter().enumerate() {
            if yk.is_zero() {
                continue;
            }
            for (i, &b) in basis[k].iter().enumerate() {
                coeffs[i][j] = f.add(coeffs[i][j], f.mul(yk, b));
            }
        }
    }
    for i in 0..need {
        for j in (i + 1)..need {
            if coeffs[i][j] != coeffs[j][i] {
                return Err(Error::InconsistentShares);
            }
        }
    }
    let poly = BivariatePolynomial { field, coeffs };
    for extra in &shares[need..] {
        if poly.share_for(extra.owner)?.coeffs != extra.coeffs {
            return Err(Error::InconsistentShares);
        }
    }
    Ok(poly)
}

/// Coefficient vectors (ascending powers) of the Lagrange basis
/// `L_k(x) = prod_{m != k} (x - x_m) / (x_k - x_m)`.
fn lagrange_basis(f: &FieldParams, xs: &[FieldElement]) -> Vec<Vec<FieldElement>> {
    let n = xs.len();
    // P(x) = prod (x - x_m), degree n.
    let mut master = vec![f.zero(); n + 1];
    master[0] = f.one();
    for (deg, &xm) in xs.iter().enumerate() {
        for d in (0..=deg + 1).rev() {
            let shifted = if d > 0 { master[d - 1] } else { f.zero() };
            master[d] = f.sub(shifted, f.mul(xm, master[d]));
        }
    }
    xs.iter()
        .enumerate()
        .map(|(k, &xk)| {
            // Synthetic division P(x) / (x - x_k).
            let mut quot = vec![f.zero(); n];
            let mut carry = f.zero();
            for d in (1..=n).rev() {
                carry = f.add(master[d], f.mul(carry, xk));
                quot[d - 1] = carry;
            }
            let denom = xs
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != k)
                .fold(f.one(), |acc, (_, &xm)| f.mul(acc, f.sub(xk, xm)));
            let scale = f.inv(denom).expect("distinct interpolation points");
            quot.into_iter().map(|c| f.mul(c, scale)).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfpoly::field::MERSENNE_61;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gf7() -> FieldParams {
        FieldParams::new(7).unwrap()
    }

    #[test]
    fn random_poly_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = BivariatePolynomial::random_symmetric(gf7(), 1, &mut rng).unwrap();
        assert_eq!(p.coeff(0, 1), p.coeff(1, 0));
        for u in 0..7 {
            for v in 0..7 {
                let (u, v) = (gf7().element(u), gf7().element(v));
                assert_eq!(p.eval(u, v), p.eval(v, u));
            }
        }
    }

    #[test]
    fn degree_zero_generation_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            BivariatePolynomial::random_symmetric(gf7(), 0, &mut rng),
            Err(Error::InvalidDegree { got: 0, min: 1 })
        );
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let f = FieldParams::default();
        let a = BivariatePolynomial::random_symmetric(f, 100, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = BivariatePolynomial::random_symmetric(f, 100, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let c = BivariatePolynomial::random_symmetric(f, 100, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn from_coeffs_rejects_asymmetric() {
        assert_eq!(
            BivariatePolynomial::from_coeffs(gf7(), vec![vec![0, 1], vec![2, 0]]),
            Err(Error::NotSymmetric)
        );
        assert_eq!(
            BivariatePolynomial::from_coeffs(gf7(), vec![vec![0, 9], vec![9, 0]]),
            Err(Error::NotSymmetric)
        );
    }

    #[test]
    fn share_of_x_plus_y() {
        // f(x, y) = x + y over GF(7); f(3, y) = 3 + y.
        let p = BivariatePolynomial::from_coeffs(gf7(), vec![vec![0, 1], vec![1, 0]]).unwrap();
        let s = p.share_for(NodeId(3)).unwrap();
        let vals: Vec<u64> = s.coefficients().iter().map(|c| c.value()).collect();
        assert_eq!(vals, vec![3, 1]);
        // (3 + 5) mod 7 = 1.
        assert_eq!(s.eval_at(NodeId(5)).value(), 1);
    }

    #[test]
    fn zero_polynomial_gives_zero_share() {
        let p = BivariatePolynomial::from_coeffs(gf7(), vec![vec![0, 0], vec![0, 0]]).unwrap();
        let s = p.share_for(NodeId(4)).unwrap();
        assert!(s.coefficients().iter().all(|c| c.is_zero()));
        assert!(s.eval_at(NodeId(6)).is_zero());
    }

    #[test]
    fn zero_id_rejected() {
        let p = BivariatePolynomial::from_coeffs(gf7(), vec![vec![1]]).unwrap();
        assert_eq!(p.share_for(NodeId(14)), Err(Error::ZeroId(14)));
    }

    #[test]
    fn reconstruct_exact_with_t_plus_one() {
        let f = FieldParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = BivariatePolynomial::random_symmetric(f, 2, &mut rng).unwrap();
        let shares: Vec<_> = [4u64, 17, 99].iter().map(|&id| p.share_for(NodeId(id)).unwrap()).collect();
        assert_eq!(lagrange_reconstruct(&shares, 2).unwrap(), p);
        assert_eq!(
            lagrange_reconstruct(&shares[..2], 2),
            Err(Error::Underdetermined { have: 2, need: 3, degree: 2 })
        );
    }

    #[test]
    fn reconstruct_constant() {
        let p = BivariatePolynomial::from_coeffs(gf7(), vec![vec![5]]).unwrap();
        let s = p.share_for(NodeId(2)).unwrap();
        assert_eq!(lagrange_reconstruct(&[s], 0).unwrap(), p);
    }

    #[test]
    fn reconstruct_rejects_duplicates_and_forgeries() {
        let f = FieldParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = BivariatePolynomial::random_symmetric(f, 2, &mut rng).unwrap();
        let mut shares: Vec<_> = (1..=4u64).map(|id| p.share_for(NodeId(id)).unwrap()).collect();
        let dup = vec![shares[0].clone(), shares[0].clone(), shares[1].clone()];
        assert_eq!(lagrange_reconstruct(&dup, 2), Err(Error::DuplicateOwner(1)));

        // Extra share that disagrees with the first t+1.
        shares[3].coeffs[0] = f.add(shares[3].coeffs[0], f.one());
        assert_eq!(lagrange_reconstruct(&shares, 2), Err(Error::InconsistentShares));

        // Arbitrary (non-symmetric-consistent) share vectors.
        let bogus: Vec<_> = (1..=3u64)
            .map(|id| PolynomialShare::new(NodeId(id), f, vec![f.element(id), f.element(7 * id), f.zero()]))
            .collect();
        assert_eq!(lagrange_reconstruct(&bogus, 2), Err(Error::InconsistentShares));
    }

    proptest! {
        #[test]
        fn share_consistency(seed in any::<u64>(), u in 1..MERSENNE_61, v in 0..MERSENNE_61, t in 1usize..8) {
            let f = FieldParams::default();
            let p = BivariatePolynomial::random_symmetric(f, t, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let (fu, fv) = (f.element(u), f.element(v));
            prop_assert_eq!(p.eval(fu, fv), p.eval(fv, fu));
            let s = p.share_for(NodeId(u)).unwrap();
            prop_assert_eq!(s.eval_at(NodeId(v)), p.eval(fu, fv));
            if v != 0 {
                let sv = p.share_for(NodeId(v)).unwrap();
                prop_assert_eq!(sv.eval_at(NodeId(u)), s.eval_at(NodeId(v)));
            }
        }

        #[test]
        fn reconstruction_threshold(seed in any::<u64>(), t in 1usize..12) {
            let f = FieldParams::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = BivariatePolynomial::random_symmetric(f, t, &mut rng).unwrap();
            let owners: BTreeSet<u64> = (0..t + 1).map(|_| rng.gen_range(1..MERSENNE_61)).collect();
            prop_assume!(owners.len() == t + 1);
            let shares: Vec<_> = owners.iter().map(|&o| p.share_for(NodeId(o)).unwrap()).collect();
            prop_assert_eq!(lagrange_reconstruct(&shares, t).unwrap(), p);
            let underdetermined = matches!(lagrange_reconstruct(&shares[..t], t), Err(Error::Underdetermined { .. }));
            prop_assert!(underdetermined);
        }
    }
}
