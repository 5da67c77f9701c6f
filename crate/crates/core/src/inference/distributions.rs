//! Samplers for the conjugate full conditionals: inverse-Wishart (Bartlett
//! decomposition), inverse-gamma and multivariate normal.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

fn numerical(msg: impl Into<String>) -> Error {
    Error::Numerical(msg.into())
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky_lower(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(numerical(format!("{what} has non-finite entries")));
    }
    nalgebra::Cholesky::new(m.clone())
        .map(|c| c.l())
        .ok_or_else(|| numerical(format!("{what} is not positive definite")))
}

/// Inverse of a symmetric positive-definite matrix, symmetrised.
pub fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let inv = nalgebra::Cholesky::new(m.clone())
        .ok_or_else(|| numerical(format!("{what} is not positive definite")))?
        .inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// Inverse-Wishart `IW(dof, scale)` with density proportional to
/// `|X|^{-(dof + d + 1)/2} exp(-tr(scale X^{-1}) / 2)`; mean `scale / (dof - d - 1)`.
#[derive(Debug, Clone)]
pub struct InverseWishart {
    dof: f64,
    scale: DMatrix<f64>,
    /// Lower Cholesky factor of `scale^{-1}`.
    inv_chol: DMatrix<f64>,
}

impl InverseWishart {
    pub fn new(dof: f64, scale: DMatrix<f64>) -> Result<Self> {
        let d = scale.nrows();
        if d == 0 || scale.ncols() != d {
            return Err(Error::InvalidInput("inverse-Wishart scale must be square and non-empty".into()));
        }
        if !(dof > d as f64 - 1.0) {
            return Err(Error::InvalidInput(format!("inverse-Wishart needs dof > {}, got {dof}", d - 1)));
        }
        let inv = spd_inverse(&scale, "inverse-Wishart scale")?;
        let inv_chol = cholesky_lower(&inv, "inverse-Wishart scale inverse")?;
        Ok(Self { dof, scale, inv_chol })
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn scale(&self) -> &DMatrix<f64> {
        &self.scale
    }

    pub fn dim(&self) -> usize {
        self.scale.nrows()
    }

    /// `scale / (dof - d - 1)`, when it exists.
    pub fn mean(&self) -> Option<DMatrix<f64>> {
        let denom = self.dof - self.dim() as f64 - 1.0;
        (denom > 0.0).then(|| &self.scale / denom)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        let d = self.dim();
        let mut a = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            let chi = ChiSquared::new(self.dof - i as f64).expect("positive dof");
            a[(i, i)] = chi.sample(rng).sqrt();
            for j in 0..i {
                a[(i, j)] = StandardNormal.sample(rng);
            }
        }
        // precision W = B B^T with B = L A lower triangular, so X = B^{-T} B^{-1}
        let b = &self.inv_chol * a;
        let b_inv =
            b.solve_lower_triangular(&DMatrix::identity(d, d)).expect("Bartlett factor has a positive diagonal");
        let x = b_inv.transpose() * b_inv;
        (&x + x.transpose()) * 0.5
    }
}

/// Inverse-gamma with shape `a` and scale `b`: density proportional to `x^{-a-1} exp(-b / x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseGamma {
    pub shape: f64,
    pub scale: f64,
}

impl InverseGamma {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
            return Err(numerical(format!("inverse-gamma needs positive finite parameters, got ({shape}, {scale})")));
        }
        Ok(Self { shape, scale })
    }

    pub fn mean(&self) -> Option<f64> {
        (self.shape > 1.0).then(|| self.scale / (self.shape - 1.0))
    }

    pub fn variance(&self) -> Option<f64> {
        (self.shape > 2.0).then(|| {
            let a = self.shape;
            self.scale * self.scale / ((a - 1.0) * (a - 1.0) * (a - 2.0))
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = Gamma::new(self.shape, 1.0 / self.scale).expect("validated parameters");
        1.0 / g.sample(rng)
    }
}

/// Gaussian `N(mean, cov)` sampled through the lower Cholesky factor of `cov`.
#[derive(Debug, Clone)]
pub struct MultivariateNormal {
    mean: DVector<f64>,
    chol: DMatrix<f64>,
}

impl MultivariateNormal {
    pub fn new(mean: DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::InvalidInput("covariance shape does not match mean".into()));
        }
        let chol = cholesky_lower(cov, "Gaussian covariance")?;
        Ok(Self { mean, chol })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_iterator(self.mean.len(), (0..self.mean.len()).map(|_| StandardNormal.sample(rng)));
        &self.mean + &self.chol * z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_dimensional_iw_is_inverse_gamma() {
        // IW(nu, s) in one dimension is IG(nu / 2, s / 2)
        let iw = InverseWishart::new(9.0, DMatrix::from_element(1, 1, 3.0)).unwrap();
        let ig = InverseGamma::new(4.5, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 40_000;
        let m_iw: f64 = (0..n).map(|_| iw.sample(&mut rng)[(0, 0)]).sum::<f64>() / n as f64;
        let m_ig: f64 = (0..n).map(|_| ig.sample(&mut rng)).sum::<f64>() / n as f64;
        let se = (ig.variance().unwrap() / n as f64).sqrt();
        assert!((m_iw - ig.mean().unwrap()).abs() < 4.0 * se);
        assert!((m_ig - ig.mean().unwrap()).abs() < 4.0 * se);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(InverseGamma::new(0.0, 1.0).is_err());
        assert!(InverseWishart::new(0.5, DMatrix::identity(2, 2)).is_err());
        let not_pd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(InverseWishart::new(5.0, not_pd.clone()).is_err());
        assert!(MultivariateNormal::new(DVector::zeros(2), &not_pd).is_err());
    }
}
