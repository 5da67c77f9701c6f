//! Stability parameterization of AR(p) coefficients.
//!
//! Unrestricted parameters `theta` are mapped to partial autocorrelations with
//! the Monahan map `r = theta / sqrt(1 + theta^2)`, and partial
//! autocorrelations to stable AR coefficients with the Durbin-Levinson
//! recursion
//!
//! ```text
//! phi_{1,1} = r_1
//! phi_{k,j} = phi_{k-1,j} - r_k phi_{k-1,k-j},   j = 1..k-1
//! phi_{k,k} = r_k
//! ```
//!
//! Coefficients follow the convention `x_t = sum_j phi_j x_{t-j} + e_t`.
//! The composite `theta -> phi` is a bijection from `R^p` onto the
//! stationarity region.

use std::ops::Deref;

use crate::error::{domain, Result};
use crate::scalar::Real;

macro_rules! vec_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name<T>(pub Vec<T>);

        impl<T> Deref for $name<T> {
            type Target = [T];
            fn deref(&self) -> &[T] {
                &self.0
            }
        }

        impl<T> $name<T> {
            pub fn into_inner(self) -> Vec<T> {
                self.0
            }
        }
    };
}

vec_newtype!(
    /// Unrestricted real parameters, one per lag.
    UnrestrictedParams
);
vec_newtype!(
    /// Partial autocorrelations in the open cube `(-1, 1)^p`.
    PartialAutocorrs
);
vec_newtype!(
    /// AR coefficients inside the stationarity region.
    StableArCoeffs
);

/// Largest magnitude a partial autocorrelation may take after the Monahan map.
///
/// For very large `|theta|` the map rounds to exactly one in floating point;
/// such values are pulled back to the nearest representable number below one.
#[inline]
fn r_bound<T: Real>() -> T {
    T::one() - T::epsilon()
}

#[inline]
pub fn monahan<T: Real>(theta: T) -> T {
    let r = theta / (T::one() + theta * theta).sqrt();
    r.max(-r_bound::<T>()).min(r_bound::<T>())
}

pub fn theta_to_r<T: Real>(theta: &[T]) -> PartialAutocorrs<T> {
    PartialAutocorrs(theta.iter().map(|&t| monahan(t)).collect())
}

pub fn r_to_theta<T: Real>(r: &[T]) -> Result<UnrestrictedParams<T>> {
    r.iter()
        .map(|&rk| {
            if rk.abs() >= T::one() || !rk.is_finite() {
                Err(domain(format!("partial autocorrelation {rk} outside (-1, 1)")))
            } else {
                Ok(rk / (T::one() - rk * rk).sqrt())
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(UnrestrictedParams)
}

/// In-place Durbin-Levinson step: on entry `buf` holds `r`, on exit `phi`.
///
/// No range check; callers guarantee `|r_k| < 1`.
pub fn r_to_phi_in_place<T: Real>(buf: &mut [T]) {
    let p = buf.len();
    for k in 2..=p {
        let rk = buf[k - 1];
        // pairs (j, k-j) with j < k-j, 1-based
        let mut j = 1;
        while 2 * j < k {
            let a = buf[j - 1];
            let b = buf[k - j - 1];
            buf[j - 1] = a - rk * b;
            buf[k - j - 1] = b - rk * a;
            j += 1;
        }
        if k % 2 == 0 {
            let c = k / 2;
            buf[c - 1] = buf[c - 1] * (T::one() - rk);
        }
    }
}

pub fn r_to_phi<T: Real>(r: &[T]) -> Result<StableArCoeffs<T>> {
    if let Some(bad) = r.iter().find(|v| !(v.abs() < T::one())) {
        return Err(domain(format!("partial autocorrelation {bad} outside (-1, 1)")));
    }
    let mut buf = r.to_vec();
    r_to_phi_in_place(&mut buf);
    Ok(StableArCoeffs(buf))
}

/// Inverse recursion. Fails when the coefficients are not stable.
pub fn phi_to_r<T: Real>(phi: &[T]) -> Result<PartialAutocorrs<T>> {
    let p = phi.len();
    let mut cur = phi.to_vec();
    let mut r = vec![T::zero(); p];
    for k in (1..=p).rev() {
        let rk = cur[k - 1];
        if !(rk.abs() < T::one()) {
            return Err(domain(format!(
                "AR coefficients {phi:?} are not stable (partial autocorrelation {rk} at lag {k})"
            )));
        }
        r[k - 1] = rk;
        let denom = T::one() - rk * rk;
        let prev: Vec<T> = (1..k).map(|j| (cur[j - 1] + rk * cur[k - j - 1]) / denom).collect();
        cur.truncate(k - 1);
        cur.copy_from_slice(&prev);
    }
    Ok(PartialAutocorrs(r))
}

/// Composite map `theta -> r -> phi`.
pub fn theta_to_phi<T: Real>(theta: &[T]) -> StableArCoeffs<T> {
    let mut buf: Vec<T> = theta.iter().map(|&t| monahan(t)).collect();
    r_to_phi_in_place(&mut buf);
    StableArCoeffs(buf)
}

/// Allocation-free composite map used in hot loops.
#[inline]
pub fn theta_to_phi_into<T: Real>(theta: &[T], out: &mut [T]) {
    for (o, &t) in out.iter_mut().zip(theta) {
        *o = monahan(t);
    }
    r_to_phi_in_place(out);
}

pub fn phi_to_theta<T: Real>(phi: &[T]) -> Result<UnrestrictedParams<T>> {
    r_to_theta(&phi_to_r(phi)?)
}

/// Stability test through the partial autocorrelations (Schur-Cohn).
pub fn is_stable<T: Real>(phi: &[T]) -> bool {
    phi.iter().all(|v| v.is_finite()) && phi_to_r(phi).is_ok()
}
