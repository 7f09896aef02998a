//! Discrete probability mass functions on an integer grid.
//!
//! Delay PMFs live on a 1 ms integer grid. Error PMFs pick up half-integer
//! values from the /2 terms in the estimators, so they are stored on a 0.5 ms
//! grid (integer indices counting half-milliseconds).

use crate::math;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PmfError {
    /// Masses negative, non-finite, or not summing to one.
    Invalid,
    /// Requested truncation discards more tail mass than allowed.
    TruncationMass,
}

impl core::fmt::Display for PmfError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PmfError::Invalid => write!(f, "invalid probability mass function"),
            PmfError::TruncationMass => write!(f, "discarded tail mass exceeds tolerance"),
        }
    }
}

/// PMF over consecutive integer support `[offset, offset + mass.len())`.
#[derive(Clone, Debug)]
pub struct DiscretePmf {
    offset: i64,
    mass: Vec<f64>,
    /// Mass discarded when the support was truncated, before renormalizing.
    truncated_mass: f64,
}

impl DiscretePmf {
    pub fn from_parts(offset: i64, mass: Vec<f64>) -> Result<Self, PmfError> {
        if mass.is_empty() || mass.iter().any(|&m| !m.is_finite() || m < 0.0) {
            return Err(PmfError::Invalid);
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(PmfError::Invalid);
        }
        Ok(DiscretePmf {
            offset,
            mass,
            truncated_mass: 0.0,
        })
    }

    /// Point mass at an integer value.
    pub fn point(value: i64) -> Self {
        DiscretePmf {
            offset: value,
            mass: vec![1.0],
            truncated_mass: 0.0,
        }
    }

    /// Poisson PMF truncated where the cumulative tail drops below
    /// `tail_tol`, then renormalized. The discarded mass is recorded.
    pub fn poisson(mean: f64, tail_tol: f64) -> Result<Self, PmfError> {
        let valid = mean >= 0.0 && tail_tol > 0.0; // also rejects NaN
        if !valid {
            return Err(PmfError::Invalid);
        }
        if mean == 0.0 {
            return Ok(DiscretePmf::point(0));
        }
        let mut mass = Vec::new();
        let mut p = math::exp(-mean);
        let mut cum = p;
        let mut k = 0u64;
        mass.push(p);
        while 1.0 - cum > tail_tol {
            k += 1;
            p *= mean / k as f64;
            cum += p;
            mass.push(p);
            if k > 1_000_000 {
                return Err(PmfError::TruncationMass);
            }
        }
        let truncated = (1.0 - cum).max(0.0);
        let norm: f64 = mass.iter().sum();
        for m in &mut mass {
            *m /= norm;
        }
        Ok(DiscretePmf {
            offset: 0,
            mass,
            truncated_mass: truncated,
        })
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    /// Mass at integer value `v` (zero outside the stored support).
    pub fn mass_at(&self, v: i64) -> f64 {
        if v < self.offset {
            return 0.0;
        }
        let idx = (v - self.offset) as usize;
        self.mass.get(idx).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.mass
            .iter()
            .enumerate()
            .map(move |(i, &m)| (self.offset + i as i64, m))
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(v, m)| v as f64 * m).sum()
    }

    /// CDF at integer value `v`: P(X <= v).
    pub fn cdf_at(&self, v: i64) -> f64 {
        self.iter().filter(|&(x, _)| x <= v).map(|(_, m)| m).sum()
    }

    /// PMF of the difference X - Y for independent X (self) and Y (other).
    pub fn difference(&self, other: &DiscretePmf) -> DiscretePmf {
        let lo = self.offset - (other.offset + other.len() as i64 - 1);
        let hi = (self.offset + self.len() as i64 - 1) - other.offset;
        let mut mass = vec![0.0; (hi - lo + 1) as usize];
        for (x, mx) in self.iter() {
            if mx == 0.0 {
                continue;
            }
            for (y, my) in other.iter() {
                mass[(x - y - lo) as usize] += mx * my;
            }
        }
        DiscretePmf {
            offset: lo,
            mass,
            truncated_mass: self.truncated_mass + other.truncated_mass,
        }
    }
}

/// Distribution over a 0.5 ms grid: index `i` carries the value `i / 2` ms.
/// Used for protocol error distributions.
#[derive(Clone, Debug)]
pub struct HalfGridPmf {
    /// mass[i] is the probability of the error being exactly i * 0.5 ms.
    mass: Vec<f64>,
}

impl HalfGridPmf {
    pub fn from_mass(mass: Vec<f64>) -> Self {
        HalfGridPmf { mass }
    }

    pub fn zeros(len: usize) -> Self {
        HalfGridPmf { mass: vec![0.0; len] }
    }

    pub fn add_mass_half_units(&mut self, half_units: usize, m: f64) {
        if half_units >= self.mass.len() {
            self.mass.resize(half_units + 1, 0.0);
        }
        self.mass[half_units] += m;
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn normalize(&mut self) {
        let t = self.total();
        if t > 0.0 {
            for m in &mut self.mass {
                *m /= t;
            }
        }
    }

    /// P(error <= x ms).
    pub fn cdf(&self, x_ms: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &m) in self.mass.iter().enumerate() {
            if i as f64 * 0.5 <= x_ms + 1e-12 {
                acc += m;
            }
        }
        acc
    }

    pub fn iter_values(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.mass.iter().enumerate().map(|(i, &m)| (i as f64 * 0.5, m))
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn mass_slice(&self) -> &[f64] {
        &self.mass
    }

    /// Total-variation distance between two half-grid distributions.
    pub fn tv_distance(&self, other: &HalfGridPmf) -> f64 {
        let n = self.mass.len().max(other.mass.len());
        let mut acc = 0.0;
        for i in 0..n {
            let a = self.mass.get(i).copied().unwrap_or(0.0);
            let b = other.mass.get(i).copied().unwrap_or(0.0);
            acc += math::fabs(a - b);
        }
        0.5 * acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_pmf_mean_and_normalization() {
        for &mean in &[1.0, 30.0, 80.0] {
            let pmf = DiscretePmf::poisson(mean, 1e-9).unwrap();
            assert!((pmf.total() - 1.0).abs() < 1e-12);
            assert!((pmf.mean() - mean).abs() < 1e-6, "mean {mean}: {}", pmf.mean());
            assert!(pmf.truncated_mass() < 1e-9);
        }
    }

    #[test]
    fn difference_of_points_is_point() {
        let a = DiscretePmf::point(7);
        let b = DiscretePmf::point(3);
        let d = a.difference(&b);
        assert_eq!(d.mass_at(4), 1.0);
        assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn difference_mean_is_mean_difference() {
        let a = DiscretePmf::poisson(30.0, 1e-12).unwrap();
        let b = DiscretePmf::poisson(7.0, 1e-12).unwrap();
        let d = a.difference(&b);
        assert!((d.mean() - 23.0).abs() < 1e-6);
        assert!((d.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn from_parts_validation() {
        assert!(DiscretePmf::from_parts(0, vec![0.5, 0.5]).is_ok());
        assert!(DiscretePmf::from_parts(0, vec![0.5, 0.4]).is_err());
        assert!(DiscretePmf::from_parts(0, vec![-0.1, 1.1]).is_err());
        assert!(DiscretePmf::from_parts(0, vec![]).is_err());
    }

    #[test]
    fn half_grid_cdf_and_tv() {
        let mut p = HalfGridPmf::zeros(0);
        p.add_mass_half_units(0, 0.25); // 0.0 ms
        p.add_mass_half_units(1, 0.25); // 0.5 ms
        p.add_mass_half_units(4, 0.5); // 2.0 ms
        assert!((p.cdf(0.5) - 0.5).abs() < 1e-12);
        assert!((p.cdf(1.9) - 0.5).abs() < 1e-12);
        assert!((p.cdf(2.0) - 1.0).abs() < 1e-12);
        let q = HalfGridPmf::from_mass(vec![1.0]);
        assert!((p.tv_distance(&q) - 0.75).abs() < 1e-12);
        assert_eq!(p.tv_distance(&p), 0.0);
    }
}
