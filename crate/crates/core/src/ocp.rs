//! Open-circuit potential tables with piecewise-linear evaluation and inversion.

use std::path::Path;

use crate::error::{Error, Result};
use crate::real::Real;

/// Stoichiometry range every table has to cover.
pub const REQUIRED_DOMAIN: (f64, f64) = (0.05, 1.0);

/// Literature OCP fit for NMC811 sampled on a uniform grid.
pub const NMC811_CSV: &str = include_str!("../../../data/ocp/nmc811_chen2020.csv");
/// Literature OCP fit for NMC532 sampled on a uniform grid.
pub const NMC532_CSV: &str = include_str!("../../../data/ocp/nmc532_mohtat2020.csv");

/// Strictly monotone sampled curve `U(x)`, `x = c / c_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct OcpCurve<T> {
    x: Vec<T>,
    u: Vec<T>,
    decreasing: bool,
}

/// Result of an inversion `x = U^-1(target)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion<T> {
    pub x: T,
    /// `dx/dU` at the solution; zero when clamped.
    pub dx_du: T,
    pub clamped: bool,
}

impl<T: Real> OcpCurve<T> {
    pub fn from_pairs(mut pairs: Vec<(T, T)>) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(Error::Ocp("at least two samples are required".into()));
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let (x, u): (Vec<T>, Vec<T>) = pairs.into_iter().unzip();
        if x.iter().chain(&u).any(|v| !v.is_finite()) {
            return Err(Error::Ocp("non-finite sample".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Ocp("duplicate stoichiometry samples".into()));
        }
        let decreasing = u[1] < u[0];
        let monotone = u.windows(2).all(|w| if decreasing { w[1] < w[0] } else { w[1] > w[0] });
        if !monotone {
            return Err(Error::Ocp("potential must be strictly monotone in stoichiometry".into()));
        }
        let (lo, hi) = (x[0], *x.last().unwrap());
        if lo > T::lit(REQUIRED_DOMAIN.0) || hi < T::lit(REQUIRED_DOMAIN.1) {
            return Err(Error::Ocp(format!(
                "table covers [{lo}, {hi}] but must cover [{}, {}]",
                REQUIRED_DOMAIN.0, REQUIRED_DOMAIN.1
            )));
        }
        Ok(OcpCurve { x, u, decreasing })
    }

    /// Parses two-column CSV text (stoichiometry, volts); a header row is optional.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() < 2 {
                return Err(Error::Ocp(format!("line {}: expected two columns", lineno + 1)));
            }
            match (cols[0].parse::<f64>(), cols[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => pairs.push((T::lit(a), T::lit(b))),
                _ if pairs.is_empty() && lineno == 0 => continue,
                _ => return Err(Error::Ocp(format!("line {}: not a number pair", lineno + 1))),
            }
        }
        Self::from_pairs(pairs)
    }

    pub fn from_csv_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn nmc811() -> Self {
        Self::from_csv_str(NMC811_CSV).expect("bundled NMC811 table is valid")
    }

    pub fn nmc532() -> Self {
        Self::from_csv_str(NMC532_CSV).expect("bundled NMC532 table is valid")
    }

    /// `U(x) = U0 - slope * x`, for verification problems.
    pub fn linear(u0: T, slope: T) -> Self {
        let pairs = vec![(T::zero(), u0), (T::one(), u0 - slope)];
        Self::from_pairs(pairs).expect("linear table is valid")
    }

    pub fn domain(&self) -> (T, T) {
        (self.x[0], *self.x.last().unwrap())
    }

    fn segment_x(&self, x: T) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Potential at `x`; constant extension outside the table.
    pub fn eval(&self, x: T) -> T {
        let (lo, hi) = self.domain();
        if x <= lo {
            return self.u[0];
        }
        if x >= hi {
            return *self.u.last().unwrap();
        }
        let i = self.segment_x(x);
        let t = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.u[i] + t * (self.u[i + 1] - self.u[i])
    }

    /// `dU/dx`; zero outside the table.
    pub fn slope(&self, x: T) -> T {
        let (lo, hi) = self.domain();
        if x < lo || x > hi {
            return T::zero();
        }
        let i = self.segment_x(x);
        (self.u[i + 1] - self.u[i]) / (self.x[i + 1] - self.x[i])
    }

    /// Exact inverse of the interpolant, clamped to the table when out of range.
    pub fn inverse(&self, target: T) -> Inversion<T> {
        let n = self.u.len();
        let (first, last) = (self.u[0], self.u[n - 1]);
        let (umin, umax) = if self.decreasing { (last, first) } else { (first, last) };
        if target < umin || target > umax {
            let at_low_x = if self.decreasing { target > umax } else { target < umin };
            return Inversion {
                x: if at_low_x { self.x[0] } else { self.x[n - 1] },
                dx_du: T::zero(),
                clamped: true,
            };
        }
        // segment i with target between u[i] and u[i+1]
        let (mut lo, mut hi) = (0usize, n - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let before = if self.decreasing { self.u[mid] >= target } else { self.u[mid] <= target };
            if before {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let du = self.u[hi] - self.u[lo];
        let dx = self.x[hi] - self.x[lo];
        Inversion {
            x: self.x[lo] + (target - self.u[lo]) * dx / du,
            dx_du: dx / du,
            clamped: false,
        }
    }
}

impl<T: Real> OcpCurve<T> {
    /// Inverse with linear extension of the end segments beyond the table.
    pub fn inverse_extended(&self, target: T) -> Inversion<T> {
        let inv = self.inverse(target);
        if !inv.clamped {
            return inv;
        }
        let n = self.u.len();
        let i = if inv.x == self.x[0] { 0 } else { n - 2 };
        let dx_du = (self.x[i + 1] - self.x[i]) / (self.u[i + 1] - self.u[i]);
        Inversion {
            x: self.x[i] + (target - self.u[i]) * dx_du,
            dx_du,
            clamped: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bundled_tables_are_decreasing_and_cover_domain() {
        for c in [OcpCurve::<f64>::nmc811(), OcpCurve::nmc532()] {
            let (lo, hi) = c.domain();
            assert!(lo <= 0.05 && hi >= 1.0);
            assert!(c.eval(0.2) > c.eval(0.8));
        }
    }

    #[test]
    fn header_is_optional() {
        let a = OcpCurve::<f64>::from_csv_str("x,U\n0,4.0\n0.5,3.8\n1,3.5\n").unwrap();
        let b = OcpCurve::<f64>::from_csv_str("0,4.0\n0.5,3.8\n1,3.5\n").unwrap();
        assert_eq!(a, b);
        assert!((a.eval(0.25) - 3.9).abs() < 1e-12);
        assert!((a.slope(0.75) + 0.6).abs() < 1e-12);
    }

    #[test]
    fn non_monotone_or_narrow_rejected() {
        assert!(OcpCurve::<f64>::from_csv_str("0,4.0\n0.5,4.1\n1,3.5\n").is_err());
        assert!(OcpCurve::<f64>::from_csv_str("0.2,4.0\n1,3.5\n").is_err());
        assert!(OcpCurve::<f64>::from_csv_str("0,4.0\nfoo,3.5\n1,3.4\n").is_err());
    }

    #[test]
    fn out_of_range_target_clamps() {
        let c = OcpCurve::<f64>::linear(4.0, 1.0);
        let hi = c.inverse(5.0);
        assert!(hi.clamped && hi.x == 0.0 && hi.dx_du == 0.0);
        let lo = c.inverse(2.0);
        assert!(lo.clamped && lo.x == 1.0);
    }

    proptest! {
        #[test]
        fn inverse_is_exact_on_tables(x in 0.0f64..1.0) {
            for c in [OcpCurve::<f64>::nmc811(), OcpCurve::nmc532()] {
                let inv = c.inverse(c.eval(x));
                prop_assert!(!inv.clamped);
                prop_assert!((inv.x - x).abs() < 1e-9);
                if c.slope(x) != 0.0 {
                    prop_assert!((inv.dx_du * c.slope(inv.x) - 1.0).abs() < 1e-6);
                }
            }
        }
    }
}
