//! Kernels `R`, `R̄ = ∫_r^∞ R` and their scaled forms
//! `R_t(x, y) = C_t R(|x - y|² / 4t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist2, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `R = R̄ = e^{-r}`, truncated at `r = 12`.
    Gaussian,
    /// `R = (1-r)²`, `R̄ = (1-r)³/3` on `r ≤ 1`.
    CompactPoly,
}

impl KernelFamily {
    pub fn default_cutoff(self) -> f64 {
        match self {
            KernelFamily::Gaussian => 12.0,
            KernelFamily::CompactPoly => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::CompactPoly => "compact_poly",
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelFamily::Gaussian),
            "compact" | "compact_poly" => Ok(KernelFamily::CompactPoly),
            other => Err(Error::Config(format!(
                "unknown kernel `{other}` (expected gaussian or compact)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub t: f64,
    pub c_t: f64,
    /// Truncation point in units of `r = |x - y|² / 4t`.
    pub cutoff_r: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, t: f64) -> Result<Self> {
        let spec = Self {
            family,
            t,
            c_t: 1.0,
            cutoff_r: family.default_cutoff(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(t: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, t)
    }

    pub fn compact(t: f64) -> Result<Self> {
        Self::new(KernelFamily::CompactPoly, t)
    }

    pub fn with_normalizer(mut self, c_t: f64) -> Result<Self> {
        self.c_t = c_t;
        self.validate()?;
        Ok(self)
    }

    /// Uses the heat-kernel normalizer `(4πt)^{-k/2}` for a `k`-manifold.
    pub fn heat_normalized(self, k: usize) -> Result<Self> {
        let c = (4.0 * std::f64::consts::PI * self.t).powf(-(k as f64) / 2.0);
        self.with_normalizer(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::Config(format!(
                "kernel bandwidth t must be positive (got {})",
                self.t
            )));
        }
        if !(self.c_t > 0.0 && self.c_t.is_finite()) {
            return Err(Error::Config(format!(
                "kernel normalizer must be positive (got {})",
                self.c_t
            )));
        }
        if !(self.cutoff_r > 0.0 && self.cutoff_r.is_finite()) {
            return Err(Error::Config(format!(
                "kernel cutoff must be positive (got {})",
                self.cutoff_r
            )));
        }
        if self.family == KernelFamily::CompactPoly && self.cutoff_r > 1.0 {
            return Err(Error::Config("compact kernel cutoff cannot exceed 1".into()));
        }
        Ok(())
    }

    /// Distance beyond which both kernels vanish: `2 sqrt(t · cutoff)`.
    pub fn support_radius(&self) -> f64 {
        2.0 * (self.t * self.cutoff_r).sqrt()
    }

    /// Unscaled `R(r)`, zero at and beyond the cutoff.
    pub fn profile(&self, r: f64) -> f64 {
        if r >= self.cutoff_r {
            return 0.0;
        }
        match self.family {
            KernelFamily::Gaussian => (-r).exp(),
            KernelFamily::CompactPoly => (1.0 - r) * (1.0 - r),
        }
    }

    /// Unscaled `R̄(r)`, zero at and beyond the cutoff.
    pub fn profile_bar(&self, r: f64) -> f64 {
        if r >= self.cutoff_r {
            return 0.0;
        }
        match self.family {
            KernelFamily::Gaussian => (-r).exp(),
            KernelFamily::CompactPoly => (1.0 - r).powi(3) / 3.0,
        }
    }

    pub fn scaled_arg(&self, d2: f64) -> f64 {
        d2 / (4.0 * self.t)
    }

    pub fn eval_r(&self, x: &Point, y: &Point) -> f64 {
        self.c_t * self.profile(self.scaled_arg(dist2(x, y)))
    }

    pub fn eval_rbar(&self, x: &Point, y: &Point) -> f64 {
        self.c_t * self.profile_bar(self.scaled_arg(dist2(x, y)))
    }
}

/// Which problem a bandwidth default is chosen for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Neumann,
    Dirichlet,
}

/// Default `√t / δ`: 0.5 for planar Neumann, 0.375 for volumetric Neumann,
/// 0.75 for Dirichlet.
pub fn default_t_factor(k: usize, kind: BoundaryKind) -> f64 {
    match (kind, k) {
        (BoundaryKind::Dirichlet, _) => 0.75,
        (BoundaryKind::Neumann, k) if k >= 3 => 0.375,
        (BoundaryKind::Neumann, _) => 0.5,
    }
}

/// `t = (factor · δ)²`.
pub fn select_bandwidth(delta: f64, factor: f64) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) || !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::Config(format!(
            "bandwidth needs positive δ and factor (got δ = {delta}, factor = {factor})"
        )));
    }
    Ok((factor * delta).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at_r(spec: &KernelSpec, r: f64) -> (Point, Point) {
        ([0.0; 3], [(4.0 * spec.t * r).sqrt(), 0.0, 0.0])
    }

    #[test]
    fn gaussian_at_zero_is_normalizer() {
        let k = KernelSpec::gaussian(0.3).unwrap().with_normalizer(2.5).unwrap();
        let p = [0.1, 0.2, 0.3];
        assert_eq!(k.eval_r(&p, &p), 2.5);
        assert_eq!(k.eval_rbar(&p, &p), 2.5);
    }

    #[test]
    fn compact_closed_forms_at_half() {
        let k = KernelSpec::compact(0.01).unwrap();
        assert!((k.profile(0.5) - 0.25).abs() < 1e-15);
        assert!((k.profile_bar(0.5) - 1.0 / 24.0).abs() < 1e-15);
        let (x, y) = at_r(&k, 0.5);
        assert!((k.eval_r(&x, &y) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn gaussian_truncated_at_cutoff() {
        let k = KernelSpec::gaussian(0.02).unwrap();
        assert_eq!(k.profile(12.0), 0.0);
        assert_eq!(k.profile_bar(12.5), 0.0);
        assert!(k.profile(11.999) > 0.0);
        // Dropped mass per entry is bounded by e^{-12}.
        assert!((-12.0f64).exp() < 6.2e-6);
        let (x, y) = at_r(&k, 12.5);
        assert_eq!(k.eval_r(&x, &y), 0.0);
    }

    #[test]
    fn nonpositive_t_rejected() {
        assert!(matches!(KernelSpec::gaussian(0.0), Err(Error::Config(_))));
        assert!(matches!(KernelSpec::compact(-1.0), Err(Error::Config(_))));
        assert!(KernelSpec::gaussian(f64::NAN).is_err());
    }

    #[test]
    fn bandwidth_arithmetic() {
        assert!((select_bandwidth(0.1, 0.75).unwrap() - 0.005625).abs() < 1e-17);
        assert!(select_bandwidth(0.0, 0.5).is_err());
        assert_eq!(default_t_factor(2, BoundaryKind::Neumann), 0.5);
        assert_eq!(default_t_factor(3, BoundaryKind::Neumann), 0.375);
        assert_eq!(default_t_factor(3, BoundaryKind::Dirichlet), 0.75);
    }

    #[test]
    fn support_radius_matches_cutoff() {
        let k = KernelSpec::gaussian(0.01).unwrap();
        assert!((k.support_radius() - 2.0 * 0.12f64.sqrt()).abs() < 1e-15);
        assert_eq!(KernelSpec::compact(0.25).unwrap().support_radius(), 1.0);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(100))]
        #[test]
        fn rbar_is_antiderivative_of_r(u in 0.0f64..1.0, compact in proptest::bool::ANY) {
            let family = if compact { KernelFamily::CompactPoly } else { KernelFamily::Gaussian };
            let k = KernelSpec::new(family, 1.0).unwrap();
            // Stay away from the compact kernel's endpoints.
            let span = k.cutoff_r.min(10.0);
            let r = span * (0.02 + 0.9 * u);
            let h = 1e-5;
            let d = (k.profile_bar(r + h) - k.profile_bar(r - h)) / (2.0 * h);
            let rel = (-d - k.profile(r)).abs() / k.profile(r);
            proptest::prop_assert!(rel < 1e-6, "{:?} r = {}: {}", family, r, rel);
        }
    }

    #[test]
    fn profiles_nonnegative_nonincreasing() {
        for family in [KernelFamily::Gaussian, KernelFamily::CompactPoly] {
            let k = KernelSpec::new(family, 1.0).unwrap();
            let mut prev = (f64::INFINITY, f64::INFINITY);
            for i in 0..=1000 {
                let r = k.cutoff_r * i as f64 / 1000.0;
                let cur = (k.profile(r), k.profile_bar(r));
                assert!(cur.0 >= 0.0 && cur.1 >= 0.0);
                assert!(cur.0 <= prev.0 && cur.1 <= prev.1);
                prev = cur;
            }
        }
    }

    #[test]
    fn heat_normalizer() {
        let k = KernelSpec::gaussian(0.01).unwrap().heat_normalized(2).unwrap();
        assert!((k.c_t - 1.0 / (4.0 * std::f64::consts::PI * 0.01)).abs() < 1e-12);
    }
}
