//! Bump pairs (Γ, ϝ) driving the velocity and density perturbations, with
//! their normalization and tail certificates.

use crate::error::ProfileError;
use crate::quad;
use std::f64::consts::PI;
use std::sync::Arc;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A pair of smooth bumps on the real line. `gamma_fn` perturbs the velocity,
/// `digamma_fn` the inverse density; the certificates record the two
/// normalization integrals ∫ Γ'(y)/y dy and ∫ ϝ'(y)/y dy.
#[derive(Clone)]
pub struct BumpPair {
    pub gamma_fn: ScalarFn,
    pub gamma_d1: ScalarFn,
    pub gamma_d2: ScalarFn,
    pub digamma_fn: ScalarFn,
    pub digamma_d1: ScalarFn,
    pub digamma_d2: ScalarFn,
    pub gamma_certificate: f64,
    pub digamma_certificate: f64,
}

impl std::fmt::Debug for BumpPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BumpPair")
            .field("gamma_certificate", &self.gamma_certificate)
            .field("digamma_certificate", &self.digamma_certificate)
            .finish()
    }
}

const CERT_TOL: f64 = 1e-10;

/// Gaussian-based bumps: Γ(x) = e^{-x²}/(2√π), ϝ = -Γ. Both normalization
/// certificates hold in closed form, and the tails decay far faster than the
/// required C/|x|.
pub fn default_bumps() -> BumpPair {
    let s = 1.0 / (2.0 * PI.sqrt());
    let gamma_fn: ScalarFn = Arc::new(move |x: f64| s * (-x * x).exp());
    let gamma_d1: ScalarFn = Arc::new(move |x: f64| -2.0 * s * x * (-x * x).exp());
    let gamma_d2: ScalarFn = Arc::new(move |x: f64| s * (4.0 * x * x - 2.0) * (-x * x).exp());
    let digamma_fn: ScalarFn = Arc::new(move |x: f64| -s * (-x * x).exp());
    let digamma_d1: ScalarFn = Arc::new(move |x: f64| 2.0 * s * x * (-x * x).exp());
    let digamma_d2: ScalarFn = Arc::new(move |x: f64| -s * (4.0 * x * x - 2.0) * (-x * x).exp());
    let pair = BumpPair {
        gamma_fn,
        gamma_d1,
        gamma_d2,
        digamma_fn,
        digamma_d1,
        digamma_d2,
        gamma_certificate: -1.0,
        digamma_certificate: 1.0,
    };
    debug_assert!(pair.verify_certificates().is_ok());
    pair
}

impl BumpPair {
    /// Build from user-supplied bumps, verifying the normalization
    /// certificates by adaptive quadrature.
    pub fn custom(
        gamma_fn: ScalarFn,
        gamma_d1: ScalarFn,
        gamma_d2: ScalarFn,
        digamma_fn: ScalarFn,
        digamma_d1: ScalarFn,
        digamma_d2: ScalarFn,
    ) -> Result<BumpPair, ProfileError> {
        let pair = BumpPair {
            gamma_fn,
            gamma_d1,
            gamma_d2,
            digamma_fn,
            digamma_d1,
            digamma_d2,
            gamma_certificate: -1.0,
            digamma_certificate: 1.0,
        };
        pair.verify_certificates()?;
        Ok(pair)
    }

    /// Check ∫ Γ'(y)/y dy = -1 and ∫ ϝ'(y)/y dy = +1 to the module tolerance.
    pub fn verify_certificates(&self) -> Result<(), ProfileError> {
        let ig = self.certificate_integral(true);
        let id = self.certificate_integral(false);
        if (ig - self.gamma_certificate).abs() > CERT_TOL {
            return Err(ProfileError::BumpCertificate(format!(
                "gamma integral {ig} differs from {} by more than {CERT_TOL}",
                self.gamma_certificate
            )));
        }
        if (id - self.digamma_certificate).abs() > CERT_TOL {
            return Err(ProfileError::BumpCertificate(format!(
                "digamma integral {id} differs from {} by more than {CERT_TOL}",
                self.digamma_certificate
            )));
        }
        Ok(())
    }

    fn certificate_integral(&self, gamma: bool) -> f64 {
        let d1 = if gamma {
            self.gamma_d1.clone()
        } else {
            self.digamma_d1.clone()
        };
        let d2 = if gamma {
            self.gamma_d2.clone()
        } else {
            self.digamma_d2.clone()
        };
        quad::integrate_line(
            move |y| {
                if y.abs() < 1e-8 {
                    d2(0.0)
                } else {
                    d1(y) / y
                }
            },
            1e-13,
        )
    }

    /// Symmetric tail integral |∫_{|x|}^∞ Γ'/y + ∫_{-∞}^{-|x|} Γ'/y| (and the
    /// ϝ analogue); the admissibility condition requires it be ≤ C/|x|.
    pub fn tail_integral(&self, x: f64, gamma: bool) -> f64 {
        let d1 = if gamma { &self.gamma_d1 } else { &self.digamma_d1 };
        let cutoff = x.abs().max(1e-3);
        let upper = quad::integrate(|y| d1(y) / y, cutoff, cutoff + 60.0, 1e-14);
        let lower = quad::integrate(|y| d1(y) / y, -cutoff - 60.0, -cutoff, 1e-14);
        (upper + lower).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_certificates_hold() {
        let b = default_bumps();
        assert!((b.certificate_integral(true) + 1.0).abs() < 1e-11);
        assert!((b.certificate_integral(false) - 1.0).abs() < 1e-11);
        b.verify_certificates().unwrap();
    }

    #[test]
    fn tails_decay_within_admissibility() {
        let b = default_bumps();
        for &x in &[1.0, 2.0, 5.0, 10.0] {
            let tg = b.tail_integral(x, true);
            let td = b.tail_integral(x, false);
            assert!(tg <= 1.0 / x, "gamma tail {tg} at {x}");
            assert!(td <= 1.0 / x, "digamma tail {td} at {x}");
        }
        // Gaussian tails are far below the generic 1/x envelope already at 5
        assert!(b.tail_integral(5.0, true) <= 1e-10);
    }

    #[test]
    fn custom_bump_certificate_rejects_bad_normalization() {
        let s = 1.0 / PI.sqrt(); // doubled amplitude: integral becomes -2
        let g: ScalarFn = Arc::new(move |x: f64| s * (-x * x).exp());
        let g1: ScalarFn = Arc::new(move |x: f64| -2.0 * s * x * (-x * x).exp());
        let g2: ScalarFn = Arc::new(move |x: f64| s * (4.0 * x * x - 2.0) * (-x * x).exp());
        let b = default_bumps();
        let err = BumpPair::custom(
            g,
            g1,
            g2,
            b.digamma_fn.clone(),
            b.digamma_d1.clone(),
            b.digamma_d2.clone(),
        );
        assert!(err.is_err());
    }
}
