//! Monic polynomials in coefficient form and root form, their evaluation,
//! and the Newton map.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{ComplexParts, Error, Result};

/// A point of the complex plane.
pub type ComplexPoint = Complex64;

/// Largest degree for which coefficients are expanded from roots.
pub const MAX_EXPANSION_DEGREE: usize = 64;

/// Per-coefficient relative tolerance when both forms are supplied.
pub const FORM_TOLERANCE: f64 = 1e-8;

// Rounding slack on the closed unit disk test, so that sampled roots whose
// modulus rounds to 1 + ulp are still accepted.
const DISK_SLACK: f64 = 4.0 * f64::EPSILON;

#[inline]
pub(crate) fn is_finite(z: ComplexPoint) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn parts(z: ComplexPoint) -> ComplexParts {
    ComplexParts(z.re, z.im)
}

/// `1 / w`, falling back to Smith's scaling when `|w|^2` leaves the normal
/// range.
#[inline]
pub fn recip(w: ComplexPoint) -> ComplexPoint {
    let n2 = w.re * w.re + w.im * w.im;
    if n2.is_normal() {
        return Complex64::new(w.re / n2, -w.im / n2);
    }
    if w.re.abs() >= w.im.abs() {
        let ratio = w.im / w.re;
        let den = w.re + w.im * ratio;
        Complex64::new(1.0 / den, -ratio / den)
    } else {
        let ratio = w.re / w.im;
        let den = w.re * ratio + w.im;
        Complex64::new(ratio / den, -1.0 / den)
    }
}

/// Coefficients of `prod (z - alpha_j)`, constant term first, leading 1.
pub fn expand_roots(roots: &[ComplexPoint]) -> Vec<ComplexPoint> {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); roots.len() + 1];
    coeffs[0] = Complex64::new(1.0, 0.0);
    for (m, &alpha) in roots.iter().enumerate() {
        // multiply the degree-m polynomial in coeffs[..=m] by (z - alpha)
        for i in (1..=m + 1).rev() {
            coeffs[i] = coeffs[i - 1] - alpha * coeffs[i];
        }
        coeffs[0] = -alpha * coeffs[0];
    }
    coeffs
}

/// Simultaneous Horner evaluation of `p` and `p'`.
pub fn horner(coeffs: &[ComplexPoint], z: ComplexPoint) -> (ComplexPoint, ComplexPoint) {
    let d = coeffs.len() - 1;
    let mut p = coeffs[d];
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs[..d].iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// A complex number stored as `mantissa * 2^exponent`, with the larger
/// mantissa component in `[0.5, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledComplex {
    pub mantissa: ComplexPoint,
    pub exponent: i32,
}

impl ScaledComplex {
    pub const ONE: ScaledComplex = ScaledComplex {
        mantissa: Complex64::new(1.0, 0.0),
        exponent: 0,
    };

    fn normalize(mut self) -> Self {
        let big = self.mantissa.re.abs().max(self.mantissa.im.abs());
        if big == 0.0 || !big.is_finite() {
            return self;
        }
        let (_, e) = libm::frexp(big);
        self.mantissa = Complex64::new(
            libm::ldexp(self.mantissa.re, -e),
            libm::ldexp(self.mantissa.im, -e),
        );
        self.exponent += e;
        self
    }

    pub fn mul(self, w: ComplexPoint) -> Self {
        ScaledComplex {
            mantissa: self.mantissa * w,
            exponent: self.exponent,
        }
        .normalize()
    }

    /// Natural log of the modulus; finite even when the value itself would
    /// overflow an `f64`.
    pub fn ln_abs(&self) -> f64 {
        libm::log(self.mantissa.norm()) + self.exponent as f64 * core::f64::consts::LN_2
    }

    /// The plain value; components are infinite when out of range.
    pub fn to_complex(&self) -> ComplexPoint {
        Complex64::new(
            libm::ldexp(self.mantissa.re, self.exponent),
            libm::ldexp(self.mantissa.im, self.exponent),
        )
    }
}

/// `prod_{j != skip} (z - alpha_j)` with exponent tracking.
pub fn scaled_product(
    roots: &[ComplexPoint],
    z: ComplexPoint,
    skip: Option<usize>,
) -> ScaledComplex {
    roots
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != skip)
        .fold(ScaledComplex::ONE, |acc, (_, &a)| acc.mul(z - a))
}

/// Root-form `(p(z), p'(z))`.
pub fn evaluate_roots(roots: &[ComplexPoint], z: ComplexPoint) -> Result<(ComplexPoint, ComplexPoint)> {
    let zero = Complex64::new(0.0, 0.0);
    let mut hits = roots.iter().enumerate().filter(|(_, &a)| z - a == zero);
    let first_hit = hits.next().map(|(j, _)| j);
    let second_hit = hits.next();
    let (p, dp) = match (first_hit, second_hit) {
        (None, _) => {
            let prod = scaled_product(roots, z, None);
            let sum = roots.iter().fold(zero, |s, &a| s + recip(z - a));
            (prod.to_complex(), prod.mul(sum).to_complex())
        }
        (Some(j), None) => (zero, scaled_product(roots, z, Some(j)).to_complex()),
        (Some(_), Some(_)) => (zero, zero),
    };
    if is_finite(p) && is_finite(dp) {
        Ok((p, dp))
    } else {
        Err(Error::EvaluationOverflow)
    }
}

/// Newton step `z - 1 / sum 1/(z - alpha_j)`; a root maps to itself.
pub fn newton_step_roots(roots: &[ComplexPoint], z: ComplexPoint) -> Result<ComplexPoint> {
    let zero = Complex64::new(0.0, 0.0);
    let mut sum = zero;
    for &a in roots {
        let w = z - a;
        if w == zero {
            return Ok(z);
        }
        sum += recip(w);
    }
    if sum == zero {
        return Err(Error::CriticalPoint);
    }
    Ok(z - recip(sum))
}

/// Newton step `z - p(z)/p'(z)` from Horner evaluation.
pub fn newton_step_coeffs(coeffs: &[ComplexPoint], z: ComplexPoint) -> Result<ComplexPoint> {
    let (p, dp) = horner(coeffs, z);
    if !is_finite(p) || !is_finite(dp) {
        return Err(Error::EvaluationOverflow);
    }
    if p == Complex64::new(0.0, 0.0) {
        return Ok(z);
    }
    if dp == Complex64::new(0.0, 0.0) {
        return Err(Error::CriticalPoint);
    }
    Ok(z - p * recip(dp))
}

/// A monic polynomial of degree `d >= 1`, held as roots, coefficients, or
/// both. When both are present the roots are authoritative.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    degree: usize,
    coeffs: Option<Vec<ComplexPoint>>,
    roots: Option<Vec<ComplexPoint>>,
}

fn check_roots(roots: &[ComplexPoint]) -> Result<()> {
    if roots.is_empty() {
        return Err(Error::InvalidDegree { degree: 0, min: 1 });
    }
    for (index, &a) in roots.iter().enumerate() {
        if !is_finite(a) {
            return Err(Error::NonFinite { field: "roots", index });
        }
        let modulus = a.norm();
        if modulus > 1.0 + DISK_SLACK {
            return Err(Error::RootOutsideDisk { index, modulus });
        }
    }
    Ok(())
}

fn check_coeffs(coeffs: &[ComplexPoint]) -> Result<()> {
    if coeffs.len() < 2 {
        return Err(Error::InvalidDegree {
            degree: coeffs.len().saturating_sub(1),
            min: 1,
        });
    }
    for (index, &c) in coeffs.iter().enumerate() {
        if !is_finite(c) {
            return Err(Error::NonFinite { field: "coeffs", index });
        }
    }
    let leading = coeffs[coeffs.len() - 1];
    if leading != Complex64::new(1.0, 0.0) {
        return Err(Error::NotMonic { leading: parts(leading) });
    }
    Ok(())
}

impl Polynomial {
    pub fn from_roots(roots: Vec<ComplexPoint>) -> Result<Self> {
        check_roots(&roots)?;
        Ok(Polynomial {
            degree: roots.len(),
            coeffs: None,
            roots: Some(roots),
        })
    }

    pub fn from_coeffs(coeffs: Vec<ComplexPoint>) -> Result<Self> {
        check_coeffs(&coeffs)?;
        Ok(Polynomial {
            degree: coeffs.len() - 1,
            coeffs: Some(coeffs),
            roots: None,
        })
    }

    /// Both representations; each coefficient must match the root expansion
    /// to `FORM_TOLERANCE * max(1, |expanded|)`.
    pub fn from_parts(coeffs: Vec<ComplexPoint>, roots: Vec<ComplexPoint>) -> Result<Self> {
        check_roots(&roots)?;
        check_coeffs(&coeffs)?;
        if coeffs.len() != roots.len() + 1 {
            return Err(Error::CoefficientCount {
                expected: roots.len() + 1,
                found: coeffs.len(),
            });
        }
        let expanded = expand_roots(&roots);
        for (index, (&c, &e)) in coeffs.iter().zip(&expanded).enumerate() {
            if (c - e).norm() > FORM_TOLERANCE * e.norm().max(1.0) {
                return Err(Error::InconsistentForms {
                    index,
                    expected: parts(e),
                    found: parts(c),
                });
            }
        }
        Ok(Polynomial {
            degree: roots.len(),
            coeffs: Some(coeffs),
            roots: Some(roots),
        })
    }

    /// Adds the coefficient expansion of the roots (degree at most
    /// [`MAX_EXPANSION_DEGREE`]).
    pub fn with_expanded_coeffs(mut self) -> Result<Self> {
        if self.degree > MAX_EXPANSION_DEGREE {
            return Err(Error::ExpansionTooLarge {
                degree: self.degree,
                max: MAX_EXPANSION_DEGREE,
            });
        }
        if let Some(roots) = &self.roots {
            self.coeffs = Some(expand_roots(roots));
        }
        Ok(self)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn roots(&self) -> Option<&[ComplexPoint]> {
        self.roots.as_deref()
    }

    pub fn coeffs(&self) -> Option<&[ComplexPoint]> {
        self.coeffs.as_deref()
    }

    /// `sum alpha_j`, read off the subleading coefficient when no roots are
    /// stored.
    pub fn root_sum(&self) -> ComplexPoint {
        match (&self.roots, &self.coeffs) {
            (Some(r), _) => r.iter().sum(),
            (None, Some(c)) => -c[self.degree - 1],
            (None, None) => unreachable!("constructors require one representation"),
        }
    }

    pub fn evaluate(&self, z: ComplexPoint) -> Result<(ComplexPoint, ComplexPoint)> {
        if !is_finite(z) {
            return Err(Error::NonFinite { field: "z", index: 0 });
        }
        match (&self.roots, &self.coeffs) {
            (Some(r), _) => evaluate_roots(r, z),
            (None, Some(c)) => {
                let (p, dp) = horner(c, z);
                if is_finite(p) && is_finite(dp) {
                    Ok((p, dp))
                } else {
                    Err(Error::EvaluationOverflow)
                }
            }
            (None, None) => Err(Error::MissingRepresentation),
        }
    }

    /// `N_p(z) = z - p(z)/p'(z)`.
    pub fn newton_step(&self, z: ComplexPoint) -> Result<ComplexPoint> {
        match (&self.roots, &self.coeffs) {
            (Some(r), _) => newton_step_roots(r, z),
            (None, Some(c)) => newton_step_coeffs(c, z),
            (None, None) => Err(Error::MissingRepresentation),
        }
    }

    /// The affine map `z -> c + ((d-1)/d) (z - c)` about the root centroid
    /// `c`, which the Newton map approaches for large `|z|`.
    pub fn farfield_linearization(&self, z: ComplexPoint) -> ComplexPoint {
        let d = self.degree as f64;
        z * ((d - 1.0) / d) + self.root_sum() / (d * d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> ComplexPoint {
        Complex64::new(re, im)
    }

    fn quarter() -> Polynomial {
        Polynomial::from_coeffs(vec![c(-0.25, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let (p, dp) = quarter().evaluate(c(1.0, 0.0)).unwrap();
        assert_eq!((p, dp), (c(0.75, 0.0), c(2.0, 0.0)));
        let (p, dp) = quarter().evaluate(c(0.5, 0.0)).unwrap();
        assert_eq!((p, dp), (c(0.0, 0.0), c(1.0, 0.0)));

        let mono = Polynomial::from_roots(vec![c(0.0, 0.0); 4]).unwrap();
        let (p, dp) = mono.evaluate(c(1.0, 0.0)).unwrap();
        assert_eq!((p, dp), (c(1.0, 0.0), c(4.0, 0.0)));
    }

    #[test]
    fn root_form_evaluation_at_a_root() {
        let p = Polynomial::from_roots(vec![c(0.5, 0.0), c(-0.5, 0.0)]).unwrap();
        let (v, dv) = p.evaluate(c(0.5, 0.0)).unwrap();
        assert_eq!((v, dv), (c(0.0, 0.0), c(1.0, 0.0)));
        let double = Polynomial::from_roots(vec![c(0.5, 0.0), c(0.5, 0.0)]).unwrap();
        assert_eq!(double.evaluate(c(0.5, 0.0)).unwrap().1, c(0.0, 0.0));
    }

    #[test]
    fn coefficient_overflow_is_reported() {
        let roots = vec![c(0.0, 0.0); 2000];
        let coeffs = expand_roots(&roots);
        let p = Polynomial::from_coeffs(coeffs).unwrap();
        assert_eq!(p.evaluate(c(3.0, 0.0)), Err(Error::EvaluationOverflow));
        // exponent tracking keeps the magnitude available
        let scaled = scaled_product(&roots, c(3.0, 0.0), None);
        assert!((scaled.ln_abs() - 2000.0 * libm::log(3.0)).abs() < 1e-9);
    }

    #[test]
    fn newton_step_examples() {
        assert_eq!(quarter().newton_step(c(1.0, 0.0)).unwrap(), c(0.625, 0.0));
        let mono = Polynomial::from_roots(vec![c(0.0, 0.0); 4]).unwrap();
        assert_eq!(mono.newton_step(c(1.0, 0.0)).unwrap(), c(0.75, 0.0));
        let p = Polynomial::from_roots(vec![c(0.5, 0.0), c(-0.2, 0.1)]).unwrap();
        assert_eq!(p.newton_step(c(0.5, 0.0)).unwrap(), c(0.5, 0.0));
    }

    #[test]
    fn critical_point_is_signalled() {
        let roots = vec![c(0.5, 0.0), c(-0.5, 0.0)];
        assert_eq!(newton_step_roots(&roots, c(0.0, 0.0)), Err(Error::CriticalPoint));
        let coeffs = expand_roots(&roots);
        assert_eq!(newton_step_coeffs(&coeffs, c(0.0, 0.0)), Err(Error::CriticalPoint));
    }

    #[test]
    fn farfield_examples() {
        let sym = Polynomial::from_roots(vec![c(0.5, 0.0), c(-0.5, 0.0)]).unwrap();
        assert_eq!(sym.farfield_linearization(c(1e6, 0.0)), c(5e5, 0.0));

        // (z - 1/2)^3 has an exactly affine Newton map: z - (z - 1/2)/3
        let triple = Polynomial::from_roots(vec![c(0.5, 0.0); 3]).unwrap();
        let z = c(100.0, 0.0);
        let lin = triple.farfield_linearization(z);
        assert!((lin.re - (200.0 / 3.0 + 0.5 / 3.0)).abs() < 1e-12);
        assert!((triple.newton_step(z).unwrap() - lin).norm() < 1e-12);

        let quad = Polynomial::from_roots(vec![c(0.3, 0.4), c(-0.3, -0.4), c(0.1, -0.7), c(-0.1, 0.7)]).unwrap();
        assert_eq!(quad.farfield_linearization(c(1e3, 0.0)), c(750.0, 0.0));
    }

    #[test]
    fn constructors_validate() {
        assert!(matches!(
            Polynomial::from_roots(vec![c(1.5, 0.0)]),
            Err(Error::RootOutsideDisk { index: 0, .. })
        ));
        assert!(matches!(
            Polynomial::from_coeffs(vec![c(1.0, 0.0), c(2.0, 0.0)]),
            Err(Error::NotMonic { .. })
        ));
        assert!(matches!(
            Polynomial::from_roots(vec![c(f64::NAN, 0.0)]),
            Err(Error::NonFinite { field: "roots", index: 0 })
        ));
        let roots = vec![c(0.5, 0.0), c(-0.5, 0.0)];
        assert!(Polynomial::from_parts(expand_roots(&roots), roots.clone()).is_ok());
        let mut bad = expand_roots(&roots);
        bad[0] = c(-0.3, 0.0);
        assert!(matches!(
            Polynomial::from_parts(bad, roots),
            Err(Error::InconsistentForms { index: 0, .. })
        ));
        let big = Polynomial::from_roots(vec![c(0.1, 0.0); 65]).unwrap();
        assert!(matches!(big.with_expanded_coeffs(), Err(Error::ExpansionTooLarge { .. })));
    }

    #[test]
    fn root_sum_from_either_form() {
        let roots = vec![c(0.5, 0.1), c(-0.2, 0.3), c(0.0, -0.9)];
        let by_roots = Polynomial::from_roots(roots.clone()).unwrap();
        let by_coeffs = Polynomial::from_coeffs(expand_roots(&roots)).unwrap();
        assert!((by_roots.root_sum() - by_coeffs.root_sum()).norm() < 1e-15);
    }

    #[test]
    fn recip_handles_tiny_and_huge() {
        let tiny = c(1e-170, 1e-170);
        let r = recip(tiny);
        assert!(is_finite(r));
        assert!((r * tiny - c(1.0, 0.0)).norm() < 1e-15);
        let huge = c(1e170, -1e170);
        assert!((recip(huge) * huge - c(1.0, 0.0)).norm() < 1e-15);
    }

    fn disk_point() -> impl Strategy<Value = ComplexPoint> {
        (0.0f64..1.0, 0.0f64..core::f64::consts::TAU)
            .prop_map(|(u, t)| Complex64::from_polar(libm::sqrt(u), t))
    }

    proptest! {
        #[test]
        fn quadratic_convergence_near_simple_roots(
            roots in proptest::collection::vec(disk_point(), 2..12),
            dir in 0.0f64..core::f64::consts::TAU,
        ) {
            let sep = roots.iter().enumerate().flat_map(|(i, a)| {
                roots[i + 1..].iter().map(move |b| (a - b).norm())
            }).fold(f64::INFINITY, f64::min);
            prop_assume!(sep > 1e-2);
            let alpha = roots[0];
            // |N(a + h) - a| / |h|^2 tends to |p''(a) / 2p'(a)|
            let ratios: Vec<f64> = [1e-4, 5e-5, 2e-5].iter().map(|&t| {
                let h = Complex64::from_polar(t, dir);
                let next = newton_step_roots(&roots, alpha + h).unwrap();
                (next - alpha).norm() / (t * t)
            }).collect();
            let fitted = ratios.iter().cloned().fold(0.0, f64::max);
            let others: f64 = roots[1..].iter().map(|&b| recip(alpha - b).norm()).sum();
            prop_assert!(fitted <= 2.0 * others + 1e-3, "C = {fitted} vs {others}");
        }

        #[test]
        fn farfield_map_matches_newton_at_large_modulus(
            roots in proptest::collection::vec(disk_point(), 1..=100),
            theta in 0.0f64..core::f64::consts::TAU,
        ) {
            let p = Polynomial::from_roots(roots).unwrap();
            let z = Complex64::from_polar(1e6, theta);
            let gap = (p.newton_step(z).unwrap() - p.farfield_linearization(z)).norm();
            prop_assert!(gap <= 1e-3, "gap {gap}");
        }
    }
}
