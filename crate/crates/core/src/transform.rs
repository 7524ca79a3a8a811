//! Analytic transforms of the model: the Borel transform of nu and the
//! perturbed Herglotz function with its 2x2 matrix refinement.
//!
//! For an atomic nu the Borel transform is the exact finite sum
//!
//! ```text
//!     F(z) = sum_i w_i / (mu_i - z),        Im z != 0,
//! ```
//!
//! and the perturbed transform and its matrix version are the closed forms
//!
//! ```text
//!     phi(z) = [1 + (a1 - z) F(z)] / [(a1 - z) - F(z)],
//!     M00 = (a1 - z) F(z) / D,   M11 = 1 / D,   M01 = M10 = -F(z) / D,
//! ```
//!
//! with D = (a1 - z) - F(z). phi = tr M maps the upper half-plane into
//! itself and is the Borel transform of the spectral measure of B.
//!
//! The lower half-plane is always served through conjugate symmetry
//! F(conj z) = conj F(z), so only the upper-half-plane branch is summed.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measure::{Atoms, Measure};
use crate::model::SpectralModel;

impl Atoms {
    /// Exact sum over atoms of w / (mu - z), upper half-plane only.
    pub(crate) fn cauchy_sum(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (mu, w) in self.points().iter().zip(self.weights()) {
            acc += w / (Complex64::new(mu - z.re, -z.im));
        }
        acc
    }

    /// Principal sum G(lambda) = sum_i w_i / (mu_i - lambda) on the real
    /// axis; finite away from atoms.
    pub(crate) fn principal_sum(&self, lambda: f64) -> f64 {
        self.points()
            .iter()
            .zip(self.weights())
            .map(|(mu, w)| w / (mu - lambda))
            .sum()
    }

    /// Sum of w_i / (mu_i - lambda)^2; the discrete g2 integrand.
    pub(crate) fn g2_sum(&self, lambda: f64) -> f64 {
        self.points()
            .iter()
            .zip(self.weights())
            .map(|(mu, w)| {
                let d = mu - lambda;
                w / (d * d)
            })
            .sum()
    }
}

fn check_off_axis(z: Complex64) -> Result<()> {
    if z.im == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::RealSpectralParameter { re: z.re, im: z.im });
    }
    Ok(())
}

/// Borel transform F(z) = integral of d nu(mu) / (mu - z) for Im z != 0.
pub fn borel_transform(nu: &Measure, z: Complex64) -> Result<Complex64> {
    check_off_axis(z)?;
    let atoms = nu.atomize()?;
    Ok(borel_atoms(&atoms, z))
}

pub(crate) fn borel_atoms(atoms: &Atoms, z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        atoms.cauchy_sum(z.conj()).conj()
    } else {
        atoms.cauchy_sum(z)
    }
}

/// The 2x2 Herglotz matrix of the perturbed operator at z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MMatrix {
    pub m00: Complex64,
    pub m01: Complex64,
    pub m10: Complex64,
    pub m11: Complex64,
}

impl MMatrix {
    pub fn trace(&self) -> Complex64 {
        self.m00 + self.m11
    }

    pub fn conj_transpose(&self) -> MMatrix {
        MMatrix {
            m00: self.m00.conj(),
            m01: self.m10.conj(),
            m10: self.m01.conj(),
            m11: self.m11.conj(),
        }
    }
}

fn m_matrix_upper(model: &SpectralModel, z: Complex64) -> Result<MMatrix> {
    let f = model.nu_atoms().cauchy_sum(z);
    let az = Complex64::new(model.a1(), 0.0) - z;
    let den = az - f;
    if den.norm() < 1e-300 {
        return Err(Error::DenominatorVanishes { re: z.re, im: z.im });
    }
    let m00 = az * f / den;
    let m11 = den.inv();
    let off = -f / den; // equals -(a1 - z)^{-1} m00, but valid at a1 = Re z
    Ok(MMatrix {
        m00,
        m01: off,
        m10: off,
        m11,
    })
}

/// Herglotz function phi(z) of the perturbed operator; Im z != 0, with the
/// lower half-plane served through conjugate symmetry.
pub fn phi(model: &SpectralModel, z: Complex64) -> Result<Complex64> {
    Ok(m_matrix(model, z)?.trace())
}

/// The 2x2 matrix Herglotz function M(z); tr M = phi.
pub fn m_matrix(model: &SpectralModel, z: Complex64) -> Result<MMatrix> {
    check_off_axis(z)?;
    if z.im < 0.0 {
        Ok(m_matrix_upper(model, z.conj())?.conj_transpose())
    } else {
        m_matrix_upper(model, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CouplingSpec;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_atom_model() -> SpectralModel {
        SpectralModel::single_atom(0.0, c(1.0, 0.0), 0.0).unwrap()
    }

    #[test]
    fn borel_of_unit_atom_at_2i() {
        // F(2i) = 1/(0 - 2i) = 0.5i
        let f = borel_transform(&Measure::dirac(0.0), c(0.0, 2.0)).unwrap();
        assert_abs_diff_eq!(f.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.im, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn borel_of_unit_atom_near_2_on_axis() {
        let f = borel_transform(&Measure::dirac(0.0), c(2.0, 1e-6)).unwrap();
        assert_abs_diff_eq!(f.re, -0.5, epsilon = 1e-9);
    }

    #[test]
    fn borel_rejects_real_axis() {
        let err = borel_transform(&Measure::dirac(0.0), c(2.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::RealSpectralParameter { .. }));
    }

    #[test]
    fn borel_mass_asymptotics() {
        // -z F(z) -> total mass along the imaginary axis.
        let nu = Measure::atomic(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let y = 1e8;
        let f = borel_transform(&nu, c(0.0, y)).unwrap();
        let lim = -c(0.0, y) * f;
        assert_abs_diff_eq!(lim.re, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn conjugate_symmetry_is_exact() {
        let nu = Measure::atomic(vec![-1.0, 0.3, 1.0], vec![0.5, 0.2, 0.5]).unwrap();
        let z = c(0.37, 0.81);
        let f_up = borel_transform(&nu, z).unwrap();
        let f_dn = borel_transform(&nu, z.conj()).unwrap();
        assert_eq!(f_up, f_dn.conj());
    }

    #[test]
    fn phi_of_single_atom_closed_form() {
        // phi(z) = 2z/(1 - z^2): phi(i) = i, phi(2i) = 4i/5.
        let model = single_atom_model();
        let p = phi(&model, c(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(p.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.im, 1.0, epsilon = 1e-15);
        let p = phi(&model, c(0.0, 2.0)).unwrap();
        assert_abs_diff_eq!(p.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.im, 0.8, epsilon = 1e-15);
    }

    #[test]
    fn phi_positive_imaginary_part_upper_half_plane() {
        let m = Measure::atomic(vec![-1.5, -0.2, 0.9], vec![0.3, 1.1, 0.6]).unwrap();
        let model = SpectralModel::new(
            m,
            CouplingSpec::Samples(vec![c(1.0, 0.5), c(0.3, 0.0), c(0.0, 2.0)]),
            0.7,
        )
        .unwrap();
        for &(re, im) in &[(0.0, 1.0), (2.5, 0.1), (-3.0, 0.4), (0.33, 1.9)] {
            let z = c(re, im);
            assert!(phi(&model, z).unwrap().im > 0.0);
            assert!(borel_transform(&model.nu_measure(), z).unwrap().im > 0.0);
        }
    }

    #[test]
    fn trace_identity() {
        let model = single_atom_model();
        let z = c(0.4, 0.7);
        let m = m_matrix(&model, z).unwrap();
        let p = phi(&model, z).unwrap();
        assert_abs_diff_eq!((m.trace() - p).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn m_matrix_single_atom_at_i_hand_values() {
        // (B - i)^{-1} for B = [[0,1],[1,0]] is [[i/2, 1/2], [1/2, i/2]].
        let m = m_matrix(&single_atom_model(), c(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!((m.m00 - c(0.0, 0.5)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((m.m11 - c(0.0, 0.5)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((m.m01 - c(0.5, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(m.m01, m.m10);
    }

    #[test]
    fn m_matrix_hermitian_symmetry() {
        let model = single_atom_model();
        let z = c(0.3, 0.9);
        let m_up = m_matrix(&model, z).unwrap();
        let m_dn = m_matrix(&model, z.conj()).unwrap();
        let diff = m_up.conj_transpose();
        assert_eq!(m_dn.m00, diff.m00);
        assert_eq!(m_dn.m01, diff.m01);
        assert_eq!(m_dn.m11, diff.m11);
    }

    #[test]
    fn mixture_transform_is_linear() {
        let m1 = Measure::dirac(0.5);
        let m2 = Measure::atomic(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let mix = Measure::mixture(vec![(0.7, m1.clone()), (1.3, m2.clone())]).unwrap();
        let z = c(0.2, 0.6);
        let lhs = borel_transform(&mix, z).unwrap();
        let rhs = 0.7 * borel_transform(&m1, z).unwrap() + 1.3 * borel_transform(&m2, z).unwrap();
        assert!((lhs - rhs).norm() <= 1e-14 * (1.0 + rhs.norm()));
    }
}
