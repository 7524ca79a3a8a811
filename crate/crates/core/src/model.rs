//! The spectral data (m, v, a1) of a rank-one off-diagonal perturbation.
//!
//! The model describes the self-adjoint block operator
//!
//! ```text
//!     B = | A0   V  |      A0 = multiplication by mu on L^2(m),
//!         | V*   a1 |      V c = c * v,   V* phi = <v, phi>,
//! ```
//!
//! where m is a compactly supported base measure, v a coupling function on
//! its support and a1 a real scalar. The derived weighted measure
//! nu = |v|^2 m drives every transform and classification in the crate.
//!
//! Inner products are conjugate-linear in the first slot.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measure::{Atoms, Measure};

/// How the coupling function v is specified on the support of m.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingSpec {
    /// v is the same complex constant at every support point. The only form
    /// that survives re-materialization at a different depth.
    Constant(Complex64),
    /// One complex value per atom of the materialized base measure,
    /// in increasing order of the support points.
    Samples(Vec<Complex64>),
}

/// Immutable spectral model (m, v, a1) with its materialized atoms cached.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    m: Measure,
    coupling: CouplingSpec,
    a1: f64,
    atoms: Atoms,
    v: Vec<Complex64>,
    nu: Atoms,
}

impl SpectralModel {
    pub fn new(m: Measure, coupling: CouplingSpec, a1: f64) -> Result<Self> {
        if !a1.is_finite() {
            return Err(Error::InvalidModel(format!("a1 must be finite, got {a1}")));
        }
        let atoms = m.atomize()?;
        let v: Vec<Complex64> = match &coupling {
            CouplingSpec::Constant(c) => {
                if !(c.re.is_finite() && c.im.is_finite()) {
                    return Err(Error::InvalidModel("coupling constant is not finite".into()));
                }
                vec![*c; atoms.len()]
            }
            CouplingSpec::Samples(vals) => {
                if vals.len() != atoms.len() {
                    return Err(Error::InvalidModel(format!(
                        "{} coupling samples for {} support atoms; samples must match \
                         the materialized (sorted, merged) atom list",
                        vals.len(),
                        atoms.len()
                    )));
                }
                for (i, c) in vals.iter().enumerate() {
                    if !(c.re.is_finite() && c.im.is_finite()) {
                        return Err(Error::InvalidModel(format!(
                            "coupling sample [{i}] is not finite"
                        )));
                    }
                }
                vals.clone()
            }
        };
        let nu = weighted_atoms(&atoms, &v)?;
        Ok(SpectralModel {
            m,
            coupling,
            a1,
            atoms,
            v,
            nu,
        })
    }

    /// Convenience: single unit atom at `point` with constant coupling.
    pub fn single_atom(point: f64, v: Complex64, a1: f64) -> Result<Self> {
        SpectralModel::new(Measure::dirac(point), CouplingSpec::Constant(v), a1)
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn base_measure(&self) -> &Measure {
        &self.m
    }

    pub fn coupling(&self) -> &CouplingSpec {
        &self.coupling
    }

    /// Materialized atoms of the base measure m.
    pub fn m_atoms(&self) -> &Atoms {
        &self.atoms
    }

    /// Coupling values aligned with [`SpectralModel::m_atoms`].
    pub fn v(&self) -> &[Complex64] {
        &self.v
    }

    /// Atoms of nu = |v|^2 m (points where the coupling vanishes dropped).
    pub fn nu_atoms(&self) -> &Atoms {
        &self.nu
    }

    /// The weighted measure nu = |v|^2 m as an atomic measure.
    pub fn nu_measure(&self) -> Measure {
        Measure::Atomic {
            points: self.nu.points().to_vec(),
            weights: self.nu.weights().to_vec(),
        }
    }

    /// nu as a refinable description (|v|^2-scaled base measure), available
    /// when the base measure is refinable and the coupling is constant.
    pub fn refinable_nu(&self) -> Option<Measure> {
        match (&self.coupling, self.m.is_refinable()) {
            (CouplingSpec::Constant(c), true) => {
                Some(Measure::Mixture(vec![(c.norm_sqr(), self.m.clone())]))
            }
            _ => None,
        }
    }

    /// ||v||^2 = integral of |v|^2 dm = total mass of nu.
    pub fn v_norm_sq(&self) -> f64 {
        self.nu.mass()
    }

    /// Enclosure of the spectrum of B: every eigenvalue lies within
    /// [min(mu, a1) - ||v||, max(mu, a1) + ||v||].
    pub fn spectrum_enclosure(&self) -> (f64, f64) {
        let (lo, hi) = self.atoms.hull();
        let vnorm = self.v_norm_sq().sqrt();
        (lo.min(self.a1) - vnorm, hi.max(self.a1) + vnorm)
    }

    /// Length scale used by epsilon schedules: the nu hull width floored at 1.
    pub fn hull_scale(&self) -> f64 {
        self.nu.hull_width().max(1.0)
    }

    /// Default classification tolerance: tight for exactly atomic models,
    /// loose for quadrature/Cantor materializations whose discretization
    /// error floors the achievable residual.
    pub fn default_tol(&self) -> f64 {
        if matches!(self.m, Measure::Atomic { .. }) {
            1e-8
        } else {
            1e-4
        }
    }

    /// Whether the model can be re-materialized at another depth.
    pub fn is_refinable(&self) -> bool {
        self.m.is_refinable() && matches!(self.coupling, CouplingSpec::Constant(_))
    }

    /// Re-materialize the model at refinement level `depth`.
    pub fn at_depth(&self, depth: u32) -> Result<Self> {
        if !matches!(self.coupling, CouplingSpec::Constant(_)) {
            return Err(Error::NotRefinable(
                "per-atom coupling samples cannot be re-sampled at another depth".into(),
            ));
        }
        SpectralModel::new(self.m.at_depth(depth)?, self.coupling.clone(), self.a1)
    }

    /// Spectral distance d = dist(spec A0, a1) = min_i |mu_i - a1|.
    pub fn gap_to_a1(&self) -> f64 {
        self.atoms
            .points()
            .iter()
            .map(|mu| (mu - self.a1).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Build the atoms of |v|^2 m, dropping points where v vanishes exactly.
fn weighted_atoms(atoms: &Atoms, v: &[Complex64]) -> Result<Atoms> {
    let mut points = Vec::with_capacity(atoms.len());
    let mut weights = Vec::with_capacity(atoms.len());
    for i in 0..atoms.len() {
        let w = atoms.weights()[i] * v[i].norm_sqr();
        if w > 0.0 {
            points.push(atoms.points()[i]);
            weights.push(w);
        }
    }
    if points.is_empty() {
        return Err(Error::AllWeightsZero);
    }
    Ok(Atoms::from_sorted_unchecked(points, weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn nu_of_unit_point_mass_is_itself() {
        let model = SpectralModel::single_atom(0.0, c(1.0), 0.0).unwrap();
        let nu = model.nu_atoms();
        assert_eq!(nu.points(), &[0.0]);
        assert_eq!(nu.weights(), &[1.0]);
    }

    #[test]
    fn nu_of_symmetric_pair_with_unit_coupling() {
        let m = Measure::atomic(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let model = SpectralModel::new(m, CouplingSpec::Constant(c(1.0)), 0.0).unwrap();
        assert_eq!(model.nu_atoms().points(), &[-1.0, 1.0]);
        assert_eq!(model.nu_atoms().weights(), &[0.5, 0.5]);
    }

    #[test]
    fn zero_coupling_atoms_are_dropped() {
        let m = Measure::atomic(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let v = CouplingSpec::Samples(vec![c(0.0), c(std::f64::consts::SQRT_2)]);
        let model = SpectralModel::new(m, v, 0.0).unwrap();
        assert_eq!(model.nu_atoms().points(), &[1.0]);
        assert_abs_diff_eq!(model.nu_atoms().weights()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn all_zero_coupling_is_rejected() {
        let m = Measure::atomic(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let err = SpectralModel::new(m, CouplingSpec::Samples(vec![c(0.0), c(0.0)]), 0.0)
            .unwrap_err();
        assert_eq!(err, Error::AllWeightsZero);
    }

    #[test]
    fn v_norm_matches_nu_mass() {
        let m = Measure::atomic(vec![-2.0, 0.5, 3.0], vec![0.25, 1.5, 0.25]).unwrap();
        let v = CouplingSpec::Samples(vec![
            Complex64::new(0.0, 2.0),
            c(1.0),
            Complex64::new(1.0, -1.0),
        ]);
        let model = SpectralModel::new(m, v, 1.0).unwrap();
        // direct sum: 0.25*4 + 1.5*1 + 0.25*2 = 3.0
        let direct: f64 = model
            .m_atoms()
            .weights()
            .iter()
            .zip(model.v())
            .map(|(w, v)| w * v.norm_sqr())
            .sum();
        assert_abs_diff_eq!(direct, 3.0, epsilon = 1e-15);
        let rel = (model.v_norm_sq() - direct).abs() / direct;
        assert!(rel <= 1e-12);
    }

    #[test]
    fn sample_length_mismatch_rejected() {
        let m = Measure::atomic(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let err = SpectralModel::new(m, CouplingSpec::Samples(vec![c(1.0)]), 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn refinement_requires_constant_coupling() {
        let m = Measure::cantor(0.0, 1.0, 0.3, 0.5, 3).unwrap();
        let model = SpectralModel::new(m.clone(), CouplingSpec::Constant(c(1.0)), 0.0).unwrap();
        assert!(model.is_refinable());
        let deeper = model.at_depth(5).unwrap();
        assert_eq!(deeper.m_atoms().len(), 32);

        let samples = CouplingSpec::Samples(vec![c(1.0); 8]);
        let model = SpectralModel::new(m, samples, 0.0).unwrap();
        assert!(!model.is_refinable());
        assert!(model.at_depth(5).is_err());
    }

    #[test]
    fn spectrum_enclosure_contains_hull_and_a1() {
        let model = SpectralModel::single_atom(0.0, c(1.0), 10.0).unwrap();
        let (lo, hi) = model.spectrum_enclosure();
        assert!(lo <= 0.0 && hi >= 10.0 + 1.0 - 1e-15);
        assert_abs_diff_eq!(model.gap_to_a1(), 10.0);
    }
}
