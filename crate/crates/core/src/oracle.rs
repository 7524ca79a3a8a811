//! Ground-truth engine: the model materialized as a finite Hermitian
//! arrowhead matrix, eigensolved densely.
//!
//! In the orthonormal basis e_i = chi_i / sqrt(w_i) of L^2(m) the block
//! operator becomes the (n+1) x (n+1) arrowhead
//!
//! ```text
//!     B = | diag(mu_i)      c  |        c_i = sqrt(w_i) * v_i,
//!         |    c*          a1  |
//! ```
//!
//! Everything downstream (spectral measure, matrix Herglotz function,
//! cyclicity) is computed directly from definitions on this matrix, so it
//! serves as the independent oracle for the closed-form code paths.
//!
//! The dense solve is capped at [`MAX_ORACLE_ATOMS`] atoms; larger refinable
//! models compare transforms only.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::SpectralModel;
use crate::transform::MMatrix;

/// Dense eigensolves are O(n^3); refuse anything past this size.
pub const MAX_ORACLE_ATOMS: usize = 5000;

/// Finite arrowhead materialization of a model.
///
/// The original weights and coupling values are kept alongside the derived
/// coupling column so that model data can be read back with the same floats.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrowheadMatrix {
    diag: Vec<f64>,
    weights: Vec<f64>,
    v: Vec<Complex64>,
    coupling: Vec<Complex64>,
    corner: f64,
}

/// Build the arrowhead matrix of a finite (or materialized) model.
pub fn build_arrowhead(model: &SpectralModel) -> Result<ArrowheadMatrix> {
    let atoms = model.m_atoms();
    if atoms.is_empty() {
        return Err(Error::EmptyModel);
    }
    let coupling = atoms
        .weights()
        .iter()
        .zip(model.v())
        .map(|(w, v)| v * w.sqrt())
        .collect();
    Ok(ArrowheadMatrix {
        diag: atoms.points().to_vec(),
        weights: atoms.weights().to_vec(),
        v: model.v().to_vec(),
        coupling,
        corner: model.a1(),
    })
}

impl ArrowheadMatrix {
    /// Raw constructor for test fixtures (e.g. a decoupled diagonal block
    /// that model validation would reject).
    pub fn from_parts(
        diag: Vec<f64>,
        weights: Vec<f64>,
        v: Vec<Complex64>,
        corner: f64,
    ) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::EmptyModel);
        }
        if diag.len() != weights.len() || diag.len() != v.len() {
            return Err(Error::InvalidModel(
                "diag, weights and coupling lengths differ".into(),
            ));
        }
        let coupling = weights
            .iter()
            .zip(&v)
            .map(|(w, vi)| vi * w.sqrt())
            .collect();
        Ok(ArrowheadMatrix {
            diag,
            weights,
            v,
            coupling,
            corner,
        })
    }

    /// Number of base-measure atoms (matrix dimension is n + 1).
    pub fn n_atoms(&self) -> usize {
        self.diag.len()
    }

    pub fn dim(&self) -> usize {
        self.diag.len() + 1
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn v(&self) -> &[Complex64] {
        &self.v
    }

    /// Coupling column c_i = sqrt(w_i) v_i.
    pub fn coupling(&self) -> &[Complex64] {
        &self.coupling
    }

    pub fn corner(&self) -> f64 {
        self.corner
    }

    /// Weights of nu = |v|^2 m recomputed from the stored model data
    /// (identical arithmetic to the model's own construction).
    pub fn nu_weights(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.v)
            .map(|(w, v)| w * v.norm_sqr())
            .collect()
    }

    /// Upper bound on the operator norm: max diagonal magnitude plus the
    /// coupling column norm.
    pub fn norm_upper(&self) -> f64 {
        let d = self
            .diag
            .iter()
            .fold(self.corner.abs(), |m, x| m.max(x.abs()));
        let c: f64 = self.coupling.iter().map(|c| c.norm_sqr()).sum();
        d + c.sqrt()
    }

    /// Matrix-vector product in O(n), using the arrowhead structure.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_atoms();
        assert_eq!(x.len(), n + 1);
        let xn = x[n];
        let mut y = vec![Complex64::new(0.0, 0.0); n + 1];
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            y[i] = self.diag[i] * x[i] + self.coupling[i] * xn;
            acc += self.coupling[i].conj() * x[i];
        }
        y[n] = acc + self.corner * xn;
        y
    }

    /// Dense complex matrix (for direct linear solves).
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.n_atoms();
        let mut m = DMatrix::from_element(n + 1, n + 1, Complex64::new(0.0, 0.0));
        for i in 0..n {
            m[(i, i)] = Complex64::new(self.diag[i], 0.0);
            m[(i, n)] = self.coupling[i];
            m[(n, i)] = self.coupling[i].conj();
        }
        m[(n, n)] = Complex64::new(self.corner, 0.0);
        m
    }
}

/// Full eigensystem of an arrowhead matrix: eigenvalues ascending,
/// orthonormal eigenvectors as columns, per-vector residual norms.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
    pub residuals: Vec<f64>,
    pub norm_upper: f64,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Column k as a slice-backed vector.
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.column(k).iter().copied().collect()
    }

    /// Resolvent application (B - z)^{-1} x through the eigensystem.
    pub fn resolvent_apply(&self, z: Complex64, x: &[Complex64]) -> Vec<Complex64> {
        let dim = self.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for k in 0..dim {
            let u = self.vectors.column(k);
            let coeff: Complex64 = u.iter().zip(x).map(|(ui, xi)| ui.conj() * xi).sum();
            let scale = coeff / (Complex64::new(self.eigenvalues[k], 0.0) - z);
            for (o, ui) in out.iter_mut().zip(u.iter()) {
                *o += scale * ui;
            }
        }
        out
    }
}

/// Dense Hermitian eigensolve of an arrowhead matrix.
///
/// The Hermitian arrowhead is unitarily equivalent, via the diagonal phase
/// matrix diag(c_i/|c_i|, 1), to a real symmetric arrowhead with couplings
/// |c_i|; the real problem is solved densely and the phases restored.
/// Every eigenvector's residual ||B u - lambda u|| is audited before the
/// system is returned; failures are surfaced, never silent.
pub fn dense_eig(arrow: &ArrowheadMatrix) -> Result<EigenSystem> {
    let n = arrow.n_atoms();
    if n > MAX_ORACLE_ATOMS {
        return Err(Error::OracleTooLarge {
            atoms: n,
            cap: MAX_ORACLE_ATOMS,
        });
    }
    let dim = n + 1;
    let mut real = DMatrix::<f64>::zeros(dim, dim);
    let mut phases = Vec::with_capacity(n);
    for i in 0..n {
        real[(i, i)] = arrow.diag[i];
        let mag = arrow.coupling[i].norm();
        real[(i, n)] = mag;
        real[(n, i)] = mag;
        phases.push(if mag > 0.0 {
            arrow.coupling[i] / mag
        } else {
            Complex64::new(1.0, 0.0)
        });
    }
    real[(n, n)] = arrow.corner;

    let eig = real.symmetric_eigen();
    for ev in eig.eigenvalues.iter() {
        if !ev.is_finite() {
            return Err(Error::EigensolveFailed("non-finite eigenvalue".into()));
        }
    }

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let mut eigenvalues = Vec::with_capacity(dim);
    let mut vectors = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for (k, &src) in order.iter().enumerate() {
        eigenvalues.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        for i in 0..n {
            vectors[(i, k)] = phases[i] * col[i];
        }
        vectors[(n, k)] = Complex64::new(col[n], 0.0);
        fix_phase(&mut vectors, k, n);
    }

    let norm_upper = arrow.norm_upper();
    let mut residuals = Vec::with_capacity(dim);
    for k in 0..dim {
        let u: Vec<Complex64> = vectors.column(k).iter().copied().collect();
        let bu = arrow.apply(&u);
        let r: f64 = bu
            .iter()
            .zip(&u)
            .map(|(b, ui)| (b - eigenvalues[k] * ui).norm_sqr())
            .sum::<f64>()
            .sqrt();
        residuals.push(r);
    }
    let audit = 1e-11 * norm_upper.max(1.0);
    if let Some(worst) = residuals.iter().cloned().fold(None::<f64>, |m, r| {
        Some(m.map_or(r, |m| m.max(r)))
    }) {
        if worst > audit {
            return Err(Error::EigensolveFailed(format!(
                "worst eigenpair residual {worst:.3e} exceeds audit threshold {audit:.3e}"
            )));
        }
    }

    Ok(EigenSystem {
        eigenvalues,
        vectors,
        residuals,
        norm_upper,
    })
}

/// Make the last component real nonnegative; if it vanishes (decoupled
/// eigenvector) rotate the largest component onto the positive real axis.
fn fix_phase(vectors: &mut DMatrix<Complex64>, k: usize, last: usize) {
    let pivot = if vectors[(last, k)].norm() > 1e-300 {
        vectors[(last, k)]
    } else {
        let mut best = (0usize, 0.0f64);
        for i in 0..=last {
            let m = vectors[(i, k)].norm();
            if m > best.1 {
                best = (i, m);
            }
        }
        vectors[(best.0, k)]
    };
    let mag = pivot.norm();
    if mag == 0.0 {
        return;
    }
    let rot = pivot.conj() / mag;
    for i in 0..=last {
        vectors[(i, k)] *= rot;
    }
}

/// The spectral measure of B seen through the pair (v + 0, 0 + 1):
/// atoms (lambda_k, mass_k) with mass_k = |<u_k, v+0>|^2 + |<u_k, 0+1>|^2.
/// Masses sum to ||v||^2 + 1 (audited before returning).
pub fn oracle_spectral_measure(model: &SpectralModel) -> Result<Vec<(f64, f64)>> {
    let arrow = build_arrowhead(model)?;
    let eig = dense_eig(&arrow)?;
    Ok(spectral_measure_from_eig(&arrow, &eig)?)
}

pub(crate) fn spectral_measure_from_eig(
    arrow: &ArrowheadMatrix,
    eig: &EigenSystem,
) -> Result<Vec<(f64, f64)>> {
    let n = arrow.n_atoms();
    let mut out = Vec::with_capacity(eig.dim());
    for k in 0..eig.dim() {
        let u = eig.vectors.column(k);
        let overlap_v: Complex64 = (0..n).map(|i| u[i].conj() * arrow.coupling[i]).sum();
        let mass = overlap_v.norm_sqr() + u[n].norm_sqr();
        out.push((eig.eigenvalues[k], mass));
    }
    // Kahan-summed audit of the total mass against ||v||^2 + 1.
    let mut total = 0.0f64;
    let mut comp = 0.0f64;
    for (_, m) in &out {
        let y = m - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;
    }
    let vsq: f64 = arrow.coupling.iter().map(|c| c.norm_sqr()).sum();
    let expect = vsq + 1.0;
    if (total - expect).abs() > 1e-12 * expect.max(1.0) * 16.0 {
        return Err(Error::OracleInconsistent(format!(
            "spectral masses sum to {total}, expected {expect}"
        )));
    }
    Ok(out)
}

/// M(z) computed from the definition: W* (B - z)^{-1} W with
/// W = [v + 0 | 0 + 1], by a direct dense linear solve. Valid for any
/// Im z != 0.
pub fn oracle_m_matrix(model: &SpectralModel, z: Complex64) -> Result<MMatrix> {
    if z.im == 0.0 {
        return Err(Error::RealSpectralParameter { re: z.re, im: z.im });
    }
    let arrow = build_arrowhead(model)?;
    let n = arrow.n_atoms();
    if n > MAX_ORACLE_ATOMS {
        return Err(Error::OracleTooLarge {
            atoms: n,
            cap: MAX_ORACLE_ATOMS,
        });
    }
    let dim = n + 1;
    let mut bz = arrow.to_dense();
    for i in 0..dim {
        bz[(i, i)] -= z;
    }
    let lu = bz.lu();
    let mut rhs_v = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    for i in 0..n {
        rhs_v[i] = arrow.coupling[i];
    }
    let mut rhs_e = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    rhs_e[n] = Complex64::new(1.0, 0.0);

    let sol_v = lu
        .solve(&rhs_v)
        .ok_or_else(|| Error::OracleInconsistent("resolvent solve failed".into()))?;
    let sol_e = lu
        .solve(&rhs_e)
        .ok_or_else(|| Error::OracleInconsistent("resolvent solve failed".into()))?;

    let m00: Complex64 = (0..n).map(|i| arrow.coupling[i].conj() * sol_v[i]).sum();
    let m01: Complex64 = (0..n).map(|i| arrow.coupling[i].conj() * sol_e[i]).sum();
    let m10 = sol_v[n];
    let m11 = sol_e[n];
    Ok(MMatrix { m00, m01, m10, m11 })
}

/// Evidence for (or against) cyclicity of the vector 0 + 1 for B.
#[derive(Debug, Clone)]
pub struct CyclicityReport {
    pub cyclic: bool,
    /// Smallest gap between consecutive eigenvalues, relative to the norm.
    pub min_gap_rel: f64,
    /// Smallest |<u_k, 0 + 1>| over all eigenvectors.
    pub min_overlap: f64,
}

/// 0 + 1 is cyclic iff every eigenvalue is simple and every eigenvector has
/// a nonzero last component (threshold 1e-12).
pub fn cyclicity_check(model: &SpectralModel) -> Result<CyclicityReport> {
    let arrow = build_arrowhead(model)?;
    let eig = dense_eig(&arrow)?;
    let n = arrow.n_atoms();
    let scale = eig.norm_upper.max(1.0);
    let mut min_gap_rel = f64::INFINITY;
    for w in eig.eigenvalues.windows(2) {
        min_gap_rel = min_gap_rel.min((w[1] - w[0]) / scale);
    }
    let mut min_overlap = f64::INFINITY;
    for k in 0..eig.dim() {
        min_overlap = min_overlap.min(eig.vectors[(n, k)].norm());
    }
    Ok(CyclicityReport {
        cyclic: min_gap_rel > 1e-12 && min_overlap > 1e-12,
        min_gap_rel,
        min_overlap,
    })
}

/// Cross-check for cyclicity: dimension of the Krylov space spanned by
/// (0+1), B(0+1), B^2(0+1), ... computed by modified Gram-Schmidt.
/// Equals the full dimension iff 0 + 1 is cyclic.
pub fn krylov_rank(arrow: &ArrowheadMatrix) -> usize {
    let dim = arrow.dim();
    let scale = arrow.norm_upper().max(1.0);
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut current = vec![Complex64::new(0.0, 0.0); dim];
    current[dim - 1] = Complex64::new(1.0, 0.0);
    for _ in 0..dim {
        let mut w = current.clone();
        for b in &basis {
            let proj: Complex64 = b.iter().zip(&w).map(|(bi, wi)| bi.conj() * wi).sum();
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= proj * bi;
            }
        }
        let norm: f64 = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 1e-10 * scale {
            break;
        }
        for x in w.iter_mut() {
            *x /= norm;
        }
        basis.push(w);
        current = arrow.apply(&current);
    }
    basis.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Measure;
    use crate::model::CouplingSpec;
    use crate::transform::m_matrix;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_atom_model() -> SpectralModel {
        SpectralModel::single_atom(0.0, c(1.0, 0.0), 0.0).unwrap()
    }

    fn two_atom_model() -> SpectralModel {
        let m = Measure::atomic(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        SpectralModel::new(m, CouplingSpec::Constant(c(1.0, 0.0)), 0.0).unwrap()
    }

    #[test]
    fn arrowhead_of_single_atom() {
        let arrow = build_arrowhead(&single_atom_model()).unwrap();
        assert_eq!(arrow.diag(), &[0.0]);
        assert_eq!(arrow.coupling(), &[c(1.0, 0.0)]);
        assert_eq!(arrow.corner(), 0.0);
    }

    #[test]
    fn arrowhead_of_two_atoms_has_sqrt_half_couplings() {
        let arrow = build_arrowhead(&two_atom_model()).unwrap();
        assert_eq!(arrow.diag(), &[-1.0, 1.0]);
        for ci in arrow.coupling() {
            assert_abs_diff_eq!(ci.re, 0.5_f64.sqrt(), epsilon = 1e-15);
            assert_eq!(ci.im, 0.0);
        }
    }

    #[test]
    fn arrowhead_with_complex_coupling_is_hermitian() {
        let model = SpectralModel::single_atom(0.0, c(0.0, 1.0), 0.0).unwrap();
        let arrow = build_arrowhead(&model).unwrap();
        let dense = arrow.to_dense();
        assert_eq!(dense[(0, 1)], c(0.0, 1.0));
        assert_eq!(dense[(1, 0)], c(0.0, -1.0));
    }

    #[test]
    fn round_trip_preserves_model_floats() {
        let m = Measure::atomic(vec![-0.7, 0.3, 2.0], vec![0.11, 0.57, 0.32]).unwrap();
        let v = vec![c(1.0, -0.5), c(0.2, 0.0), c(0.0, 1.5)];
        let model = SpectralModel::new(m, CouplingSpec::Samples(v.clone()), 0.9).unwrap();
        let arrow = build_arrowhead(&model).unwrap();
        assert_eq!(arrow.diag(), model.m_atoms().points());
        assert_eq!(arrow.weights(), model.m_atoms().weights());
        assert_eq!(arrow.v(), model.v());
        assert_eq!(arrow.corner(), model.a1());
        // nu recomputed from stored data matches the model's nu bit-for-bit.
        assert_eq!(arrow.nu_weights(), model.nu_atoms().weights().to_vec());
    }

    #[test]
    fn dense_eig_single_atom_pm_one() {
        let arrow = build_arrowhead(&single_atom_model()).unwrap();
        let eig = dense_eig(&arrow).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.eigenvalues[1], 1.0, epsilon = 1e-14);
        for r in &eig.residuals {
            assert!(*r <= 1e-12 * eig.norm_upper.max(1.0));
        }
    }

    #[test]
    fn dense_eig_two_atoms_sqrt2() {
        let arrow = build_arrowhead(&two_atom_model()).unwrap();
        let eig = dense_eig(&arrow).unwrap();
        let expect = [-(2.0f64.sqrt()), 0.0, 2.0f64.sqrt()];
        for (ev, ex) in eig.eigenvalues.iter().zip(expect) {
            assert_abs_diff_eq!(*ev, ex, epsilon = 1e-13);
        }
    }

    #[test]
    fn dense_eig_diag_only_fixture() {
        // Coupling forced to zero: plain diagonal spectrum.
        let arrow = ArrowheadMatrix::from_parts(
            vec![-2.0, 0.5, 3.0],
            vec![1.0, 1.0, 1.0],
            vec![c(0.0, 0.0); 3],
            1.0,
        )
        .unwrap();
        let eig = dense_eig(&arrow).unwrap();
        let expect = [-2.0, 0.5, 1.0, 3.0];
        for (ev, ex) in eig.eigenvalues.iter().zip(expect) {
            assert_abs_diff_eq!(*ev, ex, epsilon = 1e-13);
        }
    }

    #[test]
    fn eigenvector_matrix_is_unitary() {
        let m = Measure::atomic(vec![-1.2, -0.3, 0.4, 1.7], vec![0.4, 0.3, 0.2, 0.6]).unwrap();
        let v = CouplingSpec::Samples(vec![c(1.0, 0.2), c(0.5, -0.7), c(0.9, 0.0), c(0.0, 0.4)]);
        let model = SpectralModel::new(m, v, 0.3).unwrap();
        let eig = dense_eig(&build_arrowhead(&model).unwrap()).unwrap();
        let dim = eig.dim();
        for a in 0..dim {
            for b in 0..dim {
                let dot: Complex64 = (0..dim)
                    .map(|i| eig.vectors[(i, a)].conj() * eig.vectors[(i, b)])
                    .sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot.norm() - expect).abs() <= 1e-12);
            }
        }
        // Phase convention: last component real nonnegative.
        for k in 0..dim {
            let last = eig.vectors[(dim - 1, k)];
            assert!(last.im.abs() <= 1e-14 && last.re >= -1e-14);
        }
    }

    #[test]
    fn spectral_measure_single_atom_unit_masses() {
        let masses = oracle_spectral_measure(&single_atom_model()).unwrap();
        assert_eq!(masses.len(), 2);
        assert_abs_diff_eq!(masses[0].0, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(masses[0].1, 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(masses[1].0, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(masses[1].1, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn spectral_measure_total_scales_with_coupling() {
        for t in [0.5, 2.0, 3.5] {
            let model = SpectralModel::single_atom(0.3, c(t, 0.0), -0.2).unwrap();
            let masses = oracle_spectral_measure(&model).unwrap();
            let total: f64 = masses.iter().map(|(_, m)| m).sum();
            assert_abs_diff_eq!(total, t * t + 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn oracle_m_matrix_matches_closed_form_single_atom() {
        let model = single_atom_model();
        let z = c(0.0, 1.0);
        let direct = oracle_m_matrix(&model, z).unwrap();
        let closed = m_matrix(&model, z).unwrap();
        assert!((direct.m00 - closed.m00).norm() <= 1e-12);
        assert!((direct.m01 - closed.m01).norm() <= 1e-12);
        assert!((direct.m10 - closed.m10).norm() <= 1e-12);
        assert!((direct.m11 - closed.m11).norm() <= 1e-12);
        // And the hand-derived resolvent values.
        assert!((direct.m00 - c(0.0, 0.5)).norm() <= 1e-13);
        assert!((direct.m01 - c(0.5, 0.0)).norm() <= 1e-13);
    }

    #[test]
    fn oracle_m_matrix_hermitian_symmetry() {
        let model = two_atom_model();
        let z = c(0.4, 0.9);
        let up = oracle_m_matrix(&model, z).unwrap();
        let dn = oracle_m_matrix(&model, z.conj()).unwrap();
        let star = up.conj_transpose();
        assert!((dn.m00 - star.m00).norm() <= 1e-13);
        assert!((dn.m01 - star.m01).norm() <= 1e-13);
        assert!((dn.m10 - star.m10).norm() <= 1e-13);
        assert!((dn.m11 - star.m11).norm() <= 1e-13);
    }

    #[test]
    fn resolvent_identity_eig_vs_direct_solve() {
        let model = two_atom_model();
        let arrow = build_arrowhead(&model).unwrap();
        let eig = dense_eig(&arrow).unwrap();
        let z = c(0.3, 0.8);
        let x = vec![c(1.0, 0.0), c(0.0, -1.0), c(0.5, 0.5)];
        let via_eig = eig.resolvent_apply(z, &x);

        let mut bz = arrow.to_dense();
        for i in 0..3 {
            bz[(i, i)] -= z;
        }
        let sol = bz.lu().solve(&DVector::from_vec(x)).unwrap();
        for i in 0..3 {
            assert!((via_eig[i] - sol[i]).norm() <= 1e-11);
        }
    }

    #[test]
    fn cyclicity_of_coupled_models() {
        let rep = cyclicity_check(&single_atom_model()).unwrap();
        assert!(rep.cyclic);
        // Both overlaps are 1/sqrt(2).
        assert_abs_diff_eq!(rep.min_overlap, 0.5f64.sqrt(), epsilon = 1e-12);

        let rep = cyclicity_check(&two_atom_model()).unwrap();
        assert!(rep.cyclic);
    }

    #[test]
    fn decoupled_atom_breaks_cyclicity() {
        let m = Measure::atomic(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let v = CouplingSpec::Samples(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let model = SpectralModel::new(m, v, 0.0).unwrap();
        let rep = cyclicity_check(&model).unwrap();
        assert!(!rep.cyclic);

        let arrow = build_arrowhead(&model).unwrap();
        assert_eq!(krylov_rank(&arrow), 2);
    }

    #[test]
    fn krylov_rank_agrees_with_eig_cyclicity() {
        let model = two_atom_model();
        let arrow = build_arrowhead(&model).unwrap();
        assert_eq!(krylov_rank(&arrow), 3);
    }

    #[test]
    fn vanishing_windows_of_omega() {
        // Any window free of eigenvalues carries no omega-mass and no
        // E_B-mass seen from 0 + 1.
        let model = two_atom_model();
        let masses = oracle_spectral_measure(&model).unwrap();
        let eig = dense_eig(&build_arrowhead(&model).unwrap()).unwrap();
        let window = (0.1, 1.3); // between 0 and sqrt(2)
        let omega_mass: f64 = masses
            .iter()
            .filter(|(l, _)| *l > window.0 && *l < window.1)
            .map(|(_, m)| m)
            .sum();
        let e_mass: f64 = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, l)| **l > window.0 && **l < window.1)
            .map(|(k, _)| eig.vectors[(2, k)].norm_sqr())
            .sum();
        assert_eq!(omega_mass, 0.0);
        assert_eq!(e_mass, 0.0);
    }

    #[test]
    fn oracle_cap_enforced() {
        let arrow = ArrowheadMatrix::from_parts(
            vec![0.0; MAX_ORACLE_ATOMS + 1],
            vec![1.0; MAX_ORACLE_ATOMS + 1],
            vec![c(1.0, 0.0); MAX_ORACLE_ATOMS + 1],
            0.0,
        )
        .unwrap();
        assert!(matches!(
            dense_eig(&arrow),
            Err(Error::OracleTooLarge { .. })
        ));
    }
}
