//! Base measures and their reduction to weighted atoms.
//!
//! Every measure handled by this crate is compactly supported and is reduced
//! to a finite list of weighted atoms before any transform is evaluated:
//! densities through panel-wise Gauss-Legendre quadrature, self-similar
//! (Cantor-type) measures through materialization at a finite depth. The
//! atomic form is the single code path shared by the transforms, the
//! classification routines and the finite-matrix oracle.
//!
//! All types are immutable after construction and every operation is a pure
//! function, so values can be shared freely across threads.

use crate::error::{Error, Result};

/// Neighbouring atoms closer than this fraction of the hull width are merged
/// (weights summed, position mass-averaged).
pub const MERGE_REL_TOL: f64 = 1e-13;

/// Hard cap on Cantor materialization depth (depth d produces 2^d atoms).
pub const MAX_CANTOR_DEPTH: u32 = 24;

/// Cap on the number of quadrature nodes a density may materialize into.
pub const MAX_QUADRATURE_NODES: usize = 1 << 20;

/// Description of a density carried by a [`Measure::QuadratureDensity`].
#[derive(Debug, Clone, PartialEq)]
pub enum DensitySpec {
    /// Constant density 1/(b-a), i.e. the uniform probability measure.
    Uniform { panels: u32, nodes_per_panel: u32 },
    /// Polynomial density c_0 + c_1 mu + c_2 mu^2 + ...; must be strictly
    /// positive at every quadrature node.
    Poly {
        coeffs: Vec<f64>,
        panels: u32,
        nodes_per_panel: u32,
    },
    /// Caller-supplied nodes, quadrature weights and density samples.
    /// Not refinable: the density is only known at the given nodes.
    Samples {
        nodes: Vec<f64>,
        weights: Vec<f64>,
        values: Vec<f64>,
    },
}

/// A compactly supported positive measure.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    /// Finite list of weighted Dirac atoms; points strictly increasing.
    Atomic { points: Vec<f64>, weights: Vec<f64> },
    /// Density on [a, b] discretized with panel-wise Gauss-Legendre rules.
    QuadratureDensity { a: f64, b: f64, density: DensitySpec },
    /// Self-similar two-branch measure on [a, b]: contraction ratio in
    /// (0, 1/2), branch weights (p_left, 1 - p_left), materialized at a
    /// finite depth as 2^depth atoms placed at subinterval midpoints.
    CantorApprox {
        a: f64,
        b: f64,
        ratio: f64,
        p_left: f64,
        depth: u32,
    },
    /// Positive combination of component measures.
    Mixture(Vec<(f64, Measure)>),
}

fn ensure_finite(name: &str, xs: &[f64]) -> Result<()> {
    for (i, x) in xs.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::InvalidMeasure(format!("{name}[{i}] is not finite")));
        }
    }
    Ok(())
}

impl Measure {
    /// Atomic measure from raw points and weights. Points are sorted and
    /// near-duplicates (closer than `MERGE_REL_TOL` of the hull width) are
    /// merged with their weights summed.
    pub fn atomic(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let atoms = Atoms::from_raw(points, weights)?;
        Ok(Measure::Atomic {
            points: atoms.points,
            weights: atoms.weights,
        })
    }

    /// Like [`Measure::atomic`] but rejects inputs whose points would merge;
    /// used when per-point data (coupling samples) must stay aligned.
    pub fn atomic_strict(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let n = points.len();
        let m = Self::atomic(points, weights)?;
        if m.atomize()?.len() != n {
            return Err(Error::InvalidMeasure(
                "points closer than the merge tolerance; supply distinct points".into(),
            ));
        }
        Ok(m)
    }

    /// Single unit atom.
    pub fn dirac(point: f64) -> Self {
        Measure::Atomic {
            points: vec![point],
            weights: vec![1.0],
        }
    }

    /// Two-branch self-similar measure on [a, b].
    pub fn cantor(a: f64, b: f64, ratio: f64, p_left: f64, depth: u32) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidMeasure(format!(
                "cantor interval [{a}, {b}] is not a finite interval with a < b"
            )));
        }
        if !(ratio > 0.0 && ratio < 0.5) {
            return Err(Error::InvalidMeasure(format!(
                "cantor contraction ratio must lie in (0, 1/2), got {ratio}"
            )));
        }
        if !(p_left > 0.0 && p_left < 1.0) {
            return Err(Error::InvalidMeasure(format!(
                "cantor branch weight must lie in (0, 1), got {p_left}"
            )));
        }
        if depth > MAX_CANTOR_DEPTH {
            return Err(Error::InvalidMeasure(format!(
                "cantor depth {depth} exceeds the cap {MAX_CANTOR_DEPTH}"
            )));
        }
        Ok(Measure::CantorApprox {
            a,
            b,
            ratio,
            p_left,
            depth,
        })
    }

    /// Uniform probability density on [a, b].
    pub fn uniform_density(a: f64, b: f64, panels: u32, nodes_per_panel: u32) -> Result<Self> {
        let m = Measure::QuadratureDensity {
            a,
            b,
            density: DensitySpec::Uniform {
                panels,
                nodes_per_panel,
            },
        };
        m.validate_quadrature()?;
        Ok(m)
    }

    /// Polynomial density on [a, b]; rejected unless strictly positive at
    /// every quadrature node.
    pub fn poly_density(
        a: f64,
        b: f64,
        coeffs: Vec<f64>,
        panels: u32,
        nodes_per_panel: u32,
    ) -> Result<Self> {
        let m = Measure::QuadratureDensity {
            a,
            b,
            density: DensitySpec::Poly {
                coeffs,
                panels,
                nodes_per_panel,
            },
        };
        m.validate_quadrature()?;
        Ok(m)
    }

    /// Density measure from raw quadrature data.
    pub fn quadrature_samples(
        a: f64,
        b: f64,
        nodes: Vec<f64>,
        weights: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let m = Measure::QuadratureDensity {
            a,
            b,
            density: DensitySpec::Samples {
                nodes,
                weights,
                values,
            },
        };
        m.validate_quadrature()?;
        Ok(m)
    }

    /// Positive combination of measures.
    pub fn mixture(parts: Vec<(f64, Measure)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidMeasure("mixture has no components".into()));
        }
        for (i, (c, _)) in parts.iter().enumerate() {
            if !(c.is_finite() && *c > 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "mixture coefficient [{i}] must be finite and > 0, got {c}"
                )));
            }
        }
        Ok(Measure::Mixture(parts))
    }

    fn validate_quadrature(&self) -> Result<()> {
        if let Measure::QuadratureDensity { a, b, density } = self {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::InvalidMeasure(format!(
                    "quadrature interval [{a}, {b}] is not a finite interval with a < b"
                )));
            }
            match density {
                DensitySpec::Uniform {
                    panels,
                    nodes_per_panel,
                }
                | DensitySpec::Poly {
                    panels,
                    nodes_per_panel,
                    ..
                } => {
                    if *panels == 0 || *nodes_per_panel < 2 {
                        return Err(Error::InvalidMeasure(
                            "need at least 1 panel and 2 nodes per panel".into(),
                        ));
                    }
                    let total = *panels as usize * *nodes_per_panel as usize;
                    if total > MAX_QUADRATURE_NODES {
                        return Err(Error::InvalidMeasure(format!(
                            "{total} quadrature nodes exceeds the cap {MAX_QUADRATURE_NODES}"
                        )));
                    }
                    // Positivity of a polynomial density is checked on the
                    // actual nodes by materializing once.
                    self.atomize()?;
                }
                DensitySpec::Samples {
                    nodes,
                    weights,
                    values,
                } => {
                    if nodes.is_empty() {
                        return Err(Error::InvalidMeasure("no quadrature nodes".into()));
                    }
                    if nodes.len() != weights.len() || nodes.len() != values.len() {
                        return Err(Error::InvalidMeasure(
                            "nodes, weights and density values must have equal length".into(),
                        ));
                    }
                    ensure_finite("nodes", nodes)?;
                    ensure_finite("weights", weights)?;
                    ensure_finite("values", values)?;
                    for i in 1..nodes.len() {
                        if nodes[i] <= nodes[i - 1] {
                            return Err(Error::InvalidMeasure(format!(
                                "nodes must be strictly increasing (violated at index {i})"
                            )));
                        }
                    }
                    if nodes[0] < *a || *nodes.last().unwrap() > *b {
                        return Err(Error::InvalidMeasure(
                            "nodes must lie inside the stated interval".into(),
                        ));
                    }
                    for i in 0..weights.len() {
                        if weights[i] <= 0.0 || values[i] <= 0.0 {
                            return Err(Error::InvalidMeasure(format!(
                                "weights[{i}] and values[{i}] must be > 0"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Reduce to the working atomic form.
    pub fn atomize(&self) -> Result<Atoms> {
        match self {
            Measure::Atomic { points, weights } => {
                // Constructed via `atomic`, already sorted/merged; raw enum
                // literals still go through the full validation.
                Atoms::from_raw(points.clone(), weights.clone())
            }
            Measure::QuadratureDensity { a, b, density } => quadrature_atoms(*a, *b, density),
            Measure::CantorApprox {
                a,
                b,
                ratio,
                p_left,
                depth,
            } => Ok(cantor_atoms(*a, *b, *ratio, *p_left, *depth)),
            Measure::Mixture(parts) => {
                let mut points = Vec::new();
                let mut weights = Vec::new();
                for (c, m) in parts {
                    let atoms = m.atomize()?;
                    points.extend_from_slice(atoms.points());
                    weights.extend(atoms.weights().iter().map(|w| c * w));
                }
                Atoms::from_raw(points, weights)
            }
        }
    }

    /// Total mass of the materialized measure.
    pub fn total_mass(&self) -> Result<f64> {
        match self {
            Measure::Mixture(parts) => {
                let mut s = 0.0;
                for (c, m) in parts {
                    s += c * m.total_mass()?;
                }
                Ok(s)
            }
            _ => Ok(self.atomize()?.mass()),
        }
    }

    /// Tight [min, max] hull over the materialized atoms.
    pub fn support_hull(&self) -> Result<(f64, f64)> {
        match self {
            Measure::Atomic { points, .. } => {
                if points.is_empty() {
                    return Err(Error::EmptyModel);
                }
                Ok((points[0], *points.last().unwrap()))
            }
            Measure::CantorApprox {
                a,
                b,
                ratio,
                depth,
                ..
            } => {
                // Reproduces the exact leftmost/rightmost midpoint arithmetic
                // of the materialization, without enumerating 2^depth atoms.
                let mut right = *a;
                let mut len = b - a;
                let mut rlen = b - a;
                for _ in 0..*depth {
                    len *= ratio;
                    let shrunk = rlen * ratio;
                    right = right + rlen - shrunk;
                    rlen = shrunk;
                }
                Ok((a + len / 2.0, right + rlen / 2.0))
            }
            Measure::Mixture(parts) => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for (_, m) in parts {
                    let (l, h) = m.support_hull()?;
                    lo = lo.min(l);
                    hi = hi.max(h);
                }
                Ok((lo, hi))
            }
            Measure::QuadratureDensity { .. } => {
                let atoms = self.atomize()?;
                Ok(atoms.hull())
            }
        }
    }

    /// Re-materialize a Cantor-type measure at a different depth. Total mass
    /// is preserved exactly (branch weights are unchanged).
    pub fn cantor_refine(&self, new_depth: u32) -> Result<Measure> {
        match self {
            Measure::CantorApprox {
                a, b, ratio, p_left, ..
            } => Measure::cantor(*a, *b, *ratio, *p_left, new_depth),
            other => Err(Error::NotRefinable(format!(
                "cantor_refine needs a CantorApprox, got {}",
                other.kind_name()
            ))),
        }
    }

    /// Re-materialize at refinement level `depth`: Cantor measures use it as
    /// their subdivision depth, built-in densities use 2^depth panels, and
    /// mixtures refine every refinable component.
    pub fn at_depth(&self, depth: u32) -> Result<Measure> {
        match self {
            Measure::CantorApprox { .. } => self.cantor_refine(depth),
            Measure::QuadratureDensity { a, b, density } => match density {
                DensitySpec::Uniform {
                    nodes_per_panel, ..
                } => Measure::uniform_density(*a, *b, 1 << depth.min(20), *nodes_per_panel),
                DensitySpec::Poly {
                    coeffs,
                    nodes_per_panel,
                    ..
                } => Measure::poly_density(*a, *b, coeffs.clone(), 1 << depth.min(20), *nodes_per_panel),
                DensitySpec::Samples { .. } => Err(Error::NotRefinable(
                    "raw quadrature samples carry no density function".into(),
                )),
            },
            Measure::Mixture(parts) => {
                if !self.is_refinable() {
                    return Err(Error::NotRefinable(
                        "mixture has no refinable component".into(),
                    ));
                }
                let mut out = Vec::with_capacity(parts.len());
                for (c, m) in parts {
                    let refined = if m.is_refinable() { m.at_depth(depth)? } else { m.clone() };
                    out.push((*c, refined));
                }
                Ok(Measure::Mixture(out))
            }
            Measure::Atomic { .. } => Err(Error::NotRefinable(
                "atomic measure has no refinement parameter".into(),
            )),
        }
    }

    /// Whether [`Measure::at_depth`] is available.
    pub fn is_refinable(&self) -> bool {
        match self {
            Measure::CantorApprox { .. } => true,
            Measure::QuadratureDensity { density, .. } => {
                !matches!(density, DensitySpec::Samples { .. })
            }
            Measure::Mixture(parts) => parts.iter().any(|(_, m)| m.is_refinable()),
            Measure::Atomic { .. } => false,
        }
    }

    /// Current refinement level, if any (maximum over mixture components).
    pub fn current_depth(&self) -> Option<u32> {
        match self {
            Measure::CantorApprox { depth, .. } => Some(*depth),
            Measure::QuadratureDensity { density, .. } => match density {
                DensitySpec::Uniform { panels, .. } | DensitySpec::Poly { panels, .. } => {
                    Some(panels.ilog2())
                }
                DensitySpec::Samples { .. } => None,
            },
            Measure::Mixture(parts) => parts.iter().filter_map(|(_, m)| m.current_depth()).max(),
            Measure::Atomic { .. } => None,
        }
    }

    /// True when any component is a quadrature discretization of a density
    /// (these carry an atomization error floor the classifier must respect).
    pub fn has_quadrature(&self) -> bool {
        match self {
            Measure::QuadratureDensity { .. } => true,
            Measure::Mixture(parts) => parts.iter().any(|(_, m)| m.has_quadrature()),
            _ => false,
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Measure::Atomic { .. } => "Atomic",
            Measure::QuadratureDensity { .. } => "QuadratureDensity",
            Measure::CantorApprox { .. } => "CantorApprox",
            Measure::Mixture(_) => "Mixture",
        }
    }
}

fn cantor_atoms(a: f64, b: f64, ratio: f64, p_left: f64, depth: u32) -> Atoms {
    // (left endpoint, length, weight) triples, kept in increasing order.
    let mut cells = vec![(a, b - a, 1.0_f64)];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(cells.len() * 2);
        for (x, len, w) in cells {
            let clen = len * ratio;
            next.push((x, clen, w * p_left));
            next.push((x + len - clen, clen, w * (1.0 - p_left)));
        }
        cells = next;
    }
    let points = cells.iter().map(|(x, len, _)| x + len / 2.0).collect();
    let weights = cells.iter().map(|(_, _, w)| *w).collect();
    // ratio < 1/2 keeps subintervals disjoint, so points are strictly
    // increasing and no merging can occur.
    Atoms { points, weights }
}

fn quadrature_atoms(a: f64, b: f64, density: &DensitySpec) -> Result<Atoms> {
    match density {
        DensitySpec::Samples {
            nodes,
            weights,
            values,
        } => {
            let w = weights
                .iter()
                .zip(values)
                .map(|(w, v)| w * v)
                .collect::<Vec<_>>();
            Ok(Atoms {
                points: nodes.clone(),
                weights: w,
            })
        }
        DensitySpec::Uniform {
            panels,
            nodes_per_panel,
        } => materialize_panels(a, b, *panels, *nodes_per_panel, |_| 1.0 / (b - a)),
        DensitySpec::Poly {
            coeffs,
            panels,
            nodes_per_panel,
        } => materialize_panels(a, b, *panels, *nodes_per_panel, |x| horner(coeffs, x)),
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn materialize_panels(
    a: f64,
    b: f64,
    panels: u32,
    nodes_per_panel: u32,
    rho: impl Fn(f64) -> f64,
) -> Result<Atoms> {
    let (t, gw) = gauss_legendre(nodes_per_panel as usize);
    let h = (b - a) / panels as f64;
    let mut points = Vec::with_capacity(panels as usize * t.len());
    let mut weights = Vec::with_capacity(points.capacity());
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (tk, wk) in t.iter().zip(&gw) {
            let x = lo + h * (tk + 1.0) / 2.0;
            let d = rho(x);
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "density must be finite and > 0 at every node; got {d} at mu = {x}"
                )));
            }
            points.push(x);
            weights.push(wk * h / 2.0 * d);
        }
    }
    // Panel-local GL nodes never collide across panel boundaries.
    Ok(Atoms { points, weights })
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence with the usual cosine initial guess.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' at x via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            dp = n as f64 * (x * pn - p0) / (x * x - 1.0);
            if n == 1 {
                dp = 1.0;
            }
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        // Central node is exactly zero; recompute its weight cleanly.
        nodes[n / 2] = 0.0;
        let mut p0 = 1.0;
        let mut p1 = 0.0;
        for k in 2..=n {
            let kf = k as f64;
            let p2 = (-(kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (0.0 - p0) / (0.0 - 1.0);
        weights[n / 2] = 2.0 / (dp * dp);
    }
    (nodes, weights)
}

/// The working representation: sorted, merged, strictly positive atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Atoms {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Atoms {
    /// Validate, sort and merge raw (point, weight) data.
    pub fn from_raw(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} points vs {} weights",
                points.len(),
                weights.len()
            )));
        }
        ensure_finite("points", &points)?;
        ensure_finite("weights", &weights)?;
        for (i, w) in weights.iter().enumerate() {
            if *w <= 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "weights[{i}] must be > 0, got {w}"
                )));
            }
        }
        let mut idx: Vec<usize> = (0..points.len()).collect();
        idx.sort_by(|&i, &j| points[i].total_cmp(&points[j]));
        let sorted_p: Vec<f64> = idx.iter().map(|&i| points[i]).collect();
        let sorted_w: Vec<f64> = idx.iter().map(|&i| weights[i]).collect();

        let width = sorted_p.last().unwrap() - sorted_p[0];
        let tol = MERGE_REL_TOL * width;
        let mut out_p: Vec<f64> = Vec::with_capacity(sorted_p.len());
        let mut out_w: Vec<f64> = Vec::with_capacity(sorted_w.len());
        for (p, w) in sorted_p.into_iter().zip(sorted_w) {
            match out_p.last() {
                Some(&last) if p - last <= tol => {
                    // Merge: weights summed, position mass-averaged.
                    let lw = *out_w.last().unwrap();
                    let np = (last * lw + p * w) / (lw + w);
                    *out_p.last_mut().unwrap() = np;
                    *out_w.last_mut().unwrap() = lw + w;
                }
                _ => {
                    out_p.push(p);
                    out_w.push(w);
                }
            }
        }
        Ok(Atoms {
            points: out_p,
            weights: out_w,
        })
    }

    /// Atoms already known to be sorted, distinct and positive
    /// (e.g. a weighted subset of an existing atom list).
    pub(crate) fn from_sorted_unchecked(points: Vec<f64>, weights: Vec<f64>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(weights.iter().all(|w| *w > 0.0));
        Atoms { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Tight support hull (first and last atom).
    pub fn hull(&self) -> (f64, f64) {
        (self.points[0], *self.points.last().unwrap())
    }

    pub fn hull_width(&self) -> f64 {
        let (lo, hi) = self.hull();
        hi - lo
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Absolute tolerance under which a real point counts as "on an atom".
    pub fn merge_tol(&self) -> f64 {
        MERGE_REL_TOL * self.hull_width()
    }

    /// Index and distance of the atom nearest to `x`.
    pub fn nearest(&self, x: f64) -> (usize, f64) {
        let i = self.points.partition_point(|p| *p < x);
        let mut best = (0, f64::INFINITY);
        if i < self.points.len() {
            best = (i, (self.points[i] - x).abs());
        }
        if i > 0 {
            let d = (x - self.points[i - 1]).abs();
            if d < best.1 {
                best = (i - 1, d);
            }
        }
        best
    }

    /// Index of the atom lying on `x` within the merge tolerance, if any.
    pub fn atom_at(&self, x: f64) -> Option<usize> {
        let (i, d) = self.nearest(x);
        (d <= self.merge_tol()).then_some(i)
    }
}
