//! Linear subspaces, angles between them, hyperplane fields, and the
//! cubical stratification of `I^k` inside `I^m` with its almost-tangent /
//! transverse face classification.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::polyjet::expr::Expr;

const ORTHO_TOL: f64 = 1e-12;

/// A linear subspace of `R^m` held as an orthonormal column basis.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient: usize,
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Orthonormalize the given spanning vectors (columns). Rejects rank
    /// deficiency.
    pub fn from_spans(ambient: usize, spans: &[Vec<f64>]) -> Result<Self> {
        if spans.is_empty() || spans.len() > ambient {
            return Err(Error::InvalidArgument(format!(
                "subspace dimension must lie in 1..={ambient}"
            )));
        }
        for s in spans {
            if s.len() != ambient {
                return Err(Error::ShapeMismatch("span vector dimension".into()));
            }
        }
        let a = DMatrix::from_fn(ambient, spans.len(), |i, j| spans[j][i]);
        let qr = a.qr();
        let q = qr.q();
        let r = qr.r();
        for d in 0..spans.len() {
            if r[(d, d)].abs() < 1e-10 {
                return Err(Error::InvalidArgument(
                    "spanning vectors are linearly dependent".into(),
                ));
            }
        }
        let basis = q.columns(0, spans.len()).into_owned();
        Ok(Subspace { ambient, basis })
    }

    /// Coordinate subspace spanned by the listed axes.
    pub fn coordinate(ambient: usize, axes: &[usize]) -> Result<Self> {
        let spans: Vec<Vec<f64>> = axes
            .iter()
            .map(|&a| {
                let mut e = vec![0.0; ambient];
                e[a] = 1.0;
                e
            })
            .collect();
        Self::from_spans(ambient, &spans)
    }

    /// The hyperplane `u^perp` for a (not necessarily unit) co-normal `u`.
    pub fn hyperplane(conormal: &[f64]) -> Result<Self> {
        let m = conormal.len();
        let norm = conormal.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::InvalidArgument("zero co-normal".into()));
        }
        let u: Vec<f64> = conormal.iter().map(|v| v / norm).collect();
        // Complete u to an orthonormal basis and drop u itself.
        let mut cols = vec![u.clone()];
        for axis in 0..m {
            let mut e = vec![0.0; m];
            e[axis] = 1.0;
            cols.push(e);
        }
        let a = DMatrix::from_fn(m, cols.len(), |i, j| cols[j][i]);
        let qr = a.qr();
        let q = qr.q();
        let basis = q.columns(1, m - 1).into_owned();
        Ok(Subspace { ambient: m, basis })
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn check_orthonormal(&self) -> Result<()> {
        let g = self.basis.transpose() * &self.basis;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                if (g[(i, j)] - want).abs() > ORTHO_TOL * 10.0 {
                    return Err(Error::InvalidArgument(
                        "basis not orthonormal to tolerance".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let x = DMatrix::from_column_slice(self.ambient, 1, v);
        let coeffs = self.basis.transpose() * &x;
        let proj = &self.basis * coeffs;
        proj.column(0).iter().cloned().collect()
    }
}

/// The angle between two subspaces with `dim V <= dim W`: the largest
/// principal angle, computed from the singular values of the basis
/// inner-product matrix. Callers with `dim V > dim W` must swap.
pub fn subspace_angle(v: &Subspace, w: &Subspace) -> Result<f64> {
    if v.ambient != w.ambient {
        return Err(Error::ShapeMismatch(
            "subspaces live in different ambient spaces".into(),
        ));
    }
    if v.dim() > w.dim() {
        return Err(Error::InvalidArgument(
            "subspace_angle requires dim V <= dim W; swap the arguments".into(),
        ));
    }
    let product = v.basis.transpose() * &w.basis;
    let svd = product.svd(false, false);
    // dim V singular values; the smallest cosine gives the largest angle.
    let min_sv = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
        .clamp(0.0, 1.0);
    if min_sv * min_sv < 0.5 {
        return Ok(min_sv.acos());
    }
    // Small angles: acos near 1 loses half the float precision, so switch
    // to the sine of the angle via the projection residual.
    let residual = &v.basis - &w.basis * (w.basis.transpose() * &v.basis);
    let s = residual
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0f64, f64::max)
        .clamp(0.0, 1.0);
    Ok(s.asin())
}

/// A field of hyperplanes `tau_x = u_x^perp`, encoded by a co-normal
/// generator that is normalized on evaluation.
#[derive(Debug, Clone)]
pub enum Conormal {
    Constant(Vec<f64>),
    Field(Vec<Expr<f64>>),
}

#[derive(Debug, Clone)]
pub struct HyperplaneField {
    pub conormal: Conormal,
    pub ambient: usize,
}

impl HyperplaneField {
    pub fn constant(u: Vec<f64>) -> Result<Self> {
        let ambient = u.len();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::InvalidArgument("zero co-normal".into()));
        }
        Ok(HyperplaneField {
            conormal: Conormal::Constant(u),
            ambient,
        })
    }

    pub fn varying(components: Vec<Expr<f64>>, ambient: usize) -> Self {
        HyperplaneField {
            conormal: Conormal::Field(components),
            ambient,
        }
    }

    /// The unit co-normal at `x`.
    pub fn unit_conormal(&self, x: &[f64]) -> Result<Vec<f64>> {
        let raw = match &self.conormal {
            Conormal::Constant(u) => u.clone(),
            Conormal::Field(f) => f
                .iter()
                .map(|e| e.eval(x))
                .collect::<Result<Vec<f64>>>()?,
        };
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-10 {
            return Err(Error::Domain(format!(
                "co-normal vanishes at {x:?}"
            )));
        }
        Ok(raw.iter().map(|v| v / norm).collect())
    }

    pub fn tangent_space(&self, x: &[f64]) -> Result<Subspace> {
        Subspace::hyperplane(&self.unit_conormal(x)?)
    }

    /// `angle(tau_x, tau_y)` via the unit co-normals (equal for hyperplanes).
    pub fn angle_between_points(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let ux = self.unit_conormal(x)?;
        let uy = self.unit_conormal(y)?;
        let dot: f64 = ux.iter().zip(&uy).map(|(a, b)| a * b).sum();
        Ok(dot.abs().clamp(0.0, 1.0).acos())
    }

    /// `angle(tau, I^k)`: max over sampled `x` in `I^k x 0` of the angle
    /// between the coordinate `k`-space and `tau_x`.
    pub fn angle_to_skeleton(&self, k: usize, samples_per_axis: usize) -> Result<f64> {
        let m = self.ambient;
        let rk = Subspace::coordinate(m, &(0..k).collect::<Vec<_>>())?;
        let grid = GridSpec::cubic(k, samples_per_axis.max(2));
        let lo = vec![-1.0; k];
        let hi = vec![1.0; k];
        let mut worst: f64 = 0.0;
        for p in grid.points(&lo, &hi) {
            let mut x = vec![0.0; m];
            x[..k].copy_from_slice(&p);
            let tau = self.tangent_space(&x)?;
            worst = worst.max(subspace_angle(&rk, &tau)?);
        }
        Ok(worst)
    }
}

/// One face of the cubical stratification of `I^k`: the free axes span the
/// face, the anchor fixes the lattice position of the remaining axes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Face {
    pub dim: usize,
    /// Lattice coordinates, in units of `1/N`; free axes store the cell's
    /// lower corner.
    pub anchor: Vec<i64>,
    /// The axes (subset of `0..k`) along which the face extends.
    pub axes: Vec<usize>,
    #[serde(rename = "N")]
    pub n_sub: i64,
}

impl Face {
    /// Corner of the face in ambient coordinates (`I^k` embedded in `I^m`).
    pub fn corner(&self, m: usize) -> Vec<f64> {
        let mut x = vec![0.0; m];
        for (axis, &a) in self.anchor.iter().enumerate() {
            x[axis] = a as f64 / self.n_sub as f64;
        }
        x
    }

    /// Uniform samples of the face in ambient coordinates.
    pub fn samples(&self, m: usize, per_axis: usize) -> Vec<Vec<f64>> {
        let corner = self.corner(m);
        if self.dim == 0 {
            return vec![corner];
        }
        let h = 1.0 / self.n_sub as f64;
        let grid = GridSpec::cubic(self.dim, per_axis.max(2));
        let lo = vec![0.0; self.dim];
        let hi = vec![1.0; self.dim];
        grid.points(&lo, &hi)
            .map(|t| {
                let mut x = corner.clone();
                for (j, &axis) in self.axes.iter().enumerate() {
                    x[axis] += t[j] * h;
                }
                x
            })
            .collect()
    }

    /// Tangent space of the face, or `None` for vertices.
    pub fn tangent(&self, m: usize) -> Option<Subspace> {
        if self.dim == 0 {
            None
        } else {
            Some(Subspace::coordinate(m, &self.axes).expect("coordinate axes"))
        }
    }
}

/// The cubical stratification of `I^k subset I^m` with subdivision `N`:
/// all `j`-dimensional faces of the cubes `Q_N(j_1, ..., j_k)`,
/// `-N <= j_i < N`, for `j = 0..=k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubeComplex {
    pub n_sub: i64,
    pub k: usize,
    pub ambient: usize,
    pub faces: Vec<Face>,
}

impl CubeComplex {
    pub fn new(n_sub: i64, k: usize, ambient: usize) -> Result<Self> {
        if n_sub < 1 || k == 0 || k >= ambient {
            return Err(Error::InvalidArgument(
                "cube complex needs N >= 1 and 0 < k < m".into(),
            ));
        }
        let mut faces = Vec::new();
        // Every subset of axes; free axes take cell positions (-N..N) and
        // fixed axes vertex positions (-N..=N).
        for mask in 0u32..(1 << k) {
            let axes: Vec<usize> = (0..k).filter(|&a| mask & (1 << a) != 0).collect();
            let uppers: Vec<i64> = (0..k)
                .map(|a| if axes.contains(&a) { n_sub - 1 } else { n_sub })
                .collect();
            let mut anchor = vec![-n_sub; k];
            'odometer: loop {
                faces.push(Face {
                    dim: axes.len(),
                    anchor: anchor.clone(),
                    axes: axes.clone(),
                    n_sub,
                });
                for axis in (0..k).rev() {
                    if anchor[axis] < uppers[axis] {
                        anchor[axis] += 1;
                        continue 'odometer;
                    }
                    anchor[axis] = -n_sub;
                }
                break;
            }
        }
        Ok(CubeComplex {
            n_sub,
            k,
            ambient,
            faces,
        })
    }
}

/// Classification of one face against the hyperplane field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FaceLabel {
    pub face: Face,
    /// Max sampled angle between the face tangent and `tau`.
    pub angle: f64,
    /// Set when the sampled angle lies in `(lambda/2, lambda]`; the face is
    /// still assigned to the almost-tangent part.
    pub borderline: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FacePartition {
    pub almost_tangent: Vec<FaceLabel>,
    pub transverse: Vec<FaceLabel>,
    pub lambda: f64,
}

/// Partition the faces of `K` into almost-tangent (`angle <= lambda`) and
/// transverse. Rejects when the field varies by more than `lambda/2`
/// across some cell neighborhood, mirroring the subdivision requirement.
pub fn classify_faces(
    complex: &CubeComplex,
    tau: &HyperplaneField,
    lambda: f64,
    grid: &GridSpec,
) -> Result<FacePartition> {
    if lambda <= 0.0 {
        return Err(Error::InvalidArgument("lambda must be positive".into()));
    }
    let m = complex.ambient;
    let per_axis = grid.counts.iter().copied().max().unwrap_or(3).max(3);

    // Variation check per top-dimensional cell: sample corners + center of
    // an Op(Q) margin and compare pairwise.
    let top_faces: Vec<&Face> = complex
        .faces
        .iter()
        .filter(|f| f.dim == complex.k)
        .collect();
    let margin = 0.5 / complex.n_sub as f64;
    for face in &top_faces {
        let mut pts = face.samples(m, 2);
        // Inflate towards Op(Q).
        let center: Vec<f64> = {
            let c = face.corner(m);
            let h = 1.0 / complex.n_sub as f64;
            let mut x = c;
            for &axis in &face.axes {
                x[axis] += 0.5 * h;
            }
            x
        };
        for delta in [-margin, margin] {
            let mut x = center.clone();
            x[complex.k.min(m - 1)] += delta;
            for c in x.iter_mut() {
                *c = c.clamp(-1.0, 1.0);
            }
            pts.push(x);
        }
        pts.push(center);
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let a = tau.angle_between_points(&pts[i], &pts[j])?;
                if a >= lambda / 2.0 {
                    return Err(Error::FieldVariation {
                        cube: face.anchor.clone(),
                        angle: a,
                        bound: lambda / 2.0,
                    });
                }
            }
        }
    }

    let mut almost = Vec::new();
    let mut transverse = Vec::new();
    for face in &complex.faces {
        let angle = match face.tangent(m) {
            None => 0.0, // vertices are tangent to every field
            Some(tf) => {
                let mut worst: f64 = 0.0;
                for x in face.samples(m, per_axis) {
                    let t = tau.tangent_space(&x)?;
                    worst = worst.max(subspace_angle(&tf, &t)?);
                }
                worst
            }
        };
        let label = FaceLabel {
            face: face.clone(),
            angle,
            borderline: angle > lambda / 2.0 && angle <= lambda,
        };
        if angle <= lambda {
            almost.push(label);
        } else {
            transverse.push(label);
        }
    }
    Ok(FacePartition {
        almost_tangent: almost,
        transverse,
        lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_of_identical_hyperplanes_is_zero() {
        let h = Subspace::hyperplane(&[0.3, -0.4, 0.5]).unwrap();
        assert!(subspace_angle(&h, &h).unwrap() < 1e-10);
    }

    #[test]
    fn angle_of_tilted_hyperplanes_in_r2() {
        // Normals e2 and (e1+e2)/sqrt(2): angle pi/4.
        let a = Subspace::hyperplane(&[0.0, 1.0]).unwrap();
        let b = Subspace::hyperplane(&[1.0, 1.0]).unwrap();
        let angle = subspace_angle(&a, &b).unwrap();
        assert!((angle - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn line_against_plane_in_r3() {
        // V = span(e1), W = ker(dx1 + dx2): angle pi/4.
        let v = Subspace::coordinate(3, &[0]).unwrap();
        let w = Subspace::hyperplane(&[1.0, 1.0, 0.0]).unwrap();
        let angle = subspace_angle(&v, &w).unwrap();
        assert!((angle - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        // Arguments in the wrong order are rejected.
        assert!(subspace_angle(&w, &v).is_err());
    }

    #[test]
    fn angle_zero_iff_contained() {
        let v = Subspace::coordinate(4, &[1]).unwrap();
        let w = Subspace::coordinate(4, &[0, 1, 3]).unwrap();
        assert!(subspace_angle(&v, &w).unwrap() < 1e-10);
        let w2 = Subspace::coordinate(4, &[0, 2, 3]).unwrap();
        assert!(subspace_angle(&v, &w2).unwrap() > 1.0);
    }

    #[test]
    fn monotone_under_enlarging() {
        let v = Subspace::from_spans(3, &[vec![1.0, 0.4, 0.2]]).unwrap();
        let w_small = Subspace::coordinate(3, &[0]).unwrap();
        let w_big = Subspace::coordinate(3, &[0, 1]).unwrap();
        let a_small = subspace_angle(&v, &w_small).unwrap();
        let a_big = subspace_angle(&v, &w_big).unwrap();
        assert!(a_big <= a_small + 1e-12);
    }

    #[test]
    fn complex_counts_faces() {
        // For k=1, N=1: cells [-1,0], [0,1]; vertices -1, 0, 1.
        let c = CubeComplex::new(1, 1, 2).unwrap();
        let edges = c.faces.iter().filter(|f| f.dim == 1).count();
        let verts = c.faces.iter().filter(|f| f.dim == 0).count();
        assert_eq!(edges, 2);
        assert_eq!(verts, 3);
    }

    #[test]
    fn constant_field_tangent_to_skeleton() {
        // tau = ker dx_m contains R^k x 0 for k < m: every face almost
        // tangent at tiny lambda.
        let c = CubeComplex::new(2, 1, 3).unwrap();
        let tau = HyperplaneField::constant(vec![0.0, 0.0, 1.0]).unwrap();
        let part = classify_faces(&c, &tau, 1e-6, &GridSpec::cubic(1, 3)).unwrap();
        assert!(part.transverse.is_empty());
        assert_eq!(part.almost_tangent.len(), c.faces.len());
    }

    #[test]
    fn constant_field_transverse_to_first_axis() {
        // tau = ker dx1: every edge along x1 is transverse (angle pi/2).
        let c = CubeComplex::new(2, 1, 3).unwrap();
        let tau = HyperplaneField::constant(vec![1.0, 0.0, 0.0]).unwrap();
        let part = classify_faces(&c, &tau, 0.3, &GridSpec::cubic(1, 3)).unwrap();
        for label in &part.transverse {
            assert_eq!(label.face.dim, 1);
            assert!((label.angle - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        }
        // Vertices stay tangent.
        assert!(part
            .almost_tangent
            .iter()
            .all(|l| l.face.dim == 0));
    }
}
