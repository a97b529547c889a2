//! Half-space and polytope representations in H-form, with the membership
//! and containment queries every other module leans on.

use serde::{Deserialize, Serialize};

use crate::linalg::dot;
use crate::opt::{ConstraintSense, MilpModel, SolveStatus, SolverConfig};
use crate::{Error, Result, EPS_FEAS};

/// Direction of a half-space inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    /// `normal . p >= offset`
    #[serde(rename = "GE")]
    Ge,
    /// `normal . p <= offset`
    #[serde(rename = "LE")]
    Le,
}

/// One half-space. The sense is stored explicitly; nothing here flips signs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub sense: Sense,
}

impl HalfSpace {
    pub fn ge(normal: Vec<f64>, offset: f64) -> Self {
        Self { normal, offset, sense: Sense::Ge }
    }

    pub fn le(normal: Vec<f64>, offset: f64) -> Self {
        Self { normal, offset, sense: Sense::Le }
    }

    /// Satisfied within the shared feasibility tolerance.
    pub fn satisfied(&self, p: &[f64]) -> bool {
        let v = dot(&self.normal, p);
        match self.sense {
            Sense::Ge => v >= self.offset - EPS_FEAS,
            Sense::Le => v <= self.offset + EPS_FEAS,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.normal.len() != dim {
            return Err(Error::Dimension(format!(
                "half-space normal has length {}, polytope dim is {dim}",
                self.normal.len()
            )));
        }
        if !self.offset.is_finite() || self.normal.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema("half-space entries must be finite".into()));
        }
        if self.normal.iter().all(|&v| v == 0.0) {
            return Err(Error::Schema("half-space normal must be nonzero".into()));
        }
        Ok(())
    }
}

/// Convex polytope as an intersection of half-spaces.
///
/// An empty half-space list is the full space; the dedicated `empty` marker is
/// the empty set (a facet problem with no feasible predecessor produces it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    pub dim: usize,
    pub halfspaces: Vec<HalfSpace>,
    #[serde(default)]
    pub empty: bool,
}

/// Axis-aligned bounds, used for workspaces and LP boxes. Deserialization
/// enforces the same shape rules as [`IntervalBox::new`], so hostile files
/// cannot smuggle in ragged or inverted boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntervalBox")]
pub struct IntervalBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Deserialize)]
struct RawIntervalBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawIntervalBox> for IntervalBox {
    type Error = Error;

    fn try_from(raw: RawIntervalBox) -> Result<Self> {
        if raw.lower.iter().chain(&raw.upper).any(|v| v.is_nan()) {
            return Err(Error::Schema("box bounds must not be NaN".into()));
        }
        IntervalBox::new(raw.lower, raw.upper)
    }
}

impl IntervalBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension("box lower/upper lengths differ".into()));
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail this check
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::Schema("box requires lower <= upper".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn is_finite(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&x, (&l, &u))| x >= l - EPS_FEAS && x <= u + EPS_FEAS)
    }

    /// Center point, used as a seed for sampling.
    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }
}

impl Polytope {
    pub fn full(dim: usize) -> Self {
        Self { dim, halfspaces: Vec::new(), empty: false }
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, halfspaces: Vec::new(), empty: true }
    }

    pub fn from_halfspaces(dim: usize, halfspaces: Vec<HalfSpace>) -> Result<Self> {
        let p = Self { dim, halfspaces, empty: false };
        p.validate()?;
        Ok(p)
    }

    /// Axis-aligned box `[lower, upper]` as LE/GE rows.
    pub fn from_box(bounds: &IntervalBox) -> Result<Self> {
        if !bounds.is_finite() {
            return Err(Error::Schema("box polytope requires finite bounds".into()));
        }
        let dim = bounds.dim();
        let mut hs = Vec::with_capacity(2 * dim);
        for d in 0..dim {
            let mut n = vec![0.0; dim];
            n[d] = 1.0;
            hs.push(HalfSpace::ge(n.clone(), bounds.lower[d]));
            hs.push(HalfSpace::le(n, bounds.upper[d]));
        }
        Self::from_halfspaces(dim, hs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.empty && !self.halfspaces.is_empty() {
            return Err(Error::Schema(
                "empty polytope must carry no half-spaces".into(),
            ));
        }
        for h in &self.halfspaces {
            h.validate(self.dim)?;
        }
        Ok(())
    }

    pub fn is_empty_marker(&self) -> bool {
        self.empty
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let p: Polytope =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("polytope: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("polytope serializes")
    }
}

/// `n_f` unit facet directions in the plane at angles `2*pi*m/n_f`,
/// counter-clockwise from angle zero.
pub fn facet_directions(n_f: usize) -> Result<Vec<[f64; 2]>> {
    if n_f < 3 {
        return Err(Error::InvalidFacetCount(n_f));
    }
    Ok((0..n_f)
        .map(|m| {
            let theta = 2.0 * std::f64::consts::PI * (m as f64) / (n_f as f64);
            [theta.cos(), theta.sin()]
        })
        .collect())
}

/// Membership within the shared feasibility tolerance. The empty set contains
/// nothing.
pub fn contains_point(poly: &Polytope, p: &[f64]) -> Result<bool> {
    if p.len() != poly.dim {
        return Err(Error::Dimension(format!(
            "point has length {}, polytope dim is {}",
            p.len(),
            poly.dim
        )));
    }
    if poly.empty {
        return Ok(false);
    }
    Ok(poly.halfspaces.iter().all(|h| h.satisfied(p)))
}

/// Containment `P ⊆ Q`, decided by one LP per half-space of `Q` over
/// `P ∩ workspace_box`. The box must bound `P`, otherwise the support LPs
/// are unbounded and the query fails rather than guessing.
pub fn polytope_subset(p: &Polytope, q: &Polytope, workspace_box: &IntervalBox) -> Result<bool> {
    if p.dim != q.dim {
        return Err(Error::Dimension(format!(
            "subset query dims differ: {} vs {}",
            p.dim, q.dim
        )));
    }
    if workspace_box.dim() != p.dim {
        return Err(Error::Dimension("workspace box dim mismatch".into()));
    }
    if p.empty {
        return Ok(true);
    }
    let cfg = SolverConfig::default();
    let base = |objective: Vec<(usize, f64)>| -> MilpModel {
        let mut m = MilpModel::new();
        for d in 0..p.dim {
            m.add_var(format!("p{d}"), workspace_box.lower[d], workspace_box.upper[d]);
        }
        for h in &p.halfspaces {
            let coeffs: Vec<(usize, f64)> =
                h.normal.iter().enumerate().map(|(d, &v)| (d, v)).collect();
            let sense = match h.sense {
                Sense::Ge => ConstraintSense::Ge,
                Sense::Le => ConstraintSense::Le,
            };
            m.add_constraint(coeffs, sense, h.offset);
        }
        m.set_objective(objective);
        m
    };

    if q.empty {
        // P ⊆ ∅ only when P ∩ box is itself empty.
        let feas = crate::opt::solve_lp(&base(Vec::new()), &cfg)?;
        return Ok(feas.status == SolveStatus::Infeasible);
    }

    for h in &q.halfspaces {
        h.validate(q.dim)?;
        // GE rows need the minimum of normal.p over P, LE rows the maximum.
        let flip = match h.sense {
            Sense::Ge => 1.0,
            Sense::Le => -1.0,
        };
        let objective: Vec<(usize, f64)> =
            h.normal.iter().enumerate().map(|(d, &v)| (d, flip * v)).collect();
        let r = crate::opt::solve_lp(&base(objective), &cfg)?;
        match r.status {
            SolveStatus::Infeasible => return Ok(true), // P ∩ box empty
            SolveStatus::Unbounded => {
                return Err(Error::Unbounded(
                    "containment LP unbounded; workspace box does not bound P".into(),
                ))
            }
            SolveStatus::Optimal => {
                let support = flip * r.objective.expect("optimal has objective");
                let violated = match h.sense {
                    Sense::Ge => support < h.offset - EPS_FEAS,
                    Sense::Le => support > h.offset + EPS_FEAS,
                };
                if violated {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;

    fn unit_square() -> Polytope {
        Polytope::from_box(&IntervalBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap()).unwrap()
    }

    fn wide_box() -> IntervalBox {
        IntervalBox::new(vec![-10.0, -10.0], vec![10.0, 10.0]).unwrap()
    }

    #[test]
    fn facet_directions_axis_aligned_for_four() {
        let dirs = facet_directions(4).unwrap();
        let expect = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (d, e) in dirs.iter().zip(expect.iter()) {
            assert!((d[0] - e[0]).abs() < 1e-12 && (d[1] - e[1]).abs() < 1e-12);
        }
    }

    #[test]
    #[allow(clippy::approx_constant)] // the rounded diagonal value is the point
    fn facet_directions_eight_has_diagonal() {
        let dirs = facet_directions(8).unwrap();
        assert!((dirs[1][0] - 0.70711).abs() < 1e-5);
        assert!((dirs[1][1] - 0.70711).abs() < 1e-5);
    }

    #[test]
    fn facet_directions_rejects_two() {
        assert!(matches!(facet_directions(2), Err(Error::InvalidFacetCount(2))));
    }

    #[test]
    fn facet_directions_unit_norm_and_spacing() {
        for n in [3usize, 5, 8, 16] {
            let dirs = facet_directions(n).unwrap();
            let gap = 2.0 * std::f64::consts::PI / n as f64;
            for (m, d) in dirs.iter().enumerate() {
                assert!((norm2(d) - 1.0).abs() < 1e-12);
                let angle = d[1].atan2(d[0]).rem_euclid(2.0 * std::f64::consts::PI);
                let expect = (gap * m as f64).rem_euclid(2.0 * std::f64::consts::PI);
                let mut diff = (angle - expect).abs();
                if diff > std::f64::consts::PI {
                    diff = 2.0 * std::f64::consts::PI - diff;
                }
                assert!(diff < 1e-12, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn contains_point_cases() {
        let sq = unit_square();
        assert!(contains_point(&sq, &[0.0, 0.0]).unwrap());
        assert!(!contains_point(&sq, &[2.0, 0.0]).unwrap());
        // boundary within the tolerance
        assert!(contains_point(&sq, &[1.0 + 1e-8, 0.0]).unwrap());
        assert!(!contains_point(&Polytope::empty(2), &[0.0, 0.0]).unwrap());
        assert!(matches!(
            contains_point(&sq, &[0.0]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn subset_nested_boxes() {
        let inner =
            Polytope::from_box(&IntervalBox::new(vec![-0.5, -0.5], vec![0.5, 0.5]).unwrap())
                .unwrap();
        let outer = unit_square();
        assert!(polytope_subset(&inner, &outer, &wide_box()).unwrap());
        assert!(!polytope_subset(&outer, &inner, &wide_box()).unwrap());
    }

    #[test]
    fn subset_strict_superset_fails() {
        let big = Polytope::from_box(&IntervalBox::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap())
            .unwrap();
        assert!(!polytope_subset(&big, &unit_square(), &wide_box()).unwrap());
    }

    #[test]
    fn subset_empty_is_subset_of_everything() {
        assert!(polytope_subset(&Polytope::empty(2), &unit_square(), &wide_box()).unwrap());
        assert!(polytope_subset(&Polytope::empty(2), &Polytope::empty(2), &wide_box()).unwrap());
    }

    #[test]
    fn subset_unbounded_without_box_errors() {
        // P is a single half-space; support in the open direction is unbounded
        // when the box is infinite.
        let p = Polytope::from_halfspaces(2, vec![HalfSpace::ge(vec![1.0, 0.0], 0.0)]).unwrap();
        let inf_box = IntervalBox {
            lower: vec![f64::NEG_INFINITY, f64::NEG_INFINITY],
            upper: vec![f64::INFINITY, f64::INFINITY],
        };
        assert!(matches!(
            polytope_subset(&p, &unit_square(), &inf_box),
            Err(Error::Unbounded(_))
        ));
    }

    #[test]
    fn polytope_json_round_trip() {
        let sq = unit_square();
        let s = sq.to_json_string();
        let back = Polytope::from_json_str(&s).unwrap();
        assert_eq!(back, sq);
        assert!(s.contains("\"sense\":\"GE\""));
    }

    #[test]
    fn polytope_json_rejects_bad_shapes() {
        assert!(Polytope::from_json_str("{").is_err());
        // ragged normal length
        let bad = r#"{"dim":2,"halfspaces":[{"normal":[1.0],"offset":0.0,"sense":"GE"}],"empty":false}"#;
        assert!(matches!(Polytope::from_json_str(bad), Err(Error::Dimension(_))));
        // zero normal
        let zero = r#"{"dim":2,"halfspaces":[{"normal":[0.0,0.0],"offset":0.0,"sense":"GE"}],"empty":false}"#;
        assert!(matches!(Polytope::from_json_str(zero), Err(Error::Schema(_))));
    }
}
