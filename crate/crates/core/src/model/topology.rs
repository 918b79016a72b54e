use crate::splines::{NurbsPatch, SplineError};

use super::quadrature::QuadratureRule;

/// Patch boundary side in parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    /// `v = v_min`
    South,
    /// `u = u_max`
    East,
    /// `v = v_max`
    North,
    /// `u = u_min`
    West,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::South, Side::East, Side::North, Side::West];

    /// Parametric direction that varies along the side.
    pub fn running_dir(self) -> usize {
        match self {
            Side::South | Side::North => 0,
            Side::East | Side::West => 1,
        }
    }

    pub fn fixed_dir(self) -> usize {
        1 - self.running_dir()
    }

    pub fn is_max(self) -> bool {
        matches!(self, Side::East | Side::North)
    }

    /// Fixed parameter value on this side.
    pub fn fixed_value(self, patch: &NurbsPatch) -> f64 {
        let (lo, hi) = patch.param_range(self.fixed_dir());
        if self.is_max() {
            hi
        } else {
            lo
        }
    }

    /// Parameter pair for running parameter `s`.
    pub fn param(self, patch: &NurbsPatch, s: f64) -> [f64; 2] {
        let f = self.fixed_value(patch);
        if self.running_dir() == 0 {
            [s, f]
        } else {
            [f, s]
        }
    }

    /// Local indices of the control points on this side, ordered along the running direction.
    pub fn control_indices(self, patch: &NurbsPatch) -> Vec<usize> {
        let (nu, nv) = patch.shape();
        match self {
            Side::South => (0..nu).map(|i| patch.index(i, 0)).collect(),
            Side::North => (0..nu).map(|i| patch.index(i, nv - 1)).collect(),
            Side::West => (0..nv).map(|j| patch.index(0, j)).collect(),
            Side::East => (0..nv).map(|j| patch.index(nu - 1, j)).collect(),
        }
    }

    /// Control point indices whose basis support touches this side (first `depth` rows).
    pub fn control_rows(self, patch: &NurbsPatch, depth: usize) -> Vec<usize> {
        let (nu, nv) = patch.shape();
        let mut out = Vec::new();
        for k in 0..depth {
            match self {
                Side::South if k < nv => out.extend((0..nu).map(|i| patch.index(i, k))),
                Side::North if k < nv => out.extend((0..nu).map(|i| patch.index(i, nv - 1 - k))),
                Side::West if k < nu => out.extend((0..nv).map(|j| patch.index(k, j))),
                Side::East if k < nu => out.extend((0..nv).map(|j| patch.index(nu - 1 - k, j))),
                _ => {}
            }
        }
        out
    }

    /// Unit outward normal from the running tangent and the sign of `det J`.
    pub fn outward_normal(self, tangent: [f64; 2], det: f64) -> [f64; 2] {
        let len = tangent[0].hypot(tangent[1]);
        let (tx, ty) = (tangent[0] / len, tangent[1] / len);
        let n = match self {
            Side::South | Side::East => [ty, -tx],
            Side::North | Side::West => [-ty, tx],
        };
        if det < 0.0 {
            [-n[0], -n[1]]
        } else {
            n
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Side::South => "south",
            Side::East => "east",
            Side::North => "north",
            Side::West => "west",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Side {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "south" | "bottom" => Ok(Side::South),
            "east" | "right" => Ok(Side::East),
            "north" | "top" => Ok(Side::North),
            "west" | "left" => Ok(Side::West),
            other => Err(format!("unknown side `{other}`")),
        }
    }
}

/// A nonzero knot span box of one patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    pub patch: usize,
    /// Span index per direction (second is 0 for curves).
    pub spans: [usize; 2],
    /// `bounds[dir] = [lo, hi]`.
    pub bounds: [[f64; 2]; 2],
}

impl Element {
    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.bounds[0][0] && u <= self.bounds[0][1] && v >= self.bounds[1][0] && v <= self.bounds[1][1]
    }

    /// Tensor Gauss points `(u, v, parametric weight)`.
    pub fn gauss_points(&self, rule_u: &QuadratureRule, rule_v: &QuadratureRule, dim: usize) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(rule_u.len() * rule_v.len());
        if dim == 1 {
            for (u, wu) in rule_u.mapped(self.bounds[0][0], self.bounds[0][1]) {
                out.push((u, 0.0, wu));
            }
            return out;
        }
        for (v, wv) in rule_v.mapped(self.bounds[1][0], self.bounds[1][1]) {
            for (u, wu) in rule_u.mapped(self.bounds[0][0], self.bounds[0][1]) {
                out.push((u, v, wu * wv));
            }
        }
        out
    }
}

/// Nonzero knot-span boxes of a patch, first direction fastest.
pub fn patch_elements(patch: &NurbsPatch, patch_id: usize) -> Vec<Element> {
    let su = patch.knots(0).spans();
    let sv = if patch.dim() == 2 { patch.knots(1).spans() } else { vec![(0, 0.0, 0.0)] };
    let mut out = Vec::with_capacity(su.len() * sv.len());
    for &(kv, v0, v1) in &sv {
        for &(ku, u0, u1) in &su {
            out.push(Element { patch: patch_id, spans: [ku, kv], bounds: [[u0, u1], [v0, v1]] });
        }
    }
    out
}

/// Global numbering `offset(patch) + ncomp * local + comp`; patches never share DoFs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    offsets: Vec<usize>,
    counts: Vec<usize>,
    ncomp: usize,
}

impl DofMap {
    pub fn new(control_counts: &[usize], ncomp: usize) -> Self {
        let mut offsets = Vec::with_capacity(control_counts.len());
        let mut acc = 0;
        for &c in control_counts {
            offsets.push(acc);
            acc += c * ncomp;
        }
        Self { offsets, counts: control_counts.to_vec(), ncomp }
    }

    #[inline]
    pub fn dof(&self, patch: usize, local: usize, comp: usize) -> usize {
        debug_assert!(local < self.counts[patch] && comp < self.ncomp);
        self.offsets[patch] + local * self.ncomp + comp
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn num_patches(&self) -> usize {
        self.offsets.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() * self.ncomp
    }

    pub fn patch_range(&self, patch: usize) -> std::ops::Range<usize> {
        self.offsets[patch]..self.offsets[patch] + self.counts[patch] * self.ncomp
    }

    /// Inverse lookup `(patch, local, comp)`.
    pub fn locate(&self, dof: usize) -> Option<(usize, usize, usize)> {
        let patch = self.offsets.iter().rposition(|&o| o <= dof)?;
        let rel = dof - self.offsets[patch];
        let local = rel / self.ncomp;
        (local < self.counts[patch]).then_some((patch, local, rel % self.ncomp))
    }
}

/// Helper used by quadrature on boundaries: the spans of a side's running direction.
pub(crate) fn side_spans(patch: &NurbsPatch, side: Side) -> Vec<(f64, f64)> {
    patch.knots(side.running_dir()).spans().into_iter().map(|(_, a, b)| (a, b)).collect()
}

pub(crate) fn side_tangent(patch: &NurbsPatch, side: Side, s: f64) -> Result<([f64; 2], [f64; 2], f64), SplineError> {
    let p = side.param(patch, s);
    let (x, t) = patch.point_and_tangents(p[0], p[1])?;
    let tangent = t[side.running_dir()];
    let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
    Ok((x, tangent, det))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splines::{make_geometry, GeometryKind};

    #[test]
    fn elements_after_refinement() {
        let s = make_geometry(GeometryKind::UnitSquare { length: 1.0 }, 2).unwrap();
        assert_eq!(patch_elements(&s, 0).len(), 1);
        let r = s.refined(8).unwrap();
        let els = patch_elements(&r, 0);
        assert_eq!(els.len(), 64);
        let area: f64 = els
            .iter()
            .map(|e| (e.bounds[0][1] - e.bounds[0][0]) * (e.bounds[1][1] - e.bounds[1][0]))
            .sum();
        assert!((area - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dof_map_is_bijective() {
        let m = DofMap::new(&[9, 9], 1);
        assert_eq!(m.total(), 18);
        let v = DofMap::new(&[9], 2);
        assert_eq!(v.total(), 18);
        let mut seen = vec![false; 18];
        for p in 0..2 {
            for a in 0..9 {
                let d = m.dof(p, a, 0);
                assert!(!seen[d]);
                seen[d] = true;
                assert_eq!(m.locate(d), Some((p, a, 0)));
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn unit_square_normals() {
        let s = make_geometry(GeometryKind::UnitSquare { length: 1.0 }, 2).unwrap();
        let expect = [(Side::South, [0.0, -1.0]), (Side::East, [1.0, 0.0]), (Side::North, [0.0, 1.0]), (Side::West, [-1.0, 0.0])];
        for (side, n) in expect {
            let (_, t, det) = side_tangent(&s, side, 0.5).unwrap();
            let got = side.outward_normal(t, det);
            assert!((got[0] - n[0]).abs() < 1e-15 && (got[1] - n[1]).abs() < 1e-15, "{side}");
        }
    }
}
