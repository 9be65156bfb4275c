//! Circular cones in frequency space and their lattice points.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coeffs::Index;
use crate::error::{Error, Result};

/// Open cone `{xi != 0 : angle(xi, axis) < half_angle}`; angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    axis: Vec<f64>,
    half_angle: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Angle between two nonzero vectors, accurate near 0 and pi.
pub fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return f64::NAN;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb);
    let perp = a.iter().zip(b).map(|(x, y)| (x / na - dot * y / nb).powi(2)).sum::<f64>().sqrt();
    perp.atan2(dot)
}

impl Cone {
    pub fn new(axis: &[f64], half_angle: f64) -> Result<Self> {
        if !(1..=3).contains(&axis.len()) {
            return Err(Error::Dimension(axis.len()));
        }
        let n = norm(axis);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Cone("axis must be a nonzero finite vector".into()));
        }
        if !(half_angle > 0.0 && half_angle < PI / 2.0) {
            return Err(Error::Cone(format!("half-angle {half_angle} rad is outside (0, pi/2)")));
        }
        Ok(Cone { axis: axis.iter().map(|v| v / n).collect(), half_angle })
    }

    pub fn from_degrees(axis: &[f64], half_angle_deg: f64) -> Result<Self> {
        Cone::new(axis, half_angle_deg.to_radians())
    }

    pub fn dim(&self) -> usize {
        self.axis.len()
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        if xi.iter().all(|v| *v == 0.0) {
            return false;
        }
        angle_between(xi, &self.axis) < self.half_angle
    }

    pub fn contains_index(&self, n: &[i64]) -> bool {
        let v: Vec<f64> = n.iter().map(|x| *x as f64).collect();
        self.contains(&v)
    }

    /// Same axis, half-angle scaled by `factor`.
    pub fn shrink(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor < 1.0) {
            return Err(Error::Cone(format!("shrink factor {factor} is outside (0, 1)")));
        }
        Ok(Cone { axis: self.axis.clone(), half_angle: self.half_angle * factor })
    }
}

/// Lattice points `n` with `r_min <= |n| <= r_max` in the cone, in
/// lexicographic order.
pub fn lattice_points_in_cone(cone: &Cone, r_min: f64, r_max: f64) -> Result<Vec<Index>> {
    if !(r_min >= 0.0 && r_min < r_max) {
        return Err(Error::Parameter(format!("radii must satisfy 0 <= {r_min} < {r_max}")));
    }
    let d = cone.dim();
    let r = r_max.floor() as i64;
    let side = (2 * r + 1) as usize;
    let mut out = Vec::new();
    for flat in 0..side.pow(d as u32) {
        let n = crate::coeffs::unravel(flat, d, r as usize);
        let len = n[..d].iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
        if len >= r_min && len <= r_max && cone.contains_index(&n[..d]) {
            out.push(n);
        }
    }
    Ok(out)
}

/// `c` such that every `y` with `|xi - y| <= c |xi|` for some `xi` in `inner`
/// lies in `outer`: `sin(theta - theta_1 - gamma)`, `gamma` the angle between
/// the axes.
pub fn separation_constant(inner: &Cone, outer: &Cone) -> Result<f64> {
    if inner.dim() != outer.dim() {
        return Err(Error::DimensionMismatch { expected: outer.dim(), got: inner.dim() });
    }
    let gamma = angle_between(inner.axis(), outer.axis());
    let gap = outer.half_angle() - inner.half_angle() - gamma;
    if gap.is_nan() || gap <= 0.0 {
        return Err(Error::Cone("inner cone is not strictly contained in the outer cone".into()));
    }
    Ok(gap.sin().clamp(f64::MIN_POSITIVE, 1.0))
}

/// Default half-angle in degrees for scans in dimension `dim`.
pub fn default_half_angle_deg(dim: usize) -> f64 {
    match dim {
        1 => 45.0,
        2 => 10.0,
        _ => 15.0,
    }
}

/// Default direction grid: `{+1, -1}` in 1-D, 72 directions every 5 degrees
/// in 2-D, and a 162-point subdivided icosahedron in 3-D.
pub fn default_directions(dim: usize) -> Result<Vec<Vec<f64>>> {
    match dim {
        1 => Ok(vec![vec![1.0], vec![-1.0]]),
        2 => Ok(circle_directions(72)),
        3 => Ok(icosphere(2)),
        d => Err(Error::Dimension(d)),
    }
}

/// `count` equally spaced unit vectors starting at angle 0.
pub fn circle_directions(count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / count as f64;
            vec![a.cos(), a.sin()]
        })
        .collect()
}

/// Vertices of the icosahedron after `levels` midpoint subdivisions,
/// projected to the sphere (12, 42, 162, ... points).
pub fn icosphere(levels: usize) -> Vec<Vec<f64>> {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, g, 0.0],
        [1.0, g, 0.0],
        [-1.0, -g, 0.0],
        [1.0, -g, 0.0],
        [0.0, -1.0, g],
        [0.0, 1.0, g],
        [0.0, -1.0, -g],
        [0.0, 1.0, -g],
        [g, 0.0, -1.0],
        [g, 0.0, 1.0],
        [-g, 0.0, -1.0],
        [-g, 0.0, 1.0],
    ];
    let unit = |v: [f64; 3]| {
        let n = norm(&v);
        [v[0] / n, v[1] / n, v[2] / n]
    };
    for v in verts.iter_mut() {
        *v = unit(*v);
    }
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..levels {
        let mut cache: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(unit([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    verts.into_iter().map(|v| v.to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_cones_are_half_lines() {
        let c = Cone::from_degrees(&[1.0], 30.0).unwrap();
        let pts = lattice_points_in_cone(&c, 2.0, 6.0).unwrap();
        assert_eq!(pts.iter().map(|n| n[0]).collect::<Vec<_>>(), vec![2, 3, 4, 5, 6]);
    }

    #[test]
    fn narrow_cone_keeps_only_axis_points() {
        let c = Cone::from_degrees(&[1.0, 0.0], 10.0).unwrap();
        let pts = lattice_points_in_cone(&c, 0.0, 3.0).unwrap();
        assert_eq!(pts, vec![[1, 0, 0], [2, 0, 0], [3, 0, 0]]);
    }

    #[test]
    fn shrink_composes() {
        let c = Cone::from_degrees(&[0.0, 1.0], 30.0).unwrap();
        let a = c.shrink(0.5).unwrap().shrink(0.5).unwrap();
        let b = c.shrink(0.25).unwrap();
        assert!((a.half_angle() - b.half_angle()).abs() < 1e-15);
        assert_eq!(a.axis(), c.axis());
        assert!((c.shrink(0.5).unwrap().half_angle().to_degrees() - 15.0).abs() < 1e-12);
        assert!(c.shrink(1.0).is_err());
    }

    #[test]
    fn coaxial_separation() {
        let outer = Cone::from_degrees(&[1.0, 1.0], 45.0).unwrap();
        let inner = Cone::from_degrees(&[1.0, 1.0], 30.0).unwrap();
        let c = separation_constant(&inner, &outer).unwrap();
        assert!((c - 15f64.to_radians().sin()).abs() < 1e-12);
        assert!(separation_constant(&outer, &inner).is_err());
    }

    #[test]
    fn direction_grids() {
        assert_eq!(default_directions(1).unwrap().len(), 2);
        assert_eq!(default_directions(2).unwrap().len(), 72);
        let s = default_directions(3).unwrap();
        assert_eq!(s.len(), 162);
        assert!(s.iter().all(|v| (norm(v) - 1.0).abs() < 1e-12));
        // every point of the sphere is within 15 degrees of a grid direction
        let probe = [0.3, -0.5, 0.81];
        assert!(s.iter().any(|v| angle_between(v, &probe) < 15f64.to_radians()));
    }

    #[test]
    fn zero_is_never_inside() {
        let c = Cone::from_degrees(&[1.0, 0.0, 0.0], 80.0).unwrap();
        assert!(!c.contains_index(&[0, 0, 0]));
        assert!(c.contains_index(&[1, 0, 0]));
    }
}
