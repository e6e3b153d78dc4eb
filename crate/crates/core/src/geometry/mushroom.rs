use serde::{Deserialize, Serialize};

use super::primitives::{BBox, BoundaryPiece, Point};
use crate::error::{Error, Result};

/// User-facing description of a cube with mushrooms attached to its top side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MushroomSpec {
    /// Side length of the base cube `[0, side]^2`.
    pub side: f64,
    /// Cap radii, strictly decreasing.
    pub radii: Vec<f64>,
    /// Stem half-width is `r^sigma`.
    pub sigma: f64,
    /// Stem height is `r^h`.
    pub h: f64,
    /// Stem axis abscissae; placed left to right automatically when absent.
    #[serde(default)]
    pub positions: Option<Vec<f64>>,
}

/// One cap-and-stem protrusion. The stem is the rectangle
/// `[axis - rho, axis + rho] x [top, top + height]`; its upper edge is a chord of the cap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mushroom {
    pub r: f64,
    pub rho: f64,
    pub height: f64,
    pub axis: f64,
    pub stem: BBox,
    pub cap_center: Point,
}

impl Mushroom {
    fn new(r: f64, rho: f64, height: f64, axis: f64, top: f64) -> Self {
        let stem = BBox::new(Point::new(axis - rho, top), Point::new(axis + rho, top + height));
        let chord_depth = (r * r - rho * rho).sqrt();
        let cap_center = Point::new(axis, top + height + chord_depth);
        Self { r, rho, height, axis, stem, cap_center }
    }

    pub fn in_cap(&self, p: Point) -> bool {
        p.dist(self.cap_center) <= self.r
    }

    pub fn in_stem(&self, p: Point) -> bool {
        self.stem.contains(p)
    }

    pub fn contains_closed(&self, p: Point) -> bool {
        self.in_stem(p) || self.in_cap(p)
    }

    /// Bounding box of stem and cap.
    pub fn bbox(&self) -> BBox {
        let cap = BBox::square(self.cap_center, 2.0 * self.r);
        cap.union(&self.stem)
    }

    pub fn stem_midpoint(&self) -> Point {
        self.stem.center()
    }

    /// Piecewise linear test function: rises from 0 at the stem mouth to 1 at the
    /// cap chord, equals 1 on the rest of the cap and 0 off the mushroom.
    pub fn test_value(&self, p: Point) -> f64 {
        if self.in_stem(p) {
            ((p.y - self.stem.min.y) / self.height).clamp(0.0, 1.0)
        } else if self.in_cap(p) {
            1.0
        } else {
            0.0
        }
    }

    /// Area of cap plus stem (the chord segment lies inside the stem).
    pub fn area(&self) -> f64 {
        let e = (self.r * self.r - self.rho * self.rho).sqrt();
        let segment = self.r * self.r * (e / self.r).clamp(-1.0, 1.0).acos() - e * self.rho;
        2.0 * self.rho * self.height + std::f64::consts::PI * self.r * self.r - segment
    }

    fn cap_arc(&self) -> BoundaryPiece {
        let alpha = (self.rho / self.r).asin();
        BoundaryPiece::Arc {
            center: self.cap_center,
            radius: self.r,
            start: -std::f64::consts::FRAC_PI_2 + alpha,
            sweep: std::f64::consts::TAU - 2.0 * alpha,
        }
    }
}

/// Validated mushroom geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MushroomDomain {
    pub side: f64,
    pub sigma: f64,
    pub h: f64,
    pub mushrooms: Vec<Mushroom>,
}

impl MushroomDomain {
    pub fn new(spec: &MushroomSpec) -> Result<Self> {
        let side = spec.side;
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::Construction(format!("side > 0 required, got {side}")));
        }
        if !(spec.sigma >= 1.0) {
            return Err(Error::Construction(format!("sigma >= 1 required, got {}", spec.sigma)));
        }
        if !(spec.h >= 1.0) {
            return Err(Error::Construction(format!("h >= 1 required, got {}", spec.h)));
        }
        for (i, &r) in spec.radii.iter().enumerate() {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Construction(format!("radius {i} must be positive, got {r}")));
            }
            if i > 0 && !(r < spec.radii[i - 1]) {
                return Err(Error::Construction(format!(
                    "radii must be strictly decreasing: r[{}] = {} >= r[{}] = {}",
                    i,
                    r,
                    i - 1,
                    spec.radii[i - 1]
                )));
            }
        }
        let rhos: Vec<f64> = spec.radii.iter().map(|r| r.powf(spec.sigma)).collect();
        let heights: Vec<f64> = spec.radii.iter().map(|r| r.powf(spec.h)).collect();
        let gap = rhos.iter().copied().fold(0.0, f64::max);

        let axes = match &spec.positions {
            Some(pos) => {
                if pos.len() != spec.radii.len() {
                    return Err(Error::Construction(format!(
                        "{} positions given for {} mushrooms",
                        pos.len(),
                        spec.radii.len()
                    )));
                }
                pos.clone()
            }
            None => {
                let mut axes = Vec::with_capacity(spec.radii.len());
                let mut a = 0.0;
                for (i, &r) in spec.radii.iter().enumerate() {
                    a = if i == 0 { gap + r } else { a + spec.radii[i - 1] + gap + r };
                    axes.push(a);
                }
                axes
            }
        };

        let mut mushrooms = Vec::with_capacity(spec.radii.len());
        for i in 0..spec.radii.len() {
            let (r, rho, height, a) = (spec.radii[i], rhos[i], heights[i], axes[i]);
            if rho > r {
                return Err(Error::Construction(format!(
                    "mushroom {i}: stem half-width {rho} exceeds cap radius {r}"
                )));
            }
            if a - rho < gap || a + rho > side - gap {
                return Err(Error::Construction(format!(
                    "mushroom {i}: stem [{}, {}] does not fit on the top side with gap {gap}",
                    a - rho,
                    a + rho
                )));
            }
            let m = Mushroom::new(r, rho, height, a, side);
            // The part of the cap below the chord must stay inside the stem.
            if m.cap_center.y - r < side {
                return Err(Error::Construction(format!("mushroom {i}: cap reaches into the base cube")));
            }
            mushrooms.push(m);
        }

        for i in 0..mushrooms.len() {
            for j in (i + 1)..mushrooms.len() {
                let (mi, mj) = (&mushrooms[i], &mushrooms[j]);
                let caps = mi.cap_center.dist(mj.cap_center) > mi.r + mj.r;
                let stems = mi.stem.max.x < mj.stem.min.x || mj.stem.max.x < mi.stem.min.x;
                let cross = mi.stem.dist_point(mj.cap_center) > mj.r && mj.stem.dist_point(mi.cap_center) > mi.r;
                if !(caps && stems && cross) {
                    return Err(Error::Construction(format!("mushrooms {i} and {j} overlap")));
                }
            }
        }
        Ok(Self { side, sigma: spec.sigma, h: spec.h, mushrooms })
    }

    pub fn cube(&self) -> BBox {
        BBox::new(Point::new(0.0, 0.0), Point::new(self.side, self.side))
    }

    pub fn contains_closed(&self, p: Point) -> bool {
        self.cube().contains(p) || self.mushrooms.iter().any(|m| m.contains_closed(p))
    }

    pub fn bbox(&self) -> BBox {
        self.mushrooms.iter().fold(self.cube(), |b, m| b.union(&m.bbox()))
    }

    pub fn measure(&self) -> f64 {
        self.side * self.side + self.mushrooms.iter().map(Mushroom::area).sum::<f64>()
    }

    pub fn boundary(&self) -> Vec<BoundaryPiece> {
        let s = self.side;
        let seg = |a: Point, b: Point| BoundaryPiece::Segment { a, b };
        let mut pieces = vec![
            seg(Point::new(0.0, 0.0), Point::new(s, 0.0)),
            seg(Point::new(s, 0.0), Point::new(s, s)),
            seg(Point::new(0.0, s), Point::new(0.0, 0.0)),
        ];
        let mut sorted: Vec<&Mushroom> = self.mushrooms.iter().collect();
        sorted.sort_by(|a, b| a.axis.total_cmp(&b.axis));
        let mut x = 0.0;
        for m in sorted {
            pieces.push(seg(Point::new(x, s), Point::new(m.stem.min.x, s)));
            pieces.push(seg(m.stem.min, Point::new(m.stem.min.x, m.stem.max.y)));
            pieces.push(seg(Point::new(m.stem.max.x, s), m.stem.max));
            pieces.push(m.cap_arc());
            x = m.stem.max.x;
        }
        pieces.push(seg(Point::new(x, s), Point::new(s, s)));
        pieces
    }

    /// Test function of mushroom `i` evaluated at `p`.
    pub fn test_value(&self, i: usize, p: Point) -> Result<f64> {
        let m = self
            .mushrooms
            .get(i)
            .ok_or_else(|| Error::Invalid(format!("mushroom index {i} out of range ({} mushrooms)", self.mushrooms.len())))?;
        Ok(m.test_value(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(radii: Vec<f64>, sigma: f64, h: f64) -> MushroomSpec {
        MushroomSpec { side: 1.0, radii, sigma, h, positions: None }
    }

    #[test]
    fn rejects_non_decreasing_radii() {
        let err = MushroomDomain::new(&spec(vec![0.1, 0.2], 1.5, 1.0)).unwrap_err();
        assert!(err.to_string().contains("decreasing"));
    }

    #[test]
    fn rejects_overlap_naming_pair() {
        let mut s = spec(vec![0.2, 0.1], 1.5, 1.0);
        s.positions = Some(vec![0.3, 0.45]);
        let err = MushroomDomain::new(&s).unwrap_err();
        assert!(err.to_string().contains("mushrooms 0 and 1"), "{err}");
    }

    #[test]
    fn automatic_placement_fits() {
        let mut s = spec(vec![0.25, 0.125, 0.0625], 1.5, 1.0);
        s.side = 2.0;
        let d = MushroomDomain::new(&s).unwrap();
        assert_eq!(d.mushrooms.len(), 3);
        assert_eq!(d.boundary().len(), 4 + 4 * 3);
    }

    #[test]
    fn test_function_values() {
        let d = MushroomDomain::new(&spec(vec![0.25], 1.0, 1.0)).unwrap();
        let m = d.mushrooms[0];
        assert_eq!(d.test_value(0, Point::new(0.5, 0.5)).unwrap(), 0.0);
        assert_eq!(d.test_value(0, m.cap_center).unwrap(), 1.0);
        assert!((d.test_value(0, m.stem_midpoint()).unwrap() - 0.5).abs() < 1e-15);
        assert!(d.test_value(1, m.cap_center).is_err());
    }
}
