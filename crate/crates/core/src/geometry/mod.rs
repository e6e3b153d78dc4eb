//! Planar domains given by a closed-membership test and an exact
//! distance-to-boundary oracle built from segments and circular arcs.

mod lattice;
mod mushroom;
mod primitives;

pub use lattice::{sample_interior, sample_window, NodeSet};
pub use mushroom::{Mushroom, MushroomDomain, MushroomSpec};
pub use primitives::{lens_area, point_segment_dist, BBox, BoundaryPiece, Point};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Rectangle(BBox),
    Disk { center: Point, radius: f64 },
    Mushroom(MushroomDomain),
}

#[derive(Clone, Debug)]
pub struct Domain {
    shape: Shape,
    pieces: Vec<BoundaryPiece>,
    bbox: BBox,
    x0: Point,
    measure: f64,
}

impl Domain {
    fn build(shape: Shape, x0: Option<Point>) -> Result<Self> {
        let (pieces, bbox, default_x0, measure) = match &shape {
            Shape::Rectangle(b) => {
                if !(b.width() > 0.0 && b.height() > 0.0) {
                    return Err(Error::Construction("rectangle must have positive extent".into()));
                }
                let c = b.corners();
                let pieces = (0..4)
                    .map(|k| BoundaryPiece::Segment { a: c[k], b: c[(k + 1) % 4] })
                    .collect();
                (pieces, *b, b.center(), b.area())
            }
            Shape::Disk { center, radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::Construction(format!("disk radius must be positive, got {radius}")));
                }
                let bbox = BBox::square(*center, 2.0 * radius);
                (vec![BoundaryPiece::circle(*center, *radius)], bbox, *center, std::f64::consts::PI * radius * radius)
            }
            Shape::Mushroom(m) => (m.boundary(), m.bbox(), m.cube().center(), m.measure()),
        };
        let mut domain = Self { shape, pieces, bbox, x0: default_x0, measure };
        if let Some(p) = x0 {
            domain.x0 = p;
        }
        if !(domain.dist_to_boundary(domain.x0) > 0.0) {
            return Err(Error::Construction(format!(
                "base point ({}, {}) is not interior",
                domain.x0.x, domain.x0.y
            )));
        }
        Ok(domain)
    }

    pub fn rectangle(min: Point, max: Point) -> Result<Self> {
        Self::build(Shape::Rectangle(BBox::new(min, max)), None)
    }

    pub fn unit_square() -> Self {
        Self::rectangle(Point::new(0.0, 0.0), Point::new(1.0, 1.0)).expect("unit square")
    }

    pub fn square(side: f64) -> Result<Self> {
        Self::rectangle(Point::new(0.0, 0.0), Point::new(side, side))
    }

    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        Self::build(Shape::Disk { center, radius }, None)
    }

    pub fn unit_disk() -> Self {
        Self::disk(Point::new(0.0, 0.0), 1.0).expect("unit disk")
    }

    /// Upper half-plane truncated to `[-10, 10] x [0, 10]`, based at `(0, 5)`.
    pub fn clipped_half_plane() -> Self {
        Self::rectangle(Point::new(-10.0, 0.0), Point::new(10.0, 10.0)).expect("half-plane")
    }

    pub fn mushroom(spec: &MushroomSpec) -> Result<Self> {
        Self::build(Shape::Mushroom(MushroomDomain::new(spec)?), None)
    }

    pub fn with_base_point(self, x0: Point) -> Result<Self> {
        Self::build(self.shape, Some(x0))
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn mushrooms(&self) -> Option<&MushroomDomain> {
        match &self.shape {
            Shape::Mushroom(m) => Some(m),
            _ => None,
        }
    }

    pub fn boundary(&self) -> &[BoundaryPiece] {
        &self.pieces
    }

    pub fn dim(&self) -> usize {
        2
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn x0(&self) -> Point {
        self.x0
    }

    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn contains_closed(&self, p: Point) -> bool {
        match &self.shape {
            Shape::Rectangle(b) => b.contains(p),
            Shape::Disk { center, radius } => p.dist(*center) <= *radius,
            Shape::Mushroom(m) => m.contains_closed(p),
        }
    }

    /// Exact Euclidean distance to the boundary; 0 outside the closed domain.
    pub fn dist_to_boundary(&self, p: Point) -> f64 {
        match &self.shape {
            Shape::Rectangle(b) => {
                if b.contains(p) {
                    b.inner_dist(p)
                } else {
                    0.0
                }
            }
            Shape::Disk { center, radius } => (radius - p.dist(*center)).max(0.0),
            Shape::Mushroom(m) => {
                if !m.contains_closed(p) {
                    return 0.0;
                }
                self.pieces.iter().map(|b| b.dist_point(p)).fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.dist_to_boundary(p) > 0.0
    }

    /// Set distance between a closed box and the boundary (0 when they meet).
    pub fn box_boundary_distance(&self, b: &BBox) -> f64 {
        self.pieces.iter().map(|piece| piece.dist_box(b)).fold(f64::INFINITY, f64::min)
    }
}
