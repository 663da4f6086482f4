//! Stadium domain: two semicircular caps of radius `r` joined by straight
//! walls of length `l`, and the boundary discretization used by the integral
//! equation solver.
//!
//! The boundary is parametrized by arclength s, counterclockwise, starting
//! at the lower junction of the right cap, (l/2, -r). Pieces in order:
//! right cap, top wall, left cap, bottom wall.

pub type Vec2 = [f64; 2];

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn scale(a: Vec2, c: f64) -> Vec2 {
    [a[0] * c, a[1] * c]
}

pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

pub fn dist(a: Vec2, b: Vec2) -> f64 {
    norm(sub(a, b))
}

/// Which boundary piece an arclength value falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Piece {
    RightCap,
    TopWall,
    LeftCap,
    BottomWall,
}

#[derive(Debug, Clone, Copy)]
pub struct Stadium {
    pub r: f64,
    pub l: f64,
}

impl Stadium {
    pub fn new(r: f64, l: f64) -> Stadium {
        assert!(r > 0.0 && l >= 0.0);
        Stadium { r, l }
    }

    /// The shape studied throughout: unit cap radius, walls of length 2.
    pub fn standard() -> Stadium {
        Stadium::new(1.0, 2.0)
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * core::f64::consts::PI * self.r + 2.0 * self.l
    }

    pub fn area(&self) -> f64 {
        core::f64::consts::PI * self.r * self.r + 2.0 * self.r * self.l
    }

    pub fn wrap(&self, s: f64) -> f64 {
        let p = self.perimeter();
        let w = s % p;
        if w < 0.0 {
            w + p
        } else {
            w
        }
    }

    pub fn piece(&self, s: f64) -> Piece {
        let s = self.wrap(s);
        let arc = core::f64::consts::PI * self.r;
        if s < arc {
            Piece::RightCap
        } else if s < arc + self.l {
            Piece::TopWall
        } else if s < 2.0 * arc + self.l {
            Piece::LeftCap
        } else {
            Piece::BottomWall
        }
    }

    pub fn point(&self, s: f64) -> Vec2 {
        let s = self.wrap(s);
        let (r, l) = (self.r, self.l);
        let arc = core::f64::consts::PI * r;
        match self.piece(s) {
            Piece::RightCap => {
                let phi = s / r - core::f64::consts::FRAC_PI_2;
                [l / 2.0 + r * phi.cos(), r * phi.sin()]
            }
            Piece::TopWall => [l / 2.0 - (s - arc), r],
            Piece::LeftCap => {
                let phi = core::f64::consts::FRAC_PI_2 + (s - arc - l) / r;
                [-l / 2.0 + r * phi.cos(), r * phi.sin()]
            }
            Piece::BottomWall => [-l / 2.0 + (s - 2.0 * arc - l), -r],
        }
    }

    /// Outward unit normal at arclength s.
    pub fn normal_out(&self, s: f64) -> Vec2 {
        let s = self.wrap(s);
        let (r, l) = (self.r, self.l);
        let arc = core::f64::consts::PI * r;
        match self.piece(s) {
            Piece::RightCap => {
                let phi = s / r - core::f64::consts::FRAC_PI_2;
                [phi.cos(), phi.sin()]
            }
            Piece::TopWall => [0.0, 1.0],
            Piece::LeftCap => {
                let phi = core::f64::consts::FRAC_PI_2 + (s - arc - l) / r;
                [phi.cos(), phi.sin()]
            }
            Piece::BottomWall => [0.0, -1.0],
        }
    }

    /// Unit tangent in the direction of increasing s.
    pub fn tangent(&self, s: f64) -> Vec2 {
        let n = self.normal_out(s);
        [-n[1], n[0]]
    }

    /// Boundary curvature at s: 1/r on the caps, 0 on the walls.
    pub fn curvature(&self, s: f64) -> f64 {
        match self.piece(s) {
            Piece::RightCap | Piece::LeftCap => 1.0 / self.r,
            _ => 0.0,
        }
    }

    /// Strict interior test.
    pub fn contains(&self, q: Vec2) -> bool {
        let (r, l) = (self.r, self.l);
        if q[0].abs() <= l / 2.0 {
            q[1].abs() < r
        } else {
            let cx = if q[0] > 0.0 { l / 2.0 } else { -l / 2.0 };
            dist(q, [cx, 0.0]) < r
        }
    }

    /// Distance from an interior point to the boundary.
    ///
    /// Inside the rectangular part the nearest boundary is a wall; inside a
    /// cap region every boundary point lies on or outside the cap circle, so
    /// the radial gap is exact.
    pub fn distance_to_boundary(&self, q: Vec2) -> f64 {
        let (r, l) = (self.r, self.l);
        if q[0].abs() <= l / 2.0 {
            r - q[1].abs()
        } else {
            let cx = if q[0] > 0.0 { l / 2.0 } else { -l / 2.0 };
            r - dist(q, [cx, 0.0])
        }
    }

    /// Arclength coordinate of a point lying on (or very near) the boundary.
    pub fn boundary_arclength(&self, q: Vec2) -> f64 {
        let (r, l) = (self.r, self.l);
        let arc = core::f64::consts::PI * r;
        if q[0] > l / 2.0 {
            let phi = (q[1]).atan2(q[0] - l / 2.0);
            r * (phi + core::f64::consts::FRAC_PI_2)
        } else if q[0] < -l / 2.0 {
            let phi = (q[1]).atan2(q[0] + l / 2.0);
            let phi = if phi < 0.0 {
                phi + 2.0 * core::f64::consts::PI
            } else {
                phi
            };
            arc + l + r * (phi - core::f64::consts::FRAC_PI_2)
        } else if q[1] > 0.0 {
            arc + (l / 2.0 - q[0])
        } else {
            2.0 * arc + l + (q[0] + l / 2.0)
        }
    }

    /// Arclength image under reflection about the x axis (fixed points at
    /// the two cap apices).
    pub fn reflect_x_s(&self, s: f64) -> f64 {
        self.wrap(core::f64::consts::PI * self.r - s)
    }

    /// Arclength image under reflection about the y axis (fixed points at
    /// the wall midpoints).
    pub fn reflect_y_s(&self, s: f64) -> f64 {
        self.wrap(2.0 * core::f64::consts::PI * self.r + self.l - s)
    }
}

/// One quadrature node of a boundary mesh.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryNode {
    pub s: f64,
    pub point: Vec2,
    pub normal: Vec2,
    pub curvature: f64,
    pub weight: f64,
}

/// Midpoint-rule boundary mesh, piecewise uniform so that the reflection
/// symmetries map nodes to nodes exactly.
#[derive(Debug, Clone)]
pub struct BoundaryMesh {
    pub stadium: Stadium,
    pub nodes: Vec<BoundaryNode>,
    /// nodes per cap
    pub n_cap: usize,
    /// nodes per straight wall
    pub n_wall: usize,
}

fn round_even(x: f64) -> usize {
    let n = (x / 2.0).round() as usize * 2;
    n.max(2)
}

impl BoundaryMesh {
    /// Build a mesh with approximately `m` nodes total. Cap and wall node
    /// counts are rounded to even numbers in proportion to arclength.
    pub fn new(stadium: Stadium, m: usize) -> BoundaryMesh {
        let arc = core::f64::consts::PI * stadium.r;
        let per = stadium.perimeter();
        let n_cap = round_even(m as f64 * arc / per);
        let n_wall = if stadium.l > 0.0 {
            round_even(m as f64 * stadium.l / per)
        } else {
            0
        };
        let mut nodes = Vec::with_capacity(2 * (n_cap + n_wall));
        let pieces = [
            (0.0, arc, n_cap),
            (arc, stadium.l, n_wall),
            (arc + stadium.l, arc, n_cap),
            (2.0 * arc + stadium.l, stadium.l, n_wall),
        ];
        for &(start, len, count) in &pieces {
            if count == 0 {
                continue;
            }
            let h = len / count as f64;
            for i in 0..count {
                let s = start + (i as f64 + 0.5) * h;
                nodes.push(BoundaryNode {
                    s,
                    point: stadium.point(s),
                    normal: stadium.normal_out(s),
                    curvature: stadium.curvature(s),
                    weight: h,
                });
            }
        }
        BoundaryMesh {
            stadium,
            nodes,
            n_cap,
            n_wall,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the node at the reflection of node `j` about the x axis.
    pub fn reflect_x_index(&self, j: usize) -> usize {
        let (c, w) = (self.n_cap, self.n_wall);
        match self.piece_of(j) {
            (Piece::RightCap, i) => c - 1 - i,
            (Piece::TopWall, i) => 2 * c + w + (w - 1 - i),
            (Piece::LeftCap, i) => c + w + (c - 1 - i),
            (Piece::BottomWall, i) => c + (w - 1 - i),
        }
    }

    /// Index of the node at the reflection of node `j` about the y axis.
    pub fn reflect_y_index(&self, j: usize) -> usize {
        let (c, w) = (self.n_cap, self.n_wall);
        match self.piece_of(j) {
            (Piece::RightCap, i) => c + w + (c - 1 - i),
            (Piece::TopWall, i) => c + (w - 1 - i),
            (Piece::LeftCap, i) => c - 1 - i,
            (Piece::BottomWall, i) => 2 * c + w + (w - 1 - i),
        }
    }

    fn piece_of(&self, j: usize) -> (Piece, usize) {
        let (c, w) = (self.n_cap, self.n_wall);
        if j < c {
            (Piece::RightCap, j)
        } else if j < c + w {
            (Piece::TopWall, j - c)
        } else if j < 2 * c + w {
            (Piece::LeftCap, j - c - w)
        } else {
            (Piece::BottomWall, j - 2 * c - w)
        }
    }

    /// Indices of the nodes with x > 0, y > 0: the upper half of the right
    /// cap followed by the right half of the top wall. Their images under
    /// the two reflections tile the whole mesh.
    pub fn quarter_indices(&self) -> Vec<usize> {
        let (c, w) = (self.n_cap, self.n_wall);
        let mut idx = Vec::with_capacity(c / 2 + w / 2);
        idx.extend(c / 2..c);
        idx.extend(c..c + w / 2);
        idx
    }
}
