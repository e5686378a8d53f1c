//! Rectangular grids of Q-tensors with bilinear elements.
//!
//! Nodes are stored row-major with `x` fastest. The outermost ring of nodes
//! carries Dirichlet data and is never touched by the solver.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elastic::GradientPair;
use crate::error::{Error, Result};
use crate::qtensor::{uniaxial, QTensor};

pub const CSV_HEADER: &str = "x,y,v1,v2,v3,v4,v5";

/// Smallest margin allowed for freshly initialized interior nodes.
pub const INIT_MARGIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub width: f64,
    pub height: f64,
}

impl GridSpec {
    pub fn square(n: usize, side: f64) -> Self {
        GridSpec {
            nx: n,
            ny: n,
            width: side,
            height: side,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 3 || self.ny < 3 {
            return Err(Error::Input(format!(
                "grid needs at least 3 nodes per side, got {}×{}",
                self.nx, self.ny
            )));
        }
        if !(self.width > 0.0 && self.height > 0.0 && self.width.is_finite() && self.height.is_finite()) {
            return Err(Error::Input(format!(
                "grid extents must be positive, got {}×{}",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    /// `uniaxial(s, (cos θ₀, sin θ₀, 0))` on the whole ring.
    UniformUniaxial,
    /// In-plane director `(cos(kθ + θ₀), sin(kθ + θ₀), 0)`, `θ` the polar
    /// angle about the domain center.
    WindingDirector,
}

impl BoundaryKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryKind::UniformUniaxial => "uniform-uniaxial",
            BoundaryKind::WindingDirector => "winding-director",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub kind: BoundaryKind,
    pub s: f64,
    pub k: f64,
    pub theta0: f64,
}

impl BoundarySpec {
    pub fn uniform(s: f64, theta0: f64) -> Self {
        BoundarySpec {
            kind: BoundaryKind::UniformUniaxial,
            s,
            k: 0.0,
            theta0,
        }
    }

    pub fn winding(s: f64, k: f64, theta0: f64) -> Self {
        BoundarySpec {
            kind: BoundaryKind::WindingDirector,
            s,
            k,
            theta0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > -0.5 && self.s < 1.0) {
            return Err(Error::Input(format!(
                "boundary order parameter s = {} outside (-1/2, 1)",
                self.s
            )));
        }
        if self.kind == BoundaryKind::WindingDirector && (2.0 * self.k).fract() != 0.0 {
            return Err(Error::Input(format!("winding number {} is not a half-integer", self.k)));
        }
        if !self.theta0.is_finite() || !self.k.is_finite() {
            return Err(Error::Input("boundary angles must be finite".into()));
        }
        Ok(())
    }

    /// Boundary tensor at polar angle `theta` about the domain center.
    pub fn tensor_at(&self, theta: f64) -> QTensor {
        let phi = match self.kind {
            BoundaryKind::UniformUniaxial => self.theta0,
            BoundaryKind::WindingDirector => self.k * theta + self.theta0,
        };
        uniaxial(self.s, [phi.cos(), phi.sin(), 0.0]).expect("in-plane director is a unit vector")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum InteriorInit {
    /// Radial blend from the boundary data toward the boundary average.
    #[default]
    Blend,
    /// Every interior node set to the boundary average.
    Constant,
    /// Blend plus a seeded uniform perturbation of the given amplitude.
    Random { seed: u64, amplitude: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    nx: usize,
    ny: usize,
    origin: [f64; 2],
    width: f64,
    height: f64,
    values: Vec<QTensor>,
    boundary: Vec<bool>,
}

impl Field {
    /// Field with every node set to `value`.
    pub fn constant(grid: GridSpec, value: QTensor) -> Result<Self> {
        Self::with_origin(grid, [0.0, 0.0], vec![value; grid.nx * grid.ny])
    }

    pub fn with_origin(grid: GridSpec, origin: [f64; 2], values: Vec<QTensor>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.nx * grid.ny {
            return Err(Error::Input(format!(
                "expected {} node values, got {}",
                grid.nx * grid.ny,
                values.len()
            )));
        }
        let boundary = (0..grid.ny)
            .flat_map(|j| (0..grid.nx).map(move |i| (i, j)))
            .map(|(i, j)| i == 0 || j == 0 || i == grid.nx - 1 || j == grid.ny - 1)
            .collect();
        Ok(Field {
            nx: grid.nx,
            ny: grid.ny,
            origin,
            width: grid.width,
            height: grid.height,
            values,
            boundary,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            nx: self.nx,
            ny: self.ny,
            width: self.width,
            height: self.height,
        }
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn hx(&self) -> f64 {
        self.width / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        self.height / (self.ny - 1) as f64
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn values(&self) -> &[QTensor] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> QTensor {
        self.values[self.index(i, j)]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    /// Sets an interior node. Boundary nodes are rejected.
    pub fn set_interior(&mut self, node: usize, value: QTensor) -> Result<()> {
        if self.boundary[node] {
            return Err(Error::Input(format!("node {node} is a boundary node")));
        }
        self.values[node] = value;
        Ok(())
    }

    /// `self + step · direction` on interior nodes; boundary values are kept.
    pub fn displaced(&self, direction: &[QTensor], step: f64) -> Field {
        let mut out = self.clone();
        for ((v, d), &b) in out.values.iter_mut().zip(direction).zip(&self.boundary) {
            if !b {
                *v += step * *d;
            }
        }
        out
    }

    pub fn position(&self, i: usize, j: usize) -> [f64; 2] {
        // the last node lands exactly on the far edge
        [
            self.origin[0] + self.width * (i as f64 / (self.nx - 1) as f64),
            self.origin[1] + self.height * (j as f64 / (self.ny - 1) as f64),
        ]
    }

    pub fn center(&self) -> [f64; 2] {
        [
            self.origin[0] + 0.5 * self.width,
            self.origin[1] + 0.5 * self.height,
        ]
    }

    /// Distance of node `(i, j)` to the edge of the rectangle.
    pub fn distance_to_boundary(&self, i: usize, j: usize) -> f64 {
        let x = self.width * (i as f64 / (self.nx - 1) as f64);
        let y = self.height * (j as f64 / (self.ny - 1) as f64);
        x.min(self.width - x).min(y).min(self.height - y).max(0.0)
    }

    /// FNV-1a hash of the boundary values in node order.
    pub fn boundary_checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for (v, &b) in self.values.iter().zip(&self.boundary) {
            if b {
                for c in v.0 {
                    for byte in c.to_bits().to_le_bytes() {
                        h ^= byte as u64;
                        h = h.wrapping_mul(0x0000_0100_0000_01b3);
                    }
                }
            }
        }
        h
    }

    /// Smallest physicality margin over the nodes.
    pub fn min_margin(&self) -> f64 {
        self.values.iter().map(|q| q.margin()).fold(f64::INFINITY, f64::min)
    }

    pub fn cells(&self) -> usize {
        (self.nx - 1) * (self.ny - 1)
    }

    /// Cell `c` as `(cx, cy)`, cells numbered with `x` fastest.
    pub fn cell_coords(&self, c: usize) -> (usize, usize) {
        (c % (self.nx - 1), c / (self.nx - 1))
    }

    /// Global nodes of cell `(cx, cy)` in local order
    /// `(0,0), (1,0), (0,1), (1,1)`.
    pub fn cell_nodes(&self, cx: usize, cy: usize) -> [usize; 4] {
        let n0 = self.index(cx, cy);
        [n0, n0 + 1, n0 + self.nx, n0 + self.nx + 1]
    }

    /// Interpolated value, in-plane gradient and quadrature weight at Gauss
    /// point `gauss` (0..4) of cell `(cx, cy)`.
    pub fn element_eval(&self, cx: usize, cy: usize, gauss: usize) -> Result<ElementPoint> {
        if cx + 1 >= self.nx || cy + 1 >= self.ny || gauss >= 4 {
            return Err(Error::Input(format!(
                "cell ({cx}, {cy}) / gauss point {gauss} out of range"
            )));
        }
        Ok(self.element_point(cx, cy, gauss))
    }

    pub(crate) fn element_point(&self, cx: usize, cy: usize, gauss: usize) -> ElementPoint {
        let nodes = self.cell_nodes(cx, cy);
        let r = &REFERENCE;
        let (sx, sy) = (2.0 / self.hx(), 2.0 / self.hy());
        let mut q = QTensor::ZERO;
        let mut dx = QTensor::ZERO;
        let mut dy = QTensor::ZERO;
        let mut shape_dx = [0.0; 4];
        let mut shape_dy = [0.0; 4];
        for a in 0..4 {
            let v = self.values[nodes[a]];
            shape_dx[a] = r.dxi[gauss][a] * sx;
            shape_dy[a] = r.deta[gauss][a] * sy;
            q += r.shape[gauss][a] * v;
            dx += shape_dx[a] * v;
            dy += shape_dy[a] * v;
        }
        ElementPoint {
            q,
            d: GradientPair { dx, dy },
            weight: 0.25 * self.hx() * self.hy(),
            nodes,
            shape: r.shape[gauss],
            shape_dx,
            shape_dy,
        }
    }

    /// Writes the CSV representation (17 significant digits).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 140);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for j in 0..self.ny {
            for i in 0..self.nx {
                let [x, y] = self.position(i, j);
                let v = self.value(i, j).0;
                let _ = writeln!(
                    out,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    x, y, v[0], v[1], v[2], v[3], v[4]
                );
            }
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Field> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Field::from_csv_str(&text)
    }

    /// Parses a field from CSV text. Rows and columns in errors are 1-based,
    /// the header being row 1.
    pub fn from_csv_str(text: &str) -> Result<Field> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::format(1, 1, "empty file"))?;
        let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
        let expected: Vec<&str> = CSV_HEADER.split(',').collect();
        for (c, want) in expected.iter().enumerate() {
            match cols.get(c) {
                Some(got) if got == want => {}
                Some(got) => {
                    return Err(Error::format(1, c + 1, format!("expected header `{want}`, found `{got}`")))
                }
                None => return Err(Error::format(1, c + 1, format!("missing header `{want}`"))),
            }
        }
        if cols.len() > expected.len() {
            return Err(Error::format(1, expected.len() + 1, "unexpected extra header column"));
        }

        let mut rows: Vec<(usize, [f64; 7])> = Vec::new();
        for (lineno, line) in lines {
            let row = lineno + 1;
            let mut vals = [0.0; 7];
            let mut n = 0;
            for (c, cell) in line.trim().split(',').enumerate() {
                if c >= 7 {
                    return Err(Error::format(row, c + 1, "too many columns"));
                }
                let v: f64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| Error::format(row, c + 1, format!("not a number: `{}`", cell.trim())))?;
                if !v.is_finite() {
                    return Err(Error::format(row, c + 1, "non-finite value"));
                }
                vals[c] = v;
                n = c + 1;
            }
            if n != 7 {
                return Err(Error::format(row, n + 1, format!("expected 7 columns, found {n}")));
            }
            rows.push((row, vals));
        }
        if rows.is_empty() {
            return Err(Error::format(2, 1, "no data rows"));
        }

        let y0 = rows[0].1[1];
        let nx = rows.iter().take_while(|(_, r)| r[1] == y0).count();
        if rows.len() % nx != 0 {
            let last = rows.last().map(|r| r.0 + 1).unwrap_or(2);
            return Err(Error::format(
                last,
                1,
                format!("{} data rows is not a multiple of the row length {nx}", rows.len()),
            ));
        }
        let ny = rows.len() / nx;
        if nx < 3 || ny < 3 {
            return Err(Error::format(2, 1, format!("grid {nx}×{ny} is smaller than 3×3")));
        }
        let xs: Vec<f64> = rows[..nx].iter().map(|(_, r)| r[0]).collect();
        let ys: Vec<f64> = (0..ny).map(|j| rows[j * nx].1[1]).collect();
        check_uniform(&xs, &rows, 1, |k| k)?;
        check_uniform(&ys, &rows, 2, |k| k * nx)?;

        let mut values = Vec::with_capacity(rows.len());
        for (k, (row, r)) in rows.iter().enumerate() {
            let (i, j) = (k % nx, k / nx);
            if r[0] != xs[i] {
                return Err(Error::format(*row, 1, format!("x = {} does not match column {i}", r[0])));
            }
            if r[1] != ys[j] {
                return Err(Error::format(*row, 2, format!("y = {} does not match row {j}", r[1])));
            }
            values.push(QTensor([r[2], r[3], r[4], r[5], r[6]]));
        }
        let grid = GridSpec {
            nx,
            ny,
            width: xs[nx - 1] - xs[0],
            height: ys[ny - 1] - ys[0],
        };
        Field::with_origin(grid, [xs[0], ys[0]], values)
    }
}

fn check_uniform(
    coords: &[f64],
    rows: &[(usize, [f64; 7])],
    column: usize,
    row_of: impl Fn(usize) -> usize,
) -> Result<()> {
    let n = coords.len();
    let h = (coords[n - 1] - coords[0]) / (n - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::format(rows[row_of(1)].0, column, "coordinates must increase"));
    }
    for (k, &c) in coords.iter().enumerate() {
        let want = coords[0] + k as f64 * h;
        if (c - want).abs() > 1e-9 * h.max(1.0) * n as f64 {
            return Err(Error::format(
                rows[row_of(k)].0,
                column,
                format!("coordinate {c} breaks uniform spacing {h}"),
            ));
        }
    }
    Ok(())
}

/// Shape data of one Gauss point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementPoint {
    pub q: QTensor,
    pub d: GradientPair,
    pub weight: f64,
    pub nodes: [usize; 4],
    pub shape: [f64; 4],
    pub shape_dx: [f64; 4],
    pub shape_dy: [f64; 4],
}

struct Reference {
    shape: [[f64; 4]; 4],
    dxi: [[f64; 4]; 4],
    deta: [[f64; 4]; 4],
}

const G: f64 = 0.577_350_269_189_625_8; // 1/√3
const LOCAL: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)];

/// 2×2 Gauss rule on the bilinear reference square `[−1, 1]²`; Gauss points
/// follow the same local ordering as the nodes.
const REFERENCE: Reference = {
    let mut shape = [[0.0; 4]; 4];
    let mut dxi = [[0.0; 4]; 4];
    let mut deta = [[0.0; 4]; 4];
    let mut g = 0;
    while g < 4 {
        let xi = LOCAL[g].0 * G;
        let eta = LOCAL[g].1 * G;
        let mut a = 0;
        while a < 4 {
            let (xa, ya) = LOCAL[a];
            shape[g][a] = 0.25 * (1.0 + xa * xi) * (1.0 + ya * eta);
            dxi[g][a] = 0.25 * xa * (1.0 + ya * eta);
            deta[g][a] = 0.25 * ya * (1.0 + xa * xi);
            a += 1;
        }
        g += 1;
    }
    Reference { shape, dxi, deta }
};

/// Builds the initial iterate: Dirichlet ring from `boundary`, interior per `init`.
pub fn make_field(grid: GridSpec, boundary: &BoundarySpec, init: InteriorInit) -> Result<Field> {
    grid.validate()?;
    boundary.validate()?;
    let mut field = Field::constant(grid, QTensor::ZERO)?;
    let [cx, cy] = field.center();

    let mut sum = QTensor::ZERO;
    let mut count = 0usize;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let node = field.index(i, j);
            if field.boundary[node] {
                let [x, y] = field.position(i, j);
                let q = boundary.tensor_at((y - cy).atan2(x - cx));
                field.values[node] = q;
                sum += q;
                count += 1;
            }
        }
    }
    let average = sum * (1.0 / count as f64);

    let mut rng = match init {
        InteriorInit::Random { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let (half_w, half_h) = (0.5 * grid.width, 0.5 * grid.height);
    for j in 1..grid.ny - 1 {
        for i in 1..grid.nx - 1 {
            let [x, y] = field.position(i, j);
            let (rx, ry) = ((x - cx) / half_w, (y - cy) / half_h);
            let value = match init {
                InteriorInit::Constant => average,
                InteriorInit::Blend | InteriorInit::Random { .. } => {
                    // normalized "square radius": 0 at the center, 1 on the ring
                    let rho = rx.abs().max(ry.abs()).min(1.0);
                    let edge = boundary.tensor_at((y - cy).atan2(x - cx));
                    let mut v = rho * edge + (1.0 - rho) * average;
                    if let (Some(rng), InteriorInit::Random { amplitude, .. }) = (rng.as_mut(), init) {
                        for c in v.0.iter_mut() {
                            *c += amplitude * rng.gen_range(-1.0..1.0);
                        }
                    }
                    v
                }
            };
            let node = field.index(i, j);
            field.values[node] = clamp_margin(value, INIT_MARGIN);
        }
    }
    Ok(field)
}

/// Shrinks `q` toward zero until its margin is at least `floor`.
pub fn clamp_margin(q: QTensor, floor: f64) -> QTensor {
    let e = q.eigen();
    if e.margin() >= floor {
        return q;
    }
    let mut t = 1.0_f64;
    if e.lambda_min() < 0.0 {
        t = t.min((1.0 / 3.0 - floor) / -e.lambda_min());
    }
    if e.lambda_max() > 0.0 {
        t = t.min((2.0 / 3.0 - floor) / e.lambda_max());
    }
    // rounding can leave the margin a hair under the floor
    q * (t * (1.0 - 1e-12))
}

/// Polar angle of node `(i, j)` about the domain center, in `(−π, π]`.
pub fn polar_angle(field: &Field, i: usize, j: usize) -> f64 {
    let [x, y] = field.position(i, j);
    let [cx, cy] = field.center();
    let a = (y - cy).atan2(x - cx);
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}
