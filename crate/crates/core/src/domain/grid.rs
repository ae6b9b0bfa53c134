use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Index of a point of the underlying lattice. Grids cut from the same
/// lattice share sites, which is how nested domains are compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Site(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Boundary,
}

/// Uniform tensor lattice. One-dimensional lattices have `shape[1] == 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice<T> {
    dim: usize,
    shape: [usize; 2],
    origin: [T; 2],
    spacing: [T; 2],
}

impl<T: Scalar> Lattice<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn spacing(&self) -> [T; 2] {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, site: Site) -> [usize; 2] {
        [site.0 % self.shape[0], site.0 / self.shape[0]]
    }

    pub fn site(&self, i: usize, j: usize) -> Site {
        Site(j * self.shape[0] + i)
    }

    /// Site displaced by `offset`, if it stays on the lattice.
    pub fn offset(&self, site: Site, offset: [isize; 2]) -> Option<Site> {
        let [i, j] = self.index(site);
        let i = i.checked_add_signed(offset[0])?;
        let j = j.checked_add_signed(offset[1])?;
        (i < self.shape[0] && j < self.shape[1]).then(|| self.site(i, j))
    }

    pub fn coords(&self, site: Site) -> [T; 2] {
        let [i, j] = self.index(site);
        [
            self.origin[0] + T::from_usize_lossy(i) * self.spacing[0],
            self.origin[1] + T::from_usize_lossy(j) * self.spacing[1],
        ]
    }

    /// Offsets of the sites an interior node may couple to.
    pub fn stencil(&self) -> &'static [[isize; 2]] {
        const LINE: [[isize; 2]; 2] = [[-1, 0], [1, 0]];
        const PLANE: [[isize; 2]; 8] = [
            [-1, -1],
            [0, -1],
            [1, -1],
            [-1, 0],
            [1, 0],
            [-1, 1],
            [0, 1],
            [1, 1],
        ];
        if self.dim == 1 {
            &LINE
        } else {
            &PLANE
        }
    }

    fn same_as(&self, other: &Self) -> bool {
        self == other
    }
}

/// Active nodes of a lattice split into interior and boundary sets.
///
/// Every lattice neighbor of an interior node is either interior or boundary.
/// Boundary nodes carry a trace point at which Dirichlet data is sampled: the
/// node itself on rectangles, its radial projection onto the circle on disks.
#[derive(Clone, Debug)]
pub struct Grid<T> {
    lattice: Lattice<T>,
    sites: Vec<Site>,
    kinds: Vec<NodeKind>,
    traces: Vec<[T; 2]>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    // interior row or boundary slot of each node
    slot: Vec<usize>,
    lookup: Vec<u32>,
}

const INACTIVE: u32 = u32::MAX;

fn check_bounds<T: Scalar>(lo: T, hi: T, what: &str) -> Result<()> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(Error::InvalidGrid(format!(
            "{what}: need finite bounds with min < max, got ({lo}, {hi})"
        )))
    }
}

fn check_count(n: usize, what: &str) -> Result<()> {
    if n >= 3 {
        Ok(())
    } else {
        Err(Error::InvalidGrid(format!(
            "{what}: need at least 3 interior nodes per axis, got {n}"
        )))
    }
}

impl<T: Scalar> Grid<T> {
    /// `n` interior nodes on `(x_min, x_max)` with spacing `(x_max - x_min)/(n + 1)`.
    pub fn interval(x_min: T, x_max: T, n: usize) -> Result<Self> {
        check_bounds(x_min, x_max, "interval")?;
        check_count(n, "interval")?;
        let h = (x_max - x_min) / T::from_usize_lossy(n + 1);
        let lattice = Lattice {
            dim: 1,
            shape: [n + 2, 1],
            origin: [x_min, T::zero()],
            spacing: [h, T::one()],
        };
        Self::from_interior(lattice, |[i, _]| i >= 1 && i <= n, |_, x| x)
    }

    /// `nx * ny` interior nodes on the open rectangle `bounds[0] x bounds[1]`.
    pub fn rectangle(bounds: [(T, T); 2], nx: usize, ny: usize) -> Result<Self> {
        check_bounds(bounds[0].0, bounds[0].1, "rectangle x")?;
        check_bounds(bounds[1].0, bounds[1].1, "rectangle y")?;
        check_count(nx, "rectangle x")?;
        check_count(ny, "rectangle y")?;
        let lattice = Lattice {
            dim: 2,
            shape: [nx + 2, ny + 2],
            origin: [bounds[0].0, bounds[1].0],
            spacing: [
                (bounds[0].1 - bounds[0].0) / T::from_usize_lossy(nx + 1),
                (bounds[1].1 - bounds[1].0) / T::from_usize_lossy(ny + 1),
            ],
        };
        Self::from_interior(
            lattice,
            |[i, j]| i >= 1 && i <= nx && j >= 1 && j <= ny,
            |_, x| x,
        )
    }

    /// Lattice nodes strictly inside the disk are interior; lattice nodes
    /// outside it that neighbor an interior node are boundary, with their data
    /// taken at the radial projection onto the circle.
    ///
    /// The bounding square `[center - radius, center + radius]^2` carries
    /// `n_per_axis + 2` lattice nodes per axis.
    pub fn disk(center: [T; 2], radius: T, n_per_axis: usize) -> Result<Self> {
        if !(radius > T::zero() && radius.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "disk radius must be positive, got {radius}"
            )));
        }
        check_count(n_per_axis, "disk")?;
        let h = (radius + radius) / T::from_usize_lossy(n_per_axis + 1);
        let lattice = Lattice {
            dim: 2,
            shape: [n_per_axis + 2, n_per_axis + 2],
            origin: [center[0] - radius, center[1] - radius],
            spacing: [h, h],
        };
        // Integer test against the squared half-width avoids rounding at the rim.
        let m = n_per_axis + 1;
        let inside = |[i, j]: [usize; 2]| {
            let di = 2 * i as i64 - m as i64;
            let dj = 2 * j as i64 - m as i64;
            di * di + dj * dj < (m * m) as i64
        };
        Self::from_interior(lattice, inside, |_, x| {
            let dx = x[0] - center[0];
            let dy = x[1] - center[1];
            let r = (dx * dx + dy * dy).sqrt();
            [center[0] + radius * dx / r, center[1] + radius * dy / r]
        })
    }

    fn from_interior(
        lattice: Lattice<T>,
        is_interior: impl Fn([usize; 2]) -> bool,
        trace: impl Fn(Site, [T; 2]) -> [T; 2],
    ) -> Result<Self> {
        let interior: Vec<bool> = (0..lattice.len())
            .map(|s| is_interior(lattice.index(Site(s))))
            .collect();
        let mut g = Self::assemble(lattice, &interior)?;
        for &n in &g.boundary {
            g.traces[n] = trace(g.sites[n], g.lattice.coords(g.sites[n]));
        }
        Ok(g)
    }

    fn assemble(lattice: Lattice<T>, interior: &[bool]) -> Result<Self> {
        let mut active = vec![false; lattice.len()];
        for s in 0..lattice.len() {
            if !interior[s] {
                continue;
            }
            active[s] = true;
            for &off in lattice.stencil() {
                match lattice.offset(Site(s), off) {
                    Some(nb) => active[nb.0] = true,
                    None => {
                        return Err(Error::InvalidGrid(format!(
                            "interior site {s} has a stencil neighbor outside the lattice"
                        )))
                    }
                }
            }
        }
        let n_active = active.iter().filter(|a| **a).count();
        if !interior.iter().any(|i| *i) {
            return Err(Error::InvalidGrid("grid has no interior nodes".into()));
        }
        if n_active >= INACTIVE as usize {
            return Err(Error::InvalidGrid("too many nodes".into()));
        }
        let mut g = Grid {
            sites: Vec::with_capacity(n_active),
            kinds: Vec::with_capacity(n_active),
            traces: Vec::with_capacity(n_active),
            interior: Vec::new(),
            boundary: Vec::new(),
            slot: Vec::with_capacity(n_active),
            lookup: vec![INACTIVE; lattice.len()],
            lattice,
        };
        for s in 0..g.lattice.len() {
            if !active[s] {
                continue;
            }
            let node = g.sites.len();
            let site = Site(s);
            g.lookup[s] = node as u32;
            g.sites.push(site);
            g.traces.push(g.lattice.coords(site));
            if interior[s] {
                g.kinds.push(NodeKind::Interior);
                g.slot.push(g.interior.len());
                g.interior.push(node);
            } else {
                g.kinds.push(NodeKind::Boundary);
                g.slot.push(g.boundary.len());
                g.boundary.push(node);
            }
        }
        Ok(g)
    }

    /// Sub-domain on the same lattice: keeps the interior nodes accepted by
    /// `keep` (which must be interior here) and rebuilds the boundary layer.
    pub fn subgrid(&self, keep: impl Fn(usize) -> bool) -> Result<Self> {
        let mut interior = vec![false; self.lattice.len()];
        for &n in &self.interior {
            if keep(n) {
                interior[self.sites[n].0] = true;
            }
        }
        let mut g = Self::assemble(self.lattice.clone(), &interior)?;
        for n in 0..g.sites.len() {
            let parent = self.node_at(g.sites[n]).ok_or_else(|| {
                Error::InvalidGrid("sub-grid node outside the parent grid".into())
            })?;
            g.traces[n] = self.traces[parent];
        }
        Ok(g)
    }

    /// Sub-grid whose interior is the box of lattice indices `lo..=hi`.
    pub fn subgrid_box(&self, lo: [usize; 2], hi: [usize; 2]) -> Result<Self> {
        self.subgrid(|n| {
            let [i, j] = self.lattice.index(self.sites[n]);
            i >= lo[0] && i <= hi[0] && j >= lo[1] && j <= hi[1]
        })
    }

    /// Removes `layers` layers of interior nodes next to the boundary.
    pub fn peel(&self, layers: usize) -> Result<Self> {
        let mut interior = vec![false; self.lattice.len()];
        for &n in &self.interior {
            interior[self.sites[n].0] = true;
        }
        for layer in 0..layers {
            let current = interior.clone();
            for s in 0..current.len() {
                if current[s]
                    && self.lattice.stencil().iter().any(|&off| {
                        self.lattice
                            .offset(Site(s), off)
                            .is_none_or(|nb| !current[nb.0])
                    })
                {
                    interior[s] = false;
                }
            }
            if !interior.iter().any(|i| *i) {
                return Err(Error::InvalidGrid(format!(
                    "grid too small to peel {layers} layers (emptied after {})",
                    layer + 1
                )));
            }
        }
        let keep: Vec<usize> = self
            .interior
            .iter()
            .copied()
            .filter(|&n| interior[self.sites[n].0])
            .collect();
        let mut mask = vec![false; self.sites.len()];
        for n in keep {
            mask[n] = true;
        }
        self.subgrid(|n| mask[n])
    }

    pub fn lattice(&self) -> &Lattice<T> {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim
    }

    pub fn spacing(&self) -> [T; 2] {
        self.lattice.spacing
    }

    /// Quadrature weight of a node: `h` in 1D, `hx * hy` in 2D.
    pub fn weight(&self) -> T {
        if self.dim() == 1 {
            self.lattice.spacing[0]
        } else {
            self.lattice.spacing[0] * self.lattice.spacing[1]
        }
    }

    /// Number of active nodes.
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.kinds[node]
    }

    pub fn is_interior(&self, node: usize) -> bool {
        self.kinds[node] == NodeKind::Interior
    }

    pub fn site(&self, node: usize) -> Site {
        self.sites[node]
    }

    pub fn node_at(&self, site: Site) -> Option<usize> {
        match self.lookup.get(site.0) {
            Some(&v) if v != INACTIVE => Some(v as usize),
            _ => None,
        }
    }

    pub fn coords(&self, node: usize) -> [T; 2] {
        self.lattice.coords(self.sites[node])
    }

    /// Point at which Dirichlet data is sampled for this node.
    pub fn trace_point(&self, node: usize) -> [T; 2] {
        self.traces[node]
    }

    /// Row of an interior node in the interior block.
    pub fn interior_row(&self, node: usize) -> Option<usize> {
        self.is_interior(node).then(|| self.slot[node])
    }

    /// Position of a boundary node in the boundary list.
    pub fn boundary_slot(&self, node: usize) -> Option<usize> {
        (!self.is_interior(node)).then(|| self.slot[node])
    }

    /// Node closest to `x`, if any.
    pub fn nearest_node(&self, x: [T; 2]) -> Option<usize> {
        (0..self.len()).min_by(|&a, &b| {
            let da = dist2(self.coords(a), x, self.dim());
            let db = dist2(self.coords(b), x, self.dim());
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
        })
    }

    /// `true` when both grids live on the same lattice.
    pub fn shares_lattice(&self, other: &Self) -> bool {
        self.lattice.same_as(&other.lattice)
    }

    /// Interior of `self` inside the interior of `other`, and every boundary
    /// node of `self` active in `other`.
    pub fn nested_in(&self, other: &Self) -> bool {
        self.shares_lattice(other)
            && self.interior.iter().all(|&n| {
                other
                    .node_at(self.sites[n])
                    .is_some_and(|m| other.is_interior(m))
            })
            && self
                .boundary
                .iter()
                .all(|&n| other.node_at(self.sites[n]).is_some())
    }

    /// Closed node set (interior and boundary) inside the interior of `other`.
    pub fn compactly_nested_in(&self, other: &Self) -> bool {
        self.shares_lattice(other)
            && self.sites.iter().all(|&s| {
                other.node_at(s).is_some_and(|m| other.is_interior(m))
            })
    }
}

pub(crate) fn dist2<T: Scalar>(a: [T; 2], b: [T; 2], dim: usize) -> T {
    (0..dim).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum()
}
