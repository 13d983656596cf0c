//! Heterogeneous lattice placement.
//!
//! Group `m` holds `x_m` nodes, assigned contiguously: `K_1 = {1..x_1}`,
//! `K_2 = {x_1+1..x_1+x_2}`, and so on. A lattice cell is a tuple
//! `(a_1, .., a_s)` with `a_m in 1..=x_m`; its T-set is the node at coordinate
//! `a_m` of every group. Cells are numbered `1..=X` in mixed radix with `a_1`
//! varying slowest. Cell `t` owns files `eta1*(t-1)+1 ..= eta1*t` and
//! functions `eta2*(t-1)+1 ..= eta2*t`.
//!
//! Both the cell numbering and the order of nodes inside a group can be
//! relabeled ([`Design::with_cell_permutation`], [`Design::with_group_orders`]);
//! no load or count depends on either.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{CellIndex, FileId, FunctionId, NodeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DesignError {
    #[error("at least 2 node groups are required, got s = {0}")]
    TooFewGroups(usize),
    #[error("s = {s} but x lists {len} group sizes")]
    LengthMismatch { s: usize, len: usize },
    #[error("group {group} has x = {size}; every group needs at least 2 nodes")]
    GroupTooSmall { group: usize, size: usize },
    #[error("{0} must be at least 1")]
    ZeroEta(&'static str),
    #[error("design is too large to index (product of group sizes overflows)")]
    Overflow,
    #[error("{what} {index} out of range 1..={max}")]
    OutOfRange {
        what: &'static str,
        index: usize,
        max: usize,
    },
    #[error("invalid relabeling: {0}")]
    BadRelabeling(String),
}

/// Placement parameters: group sizes and block multiplicities.
///
/// `K`, `X`, `N` and `Q` are derived on demand and never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct DesignParams {
    x: Vec<usize>,
    eta1: usize,
    eta2: usize,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    s: usize,
    x: Vec<usize>,
    eta1: usize,
    eta2: usize,
}

impl TryFrom<RawParams> for DesignParams {
    type Error = DesignError;
    fn try_from(raw: RawParams) -> Result<Self, Self::Error> {
        DesignParams::with_s(raw.s, raw.x, raw.eta1, raw.eta2)
    }
}

impl From<DesignParams> for RawParams {
    fn from(p: DesignParams) -> Self {
        RawParams {
            s: p.s(),
            x: p.x,
            eta1: p.eta1,
            eta2: p.eta2,
        }
    }
}

impl DesignParams {
    /// `s` is taken from `x.len()`.
    pub fn new(x: Vec<usize>, eta1: usize, eta2: usize) -> Result<Self, DesignError> {
        Self::with_s(x.len(), x, eta1, eta2)
    }

    /// Checks that the stated `s` agrees with the group list.
    pub fn with_s(s: usize, x: Vec<usize>, eta1: usize, eta2: usize) -> Result<Self, DesignError> {
        if s < 2 {
            return Err(DesignError::TooFewGroups(s));
        }
        if x.len() != s {
            return Err(DesignError::LengthMismatch { s, len: x.len() });
        }
        if let Some((group, &size)) = x.iter().enumerate().find(|(_, &v)| v < 2) {
            return Err(DesignError::GroupTooSmall { group: group + 1, size });
        }
        if eta1 == 0 {
            return Err(DesignError::ZeroEta("eta1"));
        }
        if eta2 == 0 {
            return Err(DesignError::ZeroEta("eta2"));
        }
        let lattice = x
            .iter()
            .try_fold(1usize, |acc, &v| acc.checked_mul(v))
            .ok_or(DesignError::Overflow)?;
        lattice
            .checked_mul(eta1)
            .and_then(|n| lattice.checked_mul(eta2).and_then(|q| n.checked_mul(q)))
            .ok_or(DesignError::Overflow)?;
        Ok(Self { x, eta1, eta2 })
    }

    pub fn s(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[usize] {
        &self.x
    }

    pub fn eta1(&self) -> usize {
        self.eta1
    }

    pub fn eta2(&self) -> usize {
        self.eta2
    }

    /// Number of nodes, `K = sum x_i`.
    pub fn num_nodes(&self) -> usize {
        self.x.iter().sum()
    }

    /// Number of lattice cells, `X = prod x_i`.
    pub fn lattice_size(&self) -> usize {
        self.x.iter().product()
    }

    /// `N = eta1 * X`.
    pub fn num_files(&self) -> usize {
        self.eta1 * self.lattice_size()
    }

    /// `Q = eta2 * X`.
    pub fn num_functions(&self) -> usize {
        self.eta2 * self.lattice_size()
    }
}

/// Files and functions held by one node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeView {
    pub node: NodeId,
    pub group: usize,
    /// `M_k`, ascending.
    pub files: Vec<FileId>,
    /// `W_k`, ascending.
    pub functions: Vec<FunctionId>,
}

/// The placement. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    params: DesignParams,
    /// `groups[m][a]` is the node at coordinate `a + 1` of group `m + 1`.
    groups: Vec<Vec<NodeId>>,
    /// `(group, coordinate)` per node, both zero based, indexed by `node - 1`.
    node_coord: Vec<(usize, usize)>,
    /// Mixed-radix strides, `a_1` slowest.
    strides: Vec<usize>,
    /// Canonical cell offset for each t-index (`t - 1`).
    cell_of_t: Vec<usize>,
    /// Inverse of `cell_of_t`, storing 1-based t-indices.
    t_of_cell: Vec<CellIndex>,
}

impl Design {
    pub fn build(params: DesignParams) -> Result<Self, DesignError> {
        // Re-validate in case params were built through serde.
        let params = DesignParams::new(params.x.clone(), params.eta1, params.eta2)?;
        let mut groups = Vec::with_capacity(params.s());
        let mut next = 1;
        for &size in params.x() {
            groups.push((next..next + size).collect::<Vec<_>>());
            next += size;
        }
        let x = params.x();
        let mut strides = vec![1usize; x.len()];
        for m in (0..x.len().saturating_sub(1)).rev() {
            strides[m] = strides[m + 1] * x[m + 1];
        }
        let lattice = params.lattice_size();
        let mut design = Self {
            node_coord: Vec::new(),
            groups,
            strides,
            cell_of_t: (0..lattice).collect(),
            t_of_cell: (1..=lattice).collect(),
            params,
        };
        design.index_nodes();
        Ok(design)
    }

    fn index_nodes(&mut self) {
        let mut coord = vec![(0, 0); self.params.num_nodes()];
        for (m, members) in self.groups.iter().enumerate() {
            for (a, &node) in members.iter().enumerate() {
                coord[node - 1] = (m, a);
            }
        }
        self.node_coord = coord;
    }

    /// Relabels cells: the cell that canonically has index `c` gets index
    /// `perm[c - 1]`. `perm` must be a permutation of `1..=X`.
    pub fn with_cell_permutation(&self, perm: &[CellIndex]) -> Result<Self, DesignError> {
        let lattice = self.lattice_size();
        if perm.len() != lattice {
            return Err(DesignError::BadRelabeling(format!(
                "permutation has {} entries, expected {lattice}",
                perm.len()
            )));
        }
        let mut cell_of_t = vec![usize::MAX; lattice];
        let mut t_of_cell = vec![0; lattice];
        for (canon_t, &new_t) in perm.iter().enumerate() {
            if new_t == 0 || new_t > lattice || cell_of_t[new_t - 1] != usize::MAX {
                return Err(DesignError::BadRelabeling(format!(
                    "{new_t} is not a fresh index in 1..={lattice}"
                )));
            }
            let cell = self.cell_of_t[canon_t];
            cell_of_t[new_t - 1] = cell;
            t_of_cell[cell] = new_t;
        }
        let mut out = self.clone();
        out.cell_of_t = cell_of_t;
        out.t_of_cell = t_of_cell;
        Ok(out)
    }

    /// Reorders the nodes inside each group: `orders[m]` lists group `m + 1`'s
    /// nodes by coordinate. Group membership itself cannot change.
    pub fn with_group_orders(&self, orders: Vec<Vec<NodeId>>) -> Result<Self, DesignError> {
        if orders.len() != self.groups.len() {
            return Err(DesignError::BadRelabeling("wrong number of groups".into()));
        }
        for (m, order) in orders.iter().enumerate() {
            let mut a = order.clone();
            let mut b = self.groups[m].clone();
            a.sort_unstable();
            b.sort_unstable();
            if a != b {
                return Err(DesignError::BadRelabeling(format!(
                    "group {} must keep its members",
                    m + 1
                )));
            }
        }
        let mut out = self.clone();
        out.groups = orders;
        out.index_nodes();
        Ok(out)
    }

    pub fn params(&self) -> &DesignParams {
        &self.params
    }

    pub fn s(&self) -> usize {
        self.params.s()
    }

    pub fn num_nodes(&self) -> usize {
        self.params.num_nodes()
    }

    pub fn lattice_size(&self) -> usize {
        self.params.lattice_size()
    }

    pub fn num_files(&self) -> usize {
        self.params.num_files()
    }

    pub fn num_functions(&self) -> usize {
        self.params.num_functions()
    }

    /// Groups in coordinate order, `groups()[m][a]` = node at coordinate `a + 1`.
    pub fn groups(&self) -> &[Vec<NodeId>] {
        &self.groups
    }

    fn check_node(&self, node: NodeId) -> Result<(), DesignError> {
        if node == 0 || node > self.num_nodes() {
            return Err(DesignError::OutOfRange {
                what: "node",
                index: node,
                max: self.num_nodes(),
            });
        }
        Ok(())
    }

    fn check_t(&self, t: CellIndex) -> Result<(), DesignError> {
        if t == 0 || t > self.lattice_size() {
            return Err(DesignError::OutOfRange {
                what: "t-index",
                index: t,
                max: self.lattice_size(),
            });
        }
        Ok(())
    }

    /// Zero-based group of `node`. Panics on an invalid id.
    pub fn group_of(&self, node: NodeId) -> usize {
        self.node_coord[node - 1].0
    }

    /// Zero-based coordinate of `node` inside its group. Panics on an invalid id.
    pub fn coord_of(&self, node: NodeId) -> usize {
        self.node_coord[node - 1].1
    }

    /// Lattice tuple of `t`, 1-based coordinates.
    pub fn tuple_of(&self, t: CellIndex) -> Result<Vec<usize>, DesignError> {
        self.check_t(t)?;
        let cell = self.cell_of_t[t - 1];
        Ok(self
            .strides
            .iter()
            .zip(self.params.x())
            .map(|(&stride, &x)| (cell / stride) % x + 1)
            .collect())
    }

    /// Index of the cell with the given 1-based tuple.
    pub fn index_of_tuple(&self, tuple: &[usize]) -> Result<CellIndex, DesignError> {
        if tuple.len() != self.s() {
            return Err(DesignError::OutOfRange {
                what: "tuple length",
                index: tuple.len(),
                max: self.s(),
            });
        }
        let mut cell = 0;
        for (m, (&a, &x)) in tuple.iter().zip(self.params.x()).enumerate() {
            if a == 0 || a > x {
                return Err(DesignError::OutOfRange {
                    what: "coordinate",
                    index: a,
                    max: x,
                });
            }
            cell += (a - 1) * self.strides[m];
        }
        Ok(self.t_of_cell[cell])
    }

    /// Cell index from zero-based coordinates; internal fast path.
    pub(crate) fn index_of_coords(&self, coords: &[usize]) -> CellIndex {
        let cell: usize = coords.iter().zip(&self.strides).map(|(a, s)| a * s).sum();
        self.t_of_cell[cell]
    }

    /// The T-set of cell `t`: one node per group, ascending by node id.
    pub fn t_members(&self, t: CellIndex) -> Result<Vec<NodeId>, DesignError> {
        let tuple = self.tuple_of(t)?;
        let mut nodes: Vec<NodeId> = tuple.iter().enumerate().map(|(m, &a)| self.groups[m][a - 1]).collect();
        nodes.sort_unstable();
        Ok(nodes)
    }

    /// Cell whose T-set equals `nodes` (any order), if `nodes` has exactly one
    /// member per group.
    pub fn t_index_of_members(&self, nodes: &[NodeId]) -> Option<CellIndex> {
        if nodes.len() != self.s() {
            return None;
        }
        let mut coords = vec![usize::MAX; self.s()];
        for &node in nodes {
            if node == 0 || node > self.num_nodes() {
                return None;
            }
            let (m, a) = self.node_coord[node - 1];
            if coords[m] != usize::MAX {
                return None;
            }
            coords[m] = a;
        }
        Some(self.index_of_coords(&coords))
    }

    /// `B_t`.
    pub fn file_block(&self, t: CellIndex) -> RangeInclusive<FileId> {
        let e = self.params.eta1();
        e * (t - 1) + 1..=e * t
    }

    /// `D_t`.
    pub fn function_block(&self, t: CellIndex) -> RangeInclusive<FunctionId> {
        let e = self.params.eta2();
        e * (t - 1) + 1..=e * t
    }

    /// Cell whose file block contains `file`.
    pub fn cell_of_file(&self, file: FileId) -> Result<CellIndex, DesignError> {
        if file == 0 || file > self.num_files() {
            return Err(DesignError::OutOfRange {
                what: "file",
                index: file,
                max: self.num_files(),
            });
        }
        Ok((file - 1) / self.params.eta1() + 1)
    }

    /// Cell whose function block contains `function`.
    pub fn cell_of_function(&self, function: FunctionId) -> Result<CellIndex, DesignError> {
        if function == 0 || function > self.num_functions() {
            return Err(DesignError::OutOfRange {
                what: "function",
                index: function,
                max: self.num_functions(),
            });
        }
        Ok((function - 1) / self.params.eta2() + 1)
    }

    /// Whether `node` belongs to the T-set of cell `t`.
    pub fn in_cell(&self, node: NodeId, t: CellIndex) -> bool {
        let (m, a) = self.node_coord[node - 1];
        let cell = self.cell_of_t[t - 1];
        (cell / self.strides[m]) % self.params.x()[m] == a
    }

    /// Cells whose T-set contains `node`, ascending.
    pub fn cells_of_node(&self, node: NodeId) -> Result<Vec<CellIndex>, DesignError> {
        self.check_node(node)?;
        let mut cells: Vec<CellIndex> = (1..=self.lattice_size()).filter(|&t| self.in_cell(node, t)).collect();
        cells.sort_unstable();
        Ok(cells)
    }

    /// `M_k` and `W_k` of one node.
    pub fn node_view(&self, node: NodeId) -> Result<NodeView, DesignError> {
        let cells = self.cells_of_node(node)?;
        let files = cells.iter().flat_map(|&t| self.file_block(t)).collect();
        let functions = cells.iter().flat_map(|&t| self.function_block(t)).collect();
        Ok(NodeView {
            node,
            group: self.group_of(node) + 1,
            files,
            functions,
        })
    }

    pub fn node_views(&self) -> Vec<NodeView> {
        (1..=self.num_nodes())
            .map(|k| self.node_view(k).expect("node in range"))
            .collect()
    }

    pub fn stores(&self, node: NodeId, file: FileId) -> Result<bool, DesignError> {
        self.check_node(node)?;
        Ok(self.in_cell(node, self.cell_of_file(file)?))
    }

    pub fn is_assigned(&self, node: NodeId, function: FunctionId) -> Result<bool, DesignError> {
        self.check_node(node)?;
        Ok(self.in_cell(node, self.cell_of_function(function)?))
    }

    /// Nodes assigned `function` that do not store `file`: `T_alpha \ T_ell`.
    pub fn requesters(&self, function: FunctionId, file: FileId) -> Result<Vec<NodeId>, DesignError> {
        let alpha = self.cell_of_function(function)?;
        let ell = self.cell_of_file(file)?;
        let owners = self.t_members(ell)?;
        Ok(self
            .t_members(alpha)?
            .into_iter()
            .filter(|k| !owners.contains(k))
            .collect())
    }

    /// Serializable snapshot for fixture diffing.
    pub fn dump(&self) -> DesignDump {
        DesignDump {
            params: self.params.clone(),
            num_nodes: self.num_nodes(),
            lattice_size: self.lattice_size(),
            num_files: self.num_files(),
            num_functions: self.num_functions(),
            groups: self.groups.clone(),
            tsets: (1..=self.lattice_size())
                .map(|t| TSetDump {
                    index: t,
                    tuple: self.tuple_of(t).expect("t in range"),
                    members: self.t_members(t).expect("t in range"),
                })
                .collect(),
            nodes: self.node_views(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TSetDump {
    pub index: CellIndex,
    pub tuple: Vec<usize>,
    pub members: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignDump {
    pub params: DesignParams,
    pub num_nodes: usize,
    pub lattice_size: usize,
    pub num_files: usize,
    pub num_functions: usize,
    pub groups: Vec<Vec<NodeId>>,
    pub tsets: Vec<TSetDump>,
    pub nodes: Vec<NodeView>,
}
