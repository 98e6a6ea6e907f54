//! Building blocks shared by every solver: leader election, distributed DFS
//! pseudo-trees, preorder IDs and routing to the circular previous variable.

pub mod dfs;
pub mod election;
pub mod ids;
pub mod routing;

use std::collections::BTreeSet;
use std::rc::Rc;

use serde::Serialize;

use crate::model::{Problem, VarId};
use crate::sim::{Node, SimError};

pub use dfs::{build_tree, ChildOrder};
pub use election::elect;
pub use ids::{assign_ids, IdInfo};
pub use routing::to_previous;

/// Where the first pseudo-tree comes from.
#[derive(Clone, Debug)]
pub enum TreeSource {
    /// Elect a root, then run the distributed DFS.
    Elect(ChildOrder),
    /// Install a given pseudo-tree; used to reproduce worked examples.
    Fixed(Rc<PseudoTree>),
}

impl Default for TreeSource {
    fn default() -> Self {
        TreeSource::Elect(ChildOrder::Random)
    }
}

/// Builds (or installs) the epoch-0 pseudo-tree at this variable.
pub async fn initial_tree(node: &Node, source: &TreeSource) -> Result<TreeView, SimError> {
    match source {
        TreeSource::Elect(order) => {
            let root = elect(node).await?;
            build_tree(node, 0, root, order).await
        }
        TreeSource::Fixed(tree) => {
            let view = tree.view(node.var()).clone();
            dfs::install_fixed(node, 0, view.clone());
            Ok(view)
        }
    }
}

/// One variable's local view of a pseudo-tree.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TreeView {
    pub parent: Option<VarId>,
    pub pseudo_parents: Vec<VarId>,
    pub children: Vec<VarId>,
    pub pseudo_children: Vec<VarId>,
}

impl TreeView {
    pub fn is_root(&self) -> bool {
        self.parent.is_none()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Parent followed by pseudo-parents.
    pub fn ancestors_linked(&self) -> Vec<VarId> {
        self.parent.iter().copied().chain(self.pseudo_parents.iter().copied()).collect()
    }

    /// Children followed by pseudo-children.
    pub fn descendants_linked(&self) -> Vec<VarId> {
        self.children.iter().chain(&self.pseudo_children).copied().collect()
    }
}

/// A whole pseudo-tree, as seen by an observer. Used for fixed trees in tests
/// and as the centralized reference for the distributed construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PseudoTree {
    pub roots: Vec<VarId>,
    pub views: Vec<TreeView>,
}

impl PseudoTree {
    pub fn view(&self, v: VarId) -> &TreeView {
        &self.views[v.index()]
    }

    /// Preorder of the tree containing `root`, children in their stored order.
    pub fn preorder(&self, root: VarId) -> Vec<VarId> {
        let mut out = Vec::new();
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            out.push(v);
            for c in self.views[v.index()].children.iter().rev() {
                stack.push(*c);
            }
        }
        out
    }

    /// Circular preorder predecessor of `v` within its tree.
    pub fn previous(&self, v: VarId) -> VarId {
        let root = self.root_of(v);
        let order = self.preorder(root);
        let i = order.iter().position(|x| *x == v).expect("in tree");
        order[(i + order.len() - 1) % order.len()]
    }

    pub fn root_of(&self, mut v: VarId) -> VarId {
        while let Some(p) = self.views[v.index()].parent {
            v = p;
        }
        v
    }

    pub fn depth(&self, mut v: VarId) -> usize {
        let mut d = 0;
        while let Some(p) = self.views[v.index()].parent {
            v = p;
            d += 1;
        }
        d
    }

    pub fn is_ancestor(&self, a: VarId, mut v: VarId) -> bool {
        while let Some(p) = self.views[v.index()].parent {
            if p == a {
                return true;
            }
            v = p;
        }
        false
    }

    /// Checks the pseudo-tree properties against the constraint graph: tree
    /// edges and back edges partition the graph edges, and every back edge
    /// joins an ancestor to a descendant.
    pub fn validate(&self, problem: &Problem) -> Result<(), String> {
        let n = problem.num_vars();
        if self.views.len() != n {
            return Err("view count".into());
        }
        let mut seen = BTreeSet::new();
        for r in &self.roots {
            for v in self.preorder(*r) {
                if !seen.insert(v) {
                    return Err(format!("{v} reached twice"));
                }
            }
        }
        if seen.len() != n {
            return Err("tree does not span every variable".into());
        }
        for v in problem.var_ids() {
            let w = self.view(v);
            let mut linked: Vec<VarId> = w.ancestors_linked();
            linked.extend(w.descendants_linked());
            linked.sort();
            if linked != problem.neighbors(v) {
                return Err(format!("{v}: links differ from neighbours"));
            }
            for c in &w.children {
                if self.view(*c).parent != Some(v) {
                    return Err(format!("{c}: parent mismatch"));
                }
            }
            for pp in &w.pseudo_parents {
                if !self.is_ancestor(*pp, v) || w.parent == Some(*pp) {
                    return Err(format!("{v}: pseudo-parent {pp} is not a proper ancestor"));
                }
                if !self.view(*pp).pseudo_children.contains(&v) {
                    return Err(format!("{pp}: missing pseudo-child {v}"));
                }
            }
        }
        Ok(())
    }
}

/// Centralized DFS from `root` that visits unvisited neighbours in increasing
/// `rank` order, mirroring [`ChildOrder::Ranked`].
pub fn reference_dfs(problem: &Problem, roots: &[VarId], rank: &[u32]) -> PseudoTree {
    let n = problem.num_vars();
    let mut views = vec![TreeView::default(); n];
    let mut visited = vec![false; n];
    fn go(p: &Problem, v: VarId, parent: Option<VarId>, rank: &[u32], visited: &mut [bool], views: &mut [TreeView]) {
        visited[v.index()] = true;
        views[v.index()].parent = parent;
        views[v.index()].pseudo_parents =
            p.neighbors(v).iter().copied().filter(|w| visited[w.index()] && Some(*w) != parent).collect();
        loop {
            let next = p.neighbors(v).iter().copied().filter(|w| !visited[w.index()]).min_by_key(|w| rank[w.index()]);
            let Some(c) = next else { break };
            views[v.index()].children.push(c);
            go(p, c, Some(v), rank, visited, views);
        }
        let w = &views[v.index()];
        let pc: Vec<VarId> = p
            .neighbors(v)
            .iter()
            .copied()
            .filter(|x| Some(*x) != w.parent && !w.pseudo_parents.contains(x) && !w.children.contains(x))
            .collect();
        views[v.index()].pseudo_children = pc;
    }
    for r in roots {
        go(problem, *r, None, rank, &mut visited, &mut views);
    }
    PseudoTree { roots: roots.to_vec(), views }
}

/// The pseudo-tree drawn for the five-variable colouring instance: root `x2`,
/// chain `x2 - x3`, `x3` with children `x5` then `x4`, `x4 - x1`, and the back
/// edge `x1 - x2`.
pub fn example_pseudo_tree(problem: &Problem) -> PseudoTree {
    let x = |name: &str| problem.var_by_name(name).expect("five-variable instance");
    let mut rank = vec![0u32; problem.num_vars()];
    for (r, name) in ["x2", "x3", "x5", "x4", "x1"].iter().enumerate() {
        rank[x(name).index()] = r as u32;
    }
    reference_dfs(problem, &[x("x2")], &rank)
}
