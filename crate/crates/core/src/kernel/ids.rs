//! Preorder identifiers. A counter travels the tree depth-first; each variable
//! takes the current value as its ID and advances it by `1 + r` with `r`
//! uniform in `[0, 2 * incr_min]`, reserving the positions `id..=id_plus`.
//! The final counter `n_plus` is then broadcast down the tree.

use rand::Rng;

use crate::sim::{Node, SimError};
use crate::wire::{Ids, Msg};

use super::TreeView;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IdInfo {
    pub id: u64,
    pub id_plus: u64,
    pub n_plus: u64,
}

impl IdInfo {
    /// Number of positions reserved by this variable.
    pub fn width(&self) -> u64 {
        self.id_plus - self.id + 1
    }
}

pub async fn assign_ids(node: &Node, view: &TreeView, incr_min: u64) -> Result<IdInfo, SimError> {
    let id = match view.parent {
        None => 0,
        Some(p) => {
            let (_, m) = node.recv(move |f, m| f == p && matches!(m, Msg::Ids(Ids::Down { .. }))).await?;
            let Msg::Ids(Ids::Down { next }) = m else { unreachable!() };
            next
        }
    };
    let r = node.rng().gen_range(0..=2 * incr_min);
    let id_plus = id + r;
    let mut next = id_plus + 1;
    for c in &view.children {
        let c = *c;
        node.send(c, Msg::Ids(Ids::Down { next }));
        let (_, m) = node.recv(move |f, m| f == c && matches!(m, Msg::Ids(Ids::Up { .. }))).await?;
        let Msg::Ids(Ids::Up { next: n }) = m else { unreachable!() };
        next = n;
    }
    let n_plus = match view.parent {
        None => next,
        Some(p) => {
            node.send(p, Msg::Ids(Ids::Up { next }));
            let (_, m) = node.recv(move |f, m| f == p && matches!(m, Msg::Ids(Ids::Total { .. }))).await?;
            let Msg::Ids(Ids::Total { n_plus }) = m else { unreachable!() };
            n_plus
        }
    };
    for c in &view.children {
        node.send(*c, Msg::Ids(Ids::Total { n_plus }));
    }
    Ok(IdInfo { id, id_plus, n_plus })
}
