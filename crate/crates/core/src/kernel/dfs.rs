//! Token-passing DFS. Neighbours first exchange per-epoch codenames; the
//! token then carries the set of visited codenames, so every variable can tell
//! visited neighbours apart without learning anything else.

use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::VarId;
use crate::sim::{Node, SimError};
use crate::wire::{Msg, Token};

use super::routing::install_view;
use super::TreeView;

/// How a variable picks the next unvisited neighbour to descend into.
#[derive(Clone, Debug)]
pub enum ChildOrder {
    Random,
    /// Lowest rank first; a global ranking used to reproduce fixed trees.
    Ranked(Rc<Vec<u32>>),
}

/// Runs this variable's part of the DFS for `epoch` and installs the view.
pub async fn build_tree(node: &Node, epoch: u32, is_root: bool, order: &ChildOrder) -> Result<TreeView, SimError> {
    let neighbors = node.neighbors().to_vec();
    let my_code: u128 = node.rng().gen();
    for w in &neighbors {
        node.send(*w, Msg::Token { epoch, token: Token::Announce { code: my_code } });
    }
    let mut codes = Vec::with_capacity(neighbors.len());
    for w in &neighbors {
        let w = *w;
        let (_, m) = node
            .recv(move |f, m| {
                f == w && matches!(m, Msg::Token { epoch: e, token: Token::Announce { .. } } if *e == epoch)
            })
            .await?;
        let Msg::Token { token: Token::Announce { code }, .. } = m else { unreachable!() };
        codes.push(code);
    }

    let mut view = TreeView::default();
    let mut visited = if is_root {
        Vec::new()
    } else {
        let (from, m) = node
            .recv(move |_, m| matches!(m, Msg::Token { epoch: e, token: Token::Visit { .. } } if *e == epoch))
            .await?;
        let Msg::Token { token: Token::Visit { visited }, .. } = m else { unreachable!() };
        view.parent = Some(from);
        view.pseudo_parents = neighbors
            .iter()
            .zip(&codes)
            .filter(|(w, c)| Some(**w) != view.parent && visited.contains(*c))
            .map(|(w, _)| *w)
            .collect();
        visited
    };
    visited.push(my_code);

    loop {
        let unvisited: Vec<VarId> =
            neighbors.iter().zip(&codes).filter(|(_, c)| !visited.contains(*c)).map(|(w, _)| *w).collect();
        let next = match order {
            ChildOrder::Random => unvisited.choose(&mut *node.rng()).copied(),
            ChildOrder::Ranked(rank) => unvisited.iter().copied().min_by_key(|w| rank[w.index()]),
        };
        let Some(c) = next else { break };
        node.send(c, Msg::Token { epoch, token: Token::Visit { visited } });
        let (_, m) = node
            .recv(move |f, m| {
                f == c && matches!(m, Msg::Token { epoch: e, token: Token::Return { .. } } if *e == epoch)
            })
            .await?;
        let Msg::Token { token: Token::Return { visited: v }, .. } = m else { unreachable!() };
        visited = v;
        view.children.push(c);
    }
    view.pseudo_children = neighbors
        .iter()
        .copied()
        .filter(|w| Some(*w) != view.parent && !view.pseudo_parents.contains(w) && !view.children.contains(w))
        .collect();
    if let Some(p) = view.parent {
        node.send(p, Msg::Token { epoch, token: Token::Return { visited } });
    }
    install_view(node, epoch, view.clone());
    Ok(view)
}

/// Installs a precomputed view without running the protocol.
pub fn install_fixed(node: &Node, epoch: u32, view: TreeView) {
    install_view(node, epoch, view);
}
