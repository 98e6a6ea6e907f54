//! Leader election by echo waves with extinction. Every variable starts a
//! wave carrying a random score; a variable joins the wave with the highest
//! score seen so far and ignores the others. Only the owner of the maximal
//! score collects all echoes, and it becomes the root.

use rand::Rng;

use crate::model::VarId;
use crate::sim::{Node, SimError};
use crate::wire::Msg;

/// Returns `true` on the elected root. Other variables return on the first
/// epoch-0 DFS message, which only exists once the root is known; the message
/// is left in the mailbox.
pub async fn elect(node: &Node) -> Result<bool, SimError> {
    let neighbors = node.neighbors().to_vec();
    let mine: u128 = node.rng().gen();
    if neighbors.is_empty() {
        return Ok(true);
    }
    let mut best = mine;
    let mut parent: Option<VarId> = None;
    let mut pending = neighbors.clone();
    let mut echoed = false;
    for w in &neighbors {
        node.send(*w, Msg::Score { echo: false, score: mine });
    }
    loop {
        let (from, m) = node.recv(|_, m| matches!(m, Msg::Score { .. } | Msg::Token { epoch: 0, .. })).await?;
        let Msg::Score { echo, score } = m else {
            node.requeue(from, m);
            return Ok(false);
        };
        if !echo && score > best {
            best = score;
            parent = Some(from);
            echoed = false;
            pending = neighbors.iter().copied().filter(|w| *w != from).collect();
            for w in &pending {
                node.send(*w, Msg::Score { echo: false, score });
            }
        } else if score == best {
            // a wave from a neighbour already in this wave counts as its echo
            pending.retain(|w| *w != from);
        } else {
            continue;
        }
        if pending.is_empty() && !echoed {
            match parent {
                None => return Ok(true),
                Some(p) => {
                    node.send(p, Msg::Score { echo: true, score: best });
                    echoed = true;
                }
            }
        }
    }
}
