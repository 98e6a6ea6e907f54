//! Delivery to the circular preorder predecessor using only tree edges.
//!
//! The root hands a `LAST` message down its last-child chain; any other
//! variable sends `PREV` to its parent. A parent receiving `PREV` from its
//! first child keeps the message, otherwise it sends `LAST` to the child just
//! before the sender. A leaf receiving `LAST` keeps it.

use crate::model::VarId;
use crate::sim::{Handled, Node, Service};
use crate::wire::Msg;

use super::TreeView;

/// What a variable does with a routed message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Route {
    Deliver,
    Last(VarId),
    Prev(VarId),
}

/// Routing decision when originating a message at `view`'s variable.
pub fn originate(view: &TreeView) -> Route {
    match view.parent {
        Some(p) => Route::Prev(p),
        None => match view.children.last() {
            Some(c) => Route::Last(*c),
            None => Route::Deliver,
        },
    }
}

/// Routing decision on receipt: `prev_from` is the sender of a `PREV`, or
/// `None` for a `LAST`.
pub fn step(view: &TreeView, prev_from: Option<VarId>) -> Route {
    match prev_from {
        None => match view.children.last() {
            Some(c) => Route::Last(*c),
            None => Route::Deliver,
        },
        Some(y) => {
            let i = view.children.iter().position(|c| *c == y).expect("PREV comes from a child");
            if i == 0 {
                Route::Deliver
            } else {
                Route::Last(view.children[i - 1])
            }
        }
    }
}

fn apply(node: &Node, epoch: u32, route: Route, inner: Msg) {
    match route {
        Route::Deliver => node.deliver_local(inner),
        Route::Last(c) => node.send_raw(c, Msg::Last { epoch, inner: Box::new(inner) }),
        Route::Prev(p) => node.send_raw(p, Msg::Prev { epoch, inner: Box::new(inner) }),
    }
}

/// Sends `msg` to the previous variable of the tree built in `epoch`.
pub fn to_previous(node: &Node, epoch: u32, msg: Msg) {
    let view = node.view(epoch).expect("tree of this epoch is built");
    node.count_logical(msg.kind());
    apply(node, epoch, originate(&view), msg);
}

/// Installs this variable's view for `epoch` and routes any messages that
/// arrived before it existed.
pub fn install_view(node: &Node, epoch: u32, view: TreeView) {
    let pending = {
        let mut inner = node.inner_mut();
        inner.views.insert(epoch, view.clone());
        let (now, later): (Vec<_>, Vec<_>) =
            std::mem::take(&mut inner.pending_routes).into_iter().partition(|(e, _, _)| *e == epoch);
        inner.pending_routes = later;
        now
    };
    for (_, from, msg) in pending {
        route_incoming(node, &view, from, msg);
    }
}

fn route_incoming(node: &Node, view: &TreeView, from: VarId, msg: Msg) {
    match msg {
        Msg::Last { epoch, inner } => apply(node, epoch, step(view, None), *inner),
        Msg::Prev { epoch, inner } => apply(node, epoch, step(view, Some(from)), *inner),
        _ => unreachable!("only routing wrappers are routed"),
    }
}

/// Built-in service that forwards `PREV`/`LAST` wrappers.
pub struct Router;

impl Service for Router {
    fn handle(&mut self, node: &Node, from: VarId, msg: Msg) -> Handled {
        let epoch = match &msg {
            Msg::Prev { epoch, .. } | Msg::Last { epoch, .. } => *epoch,
            _ => return Handled::Pass(from, msg),
        };
        match node.view(epoch) {
            Some(view) => route_incoming(node, &view, from, msg),
            None => node.inner_mut().pending_routes.push((epoch, from, msg)),
        }
        Handled::Consumed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{example_pseudo_tree, reference_dfs, PseudoTree};
    use crate::model::{colouring_example, Problem, ProblemBuilder};
    use proptest::prelude::*;

    /// Follows the routing rules hop by hop and returns where the message lands.
    fn walk(tree: &PseudoTree, start: VarId) -> (VarId, usize) {
        let mut at = start;
        let mut hops = 0;
        let mut route = originate(tree.view(at));
        loop {
            match route {
                Route::Deliver => return (at, hops),
                Route::Last(c) => {
                    at = c;
                    route = step(tree.view(at), None);
                }
                Route::Prev(p) => {
                    let from = at;
                    at = p;
                    route = step(tree.view(at), Some(from));
                }
            }
            hops += 1;
            assert!(hops <= 4 * tree.views.len());
        }
    }

    #[test]
    fn example_tree_previous_order() {
        let p = colouring_example();
        let t = example_pseudo_tree(&p);
        let x = |n: &str| p.var_by_name(n).unwrap();
        let mut order = vec![x("x2")];
        for _ in 0..5 {
            let (next, _) = walk(&t, *order.last().unwrap());
            order.push(next);
        }
        let names: Vec<&str> = order.iter().map(|v| p.var(*v).name.as_str()).collect();
        assert_eq!(names, ["x2", "x1", "x4", "x5", "x3", "x2"]);
    }

    fn random_connected(n: usize, edges: &[(usize, usize)]) -> Problem {
        let mut b = ProblemBuilder::new();
        let vars: Vec<VarId> = (0..n)
            .map(|i| {
                let a = b.agent(&format!("a{i}")).unwrap();
                b.variable(&format!("x{i}"), a, ["0", "1"]).unwrap()
            })
            .collect();
        for i in 1..n {
            b.not_equal(vars[i - 1], vars[i]).unwrap();
        }
        for (a, c) in edges {
            let (a, c) = (a % n, c % n);
            if a.abs_diff(c) > 1 {
                b.not_equal(vars[a], vars[c]).unwrap();
            }
        }
        b.build().unwrap()
    }

    proptest! {
        #[test]
        fn previous_visits_every_variable_once(
            n in 1usize..10,
            edges in proptest::collection::vec((0usize..10, 0usize..10), 0..12),
            rank in proptest::collection::vec(0u32..100, 10),
            root in 0usize..10,
        ) {
            let p = random_connected(n, &edges);
            let root = VarId((root % n) as u32);
            let t = reference_dfs(&p, &[root], &rank[..n]);
            t.validate(&p).unwrap();
            let mut seen = std::collections::BTreeSet::new();
            let mut at = root;
            for _ in 0..n {
                let (next, _) = walk(&t, at);
                prop_assert_eq!(next, t.previous(at));
                prop_assert!(seen.insert(next));
                at = next;
            }
            prop_assert_eq!(at, root);
        }
    }
}
