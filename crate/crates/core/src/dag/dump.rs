use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use super::node::Node;

/// Lists the DAG feeding `roots` in topological order with ids renumbered
/// from 0, so the text is identical across runs.
pub(crate) fn dump(roots: &[Arc<Node>]) -> String {
    let mut order: Vec<Arc<Node>> = Vec::new();
    let mut ids: HashMap<u64, usize> = HashMap::new();
    for root in roots {
        visit(root, &mut order, &mut ids);
    }
    let mut out = String::new();
    for n in &order {
        let _ = write!(
            out,
            "#{} {} fn={} shape={}x{} {}",
            ids[&n.id],
            n.kind.name(),
            n.kind.fn_label(),
            n.nrow,
            n.ncol,
            n.tag()
        );
        if !n.inputs.is_empty() {
            let ins: Vec<String> = n.inputs.iter().map(|i| format!("#{}", ids[&i.id])).collect();
            let _ = write!(out, " in={}", ins.join(","));
        }
        if !n.state.is_empty() {
            let st: Vec<String> = n
                .state
                .iter()
                .map(|(s, t)| format!("#{}{}", ids[&s.id], if *t { "'" } else { "" }))
                .collect();
            let _ = write!(out, " state={}", st.join(","));
        }
        if n.cache_flag().is_some() {
            out.push_str(" cached");
        }
        out.push('\n');
    }
    out
}

fn visit(n: &Arc<Node>, order: &mut Vec<Arc<Node>>, ids: &mut HashMap<u64, usize>) {
    if ids.contains_key(&n.id) {
        return;
    }
    for i in &n.inputs {
        visit(i, order, ids);
    }
    for (s, _) in &n.state {
        visit(s, order, ids);
    }
    ids.insert(n.id, order.len());
    order.push(n.clone());
}
