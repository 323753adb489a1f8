//! Strongly connected components and the condensation order used for
//! Frobenius (block upper-triangular) forms.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Tarjan SCC on an adjacency list. Components come out in reverse
/// topological order (sinks first).
pub fn tarjan_scc(graph: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = graph.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next_index = 0;

    // explicit call stack: (vertex, next neighbour position)
    let mut calls: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        calls.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = calls.last_mut() {
            if let Some(&w) = graph[v].get(*pos) {
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    calls.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            calls.pop();
            if let Some(&(parent, _)) = calls.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                comps.push(comp);
            }
        }
    }
    comps
}

/// Strongly connected components in a topological order of the
/// condensation: every arc goes from an earlier (or the same) component to
/// a later one. Among available components the one containing the smallest
/// vertex goes first. Vertices inside a component are sorted.
pub fn condensation_order(graph: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let comps = tarjan_scc(graph);
    let mut comp_of = vec![0usize; graph.len()];
    for (c, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of[v] = c;
        }
    }
    let mut dag: Vec<Vec<usize>> = vec![Vec::new(); comps.len()];
    let mut indeg = vec![0usize; comps.len()];
    for (u, nbrs) in graph.iter().enumerate() {
        for &v in nbrs {
            let (cu, cv) = (comp_of[u], comp_of[v]);
            if cu != cv {
                dag[cu].push(cv);
                indeg[cv] += 1;
            }
        }
    }
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        comps.iter().enumerate().filter(|(c, _)| indeg[*c] == 0).map(|(c, comp)| Reverse((comp[0], c))).collect();
    let mut order = Vec::with_capacity(comps.len());
    while let Some(Reverse((_, c))) = heap.pop() {
        order.push(c);
        for &d in &dag[c] {
            indeg[d] -= 1;
            if indeg[d] == 0 {
                heap.push(Reverse((comps[d][0], d)));
            }
        }
    }
    order.into_iter().map(|c| comps[c].clone()).collect()
}
