use crate::connection::ConnectionGraph;

/// Minimum number of submarines that explains every report: the minimum
/// path cover of the graph, `n` minus a maximum matching between report
/// "outs" and report "ins".
pub fn min_submarines(graph: &ConnectionGraph) -> usize {
    min_path_cover(graph.len(), |i| graph.successors(i).to_vec())
}

/// Minimum path cover of a DAG on `n` nodes given its successor lists.
pub fn min_path_cover(n: usize, successors: impl Fn(usize) -> Vec<usize>) -> usize {
    let adj: Vec<Vec<usize>> = (0..n).map(successors).collect();
    let mut match_in: Vec<Option<usize>> = vec![None; n];
    let mut matched = 0;
    for u in 0..n {
        let mut seen = vec![false; n];
        if augment(u, &adj, &mut match_in, &mut seen) {
            matched += 1;
        }
    }
    n - matched
}

fn augment(u: usize, adj: &[Vec<usize>], match_in: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &v in &adj[u] {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        if match_in[v].is_none_or(|w| augment(w, adj, match_in, seen)) {
            match_in[v] = Some(u);
            return true;
        }
    }
    false
}
