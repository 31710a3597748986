use super::{ModeAssignment, SelectionProblem};

/// Adds pairs in decreasing utility order while the assignment stays feasible.
///
/// Ties in utility go to the smaller `(tx, rx, mode)` triple. Pairs with
/// non-positive utility are never added.
pub fn greedy_solve(problem: &SelectionProblem) -> ModeAssignment {
    let cands = problem.candidates();
    let mut order: Vec<usize> = (0..cands.len())
        .filter(|&k| cands[k].utility > 0.0)
        .collect();
    order.sort_by(|&a, &b| {
        cands[b]
            .utility
            .total_cmp(&cands[a].utility)
            .then(a.cmp(&b))
    });
    let mut selected: Vec<usize> = Vec::new();
    for k in order {
        let pos = selected.partition_point(|&s| s < k);
        selected.insert(pos, k);
        if problem.first_violation(&selected).is_some() {
            selected.remove(pos);
        }
    }
    problem.assignment_from(&selected)
}
