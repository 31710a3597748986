use super::{Incumbent, ModeAssignment, SelectionError, SelectionProblem};

/// Largest number of legal pairs [`brute_force_solve`] will enumerate.
pub const BRUTE_FORCE_MAX_PAIRS: usize = 24;

/// Enumerates every subset of legal pairs and keeps the best feasible one.
pub fn brute_force_solve(problem: &SelectionProblem) -> Result<ModeAssignment, SelectionError> {
    let pairs = problem.candidates().len();
    if pairs > BRUTE_FORCE_MAX_PAIRS {
        return Err(SelectionError::BudgetExceeded {
            pairs,
            max: BRUTE_FORCE_MAX_PAIRS,
        });
    }
    let mut best = Incumbent::empty();
    let mut selected = Vec::with_capacity(pairs);
    for mask in 0u32..(1u32 << pairs) {
        selected.clear();
        selected.extend((0..pairs).filter(|k| mask & (1 << k) != 0));
        if problem.first_violation(&selected).is_none() {
            best.offer(problem.objective_of(&selected), &selected);
        }
    }
    Ok(problem.assignment_from(&best.selected))
}
