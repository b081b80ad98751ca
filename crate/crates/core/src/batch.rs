//! Evaluating one knowledge base against many working memories.
//!
//! With the `parallel` feature (on by default) [`run_batch`] spreads the
//! consultations over the rayon pool; without it, it is the same loop as
//! [`run_batch_sequential`]. Output order always matches input order.

use crate::inference::{run, InferenceError, InferenceResult, WorkingMemory};
use crate::kb::KnowledgeBase;

pub type BatchResult = Vec<Result<InferenceResult, InferenceError>>;

pub fn run_batch_sequential(kb: &KnowledgeBase, memories: &[WorkingMemory]) -> BatchResult {
    memories.iter().map(|wm| run(kb, wm)).collect()
}

#[cfg(feature = "parallel")]
pub fn run_batch(kb: &KnowledgeBase, memories: &[WorkingMemory]) -> BatchResult {
    use rayon::prelude::*;
    memories.par_iter().map(|wm| run(kb, wm)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn run_batch(kb: &KnowledgeBase, memories: &[WorkingMemory]) -> BatchResult {
    run_batch_sequential(kb, memories)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::Observation;
    use crate::seed::seed_kb;

    #[test]
    fn batch_matches_sequential() {
        let kb = seed_kb();
        let conditions: Vec<_> = kb
            .rules_sorted()
            .iter()
            .flat_map(|r| r.premises.clone())
            .collect();
        let memories: Vec<WorkingMemory> = (0..64)
            .map(|i| {
                conditions
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| (i >> (j % 6)) & 1 == 1)
                    .map(|(_, c)| Observation::assumed(c.clone()))
                    .collect()
            })
            .collect();
        assert_eq!(run_batch(&kb, &memories), run_batch_sequential(&kb, &memories));
    }
}
