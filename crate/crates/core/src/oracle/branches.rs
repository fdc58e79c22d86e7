//! Exhaustive depth-first enumeration of measurement branches.
//!
//! Each branch is a replay: an explorer source follows a forced prefix of
//! outcome indices, then takes the first possible outcome at every new
//! block and remembers the alternatives it skipped.

use alloc::{vec, vec::Vec};

use crate::error::{Result, SimError};
use crate::outcome::OutcomeSource;
use crate::protocols::{MeasurementRecord, ProtocolResult, ProtocolSpec};
use crate::state::{PureState, PROB_TOL, ZERO_PROBABILITY};

/// Caps on the enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchLimits {
    /// Measurements along one branch.
    pub max_depth: usize,
    pub max_branches: usize,
}

impl Default for BranchLimits {
    fn default() -> Self {
        BranchLimits {
            max_depth: 16,
            max_branches: 1 << 15,
        }
    }
}

/// One fully corrected trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub probability: f64,
    pub result: ProtocolResult,
}

impl Branch {
    pub fn record(&self) -> &MeasurementRecord {
        &self.result.record
    }
}

/// All branches with nonzero probability.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BranchTree {
    pub branches: Vec<Branch>,
}

impl BranchTree {
    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }

    /// Whether the probabilities sum to one within `1e-10`.
    pub fn is_complete(&self) -> bool {
        (self.total_probability() - 1.0).abs() <= PROB_TOL
    }
}

struct Explorer {
    prefix: Vec<usize>,
    depth: usize,
    max_depth: usize,
    /// `(depth, alternative outcome)` pairs discovered past the prefix.
    alternatives: Vec<(usize, usize)>,
    taken: Vec<usize>,
}

impl OutcomeSource for Explorer {
    fn select(&mut self, block: &str, probabilities: &[f64]) -> Result<usize> {
        if self.depth >= self.max_depth {
            return Err(SimError::BranchLimit {
                what: "measurements per branch",
                limit: self.max_depth,
            });
        }
        let choice = if self.depth < self.prefix.len() {
            self.prefix[self.depth]
        } else {
            let mut possible = probabilities
                .iter()
                .enumerate()
                .filter(|(_, p)| **p >= ZERO_PROBABILITY)
                .map(|(i, _)| i);
            let first = possible
                .next()
                .ok_or_else(|| SimError::ZeroProbabilityBranch {
                    block: block.into(),
                    outcome: 0,
                    probability: 0.0,
                })?;
            self.alternatives.extend(possible.map(|k| (self.depth, k)));
            first
        };
        self.taken.push(choice);
        self.depth += 1;
        Ok(choice)
    }
}

/// Runs every branch of `spec` from `initial`.
pub fn enumerate_branches(spec: &ProtocolSpec, initial: &PureState) -> Result<BranchTree> {
    enumerate_branches_with(spec, initial, BranchLimits::default())
}

pub fn enumerate_branches_with(
    spec: &ProtocolSpec,
    initial: &PureState,
    limits: BranchLimits,
) -> Result<BranchTree> {
    let mut pending: Vec<Vec<usize>> = vec![Vec::new()];
    let mut tree = BranchTree::default();
    while let Some(prefix) = pending.pop() {
        if tree.branches.len() >= limits.max_branches {
            return Err(SimError::BranchLimit {
                what: "branches",
                limit: limits.max_branches,
            });
        }
        let mut explorer = Explorer {
            prefix,
            depth: 0,
            max_depth: limits.max_depth,
            alternatives: Vec::new(),
            taken: Vec::new(),
        };
        let result = spec.execute(initial, &mut explorer)?;
        // Deepest depth and lowest outcome end up on top of the stack, so
        // branches come out in lexicographic order of their outcomes.
        explorer
            .alternatives
            .sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        for &(depth, outcome) in &explorer.alternatives {
            let mut next = explorer.taken[..depth].to_vec();
            next.push(outcome);
            pending.push(next);
        }
        tree.branches.push(Branch {
            probability: result.record.probability(),
            result,
        });
    }
    Ok(tree)
}
