//! Yngve depth: every node on the path from the root to a leaf contributes
//! the number of siblings to its right. Left-branching structure therefore
//! accumulates depth faster than right-branching structure.

use serde::{Deserialize, Serialize};

use super::tree::ParseTree;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YngveAggregate {
    #[default]
    Mean,
    Max,
}

impl YngveAggregate {
    pub fn as_str(self) -> &'static str {
        match self {
            YngveAggregate::Mean => "mean",
            YngveAggregate::Max => "max",
        }
    }
}

/// Depth of every leaf, left to right.
pub fn leaf_depths(tree: &ParseTree) -> Vec<usize> {
    let mut out = Vec::new();
    walk(tree, 0, &mut out);
    out
}

fn walk(node: &ParseTree, depth: usize, out: &mut Vec<usize>) {
    if node.leaf.is_some() {
        out.push(depth);
        return;
    }
    let n = node.children.len();
    for (i, child) in node.children.iter().enumerate() {
        walk(child, depth + (n - 1 - i), out);
    }
}

pub fn yngve_score(tree: &ParseTree, aggregate: YngveAggregate) -> Result<f64> {
    let depths = leaf_depths(tree);
    if depths.is_empty() {
        return Err(Error::NoWords);
    }
    Ok(match aggregate {
        YngveAggregate::Mean => depths.iter().sum::<usize>() as f64 / depths.len() as f64,
        YngveAggregate::Max => depths.iter().copied().max().unwrap_or(0) as f64,
    })
}
