use serde::{Deserialize, Serialize};

use crate::carleson::bmo_norm;
use crate::dyadic::{haar_function, synthesize_into, DyadicTree, LeafFn, Node};
use crate::error::{Error, Result};
use crate::weights::{node_uniform, Weight, WeightSpec};

/// Descriptor of a symbol `b` for the paraproduct and Carleson checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BSpec {
    /// Coefficients `√|I| ξ_I` with `ξ_I` uniform in `[-1, 1]` keyed by node,
    /// rescaled to `‖b‖_{BMO} = 1`.
    RandomHaar {
        seed: u64,
    },
    /// `log u` for the first weight of the item.
    LogU,
    /// `log w` for a given weight.
    LogWeight {
        weight: WeightSpec,
    },
    /// A single Haar function `h_I`.
    SingleNode {
        level: u32,
        index: usize,
    },
    Values {
        values: Vec<f64>,
    },
}

impl BSpec {
    pub fn build(&self, tree: DyadicTree, u: &Weight) -> Result<LeafFn> {
        match self {
            BSpec::RandomHaar { seed } => Ok(random_haar(tree, *seed)),
            BSpec::LogU => {
                tree.check_same(&u.tree())?;
                Ok(u.leaf_fn().map(f64::ln))
            }
            BSpec::LogWeight { weight } => Ok(weight
                .at_depth(tree.depth())
                .build()?
                .leaf_fn()
                .map(f64::ln)),
            BSpec::SingleNode { level, index } => {
                if *level >= tree.depth() || *index >= 1usize << level {
                    return Err(Error::InvalidParameter(format!(
                        "no internal node ({level}, {index}) at depth {}",
                        tree.depth()
                    )));
                }
                haar_function(tree, Node::new(*level, *index))
            }
            BSpec::Values { values } => LeafFn::new(tree, values.clone()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            BSpec::RandomHaar { seed } => format!("random-haar(seed={seed})"),
            BSpec::LogU => "log-u".to_string(),
            BSpec::LogWeight { weight } => {
                format!("log-weight({} {})", weight.family.as_str(), weight.params())
            }
            BSpec::SingleNode { level, index } => format!("single-node({level},{index})"),
            BSpec::Values { values } => format!("values(n={})", values.len()),
        }
    }
}

fn random_haar(tree: DyadicTree, seed: u64) -> LeafFn {
    let coeffs: Vec<f64> = tree
        .internal_nodes()
        .map(|n| n.length().sqrt() * node_uniform(seed, n.0 as u64, -1.0, 1.0))
        .collect();
    let mut vals = vec![0.0; tree.num_leaves()];
    synthesize_into(tree, 0.0, &coeffs, &mut vals);
    let b = LeafFn::from_vec_unchecked(tree, vals);
    let s = bmo_norm(&b);
    if s > 0.0 {
        b.map(|x| x / s)
    } else {
        b
    }
}
