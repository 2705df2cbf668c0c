//! Conversation DAGs and the path-counting recurrences behind the
//! cell-growth diagnostic.
//!
//! Nodes are 0-based here; JSON output uses the 1-based utterance index.

use serde::{Deserialize, Serialize};

use crate::data::Conversation;

/// Edge label between an antecedent utterance and the current one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeType {
    /// The immediately preceding utterance.
    Temporal,
    /// The same participant's previous utterance.
    SameParticipant,
}

impl EdgeType {
    pub const ALL: [EdgeType; 2] = [EdgeType::Temporal, EdgeType::SameParticipant];

    pub fn index(self) -> usize {
        match self {
            EdgeType::Temporal => 0,
            EdgeType::SameParticipant => 1,
        }
    }
}

/// Per-node child lists. Every child index is smaller than its parent and
/// the Temporal child (if any) comes first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConversationDag {
    children: Vec<Vec<(usize, EdgeType)>>,
}

impl ConversationDag {
    /// Builds the DAG from the speaker sequence.
    ///
    /// When the previous utterance is also the speaker's previous utterance,
    /// only the Temporal edge is kept.
    pub fn from_participants<S: AsRef<str>>(participants: &[S]) -> Self {
        let mut children = Vec::with_capacity(participants.len());
        for k in 0..participants.len() {
            let mut ch = Vec::with_capacity(2);
            if k > 0 {
                ch.push((k - 1, EdgeType::Temporal));
                let me = participants[k].as_ref();
                if let Some(j) = (0..k).rev().find(|&j| participants[j].as_ref() == me) {
                    if j != k - 1 {
                        ch.push((j, EdgeType::SameParticipant));
                    }
                }
            }
            children.push(ch);
        }
        ConversationDag { children }
    }

    /// A pure chain `0 ← 1 ← ... ← K-1` of Temporal edges.
    pub fn chain(len: usize) -> Self {
        ConversationDag {
            children: (0..len).map(|k| if k == 0 { vec![] } else { vec![(k - 1, EdgeType::Temporal)] }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        self.children.is_empty()
    }

    pub fn children(&self, node: usize) -> &[(usize, EdgeType)] {
        &self.children[node]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, EdgeType)> + '_ {
        self.children.iter().enumerate().flat_map(|(k, ch)| ch.iter().map(move |&(j, e)| (j, k, e)))
    }

    /// JSON adjacency list with 1-based node indices.
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = self
            .children
            .iter()
            .enumerate()
            .map(|(k, ch)| {
                serde_json::json!({
                    "node": k + 1,
                    "children": ch.iter().map(|&(j, e)| serde_json::json!({"child": j + 1, "edge": e})).collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({ "nodes": self.len(), "adjacency": nodes })
    }
}

pub fn build_dag(conversation: &Conversation) -> ConversationDag {
    ConversationDag::from_participants(&conversation.participants())
}

/// Node order in which every child precedes its parents: plain index order.
pub fn topological_order(dag: &ConversationDag) -> Vec<usize> {
    (0..dag.len()).collect()
}

/// `T(k) = 1 + Σ_children T(j)`: the number of additive unit-cell terms
/// reaching node `k` under sum combination. Saturates at `u128::MAX`.
pub fn count_additive_terms(dag: &ConversationDag) -> Vec<u128> {
    let mut terms: Vec<u128> = Vec::with_capacity(dag.len());
    for k in topological_order(dag) {
        let t = dag.children(k).iter().fold(1u128, |acc, &(j, _)| acc.saturating_add(terms[j]));
        terms.push(t);
    }
    terms
}

/// `D(k) = 1 + max_children D(j)`: the max-combination analogue.
pub fn longest_path_terms(dag: &ConversationDag) -> Vec<u64> {
    let mut depth: Vec<u64> = Vec::with_capacity(dag.len());
    for k in topological_order(dag) {
        let d = dag.children(k).iter().map(|&(j, _)| depth[j]).max().unwrap_or(0);
        depth.push(d + 1);
    }
    depth
}

/// Speaker sequences used by the growth diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Two speakers taking turns: A, B, A, B, ...
    Alternating,
    /// A single speaker.
    Monologue,
}

impl Family {
    pub fn participants(self, len: usize) -> Vec<&'static str> {
        match self {
            Family::Alternating => (0..len).map(|k| if k % 2 == 0 { "A" } else { "B" }).collect(),
            Family::Monologue => vec!["A"; len],
        }
    }

    pub fn dag(self, len: usize) -> ConversationDag {
        ConversationDag::from_participants(&self.participants(len))
    }
}
