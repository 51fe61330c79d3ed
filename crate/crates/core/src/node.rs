use std::fmt;

use serde::{Deserialize, Serialize};

/// Network-wide node identifier. Ids are positive and assigned consecutively
/// by the setup server; the same integer is used as the node's field point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl NodeId {
    pub fn get(self) -> u64 {
        self.0
    }

    pub fn to_be_bytes(self) -> [u8; 8] {
        self.0.to_be_bytes()
    }

    /// The id zero-padded to 128 bits, big-endian.
    pub fn to_block(self) -> [u8; 16] {
        let mut out = [0u8; 16];
        out[8..].copy_from_slice(&self.0.to_be_bytes());
        out
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    RegularSensor,
    GroupHead,
    BaseStation,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::RegularSensor => "regular-sensor",
            NodeKind::GroupHead => "group-head",
            NodeKind::BaseStation => "base-station",
        }
    }
}

/// Unordered node pair, stored with the smaller id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId(NodeId, NodeId);

impl LinkId {
    pub fn new(a: NodeId, b: NodeId) -> Self {
        if a <= b {
            LinkId(a, b)
        } else {
            LinkId(b, a)
        }
    }

    pub fn low(self) -> NodeId {
        self.0
    }

    pub fn high(self) -> NodeId {
        self.1
    }

    pub fn contains(self, n: NodeId) -> bool {
        self.0 == n || self.1 == n
    }

    pub fn other(self, n: NodeId) -> NodeId {
        if self.0 == n {
            self.1
        } else {
            self.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn link_id_is_unordered() {
        assert_eq!(LinkId::new(NodeId(9), NodeId(2)), LinkId::new(NodeId(2), NodeId(9)));
        let l = LinkId::new(NodeId(9), NodeId(2));
        assert_eq!(l.low(), NodeId(2));
        assert_eq!(l.other(NodeId(2)), NodeId(9));
    }

    #[test]
    fn block_padding_is_big_endian() {
        let b = NodeId(0x0102).to_block();
        assert_eq!(&b[..14], &[0u8; 14]);
        assert_eq!(&b[14..], &[1, 2]);
    }
}
