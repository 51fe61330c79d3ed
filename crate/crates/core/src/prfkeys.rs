//! Master keys, the pairwise-key PRF and pre-loaded key rings.
//!
//! `PRF_MK(id)` is HMAC-SHA-256 keyed by the 128-bit master key over the
//! 8-byte big-endian id, truncated to the first 16 bytes.

use std::fmt;

use hmac::{Hmac, Mac};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::error::{Error, Result};
use crate::gfpoly::PolynomialShare;
use crate::node::NodeId;

type HmacSha256 = Hmac<Sha256>;

macro_rules! key128 {
    ($name:ident) => {
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub struct $name(pub [u8; 16]);

        impl $name {
            pub fn as_bytes(&self) -> &[u8; 16] {
                &self.0
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}(", stringify!($name))?;
                for b in &self.0 {
                    write!(f, "{b:02x}")?;
                }
                write!(f, ")")
            }
        }
    };
}

key128!(MasterKey);
key128!(PairwiseKey);

impl MasterKey {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut k = [0u8; 16];
        rng.fill(&mut k);
        MasterKey(k)
    }
}

pub fn prf(master: &MasterKey, input_id: NodeId) -> PairwiseKey {
    KeyedPrf::new(master).eval(input_id)
}

/// HMAC state with the master key already absorbed, so repeated
/// evaluations under one master skip the key schedule.
#[derive(Clone)]
pub struct KeyedPrf(HmacSha256);

impl KeyedPrf {
    pub fn new(master: &MasterKey) -> Self {
        KeyedPrf(HmacSha256::new_from_slice(&master.0).expect("hmac accepts any key length"))
    }

    pub fn eval(&self, input_id: NodeId) -> PairwiseKey {
        let mut mac = self.0.clone();
        mac.update(&input_id.to_be_bytes());
        let tag = mac.finalize().into_bytes();
        let mut out = [0u8; 16];
        out.copy_from_slice(&tag[..16]);
        PairwiseKey(out)
    }
}

/// The base station's table of every node's master key.
#[derive(Clone, Default)]
pub struct MasterKeyTable {
    // Indexed by id; ids are dense from 1.
    slots: Vec<Option<(MasterKey, KeyedPrf)>>,
}

impl MasterKeyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: NodeId, key: MasterKey) {
        let idx = id.get() as usize;
        if self.slots.len() <= idx {
            self.slots.resize(idx + 1, None);
        }
        self.slots[idx] = Some((key, KeyedPrf::new(&key)));
    }

    pub fn get(&self, id: NodeId) -> Option<&MasterKey> {
        self.slot(id).map(|(k, _)| k)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.slot(id).is_some()
    }

    /// `PRF_{MK_target}(input)`.
    pub fn prf(&self, target: NodeId, input: NodeId) -> Result<PairwiseKey> {
        self.slot(target)
            .map(|(_, p)| p.eval(input))
            .ok_or(Error::MissingMaster(target))
    }

    pub fn len(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &MasterKey)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|(k, _)| (NodeId(i as u64), k)))
    }

    fn slot(&self, id: NodeId) -> Option<&(MasterKey, KeyedPrf)> {
        self.slots.get(id.get() as usize).and_then(|s| s.as_ref())
    }
}

impl fmt::Debug for MasterKeyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MasterKeyTable").field("len", &self.len()).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingEntry {
    pub peer: NodeId,
    pub key: PairwiseKey,
}

/// Key-plus-id combinations, kept sorted by peer id.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KeyRing {
    entries: Vec<RingEntry>,
}

impl KeyRing {
    fn from_unsorted(mut entries: Vec<RingEntry>) -> Self {
        entries.sort_by_key(|e| e.peer);
        KeyRing { entries }
    }

    pub fn lookup(&self, peer: NodeId) -> Option<&PairwiseKey> {
        self.entries
            .binary_search_by_key(&peer, |e| e.peer)
            .ok()
            .map(|i| &self.entries[i].key)
    }

    pub fn contains(&self, peer: NodeId) -> bool {
        self.lookup(peer).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[RingEntry] {
        &self.entries
    }

    pub fn peers(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.iter().map(|e| e.peer)
    }
}

/// Pre-loaded memory of a regular sensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorKeyRing {
    pub own_id: NodeId,
    pub master: MasterKey,
    pub ring: KeyRing,
}

/// Pre-loaded memory of a group head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupHeadKeyRing {
    pub own_id: NodeId,
    pub master: MasterKey,
    pub share: PolynomialShare,
    pub ring: KeyRing,
}

/// Samples `size` distinct peers from `pool \ {owner}` with a seeded
/// Fisher-Yates prefix shuffle and derives `PRF_{MK_peer}(owner)` for each.
fn sample_ring<R: Rng + ?Sized>(
    owner: NodeId,
    pool: &[NodeId],
    size: usize,
    masters: &MasterKeyTable,
    rng: &mut R,
) -> Result<KeyRing> {
    let mut candidates: Vec<NodeId> = pool.iter().copied().filter(|&p| p != owner).collect();
    if size > candidates.len() {
        return Err(Error::RingTooLarge { requested: size, available: candidates.len() });
    }
    for i in 0..size {
        let j = rng.gen_range(i..candidates.len());
        candidates.swap(i, j);
    }
    let entries = candidates[..size]
        .iter()
        .map(|&peer| Ok(RingEntry { peer, key: masters.prf(peer, owner)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(KeyRing::from_unsorted(entries))
}

pub fn build_sensor_ring<R: Rng + ?Sized>(
    u: NodeId,
    pool: &[NodeId],
    m: usize,
    masters: &MasterKeyTable,
    rng: &mut R,
) -> Result<SensorKeyRing> {
    let master = *masters.get(u).ok_or(Error::MissingMaster(u))?;
    let ring = sample_ring(u, pool, m, masters, rng)?;
    Ok(SensorKeyRing { own_id: u, master, ring })
}

pub fn build_head_ring<R: Rng + ?Sized>(
    gh: NodeId,
    pool: &[NodeId],
    m_prime: usize,
    m: usize,
    share: PolynomialShare,
    masters: &MasterKeyTable,
    rng: &mut R,
) -> Result<GroupHeadKeyRing> {
    if m_prime < m {
        return Err(Error::HeadRingSmaller { m_prime, m });
    }
    let master = *masters.get(gh).ok_or(Error::MissingMaster(gh))?;
    let ring = sample_ring(gh, pool, m_prime, masters, rng)?;
    Ok(GroupHeadKeyRing { own_id: gh, master, share, ring })
}
