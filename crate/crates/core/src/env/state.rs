use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RuleTable;

/// Observable part of the state: what traces record and bugs inspect.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StateView {
    pub location: String,
    pub inventory: BTreeMap<String, u32>,
    pub statuses: BTreeMap<String, String>,
}

impl StateView {
    pub fn count(&self, item: &str) -> u32 {
        self.inventory.get(item).copied().unwrap_or(0)
    }

    pub fn held_total(&self) -> u32 {
        self.inventory.values().sum()
    }

    pub fn add(&mut self, item: &str, n: u32) {
        if n > 0 {
            *self.inventory.entry(item.to_string()).or_insert(0) += n;
        }
    }

    /// Removes up to `n` units; returns how many were removed.
    pub fn remove(&mut self, item: &str, n: u32) -> u32 {
        let Some(c) = self.inventory.get_mut(item) else {
            return 0;
        };
        let taken = n.min(*c);
        *c -= taken;
        if *c == 0 {
            self.inventory.remove(item);
        }
        taken
    }

    pub fn status(&self, key: &str) -> Option<&str> {
        self.statuses.get(key).map(String::as_str)
    }

    pub fn status_count(&self, key: &str) -> u32 {
        self.status(key).and_then(|v| v.parse().ok()).unwrap_or(0)
    }

    pub fn bump(&mut self, key: &str) {
        let n = self.status_count(key) + 1;
        self.statuses.insert(key.to_string(), n.to_string());
    }

    /// sha256 over the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("state view serializes");
        hex::encode(Sha256::digest(json))
    }

    /// Cheap 64-bit key over location, inventory and statuses. SipHash with
    /// fixed keys, so it is stable across runs.
    pub fn novelty_key(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.location.hash(&mut h);
        self.inventory.hash(&mut h);
        self.statuses.hash(&mut h);
        h.finish()
    }
}

#[derive(Debug, Clone)]
pub struct EnvState {
    pub view: StateView,
    pub step: u64,
    pub seed: u64,
    pub rules: Arc<RuleTable>,
    pub rng: ChaCha8Rng,
}

impl EnvState {
    pub fn new(rules: Arc<RuleTable>, seed: u64) -> Self {
        let view = StateView {
            location: rules.start.clone(),
            ..Default::default()
        };
        EnvState {
            view,
            step: 0,
            seed,
            rules,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn version(&self) -> &str {
        &self.rules.version
    }
}

impl PartialEq for EnvState {
    fn eq(&self, other: &Self) -> bool {
        self.view == other.view
            && self.step == other.step
            && self.seed == other.seed
            && self.rules.version == other.rules.version
            && self.rng == other.rng
    }
}
