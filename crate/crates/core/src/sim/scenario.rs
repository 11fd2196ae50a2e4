//! Scenario configuration, loadable from TOML.
//!
//! ```toml
//! protocol = "token"
//! replicas = 5            # or an explicit list: ["a", "b", "c"]
//! steps = 200
//! seed = 7
//!
//! [network]
//! drop = 0.3
//! duplicate = 0.2
//! reorder = true
//! anti_entropy = 0        # steps between full-state exchanges, 0 = off
//! partitions = [{ start = 10, end = 50, side = ["r1", "r2"] }]
//!
//! [workload]
//! kind = "random"
//! request = 0.2
//! release = 0.5
//! ```

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dots::Uid;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    Token,
    Voting,
    ExclToken,
    ExclVoting,
    ResourceMapA,
    ResourceMapB,
    /// Token with an upkeep that forgets to bump the epoch. Only for
    /// demonstrating that the checkers catch bugs.
    #[doc(hidden)]
    TokenNoEpochBump,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 6] = [
        ProtocolKind::Token,
        ProtocolKind::Voting,
        ProtocolKind::ExclToken,
        ProtocolKind::ExclVoting,
        ProtocolKind::ResourceMapA,
        ProtocolKind::ResourceMapB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Token => "token",
            ProtocolKind::Voting => "voting",
            ProtocolKind::ExclToken => "excl-token",
            ProtocolKind::ExclVoting => "excl-voting",
            ProtocolKind::ResourceMapA => "resource-map-a",
            ProtocolKind::ResourceMapB => "resource-map-b",
            ProtocolKind::TokenNoEpochBump => "token-no-epoch-bump",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ProtocolKind::ALL
            .into_iter()
            .chain([ProtocolKind::TokenNoEpochBump])
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Scenario(format!("unknown protocol {s:?}")))
    }

    /// Whether the protocol (or its lock) is voting based.
    pub fn uses_voting(self, resource_lock: LockKind) -> bool {
        match self {
            ProtocolKind::Voting | ProtocolKind::ExclVoting => true,
            ProtocolKind::ResourceMapA | ProtocolKind::ResourceMapB => {
                resource_lock == LockKind::Voting
            }
            _ => false,
        }
    }
}

/// Lock protocol used by the resource-map subjects.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LockKind {
    #[default]
    Token,
    Voting,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReplicaSpec {
    Count(usize),
    Ids(Vec<String>),
}

impl Default for ReplicaSpec {
    fn default() -> Self {
        ReplicaSpec::Count(3)
    }
}

/// A bipartition active for steps in `start..end`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Partition {
    pub start: u64,
    pub end: u64,
    pub side: Vec<String>,
}

impl Partition {
    /// Parses `START-END:ID,ID,...`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Scenario(format!("bad partition {s:?}, expected START-END:ID,ID"));
        let (range, side) = s.split_once(':').ok_or_else(bad)?;
        let (start, end) = range.split_once('-').ok_or_else(bad)?;
        Ok(Partition {
            start: start.trim().parse().map_err(|_| bad())?,
            end: end.trim().parse().map_err(|_| bad())?,
            side: side.split(',').map(|x| x.trim().to_owned()).collect(),
        })
    }

    pub fn active(&self, step: u64) -> bool {
        (self.start..self.end).contains(&step)
    }

    pub fn separates(&self, a: &Uid, b: &Uid) -> bool {
        let in_side = |id: &Uid| self.side.iter().any(|s| s == id.as_str());
        in_side(a) != in_side(b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkModel {
    /// Probability that a delivery attempt loses the message.
    pub drop: f64,
    /// Probability that a delivered message stays queued for redelivery.
    pub duplicate: f64,
    /// Deliver queued messages in random order instead of FIFO.
    pub reorder: bool,
    /// Steps between full-state exchanges; 0 disables anti-entropy.
    pub anti_entropy: u64,
    pub partitions: Vec<Partition>,
}

impl Default for NetworkModel {
    fn default() -> Self {
        NetworkModel {
            drop: 0.0,
            duplicate: 0.0,
            reorder: false,
            anti_entropy: 0,
            partitions: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Op {
    Request,
    Release,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledOp {
    pub step: u64,
    pub replica: String,
    pub op: Op,
    /// Resource id for multi-resource subjects; defaults to the first one.
    #[serde(default)]
    pub resource: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Workload {
    /// At each activation an idle replica requests with probability
    /// `request` and an owner releases with probability `release`.
    Random {
        #[serde(default = "default_request")]
        request: f64,
        #[serde(default = "default_release")]
        release: f64,
        /// Cap on requests per replica and lock; 0 means unlimited.
        #[serde(default)]
        max_requests: u32,
    },
    /// Explicit operations at fixed steps.
    Schedule { entries: Vec<ScheduledOp> },
}

fn default_request() -> f64 {
    0.2
}

fn default_release() -> f64 {
    0.5
}

impl Default for Workload {
    fn default() -> Self {
        Workload::Random {
            request: default_request(),
            release: default_release(),
            max_requests: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub protocol: ProtocolKind,
    pub replicas: ReplicaSpec,
    /// Initial token holder; defaults to the smallest id.
    pub initial_owner: Option<String>,
    /// Size of the voting group, taken from the front of the replica list;
    /// defaults to all replicas.
    pub voting_members: Option<usize>,
    /// Lock protocol for the resource-map subjects.
    pub resource_lock: LockKind,
    /// Number of resources for the resource-map subjects.
    pub resources: usize,
    pub steps: u64,
    pub seed: u64,
    /// Additionally run upkeep at every replica every this many steps; 0 = off.
    pub upkeep_every: u64,
    /// Emit a snapshot trace event every this many steps; 0 = only at the end.
    pub snapshot_every: u64,
    pub network: NetworkModel,
    pub workload: Workload,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            protocol: ProtocolKind::Token,
            replicas: ReplicaSpec::default(),
            initial_owner: None,
            voting_members: None,
            resource_lock: LockKind::Token,
            resources: 2,
            steps: 200,
            seed: 0,
            upkeep_every: 0,
            snapshot_every: 0,
            network: NetworkModel::default(),
            workload: Workload::default(),
        }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Replica ids in order: explicit ids, or `r1..rN` zero-padded so that
    /// numeric and lexicographic order agree.
    pub fn replica_ids(&self) -> Result<Vec<Uid>> {
        let ids: Vec<Uid> = match &self.replicas {
            ReplicaSpec::Count(n) => {
                let width = n.to_string().len();
                (1..=*n)
                    .map(|i| Uid::new(format!("r{i:0width$}")))
                    .collect::<Result<_>>()?
            }
            ReplicaSpec::Ids(ids) => ids.iter().map(Uid::new).collect::<Result<_>>()?,
        };
        if ids.is_empty() {
            return Err(Error::Scenario("at least one replica is required".into()));
        }
        let unique: BTreeSet<_> = ids.iter().collect();
        if unique.len() != ids.len() {
            return Err(Error::Scenario("replica ids must be unique".into()));
        }
        Ok(ids)
    }

    pub fn initial_owner_id(&self, ids: &[Uid]) -> Result<Uid> {
        match &self.initial_owner {
            None => Ok(ids.iter().min().expect("non-empty").clone()),
            Some(o) => {
                let o = Uid::new(o)?;
                if ids.contains(&o) {
                    Ok(o)
                } else {
                    Err(Error::Scenario(format!("initial owner {o} is not a replica")))
                }
            }
        }
    }

    pub fn member_ids(&self, ids: &[Uid]) -> Result<Vec<Uid>> {
        let n = self.voting_members.unwrap_or(ids.len());
        if n == 0 || n > ids.len() {
            return Err(Error::Scenario(format!(
                "voting_members must be between 1 and {}",
                ids.len()
            )));
        }
        Ok(ids[..n].to_vec())
    }

    pub fn resource_ids(&self) -> Vec<String> {
        (0..self.resources).map(|i| format!("res{i}")).collect()
    }

    /// Checks every cross-field constraint.
    pub fn validate(&self) -> Result<()> {
        let ids = self.replica_ids()?;
        self.initial_owner_id(&ids)?;
        self.member_ids(&ids)?;
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Scenario(format!("{name} must be within [0, 1], got {p}")))
            }
        };
        prob("drop", self.network.drop)?;
        prob("duplicate", self.network.duplicate)?;
        let known = |id: &str| ids.iter().any(|u| u.as_str() == id);
        for p in &self.network.partitions {
            if p.start > p.end {
                return Err(Error::Scenario("partition start after end".into()));
            }
            if let Some(x) = p.side.iter().find(|x| !known(x)) {
                return Err(Error::Scenario(format!("partition names unknown replica {x}")));
            }
        }
        let multi = matches!(
            self.protocol,
            ProtocolKind::ResourceMapA | ProtocolKind::ResourceMapB
        );
        if multi && self.resources == 0 {
            return Err(Error::Scenario("resource maps need at least one resource".into()));
        }
        match &self.workload {
            Workload::Random {
                request, release, ..
            } => {
                prob("request", *request)?;
                prob("release", *release)?;
            }
            Workload::Schedule { entries } => {
                for e in entries {
                    if !known(&e.replica) {
                        return Err(Error::Scenario(format!(
                            "schedule names unknown replica {}",
                            e.replica
                        )));
                    }
                    if let Some(r) = &e.resource {
                        if !self.resource_ids().contains(r) {
                            return Err(Error::Scenario(format!("unknown resource {r}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_parsing() {
        let s = Scenario::from_toml(
            r#"
            protocol = "voting"
            replicas = 5
            voting_members = 3
            seed = 9
            [network]
            drop = 0.3
            reorder = true
            partitions = [{ start = 1, end = 4, side = ["r1"] }]
            [workload]
            kind = "schedule"
            entries = [{ step = 1, replica = "r2", op = "request" }]
            "#,
        )
        .unwrap();
        s.validate().unwrap();
        assert_eq!(s.protocol, ProtocolKind::Voting);
        assert_eq!(s.steps, 200);
        assert_eq!(s.member_ids(&s.replica_ids().unwrap()).unwrap().len(), 3);
        assert_eq!(Scenario::from_toml(&s.to_toml()).unwrap(), s);
    }

    #[test]
    fn zero_padded_ids_sort_numerically() {
        let s = Scenario {
            replicas: ReplicaSpec::Count(12),
            ..Scenario::default()
        };
        let ids = s.replica_ids().unwrap();
        assert_eq!(ids[0].as_str(), "r01");
        assert!(ids.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s.initial_owner_id(&ids).unwrap().as_str(), "r01");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Scenario::from_toml("protocol = \"paxos\"").is_err());
        assert!(Scenario::from_toml("bogus = 1").is_err());
        let bad_prob = Scenario {
            network: NetworkModel {
                drop: 1.5,
                ..NetworkModel::default()
            },
            ..Scenario::default()
        };
        assert!(bad_prob.validate().is_err());
        let bad_owner = Scenario {
            initial_owner: Some("zz".into()),
            ..Scenario::default()
        };
        assert!(bad_owner.validate().is_err());
        let dup = Scenario {
            replicas: ReplicaSpec::Ids(vec!["a".into(), "a".into()]),
            ..Scenario::default()
        };
        assert!(dup.validate().is_err());
        let members = Scenario {
            voting_members: Some(4),
            ..Scenario::default()
        };
        assert!(members.validate().is_err());
    }

    #[test]
    fn partition_parsing() {
        let p = Partition::parse("10-50:r1,r2").unwrap();
        assert_eq!(p.side, vec!["r1", "r2"]);
        assert!(p.active(10) && !p.active(50));
        let r1 = Uid::new("r1").unwrap();
        let r3 = Uid::new("r3").unwrap();
        assert!(p.separates(&r1, &r3));
        assert!(!p.separates(&r3, &r3));
        assert!(Partition::parse("x").is_err());
    }
}
