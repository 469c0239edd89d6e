//! Scenario files: JSON schema, defaults and validation.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phy::{ModScheme, PhyParams, ReceptionMode, User, UserSet};

pub const TABLE1_JSON: &str = include_str!("../scenarios/table1.json");
pub const TWOUSER_JSON: &str = include_str!("../scenarios/twouser.json");

/// How users are arranged into the beam hierarchy.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum TreeSpec {
    /// Balanced binary tree over users sorted by id.
    #[default]
    BinaryIndexOrder,
    /// Explicit nesting; the outer list holds the root's children.
    Nested(Vec<TreeSpecNode>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeSpecNode {
    User(usize),
    Group(Vec<TreeSpecNode>),
}

impl Serialize for TreeSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TreeSpec::BinaryIndexOrder => s.serialize_str("binary-index-order"),
            TreeSpec::Nested(children) => children.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for TreeSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Nested(Vec<TreeSpecNode>),
        }
        match Raw::deserialize(d)? {
            Raw::Name(name) if name == "binary-index-order" => Ok(TreeSpec::BinaryIndexOrder),
            Raw::Name(name) => Err(serde::de::Error::custom(format!(
                "unknown tree spec {name:?}, expected \"binary-index-order\" or a nested list of user ids"
            ))),
            Raw::Nested(children) => Ok(TreeSpec::Nested(children)),
        }
    }
}

fn default_modulations() -> Vec<ModScheme> {
    vec![ModScheme::qam4_239(), ModScheme::qam16_223()]
}

fn default_payload_bits() -> u64 {
    40_000
}

fn default_overhead_bits() -> u64 {
    100
}

fn default_name() -> String {
    "scenario".to_string()
}

/// On-disk form of a [`Scenario`]. Angles in degrees, SI units otherwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub phy: PhyParams,
    pub users: Vec<User>,
    #[serde(default = "default_modulations")]
    pub modulations: Vec<ModScheme>,
    #[serde(default = "default_payload_bits")]
    pub payload_bits: u64,
    #[serde(default = "default_overhead_bits")]
    pub overhead_bits: u64,
    pub m: Option<u32>,
    pub r_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_cap: Option<u32>,
    #[serde(default)]
    pub tree: TreeSpec,
    #[serde(default)]
    pub reception_mode: ReceptionMode,
}

/// A validated transmission scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub phy: PhyParams,
    pub users: Vec<User>,
    pub modulations: Vec<ModScheme>,
    pub payload_bits: u64,
    pub overhead_bits: u64,
    /// Packets each user needs to decode.
    pub m: u32,
    /// Retransmission rounds after the first slot.
    pub r_max: u32,
    /// Largest packet count on a single beam in one slot.
    pub x_cap: u32,
    pub tree: TreeSpec,
    pub reception_mode: ReceptionMode,
}

impl Scenario {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn packet_bits(&self) -> u64 {
        self.payload_bits + self.overhead_bits
    }

    pub fn all_users(&self) -> UserSet {
        UserSet::all(self.n_users())
    }

    /// Bundled eight-user layout.
    pub fn table1() -> Scenario {
        Scenario::from_json(TABLE1_JSON).expect("bundled scenario is valid")
    }

    /// Bundled two-user layout.
    pub fn two_user() -> Scenario {
        Scenario::from_json(TWOUSER_JSON).expect("bundled scenario is valid")
    }

    /// Resolves `@table1` / `@twouser` to the bundled files, anything else
    /// to a path on disk.
    pub fn load(spec: &str) -> Result<Scenario> {
        match spec {
            "@table1" => Ok(Scenario::table1()),
            "@twouser" => Ok(Scenario::two_user()),
            path => load_scenario(path),
        }
    }

    pub fn from_json(text: &str) -> Result<Scenario> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::validation(format!("{path}: {}", e.inner()))
        })?;
        Scenario::try_from(file)
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            name: self.name.clone(),
            phy: self.phy.clone(),
            users: self.users.clone(),
            modulations: self.modulations.clone(),
            payload_bits: self.payload_bits,
            overhead_bits: self.overhead_bits,
            m: Some(self.m),
            r_max: Some(self.r_max),
            x_cap: Some(self.x_cap),
            tree: self.tree.clone(),
            reception_mode: self.reception_mode,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    /// Copy with different protocol constants; `x_cap` follows the `2m` default.
    pub fn with_protocol(&self, m: u32, r_max: u32) -> Scenario {
        Scenario { m, r_max, x_cap: 2 * m, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        self.phy.validate()?;
        if self.users.is_empty() {
            return Err(Error::validation("users: at least one user is required"));
        }
        if self.users.len() > UserSet::MAX_USERS {
            return Err(Error::validation(format!("users: at most {} users", UserSet::MAX_USERS)));
        }
        for (i, u) in self.users.iter().enumerate() {
            if !(u.radius_m > 0.0 && u.radius_m.is_finite()) {
                return Err(Error::validation(format!("users[{i}].radius_m: must be positive, got {}", u.radius_m)));
            }
            if !(0.0..360.0).contains(&u.angle_deg) {
                return Err(Error::validation(format!(
                    "users[{i}].angle_deg: must lie in [0, 360), got {}",
                    u.angle_deg
                )));
            }
            if u.id != i + 1 {
                return Err(Error::validation(format!("users[{i}]: id must be {}", i + 1)));
            }
        }
        if self.modulations.is_empty() {
            return Err(Error::validation("modulations: at least one scheme is required"));
        }
        for (i, s) in self.modulations.iter().enumerate() {
            s.validate().map_err(|e| Error::validation(format!("modulations[{i}]: {e}")))?;
        }
        if self.packet_bits() == 0 {
            return Err(Error::validation("payload_bits + overhead_bits must be positive"));
        }
        if self.m == 0 {
            return Err(Error::validation("m: must be at least 1"));
        }
        if self.x_cap == 0 {
            return Err(Error::validation("x_cap: must be at least 1"));
        }
        if let TreeSpec::Nested(children) = &self.tree {
            validate_partition(children, self.n_users())?;
        }
        Ok(())
    }
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = Error;

    fn try_from(file: ScenarioFile) -> Result<Scenario> {
        let m = file.m.ok_or_else(|| Error::validation("m: missing required key"))?;
        let r_max = file.r_max.ok_or_else(|| Error::validation("r_max: missing required key"))?;
        let users = file.users.into_iter().enumerate().map(|(i, u)| User { id: i + 1, ..u }).collect();
        let scenario = Scenario {
            name: file.name,
            phy: file.phy,
            users,
            modulations: file.modulations,
            payload_bits: file.payload_bits,
            overhead_bits: file.overhead_bits,
            m,
            r_max,
            x_cap: file.x_cap.unwrap_or(2 * m),
            tree: file.tree,
            reception_mode: file.reception_mode,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    Scenario::from_json(&text)
}

/// Checks that a nested tree spec mentions every user id in `1..=n` exactly once.
pub fn validate_partition(children: &[TreeSpecNode], n: usize) -> Result<()> {
    fn walk(node: &TreeSpecNode, seen: &mut [bool]) -> Result<()> {
        match node {
            TreeSpecNode::User(id) => {
                if *id == 0 || *id > seen.len() {
                    return Err(Error::validation(format!("tree: unknown user id {id}")));
                }
                if std::mem::replace(&mut seen[id - 1], true) {
                    return Err(Error::validation(format!("tree: user {id} appears more than once")));
                }
                Ok(())
            }
            TreeSpecNode::Group(items) => {
                if items.is_empty() {
                    return Err(Error::validation("tree: empty group"));
                }
                items.iter().try_for_each(|c| walk(c, seen))
            }
        }
    }
    let mut seen = vec![false; n];
    walk(&TreeSpecNode::Group(children.to_vec()), &mut seen)?;
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::validation(format!("tree: user {} is not covered", missing + 1)));
    }
    Ok(())
}
