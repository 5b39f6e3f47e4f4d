use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of model-input features per flow record.
pub const NUM_FEATURES: usize = 42;
/// Number of traffic categories (normal plus nine attack families).
pub const NUM_CLASSES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

/// The ordered UNSW-NB15 flow features used as model input, plus the two
/// label fields.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureSpec>,
    pub category_field: String,
    pub label_field: String,
}

const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "proto",
    "rate",
    "dur",
    "service",
    "state",
    "spkts",
    "dpkts",
    "sbytes",
    "dbytes",
    "sttl",
    "dttl",
    "sload",
    "dload",
    "sloss",
    "dloss",
    "swin",
    "dwin",
    "stcpb",
    "dtcpb",
    "smeansz",
    "dmeansz",
    "trans_depth",
    "response_body_len",
    "sinpkt",
    "dinpkt",
    "sjit",
    "djit",
    "tcprtt",
    "synack",
    "ackdat",
    "ct_srv_src",
    "ct_srv_dst",
    "ct_src_ltm",
    "ct_dst_ltm",
    "ct_dst_src_ltm",
    "ct_src_dport_ltm",
    "ct_dst_sport_ltm",
    "ct_state_ttl",
    "is_ftp_login",
    "ct_ftp_cmd",
    "ct_flw_http_mthd",
    "is_sm_ips_ports",
];

const CATEGORICAL: [&str; 3] = ["proto", "service", "state"];

/// Header spellings used by the published CSV files for some features.
const ALIASES: [(&str, &str); 4] = [
    ("smean", "smeansz"),
    ("dmean", "dmeansz"),
    ("sintpkt", "sinpkt"),
    ("dintpkt", "dinpkt"),
];

impl FeatureSchema {
    pub fn unsw_nb15() -> Self {
        Self {
            features: FEATURE_NAMES
                .iter()
                .map(|&name| FeatureSpec {
                    name: name.to_string(),
                    kind: if CATEGORICAL.contains(&name) {
                        FeatureKind::Categorical
                    } else {
                        FeatureKind::Numeric
                    },
                })
                .collect(),
            category_field: "attack_cat".into(),
            label_field: "label".into(),
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Canonical feature name for a CSV header cell, if it is one of ours.
    pub fn canonical_name(header: &str) -> String {
        let h = header.trim().to_ascii_lowercase();
        ALIASES
            .iter()
            .find(|(alias, _)| *alias == h)
            .map(|(_, canon)| canon.to_string())
            .unwrap_or(h)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }
}

impl fmt::Display for FeatureSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} features [", self.features.len())?;
        for (i, spec) in self.features.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", spec.name)?;
        }
        write!(f, "]")
    }
}

/// Traffic categories. The discriminant is the multiclass label index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttackCategory {
    Normal = 0,
    Analysis,
    Backdoor,
    DoS,
    Exploits,
    Fuzzers,
    Generic,
    Reconnaissance,
    Shellcode,
    Worms,
}

impl AttackCategory {
    pub const ALL: [AttackCategory; NUM_CLASSES] = [
        AttackCategory::Normal,
        AttackCategory::Analysis,
        AttackCategory::Backdoor,
        AttackCategory::DoS,
        AttackCategory::Exploits,
        AttackCategory::Fuzzers,
        AttackCategory::Generic,
        AttackCategory::Reconnaissance,
        AttackCategory::Shellcode,
        AttackCategory::Worms,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL.get(i).copied().ok_or(Error::LabelOutOfRange {
            label: i,
            classes: NUM_CLASSES,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            AttackCategory::Normal => "Normal",
            AttackCategory::Analysis => "Analysis",
            AttackCategory::Backdoor => "Backdoor",
            AttackCategory::DoS => "DoS",
            AttackCategory::Exploits => "Exploits",
            AttackCategory::Fuzzers => "Fuzzers",
            AttackCategory::Generic => "Generic",
            AttackCategory::Reconnaissance => "Reconnaissance",
            AttackCategory::Shellcode => "Shellcode",
            AttackCategory::Worms => "Worms",
        }
    }

    pub fn parse(raw: &str) -> Option<Self> {
        let s = raw.trim();
        if s.eq_ignore_ascii_case("backdoors") {
            return Some(AttackCategory::Backdoor);
        }
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
    }

    pub fn names() -> Vec<String> {
        Self::ALL.iter().map(|c| c.name().to_string()).collect()
    }
}

pub fn binary_class_names() -> Vec<String> {
    vec!["Normal".into(), "Attack".into()]
}
