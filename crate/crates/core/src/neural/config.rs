use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::onehot::{RegionSpec, RegionVariant};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    WvcnnRand,
    WvcnnNonstatic,
    OhCnn,
    OhBilstmP,
}

impl Arch {
    pub const ALL: [Arch; 4] = [Arch::WvcnnRand, Arch::WvcnnNonstatic, Arch::OhCnn, Arch::OhBilstmP];

    pub fn as_str(self) -> &'static str {
        match self {
            Arch::WvcnnRand => "wvcnn_rand",
            Arch::WvcnnNonstatic => "wvcnn_nonstatic",
            Arch::OhCnn => "oh_cnn",
            Arch::OhBilstmP => "oh_bilstm_p",
        }
    }

    pub fn is_wvcnn(self) -> bool {
        matches!(self, Arch::WvcnnRand | Arch::WvcnnNonstatic)
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Arch::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown architecture {s:?}")))
    }
}

/// Hyperparameters of one network. Fields irrelevant to an architecture are ignored.
///
/// Deserialization starts from [`NetConfig::preset`] of the named architecture and
/// overrides whatever fields are present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "NetConfigPatch")]
pub struct NetConfig {
    pub arch: Arch,
    pub batch_size: usize,
    /// Feature maps (wvCNN), pooling-layer nodes (Oh-CNN) or LSTM units per direction.
    pub hidden: usize,
    /// DRe: dropout on the embedded input (wvCNN).
    pub dropout_embed: f64,
    /// DRp: dropout on pooled features (wvCNN).
    pub dropout_pool: f64,
    /// DRt: dropout on the pooled document vector (one-hot nets).
    pub dropout_top: f64,
    pub region_size: usize,
    pub stride: usize,
    pub variant: RegionVariant,
    pub windows: Vec<usize>,
    /// wvCNN pads or truncates to this length; one-hot nets truncate when set.
    pub seq_len: Option<usize>,
    pub em_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Multiplies the learning rate once, after 80% of the epochs.
    pub lr_decay: f64,
    pub l2: f64,
    /// Pooled units per feature (dynamic max pooling).
    pub pool_units: usize,
    /// Training-time chop length for Oh-biLSTMp documents.
    pub segment_len: usize,
    pub seed: u64,
    /// Pre-trained vectors for wvcnn_nonstatic.
    pub embeddings: Option<PathBuf>,
}

macro_rules! patch {
    ($($field:ident: $ty:ty),* $(,)?) => {
        /// Partial [`NetConfig`]; `None` keeps the preset value.
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct NetConfigPatch {
            pub arch: Option<Arch>,
            $(#[serde(default, skip_serializing_if = "Option::is_none")] pub $field: Option<$ty>,)*
        }

        impl NetConfigPatch {
            pub fn apply(&self, mut cfg: NetConfig) -> NetConfig {
                if let Some(a) = self.arch {
                    cfg.arch = a;
                }
                $(if let Some(v) = &self.$field {
                    cfg.$field = v.clone();
                })*
                cfg
            }

            /// Fields set in `other` win.
            pub fn merged(&self, other: &NetConfigPatch) -> NetConfigPatch {
                NetConfigPatch {
                    arch: other.arch.or(self.arch),
                    $($field: other.$field.clone().or_else(|| self.$field.clone()),)*
                }
            }
        }
    };
}

patch! {
    batch_size: usize,
    hidden: usize,
    dropout_embed: f64,
    dropout_pool: f64,
    dropout_top: f64,
    region_size: usize,
    stride: usize,
    variant: RegionVariant,
    windows: Vec<usize>,
    seq_len: Option<usize>,
    em_dim: usize,
    epochs: usize,
    learning_rate: f64,
    lr_decay: f64,
    l2: f64,
    pool_units: usize,
    segment_len: usize,
    seed: u64,
    embeddings: Option<PathBuf>,
}

impl From<NetConfigPatch> for NetConfig {
    fn from(p: NetConfigPatch) -> Self {
        p.apply(NetConfig::preset(p.arch.unwrap_or(Arch::OhCnn)))
    }
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig::preset(Arch::OhCnn)
    }
}

impl NetConfig {
    /// Reported best settings per architecture.
    pub fn preset(arch: Arch) -> Self {
        let base = NetConfig {
            arch,
            batch_size: 100,
            hidden: 1000,
            dropout_embed: 0.0,
            dropout_pool: 0.0,
            dropout_top: 0.5,
            region_size: 3,
            stride: 1,
            variant: RegionVariant::Seq,
            windows: vec![3, 4],
            seq_len: None,
            em_dim: 300,
            epochs: 100,
            learning_rate: 0.1,
            lr_decay: 0.1,
            l2: 1e-4,
            pool_units: 1,
            segment_len: 100,
            seed: 42,
            embeddings: None,
        };
        match arch {
            Arch::OhCnn => base,
            Arch::OhBilstmP => NetConfig {
                batch_size: 50,
                hidden: 500,
                epochs: 50,
                learning_rate: 0.5,
                lr_decay: 0.3,
                l2: 0.0,
                ..base
            },
            Arch::WvcnnRand | Arch::WvcnnNonstatic => NetConfig {
                batch_size: 50,
                hidden: 100,
                dropout_embed: 0.2,
                dropout_pool: 0.5,
                dropout_top: 0.0,
                seq_len: Some(300),
                epochs: 10,
                lr_decay: 1.0,
                l2: 0.0,
                ..base
            },
        }
    }

    pub fn region(&self) -> RegionSpec {
        RegionSpec {
            size: self.region_size,
            stride: self.stride,
            variant: self.variant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.batch_size == 0 || self.hidden == 0 || self.pool_units == 0 {
            return bad("batch_size, hidden and pool_units must be positive".into());
        }
        for (name, r) in [
            ("dropout_embed", self.dropout_embed),
            ("dropout_pool", self.dropout_pool),
            ("dropout_top", self.dropout_top),
        ] {
            if !(0.0..1.0).contains(&r) {
                return bad(format!("{name} must be in [0, 1), got {r}"));
            }
        }
        if !(self.learning_rate > 0.0) || !(self.lr_decay > 0.0) || self.l2 < 0.0 {
            return bad("learning_rate and lr_decay must be positive, l2 non-negative".into());
        }
        if self.learning_rate * self.l2 >= 1.0 {
            return bad("learning_rate · l2 must be below 1".into());
        }
        match self.arch {
            Arch::OhCnn if self.region_size == 0 || self.stride == 0 => {
                bad("region_size and stride must be positive".into())
            }
            Arch::OhBilstmP if self.segment_len == 0 => bad("segment_len must be positive".into()),
            Arch::WvcnnRand | Arch::WvcnnNonstatic => {
                let Some(len) = self.seq_len else {
                    return bad("wvcnn needs seq_len".into());
                };
                if self.windows.is_empty() || self.windows.contains(&0) || self.em_dim == 0 {
                    return bad("wvcnn needs positive windows and em_dim".into());
                }
                if self.windows.iter().any(|&w| w > len) {
                    return bad(format!("every window must fit in seq_len = {len}"));
                }
                if self.arch == Arch::WvcnnNonstatic && self.embeddings.is_none() {
                    return bad("wvcnn_nonstatic needs an embeddings file".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Compact parameter string for reports.
    pub fn describe(&self) -> String {
        match self.arch {
            Arch::WvcnnRand | Arch::WvcnnNonstatic => format!(
                "Batch size = {}, fltr = {}, DRe = {}, DRp = {}, em_dim = {}, fltr_win = ({}), seq_len = {}, Epoch = {}",
                self.batch_size,
                self.hidden,
                self.dropout_embed,
                self.dropout_pool,
                self.em_dim,
                self.windows.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
                self.seq_len.unwrap_or(0),
                self.epochs
            ),
            Arch::OhCnn | Arch::OhBilstmP => format!(
                "Batch size = {}, Nodes = {}, Drt = {}, Epoch = {}, Decay = {}, L2 = {}",
                self.batch_size, self.hidden, self.dropout_top, self.epochs, self.lr_decay, self.l2
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_describe() {
        for arch in [Arch::WvcnnRand, Arch::OhCnn, Arch::OhBilstmP] {
            NetConfig::preset(arch).validate().unwrap();
        }
        assert!(NetConfig::preset(Arch::WvcnnNonstatic).validate().is_err());
        assert_eq!(
            NetConfig::preset(Arch::OhCnn).describe(),
            "Batch size = 100, Nodes = 1000, Drt = 0.5, Epoch = 100, Decay = 0.1, L2 = 0.0001"
        );
        assert_eq!(
            NetConfig::preset(Arch::WvcnnRand).describe(),
            "Batch size = 50, fltr = 100, DRe = 0.2, DRp = 0.5, em_dim = 300, fltr_win = (3,4), seq_len = 300, Epoch = 10"
        );
    }

    #[test]
    fn toml_round_trip() {
        let cfg = NetConfig::preset(Arch::OhBilstmP);
        let text = toml::to_string(&cfg).unwrap();
        let back: NetConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let partial: NetConfig = toml::from_str("arch = \"wvcnn_rand\"\nepochs = 3").unwrap();
        assert_eq!(partial.epochs, 3);
        assert_eq!(partial.arch, Arch::WvcnnRand);
        assert_eq!(partial.seq_len, Some(300));
        assert!(toml::from_str::<NetConfig>("arch = \"oh_cnn\"\nbogus = 1").is_err());
    }
}
