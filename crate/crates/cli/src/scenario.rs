//! Scenario resolution: built-in defaults, overridden by an optional JSON
//! config file, overridden by explicit command-line flags. JSON outputs
//! embed the fully resolved scenario so a previous output file can be fed
//! back as `--config` to reproduce the run.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use dexp_core::{ChannelSpec, LayerAllocation, Layers, Scheme};

use crate::commands::CliError;

/// `MIN:MAX:STEP` (or a bare value, giving a one-point range).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range3 {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Range3 {
    pub fn parse(text: &str) -> Result<Self, String> {
        let parse_num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad number {s:?}: {e}"))
        };
        let parts: Vec<&str> = text.split(':').collect();
        match parts.as_slice() {
            [single] => {
                let v = parse_num(single)?;
                Ok(Self {
                    min: v,
                    max: v,
                    step: 1.0,
                })
            }
            [min, max, step] => Ok(Self {
                min: parse_num(min)?,
                max: parse_num(max)?,
                step: parse_num(step)?,
            }),
            _ => Err("expected VALUE or MIN:MAX:STEP".to_string()),
        }
    }

    /// The inclusive grid `min, min+step, …` up to `max` (with a small
    /// tolerance so binary floating point does not drop the last point).
    pub fn expand(&self) -> Result<Vec<f64>, String> {
        if !self.min.is_finite() || !self.max.is_finite() || !(self.step > 0.0) {
            return Err(format!(
                "range needs finite bounds and a positive step, got {}:{}:{}",
                self.min, self.max, self.step
            ));
        }
        if self.max < self.min {
            return Err(format!("empty range {}:{}", self.min, self.max));
        }
        let count = ((self.max - self.min) / self.step + 1e-9).floor() as u64 + 1;
        if count > 100_000 {
            return Err(format!("range has {count} points; the limit is 100000"));
        }
        Ok((0..count).map(|i| self.min + i as f64 * self.step).collect())
    }

    /// The single value of a degenerate range, if it is one.
    pub fn single(&self) -> Option<f64> {
        (self.min == self.max).then_some(self.min)
    }
}

/// A scheme together with its layer count.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeChoice {
    pub scheme: Scheme,
    pub layers: Layers,
}

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Grid bounds for the finite-SNR search.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchGrid {
    pub rate_min: f64,
    /// Defaults to the multiplexing limit `m_min·log2(SNR)` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_max: Option<f64>,
    pub rate_step: f64,
    pub share_step: f64,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            rate_min: 0.0,
            rate_max: None,
            rate_step: 0.25,
            share_step: 0.25,
        }
    }
}

/// Everything a command needs, after merging defaults, config file, and
/// flags. Serialized into JSON outputs as the reproducibility record.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub mt: u32,
    pub mr: u32,
    pub blocks: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_range: Option<Range3>,
    pub schemes: Vec<SchemeChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<Range3>,
    pub trials: u64,
    pub seed: u64,
    pub epsilon0: f64,
    pub shards: usize,
    /// Explicit layer allocation for `simulate` (otherwise the asymptotic
    /// solver provides one).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allocation: Option<LayerAllocation>,
    /// Search grid for `optimize`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchGrid>,
    pub format: OutputFormat,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            mt: 1,
            mr: 1,
            blocks: 1,
            b: None,
            b_range: None,
            schemes: Vec::new(),
            snr_db: None,
            trials: 100_000,
            seed: 42,
            epsilon0: 0.01,
            shards: 1,
            allocation: None,
            search: None,
            format: OutputFormat::Csv,
        }
    }
}

impl Scenario {
    /// Loads a scenario from JSON. A previous JSON output file works too:
    /// its embedded `"scenario"` object is used.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{} is not valid JSON: {e}", path.display())))?;
        let scenario_value = match &value {
            serde_json::Value::Object(map) if map.contains_key("scenario") => {
                map["scenario"].clone()
            }
            _ => value,
        };
        serde_json::from_value(scenario_value).map_err(|e| {
            CliError::Usage(format!("{} is not a valid scenario: {e}", path.display()))
        })
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    pub fn channel_spec(&self) -> Result<ChannelSpec, CliError> {
        ChannelSpec::new(self.mt, self.mr, self.blocks).map_err(CliError::from)
    }

    pub fn apply_channel(&mut self, mt: Option<u32>, mr: Option<u32>, blocks: Option<u32>) {
        if let Some(v) = mt {
            self.mt = v;
        }
        if let Some(v) = mr {
            self.mr = v;
        }
        if let Some(v) = blocks {
            self.blocks = v;
        }
    }

    /// Merges `--scheme` (comma-separated tokens) and `--layers`
    /// (comma-separated counts or `inf`, broadcast when a single value is
    /// given for several schemes).
    pub fn apply_schemes(
        &mut self,
        schemes: Option<&str>,
        layers: Option<&str>,
    ) -> Result<(), CliError> {
        let parsed_layers = match layers {
            Some(text) => Some(parse_list::<Layers>(text, "--layers")?),
            None => None,
        };
        if let Some(text) = schemes {
            let parsed: Vec<Scheme> = parse_list(text, "--scheme")?;
            let layer_list = match &parsed_layers {
                Some(list) => broadcast(list, parsed.len(), "--layers", "--scheme")?,
                None => parsed.iter().map(|s| default_layers(*s)).collect(),
            };
            self.schemes = parsed
                .into_iter()
                .zip(layer_list)
                .map(|(scheme, layers)| SchemeChoice { scheme, layers })
                .collect();
        } else if let Some(list) = parsed_layers {
            if self.schemes.is_empty() {
                return Err(CliError::Usage(
                    "--layers was given but no scheme is selected (use --scheme or a config \
                     file)"
                        .to_string(),
                ));
            }
            let layer_list = broadcast(&list, self.schemes.len(), "--layers", "the scheme list")?;
            for (choice, layers) in self.schemes.iter_mut().zip(layer_list) {
                choice.layers = layers;
            }
        }
        Ok(())
    }

    /// The single scheme choice required by the non-sweep commands.
    pub fn single_scheme(&self) -> Result<SchemeChoice, CliError> {
        match self.schemes.as_slice() {
            [one] => Ok(*one),
            [] => Err(CliError::Usage(
                "a scheme is required (--scheme ub|single|ls|hls|bs)".to_string(),
            )),
            many => Err(CliError::Usage(format!(
                "this command takes exactly one scheme, got {}",
                many.len()
            ))),
        }
    }
}

/// The layer count implied by a scheme when none is given: the closed-form
/// infinite-layer limit where one exists, one layer for the single-layer
/// scheme.
fn default_layers(scheme: Scheme) -> Layers {
    match scheme {
        Scheme::SingleLayer => Layers::Finite(1),
        _ => Layers::Infinite,
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, flag: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|token| {
            token
                .trim()
                .parse()
                .map_err(|e| CliError::Usage(format!("{flag}: {e}")))
        })
        .collect()
}

fn broadcast<T: Copy>(
    list: &[T],
    want: usize,
    what: &str,
    against: &str,
) -> Result<Vec<T>, CliError> {
    if list.len() == want {
        Ok(list.to_vec())
    } else if list.len() == 1 {
        Ok(vec![list[0]; want])
    } else {
        Err(CliError::Usage(format!(
            "{what} has {} entries but {against} has {want}",
            list.len()
        )))
    }
}
