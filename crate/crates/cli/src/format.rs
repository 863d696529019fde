//! On-disk formats: datasets, models, trajectories, splits, traces and
//! results. Ids are 1-based in files and 0-based in the library.

use std::io::{self, Write};
use std::path::Path;

use jumpmeans::eval::HoldoutSplit;
use jumpmeans::simulate::{Generated, PRNG_NAME};
use jumpmeans::{Dataset, EmissionModel, Hyperparams, MjpParams, ObsKind, ObsSeq, ObsValues, Trajectory};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::error::{data_err, CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;

/// JSON layout used for every file: objects outside arrays are indented,
/// top-level arrays put one element per line and anything nested deeper is
/// written inline. Floats carry 17 significant digits, so parsing and
/// re-serializing reproduces the same bytes.
#[derive(Default)]
pub struct CanonicalFormatter {
    stack: Vec<Frame>,
}

struct Frame {
    array: bool,
    inline: bool,
    empty: bool,
}

impl CanonicalFormatter {
    fn open(&mut self, array: bool) {
        let inline = self.stack.last().is_some_and(|f| f.array || f.inline);
        self.stack.push(Frame {
            array,
            inline,
            empty: true,
        });
    }

    fn newline<W: ?Sized + Write>(&self, w: &mut W, depth: usize) -> io::Result<()> {
        w.write_all(b"\n")?;
        for _ in 0..depth {
            w.write_all(b"  ")?;
        }
        Ok(())
    }

    fn element<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if !first {
            w.write_all(b",")?;
        }
        let depth = self.stack.len();
        let frame = self.stack.last_mut().expect("inside a container");
        frame.empty = false;
        if !frame.inline {
            self.newline(w, depth)?;
        }
        Ok(())
    }

    fn close<W: ?Sized + Write>(&mut self, w: &mut W, bracket: &[u8]) -> io::Result<()> {
        let frame = self.stack.pop().expect("balanced containers");
        if !frame.inline && !frame.empty {
            self.newline(w, self.stack.len())?;
        }
        w.write_all(bracket)
    }
}

impl Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.open(true);
        w.write_all(b"[")
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.close(w, b"]")
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.element(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, _w: &mut W) -> io::Result<()> {
        Ok(())
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.open(false);
        w.write_all(b"{")
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.close(w, b"}")
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.element(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        let inline = self.stack.last().is_some_and(|f| f.inline);
        w.write_all(if inline { b":" } else { b": " })
    }
}

pub fn to_canonical<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter::default());
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Data(format!("serialization failed: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<Vec<u8>> {
    let bytes = to_canonical(value)?;
    write_bytes(path, &bytes)?;
    Ok(bytes)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

// Datasets ---------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Direct,
    Hidden,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmissionTag {
    Multinomial,
    Gaussian,
}

/// State or symbol ids for discrete data, reals otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    Ids(Vec<usize>),
    Reals(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeqFile {
    pub times: Vec<f64>,
    pub values: Values,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrngFile {
    pub name: String,
    pub seed: u64,
}

/// Emission block shared by models and generator records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum EmissionFile {
    Direct,
    Multinomial { rho: Vec<Vec<f64>> },
    Gaussian { means: Vec<f64> },
}

impl EmissionFile {
    pub fn from_model(emission: Option<&EmissionModel>) -> Self {
        match emission {
            None => EmissionFile::Direct,
            Some(EmissionModel::Multinomial(rows)) => EmissionFile::Multinomial { rho: rows.clone() },
            Some(EmissionModel::Gaussian(means)) => EmissionFile::Gaussian { means: means.clone() },
        }
    }

    pub fn to_model(&self) -> CliResult<Option<EmissionModel>> {
        let model = match self {
            EmissionFile::Direct => return Ok(None),
            EmissionFile::Multinomial { rho } => EmissionModel::Multinomial(rho.clone()),
            EmissionFile::Gaussian { means } => EmissionModel::Gaussian(means.clone()),
        };
        if let Some(v) = model.validate().first() {
            return data_err(format!("invalid emission model: {v}"));
        }
        Ok(Some(model))
    }
}

/// Parameters that generated a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorFile {
    pub protocol: String,
    #[serde(rename = "M")]
    pub num_states: usize,
    pub pi: Vec<f64>,
    #[serde(rename = "P")]
    pub transition: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub emission: EmissionFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,
}

impl GeneratorFile {
    pub fn new(protocol: &str, generated: &Generated) -> Self {
        let p = &generated.params;
        Self {
            protocol: protocol.to_string(),
            num_states: p.num_states(),
            pi: p.initial.clone(),
            transition: p.transition.clone(),
            lambda: p.rates.clone(),
            emission: EmissionFile::from_model(generated.emission.as_ref()),
            thresholds: generated.thresholds.clone(),
        }
    }

    pub fn params(&self) -> MjpParams {
        MjpParams {
            initial: self.pi.clone(),
            transition: self.transition.clone(),
            rates: self.lambda.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    pub format_version: u32,
    pub kind: DataKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission: Option<EmissionTag>,
    pub horizon: f64,
    pub sequences: Vec<SeqFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorFile>,
    pub prng: PrngFile,
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|&i| i + 1).collect()
}

fn zero_based(v: &[usize], what: &str) -> CliResult<Vec<usize>> {
    v.iter()
        .map(|&i| i.checked_sub(1).ok_or_else(|| CliError::Data(format!("{what} ids start at 1"))))
        .collect()
}

impl DatasetFile {
    pub fn from_dataset(dataset: &Dataset, generator: Option<GeneratorFile>, seed: u64) -> CliResult<Self> {
        let seqs = dataset.sequences();
        let horizon = seqs[0].horizon();
        if seqs.iter().any(|s| s.horizon() != horizon) {
            return data_err("sequences of one dataset file must share a horizon");
        }
        let (kind, emission) = match dataset.kind() {
            ObsKind::Direct => (DataKind::Direct, None),
            ObsKind::Symbols => (DataKind::Hidden, Some(EmissionTag::Multinomial)),
            ObsKind::Gaussian => (DataKind::Hidden, Some(EmissionTag::Gaussian)),
        };
        let sequences = seqs
            .iter()
            .map(|s| SeqFile {
                times: s.times().to_vec(),
                values: match s.values() {
                    ObsValues::States(v) | ObsValues::Symbols(v) => Values::Ids(one_based(v)),
                    ObsValues::Reals(v) => Values::Reals(v.clone()),
                },
            })
            .collect();
        Ok(Self {
            format_version: FORMAT_VERSION,
            kind,
            emission,
            horizon,
            sequences,
            generator,
            prng: PrngFile {
                name: PRNG_NAME.to_string(),
                seed,
            },
        })
    }

    pub fn to_dataset(&self) -> CliResult<Dataset> {
        if self.format_version != FORMAT_VERSION {
            return data_err(format!("unsupported format_version {}", self.format_version));
        }
        let obs_kind = match (self.kind, self.emission) {
            (DataKind::Direct, None) => ObsKind::Direct,
            (DataKind::Hidden, Some(EmissionTag::Multinomial)) => ObsKind::Symbols,
            (DataKind::Hidden, Some(EmissionTag::Gaussian)) => ObsKind::Gaussian,
            (DataKind::Direct, Some(_)) => return data_err("direct datasets carry no emission"),
            (DataKind::Hidden, None) => return data_err("hidden datasets need an emission"),
        };
        let sequences = self
            .sequences
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let values = match (obs_kind, &s.values) {
                    (ObsKind::Direct, Values::Ids(v)) => ObsValues::States(zero_based(v, "state")?),
                    (ObsKind::Symbols, Values::Ids(v)) => ObsValues::Symbols(zero_based(v, "symbol")?),
                    (ObsKind::Gaussian, Values::Reals(v)) => ObsValues::Reals(v.clone()),
                    // Integral reals parse as ids.
                    (ObsKind::Gaussian, Values::Ids(v)) => ObsValues::Reals(v.iter().map(|&x| x as f64).collect()),
                    _ => return data_err(format!("sequence {} has values of the wrong type", i + 1)),
                };
                ObsSeq::new(s.times.clone(), values, self.horizon)
                    .map_err(|e| CliError::Data(format!("sequence {}: {e}", i + 1)))
            })
            .collect::<CliResult<Vec<_>>>()?;
        Dataset::new(sequences).map_err(CliError::from)
    }

    pub fn thresholds(&self) -> Option<Vec<f64>> {
        self.generator.as_ref().and_then(|g| g.thresholds.clone())
    }
}

// Models -----------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Domjp,
    Hmjp,
    Imjp,
}

impl ModelName {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::Domjp => "domjp",
            ModelName::Hmjp => "hmjp",
            ModelName::Imjp => "imjp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperFile {
    pub xi: f64,
    pub xi_lambda: f64,
    pub mu_lambda: f64,
    pub zeta: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub gamma: f64,
}

impl From<Hyperparams> for HyperFile {
    fn from(h: Hyperparams) -> Self {
        Self {
            xi: h.xi,
            xi_lambda: h.xi_lambda,
            mu_lambda: h.mu_lambda,
            zeta: h.zeta,
            xi1: h.xi1,
            xi2: h.xi2,
            gamma: h.gamma,
        }
    }
}

/// Fitted parameters. For the infinite-state model `P` has one extra column
/// holding the mass reserved for unseen states, and `lambda` reports
/// `K_m / (γ + S_m)` from the completed dwells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub kind: ModelName,
    #[serde(rename = "M")]
    pub num_states: usize,
    pub pi: Vec<f64>,
    #[serde(rename = "P")]
    pub transition: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub emission: EmissionFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi0: Option<Vec<f64>>,
    pub hyperparams: HyperFile,
}

// Trajectories and splits ------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryFile {
    pub states: Vec<usize>,
    pub dwell_times: Vec<f64>,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoriesFile {
    pub format_version: u32,
    pub trajectories: Vec<TrajectoryFile>,
}

impl TrajectoriesFile {
    pub fn new(trajs: &[Trajectory]) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            trajectories: trajs
                .iter()
                .map(|t| TrajectoryFile {
                    states: one_based(t.states()),
                    dwell_times: t.dwell_times().to_vec(),
                    horizon: t.horizon(),
                })
                .collect(),
        }
    }

    pub fn to_trajectories(&self) -> CliResult<Vec<Trajectory>> {
        self.trajectories
            .iter()
            .enumerate()
            .map(|(i, t)| {
                Trajectory::new(zero_based(&t.states, "state")?, t.dwell_times.clone(), t.horizon)
                    .map_err(|e| CliError::Data(format!("trajectory {}: {e}", i + 1)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFile {
    pub format_version: u32,
    pub fraction: f64,
    pub seed: u64,
    /// Held-out observation indices per sequence.
    pub heldout: Vec<Vec<usize>>,
}

impl SplitFile {
    pub fn new(split: &HoldoutSplit) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            fraction: split.fraction,
            seed: split.seed,
            heldout: split.heldout.iter().map(|v| one_based(v)).collect(),
        }
    }

    pub fn to_split(&self) -> CliResult<HoldoutSplit> {
        Ok(HoldoutSplit {
            fraction: self.fraction,
            seed: self.seed,
            heldout: self
                .heldout
                .iter()
                .map(|v| zero_based(v, "observation"))
                .collect::<CliResult<_>>()?,
        })
    }
}

// Results ----------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineFile {
    pub error_percent: f64,
    pub pooled_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultsFile {
    pub format_version: u32,
    pub method: String,
    pub dataset: String,
    pub seed: u64,
    pub num_points: usize,
    pub heldout_points: usize,
    pub error_percent: f64,
    pub pooled_percent: f64,
    /// `null` for sequences without held-out points.
    pub per_sequence_errors: Vec<Option<f64>>,
    pub baseline: BaselineFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_states: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_seconds: Option<f64>,
}

// CSV --------------------------------------------------------------------

/// Fixed float rendering shared by the JSON and CSV writers; missing values
/// are left empty.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

pub fn trace_csv(trace: &jumpmeans::FitTrace) -> String {
    let mut out = String::from("iteration,objective,num_states,train_error,heldout_error,cum_seconds\n");
    for r in &trace.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.iteration,
            fmt_float(r.objective),
            r.num_states,
            fmt_float(r.train_error),
            fmt_float(r.heldout_error),
            fmt_float(r.cum_seconds)
        ));
    }
    out
}

/// Last `cum_seconds` entry of a trace CSV.
pub fn trace_total_seconds(csv: &str) -> CliResult<f64> {
    let last = csv
        .lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .last()
        .ok_or_else(|| CliError::Data("trace has no rows".into()))?;
    last.rsplit(',')
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::Data(format!("malformed trace row: {last}")))
}
