use std::collections::BTreeMap;
use std::path::Path;

use jumpmeans::eval::{self, baseline_error, reconstruction_error, Decoder, HoldoutSplit};
use jumpmeans::nonparametric::{fit_imjp, NpFitConfig, NpSuffStats};
use jumpmeans::parametric::{self, FitConfig, ModelKind};
use jumpmeans::simulate::{generate_scaling_suite, generate_synthetic1, generate_synthetic2, SyntheticSpec};
use jumpmeans::{Dataset, Evaluation, FitTrace, ObsKind, Trajectory};
use serde::de::DeserializeOwned;

use crate::args::{EvaluateArgs, FitArgs, Protocol, ReportArgs, SimulateArgs};
use crate::error::{data_err, usage_err, CliError, CliResult};
use crate::format::{
    fmt_float, read_json, to_canonical, trace_csv, trace_total_seconds, write_bytes, write_json, BaselineFile,
    DatasetFile, EmissionFile, GeneratorFile, ModelFile, ModelName, ResultsFile, SplitFile, TrajectoriesFile,
    FORMAT_VERSION,
};
use crate::manifest::{sidecar, ManifestBuilder};

fn parse<T: DeserializeOwned>(bytes: &[u8], path: &Path) -> CliResult<T> {
    serde_json::from_slice(bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn spec_for(args: &SimulateArgs) -> SyntheticSpec {
    let seed = args.seed.unwrap_or_default();
    let mut spec = match args.protocol {
        Some(Protocol::Synthetic1) => SyntheticSpec::synthetic1(seed),
        Some(Protocol::Synthetic2) => SyntheticSpec::synthetic2(seed),
        _ => SyntheticSpec::gaussian(seed),
    };
    spec.num_sequences = args.num_seqs.unwrap_or(spec.num_sequences);
    spec.obs_per_sequence = args.obs_per_seq.unwrap_or(spec.obs_per_sequence);
    spec.horizon = args.horizon;
    spec
}

pub fn simulate(args: SimulateArgs) -> CliResult<()> {
    let args = args.resolve()?;
    let protocol = args.protocol.expect("resolved");
    let out = args.out.clone().expect("resolved");
    let seed = args.seed.unwrap_or_default();
    let spec = spec_for(&args);
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let mut manifest = ManifestBuilder::new("simulate", &args, Some(seed))?;
    if protocol == Protocol::Scaling {
        let sizes = args.sizes.as_deref().unwrap_or_default();
        if sizes.windows(2).any(|w| w[1] <= w[0]) || sizes[0] == 0 {
            return usage_err("--sizes must be positive and strictly increasing");
        }
        let suite = generate_scaling_suite(&spec, sizes)?;
        for (n, g) in sizes.iter().zip(&suite) {
            let path = out.join(format!("n{n}.json"));
            let file = DatasetFile::from_dataset(&g.dataset, Some(GeneratorFile::new(protocol.as_str(), g)), seed)?;
            let bytes = write_json(&path, &file)?;
            manifest.output(&path, &bytes);
        }
        manifest.finish(&out.join("manifest.json"))?;
    } else {
        let g = match protocol {
            Protocol::Synthetic1 => generate_synthetic1(&spec)?,
            _ => generate_synthetic2(&spec)?,
        };
        let file = DatasetFile::from_dataset(&g.dataset, Some(GeneratorFile::new(protocol.as_str(), &g)), seed)?;
        let bytes = write_json(&out, &file)?;
        manifest.output(&out, &bytes);
        manifest.finish(&sidecar(&out))?;
    }
    Ok(())
}

/// Share of sequences starting in each state.
fn initial_frequencies(trajs: &[Trajectory], m: usize) -> Vec<f64> {
    let mut counts = vec![0.0; m];
    for t in trajs {
        counts[t.states()[0]] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    counts.iter().map(|c| c / total).collect()
}

struct Fitted {
    model: ModelFile,
    trajectories: Vec<Trajectory>,
    trace: FitTrace,
}

fn run_fit(args: &FitArgs, train: &Dataset, evaluation: Option<&Evaluation>) -> CliResult<Fitted> {
    let name = args.model.expect("resolved");
    let hyper = args.hyperparams();
    let max_iters = args.max_iters.expect("resolved");
    let tol = args.tol.expect("resolved");
    let timed = !args.no_timing;
    match name {
        ModelName::Domjp | ModelName::Hmjp => {
            let kind = if name == ModelName::Domjp { ModelKind::Domjp } else { ModelKind::Hmjp };
            if train.kind() == ObsKind::Gaussian && args.num_states.is_none() {
                return usage_err("--num-states is required for Gaussian observations");
            }
            let config = FitConfig {
                hyper,
                num_states: args.num_states,
                max_iters,
                tol,
                seed: args.seed.unwrap_or_default(),
                timed,
                ..FitConfig::default()
            };
            let fit = parametric::fit(train, kind, &config, evaluation)?;
            Ok(Fitted {
                model: ModelFile {
                    kind: name,
                    num_states: fit.params.num_states(),
                    pi: fit.params.initial,
                    transition: fit.params.transition,
                    lambda: fit.params.rates,
                    emission: EmissionFile::from_model(fit.emission.as_ref()),
                    pi0: None,
                    hyperparams: hyper.into(),
                },
                trajectories: fit.trajectories,
                trace: fit.trace,
            })
        }
        ModelName::Imjp => {
            if args.num_states.is_some() {
                return usage_err("--num-states does not apply to the infinite-state model");
            }
            let config = NpFitConfig {
                hyper,
                max_iters,
                tol,
                timed,
                ..NpFitConfig::default()
            };
            let fit = fit_imjp(train, &config, evaluation)?;
            let m = fit.model.num_states();
            let stats = NpSuffStats::from_segmentations(train, &fit.segmentations, m, &fit.model.emission)?;
            let lambda = stats
                .dwell_count
                .iter()
                .zip(&stats.dwell_sum)
                .map(|(k, s)| k / (hyper.gamma + s))
                .collect();
            Ok(Fitted {
                model: ModelFile {
                    kind: name,
                    num_states: m,
                    pi: initial_frequencies(&fit.trajectories, m),
                    transition: fit.model.pi_rows,
                    lambda,
                    emission: EmissionFile::from_model(Some(&fit.model.emission)),
                    pi0: Some(fit.model.pi0),
                    hyperparams: hyper.into(),
                },
                trajectories: fit.trajectories,
                trace: fit.trace,
            })
        }
    }
}

pub fn fit(args: FitArgs) -> CliResult<()> {
    let args = args.resolve()?;
    let out = args.out.clone().expect("resolved");
    let data_path = args.data.clone().expect("resolved");
    let name = args.model.expect("resolved");
    let mut manifest = ManifestBuilder::new("fit", &args, args.seed)?;
    let bytes = manifest.input(&data_path)?;
    let file: DatasetFile = parse(&bytes, &data_path)?;
    let full = file.to_dataset()?;
    match (name, full.kind()) {
        (ModelName::Domjp, ObsKind::Direct) | (ModelName::Hmjp | ModelName::Imjp, ObsKind::Symbols | ObsKind::Gaussian) => {}
        (_, kind) => return usage_err(format!("model {} does not fit {kind:?} observations", name.as_str())),
    }

    let fraction = args.holdout.unwrap_or_default();
    let split = eval::split(&full, fraction, args.seed.unwrap_or_default())?;
    let (train, heldout) = split.apply(&full)?;
    let thresholds = args.thresholds.clone().or_else(|| file.thresholds());
    let evaluation = (full.kind() != ObsKind::Gaussian || thresholds.is_some()).then_some(Evaluation {
        heldout,
        thresholds,
    });
    let fitted = run_fit(&args, &train, evaluation.as_ref())?;

    let outputs = [
        ("model.json", to_canonical(&fitted.model)?),
        ("trajectories.json", to_canonical(&TrajectoriesFile::new(&fitted.trajectories))?),
        ("trace.csv", trace_csv(&fitted.trace).into_bytes()),
    ];
    for (name, bytes) in outputs {
        let path = out.join(name);
        write_bytes(&path, &bytes)?;
        manifest.output(&path, &bytes);
    }
    if fraction > 0.0 {
        let path = out.join("split.json");
        let bytes = write_json(&path, &SplitFile::new(&split))?;
        manifest.output(&path, &bytes);
    }
    manifest.finish(&out.join("manifest.json"))?;
    Ok(())
}

/// Decoder of observed categories only, for scoring the baseline.
fn data_decoder(kind: ObsKind, thresholds: Option<&[f64]>) -> CliResult<Decoder> {
    Ok(match kind {
        ObsKind::Direct => Decoder::Direct,
        ObsKind::Symbols => Decoder::Multinomial(Vec::new()),
        ObsKind::Gaussian => Decoder::Gaussian {
            state_bins: Vec::new(),
            thresholds: thresholds
                .ok_or_else(|| CliError::Usage("Gaussian data needs --thresholds".into()))?
                .to_vec(),
        },
    })
}

pub fn evaluate(args: EvaluateArgs) -> CliResult<()> {
    let args = args.resolve()?;
    let out = args.out.clone().expect("resolved");
    let mut manifest = ManifestBuilder::new("evaluate", &args, None)?;
    let data_path = args.data.clone().expect("resolved");
    let file: DatasetFile = parse(&manifest.input(&data_path)?, &data_path)?;
    let full = file.to_dataset()?;
    let split_path = args.split.clone().expect("resolved");
    let split: HoldoutSplit = parse::<SplitFile>(&manifest.input(&split_path)?, &split_path)?.to_split()?;
    let (train, heldout) = split.apply(&full)?;
    let thresholds = args.thresholds.clone().or_else(|| file.thresholds());
    let baseline = baseline_error(&train, &heldout, &data_decoder(full.kind(), thresholds.as_deref())?)?;

    let (method, report, num_states, total_seconds) = if args.baseline_only {
        ("baseline".to_string(), baseline.clone(), None, None)
    } else {
        let model_path = args.model.clone().expect("resolved");
        let model: ModelFile = parse(&manifest.input(&model_path)?, &model_path)?;
        let traj_path = args.trajectories.clone().expect("resolved");
        let trajs = parse::<TrajectoriesFile>(&manifest.input(&traj_path)?, &traj_path)?.to_trajectories()?;
        if trajs.iter().any(|t| t.states().iter().any(|&s| s >= model.num_states)) {
            return data_err("trajectories use states the model does not have");
        }
        let emission = model.emission.to_model()?;
        if emission.is_none() != (full.kind() == ObsKind::Direct) {
            return data_err("model and dataset disagree on how states are observed");
        }
        let decoder = Decoder::new(emission.as_ref(), thresholds.as_deref())?;
        let report = reconstruction_error(&trajs, &heldout, &decoder)?;
        let seconds = match &args.trace {
            Some(p) => {
                let csv = String::from_utf8(manifest.input(p)?).map_err(|e| CliError::Data(e.to_string()))?;
                Some(trace_total_seconds(&csv)?)
            }
            None => None,
        };
        (model.kind.as_str().to_string(), report, Some(model.num_states), seconds)
    };

    let results = ResultsFile {
        format_version: FORMAT_VERSION,
        method: args.method.clone().unwrap_or(method),
        dataset: args.dataset_id.clone().expect("resolved"),
        seed: split.seed,
        num_points: full.num_points(),
        heldout_points: report.count,
        error_percent: report.error_percent,
        pooled_percent: report.pooled_percent,
        per_sequence_errors: report.per_sequence,
        baseline: BaselineFile {
            error_percent: baseline.error_percent,
            pooled_percent: baseline.pooled_percent,
        },
        num_states,
        total_seconds,
    };
    let bytes = write_json(&out, &results)?;
    manifest.output(&out, &bytes);
    manifest.finish(&sidecar(&out))?;
    Ok(())
}

pub fn report(args: ReportArgs) -> CliResult<()> {
    let args = args.resolve()?;
    let mut manifest = ManifestBuilder::new("report", &args, None)?;
    let mut results = Vec::with_capacity(args.results.len());
    for path in &args.results {
        manifest.input(path)?;
        results.push(read_json::<ResultsFile>(path)?);
    }

    let mut groups: BTreeMap<(&str, &str), Vec<&ResultsFile>> = BTreeMap::new();
    for r in &results {
        groups.entry((&r.dataset, &r.method)).or_default().push(r);
    }
    let mut summary = String::from("dataset,method,runs,error_percent,baseline_percent\n");
    for ((dataset, method), rows) in &groups {
        let n = rows.len() as f64;
        let error = rows.iter().map(|r| r.error_percent).sum::<f64>() / n;
        let baseline = rows.iter().map(|r| r.baseline.error_percent).sum::<f64>() / n;
        summary.push_str(&format!(
            "{dataset},{method},{},{},{}\n",
            rows.len(),
            fmt_float(error),
            fmt_float(baseline)
        ));
    }
    let summary_path = args.summary.clone().expect("resolved");
    write_bytes(&summary_path, summary.as_bytes())?;
    manifest.output(&summary_path, summary.as_bytes());

    if let Some(path) = &args.scaling {
        let mut timed: Vec<&ResultsFile> = results.iter().filter(|r| r.total_seconds.is_some()).collect();
        timed.sort_by(|a, b| {
            a.num_points
                .cmp(&b.num_points)
                .then_with(|| (&a.dataset, &a.method).cmp(&(&b.dataset, &b.method)))
        });
        let mut csv = String::from("num_points,total_seconds,error_percent\n");
        for r in timed {
            csv.push_str(&format!(
                "{},{},{}\n",
                r.num_points,
                fmt_float(r.total_seconds.unwrap_or_default()),
                fmt_float(r.error_percent)
            ));
        }
        write_bytes(path, csv.as_bytes())?;
        manifest.output(path, csv.as_bytes());
    }
    manifest.finish(&sidecar(&summary_path))?;
    Ok(())
}
