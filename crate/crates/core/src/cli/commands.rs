use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{logreg_fit, KnnIndex, LogRegConfig, DEFAULT_K};
use crate::cli::config::RunConfig;
use crate::cli::DataArgs;
use crate::dataset::{
    class_distribution, load_csv, load_csv_features, read_cache, split_encoded, split_tables,
    subsample_fraction, write_cache, AttackCategory, EncodedDataset, EncoderState, FeatureEncoder,
    LabelView, Provenance, SplitPolicy,
};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_labels, render_report, timed, ReportFormat, Timing};
use crate::model::{
    self, fit, load, predict_proba, save, Head, ManifestEntry, ModelConfig, Network, TrainedModel,
    TrainingHistory, TrainingMetadata, MODEL_VERSION,
};

const TRAIN_CACHE: &str = "train.lidsdata";
const TEST_CACHE: &str = "test.lidsdata";
const SUMMARY: &str = "summary.json";

fn io_out(e: std::io::Error) -> Error {
    Error::io("<output>", e)
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ))
    }
}

fn require_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => Err(Error::io(
            p,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "output directory does not exist",
            ),
        )),
        _ => Ok(()),
    }
}

/// Where records come from, with flags taking precedence over the config.
enum Source {
    Prepared(PathBuf),
    Csv {
        train: Option<PathBuf>,
        test: Option<PathBuf>,
    },
}

impl Source {
    fn resolve(cfg: &RunConfig, args: &DataArgs) -> Result<Self> {
        let prepared = args.data.clone().or_else(|| cfg.data.prepared.clone());
        let train = args
            .train_csv
            .clone()
            .or_else(|| cfg.data.train_csv.clone());
        let test = args.test_csv.clone().or_else(|| cfg.data.test_csv.clone());
        if let Some(dir) = prepared {
            if !dir.is_dir() {
                return Err(Error::io(
                    &dir,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "directory not found"),
                ));
            }
            return Ok(Source::Prepared(dir));
        }
        for p in [&train, &test].into_iter().flatten() {
            require_file(p)?;
        }
        Ok(Source::Csv { train, test })
    }

    fn train_csv(&self) -> Result<&Path> {
        match self {
            Source::Csv { train: Some(p), .. } => Ok(p),
            _ => Err(Error::InvalidConfig(
                "a training CSV is required (--train-csv or data.train_csv)".into(),
            )),
        }
    }

    fn test_csv(&self) -> Result<&Path> {
        match self {
            Source::Csv { test: Some(p), .. } => Ok(p),
            _ => Err(Error::InvalidConfig(
                "a testing CSV is required (--test-csv or data.test_csv)".into(),
            )),
        }
    }

    fn check(&self, policy: SplitPolicy, need_train: bool, need_test: bool) -> Result<()> {
        match self {
            Source::Prepared(dir) => {
                for name in [TRAIN_CACHE, TEST_CACHE] {
                    require_file(&dir.join(name))?;
                }
            }
            Source::Csv { .. } => {
                if need_train || policy.needs_train_file() {
                    self.train_csv()?;
                }
                if need_test || policy.needs_train_file() {
                    self.test_csv()?;
                }
            }
        }
        Ok(())
    }

    /// Training side of the split, encoded with `encoder` or a freshly fitted one.
    fn training_set(
        &self,
        policy: SplitPolicy,
        seed: u64,
        encoder: Option<&EncoderState>,
    ) -> Result<EncodedDataset> {
        match self {
            Source::Prepared(dir) => {
                let train = read_cache(dir.join(TRAIN_CACHE))?;
                check_cache_encoder(&train, encoder)?;
                if policy.needs_train_file() {
                    let test = read_cache(dir.join(TEST_CACHE))?;
                    Ok(split_encoded(train, test, policy, seed)?.train)
                } else {
                    subsample(train, policy, seed)
                }
            }
            Source::Csv { .. } => {
                let train = load_csv(self.train_csv()?)?;
                if policy.needs_train_file() {
                    let test = load_csv(self.test_csv()?)?;
                    Ok(split_tables(&train, &test, policy, seed, encoder)?.train)
                } else {
                    let enc = match encoder {
                        Some(e) => e.clone(),
                        None => EncoderState::fit(&train)?,
                    };
                    subsample(
                        enc.transform(&train, Provenance::OfficialTrain)?,
                        policy,
                        seed,
                    )
                }
            }
        }
    }

    /// Evaluation side of the split, encoded with the model's encoder.
    fn evaluation_set(
        &self,
        policy: SplitPolicy,
        seed: u64,
        encoder: &EncoderState,
    ) -> Result<EncodedDataset> {
        match self {
            Source::Prepared(dir) => {
                let test = read_cache(dir.join(TEST_CACHE))?;
                check_cache_encoder(&test, Some(encoder))?;
                if policy.needs_train_file() {
                    let train = read_cache(dir.join(TRAIN_CACHE))?;
                    Ok(split_encoded(train, test, policy, seed)?.test)
                } else {
                    subsample(test, policy, seed)
                }
            }
            Source::Csv { .. } => {
                let test = load_csv(self.test_csv()?)?;
                if policy.needs_train_file() {
                    let train = load_csv(self.train_csv()?)?;
                    Ok(split_tables(&train, &test, policy, seed, Some(encoder))?.test)
                } else {
                    subsample(
                        encoder.transform(&test, Provenance::OfficialTest)?,
                        policy,
                        seed,
                    )
                }
            }
        }
    }
}

fn subsample(ds: EncodedDataset, policy: SplitPolicy, seed: u64) -> Result<EncodedDataset> {
    match policy {
        SplitPolicy::Subsample(f) => subsample_fraction(&ds, f, seed, true),
        _ => Ok(ds),
    }
}

fn check_cache_encoder(ds: &EncodedDataset, encoder: Option<&EncoderState>) -> Result<()> {
    match encoder {
        Some(e) if e != ds.encoder() => Err(Error::SchemaMismatch {
            model: "the encoder stored in the model file".into(),
            data: "a prepared cache encoded with a different encoder (evaluate from the raw CSVs instead)".into(),
        }),
        _ => Ok(()),
    }
}

fn distribution(ds: &EncodedDataset) -> BTreeMap<String, usize> {
    AttackCategory::names()
        .into_iter()
        .zip(class_distribution(ds, LabelView::Multiclass))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreparedSummary {
    pub train_rows: usize,
    pub test_rows: usize,
    pub train_distribution: BTreeMap<String, usize>,
    pub test_distribution: BTreeMap<String, usize>,
    pub log_scaled_features: Vec<String>,
    pub vocabulary_sizes: BTreeMap<String, usize>,
}

pub fn prepare(
    cfg: &RunConfig,
    args: &DataArgs,
    out_flag: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    let source = Source::resolve(cfg, args)?;
    let (train_path, test_path) = (
        source.train_csv()?.to_path_buf(),
        source.test_csv()?.to_path_buf(),
    );
    let dir = out_flag
        .or_else(|| cfg.output.prepared.clone())
        .ok_or_else(|| Error::InvalidConfig("prepare needs an output directory (--out)".into()))?;
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let train_raw = load_csv(&train_path)?;
    let test_raw = load_csv(&test_path)?;
    let encoder = EncoderState::fit(&train_raw)?;
    let train = encoder.transform(&train_raw, Provenance::OfficialTrain)?;
    let test = encoder.transform(&test_raw, Provenance::OfficialTest)?;
    write_cache(dir.join(TRAIN_CACHE), &train)?;
    write_cache(dir.join(TEST_CACHE), &test)?;

    let mut log_scaled = Vec::new();
    let mut vocab = BTreeMap::new();
    for (spec, enc) in encoder.schema.features.iter().zip(&encoder.features) {
        match enc {
            FeatureEncoder::Numeric { log: true, .. } => log_scaled.push(spec.name.clone()),
            FeatureEncoder::Categorical { vocab: v } => {
                vocab.insert(spec.name.clone(), v.len());
            }
            _ => {}
        }
    }
    let summary = PreparedSummary {
        train_rows: train.len(),
        test_rows: test.len(),
        train_distribution: distribution(&train),
        test_distribution: distribution(&test),
        log_scaled_features: log_scaled,
        vocabulary_sizes: vocab,
    };
    let json = serde_json::to_string_pretty(&summary)? + "\n";
    let path = dir.join(SUMMARY);
    std::fs::write(&path, &json).map_err(|e| Error::io(&path, e))?;

    writeln!(out, "train rows: {}", summary.train_rows).map_err(io_out)?;
    writeln!(out, "test rows: {}", summary.test_rows).map_err(io_out)?;
    writeln!(out, "{:<16}{:>10}{:>10}", "class", "train", "test").map_err(io_out)?;
    for name in AttackCategory::names() {
        writeln!(
            out,
            "{:<16}{:>10}{:>10}",
            name, summary.train_distribution[&name], summary.test_distribution[&name]
        )
        .map_err(io_out)?;
    }
    writeln!(
        out,
        "log-scaled features: {}",
        summary.log_scaled_features.join(", ")
    )
    .map_err(io_out)?;
    writeln!(out, "written to {}", dir.display()).map_err(io_out)?;
    Ok(())
}

fn history_path(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".history.json");
    PathBuf::from(s)
}

pub fn train(
    cfg: &RunConfig,
    args: &DataArgs,
    out_flag: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    let model_path = out_flag
        .or_else(|| cfg.output.model.clone())
        .unwrap_or_else(|| PathBuf::from("model.lids"));
    require_parent(&model_path)?;
    let source = Source::resolve(cfg, args)?;
    source.check(cfg.split, true, false)?;
    let tc = cfg.train_config();

    let data = source.training_set(cfg.split, cfg.seed, None)?;
    writeln!(out, "training rows: {} ({})", data.len(), cfg.split).map_err(io_out)?;
    let net = Network::build(&cfg.model, cfg.seed)?;
    writeln!(
        out,
        "head: {}, parameters: {}",
        cfg.model.head.name(),
        net.param_count()
    )
    .map_err(io_out)?;
    let (model, history) = fit(net, &data, &tc)?;
    let weights: Vec<String> = history
        .class_weights
        .iter()
        .map(|w| format!("{w:.6}"))
        .collect();
    writeln!(
        out,
        "class weights ({}): [{}]",
        tc.weighting,
        weights.join(", ")
    )
    .map_err(io_out)?;
    for e in &history.epochs {
        let val = match (e.val_loss, e.val_accuracy) {
            (Some(l), Some(a)) => format!("  val loss {l:.5}  val acc {:.2}%", a * 100.0),
            _ => String::new(),
        };
        writeln!(
            out,
            "epoch {:>3}  loss {:.5}{val}  ({:.1}s)",
            e.epoch, e.train_loss, e.seconds
        )
        .map_err(io_out)?;
    }
    save(&model, &model_path)?;
    let hist = history_path(&model_path);
    std::fs::write(&hist, serde_json::to_string_pretty(&history)? + "\n")
        .map_err(|e| Error::io(&hist, e))?;
    writeln!(out, "time to train: {:.2}s", history.train_seconds).map_err(io_out)?;
    writeln!(out, "model written to {}", model_path.display()).map_err(io_out)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    cfg: &RunConfig,
    model_path: &Path,
    args: &DataArgs,
    head_flag: Option<Head>,
    baselines: bool,
    format: ReportFormat,
    out_flag: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    require_file(model_path)?;
    if let Some(p) = &out_flag {
        require_parent(p)?;
    }
    let source = Source::resolve(cfg, args)?;
    source.check(cfg.split, baselines, true)?;
    let model = load(model_path)?;
    if let Some(h) = head_flag {
        if h != model.head() {
            return Err(Error::InvalidConfig(format!(
                "model has a {} head but --head {} was requested",
                model.head().name(),
                h.name()
            )));
        }
    }
    let head = model.head();
    let test = source.evaluation_set(cfg.split, cfg.seed, model.encoder())?;
    model.check_dataset(&test)?;
    let actual = test.labels(head.label_view());

    let (pred, predict_s) = timed(|| model::predict_labels(&model, test.features(), cfg.threshold));
    let train_s = std::fs::read_to_string(history_path(model_path))
        .ok()
        .and_then(|s| serde_json::from_str::<TrainingHistory>(&s).ok())
        .map(|h| h.train_seconds);
    let mut reports = vec![evaluate_labels(head, actual, &pred?)?
        .with_model("CNN-BiLSTM")
        .with_timing(Timing {
            train_s,
            predict_s: Some(predict_s),
        })];

    if baselines {
        let train = source.training_set(cfg.split, cfg.seed, Some(model.encoder()))?;
        let y = train.labels(head.label_view());
        let lr_cfg = LogRegConfig {
            seed: cfg.seed,
            weighting: cfg.train_config().weighting,
            ..LogRegConfig::default()
        };
        let (lr, lr_train) = timed(|| logreg_fit(train.features(), y, head, &lr_cfg));
        let lr = lr?;
        let (lr_pred, lr_predict) = timed(|| lr.predict(test.features()));
        reports.push(
            evaluate_labels(head, actual, &lr_pred?)?
                .with_model("Logistic Regression")
                .with_timing(Timing {
                    train_s: Some(lr_train),
                    predict_s: Some(lr_predict),
                }),
        );
        let (knn, knn_train) =
            timed(|| KnnIndex::build(train.features(), y, head.classes(), DEFAULT_K));
        let knn = knn?;
        let (knn_pred, knn_predict) = timed(|| knn.predict(test.features()));
        reports.push(
            evaluate_labels(head, actual, &knn_pred?)?
                .with_model("KNN")
                .with_timing(Timing {
                    train_s: Some(knn_train),
                    predict_s: Some(knn_predict),
                }),
        );
    }

    out.write_all(render_report(&reports, format)?.as_bytes())
        .map_err(io_out)?;
    if let Some(p) = out_flag.or_else(|| cfg.output.report.clone()) {
        std::fs::write(&p, render_report(&reports, ReportFormat::Json)?)
            .map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

pub fn predict(
    cfg: &RunConfig,
    model_path: &Path,
    input: &Path,
    out_flag: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    require_file(model_path)?;
    require_file(input)?;
    if let Some(p) = &out_flag {
        require_parent(p)?;
    }
    let model = load(model_path)?;
    let table = load_csv_features(input)?;
    let features = model.encode(&table)?;
    let probs = predict_proba(&model, &features)?;
    let labels = model::labels_from_proba(model.head(), &probs, cfg.threshold)?;

    let mut buf: Vec<u8> = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header = vec![
            "row".to_string(),
            "prediction".to_string(),
            "class_index".to_string(),
        ];
        match model.head() {
            Head::Binary => header.push("p_attack".to_string()),
            Head::Multiclass => header.extend(model.class_names().iter().map(|n| format!("p_{n}"))),
        }
        w.write_record(&header)?;
        let width = model.head().width();
        for (i, (row, &y)) in probs.data().chunks_exact(width).zip(&labels).enumerate() {
            let mut rec = vec![
                (i + 1).to_string(),
                model.class_names()[y as usize].clone(),
                y.to_string(),
            ];
            rec.extend(row.iter().map(|p| format!("{p:.6}")));
            w.write_record(&rec)?;
        }
        w.flush().map_err(io_out)?;
    }
    match out_flag {
        Some(p) => {
            std::fs::write(&p, &buf).map_err(|e| Error::io(&p, e))?;
            writeln!(
                out,
                "{} predictions written to {}",
                labels.len(),
                p.display()
            )
            .map_err(io_out)
        }
        None => out.write_all(&buf).map_err(io_out),
    }
}

/// Machine-readable summary of a model file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InspectReport {
    pub format_version: u16,
    pub head: Head,
    pub parameters: usize,
    pub config: ModelConfig,
    pub layers: Vec<ManifestEntry>,
    pub class_names: Vec<String>,
    pub metadata: TrainingMetadata,
    pub categorical_vocabulary: BTreeMap<String, usize>,
    pub log_scaled_features: Vec<String>,
}

impl InspectReport {
    pub fn from_model(model: &TrainedModel) -> Result<Self> {
        let bytes = model::encode_model(model)?;
        let (header, _) = model::format::decode_header(&bytes)?;
        let mut vocab = BTreeMap::new();
        let mut logs = Vec::new();
        for (spec, enc) in header
            .encoder
            .schema
            .features
            .iter()
            .zip(&header.encoder.features)
        {
            match enc {
                FeatureEncoder::Categorical { vocab: v } => {
                    vocab.insert(spec.name.clone(), v.len());
                }
                FeatureEncoder::Numeric { log: true, .. } => logs.push(spec.name.clone()),
                FeatureEncoder::Numeric { .. } => {}
            }
        }
        Ok(Self {
            format_version: MODEL_VERSION,
            head: header.config.head,
            parameters: header.param_count(),
            config: header.config,
            layers: header.manifest,
            class_names: header.class_names,
            metadata: header.metadata,
            categorical_vocabulary: vocab,
            log_scaled_features: logs,
        })
    }
}

pub fn inspect(model_path: &Path, format: ReportFormat, out: &mut dyn Write) -> Result<()> {
    require_file(model_path)?;
    let model = load(model_path)?;
    let r = InspectReport::from_model(&model)?;
    if format == ReportFormat::Json {
        return out
            .write_all((serde_json::to_string_pretty(&r)? + "\n").as_bytes())
            .map_err(io_out);
    }
    let c = &r.config;
    let m = &r.metadata;
    let mut s = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(s, "model: {}", model_path.display());
    let _ = writeln!(s, "format version: {}", r.format_version);
    let _ = writeln!(
        s,
        "head: {} ({} classes)",
        r.head.name(),
        r.class_names.len()
    );
    let _ = writeln!(
        s,
        "layers: conv1d(filters {}, kernel {}, {} padding) -> relu -> maxpool({}) -> bilstm(hidden {}, {} steps) -> dense({})",
        c.conv_filters,
        c.kernel,
        match c.padding {
            crate::nn::Padding::Same => "same",
            crate::nn::Padding::Valid => "valid",
        },
        c.pool,
        c.hidden,
        c.sequence_len(),
        c.head.width()
    );
    for l in &r.layers {
        let _ = writeln!(
            s,
            "  {:<28} {:<12} {:>6}",
            l.name,
            format!("{:?}", l.shape),
            l.len
        );
    }
    let _ = writeln!(s, "parameters: {}", r.parameters);
    let _ = writeln!(
        s,
        "training: seed {}, epochs {}, batch {}, lr {}, weighting {}, {} rows",
        m.seed, m.epochs, m.batch_size, m.learning_rate, m.weighting, m.train_rows
    );
    let _ = writeln!(s, "final train loss: {:.5}", m.final_train_loss);
    if let Some(v) = m.final_val_loss {
        let _ = writeln!(s, "final validation loss: {v:.5}");
    }
    let weights: Vec<String> = m.class_weights.iter().map(|w| format!("{w:.4}")).collect();
    let _ = writeln!(s, "class weights: [{}]", weights.join(", "));
    let vocab: Vec<String> = r
        .categorical_vocabulary
        .iter()
        .map(|(k, v)| format!("{k} {v}"))
        .collect();
    let _ = writeln!(s, "categorical vocabularies: {}", vocab.join(", "));
    let _ = writeln!(
        s,
        "log-scaled features: {}",
        r.log_scaled_features.join(", ")
    );
    out.write_all(s.as_bytes()).map_err(io_out)
}
