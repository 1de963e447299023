use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use citesent::annotation::load_annotations;
use citesent::corpus::{augment, citation_sentence_index, derive_context_less, load_dataset, Dataset, Format, Polarity};
use citesent::eval::{make_folds, ExperimentReport};
use citesent::experiment::{
    compare, evaluate, persist, prepare_corpus, run_experiment, table_preset, ExperimentConfig, Family, GridMode,
    TableOptions,
};
use citesent::neural;
use citesent::preprocess::{assemble_ensemble, StopWords};
use citesent::svm::train_multiclass;
use citesent::Error;

use crate::{Command, ConfigArgs};

pub struct Failure {
    pub validation: bool,
    pub message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            validation: true,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            validation: e.is_validation(),
            message: e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

pub fn dispatch(command: Command) -> Outcome {
    match command {
        Command::LoadStats { files, derive, augment } => load_stats(&files, derive, augment.as_deref()),
        Command::AnnotateCheck {
            corpus,
            annotations,
            stopwords,
        } => annotate_check(&corpus, &annotations, stopwords.as_deref()),
        Command::Featurize { config, out, fold } => featurize(&config, &out, fold),
        Command::Train { config, out } => train(&config, &out),
        Command::Evaluate { config } => run(load_config(&config)?),
        Command::Grid { config, full_grid } => {
            let mut cfg = load_config(&config)?;
            cfg.model.grid = if full_grid { GridMode::Full } else { GridMode::Sweep };
            run(cfg)
        }
        Command::Compare { reports, out } => compare_reports(&reports, out.as_deref()),
        Command::ReproduceTable {
            table,
            data_dir,
            out,
            embeddings,
            grid,
            quick,
        } => reproduce_table(
            table,
            &data_dir,
            &out,
            &TableOptions {
                embeddings,
                grid,
                quick,
            },
        ),
    }
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, Failure> {
    let cfg = ExperimentConfig::load(&args.config, &args.overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

fn load(path: &Path, derive: bool) -> Result<Dataset, Error> {
    let d = load_dataset(path, Format::from_path(path))?;
    if !derive {
        return Ok(d);
    }
    let (index, _) = citation_sentence_index(&d);
    derive_context_less(&d, &index)
}

fn stats_row(out: &mut String, d: &Dataset) {
    let c = d.class_counts();
    writeln!(
        out,
        "{}\t{}\t{}\t{}\t{}",
        d.name,
        c.get(Polarity::Positive),
        c.get(Polarity::Negative),
        c.get(Polarity::Neutral),
        c.total()
    )
    .unwrap();
}

fn load_stats(files: &[PathBuf], derive: bool, augment_name: Option<&str>) -> Outcome {
    if files.is_empty() {
        return Err(Failure::invalid("no dataset files given"));
    }
    let sets = files.iter().map(|f| load(f, derive)).collect::<Result<Vec<_>, _>>()?;
    let mut out = String::from("dataset\tpositive\tnegative\tneutral\ttotal\n");
    for d in &sets {
        stats_row(&mut out, d);
    }
    if let Some(name) = augment_name {
        let [a, b] = sets.as_slice() else {
            return Err(Failure::invalid(format!("--augment needs exactly two files, got {}", sets.len())));
        };
        stats_row(&mut out, &augment(a, b, name)?);
    }
    print!("{out}");
    Ok(())
}

fn annotate_check(corpus: &Path, annotations: &Path, stopwords: Option<&Path>) -> Outcome {
    let data = load_dataset(corpus, Format::from_path(corpus))?;
    let file = load_annotations(annotations)?;
    let stopwords = match stopwords {
        Some(p) => StopWords::from_file(p)?,
        None => StopWords::english(),
    };
    let by_id = file.by_id();
    let mut problems = 0;
    for s in data.samples() {
        let result = match by_id.get(s.id.as_str()) {
            None => Err("no annotation record".to_string()),
            Some(r) => assemble_ensemble(s, r, &stopwords).map(|_| ()).map_err(|e| e.to_string()),
        };
        if let Err(e) = result {
            problems += 1;
            eprintln!("{}: {e}", s.id);
        }
    }
    let ids: std::collections::HashSet<&str> = data.samples().iter().map(|s| s.id.as_str()).collect();
    let extra = file.records.iter().filter(|r| !ids.contains(r.id.as_str())).count();
    println!("{} samples, {} records, {} problems", data.len(), file.records.len(), problems);
    if extra > 0 {
        log::warn!("{extra} records do not belong to the corpus");
    }
    if problems > 0 {
        return Err(Failure::invalid(format!("{problems} samples failed the annotation check")));
    }
    Ok(())
}

fn featurize(args: &ConfigArgs, out: &Path, fold: Option<usize>) -> Outcome {
    let cfg = load_config(args)?;
    let corpus = prepare_corpus(&cfg)?;
    let segments = corpus.segments(cfg.features.text_form);
    let labels = corpus.labels();
    let featurizer = cfg.features.featurizer();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    match fold {
        None => {
            let f = featurizer.fit_transform(&segments, &labels, &[], &[])?;
            f.train.write_triplets(&out.join("matrix.txt"), &out.join("vocab.txt"))?;
            println!("{} rows, {} columns", f.train.n_rows(), f.train.n_cols());
        }
        Some(k) => {
            let plan = make_folds(&labels, cfg.folds, cfg.seed)?;
            if k >= plan.k {
                return Err(Failure::invalid(format!("fold {k} out of range 0..{}", plan.k)));
            }
            let train = plan.train_rows(k);
            let test = plan.test_rows(k);
            let pick = |rows: &[usize]| -> (Vec<_>, Vec<_>) {
                rows.iter().map(|&i| (segments[i].clone(), labels[i])).unzip()
            };
            let (train_x, train_y) = pick(&train);
            let (test_x, test_y) = pick(test);
            let f = featurizer.fit_transform(&train_x, &train_y, &test_x, &test_y)?;
            let vocab = out.join(format!("fold{k}.vocab.txt"));
            f.train.write_triplets(&out.join(format!("fold{k}.train.txt")), &vocab)?;
            f.test.write_triplets(&out.join(format!("fold{k}.test.txt")), &vocab)?;
            println!(
                "fold {k}: {} train rows, {} test rows, {} columns",
                f.train.n_rows(),
                f.test.n_rows(),
                f.train.n_cols()
            );
        }
    }
    Ok(())
}

fn train(args: &ConfigArgs, out: &Path) -> Outcome {
    let cfg = load_config(args)?;
    let corpus = prepare_corpus(&cfg)?;
    let labels = corpus.labels();
    if let Some(net) = cfg.net_config() {
        let model = neural::train(&net, &corpus.streams(), &labels)?;
        model.save_json(out)?;
        println!("{}: {}", cfg.model.family.label(), net.describe());
        return Ok(());
    }
    let f = cfg.features.featurizer().fit_transform(&corpus.segments(cfg.features.text_form), &labels, &[], &[])?;
    let hyper = cfg.svm.hyper(cfg.model.family, f.train.n_cols());
    let model = train_multiclass(&f.train, &hyper)?;
    for w in &model.warnings {
        log::warn!("{w}");
    }
    model.save_json(out)?;
    println!("{}: {} features, c = {}", cfg.model.family.label(), f.train.n_cols(), hyper.c);
    Ok(())
}

fn print_report(r: &ExperimentReport) {
    for w in &r.warnings {
        log::warn!("{w}");
    }
    println!("{}\t{}\t{}\t{:.4}", r.dataset, r.model, r.parameters, r.mean_macro_f1);
}

fn run(cfg: ExperimentConfig) -> Outcome {
    let report = run_experiment(&cfg)?;
    print_report(&report);
    Ok(())
}

fn write_or_print(out: Option<&Path>, body: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, body).map_err(|e| Error::io(p, e).into()),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn compare_reports(paths: &[PathBuf], out: Option<&Path>) -> Outcome {
    let reports = paths.iter().map(|p| ExperimentReport::read_json(p)).collect::<Result<Vec<_>, _>>()?;
    write_or_print(out, &compare(&reports)?.to_tsv())
}

fn reproduce_table(n: u8, data_dir: &Path, out: &Path, opts: &TableOptions) -> Outcome {
    let preset = table_preset(n)?;
    let configs = preset.configs(data_dir, out, opts)?;
    for cfg in &configs {
        cfg.validate()?;
    }
    let corpus = prepare_corpus(&configs[0])?;
    let mut reports = Vec::new();
    for cfg in &configs {
        log::info!("table {n}: {}", cfg.model.family.label());
        let outcome = evaluate(cfg, &corpus)?;
        persist(cfg, &corpus, &outcome)?;
        print_report(&outcome.report);
        reports.push(outcome.report);
    }
    let table = compare(&reports)?;
    let mut body = String::new();
    for (i, line) in table.to_tsv().lines().enumerate() {
        let reported = match i {
            0 => "Reported (%)".to_string(),
            _ => Family::ALL
                .into_iter()
                .find(|f| f.label() == table.rows[i - 1].model)
                .and_then(|f| preset.reported(f))
                .map_or("-".to_string(), |v| format!("{v:.2}")),
        };
        writeln!(body, "{line}\t{reported}").unwrap();
    }
    let path = out.join(format!("table{n}.tsv"));
    fs::write(&path, &body).map_err(|e| Error::io(&path, e))?;
    print!("{body}");
    Ok(())
}
