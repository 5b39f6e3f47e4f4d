//! Drive the command-line interface in-process over synthetic CSV files:
//! prepare, train, evaluate, predict, inspect.

use std::path::Path;

use lids::dataset::synth::{generate, SynthConfig};

fn lids(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = lids::cli::run_with(
        std::iter::once("lids").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    let text = String::from_utf8_lossy(&out).into_owned() + &String::from_utf8_lossy(&err);
    (code, text)
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

/// Returns the `inspect` output.
pub fn run_example() -> lids::Result<String> {
    let dir = std::env::temp_dir().join(format!("lids-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| lids::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let (train, test) = (dir.join("train.csv"), dir.join("test.csv"));
    generate(&SynthConfig {
        rows: 1_200,
        seed: 30,
        ..Default::default()
    })?
    .write_csv(&train)?;
    generate(&SynthConfig {
        rows: 400,
        seed: 31,
        ..Default::default()
    })?
    .write_csv(&test)?;
    let (prepared, model, predictions) = (
        dir.join("prepared"),
        dir.join("model.lids"),
        dir.join("predictions.csv"),
    );

    let steps: Vec<Vec<&str>> = vec![
        vec![
            "prepare",
            "--train-csv",
            p(&train),
            "--test-csv",
            p(&test),
            "--out",
            p(&prepared),
        ],
        vec![
            "train",
            "--data",
            p(&prepared),
            "--head",
            "binary",
            "--seed",
            "7",
            "--epochs",
            "2",
            "--threads",
            "1",
            "--deterministic",
            "--out",
            p(&model),
        ],
        vec![
            "evaluate",
            "--model",
            p(&model),
            "--data",
            p(&prepared),
            "--split",
            "subsample:0.5",
            "--seed",
            "7",
        ],
        vec![
            "predict",
            "--model",
            p(&model),
            "--input",
            p(&test),
            "--out",
            p(&predictions),
        ],
        vec!["inspect", "--model", p(&model)],
    ];
    let mut last = String::new();
    for args in steps {
        let (code, text) = lids(&args);
        println!("$ lids {}\n{text}", args[0]);
        if code != 0 {
            return Err(lids::Error::InvalidConfig(format!(
                "`{}` exited with {code}",
                args[0]
            )));
        }
        last = text;
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(last)
}

fn main() -> lids::Result<()> {
    run_example().map(|_| ())
}
