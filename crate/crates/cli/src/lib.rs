//! Command implementations behind the `sqlforecast` binary and its HTTP service.

pub mod args;
pub mod commands;
pub mod manifest;
pub mod predictor;
pub mod service;

use std::sync::Arc;

use anyhow::Result;

use args::{Cli, Command};

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => commands::ingest(&a),
        Command::Profile(a) => commands::profile(&a),
        Command::Train(a) => commands::train_cmd(&a),
        Command::Evaluate(a) => commands::evaluate_cmd(&a),
        Command::Predict(a) => commands::predict_cmd(&a),
        Command::Serve(a) => {
            let predictor = Arc::new(predictor::Predictor::load(&a.bundle)?);
            let loaded: Vec<String> = predictor.models().into_iter().map(|m| format!("{}={}", m.task, m.model)).collect();
            eprintln!("loaded {}", loaded.join(", "));
            tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()?
                .block_on(service::serve(predictor, &a.bind))
        }
    }
}
