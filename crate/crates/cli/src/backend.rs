use std::io::BufReader;

use anyhow::{bail, Context, Result};
use mcqdg::predictor::{LineClient, MockPredictor, MockScript, Predictor};
use mcqdg::tokens::Tokenizer;

/// A predictor that also owns the matching tokenizer.
pub trait Backend: Predictor + Tokenizer {}

impl<T: Predictor + Tokenizer> Backend for T {}

pub fn load_script(path: &str) -> Result<MockScript> {
    let file = std::fs::File::open(path).with_context(|| format!("opening mock script {path}"))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing mock script {path}"))
}

/// Resolves a predictor address:
///
/// * `mock:<script.json>`: in-process scripted predictor;
/// * `cmd:<program> [args...]`: a child process speaking the protocol on stdio;
/// * `<host>:<port>`: a TCP service.
pub fn connect(addr: &str) -> Result<Box<dyn Backend>> {
    if let Some(path) = addr.strip_prefix("mock:") {
        return Ok(Box::new(MockPredictor::new(load_script(path)?)));
    }
    if let Some(cmd) = addr.strip_prefix("cmd:") {
        let mut parts = cmd.split_whitespace();
        let Some(program) = parts.next() else {
            bail!("empty command in predictor address");
        };
        let args: Vec<String> = parts.map(str::to_string).collect();
        return Ok(Box::new(LineClient::spawn(program, &args)?));
    }
    if !addr.contains(':') {
        bail!("predictor address `{addr}` is neither mock:, cmd: nor host:port");
    }
    Ok(Box::new(LineClient::connect(addr)?))
}
