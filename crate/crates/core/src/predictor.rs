//! Token-predictor abstraction and its newline-delimited JSON wire protocol.
//!
//! Requests and replies are one JSON object per line:
//!
//! ```text
//! → {"id":1,"tokens":["[CLS]",...,"[MASK]"],"positions":[17],"top_k":5}
//! ← {"id":1,"predictions":[{"position":17,"candidates":[{"token":"hund","p":0.8},...]}]}
//! → {"id":2,"op":"tokenize","text":"hunden springer"}
//! ← {"id":2,"tokens":["hunden","springer"]}
//! → {"id":3,"op":"detokenize","tokens":["hunden","springer"]}
//! ← {"id":3,"text":"hunden springer"}
//! ← {"id":4,"error":"..."}
//! ```
//!
//! A request without `op` is a prediction request. The JSON schema lives in
//! `schema/predictor-protocol.schema.json`.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tokens::{Token, TokenSeq, Tokenizer, WhitespaceTokenizer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorQuery {
    pub tokens: TokenSeq,
    pub positions: Vec<usize>,
    pub top_k: usize,
}

impl PredictorQuery {
    pub fn new(tokens: TokenSeq, positions: Vec<usize>, top_k: usize) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidArgument("query has no positions".into()));
        }
        if let Some(p) = positions
            .iter()
            .find(|&&p| tokens.0.get(p).map_or(true, |t| !t.is_mask()))
        {
            return Err(Error::InvalidArgument(format!("queried position {p} is not [MASK]")));
        }
        Ok(PredictorQuery {
            tokens,
            positions,
            top_k,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub token: String,
    pub p: f64,
}

impl Candidate {
    pub fn new(token: impl Into<String>, p: f64) -> Self {
        Candidate {
            token: token.into(),
            p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionPrediction {
    pub position: usize,
    pub candidates: Vec<Candidate>,
}

impl PositionPrediction {
    pub fn top(&self) -> &Candidate {
        &self.candidates[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorReply {
    pub predictions: Vec<PositionPrediction>,
}

impl PredictorReply {
    /// Checks the reply answers exactly the queried positions with
    /// non-empty, descending, in-range candidate lists.
    pub fn validate(&self, query: &PredictorQuery) -> Result<()> {
        let got: Vec<usize> = self.predictions.iter().map(|p| p.position).collect();
        if got != query.positions {
            return Err(Error::Predictor(format!(
                "reply positions {got:?} do not match query positions {:?}",
                query.positions
            )));
        }
        for pred in &self.predictions {
            if pred.candidates.is_empty() {
                return Err(Error::Predictor(format!("no candidates for position {}", pred.position)));
            }
            if pred.candidates.iter().any(|c| !(0.0..=1.0).contains(&c.p)) {
                return Err(Error::Predictor(format!("probability out of range at {}", pred.position)));
            }
            if pred.candidates.windows(2).any(|w| w[0].p < w[1].p) {
                return Err(Error::Predictor(format!(
                    "candidates not sorted by probability at {}",
                    pred.position
                )));
            }
        }
        Ok(())
    }

    pub fn at(&self, position: usize) -> Option<&PositionPrediction> {
        self.predictions.iter().find(|p| p.position == position)
    }
}

/// Scores masked positions. Replies must be a pure function of the query.
pub trait Predictor: Send + Sync {
    fn predict(&self, query: &PredictorQuery) -> Result<PredictorReply>;
}

/// Stable fingerprint of a token sequence, used to key mock scripts.
pub fn fingerprint(tokens: &TokenSeq) -> String {
    let mut h = Sha256::new();
    for t in &tokens.0 {
        h.update(t.as_str().as_bytes());
        h.update([0x1f]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// What a mock returns for one query: per-position candidate lists, with an
/// optional fallback list for positions not listed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScriptedReply {
    #[serde(default)]
    pub positions: BTreeMap<usize, Vec<Candidate>>,
    #[serde(default)]
    pub fallback: Option<Vec<Candidate>>,
}

impl ScriptedReply {
    pub fn always(candidates: Vec<Candidate>) -> Self {
        ScriptedReply {
            positions: BTreeMap::new(),
            fallback: Some(candidates),
        }
    }

    pub fn at(mut self, position: usize, candidates: Vec<Candidate>) -> Self {
        self.positions.insert(position, candidates);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MockScript {
    /// Replies keyed by [`fingerprint`] of the query tokens.
    #[serde(default)]
    pub entries: BTreeMap<String, ScriptedReply>,
    #[serde(default)]
    pub default: Option<ScriptedReply>,
}

/// Deterministic test double replying from a script and logging queries.
#[derive(Debug, Default)]
pub struct MockPredictor {
    script: MockScript,
    log: Mutex<Vec<PredictorQuery>>,
}

impl MockPredictor {
    pub fn new(script: MockScript) -> Self {
        MockPredictor {
            script,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn with_default(reply: ScriptedReply) -> Self {
        Self::new(MockScript {
            entries: BTreeMap::new(),
            default: Some(reply),
        })
    }

    pub fn script(&self) -> &MockScript {
        &self.script
    }

    pub fn queries(&self) -> Vec<PredictorQuery> {
        self.log.lock().expect("mock log poisoned").clone()
    }

    pub fn clear_log(&self) {
        self.log.lock().expect("mock log poisoned").clear();
    }
}

impl Predictor for MockPredictor {
    fn predict(&self, query: &PredictorQuery) -> Result<PredictorReply> {
        self.log.lock().expect("mock log poisoned").push(query.clone());
        let fp = fingerprint(&query.tokens);
        let reply = self
            .script
            .entries
            .get(&fp)
            .or(self.script.default.as_ref())
            .ok_or_else(|| Error::Predictor(format!("unscripted query {fp}")))?;
        let predictions = query
            .positions
            .iter()
            .map(|&position| {
                let mut candidates = reply
                    .positions
                    .get(&position)
                    .or(reply.fallback.as_ref())
                    .cloned()
                    .ok_or_else(|| Error::Predictor(format!("no scripted candidates for position {position}")))?;
                candidates.sort_by(|a, b| b.p.total_cmp(&a.p));
                candidates.truncate(query.top_k.max(1));
                Ok(PositionPrediction { position, candidates })
            })
            .collect::<Result<_>>()?;
        Ok(PredictorReply { predictions })
    }
}

impl Tokenizer for MockPredictor {
    fn tokenize(&self, text: &str) -> Result<Vec<String>> {
        WhitespaceTokenizer.tokenize(text)
    }

    fn detokenize(&self, pieces: &[String]) -> Result<String> {
        WhitespaceTokenizer.detokenize(pieces)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Request {
    Op {
        id: Value,
        op: String,
        #[serde(default)]
        text: Option<String>,
        #[serde(default)]
        tokens: Option<Vec<String>>,
    },
    Predict {
        id: Value,
        tokens: TokenSeq,
        positions: Vec<usize>,
        top_k: usize,
    },
}

/// Client side of the wire protocol over any line-oriented byte stream.
pub struct LineClient<R, W> {
    inner: Mutex<ClientState<R, W>>,
    _child: Option<Mutex<Child>>,
}

struct ClientState<R, W> {
    reader: BufReader<R>,
    writer: W,
    next_id: u64,
}

impl<R: Read + Send, W: Write + Send> LineClient<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        LineClient {
            inner: Mutex::new(ClientState {
                reader: BufReader::new(reader),
                writer,
                next_id: 1,
            }),
            _child: None,
        }
    }

    fn call(&self, mut body: serde_json::Map<String, Value>) -> Result<Value> {
        let mut st = self
            .inner
            .lock()
            .map_err(|_| Error::Predictor("client state poisoned".into()))?;
        let id = st.next_id;
        st.next_id += 1;
        body.insert("id".into(), Value::from(id));
        let line = serde_json::to_string(&body)?;
        st.writer.write_all(line.as_bytes())?;
        st.writer.write_all(b"\n")?;
        st.writer.flush()?;
        let mut reply = String::new();
        if st.reader.read_line(&mut reply)? == 0 {
            return Err(Error::Predictor("connection closed by predictor".into()));
        }
        let v: Value = serde_json::from_str(&reply)
            .map_err(|e| Error::Predictor(format!("malformed reply: {e}")))?;
        if v.get("id") != Some(&Value::from(id)) {
            return Err(Error::Predictor(format!("reply id mismatch, expected {id}: {reply}")));
        }
        if let Some(err) = v.get("error") {
            return Err(Error::Predictor(err.as_str().unwrap_or("unknown").to_string()));
        }
        Ok(v)
    }
}

impl LineClient<TcpStream, TcpStream> {
    pub fn connect(addr: &str) -> Result<Self> {
        let stream = TcpStream::connect(addr)
            .map_err(|e| Error::Predictor(format!("cannot connect to {addr}: {e}")))?;
        let writer = stream.try_clone()?;
        Ok(LineClient::new(stream, writer))
    }
}

impl LineClient<ChildStdout, ChildStdin> {
    /// Spawns `program args...` and talks to it over its standard streams.
    pub fn spawn(program: &str, args: &[String]) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Predictor(format!("cannot spawn {program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut client = LineClient::new(stdout, stdin);
        client._child = Some(Mutex::new(child));
        Ok(client)
    }
}

impl<R, W> Drop for LineClient<R, W> {
    fn drop(&mut self) {
        if let Some(child) = &self._child {
            if let Ok(mut c) = child.lock() {
                let _ = c.kill();
                let _ = c.wait();
            }
        }
    }
}

impl<R: Read + Send, W: Write + Send> Predictor for LineClient<R, W> {
    fn predict(&self, query: &PredictorQuery) -> Result<PredictorReply> {
        let mut body = serde_json::Map::new();
        body.insert("tokens".into(), serde_json::to_value(&query.tokens)?);
        body.insert("positions".into(), serde_json::to_value(&query.positions)?);
        body.insert("top_k".into(), Value::from(query.top_k));
        let v = self.call(body)?;
        let reply: PredictorReply = serde_json::from_value(v)
            .map_err(|e| Error::Predictor(format!("malformed prediction reply: {e}")))?;
        reply.validate(query)?;
        Ok(reply)
    }
}

impl<R: Read + Send, W: Write + Send> Tokenizer for LineClient<R, W> {
    fn tokenize(&self, text: &str) -> Result<Vec<String>> {
        let mut body = serde_json::Map::new();
        body.insert("op".into(), Value::from("tokenize"));
        body.insert("text".into(), Value::from(text));
        let v = self.call(body)?;
        serde_json::from_value(v.get("tokens").cloned().unwrap_or(Value::Null))
            .map_err(|e| Error::Predictor(format!("malformed tokenize reply: {e}")))
    }

    fn detokenize(&self, pieces: &[String]) -> Result<String> {
        let mut body = serde_json::Map::new();
        body.insert("op".into(), Value::from("detokenize"));
        body.insert("tokens".into(), serde_json::to_value(pieces)?);
        let v = self.call(body)?;
        v.get("text")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| Error::Predictor("malformed detokenize reply".into()))
    }
}

/// Server side: answers requests line by line until the reader is exhausted.
/// Malformed requests get an error reply with the id echoed when present.
pub fn serve_lines<R: BufRead, W: Write>(
    predictor: &dyn Predictor,
    tokenizer: &dyn Tokenizer,
    reader: R,
    mut writer: W,
) -> Result<()> {
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = handle_request(predictor, tokenizer, &line);
        serde_json::to_writer(&mut writer, &reply)?;
        writer.write_all(b"\n")?;
        writer.flush()?;
    }
    Ok(())
}

fn handle_request(predictor: &dyn Predictor, tokenizer: &dyn Tokenizer, line: &str) -> Value {
    let raw: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return serde_json::json!({"id": Value::Null, "error": format!("malformed request: {e}")}),
    };
    let id = raw.get("id").cloned().unwrap_or(Value::Null);
    let err = |m: String| serde_json::json!({"id": id.clone(), "error": m});
    let req: Request = match serde_json::from_value(raw) {
        Ok(r) => r,
        Err(e) => return err(format!("malformed request: {e}")),
    };
    match req {
        Request::Predict {
            tokens,
            positions,
            top_k,
            ..
        } => {
            let q = match PredictorQuery::new(tokens, positions, top_k) {
                Ok(q) => q,
                Err(e) => return err(e.to_string()),
            };
            match predictor.predict(&q) {
                Ok(r) => serde_json::json!({"id": id, "predictions": r.predictions}),
                Err(e) => err(e.to_string()),
            }
        }
        Request::Op { op, text, tokens, .. } => match (op.as_str(), text, tokens) {
            ("tokenize", Some(t), _) => match tokenizer.tokenize(&t) {
                Ok(tokens) => serde_json::json!({"id": id, "tokens": tokens}),
                Err(e) => err(e.to_string()),
            },
            ("detokenize", _, Some(ts)) => match tokenizer.detokenize(&ts) {
                Ok(text) => serde_json::json!({"id": id, "text": text}),
                Err(e) => err(e.to_string()),
            },
            (op, _, _) => err(format!("unsupported or incomplete op `{op}`")),
        },
    }
}

/// Commits a candidate token into a sequence slot.
pub(crate) fn candidate_token(c: &Candidate) -> Token {
    Token::from(c.token.as_str())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> TokenSeq {
        TokenSeq(s.split(' ').map(Token::from).collect())
    }

    #[test]
    fn scripted_reply_top_candidate() {
        let q = PredictorQuery::new(seq("[CLS] a [SEP] [MASK]"), vec![3], 5).unwrap();
        let fp = fingerprint(&q.tokens);
        let mut script = MockScript::default();
        script.entries.insert(
            fp,
            ScriptedReply::default().at(3, vec![Candidate::new("hund", 1.0)]),
        );
        let m = MockPredictor::new(script);
        let r = m.predict(&q).unwrap();
        assert_eq!(r.predictions[0].top(), &Candidate::new("hund", 1.0));
        assert_eq!(m.queries().len(), 1);
    }

    #[test]
    fn unscripted_without_default_errors() {
        let q = PredictorQuery::new(seq("[MASK]"), vec![0], 5).unwrap();
        assert!(matches!(MockPredictor::default().predict(&q), Err(Error::Predictor(_))));
    }

    #[test]
    fn query_positions_must_be_masks() {
        assert!(PredictorQuery::new(seq("a [MASK]"), vec![0], 5).is_err());
        assert!(PredictorQuery::new(seq("a [MASK]"), vec![], 5).is_err());
    }

    #[test]
    fn reply_validation() {
        let q = PredictorQuery::new(seq("[MASK] [MASK]"), vec![0, 1], 5).unwrap();
        let good = PredictorReply {
            predictions: vec![
                PositionPrediction {
                    position: 0,
                    candidates: vec![Candidate::new("a", 0.6), Candidate::new("b", 0.3)],
                },
                PositionPrediction {
                    position: 1,
                    candidates: vec![Candidate::new("a", 0.6)],
                },
            ],
        };
        assert!(good.validate(&q).is_ok());
        let mut unsorted = good.clone();
        unsorted.predictions[0].candidates.reverse();
        assert!(unsorted.validate(&q).is_err());
        let mut missing = good.clone();
        missing.predictions.pop();
        assert!(missing.validate(&q).is_err());
    }

    #[test]
    fn server_handles_ops_and_errors() {
        let m = MockPredictor::with_default(ScriptedReply::always(vec![Candidate::new("x", 0.5)]));
        let input = concat!(
            r#"{"id":1,"tokens":["[CLS]","[MASK]"],"positions":[1],"top_k":3}"#,
            "\n",
            r#"{"id":2,"op":"tokenize","text":"hunden springer"}"#,
            "\n",
            r#"{"id":3,"op":"detokenize","tokens":["hunden","springer"]}"#,
            "\n",
            r#"{"id":4,"tokens":["a"],"positions":[0],"top_k":3}"#,
            "\n",
            "not json\n",
        );
        let mut out = Vec::new();
        serve_lines(&m, &m, input.as_bytes(), &mut out).unwrap();
        let lines: Vec<Value> = String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines[0]["predictions"][0]["candidates"][0]["token"], "x");
        assert_eq!(lines[1]["tokens"], serde_json::json!(["hunden", "springer"]));
        assert_eq!(lines[2]["text"], "hunden springer");
        assert_eq!(lines[3]["id"], 4);
        assert!(lines[3]["error"].is_string());
        assert!(lines[4]["error"].is_string());
    }
}
