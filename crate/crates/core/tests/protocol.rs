use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;

use jsonschema::JSONSchema;
use mcqdg::predictor::{
    fingerprint, serve_lines, Candidate, LineClient, MockPredictor, MockScript, Predictor, PredictorQuery,
    ScriptedReply,
};
use mcqdg::tokens::{Token, TokenSeq, Tokenizer};
use serde_json::Value;

type Log = Arc<Mutex<Vec<u8>>>;

struct Recording<T> {
    inner: T,
    log: Log,
}

impl<T: Read> Read for Recording<T> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.log.lock().unwrap().extend_from_slice(&buf[..n]);
        Ok(n)
    }
}

impl<T: Write> Write for Recording<T> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.log.lock().unwrap().extend_from_slice(&buf[..n]);
        Ok(n)
    }
    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

fn seq(s: &str) -> TokenSeq {
    TokenSeq(s.split(' ').map(Token::from).collect())
}

fn mock() -> MockPredictor {
    let q = seq("[CLS] hunden springer [SEP] vem ? [SEP] hunden [SEP] [MASK]");
    let mut script = MockScript::default();
    script.entries.insert(
        fingerprint(&q),
        ScriptedReply::default().at(9, vec![Candidate::new("katten", 0.6), Candidate::new("[SEP]", 0.3)]),
    );
    script.default = Some(ScriptedReply::always(vec![Candidate::new("[SEP]", 0.9)]));
    MockPredictor::new(script)
}

/// Starts a one-connection server; returns its address and the logs of
/// bytes received and sent.
fn serve_once() -> (String, Log, Log, thread::JoinHandle<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let (rx, tx): (Log, Log) = Default::default();
    let (rx2, tx2) = (rx.clone(), tx.clone());
    let h = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let m = mock();
        let reader = BufReader::new(Recording { inner: stream.try_clone().unwrap(), log: rx2 });
        let writer = Recording { inner: stream, log: tx2 };
        serve_lines(&m, &m, reader, writer).unwrap();
    });
    (addr, rx, tx, h)
}

fn schema() -> JSONSchema {
    let raw = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../schema/predictor-protocol.schema.json")).unwrap();
    JSONSchema::compile(&serde_json::from_str(&raw).unwrap()).unwrap()
}

fn lines(log: &Log) -> Vec<Value> {
    String::from_utf8(log.lock().unwrap().clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn tcp_round_trip_conforms_to_schema() {
    let (addr, rx, tx, handle) = serve_once();
    {
        let client = LineClient::connect(&addr).unwrap();
        let q = PredictorQuery::new(seq("[CLS] hunden springer [SEP] vem ? [SEP] hunden [SEP] [MASK]"), vec![9], 5).unwrap();
        let reply = client.predict(&q).unwrap();
        assert_eq!(reply.predictions[0].top().token, "katten");

        let other = PredictorQuery::new(seq("[CLS] x [MASK] [MASK]"), vec![2, 3], 5).unwrap();
        let reply = client.predict(&other).unwrap();
        assert_eq!(reply.predictions.len(), 2);
        assert_eq!(reply.predictions[1].position, 3);

        let toks = client.tokenize("hunden springer").unwrap();
        assert_eq!(toks, vec!["hunden", "springer"]);
        assert_eq!(client.detokenize(&toks).unwrap(), "hunden springer");
    }
    handle.join().unwrap();

    let schema = schema();
    let (requests, replies) = (lines(&rx), lines(&tx));
    assert_eq!(requests.len(), 4);
    assert_eq!(replies.len(), 4);
    for (req, rep) in requests.iter().zip(&replies) {
        assert!(schema.is_valid(req), "request violates schema: {req}");
        assert!(schema.is_valid(rep), "reply violates schema: {rep}");
        assert_eq!(req["id"], rep["id"]);
    }
}

#[test]
fn malformed_requests_get_error_replies() {
    let (addr, _rx, _tx, handle) = serve_once();
    {
        let mut stream = TcpStream::connect(&addr).unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut ask = |line: &str| -> Value {
            stream.write_all(line.as_bytes()).unwrap();
            stream.write_all(b"\n").unwrap();
            let mut reply = String::new();
            reader.read_line(&mut reply).unwrap();
            serde_json::from_str(&reply).unwrap()
        };
        // Position does not hold a mask.
        let r = ask(r#"{"id":7,"tokens":["[CLS]","a"],"positions":[1],"top_k":3}"#);
        assert_eq!(r["id"], 7);
        assert!(r["error"].is_string());
        let r = ask(r#"{"id":"x","op":"frobnicate"}"#);
        assert_eq!(r["id"], "x");
        assert!(r["error"].is_string());
        let r = ask("not json");
        assert!(r["id"].is_null() && r["error"].is_string());
        assert!(schema().is_valid(&r));
    }
    handle.join().unwrap();
}

#[test]
fn schema_rejects_out_of_contract_messages() {
    let s = schema();
    let bad_p: Value = serde_json::from_str(r#"{"id":1,"predictions":[{"position":0,"candidates":[{"token":"a","p":1.5}]}]}"#).unwrap();
    assert!(!s.is_valid(&bad_p));
    let no_positions: Value = serde_json::from_str(r#"{"id":1,"tokens":["[MASK]"],"positions":[],"top_k":1}"#).unwrap();
    assert!(!s.is_valid(&no_positions));
}

#[test]
fn mock_logs_queries_in_order() {
    let m = mock();
    let q1 = PredictorQuery::new(seq("a [MASK]"), vec![1], 2).unwrap();
    let q2 = PredictorQuery::new(seq("[MASK] b"), vec![0], 2).unwrap();
    m.predict(&q1).unwrap();
    m.predict(&q2).unwrap();
    assert_eq!(m.queries(), vec![q1, q2]);
}
