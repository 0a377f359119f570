//! Client and reference server for an out-of-process generator speaking
//! line-delimited JSON.
//!
//! Every request is one JSON object on a line of the child's stdin and gets
//! exactly one JSON object back on stdout. Replies carry `"ok": true` or
//! `"ok": false` with an `"error"` string. Matrices are row-major arrays;
//! categorical cells are category indices.
//!
//! ```text
//! > {"op":"handshake","protocol":1}
//! < {"ok":true,"protocol":1,"model":"..."}
//! > {"op":"generate","protocol":1,"schema":[..],"train":[[..]],"plan":{..},
//!    "n_samples":n,"permutations":3,"seed":7}
//! < {"ok":true,"samples":[[..]]}
//! > {"op":"shutdown","protocol":1}
//! < {"ok":true}
//! ```

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::time::{Duration, Instant};

use log::{debug, warn};
use serde_json::{json, Value};

use serde::Deserialize;

use super::{generate, ConditionalSampler, GenerationRequest};
use crate::error::{Error, Result};
use crate::graph::GenerationPlan;
use crate::table::{ColumnSchema, Table};

pub const PROTOCOL_VERSION: u64 = 1;

const SHUTDOWN_GRACE: Duration = Duration::from_secs(2);

struct Channel {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

pub struct BridgeClient {
    channel: Option<Channel>,
    model: String,
}

impl std::fmt::Debug for BridgeClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BridgeClient").field("model", &self.model).finish()
    }
}

impl BridgeClient {
    /// Runs `command` through `sh -c` and performs the handshake.
    pub fn spawn(command: &str) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Bridge(format!("cannot start {command:?}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut client = Self {
            channel: Some(Channel {
                child,
                stdin,
                stdout,
            }),
            model: String::new(),
        };
        let reply = client.call(&json!({"op": "handshake", "protocol": PROTOCOL_VERSION}))?;
        let protocol = reply.get("protocol").and_then(Value::as_u64);
        if protocol != Some(PROTOCOL_VERSION) {
            return Err(Error::Bridge(format!(
                "protocol mismatch: expected {PROTOCOL_VERSION}, got {}",
                reply.get("protocol").unwrap_or(&Value::Null)
            )));
        }
        client.model = reply
            .get("model")
            .and_then(Value::as_str)
            .unwrap_or("unknown")
            .to_string();
        debug!("bridge ready: {}", client.model);
        Ok(client)
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    fn call(&mut self, request: &Value) -> Result<Value> {
        let ch = self
            .channel
            .as_mut()
            .ok_or_else(|| Error::Bridge("bridge already shut down".into()))?;
        let line = serde_json::to_string(request)?;
        writeln!(ch.stdin, "{line}")
            .and_then(|_| ch.stdin.flush())
            .map_err(|e| Error::Bridge(format!("write failed: {e}")))?;
        let mut reply = String::new();
        let n = ch
            .stdout
            .read_line(&mut reply)
            .map_err(|e| Error::Bridge(format!("read failed: {e}")))?;
        if n == 0 {
            return Err(Error::Bridge("bridge closed its output".into()));
        }
        let value: Value = serde_json::from_str(reply.trim_end())
            .map_err(|e| Error::Bridge(format!("malformed reply: {e}")))?;
        match value.get("ok").and_then(Value::as_bool) {
            Some(true) => Ok(value),
            Some(false) => Err(Error::Bridge(
                value
                    .get("error")
                    .and_then(Value::as_str)
                    .unwrap_or("unspecified error")
                    .to_string(),
            )),
            None => Err(Error::Bridge("reply lacks an \"ok\" field".into())),
        }
    }

    /// The wire form of a generate request.
    pub fn encode_request(req: &GenerationRequest<'_>) -> Result<Value> {
        req.resolve()?;
        let train: Vec<Vec<f64>> = (0..req.train.n_rows()).map(|r| req.train.row(r)).collect();
        Ok(json!({
            "op": "generate",
            "protocol": PROTOCOL_VERSION,
            "schema": req.train.schema(),
            "train": train,
            "plan": req.plan,
            "n_samples": req.n_samples,
            "permutations": req.permutations,
            "seed": req.seed,
        }))
    }

    pub fn generate(&mut self, req: &GenerationRequest<'_>) -> Result<Table> {
        let request = Self::encode_request(req)?;
        let reply = self.call(&request)?;
        let rows: Vec<Vec<f64>> = serde_json::from_value(
            reply
                .get("samples")
                .cloned()
                .ok_or_else(|| Error::Bridge("reply lacks \"samples\"".into()))?,
        )
        .map_err(|e| Error::Bridge(format!("bad samples: {e}")))?;
        let d = req.train.n_cols();
        if rows.len() != req.n_samples {
            return Err(Error::Bridge(format!(
                "expected {} rows, got {}",
                req.n_samples,
                rows.len()
            )));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::Bridge(format!("row {bad} does not have {d} values")));
        }
        let columns = (0..d).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
        Table::new(req.train.schema().to_vec(), columns)
            .map_err(|e| Error::Bridge(format!("invalid samples: {e}")))
    }

    /// Sends `shutdown` and waits for the child to exit.
    pub fn shutdown(mut self) -> Result<()> {
        let reply = self.call(&json!({"op": "shutdown", "protocol": PROTOCOL_VERSION}));
        let mut ch = self.channel.take().expect("channel present");
        drop(ch.stdin);
        let status = ch
            .child
            .wait()
            .map_err(|e| Error::Bridge(format!("wait failed: {e}")))?;
        reply?;
        if !status.success() {
            return Err(Error::Bridge(format!("bridge exited with {status}")));
        }
        Ok(())
    }
}

impl Drop for BridgeClient {
    /// Asks the bridge to stop without waiting for a reply, then gives it
    /// a grace period before killing it.
    fn drop(&mut self) {
        let Some(mut ch) = self.channel.take() else {
            return;
        };
        let _ = writeln!(ch.stdin, "{}", json!({"op": "shutdown", "protocol": PROTOCOL_VERSION}))
            .and_then(|_| ch.stdin.flush());
        drop(ch.stdin);
        let deadline = Instant::now() + SHUTDOWN_GRACE;
        while Instant::now() < deadline {
            if let Ok(Some(_)) = ch.child.try_wait() {
                return;
            }
            std::thread::sleep(Duration::from_millis(10));
        }
        if let Err(e) = ch.child.kill() {
            warn!("could not stop bridge: {e}");
        }
        let _ = ch.child.wait();
    }
}

#[derive(Deserialize)]
struct WireGenerate {
    schema: Vec<ColumnSchema>,
    train: Vec<Vec<f64>>,
    plan: GenerationPlan,
    n_samples: usize,
    #[serde(default = "one")]
    permutations: usize,
    seed: u64,
}

fn one() -> usize {
    1
}

fn table_from_rows(schema: Vec<ColumnSchema>, rows: &[Vec<f64>]) -> Result<Table> {
    let d = schema.len();
    if let Some(bad) = rows.iter().position(|r| r.len() != d) {
        return Err(Error::InvalidInput(format!("train row {bad} does not have {d} values")));
    }
    let columns = (0..d).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
    Table::new(schema, columns)
}

fn handle_generate(sampler: &dyn ConditionalSampler, request: Value) -> Result<Value> {
    let wire: WireGenerate = serde_json::from_value(request)?;
    let train = table_from_rows(wire.schema, &wire.train)?;
    let out = generate(
        sampler,
        &GenerationRequest {
            train: &train,
            plan: &wire.plan,
            n_samples: wire.n_samples,
            seed: wire.seed,
            permutations: wire.permutations,
        },
    )?;
    let rows: Vec<Vec<f64>> = (0..out.n_rows()).map(|r| out.row(r)).collect();
    Ok(json!({"ok": true, "samples": rows}))
}

/// Serves the bridge protocol with a built-in sampler until `shutdown` or
/// end of input. Because generation goes through the same engine and seed
/// rules, a client talking to this server gets exactly what the in-process
/// sampler would produce.
pub fn serve<R: BufRead, W: Write>(input: R, mut output: W, sampler: &dyn ConditionalSampler) -> Result<()> {
    let model = format!("causagen/{}", sampler.name());
    let mut handshaken = false;
    for line in input.lines() {
        let line = line.map_err(|e| Error::Bridge(format!("read failed: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut stop = false;
        let reply = match serde_json::from_str::<Value>(&line) {
            Err(e) => json!({"ok": false, "error": format!("malformed request: {e}")}),
            Ok(req) => match (req.get("op").and_then(Value::as_str), req.get("protocol").and_then(Value::as_u64)) {
                (_, Some(p)) if p != PROTOCOL_VERSION => {
                    json!({"ok": false, "error": format!("unsupported protocol {p}")})
                }
                (Some("handshake"), _) => {
                    handshaken = true;
                    json!({"ok": true, "protocol": PROTOCOL_VERSION, "model": model})
                }
                (Some("shutdown"), _) => {
                    stop = true;
                    json!({"ok": true})
                }
                (Some("generate"), _) if !handshaken => json!({"ok": false, "error": "handshake required"}),
                (Some("generate"), _) => handle_generate(sampler, req)
                    .unwrap_or_else(|e| json!({"ok": false, "error": e.to_string()})),
                (other, _) => json!({"ok": false, "error": format!("unknown op {other:?}")}),
            },
        };
        writeln!(output, "{reply}")
            .and_then(|_| output.flush())
            .map_err(|e| Error::Bridge(format!("write failed: {e}")))?;
        if stop {
            break;
        }
    }
    Ok(())
}
