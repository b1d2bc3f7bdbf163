//! Line-delimited JSON-RPC 2.0 binding with MCP `tools/list` and
//! `tools/call`.

use std::io::{self, BufRead, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use serde_json::{json, Value};

use super::{ToolCall, ToolCategory, ToolGateway, SCHEMA_VIOLATION, UNKNOWN_TOOL};

pub const RPC_PARSE_ERROR: i64 = -32700;
pub const RPC_INVALID_REQUEST: i64 = -32600;
pub const RPC_METHOD_NOT_FOUND: i64 = -32601;
pub const RPC_INVALID_PARAMS: i64 = -32602;
pub const RPC_DOMAIN_ERROR: i64 = -32000;

pub const PROTOCOL_VERSION: &str = "2025-06-18";

pub struct JsonRpcServer<G> {
    gateway: G,
    seq: AtomicU64,
}

impl<G: ToolGateway> JsonRpcServer<G> {
    pub fn new(gateway: G) -> Self {
        Self {
            gateway,
            seq: AtomicU64::new(0),
        }
    }

    pub fn gateway(&self) -> &G {
        &self.gateway
    }

    /// Handles one frame. Returns `None` for notifications.
    pub fn handle_line(&self, line: &str) -> Option<String> {
        let msg: Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => return Some(error_frame(Value::Null, RPC_PARSE_ERROR, &e.to_string(), None)),
        };
        let Some(obj) = msg.as_object() else {
            return Some(error_frame(Value::Null, RPC_INVALID_REQUEST, "request must be an object", None));
        };
        let id = obj.get("id").cloned();
        let valid_id = matches!(id, None | Some(Value::Number(_) | Value::String(_) | Value::Null));
        let method = obj.get("method").and_then(Value::as_str);
        if obj.get("jsonrpc").and_then(Value::as_str) != Some("2.0") || method.is_none() || !valid_id {
            return Some(error_frame(
                id.unwrap_or(Value::Null),
                RPC_INVALID_REQUEST,
                "expected a JSON-RPC 2.0 request",
                None,
            ));
        }
        let id = id?;
        let params = obj.get("params").cloned().unwrap_or(Value::Null);
        let reply = match method.unwrap_or_default() {
            "initialize" => Ok(json!({
                "protocolVersion": PROTOCOL_VERSION,
                "capabilities": {"tools": {"listChanged": false}},
                "serverInfo": {"name": "swarmloop", "version": env!("CARGO_PKG_VERSION")},
            })),
            "ping" => Ok(json!({})),
            "tools/list" => Ok(self.tools_list()),
            "tools/call" => self.tools_call(&params),
            other => Err((RPC_METHOD_NOT_FOUND, format!("method {other:?} not found"), None)),
        };
        Some(match reply {
            Ok(result) => json!({"jsonrpc": "2.0", "id": id, "result": result}).to_string(),
            Err((code, message, data)) => error_frame(id, code, &message, data),
        })
    }

    fn tools_list(&self) -> Value {
        let tools: Vec<Value> = self
            .gateway
            .list_tools()
            .iter()
            .filter(|t| t.category != ToolCategory::Helper)
            .map(|t| t.to_mcp())
            .collect();
        json!({ "tools": tools })
    }

    fn tools_call(&self, params: &Value) -> Result<Value, (i64, String, Option<Value>)> {
        let Some(name) = params["name"].as_str() else {
            return Err((RPC_INVALID_PARAMS, "params.name must be a string".into(), None));
        };
        let helper = self
            .gateway
            .list_tools()
            .iter()
            .any(|t| t.name == name && t.category == ToolCategory::Helper);
        if helper {
            return Err((
                RPC_INVALID_PARAMS,
                format!("{name} is an agent-side helper"),
                Some(json!({"error_code": UNKNOWN_TOOL})),
            ));
        }
        let arguments = match params.get("arguments") {
            None | Some(Value::Null) => json!({}),
            Some(v) => v.clone(),
        };
        let n = self.seq.fetch_add(1, Ordering::Relaxed) + 1;
        let result = self.gateway.call_tool(&ToolCall {
            call_id: format!("rpc-{n}"),
            tool: name.to_string(),
            arguments,
        });
        if result.is_ok() {
            return Ok(json!({
                "content": [{"type": "text", "text": result.payload.to_string()}],
                "structuredContent": result.payload,
                "isError": false,
            }));
        }
        let code = result.error_code.clone().unwrap_or_default();
        let rpc_code = if code == UNKNOWN_TOOL || code == SCHEMA_VIOLATION {
            RPC_INVALID_PARAMS
        } else {
            RPC_DOMAIN_ERROR
        };
        Err((
            rpc_code,
            result.error_detail.clone().unwrap_or_else(|| code.clone()),
            Some(json!({"error_code": code})),
        ))
    }
}

fn error_frame(id: Value, code: i64, message: &str, data: Option<Value>) -> String {
    let mut err = json!({"code": code, "message": message});
    if let Some(d) = data {
        err["data"] = d;
    }
    json!({"jsonrpc": "2.0", "id": id, "error": err}).to_string()
}

/// Serves frames from `input` until EOF, one JSON message per line.
pub fn serve_stdio<G: ToolGateway, R: BufRead, W: Write>(
    server: &JsonRpcServer<G>,
    input: R,
    mut output: W,
) -> io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(reply) = server.handle_line(&line) {
            writeln!(output, "{reply}")?;
            output.flush()?;
        }
    }
    Ok(())
}
