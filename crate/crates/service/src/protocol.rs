//! Newline-delimited JSON frames exchanged with live clients.

use scicafe_core::session::{Command, CommandKind, CoreError, Event, Millis, SessionId, UserId};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const PROTOCOL_VERSION: u32 = 1;

pub mod codes {
    pub const UNSUPPORTED_VERSION: &str = "UNSUPPORTED_VERSION";
    pub const UNKNOWN_COMMAND: &str = "UNKNOWN_COMMAND";
    pub const MALFORMED: &str = "MALFORMED";
    pub const UNKNOWN_SESSION: &str = "UNKNOWN_SESSION";
    pub const AUTH_FAILURE: &str = "AUTH_FAILURE";
    pub const READ_ONLY: &str = "READ_ONLY";
    pub const IO_FAILURE: &str = "IO_FAILURE";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandEnvelope {
    pub v: u32,
    pub session: SessionId,
    pub actor: UserId,
    pub client_seq: u64,
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub payload: Value,
    #[serde(default)]
    pub ts: Millis,
}

impl CommandEnvelope {
    pub fn new(session: &SessionId, actor: &UserId, client_seq: u64, cmd: &Command, ts: Millis) -> Self {
        let mut value = serde_json::to_value(cmd).expect("commands serialize");
        let payload = value
            .get_mut("payload")
            .map(Value::take)
            .unwrap_or_else(|| Value::Object(Map::new()));
        Self {
            v: PROTOCOL_VERSION,
            session: session.clone(),
            actor: actor.clone(),
            client_seq,
            kind: cmd.kind().name().to_owned(),
            payload,
            ts,
        }
    }

    /// The domain command this envelope carries.
    pub fn command(&self) -> Result<Command, ErrorBody> {
        if CommandKind::from_name(&self.kind).is_none() {
            return Err(ErrorBody::new(codes::UNKNOWN_COMMAND, format!("unknown command type {:?}", self.kind))
                .for_command(self));
        }
        let payload = match &self.payload {
            Value::Null => Value::Object(Map::new()),
            p => p.clone(),
        };
        let mut obj = Map::new();
        obj.insert("type".into(), Value::String(self.kind.clone()));
        obj.insert("payload".into(), payload);
        serde_json::from_value(Value::Object(obj)).map_err(|e| {
            ErrorBody::new(codes::MALFORMED, format!("bad {} payload: {e}", self.kind)).for_command(self)
        })
    }
}

/// (actor, client_seq) of the command that produced an event.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AckEcho {
    pub actor: UserId,
    pub client_seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEnvelope {
    pub v: u32,
    pub session: SessionId,
    pub seq: u64,
    pub event: Event,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ack: Option<AckEcho>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AckBody {
    pub actor: UserId,
    pub client_seq: u64,
    /// First sequence number the command produced.
    pub seq: u64,
    pub events: usize,
    #[serde(default)]
    pub duplicate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<SessionId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor: Option<UserId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_seq: Option<u64>,
}

impl ErrorBody {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_owned(),
            message: message.into(),
            session: None,
            actor: None,
            client_seq: None,
        }
    }

    pub fn for_command(mut self, env: &CommandEnvelope) -> Self {
        self.session = Some(env.session.clone());
        self.actor = Some(env.actor.clone());
        self.client_seq = Some(env.client_seq);
        self
    }

    pub fn rejected(err: &CoreError) -> Self {
        Self::new(&err.code(), err.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subscribed {
    pub session: SessionId,
    pub last_seq: u64,
}

/// Session-wide condition such as the log becoming read-only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notice {
    pub session: SessionId,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Welcome {
    pub user: UserId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AckFrame {
    pub v: u32,
    pub session: SessionId,
    pub ack: AckBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorFrame {
    pub v: u32,
    pub error: ErrorBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelcomeFrame {
    pub v: u32,
    pub welcome: Welcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubscribedFrame {
    pub v: u32,
    pub subscribed: Subscribed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoticeFrame {
    pub v: u32,
    pub notice: Notice,
}

/// Anything the server writes to a client. Each variant has a distinct
/// top-level key, so frames are told apart by shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ServerFrame {
    Event(EventEnvelope),
    Ack(AckFrame),
    Error(ErrorFrame),
    Welcome(WelcomeFrame),
    Subscribed(SubscribedFrame),
    Notice(NoticeFrame),
}

impl ServerFrame {
    pub fn event(session: &SessionId, event: Event, ack: Option<AckEcho>) -> Self {
        ServerFrame::Event(EventEnvelope {
            v: PROTOCOL_VERSION,
            session: session.clone(),
            seq: event.seq,
            event,
            ack,
        })
    }

    pub fn ack(session: &SessionId, ack: AckBody) -> Self {
        ServerFrame::Ack(AckFrame {
            v: PROTOCOL_VERSION,
            session: session.clone(),
            ack,
        })
    }

    pub fn error(error: ErrorBody) -> Self {
        ServerFrame::Error(ErrorFrame {
            v: PROTOCOL_VERSION,
            error,
        })
    }

    pub fn welcome(user: UserId) -> Self {
        ServerFrame::Welcome(WelcomeFrame {
            v: PROTOCOL_VERSION,
            welcome: Welcome { user },
        })
    }

    pub fn subscribed(session: &SessionId, last_seq: u64) -> Self {
        ServerFrame::Subscribed(SubscribedFrame {
            v: PROTOCOL_VERSION,
            subscribed: Subscribed {
                session: session.clone(),
                last_seq,
            },
        })
    }

    pub fn notice(session: &SessionId, code: &str, message: impl Into<String>) -> Self {
        ServerFrame::Notice(NoticeFrame {
            v: PROTOCOL_VERSION,
            notice: Notice {
                session: session.clone(),
                code: code.to_owned(),
                message: message.into(),
            },
        })
    }

    /// Session an event frame belongs to.
    pub fn event_session(&self) -> Option<&SessionId> {
        match self {
            ServerFrame::Event(e) => Some(&e.session),
            _ => None,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("frames serialize")
    }

    pub fn from_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}

/// Anything a client may send.
#[derive(Debug, Clone, PartialEq)]
pub enum ClientFrame {
    Hello { token: String },
    Subscribe { session: SessionId, from_seq: Option<u64> },
    Unsubscribe { session: SessionId },
    Command(CommandEnvelope, Command),
}

#[derive(Deserialize)]
struct HelloBody {
    token: String,
}

#[derive(Deserialize)]
struct SubscribeBody {
    session: SessionId,
    #[serde(default)]
    from_seq: Option<u64>,
}

pub fn hello_line(token: &str) -> String {
    serde_json::json!({"v": PROTOCOL_VERSION, "op": "hello", "token": token}).to_string()
}

pub fn subscribe_line(session: &SessionId, from_seq: Option<u64>) -> String {
    serde_json::json!({"v": PROTOCOL_VERSION, "op": "subscribe", "session": session, "from_seq": from_seq})
        .to_string()
}

/// Parses one client line. Unknown fields are ignored.
pub fn parse_client_frame(line: &str) -> Result<ClientFrame, ErrorBody> {
    let value: Value = serde_json::from_str(line.trim())
        .map_err(|e| ErrorBody::new(codes::MALFORMED, format!("not a JSON object: {e}")))?;
    let Value::Object(obj) = &value else {
        return Err(ErrorBody::new(codes::MALFORMED, "not a JSON object"));
    };
    match obj.get("v").and_then(Value::as_u64) {
        Some(v) if v == PROTOCOL_VERSION as u64 => {}
        Some(v) => {
            return Err(ErrorBody::new(
                codes::UNSUPPORTED_VERSION,
                format!("protocol version {v} is not supported; use {PROTOCOL_VERSION}"),
            ))
        }
        None => return Err(ErrorBody::new(codes::MALFORMED, "missing protocol version v")),
    }
    let malformed = |e: serde_json::Error| ErrorBody::new(codes::MALFORMED, e.to_string());
    if let Some(op) = obj.get("op") {
        return match op.as_str() {
            Some("hello") => {
                let b: HelloBody = serde_json::from_value(value.clone()).map_err(malformed)?;
                Ok(ClientFrame::Hello { token: b.token })
            }
            Some("subscribe") => {
                let b: SubscribeBody = serde_json::from_value(value.clone()).map_err(malformed)?;
                Ok(ClientFrame::Subscribe {
                    session: b.session,
                    from_seq: b.from_seq,
                })
            }
            Some("unsubscribe") => {
                let b: SubscribeBody = serde_json::from_value(value.clone()).map_err(malformed)?;
                Ok(ClientFrame::Unsubscribe { session: b.session })
            }
            _ => Err(ErrorBody::new(codes::MALFORMED, format!("unknown op {op}"))),
        };
    }
    let env: CommandEnvelope = serde_json::from_value(value.clone()).map_err(|e| {
        let mut err = malformed(e);
        err.client_seq = obj.get("client_seq").and_then(Value::as_u64);
        err
    })?;
    let cmd = env.command()?;
    Ok(ClientFrame::Command(env, cmd))
}
