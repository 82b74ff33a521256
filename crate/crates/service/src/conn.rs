//! One client's stream: authentication, subscriptions and command ingest.

use std::sync::Arc;

use scicafe_core::session::{SessionId, UserId};
use tokio::sync::mpsc::UnboundedSender;

use crate::auth::Authenticator;
use crate::hub::{FrameSink, Hub, SubscriptionId};
use crate::protocol::{codes, parse_client_frame, ClientFrame, ErrorBody, ServerFrame};

/// Forwards serialized frames to a connection's writer task.
pub struct ChannelSink(pub UnboundedSender<String>);

impl FrameSink for ChannelSink {
    fn deliver(&self, frame: &ServerFrame) -> bool {
        self.0.send(frame.to_line()).is_ok()
    }
}

pub struct Connection {
    hub: Arc<Hub>,
    auth: Option<Arc<dyn Authenticator>>,
    user: Option<UserId>,
    sink: Arc<dyn FrameSink>,
    subscriptions: Vec<(SessionId, SubscriptionId)>,
}

impl Connection {
    /// Must say hello with a token before sending commands.
    pub fn new(hub: Arc<Hub>, auth: Arc<dyn Authenticator>, sink: Arc<dyn FrameSink>) -> Self {
        Self {
            hub,
            auth: Some(auth),
            user: None,
            sink,
            subscriptions: Vec::new(),
        }
    }

    /// Already authenticated as `user`, for in-process clients.
    pub fn trusted(hub: Arc<Hub>, user: UserId, sink: Arc<dyn FrameSink>) -> Self {
        Self {
            hub,
            auth: None,
            user: Some(user),
            sink,
            subscriptions: Vec::new(),
        }
    }

    pub fn user(&self) -> Option<&UserId> {
        self.user.as_ref()
    }

    fn reply(&self, frame: ServerFrame) {
        self.sink.deliver(&frame);
    }

    pub fn handle_line(&mut self, line: &str) {
        if line.trim().is_empty() {
            return;
        }
        match parse_client_frame(line) {
            Ok(frame) => self.handle(frame),
            Err(e) => self.reply(ServerFrame::error(e)),
        }
    }

    pub fn handle(&mut self, frame: ClientFrame) {
        match frame {
            ClientFrame::Hello { token } => {
                let user = self.auth.as_ref().and_then(|a| a.resolve(&token));
                match user {
                    Some(u) => {
                        self.user = Some(u.clone());
                        self.reply(ServerFrame::welcome(u));
                    }
                    None if self.auth.is_none() => {
                        let u = self.user.clone().expect("trusted connections have a user");
                        self.reply(ServerFrame::welcome(u));
                    }
                    None => self.reply(ServerFrame::error(ErrorBody::new(
                        codes::AUTH_FAILURE,
                        "unknown token",
                    ))),
                }
            }
            ClientFrame::Subscribe { session, from_seq } => {
                if self.subscriptions.iter().any(|(s, _)| *s == session) {
                    return;
                }
                match self
                    .hub
                    .subscribe(&session, self.user.as_ref(), self.sink.clone(), from_seq)
                {
                    Ok(id) => {
                        let last = self.hub.state(&session).map(|s| s.last_seq).unwrap_or(0);
                        self.subscriptions.push((session.clone(), id));
                        self.reply(ServerFrame::subscribed(&session, last));
                    }
                    Err(e) => self.reply(ServerFrame::error(e)),
                }
            }
            ClientFrame::Unsubscribe { session } => {
                self.subscriptions.retain(|(s, id)| {
                    if *s == session {
                        self.hub.unsubscribe(s, *id);
                        false
                    } else {
                        true
                    }
                });
            }
            ClientFrame::Command(env, cmd) => {
                let Some(user) = self.user.clone() else {
                    self.reply(ServerFrame::error(
                        ErrorBody::new(codes::AUTH_FAILURE, "say hello first").for_command(&env),
                    ));
                    return;
                };
                match self.hub.ingest(&env, &cmd, &user) {
                    Ok(ack) => self.reply(ServerFrame::ack(&env.session, ack)),
                    Err(e) => self.reply(ServerFrame::error(e)),
                }
            }
        }
    }

    pub fn close(&mut self) {
        for (session, id) in self.subscriptions.drain(..) {
            self.hub.unsubscribe(&session, id);
        }
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        self.close();
    }
}
