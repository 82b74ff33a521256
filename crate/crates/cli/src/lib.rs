//! The `scicafe` command line: argument parsing, output and exit codes.
//! Every subcommand is a single [`Backend`] call.

pub mod args;
pub mod backend;

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::Parser;
use scicafe_core::catalog::{CatalogEntry, Subfunction};
use scicafe_core::delphi::{decimal, stats_csv, Panelist, PanelistCategory, RoundId, Statement, StepPlan};
use scicafe_core::session::{SessionId, UserId};
use scicafe_service::delphi::{NewProcess, OpenRequest};
use scicafe_service::{ApiError, CreateSessionRequest, Service, ServiceConfig, SystemClock};
use serde::Serialize;
use serde_json::json;

pub use args::Cli;
use args::{CatalogCmd, Cmd, CreateArgs, DelphiCmd, Format, OpenArgs, ServeArgs, SessionCmd};
pub use backend::{Backend, LocalBackend, Rating, RemoteBackend, RoundStats};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(ApiError),
    /// Already reported; exit with status 1.
    Failed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Domain(_) | CliError::Failed => EXIT_DOMAIN,
        }
    }
}

impl From<ApiError> for CliError {
    fn from(e: ApiError) -> Self {
        CliError::Domain(e)
    }
}

fn io_failed(e: std::io::Error) -> CliError {
    CliError::Domain(ApiError::new(500, "IO_FAILURE", e.to_string()))
}

struct Out<'a> {
    json: bool,
    w: &'a mut dyn Write,
}

impl Out<'_> {
    fn emit<T: Serialize>(&mut self, value: &T, text: impl FnOnce() -> String) -> Result<(), CliError> {
        let s = if self.json {
            serde_json::to_string_pretty(value).expect("outputs serialize")
        } else {
            text()
        };
        writeln!(self.w, "{}", s.trim_end()).map_err(io_failed)
    }
}

fn parse_plan(items: &[String]) -> Result<Vec<StepPlan>, CliError> {
    items
        .iter()
        .map(|s| match s.split_once(':') {
            None if s.eq_ignore_ascii_case("online") => Ok(StepPlan::Online),
            None if s.eq_ignore_ascii_case("offline") => Ok(StepPlan::Offline("offline step".into())),
            Some((kind, label)) if kind.eq_ignore_ascii_case("offline") => Ok(StepPlan::Offline(label.into())),
            _ => Err(CliError::Usage(format!("plan step {s:?}: expected online or offline:<label>"))),
        })
        .collect()
}

fn open_request(a: &OpenArgs) -> Result<OpenRequest, CliError> {
    if let Some(path) = &a.from {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        return serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())));
    }
    let statements = a
        .statements
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(id, text)| Statement::new(id.trim(), text.trim()))
                .ok_or_else(|| CliError::Usage(format!("statement {s:?}: expected id=text")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let panel = a
        .panelists
        .iter()
        .map(|p| {
            let (id, cat) = p
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("panelist {p:?}: expected id:category")))?;
            let bad = |e: scicafe_core::delphi::DelphiError| CliError::Usage(format!("panelist {p:?}: {e}"));
            Panelist::new(id.trim(), cat.parse::<PanelistCategory>().map_err(bad)?).map_err(bad)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let create = match &a.title {
        Some(title) => Some(NewProcess {
            title: title.clone(),
            plan: parse_plan(&a.plan)?,
        }),
        None => None,
    };
    Ok(OpenRequest {
        create,
        statements: (!statements.is_empty()).then_some(statements),
        panel,
    })
}

fn create_request(a: &CreateArgs) -> CreateSessionRequest {
    let mut req = CreateSessionRequest::new(&a.title, a.tables);
    req.id = a.id.as_deref().map(SessionId::new);
    req.rotation_minutes = a.rotation;
    req.areas = (!a.areas.is_empty()).then(|| a.areas.clone());
    req.restricted_to = (!a.restricted.is_empty()).then(|| a.restricted.iter().map(UserId::new).collect());
    req.table_capacity = a.capacity;
    req
}

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Carries out one parsed command. `serve` is not handled here.
pub fn dispatch(cli: &Cli, backend: &dyn Backend, w: &mut dyn Write) -> Result<(), CliError> {
    let user = UserId::new(cli.user.as_str());
    let mut out = Out { json: cli.json, w };
    match &cli.command {
        Cmd::Session(SessionCmd::Create(a)) => {
            let created = backend.create_session(&create_request(a), &user)?;
            out.emit(&created, || created.session.to_string())
        }
        Cmd::Session(SessionCmd::List) => {
            let sessions = backend.list_sessions(&user)?;
            out.emit(&sessions, || {
                sessions
                    .iter()
                    .map(|s| {
                        let mut flags = Vec::new();
                        if s.archived {
                            flags.push("archived");
                        }
                        if s.restricted {
                            flags.push("restricted");
                        }
                        if s.read_only {
                            flags.push("read-only");
                        }
                        format!(
                            "{}\t{}\t{}/{} tables open\t{} members\tseq {}\t{}\n",
                            s.id, s.title, s.open_tables, s.tables, s.members, s.last_seq, flags.join(",")
                        )
                    })
                    .collect()
            })
        }
        Cmd::Session(SessionCmd::Archive { id }) => {
            let archive = backend.archive_session(&SessionId::new(id.as_str()), &user)?;
            out.emit(&archive, || {
                let notes: usize = archive.tables.iter().map(|t| t.blackboard.notes.len()).sum();
                format!(
                    "archived {}: {} tables, {notes} notes, {} on the wall",
                    archive.session,
                    archive.tables.len(),
                    archive.wall.entries.len()
                )
            })
        }
        Cmd::Session(SessionCmd::Metrics { id }) => {
            let m = backend.session_metrics(&SessionId::new(id.as_str()), &user)?;
            out.emit(&m, || {
                let mut s = format!(
                    "notes {}\ncontributors {}\nentropy {:.6} nats\nrotations {}\n",
                    m.total_notes, m.contributors, m.entropy, m.rotations
                );
                for (u, a) in &m.users {
                    s.push_str(&format!("{u}\t{} notes\t{} chats\n", a.notes, a.chats));
                }
                for (area, n) in &m.notes_per_area {
                    s.push_str(&format!("area {area}\t{n}\n"));
                }
                s
            })
        }
        Cmd::Delphi(DelphiCmd::Open(a)) => {
            let opened = backend.delphi_open(&a.process.process, open_request(a)?)?;
            out.emit(&opened, || {
                format!(
                    "round {}: {} statements, {} panelists",
                    opened.round,
                    opened.statements.len(),
                    opened.panel
                )
            })
        }
        Cmd::Delphi(DelphiCmd::Offline(p)) => {
            backend.delphi_offline(&p.process)?;
            out.emit(&json!({"ok": true}), || "offline step done".into())
        }
        Cmd::Delphi(DelphiCmd::Respond(a)) => {
            let rating = Rating {
                panelist: a.panelist.as_str().into(),
                statement: a.statement.as_str().into(),
                rating: a.rating,
                comment: a.comment.clone(),
            };
            let outcome = backend.delphi_respond(&a.process.process, &rating)?;
            out.emit(&outcome, || format!("{outcome:?}").to_lowercase())
        }
        Cmd::Delphi(DelphiCmd::Aggregate(a)) => {
            let round = a.round.as_deref().map(|r| RoundId(r.to_owned()));
            let result = backend.delphi_aggregate(&a.process.process, round.as_ref())?;
            if a.format == Format::Json || out.json {
                out.json = true;
                out.emit(&result, String::new)
            } else {
                out.emit(&result, || stats_csv(&result.stats))
            }
        }
        Cmd::Delphi(DelphiCmd::Export(a)) => {
            let recs = backend.delphi_export(&a.process.process, a.finish)?;
            out.emit(&recs, || {
                recs.iter()
                    .enumerate()
                    .map(|(i, r)| {
                        format!(
                            "{}. {}\tmedian {}\tagreement {}\t{}\n",
                            i + 1,
                            r.statement,
                            decimal(&r.stats.median),
                            decimal(&r.stats.agreement_ratio),
                            r.text
                        )
                    })
                    .collect()
            })
        }
        Cmd::Catalog(CatalogCmd::Classify { features }) => {
            let set = features
                .iter()
                .map(|f| f.parse::<Subfunction>())
                .collect::<Result<BTreeSet<_>, _>>()
                .map_err(ApiError::from)?;
            let profile = backend.classify(&set)?;
            out.emit(&profile, || {
                let dominant: Vec<String> = profile.dominant.iter().map(ToString::to_string).collect();
                let mut s = format!("dominant {}\n", dominant.join(","));
                for (p, score) in &profile.scores {
                    s.push_str(&format!("{p}\t{score:.4}\n"));
                }
                s
            })
        }
        Cmd::Catalog(CatalogCmd::Validate { entry }) => {
            let text = read_input(entry)?;
            let parsed: CatalogEntry =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", entry.display())))?;
            let violations = backend.validate(&parsed)?;
            let messages: Vec<String> = violations.iter().map(ToString::to_string).collect();
            out.emit(
                &json!({"ok": violations.is_empty(), "violations": violations, "messages": messages}),
                || if messages.is_empty() { "ok".into() } else { messages.join("\n") },
            )?;
            if violations.is_empty() {
                Ok(())
            } else {
                Err(CliError::Failed)
            }
        }
        Cmd::Simulate { script } => {
            let text = read_input(script)?;
            let report = backend
                .simulate(&text)
                .map_err(|e| CliError::Usage(format!("{}:{}: {}", script.display(), e.line, e.reason)))?;
            out.emit(&report, || report.render())?;
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Failed)
            }
        }
        Cmd::Serve(_) => Err(CliError::Usage("serve is handled by the binary".into())),
    }
}

fn load_config(cli: &Cli) -> Result<ServiceConfig, CliError> {
    ServiceConfig::load(cli.config.as_deref()).map_err(|e| CliError::Usage(e.to_string()))
}

fn serve(cli: &Cli, a: &ServeArgs, w: &mut dyn Write) -> Result<(), CliError> {
    let mut config = load_config(cli)?;
    if let Some(l) = &a.listen {
        config.listen = l.clone();
    }
    if let Some(l) = &a.line_listen {
        config.line_listen = Some(l.clone());
    }
    if let Some(d) = &a.storage_dir {
        config.storage_dir = d.clone();
    }
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .try_init();
    let svc = Arc::new(
        Service::open(config, Arc::new(SystemClock))
            .map_err(|e| CliError::Domain(ApiError::new(500, "STARTUP", e.to_string())))?,
    );
    let rt = tokio::runtime::Runtime::new().map_err(io_failed)?;
    rt.block_on(async {
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        let (bound, serving) = scicafe_service::server::bind(svc, shutdown).await.map_err(io_failed)?;
        writeln!(w, "listening on http://{}", bound.http).map_err(io_failed)?;
        if let Some(line) = bound.line {
            writeln!(w, "line protocol on {line}").map_err(io_failed)?;
        }
        w.flush().map_err(io_failed)?;
        serving.await.map_err(io_failed)
    })
}

fn backend_for(cli: &Cli) -> Result<Box<dyn Backend>, CliError> {
    if let Some(url) = &cli.server {
        return Ok(Box::new(RemoteBackend::new(url, &cli.user)));
    }
    let config = load_config(cli)?;
    let service = match cli.command {
        Cmd::Simulate { .. } | Cmd::Catalog(_) => Service::in_memory(config, Arc::new(SystemClock)),
        _ => Service::open(config, Arc::new(SystemClock))
            .map_err(|e| CliError::Domain(ApiError::new(500, "STARTUP", e.to_string())))?,
    };
    Ok(Box::new(LocalBackend { service }))
}

fn report(cli_json: bool, e: &CliError, out: &mut dyn Write, err: &mut dyn Write) {
    match e {
        CliError::Usage(msg) => {
            let _ = writeln!(err, "error: {msg}");
        }
        CliError::Domain(api) => {
            if cli_json {
                let _ = writeln!(out, "{}", json!({"error": {"code": api.code, "message": api.message}}));
            }
            let _ = writeln!(err, "error: {}: {}", api.code, api.message);
        }
        CliError::Failed => {}
    }
}

/// Parses `args`, runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match &cli.command {
        Cmd::Serve(a) => serve(&cli, a, out),
        _ => backend_for(&cli).and_then(|b| dispatch(&cli, b.as_ref(), out)),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            report(cli.json, &e, out, err);
            e.exit_code()
        }
    }
}
