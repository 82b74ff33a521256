use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "scicafe", version, about = "World Cafe sessions, Delphi panels and platform catalog")]
pub struct Cli {
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    pub json: bool,

    /// Service configuration file.
    #[arg(long, global = true, env = "SCICAFE_CONFIG")]
    pub config: Option<PathBuf>,

    /// Talk to a running server instead of the local data directory.
    #[arg(long, global = true, env = "SCICAFE_SERVER")]
    pub server: Option<String>,

    /// Acting user (also the bearer token against a server).
    #[arg(long = "as", global = true, env = "SCICAFE_USER", default_value = "org")]
    pub user: String,

    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Create, list and archive sessions.
    #[command(subcommand)]
    Session(SessionCmd),
    /// Run Delphi panels round by round.
    #[command(subcommand)]
    Delphi(DelphiCmd),
    /// Classify features and validate catalog entries.
    #[command(subcommand)]
    Catalog(CatalogCmd),
    /// Run a simulation script against a fresh in-process server.
    Simulate { script: PathBuf },
    /// Serve the wire protocol and request/response API.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum SessionCmd {
    /// Create a session; prints its id.
    Create(CreateArgs),
    /// Sessions visible to the acting user.
    List,
    /// Archive a session whose tables are all closed.
    Archive { id: String },
    /// Notes and share of contributions per participant.
    Metrics { id: String },
}

#[derive(Debug, Args)]
pub struct CreateArgs {
    #[arg(long)]
    pub title: String,
    #[arg(long)]
    pub tables: u32,
    #[arg(long)]
    pub id: Option<String>,
    /// Minutes between rotations.
    #[arg(long)]
    pub rotation: Option<u32>,
    /// Blackboard areas, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub areas: Vec<String>,
    /// Restrict the session to these users, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub restricted: Vec<String>,
    /// Seats per table.
    #[arg(long)]
    pub capacity: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum DelphiCmd {
    /// Open the next round; without statements the unresolved ones are carried.
    Open(OpenArgs),
    /// Mark the pending offline step as done.
    Offline(ProcessArg),
    /// Rate a statement from 1 to 9.
    Respond(RespondArgs),
    /// Median, interquartile range and agreement per statement.
    Aggregate(AggregateArgs),
    /// Consensus statements of a completed process.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct ProcessArg {
    #[arg(long, default_value = "delphi")]
    pub process: String,
}

#[derive(Debug, Args)]
pub struct OpenArgs {
    #[command(flatten)]
    pub process: ProcessArg,
    /// Create the process with this title if it does not exist.
    #[arg(long)]
    pub title: Option<String>,
    /// Steps for a new process: `online` or `offline:<label>`, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "online,online")]
    pub plan: Vec<String>,
    /// `id=text`, repeatable.
    #[arg(long = "statement")]
    pub statements: Vec<String>,
    /// `id:category`, repeatable.
    #[arg(long = "panelist")]
    pub panelists: Vec<String>,
    /// Open request as a JSON file; replaces the flags above.
    #[arg(long, conflicts_with_all = ["statements", "panelists", "title"])]
    pub from: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RespondArgs {
    #[command(flatten)]
    pub process: ProcessArg,
    #[arg(long)]
    pub panelist: String,
    #[arg(long)]
    pub statement: String,
    #[arg(long)]
    pub rating: u8,
    #[arg(long)]
    pub comment: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[command(flatten)]
    pub process: ProcessArg,
    /// A past round; defaults to closing and aggregating the current one.
    #[arg(long)]
    pub round: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub process: ProcessArg,
    /// Complete the process first if no further round is wanted.
    #[arg(long)]
    pub finish: bool,
}

#[derive(Debug, Subcommand)]
pub enum CatalogCmd {
    /// Score subfunctions such as `ShareGoods` or `Discuss` against the paradigms.
    Classify {
        #[arg(required = true)]
        features: Vec<String>,
    },
    /// Check a catalog entry given as a JSON file.
    Validate { entry: PathBuf },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// HTTP and WebSocket address.
    #[arg(long)]
    pub listen: Option<String>,
    /// Also serve the raw line protocol on this address.
    #[arg(long)]
    pub line_listen: Option<String>,
    #[arg(long)]
    pub storage_dir: Option<PathBuf>,
}
