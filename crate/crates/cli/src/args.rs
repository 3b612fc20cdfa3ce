use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{read_config_file, Command, ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "nitsche-bem",
    version,
    about = "Laplace contact problems by boundary elements"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// One solve with solution, iteration history and surface export.
    Solve(CommonArgs),
    /// Solves over a list of fixed tau values on one mesh.
    SweepTau(CommonArgs),
    /// Solves on a sequence of uniformly refined cube meshes.
    Convergence(CommonArgs),
}

/// Flags shared by all commands. Each flag overrides the config key of the
/// same name with dashes replaced by underscores.
#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub mesh_n: Option<String>,
    #[arg(long)]
    pub mesh_file: Option<String>,
    #[arg(long)]
    pub pairing: Option<String>,
    #[arg(long)]
    pub beta_d: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<String>,
    /// `c/h:<c>` for tau = c / h.
    #[arg(long)]
    pub tau_rule: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub maxiter: Option<String>,
    #[arg(long)]
    pub levels: Option<String>,
    /// Comma separated tau values.
    #[arg(long)]
    pub taus: Option<String>,
    #[arg(long)]
    pub preconditioner: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub threads: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Any other config key, as `key=value`; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl CommonArgs {
    /// Flag values as config entries.
    pub fn entries(&self) -> Result<Vec<(String, String)>, ConfigError> {
        let named = [
            ("problem", &self.problem),
            ("mesh_n", &self.mesh_n),
            ("mesh_file", &self.mesh_file),
            ("pairing", &self.pairing),
            ("beta_d", &self.beta_d),
            ("tau", &self.tau),
            ("tau_rule", &self.tau_rule),
            ("tol", &self.tol),
            ("maxiter", &self.maxiter),
            ("levels", &self.levels),
            ("taus", &self.taus),
            ("preconditioner", &self.preconditioner),
            ("out", &self.out),
            ("threads", &self.threads),
            ("seed", &self.seed),
        ];
        let mut out: Vec<(String, String)> = named
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        for s in &self.set {
            let (k, v) = s.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: 0,
                text: s.clone(),
            })?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }
}

impl Cli {
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let (command, args) = match &self.command {
            CommandArgs::Solve(a) => (Command::Solve, a),
            CommandArgs::SweepTau(a) => (Command::SweepTau, a),
            CommandArgs::Convergence(a) => (Command::Convergence, a),
        };
        let file = match &args.config {
            Some(path) => read_config_file(path)?,
            None => Vec::new(),
        };
        RunConfig::resolve(command, file, args.entries()?)
    }
}
