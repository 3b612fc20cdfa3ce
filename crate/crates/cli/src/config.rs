//! Flat `key = value` run configuration.
//!
//! Blank lines and text after `#` are ignored. Values given on the command
//! line replace those from the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nitsche_bem::contact_solver::{GmresSettings, PreconditionerKind, TauRule};
use nitsche_bem::operators::Pairing;
use nitsche_bem::quadrature::{QuadratureOrders, MAX_TRIANGLE_DEGREE};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config line {line}: expected `key = value`, found '{text}'")]
    Syntax { line: usize, text: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("key '{key}' is set twice (line {line})")]
    Duplicate { key: String, line: usize },
    #[error("{key}: cannot parse '{value}' as {expected}")]
    Invalid {
        key: String,
        value: String,
        expected: String,
    },
    #[error("{key} {requirement}")]
    Constraint { key: String, requirement: String },
    #[error("{0} and {1} cannot both be set")]
    Conflict(&'static str, &'static str),
    #[error("{key} is not supported by the {command} command")]
    Unsupported { key: String, command: Command },
}

fn constraint(key: &str, requirement: impl Into<String>) -> ConfigError {
    ConfigError::Constraint {
        key: key.to_string(),
        requirement: requirement.into(),
    }
}

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("problem", "cube-signorini or custom"),
    ("mesh_n", "subdivisions per cube edge (coarsest level for convergence)"),
    ("mesh_file", "surface mesh file instead of the generated cube"),
    ("g_d_file", "Dirichlet data coefficients (custom problem)"),
    ("gap_file", "contact gap coefficients (custom problem)"),
    ("psi_file", "contact flux bound coefficients (custom problem)"),
    ("pairing", "p1-dual0 or p1-dp0"),
    ("beta_d", "Dirichlet penalty"),
    ("tau", "fixed contact parameter"),
    ("tau_rule", "h-dependent contact parameter, c/h:<c>"),
    ("tol", "outer iteration tolerance"),
    ("maxiter", "outer iteration limit"),
    ("levels", "number of levels of a convergence study"),
    ("taus", "comma separated tau values of a sweep"),
    ("preconditioner", "auto, none, mass-gram or mass-off-role"),
    ("gmres_tol", "relative GMRES tolerance"),
    ("gmres_restart", "GMRES restart length"),
    ("gmres_maxiter", "GMRES iteration limit per outer step"),
    ("contact_degree", "triangle rule degree on the contact boundary"),
    ("quad_regular", "triangle rule degree for separated panels"),
    ("quad_vertex", "Gauss order for panels sharing a vertex"),
    ("quad_edge", "Gauss order for panels sharing an edge"),
    ("quad_coincident", "Gauss order for coincident panels"),
    ("out", "output directory"),
    ("threads", "worker threads, 0 for all cores"),
    ("seed", "seed of the random probes"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    SweepTau,
    Convergence,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::SweepTau => "sweep-tau",
            Command::Convergence => "convergence",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemChoice {
    CubeSignorini,
    /// Trace data read from coefficient files; a missing file means zero.
    Custom {
        g_d: Option<PathBuf>,
        gap: Option<PathBuf>,
        psi: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeshSource {
    Cube(usize),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub problem: ProblemChoice,
    pub mesh: MeshSource,
    pub pairing: Pairing,
    pub beta_d: f64,
    pub tau: TauRule,
    pub tol: f64,
    pub maxiter: usize,
    pub levels: usize,
    pub taus: Vec<f64>,
    pub preconditioner: PreconditionerKind,
    pub gmres: GmresSettings,
    pub contact_degree: usize,
    pub orders: QuadratureOrders,
    pub out: PathBuf,
    pub threads: usize,
    pub seed: u64,
}

pub const DEFAULT_TAUS: [f64; 6] = [0.01, 0.1, 1.0, 5.0, 10.0, 100.0];

/// `key = value` pairs of a config file with their line numbers.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String, usize)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.trim().to_string(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.trim().to_string(),
            });
        }
        out.push((key.to_string(), value.to_string(), i + 1));
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<Vec<(String, String, usize)>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_text(&text)
}

fn check_key(key: &str) -> Result<(), ConfigError> {
    if KEYS.iter().any(|(k, _)| *k == key) {
        Ok(())
    } else {
        Err(ConfigError::UnknownKey(key.to_string()))
    }
}

/// Merged values, flags taking precedence over the file.
fn merge(
    file: Vec<(String, String, usize)>,
    flags: Vec<(String, String)>,
) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut from_file = BTreeMap::new();
    for (key, value, line) in file {
        check_key(&key)?;
        if from_file.insert(key.clone(), value).is_some() {
            return Err(ConfigError::Duplicate { key, line });
        }
    }
    let mut from_flags = BTreeMap::new();
    for (key, value) in flags {
        check_key(&key)?;
        from_flags.insert(key, value);
    }
    for layer in [&from_file, &from_flags] {
        if layer.contains_key("tau") && layer.contains_key("tau_rule") {
            return Err(ConfigError::Conflict("tau", "tau_rule"));
        }
        if layer.contains_key("mesh_n") && layer.contains_key("mesh_file") {
            return Err(ConfigError::Conflict("mesh_n", "mesh_file"));
        }
    }
    // a flag for one of an exclusive pair hides the other from the file
    for (a, b) in [("tau", "tau_rule"), ("mesh_n", "mesh_file")] {
        if from_flags.contains_key(a) {
            from_file.remove(b);
        }
        if from_flags.contains_key(b) {
            from_file.remove(a);
        }
    }
    from_file.extend(from_flags);
    Ok(from_file)
}

struct Values(BTreeMap<String, String>);

impl Values {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parse<T: FromStr>(&self, key: &str, expected: &str) -> Result<Option<T>, ConfigError> {
        self.raw(key)
            .map(|v| {
                v.parse().map_err(|_| ConfigError::Invalid {
                    key: key.to_string(),
                    value: v.to_string(),
                    expected: expected.to_string(),
                })
            })
            .transpose()
    }

    fn float(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.parse::<f64>(key, "a number")?.unwrap_or(default);
        if !v.is_finite() {
            return Err(constraint(key, "must be finite"));
        }
        Ok(v)
    }

    fn positive_float(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.float(key, default)?;
        if v <= 0.0 {
            return Err(constraint(key, "must be positive"));
        }
        Ok(v)
    }

    fn count(&self, key: &str, default: usize, min: usize) -> Result<usize, ConfigError> {
        let v = self.parse::<usize>(key, "a non-negative integer")?.unwrap_or(default);
        if v < min {
            return Err(constraint(key, format!("must be at least {min}")));
        }
        Ok(v)
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(PathBuf::from)
    }
}

pub fn parse_tau_rule(key: &str, value: &str) -> Result<TauRule, ConfigError> {
    let invalid = || ConfigError::Invalid {
        key: key.to_string(),
        value: value.to_string(),
        expected: "c/h:<number>".to_string(),
    };
    let c: f64 = value
        .strip_prefix("c/h:")
        .ok_or_else(invalid)?
        .trim()
        .parse()
        .map_err(|_| invalid())?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(constraint(key, "constant must be positive"));
    }
    Ok(TauRule::OverH(c))
}

fn parse_taus(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    let mut taus = Vec::new();
    for part in value.split(',') {
        let t: f64 = part.trim().parse().map_err(|_| ConfigError::Invalid {
            key: key.to_string(),
            value: part.trim().to_string(),
            expected: "a number".to_string(),
        })?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(constraint(key, "values must be positive"));
        }
        taus.push(t);
    }
    Ok(taus)
}

impl RunConfig {
    /// Validate and resolve the file entries and flag overrides of a run.
    pub fn resolve(
        command: Command,
        file: Vec<(String, String, usize)>,
        flags: Vec<(String, String)>,
    ) -> Result<Self, ConfigError> {
        let v = Values(merge(file, flags)?);
        let unsupported = |key: &str| ConfigError::Unsupported {
            key: key.to_string(),
            command,
        };

        let problem = match v.raw("problem").unwrap_or("cube-signorini") {
            "cube-signorini" => {
                for key in ["g_d_file", "gap_file", "psi_file"] {
                    if v.raw(key).is_some() {
                        return Err(constraint(key, "is only used with problem = custom"));
                    }
                }
                ProblemChoice::CubeSignorini
            }
            "custom" => {
                if command != Command::Solve {
                    return Err(unsupported("problem = custom"));
                }
                if v.raw("mesh_file").is_none() {
                    return Err(constraint("problem = custom", "requires mesh_file"));
                }
                ProblemChoice::Custom {
                    g_d: v.path("g_d_file"),
                    gap: v.path("gap_file"),
                    psi: v.path("psi_file"),
                }
            }
            other => {
                return Err(ConfigError::Invalid {
                    key: "problem".into(),
                    value: other.into(),
                    expected: "cube-signorini or custom".into(),
                })
            }
        };

        let default_n = if command == Command::Convergence { 2 } else { 4 };
        let mesh = match v.path("mesh_file") {
            Some(_) if command == Command::Convergence => return Err(unsupported("mesh_file")),
            Some(p) => MeshSource::File(p),
            None => MeshSource::Cube(v.count("mesh_n", default_n, 1)?),
        };

        let pairing = v
            .parse::<Pairing>("pairing", "p1-dual0 or p1-dp0")?
            .unwrap_or(Pairing::P1Dual0);
        let beta_d = v.float("beta_d", 0.01)?;
        if beta_d < 0.0 {
            return Err(constraint("beta_d", "must be non-negative"));
        }
        let tau = match (v.raw("tau"), v.raw("tau_rule")) {
            (Some(_), _) => TauRule::Fixed(v.positive_float("tau", 1.0)?),
            (None, Some(rule)) => parse_tau_rule("tau_rule", rule)?,
            (None, None) => TauRule::default(),
        };
        let tol = v.positive_float("tol", 0.05)?;
        let maxiter = v.count("maxiter", 200, 1)?;
        let levels = v.count("levels", 3, 2)?;
        if v.raw("levels").is_some() && command != Command::Convergence {
            return Err(unsupported("levels"));
        }
        let taus = match v.raw("taus") {
            Some(_) if command != Command::SweepTau => return Err(unsupported("taus")),
            Some(s) => parse_taus("taus", s)?,
            None => DEFAULT_TAUS.to_vec(),
        };
        let preconditioner = v
            .parse::<PreconditionerKind>("preconditioner", "auto, none, mass-gram or mass-off-role")?
            .unwrap_or_default();

        let gd = GmresSettings::default();
        let gmres = GmresSettings {
            tol: v.positive_float("gmres_tol", gd.tol)?,
            restart: v.count("gmres_restart", gd.restart, 1)?,
            max_iterations: v.count("gmres_maxiter", gd.max_iterations, 1)?,
        };
        let contact_degree = v.count("contact_degree", 6, 1)?;
        let qd = QuadratureOrders::default();
        let orders = QuadratureOrders {
            regular_degree: v.count("quad_regular", qd.regular_degree, 1)?,
            vertex_order: v.count("quad_vertex", qd.vertex_order, 1)?,
            edge_order: v.count("quad_edge", qd.edge_order, 1)?,
            coincident_order: v.count("quad_coincident", qd.coincident_order, 1)?,
            ..qd
        };
        for (key, degree) in [
            ("contact_degree", contact_degree),
            ("quad_regular", orders.regular_degree),
        ] {
            if degree > MAX_TRIANGLE_DEGREE {
                return Err(constraint(key, format!("must be at most {MAX_TRIANGLE_DEGREE}")));
            }
        }

        Ok(RunConfig {
            command,
            problem,
            mesh,
            pairing,
            beta_d,
            tau,
            tol,
            maxiter,
            levels,
            taus,
            preconditioner,
            gmres,
            contact_degree,
            orders,
            out: v.path("out").unwrap_or_else(|| PathBuf::from("out")),
            threads: v.count("threads", 0, 0)?,
            seed: v.parse::<u64>("seed", "a non-negative integer")?.unwrap_or(0),
        })
    }

    /// Mesh sizes `n` of the cube levels this run solves on.
    pub fn cube_levels(&self) -> Vec<usize> {
        match (&self.mesh, self.command) {
            (MeshSource::Cube(n), Command::Convergence) => (0..self.levels).map(|k| n << k).collect(),
            (MeshSource::Cube(n), _) => vec![*n],
            (MeshSource::File(_), _) => Vec::new(),
        }
    }

    /// Effective value of every key, for the run manifest.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![("command", self.command.name().to_string())];
        match &self.problem {
            ProblemChoice::CubeSignorini => out.push(("problem", "cube-signorini".into())),
            ProblemChoice::Custom { g_d, gap, psi } => {
                out.push(("problem", "custom".into()));
                for (key, p) in [("g_d_file", g_d), ("gap_file", gap), ("psi_file", psi)] {
                    if let Some(p) = p {
                        out.push((key, p.display().to_string()));
                    }
                }
            }
        }
        match &self.mesh {
            MeshSource::Cube(n) => out.push(("mesh_n", n.to_string())),
            MeshSource::File(p) => out.push(("mesh_file", p.display().to_string())),
        }
        out.push(("pairing", self.pairing.name().into()));
        out.push(("beta_d", self.beta_d.to_string()));
        match self.tau {
            TauRule::Fixed(t) => out.push(("tau", t.to_string())),
            rule => out.push(("tau_rule", rule.to_string())),
        }
        out.push(("tol", self.tol.to_string()));
        out.push(("maxiter", self.maxiter.to_string()));
        match self.command {
            Command::Convergence => out.push(("levels", self.levels.to_string())),
            Command::SweepTau => out.push((
                "taus",
                self.taus.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
            )),
            Command::Solve => {}
        }
        out.push(("preconditioner", self.preconditioner.name().into()));
        out.push(("gmres_tol", self.gmres.tol.to_string()));
        out.push(("gmres_restart", self.gmres.restart.to_string()));
        out.push(("gmres_maxiter", self.gmres.max_iterations.to_string()));
        out.push(("contact_degree", self.contact_degree.to_string()));
        out.push(("quad_regular", self.orders.regular_degree.to_string()));
        out.push(("quad_vertex", self.orders.vertex_order.to_string()));
        out.push(("quad_edge", self.orders.edge_order.to_string()));
        out.push(("quad_coincident", self.orders.coincident_order.to_string()));
        out.push(("out", self.out.display().to_string()));
        out.push(("threads", self.threads.to_string()));
        out.push(("seed", self.seed.to_string()));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    fn resolve(command: Command, file: &str, f: &[(&str, &str)]) -> Result<RunConfig, ConfigError> {
        RunConfig::resolve(command, parse_config_text(file).unwrap(), flags(f))
    }

    #[test]
    fn empty_config_gives_defaults() {
        let c = resolve(Command::Convergence, "", &[("levels", "3")]).unwrap();
        assert_eq!(c.cube_levels(), vec![2, 4, 8]);
        assert_eq!(c.beta_d, 0.01);
        assert_eq!(c.tol, 0.05);
        assert_eq!(c.maxiter, 200);
        assert_eq!(c.tau, TauRule::OverH(0.5));
        assert_eq!(c.pairing, Pairing::P1Dual0);
        assert_eq!(c.preconditioner, PreconditionerKind::Auto);
        assert_eq!(c.contact_degree, 6);
    }

    #[test]
    fn negative_tau_is_rejected_by_name() {
        let e = resolve(Command::Solve, "tau = -1", &[]).unwrap_err();
        assert_eq!(e.to_string(), "tau must be positive");
    }

    #[test]
    fn flags_override_the_file() {
        let c = resolve(Command::Solve, "tol = 0.1\nmaxiter = 7", &[("tol", "0.05")]).unwrap();
        assert_eq!(c.tol, 0.05);
        assert_eq!(c.maxiter, 7);
    }

    #[test]
    fn flag_tau_replaces_file_tau_rule() {
        let c = resolve(Command::Solve, "tau_rule = c/h:2", &[("tau", "3")]).unwrap();
        assert_eq!(c.tau, TauRule::Fixed(3.0));
        let c = resolve(Command::Solve, "tau = 3", &[("tau_rule", "c/h:2")]).unwrap();
        assert_eq!(c.tau, TauRule::OverH(2.0));
    }

    #[test]
    fn conflicting_keys_in_one_layer() {
        let e = resolve(Command::Solve, "tau = 1\ntau_rule = c/h:1", &[]).unwrap_err();
        assert!(matches!(e, ConfigError::Conflict("tau", "tau_rule")));
    }

    #[test]
    fn unknown_keys_are_errors() {
        let e = resolve(Command::Solve, "taux = 1", &[]).unwrap_err();
        assert_eq!(e.to_string(), "unknown key 'taux'");
        let e = resolve(Command::Solve, "", &[("bogus", "1")]).unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey(k) if k == "bogus"));
    }

    #[test]
    fn type_errors_name_the_key() {
        let e = resolve(Command::Solve, "maxiter = many", &[]).unwrap_err();
        assert!(e.to_string().starts_with("maxiter:"), "{e}");
        let e = resolve(Command::Solve, "pairing = p2-dp1", &[]).unwrap_err();
        assert!(e.to_string().starts_with("pairing:"), "{e}");
        let e = resolve(Command::Solve, "tau_rule = 0.5/h", &[]).unwrap_err();
        assert!(e.to_string().starts_with("tau_rule:"), "{e}");
    }

    #[test]
    fn constraints_name_the_key() {
        for (text, msg) in [
            ("tol = 0", "tol must be positive"),
            ("maxiter = 0", "maxiter must be at least 1"),
            ("beta_d = -0.5", "beta_d must be non-negative"),
            ("mesh_n = 0", "mesh_n must be at least 1"),
            ("tau_rule = c/h:-1", "tau_rule constant must be positive"),
            ("contact_degree = 99", "contact_degree must be at most 30"),
            ("gmres_tol = nan", "gmres_tol must be finite"),
        ] {
            let e = resolve(Command::Solve, text, &[]).unwrap_err();
            assert_eq!(e.to_string(), msg, "{text}");
        }
        let e = resolve(Command::Convergence, "levels = 1", &[]).unwrap_err();
        assert_eq!(e.to_string(), "levels must be at least 2");
        let e = resolve(Command::SweepTau, "taus = 1, -2", &[]).unwrap_err();
        assert_eq!(e.to_string(), "taus values must be positive");
    }

    #[test]
    fn syntax_and_duplicates() {
        assert!(matches!(
            parse_config_text("tol 0.1").unwrap_err(),
            ConfigError::Syntax { line: 1, .. }
        ));
        let parsed = parse_config_text("# comment\n\ntol = 0.1 # trailing\n").unwrap();
        assert_eq!(parsed, vec![("tol".to_string(), "0.1".to_string(), 3)]);
        let e = resolve(Command::Solve, "tol = 1\ntol = 2", &[]).unwrap_err();
        assert!(matches!(e, ConfigError::Duplicate { line: 2, .. }));
    }

    #[test]
    fn command_specific_keys() {
        assert!(resolve(Command::Solve, "levels = 3", &[]).is_err());
        assert!(resolve(Command::Solve, "taus = 1,2", &[]).is_err());
        assert!(resolve(Command::Convergence, "mesh_file = a.mesh", &[]).is_err());
        assert!(resolve(Command::SweepTau, "problem = custom\nmesh_file = a", &[]).is_err());
        assert!(resolve(Command::Solve, "problem = custom", &[]).is_err());
        assert!(resolve(Command::Solve, "gap_file = g.csv", &[]).is_err());
        let c = resolve(Command::Solve, "problem = custom\nmesh_file = a\ngap_file = g.csv", &[]).unwrap();
        assert_eq!(c.mesh, MeshSource::File("a".into()));
        assert!(matches!(
            c.problem,
            ProblemChoice::Custom {
                gap: Some(_),
                g_d: None,
                ..
            }
        ));
    }

    #[test]
    fn sweep_defaults_and_levels() {
        let c = resolve(Command::SweepTau, "", &[]).unwrap();
        assert_eq!(c.taus, DEFAULT_TAUS.to_vec());
        assert_eq!(c.cube_levels(), vec![4]);
        let c = resolve(Command::Convergence, "mesh_n = 1\nlevels = 4", &[]).unwrap();
        assert_eq!(c.cube_levels(), vec![1, 2, 4, 8]);
    }

    #[test]
    fn echo_round_trips() {
        let c = resolve(
            Command::SweepTau,
            "pairing = p1-dp0\ntaus = 0.5, 2\nbeta_d = 0.2\ntau_rule = c/h:1.5",
            &[("seed", "9")],
        )
        .unwrap();
        let echo = c.echo();
        let file: Vec<_> = echo
            .iter()
            .filter(|(k, _)| *k != "command")
            .map(|(k, v)| (k.to_string(), v.clone(), 0))
            .collect();
        let again = RunConfig::resolve(Command::SweepTau, file, Vec::new()).unwrap();
        assert_eq!(again, c);
    }
}
