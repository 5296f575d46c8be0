//! Experiment configuration: a flat `key = value` text format with one
//! section per module, every key defaulted, and strict validation (unknown
//! keys, type mismatches, and range violations are rejected with the key
//! name and line number).

use std::path::PathBuf;

use crate::distill::{DistillConfig, LossKind};
use crate::dqn::DqnConfig;
use crate::envs::GameId;
use crate::eval::LayerSelector;
use crate::nn::{ConvSpec, NetworkSpec};
use crate::{PdError, Result};

/// Experiment family, mirroring the published experiment sections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    TrainTeacher,
    LossCompare,
    Compress,
    MultiDistill,
    MultiDqn,
    Online,
    EvalOnly,
    ParamCount,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::TrainTeacher,
        Preset::LossCompare,
        Preset::Compress,
        Preset::MultiDistill,
        Preset::MultiDqn,
        Preset::Online,
        Preset::EvalOnly,
        Preset::ParamCount,
    ];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "train-teacher" => Ok(Preset::TrainTeacher),
            "loss-compare" => Ok(Preset::LossCompare),
            "compress" => Ok(Preset::Compress),
            "multi-distill" => Ok(Preset::MultiDistill),
            "multi-dqn" => Ok(Preset::MultiDqn),
            "online" => Ok(Preset::Online),
            "eval-only" => Ok(Preset::EvalOnly),
            "param-count" => Ok(Preset::ParamCount),
            other => Err(PdError::InvalidArgument(format!("unknown preset `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::TrainTeacher => "train-teacher",
            Preset::LossCompare => "loss-compare",
            Preset::Compress => "compress",
            Preset::MultiDistill => "multi-distill",
            Preset::MultiDqn => "multi-dqn",
            Preset::Online => "online",
            Preset::EvalOnly => "eval-only",
            Preset::ParamCount => "param-count",
        }
    }
}

/// Network body: conv stack plus dense stack; the output layer is sized per
/// game at build time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchSpec {
    pub conv: Vec<ConvSpec>,
    pub dense: Vec<usize>,
}

impl ArchSpec {
    /// Text form: `conv F K S | ... | dense N | ...`.
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut conv = Vec::new();
        let mut dense = Vec::new();
        for part in text.split('|') {
            let fields: Vec<&str> = part.split_whitespace().collect();
            match fields.as_slice() {
                ["conv", f, k, s] => {
                    if !dense.is_empty() {
                        return Err("conv layers must precede dense layers".into());
                    }
                    conv.push(ConvSpec {
                        filters: parse_num(f)?,
                        kernel: parse_num(k)?,
                        stride: parse_num(s)?,
                    });
                }
                ["dense", n] => dense.push(parse_num(n)?),
                [] => {}
                other => return Err(format!("unrecognized layer `{}`", other.join(" "))),
            }
        }
        if conv.is_empty() && dense.is_empty() {
            return Err("architecture has no layers".into());
        }
        Ok(ArchSpec { conv, dense })
    }

    pub fn render(&self) -> String {
        let mut parts: Vec<String> = self
            .conv
            .iter()
            .map(|c| format!("conv {} {} {}", c.filters, c.kernel, c.stride))
            .collect();
        parts.extend(self.dense.iter().map(|n| format!("dense {n}")));
        parts.join(" | ")
    }

    /// Concrete network over the stacked 12x12 frames for one game.
    pub fn build(&self, game: GameId) -> NetworkSpec {
        self.build_with_outputs(game.action_count())
    }

    pub fn build_with_outputs(&self, output_units: usize) -> NetworkSpec {
        NetworkSpec {
            input_channels: crate::envs::STACK,
            input_height: crate::envs::FRAME,
            input_width: crate::envs::FRAME,
            conv_layers: self.conv.clone(),
            dense_layers: self.dense.clone(),
            output_units,
        }
    }
}

fn parse_num(text: &str) -> std::result::Result<usize, String> {
    text.parse::<usize>().map_err(|_| format!("`{text}` is not a count"))
}

/// Evaluation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSection {
    pub pool_size: usize,
    pub epsilon: f64,
    pub parallel: bool,
    pub export_activations: Option<LayerSelector>,
    pub checkpoint: Option<PathBuf>,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            pool_size: 100,
            epsilon: 0.05,
            parallel: false,
            export_activations: None,
            checkpoint: None,
        }
    }
}

/// Multi-task architecture settings.
#[derive(Debug, Clone, PartialEq)]
pub struct MultitaskSection {
    pub trunk_arch: ArchSpec,
    pub head_hidden: usize,
}

impl Default for MultitaskSection {
    fn default() -> Self {
        MultitaskSection {
            trunk_arch: ArchSpec::parse("conv 16 4 2 | conv 32 3 1 | dense 192").unwrap(),
            head_hidden: 16,
        }
    }
}

/// Network architectures for teachers and students.
#[derive(Debug, Clone, PartialEq)]
pub struct NetSection {
    pub teacher_arch: ArchSpec,
    /// `None` means "same architecture as the teacher".
    pub student_arch: Option<ArchSpec>,
    pub compress_archs: Vec<ArchSpec>,
}

impl Default for NetSection {
    fn default() -> Self {
        NetSection {
            teacher_arch: ArchSpec::parse("conv 8 4 2 | conv 16 3 1 | dense 64").unwrap(),
            student_arch: None,
            compress_archs: vec![
                ArchSpec::parse("conv 4 4 2 | conv 8 3 1 | dense 24").unwrap(),
                ArchSpec::parse("conv 2 4 2 | conv 4 3 1 | dense 12").unwrap(),
                ArchSpec::parse("conv 2 4 2 | conv 4 3 1 | dense 6").unwrap(),
            ],
        }
    }
}

/// DQN section: the shared knobs plus optional per-game step overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct DqnSection {
    pub base: DqnConfig,
    /// 0 means "use `steps`".
    pub steps_catch: usize,
    pub steps_avoid: usize,
    pub steps_navigate: usize,
}

impl Default for DqnSection {
    fn default() -> Self {
        DqnSection {
            base: DqnConfig::default(),
            steps_catch: 0,
            steps_avoid: 0,
            steps_navigate: 0,
        }
    }
}

impl DqnSection {
    pub fn config_for(&self, game: GameId) -> DqnConfig {
        let steps = match game {
            GameId::Catch => self.steps_catch,
            GameId::Avoid => self.steps_avoid,
            GameId::Navigate => self.steps_navigate,
        };
        let mut cfg = self.base.clone();
        if steps > 0 {
            cfg.steps = steps;
        }
        cfg
    }
}

/// Distillation section: `total_budget = 0` derives the budget as
/// `budget_frac` of the game's teacher env-step budget.
#[derive(Debug, Clone, PartialEq)]
pub struct DistillSection {
    pub base: DistillConfig,
    pub budget_frac: f64,
}

impl Default for DistillSection {
    fn default() -> Self {
        DistillSection {
            base: DistillConfig { total_budget: 0, ..DistillConfig::default() },
            budget_frac: 0.5,
        }
    }
}

impl DistillSection {
    pub fn config_for(&self, teacher_steps: usize) -> DistillConfig {
        let mut cfg = self.base.clone();
        if cfg.total_budget == 0 {
            cfg.total_budget = ((teacher_steps as f64 * self.budget_frac) as usize).max(cfg.refresh_steps);
        }
        cfg
    }
}

/// The fully resolved run description. A run is reconstructible from this
/// plus nothing else.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub games: Vec<GameId>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub net: NetSection,
    pub dqn: DqnSection,
    pub distill: DistillSection,
    pub multitask: MultitaskSection,
    pub eval: EvalSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            preset: Preset::ParamCount,
            games: vec![GameId::Catch, GameId::Avoid, GameId::Navigate],
            seed: 0,
            out_dir: PathBuf::from("pd_out"),
            net: NetSection::default(),
            dqn: DqnSection::default(),
            distill: DistillSection::default(),
            multitask: MultitaskSection::default(),
            eval: EvalSection::default(),
        }
    }
}

fn err(line: usize, msg: impl Into<String>) -> PdError {
    PdError::Config { line, msg: msg.into() }
}

fn parse_u64(line: usize, key: &str, value: &str) -> Result<u64> {
    value
        .parse::<u64>()
        .map_err(|_| err(line, format!("{key}: expected an unsigned integer, got `{value}`")))
}

fn parse_usize(line: usize, key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| err(line, format!("{key}: expected a count, got `{value}`")))
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| err(line, format!("{key}: expected a number, got `{value}`")))
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(err(line, format!("{key}: expected true or false, got `{value}`"))),
    }
}

fn parse_arch(line: usize, key: &str, value: &str) -> Result<ArchSpec> {
    ArchSpec::parse(value).map_err(|e| err(line, format!("{key}: {e}")))
}

fn check_positive_f64(line: usize, key: &str, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(err(line, format!("{key}: must be positive, got {v}")));
    }
    Ok(v)
}

fn check_unit(line: usize, key: &str, v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(err(line, format!("{key}: must lie in [0, 1], got {v}")));
    }
    Ok(v)
}

fn check_positive_usize(line: usize, key: &str, v: usize) -> Result<usize> {
    if v == 0 {
        return Err(err(line, format!("{key}: must be positive")));
    }
    Ok(v)
}

/// Parses a config file. Every key is optional; the result starts from the
/// documented defaults. Unknown sections or keys, malformed values, and
/// out-of-range values are errors carrying the offending line number.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut section = String::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line, "unterminated section header"))?
                .trim();
            match name {
                "run" | "net" | "dqn" | "distill" | "multitask" | "eval" => {
                    section = name.to_string();
                }
                other => return Err(err(line, format!("unknown section `[{other}]`"))),
            }
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        let value = value.trim();
        apply_key(&mut cfg, &section, key, value, line)?;
    }
    Ok(cfg)
}

fn apply_key(cfg: &mut ExperimentConfig, section: &str, key: &str, value: &str, line: usize) -> Result<()> {
    match (section, key) {
        ("run", "preset") => {
            cfg.preset = Preset::parse(value).map_err(|e| err(line, e.to_string()))?;
        }
        ("run", "games") => {
            let mut games = Vec::new();
            for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                games.push(GameId::parse(name).map_err(|e| err(line, e.to_string()))?);
            }
            if games.is_empty() {
                return Err(err(line, "games: list is empty"));
            }
            cfg.games = games;
        }
        ("run", "seed") => cfg.seed = parse_u64(line, key, value)?,
        ("run", "out_dir") => cfg.out_dir = PathBuf::from(value),

        ("net", "teacher_arch") => cfg.net.teacher_arch = parse_arch(line, key, value)?,
        ("net", "student_arch") => {
            cfg.net.student_arch = if value == "same" {
                None
            } else {
                Some(parse_arch(line, key, value)?)
            };
        }
        ("net", "compress_archs") => {
            let mut archs = Vec::new();
            for part in value.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                archs.push(parse_arch(line, key, part)?);
            }
            if archs.is_empty() {
                return Err(err(line, "compress_archs: list is empty"));
            }
            cfg.net.compress_archs = archs;
        }

        ("dqn", "steps") => cfg.dqn.base.steps = check_positive_usize(line, key, parse_usize(line, key, value)?)?,
        ("dqn", "steps_catch") => cfg.dqn.steps_catch = parse_usize(line, key, value)?,
        ("dqn", "steps_avoid") => cfg.dqn.steps_avoid = parse_usize(line, key, value)?,
        ("dqn", "steps_navigate") => cfg.dqn.steps_navigate = parse_usize(line, key, value)?,
        ("dqn", "batch_size") => cfg.dqn.base.batch_size = check_positive_usize(line, key, parse_usize(line, key, value)?)?,
        ("dqn", "learning_rate") => cfg.dqn.base.learning_rate = check_positive_f64(line, key, parse_f64(line, key, value)?)?,
        ("dqn", "discount") => {
            let v = parse_f64(line, key, value)?;
            if !(v > 0.0 && v <= 1.0) {
                return Err(err(line, format!("discount: must lie in (0, 1], got {v}")));
            }
            cfg.dqn.base.discount = v;
        }
        ("dqn", "memory_capacity") => cfg.dqn.base.memory_capacity = check_positive_usize(line, key, parse_usize(line, key, value)?)?,
        ("dqn", "min_history") => cfg.dqn.base.min_history = parse_usize(line, key, value)?,
        ("dqn", "update_every") => cfg.dqn.base.update_every = check_positive_usize(line, key, parse_usize(line, key, value)?)?,
        ("dqn", "sync_every") => cfg.dqn.base.sync_every = check_positive_usize(line, key, parse_usize(line, key, value)?)?,
        ("dqn", "eps_start") => cfg.dqn.base.eps_start = check_unit(line, key, parse_f64(line, key, value)?)?,
        ("dqn", "eps_final") => cfg.dqn.base.eps_final = check_unit(line, key, parse_f64(line, key, value)?)?,
        ("dqn", "eps_anneal_frac") => cfg.dqn.base.eps_anneal_frac = check_unit(line, key, parse_f64(line, key, value)?)?,
        ("dqn", "rmsprop_epsilon") => cfg.dqn.base.rmsprop_epsilon = check_positive_f64(line, key, parse_f64(line, key, value)?)?,
        ("dqn", "eval_every") => cfg.dqn.base.eval_every = check_positive_usize(line, key, parse_usize(line, key, value)?)?,
        ("dqn", "eval_episodes") => cfg.dqn.base.eval_episodes = check_positive_usize(line, key, parse_usize(line, key, value)?)?,
        ("dqn", "eval_epsilon") => cfg.dqn.base.eval_epsilon = check_unit(line, key, parse_f64(line, key, value)?)?,
        ("dqn", "max_nullops") => cfg.dqn.base.max_nullops = parse_usize(line, key, value)?,

        ("distill", "loss") => {
            cfg.distill.base.loss_kind = LossKind::parse(value).map_err(|e| err(line, e.to_string()))?;
        }
        ("distill", "tau") => cfg.distill.base.tau = check_positive_f64(line, key, parse_f64(line, key, value)?)?,
        ("distill", "refresh_steps") => cfg.distill.base.refresh_steps = check_positive_usize(line, key, parse_usize(line, key, value)?)?,
        ("distill", "updates_per_refresh") => cfg.distill.base.updates_per_refresh = parse_usize(line, key, value)?,
        ("distill", "batch_size") => cfg.distill.base.batch_size = check_positive_usize(line, key, parse_usize(line, key, value)?)?,
        ("distill", "learning_rate") => cfg.distill.base.learning_rate = check_positive_f64(line, key, parse_f64(line, key, value)?)?,
        ("distill", "buffer_capacity") => cfg.distill.base.buffer_capacity = check_positive_usize(line, key, parse_usize(line, key, value)?)?,
        ("distill", "total_budget") => cfg.distill.base.total_budget = parse_usize(line, key, value)?,
        ("distill", "budget_frac") => cfg.distill.budget_frac = check_unit(line, key, parse_f64(line, key, value)?)?,
        ("distill", "data_epsilon") => cfg.distill.base.data_epsilon = check_unit(line, key, parse_f64(line, key, value)?)?,
        ("distill", "max_nullops") => cfg.distill.base.max_nullops = parse_usize(line, key, value)?,
        ("distill", "eval_episodes") => cfg.distill.base.eval_episodes = check_positive_usize(line, key, parse_usize(line, key, value)?)?,
        ("distill", "eval_epsilon") => cfg.distill.base.eval_epsilon = check_unit(line, key, parse_f64(line, key, value)?)?,
        ("distill", "probe_samples") => cfg.distill.base.probe_samples = check_positive_usize(line, key, parse_usize(line, key, value)?)?,

        ("multitask", "trunk_arch") => cfg.multitask.trunk_arch = parse_arch(line, key, value)?,
        ("multitask", "head_hidden") => cfg.multitask.head_hidden = check_positive_usize(line, key, parse_usize(line, key, value)?)?,

        ("eval", "pool_size") => cfg.eval.pool_size = check_positive_usize(line, key, parse_usize(line, key, value)?)?,
        ("eval", "epsilon") => cfg.eval.epsilon = check_unit(line, key, parse_f64(line, key, value)?)?,
        ("eval", "parallel") => cfg.eval.parallel = parse_bool(line, key, value)?,
        ("eval", "export_activations") => {
            cfg.eval.export_activations = if value == "none" {
                None
            } else {
                Some(LayerSelector::parse(value).map_err(|e| err(line, e.to_string()))?)
            };
        }
        ("eval", "checkpoint") => {
            cfg.eval.checkpoint = if value == "none" { None } else { Some(PathBuf::from(value)) };
        }

        ("", _) => return Err(err(line, format!("key `{key}` appears before any [section]"))),
        (section, key) => {
            return Err(err(line, format!("unknown key `{key}` in section [{section}]")));
        }
    }
    Ok(())
}

/// Canonical text form; `parse_config(serialize_config(c)) == c`.
pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let push = |out: &mut String, s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    push(&mut out, "[run]".into());
    push(&mut out, format!("preset = {}", cfg.preset.name()));
    push(
        &mut out,
        format!(
            "games = {}",
            cfg.games.iter().map(|g| g.name()).collect::<Vec<_>>().join(",")
        ),
    );
    push(&mut out, format!("seed = {}", cfg.seed));
    push(&mut out, format!("out_dir = {}", cfg.out_dir.display()));

    push(&mut out, "\n[net]".into());
    push(&mut out, format!("teacher_arch = {}", cfg.net.teacher_arch.render()));
    push(
        &mut out,
        format!(
            "student_arch = {}",
            cfg.net.student_arch.as_ref().map_or("same".to_string(), ArchSpec::render)
        ),
    );
    push(
        &mut out,
        format!(
            "compress_archs = {}",
            cfg.net
                .compress_archs
                .iter()
                .map(ArchSpec::render)
                .collect::<Vec<_>>()
                .join(" ; ")
        ),
    );

    let d = &cfg.dqn.base;
    push(&mut out, "\n[dqn]".into());
    push(&mut out, format!("steps = {}", d.steps));
    push(&mut out, format!("steps_catch = {}", cfg.dqn.steps_catch));
    push(&mut out, format!("steps_avoid = {}", cfg.dqn.steps_avoid));
    push(&mut out, format!("steps_navigate = {}", cfg.dqn.steps_navigate));
    push(&mut out, format!("batch_size = {}", d.batch_size));
    push(&mut out, format!("learning_rate = {:?}", d.learning_rate));
    push(&mut out, format!("discount = {:?}", d.discount));
    push(&mut out, format!("memory_capacity = {}", d.memory_capacity));
    push(&mut out, format!("min_history = {}", d.min_history));
    push(&mut out, format!("update_every = {}", d.update_every));
    push(&mut out, format!("sync_every = {}", d.sync_every));
    push(&mut out, format!("eps_start = {:?}", d.eps_start));
    push(&mut out, format!("eps_final = {:?}", d.eps_final));
    push(&mut out, format!("eps_anneal_frac = {:?}", d.eps_anneal_frac));
    push(&mut out, format!("rmsprop_epsilon = {:?}", d.rmsprop_epsilon));
    push(&mut out, format!("eval_every = {}", d.eval_every));
    push(&mut out, format!("eval_episodes = {}", d.eval_episodes));
    push(&mut out, format!("eval_epsilon = {:?}", d.eval_epsilon));
    push(&mut out, format!("max_nullops = {}", d.max_nullops));

    let s = &cfg.distill.base;
    push(&mut out, "\n[distill]".into());
    push(&mut out, format!("loss = {}", s.loss_kind.name()));
    push(&mut out, format!("tau = {:?}", s.tau));
    push(&mut out, format!("refresh_steps = {}", s.refresh_steps));
    push(&mut out, format!("updates_per_refresh = {}", s.updates_per_refresh));
    push(&mut out, format!("batch_size = {}", s.batch_size));
    push(&mut out, format!("learning_rate = {:?}", s.learning_rate));
    push(&mut out, format!("buffer_capacity = {}", s.buffer_capacity));
    push(&mut out, format!("total_budget = {}", s.total_budget));
    push(&mut out, format!("budget_frac = {:?}", cfg.distill.budget_frac));
    push(&mut out, format!("data_epsilon = {:?}", s.data_epsilon));
    push(&mut out, format!("max_nullops = {}", s.max_nullops));
    push(&mut out, format!("eval_episodes = {}", s.eval_episodes));
    push(&mut out, format!("eval_epsilon = {:?}", s.eval_epsilon));
    push(&mut out, format!("probe_samples = {}", s.probe_samples));

    push(&mut out, "\n[multitask]".into());
    push(&mut out, format!("trunk_arch = {}", cfg.multitask.trunk_arch.render()));
    push(&mut out, format!("head_hidden = {}", cfg.multitask.head_hidden));

    push(&mut out, "\n[eval]".into());
    push(&mut out, format!("pool_size = {}", cfg.eval.pool_size));
    push(&mut out, format!("epsilon = {:?}", cfg.eval.epsilon));
    push(&mut out, format!("parallel = {}", cfg.eval.parallel));
    push(
        &mut out,
        format!(
            "export_activations = {}",
            match cfg.eval.export_activations {
                None => "none",
                Some(LayerSelector::FirstConv) => "first_conv",
                Some(LayerSelector::LastDense) => "last_dense",
            }
        ),
    );
    push(
        &mut out,
        format!(
            "checkpoint = {}",
            cfg.eval
                .checkpoint
                .as_ref()
                .map_or("none".to_string(), |p| p.display().to_string())
        ),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        let cfg = parse_config("# just a comment\n\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn negative_tau_is_a_range_error_naming_the_key_and_line() {
        let text = "[distill]\ntau = -1\n";
        match parse_config(text) {
            Err(PdError::Config { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("tau"), "msg: {msg}");
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_and_section_are_rejected_with_lines() {
        match parse_config("[dqn]\nsteps = 10\nwibble = 3\n") {
            Err(PdError::Config { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("wibble"));
            }
            other => panic!("{other:?}"),
        }
        match parse_config("[warp]\n") {
            Err(PdError::Config { line, msg }) => {
                assert_eq!(line, 1);
                assert!(msg.contains("warp"));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_config("loose = 1\n").is_err());
    }

    #[test]
    fn type_mismatches_are_rejected() {
        assert!(parse_config("[dqn]\nsteps = soon\n").is_err());
        assert!(parse_config("[run]\nseed = -4\n").is_err());
        assert!(parse_config("[eval]\nparallel = maybe\n").is_err());
        assert!(parse_config("[run]\ngames = catch,pong\n").is_err());
    }

    #[test]
    fn round_trips_default_and_modified_configs() {
        let cfg = ExperimentConfig::default();
        assert_eq!(parse_config(&serialize_config(&cfg)).unwrap(), cfg);

        let mut cfg = ExperimentConfig::default();
        cfg.preset = Preset::LossCompare;
        cfg.seed = 98765;
        cfg.games = vec![GameId::Navigate];
        cfg.dqn.base.learning_rate = 3.25e-4;
        cfg.dqn.steps_navigate = 44_000;
        cfg.distill.base.loss_kind = LossKind::Nll;
        cfg.distill.base.tau = 0.1;
        cfg.net.student_arch = Some(ArchSpec::parse("dense 32 | dense 16").unwrap());
        cfg.eval.export_activations = Some(LayerSelector::LastDense);
        cfg.eval.checkpoint = Some(PathBuf::from("runs/teacher_catch.ckpt"));
        assert_eq!(parse_config(&serialize_config(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn arch_spec_parses_and_renders() {
        let a = ArchSpec::parse("conv 8 4 2 | conv 16 3 1 | dense 64").unwrap();
        assert_eq!(a.conv.len(), 2);
        assert_eq!(a.dense, vec![64]);
        assert_eq!(a.render(), "conv 8 4 2 | conv 16 3 1 | dense 64");
        assert!(ArchSpec::parse("dense 10 | conv 4 3 1").is_err());
        assert!(ArchSpec::parse("conv 8 4").is_err());
        assert!(ArchSpec::parse("").is_err());
        let spec = a.build(GameId::Catch);
        assert_eq!(spec.output_units, 3);
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(Preset::parse(p.name()).unwrap(), p);
        }
        assert!(Preset::parse("warp-speed").is_err());
    }
}
