//! Preset implementations: each maps one experiment family onto the library
//! and writes its artifacts under the configured output directory.

use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{ExperimentConfig, Preset};
use crate::csvw::{Cell, Table};
use crate::distill::{compression_study, train_student, DistillCurveRow, LossKind};
use crate::dqn::{train_dqn, CurveRow, DqnAgent};
use crate::envs::GameId;
use crate::eval::{
    build_start_pool, evaluate, evaluate_parallel, export_activations, relative_score,
    write_report_csv, EvalOutcome, ReportRow, StartStatePool,
};
use crate::multitask::{
    multitask_distill, multitask_dqn, MultiTaskNetwork, MultiTaskPolicy, MultiTaskSpec,
    MultiTaskStudent,
};
use crate::nn::{count_parameters, load_checkpoint, save_checkpoint, NetworkSpec};
use crate::online::online_distill;
use crate::policy::{NetPolicy, Policy, ScriptedPolicy};
use crate::rng::SeedTree;
use crate::{PdError, Result};

/// Where a run left its artifacts.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub run_id: String,
}

/// Executes the configured preset. Every artifact lands inside
/// `config.out_dir`; reruns with the same config and seed produce
/// byte-identical CSVs.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    let started = Instant::now();
    std::fs::create_dir_all(&config.out_dir)?;
    let resolved = super::config::serialize_config(config);
    let run_id = {
        let mut hasher = Sha256::new();
        hasher.update(resolved.as_bytes());
        let digest = hasher.finalize();
        hex_prefix(&digest, 12)
    };
    std::fs::write(config.out_dir.join("config.resolved.ini"), &resolved)?;

    let seeds = SeedTree::new(config.seed);
    match config.preset {
        Preset::TrainTeacher => run_train_teacher(config, &seeds)?,
        Preset::LossCompare => run_loss_compare(config, &seeds)?,
        Preset::Compress => run_compress(config, &seeds)?,
        Preset::MultiDistill => run_multi_distill(config, &seeds)?,
        Preset::MultiDqn => run_multi_dqn(config, &seeds)?,
        Preset::Online => run_online(config, &seeds)?,
        Preset::EvalOnly => run_eval_only(config, &seeds)?,
        Preset::ParamCount => run_param_count(config)?,
    }

    let manifest = format!(
        "run_id = {run_id}\npreset = {}\nseed = {}\nconfig = config.resolved.ini\nwall_time_ms = {}\n",
        config.preset.name(),
        config.seed,
        started.elapsed().as_millis()
    );
    std::fs::write(config.out_dir.join("manifest.txt"), manifest)?;
    Ok(RunOutput { out_dir: config.out_dir.clone(), run_id })
}

fn hex_prefix(bytes: &[u8], chars: usize) -> String {
    let mut out = String::with_capacity(chars);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
        if out.len() >= chars {
            break;
        }
    }
    out.truncate(chars);
    out
}

fn teacher_subtree(seeds: &SeedTree, game: GameId) -> SeedTree {
    seeds.subtree("teacher", game as u64)
}

/// Trains one teacher per game with the per-game step budget.
fn train_teacher_for(config: &ExperimentConfig, seeds: &SeedTree, game: GameId) -> Result<(DqnAgent, Vec<CurveRow>)> {
    let spec = config.net.teacher_arch.build(game);
    let dqn_cfg = config.dqn.config_for(game);
    train_dqn(game, &spec, &dqn_cfg, &teacher_subtree(seeds, game))
}

fn build_pool(config: &ExperimentConfig, seeds: &SeedTree, game: GameId) -> Result<StartStatePool> {
    let reference = ScriptedPolicy::for_game(game);
    let mut rng = seeds.rng("pool", game as u64);
    build_start_pool(game, &reference, config.eval.pool_size, &mut rng)
}

fn eval_policy(
    config: &ExperimentConfig,
    policy: &(dyn Policy + Sync),
    pool: &StartStatePool,
    salt: u64,
) -> Result<EvalOutcome> {
    if config.eval.parallel {
        evaluate_parallel(policy, pool, config.eval.epsilon, salt)
    } else {
        evaluate(policy, pool, config.eval.epsilon, salt)
    }
}

fn write_dqn_curve(rows: &[CurveRow], path: &Path) -> Result<()> {
    let mut table = Table::new(["env_steps", "updates", "eval_score_mean", "eval_score_std", "epsilon"]);
    for r in rows {
        table.push(vec![
            Cell::UInt(r.env_steps as u64),
            Cell::UInt(r.updates as u64),
            Cell::Fixed(r.eval_score_mean, 6),
            Cell::Fixed(r.eval_score_std, 6),
            Cell::Fixed(r.epsilon, 6),
        ]);
    }
    table.write(path)
}

fn write_distill_curve(rows: &[DistillCurveRow], path: &Path, with_task: bool) -> Result<()> {
    let header: Vec<&str> = if with_task {
        vec!["task", "teacher_steps_consumed", "updates", "loss_mean", "eval_score", "argmax_agreement"]
    } else {
        vec!["teacher_steps_consumed", "updates", "loss_mean", "eval_score", "argmax_agreement"]
    };
    let mut table = Table::new(header);
    for r in rows {
        let mut row = Vec::new();
        if with_task {
            row.push(Cell::UInt(r.task as u64));
        }
        row.extend([
            Cell::UInt(r.teacher_steps_consumed as u64),
            Cell::UInt(r.updates as u64),
            Cell::Fixed(r.loss_mean, 8),
            Cell::Fixed(r.eval_score, 6),
            Cell::Fixed(r.argmax_agreement, 4),
        ]);
        table.push(row);
    }
    table.write(path)
}

fn run_train_teacher(config: &ExperimentConfig, seeds: &SeedTree) -> Result<()> {
    let mut report = Vec::new();
    for &game in &config.games {
        let (agent, curve) = train_teacher_for(config, seeds, game)?;
        write_dqn_curve(&curve, &config.out_dir.join(format!("dqn_curve_{}.csv", game.name())))?;
        save_checkpoint(
            &config.out_dir.join(format!("teacher_{}.ckpt", game.name())),
            &agent.spec,
            &agent.params,
        )?;
        let pool = build_pool(config, seeds, game)?;
        let scripted = ScriptedPolicy::for_game(game);
        let scripted_score = eval_policy(config, &scripted, &pool, 1)?.mean;
        let policy = NetPolicy { spec: &agent.spec, params: &agent.params };
        let score = eval_policy(config, &policy, &pool, 2)?.mean;
        report.push(ReportRow {
            experiment_id: "train-teacher".into(),
            task_id: game.name().into(),
            score,
            teacher_score: scripted_score,
            relative_pct: relative_score(score, scripted_score).ok(),
        });
    }
    write_report_csv(&report, &config.out_dir.join("eval_report.csv"))
}

fn run_loss_compare(config: &ExperimentConfig, seeds: &SeedTree) -> Result<()> {
    let mut table = Table::new(["game", "loss", "student_score", "teacher_score", "relative_pct"]);
    for &game in &config.games {
        let (teacher, _) = train_teacher_for(config, seeds, game)?;
        let pool = build_pool(config, seeds, game)?;
        let teacher_policy = NetPolicy { spec: &teacher.spec, params: &teacher.params };
        let teacher_score = eval_policy(config, &teacher_policy, &pool, 2)?.mean;
        let student_arch = config.net.student_arch.as_ref().unwrap_or(&config.net.teacher_arch);
        let student_spec = student_arch.build(game);
        for loss in LossKind::ALL {
            let dqn_cfg = config.dqn.config_for(game);
            let mut dcfg = config.distill.config_for(dqn_cfg.steps);
            dcfg.loss_kind = loss;
            let sub = seeds.subtree("distill", game as u64 * 8 + loss as u64);
            let (student, curve) = train_student(&teacher, game, &student_spec, &dcfg, &sub)?;
            write_distill_curve(
                &curve,
                &config.out_dir.join(format!("distill_{}_{}.csv", game.name(), loss.name())),
                false,
            )?;
            save_checkpoint(
                &config.out_dir.join(format!("student_{}_{}.ckpt", game.name(), loss.name())),
                &student.spec,
                &student.params,
            )?;
            let policy = NetPolicy { spec: &student.spec, params: &student.params };
            let score = eval_policy(config, &policy, &pool, 3 + loss as u64)?.mean;
            table.push(vec![
                Cell::Str(game.name().into()),
                Cell::Str(loss.name().into()),
                Cell::Fixed(score, 6),
                Cell::Fixed(teacher_score, 6),
                Cell::Fixed(relative_score(score, teacher_score)?, 1),
            ]);
        }
    }
    table.write(&config.out_dir.join("loss_compare.csv"))
}

fn run_compress(config: &ExperimentConfig, seeds: &SeedTree) -> Result<()> {
    for &game in &config.games {
        let (teacher, _) = train_teacher_for(config, seeds, game)?;
        let pool = build_pool(config, seeds, game)?;
        let teacher_policy = NetPolicy { spec: &teacher.spec, params: &teacher.params };
        let teacher_score = eval_policy(config, &teacher_policy, &pool, 2)?.mean;
        let scale_set: Vec<(String, NetworkSpec)> = config
            .net
            .compress_archs
            .iter()
            .map(|arch| (arch.render(), arch.build(game)))
            .collect();
        let dqn_cfg = config.dqn.config_for(game);
        let dcfg = config.distill.config_for(dqn_cfg.steps);
        let sub = seeds.subtree("compress", game as u64);
        let (rows, students) =
            compression_study(&teacher, game, &scale_set, &dcfg, &pool, teacher_score, &sub)?;
        let mut table = Table::new([
            "arch",
            "student_params",
            "teacher_params",
            "param_ratio_pct",
            "student_score",
            "teacher_score",
            "relative_pct",
        ]);
        for (i, row) in rows.iter().enumerate() {
            table.push(vec![
                Cell::Str(row.label.clone()),
                Cell::UInt(row.student_params as u64),
                Cell::UInt(row.teacher_params as u64),
                Cell::Fixed(row.param_ratio_pct, 1),
                Cell::Fixed(row.student_score, 6),
                Cell::Fixed(row.teacher_score, 6),
                Cell::Fixed(row.relative_pct, 1),
            ]);
            save_checkpoint(
                &config.out_dir.join(format!("compress_{}_s{}.ckpt", game.name(), i)),
                &students[i].spec,
                &students[i].params,
            )?;
        }
        table.write(&config.out_dir.join(format!("compress_{}.csv", game.name())))?;
    }
    Ok(())
}

fn multitask_spec_for(config: &ExperimentConfig) -> MultiTaskSpec {
    MultiTaskSpec {
        input_channels: crate::envs::STACK,
        input_height: crate::envs::FRAME,
        input_width: crate::envs::FRAME,
        conv_layers: config.multitask.trunk_arch.conv.clone(),
        trunk_dense: config.multitask.trunk_arch.dense.clone(),
        head_hidden: config.multitask.head_hidden,
        action_counts: config.games.iter().map(|g| g.action_count()).collect(),
    }
}

fn multitask_report(
    config: &ExperimentConfig,
    seeds: &SeedTree,
    experiment_id: &str,
    teachers: &[DqnAgent],
    net: &MultiTaskNetwork,
) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for (task, &game) in config.games.iter().enumerate() {
        let pool = build_pool(config, seeds, game)?;
        let teacher = &teachers[task];
        let teacher_policy = NetPolicy { spec: &teacher.spec, params: &teacher.params };
        let teacher_score = eval_policy(config, &teacher_policy, &pool, 2)?.mean;
        let policy = MultiTaskPolicy { net, task };
        let score = eval_policy(config, &policy, &pool, 40 + task as u64)?.mean;
        rows.push(ReportRow {
            experiment_id: experiment_id.into(),
            task_id: game.name().into(),
            score,
            teacher_score,
            relative_pct: relative_score(score, teacher_score).ok(),
        });
    }
    Ok(rows)
}

fn run_multi_distill(config: &ExperimentConfig, seeds: &SeedTree) -> Result<()> {
    let mut teachers = Vec::new();
    let mut teacher_steps = 0usize;
    for &game in &config.games {
        teachers.push(train_teacher_for(config, seeds, game)?.0);
        teacher_steps += config.dqn.config_for(game).steps;
    }
    let spec = multitask_spec_for(config);
    let dcfg = config.distill.config_for(teacher_steps);
    let net = MultiTaskNetwork::init(spec, seeds.seed("mt-init", 0))?;
    let mut student = MultiTaskStudent::new(net, dcfg.learning_rate);
    let sub = seeds.subtree("mt-distill", 0);
    let curve = multitask_distill(&teachers, &config.games, &mut student, &dcfg, &sub)?;
    write_distill_curve(&curve, &config.out_dir.join("multitask_distill_curve.csv"), true)?;
    for (task, &game) in config.games.iter().enumerate() {
        let (spec, params) = student.net.flatten_task(task)?;
        save_checkpoint(
            &config.out_dir.join(format!("multitask_head_{}.ckpt", game.name())),
            &spec,
            &params,
        )?;
    }
    let rows = multitask_report(config, seeds, "multi-distill", &teachers, &student.net)?;
    write_report_csv(&rows, &config.out_dir.join("multitask_report.csv"))
}

fn run_multi_dqn(config: &ExperimentConfig, seeds: &SeedTree) -> Result<()> {
    // Reference teachers for relative scores (same subtrees as the
    // distillation preset, so both runs compare against identical teachers).
    let mut teachers = Vec::new();
    for &game in &config.games {
        teachers.push(train_teacher_for(config, seeds, game)?.0);
    }
    let spec = multitask_spec_for(config);
    let net = MultiTaskNetwork::init(spec, seeds.seed("mt-init", 0))?;
    // `steps` is the total multi-task env budget, shared across tasks.
    let dqn_cfg = config.dqn.base.clone();
    let mut student = MultiTaskStudent::new(net, dqn_cfg.learning_rate);
    let sub = seeds.subtree("mt-dqn", 0);
    let curve = multitask_dqn(&config.games, &mut student, &dqn_cfg, &sub)?;
    let mut table = Table::new(["env_steps", "task", "updates", "eval_score_mean", "eval_score_std", "epsilon"]);
    for r in &curve {
        table.push(vec![
            Cell::UInt(r.env_steps as u64),
            Cell::UInt(r.task as u64),
            Cell::UInt(r.updates as u64),
            Cell::Fixed(r.eval_score_mean, 6),
            Cell::Fixed(r.eval_score_std, 6),
            Cell::Fixed(r.epsilon, 6),
        ]);
    }
    table.write(&config.out_dir.join("multitask_dqn_curve.csv"))?;
    for (task, &game) in config.games.iter().enumerate() {
        let (spec, params) = student.net.flatten_task(task)?;
        save_checkpoint(
            &config.out_dir.join(format!("multitask_dqn_head_{}.ckpt", game.name())),
            &spec,
            &params,
        )?;
    }
    let rows = multitask_report(config, seeds, "multi-dqn", &teachers, &student.net)?;
    write_report_csv(&rows, &config.out_dir.join("multitask_report.csv"))
}

fn run_online(config: &ExperimentConfig, seeds: &SeedTree) -> Result<()> {
    for &game in &config.games {
        let teacher_spec = config.net.teacher_arch.build(game);
        let student_arch = config.net.student_arch.as_ref().unwrap_or(&config.net.teacher_arch);
        let student_spec = student_arch.build(game);
        let dqn_cfg = config.dqn.config_for(game);
        let mut dcfg = config.distill.config_for(dqn_cfg.steps);
        dcfg.loss_kind = config.distill.base.loss_kind;
        let sub = seeds.subtree("online", game as u64);
        let outcome = online_distill(game, &teacher_spec, &student_spec, &dqn_cfg, &dcfg, &sub)?;
        let mut table = Table::new(["env_steps", "dqn_eval", "best_so_far", "student_eval", "snapshot_event"]);
        for r in &outcome.rows {
            table.push(vec![
                Cell::UInt(r.env_steps as u64),
                Cell::Fixed(r.dqn_eval, 6),
                Cell::Fixed(r.best_so_far, 6),
                Cell::Fixed(r.student_eval, 6),
                Cell::UInt(r.snapshot_event as u64),
            ]);
        }
        table.write(&config.out_dir.join(format!("online_{}.csv", game.name())))?;
        if let Some(best) = &outcome.tracker.best_snapshot {
            save_checkpoint(
                &config.out_dir.join(format!("online_best_{}.ckpt", game.name())),
                &outcome.agent.spec,
                best,
            )?;
        }
        save_checkpoint(
            &config.out_dir.join(format!("online_student_{}.ckpt", game.name())),
            &outcome.student.spec,
            &outcome.student.params,
        )?;
    }
    Ok(())
}

fn run_eval_only(config: &ExperimentConfig, seeds: &SeedTree) -> Result<()> {
    let path = config.eval.checkpoint.as_ref().ok_or_else(|| {
        PdError::InvalidArgument("eval-only requires [eval] checkpoint = <path>".into())
    })?;
    let (spec, params) = load_checkpoint(path)?;
    let game = *config.games.first().ok_or_else(|| PdError::InvalidArgument("no game configured".into()))?;
    if spec.output_units != game.action_count() {
        return Err(PdError::Eval(format!(
            "checkpoint has {} outputs, {} needs {}",
            spec.output_units,
            game.name(),
            game.action_count()
        )));
    }
    let pool = build_pool(config, seeds, game)?;
    let scripted = ScriptedPolicy::for_game(game);
    let reference_score = eval_policy(config, &scripted, &pool, 1)?.mean;
    let policy = NetPolicy { spec: &spec, params: &params };
    let score = eval_policy(config, &policy, &pool, 2)?.mean;
    let rows = vec![ReportRow {
        experiment_id: "eval-only".into(),
        task_id: game.name().into(),
        score,
        teacher_score: reference_score,
        relative_pct: relative_score(score, reference_score).ok(),
    }];
    write_report_csv(&rows, &config.out_dir.join("eval_report.csv"))?;

    if let Some(selector) = config.eval.export_activations {
        let samples: Vec<(String, crate::envs::ObservationStack)> = pool
            .entries
            .iter()
            .map(|e| {
                (
                    game.name().to_string(),
                    crate::envs::ObservationStack::from_initial(&e.state.observe()),
                )
            })
            .collect();
        let table = export_activations(&spec, &params, &samples, selector)?;
        table.write(&config.out_dir.join("activations.csv"))?;
    }
    Ok(())
}

/// The four published single-task architectures (18-action output) whose
/// parameter counts anchor the counting oracle.
pub fn published_architectures() -> Vec<(&'static str, NetworkSpec, usize)> {
    let make = |convs: [(usize, usize, usize); 3], dense: usize| NetworkSpec {
        input_channels: 4,
        input_height: 84,
        input_width: 84,
        conv_layers: convs
            .iter()
            .map(|&(f, k, s)| crate::nn::ConvSpec { filters: f, kernel: k, stride: s })
            .collect(),
        dense_layers: vec![dense],
        output_units: 18,
    };
    vec![
        ("teacher", make([(32, 8, 4), (64, 4, 2), (64, 3, 1)], 512), 1_693_362),
        ("student-quarter", make([(16, 8, 4), (32, 4, 2), (32, 3, 1)], 256), 427_874),
        ("student-7pct", make([(16, 8, 4), (16, 4, 2), (16, 3, 1)], 128), 113_346),
        ("student-4pct", make([(16, 8, 4), (16, 4, 2), (16, 3, 1)], 64), 61_954),
    ]
}

fn run_param_count(config: &ExperimentConfig) -> Result<()> {
    let mut table = Table::new(["label", "parameters"]);
    for (label, spec, _) in published_architectures() {
        let count = count_parameters(&spec)?;
        println!("{label}: {count} parameters");
        table.push(vec![Cell::Str(label.into()), Cell::UInt(count as u64)]);
    }
    table.write(&config.out_dir.join("param_counts.csv"))
}
