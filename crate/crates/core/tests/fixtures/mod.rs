//! Published benchmark score tables used as arithmetic oracles: per-game
//! reference (teacher) scores, per-agent raw scores with their printed
//! relative percentages, and printed geometric means where the source table
//! reports one.

pub struct ScoreColumn {
    pub name: &'static str,
    /// (raw score, printed percent-of-teacher) per game, in table order.
    pub entries: &'static [(f64, f64)],
    pub printed_geometric_mean: Option<f64>,
}

pub struct ScoreTable {
    pub name: &'static str,
    pub games: &'static [&'static str],
    pub teacher_scores: &'static [f64],
    pub columns: Vec<ScoreColumn>,
}

/// Loss-function comparison over four games (same architecture students).
fn loss_comparison() -> ScoreTable {
    ScoreTable {
        name: "loss-comparison",
        games: &["Breakout", "Freeway", "Pong", "Q*bert"],
        teacher_scores: &[303.9, 25.8, 16.2, 4589.8],
        columns: vec![
            ScoreColumn {
                name: "mse",
                entries: &[(102.9, 33.9), (25.7, 99.4), (15.3, 94.4), (5607.3, 122.2)],
                printed_geometric_mean: None,
            },
            ScoreColumn {
                name: "nll",
                entries: &[(235.9, 77.6), (26.2, 101.4), (15.4, 94.9), (6773.5, 147.6)],
                printed_geometric_mean: None,
            },
            ScoreColumn {
                name: "kl",
                entries: &[(287.8, 94.7), (26.7, 103.5), (16.3, 100.9), (7112.8, 155.0)],
                printed_geometric_mean: None,
            },
        ],
    }
}

/// Ten-game multi-task distillation (4x network).
fn ten_game_multitask() -> ScoreTable {
    ScoreTable {
        name: "ten-game-multitask",
        games: &[
            "Beamrider",
            "Breakout",
            "Enduro",
            "Freeway",
            "Ms.Pacman",
            "Pong",
            "Q*bert",
            "Seaquest",
            "Space Invaders",
            "Riverraid",
        ],
        teacher_scores: &[
            8672.4, 303.9, 475.6, 25.8, 763.5, 16.2, 4589.8, 2793.3, 1449.7, 4065.3,
        ],
        columns: vec![ScoreColumn {
            name: "multi-dist-kl",
            entries: &[
                (4789.0, 55.2),
                (216.0, 71.1),
                (613.0, 128.9),
                (26.6, 102.9),
                (681.8, 89.3),
                (16.1, 99.6),
                (6098.3, 132.9),
                (4320.7, 154.7),
                (461.1, 31.8),
                (4326.8, 106.4),
            ],
            printed_geometric_mean: Some(89.3),
        }],
    }
}

/// Single-task compression over ten games, three student sizes.
fn compression() -> ScoreTable {
    ScoreTable {
        name: "compression",
        games: &[
            "Beamrider",
            "Breakout",
            "Enduro",
            "Freeway",
            "Ms.Pacman",
            "Pong",
            "Q*bert",
            "Riverraid",
            "Seaquest",
            "Space Invaders",
        ],
        teacher_scores: &[
            8672.4, 303.9, 475.6, 25.8, 763.5, 16.2, 4589.8, 4065.3, 2793.3, 1449.7,
        ],
        columns: vec![
            ScoreColumn {
                name: "net1",
                entries: &[
                    (7552.8, 87.1),
                    (321.0, 105.6),
                    (677.9, 142.5),
                    (26.7, 103.5),
                    (782.5, 102.5),
                    (16.3, 100.6),
                    (5947.3, 129.6),
                    (4442.7, 109.3),
                    (3986.6, 142.7),
                    (1140.0, 78.6),
                ],
                printed_geometric_mean: Some(108.3),
            },
            ScoreColumn {
                name: "net2",
                entries: &[
                    (7393.3, 85.3),
                    (298.2, 98.1),
                    (672.2, 141.3),
                    (26.7, 103.5),
                    (659.9, 86.4),
                    (16.8, 103.7),
                    (5994.0, 130.6),
                    (4175.3, 102.7),
                    (4567.1, 163.5),
                    (716.1, 49.4),
                ],
                printed_geometric_mean: Some(101.7),
            },
            ScoreColumn {
                name: "net3",
                entries: &[
                    (6521.2, 75.2),
                    (238.8, 78.6),
                    (556.7, 117.1),
                    (26.7, 103.5),
                    (734.3, 96.2),
                    (15.7, 96.9),
                    (4952.3, 107.9),
                    (3417.9, 84.1),
                    (3838.3, 137.4),
                    (302.3, 20.9),
                ],
                printed_geometric_mean: Some(83.9),
            },
        ],
    }
}

/// Three-game multi-task agents (DQN baseline vs distillation).
fn three_game_multitask() -> ScoreTable {
    ScoreTable {
        name: "three-game-multitask",
        games: &["Freeway", "Pong", "Q*bert"],
        teacher_scores: &[25.8, 16.2, 4589.8],
        columns: vec![
            ScoreColumn {
                name: "multi-dqn",
                entries: &[(23.3, 90.3), (12.0, 74.1), (3987.3, 86.9)],
                printed_geometric_mean: Some(83.5),
            },
            ScoreColumn {
                name: "multi-dist-nll",
                entries: &[(26.5, 102.7), (14.8, 91.4), (5678.0, 123.7)],
                printed_geometric_mean: Some(105.1),
            },
            ScoreColumn {
                name: "multi-dist-kl",
                entries: &[(26.3, 102.0), (16.9, 104.4), (6890.3, 150.1)],
                printed_geometric_mean: Some(116.9),
            },
        ],
    }
}

pub fn all_tables() -> Vec<ScoreTable> {
    vec![
        loss_comparison(),
        ten_game_multitask(),
        compression(),
        three_game_multitask(),
    ]
}
