//! Writes seed inputs for the fuzz targets into fuzz/corpus/.

use pd_core::harness::{serialize_config, ExperimentConfig};
use pd_core::nn::{init_parameters, write_checkpoint_bytes, ConvSpec, NetworkSpec};

fn main() {
    let spec = NetworkSpec {
        input_channels: 4,
        input_height: 12,
        input_width: 12,
        conv_layers: vec![ConvSpec { filters: 2, kernel: 3, stride: 2 }],
        dense_layers: vec![4],
        output_units: 3,
    };
    let params = init_parameters(&spec, 1).unwrap();
    std::fs::write(
        "fuzz/corpus/checkpoint_decode/small_conv.ckpt",
        write_checkpoint_bytes(&spec, &params).unwrap(),
    )
    .unwrap();

    let dense = NetworkSpec::dense(2, vec![], 1);
    let dense_params = init_parameters(&dense, 2).unwrap();
    std::fs::write(
        "fuzz/corpus/checkpoint_decode/minimal_dense.ckpt",
        write_checkpoint_bytes(&dense, &dense_params).unwrap(),
    )
    .unwrap();

    std::fs::write(
        "fuzz/corpus/config_parse/defaults.ini",
        serialize_config(&ExperimentConfig::default()),
    )
    .unwrap();

    let reference = pd_core::policy::ScriptedPolicy::for_game(pd_core::envs::GameId::Navigate);
    let mut rng = pd_core::rng::SeedTree::new(5).rng("corpus-pool", 0);
    let pool =
        pd_core::eval::build_start_pool(pd_core::envs::GameId::Navigate, &reference, 4, &mut rng)
            .unwrap();
    std::fs::write(
        "fuzz/corpus/pool_decode/navigate_pool.bin",
        pd_core::eval::write_pool_bytes(&pool),
    )
    .unwrap();
    println!("corpus written");
}
