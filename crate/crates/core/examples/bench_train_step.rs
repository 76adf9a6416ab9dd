use std::time::Instant;

use spear_core::nn::{AdamConfig, DaeArchitecture, DaeModel, Mode, Tensor};

fn bench(label: &str, channels: Vec<usize>) {
    let arch = DaeArchitecture { encoder_channels: channels, ..DaeArchitecture::standard() };
    let mut model = DaeModel::new(arch, 1);
    let mut adam = model.new_adam(AdamConfig::default());
    let batch = 32;
    let x = Tensor::from_data(
        batch,
        1,
        1920,
        (0..batch * 1920).map(|i| ((i as f64) * 0.013).sin().abs()).collect(),
    );
    let target = x.clone();
    for _ in 0..2 {
        model.zero_grads();
        let y = model.forward(&x, Mode::Train).unwrap();
        let (_, g) = spear_core::nn::rmse_loss(&y, &target).unwrap();
        model.backward(&g).unwrap();
        model.adam_step(&mut adam);
    }
    let start = Instant::now();
    let iters = 6;
    for _ in 0..iters {
        model.zero_grads();
        let y = model.forward(&x, Mode::Train).unwrap();
        let (_, g) = spear_core::nn::rmse_loss(&y, &target).unwrap();
        model.backward(&g).unwrap();
        model.adam_step(&mut adam);
    }
    let per_batch = start.elapsed().as_secs_f64() / iters as f64;
    let epoch_s = per_batch * 57.0;
    println!(
        "{label}: params={} batch32 step = {:.3} s -> 50 epochs ~{:.1} min",
        model.param_count(),
        per_batch,
        epoch_s * 50.0 / 60.0
    );
}

fn main() {
    bench("standard", spear_core::nn::DaeArchitecture::standard().encoder_channels);
}
