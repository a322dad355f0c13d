//! Method comparison over a freshly generated dataset.

use ncsynth::cli::{bench, write_instance, BenchOptions, ObjectiveArgs};
use ncsynth::gen::{generate, GenSpec};
use ncsynth::optim::Method;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut files = Vec::new();
    for seed in 0..12 {
        let g = generate(&GenSpec { seed, ..GenSpec::default() })?;
        let p = dir.path().join(format!("instance-{seed:04}.json"));
        std::fs::write(&p, write_instance(&g.file))?;
        files.push(p);
    }
    let report = bench(
        &files,
        &BenchOptions {
            methods: vec![Method::FrankWolfe, Method::Random, Method::SpMindelay],
            seeds: vec![0, 1, 2],
            budget: 100,
            objective: ObjectiveArgs::default(),
            limit: Some(100_000),
        },
    );
    print!("{}", report.table());
    Ok(())
}
