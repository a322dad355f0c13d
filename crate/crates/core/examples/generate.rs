//! Random layered instances, their size statistics and exhaustive optima.

use ncsynth::gen::{dataset_stats, enumerate, generate, stats, EnumerateOptions, GenSpec};
use ncsynth::objective::{CompiledObjective, ObjectiveSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut all = Vec::new();
    for seed in 0..20 {
        let g = generate(&GenSpec { seed, ..GenSpec::default() })?;
        let inst = g.instance;
        all.push(stats(&inst));
        if inst.combination_count() <= 10_000 {
            let obj = CompiledObjective::build(&inst, &ObjectiveSpec::average(), 1)?;
            let e = enumerate(&inst, &obj, &EnumerateOptions::default())?;
            println!(
                "seed {seed:>2}: {:>5} combinations, {:>5} feasible, optimum {:.6}",
                e.evaluated, e.feasible, e.objective
            );
        } else {
            println!("seed {seed:>2}: {} combinations, skipped", inst.combination_count());
        }
    }
    println!();
    for (name, s) in dataset_stats(&all) {
        println!("{name:<28} min {:>7.2} mean {:>7.2} max {:>7.2}", s.min, s.mean, s.max);
    }
    Ok(())
}
