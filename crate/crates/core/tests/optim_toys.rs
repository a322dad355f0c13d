use ncsynth::minplus::ExprArena;
use ncsynth::netmodel::{FlowEntry, InstanceFile};
use ncsynth::objective::CompiledObjective;
use ncsynth::optim::{
    frank_wolfe, frank_wolfe_momentum, nelder_mead, random_start, FwOptions, NelderMeadOptions,
};
use ncsynth::ProblemInstance;

const TARGET: [f64; 3] = [0.2, 0.5, 0.3];

/// One flow with three parallel alternatives.
fn fan() -> ProblemInstance {
    let mut f = InstanceFile::new().server("in", "in", 0, 10.0, 0.0);
    for s in ["a", "b", "c"] {
        f = f.server(s, s, 0, 10.0, 0.0).edge("in", s).edge(s, "out");
    }
    f = f.server("out", "out", 0, 10.0, 0.0).flow(FlowEntry::unicast(
        "f",
        1.0,
        1.0,
        vec![vec!["in", "a", "out"], vec!["in", "b", "out"], vec!["in", "c", "out"]],
    ));
    ProblemInstance::from_file(&f).unwrap()
}

/// `Σ (x_i − t_i)²`, minimized inside the simplex at `t`.
fn bowl() -> CompiledObjective {
    let mut ar = ExprArena::new();
    let terms: Vec<_> = TARGET
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let x = ar.var(i);
            let c = ar.constant(t);
            let d = ar.sub(x, c);
            ar.mul(d, d)
        })
        .collect();
    let root = ar.sum(&terms);
    CompiledObjective::from_expression(ar, root, 3, 1).unwrap()
}

fn distance(p: &[f64]) -> f64 {
    p.iter()
        .zip(TARGET)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn frank_wolfe_approaches_an_interior_minimum() {
    let inst = fan();
    for momentum in [false, true] {
        let mut obj = bowl();
        let opts = FwOptions {
            max_iterations: 2000,
            gap_tolerance: 0.0,
            ..FwOptions::default()
        };
        let start = random_start(&inst, 3);
        let r = if momentum {
            frank_wolfe_momentum(&inst, &mut obj, &start, &opts)
        } else {
            frank_wolfe(&inst, &mut obj, &start, &opts)
        }
        .unwrap();
        let x = r.relaxed.unwrap();
        assert!(x.in_polytope(&inst));
        assert!(distance(&x.p) < 0.05, "momentum {momentum}: {:?}", x.p);
        assert!(r.best_trace.windows(2).all(|w| w[1] <= w[0]));
        // the closest vertex is b
        assert_eq!(r.chosen, vec![1]);
    }
}

#[test]
fn nelder_mead_approaches_an_interior_minimum() {
    let inst = fan();
    let mut obj = bowl();
    let opts = NelderMeadOptions {
        budget: 400,
        seed: 5,
        ..NelderMeadOptions::default()
    };
    let r = nelder_mead(&inst, &mut obj, &opts).unwrap();
    let x = r.relaxed.clone().unwrap();
    assert!(x.in_polytope(&inst));
    assert!(distance(&x.p) < 0.05, "{:?}", x.p);
    assert_eq!(r.chosen, vec![1]);
    let again = nelder_mead(&inst, &mut bowl(), &opts).unwrap();
    assert_eq!(again.relaxed, Some(x));
    assert_eq!(again.trace, r.trace);
}
