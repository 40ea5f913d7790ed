use loopcast::harness::{bowtie_l_star, PresetName, ScenarioPreset};
use loopcast::oracle::{same_cycle, shortest_loop_with};

fn densities() -> Vec<usize> {
    (0..10).map(|i| 100 + 100 * i).collect()
}

fn check(name: PresetName, expected: f64) {
    let preset = ScenarioPreset::get(name);
    let params = preset.params(preset.n).unwrap();
    let mut first = None;
    for d in densities() {
        let sl = shortest_loop_with(
            params.class.reference(),
            &params.punctures,
            &params.structure,
            &[d],
        )
        .unwrap();
        assert!(sl.polygon.iter().all(|p| preset.punctures.contains(p)));
        assert!(
            (sl.length - expected).abs() < 1e-9,
            "density {d}: {}",
            sl.length
        );
        match &first {
            None => first = Some(sl.punctures.clone()),
            Some(f) => assert!(same_cycle(f, &sl.punctures), "density {d}"),
        }
    }
}

#[test]
fn square_fixed_point_is_stable() {
    check(PresetName::Square, 10.8);
}

#[test]
fn bowtie_fixed_point_is_stable() {
    check(PresetName::Bowtie, bowtie_l_star());
}

#[test]
fn reversed_reference_gives_reversed_polygon() {
    let preset = ScenarioPreset::get(PresetName::Bowtie);
    let params = preset.params(preset.n).unwrap();
    let fwd = shortest_loop_with(
        params.class.reference(),
        &params.punctures,
        &params.structure,
        &[200],
    )
    .unwrap();
    let rev_ref: Vec<_> = params.class.reference().iter().rev().copied().collect();
    let rev = shortest_loop_with(&rev_ref, &params.punctures, &params.structure, &[200]).unwrap();
    let back: Vec<usize> = rev.punctures.iter().rev().copied().collect();
    assert!(same_cycle(&fwd.punctures, &back));
    assert!((fwd.length - rev.length).abs() < 1e-12);
}
