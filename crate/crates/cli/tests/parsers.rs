use proptest::prelude::*;

use qkzr_cli::config::RunConfig;
use qkzr_cli::parse::{parse_complex, parse_entry, parse_grid, parse_lambda};

proptest! {
    #![proptest_config(ProptestConfig { cases: 512, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn parsers_never_panic(s in "\\PC*") {
        let _ = parse_complex(&s);
        let _ = parse_grid(&s);
        let _ = parse_entry(&s);
        let _ = parse_lambda(&s);
        let _ = RunConfig::from_json(&s);
    }

    #[test]
    fn complex_round_trips(re in -1e6f64..1e6, im in -1e6f64..1e6) {
        let s = format!("{re}{}{}i", if im < 0.0 { "-" } else { "+" }, im.abs());
        let z = parse_complex(&s).unwrap();
        prop_assert_eq!((z.re, z.im), (re, im));
    }

    #[test]
    fn grid_length_and_endpoints(a in -2.0f64..2.0, b in -2.0f64..2.0, n in 0usize..300) {
        let g = parse_grid(&format!("{a}:{b}:{n}")).unwrap();
        prop_assert_eq!(g.len(), n);
        if n >= 1 {
            prop_assert_eq!(g[0].re, a);
        }
        if n >= 2 {
            prop_assert!((g[n - 1].re - b).abs() < 1e-15);
        }
    }

    #[test]
    fn grammar_shaped_inputs_never_panic(s in "[-+0-9.eEi:,=\\[\\] mlkindalphbt]{0,40}") {
        let _ = parse_complex(&s);
        let _ = parse_grid(&s);
        let _ = parse_entry(&s);
        let _ = parse_lambda(&s);
    }
}

#[test]
fn fuzz_corpus_seeds_parse() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    let mut seen = 0;
    for (target, check) in [
        ("parse_complex", (|s: &str| parse_complex(s).is_ok()) as fn(&str) -> bool),
        ("parse_grid", |s| parse_grid(s).is_ok()),
        ("parse_entry", |s| parse_entry(s).is_ok()),
        ("parse_lambda", |s| parse_lambda(s).is_ok()),
        ("run_config", |s| RunConfig::from_json(s).is_ok()),
    ] {
        for f in std::fs::read_dir(root.join(target)).unwrap() {
            let text = std::fs::read_to_string(f.unwrap().path()).unwrap();
            assert!(check(&text), "{target}: {text}");
            seen += 1;
        }
    }
    assert!(seen >= 5);
}
