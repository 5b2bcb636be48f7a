//! Replays the checked-in fuzz corpus through the parsers.

use std::fs;
use std::path::{Path, PathBuf};

use col_core::harness::{grid_points, parse_grid, ExperimentConfig, MAX_POINTS};
use col_core::imitation::TabularMdp;
use col_core::metrics::parse_trace_csv;

fn seeds(target: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    out.sort();
    assert!(!out.is_empty(), "empty corpus for {target}");
    out
}

#[test]
fn config_seeds_parse_and_round_trip() {
    for p in seeds("config") {
        let cfg = ExperimentConfig::from_toml(&fs::read_to_string(&p).unwrap()).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again, "{}", p.display());
    }
}

#[test]
fn mdp_seeds_parse_and_round_trip() {
    for p in seeds("mdp") {
        let mdp = TabularMdp::parse(&fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(
            TabularMdp::parse(&mdp.to_text()).unwrap(),
            mdp,
            "{}",
            p.display()
        );
    }
}

#[test]
fn trace_seeds_parse_with_increasing_rounds() {
    for p in seeds("trace_csv") {
        let rows = parse_trace_csv(fs::File::open(&p).unwrap()).unwrap();
        assert!(rows.windows(2).all(|w| w[0].n < w[1].n), "{}", p.display());
    }
}

#[test]
fn grid_seeds_expand_within_limits() {
    for p in seeds("grid_spec") {
        let axes = parse_grid(fs::read_to_string(&p).unwrap().trim()).unwrap();
        let points = grid_points(&axes);
        assert!(
            !points.is_empty() && points.len() <= MAX_POINTS,
            "{}",
            p.display()
        );
    }
}
