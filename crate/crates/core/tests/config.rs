use sivsim::config::{canonical, parse_config, parse_config_file, parse_config_with_base, ConfigError};
use std::path::{Path, PathBuf};

fn shipped() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    v.sort();
    v
}

#[test]
fn shipped_configs_round_trip_through_canonical_form() {
    let files = shipped();
    assert!(files.len() >= 8);
    for p in files {
        let cfg = parse_config_file(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let text = canonical(&cfg);
        let again = parse_config_with_base(&text, p.parent()).unwrap();
        assert_eq!(again, cfg, "{}", p.display());
        assert_eq!(canonical(&again), text, "{}", p.display());
    }
}

#[test]
fn one_figure_config_per_panel_family() {
    let names: Vec<String> = shipped().iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    for family in ["fig1c", "fig1d", "fig2d", "fig2e", "fig3b", "fig3c", "fig3d", "fig4"] {
        assert!(names.iter().any(|n| n.starts_with(family)), "{family}");
    }
}

#[test]
fn diagnostics_are_distinct_and_located() {
    let cases: [(&str, fn(&ConfigError) -> bool); 4] = [
        ("[experiment]\ntype = t1\nwaits = 1 ms\ncolour = red\n", |e| matches!(e, ConfigError::UnknownKey { line: 4, .. })),
        ("[experiment]\ntype = t1\nwaits = 1 furlong\n", |e| matches!(e, ConfigError::BadUnit { line: 3, .. })),
        ("[system]\nb_mag = 1 kG\n", |e| matches!(e, ConfigError::MissingSection { .. })),
        ("[experiment]\ntype = t1\n", |e| matches!(e, ConfigError::MissingKey { line: 1, .. })),
    ];
    for (text, ok) in cases {
        let e = parse_config(text).unwrap_err();
        assert!(ok(&e), "{text:?} gave {e:?}");
    }
}

#[test]
fn si_suffixes() {
    let c = parse_config("[system]\nb_mag = 2.7 kG\ntemperature = 100 mK\nstrain_x = 32.7 GHz\n\n[experiment]\ntype = t1\nwaits = 1, 2 ms\n").unwrap();
    assert_eq!(c.system.field.b_mag, 2700.0);
    assert_eq!(c.system.temperature, 0.1);
    assert_eq!(c.system.params.strain_x, 32.7e9);
}
