//! The checked-in fuzz seeds go through the same checks as the fuzz targets.

use std::path::PathBuf;

fn corpus(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            let bytes = std::fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds in {}", dir.display());
    files
}

#[test]
fn run_config_seeds() {
    let mut resolved = 0;
    for (path, bytes) in corpus("run_config") {
        let text = String::from_utf8(bytes).unwrap();
        let cfg = flm_cli::RunConfig::from_json_str(&text).unwrap().resolve();
        let cfg = cfg.unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let echo = serde_json::to_string(&cfg).unwrap();
        assert_eq!(
            flm_cli::RunConfig::from_json_str(&echo)
                .unwrap()
                .resolve()
                .unwrap(),
            cfg
        );
        resolved += 1;
    }
    assert!(resolved >= 3);
}

#[test]
fn checkpoint_seeds() {
    let mut accepted = 0;
    for (_, bytes) in corpus("checkpoint_json") {
        let text = String::from_utf8(bytes).unwrap();
        if let Ok(model) = flm_core::checkpoint::from_json_str(&text) {
            let again = flm_core::checkpoint::to_json_string(&model).unwrap();
            assert_eq!(
                flm_core::checkpoint::from_json_str(&again)
                    .unwrap()
                    .params(),
                model.params()
            );
            accepted += 1;
        }
    }
    assert_eq!(accepted, 2);
}

#[test]
fn seed_list_seeds() {
    let parsed: Vec<_> = corpus("seed_list")
        .into_iter()
        .map(|(_, b)| flm_cli::parse_seeds(std::str::from_utf8(&b).unwrap()).is_ok())
        .collect();
    assert_eq!(parsed.iter().filter(|ok| **ok).count(), 2);
}
