#![no_main]

use flm_cli::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = RunConfig::from_json_str(text) else {
        return;
    };
    if let Ok(resolved) = cfg.resolve() {
        let echoed = serde_json::to_string(&resolved).expect("configs serialize");
        let back = RunConfig::from_json_str(&echoed).expect("echo parses").resolve().expect("echo resolves");
        assert_eq!(back, resolved);
    }
});
