#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = flm_core::checkpoint::from_json_str(text) {
        // anything accepted must survive a round trip unchanged
        let again = flm_core::checkpoint::to_json_string(&model).expect("loaded models are finite");
        let back = flm_core::checkpoint::from_json_str(&again).expect("own output parses");
        assert_eq!(back.params(), model.params());
        assert_eq!(back.dim(), model.dim());
    }
});
