#![no_main]

use col_core::imitation::{Policy, TabularMdp};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(mdp) = TabularMdp::parse(text) else { return };
    assert_eq!(TabularMdp::parse(&mdp.to_text()).expect("reparses"), mdp);
    if mdp.states() * mdp.states() * mdp.actions() * mdp.horizon() <= 1 << 20 {
        let d = mdp.state_distribution(&Policy::uniform(mdp.states(), mdp.actions())).unwrap();
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }
});
