#![no_main]

use libfuzzer_sys::fuzz_target;
use poisson_forms::configuration::Configuration;
use poisson_forms::manifold::Manifold;

fuzz_target!(|data: &str| {
    for m in [Manifold::FlatTorus, Manifold::UnitSphere] {
        let Ok(g) = Configuration::from_json(m, data) else { continue };
        // accepted configurations survive a round trip
        let back = Configuration::from_json(m, &g.to_json()).expect("re-parse of serialized configuration");
        assert!(back.same_set(&g));
    }
});
