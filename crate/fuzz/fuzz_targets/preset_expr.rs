#![no_main]

use libfuzzer_sys::fuzz_target;
use poisson_forms::cylinder::CylinderFunction;
use poisson_forms::intensity::IntensityField;
use poisson_forms::manifold::Manifold;
use poisson_forms::preset;

fuzz_target!(|data: &str| {
    let Ok(e) = preset::parse(data) else { return };
    let _ = preset::scalar_field(&e);
    let _ = preset::one_form(&e);
    let _ = CylinderFunction::from_preset(&e);
    for m in [Manifold::FlatTorus, Manifold::UnitSphere] {
        let _ = IntensityField::from_preset_expr(m, &e);
    }
});
