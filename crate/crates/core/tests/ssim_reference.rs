mod common;

use lumikit_core::eval::{ssim, SsimMode};
use lumikit_core::relight::ForegroundMask;

#[test]
fn matches_reference_values() {
    let golden = common::ssim_golden();
    for (name, a, b, masked) in common::ssim_cases() {
        let mask = ForegroundMask::from_fn(a.width(), a.height(), |x, _| x < a.width() / 2).unwrap();
        let got = ssim(&a, &b, masked.then_some(&mask), SsimMode::Luminance).unwrap();
        let want = golden[name].as_f64().unwrap();
        assert!((got - want).abs() < 1e-4, "{name}: {got} vs {want}");
    }
}

#[test]
fn symmetric_in_its_arguments() {
    for (name, a, b, _) in common::ssim_cases() {
        let ab = ssim(&a, &b, None, SsimMode::Luminance).unwrap();
        let ba = ssim(&b, &a, None, SsimMode::Luminance).unwrap();
        assert!((ab - ba).abs() < 1e-12, "{name}");
    }
}
