use super::convert::linear_srgb_to_lab;
use crate::error::{Error, Result};

/// Angle in degrees between two RGB vectors; magnitude is ignored.
pub fn angular_error(a: [f64; 3], b: [f64; 3]) -> Result<f64> {
    for v in [a, b] {
        if v.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Domain(format!("{v:?} is not a nonnegative finite vector")));
        }
    }
    let norm = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Domain("angular error of a zero vector".into()));
    }
    // atan2(|a×b|, a·b) equals arccos of the normalized dot product but keeps
    // full precision near 0°.
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let angle = norm(cross).atan2(dot);
    Ok(angle.to_degrees().clamp(0.0, 180.0))
}

/// Mean over the three CIELAB components of the squared difference.
pub fn lab_mse(a: [f64; 3], b: [f64; 3]) -> f64 {
    let (la, lb) = (linear_srgb_to_lab(a).to_array(), linear_srgb_to_lab(b).to_array());
    la.iter().zip(lb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn angular_error_examples() {
        assert_eq!(angular_error([0.3, 0.5, 0.9], [0.3, 0.5, 0.9]).unwrap(), 0.0);
        assert!((angular_error([1.0, 0.0, 0.0], [1.0, 1.0, 0.0]).unwrap() - 45.0).abs() < 1e-9);
        assert_eq!(angular_error([2.0, 2.0, 2.0], [1.0, 1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn angular_error_rejects_zero_vectors() {
        assert!(matches!(angular_error([0.0; 3], [1.0; 3]), Err(Error::Domain(_))));
        assert!(angular_error([1.0; 3], [0.0; 3]).is_err());
    }

    #[test]
    fn lab_mse_examples() {
        assert_eq!(lab_mse([0.2, 0.4, 0.6], [0.2, 0.4, 0.6]), 0.0);
        let d = lab_mse([1.0; 3], [0.0; 3]);
        assert!((d - 10000.0 / 3.0).abs() < 0.01, "{d}");
    }

    fn rgb() -> impl Strategy<Value = [f64; 3]> {
        [0.001f64..4.0, 0.001f64..4.0, 0.001f64..4.0]
    }

    proptest! {
        #[test]
        fn angular_error_is_symmetric_and_scale_free(a in rgb(), b in rgb(), s in 0.01f64..100.0) {
            let ab = angular_error(a, b).unwrap();
            prop_assert!((0.0..=180.0).contains(&ab));
            prop_assert!((ab - angular_error(b, a).unwrap()).abs() < 1e-9);
            let scaled = [a[0] * s, a[1] * s, a[2] * s];
            prop_assert!((ab - angular_error(scaled, b).unwrap()).abs() < 1e-5);
        }

        #[test]
        fn lab_mse_is_a_symmetric_nonnegative_discrepancy(a in rgb(), b in rgb()) {
            let d = lab_mse(a, b);
            prop_assert!(d >= 0.0);
            prop_assert_eq!(d, lab_mse(b, a));
            prop_assert_eq!(lab_mse(a, a), 0.0);
            if a != b {
                prop_assert!(d > 0.0);
            }
        }
    }
}
