use crate::{Error, Result};

/// Clamp applied to probabilities before taking logarithms.
pub const BCE_EPSILON: f64 = 1e-7;

fn check_contrastive(distance: f64, margin: f64) -> Result<()> {
    if !(distance >= 0.0) || !distance.is_finite() {
        return Err(Error::InvalidInput(format!(
            "contrastive distance must be finite and >= 0, got {distance}"
        )));
    }
    if !(margin > 0.0) {
        return Err(Error::InvalidInput(format!(
            "margin must be > 0, got {margin}"
        )));
    }
    Ok(())
}

/// `y·D² + (1 − y)·max(margin − D, 0)²`.
pub fn contrastive_loss(y: u8, distance: f64, margin: f64) -> Result<f64> {
    check_contrastive(distance, margin)?;
    Ok(if y == 1 {
        distance * distance
    } else {
        let h = (margin - distance).max(0.0);
        h * h
    })
}

/// Derivative of [`contrastive_loss`] with respect to the distance.
/// At `D == margin` the hinge contributes the subgradient 0.
pub fn contrastive_loss_grad(y: u8, distance: f64, margin: f64) -> Result<f64> {
    check_contrastive(distance, margin)?;
    Ok(if y == 1 {
        2.0 * distance
    } else if distance < margin {
        -2.0 * (margin - distance)
    } else {
        0.0
    })
}

#[inline]
fn clamp_probability(p: f64) -> f64 {
    p.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON)
}

/// Binary cross entropy on a clamped probability.
pub fn bce_loss(probability: f64, label: u8) -> f64 {
    let p = clamp_probability(probability);
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// `d bce / d p`, evaluated at the clamped probability.
///
/// Chained through a sigmoid output this reduces to `p − label`, so the
/// clamp never zeroes the signal of a saturated wrong prediction.
pub fn bce_loss_grad(probability: f64, label: u8) -> f64 {
    let p = clamp_probability(probability);
    (p - f64::from(label)) / (p * (1.0 - p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn contrastive_cases() {
        assert_eq!(contrastive_loss(1, 2.0, 7.0).unwrap(), 4.0);
        assert_eq!(contrastive_loss(0, 8.0, 7.0).unwrap(), 0.0);
        assert_eq!(contrastive_loss(0, 5.0, 7.0).unwrap(), 4.0);
        assert!(contrastive_loss(1, -0.1, 7.0).is_err());
        assert!(contrastive_loss(1, 1.0, 0.0).is_err());
    }

    #[test]
    fn contrastive_grad_cases() {
        assert_eq!(contrastive_loss_grad(1, 3.0, 7.0).unwrap(), 6.0);
        assert_eq!(contrastive_loss_grad(0, 7.0, 7.0).unwrap(), 0.0);
        assert_eq!(contrastive_loss_grad(0, 5.0, 7.0).unwrap(), -4.0);
        let h = 1e-6;
        let fd = (contrastive_loss(0, 5.0 + h, 7.0).unwrap()
            - contrastive_loss(0, 5.0 - h, 7.0).unwrap())
            / (2.0 * h);
        assert_abs_diff_eq!(fd, -4.0, epsilon = 1e-6);
        assert!(contrastive_loss_grad(0, -1.0, 7.0).is_err());
    }

    #[test]
    fn bce_cases() {
        assert_abs_diff_eq!(bce_loss(0.5, 1), std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(bce_loss(1.0, 1), -(1.0f64 - 1e-7).ln(), epsilon = 1e-15);
        assert!(bce_loss(1.0, 1) < 1.1e-7);
        assert_abs_diff_eq!(bce_loss(0.9, 0), -(0.1f64).ln(), epsilon = 1e-12);
        assert!(bce_loss(0.0, 1).is_finite());
    }

    #[test]
    fn bce_grad_matches_finite_difference() {
        for &(p, y) in &[(0.3, 1u8), (0.7, 0), (0.05, 0), (0.95, 1)] {
            let h = 1e-7;
            let fd = (bce_loss(p + h, y) - bce_loss(p - h, y)) / (2.0 * h);
            assert_abs_diff_eq!(bce_loss_grad(p, y), fd, epsilon = 1e-5);
        }
    }
}
