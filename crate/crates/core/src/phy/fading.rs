//! Block-fading coefficient rules.

/// Deterministic per-block channel coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingProfile {
    /// Same coefficient for every block.
    Static(f64),
    /// `h(t) = offset + amplitude * cos(2 pi t / period)`.
    CosineRipple {
        offset: f64,
        amplitude: f64,
        period: f64,
    },
}

impl FadingProfile {
    /// The ripple used by the online-training experiments:
    /// `h(t) = 0.8 + cos(2 pi t / 17)`.
    pub fn reference_ripple() -> Self {
        FadingProfile::CosineRipple {
            offset: 0.8,
            amplitude: 1.0,
            period: 17.0,
        }
    }

    pub fn coefficient(&self, block: u64) -> f64 {
        match *self {
            FadingProfile::Static(h) => h,
            FadingProfile::CosineRipple {
                offset,
                amplitude,
                period,
            } => offset + amplitude * (2.0 * std::f64::consts::PI * block as f64 / period).cos(),
        }
    }
}

/// `h(t) = 0.8 + cos(2 pi t / 17)`, the block-fading rule of the online
/// experiments.
pub fn fading_coefficient(block: u64) -> f64 {
    FadingProfile::reference_ripple().coefficient(block)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((fading_coefficient(0) - 1.8).abs() < 1e-12);
        // Period 17.
        assert!((fading_coefficient(17) - 1.8).abs() < 1e-12);
        // 0.8 + cos(16 pi / 17)
        let expected = 0.8 + (16.0 * std::f64::consts::PI / 17.0).cos();
        assert!((fading_coefficient(8) - expected).abs() < 1e-12);
        assert!((fading_coefficient(8) + 0.1829).abs() < 1e-3);
    }

    #[test]
    fn bounded_and_periodic() {
        for t in 0..200 {
            let h = fading_coefficient(t);
            assert!((-0.2..=1.8).contains(&h), "h({t}) = {h}");
            assert!((h - fading_coefficient(t + 17)).abs() < 1e-9);
        }
    }

    #[test]
    fn static_profile_is_constant() {
        let p = FadingProfile::Static(0.7);
        assert_eq!(p.coefficient(0), 0.7);
        assert_eq!(p.coefficient(99), 0.7);
    }
}
