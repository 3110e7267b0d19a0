//! Robbins-Monro style proposal-scale adaptation for random-walk samplers.

/// Tracks acceptances for one proposal block and nudges the scale toward a
/// target acceptance rate at the end of each adaptation window. Frozen after
/// burn-in so the retained chain is time-homogeneous.
#[derive(Debug, Clone)]
pub struct AdaptiveScale {
    scale: f64,
    target: f64,
    interval: usize,
    window_accepted: usize,
    window_attempts: usize,
    total_accepted: u64,
    total_attempts: u64,
    adaptations: u32,
    frozen: bool,
}

impl AdaptiveScale {
    pub fn new(initial_scale: f64, target: f64, interval: usize) -> Self {
        assert!(initial_scale > 0.0, "scale must be positive");
        assert!(interval >= 1, "adaptation interval must be >= 1");
        AdaptiveScale {
            scale: initial_scale,
            target,
            interval,
            window_accepted: 0,
            window_attempts: 0,
            total_accepted: 0,
            total_attempts: 0,
            adaptations: 0,
            frozen: false,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Record one proposal outcome; adapts when the window fills.
    pub fn record(&mut self, accepted: bool) {
        self.total_attempts += 1;
        if accepted {
            self.total_accepted += 1;
        }
        if self.frozen {
            return;
        }
        self.window_attempts += 1;
        if accepted {
            self.window_accepted += 1;
        }
        if self.window_attempts >= self.interval {
            self.adapt();
        }
    }

    fn adapt(&mut self) {
        let rate = self.window_accepted as f64 / self.window_attempts as f64;
        self.adaptations += 1;
        // Decaying step size keeps the controller stable while still moving
        // quickly out of a bad initial scale.
        let gamma = 2.0 / (self.adaptations as f64).sqrt();
        self.scale = (self.scale * ((rate - self.target) * gamma).exp()).clamp(1e-6, 10.0);
        self.window_accepted = 0;
        self.window_attempts = 0;
    }

    /// Stop adapting; lifetime statistics keep accumulating.
    pub fn freeze(&mut self) {
        self.frozen = true;
        self.window_accepted = 0;
        self.window_attempts = 0;
    }

    /// Lifetime acceptance rate over every recorded proposal.
    pub fn acceptance_rate(&self) -> f64 {
        if self.total_attempts == 0 {
            0.0
        } else {
            self.total_accepted as f64 / self.total_attempts as f64
        }
    }

    pub fn attempts(&self) -> u64 {
        self.total_attempts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn high_acceptance_grows_the_scale() {
        let mut a = AdaptiveScale::new(0.1, 0.44, 10);
        for i in 0..10 {
            a.record(i < 8); // 80% acceptance over the window
        }
        assert!(a.scale() > 0.1, "scale {} should have grown", a.scale());
    }

    #[test]
    fn low_acceptance_shrinks_the_scale() {
        let mut a = AdaptiveScale::new(0.1, 0.44, 10);
        for i in 0..10 {
            a.record(i < 1);
        }
        assert!(a.scale() < 0.1);
    }

    #[test]
    fn frozen_scale_stops_moving() {
        let mut a = AdaptiveScale::new(0.1, 0.44, 5);
        a.freeze();
        for _ in 0..50 {
            a.record(true);
        }
        assert_eq!(a.scale(), 0.1);
        assert_eq!(a.acceptance_rate(), 1.0);
    }
}
