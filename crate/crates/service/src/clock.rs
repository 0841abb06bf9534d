use std::time::{Duration, Instant};

use clinprog_core::runtime::{Clock, Micros};

/// Virtual clock that keeps pace with the wall clock, `rt_factor` virtual
/// seconds per real second.
#[derive(Debug)]
pub struct PacedClock {
    now: Micros,
    started: Instant,
    rt_factor: f64,
}

impl PacedClock {
    pub fn new(rt_factor: f64) -> Self {
        PacedClock { now: 0, started: Instant::now(), rt_factor }
    }
}

impl Clock for PacedClock {
    fn now(&self) -> Micros {
        self.now
    }

    fn advance_to(&mut self, t: Micros) {
        self.now = self.now.max(t);
        let due = self.started + Duration::from_secs_f64(self.now as f64 / 1e6 / self.rt_factor);
        let wait = due.saturating_duration_since(Instant::now());
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paces_against_wall_clock() {
        let mut c = PacedClock::new(100.0);
        let t0 = Instant::now();
        c.advance_to(5_000_000);
        let took = t0.elapsed().as_secs_f64();
        assert_eq!(c.now(), 5_000_000);
        assert!((0.045..0.5).contains(&took), "{took}");
    }
}
