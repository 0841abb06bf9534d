use super::frame::Micros;

/// Session time source. The runtime only moves time forward through
/// [`Clock::advance_to`], so a virtual clock makes runs reproducible.
pub trait Clock {
    fn now(&self) -> Micros;
    fn advance_to(&mut self, t: Micros);
}

#[derive(Debug, Clone, Default)]
pub struct VirtualClock {
    now: Micros,
}

impl VirtualClock {
    pub fn new() -> Self {
        VirtualClock { now: 0 }
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> Micros {
        self.now
    }

    fn advance_to(&mut self, t: Micros) {
        debug_assert!(t >= self.now, "clock moved backwards");
        self.now = self.now.max(t);
    }
}
