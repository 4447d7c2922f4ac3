use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::sim::SlotIndex;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn in_unit_square(self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }
}

/// Devices on the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct Arena {
    pub positions: Vec<Point>,
    /// Sensing radius `r_s`.
    pub sensing_radius: f64,
}

impl Arena {
    /// `round(density)` devices placed uniformly (the arena has unit area).
    pub fn uniform<R: Rng + ?Sized>(density: f64, sensing_radius: f64, rng: &mut R) -> Self {
        let n = density.round() as usize;
        let positions = (0..n).map(|_| Point::new(rng.random(), rng.random())).collect();
        Self {
            positions,
            sensing_radius,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// A device senses an event when its sensing disc overlaps the event's
    /// detection disc.
    pub fn senses(&self, device: usize, event: &EventInstance) -> bool {
        self.positions[device].dist(event.center) <= event.radius + self.sensing_radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
    /// Relative mixture weight.
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventInstance {
    pub center: Point,
    pub radius: f64,
    pub start: SlotIndex,
    pub duration: u64,
}

impl EventInstance {
    pub fn is_live(&self, t: SlotIndex) -> bool {
        t.0 >= self.start.0 && t.0 < self.start.0 + self.duration
    }
}

/// Poisson arrivals in time, Gaussian-mixture centers in space.
#[derive(Debug, Clone)]
pub struct EventProcess {
    poisson: Option<Poisson<f64>>,
    hotspots: Vec<(Hotspot, f64)>,
    radius: f64,
    duration: u64,
}

impl EventProcess {
    /// `lambda` must be finite and non-negative and `hotspots` non-empty with
    /// positive total weight; the event configuration checks both.
    pub fn new(lambda: f64, hotspots: &[Hotspot], radius: f64, duration: u64) -> Self {
        let total: f64 = hotspots.iter().map(|h| h.weight).sum();
        let mut acc = 0.0;
        let hotspots = hotspots
            .iter()
            .map(|h| {
                acc += h.weight / total;
                (*h, acc)
            })
            .collect();
        Self {
            poisson: (lambda > 0.0).then(|| Poisson::new(lambda).expect("positive finite rate")),
            hotspots,
            radius,
            duration,
        }
    }

    /// Events starting in slot `t`.
    pub fn spawn<R: Rng + ?Sized>(&self, rng: &mut R, t: SlotIndex, out: &mut Vec<EventInstance>) {
        let Some(poisson) = &self.poisson else { return };
        let count = poisson.sample(rng) as u64;
        for _ in 0..count {
            let center = self.sample_center(rng);
            out.push(EventInstance {
                center,
                radius: self.radius,
                start: t,
                duration: self.duration,
            });
        }
    }

    /// Rejection-samples a mixture draw inside the arena.
    fn sample_center<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let u: f64 = rng.random();
        let (h, _) = self
            .hotspots
            .iter()
            .find(|(_, cum)| u < *cum)
            .unwrap_or_else(|| self.hotspots.last().expect("at least one hotspot"));
        let nx = Normal::new(h.x, h.sigma).expect("finite sigma");
        let ny = Normal::new(h.y, h.sigma).expect("finite sigma");
        loop {
            let p = Point::new(nx.sample(rng), ny.sample(rng));
            if p.in_unit_square() {
                return p;
            }
        }
    }
}
