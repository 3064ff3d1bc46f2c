//! Arena geometry, unicycle kinematics and collision episodes.

use std::collections::BTreeSet;

use crate::visuomotor::{wrap_deg, MotorCommand};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    /// cm
    pub x: f64,
    /// cm
    pub y: f64,
    /// degrees in (-180, 180]; positive turns are to the right
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose {
            x,
            y,
            heading: wrap_deg(heading),
        }
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// World direction (degrees) from this pose to a point.
    pub fn direction_to(&self, x: f64, y: f64) -> f64 {
        (y - self.y).atan2(x - self.x).to_degrees()
    }

    /// Bearing of a point relative to the heading, right positive.
    pub fn bearing_to(&self, x: f64, y: f64) -> f64 {
        wrap_deg(self.direction_to(x, y) - self.heading)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arena {
    pub width: f64,
    pub height: f64,
}

impl Arena {
    pub fn perimeter(&self) -> f64 {
        2.0 * (self.width + self.height)
    }

    pub fn wall_distance(&self, x: f64, y: f64) -> f64 {
        x.min(y).min(self.width - x).min(self.height - y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub arena: Arena,
    pub poses: Vec<Pose>,
    /// robot body diameter, cm
    pub diameter: f64,
    pub frame: u64,
}

impl WorldState {
    /// Advances every robot by one unicycle step; centres are clamped so the
    /// body never crosses a wall.
    pub fn step(&mut self, commands: &[MotorCommand], dt: f64) {
        debug_assert_eq!(commands.len(), self.poses.len());
        let r = self.diameter / 2.0;
        for (p, c) in self.poses.iter_mut().zip(commands) {
            let h = p.heading.to_radians();
            p.x += c.linear * h.cos() * dt;
            p.y += c.linear * h.sin() * dt;
            p.heading = wrap_deg(p.heading + c.angular * dt);
            p.x = p.x.clamp(r, self.arena.width - r);
            p.y = p.y.clamp(r, self.arena.height - r);
        }
        self.frame += 1;
    }
}

pub fn step_world(world: &WorldState, commands: &[MotorCommand], dt: f64) -> WorldState {
    let mut next = world.clone();
    next.step(commands, dt);
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Contact {
    /// robot ids, smaller first
    Robots(usize, usize),
    Wall(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEvent {
    pub frame: u64,
    pub contact: Contact,
    pub x: f64,
    pub y: f64,
}

/// Every contact currently in effect.
pub fn contacts(world: &WorldState, diameter: f64) -> BTreeSet<Contact> {
    let mut out = BTreeSet::new();
    let n = world.poses.len();
    for a in 0..n {
        for b in a + 1..n {
            if world.poses[a].distance(&world.poses[b]) < diameter {
                out.insert(Contact::Robots(a, b));
            }
        }
        let p = &world.poses[a];
        if world.arena.wall_distance(p.x, p.y) < diameter {
            out.insert(Contact::Wall(a));
        }
    }
    out
}

/// Emits one event per contact episode; an episode re-arms once the pair
/// (or robot and wall) separate.
#[derive(Debug, Clone, Default)]
pub struct CollisionTracker {
    active: BTreeSet<Contact>,
}

impl CollisionTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn detect(&mut self, world: &WorldState, diameter: f64) -> Vec<CollisionEvent> {
        let now = contacts(world, diameter);
        let events = now
            .difference(&self.active)
            .map(|&c| {
                let (x, y) = match c {
                    Contact::Robots(a, b) => {
                        let (p, q) = (&world.poses[a], &world.poses[b]);
                        ((p.x + q.x) / 2.0, (p.y + q.y) / 2.0)
                    }
                    Contact::Wall(a) => (world.poses[a].x, world.poses[a].y),
                };
                CollisionEvent {
                    frame: world.frame,
                    contact: c,
                    x,
                    y,
                }
            })
            .collect();
        self.active = now;
        events
    }
}
