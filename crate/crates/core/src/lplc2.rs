//! Per-field quadrant integration and the LPLC2 looming gate.

use crate::attention::AttentionField;
use crate::motion::MotionMaps;
use crate::params::GateForm;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadrantSums {
    /// upper-right: right + up
    pub q1: f64,
    /// upper-left: left + up
    pub q2: f64,
    /// lower-left: left + down
    pub q3: f64,
    /// lower-right: right + down
    pub q4: f64,
}

impl QuadrantSums {
    pub fn as_array(&self) -> [f64; 4] {
        [self.q1, self.q2, self.q3, self.q4]
    }

    pub fn total(&self) -> f64 {
        self.q1 + self.q2 + self.q3 + self.q4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Lplc2Response {
    pub value: f64,
    pub gated: bool,
}

/// Sums outward-preferring motion in the four quadrants around the field
/// centroid. Pixels on either dividing line count for no quadrant.
pub fn quadrant_sums(field: &AttentionField, lm: &MotionMaps) -> QuadrantSums {
    let (w, h) = (lm.lm_r.width(), lm.lm_r.height());
    let rect = field.rect(w, h);
    let mut q = QuadrantSums::default();
    if rect.is_empty() {
        return q;
    }
    let (r, l, d, u) = (
        lm.lm_r.data(),
        lm.lm_l.data(),
        lm.lm_d.data(),
        lm.lm_u.data(),
    );
    for y in rect.y0..=rect.y1 {
        let yf = y as f64;
        if yf == field.cy {
            continue;
        }
        let upper = yf < field.cy;
        for x in rect.x0..=rect.x1 {
            let xf = x as f64;
            if xf == field.cx {
                continue;
            }
            let i = y * w + x;
            match (xf > field.cx, upper) {
                (true, true) => q.q1 += r[i] + u[i],
                (false, true) => q.q2 += l[i] + u[i],
                (false, false) => q.q3 += l[i] + d[i],
                (true, false) => q.q4 += r[i] + d[i],
            }
        }
    }
    q
}

pub fn lplc2_response(q: &QuadrantSums, gate: GateForm) -> Lplc2Response {
    let qs = q.as_array();
    let gated = match gate {
        GateForm::Strict => qs.iter().all(|v| *v > 0.0),
        GateForm::Printed => qs.iter().all(|v| *v != 0.0),
    };
    let value = if gated { q.total() } else { 0.0 };
    // keeps value > 0 <=> gated under the printed gate as well
    if value > 0.0 {
        Lplc2Response { value, gated }
    } else {
        Lplc2Response {
            value: 0.0,
            gated: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{Map, HEIGHT, WIDTH};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // classify each pixel of the whole frame independently
    fn quadrant_oracle(f: &AttentionField, lm: &MotionMaps) -> [f64; 4] {
        let mut q = [0.0; 4];
        for y in 0..HEIGHT {
            for x in 0..WIDTH {
                let (u, v) = (x as f64, y as f64);
                if !f.contains(u, v) {
                    continue;
                }
                let (r, l, d, up) = (
                    lm.lm_r.get(x, y),
                    lm.lm_l.get(x, y),
                    lm.lm_d.get(x, y),
                    lm.lm_u.get(x, y),
                );
                if u > f.cx && v < f.cy {
                    q[0] += r + up;
                } else if u < f.cx && v < f.cy {
                    q[1] += l + up;
                } else if u < f.cx && v > f.cy {
                    q[2] += l + d;
                } else if u > f.cx && v > f.cy {
                    q[3] += r + d;
                }
            }
        }
        q
    }

    fn random_maps(rng: &mut ChaCha8Rng) -> MotionMaps {
        let mut m = || Map::from_fn(WIDTH, HEIGHT, |_, _| rng.random_range(-500..=500) as f64);
        MotionMaps {
            lm_r: m(),
            lm_l: m(),
            lm_d: m(),
            lm_u: m(),
        }
    }

    #[test]
    fn zero_motion_zero_sums() {
        let f = AttentionField::new(0, 49.0, 36.0, 36.0);
        let q = quadrant_sums(&f, &MotionMaps::zeros(WIDTH, HEIGHT));
        assert_eq!(q.as_array(), [0.0; 4]);
    }

    #[test]
    fn matches_classification_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for i in 0..20 {
            let lm = random_maps(&mut rng);
            // half the trials on integer centroids to exercise the dividing lines
            let (cx, cy) = if i % 2 == 0 {
                (rng.random_range(0..99) as f64, rng.random_range(0..72) as f64)
            } else {
                (rng.random_range(0.0..98.0), rng.random_range(0.0..71.0))
            };
            let f = AttentionField::new(0, cx, cy, 36.0);
            assert_eq!(quadrant_sums(&f, &lm).as_array(), quadrant_oracle(&f, &lm));
        }
    }

    #[test]
    fn gate_examples() {
        let r = lplc2_response(
            &QuadrantSums {
                q1: 5.0,
                q2: 5.0,
                q3: 5.0,
                q4: 5.0,
            },
            GateForm::Strict,
        );
        assert_eq!(r, Lplc2Response { value: 20.0, gated: true });

        let r = lplc2_response(
            &QuadrantSums {
                q1: 1.0,
                q2: 1.0,
                q3: 1.0,
                q4: 0.0,
            },
            GateForm::Strict,
        );
        assert_eq!(r, Lplc2Response { value: 0.0, gated: false });

        let mixed = QuadrantSums {
            q1: -3.0,
            q2: 4.0,
            q3: 4.0,
            q4: 4.0,
        };
        assert!(!lplc2_response(&mixed, GateForm::Strict).gated);
        // the printed gate only rejects exact zeros
        let p = lplc2_response(&mixed, GateForm::Printed);
        assert!(p.gated);
        assert_eq!(p.value, 9.0);
    }

    #[test]
    fn value_scales_linearly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let lm = random_maps(&mut rng).map_abs();
        let f = AttentionField::new(0, 40.3, 30.7, 36.0);
        let base = lplc2_response(&quadrant_sums(&f, &lm), GateForm::Strict);
        assert!(base.gated);
        for k in [0.5, 2.0, 8.0] {
            let s = lplc2_response(&quadrant_sums(&f, &lm.scaled(k)), GateForm::Strict);
            assert!(s.gated);
            assert!((s.value - k * base.value).abs() <= 1e-9 * s.value);
        }
    }

    trait AbsMaps {
        fn map_abs(&self) -> MotionMaps;
    }

    impl AbsMaps for MotionMaps {
        fn map_abs(&self) -> MotionMaps {
            MotionMaps {
                lm_r: self.lm_r.map(f64::abs),
                lm_l: self.lm_l.map(f64::abs),
                lm_d: self.lm_d.map(f64::abs),
                lm_u: self.lm_u.map(f64::abs),
            }
        }
    }
}
