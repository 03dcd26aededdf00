use serde::{Deserialize, Serialize};

/// Smallest support width kept for a triangle after decoding.
pub const MIN_TRIANGLE_WIDTH: f64 = 1e-6;

/// Membership function over `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Membership {
    /// 1 on `[0, core_end]`, falling linearly to 0 at `foot`.
    LeftShoulder { core_end: f64, foot: f64 },
    Triangle { left: f64, peak: f64, right: f64 },
    /// 0 up to `foot`, rising linearly to 1 at `core_start`, 1 after.
    RightShoulder { foot: f64, core_start: f64 },
}

impl Membership {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Membership::LeftShoulder { core_end, foot } => {
                if x <= core_end {
                    1.0
                } else if x >= foot {
                    0.0
                } else {
                    (foot - x) / (foot - core_end)
                }
            }
            Membership::RightShoulder { foot, core_start } => {
                if x >= core_start {
                    1.0
                } else if x <= foot {
                    0.0
                } else {
                    (x - foot) / (core_start - foot)
                }
            }
            Membership::Triangle { left, peak, right } => {
                if x < left || x > right {
                    0.0
                } else if x <= peak {
                    if peak > left {
                        (x - left) / (peak - left)
                    } else {
                        1.0
                    }
                } else if right > peak {
                    (right - x) / (right - peak)
                } else {
                    1.0
                }
            }
        }
    }

    /// Abscissas left to right.
    pub fn abscissas(&self) -> Vec<f64> {
        match *self {
            Membership::LeftShoulder { core_end, foot } => vec![core_end, foot],
            Membership::Triangle { left, peak, right } => vec![left, peak, right],
            Membership::RightShoulder { foot, core_start } => vec![foot, core_start],
        }
    }

    pub fn shape_name(&self) -> &'static str {
        match self {
            Membership::LeftShoulder { .. } => "left-shoulder",
            Membership::Triangle { .. } => "triangle",
            Membership::RightShoulder { .. } => "right-shoulder",
        }
    }

    /// Builds a triangle from raw abscissas: clamped to `[0, 1]`, sorted,
    /// and widened to [`MIN_TRIANGLE_WIDTH`] when degenerate.
    pub fn triangle_normalized(a: f64, b: f64, c: f64) -> Self {
        let mut v = [a.clamp(0.0, 1.0), b.clamp(0.0, 1.0), c.clamp(0.0, 1.0)];
        v.sort_by(f64::total_cmp);
        let [mut left, peak, mut right] = v;
        if right - left < MIN_TRIANGLE_WIDTH {
            let half = MIN_TRIANGLE_WIDTH / 2.0;
            left = peak - half;
            right = peak + half;
            if left < 0.0 {
                right -= left;
                left = 0.0;
            }
            if right > 1.0 {
                left -= right - 1.0;
                right = 1.0;
            }
        }
        Membership::Triangle { left, peak, right }
    }

    pub fn left_shoulder_normalized(a: f64, b: f64) -> Self {
        let (a, b) = sorted_pair(a, b);
        Membership::LeftShoulder {
            core_end: a,
            foot: b,
        }
    }

    pub fn right_shoulder_normalized(a: f64, b: f64) -> Self {
        let (a, b) = sorted_pair(a, b);
        Membership::RightShoulder {
            foot: a,
            core_start: b,
        }
    }
}

fn sorted_pair(a: f64, b: f64) -> (f64, f64) {
    let a = a.clamp(0.0, 1.0);
    let b = b.clamp(0.0, 1.0);
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}
