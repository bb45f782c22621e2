//! Deterministic synthetic harbour scenes with ground truth.
//!
//! Water is a base color modulated by a drifting sinusoid plus per-channel
//! Gaussian noise. Ships are solid rectangles moving at constant velocity,
//! each dragging a strip of brightened water (the wake) behind it. Ground
//! truth covers the hulls only.
//!
//! Every frame is generated from its own RNG stream, so frame `t` does not
//! depend on frames before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::bbox::BBox;
use crate::evaluation::GroundTruth;
use crate::frame_io::{Frame, Rgb, MIN_FRAME_SIDE};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid scene: {0}")]
    SpecInvalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaterSpec {
    pub base: Rgb,
    /// Per-channel noise standard deviation.
    pub noise_std: f64,
    pub wave_amplitude: f64,
    /// Pixels per wave period.
    pub wave_length: f64,
    /// Pixels per frame the wave pattern drifts.
    pub wave_speed: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShipSpec {
    pub width: usize,
    pub height: usize,
    pub color: Rgb,
    /// Top-left corner on the frame the ship appears.
    pub x: f64,
    pub y: f64,
    /// Pixels per frame.
    pub vx: f64,
    pub vy: f64,
    /// First frame the ship is visible.
    pub enter: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WakeSpec {
    pub trail_length: usize,
    /// Strip height as a fraction of the ship height; below 0.5.
    pub height_fraction: f64,
    /// Multiplier applied to the water color; above 1.
    pub brightness: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    pub water: WaterSpec,
    pub ships: Vec<ShipSpec>,
    pub wake: WakeSpec,
    pub seed: u64,
}

impl Default for SceneSpec {
    /// 200x150, 500 frames, one ship entering after the model warm-up.
    fn default() -> Self {
        Self {
            width: 200,
            height: 150,
            n_frames: 500,
            water: WaterSpec {
                base: [40, 90, 130],
                noise_std: 2.0,
                wave_amplitude: 3.0,
                wave_length: 24.0,
                wave_speed: 0.5,
            },
            ships: vec![ShipSpec {
                width: 40,
                height: 16,
                color: [70, 60, 55],
                x: 20.0,
                y: 60.0,
                vx: 0.25,
                vy: 0.0,
                enter: 20,
            }],
            wake: WakeSpec {
                trail_length: 30,
                height_fraction: 0.3,
                brightness: 1.4,
            },
            seed: 7,
        }
    }
}

impl SceneSpec {
    /// The default scene stretched to `width × height`.
    pub fn scaled_default(width: usize, height: usize) -> Self {
        let base = Self::default();
        let sx = width as f64 / base.width as f64;
        let sy = height as f64 / base.height as f64;
        Self {
            width,
            height,
            ships: base
                .ships
                .iter()
                .map(|s| ShipSpec {
                    width: (s.width as f64 * sx).round() as usize,
                    height: (s.height as f64 * sy).round() as usize,
                    x: s.x * sx,
                    y: s.y * sy,
                    vx: s.vx * sx,
                    vy: s.vy * sy,
                    ..s.clone()
                })
                .collect(),
            wake: WakeSpec {
                trail_length: (base.wake.trail_length as f64 * sx).round() as usize,
                ..base.wake.clone()
            },
            water: WaterSpec {
                wave_length: base.water.wave_length * sy,
                wave_speed: base.water.wave_speed * sy,
                ..base.water.clone()
            },
            ..base
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: String| Err(SynthError::SpecInvalid(msg));
        if self.width < MIN_FRAME_SIDE || self.height < MIN_FRAME_SIDE {
            return fail(format!("frame {}x{} is too small", self.width, self.height));
        }
        if !(self.water.noise_std >= 0.0) || !(self.water.wave_amplitude >= 0.0) {
            return fail("noise and wave amplitude must be non-negative".into());
        }
        if !(self.water.wave_length > 0.0) {
            return fail("wave length must be positive".into());
        }
        if !(self.wake.height_fraction >= 0.0 && self.wake.height_fraction < 0.5) {
            return fail(format!("wake height fraction {} outside [0, 0.5)", self.wake.height_fraction));
        }
        if !(self.wake.brightness > 1.0) {
            return fail(format!("wake brightness {} must exceed 1", self.wake.brightness));
        }
        for (i, ship) in self.ships.iter().enumerate() {
            if ship.width == 0 || ship.height == 0 {
                return fail(format!("ship {i} has zero size"));
            }
            if ship.enter >= self.n_frames {
                continue;
            }
            // Positions are linear in time, so the first and last visible frames bound them.
            for t in [ship.enter, self.n_frames - 1] {
                let (x, y) = ship.position(t);
                if x < 0
                    || y < 0
                    || x as usize + ship.width > self.width
                    || y as usize + ship.height > self.height
                {
                    return fail(format!("ship {i} leaves the frame by frame {t}"));
                }
            }
        }
        Ok(())
    }
}

impl ShipSpec {
    /// Rounded top-left corner at frame `t` (`t >= enter`).
    fn position(&self, t: usize) -> (i64, i64) {
        let dt = t.saturating_sub(self.enter) as f64;
        (
            (self.x + self.vx * dt).round() as i64,
            (self.y + self.vy * dt).round() as i64,
        )
    }

    /// Hull box at frame `t`, if the ship is visible.
    pub fn bbox_at(&self, t: usize) -> Option<BBox> {
        if t < self.enter {
            return None;
        }
        let (x, y) = self.position(t);
        Some(BBox::new(x as usize, y as usize, self.width, self.height))
    }

    /// Wake rectangle at frame `t` as `(x0, x1, y0, y1)`, half-open, unclipped.
    fn wake_at(&self, t: usize, wake: &WakeSpec) -> Option<(i64, i64, i64, i64)> {
        let hull = self.bbox_at(t)?;
        let strip = (wake.height_fraction * self.height as f64).floor() as i64;
        if strip == 0 || wake.trail_length == 0 || self.vx == 0.0 {
            return None;
        }
        let y0 = hull.y as i64 + (self.height as i64 - strip) / 2;
        let len = wake.trail_length as i64;
        let (x0, x1) = if self.vx > 0.0 {
            (hull.x as i64 - len, hull.x as i64)
        } else {
            (hull.right() as i64, hull.right() as i64 + len)
        };
        Some((x0, x1, y0, y0 + strip))
    }
}

/// A validated scene that renders frames on demand.
#[derive(Clone, Debug)]
pub struct Scene {
    spec: SceneSpec,
    noise: Option<Normal<f64>>,
}

impl Scene {
    pub fn new(spec: SceneSpec) -> Result<Self, SynthError> {
        spec.validate()?;
        let noise = (spec.water.noise_std > 0.0)
            .then(|| Normal::new(0.0, spec.water.noise_std).expect("finite positive std"));
        Ok(Self { spec, noise })
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.spec.n_frames
    }

    pub fn is_empty(&self) -> bool {
        self.spec.n_frames == 0
    }

    fn water_level(&self, x: usize, y: usize, t: usize) -> f64 {
        let w = &self.spec.water;
        if w.wave_amplitude == 0.0 {
            return 0.0;
        }
        let phase = (y as f64 + 0.5 * x as f64 - w.wave_speed * t as f64) / w.wave_length;
        w.wave_amplitude * (std::f64::consts::TAU * phase).sin()
    }

    pub fn frame(&self, t: usize) -> Frame {
        let spec = &self.spec;
        let (w, h) = (spec.width, spec.height);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(t as u64);
        let mut noise = || self.noise.map_or(0.0, |n| n.sample(&mut rng));

        let base = spec.water.base.map(|c| c as f64);
        let mut water = vec![[0.0f64; 3]; w * h];
        let mut pixels = vec![[0u8; 3]; w * h];
        for y in 0..h {
            for x in 0..w {
                let level = self.water_level(x, y, t);
                let i = y * w + x;
                for c in 0..3 {
                    water[i][c] = base[c] + level;
                    pixels[i][c] = quantize(water[i][c] + noise());
                }
            }
        }

        for ship in &spec.ships {
            if let Some((x0, x1, y0, y1)) = ship.wake_at(t, &spec.wake) {
                for y in y0.max(0)..y1.min(h as i64) {
                    for x in x0.max(0)..x1.min(w as i64) {
                        let i = y as usize * w + x as usize;
                        for c in 0..3 {
                            pixels[i][c] = quantize(water[i][c] * spec.wake.brightness + noise());
                        }
                    }
                }
            }
        }
        for ship in &spec.ships {
            if let Some(b) = ship.bbox_at(t) {
                for y in b.y..b.bottom() {
                    pixels[y * w + b.x..y * w + b.right()].fill(ship.color);
                }
            }
        }
        Frame::new(w, h, t, pixels).expect("validated dims")
    }

    /// Hull boxes visible at frame `t`, in ship order.
    pub fn truth(&self, t: usize) -> Vec<BBox> {
        self.spec.ships.iter().filter_map(|s| s.bbox_at(t)).collect()
    }

    pub fn ground_truth(&self) -> GroundTruth {
        let mut gt = GroundTruth::default();
        for t in 0..self.spec.n_frames {
            gt.insert(t, self.truth(t));
        }
        gt
    }

    pub fn frames(&self) -> impl Iterator<Item = Frame> + '_ {
        (0..self.spec.n_frames).map(|t| self.frame(t))
    }
}

fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Renders the whole sequence and its ground truth.
pub fn generate(spec: SceneSpec) -> Result<(Vec<Frame>, GroundTruth), SynthError> {
    let scene = Scene::new(spec)?;
    Ok((scene.frames().collect(), scene.ground_truth()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn still_water() -> WaterSpec {
        WaterSpec {
            base: [40, 90, 130],
            noise_std: 0.0,
            wave_amplitude: 0.0,
            wave_length: 20.0,
            wave_speed: 0.0,
        }
    }

    #[test]
    fn shipless_scene() {
        let spec = SceneSpec { n_frames: 10, ships: vec![], ..Default::default() };
        let (frames, gt) = generate(spec).unwrap();
        assert_eq!(frames.len(), 10);
        assert!((0..10).all(|t| gt.boxes(t).is_empty()));
    }

    #[test]
    fn static_ship_without_noise() {
        let ship = ShipSpec {
            width: 20,
            height: 10,
            color: [10, 10, 10],
            x: 50.0,
            y: 40.0,
            vx: 0.0,
            vy: 0.0,
            enter: 0,
        };
        let spec = SceneSpec { n_frames: 5, water: still_water(), ships: vec![ship], ..Default::default() };
        let (frames, gt) = generate(spec).unwrap();
        assert!(frames.windows(2).all(|p| p[0].pixels() == p[1].pixels()));
        assert!((0..5).all(|t| gt.boxes(t) == [BBox::new(50, 40, 20, 10)]));
        assert_eq!(frames[0].get(50, 40), [10, 10, 10]);
        assert_eq!(frames[0].get(49, 40), [40, 90, 130]);
    }

    #[test]
    fn moving_ship_kinematics() {
        let ship = ShipSpec {
            width: 20,
            height: 10,
            color: [10, 10, 10],
            x: 30.0,
            y: 40.0,
            vx: 2.0,
            vy: 0.0,
            enter: 0,
        };
        let scene = Scene::new(SceneSpec { n_frames: 20, ships: vec![ship], ..Default::default() }).unwrap();
        for t in 1..20 {
            assert_eq!(scene.truth(t)[0].x, scene.truth(t - 1)[0].x + 2);
        }
    }

    #[test]
    fn same_seed_same_frames() {
        let a = Scene::new(SceneSpec { n_frames: 3, ..Default::default() }).unwrap();
        let b = Scene::new(SceneSpec { n_frames: 3, ..Default::default() }).unwrap();
        assert_eq!(a.frame(2), b.frame(2));
        let c = Scene::new(SceneSpec { n_frames: 3, seed: 8, ..Default::default() }).unwrap();
        assert_ne!(a.frame(2), c.frame(2));
    }

    #[test]
    fn wake_sits_behind_ship_and_outside_truth() {
        let scene = Scene::new(SceneSpec {
            n_frames: 30,
            water: still_water(),
            ..Default::default()
        })
        .unwrap();
        let t = 25;
        let hull = scene.truth(t)[0];
        let f = scene.frame(t);
        let water = [40u8, 90, 130];
        // Strip of floor(0.3 * 16) = 4 rows centered on the hull midline, left of the hull.
        let y_mid = hull.y + 8;
        assert_ne!(f.get(hull.x - 1, y_mid), water);
        assert_eq!(f.get(hull.x - 1, hull.y), water);
        assert_eq!(f.get(hull.right(), y_mid), water);
        assert_eq!(f.get(hull.x - 1, hull.y + 6), [56, 126, 182]);
        assert_eq!(f.get(hull.x - 1, hull.y + 5), water);
        assert_eq!(f.get(hull.x - 1, hull.y + 10), water);
    }

    #[test]
    fn invalid_specs() {
        let leaving = SceneSpec {
            ships: vec![ShipSpec { vx: 5.0, ..SceneSpec::default().ships[0].clone() }],
            ..Default::default()
        };
        assert!(matches!(leaving.validate(), Err(SynthError::SpecInvalid(_))));
        let mut tall_wake = SceneSpec::default();
        tall_wake.wake.height_fraction = 0.5;
        assert!(tall_wake.validate().is_err());
        let mut dim_wake = SceneSpec::default();
        dim_wake.wake.brightness = 1.0;
        assert!(dim_wake.validate().is_err());
    }

    #[test]
    fn scaled_default_is_valid() {
        let spec = SceneSpec::scaled_default(640, 480);
        spec.validate().unwrap();
        assert_eq!(spec.ships[0].width, 128);
    }
}
