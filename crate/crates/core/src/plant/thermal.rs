use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{PlantConfig, PlantState};

pub const FRAME_COLS: usize = 32;
pub const FRAME_ROWS: usize = 24;

/// One 32×24 far-infrared frame, row-major, °C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalFrame {
    pub timestamp: f64,
    pub grid: Vec<Vec<f64>>,
}

impl ThermalFrame {
    pub fn uniform(timestamp: f64, celsius: f64) -> Self {
        Self {
            timestamp,
            grid: vec![vec![celsius; FRAME_COLS]; FRAME_ROWS],
        }
    }

    pub fn is_well_formed(&self) -> bool {
        self.grid.len() == FRAME_ROWS && self.grid.iter().all(|row| row.len() == FRAME_COLS)
    }

    pub fn cells(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid.iter().flatten().copied()
    }
}

/// Whether cell (row, col) lies on the pan disc centred in the frame.
pub fn in_pan_region(row: usize, col: usize, radius: f64) -> bool {
    let dx = col as f64 + 0.5 - FRAME_COLS as f64 / 2.0;
    let dy = row as f64 + 0.5 - FRAME_ROWS as f64 / 2.0;
    dx * dx + dy * dy <= radius * radius
}

fn frame_seed(seed: u64, time: f64) -> u64 {
    // splitmix64 finaliser over seed ⊕ time bits
    let mut z = seed ^ time.to_bits();
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Renders the thermal view of `state`. The noise stream is a pure function
/// of `(config.rng_seed, state.time)`, so identical inputs give identical
/// frames.
pub fn render_thermal(state: &PlantState, config: &PlantConfig) -> ThermalFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(frame_seed(config.rng_seed, state.time));
    let amplitude = config.frame_noise;
    let mut grid = vec![vec![0.0; FRAME_COLS]; FRAME_ROWS];
    for (r, row) in grid.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            let base = if state.pan_present && in_pan_region(r, c, config.pan_radius_cells) {
                state.pan_temp
            } else {
                config.ambient_temp
            };
            let noise = if amplitude > 0.0 {
                rng.random_range(-amplitude..=amplitude)
            } else {
                0.0
            };
            *cell = base + noise;
        }
    }
    ThermalFrame {
        timestamp: state.time,
        grid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absent_pan_renders_ambient() {
        let config = PlantConfig::default();
        let mut state = PlantState::initial(&config);
        state.pan_temp = 180.0;
        state.pan_present = false;
        let frame = render_thermal(&state, &config);
        assert!(frame.is_well_formed());
        assert!(frame.cells().all(|v| (v - 20.0).abs() <= 2.0));
    }

    #[test]
    fn pan_region_mean_tracks_pan_temperature() {
        let config = PlantConfig::default();
        let mut state = PlantState::initial(&config);
        state.pan_temp = 100.0;
        state.time = 42.0;
        let frame = render_thermal(&state, &config);
        let (mut sum, mut n) = (0.0, 0);
        for r in 0..FRAME_ROWS {
            for c in 0..FRAME_COLS {
                let v = frame.grid[r][c];
                if in_pan_region(r, c, config.pan_radius_cells) {
                    assert!((v - 100.0).abs() <= 2.0);
                    sum += v;
                    n += 1;
                } else {
                    assert!((v - 20.0).abs() <= 2.0);
                }
            }
        }
        assert!(n > 100);
        assert!((sum / n as f64 - 100.0).abs() < 1.0);
    }

    #[test]
    fn deterministic_for_same_seed_and_state() {
        let config = PlantConfig::default();
        let mut state = PlantState::initial(&config);
        state.time = 3.5;
        assert_eq!(render_thermal(&state, &config), render_thermal(&state, &config));
        let other = PlantConfig { rng_seed: 99, ..config.clone() };
        assert_ne!(render_thermal(&state, &config), render_thermal(&state, &other));
    }
}
