//! Forward model: scenes, bucket measurements and background-light noise.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::ordering::{seq_to_pattern_into, tier_len, AcquisitionPlan, SequenceIndex};
use crate::{rng, Error, Result, SquareGrid};

/// DSNR below which the reference experiment stopped producing images.
pub const DSNR_FAILURE_LANDMARK_DB: f64 = 8.62;
/// DSNR above which the reference experiment resolved every tier.
pub const DSNR_ALL_TIERS_LANDMARK_DB: f64 = 32.71;

const NOISE_STREAM: u64 = 0x6E6F_6973_6531;

/// Ground-truth reflectance on a power-of-two square, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    reflectance: SquareGrid<f64>,
    provenance: String,
}

impl Scene {
    pub fn new(reflectance: SquareGrid<f64>, provenance: impl Into<String>) -> Result<Self> {
        let side = reflectance.side();
        if side == 0 || !side.is_power_of_two() {
            return Err(Error::InvalidScene(format!("side {side} is not a power of two")));
        }
        if let Some(bad) = reflectance
            .as_slice()
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::InvalidScene(format!("reflectance {bad} outside [0, 1]")));
        }
        Ok(Self {
            reflectance,
            provenance: provenance.into(),
        })
    }

    /// Builds a scene from a `height x width` row-major image, zero-padding
    /// it centered onto the next power-of-two square.
    pub fn from_rect(height: usize, width: usize, data: &[f64], provenance: impl Into<String>) -> Result<Self> {
        if data.len() != height * width || height == 0 || width == 0 {
            return Err(Error::InvalidScene(format!(
                "{} values for a {height}x{width} image",
                data.len()
            )));
        }
        let side = height.max(width).next_power_of_two();
        let mut provenance = provenance.into();
        if side == height && side == width {
            let grid = SquareGrid::from_vec(side, data.to_vec())?;
            return Self::new(grid, provenance);
        }
        let (dx, dy) = ((side - height) / 2, (side - width) / 2);
        let mut grid = SquareGrid::filled(side, 0.0);
        for x in 0..height {
            for y in 0..width {
                grid[(x + dx, y + dy)] = data[x * width + y];
            }
        }
        provenance.push_str(&format!(" (zero-padded from {height}x{width} to {side}x{side}, offset {dx},{dy})"));
        Self::new(grid, provenance)
    }

    pub fn reflectance(&self) -> &SquareGrid<f64> {
        &self.reflectance
    }

    pub fn side(&self) -> usize {
        self.reflectance.side()
    }

    pub fn top_tier(&self) -> u32 {
        self.side().trailing_zeros()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn total_flux(&self) -> f64 {
        self.reflectance.as_slice().iter().sum()
    }
}

/// Built-in scene generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// One bright square on a dark field; position drawn from the seed.
    BrightSquare,
    /// Vertical bars of seed-dependent period.
    Bars,
    /// Fuselage, swept wings, tailplane and two engines.
    Aircraft,
    /// Independent uniform reflectances.
    Random,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 4] = [Self::BrightSquare, Self::Bars, Self::Aircraft, Self::Random];

    pub fn name(self) -> &'static str {
        match self {
            Self::BrightSquare => "bright-square",
            Self::Bars => "bars",
            Self::Aircraft => "aircraft",
            Self::Random => "random",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Generates a `2^top_tier` synthetic scene.
pub fn synthetic_scene(kind: SyntheticKind, top_tier: u32, seed: u64) -> Result<Scene> {
    if top_tier > crate::hadamard::DEFAULT_MAX_ORDER_LOG2 {
        return Err(Error::SizeLimit {
            requested: top_tier,
            cap: crate::hadamard::DEFAULT_MAX_ORDER_LOG2,
        });
    }
    let side = 1usize << top_tier;
    let draw = |i: u64| rng::unit(seed, 0x5CE4E, i);
    let grid = match kind {
        SyntheticKind::BrightSquare => {
            let size = (side * 3 / 16).max(1);
            let x0 = (draw(0) * (side - size + 1) as f64) as usize;
            let y0 = (draw(1) * (side - size + 1) as f64) as usize;
            return bright_square(top_tier, (x0, y0), size, format!("synthetic:{}:{seed}", kind.name()));
        }
        SyntheticKind::Bars => {
            let octaves = top_tier.max(1);
            let period = 2usize << ((draw(0) * f64::from(octaves)) as u32).min(octaves - 1);
            SquareGrid::from_fn(side, |_, y| if (y % period) < period / 2 { 1.0 } else { 0.1 })
        }
        SyntheticKind::Aircraft => aircraft(side, draw(0), draw(1)),
        SyntheticKind::Random => {
            let mut i = 0u64;
            SquareGrid::from_fn(side, |_, _| {
                i += 1;
                draw(i)
            })
        }
    };
    Scene::new(grid, format!("synthetic:{}:{seed}", kind.name()))
}

/// Dark `2^top_tier` field with a `size x size` block of reflectance 1 at
/// `origin` (row, column).
pub fn bright_square(top_tier: u32, origin: (usize, usize), size: usize, provenance: impl Into<String>) -> Result<Scene> {
    let side = 1usize << top_tier;
    if origin.0 + size > side || origin.1 + size > side {
        return Err(Error::InvalidScene(format!(
            "square at {origin:?} of size {size} leaves the {side}x{side} frame"
        )));
    }
    let grid = SquareGrid::from_fn(side, |x, y| {
        let inside = (origin.0..origin.0 + size).contains(&x) && (origin.1..origin.1 + size).contains(&y);
        if inside {
            1.0
        } else {
            0.0
        }
    });
    Scene::new(grid, provenance)
}

fn aircraft(side: usize, jitter_x: f64, jitter_y: f64) -> SquareGrid<f64> {
    // Silhouette on a unit square, nose pointing up, then placed with a
    // small seed-dependent offset.
    let s = side as f64;
    let cx = 0.5 + (jitter_x - 0.5) * 0.2;
    let cy = 0.5 + (jitter_y - 0.5) * 0.2;
    SquareGrid::from_fn(side, |x, y| {
        let px = (x as f64 + 0.5) / s - cx;
        let py = (y as f64 + 0.5) / s - cy;
        let fuselage = (py / 0.045) * (py / 0.045) + (px / 0.3) * (px / 0.3) <= 1.0;
        // Swept wing: spans |py| < 0.3, leading edge moves aft with span.
        let wing = py.abs() < 0.3 && px > -0.02 + 0.3 * py.abs() && px < 0.08 + 0.15 * py.abs();
        let tail = py.abs() < 0.11 && px > 0.2 + 0.2 * py.abs() && px < 0.26;
        let engine = |ey: f64| {
            let (a, b) = ((py - ey) / 0.025, (px - 0.02) / 0.06);
            a * a + b * b <= 1.0
        };
        if engine(0.14) || engine(-0.14) {
            0.7
        } else if fuselage || wing || tail {
            0.9
        } else {
            0.05
        }
    })
}

/// How a signed pattern is realized by the projector and detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IlluminationMode {
    /// Ideal bipolar illumination: `B = Σ P·O`.
    Signed,
    /// Positive and negative halves projected separately: `B = B+ − B−`.
    Differential,
    /// Only the `+1` pixels are lit: `B = Σ ((1 + P) / 2)·O`.
    BinaryOffset,
}

impl IlluminationMode {
    pub const ALL: [IlluminationMode; 3] = [Self::Signed, Self::Differential, Self::BinaryOffset];

    /// Physical projections spent per sequence index.
    pub fn projections_per_measurement(self) -> u64 {
        match self {
            Self::Differential => 2,
            Self::Signed | Self::BinaryOffset => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Signed => "signed",
            Self::Differential => "differential",
            Self::BinaryOffset => "binary_offset",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

/// Bucket value of one pattern over a scene.
///
/// Pattern entries are `+1`, `−1`, or `0` for pixels that are not illuminated
/// at all (used by region-of-interest patterns). For `±1` patterns the
/// binary-offset value equals `Σ ((1 + P) / 2)·O`.
pub fn bucket(pattern: &SquareGrid<i8>, scene: &Scene, mode: IlluminationMode) -> Result<f64> {
    if pattern.side() != scene.side() {
        return Err(Error::SizeMismatch {
            expected: scene.side(),
            actual: pattern.side(),
        });
    }
    let pairs = pattern.as_slice().iter().zip(scene.reflectance().as_slice());
    Ok(match mode {
        IlluminationMode::Signed => pairs.map(|(&p, &o)| f64::from(p) * o).sum(),
        IlluminationMode::Differential => {
            let (mut pos, mut neg) = (0.0, 0.0);
            for (&p, &o) in pairs {
                if p > 0 {
                    pos += o;
                } else if p < 0 {
                    neg += o;
                }
            }
            pos - neg
        }
        IlluminationMode::BinaryOffset => pairs.filter(|(&p, _)| p > 0).map(|(_, &o)| o).sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    None,
    Gaussian,
}

/// Additive background-light noise `E` on each bucket value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// Standard deviation of `E`.
    pub sigma: f64,
    /// Mean of `E`.
    pub mean_offset: f64,
    pub target_dsnr_db: Option<f64>,
}

impl NoiseModel {
    pub const fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            sigma: 0.0,
            mean_offset: 0.0,
            target_dsnr_db: None,
        }
    }

    pub fn gaussian(sigma: f64, mean_offset: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0 && mean_offset.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise sigma {sigma} / mean {mean_offset} must be finite with sigma >= 0"
            )));
        }
        Ok(Self {
            kind: NoiseKind::Gaussian,
            sigma,
            mean_offset,
            target_dsnr_db: None,
        })
    }

    pub fn is_none(&self) -> bool {
        self.kind == NoiseKind::None
    }

    /// The draw `E_m` for measurement `m` under `seed`.
    pub fn sample(&self, seed: u64, m: u64) -> f64 {
        match self.kind {
            NoiseKind::None => 0.0,
            NoiseKind::Gaussian => self.mean_offset + self.sigma * rng::standard_normal(seed, NOISE_STREAM, m),
        }
    }

    /// `E_0 .. E_{count-1}`.
    pub fn samples(&self, seed: u64, count: usize) -> Vec<f64> {
        (0..count as u64).map(|m| self.sample(seed, m)).collect()
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::none()
    }
}

/// Gaussian noise whose DSNR against `mean_bucket` is `target_dsnr_db`:
/// `sigma = mean_bucket · 10^(−target/10)`. An infinite target means no noise.
pub fn calibrate_noise(target_dsnr_db: f64, mean_bucket: f64) -> Result<NoiseModel> {
    if !(mean_bucket.is_finite() && mean_bucket > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mean bucket value must be positive, got {mean_bucket}"
        )));
    }
    if target_dsnr_db == f64::INFINITY {
        return Ok(NoiseModel::none());
    }
    if target_dsnr_db.is_nan() || target_dsnr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument(format!("invalid DSNR target {target_dsnr_db}")));
    }
    let mut model = NoiseModel::gaussian(mean_bucket * libm::pow(10.0, -target_dsnr_db / 10.0), 0.0)?;
    model.target_dsnr_db = Some(target_dsnr_db);
    Ok(model)
}

/// The ordered measurement stream of one acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketRecord {
    values: Vec<f64>,
    pub mode: IlluminationMode,
    pub seed: u64,
    pub noise: NoiseModel,
    top_tier: u32,
}

impl BucketRecord {
    /// Wraps values for positions `0..values.len()`.
    pub fn new(values: Vec<f64>, top_tier: u32, mode: IlluminationMode, seed: u64, noise: NoiseModel) -> Result<Self> {
        if values.len() as u64 > tier_len(top_tier) {
            return Err(Error::InvalidRecord(format!(
                "{} entries exceed the {} patterns of tier {top_tier}",
                values.len(),
                tier_len(top_tier)
            )));
        }
        if let Some(m) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidRecord(format!("non-finite bucket value at m={m}")));
        }
        Ok(Self {
            values,
            mode,
            seed,
            noise,
            top_tier,
        })
    }

    /// Validates `(m, value)` pairs: strictly increasing and gap-free from 0.
    pub fn from_entries(
        entries: &[(u64, f64)],
        top_tier: u32,
        mode: IlluminationMode,
        seed: u64,
        noise: NoiseModel,
    ) -> Result<Self> {
        for (i, &(m, _)) in entries.iter().enumerate() {
            if m != i as u64 {
                return Err(Error::InvalidRecord(format!("expected m={i}, found m={m} (gapped or unordered)")));
            }
        }
        Self::new(entries.iter().map(|&(_, b)| b).collect(), top_tier, mode, seed, noise)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn entries(&self) -> impl Iterator<Item = (SequenceIndex, f64)> + '_ {
        self.values.iter().enumerate().map(|(m, &b)| (SequenceIndex(m as u64), b))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn top_tier(&self) -> u32 {
        self.top_tier
    }

    /// The first `len` entries.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        if len > self.values.len() {
            return Err(Error::InvalidRecord(format!(
                "prefix {len} longer than record of {}",
                self.values.len()
            )));
        }
        Ok(Self {
            values: self.values[..len].to_vec(),
            ..self.clone()
        })
    }

    /// Adds `E_m` drawn from `noise` under `seed` to every entry. Applied to a
    /// noiseless record this yields exactly what [`run_acquisition`] returns.
    pub fn with_noise(&self, noise: NoiseModel, seed: u64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(m, &b)| b + noise.sample(seed, m as u64))
            .collect();
        Self {
            values,
            mode: self.mode,
            seed,
            noise,
            top_tier: self.top_tier,
        }
    }

    /// Mean single-projection detector reading, `<B>` in the DSNR definition.
    /// Only meaningful on a noiseless record that starts at `m = 0`.
    ///
    /// Binary-offset readings are the bucket values themselves. Signed records
    /// are converted to the equivalent `+1`-pixel reading `(B + B_0) / 2`.
    /// Differential records average the two half-pattern readings, which sum
    /// to the total flux `B_0` for every `m`.
    pub fn mean_reading(&self) -> Result<f64> {
        let Some(&flux) = self.values.first() else {
            return Err(Error::InvalidRecord("empty record".to_string()));
        };
        let n = self.values.len() as f64;
        Ok(match self.mode {
            IlluminationMode::BinaryOffset => self.values.iter().sum::<f64>() / n,
            IlluminationMode::Signed => self.values.iter().map(|&b| 0.5 * (b + flux)).sum::<f64>() / n,
            IlluminationMode::Differential => 0.5 * flux,
        })
    }
}

/// Measures the first `plan.measurements()` sequence patterns and adds noise.
pub fn run_acquisition(
    scene: &Scene,
    plan: &AcquisitionPlan,
    mode: IlluminationMode,
    noise: NoiseModel,
    seed: u64,
) -> Result<BucketRecord> {
    let clean = acquire_noiseless(scene, plan, mode)?;
    Ok(if noise.is_none() {
        BucketRecord { seed, ..clean }
    } else {
        clean.with_noise(noise, seed)
    })
}

/// Noiseless acquisition; the seed field is 0.
pub fn acquire_noiseless(scene: &Scene, plan: &AcquisitionPlan, mode: IlluminationMode) -> Result<BucketRecord> {
    let top = plan.top_tier();
    if scene.top_tier() != top {
        return Err(Error::InvalidPlan(format!(
            "plan top tier {top} does not match a {}x{} scene",
            scene.side(),
            scene.side()
        )));
    }
    let mut pattern = SquareGrid::filled(scene.side(), 0i8);
    let mut values = Vec::with_capacity(plan.measurements());
    for m in 0..plan.measurements() as u64 {
        seq_to_pattern_into(SequenceIndex(m), top, &mut pattern)?;
        values.push(bucket(&pattern, scene, mode)?);
    }
    BucketRecord::new(values, top, mode, 0, NoiseModel::none())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hadamard::pattern_2d;
    use crate::ordering::seq_to_pattern;
    use proptest::prelude::*;

    fn random_scene(top_tier: u32, seed: u64) -> Scene {
        synthetic_scene(SyntheticKind::Random, top_tier, seed).unwrap()
    }

    #[test]
    fn scene_validation() {
        assert!(Scene::new(SquareGrid::filled(3, 0.5), "x").is_err());
        assert!(Scene::new(SquareGrid::filled(4, 1.5), "x").is_err());
        assert!(Scene::new(SquareGrid::filled(4, f64::NAN), "x").is_err());
        assert!(Scene::new(SquareGrid::filled(4, 1.0), "x").is_ok());
    }

    #[test]
    fn rect_scene_is_padded_centered() {
        let s = Scene::from_rect(2, 3, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6], "rect").unwrap();
        assert_eq!(s.side(), 4);
        assert_eq!(s.reflectance()[(1, 0)], 0.1);
        assert_eq!(s.reflectance()[(2, 2)], 0.6);
        assert_eq!(s.reflectance()[(0, 0)], 0.0);
        assert!(s.provenance().contains("zero-padded from 2x3"));
    }

    #[test]
    fn all_ones_pattern_gives_flux() {
        let scene = random_scene(3, 1);
        let ones = SquareGrid::filled(8, 1i8);
        for mode in IlluminationMode::ALL {
            let b = bucket(&ones, &scene, mode).unwrap();
            assert!((b - scene.total_flux()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_scene_gives_zero() {
        let scene = Scene::new(SquareGrid::filled(4, 0.0), "zero").unwrap();
        for m in 0..16 {
            let p = seq_to_pattern(SequenceIndex(m), 2).unwrap();
            for mode in IlluminationMode::ALL {
                assert_eq!(bucket(&p, &scene, mode).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn size_mismatch() {
        let scene = random_scene(2, 1);
        let p = SquareGrid::filled(8, 1i8);
        assert!(matches!(
            bucket(&p, &scene, IlluminationMode::Signed),
            Err(Error::SizeMismatch { expected: 4, actual: 8 })
        ));
    }

    #[test]
    fn mode_identities_on_small_scene() {
        let scene = random_scene(2, 9);
        let p = pattern_2d(2, 1, 3).unwrap().values;
        let signed = bucket(&p, &scene, IlluminationMode::Signed).unwrap();
        let diff = bucket(&p, &scene, IlluminationMode::Differential).unwrap();
        let bin = bucket(&p, &scene, IlluminationMode::BinaryOffset).unwrap();
        assert!((signed - diff).abs() <= 1e-12 * scene.total_flux());
        assert!((bin - 0.5 * (signed + scene.total_flux())).abs() <= 1e-12 * scene.total_flux());
        // literal (1 + P) / 2 weighting
        let literal: f64 = p
            .as_slice()
            .iter()
            .zip(scene.reflectance().as_slice())
            .map(|(&v, &o)| 0.5 * (1.0 + f64::from(v)) * o)
            .sum();
        assert!((bin - literal).abs() < 1e-12);
    }

    #[test]
    fn calibration() {
        let n = calibrate_noise(20.0, 1.0).unwrap();
        assert!((n.sigma - 0.01).abs() < 1e-15);
        assert_eq!(n.target_dsnr_db, Some(20.0));
        let none = calibrate_noise(f64::INFINITY, 1.0).unwrap();
        assert!(none.is_none());
        assert_eq!(none.sigma, 0.0);
        assert!(calibrate_noise(20.0, 0.0).is_err());
        assert!(calibrate_noise(20.0, -1.0).is_err());
        assert!(calibrate_noise(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn acquisition_single_measurement_is_flux() {
        let scene = random_scene(3, 4);
        let plan = AcquisitionPlan::new(3, 1).unwrap();
        let rec = run_acquisition(&scene, &plan, IlluminationMode::Signed, NoiseModel::none(), 0).unwrap();
        assert_eq!(rec.len(), 1);
        assert!((rec.values()[0] - scene.total_flux()).abs() < 1e-12);
    }

    #[test]
    fn acquisition_is_deterministic() {
        let scene = random_scene(4, 5);
        let plan = AcquisitionPlan::new(4, 200).unwrap();
        let noise = NoiseModel::gaussian(0.3, 0.1).unwrap();
        let a = run_acquisition(&scene, &plan, IlluminationMode::Differential, noise, 77).unwrap();
        let b = run_acquisition(&scene, &plan, IlluminationMode::Differential, noise, 77).unwrap();
        let bits = |r: &BucketRecord| r.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = run_acquisition(&scene, &plan, IlluminationMode::Differential, noise, 78).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn noise_is_indexed_by_measurement() {
        // A shorter run sees exactly the same leading noise draws.
        let scene = random_scene(3, 2);
        let noise = NoiseModel::gaussian(1.0, 0.0).unwrap();
        let long = run_acquisition(&scene, &AcquisitionPlan::new(3, 64).unwrap(), IlluminationMode::Signed, noise, 3).unwrap();
        let short = run_acquisition(&scene, &AcquisitionPlan::new(3, 10).unwrap(), IlluminationMode::Signed, noise, 3).unwrap();
        assert_eq!(&long.values()[..10], short.values());
    }

    #[test]
    fn plan_scene_mismatch() {
        let scene = random_scene(3, 2);
        let plan = AcquisitionPlan::new(4, 4).unwrap();
        assert!(matches!(
            run_acquisition(&scene, &plan, IlluminationMode::Signed, NoiseModel::none(), 0),
            Err(Error::InvalidPlan(_))
        ));
    }

    #[test]
    fn record_entries_validation() {
        let ok = BucketRecord::from_entries(&[(0, 1.0), (1, 2.0)], 1, IlluminationMode::Signed, 0, NoiseModel::none());
        assert!(ok.is_ok());
        let gapped = BucketRecord::from_entries(&[(0, 1.0), (2, 2.0)], 1, IlluminationMode::Signed, 0, NoiseModel::none());
        assert!(matches!(gapped, Err(Error::InvalidRecord(_))));
        let late = BucketRecord::from_entries(&[(1, 1.0)], 1, IlluminationMode::Signed, 0, NoiseModel::none());
        assert!(late.is_err());
        let too_long = BucketRecord::new(alloc::vec![0.0; 5], 1, IlluminationMode::Signed, 0, NoiseModel::none());
        assert!(too_long.is_err());
    }

    #[test]
    fn mean_reading_per_mode() {
        let scene = random_scene(3, 8);
        let plan = AcquisitionPlan::new(3, 64).unwrap();
        let flux = scene.total_flux();
        let diff = acquire_noiseless(&scene, &plan, IlluminationMode::Differential).unwrap();
        assert!((diff.mean_reading().unwrap() - flux / 2.0).abs() < 1e-12);
        let signed = acquire_noiseless(&scene, &plan, IlluminationMode::Signed).unwrap();
        let bin = acquire_noiseless(&scene, &plan, IlluminationMode::BinaryOffset).unwrap();
        assert!((signed.mean_reading().unwrap() - bin.mean_reading().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn synthetic_scenes_are_valid() {
        for kind in SyntheticKind::ALL {
            let s = synthetic_scene(kind, 5, 11).unwrap();
            assert_eq!(s.side(), 32);
            assert_eq!(SyntheticKind::from_name(kind.name()), Some(kind));
            assert_eq!(s, synthetic_scene(kind, 5, 11).unwrap());
        }
        assert!(bright_square(3, (6, 0), 3, "x").is_err());
    }

    proptest! {
        #[test]
        fn signed_and_differential_agree(seed in 0u64..1000, m in 0u64..256) {
            let scene = random_scene(4, seed);
            let p = seq_to_pattern(SequenceIndex(m), 4).unwrap();
            let s = bucket(&p, &scene, IlluminationMode::Signed).unwrap();
            let d = bucket(&p, &scene, IlluminationMode::Differential).unwrap();
            prop_assert!((s - d).abs() <= 1e-12 * scene.total_flux().max(1.0));
        }
    }
}
