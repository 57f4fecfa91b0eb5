//! Fixtures for the estimator benchmarks.

use covest_core::asf::{kernel_centres, random_asf, true_covariance, uniform_kernels, SteeringDictionary};
use covest_core::harness::derive_rng;
use covest_core::music::{grid_step, run_music};
use covest_core::sampling::{add_noise, sample_channels, sample_covariance};
use covest_core::{Aoa, ArrayGeometry, CMat, Dictionary, SampleCovariance, SnapshotSet, SpikeCountConfig};

/// One snapshot set with everything the estimators consume.
pub struct Fixture {
    pub geom: ArrayGeometry,
    pub sigma_h: CMat,
    pub snapshots: SnapshotSet,
    pub sample: SampleCovariance,
    pub dict: Dictionary,
    pub steering: SteeringDictionary,
    pub resolution: usize,
    pub n0: f64,
}

impl Fixture {
    /// Random ASF on a ULA of `m` elements with `n` snapshots at 20 dB.
    pub fn ula(m: usize, n: usize, seed: u64) -> Fixture {
        let geom = ArrayGeometry::ula(m).expect("valid size");
        let n0 = 0.01;
        let asf = random_asf(&geom, &mut derive_rng(seed, "asf", &[0]));
        let sigma_h = true_covariance(&geom, &asf).expect("valid ASF");
        let mut rng = derive_rng(seed, "trial", &[0]);
        let snapshots = add_noise(&sample_channels(&sigma_h, n, &mut rng).expect("PSD"), n0, &mut rng).expect("n0 > 0");
        let sample = sample_covariance(&snapshots);
        let resolution = 10 * m;
        let music = run_music(&sample.matrix, &geom, &SpikeCountConfig::default(), resolution, &mut rng).expect("music");
        let kernels = uniform_kernels(&geom, 2 * m).expect("kernels");
        let dict = Dictionary::build(&geom, &music.spikes.locations, &kernels, grid_step(resolution)).expect("dictionary");
        let mut rival: Vec<Aoa> = music.spikes.locations.clone();
        rival.extend(kernel_centres(&geom, &kernels));
        let steering = SteeringDictionary::new(&geom, rival).expect("steering");
        Fixture {
            geom,
            sigma_h,
            snapshots,
            sample,
            dict,
            steering,
            resolution,
            n0,
        }
    }
}
