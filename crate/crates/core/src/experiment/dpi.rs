//! Distribution-shift validation of the low-dimensional shape features.
//!
//! Shape features reach the policy as stochastically sampled interior
//! points. Passing both splits through that same channel can only shrink
//! their divergence relative to the raw corner encoding, so the sampled
//! features should generalize no worse. This module measures the
//! train-to-test divergence of both encodings with a k-nearest-neighbor
//! estimator and reports the comparison per seed.

use crate::safe::{ShapeFeature, SHAPE_POINTS};
use crate::sim::asset::{generate_split, AssetGenConfig, ObjectAsset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Divergence KL(P || Q) from samples, k-nearest-neighbor estimate:
/// (d/n_p) * sum_i ln(nu_k(i) / rho_k(i)) + ln(n_q / (n_p - 1)),
/// where rho_k is the k-th neighbor distance within P (self excluded) and
/// nu_k the k-th neighbor distance into Q. Estimates below zero clamp to
/// zero. Ties are broken beforehand by a deterministic jitter the caller
/// applies; distances of zero are floored to a tiny epsilon.
pub fn knn_kl_divergence(p: &[Vec<f64>], q: &[Vec<f64>], k: usize) -> f64 {
    assert!(k >= 1);
    assert!(p.len() > k, "need more than k samples in p");
    assert!(q.len() >= k, "need at least k samples in q");
    let d = p[0].len() as f64;
    let n_p = p.len();
    let n_q = q.len();
    let floor = 1e-30;

    let kth = |dists: &mut Vec<f64>, k: usize| -> f64 {
        dists.sort_by(|a, b| a.total_cmp(b));
        dists[k - 1].max(floor)
    };

    let mut acc = 0.0;
    for (i, x) in p.iter().enumerate() {
        let mut rho: Vec<f64> = p
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, y)| dist(x, y))
            .collect();
        let mut nu: Vec<f64> = q.iter().map(|y| dist(x, y)).collect();
        acc += (kth(&mut nu, k) / kth(&mut rho, k)).ln();
    }
    let est = (d / n_p as f64) * acc + ((n_q as f64) / (n_p as f64 - 1.0)).ln();
    est.max(0.0)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Centered, flattened handle feature of one asset: corners verbatim or
/// freshly sampled interior points.
fn handle_feature_vector(asset: &ObjectAsset, sampled: bool, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let handle = asset.handle_at(0.0);
    let feature = if sampled {
        ShapeFeature::capture(&handle, SHAPE_POINTS, rng)
    } else {
        ShapeFeature::from_corners(&handle)
    };
    feature.flatten_centered(&handle.pose.position)
}

fn jitter(v: &mut [f64], rng: &mut ChaCha8Rng) {
    for x in v {
        *x += rng.gen_range(-1e-12..=1e-12);
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DpiRow {
    pub seed: u64,
    pub kl_corners: f64,
    pub kl_sampled: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DpiReport {
    pub k: usize,
    pub rows: Vec<DpiRow>,
    pub mean_kl_corners: f64,
    pub mean_kl_sampled: f64,
}

impl DpiReport {
    /// Sampled features generalize at least as well, within a tolerance in
    /// nats for estimator noise.
    pub fn passes(&self, slack_nats: f64) -> bool {
        self.mean_kl_sampled <= self.mean_kl_corners + slack_nats
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,kl_corners,kl_sampled\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:.9},{:.9}\n", r.seed, r.kl_corners, r.kl_sampled));
        }
        out.push_str(&format!("mean,{:.9},{:.9}\n", self.mean_kl_corners, self.mean_kl_sampled));
        out
    }
}

/// Divergence KL(test || train) of handle features under both encodings,
/// repeated over seeds. The same jitter stream breaks ties for both so the
/// comparison is apples to apples.
pub fn run_dpi(assets_cfg: &AssetGenConfig, seeds: &[u64], k: usize) -> DpiReport {
    let (train, test) = generate_split(assets_cfg);
    let mut rows = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut kl = [0.0; 2];
        for (slot, sampled) in [(0usize, false), (1usize, true)] {
            let mut feat_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(2).wrapping_add(sampled as u64));
            let mut jit_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(3).wrapping_add(17));
            let mut q: Vec<Vec<f64>> = train
                .iter()
                .map(|a| handle_feature_vector(a, sampled, &mut feat_rng))
                .collect();
            let mut p: Vec<Vec<f64>> = test
                .iter()
                .map(|a| handle_feature_vector(a, sampled, &mut feat_rng))
                .collect();
            for v in q.iter_mut().chain(p.iter_mut()) {
                jitter(v, &mut jit_rng);
            }
            kl[slot] = knn_kl_divergence(&p, &q, k);
        }
        rows.push(DpiRow { seed, kl_corners: kl[0], kl_sampled: kl[1] });
    }
    let n = rows.len() as f64;
    let mean_kl_corners = rows.iter().map(|r| r.kl_corners).sum::<f64>() / n;
    let mean_kl_sampled = rows.iter().map(|r| r.kl_sampled).sum::<f64>() / n;
    DpiReport { k, rows, mean_kl_corners, mean_kl_sampled }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn gaussian_cloud(n: usize, d: usize, mean: f64, std: f64, seed: u64) -> Vec<Vec<f64>> {
        use rand_distr::{Distribution, Normal};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(mean, std).unwrap();
        (0..n).map(|_| (0..d).map(|_| normal.sample(&mut rng)).collect()).collect()
    }

    #[test]
    fn estimator_matches_closed_form_gaussian_kl() {
        // KL(N(m1, s^2 I) || N(0, s^2 I)) = d * m1^2 / (2 s^2).
        let d = 2;
        let shift: f64 = 0.8;
        let std: f64 = 1.0;
        let expected = d as f64 * shift * shift / (2.0 * std * std);
        let p = gaussian_cloud(1200, d, shift, std, 1);
        let q = gaussian_cloud(1200, d, 0.0, std, 2);
        let est = knn_kl_divergence(&p, &q, 3);
        assert!(
            (est - expected).abs() < 0.15,
            "kNN estimate {est} too far from closed form {expected}"
        );
    }

    #[test]
    fn identical_distributions_read_near_zero() {
        let p = gaussian_cloud(600, 3, 0.0, 1.0, 5);
        let q = gaussian_cloud(600, 3, 0.0, 1.0, 6);
        let est = knn_kl_divergence(&p, &q, 3);
        assert!(est < 0.1, "same-distribution KL should be near zero, got {est}");
    }

    #[test]
    fn estimate_never_goes_negative() {
        // Undersampled identical distributions often estimate below zero;
        // the clamp keeps the report interpretable.
        for seed in 0..20 {
            let p = gaussian_cloud(12, 4, 0.0, 1.0, 100 + seed);
            let q = gaussian_cloud(40, 4, 0.0, 1.0, 200 + seed);
            assert!(knn_kl_divergence(&p, &q, 3) >= 0.0);
        }
    }

    #[test]
    fn report_is_deterministic_and_shaped() {
        let cfg = AssetGenConfig::default();
        let a = run_dpi(&cfg, &[1, 2, 3], 3);
        let b = run_dpi(&cfg, &[1, 2, 3], 3);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.rows.len(), 3);
        let csv = a.to_csv();
        assert_eq!(csv.lines().count(), 1 + 3 + 1);
        assert!(csv.lines().last().unwrap().starts_with("mean,"));
    }

    #[test]
    fn sampling_channel_shrinks_split_divergence() {
        // The core claim on the real asset distribution, generously seeded.
        let cfg = AssetGenConfig::default();
        let report = run_dpi(&cfg, &[11, 22, 33, 44, 55], 3);
        assert!(
            report.passes(0.1),
            "sampled features diverged more: corners {} vs sampled {}",
            report.mean_kl_corners,
            report.mean_kl_sampled
        );
    }

    #[test]
    fn jitter_is_tiny_and_deterministic() {
        let mut a = vec![1.0; 8];
        let mut b = vec![1.0; 8];
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        jitter(&mut a, &mut r1);
        jitter(&mut b, &mut r2);
        assert_eq!(a, b);
        assert!(a.iter().all(|&x| (x - 1.0).abs() <= 1e-12));
        let _ = r1.gen::<u64>();
    }
}
