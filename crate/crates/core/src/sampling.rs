//! Stratified and i.i.d. uniform samples under a reproducible seed contract.
//!
//! Every random stream is a ChaCha8 generator keyed by a 64-bit master seed
//! and positioned on one of its 2^64 independent streams by `stream_id`. The
//! same `(master_seed, stream_id)` pair always replays the same sequence.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_distr::Exp1;
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::format::fmt_f64;
use crate::geometry::Partition;

/// Smallest stratum volume accepted by the rejection sampler.
pub const MIN_STRATUM_VOLUME: f64 = 1e-9;

/// Cube draws allowed per unit of inverse minimum stratum volume.
pub const DRAW_SAFETY_FACTOR: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("stratum {stratum} has volume {volume:e}, below the minimum {MIN_STRATUM_VOLUME:e}")]
    DegenerateStratum { stratum: usize, volume: f64 },
    #[error("stratum {stratum} (volume {volume:e}) still empty after {draws} cube draws")]
    IterationCap {
        stratum: usize,
        volume: f64,
        draws: u64,
    },
    #[error("invalid sampling parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        RngSpec {
            master_seed,
            stream_id,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// SplitMix64 finaliser; used to derive child seeds from a master seed and a
/// tag (run index, evaluation index, ...).
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(master ^ mix(tag))
}

/// `N` points in `[0,1]^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    d: usize,
    coords: Vec<f64>,
    strata: Option<Vec<usize>>,
    rng: RngSpec,
}

impl PointSet {
    pub fn from_points(d: usize, points: &[Vec<f64>]) -> Result<Self, SamplingError> {
        if d == 0 {
            return Err(SamplingError::Parameter("dimension must be >= 1".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * d);
        for p in points {
            if p.len() != d {
                return Err(SamplingError::Parameter(format!(
                    "point has {} coordinates, expected {d}",
                    p.len()
                )));
            }
            if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(SamplingError::Parameter(
                    "coordinates must lie in [0, 1]".into(),
                ));
            }
            coords.extend_from_slice(p);
        }
        Ok(PointSet {
            d,
            coords,
            strata: None,
            rng: RngSpec::new(0, 0),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.d)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn strata(&self) -> Option<&[usize]> {
        self.strata.as_deref()
    }

    pub fn rng_spec(&self) -> RngSpec {
        self.rng
    }

    /// CSV with a header row; coordinates carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["point".to_string(), "stratum".to_string()];
        header.extend((1..=self.d).map(|j| format!("x{j}")));
        header.push("sum".into());
        w.write_record(&header)?;
        for (i, p) in self.points().enumerate() {
            let mut row = vec![i.to_string()];
            row.push(match &self.strata {
                Some(s) => s[i].to_string(),
                None => String::new(),
            });
            row.extend(p.iter().map(|&x| fmt_f64(x)));
            row.push(fmt_f64(p.iter().sum()));
            w.write_record(&row)?;
        }
        w.flush()
    }
}

impl Serialize for PointSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let points: Vec<&[f64]> = self.points().collect();
        let mut st = serializer.serialize_struct("PointSet", 5)?;
        st.serialize_field("d", &self.d)?;
        st.serialize_field("seed", &self.rng.master_seed)?;
        st.serialize_field("stream", &self.rng.stream_id)?;
        st.serialize_field("points", &points)?;
        st.serialize_field("strata", &self.strata)?;
        st.end()
    }
}

/// How the point of one stratum is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    /// Rejection from the cube.
    Sweep,
    /// `[lo, hi]` inside the corner simplex `sum <= 1`.
    LowerCorner { lo: f64, hi: f64 },
    /// `[lo, hi]` inside `sum >= d - 1`, sampled by reflection `x -> 1 - x`.
    UpperCorner { lo: f64, hi: f64 },
}

/// Draws one uniform point per stratum.
///
/// Strata that meet the interior of the cube are filled by a single
/// rejection sweep: uniform cube points are assigned to strata by their
/// coordinate sum and the first point landing in each still-empty stratum is
/// kept, which makes it uniform on that stratum. Expected cost for `N` equal
/// strata is `N * H_N` cube draws.
///
/// A stratum lying within `sum <= 1` (or `sum >= d - 1`) is a layer of a
/// corner simplex where the cube constraints are inactive; there the sum has
/// density proportional to `s^(d-1)` and the cross-section is a scaled
/// simplex, so it is sampled directly. This keeps thin corner strata cheap.
#[derive(Debug, Clone)]
pub struct StratifiedSampler {
    partition: Partition,
    volumes: Vec<f64>,
    modes: Vec<Mode>,
    sweep_strata: usize,
    max_draws: u64,
}

impl StratifiedSampler {
    pub fn new(partition: &Partition) -> Result<Self, SamplingError> {
        let volumes = partition.volumes();
        let (stratum, &min_vol) = volumes
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("a partition has at least one stratum");
        if min_vol.is_nan() || min_vol < MIN_STRATUM_VOLUME {
            return Err(SamplingError::DegenerateStratum {
                stratum,
                volume: min_vol,
            });
        }
        let upper = partition.dim() as f64;
        let modes: Vec<Mode> = (0..partition.strata())
            .map(|s| {
                let (lo, hi) = partition.bounds(s);
                if partition.dim() == 1 {
                    Mode::Sweep
                } else if hi <= 1.0 {
                    Mode::LowerCorner { lo, hi }
                } else if lo >= upper - 1.0 {
                    Mode::UpperCorner {
                        lo: upper - hi,
                        hi: upper - lo,
                    }
                } else {
                    Mode::Sweep
                }
            })
            .collect();
        let sweep_strata = modes.iter().filter(|m| **m == Mode::Sweep).count();
        let sweep_min = volumes
            .iter()
            .zip(&modes)
            .filter(|(_, m)| **m == Mode::Sweep)
            .map(|(v, _)| *v)
            .fold(f64::INFINITY, f64::min);
        let max_draws = if sweep_strata == 0 {
            0
        } else {
            (DRAW_SAFETY_FACTOR / sweep_min).ceil().max(1.0) as u64
        };
        Ok(StratifiedSampler {
            partition: partition.clone(),
            volumes,
            modes,
            sweep_strata,
            max_draws,
        })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn strata(&self) -> usize {
        self.volumes.len()
    }

    /// Cap on cube draws for one rejection sweep (0 if no stratum needs one).
    pub fn max_draws(&self) -> u64 {
        self.max_draws
    }

    /// Fills `out` (length `N * d`, stratum-major) and returns the number of
    /// cube draws used by the rejection sweep. `filled` is scratch space of
    /// length `N`.
    pub fn sample_into<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        out: &mut [f64],
        filled: &mut [bool],
    ) -> Result<u64, SamplingError> {
        let d = self.partition.dim();
        debug_assert_eq!(out.len(), self.strata() * d);
        debug_assert_eq!(filled.len(), self.strata());
        for (f, m) in filled.iter_mut().zip(&self.modes) {
            *f = *m != Mode::Sweep;
        }
        let mut remaining = self.sweep_strata;
        let mut draws = 0u64;
        let mut x = [0.0f64; crate::geometry::MAX_DIM];
        let x = &mut x[..d];
        while remaining > 0 {
            if draws >= self.max_draws {
                let stratum = filled.iter().position(|f| !f).unwrap_or(0);
                return Err(SamplingError::IterationCap {
                    stratum,
                    volume: self.volumes[stratum],
                    draws,
                });
            }
            draws += 1;
            let mut sum = 0.0;
            for xi in x.iter_mut() {
                *xi = rng.random::<f64>();
                sum += *xi;
            }
            let s = self.partition.locate(sum);
            if !filled[s] {
                filled[s] = true;
                remaining -= 1;
                out[s * d..(s + 1) * d].copy_from_slice(x);
            }
        }
        for (s, mode) in self.modes.iter().enumerate() {
            let (lo, hi, reflect) = match *mode {
                Mode::Sweep => continue,
                Mode::LowerCorner { lo, hi } => (lo, hi, false),
                Mode::UpperCorner { lo, hi } => (lo, hi, true),
            };
            let dst = &mut out[s * d..(s + 1) * d];
            // rounding can push the sum across a cut; redraw in that case
            loop {
                corner_layer(rng, lo, hi, dst);
                if reflect {
                    dst.iter_mut().for_each(|v| *v = 1.0 - *v);
                }
                if self.partition.locate(dst.iter().sum()) == s {
                    break;
                }
            }
        }
        Ok(draws)
    }
}

/// Uniform point of `{x >= 0 : lo <= sum(x) <= hi}` for `hi <= 1`.
fn corner_layer<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64, out: &mut [f64]) {
    let d = out.len() as i32;
    let u: f64 = rng.random();
    let (a, b) = (lo.powi(d), hi.powi(d));
    let s = (a + u * (b - a)).powf(1.0 / d as f64).clamp(lo, hi);
    let mut total = 0.0;
    for v in out.iter_mut() {
        *v = rng.sample::<f64, _>(Exp1);
        total += *v;
    }
    for v in out.iter_mut() {
        *v = (*v / total * s).min(1.0);
    }
}

/// One uniform point per stratum of `part`; point `s` lies in stratum `s`.
pub fn sample_stratified(part: &Partition, rng: RngSpec) -> Result<PointSet, SamplingError> {
    let sampler = StratifiedSampler::new(part)?;
    let n = sampler.strata();
    let d = part.dim();
    let mut coords = vec![0.0; n * d];
    let mut filled = vec![false; n];
    sampler.sample_into(&mut rng.rng(), &mut coords, &mut filled)?;
    Ok(PointSet {
        d,
        coords,
        strata: Some((0..n).collect()),
        rng,
    })
}

pub(crate) fn fill_uniform<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = rng.random::<f64>();
    }
}

/// `n` independent uniform points in `[0,1]^d`.
pub fn sample_iid(d: usize, n: usize, rng: RngSpec) -> Result<PointSet, SamplingError> {
    if d == 0 || n == 0 {
        return Err(SamplingError::Parameter(format!(
            "need d >= 1 and N >= 1, got d = {d}, N = {n}"
        )));
    }
    let mut coords = vec![0.0; n * d];
    fill_uniform(&mut rng.rng(), &mut coords);
    Ok(PointSet {
        d,
        coords,
        strata: None,
        rng,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generating_set;

    #[test]
    fn single_stratum() {
        for d in 1..=6 {
            let part = Partition::whole(d).unwrap();
            let ps = sample_stratified(&part, RngSpec::new(3, 9)).unwrap();
            assert_eq!(ps.len(), 1);
            assert_eq!(ps.strata(), Some(&[0usize][..]));
            assert!(ps.point(0).iter().all(|x| (0.0..1.0).contains(x)));
        }
    }

    #[test]
    fn each_point_lies_in_its_stratum() {
        for d in 1..=5 {
            let part = generating_set(d, 9).unwrap();
            for stream in 0..50 {
                let ps = sample_stratified(&part, RngSpec::new(1, stream)).unwrap();
                for (s, p) in ps.points().enumerate() {
                    let sum: f64 = p.iter().sum();
                    let (lo, hi) = part.bounds(s);
                    assert!(lo <= sum && sum <= hi);
                    assert_eq!(part.locate(sum), s);
                }
            }
        }
    }

    #[test]
    fn lower_triangle_mean_sum() {
        // E[x1 + x2 | x1 + x2 <= 1] = 2/3
        let part = Partition::new(2, vec![1.0]).unwrap();
        let sampler = StratifiedSampler::new(&part).unwrap();
        let reps = 100_000;
        let mut sums = Vec::with_capacity(reps);
        let mut out = vec![0.0; 4];
        let mut filled = vec![false; 2];
        let mut rng = RngSpec::new(5, 0).rng();
        for _ in 0..reps {
            sampler.sample_into(&mut rng, &mut out, &mut filled).unwrap();
            let s = out[0] + out[1];
            assert!(s <= 1.0);
            sums.push(s);
        }
        let (mean, se) = crate::numeric::mean_and_std_err(&sums);
        assert!((mean - 2.0 / 3.0).abs() < 4.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn acceptance_rate_matches_volume() {
        // every cube draw lands in stratum s with probability 1/10
        let part = generating_set(2, 10).unwrap();
        let mut rng = RngSpec::new(8, 0).rng();
        let draws = 200_000;
        let mut hits = [0usize; 10];
        for _ in 0..draws {
            let s: f64 = rng.random::<f64>() + rng.random::<f64>();
            hits[part.locate(s)] += 1;
        }
        let se = (0.1 * 0.9 / draws as f64).sqrt();
        for h in hits {
            assert!((h as f64 / draws as f64 - 0.1).abs() < 3.5 * se);
        }
    }

    #[test]
    fn corner_layer_mean_sum() {
        // sum density on [1/2, 1] is proportional to s^2 in d = 3
        let part = Partition::new(3, vec![0.5, 1.0]).unwrap();
        let sampler = StratifiedSampler::new(&part).unwrap();
        let mut out = vec![0.0; 9];
        let mut filled = vec![false; 3];
        let mut rng = RngSpec::new(6, 0).rng();
        let mut sums = Vec::new();
        for _ in 0..100_000 {
            sampler.sample_into(&mut rng, &mut out, &mut filled).unwrap();
            sums.push(out[3] + out[4] + out[5]);
        }
        let want = ((1.0 - 0.5f64.powi(4)) / 4.0) / ((1.0 - 0.5f64.powi(3)) / 3.0);
        let (mean, se) = crate::numeric::mean_and_std_err(&sums);
        assert!((mean - want).abs() < 4.0 * se, "{mean} vs {want}");
    }

    #[test]
    fn thin_corner_strata_are_cheap() {
        let part = Partition::new(2, vec![1e-4, 1.0, 2.0 - 1e-4]).unwrap();
        let sampler = StratifiedSampler::new(&part).unwrap();
        assert_eq!(sampler.max_draws(), 0);
        let ps = sample_stratified(&part, RngSpec::new(1, 1)).unwrap();
        let s0: f64 = ps.point(0).iter().sum();
        let s3: f64 = ps.point(3).iter().sum();
        assert!(s0 < 1e-4 && s3 >= 2.0 - 1e-4);
    }

    #[test]
    fn degenerate_strata_are_rejected() {
        let part = Partition::new(2, vec![1.0, 1.0 + 1e-10]).unwrap();
        let err = sample_stratified(&part, RngSpec::new(0, 0)).unwrap_err();
        assert!(matches!(err, SamplingError::DegenerateStratum { stratum: 1, .. }));
    }

    #[test]
    fn iteration_cap_names_the_starving_stratum() {
        let part = Partition::new(3, vec![1.5, 1.5 + 2e-9]).unwrap();
        let sampler = StratifiedSampler::new(&part).unwrap();
        assert!(sampler.max_draws() >= 30_000_000_000);
        // a generator that only ever produces 0.25 never reaches stratum 1
        struct Stuck;
        impl rand::RngCore for Stuck {
            fn next_u32(&mut self) -> u32 {
                (self.next_u64() >> 32) as u32
            }
            fn next_u64(&mut self) -> u64 {
                1 << 62
            }
            fn fill_bytes(&mut self, dst: &mut [u8]) {
                rand::rand_core::impls::fill_bytes_via_next(self, dst)
            }
        }
        let small = Partition::new(3, vec![1.5]).unwrap();
        let sampler = StratifiedSampler::new(&small).unwrap();
        let mut out = vec![0.0; 6];
        let mut filled = vec![false; 2];
        let err = sampler.sample_into(&mut Stuck, &mut out, &mut filled).unwrap_err();
        assert!(matches!(err, SamplingError::IterationCap { stratum: 1, draws: 100, .. }));
    }

    #[test]
    fn iid_mean_and_replay() {
        let ps = sample_iid(4, 250_000, RngSpec::new(42, 1)).unwrap();
        let (mean, se) = crate::numeric::mean_and_std_err(ps.coords());
        assert!((mean - 0.5).abs() < 3.0 * se);
        assert!(ps.strata().is_none());
        let again = sample_iid(4, 250_000, RngSpec::new(42, 1)).unwrap();
        assert_eq!(ps, again);
        let other = sample_iid(4, 10, RngSpec::new(42, 2)).unwrap();
        assert_ne!(&ps.coords()[..40], other.coords());
        assert!(sample_iid(2, 0, RngSpec::new(0, 0)).is_err());
    }

    #[test]
    fn csv_serialisation_is_reproducible() {
        let part = generating_set(3, 5).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        sample_stratified(&part, RngSpec::new(77, 3)).unwrap().write_csv(&mut a).unwrap();
        sample_stratified(&part, RngSpec::new(77, 3)).unwrap().write_csv(&mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("point,stratum,x1,x2,x3,sum\n"));
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|t| derive_seed(1, t)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
