//! Stochastic generation: planted events, correlated activity, Rayleigh
//! channels, received pilot signals and the per-pilot energy statistics.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::sysmodel::{FadingProfile, MeasurementMatrix, PilotHopCode, System, SystemConfig, Topology};
use crate::{dist2, Point};

/// Positions of the events that trigger user activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventSet {
    pub positions: Vec<Point>,
}

impl EventSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// `E` i.i.d. uniform points on the unit square.
pub fn sample_events<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> EventSet {
    let positions = (0..config.num_events)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    EventSet { positions }
}

/// Probability that an event at `event` activates a user at `user`.
#[inline]
pub fn activation_probability(user: &Point, event: &Point, sigma_e2: f64) -> f64 {
    (-dist2(user, event) / (2.0 * sigma_e2)).exp()
}

/// Binary activity pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityVector {
    pub alpha: Vec<bool>,
}

impl ActivityVector {
    pub fn inactive(k: usize) -> Self {
        ActivityVector {
            alpha: vec![false; k],
        }
    }

    pub fn from_support(k: usize, support: &[usize]) -> Self {
        let mut alpha = vec![false; k];
        for &i in support {
            alpha[i] = true;
        }
        ActivityVector { alpha }
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn num_active(&self) -> usize {
        self.alpha.iter().filter(|&&a| a).count()
    }

    pub fn support(&self) -> Vec<usize> {
        self.alpha
            .iter()
            .enumerate()
            .filter_map(|(k, &a)| a.then_some(k))
            .collect()
    }

    pub fn to_f64(&self) -> DVector<f64> {
        DVector::from_iterator(self.alpha.len(), self.alpha.iter().map(|&a| a as u8 as f64))
    }
}

impl Serialize for ActivityVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.alpha.iter().map(|&a| a as u8))
    }
}

impl<'de> Deserialize<'de> for ActivityVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let bits = Vec::<u8>::deserialize(d)?;
        let alpha = bits
            .into_iter()
            .map(|b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(serde::de::Error::custom(format!(
                    "activity entries must be 0 or 1, got {other}"
                ))),
            })
            .collect::<std::result::Result<_, _>>()?;
        Ok(ActivityVector { alpha })
    }
}

/// Every (user, event) pair draws an independent Bernoulli; a user is active
/// if at least one event activates it. All `K * E` draws are always consumed.
pub fn sample_activity<R: Rng + ?Sized>(
    topology: &Topology,
    events: &EventSet,
    config: &SystemConfig,
    rng: &mut R,
) -> ActivityVector {
    let alpha = topology
        .user_positions
        .iter()
        .map(|x| {
            let mut active = false;
            for e in &events.positions {
                let u: f64 = rng.random();
                active |= u < activation_probability(x, e, config.event_variance);
            }
            active
        })
        .collect();
    ActivityVector { alpha }
}

/// Channel vectors `g_k^t` for a subset of users.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Users whose channels were drawn, in column order.
    pub users: Vec<usize>,
    /// `g[t]` is `ML x users.len()`; rows stacked base station by base station.
    pub g: Vec<DMatrix<Complex64>>,
}

impl ChannelRealization {
    pub fn column_of(&self, user: usize) -> Option<usize> {
        self.users.iter().position(|&u| u == user)
    }
}

/// Circularly-symmetric complex Gaussian with variance `var`.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Independent Rayleigh channels for every interval; the block of base
/// station `l` has variance `beta_k^l`.
pub fn sample_channels<R: Rng + ?Sized>(
    fading: &FadingProfile,
    config: &SystemConfig,
    users: &[usize],
    rng: &mut R,
) -> ChannelRealization {
    let m = config.antennas_per_bs;
    let ml = config.total_antennas();
    let g = (0..config.seq_len)
        .map(|_| {
            let mut gt = DMatrix::zeros(ml, users.len());
            for (c, &k) in users.iter().enumerate() {
                for (l, &b) in fading.beta_per_bs[k].iter().enumerate() {
                    for a in 0..m {
                        gt[(l * m + a, c)] = complex_normal(rng, b);
                    }
                }
            }
            gt
        })
        .collect();
    ChannelRealization {
        users: users.to_vec(),
        g,
    }
}

/// `ML x tau_p` matrix of i.i.d. `CN(0, sigma^2)` entries.
pub fn sample_noise<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> DMatrix<Complex64> {
    let (ml, tau) = (config.total_antennas(), config.num_pilots);
    DMatrix::from_fn(ml, tau, |_, _| complex_normal(rng, config.noise_power))
}

/// Orthonormal pilot set with `phi_j = e_j`.
pub fn identity_pilots(num_pilots: usize) -> DMatrix<Complex64> {
    DMatrix::identity(num_pilots, num_pilots)
}

/// `Y^t = sum_k alpha_k sqrt(tau_p p_k) g_k^t phi_{j(k,t)}^H + noise` for an
/// arbitrary pilot matrix whose columns are the `phi_j`.
#[allow(clippy::too_many_arguments)]
pub fn pilot_signal(
    code: &PilotHopCode,
    activity: &ActivityVector,
    channels: &ChannelRealization,
    fading: &FadingProfile,
    config: &SystemConfig,
    t: usize,
    pilots: &DMatrix<Complex64>,
    noise: &DMatrix<Complex64>,
) -> Result<DMatrix<Complex64>> {
    if t >= config.seq_len || t >= channels.g.len() {
        return Err(Error::DimensionMismatch(format!(
            "interval {t} outside 0..{}",
            config.seq_len
        )));
    }
    let tau = config.num_pilots;
    let gt = &channels.g[t];
    let mut y = noise.clone();
    for k in activity.support() {
        let c = channels.column_of(k).ok_or_else(|| {
            Error::DimensionMismatch(format!("no channel drawn for active user {k}"))
        })?;
        let amp = (tau as f64 * fading.powers[k]).sqrt();
        let j = code.pilot(k, t);
        let phi = pilots.column(j);
        let g = gt.column(c);
        // Rank-one update g phi^H.
        for col in 0..tau {
            let w = phi[col].conj() * amp;
            if w == Complex64::new(0.0, 0.0) {
                continue;
            }
            for row in 0..y.nrows() {
                y[(row, col)] += g[row] * w;
            }
        }
    }
    Ok(y)
}

/// Received pilot-phase signal in interval `t` (zero-based) with standard
/// basis pilots; the noise block is drawn from `rng`.
#[allow(clippy::too_many_arguments)]
pub fn received_pilot_signal<R: Rng + ?Sized>(
    code: &PilotHopCode,
    activity: &ActivityVector,
    channels: &ChannelRealization,
    fading: &FadingProfile,
    config: &SystemConfig,
    rng: &mut R,
    t: usize,
) -> Result<DMatrix<Complex64>> {
    let noise = sample_noise(config, rng);
    pilot_signal(
        code,
        activity,
        channels,
        fading,
        config,
        t,
        &identity_pilots(config.num_pilots),
        &noise,
    )
}

/// `E_i = |Y phi_i|^2 / ML - sigma^2` for standard basis pilots.
pub fn energy_measurement(y: &DMatrix<Complex64>, config: &SystemConfig) -> Vec<f64> {
    let ml = y.nrows() as f64;
    y.column_iter()
        .map(|c| c.norm_squared() / ml - config.noise_power)
        .collect()
}

/// Energy statistic for an arbitrary orthonormal pilot set.
pub fn energy_measurement_with_pilots(
    y: &DMatrix<Complex64>,
    pilots: &DMatrix<Complex64>,
    config: &SystemConfig,
) -> Vec<f64> {
    let ml = y.nrows() as f64;
    let proj = y * pilots;
    proj.column_iter()
        .map(|c| c.norm_squared() / ml - config.noise_power)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EnergySource {
    MonteCarlo,
    Asymptotic,
}

/// Energy estimates flattened with `t` outer and the pilot index inner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyVector {
    pub y: Vec<f64>,
    pub source: EnergySource,
}

impl EnergyVector {
    pub fn as_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.y)
    }
}

/// Noiseless limit `y = A alpha`.
pub fn asymptotic_energy(matrix: &MeasurementMatrix, activity: &ActivityVector) -> Result<EnergyVector> {
    if matrix.ncols() != activity.len() {
        return Err(Error::DimensionMismatch(format!(
            "A has {} columns, activity has {} entries",
            matrix.ncols(),
            activity.len()
        )));
    }
    let mut y = vec![0.0; matrix.nrows()];
    for k in activity.support() {
        for (yi, a) in y.iter_mut().zip(matrix.a.column(k).iter()) {
            *yi += a;
        }
    }
    Ok(EnergyVector {
        y,
        source: EnergySource::Asymptotic,
    })
}

/// Full finite-antenna measurement: channels for the active users from
/// `channel_rng`, noise blocks from `noise_rng`, energies for all intervals.
pub fn monte_carlo_energy<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    system: &System,
    activity: &ActivityVector,
    channel_rng: &mut R1,
    noise_rng: &mut R2,
) -> Result<EnergyVector> {
    let cfg = &system.config;
    if activity.len() != cfg.num_users {
        return Err(Error::DimensionMismatch(format!(
            "activity has {} entries, system has {} users",
            activity.len(),
            cfg.num_users
        )));
    }
    let channels = sample_channels(&system.fading, cfg, &activity.support(), channel_rng);
    let mut y = Vec::with_capacity(cfg.num_measurements());
    for t in 0..cfg.seq_len {
        let yt = received_pilot_signal(
            &system.code,
            activity,
            &channels,
            &system.fading,
            cfg,
            noise_rng,
            t,
        )?;
        y.extend(energy_measurement(&yt, cfg));
    }
    Ok(EnergyVector {
        y,
        source: EnergySource::MonteCarlo,
    })
}

/// Ground truth and measurements of one Monte Carlo trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRealization {
    pub seed: u64,
    pub events: EventSet,
    pub alpha: ActivityVector,
    #[serde(flatten)]
    pub energy: EnergyVector,
}

/// Draws events, activity and energies from the sub-streams of `seed`.
pub fn simulate_trial(system: &System, seed: u64, source: EnergySource) -> Result<TrialRealization> {
    let cfg = &system.config;
    let events = sample_events(cfg, &mut stream_rng(seed, Stream::Events));
    let alpha = sample_activity(
        &system.topology,
        &events,
        cfg,
        &mut stream_rng(seed, Stream::Activity),
    );
    let energy = match source {
        EnergySource::Asymptotic => asymptotic_energy(&system.matrix, &alpha)?,
        EnergySource::MonteCarlo => monte_carlo_energy(
            system,
            &alpha,
            &mut stream_rng(seed, Stream::Channels),
            &mut stream_rng(seed, Stream::Noise),
        )?,
    };
    Ok(TrialRealization {
        seed,
        events,
        alpha,
        energy,
    })
}
