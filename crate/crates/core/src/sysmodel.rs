//! Deterministic system construction: user grid, base stations, large-scale
//! fading with statistical channel inversion, pilot-hopping codes and the
//! energy measurement matrix.

use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::{dist2, Point};

/// Physical and scenario parameters of the random access system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// Number of users `K`.
    pub num_users: usize,
    /// Number of base stations `L`.
    pub num_bs: usize,
    /// Antennas per base station `M`.
    pub antennas_per_bs: usize,
    /// Orthogonal pilots per coherence interval.
    pub num_pilots: usize,
    /// Length of a pilot-hopping sequence in coherence intervals.
    pub seq_len: usize,
    pub snr_db: f64,
    /// Noise power `sigma^2` (linear).
    pub noise_power: f64,
    /// Maximum per-user power scale `p`.
    pub max_power: f64,
    pub pathloss_exponent: f64,
    /// Variance of the Gaussian event-activation kernel (area units).
    pub event_variance: f64,
    pub num_events: usize,
    /// Neighbor radius used for the TV and group structures (strict `<`).
    pub neighbor_radius: f64,
    /// Users per grid dimension; `grid_side^2` must equal `num_users`.
    pub grid_side: usize,
    /// Explicit base-station positions. Required unless `num_bs == 4`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bs_positions: Option<Vec<Point>>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self::paper()
    }
}

/// Base stations at the centre of each edge of the unit square.
pub const EDGE_MIDPOINTS: [Point; 4] = [[0.0, 0.5], [1.0, 0.5], [0.5, 0.0], [0.5, 1.0]];

impl SystemConfig {
    /// The 36x36 industrial IoT scenario: four 32-antenna base stations,
    /// 10 pilots, sequences of 10 intervals, 10 dB SNR.
    pub fn paper() -> Self {
        SystemConfig {
            num_users: 1296,
            num_bs: 4,
            antennas_per_bs: 32,
            num_pilots: 10,
            seq_len: 10,
            snr_db: 10.0,
            noise_power: 1.0,
            max_power: 1.0,
            pathloss_exponent: 3.76,
            event_variance: 0.001,
            num_events: 3,
            neighbor_radius: 0.05,
            grid_side: 36,
            bs_positions: None,
        }
    }

    /// Reduced scenario for fast runs: an 18x18 grid with 6 pilots and
    /// 6 intervals. Radius and event variance are rescaled with the grid
    /// spacing so neighbor sets keep 9 members and an event still activates
    /// about the same number of users.
    pub fn quick() -> Self {
        SystemConfig {
            num_users: 324,
            num_pilots: 6,
            seq_len: 6,
            event_variance: 0.004,
            neighbor_radius: 0.1,
            grid_side: 18,
            ..Self::paper()
        }
    }

    /// Total number of receive antennas `ML`.
    pub fn total_antennas(&self) -> usize {
        self.num_bs * self.antennas_per_bs
    }

    /// Number of energy measurements `tau_p * T`.
    pub fn num_measurements(&self) -> usize {
        self.num_pilots * self.seq_len
    }

    pub fn snr_linear(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    /// Number of distinct pilot-hopping sequences, `None` if it overflows u128.
    pub fn num_sequences(&self) -> Option<u128> {
        (self.num_pilots as u128).checked_pow(self.seq_len as u32)
    }

    /// Checks the hard invariants and returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let counts = [
            ("num_users", self.num_users),
            ("num_bs", self.num_bs),
            ("antennas_per_bs", self.antennas_per_bs),
            ("num_pilots", self.num_pilots),
            ("seq_len", self.seq_len),
            ("grid_side", self.grid_side),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        let positive = [
            ("noise_power", self.noise_power),
            ("max_power", self.max_power),
            ("event_variance", self.event_variance),
            ("neighbor_radius", self.neighbor_radius),
            ("pathloss_exponent", self.pathloss_exponent),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config("snr_db must be finite".into()));
        }
        if self.grid_side * self.grid_side != self.num_users {
            return Err(Error::Config(format!(
                "grid_side^2 = {} does not equal num_users = {}",
                self.grid_side * self.grid_side,
                self.num_users
            )));
        }
        match &self.bs_positions {
            Some(p) if p.len() != self.num_bs => {
                return Err(Error::Config(format!(
                    "bs_positions has {} entries but num_bs = {}",
                    p.len(),
                    self.num_bs
                )))
            }
            None if self.num_bs != 4 => {
                return Err(Error::Config(
                    "bs_positions must be given when num_bs != 4".into(),
                ))
            }
            _ => {}
        }
        if let Some(n) = self.num_sequences() {
            if (self.num_users as u128) > n {
                return Err(Error::InfeasibleCodes {
                    users: self.num_users,
                    available: n.to_string(),
                });
            }
        }
        let mut warnings = Vec::new();
        if self.num_measurements() > self.num_users {
            warnings.push(format!(
                "measurement matrix is tall ({} measurements, {} users)",
                self.num_measurements(),
                self.num_users
            ));
        }
        Ok(warnings)
    }
}

/// User and base-station geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub user_positions: Vec<Point>,
    pub bs_positions: Vec<Point>,
    /// `distances[k][l]`: distance from user `k` to base station `l`.
    pub distances: Vec<Vec<f64>>,
}

impl Topology {
    pub fn num_users(&self) -> usize {
        self.user_positions.len()
    }

    /// `N(k) = { i : |x_k - x_i| < radius }`, including `k` itself.
    pub fn neighbor_sets(&self, radius: f64) -> Vec<Vec<usize>> {
        let r2 = radius * radius;
        self.user_positions
            .iter()
            .map(|xk| {
                self.user_positions
                    .iter()
                    .enumerate()
                    .filter(|(_, xi)| dist2(xk, xi) < r2)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect()
    }
}

/// Places users at grid cell centres (row-major) and computes distances.
pub fn build_topology(config: &SystemConfig) -> Result<Topology> {
    config.validate()?;
    let side = config.grid_side;
    let user_positions: Vec<Point> = (0..config.num_users)
        .map(|k| {
            let (row, col) = (k / side, k % side);
            [
                (col as f64 + 0.5) / side as f64,
                (row as f64 + 0.5) / side as f64,
            ]
        })
        .collect();
    let bs_positions = config
        .bs_positions
        .clone()
        .unwrap_or_else(|| EDGE_MIDPOINTS.to_vec());
    let distances: Vec<Vec<f64>> = user_positions
        .iter()
        .map(|x| bs_positions.iter().map(|b| dist2(x, b).sqrt()).collect())
        .collect();
    if distances.iter().flatten().any(|&d| d <= 0.0) {
        return Err(Error::DegenerateGeometry(
            "a user coincides with a base station".into(),
        ));
    }
    Ok(Topology {
        user_positions,
        bs_positions,
        distances,
    })
}

/// Mean over base stations of `d^-eta` for every user (fading with `gamma = 1`).
fn unit_gain(topology: &Topology, eta: f64) -> Result<Vec<f64>> {
    topology
        .distances
        .iter()
        .map(|row| {
            if row.iter().any(|&d| d <= 0.0 || !d.is_finite()) {
                return Err(Error::DegenerateGeometry(
                    "zero or non-finite user-to-base-station distance".into(),
                ));
            }
            Ok(row.iter().map(|d| d.powf(-eta)).sum::<f64>() / row.len() as f64)
        })
        .collect()
}

/// Path-loss constant that makes `p * beta_min / sigma^2` equal the target SNR.
pub fn calibrate_gamma(config: &SystemConfig, topology: &Topology) -> Result<f64> {
    let gains = unit_gain(topology, config.pathloss_exponent)?;
    let min_gain = gains.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_gain.is_finite() && min_gain > 0.0) {
        return Err(Error::DegenerateGeometry("no users in topology".into()));
    }
    Ok(config.snr_linear() * config.noise_power / (config.max_power * min_gain))
}

/// Large-scale fading coefficients and channel-inversion transmit powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadingProfile {
    /// `beta_per_bs[k][l] = gamma * d_kl^-eta`.
    pub beta_per_bs: Vec<Vec<f64>>,
    /// Mean of `beta_per_bs[k]` over base stations.
    pub beta: Vec<f64>,
    pub beta_min: f64,
    pub gamma: f64,
    /// `p_k = p * beta_min / beta_k`.
    pub powers: Vec<f64>,
}

impl FadingProfile {
    /// Received SNR `p_k beta_k / sigma^2` of every user.
    pub fn received_snr(&self, noise_power: f64) -> Vec<f64> {
        self.powers
            .iter()
            .zip(&self.beta)
            .map(|(p, b)| p * b / noise_power)
            .collect()
    }

    pub fn argmin_beta(&self) -> usize {
        self.beta
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (k, &b)| if b < best.1 { (k, b) } else { best })
            .0
    }
}

pub fn build_fading(config: &SystemConfig, topology: &Topology, gamma: f64) -> Result<FadingProfile> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
    }
    let eta = config.pathloss_exponent;
    let beta_per_bs: Vec<Vec<f64>> = topology
        .distances
        .iter()
        .map(|row| row.iter().map(|d| gamma * d.powf(-eta)).collect())
        .collect();
    let beta: Vec<f64> = beta_per_bs
        .iter()
        .map(|row| row.iter().sum::<f64>() / row.len() as f64)
        .collect();
    let beta_min = beta.iter().copied().fold(f64::INFINITY, f64::min);
    let powers = beta
        .iter()
        .map(|&b| {
            if b == beta_min {
                config.max_power
            } else {
                config.max_power * beta_min / b
            }
        })
        .collect();
    Ok(FadingProfile {
        beta_per_bs,
        beta,
        beta_min,
        gamma,
        powers,
    })
}

/// Pilot-hopping sequences; `hops[k][t]` is the 1-based pilot of user `k` in
/// interval `t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PilotHopCode {
    pub num_pilots: usize,
    pub hops: Vec<Vec<u32>>,
}

impl PilotHopCode {
    /// Zero-based pilot index of user `k` in interval `t` (zero-based).
    #[inline]
    pub fn pilot(&self, k: usize, t: usize) -> usize {
        self.hops[k][t] as usize - 1
    }

    pub fn num_users(&self) -> usize {
        self.hops.len()
    }

    pub fn seq_len(&self) -> usize {
        self.hops.first().map_or(0, Vec::len)
    }

    /// Row index of measurement `(t, i)` in the flattened energy vector.
    #[inline]
    pub fn row(&self, t: usize, pilot: usize) -> usize {
        t * self.num_pilots + pilot
    }
}

/// Draws `K` distinct sequences uniformly from the `tau_p^T` possible ones.
pub fn generate_code<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<PilotHopCode> {
    if let Some(n) = config.num_sequences() {
        if (config.num_users as u128) > n {
            return Err(Error::InfeasibleCodes {
                users: config.num_users,
                available: n.to_string(),
            });
        }
    }
    let tau = config.num_pilots as u32;
    let mut seen = HashSet::with_capacity(config.num_users);
    let mut hops = Vec::with_capacity(config.num_users);
    while hops.len() < config.num_users {
        let row: Vec<u32> = (0..config.seq_len).map(|_| rng.random_range(1..=tau)).collect();
        if seen.insert(row.clone()) {
            hops.push(row);
        }
    }
    Ok(PilotHopCode {
        num_pilots: config.num_pilots,
        hops,
    })
}

/// The `tau_p T x K` matrix mapping activity to expected pilot energies.
/// Row `(t, i)` is stored at index `t * tau_p + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    pub a: DMatrix<f64>,
}

impl MeasurementMatrix {
    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.a.ncols()
    }

    pub fn column_norms(&self) -> Vec<f64> {
        self.a.column_iter().map(|c| c.norm()).collect()
    }

    /// Copy with every entry divided by `scale`.
    pub fn scaled(&self, scale: f64) -> MeasurementMatrix {
        MeasurementMatrix {
            a: &self.a / scale,
        }
    }
}

impl Serialize for MeasurementMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            rows: usize,
            cols: usize,
            data: Vec<Vec<f64>>,
        }
        let data = self
            .a
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        Repr {
            rows: self.a.nrows(),
            cols: self.a.ncols(),
            data,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MeasurementMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            rows: usize,
            cols: usize,
            data: Vec<Vec<f64>>,
        }
        let r = Repr::deserialize(deserializer)?;
        if r.data.len() != r.rows || r.data.iter().any(|row| row.len() != r.cols) {
            return Err(serde::de::Error::custom("matrix data does not match rows x cols"));
        }
        let a = DMatrix::from_fn(r.rows, r.cols, |i, j| r.data[i][j]);
        Ok(MeasurementMatrix { a })
    }
}

pub fn build_measurement_matrix(
    code: &PilotHopCode,
    fading: &FadingProfile,
    config: &SystemConfig,
) -> Result<MeasurementMatrix> {
    let k = code.num_users();
    if fading.powers.len() != k || fading.beta.len() != k || code.seq_len() != config.seq_len {
        return Err(Error::DimensionMismatch(format!(
            "code has {} users x {} intervals, fading has {} users, config has T = {}",
            k,
            code.seq_len(),
            fading.powers.len(),
            config.seq_len
        )));
    }
    let tau = config.num_pilots as f64;
    let mut a = DMatrix::zeros(config.num_measurements(), k);
    for user in 0..k {
        let value = tau * fading.powers[user] * fading.beta[user];
        for t in 0..config.seq_len {
            a[(code.row(t, code.pilot(user, t)), user)] = value;
        }
    }
    Ok(MeasurementMatrix { a })
}

/// All trial-invariant system artifacts.
#[derive(Debug, Clone)]
pub struct System {
    pub config: SystemConfig,
    pub topology: Topology,
    pub fading: FadingProfile,
    pub code: PilotHopCode,
    pub matrix: MeasurementMatrix,
}

impl System {
    /// Builds the system; the pilot codes are drawn from the `Codes` stream
    /// of `seed`.
    pub fn build(config: &SystemConfig, seed: u64) -> Result<System> {
        let topology = build_topology(config)?;
        let gamma = calibrate_gamma(config, &topology)?;
        let fading = build_fading(config, &topology, gamma)?;
        let code = generate_code(config, &mut stream_rng(seed, Stream::Codes))?;
        let matrix = build_measurement_matrix(&code, &fading, config)?;
        Ok(System {
            config: config.clone(),
            topology,
            fading,
            code,
            matrix,
        })
    }

    /// Common value `tau_p p beta_min` of every nonzero entry of `A`.
    pub fn energy_scale(&self) -> f64 {
        self.config.num_pilots as f64 * self.config.max_power * self.fading.beta_min
    }
}
