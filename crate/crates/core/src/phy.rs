//! Link budget, sectored antenna model and per-packet decode probabilities.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::gamma_expectation;

pub const TWO_PI: f64 = 2.0 * PI;
const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Thermal noise density at room temperature.
const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Physical layer constants shared by every beam of a scenario.
///
/// Angles are stored in degrees as they appear in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhyParams {
    pub tx_power_w: f64,
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub pathloss_exp: f64,
    pub rx_gain_db: f64,
    /// Side lobe gain `z`.
    pub sidelobe_gain: f64,
    pub min_beamwidth_deg: f64,
    pub nakagami_m: f64,
}

impl Default for PhyParams {
    fn default() -> Self {
        PhyParams {
            tx_power_w: 1.0,
            carrier_freq_hz: 28e9,
            bandwidth_hz: 1e9,
            noise_figure_db: 7.6,
            pathloss_exp: 3.0,
            rx_gain_db: 11.83,
            sidelobe_gain: 0.05,
            min_beamwidth_deg: 11.25,
            nakagami_m: 4.0,
        }
    }
}

impl PhyParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tx_power_w", self.tx_power_w),
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("pathloss_exp", self.pathloss_exp),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(format!("phy.{key}: must be positive, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.sidelobe_gain) {
            return Err(Error::validation(format!(
                "phy.sidelobe_gain: must lie in [0, 1), got {}",
                self.sidelobe_gain
            )));
        }
        if !(self.min_beamwidth_deg > 0.0 && self.min_beamwidth_deg <= 360.0) {
            return Err(Error::validation(format!(
                "phy.min_beamwidth_deg: must lie in (0, 360], got {}",
                self.min_beamwidth_deg
            )));
        }
        if !(self.nakagami_m >= 0.5 && self.nakagami_m.is_finite()) {
            return Err(Error::validation(format!("phy.nakagami_m: must be at least 0.5, got {}", self.nakagami_m)));
        }
        if !self.noise_figure_db.is_finite() || !self.rx_gain_db.is_finite() {
            return Err(Error::validation("phy: gains must be finite"));
        }
        Ok(())
    }

    /// Beam resolution in radians.
    pub fn min_beamwidth(&self) -> f64 {
        self.min_beamwidth_deg.to_radians()
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    /// Free-space loss at the 1 m reference distance, `(lambda / 4 pi)^2`.
    pub fn reference_pathloss(&self) -> f64 {
        (self.wavelength() / (4.0 * PI)).powi(2)
    }

    pub fn noise_power_dbm(&self) -> f64 {
        THERMAL_NOISE_DBM_PER_HZ + self.noise_figure_db + linear_to_db(self.bandwidth_hz)
    }

    /// `N0 * W` in watts.
    pub fn noise_power_w(&self) -> f64 {
        db_to_linear(self.noise_power_dbm()) * 1e-3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct User {
    /// 1-based identifier; the position of the user in the scenario.
    #[serde(skip)]
    pub id: usize,
    pub radius_m: f64,
    pub angle_deg: f64,
}

impl User {
    pub fn new(id: usize, radius_m: f64, angle_deg: f64) -> Self {
        User { id, radius_m, angle_deg }
    }

    pub fn angle(&self) -> f64 {
        self.angle_deg.to_radians()
    }
}

/// A modulation order paired with a Reed–Solomon code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModScheme {
    pub name: String,
    pub bits_per_symbol: u32,
    pub code_n: u32,
    pub code_k: u32,
    #[serde(default = "default_symbol_bits")]
    pub symbol_bits: u32,
}

fn default_symbol_bits() -> u32 {
    8
}

impl ModScheme {
    pub fn new(name: &str, bits_per_symbol: u32, code_n: u32, code_k: u32) -> Self {
        ModScheme { name: name.to_string(), bits_per_symbol, code_n, code_k, symbol_bits: 8 }
    }

    pub fn qam4_239() -> Self {
        ModScheme::new("4-QAM RS(255,239)", 2, 255, 239)
    }

    pub fn qam16_223() -> Self {
        ModScheme::new("16-QAM RS(255,223)", 4, 255, 223)
    }

    pub fn validate(&self) -> Result<()> {
        if ![1, 2, 4, 6].contains(&self.bits_per_symbol) {
            return Err(Error::validation(format!(
                "bits_per_symbol must be one of 1, 2, 4, 6 (got {})",
                self.bits_per_symbol
            )));
        }
        if self.symbol_bits == 0 || self.symbol_bits > 16 {
            return Err(Error::validation(format!("symbol_bits out of range: {}", self.symbol_bits)));
        }
        let max_n = (1u32 << self.symbol_bits) - 1;
        if !(0 < self.code_k && self.code_k < self.code_n && self.code_n <= max_n) {
            return Err(Error::validation(format!(
                "code (n={}, k={}) must satisfy 0 < k < n <= {max_n}",
                self.code_n, self.code_k
            )));
        }
        Ok(())
    }

    pub fn code_rate(&self) -> f64 {
        self.code_k as f64 / self.code_n as f64
    }

    /// Correctable symbol errors per RS block.
    pub fn correctable(&self) -> u32 {
        (self.code_n - self.code_k) / 2
    }

    /// RS blocks needed to carry one MAC packet.
    pub fn blocks_per_packet(&self, packet_bits: u64) -> u64 {
        let block_bits = self.code_k as u64 * self.symbol_bits as u64;
        packet_bits.div_ceil(block_bits)
    }
}

/// An ordered set of user indices (0-based), stored as a bitmask.
///
/// Displayed with 1-based user ids, e.g. `{1,2}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct UserSet(u64);

impl UserSet {
    pub const MAX_USERS: usize = 64;

    pub fn empty() -> Self {
        UserSet(0)
    }

    pub fn singleton(i: usize) -> Self {
        UserSet(1 << i)
    }

    pub fn all(n: usize) -> Self {
        if n >= 64 {
            UserSet(u64::MAX)
        } else {
            UserSet((1u64 << n) - 1)
        }
    }

    pub fn from_bits(bits: u64) -> Self {
        UserSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: UserSet) -> UserSet {
        UserSet(self.0 | other.0)
    }

    pub fn intersects(self, other: UserSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// All non-empty subsets of `{0, .., n-1}`, ordered like [`Ord`].
    pub fn all_groups(n: usize) -> Vec<UserSet> {
        let mut groups: Vec<UserSet> = (1..(1u64 << n)).map(UserSet).collect();
        groups.sort();
        groups
    }
}

impl FromIterator<usize> for UserSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = UserSet::empty();
        for i in iter {
            s.insert(i);
        }
        s
    }
}

// lexicographic on the sorted member lists: {1} < {1,2} < {1,3} < {2}
impl Ord for UserSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for UserSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A beam aimed at a group of users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGroup {
    pub members: UserSet,
    /// Radians.
    pub beamwidth: f64,
    /// Radians, in `[0, 2 pi)`.
    pub boresight: f64,
}

impl BeamGroup {
    pub fn covers(&self, angle: f64) -> bool {
        angular_offset(angle, self.boresight).abs() <= 0.5 * self.beamwidth + 1e-12
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TWO_PI);
    if w >= TWO_PI {
        0.0
    } else {
        w
    }
}

/// Signed difference `a - b` folded into `(-pi, pi]`.
fn angular_offset(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    if d > PI {
        d - TWO_PI
    } else {
        d
    }
}

/// Smallest arc containing every angle, as `(start, span)` in radians.
pub fn covering_arc(angles: &[f64]) -> (f64, f64) {
    let mut sorted: Vec<f64> = angles.iter().map(|&a| wrap_angle(a)).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n <= 1 {
        return (sorted.first().copied().unwrap_or(0.0), 0.0);
    }
    // the arc starts right after the widest empty gap
    let mut best_gap = sorted[0] + TWO_PI - sorted[n - 1];
    let mut start = 0;
    for i in 1..n {
        let gap = sorted[i] - sorted[i - 1];
        if gap > best_gap {
            best_gap = gap;
            start = i;
        }
    }
    (sorted[start], TWO_PI - best_gap)
}

/// Transmit gain of the sectored antenna for a main lobe of width `beamwidth`.
pub fn tx_gain(beamwidth: f64, sidelobe_gain: f64) -> Result<f64> {
    if !(beamwidth > 0.0 && beamwidth <= TWO_PI) {
        return Err(Error::validation(format!("beamwidth {beamwidth} rad outside (0, 2 pi]")));
    }
    if !(0.0..1.0).contains(&sidelobe_gain) {
        return Err(Error::validation(format!("side lobe gain {sidelobe_gain} outside [0, 1)")));
    }
    Ok((TWO_PI - (TWO_PI - beamwidth) * sidelobe_gain) / beamwidth)
}

/// Narrowest realizable beam covering `members`: the minimal covering arc,
/// clamped to the antenna resolution and centred on the arc.
pub fn beam_for(members: UserSet, users: &[User], phy: &PhyParams) -> Result<BeamGroup> {
    if members.is_empty() {
        return Err(Error::validation("beam group must not be empty"));
    }
    let mut angles = Vec::with_capacity(members.len());
    for i in members.iter() {
        let u = users.get(i).ok_or_else(|| Error::validation(format!("user index {} out of range", i + 1)))?;
        angles.push(u.angle());
    }
    let (start, span) = covering_arc(&angles);
    Ok(BeamGroup { members, beamwidth: span.max(phy.min_beamwidth()), boresight: wrap_angle(start + 0.5 * span) })
}

pub fn beamwidth_for(members: UserSet, users: &[User], phy: &PhyParams) -> Result<f64> {
    beam_for(members, users, phy).map(|b| b.beamwidth)
}

/// Mean received SNR (no fading) of `user` under `beam`; `None` when the
/// user is outside the main lobe.
pub fn mean_snr(user: &User, beam: &BeamGroup, phy: &PhyParams) -> Result<Option<f64>> {
    if !beam.covers(user.angle()) {
        return Ok(None);
    }
    let gain = tx_gain(beam.beamwidth, phy.sidelobe_gain)?;
    let received = phy.tx_power_w
        * gain
        * db_to_linear(phy.rx_gain_db)
        * phy.reference_pathloss()
        * user.radius_m.powf(-phy.pathloss_exp);
    Ok(Some(received / phy.noise_power_w()))
}

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// AWGN bit error rate of Gray-coded square QAM (BPSK for one bit per
/// symbol) at symbol SNR `snr`.
pub fn bit_error_rate(bits_per_symbol: u32, snr: f64) -> f64 {
    if snr <= 0.0 {
        return 0.5;
    }
    let ber = if bits_per_symbol == 1 {
        q_function((2.0 * snr).sqrt())
    } else {
        let b = bits_per_symbol as f64;
        let order = 2f64.powf(b);
        (4.0 / b) * (1.0 - 1.0 / order.sqrt()) * q_function((3.0 * snr / (order - 1.0)).sqrt())
    };
    ber.min(0.5)
}

/// `P[Binomial(n, p) <= t]`.
fn binomial_cdf(n: u32, p: f64, t: u32) -> f64 {
    if t >= n || p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let ln_n = ln_gamma(n as f64 + 1.0);
    let sum: f64 = (0..=t)
        .map(|j| {
            let ln_choose = ln_n - ln_gamma(j as f64 + 1.0) - ln_gamma((n - j) as f64 + 1.0);
            (ln_choose + j as f64 * ln_p + (n - j) as f64 * ln_q).exp()
        })
        .sum();
    sum.min(1.0)
}

/// Probability that a MAC packet of `packet_bits` is decoded at a fixed SNR.
pub fn packet_success(scheme: &ModScheme, packet_bits: u64, snr: f64) -> f64 {
    if snr <= 0.0 {
        return 0.0;
    }
    let ber = bit_error_rate(scheme.bits_per_symbol, snr);
    // 1 - (1 - ber)^symbol_bits without cancellation
    let symbol_error = -(scheme.symbol_bits as f64 * (-ber).ln_1p()).exp_m1();
    let block = binomial_cdf(scheme.code_n, symbol_error, scheme.correctable());
    block.powf(scheme.blocks_per_packet(packet_bits) as f64)
}

/// Fading-averaged packet decode probability at mean SNR `mean_snr`.
pub fn faded_packet_success(scheme: &ModScheme, packet_bits: u64, mean_snr: f64, phy: &PhyParams) -> Result<f64> {
    if mean_snr <= 0.0 {
        return Ok(0.0);
    }
    if mean_snr.is_infinite() {
        return Ok(1.0);
    }
    let p = gamma_expectation(|s| packet_success(scheme, packet_bits, s), phy.nakagami_m, mean_snr)?;
    Ok(p.clamp(0.0, 1.0))
}

/// How the members of a multicast beam are assumed to receive its packets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReceptionMode {
    /// One draw per beam with the weakest member's decode probability.
    #[default]
    WorstUser,
    /// Every member draws independently with its own probability.
    PerUser,
}

impl fmt::Display for ReceptionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReceptionMode::WorstUser => "worst-user",
            ReceptionMode::PerUser => "per-user",
        })
    }
}

/// Per-member decode probabilities for `scheme` over `beam`, in member order.
pub fn decode_prob(
    scheme: &ModScheme,
    beam: &BeamGroup,
    users: &[User],
    phy: &PhyParams,
    packet_bits: u64,
) -> Result<Vec<(usize, f64)>> {
    beam.members
        .iter()
        .map(|i| {
            let user = &users[i];
            let snr = mean_snr(user, beam, phy)?.unwrap_or(0.0);
            Ok((i, faded_packet_success(scheme, packet_bits, snr, phy)?))
        })
        .collect()
}

/// Airtime of one MAC packet; the symbol rate equals the bandwidth.
pub fn packet_duration(scheme: &ModScheme, packet_bits: u64, phy: &PhyParams) -> f64 {
    packet_bits as f64 / (phy.bandwidth_hz * scheme.bits_per_symbol as f64 * scheme.code_rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use proptest::prelude::*;

    const PACKET_BITS: u64 = 40_100;

    fn table1_users() -> Vec<User> {
        [
            (100.0, 5.0),
            (80.0, 25.0),
            (50.0, 27.0),
            (45.0, 35.0),
            (30.0, 45.0),
            (80.0, 65.0),
            (100.0, 72.0),
            (70.0, 86.0),
        ]
        .iter()
        .enumerate()
        .map(|(i, &(r, a))| User::new(i + 1, r, a))
        .collect()
    }

    #[test]
    fn gain_reference_values() {
        assert_eq!(tx_gain(TWO_PI, 0.05).unwrap(), 1.0);
        assert_eq!(tx_gain(TWO_PI, 0.0).unwrap(), 1.0);
        assert!((tx_gain(PI, 0.05).unwrap() - 1.95).abs() < 1e-12);
        let g = tx_gain(11.25f64.to_radians(), 0.05).unwrap();
        assert!((g - 30.45).abs() < 1e-9);
        assert!((linear_to_db(g) - 14.84).abs() < 5e-3);
    }

    #[test]
    fn gain_rejects_out_of_range() {
        assert!(tx_gain(0.0, 0.05).is_err());
        assert!(tx_gain(7.0, 0.05).is_err());
        assert!(tx_gain(1.0, 1.0).is_err());
        assert!(tx_gain(1.0, -0.1).is_err());
    }

    proptest! {
        #[test]
        fn gain_conserves_energy(psi in 0.01f64..=TWO_PI, z in 0.0f64..0.99) {
            let g = tx_gain(psi, z).unwrap();
            let total = g * psi / TWO_PI + z * (TWO_PI - psi) / TWO_PI;
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn gain_decreasing(a in 0.01f64..6.0, d in 0.001f64..0.2, z in 0.0f64..0.99) {
            prop_assert!(tx_gain(a + d, z).unwrap() < tx_gain(a, z).unwrap());
        }
    }

    #[test]
    fn beamwidth_examples() {
        let users = table1_users();
        let phy = PhyParams::default();
        let psi0 = phy.min_beamwidth();
        assert_eq!(beamwidth_for(UserSet::singleton(0), &users, &phy).unwrap(), psi0);
        // users 2 and 4: 10 degree span clamps to the resolution
        let g = [1, 3].into_iter().collect();
        assert_eq!(beamwidth_for(g, &users, &phy).unwrap(), psi0);
        // users 1 and 8
        let g = [0, 7].into_iter().collect();
        let b = beam_for(g, &users, &phy).unwrap();
        assert!((b.beamwidth - 81f64.to_radians()).abs() < 1e-12);
        assert!((b.boresight - 45.5f64.to_radians()).abs() < 1e-12);
        assert!(beam_for(UserSet::empty(), &users, &phy).is_err());
    }

    #[test]
    fn covering_arc_wraps_around_zero() {
        let (start, span) = covering_arc(&[350f64.to_radians(), 10f64.to_radians()]);
        assert!((span - 20f64.to_radians()).abs() < 1e-12);
        assert!((start - 350f64.to_radians()).abs() < 1e-12);
        let users = vec![User::new(1, 10.0, 350.0), User::new(2, 10.0, 10.0)];
        let phy = PhyParams { min_beamwidth_deg: 1.0, ..Default::default() };
        let b = beam_for(UserSet::all(2), &users, &phy).unwrap();
        assert!(b.boresight.abs() < 1e-12);
        assert!(users.iter().all(|u| b.covers(u.angle())));
    }

    #[test]
    fn every_member_inside_its_beam() {
        let users = table1_users();
        let phy = PhyParams::default();
        for g in UserSet::all_groups(8) {
            let b = beam_for(g, &users, &phy).unwrap();
            assert!(b.beamwidth >= phy.min_beamwidth());
            for i in g.iter() {
                assert!(b.covers(users[i].angle()), "{g} misses user {}", i + 1);
            }
        }
    }

    #[test]
    fn noise_power_at_one_gigahertz() {
        let phy = PhyParams::default();
        assert!((phy.noise_power_dbm() - (-76.4)).abs() < 1e-9);
    }

    #[test]
    fn snr_scales_with_distance() {
        let phy = PhyParams::default();
        let beam = BeamGroup { members: UserSet::all(2), beamwidth: phy.min_beamwidth(), boresight: 0.0 };
        let near = User::new(1, 40.0, 0.0);
        let far = User::new(2, 80.0, 0.0);
        let ratio = mean_snr(&near, &beam, &phy).unwrap().unwrap() / mean_snr(&far, &beam, &phy).unwrap().unwrap();
        assert!((ratio - 8.0).abs() < 1e-9);

        let users = table1_users();
        let all = beam_for(UserSet::all(8), &users, &phy).unwrap();
        let r = mean_snr(&users[4], &all, &phy).unwrap().unwrap() / mean_snr(&users[0], &all, &phy).unwrap().unwrap();
        assert!((r - (100.0f64 / 30.0).powi(3)).abs() < 1e-9);
        assert!((r - 37.037).abs() < 1e-3);
    }

    #[test]
    fn no_signal_outside_the_beam() {
        let phy = PhyParams::default();
        let beam = BeamGroup { members: UserSet::singleton(0), beamwidth: phy.min_beamwidth(), boresight: 0.0 };
        let outside = User::new(1, 50.0, 30.0);
        assert_eq!(mean_snr(&outside, &beam, &phy).unwrap(), None);
    }

    #[test]
    fn packet_duration_values() {
        let phy = PhyParams::default();
        let t16 = packet_duration(&ModScheme::qam16_223(), PACKET_BITS, &phy);
        assert!((t16 - 11.4636e-6).abs() < 1e-10, "{t16}");
        let t4 = packet_duration(&ModScheme::qam4_239(), PACKET_BITS, &phy);
        assert!((t4 / t16 - 892.0 / 478.0).abs() < 1e-12);
        assert!((t4 / t16 - 1.866).abs() < 1e-3);
        let t16_double = packet_duration(&ModScheme::qam16_223(), 2 * PACKET_BITS, &phy);
        assert!((t16_double / t16 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn blocks_per_packet_rounds_up() {
        assert_eq!(ModScheme::qam16_223().blocks_per_packet(PACKET_BITS), 23);
        assert_eq!(ModScheme::qam4_239().blocks_per_packet(PACKET_BITS), 21);
        assert_eq!(ModScheme::qam4_239().blocks_per_packet(1912), 1);
        assert_eq!(ModScheme::qam4_239().blocks_per_packet(1913), 2);
    }

    #[test]
    fn scheme_validation() {
        assert!(ModScheme::qam4_239().validate().is_ok());
        assert!(ModScheme::new("x", 3, 255, 239).validate().is_err());
        assert!(ModScheme::new("x", 2, 256, 239).validate().is_err());
        assert!(ModScheme::new("x", 2, 255, 255).validate().is_err());
        assert!(ModScheme::new("x", 2, 255, 0).validate().is_err());
    }

    #[test]
    fn ber_matches_known_points() {
        // 4-QAM reduces to Q(sqrt(snr))
        assert!((bit_error_rate(2, 4.0) - q_function(2.0)).abs() < 1e-15);
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        let q1 = q_function(1.0);
        assert!((q1 - 0.158_655_253_931_457).abs() < 1e-12, "{q1}");
        assert_eq!(bit_error_rate(4, 0.0), 0.5);
        assert!(bit_error_rate(1, 10.0) < bit_error_rate(2, 10.0));
    }

    #[test]
    fn binomial_cdf_matches_direct_sum() {
        // direct product form for a small case
        let (n, p) = (10u32, 0.3f64);
        let mut direct = 0.0;
        let mut choose = 1.0;
        for j in 0..=3u32 {
            if j > 0 {
                choose = choose * (n - j + 1) as f64 / j as f64;
            }
            direct += choose * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32);
        }
        assert!((binomial_cdf(n, p, 3) - direct).abs() < 1e-13);
        assert_eq!(binomial_cdf(n, 0.0, 0), 1.0);
        assert_eq!(binomial_cdf(n, 1.0, 3), 0.0);
    }

    #[test]
    fn decode_probability_limits() {
        let phy = PhyParams::default();
        let s = ModScheme::qam16_223();
        assert_eq!(faded_packet_success(&s, PACKET_BITS, 0.0, &phy).unwrap(), 0.0);
        assert_eq!(faded_packet_success(&s, PACKET_BITS, f64::INFINITY, &phy).unwrap(), 1.0);
        let high = faded_packet_success(&s, PACKET_BITS, db_to_linear(60.0), &phy).unwrap();
        assert!(high > 1.0 - 1e-12);
    }

    #[test]
    fn decode_probability_monotone_in_snr_and_order() {
        let phy = PhyParams::default();
        let q4 = ModScheme::qam4_239();
        let q16 = ModScheme::qam16_223();
        let mut prev4 = 0.0;
        let mut prev16 = 0.0;
        for k in 0..=120 {
            let snr = db_to_linear(-10.0 + 0.5 * k as f64);
            let p4 = faded_packet_success(&q4, PACKET_BITS, snr, &phy).unwrap();
            let p16 = faded_packet_success(&q16, PACKET_BITS, snr, &phy).unwrap();
            assert!((0.0..=1.0).contains(&p4) && (0.0..=1.0).contains(&p16));
            assert!(p4 + 1e-12 >= prev4, "4-QAM not monotone at step {k}");
            assert!(p16 + 1e-12 >= prev16, "16-QAM not monotone at step {k}");
            assert!(p16 <= p4 + 1e-12, "16-QAM beats 4-QAM at step {k}");
            prev4 = p4;
            prev16 = p16;
        }
    }

    #[test]
    fn fading_average_matches_independent_quadrature() {
        // independent route: plain adaptive integration of the Gamma pdf in
        // the linear SNR domain
        let phy = PhyParams::default();
        let k = phy.nakagami_m;
        for scheme in [ModScheme::qam4_239(), ModScheme::qam16_223()] {
            for db in [5.0, 10.0, 14.0, 18.0, 25.0] {
                let mean = db_to_linear(db);
                let got = faded_packet_success(&scheme, PACKET_BITS, mean, &phy).unwrap();
                let theta = mean / k;
                let norm = ln_gamma(k) + k * theta.ln();
                let pdf = |g: f64| if g <= 0.0 { 0.0 } else { ((k - 1.0) * g.ln() - g / theta - norm).exp() };
                let (want, _) =
                    integrate(|g| pdf(g) * packet_success(&scheme, PACKET_BITS, g), 0.0, mean * 40.0).unwrap();
                assert!((got - want).abs() <= 1e-6 * want.max(1e-9), "{} at {db} dB: {got} vs {want}", scheme.name);
            }
        }
    }

    #[test]
    fn wider_beam_lowers_decode_probability() {
        let phy = PhyParams::default();
        let users = vec![User::new(1, 80.0, 0.0)];
        let s = ModScheme::qam4_239();
        let mut prev = 1.0;
        for deg in [11.25, 20.0, 40.0, 80.0, 160.0, 360.0] {
            let beam = BeamGroup { members: UserSet::singleton(0), beamwidth: f64::to_radians(deg), boresight: 0.0 };
            let p = decode_prob(&s, &beam, &users, &phy, PACKET_BITS).unwrap()[0].1;
            assert!(p <= prev + 1e-12, "{deg}");
            prev = p;
        }
    }

    #[test]
    fn user_set_ordering_and_display() {
        let a: UserSet = [0].into_iter().collect();
        let ab: UserSet = [0, 1].into_iter().collect();
        let b: UserSet = [1].into_iter().collect();
        assert!(a < ab && ab < b);
        assert_eq!(ab.to_string(), "{1,2}");
        assert_eq!(UserSet::all_groups(2), vec![a, ab, b]);
        assert_eq!(UserSet::all_groups(3).len(), 7);
    }
}
