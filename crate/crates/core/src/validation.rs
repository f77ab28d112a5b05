//! Numeric comparison of generated and prototype signals: spectra,
//! amplitude distributions and a pass/fail verdict.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand_distr::{Distribution, Normal};

use crate::dsp::dft;
use crate::error::{Error, Result};
use crate::gan::{GeneratorNet, TrainingLog};
use crate::matrix::Matrix;
use crate::rng::substream;
use crate::signal::{parse_key_values, FrameStats, PrototypeTensor};
use crate::synthesis::{assemble_iq, generate_packets};

/// `|DFT|` of each packet, one column per packet: `[n_fft × P]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMatrix {
    pub magnitudes: Matrix,
}

impl SpectralMatrix {
    pub fn n_fft(&self) -> usize {
        self.magnitudes.rows()
    }

    pub fn n_packets(&self) -> usize {
        self.magnitudes.cols()
    }

    /// `sum_p |X_p[k]|^2` for every bin `k`.
    pub fn bin_energy(&self) -> Vec<f64> {
        self.magnitudes.iter_rows().map(|r| r.iter().map(|m| m * m).sum()).collect()
    }

    /// One row per bin: `bin,freq,p0,p1,...` with `freq` in cycles per sample.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin,freq");
        for p in 0..self.n_packets() {
            let _ = write!(s, ",p{p}");
        }
        s.push('\n');
        for (k, row) in self.magnitudes.iter_rows().enumerate() {
            let _ = write!(s, "{k},{}", bin_freq(k, self.n_fft()));
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}

/// Signed frequency of DFT bin `k`, in cycles per sample.
pub fn bin_freq(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64 / n as f64
    } else {
        (k as f64 - n as f64) / n as f64
    }
}

pub fn spectral_matrix(packets: &[Vec<Complex64>]) -> Result<SpectralMatrix> {
    let n = packets.first().map(Vec::len).ok_or_else(|| Error::invalid("no packets"))?;
    if packets.iter().any(|p| p.len() != n) {
        return Err(Error::shape("packets differ in length"));
    }
    let mut m = Matrix::zeros(n, packets.len());
    for (p, packet) in packets.iter().enumerate() {
        for (k, x) in dft(packet).iter().enumerate() {
            m[(k, p)] = x.norm();
        }
    }
    Ok(SpectralMatrix { magnitudes: m })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub centers: Vec<f64>,
    pub masses: Vec<f64>,
}

/// Normalized histogram over `[lo, hi]`; outliers land in the edge bins.
pub fn empirical_pdf(samples: &[f64], n_bins: usize, range: (f64, f64)) -> Result<Histogram> {
    let (lo, hi) = range;
    if samples.is_empty() {
        return Err(Error::invalid("empirical_pdf of an empty sample"));
    }
    if n_bins < 2 || !(lo < hi) {
        return Err(Error::invalid(format!("need n_bins >= 2 and lo < hi, got {n_bins} bins over [{lo}, {hi}]")));
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &x in samples {
        let b = ((x - lo) / width).floor();
        let b = if b.is_nan() { 0 } else { b.clamp(0.0, (n_bins - 1) as f64) as usize };
        counts[b] += 1;
    }
    let n = samples.len() as f64;
    Ok(Histogram {
        centers: (0..n_bins).map(|b| lo + (b as f64 + 0.5) * width).collect(),
        masses: counts.iter().map(|&c| c as f64 / n).collect(),
    })
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("ks_distance of an empty sample"));
    }
    let sorted = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s
    };
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = if a[i].total_cmp(&b[j]).is_le() { a[i] } else { b[j] };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Bins holding the top `fraction` of the energy, fewest bins first.
pub fn occupied_band(bin_energy: &[f64], fraction: f64) -> Vec<bool> {
    let total: f64 = bin_energy.iter().sum();
    let mut order: Vec<usize> = (0..bin_energy.len()).collect();
    order.sort_by(|&x, &y| bin_energy[y].total_cmp(&bin_energy[x]).then(x.cmp(&y)));
    let mut mask = vec![false; bin_energy.len()];
    let mut acc = 0.0;
    for k in order {
        if acc >= fraction * total {
            break;
        }
        mask[k] = true;
        acc += bin_energy[k];
    }
    mask
}

fn captured(bin_energy: &[f64], mask: &[bool]) -> f64 {
    let total: f64 = bin_energy.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    bin_energy.iter().zip(mask).filter(|(_, &m)| m).map(|(e, _)| e).sum::<f64>() / total
}

fn split_iq(packets: &[Vec<Complex64>]) -> Vec<f64> {
    packets.iter().flatten().flat_map(|c| [c.re, c.im]).collect()
}

/// Mean absolute correlation coefficient over pairs of the first 64 packets.
pub fn packet_diversity(packets: &[Vec<Complex64>]) -> f64 {
    let take = packets.len().min(64);
    let centered: Vec<(Vec<Complex64>, f64)> = packets[..take]
        .iter()
        .map(|p| {
            let mean = p.iter().sum::<Complex64>() / p.len() as f64;
            let v: Vec<Complex64> = p.iter().map(|x| x - mean).collect();
            let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            (v, norm)
        })
        .collect();
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for a in 0..take {
        for b in a + 1..take {
            let (va, na) = &centered[a];
            let (vb, nb) = &centered[b];
            if *na > 0.0 && *nb > 0.0 {
                let dot: Complex64 = va.iter().zip(vb).map(|(x, y)| x * y.conj()).sum();
                sum += dot.norm() / (na * nb);
            }
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        sum / pairs as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationConfig {
    /// Prototype frame to compare against.
    pub frame: usize,
    pub n_gen: usize,
    pub snr_db: f64,
    pub seed: u64,
    pub n_bins: usize,
    pub band_fraction: f64,
    pub band_ratio: f64,
    pub accuracy_band: (f64, f64),
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self { frame: 0, n_gen: 0, snr_db: -27.0, seed: 0, n_bins: 101, band_fraction: 0.9, band_ratio: 2.0, accuracy_band: (0.3, 0.8) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub ks_proto_vs_gen: f64,
    pub ks_proto_vs_noise: f64,
    pub band_energy_fraction_gen: f64,
    pub band_energy_fraction_noise: f64,
    pub mean_d_accuracy: f64,
    pub diversity_gen: f64,
    pub occupied_bins: usize,
    pub n_proto_packets: usize,
    pub n_gen_packets: usize,
    pub band_ratio: f64,
    pub accuracy_band: (f64, f64),
}

impl ValidationReport {
    pub fn ks_ok(&self) -> bool {
        self.ks_proto_vs_gen < self.ks_proto_vs_noise
    }

    pub fn band_ok(&self) -> bool {
        self.band_energy_fraction_gen >= self.band_ratio * self.band_energy_fraction_noise
    }

    pub fn accuracy_ok(&self) -> bool {
        self.mean_d_accuracy > self.accuracy_band.0 && self.mean_d_accuracy < self.accuracy_band.1
    }

    pub fn passed(&self) -> bool {
        self.ks_ok() && self.band_ok() && self.accuracy_ok()
    }

    pub fn to_text(&self) -> String {
        let mark = |ok: bool| if ok { "pass" } else { "fail" };
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        put("ks_proto_vs_gen", format!("{:?}", self.ks_proto_vs_gen));
        put("ks_proto_vs_noise", format!("{:?}", self.ks_proto_vs_noise));
        put("band_energy_fraction_gen", format!("{:?}", self.band_energy_fraction_gen));
        put("band_energy_fraction_noise", format!("{:?}", self.band_energy_fraction_noise));
        put("mean_d_accuracy", format!("{:?}", self.mean_d_accuracy));
        put("diversity_gen", format!("{:?}", self.diversity_gen));
        put("occupied_bins", self.occupied_bins.to_string());
        put("n_proto_packets", self.n_proto_packets.to_string());
        put("n_gen_packets", self.n_gen_packets.to_string());
        put("rule.band_ratio", format!("{:?}", self.band_ratio));
        put("rule.accuracy_lo", format!("{:?}", self.accuracy_band.0));
        put("rule.accuracy_hi", format!("{:?}", self.accuracy_band.1));
        put("criterion.ks_gen_below_noise", mark(self.ks_ok()).into());
        put("criterion.band_ratio", mark(self.band_ok()).into());
        put("criterion.accuracy_band", mark(self.accuracy_ok()).into());
        put("verdict", mark(self.passed()).into());
        s
    }

    /// Reads [`to_text`](Self::to_text) output. The criterion lines are
    /// recomputed and must agree with the stored ones.
    pub fn parse(text: &str) -> Result<Self> {
        let map = parse_key_values(text)?;
        let get = |k: &str| map.get(k).ok_or_else(|| Error::Parse(format!("report: missing {k}")));
        let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| Error::Parse(format!("report: bad {k}"))) };
        let int = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| Error::Parse(format!("report: bad {k}"))) };
        let r = Self {
            ks_proto_vs_gen: num("ks_proto_vs_gen")?,
            ks_proto_vs_noise: num("ks_proto_vs_noise")?,
            band_energy_fraction_gen: num("band_energy_fraction_gen")?,
            band_energy_fraction_noise: num("band_energy_fraction_noise")?,
            mean_d_accuracy: num("mean_d_accuracy")?,
            diversity_gen: num("diversity_gen")?,
            occupied_bins: int("occupied_bins")?,
            n_proto_packets: int("n_proto_packets")?,
            n_gen_packets: int("n_gen_packets")?,
            band_ratio: num("rule.band_ratio")?,
            accuracy_band: (num("rule.accuracy_lo")?, num("rule.accuracy_hi")?),
        };
        let expected = if r.passed() { "pass" } else { "fail" };
        if get("verdict")? != expected {
            return Err(Error::Parse("report: verdict disagrees with the stored numbers".into()));
        }
        Ok(r)
    }
}

/// Plot data that accompanies a report.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationTables {
    pub spectral_proto: SpectralMatrix,
    pub spectral_gen: SpectralMatrix,
    /// Mean `|X[k]|^2` per packet for prototype, generated and baseline.
    pub mean_power: [Vec<f64>; 3],
    pub occupied: Vec<bool>,
    /// Prototype, generated, baseline.
    pub pdfs: [Histogram; 3],
}

impl ValidationTables {
    pub fn spectrum_csv(&self) -> String {
        let n = self.occupied.len();
        let mut s = String::from("bin,freq,occupied,proto,gen,noise\n");
        for k in 0..n {
            let _ = writeln!(
                s,
                "{k},{},{},{},{},{}",
                bin_freq(k, n),
                self.occupied[k] as u8,
                self.mean_power[0][k],
                self.mean_power[1][k],
                self.mean_power[2][k]
            );
        }
        s
    }

    pub fn pdf_csv(&self) -> String {
        let mut s = String::from("center,proto,gen,noise\n");
        for (b, c) in self.pdfs[0].centers.iter().enumerate() {
            let _ = writeln!(s, "{c},{},{},{}", self.pdfs[0].masses[b], self.pdfs[1].masses[b], self.pdfs[2].masses[b]);
        }
        s
    }
}

/// Compares two packet sets. `mean_d_accuracy` comes from the training logs.
pub fn validate_streams(
    proto: &[Vec<Complex64>],
    generated: &[Vec<Complex64>],
    mean_d_accuracy: f64,
    cfg: &ValidationConfig,
) -> Result<(ValidationReport, ValidationTables)> {
    let proto_spec = spectral_matrix(proto)?;
    let gen_spec = spectral_matrix(generated)?;
    if proto_spec.n_fft() != gen_spec.n_fft() {
        return Err(Error::shape(format!("prototype packets are {} wide, generated {}", proto_spec.n_fft(), gen_spec.n_fft())));
    }
    let proto_vals = split_iq(proto);
    let gen_vals = split_iq(generated);
    let power = proto_vals.iter().map(|v| v * v).sum::<f64>() / proto.iter().map(Vec::len).sum::<usize>() as f64;

    let n_fft = proto_spec.n_fft();
    let normal = Normal::new(0.0, (power / 2.0).sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = substream(cfg.seed, "validate.noise");
    let noise: Vec<Vec<Complex64>> = (0..generated.len())
        .map(|_| (0..n_fft).map(|_| Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng))).collect())
        .collect();
    let noise_spec = spectral_matrix(&noise)?;
    let noise_vals = split_iq(&noise);

    let e_proto = proto_spec.bin_energy();
    let e_gen = gen_spec.bin_energy();
    let e_noise = noise_spec.bin_energy();
    let occupied = occupied_band(&e_proto, cfg.band_fraction);
    let reference = captured(&e_proto, &occupied);
    let relative = |e: &[f64]| if reference > 0.0 { (captured(e, &occupied) / reference).min(1.0) } else { 0.0 };

    let sigma = power.sqrt() / std::f64::consts::SQRT_2;
    let range = if sigma > 0.0 { (-4.0 * sigma, 4.0 * sigma) } else { (-1.0, 1.0) };
    let pdfs = [
        empirical_pdf(&proto_vals, cfg.n_bins, range)?,
        empirical_pdf(&gen_vals, cfg.n_bins, range)?,
        empirical_pdf(&noise_vals, cfg.n_bins, range)?,
    ];

    let report = ValidationReport {
        ks_proto_vs_gen: ks_distance(&proto_vals, &gen_vals)?,
        ks_proto_vs_noise: ks_distance(&proto_vals, &noise_vals)?,
        band_energy_fraction_gen: relative(&e_gen),
        band_energy_fraction_noise: relative(&e_noise),
        mean_d_accuracy,
        diversity_gen: packet_diversity(generated),
        occupied_bins: occupied.iter().filter(|&&m| m).count(),
        n_proto_packets: proto.len(),
        n_gen_packets: generated.len(),
        band_ratio: cfg.band_ratio,
        accuracy_band: cfg.accuracy_band,
    };
    let per_packet = |e: &[f64], p: usize| e.iter().map(|v| v / p as f64).collect::<Vec<_>>();
    let tables = ValidationTables {
        mean_power: [per_packet(&e_proto, proto.len()), per_packet(&e_gen, generated.len()), per_packet(&e_noise, noise.len())],
        spectral_proto: proto_spec,
        spectral_gen: gen_spec,
        occupied,
        pdfs,
    };
    Ok((report, tables))
}

/// Mean accuracy over the last quarter of each log, averaged across logs.
pub fn final_quartile_accuracy(logs: &[&TrainingLog]) -> Result<f64> {
    if logs.is_empty() || logs.iter().any(|l| l.is_empty()) {
        return Err(Error::invalid("validation needs non-empty training logs"));
    }
    let per: Vec<f64> = logs.iter().map(|l| l.mean_accuracy_last(l.len().div_ceil(4)).unwrap_or(0.0)).collect();
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

/// Generates `cfg.n_gen` packets (the frame's packet count when 0) and
/// compares them with frame `cfg.frame` of the prototype.
pub fn validate(
    i_model: &GeneratorNet,
    q_model: &GeneratorNet,
    tensor: &PrototypeTensor,
    stats: &FrameStats,
    logs: &[&TrainingLog],
    cfg: &ValidationConfig,
) -> Result<(ValidationReport, ValidationTables)> {
    if !tensor.is_normalized() {
        return Err(Error::invalid("validation expects a normalized prototype tensor"));
    }
    let power = stats.power(cfg.frame)?;
    let mean_acc = final_quartile_accuracy(logs)?;
    let n_gen = if cfg.n_gen == 0 { tensor.n_packets() } else { cfg.n_gen };
    let i = generate_packets(i_model, crate::signal::Component::I, n_gen, cfg.snr_db, cfg.seed)?;
    let q = generate_packets(q_model, crate::signal::Component::Q, n_gen, cfg.snr_db, cfg.seed)?;
    let generated = assemble_iq(&i, &q, power)?;
    let g = power.sqrt();
    let proto: Vec<Vec<Complex64>> =
        tensor.frame_packets(cfg.frame)?.into_iter().map(|p| p.into_iter().map(|c| c * g).collect()).collect();
    validate_streams(&proto, &generated, mean_acc, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn randn(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
        let d = Normal::new(0.0, sigma).unwrap();
        let mut rng = substream(seed, "t");
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn spectral_examples() {
        let packets = vec![vec![Complex64::new(2.0, -1.0); 16], (0..16).map(|k| Complex64::new(k as f64, 0.5)).collect()];
        let s = spectral_matrix(&packets).unwrap();
        assert_eq!((s.n_fft(), s.n_packets()), (16, 2));
        assert!(s.magnitudes[(0, 0)] > 0.0);
        assert!((1..16).all(|k| s.magnitudes[(k, 0)] < 1e-12));
        for (p, packet) in packets.iter().enumerate() {
            let time: f64 = packet.iter().map(|c| c.norm_sqr()).sum();
            let freq: f64 = (0..16).map(|k| s.magnitudes[(k, p)].powi(2)).sum::<f64>() / 16.0;
            assert!((time - freq).abs() / time < 1e-6);
        }
    }

    #[test]
    fn pdf_examples() {
        let h = empirical_pdf(&[0.3; 10], 11, (-1.0, 1.0)).unwrap();
        assert_eq!(h.masses.iter().filter(|&&m| m == 1.0).count(), 1);
        let clipped = empirical_pdf(&[-9.0, 9.0], 4, (-1.0, 1.0)).unwrap();
        assert_eq!(clipped.masses, vec![0.5, 0.0, 0.0, 0.5]);
        assert!(empirical_pdf(&[], 4, (0.0, 1.0)).is_err());
        assert!(empirical_pdf(&[1.0], 1, (0.0, 1.0)).is_err());

        let mut rng = substream(5, "u");
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let bins = 20;
        let h = empirical_pdf(&xs, bins, (0.0, 1.0)).unwrap();
        let p = 1.0 / bins as f64;
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!(h.masses.iter().all(|m| (m - p).abs() < 3.0 * sd), "{:?}", h.masses);
        assert!((h.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_examples() {
        let a = randn(1000, 1.0, 1);
        assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_distance(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
        assert!(ks_distance(&[], &a).is_err());
        let d = ks_distance(&randn(100_000, 1.0, 2), &randn(100_000, 2.0, 3)).unwrap();
        assert!(d > 0.1 && d < 0.3, "{d}");
    }

    #[test]
    fn occupied_band_picks_fewest_bins() {
        let mask = occupied_band(&[1.0, 50.0, 40.0, 9.0], 0.9);
        assert_eq!(mask, vec![false, true, true, false]);
        let mask = occupied_band(&[0.0, 10.0, 0.0, 0.0], 0.9);
        assert_eq!(mask, vec![false, true, false, false]);
    }

    fn tone_packets(n: usize, seed: u64) -> Vec<Vec<Complex64>> {
        let noise = randn(n * 64 * 2, 0.05, seed);
        (0..n)
            .map(|p| {
                (0..64)
                    .map(|k| {
                        let i = (p * 64 + k) * 2;
                        Complex64::from_polar(1.0, 0.7 * k as f64) + Complex64::new(noise[i], noise[i + 1])
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn identical_streams_pass() {
        let proto = tone_packets(16, 1);
        let (r, tables) = validate_streams(&proto, &proto, 0.5, &ValidationConfig::default()).unwrap();
        assert_eq!(r.ks_proto_vs_gen, 0.0);
        assert_eq!(r.band_energy_fraction_gen, 1.0);
        assert!(r.passed(), "{}", r.to_text());
        assert!(tables.spectrum_csv().lines().count() == 65);
        assert!(tables.pdf_csv().lines().count() == 102);
    }

    #[test]
    fn white_noise_fails() {
        let proto = tone_packets(16, 1);
        let d = randn(64 * 64 * 2, std::f64::consts::FRAC_1_SQRT_2, 9);
        let white: Vec<Vec<Complex64>> = d.chunks(128).map(|c| c.chunks(2).map(|v| Complex64::new(v[0], v[1])).collect()).collect();
        let (r, _) = validate_streams(&proto, &white, 0.5, &ValidationConfig { seed: 4, ..Default::default() }).unwrap();
        assert!(!r.band_ok());
        assert!(!r.passed());
        let ratio = r.band_energy_fraction_gen / r.band_energy_fraction_noise;
        assert!((ratio - 1.0).abs() < 0.3, "{ratio}");
    }

    #[test]
    fn report_round_trip() {
        let proto = tone_packets(8, 3);
        let other = tone_packets(8, 4);
        let (r, _) = validate_streams(&proto, &other, 0.55, &ValidationConfig::default()).unwrap();
        let text = r.to_text();
        assert!(text.contains("ks_proto_vs_gen=") && text.contains("band_energy_fraction_gen="));
        assert_eq!(ValidationReport::parse(&text).unwrap(), r);
        let flipped = if r.passed() { "verdict=fail" } else { "verdict=pass" };
        let tampered: String = text.lines().map(|l| if l.starts_with("verdict=") { flipped } else { l }).collect::<Vec<_>>().join("\n");
        assert!(ValidationReport::parse(&tampered).is_err());
    }

    #[test]
    fn accuracy_rule_is_open_interval() {
        let mut r = validate_streams(&tone_packets(4, 1), &tone_packets(4, 1), 0.3, &ValidationConfig::default()).unwrap().0;
        assert!(!r.accuracy_ok());
        r.mean_d_accuracy = 0.8;
        assert!(!r.accuracy_ok());
        r.mean_d_accuracy = 0.79;
        assert!(r.passed());
    }
}
