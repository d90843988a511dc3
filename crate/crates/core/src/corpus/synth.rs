//! Synthetic two-group corpora with known recording conditions.
//!
//! Each utterance is leading noise, a voiced vowel-like stretch, and
//! trailing noise. The voiced stretch carries a low-level sustained vowel
//! with a few louder stressed bursts, which gives it the dynamic range an
//! energy VAD has to cope with. Noise of the group's colour covers the
//! whole file and is scaled so that clean/noise power over the voiced
//! stretch equals the group's SNR.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{write_manifest, write_wav, CorpusError, Group, SpeakerRecord};
use crate::{par, SAMPLE_RATE_HZ};

/// RMS of the clean voiced stretch before noise is added.
const SPEECH_RMS: f64 = 0.05;
const F0_MIN_HZ: f64 = 90.0;
const F0_MAX_HZ: f64 = 250.0;
const MAX_HARMONIC_HZ: f64 = 4500.0;
const TILT_REF_HZ: f64 = 500.0;
const BURST_S: f64 = 0.15;
const BURST_POWER: f64 = 4.0;
const MIN_MURMUR_POWER: f64 = 0.1;
const RAMP_S: f64 = 0.015;
const EDGE_FADE_S: f64 = 0.010;

/// F1..F3 in Hz.
const VOWELS: [[f64; 3]; 5] =
    [[730.0, 1090.0, 2440.0], [270.0, 2290.0, 3010.0], [300.0, 870.0, 2240.0], [530.0, 1840.0, 2480.0], [570.0, 840.0, 2410.0]];
const FORMANT_BW: [f64; 3] = [80.0, 100.0, 120.0];
const FORMANT_GAIN: [f64; 3] = [1.0, 0.5, 0.25];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseColor {
    White,
    Pink,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub speakers_per_group: usize,
    pub utterances_per_speaker: usize,
    pub snr_db_group_a: f64,
    pub snr_db_group_b: f64,
    /// Spectral tilt applied to group B speech only; 0 leaves no in-speech cue.
    pub tilt_db_per_octave_group_b: f64,
    pub speech_duration_s: f64,
    pub leading_silence_s: f64,
    pub trailing_silence_s: f64,
    pub noise_color: NoiseColor,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            speakers_per_group: 10,
            utterances_per_speaker: 40,
            snr_db_group_a: 30.0,
            snr_db_group_b: 0.0,
            tilt_db_per_octave_group_b: 0.0,
            speech_duration_s: 1.5,
            leading_silence_s: 0.5,
            trailing_silence_s: 0.5,
            noise_color: NoiseColor::White,
            seed: 7,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: &str| Err(CorpusError::InvalidSpec(m.to_string()));
        if self.speakers_per_group == 0 || self.utterances_per_speaker == 0 {
            return bad("speaker and utterance counts must be at least 1");
        }
        if !(self.speech_duration_s > 0.0 && self.leading_silence_s > 0.0 && self.trailing_silence_s > 0.0) {
            return bad("durations must be positive");
        }
        if ![self.speech_duration_s, self.leading_silence_s, self.trailing_silence_s].iter().all(|d| d.is_finite()) {
            return bad("durations must be finite");
        }
        if !(self.snr_db_group_a.is_finite() && self.snr_db_group_b.is_finite()) {
            return bad("SNRs must be finite");
        }
        if !self.tilt_db_per_octave_group_b.is_finite() {
            return bad("tilt must be finite");
        }
        Ok(())
    }

    pub fn snr_db(&self, g: Group) -> f64 {
        match g {
            Group::A => self.snr_db_group_a,
            Group::B => self.snr_db_group_b,
        }
    }

    pub fn speaker_id(&self, speaker_index: usize) -> String {
        let (g, k) = self.speaker_slot(speaker_index);
        format!("spk{}{:02}", g, k)
    }

    pub fn speaker_group(&self, speaker_index: usize) -> Group {
        self.speaker_slot(speaker_index).0
    }

    fn speaker_slot(&self, speaker_index: usize) -> (Group, usize) {
        if speaker_index < self.speakers_per_group {
            (Group::A, speaker_index)
        } else {
            (Group::B, speaker_index - self.speakers_per_group)
        }
    }
}

/// Per-utterance ground truth written to the sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub utterance_id: String,
    pub speaker_id: String,
    pub group: Group,
    pub true_snr_db: f64,
    pub speech_start_s: f64,
    pub speech_end_s: f64,
}

/// Clean and noise components of one synthetic utterance, before mixing.
#[derive(Debug, Clone)]
pub struct RenderedUtterance {
    pub clean: Vec<f64>,
    pub noise: Vec<f64>,
    pub speech_start: usize,
    pub speech_end: usize,
}

impl RenderedUtterance {
    pub fn mixture(&self) -> Vec<f64> {
        self.clean.iter().zip(&self.noise).map(|(s, n)| s + n).collect()
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub manifest: PathBuf,
    pub truth: PathBuf,
    pub records: Vec<SpeakerRecord>,
    pub ground_truth: Vec<GroundTruth>,
}

fn mix(mut x: u64) -> u64 {
    // splitmix64 finaliser
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn stream_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(seed), |h, &p| mix(h ^ p))
}

/// Speaker f0, a pure function of `(seed, speaker_index)`, uniform on [90, 250] Hz.
pub fn speaker_f0_hz(seed: u64, speaker_index: usize) -> f64 {
    let h = stream_seed(seed, &[0xF0, speaker_index as u64]);
    let u = (h >> 11) as f64 / (1u64 << 53) as f64;
    F0_MIN_HZ + (F0_MAX_HZ - F0_MIN_HZ) * u
}

fn seconds_to_samples(s: f64) -> usize {
    (s * f64::from(SAMPLE_RATE_HZ)).round() as usize
}

/// Raised-cosine step from 0 to 1 over `[0, 1]`.
fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    0.5 - 0.5 * (PI * x).cos()
}

fn amplitude_envelope(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let sr = f64::from(SAMPLE_RATE_HZ);
    let dur = n as f64 / sr;
    let guard = (0.1f64).min(0.1 * dur);
    let usable = (dur - 2.0 * guard).max(0.0);
    let n_bursts = ((dur / 0.75).round() as usize).max(1);
    let slot = usable / n_bursts as f64;
    let burst = BURST_S.min(0.8 * slot);
    let frac = (n_bursts as f64 * burst / dur).min(0.99);
    let mut p_lo = (1.0 - BURST_POWER * frac) / (1.0 - frac);
    let mut p_hi = BURST_POWER;
    if p_lo < MIN_MURMUR_POWER {
        p_lo = MIN_MURMUR_POWER;
        p_hi = (1.0 - (1.0 - frac) * p_lo) / frac;
    }
    let (a_lo, a_hi) = (p_lo.sqrt(), p_hi.sqrt());
    let mut env = vec![a_lo; n];
    let ramp = RAMP_S.min(burst / 3.0);
    for k in 0..n_bursts {
        let slot_start = guard + k as f64 * slot;
        let jitter = 0.5 + 0.3 * rng.random_range(-1.0..1.0);
        let start = slot_start + (slot - burst).max(0.0) * jitter;
        let (b0, b1) = (seconds_to_samples(start), seconds_to_samples(start + burst).min(n));
        for (i, e) in env.iter_mut().enumerate().take(b1).skip(b0) {
            let t = (i - b0) as f64 / sr;
            let rise = smoothstep(t / ramp);
            let fall = smoothstep((burst - t) / ramp);
            *e = a_lo + (a_hi - a_lo) * rise.min(fall);
        }
    }
    let fade = EDGE_FADE_S.min(dur / 4.0);
    for (i, e) in env.iter_mut().enumerate() {
        let t = i as f64 / sr;
        *e *= smoothstep(t / fade).min(smoothstep((dur - t) / fade));
    }
    env
}

fn harmonic_gain(f: f64, vowel: &[f64; 3], tilt_db_per_octave: f64) -> f64 {
    let formants: f64 = vowel
        .iter()
        .zip(FORMANT_BW.iter().zip(&FORMANT_GAIN))
        .map(|(&fc, (&bw, &g))| g / (1.0 + ((f - fc) / bw).powi(2)).sqrt())
        .sum();
    let tilt = 10f64.powf(tilt_db_per_octave * (f / TILT_REF_HZ).log2() / 20.0);
    (formants + 0.02) * tilt
}

fn render_voiced(n: usize, f0_speaker: f64, tilt_db_per_octave: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let sr = f64::from(SAMPLE_RATE_HZ);
    let vowel = VOWELS[rng.random_range(0..VOWELS.len())];
    let f0 = f0_speaker * (1.0 + 0.03 * rng.random_range(-1.0..1.0));
    let contour_phase = rng.random_range(0.0..2.0 * PI);
    let n_harm = ((MAX_HARMONIC_HZ / f0).floor() as usize).max(1);
    let weights: Vec<(f64, f64)> = (1..=n_harm)
        .map(|h| {
            let g = harmonic_gain(h as f64 * f0, &vowel, tilt_db_per_octave);
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            (g * phi.cos(), g * phi.sin())
        })
        .collect();
    let env = amplitude_envelope(n, rng);
    let dur = n as f64 / sr;
    let mut phase = 0.0f64;
    let mut out = Vec::with_capacity(n);
    for (i, e) in env.iter().enumerate() {
        let t = i as f64 / sr;
        let inst = f0 * (1.0 + 0.04 * (2.0 * PI * 0.8 * t + contour_phase).sin()) * (1.0 - 0.05 * t / dur);
        phase = (phase + 2.0 * PI * inst / sr) % (2.0 * PI);
        let z = Complex::from_polar(1.0, phase);
        let mut zh = z;
        let mut acc = 0.0;
        for &(wc, ws) in &weights {
            // Im(z^h e^{i phi}) = Im(z^h) cos phi + Re(z^h) sin phi
            acc += zh.im * wc + zh.re * ws;
            zh *= z;
        }
        out.push(acc * e);
    }
    out
}

fn render_noise(n: usize, color: NoiseColor, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let white: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    match color {
        NoiseColor::White => white,
        NoiseColor::Pink => {
            // -3 dB/octave power slope: amplitude ~ f^-1/2, DC removed
            let mut planner = FftPlanner::<f64>::new();
            let mut buf: Vec<Complex<f64>> = white.iter().map(|&x| Complex::new(x, 0.0)).collect();
            planner.plan_fft_forward(n).process(&mut buf);
            let bin_hz = f64::from(SAMPLE_RATE_HZ) / n as f64;
            for (k, b) in buf.iter_mut().enumerate() {
                let kk = k.min(n - k);
                *b *= if kk == 0 { 0.0 } else { (1000.0 / (kk as f64 * bin_hz)).sqrt() };
            }
            planner.plan_fft_inverse(n).process(&mut buf);
            buf.iter().map(|c| c.re / n as f64).collect()
        }
    }
}

fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
    }
}

/// Renders one utterance; a pure function of `spec` and the indices.
pub fn render_utterance(spec: &SynthSpec, speaker_index: usize, utterance_index: usize) -> RenderedUtterance {
    let group = spec.speaker_group(speaker_index);
    let lead = seconds_to_samples(spec.leading_silence_s);
    let speech = seconds_to_samples(spec.speech_duration_s).max(1);
    let trail = seconds_to_samples(spec.trailing_silence_s);
    let total = lead + speech + trail;

    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(spec.seed, &[1, speaker_index as u64, utterance_index as u64]));
    let tilt = if group == Group::B { spec.tilt_db_per_octave_group_b } else { 0.0 };
    let mut voiced = render_voiced(speech, speaker_f0_hz(spec.seed, speaker_index), tilt, &mut rng);
    let p = mean_power(&voiced);
    if p > 0.0 {
        let g = SPEECH_RMS / p.sqrt();
        voiced.iter_mut().for_each(|v| *v *= g);
    }
    let mut clean = vec![0.0; total];
    clean[lead..lead + speech].copy_from_slice(&voiced);

    let mut noise_rng =
        ChaCha8Rng::seed_from_u64(stream_seed(spec.seed, &[2, speaker_index as u64, utterance_index as u64]));
    let mut noise = render_noise(total, spec.noise_color, &mut noise_rng);
    let p_noise = mean_power(&noise[lead..lead + speech]);
    let target = mean_power(&voiced) / 10f64.powf(spec.snr_db(group) / 10.0);
    let g = if p_noise > 0.0 { (target / p_noise).sqrt() } else { 0.0 };
    noise.iter_mut().for_each(|v| *v *= g);

    RenderedUtterance { clean, noise, speech_start: lead, speech_end: lead + speech }
}

/// Writes `manifest.tsv`, `truth.json` and `wav/<speaker>/<utterance>.wav`
/// under `out_dir`. Identical specs produce identical bytes.
pub fn generate_synthetic_corpus(spec: &SynthSpec, out_dir: &Path) -> Result<GeneratedCorpus, CorpusError> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| CorpusError::io(out_dir, e))?;
    let n_speakers = 2 * spec.speakers_per_group;
    let jobs: Vec<(usize, usize)> =
        (0..n_speakers).flat_map(|s| (0..spec.utterances_per_speaker).map(move |u| (s, u))).collect();

    let sr = f64::from(SAMPLE_RATE_HZ);
    let truths = par::try_map(&jobs, |&(s, u)| {
        let speaker_id = spec.speaker_id(s);
        let utterance_id = format!("{speaker_id}_u{u:03}");
        let rel = PathBuf::from("wav").join(&speaker_id).join(format!("{utterance_id}.wav"));
        let r = render_utterance(spec, s, u);
        write_wav(&out_dir.join(&rel), &r.mixture())?;
        let group = spec.speaker_group(s);
        Ok::<_, CorpusError>((
            rel,
            GroundTruth {
                utterance_id,
                speaker_id,
                group,
                true_snr_db: spec.snr_db(group),
                speech_start_s: r.speech_start as f64 / sr,
                speech_end_s: r.speech_end as f64 / sr,
            },
        ))
    })?;

    let mut records: Vec<SpeakerRecord> = (0..n_speakers)
        .map(|s| SpeakerRecord { speaker_id: spec.speaker_id(s), group: spec.speaker_group(s), utterance_paths: Vec::new() })
        .collect();
    for (i, (rel, _)) in truths.iter().enumerate() {
        records[jobs[i].0].utterance_paths.push(rel.clone());
    }
    let manifest = out_dir.join("manifest.tsv");
    write_manifest(&manifest, &records)?;
    let ground_truth: Vec<GroundTruth> = truths.into_iter().map(|(_, t)| t).collect();
    let truth = out_dir.join("truth.json");
    let json = serde_json::to_string_pretty(&ground_truth).map_err(|e| CorpusError::Json { path: truth.clone(), source: e })?;
    std::fs::write(&truth, json + "\n").map_err(|e| CorpusError::io(&truth, e))?;
    Ok(GeneratedCorpus { manifest, truth, records, ground_truth })
}
