use super::{frame_powers, SegmentError, SegmentLabel, SegmentSpan, HOP_SAMPLES, MIN_UTTERANCE_SAMPLES};
use crate::corpus::Utterance;
use crate::SAMPLE_RATE_HZ;

const MEDIAN_FRAMES: usize = 5;
const POWER_FLOOR: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VadConfig {
    pub threshold_db_over_floor: f64,
    pub min_speech_ms: f64,
    pub max_gap_ms: f64,
    pub hangover_frames: usize,
}

impl Default for VadConfig {
    fn default() -> Self {
        Self { threshold_db_over_floor: 6.0, min_speech_ms: 100.0, max_gap_ms: 50.0, hangover_frames: 1 }
    }
}

fn median_smooth(active: &[bool]) -> Vec<bool> {
    let half = MEDIAN_FRAMES / 2;
    let n = active.len() as isize;
    (0..n)
        .map(|i| {
            let votes = (-(half as isize)..=half as isize)
                .filter(|d| active[(i + d).clamp(0, n - 1) as usize])
                .count();
            votes > half
        })
        .collect()
}

/// Maximal runs of `true` as `[start, end)` frame ranges.
fn runs(active: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &a) in active.iter().enumerate() {
        match (a, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, active.len()));
    }
    out
}

/// Energy VAD over 32 ms / 16 ms frames.
///
/// The noise floor is the mean dB level of the quietest decile of frames.
/// Frames more than `threshold_db_over_floor` above it are active; the
/// decision is median-smoothed over 5 frames, active runs are extended by
/// the hangover, runs shorter than `min_speech_ms` are dropped and gaps
/// shorter than `max_gap_ms` between runs are closed. Frame `k` stands for
/// samples `[k * hop, (k + 1) * hop)`, the last frame for everything up to
/// the end of the file, so the returned spans tile the utterance.
pub fn detect_segments(utt: &Utterance, cfg: &VadConfig) -> Result<Vec<SegmentSpan>, SegmentError> {
    let n_samples = utt.samples.len();
    if n_samples < MIN_UTTERANCE_SAMPLES {
        return Err(SegmentError::TooShort { utterance_id: utt.utterance_id.clone(), samples: n_samples });
    }
    let db: Vec<f64> = frame_powers(&utt.samples).iter().map(|p| 10.0 * (p + POWER_FLOOR).log10()).collect();
    let n = db.len();
    let mut sorted = db.clone();
    sorted.sort_by(f64::total_cmp);
    let decile = ((n as f64 * 0.1).ceil() as usize).max(1);
    let floor = sorted[..decile].iter().sum::<f64>() / decile as f64;
    let threshold = floor + cfg.threshold_db_over_floor;

    let raw: Vec<bool> = db.iter().map(|&d| d > threshold).collect();
    let mut active = median_smooth(&raw);

    for (_, end) in runs(&active) {
        for a in active.iter_mut().take((end + cfg.hangover_frames).min(n)).skip(end) {
            *a = true;
        }
    }

    let hop_ms = HOP_SAMPLES as f64 * 1000.0 / f64::from(SAMPLE_RATE_HZ);
    for (s, e) in runs(&active) {
        if ((e - s) as f64) * hop_ms < cfg.min_speech_ms {
            active[s..e].iter_mut().for_each(|a| *a = false);
        }
    }
    let kept = runs(&active);
    for w in kept.windows(2) {
        let (gap_start, gap_end) = (w[0].1, w[1].0);
        if ((gap_end - gap_start) as f64) * hop_ms < cfg.max_gap_ms {
            active[gap_start..gap_end].iter_mut().for_each(|a| *a = true);
        }
    }

    let boundary = |k: usize| if k >= n { n_samples } else { k * HOP_SAMPLES };
    let sr = f64::from(SAMPLE_RATE_HZ);
    let mut spans = Vec::new();
    let mut k = 0;
    while k < n {
        let label = active[k];
        let mut e = k;
        while e < n && active[e] == label {
            e += 1;
        }
        spans.push(SegmentSpan {
            label: if label { SegmentLabel::Speech } else { SegmentLabel::Nonspeech },
            start_s: boundary(k) as f64 / sr,
            end_s: boundary(e) as f64 / sr,
        });
        k = e;
    }
    Ok(spans)
}

/// Concatenates the speech spans and the non-speech spans in time order.
pub fn split_utterance(utt: &Utterance, spans: &[SegmentSpan]) -> Result<(Vec<f64>, Vec<f64>), SegmentError> {
    let n = utt.samples.len();
    let duration_s = utt.duration_s();
    let mut speech = Vec::new();
    let mut nonspeech = Vec::new();
    let mut last_end = 0;
    for s in spans {
        let (a, b) = (s.start_sample(), s.end_sample());
        if !(s.start_s >= 0.0 && s.start_s < s.end_s) || b > n || a < last_end {
            return Err(SegmentError::SpanOutOfBounds { start_s: s.start_s, end_s: s.end_s, duration_s });
        }
        let dst = match s.label {
            SegmentLabel::Speech => &mut speech,
            SegmentLabel::Nonspeech => &mut nonspeech,
        };
        dst.extend_from_slice(&utt.samples[a..b]);
        last_end = b;
    }
    Ok((speech, nonspeech))
}
