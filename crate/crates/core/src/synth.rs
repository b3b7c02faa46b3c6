//! Seeded synthetic multi-speaker corpora: harmonic excitation shaped by
//! speaker-scaled vowel formants, with manifests, trial lists and token
//! transcripts.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::anonymize::derive_seed;
use crate::asr::{AsrError, Transcripts};
use crate::asv::{AsvError, Label, Trial, TrialSet};
use crate::audio::{encode_wav, AudioError, Waveform, DEFAULT_SAMPLE_RATE};
use crate::protocol::{Manifest, ManifestEntry, ProtocolError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid corpus configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Asv(#[from] AsvError),
    #[error(transparent)]
    Asr(#[from] AsrError),
}

/// Vowel formant targets (F1, F2, F3) in Hz, one per token id.
const VOWELS: [[f64; 3]; 8] = [
    [270.0, 2290.0, 3010.0],
    [400.0, 2000.0, 2550.0],
    [530.0, 1840.0, 2480.0],
    [730.0, 1090.0, 2440.0],
    [570.0, 840.0, 2410.0],
    [300.0, 870.0, 2240.0],
    [440.0, 1020.0, 2240.0],
    [640.0, 1190.0, 2390.0],
];
const BANDWIDTHS: [f64; 4] = [70.0, 100.0, 140.0, 220.0];
const F4: f64 = 3500.0;
const TOKEN_SECS: f64 = 0.25;
const GAP_SECS: f64 = 0.04;
const CONTROL_HOP_SECS: f64 = 0.01;
const PEAK: f64 = 0.5;

/// Voice characteristics of one synthetic speaker.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerProfile {
    pub id: String,
    pub f0_base: f64,
    /// Multiplies every formant frequency (vocal tract length).
    pub formant_scale: f64,
    /// Relative level of the noise component of the excitation.
    pub breathiness: f64,
}

/// Content and prosody of one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct UtterancePlan {
    pub tokens: Vec<usize>,
    /// F0 targets every 10 ms.
    pub f0_track: Vec<f64>,
    pub noise_seed: u64,
}

impl UtterancePlan {
    pub fn transcript(&self) -> String {
        self.tokens
            .iter()
            .map(|t| format!("T{t}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn rng_for(seed: u64, key: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, key))
}

/// Speaker `index` of a corpus. F0 and formant scale are spread evenly over
/// their ranges and jittered, so speakers are well separated.
pub fn speaker_profile(seed: u64, index: usize, n_speakers: usize) -> SpeakerProfile {
    let mut rng = rng_for(seed, &format!("synth/speaker/{index}"));
    let n = n_speakers.max(2) as f64;
    // interleave so F0 and formant scale are not perfectly correlated
    let pos_f0 = index as f64 / (n - 1.0);
    let pos_fs = ((index * 3) % n_speakers.max(2)) as f64 / (n - 1.0);
    SpeakerProfile {
        id: format!("spk{index:02}"),
        f0_base: 90.0 + 60.0 * pos_f0 + rng.random_range(-5.0..5.0),
        formant_scale: 0.82 + 0.4 * pos_fs + rng.random_range(-0.015..0.015),
        breathiness: rng.random_range(0.01..0.04),
    }
}

/// Random token sequence and an intonation contour around the speaker's F0.
pub fn plan_utterance(profile: &SpeakerProfile, seed: u64, key: &str, secs: f64) -> UtterancePlan {
    let mut rng = rng_for(seed, &format!("synth/utt/{}/{key}", profile.id));
    let n_tokens = ((secs / TOKEN_SECS).round() as usize).max(1);
    // successive shuffles of the vowel set, so every utterance covers the
    // same phonetic content in a different order
    let mut tokens = Vec::with_capacity(n_tokens);
    while tokens.len() < n_tokens {
        let mut perm: Vec<usize> = (0..VOWELS.len()).collect();
        perm.shuffle(&mut rng);
        tokens.extend(perm);
    }
    tokens.truncate(n_tokens);
    let n_ctrl = (secs / CONTROL_HOP_SECS).ceil() as usize + 1;
    let (r1, r2): (f64, f64) = (rng.random_range(0.4..1.2), rng.random_range(1.5..3.0));
    let (p1, p2): (f64, f64) = (
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
    );
    let level: f64 = rng.random_range(0.95..1.05);
    let f0_track = (0..n_ctrl)
        .map(|k| {
            let t = k as f64 * CONTROL_HOP_SECS;
            profile.f0_base
                * level
                * (1.0
                    + 0.12 * (2.0 * PI * r1 * t + p1).sin()
                    + 0.04 * (2.0 * PI * r2 * t + p2).sin()
                    - 0.08 * t / secs)
        })
        .collect();
    UtterancePlan {
        tokens,
        f0_track,
        noise_seed: derive_seed(seed, &format!("synth/noise/{}/{key}", profile.id)),
    }
}

struct Resonator {
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn step(&mut self, x: f64, freq: f64, bw: f64, sr: f64) -> f64 {
        let r = (-PI * bw / sr).exp();
        let theta = 2.0 * PI * freq / sr;
        let a1 = 2.0 * r * theta.cos();
        let a2 = -r * r;
        // unity gain at the resonance peak (approximately)
        let g = (1.0 - r) * (1.0 + r * r - 2.0 * r * (2.0 * theta).cos()).sqrt();
        let y = g * x + a1 * self.y1 + a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Renders a plan for a speaker: band-limited harmonic excitation with
/// 1/h amplitudes plus breath noise, a cascade of four formant resonators
/// whose targets glide between tokens, short pauses between tokens, and
/// peak normalisation.
pub fn render(
    profile: &SpeakerProfile,
    plan: &UtterancePlan,
    sample_rate: u32,
) -> Result<Waveform, SynthError> {
    let sr = sample_rate as f64;
    let n = (plan.tokens.len() as f64 * TOKEN_SECS * sr).round() as usize;
    let token_len = (TOKEN_SECS * sr) as usize;
    let gap = (GAP_SECS * sr) as usize;
    let glide = (0.03 * sr) as usize;
    let ctrl_hop = CONTROL_HOP_SECS * sr;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(plan.noise_seed);
    let mut res: Vec<Resonator> = (0..4).map(|_| Resonator { y1: 0.0, y2: 0.0 }).collect();

    let formants = |tok: usize| -> [f64; 4] {
        let v = VOWELS[tok];
        let s = profile.formant_scale;
        [v[0] * s, v[1] * s, v[2] * s, F4 * s]
    };

    let mut out = Vec::with_capacity(n);
    let mut phase = 0.0f64;
    for i in 0..n {
        let ti = (i / token_len).min(plan.tokens.len() - 1);
        let within = i - ti * token_len;
        let cur = formants(plan.tokens[ti]);
        let fm: [f64; 4] = if ti > 0 && within < glide {
            let prev = formants(plan.tokens[ti - 1]);
            let a = within as f64 / glide as f64;
            std::array::from_fn(|k| prev[k] * (1.0 - a) + cur[k] * a)
        } else {
            cur
        };

        let c = i as f64 / ctrl_hop;
        let k = (c.floor() as usize).min(plan.f0_track.len() - 1);
        let k2 = (k + 1).min(plan.f0_track.len() - 1);
        let frac = c - k as f64;
        let f0 = plan.f0_track[k] * (1.0 - frac) + plan.f0_track[k2] * frac;
        phase = (phase + 2.0 * PI * f0 / sr) % (2.0 * PI);

        // voiced except for a pause at the end of each token
        let voiced = within < token_len.saturating_sub(gap) || ti + 1 == plan.tokens.len();
        let mut x = 0.0;
        if voiced {
            let n_h = ((0.45 * sr / f0) as usize).clamp(1, 40);
            for h in 1..=n_h {
                x += (h as f64 * phase).sin() / h as f64;
            }
        }
        let e: f64 = StandardNormal.sample(&mut noise_rng);
        x += e * if voiced { profile.breathiness } else { 0.003 };
        let mut y = x;
        for (r, (&f, &bw)) in res.iter_mut().zip(fm.iter().zip(&BANDWIDTHS)) {
            y = r.step(y, f, bw, sr);
        }
        out.push(y);
    }
    // 20 ms fades at both ends
    let fade = ((0.02 * sr) as usize).min(n / 2);
    for i in 0..fade {
        let g = i as f64 / fade as f64;
        out[i] *= g;
        out[n - 1 - i] *= g;
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        out.iter_mut().for_each(|v| *v *= PEAK / peak);
    }
    Ok(Waveform::new(out, sample_rate)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_speakers: usize,
    pub utts_per_speaker: usize,
    pub enroll_per_speaker: usize,
    pub seed: u64,
    pub sample_rate: u32,
    pub utt_secs: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_speakers: 8,
            utts_per_speaker: 4,
            enroll_per_speaker: 2,
            seed: crate::anonymize::DEFAULT_SEED,
            sample_rate: DEFAULT_SAMPLE_RATE,
            utt_secs: 2.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_speakers < 2 {
            return Err(SynthError::InvalidConfig(format!(
                "need at least 2 speakers for non-target trials, got {}",
                self.n_speakers
            )));
        }
        if self.utts_per_speaker < 2 {
            return Err(SynthError::InvalidConfig(format!(
                "need at least 2 utterances per speaker, got {}",
                self.utts_per_speaker
            )));
        }
        if self.enroll_per_speaker < 1 {
            return Err(SynthError::InvalidConfig(
                "need at least 1 enrollment utterance per speaker".into(),
            ));
        }
        if self.sample_rate < 8000 || !(0.5..=30.0).contains(&self.utt_secs) {
            return Err(SynthError::InvalidConfig(format!(
                "need sample rate >= 8000 and 0.5 <= utt_secs <= 30, got {} and {}",
                self.sample_rate, self.utt_secs
            )));
        }
        Ok(())
    }
}

/// One generated utterance.
#[derive(Debug, Clone)]
pub struct SynthUtterance {
    pub utterance_id: String,
    pub speaker: SpeakerProfile,
    pub plan: UtterancePlan,
}

impl SynthUtterance {
    pub fn render(&self, sample_rate: u32) -> Result<Waveform, SynthError> {
        render(&self.speaker, &self.plan, sample_rate)
    }
}

/// Plans every trial and enrollment utterance without rendering audio.
pub fn plan_corpus(
    cfg: &SynthConfig,
) -> Result<(Vec<SynthUtterance>, Vec<SynthUtterance>), SynthError> {
    cfg.validate()?;
    let mut trial = Vec::new();
    let mut enroll = Vec::new();
    for s in 0..cfg.n_speakers {
        let p = speaker_profile(cfg.seed, s, cfg.n_speakers);
        for (count, tag, out) in [
            (cfg.utts_per_speaker, "t", &mut trial),
            (cfg.enroll_per_speaker, "e", &mut enroll),
        ] {
            for u in 0..count {
                let key = format!("{tag}{u:02}");
                out.push(SynthUtterance {
                    utterance_id: format!("{}-{key}", p.id),
                    plan: plan_utterance(&p, cfg.seed, &key, cfg.utt_secs),
                    speaker: p.clone(),
                });
            }
        }
    }
    Ok((trial, enroll))
}

/// Paths and tables of a corpus written to disk.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub trial: Manifest,
    pub enroll: Manifest,
    pub trials: TrialSet,
    pub transcripts: Transcripts,
    pub trial_manifest_path: PathBuf,
    pub enroll_manifest_path: PathBuf,
    pub trials_path: PathBuf,
    pub transcripts_path: PathBuf,
}

fn write_set(
    utts: &[SynthUtterance],
    cfg: &SynthConfig,
    out_dir: &Path,
    sub: &str,
    name: &str,
) -> Result<(Manifest, PathBuf), SynthError> {
    let dir = out_dir.join(sub);
    fs::create_dir_all(&dir).map_err(|source| ProtocolError::Io {
        path: dir.clone(),
        source,
    })?;
    utts.par_iter()
        .map(|u| {
            let w = u.render(cfg.sample_rate)?;
            let path = dir.join(format!("{}.wav", u.utterance_id));
            fs::write(&path, encode_wav(&w))
                .map_err(|source| ProtocolError::Io { path, source })?;
            Ok(())
        })
        .collect::<Result<Vec<()>, SynthError>>()?;
    let entries = utts
        .iter()
        .map(|u| ManifestEntry {
            utterance_id: u.utterance_id.clone(),
            speaker_id: u.speaker.id.clone(),
            path: PathBuf::from(sub).join(format!("{}.wav", u.utterance_id)),
            transcript: Some(u.plan.transcript()),
        })
        .collect();
    let manifest = Manifest::new(name, out_dir, entries)?;
    let path = out_dir.join(format!("{name}.tsv"));
    manifest.write(&path)?;
    Ok((manifest, path))
}

/// Writes a corpus to `out_dir`:
///
/// - `trial/*.wav` and `trial.tsv`: `utts_per_speaker` utterances per speaker
/// - `enroll/*.wav` and `enroll.tsv`: separate enrollment utterances
/// - `trials.txt`: every (speaker, trial utterance) pair
/// - `transcripts.tsv`: reference token transcripts of the trial set
pub fn generate_corpus(
    cfg: &SynthConfig,
    out_dir: impl AsRef<Path>,
) -> Result<SynthCorpus, SynthError> {
    let out_dir = out_dir.as_ref();
    let (trial_utts, enroll_utts) = plan_corpus(cfg)?;
    let (trial, trial_manifest_path) = write_set(&trial_utts, cfg, out_dir, "trial", "trial")?;
    let (enroll, enroll_manifest_path) = write_set(&enroll_utts, cfg, out_dir, "enroll", "enroll")?;

    let mut list = Vec::new();
    for s in 0..cfg.n_speakers {
        let spk = format!("spk{s:02}");
        for u in &trial_utts {
            list.push(Trial {
                enroll_speaker: spk.clone(),
                trial_utterance: u.utterance_id.clone(),
                label: if u.speaker.id == spk {
                    Label::Target
                } else {
                    Label::Nontarget
                },
            });
        }
    }
    let trials = TrialSet::new(list)?;
    let trials_path = out_dir.join("trials.txt");
    trials.write(&trials_path)?;
    let transcripts = Transcripts::from_manifest(&trial);
    let transcripts_path = out_dir.join("transcripts.tsv");
    transcripts.write(&transcripts_path)?;
    log::info!(
        "synthesised {} speakers x {} trial + {} enrollment utterances",
        cfg.n_speakers,
        cfg.utts_per_speaker,
        cfg.enroll_per_speaker
    );
    Ok(SynthCorpus {
        trial,
        enroll,
        trials,
        transcripts,
        trial_manifest_path,
        enroll_manifest_path,
        trials_path,
        transcripts_path,
    })
}
