//! Shared inputs for the criterion benchmarks.

use anonkit_core::synth::{plan_utterance, render, speaker_profile};
use anonkit_core::Waveform;

/// One second of synthetic speech from a fixed speaker.
pub fn utterance(secs: f64) -> Waveform {
    let profile = speaker_profile(2022, 3, 8);
    let plan = plan_utterance(&profile, 2022, "bench", secs);
    render(&profile, &plan, 16000).expect("synthetic utterance renders")
}

/// Deterministic, roughly separated target and non-target scores.
pub fn scores(n: usize) -> (Vec<f64>, Vec<f64>) {
    let wobble = |i: usize| ((i as f64 * 12.9898).sin() * 43758.5453).fract();
    let targets = (0..n).map(|i| 1.0 + 2.0 * wobble(i)).collect();
    let nontargets = (0..n).map(|i| 2.0 * wobble(i + n)).collect();
    (targets, nontargets)
}

/// Reference and hypothesis token sequences with scattered edits.
pub fn word_sequences(n: usize) -> (Vec<u32>, Vec<u32>) {
    let reference: Vec<u32> = (0..n as u32).map(|i| (i * 7919) % 50).collect();
    let mut hyp = Vec::with_capacity(n);
    for (i, &w) in reference.iter().enumerate() {
        match i % 11 {
            3 => hyp.push(w + 1),
            7 => {}
            9 => {
                hyp.push(w);
                hyp.push(99);
            }
            _ => hyp.push(w),
        }
    }
    (reference, hyp)
}
