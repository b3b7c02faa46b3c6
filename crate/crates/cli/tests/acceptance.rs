//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p anonkit-cli --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use anonkit_core::anonymize::anonymize_corpus;
use anonkit_core::asv::{
    eer_from_scores, gain_voice_distinctiveness, similarity_matrix, AttackConfig, CosineScorer,
    Embedding, Gvd, SimilarityMatrix,
};
use anonkit_core::dsp::synthesis_filter;
use anonkit_core::pitch::{corpus_pitch_correlation, dtw_pitch_correlation, PitchConfig};
use anonkit_core::protocol::{
    generate_report, pitch_gate, DatasetMetrics, ManifestEntry, ReportInputs, REPORT_SCHEMA,
    STANDARD_MIN_TARGET_EERS,
};
use anonkit_core::synth::{generate_corpus, plan_corpus, SynthConfig, SynthCorpus};
use anonkit_core::{
    mcadams_anonymize, pitch_correlation, run_attack, wer, AnonymizationConfig,
    EvaluationCondition, Level, LpcModel, Manifest, PitchContour, PseudoSpeaker, Scenario,
    Waveform,
};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run_criterion(id: u8, name: &str, limit_secs: Option<f64>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = f();
    let secs = start.elapsed().as_secs_f64();
    let outcome = match (outcome, limit_secs) {
        (Ok(d), Some(limit)) if secs >= limit => {
            Err(format!("{d}; took {secs:.2} s, limit {limit} s"))
        }
        (o, _) => o,
    };
    let limit = limit_secs.map_or(String::new(), |l| format!(" / {l} s"));
    match &outcome {
        Ok(detail) => println!("PASS [{id:>2}] {name}: {detail} ({secs:.2} s{limit})"),
        Err(detail) => println!("FAIL [{id:>2}] {name}: {detail} ({secs:.2} s{limit})"),
    }
    outcome.is_ok()
}

// ---------------------------------------------------------------- 1: EER

/// Threshold scan: builds every ROC vertex by counting, then intersects
/// each polyline segment with the line `P_fa = P_miss`.
fn eer_oracle(targets: &[f64], nontargets: &[f64]) -> f64 {
    let mut thresholds: Vec<f64> = targets.iter().chain(nontargets).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.push(f64::INFINITY);
    let vertex = |t: f64| {
        let fa = nontargets.iter().filter(|&&s| s >= t).count() as f64 / nontargets.len() as f64;
        let miss = targets.iter().filter(|&&s| s < t).count() as f64 / targets.len() as f64;
        (fa, miss)
    };
    let roc: Vec<(f64, f64)> = thresholds.iter().map(|&t| vertex(t)).collect();
    let mut hits = Vec::new();
    for w in roc.windows(2) {
        let ((fa0, m0), (fa1, m1)) = (w[0], w[1]);
        let (d0, d1) = (fa0 - m0, fa1 - m1);
        if d0 > 0.0 && d1 <= 0.0 {
            let s = d0 / (d0 - d1);
            hits.push(fa0 + s * (fa1 - fa0));
        }
    }
    assert_eq!(hits.len(), 1, "the ROC crosses the diagonal exactly once");
    hits[0]
}

fn criterion_eer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for set in 0..1000 {
        let nt = rng.random_range(1..=25usize);
        let nn = rng.random_range(1..=25usize);
        let tied = set % 2 == 0;
        let mut draw = |shift: f64| {
            if tied {
                rng.random_range(0..6i32) as f64 + shift.round()
            } else {
                rng.random_range(-3.0..3.0) + shift
            }
        };
        let t: Vec<f64> = (0..nt).map(|_| draw(1.0)).collect();
        let n: Vec<f64> = (0..nn).map(|_| draw(0.0)).collect();
        let got = eer_from_scores(&t, &n).map_err(|e| e.to_string())?.eer;
        let want = eer_oracle(&t, &n);
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() <= 1e-9, || {
            format!("set {set}: {got} vs oracle {want}")
        })?;
    }
    Ok(format!("1000 sets, max |diff| {worst:.1e}"))
}

// ---------------------------------------------------------------- 2: WER

fn edit_distance(r: &[u8], h: &[u8], memo: &mut [[Option<usize>; 7]; 7]) -> usize {
    if r.is_empty() || h.is_empty() {
        return r.len() + h.len();
    }
    if let Some(d) = memo[r.len()][h.len()] {
        return d;
    }
    let sub = edit_distance(&r[1..], &h[1..], memo) + usize::from(r[0] != h[0]);
    let del = edit_distance(&r[1..], h, memo) + 1;
    let ins = edit_distance(r, &h[1..], memo) + 1;
    let d = sub.min(del).min(ins);
    memo[r.len()][h.len()] = Some(d);
    d
}

fn all_sequences(max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        frontier = frontier
            .iter()
            .flat_map(|s: &Vec<u8>| {
                (0..3u8).map(move |c| {
                    let mut t = s.clone();
                    t.push(c);
                    t
                })
            })
            .collect();
        out.extend(frontier.iter().cloned());
    }
    out
}

fn criterion_wer() -> Outcome {
    let seqs = all_sequences(6);
    let mut pairs = 0usize;
    for r in seqs.iter().filter(|s| !s.is_empty()) {
        for h in &seqs {
            let mut memo = [[None; 7]; 7];
            let want = edit_distance(r, h, &mut memo);
            let got = wer(r, h).map_err(|e| e.to_string())?;
            ensure(got.errors() == want, || {
                format!("{r:?} vs {h:?}: {} edits, oracle {want}", got.errors())
            })?;
            ensure(got.wer == want as f64 / r.len() as f64, || {
                format!("{r:?} vs {h:?}: WER {}", got.wer)
            })?;
            ensure(
                got.n_ref == r.len() && got.n_ref + got.n_ins - got.n_del == h.len(),
                || format!("{r:?} vs {h:?}: inconsistent breakdown {got:?}"),
            )?;
            pairs += 1;
        }
    }
    ensure(seqs.len() == 1093, || format!("{} sequences", seqs.len()))?;
    Ok(format!("{pairs} sequence pairs, exact"))
}

// ---------------------------------------------------------------- 3: G_VD

fn matrix(values: [f64; 4]) -> SimilarityMatrix {
    SimilarityMatrix::new(vec!["a".into(), "b".into()], values.to_vec()).unwrap()
}

fn criterion_gvd() -> Outcome {
    let emb = |v: [f64; 4]| Embedding::new(v.to_vec(), 1).unwrap();
    let scorer = CosineScorer::default();
    // mutually orthogonal embeddings score 0, so every entry is sigmoid(0)
    let flat_groups = vec![
        (
            "a".to_string(),
            vec![emb([1.0, 0.0, 0.0, 0.0]), emb([0.0, 1.0, 0.0, 0.0])],
        ),
        (
            "b".to_string(),
            vec![emb([0.0, 0.0, 1.0, 0.0]), emb([0.0, 0.0, 0.0, 1.0])],
        ),
    ];
    let flat = similarity_matrix(&flat_groups, &scorer).map_err(|e| e.to_string())?;
    ensure(
        (0..2).all(|i| (0..2).all(|j| flat.get(i, j) == 0.5)),
        || format!("{flat:?}"),
    )?;
    ensure(gain_voice_distinctiveness(&flat, &flat).is_err(), || {
        "D = 0 was not reported".into()
    })?;

    let m = matrix([0.8, 0.4, 0.6, 0.7]);
    ensure(
        gain_voice_distinctiveness(&m, &m).unwrap() == Gvd::Db(0.0),
        || "identical matrices".into(),
    )?;

    // D(M_oo) = |0.75 - 0.5| = 0.25, D(M_aa) = |0.575 - 0.475| = 0.1
    let m_aa = matrix([0.6, 0.5, 0.45, 0.55]);
    let want = 10.0 * (0.1f64 / 0.25).log10();
    let got = gain_voice_distinctiveness(&m, &m_aa)
        .unwrap()
        .as_f64()
        .unwrap();
    ensure((got - want).abs() <= 1e-12, || {
        format!("2x2: {got} vs {want}")
    })?;

    // same speaker, same embedding: diagonal sigmoid(10), off-diagonal sigmoid(0)
    let groups = vec![
        ("a".to_string(), vec![emb([1.0, 0.0, 0.0, 0.0]); 2]),
        ("b".to_string(), vec![emb([0.0, 1.0, 0.0, 0.0]); 2]),
    ];
    let s = similarity_matrix(&groups, &scorer).map_err(|e| e.to_string())?;
    let s10 = 1.0 / (1.0 + (-10.0f64).exp());
    ensure(
        (s.get(0, 0) - s10).abs() <= 1e-12 && (s.get(0, 1) - 0.5).abs() <= 1e-12,
        || format!("{s:?}"),
    )?;
    Ok(format!(
        "flat -> undefined, identical -> 0 dB, 2x2 -> {got:.12} dB"
    ))
}

// ---------------------------------------------------------------- 4: McAdams

fn one_formant(angle: f64, n: usize) -> Waveform {
    let r: f64 = 0.97;
    let model = LpcModel::new(vec![-2.0 * r * angle.cos(), r * r], 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let e: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = synthesis_filter(&e, &model);
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Waveform::new(x.iter().map(|v| 0.5 * v / peak).collect(), 16_000).unwrap()
}

/// Frequency of the Welch power spectrum maximum on a 2 Hz grid in
/// `[lo, hi]`, after a 5-bin moving average. Powers come from Goertzel
/// recursions over Hann-windowed, half-overlapping 1024-sample segments.
fn spectral_peak(x: &[f64], sr: f64, lo: f64, hi: f64) -> f64 {
    let seg = 1024;
    let win: Vec<f64> = (0..seg)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / seg as f64).cos())
        .collect();
    let freqs: Vec<f64> = (0..)
        .map(|i| lo + 2.0 * i as f64)
        .take_while(|&f| f <= hi)
        .collect();
    let psd: Vec<f64> = freqs
        .iter()
        .map(|&f| {
            let c = 2.0 * (2.0 * PI * f / sr).cos();
            let mut power = 0.0;
            for start in (0..x.len().saturating_sub(seg)).step_by(seg / 2) {
                let (mut s1, mut s2) = (0.0, 0.0);
                for (v, w) in x[start..start + seg].iter().zip(&win) {
                    let s0 = v * w + c * s1 - s2;
                    s2 = s1;
                    s1 = s0;
                }
                power += s1 * s1 + s2 * s2 - c * s1 * s2;
            }
            power
        })
        .collect();
    let smooth = |i: usize| {
        let w = &psd[i.saturating_sub(2)..(i + 3).min(psd.len())];
        w.iter().sum::<f64>() / w.len() as f64
    };
    let k = (0..psd.len())
        .max_by(|&a, &b| smooth(a).total_cmp(&smooth(b)))
        .unwrap();
    freqs[k]
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

fn criterion_mcadams() -> Outcome {
    let sr = 16_000.0;
    let w = one_formant(0.5, 80_000);
    let cfg = AnonymizationConfig::default();
    let before = spectral_peak(w.samples(), sr, 900.0, 2100.0);
    let y = mcadams_anonymize(&w, 0.8, &cfg).map_err(|e| e.to_string())?;
    let after = spectral_peak(y.samples(), sr, 900.0, 2100.0);
    let expected = 0.5f64.powf(0.8) * sr / (2.0 * PI);
    ensure((after - expected).abs() <= 50.0, || {
        format!("peak {before:.0} Hz -> {after:.0} Hz, expected {expected:.0} +/- 50")
    })?;
    let same = mcadams_anonymize(&w, 1.0, &cfg).map_err(|e| e.to_string())?;
    let r = pearson(w.samples(), same.samples());
    ensure(r > 0.99, || format!("alpha 1 correlation {r:.4}"))?;
    Ok(format!(
        "peak {before:.0} Hz -> {after:.0} Hz (expected {expected:.0}), alpha 1 correlation {r:.5}"
    ))
}

// ---------------------------------------------------------------- 5, 6: corpus

struct Anonymized {
    _dir: tempfile::TempDir,
    corpus: SynthCorpus,
    anon: Manifest,
    cfg: AnonymizationConfig,
    dir: PathBuf,
}

fn anonymized_default_corpus() -> Result<Anonymized, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().to_path_buf();
    let corpus =
        generate_corpus(&SynthConfig::default(), path.join("corpus")).map_err(|e| e.to_string())?;
    let cfg = AnonymizationConfig {
        level: Level::Speaker,
        ..Default::default()
    };
    let anon =
        anonymize_corpus(&corpus.trial, &cfg, path.join("anon")).map_err(|e| e.to_string())?;
    Ok(Anonymized {
        _dir: dir,
        corpus,
        anon: anon.manifest,
        cfg,
        dir: path,
    })
}

fn criterion_privacy(slot: &mut Option<Anonymized>) -> Outcome {
    let a = anonymized_default_corpus()?;
    let mut attack = AttackConfig::new(a.cfg.clone());
    let c = &a.corpus;
    let unprotected = run_attack(
        Scenario::Unprotected,
        &c.enroll,
        &c.trial,
        &c.trials,
        &attack,
    )
    .map_err(|e| e.to_string())?
    .eer
    .eer;
    attack.trials_anonymized = true;
    let semi = run_attack(
        Scenario::SemiInformed,
        &c.enroll,
        &a.anon,
        &c.trials,
        &attack,
    )
    .map_err(|e| e.to_string())?
    .eer
    .eer;
    *slot = Some(a);
    let detail = format!("unprotected EER {unprotected:.4}, semi-informed EER {semi:.4}");
    ensure(unprotected < 0.10, || {
        format!("{detail}; unprotected not below 0.10")
    })?;
    ensure(semi > unprotected, || {
        format!("{detail}; no strict increase")
    })?;
    Ok(detail)
}

/// Re-renders the trial set with F0 tracks unrelated to the originals:
/// a fresh uniform level in 80..300 Hz every 100 ms.
fn pitch_randomized(cfg: &SynthConfig, out: &Path) -> Result<Manifest, String> {
    let (trial, _) = plan_corpus(cfg).map_err(|e| e.to_string())?;
    fs::create_dir_all(out).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut entries = Vec::new();
    for mut u in trial {
        for block in u.plan.f0_track.chunks_mut(10) {
            block.fill(rng.random_range(80.0..300.0));
        }
        let w = u.render(cfg.sample_rate).map_err(|e| e.to_string())?;
        let rel = PathBuf::from(format!("{}.wav", u.utterance_id));
        anonkit_core::write_wav(&w, out.join(&rel)).map_err(|e| e.to_string())?;
        entries.push(ManifestEntry {
            utterance_id: u.utterance_id.clone(),
            speaker_id: u.speaker.id.clone(),
            path: rel,
            transcript: None,
        });
    }
    Manifest::new("randomized", out, entries).map_err(|e| e.to_string())
}

fn criterion_pitch_gate(slot: &mut Option<Anonymized>) -> Outcome {
    let a = match slot.take() {
        Some(a) => a,
        None => anonymized_default_corpus()?,
    };
    let pcfg = PitchConfig::default();
    let kept = corpus_pitch_correlation(&a.corpus.trial, &a.anon, false, &pcfg)
        .map_err(|e| e.to_string())?;
    let rho = kept
        .mean_rho
        .ok_or("McAdams corpus: pitch correlation undefined")?;
    let random = pitch_randomized(&SynthConfig::default(), &a.dir.join("randomized"))?;
    let broken = corpus_pitch_correlation(&a.corpus.trial, &random, false, &pcfg)
        .map_err(|e| e.to_string())?;
    let rho_random = broken.mean_rho.unwrap_or(0.0);
    let detail = format!("McAdams mean rho {rho:.4}, pitch-randomized mean rho {rho_random:.4}");
    ensure(rho > 0.9 && pitch_gate(&[rho]), || {
        format!("{detail}; McAdams below 0.9")
    })?;
    ensure(!pitch_gate(&[rho_random]), || {
        format!("{detail}; randomized corpus passed the gate")
    })?;
    Ok(detail)
}

// ---------------------------------------------------------------- 7: DTW

fn interpolate(x: &[f64], t: f64) -> f64 {
    let lo = (t.floor() as usize).min(x.len() - 1);
    let hi = (lo + 1).min(x.len() - 1);
    let frac = t - lo as f64;
    x[lo] * (1.0 - frac) + x[hi] * frac
}

/// An intonation contour and a randomly time-warped copy of it.
fn warped_pair(rng: &mut ChaCha8Rng, jitter: f64) -> (PitchContour, PitchContour) {
    let n = rng.random_range(150..300usize);
    let base = rng.random_range(90.0..250.0);
    let (r1, r2) = (rng.random_range(0.5..1.5), rng.random_range(2.0..4.0));
    let (p1, p2) = (
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
    );
    let orig: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 * 0.01;
            base * (1.0
                + 0.15 * (2.0 * PI * r1 * t + p1).sin()
                + 0.05 * (2.0 * PI * r2 * t + p2).sin())
        })
        .collect();

    // smoothed random positive rates, integrated and scaled onto [0, n - 1]
    let m = (n as f64 * rng.random_range(0.8..1.25)) as usize;
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.8)).collect();
    let rates: Vec<f64> = (0..m)
        .map(|i| {
            let w = &raw[i.saturating_sub(10)..(i + 10).min(m)];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect();
    let mut pos = vec![0.0; m];
    for i in 1..m {
        pos[i] = pos[i - 1] + rates[i];
    }
    let scale = (n - 1) as f64 / pos[m - 1];
    let anon: Vec<f64> = pos
        .iter()
        .map(|&p| interpolate(&orig, p * scale) * (1.0 + jitter * rng.random_range(-1.0..1.0)))
        .collect();
    (
        PitchContour::new(orig, 10.0).unwrap(),
        PitchContour::new(anon, 10.0).unwrap(),
    )
}

fn criterion_dtw() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut min_clean: f64 = 1.0;
    let mut min_gain = f64::INFINITY;
    for k in 0..200 {
        let clean = k < 100;
        let (orig, anon) = warped_pair(&mut rng, if clean { 0.0 } else { 0.02 });
        let pre = pitch_correlation(&orig, &anon).ok_or(format!("pair {k}: pre-DTW undefined"))?;
        let post = dtw_pitch_correlation(&orig, &anon)
            .map_err(|e| e.to_string())?
            .ok_or(format!("pair {k}: post-DTW undefined"))?;
        min_gain = min_gain.min(post - pre);
        ensure(post >= pre - 1e-9, || {
            format!("pair {k}: post {post:.6} < pre {pre:.6}")
        })?;
        if clean {
            min_clean = min_clean.min(post);
            ensure(post >= 0.99, || {
                format!("warp-only pair {k}: post {post:.6}")
            })?;
        }
    }
    Ok(format!(
        "200 pairs, min post - pre {min_gain:.4}, min warp-only post {min_clean:.5}"
    ))
}

// ---------------------------------------------------------------- 8: conditions

fn report_passes(eers: &[f64], rhos: &[f64]) -> Result<(Vec<u8>, bool), String> {
    let datasets = eers
        .iter()
        .zip(rhos)
        .enumerate()
        .map(|(i, (&eer, &rho))| DatasetMetrics {
            name: format!("d{i}"),
            eer: Some(eer),
            eer_unprotected: Some(0.02),
            wer: Some(0.1),
            rho_f0: Some(rho),
            rho_f0_dtw: Some(rho),
            g_vd: Some(Gvd::Db(-1.0)),
            ..Default::default()
        })
        .collect();
    let r = generate_report(&ReportInputs {
        datasets,
        conditions: EvaluationCondition::standard(),
        config: serde_json::json!({}),
        tool_version: "test".into(),
    })
    .map_err(|e| e.to_string())?;
    Ok((r.passed_conditions(), r.pitch_gate_passed))
}

fn criterion_conditions() -> Outcome {
    let (passed, gate) = report_passes(&[0.22], &[0.8])?;
    ensure(gate && passed == vec![1, 2], || {
        format!("EER 0.22 passed {passed:?}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 0..100 {
        let n = rng.random_range(1..=3usize);
        let eers: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.5)).collect();
        let rhos: Vec<f64> = (0..n).map(|_| rng.random_range(-0.2..1.0)).collect();
        let (passed, gate) = report_passes(&eers, &rhos)?;
        let weighted = eers.iter().sum::<f64>() / n as f64;
        let expected: Vec<u8> = STANDARD_MIN_TARGET_EERS
            .iter()
            .enumerate()
            .filter(|(_, &t)| gate && weighted > t)
            .map(|(i, _)| i as u8 + 1)
            .collect();
        ensure(passed == expected, || {
            format!("vector {k}: {passed:?}, expected {expected:?}")
        })?;
        ensure(
            passed.iter().enumerate().all(|(i, &c)| c == i as u8 + 1),
            || format!("vector {k}: passes {passed:?} are not a prefix"),
        )?;
        let delta = rng.random_range(0.0..0.2);
        let raised: Vec<f64> = eers.iter().map(|e| (e + delta).min(1.0)).collect();
        let (more, _) = report_passes(&raised, &rhos)?;
        ensure(more.len() >= passed.len(), || {
            format!("vector {k}: raising EER lost passes")
        })?;
    }
    Ok("EER 0.22 -> {15%, 20%}; 100 random vectors monotone".into())
}

// ---------------------------------------------------------------- 9: consistency

fn criterion_consistency() -> Outcome {
    for seed in [1u64, 2022, 31337] {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let scfg = SynthConfig {
            n_speakers: 4,
            utts_per_speaker: 3,
            utt_secs: 0.5,
            seed,
            ..Default::default()
        };
        let corpus = generate_corpus(&scfg, dir.path().join("c")).map_err(|e| e.to_string())?;
        for level in [Level::Speaker, Level::Utterance] {
            let cfg = AnonymizationConfig {
                level,
                seed,
                ..Default::default()
            };
            let out = anonymize_corpus(&corpus.trial, &cfg, dir.path().join(format!("a-{level}")))
                .map_err(|e| e.to_string())?;
            let speaker_of: BTreeMap<&str, &str> = corpus
                .trial
                .entries()
                .iter()
                .map(|e| (e.utterance_id.as_str(), e.speaker_id.as_str()))
                .collect();
            let mut per_speaker: BTreeMap<&str, BTreeSet<u64>> = BTreeMap::new();
            let mut all = BTreeSet::new();
            for (utt, p) in &out.params {
                let PseudoSpeaker::McAdams { alpha } = p else {
                    return Err(format!("unexpected parameters {p:?}"));
                };
                per_speaker
                    .entry(speaker_of[utt.as_str()])
                    .or_default()
                    .insert(alpha.to_bits());
                all.insert(alpha.to_bits());
            }
            match level {
                Level::Speaker => ensure(per_speaker.values().all(|s| s.len() == 1), || {
                    format!("seed {seed}: a speaker got several parameters")
                })?,
                Level::Utterance => ensure(all.len() == out.params.len(), || {
                    format!("seed {seed}: repeated per-utterance parameters")
                })?,
            }
        }
    }

    let runs: Vec<BTreeMap<String, Vec<u8>>> = [1, 8]
        .iter()
        .map(|&threads| cli_pipeline(threads, false).map(|(_, files, _)| files))
        .collect::<Result<_, _>>()?;
    ensure(runs[0].keys().eq(runs[1].keys()), || {
        "different output file sets".into()
    })?;
    for (name, bytes) in &runs[0] {
        ensure(&runs[1][name] == bytes, || {
            format!("{name} differs between 1 and 8 threads")
        })?;
    }
    Ok(format!(
        "3 seeds x 2 levels consistent; {} output files byte-identical",
        runs[0].len()
    ))
}

// ---------------------------------------------------------------- 10: CLI

fn anonkit(args: &[&str], threads: usize) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_anonkit"))
        .args(args)
        .env("ANONKIT_THREADS", threads.to_string())
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "anonkit {} failed: {}",
            args.first().unwrap_or(&""),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

/// Hypotheses from a simulated recogniser: every third utterance loses its
/// second token and every fifth gets one substituted.
fn simulated_hypotheses(references: &Path, out: &Path) -> Result<(), String> {
    let text = fs::read_to_string(references).map_err(|e| e.to_string())?;
    let mut hyp = String::new();
    for (i, line) in text.lines().enumerate() {
        let Some((utt, words)) = line.split_once('\t') else {
            continue;
        };
        let mut w: Vec<&str> = words.split_whitespace().collect();
        if i % 3 == 0 && w.len() > 1 {
            w.remove(1);
        }
        if i % 5 == 0 {
            w[0] = "T9";
        }
        hyp.push_str(&format!("{utt}\t{}\n", w.join(" ")));
    }
    fs::write(out, hyp).map_err(|e| e.to_string())
}

/// Runs synth-corpus, anonymize and evaluate on the default 8x4 corpus.
/// Returns the report, every output file by relative path, and seconds.
type PipelineRun = (serde_json::Value, BTreeMap<String, Vec<u8>>, f64);

fn cli_pipeline(threads: usize, keep_dir: bool) -> Result<PipelineRun, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    let start = Instant::now();
    anonkit(&["synth-corpus", "--out", &p("corpus")], threads)?;
    anonkit(
        &[
            "anonymize",
            "--manifest",
            &p("corpus/trial.tsv"),
            "--out",
            &p("anon"),
        ],
        threads,
    )?;
    simulated_hypotheses(
        &dir.path().join("corpus/transcripts.tsv"),
        &dir.path().join("hyp.tsv"),
    )?;
    anonkit(
        &[
            "evaluate",
            "--orig",
            &p("corpus/trial.tsv"),
            "--anon",
            &p("anon/manifest.tsv"),
            "--enroll",
            &p("corpus/enroll.tsv"),
            "--trials",
            &p("corpus/trials.txt"),
            "--hypotheses",
            &p("hyp.tsv"),
            "--out",
            &p("eval"),
        ],
        threads,
    )?;
    let secs = start.elapsed().as_secs_f64();
    let mut files = BTreeMap::new();
    for sub in ["anon", "eval"] {
        for entry in fs::read_dir(dir.path().join(sub)).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            let name = format!("{sub}/{}", path.file_name().unwrap().to_string_lossy());
            // manifests and reports hold absolute paths only via the temp root
            files.insert(name, fs::read(&path).map_err(|e| e.to_string())?);
        }
    }
    let report: serde_json::Value =
        serde_json::from_slice(&files["eval/report.json"]).map_err(|e| e.to_string())?;
    if keep_dir {
        let _ = dir.keep();
    }
    Ok((report, files, secs))
}

fn criterion_cli() -> Outcome {
    let (report, _, secs) = cli_pipeline(8, false)?;
    let schema: serde_json::Value =
        serde_json::from_str(REPORT_SCHEMA).map_err(|e| e.to_string())?;
    let validator = jsonschema::validator_for(&schema).map_err(|e| e.to_string())?;
    let errors: Vec<String> = validator
        .iter_errors(&report)
        .map(|e| e.to_string())
        .collect();
    ensure(errors.is_empty(), || {
        format!("schema violations: {}", errors.join("; "))
    })?;
    let d = &report["datasets"][0];
    for key in ["eer", "wer", "rho_f0", "g_vd"] {
        ensure(!d[key].is_null(), || format!("report lacks {key}"))?;
    }
    ensure(secs < 60.0, || format!("pipeline took {secs:.1} s"))?;
    Ok(format!(
        "schema-valid report in {secs:.1} s: EER {}, WER {}, rho_F0 {}, G_VD {}",
        d["eer"], d["wer"], d["rho_f0"], d["g_vd"]
    ))
}

fn main() -> ExitCode {
    println!("anonkit acceptance suite");
    let mut corpus = None;
    let results = [
        run_criterion(1, "EER oracle equivalence", Some(5.0), criterion_eer),
        run_criterion(2, "WER oracle equivalence", Some(10.0), criterion_wer),
        run_criterion(
            3,
            "similarity matrix and G_VD unit cases",
            None,
            criterion_gvd,
        ),
        run_criterion(4, "McAdams pole rotation", Some(2.0), criterion_mcadams),
        run_criterion(
            5,
            "directional privacy on the synthetic corpus",
            Some(30.0),
            || criterion_privacy(&mut corpus),
        ),
        run_criterion(6, "pitch-correlation gate", None, || {
            criterion_pitch_gate(&mut corpus)
        }),
        run_criterion(7, "DTW realignment direction", None, criterion_dtw),
        run_criterion(8, "condition gating", None, criterion_conditions),
        run_criterion(
            9,
            "pseudo-speaker consistency and thread determinism",
            None,
            criterion_consistency,
        ),
        run_criterion(10, "end-to-end CLI", Some(60.0), criterion_cli),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
