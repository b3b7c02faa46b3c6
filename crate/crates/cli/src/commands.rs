use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anonkit_core::anonymize::{anonymize_corpus, derive_seed};
use anonkit_core::asr::CorpusWer;
use anonkit_core::asv::{
    compute_eer, embed_manifest, gain_voice_distinctiveness, run_attack, similarity_matrix,
    speaker_groups, AttackConfig, Backend, CosineScorer, EerResult, SimilarityMatrix,
};
use anonkit_core::pitch::corpus_pitch_correlation;
use anonkit_core::protocol::{generate_report, DatasetMetrics, ReportInputs};
use anonkit_core::synth::{generate_corpus, SynthConfig};
use anonkit_core::{
    corpus_wer, load_manifest, AnonymizationConfig, AsvError, EvaluationCondition, Gvd, Manifest,
    ProtocolError, PseudoSpeaker, Scenario, ScoreSet, Transcripts, TrialSet, VERSION,
};
use clap::Args;
use log::{info, warn};

use crate::config::{AnonArgs, Settings};
use crate::error::CliError;

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| {
        ProtocolError::Io {
            path: path.to_path_buf(),
            source,
        }
        .into()
    })
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| {
        ProtocolError::Io {
            path: path.to_path_buf(),
            source,
        }
        .into()
    })
}

fn percent(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn attack_config(
    settings: &Settings,
    anon: AnonymizationConfig,
    attacker_seed: Option<u64>,
) -> AttackConfig {
    let mut cfg = AttackConfig::new(anon);
    if let Some(s) = attacker_seed.or(settings.attacker_seed) {
        cfg.attacker_seed = s;
    }
    cfg.embedding = settings.embedding;
    cfg.scorer = CosineScorer {
        scale: settings.score_scale,
    };
    cfg
}

fn require_two_speakers(m: &Manifest, what: &str) -> Result<(), CliError> {
    let n = m.by_speaker().len();
    if n < 2 {
        return Err(CliError::Config(format!(
            "{what} manifest has {n} speaker(s); at least 2 are needed"
        )));
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct AnonymizeArgs {
    /// Source manifest (TSV: utterance, speaker, path[, transcript])
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory for the anonymized WAVs and manifest.tsv
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub anon: AnonArgs,
}

/// One row per utterance: the parameter it was anonymized with.
pub fn pseudo_speakers_tsv(params: &[(String, PseudoSpeaker)]) -> String {
    let mut s = String::from("utterance_id\tmethod\tvalue\n");
    for (key, p) in params {
        let _ = match p {
            PseudoSpeaker::McAdams { alpha } => writeln!(s, "{key}\tmcadams\t{alpha:.9}"),
            PseudoSpeaker::PitchShift { semitones } => {
                writeln!(s, "{key}\tpitch_shift\t{semitones:.9}")
            }
        };
    }
    s
}

fn distinct_voices(params: &[(String, PseudoSpeaker)]) -> usize {
    params
        .iter()
        .map(|(_, p)| match p {
            PseudoSpeaker::McAdams { alpha } => alpha.to_bits(),
            PseudoSpeaker::PitchShift { semitones } => semitones.to_bits(),
        })
        .collect::<std::collections::BTreeSet<_>>()
        .len()
}

pub fn anonymize(settings: &Settings, args: &AnonymizeArgs) -> Result<(), CliError> {
    let cfg = settings.anonymization_with(&args.anon)?;
    let manifest = load_manifest(&args.manifest)?;
    let result = anonymize_corpus(&manifest, &cfg, &args.out)?;
    write_file(
        &args.out.join("pseudo_speakers.tsv"),
        &pseudo_speakers_tsv(&result.params),
    )?;
    println!(
        "anonymized {} utterances with {} ({} pseudo-speakers, {} level) into {}",
        result.manifest.len(),
        cfg.method,
        distinct_voices(&result.params),
        cfg.level,
        args.out.join("manifest.tsv").display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Original trial manifest
    #[arg(long)]
    pub orig: PathBuf,
    /// Anonymized trial manifest with the same utterance ids
    #[arg(long)]
    pub anon: PathBuf,
    /// Enrollment manifest (original audio)
    #[arg(long)]
    pub enroll: PathBuf,
    /// Trial list (enroll speaker, trial utterance, target|nontarget)
    #[arg(long)]
    pub trials: PathBuf,
    /// Output directory for report.json and the per-utterance files
    #[arg(long)]
    pub out: PathBuf,
    /// Dataset name in the report; defaults to the original manifest's
    #[arg(long)]
    pub name: Option<String>,
    /// Precomputed semi-informed scores (`speaker utterance score` lines)
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Precomputed unprotected scores (`speaker utterance score` lines)
    #[arg(long)]
    pub scores_unprotected: Option<PathBuf>,
    /// Reference transcripts (TSV); defaults to the original manifest's
    #[arg(long)]
    pub references: Option<PathBuf>,
    /// ASR hypotheses for the anonymized audio (TSV); without them WER
    /// is left out
    #[arg(long)]
    pub hypotheses: Option<PathBuf>,
    /// Training manifest for the scoring backend; defaults to enrollment
    /// for the attacks and to the original trials for G_VD
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Attacker seed; defaults to one derived from the user seed
    #[arg(long)]
    pub attacker_seed: Option<u64>,
    #[command(flatten)]
    pub anon_args: AnonArgs,
}

/// Similarity matrices of the original and anonymized trial sets and the
/// resulting G_VD.
pub fn voice_distinctiveness(
    orig: &Manifest,
    anon: &Manifest,
    train: &Manifest,
    settings: &Settings,
) -> Result<(SimilarityMatrix, SimilarityMatrix, Gvd), CliError> {
    let backend = Backend::fit(&embed_manifest(train, &settings.embedding)?)?;
    let scorer = CosineScorer {
        scale: settings.score_scale,
    };
    let m_oo = similarity_matrix(
        &speaker_groups(orig, &embed_manifest(orig, &settings.embedding)?, &backend)?,
        &scorer,
    )?;
    let m_aa = similarity_matrix(
        &speaker_groups(anon, &embed_manifest(anon, &settings.embedding)?, &backend)?,
        &scorer,
    )?;
    let gvd = match gain_voice_distinctiveness(&m_oo, &m_aa) {
        Ok(g) => g,
        Err(AsvError::UndefinedMetric(msg)) => {
            warn!("G_VD undefined: {msg}");
            Gvd::Undefined
        }
        Err(e) => return Err(e.into()),
    };
    Ok((m_oo, m_aa, gvd))
}

pub fn wer_csv(w: &CorpusWer) -> String {
    let mut s = String::from("utterance_id,n_ref,n_sub,n_del,n_ins,wer\n");
    for (utt, b) in &w.per_utterance {
        let _ = writeln!(
            s,
            "{utt},{},{},{},{},{:.6}",
            b.n_ref, b.n_sub, b.n_del, b.n_ins, b.wer
        );
    }
    s
}

fn eer_for(
    scenario: Scenario,
    precomputed: Option<&Path>,
    enroll: &Manifest,
    trial: &Manifest,
    trials: &TrialSet,
    attack: &AttackConfig,
) -> Result<(EerResult, ScoreSet), CliError> {
    match precomputed {
        Some(path) => {
            let scores = ScoreSet::load_for(path, trials)?;
            Ok((compute_eer(&scores, trials)?, scores))
        }
        None => {
            let r = run_attack(scenario, enroll, trial, trials, attack)?;
            Ok((r.eer, r.scores))
        }
    }
}

pub fn evaluate(settings: &Settings, args: &EvaluateArgs) -> Result<(), CliError> {
    let anon_cfg = settings.anonymization_with(&args.anon_args)?;
    let orig = load_manifest(&args.orig)?;
    let anon = load_manifest(&args.anon)?;
    let enroll = load_manifest(&args.enroll)?;
    let trials = TrialSet::load(&args.trials)?;
    let train = args.train.as_ref().map(load_manifest).transpose()?;
    require_two_speakers(&orig, "original")?;
    create_dir(&args.out)?;

    let mut attack = attack_config(settings, anon_cfg.clone(), args.attacker_seed);
    attack.training = train.clone();
    let name = args
        .name
        .clone()
        .unwrap_or_else(|| orig.dataset_name().to_string());
    let mut sidecars = BTreeMap::new();

    info!("unprotected attack");
    let (unprotected, scores) = eer_for(
        Scenario::Unprotected,
        args.scores_unprotected.as_deref(),
        &enroll,
        &orig,
        &trials,
        &attack,
    )?;
    scores.write(&trials, args.out.join("scores_unprotected.txt"))?;
    sidecars.insert(
        "scores_unprotected".to_string(),
        "scores_unprotected.txt".to_string(),
    );

    info!("semi-informed attack");
    attack.trials_anonymized = true;
    let (semi, scores) = eer_for(
        Scenario::SemiInformed,
        args.scores.as_deref(),
        &enroll,
        &anon,
        &trials,
        &attack,
    )?;
    scores.write(&trials, args.out.join("scores_semi_informed.txt"))?;
    sidecars.insert(
        "scores_semi_informed".to_string(),
        "scores_semi_informed.txt".to_string(),
    );

    info!("pitch correlation");
    let pitch = corpus_pitch_correlation(&orig, &anon, true, &settings.pitch)?;
    write_file(&args.out.join("pitch.csv"), &pitch.to_csv())?;
    sidecars.insert("pitch".to_string(), "pitch.csv".to_string());

    info!("voice distinctiveness");
    let (m_oo, m_aa, gvd) =
        voice_distinctiveness(&orig, &anon, train.as_ref().unwrap_or(&orig), settings)?;
    write_file(&args.out.join("similarity_orig.csv"), &m_oo.to_csv())?;
    write_file(&args.out.join("similarity_anon.csv"), &m_aa.to_csv())?;
    sidecars.insert(
        "similarity_orig".to_string(),
        "similarity_orig.csv".to_string(),
    );
    sidecars.insert(
        "similarity_anon".to_string(),
        "similarity_anon.csv".to_string(),
    );

    let mut wer = None;
    let mut wer_missing = 0;
    if let Some(hyp_path) = &args.hypotheses {
        let refs = match &args.references {
            Some(p) => Transcripts::load(p)?,
            None => Transcripts::from_manifest(&orig),
        };
        let w = corpus_wer(&refs, &Transcripts::load(hyp_path)?)?;
        if !w.missing.is_empty() {
            warn!(
                "{} utterance(s) have no hypothesis and count as deletions",
                w.missing.len()
            );
        }
        write_file(&args.out.join("wer.csv"), &wer_csv(&w))?;
        sidecars.insert("wer".to_string(), "wer.csv".to_string());
        wer = Some(w.total.wer);
        wer_missing = w.missing.len();
    } else {
        warn!("no --hypotheses given; WER is left out of the report");
    }

    let metrics = DatasetMetrics {
        name,
        eer: Some(semi.eer),
        eer_unprotected: Some(unprotected.eer),
        wer,
        wer_missing_hypotheses: wer_missing,
        rho_f0: pitch.mean_rho,
        rho_f0_dtw: pitch.mean_rho_dtw,
        rho_f0_undefined: pitch.n_undefined,
        g_vd: Some(gvd),
        sidecars,
    };
    let metrics_json = serde_json::to_string_pretty(&metrics).expect("metrics serialise to JSON");
    write_file(&args.out.join("metrics.json"), &(metrics_json + "\n"))?;

    let report = generate_report(&ReportInputs {
        datasets: vec![metrics],
        conditions: EvaluationCondition::standard(),
        config: settings.echo(&anon_cfg, attack.attacker_seed),
        tool_version: VERSION.to_string(),
    })?;
    report.write(args.out.join("report.json"))?;

    println!("EER unprotected    {}", percent(unprotected.eer));
    println!("EER semi-informed  {}", percent(semi.eer));
    match pitch.mean_rho {
        Some(r) => println!("rho_F0             {r:.4}"),
        None => println!("rho_F0             undefined"),
    }
    println!("G_VD               {gvd} dB");
    if let Some(w) = wer {
        println!("WER                {}", percent(w));
    }
    println!("conditions passed  {:?}", report.passed_conditions());
    println!(
        "report             {}",
        args.out.join("report.json").display()
    );
    if pitch.mean_rho.is_none() {
        return Err(CliError::Metric(
            "pitch correlation is undefined for every utterance".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct EerArgs {
    /// Trial list
    #[arg(long)]
    pub trials: PathBuf,
    /// Scores, one per trial, in trial order
    #[arg(long)]
    pub scores: PathBuf,
}

pub fn eer(args: &EerArgs) -> Result<(), CliError> {
    let trials = TrialSet::load(&args.trials)?;
    let scores = ScoreSet::load_for(&args.scores, &trials)?;
    let r = compute_eer(&scores, &trials)?;
    println!(
        "EER {} (threshold {:.6}, {} target / {} non-target trials)",
        percent(r.eer),
        r.threshold,
        r.n_target,
        r.n_nontarget
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct WerArgs {
    /// Reference transcripts (TSV: utterance, text)
    #[arg(long)]
    pub references: PathBuf,
    /// Hypothesis transcripts (TSV: utterance, text)
    #[arg(long)]
    pub hypotheses: PathBuf,
    /// Write per-utterance counts to this CSV file
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn wer(args: &WerArgs) -> Result<(), CliError> {
    let w = corpus_wer(
        &Transcripts::load(&args.references)?,
        &Transcripts::load(&args.hypotheses)?,
    )?;
    if let Some(path) = &args.csv {
        write_file(path, &wer_csv(&w))?;
    }
    let t = &w.total;
    println!(
        "WER {} ({} sub, {} del, {} ins over {} reference words)",
        percent(t.wer),
        t.n_sub,
        t.n_del,
        t.n_ins,
        t.n_ref
    );
    if !w.missing.is_empty() {
        println!(
            "{} utterance(s) without a hypothesis were scored as deletions",
            w.missing.len()
        );
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct PitchArgs {
    /// Original manifest
    #[arg(long)]
    pub orig: PathBuf,
    /// Anonymized manifest with the same utterance ids
    #[arg(long)]
    pub anon: PathBuf,
    /// Skip the DTW-realigned correlation
    #[arg(long)]
    pub no_dtw: bool,
    /// Write per-utterance values to this CSV file
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn pitch_corr(settings: &Settings, args: &PitchArgs) -> Result<(), CliError> {
    let orig = load_manifest(&args.orig)?;
    let anon = load_manifest(&args.anon)?;
    let p = corpus_pitch_correlation(&orig, &anon, !args.no_dtw, &settings.pitch)?;
    if let Some(path) = &args.csv {
        write_file(path, &p.to_csv())?;
    }
    let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |r| format!("{r:.4}"));
    println!("mean rho_F0 {}", fmt(p.mean_rho));
    if !args.no_dtw {
        println!("mean rho_F0 after DTW {}", fmt(p.mean_rho_dtw));
    }
    println!(
        "{} of {} utterances undefined",
        p.n_undefined,
        p.utterances.len()
    );
    match p.mean_rho {
        Some(_) => Ok(()),
        None => Err(CliError::Metric(
            "pitch correlation is undefined for every utterance".into(),
        )),
    }
}

#[derive(Debug, Args)]
pub struct GvdArgs {
    /// Original manifest
    #[arg(long)]
    pub orig: PathBuf,
    /// Anonymized manifest
    #[arg(long)]
    pub anon: PathBuf,
    /// Training manifest for the scoring backend; defaults to --orig
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Directory for similarity_orig.csv and similarity_anon.csv
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn gvd(settings: &Settings, args: &GvdArgs) -> Result<(), CliError> {
    let orig = load_manifest(&args.orig)?;
    let anon = load_manifest(&args.anon)?;
    require_two_speakers(&orig, "original")?;
    require_two_speakers(&anon, "anonymized")?;
    let train = args.train.as_ref().map(load_manifest).transpose()?;
    let (m_oo, m_aa, g) =
        voice_distinctiveness(&orig, &anon, train.as_ref().unwrap_or(&orig), settings)?;
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_file(&dir.join("similarity_orig.csv"), &m_oo.to_csv())?;
        write_file(&dir.join("similarity_anon.csv"), &m_aa.to_csv())?;
    }
    println!("G_VD {g} dB");
    match g {
        Gvd::Undefined => Err(CliError::Metric(
            "G_VD is undefined: the original similarity matrix has no diagonal dominance".into(),
        )),
        _ => Ok(()),
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Number of speakers
    #[arg(long, default_value_t = 8)]
    pub speakers: usize,
    /// Trial utterances per speaker
    #[arg(long, default_value_t = 4)]
    pub utts: usize,
    /// Enrollment utterances per speaker
    #[arg(long, default_value_t = 2)]
    pub enroll: usize,
    /// Utterance length in seconds
    #[arg(long, default_value_t = 2.0)]
    pub secs: f64,
    /// Sample rate in Hz
    #[arg(long, default_value_t = 16000)]
    pub sample_rate: u32,
}

pub fn synth_corpus(settings: &Settings, args: &SynthArgs) -> Result<(), CliError> {
    let cfg = SynthConfig {
        n_speakers: args.speakers,
        utts_per_speaker: args.utts,
        enroll_per_speaker: args.enroll,
        seed: settings.seed,
        sample_rate: args.sample_rate,
        utt_secs: args.secs,
    };
    let c = generate_corpus(&cfg, &args.out)?;
    println!("trial manifest       {}", c.trial_manifest_path.display());
    println!("enrollment manifest  {}", c.enroll_manifest_path.display());
    println!("trial list           {}", c.trials_path.display());
    println!("transcripts          {}", c.transcripts_path.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Per-dataset metrics.json files written by `evaluate`
    #[arg(long, required = true, num_args = 1..)]
    pub metrics: Vec<PathBuf>,
    /// Output report path
    #[arg(long)]
    pub out: PathBuf,
}

pub fn report(settings: &Settings, args: &ReportArgs) -> Result<(), CliError> {
    let mut datasets = Vec::new();
    for path in &args.metrics {
        let text = fs::read_to_string(path).map_err(|source| ProtocolError::Io {
            path: path.clone(),
            source,
        })?;
        let m: DatasetMetrics = serde_json::from_str(&text).map_err(|e| ProtocolError::Parse {
            path: path.clone(),
            line: e.line(),
            message: e.to_string(),
        })?;
        datasets.push(m);
    }
    let attacker_seed = settings
        .attacker_seed
        .unwrap_or_else(|| derive_seed(settings.seed, "attacker"));
    let report = generate_report(&ReportInputs {
        datasets,
        conditions: EvaluationCondition::standard(),
        config: settings.echo(&settings.anonymization, attacker_seed),
        tool_version: VERSION.to_string(),
    })?;
    report.write(&args.out)?;
    println!("weighted EER {}", percent(report.weighted_eer));
    if let Some(w) = report.weighted_wer {
        println!("weighted WER {}", percent(w));
    }
    println!(
        "pitch gate {}",
        if report.pitch_gate_passed {
            "passed"
        } else {
            "failed"
        }
    );
    println!("conditions passed {:?}", report.passed_conditions());
    Ok(())
}
