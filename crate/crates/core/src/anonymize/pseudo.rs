use sha2::{Digest, Sha256};

use super::{AnonError, AnonymizationConfig, Level, Method, PseudoSpeaker};

fn digest(seed: u64, domain: &str, parts: &[&str]) -> [u8; 32] {
    let mut h = Sha256::new();
    // length prefixes keep ("ab", "c") distinct from ("a", "bc")
    h.update((domain.len() as u64).to_le_bytes());
    h.update(domain.as_bytes());
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    h.finalize().into()
}

/// Uniform value in `[0, 1)` that depends only on `(seed, domain, parts)`.
///
/// Counter-free and order-independent: any worker can derive any key's
/// value without coordination.
pub fn derive_unit(seed: u64, domain: &str, parts: &[&str]) -> f64 {
    let d = digest(seed, domain, parts);
    let bits = u64::from_le_bytes(d[..8].try_into().unwrap());
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A child seed for a named purpose, e.g. the attacker's anonymization.
pub fn derive_seed(seed: u64, domain: &str) -> u64 {
    let d = digest(seed, "seed", &[domain]);
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

/// Pseudo-speaker parameters for an utterance.
///
/// At speaker level the result depends only on `(seed, speaker_id)`; at
/// utterance level it also depends on `utterance_id`.
pub fn assign_pseudo_speaker(
    cfg: &AnonymizationConfig,
    speaker_id: &str,
    utterance_id: &str,
) -> Result<PseudoSpeaker, AnonError> {
    if speaker_id.is_empty() || utterance_id.is_empty() {
        return Err(AnonError::InvalidConfig(
            "speaker and utterance ids must be non-empty".into(),
        ));
    }
    let key: Vec<&str> = match cfg.level {
        Level::Speaker => vec![speaker_id],
        Level::Utterance => vec![speaker_id, utterance_id],
    };
    let domain = match cfg.level {
        Level::Speaker => "pseudo-speaker/speaker",
        Level::Utterance => "pseudo-speaker/utterance",
    };
    let u = derive_unit(cfg.seed, domain, &key);
    Ok(match cfg.method {
        Method::McAdams => PseudoSpeaker::McAdams {
            alpha: cfg.alpha_min + u * (cfg.alpha_max - cfg.alpha_min),
        },
        Method::PitchShift => PseudoSpeaker::PitchShift {
            semitones: cfg.shift_min + u * (cfg.shift_max - cfg.shift_min),
        },
    })
}
