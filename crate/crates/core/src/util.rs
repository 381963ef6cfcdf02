//! Small shared helpers.

/// Writes a warning to stderr unless `CAVP_LOG=quiet`.
pub fn log_warn(msg: &str) {
    if std::env::var("CAVP_LOG").map(|v| v == "quiet").unwrap_or(false) {
        return;
    }
    eprintln!("warning: {msg}");
}

/// FNV-1a 64-bit hash; stable across runs and platforms.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Order-insensitive hash of a reference sentence list.
pub fn hash_reference_set(refs: &[Vec<String>]) -> u64 {
    let mut hashes: Vec<u64> = refs
        .iter()
        .map(|r| fnv1a64(r.join(" ").as_bytes()))
        .collect();
    hashes.sort_unstable();
    let mut bytes = Vec::with_capacity(hashes.len() * 8);
    for h in hashes {
        bytes.extend_from_slice(&h.to_le_bytes());
    }
    fnv1a64(&bytes)
}
