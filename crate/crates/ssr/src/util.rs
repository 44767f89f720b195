//! Shared formatting and hashing helpers.

/// Formats a float with 17 significant digits (round-trip exact for `f64`).
pub fn fmt_f64(v: f64) -> String {
    format!("{:.16e}", v)
}

/// FNV-1a over bytes, used for content digests of configs and specs.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Hex-encoded FNV-1a digest.
pub fn digest_hex(bytes: &[u8]) -> String {
    format!("{:016x}", fnv1a(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_f64_round_trips() {
        for &v in &[
            0.1,
            -3.25,
            1.0 / 3.0,
            std::f64::consts::PI,
            1e-300,
            6.02e23,
            0.0,
        ] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{s}");
        }
    }

    #[test]
    fn digest_is_stable_and_input_sensitive() {
        assert_eq!(digest_hex(b"abc"), digest_hex(b"abc"));
        assert_ne!(digest_hex(b"abc"), digest_hex(b"abd"));
        assert_eq!(digest_hex(b"").len(), 16);
    }
}
