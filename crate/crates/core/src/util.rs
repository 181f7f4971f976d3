//! Small shared helpers.

/// FNV-1a 64-bit hash; used for cache keys and config fingerprints.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Hash the raw bit pattern of a complex matrix buffer.
pub fn hash_complex_slice(data: &[num_complex::Complex64]) -> u64 {
    let bytes = unsafe {
        std::slice::from_raw_parts(data.as_ptr() as *const u8, std::mem::size_of_val(data))
    };
    fnv1a64(bytes)
}

/// Inclusive linspace over [0, max] with `points` samples.
pub fn linspace(max: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points).map(|k| max * k as f64 / (points - 1) as f64).collect()
}
