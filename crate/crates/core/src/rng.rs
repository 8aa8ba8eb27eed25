//! Counter-based Gaussian sampling.
//!
//! Every draw is a pure function of `(seed, stream, step, slot)`: no state
//! beyond the counters, so ensembles reproduce bit-for-bit under any
//! parallel schedule. Mixing is splitmix64; normals come from the Box-Muller
//! cosine branch with two fixed uniforms per draw.

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Domain-separated key for one 64-bit output.
#[inline]
pub fn counter_key(seed: u64, stream: u64, step: u64, slot: u64) -> u64 {
    let mut z = seed ^ 0x9e3779b97f4a7c15;
    z = mix64(z.wrapping_add(mix64(stream.wrapping_add(0xa0761d6478bd642f))));
    z = mix64(z.wrapping_add(mix64(step.wrapping_add(0xe7037ed1a0b428db))));
    mix64(z.wrapping_add(mix64(slot.wrapping_add(0x8ebc6af09c88c6e3))))
}

/// Uniform in the half-open interval (0, 1].
#[inline]
pub fn uniform_open01(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / 9007199254740992.0)
}

/// Uniform in [0, 1).
#[inline]
pub fn uniform_closed_open01(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// Standard normal draw at counter `(seed, stream, step, slot)`.
#[inline]
pub fn standard_normal(seed: u64, stream: u64, step: u64, slot: u64) -> f64 {
    let u1 = uniform_open01(counter_key(seed, stream, step, 2 * slot));
    let u2 = uniform_closed_open01(counter_key(seed, stream, step, 2 * slot + 1));
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
