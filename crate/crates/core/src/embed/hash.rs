use crate::error::EmbedError;

use super::{EmbeddingVector, ProviderDescriptor, TextEmbedder};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a. Fixed constants keep buckets stable across platforms and
/// toolchains, which `std`'s hasher does not promise.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn finalize(mut z: u64) -> u64 {
    z ^= z >> 33;
    z = z.wrapping_mul(0xff51_afd7_ed55_8ccd);
    z ^= z >> 33;
    z = z.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    z ^ (z >> 33)
}

/// Lowercased maximal alphanumeric runs.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase)
}

/// Signed feature hashing: each token adds ±1 to one of `dim` buckets, then
/// the vector is L2-normalized. Texts without tokens map to the zero vector.
pub fn hash_embed(text: &str, dim: usize) -> EmbeddingVector {
    assert!(dim >= 1, "embedding dimension must be positive");
    let mut v = vec![0.0f64; dim];
    for tok in tokenize(text) {
        let h = fnv1a(tok.as_bytes());
        let bucket = (h % dim as u64) as usize;
        let sign = if finalize(h) >> 63 == 0 { 1.0 } else { -1.0 };
        v[bucket] += sign;
    }
    EmbeddingVector::new(v).normalized()
}

#[derive(Debug, Clone)]
pub struct HashEmbedder {
    desc: ProviderDescriptor,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        Self { desc: ProviderDescriptor::hash(dim) }
    }
}

impl TextEmbedder for HashEmbedder {
    fn descriptor(&self) -> &ProviderDescriptor {
        &self.desc
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(texts.iter().map(|t| hash_embed(t, self.desc.dimension)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::cosine;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x8594_4171_f739_67e8);
    }

    #[test]
    fn empty_and_deterministic() {
        assert_eq!(hash_embed("", 16).into_inner(), vec![0.0; 16]);
        assert_eq!(hash_embed(" ,;! ", 16).into_inner(), vec![0.0; 16]);
        let a = hash_embed("Graph learning, at scale!", 64);
        let b = hash_embed("graph LEARNING at scale", 64);
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_beats_disjoint() {
        let shared: Vec<String> = (0..18).map(|i| format!("common{i}")).collect();
        let first = format!("{} alpha beta", shared.join(" "));
        let second = format!("{} gamma delta", shared.join(" "));
        let left = (0..20).map(|i| format!("left{i}")).collect::<Vec<_>>().join(" ");
        let right = (0..20).map(|i| format!("right{i}")).collect::<Vec<_>>().join(" ");
        let near = cosine(&hash_embed(&first, 256), &hash_embed(&second, 256)).unwrap();
        let far = cosine(&hash_embed(&left, 256), &hash_embed(&right, 256)).unwrap();
        assert!(near > far, "{near} <= {far}");
        assert!(near > 0.8);
        assert!(far.abs() < 0.35);
    }

    #[test]
    fn provider_embeds_in_order() {
        let p = HashEmbedder::new(8);
        let out = p.embed(&["x".into(), "y z".into()]).unwrap();
        assert_eq!(out[0], hash_embed("x", 8));
        assert_eq!(out[1], hash_embed("y z", 8));
        assert_eq!(p.dimension(), 8);
    }
}
