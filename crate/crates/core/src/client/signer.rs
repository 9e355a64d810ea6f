use hmac::{Hmac, Mac};
use sha2::Sha256;

#[derive(Debug, thiserror::Error)]
#[error("signing failed: {0}")]
pub struct SignError(pub String);

pub trait Signer: Send + Sync {
    fn sign(&self, bytes: &[u8]) -> Result<Vec<u8>, SignError>;
}

/// Local HMAC-SHA256 signer. Stands in for typed-data wallet signatures.
#[derive(Clone)]
pub struct HmacSigner {
    key: Vec<u8>,
}

impl HmacSigner {
    pub fn new(key: impl Into<Vec<u8>>) -> Result<Self, SignError> {
        let key = key.into();
        if key.is_empty() {
            return Err(SignError("empty signing key".into()));
        }
        Ok(HmacSigner { key })
    }
}

impl std::fmt::Debug for HmacSigner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("HmacSigner(..)")
    }
}

impl Signer for HmacSigner {
    fn sign(&self, bytes: &[u8]) -> Result<Vec<u8>, SignError> {
        let mut mac = Hmac::<Sha256>::new_from_slice(&self.key).expect("any key length");
        mac.update(bytes);
        Ok(mac.finalize().into_bytes().to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_keyed() {
        let a = HmacSigner::new(b"k1".to_vec()).unwrap();
        let b = HmacSigner::new(b"k2".to_vec()).unwrap();
        assert_eq!(a.sign(b"x").unwrap(), a.sign(b"x").unwrap());
        assert_ne!(a.sign(b"x").unwrap(), b.sign(b"x").unwrap());
        assert_eq!(a.sign(b"x").unwrap().len(), 32);
        assert!(HmacSigner::new(Vec::new()).is_err());
    }
}
