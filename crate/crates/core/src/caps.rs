//! Size limits for the dense and exhaustive oracles.

use crate::error::{Error, Result};

pub const DEFAULT_DENSE_CAP: usize = 400;
pub const DEFAULT_ENUMERATION_CAP: u128 = 2_000_000;
pub const CAP_ENV_VAR: &str = "BATCHSCHED_ORACLE_CAP";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCaps {
    /// Largest `nK` for which dense `nK×nK` matrices are formed.
    pub dense: usize,
    /// Largest number of feasible schedules enumerated.
    pub enumeration: u128,
}

impl Default for OracleCaps {
    fn default() -> Self {
        Self {
            dense: DEFAULT_DENSE_CAP,
            enumeration: DEFAULT_ENUMERATION_CAP,
        }
    }
}

impl OracleCaps {
    /// Defaults, overridden by `BATCHSCHED_ORACLE_CAP` when set.
    ///
    /// The variable is either one integer (applied to both caps) or a
    /// comma-separated list of `dense=N` / `enum=N` entries.
    pub fn from_env() -> Result<Self> {
        match std::env::var(CAP_ENV_VAR) {
            Ok(v) => Self::parse(&v),
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse {CAP_ENV_VAR}=`{spec}`"));
        let spec = spec.trim();
        if let Ok(n) = spec.parse::<u64>() {
            return Ok(Self {
                dense: usize::try_from(n).map_err(|_| bad())?,
                enumeration: n as u128,
            });
        }
        let mut caps = Self::default();
        for part in spec.split(',') {
            let (key, value) = part.split_once('=').ok_or_else(bad)?;
            let value: u64 = value.trim().parse().map_err(|_| bad())?;
            match key.trim() {
                "dense" => caps.dense = usize::try_from(value).map_err(|_| bad())?,
                "enum" | "enumeration" => caps.enumeration = value as u128,
                _ => return Err(bad()),
            }
        }
        Ok(caps)
    }

    pub fn check_dense(&self, size: usize) -> Result<()> {
        if size > self.dense {
            Err(Error::OracleCapExceeded { size, cap: self.dense })
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(
            OracleCaps::parse("50").unwrap(),
            OracleCaps { dense: 50, enumeration: 50 }
        );
        let c = OracleCaps::parse("dense=10, enum=99").unwrap();
        assert_eq!((c.dense, c.enumeration), (10, 99));
        assert!(OracleCaps::parse("big").is_err());
        assert!(OracleCaps::parse("depth=3").is_err());
    }

    #[test]
    fn dense_check() {
        let c = OracleCaps::default();
        assert!(c.check_dense(400).is_ok());
        assert!(matches!(
            c.check_dense(401),
            Err(Error::OracleCapExceeded { size: 401, cap: 400 })
        ));
    }
}
