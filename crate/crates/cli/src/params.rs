//! `key=value` parameters of a command. Every key supplied must be read by
//! the command; leftovers are reported as input errors so typos never pass
//! silently.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use quasinorm::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Params {
    values: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key=value` words; later words win.
    pub fn from_args<S: AsRef<str>>(words: &[S]) -> Result<Self> {
        let mut p = Params::new();
        for w in words {
            let w = w.as_ref();
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::input(format!("expected key=value, got '{w}'")))?;
            p.set(k.trim(), v.trim());
        }
        Ok(p)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values.insert(key.to_string(), value.to_string());
    }

    /// Entries of `other` override ours.
    pub fn merge(&mut self, other: &Params) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        let v = self.values.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some(v)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::input(format!("cannot parse {key}={v}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<T>().map_err(|_| Error::input(format!("cannot parse {key}={v}"))))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    pub fn list_or<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        Ok(self.list(key)?.unwrap_or(default))
    }

    /// Every supplied entry, in key order.
    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Errors on keys nobody read.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        let unused: Vec<&str> = self.values.keys().filter(|k| !used.contains(*k)).map(|k| k.as_str()).collect();
        if unused.is_empty() {
            Ok(())
        } else {
            Err(Error::input(format!("unknown parameter(s): {}", unused.join(", "))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typed_access_and_leftovers() {
        let p = Params::from_args(&["n=4", "p=0.5", "m=2,3,5", "typo=1"]).unwrap();
        assert_eq!(p.get_or("n", 0usize).unwrap(), 4);
        assert_eq!(p.get_or("p", 1.0).unwrap(), 0.5);
        assert_eq!(p.list_or::<u64>("m", vec![]).unwrap(), vec![2, 3, 5]);
        assert_eq!(p.get_or("theta", 0.75).unwrap(), 0.75);
        assert!(p.finish().unwrap_err().to_string().contains("typo"));
        assert!(Params::from_args(&["novalue"]).is_err());
        assert!(p.get::<usize>("p").is_err());
    }
}
