// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

/// An identifier. Cheap to clone; compared by content.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Self {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The name with any `#<digits>` freshness suffix removed.
    pub fn base(&self) -> &str {
        strip_suffix(&self.0)
    }
}

fn strip_suffix(s: &str) -> &str {
    match s.rfind('#') {
        Some(i) if i > 0 && s[i + 1..].chars().all(|c| c.is_ascii_digit()) && i + 1 < s.len() => &s[..i],
        _ => s,
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl From<String> for Name {
    fn from(s: String) -> Self {
        Name(Arc::from(s))
    }
}

/// Deterministic fresh-name supply. One counter is shared by all hints, so
/// `fresh("x"), fresh("x"), fresh("y")` yields `x#0, x#1, y#2`.
///
/// A supply is per pipeline; reset it (or make a new one) per compiled file
/// to get byte-stable output.
#[derive(Clone, Debug, Default)]
pub struct NameSupply {
    counter: u64,
    avoid: HashSet<Name>,
}

impl NameSupply {
    pub fn new() -> Self {
        Self::default()
    }

    /// Names that must never be produced, e.g. user identifiers that already
    /// carry a `#` suffix.
    pub fn avoid<I: IntoIterator<Item = Name>>(&mut self, names: I) {
        self.avoid.extend(names);
    }

    pub fn reset(&mut self) {
        self.counter = 0;
        self.avoid.clear();
    }

    pub fn fresh(&mut self, hint: &str) -> Name {
        let base = strip_suffix(hint);
        let base = if base.is_empty() { "t" } else { base };
        loop {
            let n = Name::from(format!("{}#{}", base, self.counter));
            self.counter += 1;
            if !self.avoid.contains(&n) {
                return n;
            }
        }
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }
}
