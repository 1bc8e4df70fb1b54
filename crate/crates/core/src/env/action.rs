use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::EnvError;
use crate::kg::normalize_name;

/// A command token: `verb` or `verb(arg)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action {
    pub verb: String,
    pub arg: Option<String>,
}

impl Action {
    pub fn new(verb: &str, arg: Option<&str>) -> Self {
        Action {
            verb: verb.to_string(),
            arg: arg.map(normalize_name),
        }
    }

    pub fn bare(verb: &str) -> Self {
        Self::new(verb, None)
    }

    pub fn with(verb: &str, arg: &str) -> Self {
        Self::new(verb, Some(arg))
    }

    pub fn arg(&self) -> &str {
        self.arg.as_deref().unwrap_or("")
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.arg {
            Some(a) => write!(f, "{}({})", self.verb, a),
            None => f.write_str(&self.verb),
        }
    }
}

impl FromStr for Action {
    type Err = EnvError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EnvError::BadAction(s.to_string());
        let t = s.trim();
        let (verb, arg) = match t.find('(') {
            Some(open) => {
                let inner = t[open + 1..].strip_suffix(')').ok_or_else(bad)?;
                let arg = normalize_name(inner);
                if arg.is_empty() || arg.contains(['(', ')']) {
                    return Err(bad());
                }
                (&t[..open], Some(arg))
            }
            None => (t, None),
        };
        let verb = verb.trim().to_ascii_lowercase().replace(' ', "_");
        if verb.is_empty() || !verb.chars().all(|c| c.is_ascii_lowercase() || c == '_') {
            return Err(bad());
        }
        Ok(Action { verb, arg })
    }
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let a: Action = "pick_up(Tomato)".parse().unwrap();
        assert_eq!(a, Action::with("pick_up", "tomato"));
        assert_eq!(a.to_string(), "pick_up(tomato)");
        let b: Action = " chop ".parse().unwrap();
        assert_eq!(b, Action::bare("chop"));
        let c: Action = "mine(iron  ore)".parse().unwrap();
        assert_eq!(c.to_string(), "mine(iron ore)");
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "mine(", "mine()", "mine(a(b))", "9x", "craft(x) y"] {
            assert!(bad.parse::<Action>().is_err(), "{bad}");
        }
    }
}
