use std::collections::BTreeMap;
use std::str::FromStr;

use super::ModelError;

/// Key-value model description: one `key = value` pair per line, `#` comments.
///
/// ```text
/// geometry = disk
/// radius = 10
/// degree = 3
/// refinements = 4
/// E = 1000
/// nu = 0.25
/// theta = -1
/// gamma = free
/// ```
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelDescription {
    entries: BTreeMap<String, String>,
}

impl ModelDescription {
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ModelError::Description {
                line: n + 1,
                msg: "expected `key = value`".into(),
            })?;
            let key = k.trim();
            if key.is_empty() {
                return Err(ModelError::Description { line: n + 1, msg: "empty key".into() });
            }
            if entries.insert(key.to_string(), v.trim().to_string()).is_some() {
                return Err(ModelError::Description { line: n + 1, msg: format!("duplicate key `{key}`") });
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    /// Typed lookup; `Ok(None)` when absent.
    pub fn parse_value<T: FromStr>(&self, key: &str) -> Result<Option<T>, ModelError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|_| ModelError::Description {
                line: 0,
                msg: format!("cannot parse `{v}` for key `{key}`"),
            }),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_lookup() {
        let d = ModelDescription::parse("# model\ngeometry = disk\nE = 1000 # modulus\n\ndegree=3\n").unwrap();
        assert_eq!(d.get("geometry"), Some("disk"));
        assert_eq!(d.parse_value::<f64>("E").unwrap(), Some(1000.0));
        assert_eq!(d.parse_value::<usize>("degree").unwrap(), Some(3));
        assert_eq!(d.parse_value::<usize>("missing").unwrap(), None);
        assert!(d.parse_value::<usize>("geometry").is_err());
        assert_eq!(ModelDescription::parse(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match ModelDescription::parse("a = 1\nbogus\n") {
            Err(ModelError::Description { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(ModelDescription::parse("a = 1\na = 2\n").is_err());
    }
}
