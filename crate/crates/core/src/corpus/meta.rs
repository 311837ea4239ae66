use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary persona attribute under study. `A`/`B` stand for the two
/// nationalities of the persona design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Nationality {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Medium {
    Emi,
    Cmi,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Role {
    Postdoc,
    Student,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TemplateFamily {
    Base,
    Alt,
    Theory,
}

impl TemplateFamily {
    pub const ALL: [TemplateFamily; 3] = [TemplateFamily::Base, TemplateFamily::Alt, TemplateFamily::Theory];
}

impl fmt::Display for Nationality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Nationality::A => "A",
            Nationality::B => "B",
        })
    }
}

impl fmt::Display for Medium {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Medium::Emi => "EMI",
            Medium::Cmi => "CMI",
            Medium::None => "NONE",
        })
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Postdoc => "POSTDOC",
            Role::Student => "STUDENT",
        })
    }
}

impl fmt::Display for TemplateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TemplateFamily::Base => "BASE",
            TemplateFamily::Alt => "ALT",
            TemplateFamily::Theory => "THEORY",
        })
    }
}

/// Cohort label for a persona. Students carry no instructional medium, so
/// the design yields six cohorts: `{A,B}_{EMI,CMI}_POSTDOC` and `{A,B}_STUDENT`.
pub fn cohort_of(nationality: Nationality, medium: Medium, role: Role) -> String {
    match role {
        Role::Student => format!("{nationality}_STUDENT"),
        Role::Postdoc => format!("{nationality}_{medium}_POSTDOC"),
    }
}

/// One line of `meta.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleMeta {
    pub example_id: String,
    pub nationality: Nationality,
    pub medium: Medium,
    pub role: Role,
    pub cohort: String,
    pub template_family: TemplateFamily,
    pub template_id: String,
    pub text: String,
    pub n_generated_tokens: usize,
}

impl ExampleMeta {
    pub fn validate(&self) -> Result<()> {
        let bad = |detail: String| Error::InvalidMeta {
            example_id: self.example_id.clone(),
            detail,
        };
        if self.example_id.is_empty() {
            return Err(bad("empty example_id".into()));
        }
        if self.n_generated_tokens == 0 {
            return Err(bad("n_generated_tokens must be >= 1".into()));
        }
        if self.role == Role::Postdoc && self.medium == Medium::None {
            return Err(bad("postdoc persona requires an instructional medium".into()));
        }
        let expected = cohort_of(self.nationality, self.medium, self.role);
        if self.cohort != expected {
            return Err(bad(format!("cohort {:?} != derived {:?}", self.cohort, expected)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> ExampleMeta {
        ExampleMeta {
            example_id: "x1".into(),
            nationality: Nationality::B,
            medium: Medium::Cmi,
            role: Role::Postdoc,
            cohort: "B_CMI_POSTDOC".into(),
            template_family: TemplateFamily::Theory,
            template_id: "theory_03".into(),
            text: "some text".into(),
            n_generated_tokens: 3,
        }
    }

    #[test]
    fn six_cohorts() {
        let mut all = std::collections::BTreeSet::new();
        for n in [Nationality::A, Nationality::B] {
            for (m, r) in [(Medium::Emi, Role::Postdoc), (Medium::Cmi, Role::Postdoc), (Medium::None, Role::Student)] {
                all.insert(cohort_of(n, m, r));
            }
        }
        assert_eq!(all.len(), 6);
    }

    #[test]
    fn json_uses_upper_case_enums() {
        let line = serde_json::to_string(&meta()).unwrap();
        assert!(line.contains("\"medium\":\"CMI\""));
        assert!(line.contains("\"template_family\":\"THEORY\""));
        let back: ExampleMeta = serde_json::from_str(&line).unwrap();
        assert_eq!(back, meta());
    }

    #[test]
    fn validation() {
        assert!(meta().validate().is_ok());
        let mut m = meta();
        m.cohort = "A_STUDENT".into();
        assert!(m.validate().is_err());
        let mut m = meta();
        m.n_generated_tokens = 0;
        assert!(m.validate().is_err());
        let extra = r#"{"example_id":"x","nationality":"A","medium":"EMI","role":"POSTDOC","cohort":"A_EMI_POSTDOC","template_family":"BASE","template_id":"t","text":"","n_generated_tokens":1,"extra":1}"#;
        assert!(serde_json::from_str::<ExampleMeta>(extra).is_err());
    }
}
