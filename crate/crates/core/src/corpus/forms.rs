//! How each entity is written into metadata.

use crate::pii::EntityType;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Render {
    /// The pool value as-is.
    Bare,
    /// E-mail with `@` percent-encoded.
    PercentAt,
    /// `key=value`.
    Param(&'static str),
    /// A fixed string; pools are not consulted.
    Fixed(&'static str),
    /// Ten digits as `ddd-ddd-dddd`.
    PhoneDashed,
    PhoneParens,
    PhoneDotted,
    /// `+1` followed by the ten digits.
    PhoneCompact,
    /// Nine digits as `ddd-dd-dddd`.
    SsnDashed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurfaceForm {
    pub id: &'static str,
    pub entity: EntityType,
    render: Render,
    /// Only pool values starting with this prefix are used.
    value_prefix: &'static str,
}

impl SurfaceForm {
    const fn new(id: &'static str, entity: EntityType, render: Render, value_prefix: &'static str) -> Self {
        SurfaceForm { id, entity, render, value_prefix }
    }

    pub fn uses_pool(&self) -> bool {
        !matches!(self.render, Render::Fixed(_))
    }

    pub fn accepts(&self, value: &str) -> bool {
        value.starts_with(self.value_prefix)
    }

    /// A form rendered as `key=value` is placed in a URL query string.
    pub fn is_parameter(&self) -> bool {
        matches!(self.render, Render::Param(_))
    }

    pub fn render(&self, value: &str) -> String {
        match self.render {
            Render::Bare => value.to_string(),
            Render::PercentAt => value.replace('@', "%40"),
            Render::Param(key) => format!("{key}={value}"),
            Render::Fixed(text) => text.to_string(),
            Render::PhoneDashed => format!("{}-{}-{}", &value[..3], &value[3..6], &value[6..]),
            Render::PhoneParens => format!("({}) {}-{}", &value[..3], &value[3..6], &value[6..]),
            Render::PhoneDotted => format!("{}.{}.{}", &value[..3], &value[3..6], &value[6..]),
            Render::PhoneCompact => format!("+1{value}"),
            Render::SsnDashed => format!("{}-{}-{}", &value[..3], &value[3..5], &value[5..]),
        }
    }
}

use EntityType::*;

const FORMS: &[SurfaceForm] = &[
    SurfaceForm::new("bare", EmailAddress, Render::Bare, ""),
    SurfaceForm::new("url_encoded", EmailAddress, Render::PercentAt, ""),
    SurfaceForm::new("query_param", EmailAddress, Render::Param("email"), ""),
    SurfaceForm::new("full_john_smith", Person, Render::Fixed("John Smith"), ""),
    SurfaceForm::new("full_maria_garcia", Person, Render::Fixed("Maria Garcia"), ""),
    SurfaceForm::new("full_wei_chen", Person, Render::Fixed("Wei Chen"), ""),
    SurfaceForm::new("full_aisha_patel", Person, Render::Fixed("Aisha Patel"), ""),
    SurfaceForm::new("full_lars_eriksson", Person, Render::Fixed("Lars Eriksson"), ""),
    SurfaceForm::new("slug_john_smith", Person, Render::Fixed("john-smith"), ""),
    SurfaceForm::new("slug_maria_garcia", Person, Render::Fixed("maria-garcia"), ""),
    SurfaceForm::new("underscore_john_smith", Person, Render::Fixed("john_smith"), ""),
    SurfaceForm::new("abbreviated_j_smith", Person, Render::Fixed("J.Smith"), ""),
    SurfaceForm::new("last_first_garcia_maria", Person, Render::Fixed("Garcia,Maria"), ""),
    SurfaceForm::new("first_only_aisha", Person, Render::Fixed("Aisha"), ""),
    SurfaceForm::new("us_dashed", PhoneNumber, Render::PhoneDashed, ""),
    SurfaceForm::new("us_parenthesised", PhoneNumber, Render::PhoneParens, ""),
    SurfaceForm::new("us_dotted", PhoneNumber, Render::PhoneDotted, ""),
    SurfaceForm::new("compact_international", PhoneNumber, Render::PhoneCompact, ""),
    SurfaceForm::new("dashed", UsSsn, Render::SsnDashed, ""),
    SurfaceForm::new("compact", UsSsn, Render::Bare, ""),
    SurfaceForm::new("visa", CreditCard, Render::Bare, "4"),
    SurfaceForm::new("mastercard", CreditCard, Render::Bare, "5"),
    SurfaceForm::new("de", IbanCode, Render::Bare, "DE"),
    SurfaceForm::new("gb", IbanCode, Render::Bare, "GB"),
];

pub const COMPACT_PHONE_FORM: &str = "compact_international";

pub fn surface_forms(entity: EntityType) -> Vec<SurfaceForm> {
    FORMS.iter().copied().filter(|f| f.entity == entity).collect()
}

pub fn surface_form(entity: EntityType, id: &str) -> Option<SurfaceForm> {
    FORMS.iter().copied().find(|f| f.entity == entity && f.id == id)
}

/// Default value pools. Phone numbers are ten digits, SSNs nine digits.
pub fn default_pool(entity: EntityType) -> Vec<String> {
    let values: &[&str] = match entity {
        EmailAddress => &[
            "alice.martin@example.com",
            "j.smith@corp.io",
            "maria.garcia@mailbox.net",
            "wei.chen@example.org",
            "billing.ops@acme-health.com",
            "lars.e@nordicdata.eu",
        ],
        Person => &[],
        PhoneNumber => &["4155550182", "2125550147", "6465550199", "3105550123"],
        UsSsn => &["312456789", "219548832", "401235567", "528614410", "123456789"],
        CreditCard => &["4111111111111111", "4012888888881881", "5555555555554444", "5105105105105100"],
        IbanCode => {
            &["DE89370400440532013000", "DE44500105175407324931", "GB82WEST12345698765432", "GB29NWBK60161331926819"]
        }
    };
    values.iter().map(|v| v.to_string()).collect()
}
