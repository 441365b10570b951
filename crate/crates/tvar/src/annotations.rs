//! Event annotations for plots, restricted to the sample's date range.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Event {
    pub label: String,
    /// `YYYY:MM`.
    pub start: String,
    pub end: Option<String>,
}

const BUNDLED: &[(&str, &str, Option<&str>)] = &[
    ("First oil crisis", "1973:10", None),
    ("Second oil crisis", "1979:01", None),
    ("Asset-price bubble", "1986:12", Some("1991:02")),
    ("Black Monday", "1987:10", None),
    ("Dot-com bubble", "1995:08", Some("2000:03")),
    ("Asian financial crisis", "1997:07", None),
    ("Financial Big Bang", "1998:04", Some("2002:03")),
    ("Lehman Brothers collapse", "2008:10", None),
];

pub fn bundled_events() -> Vec<Event> {
    BUNDLED
        .iter()
        .map(|(label, start, end)| Event {
            label: (*label).to_owned(),
            start: (*start).to_owned(),
            end: end.map(str::to_owned),
        })
        .collect()
}

/// Reads the leading year and month of a label such as `1987:10`,
/// `1987-10-30` or `1987/10`, normalised to `YYYY:MM`.
pub fn month_key(label: &str) -> Option<String> {
    let mut parts = label
        .split(|c: char| !c.is_ascii_digit())
        .filter(|p| !p.is_empty());
    let year = parts.next()?;
    let month: u32 = parts.next()?.parse().ok()?;
    if year.len() != 4 || !(1..=12).contains(&month) {
        return None;
    }
    Some(format!("{year}:{month:02}"))
}

/// Events overlapping `[first, last]`. Returns nothing when the labels are
/// not dates.
pub fn events_in_range(events: &[Event], first: &str, last: &str) -> Vec<Event> {
    let (Some(lo), Some(hi)) = (month_key(first), month_key(last)) else {
        return Vec::new();
    };
    events
        .iter()
        .filter(|e| {
            let end = e.end.as_deref().unwrap_or(&e.start);
            e.start.as_str() <= hi.as_str() && end >= lo.as_str()
        })
        .cloned()
        .collect()
}
