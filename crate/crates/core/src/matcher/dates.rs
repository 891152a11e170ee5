//! Relative and absolute date expressions resolved against a reference day.
//!
//! `next <weekday>` means that weekday in the following Monday-based week;
//! a bare weekday is the first one strictly after the reference day; `this
//! <weekday>` is the first one on or after it.

use chrono::{Datelike, Days, NaiveDate, Weekday};

use crate::text;

const WEEKDAYS: &[(&str, Weekday)] = &[
    ("monday", Weekday::Mon),
    ("tuesday", Weekday::Tue),
    ("tues", Weekday::Tue),
    ("wednesday", Weekday::Wed),
    ("weds", Weekday::Wed),
    ("thursday", Weekday::Thu),
    ("thurs", Weekday::Thu),
    ("friday", Weekday::Fri),
    ("saturday", Weekday::Sat),
    ("sunday", Weekday::Sun),
];

const MONTHS: &[(&str, u32)] = &[
    ("january", 1),
    ("jan", 1),
    ("february", 2),
    ("feb", 2),
    ("march", 3),
    ("mar", 3),
    ("april", 4),
    ("apr", 4),
    ("may", 5),
    ("june", 6),
    ("jun", 6),
    ("july", 7),
    ("jul", 7),
    ("august", 8),
    ("aug", 8),
    ("september", 9),
    ("sept", 9),
    ("sep", 9),
    ("october", 10),
    ("oct", 10),
    ("november", 11),
    ("nov", 11),
    ("december", 12),
    ("dec", 12),
];

fn weekday(token: &str) -> Option<Weekday> {
    WEEKDAYS.iter().find(|(n, _)| *n == token).map(|(_, w)| *w)
}

fn month(token: &str) -> Option<u32> {
    MONTHS.iter().find(|(n, _)| *n == token).map(|(_, m)| *m)
}

fn day_of_month(token: &str) -> Option<u32> {
    let digits = token
        .strip_suffix("st")
        .or_else(|| token.strip_suffix("nd"))
        .or_else(|| token.strip_suffix("rd"))
        .or_else(|| token.strip_suffix("th"))
        .unwrap_or(token);
    let d: u32 = digits.parse().ok()?;
    (1..=31).contains(&d).then_some(d)
}

fn add_days(day: NaiveDate, n: u64) -> NaiveDate {
    day.checked_add_days(Days::new(n)).unwrap_or(day)
}

fn days_until(from: Weekday, to: Weekday) -> u64 {
    ((to.num_days_from_monday() + 7 - from.num_days_from_monday()) % 7) as u64
}

/// Calendar date for `month`/`day` on or after `reference`.
fn upcoming(reference: NaiveDate, month: u32, day: u32) -> Option<NaiveDate> {
    let this_year = NaiveDate::from_ymd_opt(reference.year(), month, day);
    match this_year {
        Some(d) if d >= reference => Some(d),
        _ => NaiveDate::from_ymd_opt(reference.year() + 1, month, day),
    }
}

fn resolve_at(tokens: &[String], reference: NaiveDate) -> Option<NaiveDate> {
    let t = |k: usize| tokens.get(k).map(String::as_str);
    let today = reference.weekday();
    match t(0)? {
        "today" | "tonight" => return Some(reference),
        "tomorrow" => return Some(add_days(reference, 1)),
        "day" if t(1) == Some("after") && t(2) == Some("tomorrow") => {
            return Some(add_days(reference, 2))
        }
        "next" => {
            if let Some(w) = t(1).and_then(weekday) {
                let next_monday = add_days(reference, 7 - today.num_days_from_monday() as u64);
                return Some(add_days(next_monday, w.num_days_from_monday() as u64));
            }
        }
        "this" => {
            if let Some(w) = t(1).and_then(weekday) {
                return Some(add_days(reference, days_until(today, w)));
            }
        }
        tok => {
            if let Some(w) = weekday(tok) {
                let n = match days_until(today, w) {
                    0 => 7,
                    n => n,
                };
                return Some(add_days(reference, n));
            }
            if let Ok(d) = NaiveDate::parse_from_str(tok, "%Y-%m-%d") {
                return Some(d);
            }
            if let Some(m) = month(tok) {
                if let Some(d) = t(1).and_then(day_of_month) {
                    return upcoming(reference, m, d);
                }
            }
            if let Some(d) = day_of_month(tok) {
                let m = match (t(1), t(2)) {
                    (Some("of"), Some(m)) => month(m),
                    (Some(m), _) => month(m),
                    _ => None,
                };
                if let Some(m) = m {
                    return upcoming(reference, m, d);
                }
            }
        }
    }
    None
}

/// Leftmost date expression in `surface`, resolved against `reference`.
pub fn resolve_date(surface: &str, reference: NaiveDate) -> Option<NaiveDate> {
    let tokens = text::token_texts(surface);
    (0..tokens.len()).find_map(|i| resolve_at(&tokens[i..], reference))
}

/// Canonical `YYYY-MM-DD` form, as stored in slot values.
pub fn canonical_date(surface: &str, reference: NaiveDate) -> Option<String> {
    resolve_date(surface, reference).map(|d| d.format("%Y-%m-%d").to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    // 2024-01-01 is a Monday.
    const REF: (i32, u32, u32) = (2024, 1, 1);

    fn r(s: &str) -> Option<String> {
        canonical_date(s, day(REF.0, REF.1, REF.2))
    }

    #[test]
    fn weekday_forms() {
        assert_eq!(r("next Tuesday").as_deref(), Some("2024-01-09"));
        assert_eq!(r("on tuesday").as_deref(), Some("2024-01-02"));
        assert_eq!(r("this tuesday").as_deref(), Some("2024-01-02"));
        assert_eq!(r("monday").as_deref(), Some("2024-01-08"));
        assert_eq!(r("this monday").as_deref(), Some("2024-01-01"));
        assert_eq!(r("next sunday").as_deref(), Some("2024-01-14"));
    }

    #[test]
    fn relative_days() {
        assert_eq!(r("today").as_deref(), Some("2024-01-01"));
        assert_eq!(r("tomorrow please").as_deref(), Some("2024-01-02"));
        assert_eq!(r("the day after tomorrow").as_deref(), Some("2024-01-03"));
    }

    #[test]
    fn calendar_dates() {
        assert_eq!(r("2024-03-15").as_deref(), Some("2024-03-15"));
        assert_eq!(r("march 3rd").as_deref(), Some("2024-03-03"));
        assert_eq!(r("the 5th of may").as_deref(), Some("2024-05-05"));
        assert_eq!(r("22 feb").as_deref(), Some("2024-02-22"));
        assert_eq!(
            canonical_date("jan 1", day(2024, 6, 1)).as_deref(),
            Some("2025-01-01")
        );
        assert_eq!(r("february 30"), None);
    }

    #[test]
    fn leftmost_expression_wins_and_misses_are_none() {
        assert_eq!(r("fly to London next Tuesday").as_deref(), Some("2024-01-09"));
        assert_eq!(r("tomorrow or friday").as_deref(), Some("2024-01-02"));
        assert_eq!(r("cheese burger"), None);
        assert_eq!(r(""), None);
    }
}
