//! Python listings of the native operators.
//!
//! A source whose first non-blank line is `# builtin: <name>` runs natively
//! instead of through the host.

const MARKER: &str = "# builtin:";

pub const FALLBACK_SOURCE: &str = include_str!("../../assets/operators/fallback_tournament.py");

pub fn builtin_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "tournament3" => include_str!("../../assets/operators/tournament3.py"),
        "tournament7" => include_str!("../../assets/operators/tournament7.py"),
        "boltzmann" => include_str!("../../assets/operators/boltzmann.py"),
        "autolex" => include_str!("../../assets/operators/autolex.py"),
        "rds_tour" => include_str!("../../assets/operators/rds_tour.py"),
        "cps" => include_str!("../../assets/operators/cps.py"),
        "omni" => include_str!("../../assets/operators/omni.py"),
        "omni_r" => include_str!("../../assets/operators/omni_r.py"),
        "omni_zero" => include_str!("../../assets/operators/omni_zero.py"),
        "truncation" => include_str!("../../assets/operators/truncation.py"),
        _ => return None,
    })
}

/// The builtin named by a leading `# builtin:` line, if it names a known one.
pub fn builtin_marker(source: &str) -> Option<&str> {
    let first = source.lines().map(str::trim).find(|l| !l.is_empty())?;
    let name = first.strip_prefix(MARKER)?.trim();
    super::Builtin::from_name(name).map(|_| name)
}

/// Fallback listing tagged to run as its native equivalent.
pub fn tagged_fallback() -> String {
    format!("{MARKER} tournament3\n{FALLBACK_SOURCE}")
}
