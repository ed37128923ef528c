//! Bundle loading, canonical file serialization and report emission.
//!
//! A bundle is a directory:
//!
//! ```text
//! scenarios/*.toml   one scenario with its channel allocations per file
//! profiles.toml      UE profiles
//! sinr/*.csv         scenario,profile,channel,sinr_db
//! calibration.toml   antenna gains and noise figures per scenario
//! tables/*.csv       optional MCS tables, named by file stem
//! ```
//!
//! Every structured file starts with `schema = 1`. Loading reports all
//! problems found instead of stopping at the first one.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{Bottleneck, CoverageReport, Warning};
use crate::linkbudget::{CalibrationTargets, LinkBudgetLine};
use crate::model::{
    Channel, ChannelAllocation, Dataset, Direction, Occupancy, ProfileLabel, RadioCalibration, Scenario, ScenarioName,
    SinrRequirement, SinrTable, TbsSpec, UeProfile,
};
use crate::numerology::{Duplex, Numerology};
use crate::transport::{McsTable, McsTables, RateMode};
use crate::{Error, Result};

pub const SCHEMA_VERSION: i64 = 1;
pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const SINR_HEADER: [&str; 4] = ["scenario", "profile", "channel", "sinr_db"];

/// The default dataset shipped with this crate.
pub fn default_bundle_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/default")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: i64,
    pub name: ScenarioName,
    pub carrier_hz: f64,
    pub duplex: Duplex,
    pub carrier_bw_hz: f64,
    pub scs_khz: Numerology,
    pub gnb_power_dbm: f64,
    pub gnb_txru_count: u32,
    pub gnb_rx_chains: u32,
    pub ue_power_dbm: f64,
    #[serde(default, rename = "allocation")]
    pub allocations: Vec<AllocationRecord>,
}

/// File form of a [`ChannelAllocation`]; exactly one of `n_prb` and
/// `occupied_bw_hz` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationRecord {
    pub channel: Channel,
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_prb: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupied_bw_hz: Option<f64>,
    pub n_symbols: u32,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_rate_bps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profiles: Option<Vec<ProfileLabel>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tbs: Option<TbsSpec>,
}

impl AllocationRecord {
    pub fn to_allocation(&self) -> Result<ChannelAllocation> {
        let occupancy = match (self.n_prb, self.occupied_bw_hz) {
            (Some(n), None) => Occupancy::Prbs(n),
            (None, Some(hz)) => Occupancy::Hertz(hz),
            _ => {
                return Err(Error::Config(format!(
                    "{}: set exactly one of n_prb and occupied_bw_hz",
                    self.channel
                )))
            }
        };
        Ok(ChannelAllocation {
            channel: self.channel,
            direction: self.direction,
            occupancy,
            n_symbols: self.n_symbols,
            target: self.target.clone(),
            tbs: self.tbs.clone(),
            target_rate_bps: self.target_rate_bps,
            profiles: self.profiles.clone(),
        })
    }

    pub fn from_allocation(a: &ChannelAllocation) -> Self {
        let (n_prb, occupied_bw_hz) = match a.occupancy {
            Occupancy::Prbs(n) => (Some(n), None),
            Occupancy::Hertz(hz) => (None, Some(hz)),
        };
        Self {
            channel: a.channel,
            direction: a.direction,
            n_prb,
            occupied_bw_hz,
            n_symbols: a.n_symbols,
            target: a.target.clone(),
            target_rate_bps: a.target_rate_bps,
            profiles: a.profiles.clone(),
            tbs: a.tbs.clone(),
        }
    }
}

impl ScenarioFile {
    pub fn from_scenario(s: &Scenario, allocations: &[ChannelAllocation]) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            name: s.name,
            carrier_hz: s.carrier_hz,
            duplex: s.duplex.clone(),
            carrier_bw_hz: s.carrier_bw_hz,
            scs_khz: s.numerology,
            gnb_power_dbm: s.gnb_power_dbm,
            gnb_txru_count: s.gnb_txru_count,
            gnb_rx_chains: s.gnb_rx_chains,
            ue_power_dbm: s.ue_power_dbm,
            allocations: allocations.iter().map(AllocationRecord::from_allocation).collect(),
        }
    }

    /// Scenario with a zero radio calibration, plus its allocations.
    pub fn into_parts(self) -> Result<(Scenario, Vec<ChannelAllocation>)> {
        let allocations = self
            .allocations
            .iter()
            .map(AllocationRecord::to_allocation)
            .collect::<Result<Vec<_>>>()?;
        let scenario = Scenario {
            name: self.name,
            carrier_hz: self.carrier_hz,
            duplex: self.duplex,
            carrier_bw_hz: self.carrier_bw_hz,
            numerology: self.scs_khz,
            gnb_power_dbm: self.gnb_power_dbm,
            gnb_txru_count: self.gnb_txru_count,
            gnb_rx_chains: self.gnb_rx_chains,
            ue_power_dbm: self.ue_power_dbm,
            radio: RadioCalibration::default(),
        };
        Ok((scenario, allocations))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilesFile {
    pub schema: i64,
    #[serde(rename = "profile")]
    pub profiles: Vec<UeProfile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub name: ScenarioName,
    #[serde(flatten)]
    pub radio: RadioCalibration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationFile {
    pub schema: i64,
    #[serde(rename = "scenario")]
    pub scenarios: Vec<CalibrationEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetsFile {
    pub schema: i64,
    #[serde(flatten)]
    pub targets: CalibrationTargets,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn check_schema(text: &str) -> std::result::Result<(), String> {
    let value: toml::Table = text.parse().map_err(|e: toml::de::Error| e.message().to_owned())?;
    match value.get("schema") {
        None => Err("missing required field `schema`".into()),
        Some(toml::Value::Integer(SCHEMA_VERSION)) => Ok(()),
        Some(other) => Err(format!("unknown schema version {other} (supported: {SCHEMA_VERSION})")),
    }
}

/// Parses a schema-versioned TOML document.
pub fn parse_toml<T: serde::de::DeserializeOwned>(text: &str) -> std::result::Result<T, String> {
    check_schema(text)?;
    toml::from_str(text).map_err(|e| e.message().to_owned())
}

fn parse_toml_file<T: serde::de::DeserializeOwned>(path: &Path, problems: &mut Vec<String>) -> Option<T> {
    let text = match read(path) {
        Ok(t) => t,
        Err(e) => {
            problems.push(e.to_string());
            return None;
        }
    };
    match parse_toml(&text) {
        Ok(v) => Some(v),
        Err(e) => {
            problems.push(format!("{}: {e}", path.display()));
            None
        }
    }
}

/// Canonical TOML text of a file structure.
pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::Config(e.to_string()))
}

pub fn parse_sinr_csv(text: &str) -> std::result::Result<Vec<SinrRequirement>, Vec<String>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| vec![e.to_string()])?.clone();
    if header.iter().map(str::trim).ne(SINR_HEADER) {
        return Err(vec![format!(
            "header must be {}, found {}",
            SINR_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )]);
    }
    let mut rows = Vec::new();
    let mut problems = Vec::new();
    for record in reader.deserialize::<SinrRequirement>() {
        match record {
            Ok(r) => rows.push(r),
            Err(e) => problems.push(e.to_string()),
        }
    }
    if problems.is_empty() {
        Ok(rows)
    } else {
        Err(problems)
    }
}

pub fn sinr_to_csv<'a>(rows: impl IntoIterator<Item = &'a SinrRequirement>) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).map_err(|e| Error::Config(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}

fn sorted_files(dir: &Path, extension: &str, problems: &mut Vec<String>) -> Vec<PathBuf> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Vec::new(),
        Err(e) => {
            problems.push(format!("{}: {e}", dir.display()));
            return Vec::new();
        }
    };
    let mut out: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == extension))
        .collect();
    out.sort();
    out
}

/// Loads and cross-checks a bundle directory.
///
/// Parse-level problems (unreadable files, unknown schema versions, missing
/// fields, duplicate SINR triples, scenarios without calibration) are all
/// collected into one [`Error::Bundle`]. Semantic checks are left to
/// [`crate::model::validate_dataset`].
pub fn load_bundle(dir: &Path) -> Result<Dataset> {
    let mut problems = Vec::new();

    let mut scenarios = Vec::new();
    let mut allocations = BTreeMap::new();
    let mut scenario_files_failed = false;
    for path in sorted_files(&dir.join("scenarios"), "toml", &mut problems) {
        let Some(file) = parse_toml_file::<ScenarioFile>(&path, &mut problems) else {
            scenario_files_failed = true;
            continue;
        };
        match file.into_parts() {
            Ok((scenario, allocs)) => {
                if allocations.insert(scenario.name, allocs).is_some() {
                    problems.push(format!("{}: scenario {} defined twice", path.display(), scenario.name));
                } else {
                    scenarios.push(scenario);
                }
            }
            Err(e) => {
                scenario_files_failed = true;
                problems.push(format!("{}: {e}", path.display()));
            }
        }
    }
    if scenarios.is_empty() && problems.is_empty() {
        problems.push(format!("{}: no scenarios found", dir.display()));
    }

    let profiles = parse_toml_file::<ProfilesFile>(&dir.join("profiles.toml"), &mut problems)
        .map(|f| f.profiles)
        .unwrap_or_default();
    let mut seen = Vec::new();
    for p in &profiles {
        if seen.contains(&p.label) {
            problems.push(format!("profiles.toml: profile {} defined twice", p.label));
        }
        seen.push(p.label);
    }

    let mut sinr_rows = Vec::new();
    let sinr_files = sorted_files(&dir.join("sinr"), "csv", &mut problems);
    if sinr_files.is_empty() {
        problems.push(format!("{}: no SINR tables found", dir.join("sinr").display()));
    }
    for path in sinr_files {
        match read(&path) {
            Ok(text) => match parse_sinr_csv(&text) {
                Ok(rows) => sinr_rows.extend(rows),
                Err(errs) => problems.extend(errs.into_iter().map(|e| format!("{}: {e}", path.display()))),
            },
            Err(e) => problems.push(e.to_string()),
        }
    }
    let sinr = match SinrTable::from_requirements(sinr_rows) {
        Ok(t) => t,
        Err(Error::Bundle(dups)) => {
            problems.extend(dups);
            SinrTable::default()
        }
        Err(e) => {
            problems.push(e.to_string());
            SinrTable::default()
        }
    };

    if let Some(cal) = parse_toml_file::<CalibrationFile>(&dir.join("calibration.toml"), &mut problems) {
        let mut by_name = BTreeMap::new();
        for entry in cal.scenarios {
            if by_name.insert(entry.name, entry.radio).is_some() {
                problems.push(format!("calibration.toml: scenario {} calibrated twice", entry.name));
            }
        }
        for s in &mut scenarios {
            match by_name.remove(&s.name) {
                Some(radio) => s.radio = radio,
                None => problems.push(format!("calibration.toml: no entry for scenario {}", s.name)),
            }
        }
        // entries for scenarios whose file failed to parse are not orphans
        for name in by_name.keys().filter(|_| !scenario_files_failed) {
            problems.push(format!("calibration.toml: entry for unknown scenario {name}"));
        }
    }

    let mut mcs_tables = McsTables::builtin().clone();
    for path in sorted_files(&dir.join("tables"), "csv", &mut problems) {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_owned();
        match McsTable::load(&name, &path) {
            Ok(t) => mcs_tables.insert(t),
            Err(e) => problems.push(format!("{}: {e}", path.display())),
        }
    }

    if !problems.is_empty() {
        return Err(Error::Bundle(problems));
    }
    scenarios.sort_by_key(|s| s.name);
    Ok(Dataset {
        scenarios,
        profiles,
        allocations,
        sinr,
        mcs_tables,
    })
}

pub fn load_targets(path: &Path) -> Result<CalibrationTargets> {
    let text = read(path)?;
    parse_toml::<TargetsFile>(&text)
        .map(|f| f.targets)
        .map_err(|e| Error::Bundle(vec![format!("{}: {e}", path.display())]))
}

pub fn calibration_file(dataset: &Dataset) -> CalibrationFile {
    CalibrationFile {
        schema: SCHEMA_VERSION,
        scenarios: dataset
            .scenarios
            .iter()
            .map(|s| CalibrationEntry {
                name: s.name,
                radio: s.radio,
            })
            .collect(),
    }
}

/// Machine-readable evaluation output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub scenario: ScenarioName,
    pub generated_at: String,
    pub rate_mode: RateMode,
    pub report: CoverageReport,
}

impl ReportDocument {
    pub fn new(report: CoverageReport, rate_mode: RateMode, generated_at: impl Into<String>) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            scenario: report.scenario,
            generated_at: generated_at.into(),
            rate_mode,
            report,
        }
    }

    pub fn bottleneck(&self) -> &Bottleneck {
        &self.report.bottleneck
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.report.warnings
    }

    /// Every line of the report, reference first.
    pub fn lines(&self) -> impl Iterator<Item = &LinkBudgetLine> {
        self.report
            .reference_lines
            .iter()
            .chain(self.report.redcap_lines.iter().flat_map(|p| &p.lines))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Human,
    Json,
    Plot,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [Self::Human, Self::Json, Self::Plot];

    pub fn name(self) -> &'static str {
        match self {
            Self::Human => "human",
            Self::Json => "json",
            Self::Plot => "plot",
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "human" | "human-table" | "table" => Ok(Self::Human),
            "json" | "machine" | "machine-structured" => Ok(Self::Json),
            "plot" | "plot-data" | "csv" => Ok(Self::Plot),
            other => Err(Error::Config(format!(
                "unknown report format {other:?} (expected human, json or plot)"
            ))),
        }
    }
}

pub fn emit_report(doc: &ReportDocument, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Human => human_table(doc).into_bytes(),
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(doc).expect("report documents always serialize");
            out.push(b'\n');
            out
        }
        ReportFormat::Plot => plot_data(doc).into_bytes(),
    }
}

/// Parses a machine-structured report.
pub fn parse_report(bytes: &[u8]) -> Result<ReportDocument> {
    let doc: ReportDocument = serde_json::from_slice(bytes).map_err(|e| Error::Report(e.to_string()))?;
    if doc.schema_version != REPORT_SCHEMA_VERSION {
        return Err(Error::Report(format!(
            "unknown report schema version {} (supported: {REPORT_SCHEMA_VERSION})",
            doc.schema_version
        )));
    }
    Ok(doc)
}

fn human_table(doc: &ReportDocument) -> String {
    use std::fmt::Write;

    let r = &doc.report;
    let mut profiles = vec![(ProfileLabel::Reference, r.reference_lines.as_slice())];
    profiles.extend(r.redcap_lines.iter().map(|p| (p.profile, p.lines.as_slice())));

    let mut out = String::new();
    let _ = writeln!(out, "{} coverage ({} rate accounting)", doc.scenario, doc.rate_mode);
    let _ = writeln!(out, "generated at {}", doc.generated_at);
    let _ = writeln!(
        out,
        "threshold MIL {:.2} dB set by Reference {}",
        r.threshold_mil_db, r.bottleneck.channel
    );
    out.push('\n');

    let _ = write!(out, "{:<12} {:<3}", "channel", "dir");
    for (label, _) in &profiles {
        let _ = write!(out, " {:>20}", format!("{label} MIL/MCL"));
    }
    out.push('\n');
    for channel in Channel::ALL {
        let cells: Vec<_> = profiles
            .iter()
            .map(|(_, lines)| lines.iter().find(|l| l.channel == channel))
            .collect();
        if cells.iter().all(Option::is_none) {
            continue;
        }
        let _ = write!(out, "{:<12} {:<3}", channel.name(), channel.direction());
        for cell in cells {
            let text = match cell {
                Some(l) => format!("{:.2} / {:.2}", l.mil_db, l.mcl_db),
                None => "-".to_owned(),
            };
            let _ = write!(out, " {text:>20}");
        }
        out.push('\n');
    }
    out.push('\n');

    if r.recoveries.is_empty() {
        out.push_str("no coverage recovery needed\n");
    } else {
        out.push_str("coverage recovery needed:\n");
        let mut recoveries = r.recoveries.clone();
        recoveries.sort_by_key(|x| (x.profile, x.channel));
        for x in recoveries {
            let _ = writeln!(
                out,
                "  {:<10} {:<12} {:>6.2} dB",
                x.profile.name(),
                x.channel.name(),
                x.recovery_db
            );
        }
    }

    if !r.rate_checks.is_empty() {
        out.push_str("\nrates:\n");
        for c in &r.rate_checks {
            let _ = writeln!(
                out,
                "  {:<10} {:<6} TBS {:>6} bits  {:>9.2} Mbps (target {:.2} Mbps)",
                c.profile.name(),
                c.channel.name(),
                c.tbs_bits,
                c.achieved_bps / 1e6,
                c.target_bps / 1e6
            );
        }
    }

    if !r.warnings.is_empty() {
        out.push('\n');
        for w in &r.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
    }
    out
}

fn plot_data(doc: &ReportDocument) -> String {
    let r = &doc.report;
    let mut out = String::new();
    for w in &r.warnings {
        out.push_str(&format!("# warning: {w}\n"));
    }
    out.push_str(&format!(
        "# threshold_mil_db={} bottleneck={}\n",
        r.threshold_mil_db, r.bottleneck.channel
    ));
    let mut lines: Vec<_> = doc.lines().collect();
    lines.sort_by_key(|l| (l.profile, l.channel));
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["scenario", "profile", "channel", "direction", "mil_db", "mcl_db"])
        .expect("writing to memory");
    for l in lines {
        writer
            .write_record([
                l.scenario.name().to_owned(),
                l.profile.name().to_owned(),
                l.channel.name().to_owned(),
                l.direction.to_string(),
                l.mil_db.to_string(),
                l.mcl_db.to_string(),
            ])
            .expect("writing to memory");
    }
    let bytes = writer.into_inner().expect("writing to memory");
    out.push_str(&String::from_utf8(bytes).expect("CSV output is UTF-8"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_is_checked_first() {
        assert_eq!(
            parse_toml::<ProfilesFile>("schema = 2\nprofile = []\n").unwrap_err(),
            "unknown schema version 2 (supported: 1)"
        );
        assert_eq!(
            parse_toml::<ProfilesFile>("profile = []\n").unwrap_err(),
            "missing required field `schema`"
        );
        assert!(parse_toml::<ProfilesFile>("schema = 1\nprofile = []\n").is_ok());
    }

    #[test]
    fn sinr_csv_round_trip() {
        let text = "scenario,profile,channel,sinr_db\nRural,Reference,PUSCH,-2.4\nUrban,RedCap1Rx,SSB,-4.1\n";
        let rows = parse_sinr_csv(text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].required_sinr_db, -2.4);
        assert_eq!(sinr_to_csv(&rows).unwrap(), text);
    }

    #[test]
    fn sinr_csv_rejects_bad_header_and_rows() {
        assert!(parse_sinr_csv("a,b,c,d\n").is_err());
        let errs = parse_sinr_csv("scenario,profile,channel,sinr_db\nRural,Reference,PUSCH,x\nMars,Reference,SSB,1\n")
            .unwrap_err();
        assert_eq!(errs.len(), 2);
    }

    #[test]
    fn allocation_needs_one_occupancy() {
        let text = r#"
channel = "SSB"
direction = "DL"
n_symbols = 4
target = "BLER 10%"
"#;
        let rec: AllocationRecord = toml::from_str(text).unwrap();
        assert!(rec.to_allocation().is_err());
    }

    #[test]
    fn format_names() {
        for f in ReportFormat::ALL {
            assert_eq!(f.name().parse::<ReportFormat>().unwrap(), f);
        }
        assert!("pdf".parse::<ReportFormat>().is_err());
    }
}
