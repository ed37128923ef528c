use redcap_core::analysis::{evaluate_scenario, Warning};
use redcap_core::io::{default_bundle_dir, emit_report, load_bundle, parse_report, ReportDocument, ReportFormat};
use redcap_core::model::{Channel, Dataset, ProfileLabel, ScenarioName};
use redcap_core::transport::RateMode;

const STAMP: &str = "2000-01-01T00:00:00Z";

fn shipped() -> Dataset {
    load_bundle(&default_bundle_dir()).unwrap()
}

fn document(d: &Dataset, scenario: ScenarioName) -> ReportDocument {
    let report = evaluate_scenario(d, scenario, &[], RateMode::PerSlot).unwrap();
    ReportDocument::new(report, RateMode::PerSlot, STAMP)
}

fn text(doc: &ReportDocument, format: ReportFormat) -> String {
    String::from_utf8(emit_report(doc, format)).unwrap()
}

#[test]
fn machine_report_round_trips() {
    let d = shipped();
    for s in ScenarioName::ALL {
        let doc = document(&d, *s);
        let bytes = emit_report(&doc, ReportFormat::Json);
        let back = parse_report(&bytes).unwrap();
        assert_eq!(back, doc);
        // bit-exact floats, not merely equal after rounding
        for (a, b) in back.lines().zip(doc.lines()) {
            assert_eq!(a.mil_db.to_bits(), b.mil_db.to_bits());
        }
        assert_eq!(emit_report(&back, ReportFormat::Json), bytes);
    }
}

#[test]
fn unknown_report_schema_is_rejected() {
    let doc = document(&shipped(), ScenarioName::Rural);
    let json = text(&doc, ReportFormat::Json).replacen("\"schema_version\": 1", "\"schema_version\": 9", 1);
    assert!(parse_report(json.as_bytes()).is_err());
}

#[test]
fn plot_rows_cover_every_profile_and_channel() {
    let doc = document(&shipped(), ScenarioName::Rural);
    let out = text(&doc, ReportFormat::Plot);
    let rows: Vec<_> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "scenario,profile,channel,direction,mil_db,mcl_db");
    assert_eq!(rows.len(), 1 + 2 * Channel::ALL.len());
    for (i, channel) in Channel::ALL.iter().enumerate() {
        let cells: Vec<_> = rows[1 + i].split(',').collect();
        assert_eq!(
            cells[..4],
            ["Rural", "Reference", channel.name(), &channel.direction().to_string()]
        );
        let mil: f64 = cells[4].parse().unwrap();
        let line = doc
            .report
            .reference_lines
            .iter()
            .find(|l| l.channel == *channel)
            .unwrap();
        assert_eq!(mil, line.mil_db);
    }
    assert!(rows[1 + Channel::ALL.len()].starts_with("Rural,RedCap1Rx,SSB,DL,"));
}

#[test]
fn human_table_lists_channels_in_canonical_order() {
    let out = text(&document(&shipped(), ScenarioName::Indoor), ReportFormat::Human);
    let positions: Vec<_> = Channel::ALL
        .iter()
        .map(|c| {
            out.find(&format!("\n{:<12} ", c.name()))
                .unwrap_or_else(|| panic!("{c} missing"))
        })
        .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
    assert!(out.contains("threshold MIL 127.70 dB set by Reference PUSCH"));
    let words: Vec<Vec<&str>> = out.lines().map(|l| l.split_whitespace().collect()).collect();
    assert!(words.contains(&vec!["RedCap1Rx", "PDSCH", "3.50", "dB"]), "{out}");
    assert!(words.contains(&vec!["RedCap1Rx", "Msg4", "0.40", "dB"]), "{out}");
}

#[test]
fn no_recovery_message() {
    let mut d = shipped();
    // an FR2 RedCap UE with reference SINR everywhere loses nothing
    for row in d.sinr.clone().iter() {
        if row.scenario == ScenarioName::Indoor && row.profile == ProfileLabel::Reference {
            d.sinr.set(
                ScenarioName::Indoor,
                ProfileLabel::RedCap1Rx,
                row.channel,
                row.required_sinr_db,
            );
        }
    }
    let doc = document(&d, ScenarioName::Indoor);
    assert!(doc.report.recoveries.is_empty());
    assert!(text(&doc, ReportFormat::Human).contains("no coverage recovery needed"));
}

#[test]
fn warnings_reach_every_format() {
    let doc = document(&shipped(), ScenarioName::Urban);
    assert_eq!(doc.warnings().len(), 2);
    assert!(doc.warnings().iter().all(|w| matches!(
        w,
        Warning::RateShortfall {
            channel: Channel::Pdsch,
            tbs_bits: 1480,
            ..
        }
    )));
    for format in ReportFormat::ALL {
        let out = text(&doc, format);
        for w in doc.warnings() {
            let needle = match format {
                ReportFormat::Json => "\"kind\": \"rate_shortfall\"".to_owned(),
                _ => w.to_string(),
            };
            assert!(out.contains(&needle), "{format}: {needle}");
        }
    }
}

#[test]
fn profile_selection() {
    let d = shipped();
    let report = evaluate_scenario(&d, ScenarioName::Urban, &[ProfileLabel::RedCap2Rx], RateMode::PerSlot).unwrap();
    assert_eq!(report.redcap_lines.len(), 1);
    assert_eq!(report.redcap_lines[0].profile, ProfileLabel::RedCap2Rx);
    assert!(evaluate_scenario(&d, ScenarioName::Urban, &[ProfileLabel::Reference], RateMode::PerSlot).is_err());
}

#[test]
fn duty_scaled_rates_are_lower_on_tdd() {
    let d = shipped();
    let per_slot = evaluate_scenario(&d, ScenarioName::Indoor, &[], RateMode::PerSlot).unwrap();
    let scaled = evaluate_scenario(&d, ScenarioName::Indoor, &[], RateMode::DutyScaled).unwrap();
    for (a, b) in per_slot.rate_checks.iter().zip(&scaled.rate_checks) {
        assert_eq!(a.tbs_bits, b.tbs_bits);
        assert!(b.achieved_bps < a.achieved_bps);
    }
    // recoveries do not depend on rate accounting
    assert_eq!(per_slot.recoveries, scaled.recoveries);
}
