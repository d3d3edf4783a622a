//! End-to-end tests of the `hintscan` binary: every subcommand, the exit
//! code contract, format switches, config layering, and the full
//! discover → scan → analyze → report pipeline against a local testbed.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hintscan_core::{read_records_from_path, PageKind, Scenario, Testbed};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_hintscan");

fn hintscan(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("HINTSCAN_ALPHA")
        .env_remove("HINTSCAN_PROFILE")
        .env_remove("HINTSCAN_RUN_ID")
        .env_remove("HINTSCAN_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        out.status,
        stderr_of(out)
    );
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process not killed by signal")
}

// ---------------------------------------------------------------- emulate

#[test]
fn emulate_chrome_without_grants_sends_three_low_entropy_headers() {
    let out = hintscan(&["--format", "jsonl", "emulate", "chrome-116-desktop", ""]);
    assert_success(&out);
    let headers: Vec<String> = stdout_of(&out)
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).expect("jsonl line parses");
            v["header"].as_str().expect("header field").to_string()
        })
        .collect();
    assert_eq!(
        headers,
        ["Sec-CH-UA", "Sec-CH-UA-Mobile", "Sec-CH-UA-Platform"]
    );
}

#[test]
fn emulate_chrome_granted_rtt_adds_exactly_that_header() {
    let out = hintscan(&["--format", "jsonl", "emulate", "chrome-116-desktop", "rtt"]);
    assert_success(&out);
    let headers: Vec<String> = stdout_of(&out)
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            v["header"].as_str().unwrap().to_string()
        })
        .collect();
    assert_eq!(
        headers,
        ["RTT", "Sec-CH-UA", "Sec-CH-UA-Mobile", "Sec-CH-UA-Platform"]
    );
}

#[test]
fn emulate_firefox_emits_no_hints_under_any_accept_ch() {
    let out = hintscan(&["--format", "jsonl", "emulate", "firefox-desktop", "sec-ch-ua"]);
    assert_success(&out);
    assert_eq!(stdout_of(&out), "", "no hint support means no headers");
}

#[test]
fn emulate_unknown_profile_exits_2_and_lists_available() {
    let out = hintscan(&["emulate", "nosuch-browser", ""]);
    assert_eq!(exit_code(&out), 2);
    let err = stderr_of(&out);
    assert!(err.contains("unknown profile"), "stderr: {err}");
    assert!(err.contains("chrome-116-desktop"), "stderr lists profiles: {err}");
    assert!(err.contains("safari-604-ios"), "stderr lists profiles: {err}");
}

#[test]
fn emulate_unrecognized_token_is_reported_but_ignored() {
    let out = hintscan(&["--format", "csv", "emulate", "chrome-116-desktop", "bogus-hint"]);
    assert_success(&out);
    assert!(stderr_of(&out).contains("bogus-hint"));
    // Only the low-entropy defaults: bogus grants grant nothing.
    assert_eq!(stdout_of(&out).lines().count(), 1 + 3);
}

// --------------------------------------------------------------- discover

#[test]
fn discover_missing_input_exits_2_without_partial_output() {
    let dir = TempDir::new().unwrap();
    let output = dir.path().join("logins.csv");
    let out = hintscan(&[
        "discover",
        "--input",
        dir.path().join("absent.csv").to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(!output.exists(), "failed run must not leave output behind");
}

#[test]
fn discover_empty_input_writes_empty_output_and_exits_0() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("domains.csv");
    std::fs::write(&input, "# only comments\n\n").unwrap();
    let output = dir.path().join("logins.csv");
    let out = hintscan(&[
        "discover",
        "--input",
        input.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
    ]);
    assert_success(&out);
    assert_eq!(std::fs::read_to_string(&output).unwrap(), "");
}

#[test]
fn discover_rejects_malformed_rank_with_line_number() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("domains.csv");
    std::fs::write(&input, "1,good.test\noops,bad.test\n").unwrap();
    let out = hintscan(&[
        "discover",
        "--input",
        input.to_str().unwrap(),
        "--output",
        dir.path().join("logins.csv").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("line 2"), "{}", stderr_of(&out));
}

// ---------------------------------------------------------------- scan

#[test]
fn scan_rate_limit_above_default_requires_permission_flag() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("targets.csv");
    std::fs::write(&input, "1,example.test\n").unwrap();
    let out = hintscan(&[
        "scan",
        "--input",
        input.to_str().unwrap(),
        "--output",
        dir.path().join("records.jsonl").to_str().unwrap(),
        "--rate-limit",
        "10000000",
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("--i-have-permission"));
}

// ---------------------------------------------------------------- analyze

#[test]
fn analyze_no_records_produces_an_empty_but_valid_report() {
    let dir = TempDir::new().unwrap();
    let records = dir.path().join("records.jsonl");
    std::fs::write(&records, "").unwrap();
    let report_dir = dir.path().join("report");
    let out = hintscan(&[
        "analyze",
        "--records",
        records.to_str().unwrap(),
        "--out",
        report_dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    for file in [
        "frequency.csv",
        "adoption_by_rank.csv",
        "page_kind_diff.csv",
        "report_manifest.json",
        "analysis.json",
        "analyze_manifest.json",
    ] {
        assert!(report_dir.join(file).is_file(), "{file} missing");
    }
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(report_dir.join("report_manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["sites"], 0);
}

#[test]
fn analyze_schema_mismatch_is_a_hard_error() {
    let dir = TempDir::new().unwrap();
    let records = dir.path().join("records.jsonl");
    std::fs::write(
        &records,
        r#"{"schema":999,"run_id":"x","target_domain":"a.test","url":"https://a.test/","page_kind":"start","vantage":{"region":"r","isp":"i"},"timestamp":"2023-09-01T00:00:00Z","status":{"http":200}}"#,
    )
    .unwrap();
    let out = hintscan(&[
        "analyze",
        "--records",
        records.to_str().unwrap(),
        "--out",
        dir.path().join("report").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1, "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("schema"), "{}", stderr_of(&out));
}

#[test]
fn analyze_rejects_alpha_outside_unit_interval() {
    let dir = TempDir::new().unwrap();
    let records = dir.path().join("records.jsonl");
    std::fs::write(&records, "").unwrap();
    let out = hintscan(&[
        "analyze",
        "--records",
        records.to_str().unwrap(),
        "--out",
        dir.path().join("report").to_str().unwrap(),
        "--alpha",
        "1.5",
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("alpha"));
}

// ----------------------------------------------------- config precedence

#[test]
fn run_id_precedence_is_flag_over_env_over_config_file() {
    let dir = TempDir::new().unwrap();
    let records = dir.path().join("records.jsonl");
    std::fs::write(&records, "").unwrap();
    let config = dir.path().join("hintscan.toml");
    std::fs::write(&config, "run_id = \"from-file\"\n").unwrap();

    let run = |extra: &[&str], env: Option<(&str, &str)>| -> String {
        let out_dir = TempDir::new().unwrap();
        let mut cmd = Command::new(BIN);
        cmd.args([
            "--config",
            config.to_str().unwrap(),
            "analyze",
            "--records",
            records.to_str().unwrap(),
            "--out",
            out_dir.path().join("report").to_str().unwrap(),
        ])
        .args(extra)
        .env_remove("HINTSCAN_RUN_ID");
        if let Some((k, v)) = env {
            cmd.env(k, v);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let manifest: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(out_dir.path().join("report/report_manifest.json"))
                .unwrap(),
        )
        .unwrap();
        manifest["run_id"].as_str().unwrap().to_string()
    };

    assert_eq!(run(&[], None), "from-file");
    assert_eq!(run(&[], Some(("HINTSCAN_RUN_ID", "from-env"))), "from-env");
    assert_eq!(
        run(&["--run-id", "from-flag"], Some(("HINTSCAN_RUN_ID", "from-env"))),
        "from-flag"
    );
}

#[test]
fn config_file_with_invalid_alpha_exits_2() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("hintscan.toml");
    std::fs::write(&config, "alpha = 2.5\n").unwrap();
    let out = hintscan(&[
        "--config",
        config.to_str().unwrap(),
        "emulate",
        "chrome-116-desktop",
        "",
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("alpha"));
}

#[test]
fn config_file_referencing_missing_resource_exits_2() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("hintscan.toml");
    std::fs::write(&config, "registry = \"/nonexistent/registry.csv\"\n").unwrap();
    let out = hintscan(&[
        "--config",
        config.to_str().unwrap(),
        "emulate",
        "chrome-116-desktop",
        "",
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("registry"));
}

// ------------------------------------------------------------- pipeline

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/scenarios")
        .join(name)
}

/// A running baseline-scenario testbed plus the flag plumbing every
/// subprocess needs to reach it.
struct LiveTestbed {
    #[allow(dead_code)]
    runtime: tokio::runtime::Runtime,
    testbed: Testbed,
}

impl LiveTestbed {
    fn start(scenario_file: &str) -> LiveTestbed {
        let scenario = Scenario::from_path(&scenario_path(scenario_file)).expect("scenario loads");
        let runtime = tokio::runtime::Runtime::new().unwrap();
        let testbed = runtime
            .block_on(Testbed::start(scenario))
            .expect("testbed starts");
        LiveTestbed { runtime, testbed }
    }

    fn port(&self) -> u16 {
        self.testbed.addr().port()
    }

    /// `--resolve host=127.0.0.1:port` for every scenario host.
    fn resolve_flags(&self) -> Vec<String> {
        self.testbed
            .resolve_overrides()
            .into_iter()
            .flat_map(|(host, addr)| ["--resolve".to_string(), format!("{host}={addr}")])
            .collect()
    }

    /// Input lines routing the scenario's target hosts at the testbed port.
    fn domains_csv(&self) -> String {
        self.testbed
            .scenario()
            .target_hosts()
            .iter()
            .enumerate()
            .map(|(i, host)| format!("{},{host},http://{host}:{}/\n", i + 1, self.port()))
            .collect()
    }
}

#[test]
fn pipeline_discover_scan_analyze_report_against_testbed() {
    let live = LiveTestbed::start("baseline.json");
    let dir = TempDir::new().unwrap();
    let resolve = live.resolve_flags();
    let resolve: Vec<&str> = resolve.iter().map(String::as_str).collect();

    // discover: anchors on alpha/beta, path probe on gamma, nothing on
    // delta.
    let domains = dir.path().join("domains.csv");
    std::fs::write(&domains, live.domains_csv()).unwrap();
    let logins = dir.path().join("logins.csv");
    let mut args = vec![
        "discover",
        "--input",
        domains.to_str().unwrap(),
        "--output",
        logins.to_str().unwrap(),
        "--allow-http",
    ];
    args.extend(&resolve);
    let out = hintscan(&args);
    assert_success(&out);

    let login_lines = std::fs::read_to_string(&logins).unwrap();
    let lines: Vec<&str> = login_lines.lines().collect();
    assert_eq!(lines.len(), 4, "one output line per input domain:\n{login_lines}");
    // Hosts arrive in scenario order: alpha, beta, delta, gamma.
    assert!(lines[0].starts_with("1,alpha.test,"));
    assert!(lines[0].contains("/account/login"), "{}", lines[0]);
    assert!(lines[1].contains("/signin"), "{}", lines[1]);
    assert!(lines[2].ends_with(','), "delta has no login page: {}", lines[2]);
    assert!(lines[3].contains("/login"), "{}", lines[3]);

    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("logins.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["domains"], 4);
    assert_eq!(manifest["discovered"], 3);
    assert_eq!(manifest["failed"], 0);

    // scan: same-seed runs must be byte-identical once timestamps are
    // pinned.
    let records_path = dir.path().join("records.jsonl");
    let records_path_2 = dir.path().join("records2.jsonl");
    for path in [&records_path, &records_path_2] {
        let mut args = vec![
            "--seed",
            "7",
            "scan",
            "--input",
            logins.to_str().unwrap(),
            "--output",
            path.to_str().unwrap(),
            "--allow-http",
            "--run-id",
            "cli-pipeline",
            "--fixed-timestamp",
            "2023-09-15T00:00:00Z",
            "--concurrency",
            "3",
        ];
        args.extend(&resolve);
        let out = hintscan(&args);
        assert_success(&out);
    }
    assert_eq!(
        std::fs::read(&records_path).unwrap(),
        std::fs::read(&records_path_2).unwrap(),
        "equal seeds and pinned timestamps must reproduce records byte for byte"
    );

    let records = read_records_from_path(&records_path).unwrap();
    assert_eq!(records.len(), 7, "4 start pages + 3 login pages");
    let alpha_start = records
        .iter()
        .find(|r| r.target_domain == "alpha.test" && r.page_kind == PageKind::Start)
        .expect("alpha start record");
    let alpha_hints: BTreeSet<&str> = alpha_start
        .accept_ch
        .as_ref()
        .expect("alpha start sends Accept-CH")
        .recognized
        .iter()
        .map(String::as_str)
        .collect();
    assert_eq!(alpha_hints, BTreeSet::from(["RTT", "Sec-CH-UA"]));
    assert!(
        alpha_start.third_parties.iter().any(|tp| tp.domain == "tracker.test"),
        "alpha embeds the tracker"
    );

    let scan_manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("records.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(scan_manifest["targets_input"], 7);
    assert_eq!(scan_manifest["targets_crawled"], 7);
    assert_eq!(scan_manifest["order_seed"], 7);
    assert_eq!(scan_manifest["ethics_mode"], true);

    // --no-third-parties strips subresource fetches.
    let bare_path = dir.path().join("records-bare.jsonl");
    let mut args = vec![
        "scan",
        "--input",
        logins.to_str().unwrap(),
        "--output",
        bare_path.to_str().unwrap(),
        "--allow-http",
        "--no-third-parties",
    ];
    args.extend(&resolve);
    assert_success(&hintscan(&args));
    let bare = read_records_from_path(&bare_path).unwrap();
    assert!(bare.iter().all(|r| r.third_parties.is_empty()));

    // analyze: deterministic report, expectations from the scenario.
    let ranks = dir.path().join("ranks.csv");
    std::fs::write(&ranks, "1,alpha.test\n2,beta.test\n3,gamma.test\n4,delta.test\n").unwrap();
    let filters = dir.path().join("filters.txt");
    std::fs::write(&filters, "||tracker.test^\n@@||cdn.test^\n").unwrap();
    let config = dir.path().join("hintscan.toml");
    std::fs::write(
        &config,
        format!("filters = {:?}\n", filters.to_str().unwrap()),
    )
    .unwrap();
    let report_a = dir.path().join("report-a");
    let report_b = dir.path().join("report-b");
    for report_dir in [&report_a, &report_b] {
        let out = hintscan(&[
            "--config",
            config.to_str().unwrap(),
            "analyze",
            "--records",
            records_path.to_str().unwrap(),
            "--ranks",
            ranks.to_str().unwrap(),
            "--out",
            report_dir.to_str().unwrap(),
        ]);
        assert_success(&out);
    }
    for file in ["frequency.csv", "adoption_by_rank.csv", "graph_nodes.csv"] {
        assert_eq!(
            std::fs::read(report_a.join(file)).unwrap(),
            std::fs::read(report_b.join(file)).unwrap(),
            "{file} must be deterministic"
        );
    }

    let adoption = std::fs::read_to_string(report_a.join("adoption_by_rank.csv")).unwrap();
    let all_row = adoption
        .lines()
        .find(|l| l.starts_with("all,"))
        .expect("all bucket present");
    assert!(
        all_row.contains(",75.0000,") && all_row.ends_with(",25.0000"),
        "first-party 75% and third-party 25% of 4 sites: {all_row}"
    );
    let nodes = std::fs::read_to_string(report_a.join("graph_nodes.csv")).unwrap();
    let tracker_row = nodes
        .lines()
        .find(|l| l.starts_with("tracker.test,"))
        .expect("tracker node present");
    assert!(tracker_row.contains("true"), "tracker flagged: {tracker_row}");
    let misspellings = std::fs::read_to_string(report_a.join("misspellings.csv")).unwrap();
    assert!(
        misspellings.contains("Sec-CH-Device-Memory,"),
        "scenario misspelling surfaces: {misspellings}"
    );

    // report: re-render the stored analysis without the records.
    let out = hintscan(&[
        "--format",
        "csv",
        "report",
        "--analysis",
        report_a.to_str().unwrap(),
        "--table",
        "adoption",
    ]);
    assert_success(&out);
    assert!(stdout_of(&out).contains("all,"), "{}", stdout_of(&out));
    let printed_all = stdout_of(&out)
        .lines()
        .find(|l| l.starts_with("all,"))
        .unwrap()
        .to_string();
    assert!(printed_all.contains("75.0000"));

    let rebuilt = dir.path().join("rebuilt");
    let out = hintscan(&[
        "report",
        "--analysis",
        report_a.join("analysis.json").to_str().unwrap(),
        "--out",
        rebuilt.to_str().unwrap(),
    ]);
    assert_success(&out);
    for file in [
        "frequency.csv",
        "adoption_by_rank.csv",
        "page_kind_diff.csv",
        "report_manifest.json",
    ] {
        assert_eq!(
            std::fs::read(report_a.join(file)).unwrap(),
            std::fs::read(rebuilt.join(file)).unwrap(),
            "rebuilt {file} must match the original"
        );
    }

    // Ethics budget, end to end: the whole pipeline above made exactly one
    // crawl request per (page, run). Start pages: discover start fetch +
    // three scan runs.
    let hits = live.testbed.hits("alpha.test", "/");
    assert_eq!(hits, 1 + 3, "discover start fetch plus one per scan run, got {hits}");
}

#[test]
fn scan_deduplicates_duplicate_targets_under_ethics_mode() {
    let live = LiveTestbed::start("baseline.json");
    let dir = TempDir::new().unwrap();
    let resolve = live.resolve_flags();
    let resolve: Vec<&str> = resolve.iter().map(String::as_str).collect();

    let input = dir.path().join("targets.csv");
    let line = format!(
        "1,alpha.test,http://alpha.test:{}/\n2,alpha.test,http://alpha.test:{}/\n",
        live.port(),
        live.port()
    );
    std::fs::write(&input, line).unwrap();
    let output = dir.path().join("records.jsonl");
    let mut args = vec![
        "scan",
        "--input",
        input.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
        "--allow-http",
        "--no-third-parties",
    ];
    args.extend(&resolve);
    assert_success(&hintscan(&args));

    assert_eq!(live.testbed.hits("alpha.test", "/"), 1, "one request per target");
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("records.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["targets_input"], 2);
    assert_eq!(manifest["targets_deduped"], 1);
    assert_eq!(manifest["targets_crawled"], 1);
}

// ---------------------------------------------------------------- ingest

#[test]
fn ingest_converts_archive_lines_and_reports_skips() {
    let dir = TempDir::new().unwrap();
    let archive = dir.path().join("archive.jsonl");
    std::fs::write(
        &archive,
        concat!(
            r#"{"url":"https://a.test/","timestamp":"2022-03-01T10:00:00Z","headers":{"Accept-CH":"RTT, Sec-CH-UA"},"status":200}"#,
            "\n",
            r#"{"url":"https://b.test/","timestamp":1646130000,"headers":{},"status":200}"#,
            "\n",
            r#"{"timestamp":"2022-03-01T10:00:00Z","headers":{}}"#,
            "\n",
        ),
    )
    .unwrap();
    let output = dir.path().join("records.jsonl");
    let out = hintscan(&[
        "ingest",
        "--input",
        archive.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
        "--run-id",
        "archive-run",
    ]);
    assert_success(&out);

    let records = read_records_from_path(&output).unwrap();
    assert_eq!(records.len(), 2, "third line lacks its URL field");
    assert_eq!(records[0].run_id, "archive-run");
    let hints = &records[0].accept_ch.as_ref().unwrap().recognized;
    assert!(hints.contains("RTT") && hints.contains("Sec-CH-UA"));
    assert!(records[1].accept_ch.is_none(), "no Accept-CH is a measurement");

    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("records.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["report"]["ingested"], 2);
    assert_eq!(manifest["report"]["skipped"], 1);

    // The ingested records flow straight into analyze.
    let report_dir = dir.path().join("report");
    let out = hintscan(&[
        "analyze",
        "--records",
        output.to_str().unwrap(),
        "--out",
        report_dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let over_time = std::fs::read_to_string(report_dir.join("adoption_over_time.csv")).unwrap();
    assert!(over_time.contains("2022-03,2,1,50.0000"), "{over_time}");
}
