//! Core library for auditing HTTP Client Hint usage across websites:
//! login page discovery, cache-isolated crawling, hint classification,
//! tracker attribution, and the statistical analyses over the results.

pub mod analytics;
pub mod crawl;
pub mod discovery;
pub mod emulator;
pub mod filter;
pub mod html;
pub mod psl;
pub mod registry;
pub mod report;
pub mod stats;
pub mod store;
pub mod testbed;

pub use analytics::{
    adoption_by_rank, adoption_over_time, build_interconnection_graph, group_by_rba,
    group_comparison, hint_frequency, misspelling_report, page_kind_diff, partition_by_category,
    vantage_counts, GroupComparisonReport, HintFrequencyRow, InterconnectionGraph, MonthRow,
    PageKindDiff, RankBucketRow, VantageRow, ALPHA, RANK_BUCKETS,
};
pub use crawl::{
    crawl_batch, crawl_one, prepare_targets, CrawlConfig, CrawlError, CrawlRecord, CrawlTarget,
    HttpPageFetcher, PageKind, RecordStatus, RunManifest, ThirdPartyObservation, TokenBucket,
    Vantage, RECORD_SCHEMA_VERSION,
};
pub use discovery::{
    discover_login, score_candidate, select_best, validate_login_domain, CandidateSource,
    DiscoveryError, DiscoveryOptions, DiscoveryResult, FetchError, FetchedPage, IndicatorSet,
    LoginCandidate, NoSearch, PageFetcher, SearchProvider,
};
pub use emulator::{
    origin_of, receive_accept_ch, request_headers, BrowserProfile, EmulatorError, GrantCache,
    Platform, ProfileSet,
};
pub use filter::{match_tracker, FilterList, TrackerVerdict};
pub use psl::PublicSuffixList;
pub use registry::{
    CountingPolicy, HintDescriptor, HintGroup, HintLevel, HintStatus, ParsedAcceptCh, Registry,
};
pub use report::{analyze, format_p, write_report, AnalysisReport, AnalyzeInputs, ReportError};
pub use stats::{
    bonferroni, chi_squared, chi_squared_p, summary_stats, StatResult, SummaryStats,
};
pub use store::{
    align_datasets, build_profiles, ingest_archive, join_labels, parse_rank_list,
    parse_rank_list_from_path, parse_rba_labels, parse_rba_labels_from_path, read_records,
    read_records_from_path, write_records, write_records_to_path, ArchiveFieldMap,
    CategoryProvider, IngestReport, MemoizedProvider, NoCategories, OfflineCategoryMap,
    RbaStatus, SiteProfile, StoreError,
};
pub use testbed::{
    run_end_to_end, EndToEndOptions, EndToEndOutcome, Expectations, Scenario, Testbed,
};
