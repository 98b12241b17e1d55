//! shelfwatch: simulate depth sequences, process them into event logs,
//! compute shopper-behavior reports, and render interaction maps.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use shelfwatch::analytics::{
    compute_indicators, read_records, sales_conversion, Conversion, EventStore, IndicatorFilters,
    IndicatorReport, Record,
};
use shelfwatch::config::PipelineConfig;
use shelfwatch::error::Error;
use shelfwatch::events::InteractionKind;
use shelfwatch::heatmap::{render_map, Planogram};
use shelfwatch::netpbm::{read_ppm, write_ppm};
use shelfwatch::pipeline::process_stream;
use shelfwatch::sequence::{load_sequence, save_sequence};
use shelfwatch::sim::{simulate, Scenario};

#[derive(Parser)]
#[command(name = "shelfwatch", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scripted scenario into a depth sequence plus ground truth
    Simulate {
        /// Scenario description (JSON)
        #[arg(long)]
        scenario: PathBuf,
        /// Output sequence directory
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario's RNG seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the full pipeline over a sequence and append events to a log
    Process {
        /// Sequence directory (index.json + frames)
        #[arg(long)]
        seq: PathBuf,
        /// Pipeline configuration file
        #[arg(long)]
        config: Option<PathBuf>,
        /// Event log to append to (JSON Lines)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the effective configuration and exit
        #[arg(long)]
        dump_config: bool,
    },
    /// Compute behavior indicators over an event log
    Report {
        /// Event log (JSON Lines)
        #[arg(long)]
        log: PathBuf,
        /// Analysis window as start,end in milliseconds
        #[arg(long)]
        window: String,
        /// Bucket width in milliseconds (default: whole window)
        #[arg(long)]
        bucket: Option<u64>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
        /// Configuration file (supplies the product catalog)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Restrict to one camera
        #[arg(long)]
        camera: Option<String>,
        /// Restrict to one zone
        #[arg(long)]
        zone: Option<String>,
        /// Camera whose visits define total visitors
        #[arg(long)]
        entrance: Option<String>,
        /// Transaction count from an external sales feed
        #[arg(long)]
        transactions: Option<u64>,
    },
    /// Draw interaction markers over a planogram image
    Rendermap {
        /// Event log (JSON Lines)
        #[arg(long)]
        log: PathBuf,
        /// Planogram raster (PPM)
        #[arg(long)]
        planogram: PathBuf,
        /// Configuration file (supplies the zone-to-planogram mapping)
        #[arg(long)]
        config: PathBuf,
        /// Output image (PPM)
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("shelfwatch: {}", err);
            match err {
                Error::Format(_) | Error::Argument(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn run(cli: Cli) -> shelfwatch::Result<()> {
    match cli.command {
        Command::Simulate { scenario, out, seed } => cmd_simulate(&scenario, &out, seed),
        Command::Process {
            seq,
            config,
            out,
            dump_config,
        } => cmd_process(&seq, config.as_deref(), out.as_deref(), dump_config),
        Command::Report {
            log,
            window,
            bucket,
            format,
            config,
            camera,
            zone,
            entrance,
            transactions,
        } => cmd_report(
            &log,
            &window,
            bucket,
            format,
            config.as_deref(),
            IndicatorFilters {
                camera_id: camera,
                zone_id: zone,
                entrance_camera: entrance,
            },
            transactions,
        ),
        Command::Rendermap {
            log,
            planogram,
            config,
            out,
        } => cmd_rendermap(&log, &planogram, &config, &out),
    }
}

fn load_config(path: Option<&std::path::Path>) -> shelfwatch::Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn cmd_simulate(
    scenario_path: &std::path::Path,
    out: &std::path::Path,
    seed: Option<u64>,
) -> shelfwatch::Result<()> {
    let text =
        std::fs::read_to_string(scenario_path).map_err(|e| Error::io(scenario_path, e))?;
    let mut scenario = Scenario::from_json(&text)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let (frames, truth) = simulate(&scenario)?;
    save_sequence(&frames, &scenario.camera, out)?;
    truth.save_jsonl(&out.join("truth.jsonl"))?;
    eprintln!(
        "simulated {} frames, {} ground-truth events -> {}",
        frames.len(),
        truth.events.len(),
        out.display()
    );
    Ok(())
}

fn cmd_process(
    seq: &std::path::Path,
    config_path: Option<&std::path::Path>,
    out: Option<&std::path::Path>,
    dump_config: bool,
) -> shelfwatch::Result<()> {
    let config = load_config(config_path)?;
    if dump_config {
        print!("{}", config.dump());
        return Ok(());
    }
    let source = load_sequence(seq)?;
    // the sequence index carries the camera geometry the frames were
    // captured with; the config file may override only the parameters
    let mut config = config;
    config.camera = source.camera().clone();
    let output = process_stream(source, config)?;

    let mut positive = 0u64;
    let mut negative = 0u64;
    let mut neutral = 0u64;
    for event in &output.interactions {
        match event.kind {
            InteractionKind::Positive => positive += 1,
            InteractionKind::Negative => negative += 1,
            InteractionKind::Neutral => neutral += 1,
        }
    }
    if let Some(out) = out {
        let mut store = EventStore::open(out)?;
        for event in &output.interactions {
            store.append(Record::Interaction(event.clone()))?;
        }
        for visit in &output.visits {
            store.append(Record::Visit(visit.clone()))?;
        }
    }
    eprintln!(
        "processed {} frames at {:.1} fps",
        output.frames_processed, output.fps
    );
    println!(
        "visitors={} positive={} negative={} neutral={}",
        output.visits.len(),
        positive,
        negative,
        neutral
    );
    Ok(())
}

fn parse_window(text: &str) -> shelfwatch::Result<(u64, u64)> {
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| Error::argument("--window expects start,end in milliseconds"))?;
    let start: u64 = a
        .trim()
        .parse()
        .map_err(|_| Error::argument(format!("bad window start '{}'", a)))?;
    let end: u64 = b
        .trim()
        .parse()
        .map_err(|_| Error::argument(format!("bad window end '{}'", b)))?;
    Ok((start, end))
}

#[allow(clippy::too_many_arguments)]
fn cmd_report(
    log: &std::path::Path,
    window: &str,
    bucket: Option<u64>,
    format: ReportFormat,
    config_path: Option<&std::path::Path>,
    filters: IndicatorFilters,
    transactions: Option<u64>,
) -> shelfwatch::Result<()> {
    let config = load_config(config_path)?;
    let records = read_records(log)?;
    let window = parse_window(window)?;
    let bucket_ms = bucket.unwrap_or_else(|| window.1.saturating_sub(window.0).max(1));
    let report = compute_indicators(&records, window, bucket_ms, &filters, &config.catalog)?;
    let conversion = sales_conversion(&records, window, &filters, transactions)?;
    match format {
        ReportFormat::Json => print_report_json(&report, &conversion),
        ReportFormat::Text => print_report_text(&report, &conversion),
        ReportFormat::Csv => print_report_csv(&report),
    }
    Ok(())
}

fn print_report_json(report: &IndicatorReport, conversion: &Conversion) {
    let body = serde_json::json!({
        "report": report,
        "sales_conversion": match conversion {
            Conversion::Ratio(r) => serde_json::json!(r),
            Conversion::Unavailable => serde_json::Value::Null,
        },
    });
    println!("{}", serde_json::to_string_pretty(&body).expect("report serializes"));
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:.1}", x))
}

fn print_report_text(report: &IndicatorReport, conversion: &Conversion) {
    println!(
        "window {}..{} ms, bucket {} ms",
        report.window_start_ms, report.window_end_ms, report.bucket_ms
    );
    println!(
        "{:>12} {:>12} {:>9} {:>11} {:>7} {:>7} {:>7} {:>12} {:>12}",
        "bucket_start", "visitors", "interact", "inter/pers", "pos", "neg", "neu", "avg_visit", "avg_inter"
    );
    for b in &report.buckets {
        println!(
            "{:>12} {:>12} {:>9} {:>11} {:>7} {:>7} {:>7} {:>12} {:>12}",
            b.start_ms,
            b.total_visitors,
            b.visitors_interacting,
            fmt_opt(b.interactions_per_person),
            b.products_picked_up,
            b.products_relocated,
            b.products_touched,
            fmt_opt(b.avg_visit_ms),
            fmt_opt(b.avg_interaction_ms),
        );
        for (zone, n) in &b.visitors_per_zone {
            println!("    zone {:<12} visitors={}", zone, n);
        }
        for (product, n) in &b.per_product {
            println!("    product {:<10} interactions={}", product, n);
        }
        for (category, n) in &b.per_category {
            println!("    category {:<9} interactions={}", category, n);
        }
    }
    match conversion {
        Conversion::Ratio(r) => println!("sales_conversion={:.4}", r),
        Conversion::Unavailable => println!("sales_conversion=unavailable"),
    }
}

fn print_report_csv(report: &IndicatorReport) {
    println!(
        "start_ms,end_ms,total_visitors,visitors_interacting,interactions_per_person,\
pct_interacting,avg_visit_ms,products_picked_up,products_relocated,products_touched,\
interaction_count,avg_interaction_ms"
    );
    for b in &report.buckets {
        println!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            b.start_ms,
            b.end_ms,
            b.total_visitors,
            b.visitors_interacting,
            b.interactions_per_person.map_or(String::new(), |v| v.to_string()),
            b.pct_interacting.map_or(String::new(), |v| v.to_string()),
            b.avg_visit_ms.map_or(String::new(), |v| v.to_string()),
            b.products_picked_up,
            b.products_relocated,
            b.products_touched,
            b.interaction_count,
            b.avg_interaction_ms.map_or(String::new(), |v| v.to_string()),
        );
    }
}

fn cmd_rendermap(
    log: &std::path::Path,
    planogram_path: &std::path::Path,
    config_path: &std::path::Path,
    out: &std::path::Path,
) -> shelfwatch::Result<()> {
    let config = PipelineConfig::load(config_path)?;
    let map = config
        .map
        .as_ref()
        .ok_or_else(|| Error::argument("config has no map section (map.zone_id, map.rect_px)"))?;
    let zone = config
        .zone(&map.zone_id)
        .ok_or_else(|| Error::argument(format!("no zone {} in config", map.zone_id)))?;
    let image = read_ppm(planogram_path)?;
    let planogram = Planogram {
        image,
        rect_px: map.rect_px,
        marker_radius_px: map.marker_radius_px,
    };
    if !planogram.rect_fits() {
        return Err(Error::argument(
            "map.rect_px does not fit inside the planogram image",
        ));
    }
    let events: Vec<_> = read_records(log)?
        .into_iter()
        .filter_map(|r| match r.record {
            Record::Interaction(e) => Some(e),
            Record::Visit(_) => None,
        })
        .collect();
    let rendered = render_map(&planogram, &events, zone, &config.camera);
    write_ppm(out, &rendered.image)?;
    println!("skipped: {}", rendered.skipped);
    Ok(())
}
