//! `gigalink`: run the baseband model's experiments from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gigalink_core::bitframe::{decode_words, Coding, WordStatus};
use gigalink_core::harness::output::{render_rows, write_output};
use gigalink_core::harness::{
    run_ber, run_flow_sim, run_link_model, run_sync_experiment, search_scrambler_mask, OutputFormat, RunMeta, Scenario,
};
use gigalink_core::{build_frame, Error, PreamblePattern};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "gigalink", version, about = "60 GHz DBPSK baseband link model: BER, sync, link budget and FIFO experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// End-to-end BER versus Eb/N0 through the full chain.
    Ber(Common),
    /// Synchronizer miss/false-alarm curves, analytic and Monte Carlo.
    Sync(Common),
    /// Received power and model BER versus distance.
    Link(Common),
    /// FIFO rate-adapter simulation; rows are the event trace.
    Flow(Common),
    /// Search for a scrambler mask with low preamble correlation.
    MaskSearch {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = gigalink_core::harness::mask::DEFAULT_MASK_SEARCH_TRIALS)]
        trials: usize,
    },
    /// Build one frame, optionally corrupt it, and decode it again.
    Frame {
        #[command(flatten)]
        common: Common,
        /// Payload as hex; random from the seed when omitted.
        #[arg(long)]
        payload_hex: Option<String>,
        /// Byte errors to inject into each RS word of the coded region.
        #[arg(long, default_value_t = 0)]
        byte_errors: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Args)]
struct Common {
    /// Scenario file (.toml or .json); defaults apply to missing fields.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write rows here plus a `.meta.json` sidecar; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    gamma: Option<u32>,
    /// Preamble length in bits (32 or 64).
    #[arg(long)]
    preamble: Option<usize>,
    #[arg(long)]
    banks: Option<u8>,
    #[arg(long, value_enum)]
    rs: Option<OnOff>,
    /// Eb/N0 grid in dB: `4,5,6` or `start:stop:step`.
    #[arg(long)]
    ebn0: Option<String>,
    /// Distance grid in metres: `1,5,10` or `start:stop:step`.
    #[arg(long)]
    distance: Option<String>,
    #[arg(long)]
    max_bits: Option<u64>,
    #[arg(long)]
    target_errors: Option<u64>,
}

fn parse_grid(s: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("grid {s:?}"))?;
        let (start, stop, step) = (v[0], v[1], v[2]);
        if step.is_nan() || step <= 0.0 || stop < start {
            bail!("grid {s:?} needs start <= stop and step > 0");
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| start + i as f64 * step).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("grid value {p:?}")))
        .collect()
}

impl Common {
    fn scenario(&self) -> anyhow::Result<Scenario> {
        let mut sc = match &self.scenario {
            Some(p) => Scenario::from_path(p)?,
            None => Scenario::default(),
        };
        if let Some(s) = self.seed {
            sc.seed = s;
        }
        if let Some(g) = self.gamma {
            sc.chain.gamma = g;
            sc.sync.gammas = vec![g];
        }
        if let Some(n) = self.preamble {
            sc.chain.preamble_bits = n;
            sc.sync.preamble_bits = vec![n];
        }
        if let Some(b) = self.banks {
            sc.chain.banks = b;
            sc.sync.banks = vec![b];
        }
        if let Some(rs) = self.rs {
            sc.chain.rs = matches!(rs, OnOff::On);
        }
        if let Some(g) = &self.ebn0 {
            sc.ber.ebn0_db = parse_grid(g)?;
            sc.sync.chain_ebn0_db = sc.ber.ebn0_db.clone();
        }
        if let Some(d) = &self.distance {
            sc.link.distances_m = parse_grid(d)?;
        }
        if let Some(m) = self.max_bits {
            sc.ber.max_bits = m;
        }
        if let Some(t) = self.target_errors {
            sc.ber.target_errors = t;
        }
        if let Some(o) = &self.out {
            sc.output.path = Some(o.display().to_string());
        }
        if let Some(f) = self.format {
            sc.output.format = match f {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
        }
        sc.validate()?;
        Ok(sc)
    }
}

/// Rows go to `--out` (with sidecar) or stdout; with `--out` the summary
/// is echoed to stdout as one JSON line.
fn emit<T: Serialize>(command: &str, sc: &Scenario, rows: &[T], summary: serde_json::Value) -> anyhow::Result<()> {
    let format = sc.output.format;
    match &sc.output.path {
        Some(path) => {
            let meta = RunMeta::new(command, sc, rows.len(), summary.clone());
            write_output(&PathBuf::from(path), rows, format, &meta)?;
            println!("{}", serde_json::json!({ "command": command, "out": path, "rows": rows.len(), "summary": summary }));
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&render_rows(rows, format)?)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct FrameDump {
    fingerprint: String,
    preamble_bits: usize,
    rs: bool,
    scrambler: String,
    payload_hex: String,
    frame_hex: String,
    injected_byte_errors: usize,
    word_status: String,
    payload_ok: bool,
}

fn frame_command(common: &Common, payload_hex: Option<&str>, byte_errors: usize) -> anyhow::Result<()> {
    use rand::{Rng, RngCore, SeedableRng};
    let sc = common.scenario()?;
    let layout = sc.chain.layout()?;
    let codec = sc.chain.codec();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(sc.seed);
    let payload = match payload_hex {
        Some(h) => hex::decode(h.trim()).context("payload hex")?,
        None => {
            let mut p = vec![0u8; layout.payload_bytes()];
            rng.fill_bytes(&mut p);
            p
        }
    };
    let frame = build_frame(&payload, &codec, &layout)?;
    let mut rx = frame.bytes().to_vec();
    for w in 0..layout.data_words {
        let base = layout.preamble_bytes + w * layout.coded_bytes_per_word;
        let mut picked = std::collections::BTreeSet::new();
        while picked.len() < byte_errors.min(layout.coded_bytes_per_word) {
            picked.insert(rng.random_range(0..layout.coded_bytes_per_word));
        }
        for i in picked {
            rx[base + i] ^= rng.random_range(1..=255u8);
        }
    }
    let (decoded, status) = decode_words(&rx, &codec, &layout)?;
    let word_status = status
        .iter()
        .map(|s| match s {
            WordStatus::Corrected(n) => format!("corrected:{n}"),
            WordStatus::Failed => "failed".into(),
            WordStatus::Unchecked => "unchecked".into(),
        })
        .collect::<Vec<_>>()
        .join(";");
    debug_assert_eq!(frame.preamble(), &PreamblePattern::for_bits(layout.preamble_bits())?.to_bytes()[..]);
    let dump = FrameDump {
        fingerprint: sc.fingerprint(),
        preamble_bits: layout.preamble_bits(),
        rs: codec.coding == Coding::Rs,
        scrambler: codec.scrambler.to_hex(),
        payload_hex: hex::encode(&payload),
        frame_hex: hex::encode(&rx),
        injected_byte_errors: byte_errors,
        word_status,
        payload_ok: decoded == payload,
    };
    let ok = dump.payload_ok;
    emit("frame", &sc, &[dump], serde_json::json!({ "payload_ok": ok }))?;
    if status.contains(&WordStatus::Failed) {
        return Err(Error::DecodeFailure { word: status.iter().position(|s| *s == WordStatus::Failed).unwrap_or(0) }.into());
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ber(c) => {
            let sc = c.scenario()?;
            let rows = run_ber(&sc)?;
            let incomplete = rows.iter().filter(|r| !r.complete).count();
            emit("ber", &sc, &rows, serde_json::json!({ "points": rows.len(), "incomplete_points": incomplete }))
        }
        Command::Sync(c) => {
            let sc = c.scenario()?;
            let rows = run_sync_experiment(&sc)?;
            emit("sync", &sc, &rows, serde_json::json!({ "rows": rows.len() }))
        }
        Command::Link(c) => {
            let sc = c.scenario()?;
            let report = run_link_model(&sc)?;
            emit("link", &sc, &report.rows, serde_json::to_value(&report.summary)?)
        }
        Command::Flow(c) => {
            let sc = c.scenario()?;
            let (summary, trace) = run_flow_sim(&sc)?;
            emit("flow", &sc, &trace.events, serde_json::to_value(&summary)?)
        }
        Command::MaskSearch { common, trials } => {
            let sc = common.scenario()?;
            let pattern = sc.chain.pattern()?;
            let report = search_scrambler_mask(&pattern, trials, sc.seed)?;
            let summary = serde_json::to_value(&report)?;
            emit("mask-search", &sc, &[report], summary)
        }
        Command::Frame { common, payload_hex, byte_errors } => frame_command(&common, payload_hex.as_deref(), byte_errors),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.downcast_ref::<Error>().map_or("error", Error::kind);
            let msg = format!("{e:#}");
            eprintln!("{}", serde_json::json!({ "error": { "kind": kind, "message": msg } }));
            ExitCode::from(2)
        }
    }
}
