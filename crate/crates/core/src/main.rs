use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wavquant::attacks::AttackSpec;
use wavquant::audio_io::{bundled_corpus, read_wav, write_wav, AudioClip};
use wavquant::codec::{embed, extract, EmbedKey, Payload, SideInfo};
use wavquant::harness::{evaluate, rows_to_csv, rows_to_markdown, sweep_q, sweep_to_csv, table_cells};
use wavquant::{Error, GroupMode};

/// Rate of the bundled clips, which the attack parameters assume.
const REFERENCE_RATE: u32 = 44_100;

#[derive(Parser)]
#[command(
    name = "wavquant",
    version,
    about = "Wavelet-domain audio watermarking by group-amplitude quantization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a payload into a mono 16-bit WAV file.
    Embed {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        key: PathBuf,
        /// A string of 0/1 characters, or a file containing one.
        #[arg(long)]
        payload: String,
        /// Where to write the per-group scaling side information.
        #[arg(long)]
        side_info: Option<PathBuf>,
    },
    /// Extract payload bits; prints the bits, then one NOSYNC line per
    /// segment without a sync match.
    Extract {
        input: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        side_info: Option<PathBuf>,
        /// Print only the first N bits.
        #[arg(long)]
        bits: Option<usize>,
    },
    /// Apply one channel attack, e.g. resample:22050, lowpass:3000, amp:1.2, timescale:-5.
    Attack {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        attack: AttackSpec,
    },
    /// Run the embed, attack, extract matrix over every WAV file in a directory.
    Evaluate {
        corpus_dir: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write markdown tables here.
        #[arg(long)]
        markdown: Option<PathBuf>,
    },
    /// SNR and BER after -5% time scaling for a list of quantization steps.
    SweepQ {
        input: PathBuf,
        #[arg(long)]
        key_template: PathBuf,
        /// Comma-separated steps in PCM16-sum units.
        #[arg(long, value_delimiter = ',', default_value = "6500,13000,26000,52000,104000")]
        q_list: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the bundled synthetic corpus as WAV files.
    Synth { out_dir: PathBuf },
    /// Write a key file with default values.
    Keygen {
        output: PathBuf,
        #[arg(long, default_value_t = 4)]
        group_size: usize,
        #[arg(long, default_value_t = 26_000.0)]
        quant_step: f64,
        #[arg(long)]
        pn_seed: Option<u64>,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Capacity { .. } | Error::Argument(_) => 2,
        _ => 1,
    }
}

fn load_payload(arg: &str) -> wavquant::Result<Payload> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        return text.parse();
    }
    arg.parse()
}

fn load_corpus(dir: &Path) -> wavquant::Result<Vec<(String, AudioClip)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Argument(format!("no .wav files in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let clip = read_wav(p)?;
            if clip.sample_rate() != REFERENCE_RATE {
                eprintln!(
                    "warning: {} is {} Hz; the attack parameters assume {REFERENCE_RATE} Hz",
                    p.display(),
                    clip.sample_rate()
                );
            }
            let name = p
                .file_stem()
                .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            Ok((name, clip))
        })
        .collect()
}

fn run(cli: Cli) -> wavquant::Result<()> {
    match cli.command {
        Command::Embed {
            input,
            output,
            key,
            payload,
            side_info,
        } => {
            let key = EmbedKey::load(&key)?;
            let payload = load_payload(&payload)?;
            let audio = read_wav(&input)?;
            let (marked, report) = embed(&audio, &payload, &key)?;
            write_wav(&marked, &output)?;
            if let (Some(path), Some(side)) = (&side_info, &report.side_info) {
                side.save(path)?;
            }
            println!(
                "embedded {} payload bits into {} groups ({} available for payload)",
                report.payload_bits, report.groups_embedded, report.payload_capacity_bits
            );
            println!("SNR {:.2} dB, capacity {} bits", report.snr_db, report.capacity_bits);
            for mode in [
                GroupMode::OptimalScaling,
                GroupMode::FixedScalingFallback,
                GroupMode::FixedScaling,
            ] {
                println!("  {:<24}{}", mode.name(), report.mode_count(mode));
            }
            println!("snr_db={}", report.snr_db);
            println!("capacity_bits={}", report.capacity_bits);
            println!("payload_capacity_bits={}", report.payload_capacity_bits);
            println!("groups_total={}", report.groups_total);
            println!("groups_embedded={}", report.groups_embedded);
            println!("pad_samples={}", report.pad_samples);
            println!("repaired_groups={}", report.repaired_groups);
            for mode in [
                GroupMode::OptimalScaling,
                GroupMode::FixedScalingFallback,
                GroupMode::FixedScaling,
            ] {
                println!("mode.{}={}", mode.name(), report.mode_count(mode));
            }
        }
        Command::Extract {
            input,
            key,
            side_info,
            bits,
        } => {
            let key = EmbedKey::load(&key)?;
            let side = side_info.as_deref().map(SideInfo::load).transpose()?;
            let audio = read_wav(&input)?;
            let got = extract(&audio, &key, side.as_ref())?;
            let shown = got.payload(bits.unwrap_or(usize::MAX));
            println!("{}", shown.iter().map(|b| char::from(b'0' + b)).collect::<String>());
            for seg in &got.segments {
                match seg.offset {
                    Some(off) => eprintln!(
                        "segment {}: sync at group {off} ({} errors)",
                        seg.segment,
                        seg.errors.unwrap_or(0)
                    ),
                    None => println!("NOSYNC segment={}", seg.segment),
                }
            }
        }
        Command::Attack { input, output, attack } => {
            let audio = read_wav(&input)?;
            write_wav(&attack.apply(&audio)?, &output)?;
        }
        Command::Evaluate {
            corpus_dir,
            key,
            out,
            markdown,
        } => {
            let key = EmbedKey::load(&key)?;
            let clips = load_corpus(&corpus_dir)?;
            let rows = evaluate(&clips, &key, &table_cells())?;
            std::fs::write(&out, rows_to_csv(&rows)).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            if let Some(md) = markdown {
                std::fs::write(&md, rows_to_markdown(&rows)).map_err(|e| Error::Io {
                    path: md.clone(),
                    source: e,
                })?;
            }
            println!("{} rows written to {}", rows.len(), out.display());
        }
        Command::SweepQ {
            input,
            key_template,
            q_list,
            out,
        } => {
            let key = EmbedKey::load(&key_template)?;
            let audio = read_wav(&input)?;
            let rows = sweep_q(&audio, &key, &q_list)?;
            std::fs::write(&out, sweep_to_csv(&rows)).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            println!("{} rows written to {}", rows.len(), out.display());
        }
        Command::Synth { out_dir } => {
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io {
                path: out_dir.clone(),
                source: e,
            })?;
            for (name, clip) in bundled_corpus() {
                let path = out_dir.join(format!("{name}.wav"));
                write_wav(&clip, &path)?;
                println!("{}", path.display());
            }
        }
        Command::Keygen {
            output,
            group_size,
            quant_step,
            pn_seed,
        } => {
            let mut key = EmbedKey::with_group(group_size, quant_step);
            if let Some(seed) = pn_seed {
                key.pn_seed = seed;
            }
            key.validate()?;
            key.save(&output)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("wavquant: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
