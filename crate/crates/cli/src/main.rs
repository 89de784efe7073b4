use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use scatsynth::io::{read_potential, read_samples, write_spectrum};
use scatsynth::pipeline::{
    analyze_samples, load_pattern, run_synthesis, validate_config, verify, FailureKind, PipelineConfig,
};
use scatsynth::Error;

/// Synthesize a potential with a prescribed scattering amplitude.
#[derive(Parser)]
#[command(name = "synth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline for a config file and write all artifacts.
    Run {
        config: PathBuf,
        /// Run directory; defaults to `<config stem>.run` beside the config.
        #[arg(short, long)]
        out_dir: Option<PathBuf>,
        /// Also write residual-vs-L and |q| profile tables.
        #[arg(long)]
        plot: bool,
    },
    /// Re-solve the forward problem for a stored potential and compare with f.
    Verify {
        q_file: PathBuf,
        /// Pattern as `l,m,re,im` coefficients or `theta,phi,re,im` samples.
        f_file: PathBuf,
        config: PathBuf,
        /// Print the flat key=value report instead of the text one.
        #[arg(long)]
        kv: bool,
    },
    /// Spherical-harmonic coefficients of sphere samples up to degree L.
    Spectrum {
        samples_file: PathBuf,
        #[arg(short = 'L', value_name = "INT")]
        degree: usize,
    },
}

fn default_out_dir(config: &Path) -> PathBuf {
    let stem = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "synth".into());
    config.parent().unwrap_or_else(|| Path::new(".")).join(format!("{stem}.run"))
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(FailureKind::of(&e).exit_code() as u8)
}

fn verdict(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out_dir, plot } => {
            let out = out_dir.unwrap_or_else(|| default_out_dir(&config));
            match validate_config(&config) {
                Ok(v) => print!("effective configuration:\n{}\n", v.config.echo()),
                Err(e) => return fail(e),
            }
            match run_synthesis(&config, &out, plot) {
                Ok(run) => {
                    print!("{}", run.report.to_text());
                    println!("artifacts in {}", out.display());
                    verdict(run.report.passed())
                }
                Err(e) => fail(e),
            }
        }
        Command::Verify { q_file, f_file, config, kv } => {
            let result = (|| {
                let c = PipelineConfig::from_file(&config)?;
                let q = read_potential(std::io::BufReader::new(std::fs::File::open(&q_file)?))?;
                let f = load_pattern(&f_file, None)?;
                verify(&c, &q, &f)
            })();
            match result {
                Ok(r) => {
                    print!("{}", if kv { r.to_key_values() } else { r.to_text() });
                    verdict(r.passed())
                }
                Err(e) => fail(e),
            }
        }
        Command::Spectrum { samples_file, degree } => {
            let result = (|| {
                let samples = read_samples(std::io::BufReader::new(std::fs::File::open(&samples_file)?))?;
                let (spec, _) = analyze_samples(&samples, Some(degree))?;
                let mut out = std::io::stdout().lock();
                write_spectrum(&mut out, &spec)?;
                out.flush()?;
                Ok::<_, Error>(())
            })();
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
    }
}
