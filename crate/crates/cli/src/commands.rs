use std::fs;

use serde_json::Value;

use sideinfo_core::coder::codeword_for_rank;
use sideinfo_core::density::{density_trajectory, joint_log_prob, y_marginal_log_prob};
use sideinfo_core::entropy::{entropy_rate_exact, memoryless_analytic};
use sideinfo_core::harness::{LilConfig, LzsiConfig, RecurrenceCltConfig};
use sideinfo_core::lzsi::LzsiStream;
use sideinfo_core::mc::stationary_strings;
use sideinfo_core::report::{num, row};
use sideinfo_core::{
    build_assignment, conditional_info_density, decode_opt, encode_opt, presets, sample_two_sided, Codeword,
    ExperimentReport, PairModel,
};

use crate::args::{CodeCmd, Command, CommonArgs, LzsiCmd, ModelCmd, OutArgs, ReplayArgs, StatsCmd, VerifyCmd};
use crate::config::{execute, Experiment, ReferenceConfig, RunConfig};
use crate::error::{CliError, CliResult, EXIT_OK, EXIT_USAGE, EXIT_VERDICT};
use crate::io::{emit_report, format_symbols, load_model, parse_symbols, summarize, write_file};

/// Seeds drawn for the user stay below 2^53 so that they survive tools
/// that read JSON numbers as doubles.
fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>() >> 11;
        eprintln!("seed: {s} (drawn; pass --seed {s} to reproduce)");
        s
    })
}

fn verdict_exit(rep: &ExperimentReport) -> u8 {
    if rep.passed() {
        EXIT_OK
    } else {
        EXIT_VERDICT
    }
}

fn emit(rep: &ExperimentReport, out: &OutArgs) -> CliResult<u8> {
    emit_report(rep, out.out.as_deref(), out.csv.as_deref())?;
    summarize(rep);
    Ok(verdict_exit(rep))
}

pub fn run(command: Command) -> CliResult<u8> {
    match command {
        Command::Model(cmd) => model(cmd),
        Command::Sample(a) => {
            let m = load_model(&a.model)?;
            let seed = resolve_seed(a.seed);
            let s = sample_two_sided(&m, a.m, a.n, seed).map_err(CliError::core("sampling"))?;
            let mut rep = ExperimentReport::new("sample", m.hash(), seed);
            rep.param("n", a.n).param("m", a.m);
            let (xs, ys) = (m.x_size(), m.y_size());
            rep.stat_value("past_x", format_symbols(&s.past_x, xs))
                .stat_value("past_y", format_symbols(&s.past_y, ys))
                .stat_value("present_x", format_symbols(&s.present_x, xs))
                .stat_value("present_y", format_symbols(&s.present_y, ys));
            let past = s.past_x.iter().zip(&s.past_y);
            for (i, (x, y)) in past.chain(s.present_x.iter().zip(&s.present_y)).enumerate() {
                let t = i as i64 - a.m as i64 + 1;
                rep.push_row(
                    "sample",
                    row([("t", Value::from(t)), ("x", Value::from(*x)), ("y", Value::from(*y))]),
                );
            }
            emit(&rep, &a.out)
        }
        Command::Density(a) => {
            let m = load_model(&a.model)?;
            let x = parse_symbols(&a.x, m.x_size(), "x")?;
            let y = parse_symbols(&a.y, m.y_size(), "y")?;
            let h = match a.h {
                Some(h) => h,
                None => entropy_rate_exact(&m)?.map_or(0.0, |e| e.value),
            };
            let t = density_trajectory(&m, &x, &y, h).map_err(CliError::core("density"))?;
            let d = *t.density.last().expect("nonempty");
            let mut rep = ExperimentReport::new("density", m.hash(), 0);
            rep.param("n", x.len())
                .param("x", format_symbols(&x, m.x_size()))
                .param("y", format_symbols(&y, m.y_size()))
                .param_f64("h", h);
            rep.stat("density_bits", d)
                .stat("conditional_probability", (-d).exp2())
                .stat("joint_log2", joint_log_prob(&m, &x, &y)?.bits())
                .stat("marginal_y_log2", y_marginal_log_prob(&m, &y)?.bits());
            for (i, (dt, st)) in t.density.iter().zip(&t.centered_path).enumerate() {
                rep.push_row(
                    "trajectory",
                    row([
                        ("t", Value::from(i + 1)),
                        ("density_bits", num(*dt)),
                        ("centered_path", num(*st)),
                    ]),
                );
            }
            emit(&rep, &a.out)
        }
        Command::Code(cmd) => code(cmd),
        Command::Lzsi(cmd) => lzsi(cmd),
        Command::Stats(cmd) => stats(cmd),
        Command::Verify(cmd) => verify(cmd),
        Command::Replay(a) => replay(a),
    }
}

fn model(cmd: ModelCmd) -> CliResult<u8> {
    match cmd {
        ModelCmd::Validate { model } => {
            let m = load_model(&model)?;
            let v = m.check_validity();
            println!(
                "valid: |X| = {}, |Y| = {}, order {}, {} states, hash {}",
                m.x_size(),
                m.y_size(),
                m.order(),
                m.states(),
                m.hash()
            );
            println!(
                "irreducible {}, aperiodic {}, all positive {}, assumption case {}",
                v.irreducible,
                v.aperiodic,
                v.all_positive,
                serde_json::to_value(v.assumption_m_case).expect("enum serializes")
            );
            Ok(EXIT_OK)
        }
        ModelCmd::Info { model, out } => {
            let m = load_model(&model)?;
            let mut rep = ExperimentReport::new("model_info", m.hash(), 0);
            rep.param("model", model.as_str())
                .param("x_alphabet", m.x_size())
                .param("y_alphabet", m.y_size())
                .param("order", m.order())
                .param("states", m.states());
            let v = serde_json::to_value(m.check_validity()).expect("validity serializes");
            for (k, val) in v.as_object().expect("struct").clone() {
                rep.stat_value(&k, val);
            }
            rep.stat("stationary_residual", m.stationary_residual());
            if let Some(h) = entropy_rate_exact(&m)? {
                rep.stat("entropy_rate", h.value).stat_value(
                    "entropy_rate_method",
                    serde_json::to_value(h.method).expect("enum serializes"),
                );
            }
            if let Ok((_, s2)) = memoryless_analytic(&m) {
                rep.stat("varentropy", s2);
            }
            for (h, p) in m.stationary().iter().enumerate() {
                let history: Vec<String> = m.history_symbols(h).iter().map(|s| s.to_string()).collect();
                rep.push_row(
                    "stationary",
                    row([
                        ("state", Value::from(h)),
                        ("history", Value::from(history.join(" "))),
                        ("probability", num(*p)),
                    ]),
                );
            }
            emit(&rep, &out)
        }
        ModelCmd::Preset { name } => {
            let m = presets::by_name(&name).ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown preset {name:?}; available: {}",
                    presets::NAMES.join(", ")
                ))
            })?;
            println!("{}", m.spec().to_json());
            Ok(EXIT_OK)
        }
    }
}

fn code(cmd: CodeCmd) -> CliResult<u8> {
    match cmd {
        CodeCmd::OptEncode { model, x, y, out } => {
            let m = load_model(&model)?;
            let x = parse_symbols(&x, m.x_size(), "x")?;
            let y = parse_symbols(&y, m.y_size(), "y")?;
            let c = encode_opt(&m, &x, &y).map_err(CliError::core("encoding"))?;
            let mut rep = ExperimentReport::new("opt_encode", m.hash(), 0);
            rep.param("x", format_symbols(&x, m.x_size()))
                .param("y", format_symbols(&y, m.y_size()));
            rep.stat_value("codeword", c.to_string())
                .stat("length", c.len() as f64)
                .stat("rank", c.rank()? as f64)
                .stat("density_bits", conditional_info_density(&m, &x, &y)?);
            eprintln!("codeword: {}", c.display());
            emit(&rep, &out)
        }
        CodeCmd::OptDecode {
            model,
            codeword,
            y,
            out,
        } => {
            let m = load_model(&model)?;
            let y = parse_symbols(&y, m.y_size(), "y")?;
            let c: Codeword = codeword
                .parse()
                .map_err(|_| CliError::Usage(format!("codeword {codeword:?} is not a string of 0s and 1s")))?;
            let x = decode_opt(&m, &c, &y).map_err(CliError::core("decoding"))?;
            let mut rep = ExperimentReport::new("opt_decode", m.hash(), 0);
            rep.param("codeword", c.to_string())
                .param("y", format_symbols(&y, m.y_size()));
            rep.stat_value("x", format_symbols(&x, m.x_size()))
                .stat("density_bits", conditional_info_density(&m, &x, &y)?);
            eprintln!("x: {}", format_symbols(&x, m.x_size()));
            emit(&rep, &out)
        }
        CodeCmd::Lengths { model, y, out } => {
            let m = load_model(&model)?;
            let y = parse_symbols(&y, m.y_size(), "y")?;
            let a = build_assignment(&m, &y).map_err(CliError::core("building the code"))?;
            let mut rep = ExperimentReport::new("code_lengths", m.hash(), 0);
            rep.param("y", format_symbols(&y, m.y_size())).param("n", y.len());
            let mut expected = 0.0;
            for (rank, &idx) in (1u64..).zip(&a.ranking) {
                let x = a.string_at(rank).expect("rank in range");
                let c = codeword_for_rank(rank);
                let p = a.probs[idx];
                expected += p * c.len() as f64;
                rep.push_row(
                    "codebook",
                    row([
                        ("rank", Value::from(rank)),
                        ("x", Value::from(format_symbols(&x, m.x_size()))),
                        ("codeword", Value::from(c.to_string())),
                        ("length", Value::from(c.len())),
                        ("probability", num(p)),
                    ]),
                );
                eprintln!(
                    "{:>6}  {}  {:<12} {}",
                    rank,
                    format_symbols(&x, m.x_size()),
                    c.display(),
                    num(p)
                );
            }
            rep.stat("expected_length", expected)
                .stat("strings", a.ranking.len() as f64);
            emit(&rep, &out)
        }
    }
}

fn lzsi(cmd: LzsiCmd) -> CliResult<u8> {
    match cmd {
        LzsiCmd::Encode {
            model,
            n,
            m,
            blocks,
            seed,
            out,
        } => {
            let pm = load_model(&model)?;
            if blocks == 0 {
                return Err(CliError::Usage("--blocks must be at least 1".into()));
            }
            let seed = resolve_seed(seed);
            let (xs, ys) = stationary_strings(&pm, m + n * blocks, seed, 0);
            let stream = LzsiStream::encode(&pm, &xs, &ys, m, n, seed).map_err(CliError::core("encoding"))?;
            let bytes = stream.to_bytes(pm.x_size());
            write_file(&out, &bytes)?;
            eprintln!(
                "{} blocks of {n}, {} escapes, {} payload bits, {} bytes written to {}",
                blocks,
                stream.escapes(),
                stream.payload_bits(pm.x_size()),
                bytes.len(),
                out.display()
            );
            Ok(EXIT_OK)
        }
        LzsiCmd::Decode { model, input } => {
            let pm = load_model(&model)?;
            let bytes = fs::read(&input).map_err(CliError::io(&input))?;
            let stream = LzsiStream::from_bytes(&bytes, &pm).map_err(CliError::core(input.display().to_string()))?;
            let h = stream.header;
            let (n, m) = (h.n as usize, h.m as usize);
            let (xs, ys) = stationary_strings(&pm, m + n * h.blocks as usize, h.seed, 0);
            let decoded = stream.decode(&pm, &xs[..m], &ys).map_err(CliError::core("decoding"))?;
            println!("{}", format_symbols(&decoded, pm.x_size()));
            if decoded == xs[m..] {
                eprintln!(
                    "decoded {} blocks; matches the stream regenerated from seed {}",
                    h.blocks, h.seed
                );
                Ok(EXIT_OK)
            } else {
                eprintln!(
                    "decoded string differs from the stream regenerated from seed {}",
                    h.seed
                );
                Ok(EXIT_VERDICT)
            }
        }
        LzsiCmd::Rate {
            n,
            m,
            samples,
            tolerance,
            common,
        } => run_experiment(
            Experiment::LzsiRate(LzsiConfig {
                n,
                m,
                samples,
                rate_tolerance: tolerance,
            }),
            &common,
        ),
    }
}

fn stats(cmd: StatsCmd) -> CliResult<u8> {
    match cmd {
        StatsCmd::Entropy {
            n,
            samples,
            method,
            common,
        } => run_experiment(Experiment::Entropy { n, samples, method }, &common),
        StatsCmd::Varentropy {
            n,
            samples,
            method,
            path_len,
            max_lag,
            window,
            common,
        } => run_experiment(
            Experiment::Varentropy {
                n,
                samples,
                method,
                path_len,
                max_lag,
                window,
            },
            &common,
        ),
    }
}

fn verify(cmd: VerifyCmd) -> CliResult<u8> {
    let (exp, common) = match cmd {
        VerifyCmd::Kac {
            x,
            y,
            replicas,
            m,
            common,
        } => {
            let model = load_model(&common.model)?;
            let x = parse_symbols(&x, model.x_size(), "x")?;
            let y = parse_symbols(&y, model.y_size(), "y")?;
            (Experiment::Kac { x, y, replicas, m }, common)
        }
        VerifyCmd::CltDensity {
            n,
            samples,
            centering,
            common,
        } => (Experiment::CltDensity { n, samples, centering }, common),
        VerifyCmd::CltCodelength {
            n,
            samples,
            taus,
            common,
        } => (Experiment::CltCodelength { n, samples, taus }, common),
        VerifyCmd::ZeroFluctuation { n, samples, common } => (Experiment::ZeroFluctuation { n, samples }, common),
        VerifyCmd::Lil {
            n_min,
            n_max,
            paths,
            band_lo,
            band_hi,
            check_symmetry,
            grid_per_decade,
            common,
        } => (
            Experiment::Lil(LilConfig {
                n_min,
                n_max,
                paths,
                band_lo,
                band_hi,
                check_symmetry,
                grid_per_decade,
            }),
            common,
        ),
        VerifyCmd::RecurrenceClt {
            n,
            samples,
            m,
            ks,
            max_truncation,
            chunk,
            common,
        } => (
            Experiment::RecurrenceClt(RecurrenceCltConfig {
                n,
                samples,
                m,
                ks_threshold: ks,
                max_truncation,
                chunk,
            }),
            common,
        ),
        VerifyCmd::Dispersion {
            n,
            samples,
            mode,
            rel_tol,
            common,
        } => (
            Experiment::Dispersion {
                n,
                samples,
                mode,
                rel_tol,
            },
            common,
        ),
        VerifyCmd::Converse {
            n_grid,
            taus,
            samples,
            common,
        } => (Experiment::Converse { n_grid, taus, samples }, common),
        VerifyCmd::FirstOrder {
            n_grid,
            paths,
            tolerance,
            lzsi_n,
            no_lzsi,
            lzsi_m,
            common,
        } => {
            let lzsi_n = if no_lzsi { Vec::new() } else { lzsi_n };
            (
                Experiment::FirstOrder(sideinfo_core::harness::FirstOrderConfig {
                    n_grid,
                    paths,
                    tolerance,
                    lzsi_n,
                    lzsi_m,
                }),
                common,
            )
        }
    };
    run_experiment(exp, &common)
}

fn build_config(command: Experiment, common: &CommonArgs, model: &PairModel) -> RunConfig {
    RunConfig {
        command,
        model: common.model.clone(),
        model_hash: model.hash().to_string(),
        seed: resolve_seed(common.seed),
        reference: ReferenceConfig {
            h: common.h,
            sigma2: common.sigma2,
            effort: common.effort(),
        },
    }
}

fn run_experiment(command: Experiment, common: &CommonArgs) -> CliResult<u8> {
    let model = load_model(&common.model)?;
    let cfg = build_config(command, common, &model);
    let rep = match execute(&cfg) {
        Ok(rep) => rep,
        Err(e) => {
            eprintln!("config:\n{}", cfg.to_json());
            return Err(e);
        }
    };
    let code = emit(&rep, &common.out)?;
    if code != EXIT_OK {
        eprintln!("config:\n{}", cfg.to_json());
    }
    Ok(code)
}

fn replay(a: ReplayArgs) -> CliResult<u8> {
    let text = fs::read_to_string(&a.file).map_err(CliError::io(&a.file))?;
    let cfg = RunConfig::from_json(&text)?;
    let rep = execute(&cfg)?;
    if a.check {
        let mut fresh = rep.to_json();
        fresh.push('\n');
        if fresh == text {
            eprintln!("replay of {} is byte-identical", a.file.display());
            return Ok(EXIT_OK);
        }
        let line = fresh
            .lines()
            .zip(text.lines())
            .position(|(p, q)| p != q)
            .map_or(0, |i| i + 1);
        eprintln!(
            "replay of {} differs (first difference near line {line})",
            a.file.display()
        );
        return Ok(EXIT_VERDICT);
    }
    emit(&rep, &a.out)
}

/// Map a result onto the process exit status, reporting errors.
pub fn finish(result: CliResult<u8>) -> u8 {
    match result {
        Ok(code) => code,
        Err(e) => {
            let mut msg = format!("error: {e}");
            let mut src = std::error::Error::source(&e);
            // the Core variant already prints its source
            if matches!(e, CliError::Core { .. } | CliError::Io { .. }) {
                src = src.and_then(std::error::Error::source);
            }
            while let Some(s) = src {
                msg.push_str(&format!(": {s}"));
                src = s.source();
            }
            eprintln!("{msg}");
            EXIT_USAGE
        }
    }
}
