use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::time::Instant;

use num_rational::BigRational;
use num_traits::One;
use physarum_core::dynamics::{read_trace_csv, write_trace_csv, ContinuousConfig, Integrator, Schedule};
use physarum_core::format::num;
use physarum_core::instances::{generate, GeneratorSpec, RandomLpSpec};
use physarum_core::invariants::{check_instance, check_trace, CheckOptions};
use physarum_core::linalg::f64_to_rational;
use physarum_core::model::{check_start, fraction, load_instance};
use physarum_core::oracle::OracleError;
use physarum_core::{
    compute_constants, enumerate_bfs, enumerate_dual_vertices, integrate_continuous, plan_steps, precondition, run,
    EnergySolver, LpInstance, Mode, OracleReport, RunConfig, TraceRecord, Verdict,
};

use crate::exit::{self, Failure};
use crate::{CheckArgs, Command, GenerateArgs, GeneratorKind, IntegratorArg, LowerboundArgs, ModeArg, SolveArgs, SolveMode};

pub fn dispatch(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Solve(args) => solve(&args),
        Command::Oracle { instance } => oracle(&instance),
        Command::Constants { instance } => constants(&instance),
        Command::Precondition { instance, out } => precondition_cmd(&instance, out.as_deref()),
        Command::Lowerbound(args) => lowerbound(&args),
        Command::Generate(args) => generate_cmd(&args),
        Command::Check(args) => check(&args),
    }
}

fn load(path: &Path) -> Result<(LpInstance, Vec<f64>), Failure> {
    let (inst, x0) = load_instance(path)?;
    let x0 = x0.unwrap_or_else(|| vec![1.0; inst.m()]);
    check_start(&x0, inst.m())?;
    Ok((inst, x0))
}

fn print_json(v: &serde_json::Value) {
    say!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn oracle_or_skip(inst: &LpInstance) -> Result<Option<OracleReport>, Failure> {
    match enumerate_bfs(inst) {
        Ok(r) => Ok(Some(r)),
        Err(e @ OracleError::SizeCap { .. }) => {
            eprintln!("note: oracle skipped: {e}");
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn write_trace(path: Option<&Path>, records: &[TraceRecord]) -> Result<(), Failure> {
    if let Some(path) = path {
        write_trace_csv(records, BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}

fn solve(args: &SolveArgs) -> Result<u8, Failure> {
    let (inst, x0) = load(&args.instance)?;
    let kind = args.mode.unwrap_or(match inst.mode() {
        Mode::Directed => SolveMode::Directed,
        Mode::Undirected => SolveMode::Undirected,
    });
    let mode = if kind == SolveMode::Directed { Mode::Directed } else { Mode::Undirected };
    let inst = inst.with_mode(mode);
    if !(args.eps > 0.0 && args.eps < 1.0) {
        return Err(Failure::invalid(format!("eps must lie in (0, 1), got {}", args.eps)));
    }
    let solver = EnergySolver::new(&inst)?;
    let report = if args.no_oracle { None } else { oracle_or_skip(&inst)? };
    let dual = enumerate_dual_vertices(&inst, mode);
    let started = Instant::now();
    let (verdict, x, iterations, records) = if kind == SolveMode::UndirectedContinuous {
        let mut cfg = ContinuousConfig::new(args.t_end, args.dt);
        cfg.method = match args.integrator {
            IntegratorArg::Rk4 => Integrator::Rk4,
            IntegratorArg::Euler => Integrator::Euler,
        };
        cfg.sample_stride = args.trace_stride;
        cfg.oracle = report.as_ref();
        cfg.dual = dual.as_ref().ok();
        let out = integrate_continuous(&inst, &solver, &x0, &cfg)?;
        let last = out.samples.last().expect("final sample");
        let converged = match last.dist_inf {
            Some(d) => d < args.eps,
            None => {
                let q = solver.solve(&out.x)?.q;
                out.x.iter().zip(&q).all(|(x, q)| (x - q.abs()).abs() < args.eps)
            }
        };
        let verdict = if converged { Verdict::Converged } else { Verdict::IterationCap };
        (verdict, out.x.clone(), last.iter, out.samples)
    } else {
        let consts = compute_constants(&inst, &x0);
        let schedule = if args.h == "auto" {
            let consts = consts.clone()?;
            let alpha0 = match &dual {
                Ok(set) => set.alpha_exact(&x0.iter().map(|&v| f64_to_rational(v)).collect::<Vec<_>>()).0,
                Err(_) if args.assume_feasible => BigRational::one(),
                Err(e) => return Err(e.clone().into()),
            };
            let (ratio, phi) = if args.use_oracle_phi {
                let r = report
                    .as_ref()
                    .ok_or_else(|| Failure::invalid("--use-oracle-phi needs the oracle"))?;
                (r.phi_over_opt(), r.phi.clone())
            } else {
                (None, None)
            };
            let plan = plan_steps(&consts, &x0, &alpha0, ratio.as_ref(), phi.as_ref(), args.eps)?;
            say!("regime: {}", plan.regime);
            say!("phase1_step: {}", num(plan.h));
            say!("phase1_steps: {}", plan.phase1_steps);
            say!("phase2_step: {}", num(plan.phase2_step));
            Schedule::Plan(plan)
        } else {
            let h: f64 = args.h.parse().map_err(|_| Failure::invalid(format!("invalid step size {:?}", args.h)))?;
            if !(h > 0.0 && h < 1.0) {
                return Err(Failure::invalid(format!("h must lie in (0, 1), got {h}")));
            }
            Schedule::Constant(h)
        };
        let mut cfg = RunConfig::new(mode, schedule, args.eps, args.max_iters);
        cfg.trace_stride = args.trace_stride;
        cfg.oracle = report.as_ref();
        cfg.dual = dual.as_ref().ok();
        cfg.psi0 = consts.ok().map(|k| physarum_core::linalg::rational_to_f64(&k.psi0));
        let out = run(&inst, &solver, &x0, &cfg)?;
        (out.verdict, out.state.x, out.state.iter, out.trace)
    };
    write_trace(args.trace.as_deref(), &records)?;
    let last = records.last().expect("final record");
    say!("verdict: {verdict}");
    say!("iterations: {iterations}");
    say!("cost: {}", num(last.cost));
    say!("residual_inf: {}", num(last.residual_inf));
    if let Some(d) = last.dist_inf {
        say!("dist_inf: {}", num(d));
    }
    if let Some(r) = &report {
        say!("opt: {}", fraction(&r.opt));
    }
    say!("x: [{}]", x.iter().map(|v| num(*v)).collect::<Vec<_>>().join(", "));
    say!("wall_time_s: {}", num(started.elapsed().as_secs_f64()));
    Ok(match verdict {
        Verdict::Converged => exit::CONVERGED,
        Verdict::IterationCap => exit::ITERATION_CAP,
        Verdict::Diverged => exit::DYNAMICS,
    })
}

fn oracle(path: &Path) -> Result<u8, Failure> {
    let (inst, _) = load(path)?;
    print_json(&enumerate_bfs(&inst)?.to_json());
    Ok(exit::CONVERGED)
}

fn constants(path: &Path) -> Result<u8, Failure> {
    let (inst, x0) = load(path)?;
    let k = compute_constants(&inst, &x0)?;
    let mut v = k.to_json();
    v["n"] = inst.n().into();
    v["m"] = inst.m().into();
    v["dropped_rows"] = inst.dropped_rows().into();
    print_json(&v);
    Ok(exit::CONVERGED)
}

fn precondition_cmd(path: &Path, out: Option<&Path>) -> Result<u8, Failure> {
    let (inst, x0) = load(path)?;
    let pre = precondition(&inst, &x0)?;
    let text = pre.instance.to_json(Some(pre.x0.clone()));
    let summary = format!("c_prime: {}\nz0: {}", pre.c_prime, fraction(&pre.z0));
    match out {
        Some(p) => {
            std::fs::write(p, text + "\n")?;
            say!("{summary}");
        }
        None => {
            say!("{text}");
            eprintln!("{summary}");
        }
    }
    Ok(exit::CONVERGED)
}

fn lowerbound(args: &LowerboundArgs) -> Result<u8, Failure> {
    if args.opt < 1 || args.phi < 1 {
        return Err(Failure::invalid("opt and phi must be positive integers"));
    }
    if !(args.h > 0.0 && args.h <= 0.5) {
        return Err(Failure::invalid(format!("h must lie in (0, 1/2], got {}", args.h)));
    }
    if args.eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Failure::invalid("every eps must lie in (0, 1)"));
    }
    let g = generate(&GeneratorSpec::ThmOne { opt: args.opt, phi: args.phi })?;
    let solver = EnergySolver::new(&g.instance)?;
    let x0 = g.x0.expect("start");
    let (opt, phi, h) = (args.opt as f64, args.phi as f64, args.h);
    let mut stepper = physarum_core::dynamics::Stepper::new(&solver);
    let mut x = x0;
    let mut first: Vec<Option<u64>> = vec![None; args.eps.len()];
    let (mut drift, mut envelope_ok) = (0.0f64, true);
    let mut k = 0u64;
    while first.iter().any(Option::is_none) && k < args.max_iters {
        stepper.solve(&x)?;
        stepper.blend(&mut x, h, true);
        k += 1;
        drift = drift.max((x[0] + x[1] - 1.0).abs());
        envelope_ok &= x[1] >= 0.5 * (-2.0 * k as f64 * h * phi / (opt + phi)).exp() * (1.0 - 1e-12);
        for (f, &e) in first.iter_mut().zip(&args.eps) {
            if f.is_none() && x[1] <= e {
                *f = Some(k);
            }
        }
    }
    say!("eps,k_lb,k_observed,holds");
    let mut all = true;
    for (f, &e) in first.iter().zip(&args.eps) {
        let k_lb = 1.0 / (2.0 * h) * (opt / phi).max(1.0) * (2.0 / e).ln();
        let holds = f.map_or(true, |k| k as f64 >= k_lb);
        all &= holds;
        let obs = f.map_or_else(|| "none".to_string(), |k| k.to_string());
        say!("{},{},{},{}", num(e), num(k_lb), obs, holds);
    }
    say!("max_mass_drift: {}", num(drift));
    say!("lower_envelope_holds: {envelope_ok}");
    if first.iter().any(Option::is_none) {
        return Ok(exit::ITERATION_CAP);
    }
    Ok(if all && envelope_ok && drift <= 1e-12 { exit::CONVERGED } else { exit::CHECK_FAILED })
}

fn generate_cmd(args: &GenerateArgs) -> Result<u8, Failure> {
    let mode = match args.mode {
        Some(ModeArg::Undirected) => Mode::Undirected,
        _ => Mode::Directed,
    };
    let spec = match args.kind {
        GeneratorKind::ShortestPath => GeneratorSpec::ShortestPath {
            nodes: args.nodes,
            edges: args.edges,
            max_cost: args.max_cost,
            mode,
            seed: args.seed,
        },
        GeneratorKind::Transshipment => GeneratorSpec::Transshipment {
            nodes: args.nodes,
            edges: args.edges,
            max_cost: args.max_cost,
            max_supply: args.max_supply,
            seed: args.seed,
        },
        GeneratorKind::RandomPositiveLp => {
            let mut s = RandomLpSpec::new(args.n, args.m, args.seed);
            s.mode = mode;
            s.unique_optimum = args.unique_optimum;
            s.c_range = (1, args.max_cost.max(1));
            GeneratorSpec::RandomPositiveLp(s)
        }
        GeneratorKind::ThmOne => GeneratorSpec::ThmOne { opt: args.opt, phi: args.phi },
        GeneratorKind::Triangle => GeneratorSpec::Triangle,
        GeneratorKind::ZeroCostDemo => GeneratorSpec::ZeroCostDemo,
    };
    let g = generate(&spec)?;
    let inst = if args.mode.is_some() { g.instance.with_mode(mode) } else { g.instance };
    let text = inst.to_json(g.x0);
    match &args.out {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => say!("{text}"),
    }
    Ok(exit::CONVERGED)
}

fn check(args: &CheckArgs) -> Result<u8, Failure> {
    let (inst, x0) = load(&args.instance)?;
    let opts = CheckOptions { x0: Some(x0), seed: args.seed, ..CheckOptions::default() };
    let mut summary = check_instance(&inst, &opts);
    if let Some(path) = &args.trace {
        let records = read_trace_csv(BufReader::new(File::open(path)?))?;
        summary.checks.push(check_trace(&records, args.h));
    }
    print_json(&summary.to_json());
    Ok(if summary.passed() { exit::CONVERGED } else { exit::CHECK_FAILED })
}
