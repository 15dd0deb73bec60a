//! Command-line surface: mesh generation, constant estimation, kernel and
//! axis analysis, flow invariance checks, identity checks and elasticity
//! solves, each emitting a machine-readable report.

mod report;
mod spec;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde_json::Value;

use kornlab::elasticity::solve_equilibrium;
use kornlab::fem::interpolate;
use kornlab::flow::{integrate_flow, FlowTrace};
use kornlab::geometry::{
    generate_mesh, load_mesh, save_mesh, DomainKind, DomainSpec, FacetLabel, LabelRule, Mesh,
};
use kornlab::rigid::{classify_mixed, compute_constant_kernel, compute_kernel_k, detect_axis};
use kornlab::spectra::{
    infsup_constant, korn_first_constant, korn_nobc_constant, korn_second_constant,
    poincare_elasticity_constant, poincare_mixed_constant, ConstantReport, EstimatorOptions,
};

use report::{num, object, vec_f64, Report};

#[derive(Parser)]
#[command(name = "kornlab", version, about = "Korn/Poincaré/inf-sup constant laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mesh operations.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
    /// Estimate an inequality constant on a mesh.
    Constants {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Boundary-condition kernel, axis detection and mixed classification.
    Kernel {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Tolerance for the per-facet classification of the extracted
        /// motion; looser than `tol` because the motion itself carries the
        /// kernel-detection noise.
        #[arg(long, default_value_t = 1e-6)]
        classify_tol: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Integrate the flow of a rigid-motion field.
    Flow {
        #[arg(long)]
        field: String,
        #[arg(long)]
        start: String,
        #[arg(long = "T")]
        t_final: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        boundary: Option<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check the second-derivative identity on random polynomial fields.
    Identity {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        degree: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve the rigid-orthogonal elasticity problem for a load field.
    Solve {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        load: String,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Generate a catalog mesh.
    Gen {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "all-t")]
        labels: String,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Korn1,
    #[value(name = "korn1-nobc")]
    Korn1Nobc,
    Korn2,
    Poincare,
    #[value(name = "poincare-ela")]
    PoincareEla,
    Infsup,
}

/// Exit code classes: 1 validation, 2 numerical failure.
enum Failure {
    Validation(String),
    Numerical(String),
}

impl From<kornlab::Error> for Failure {
    fn from(e: kornlab::Error) -> Failure {
        match e {
            kornlab::Error::NoConvergence { .. } => Failure::Numerical(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<String> for Failure {
    fn from(msg: String) -> Failure {
        Failure::Validation(msg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command_echo = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    match run(cli.command, command_echo) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_mesh(path: &PathBuf) -> Result<(Mesh, Vec<u8>), Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Failure::Validation("mesh file is not UTF-8".into()))?;
    let mesh = load_mesh(&text)?;
    Ok((mesh, bytes))
}

fn write_output(path: Option<&PathBuf>, report: &Report) -> Result<(), Failure> {
    report.validate().map_err(Failure::Validation)?;
    let text = report.to_text();
    match path {
        Some(p) => fs::write(p, &text)
            .map_err(|e| Failure::Validation(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_csv(path: &PathBuf, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .map_err(|e| Failure::Validation(format!("cannot write {}: {e}", path.display())))
}

fn run(command: Command, echo: String) -> Result<(), Failure> {
    let started = Instant::now();
    match command {
        Command::Mesh {
            command: MeshCommand::Gen {
                domain,
                n,
                labels,
                output,
            },
        } => {
            let spec = DomainSpec {
                kind: DomainKind::parse(&domain)?,
                refinement: n,
                labels: LabelRule::parse(&labels)?,
            };
            let mesh = generate_mesh(&spec)?;
            fs::write(&output, save_mesh(&mesh))
                .map_err(|e| Failure::Validation(format!("cannot write mesh: {e}")))?;
            println!(
                "wrote {}: dim {}, {} vertices, {} cells, {} boundary facets",
                output.display(),
                mesh.dim(),
                mesh.vertices().len(),
                mesh.cells().len(),
                mesh.boundary_facets().len()
            );
            Ok(())
        }

        Command::Constants {
            mesh,
            which,
            tol,
            seed,
            csv,
            output,
        } => {
            let (m, bytes) = read_mesh(&mesh)?;
            let opts = EstimatorOptions {
                tol,
                seed,
                ..EstimatorOptions::default()
            };
            let (name, r): (&str, ConstantReport) = match which {
                Which::Korn1 => ("korn1", korn_first_constant(&m, &opts)?),
                Which::Korn1Nobc => ("korn1-nobc", korn_nobc_constant(&m, &opts)?),
                Which::Korn2 => ("korn2", korn_second_constant(&m, &opts)?),
                Which::Poincare => ("poincare", poincare_mixed_constant(&m, &opts)?),
                Which::PoincareEla => ("poincare-ela", poincare_elasticity_constant(&m, &opts)?),
                Which::Infsup => ("infsup", infsup_constant(&m, &opts)?),
            };
            let mut entries = vec![
                ("which", Value::String(name.into())),
                ("constant", num(r.constant)),
                ("lambda", num(r.spectral.lambda)),
                ("residual", num(r.spectral.residual)),
                ("iterations", Value::from(r.spectral.iterations)),
                ("kernel_dim", Value::from(r.kernel_dim)),
                ("constant_dim", Value::from(r.constant_dim)),
                ("reduced_dim", Value::from(r.reduced_dim)),
            ];
            if let Some(ok) = r.sqrt_n_bound_ok {
                entries.push(("sqrt_n_bound_ok", Value::Bool(ok)));
            }
            if matches!(which, Which::Korn2) {
                // the sum form holds with the same constant
                entries.push(("sum_form_bound", num(r.constant)));
            }
            let results = object(entries);
            if let Some(p) = &csv {
                let csv_text = format!(
                    "which,vertices,constant,lambda,residual\n{},{},{:.17e},{:.17e},{:.17e}\n",
                    name,
                    m.vertices().len(),
                    r.constant,
                    r.spectral.lambda,
                    r.spectral.residual
                );
                write_csv(p, &csv_text)?;
            }
            let report = Report::new(echo, &bytes, results, started.elapsed().as_millis());
            write_output(output.as_ref(), &report)
        }

        Command::Kernel {
            mesh,
            tol,
            classify_tol,
            csv,
            output,
        } => {
            let (m, bytes) = read_mesh(&mesh)?;
            let kernel = compute_kernel_k(&m, tol)?;
            let constants = compute_constant_kernel(&m, tol)?;
            let mut entries = vec![
                ("kernel_dim", Value::from(kernel.kernel_dim())),
                ("tolerance", num(kernel.tolerance)),
                (
                    "singular_values",
                    vec_f64(&kernel.singular_values),
                ),
                ("residuals", vec_f64(&kernel.residuals)),
                (
                    "basis",
                    Value::Array(
                        kernel
                            .basis
                            .iter()
                            .map(|motion| {
                                object(vec![
                                    (
                                        "S",
                                        Value::Array(
                                            motion
                                                .spin_matrix()
                                                .row_iter()
                                                .map(|row| {
                                                    vec_f64(&row.iter().cloned().collect::<Vec<_>>())
                                                })
                                                .collect(),
                                        ),
                                    ),
                                    ("a", vec_f64(motion.shift().as_slice())),
                                ])
                            })
                            .collect(),
                    ),
                ),
                (
                    "constant_kernel",
                    Value::Array(constants.iter().map(|v| vec_f64(v.as_slice())).collect()),
                ),
            ];

            let mut classification = None;
            if kernel.kernel_dim() >= 1 && m.dim() == 3 {
                let motion = &kernel.basis[0];
                match detect_axis(motion) {
                    Ok(axis) => {
                        entries.push((
                            "axis",
                            object(vec![
                                ("direction", vec_f64(axis.direction.as_slice())),
                                ("point", vec_f64(axis.point.as_slice())),
                                ("valid", Value::Bool(axis.valid)),
                            ]),
                        ));
                        let classes = classify_mixed(&m, motion, classify_tol)?;
                        let all_pass = classes.iter().all(|c| c.pass);
                        let worst = classes.iter().map(|c| c.residual).fold(0.0, f64::max);
                        entries.push((
                            "classification",
                            object(vec![
                                ("all_pass", Value::Bool(all_pass)),
                                (
                                    "pass_count",
                                    Value::from(classes.iter().filter(|c| c.pass).count()),
                                ),
                                ("facet_count", Value::from(classes.len())),
                                ("worst_residual", num(worst)),
                            ]),
                        ));
                        classification = Some(classes);
                    }
                    Err(kornlab::Error::NoAxis) => {
                        entries.push(("axis", Value::Null));
                    }
                    Err(e) => return Err(e.into()),
                }
            }

            if let Some(p) = &csv {
                let mut text = String::from("facet,label,pass,residual\n");
                for (f, facet) in m.boundary_facets().iter().enumerate() {
                    let label = match facet.label {
                        FacetLabel::Tangential => "t",
                        FacetLabel::Normal => "n",
                    };
                    match &classification {
                        Some(classes) => {
                            let c = &classes[f];
                            text.push_str(&format!(
                                "{f},{label},{},{:.17e}\n",
                                c.pass, c.residual
                            ));
                        }
                        None => text.push_str(&format!("{f},{label},,\n")),
                    }
                }
                write_csv(p, &text)?;
            }

            let report = Report::new(echo, &bytes, object(entries), started.elapsed().as_millis());
            write_output(output.as_ref(), &report)
        }

        Command::Flow {
            field,
            start,
            t_final,
            dt,
            boundary,
            csv,
            output,
        } => {
            let parsed = spec::parse_field(&field)?;
            let motion = parsed.as_rigid()?;
            let p = DVector::from_vec(spec::parse_numbers(&start)?);
            let descriptor = boundary
                .as_deref()
                .map(spec::parse_boundary)
                .transpose()?;
            let trace = integrate_flow(motion, &p, t_final, dt, descriptor.as_ref())?;
            let digest_src = format!("{field}|{start}|{t_final}|{dt}|{boundary:?}");
            let mut entries = vec![
                ("endpoint", vec_f64(trace.endpoint().as_slice())),
                ("closure_error", num(trace.closure_error.unwrap_or(f64::NAN))),
                ("steps", Value::from(trace.times.len() - 1)),
                (
                    "dt_effective",
                    num(trace.times[1] - trace.times[0]),
                ),
            ];
            if let Some(d) = trace.max_deviation {
                entries.push(("max_deviation", num(d)));
            }
            if let Some(pth) = &csv {
                write_csv(pth, &trace_csv(&trace, descriptor.as_ref()))?;
            }
            let report = Report::new(
                echo,
                digest_src.as_bytes(),
                object(entries),
                started.elapsed().as_millis(),
            );
            write_output(output.as_ref(), &report)
        }

        Command::Identity {
            dim,
            degree,
            trials,
            seed,
            output,
        } => {
            use kornlab::calculus::{
                check_identity, check_identity_fd, check_laplacian_identity, PolyField,
            };
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut max_residual = 0.0_f64;
            let mut max_laplacian = 0.0_f64;
            let mut fd_field = None;
            for _ in 0..trials.max(1) {
                let field = PolyField::random(dim, degree, &mut rng)?;
                max_residual = max_residual.max(check_identity(&field));
                max_laplacian = max_laplacian.max(check_laplacian_identity(&field));
                fd_field.get_or_insert(field);
            }
            // finite-difference convergence probe on a trigonometric field
            let trig = |x: &[f64]| -> Vec<f64> {
                let mut v = vec![x[1].sin(); 1];
                v.resize(dim, 0.0);
                v
            };
            let h = 1e-2;
            let r_h = check_identity_fd(&trig, dim, h)?;
            let r_h2 = check_identity_fd(&trig, dim, h / 2.0)?;
            let results = object(vec![
                ("dim", Value::from(dim)),
                ("degree", Value::from(degree)),
                ("trials", Value::from(trials)),
                ("max_residual", num(max_residual)),
                ("laplacian_max_residual", num(max_laplacian)),
                (
                    "fd",
                    object(vec![
                        ("h", num(h)),
                        ("residual", num(r_h)),
                        ("residual_half_h", num(r_h2)),
                        ("ratio", num(r_h / r_h2)),
                    ]),
                ),
            ]);
            let digest_src = format!("identity|{dim}|{degree}|{trials}|{seed}");
            let report = Report::new(
                echo,
                digest_src.as_bytes(),
                results,
                started.elapsed().as_millis(),
            );
            write_output(output.as_ref(), &report)?;
            if max_residual > 1e-12 {
                return Err(Failure::Numerical(format!(
                    "identity residual {max_residual:e} exceeds 1e-12"
                )));
            }
            Ok(())
        }

        Command::Solve {
            mesh,
            load,
            csv,
            output,
        } => {
            let (m, bytes) = read_mesh(&mesh)?;
            let load_field = spec::parse_field(&load)?;
            if load_field.dim() != m.dim() {
                return Err(Failure::Validation(format!(
                    "load field dimension {} vs mesh dimension {}",
                    load_field.dim(),
                    m.dim()
                )));
            }
            let f = interpolate(&m, |x| load_field.evaluate(x));
            let sol = solve_equilibrium(&m, &f)?;
            if sol.residual > 1e-8 {
                return Err(Failure::Numerical(format!(
                    "solver residual {:e} exceeds 1e-8",
                    sol.residual
                )));
            }
            if let Some(p) = &csv {
                let dim = m.dim();
                let mut text = String::from("vertex");
                for a in 0..dim {
                    text.push_str(&format!(",x{}", a + 1));
                }
                for a in 0..dim {
                    text.push_str(&format!(",u{}", a + 1));
                }
                text.push('\n');
                for (i, v) in m.vertices().iter().enumerate() {
                    text.push_str(&i.to_string());
                    for a in 0..dim {
                        text.push_str(&format!(",{:.17e}", v[a]));
                    }
                    for a in 0..dim {
                        text.push_str(&format!(",{:.17e}", sol.displacement[dim * i + a]));
                    }
                    text.push('\n');
                }
                write_csv(p, &text)?;
            }
            let results = object(vec![
                ("energy", num(sol.energy)),
                ("residual", num(sol.residual)),
                (
                    "removed_rigid_component",
                    num(sol.removed_rigid_component),
                ),
                ("displacement_norm", num(sol.displacement.norm())),
            ]);
            let report = Report::new(echo, &bytes, results, started.elapsed().as_millis());
            write_output(output.as_ref(), &report)
        }
    }
}

fn trace_csv(trace: &FlowTrace, boundary: Option<&kornlab::geometry::AnalyticBoundary>) -> String {
    let dim = trace.points[0].len();
    let mut text = String::from("t");
    for a in 0..dim {
        text.push_str(&format!(",x{}", a + 1));
    }
    text.push_str(",signed_distance\n");
    for (t, p) in trace.times.iter().zip(&trace.points) {
        text.push_str(&format!("{t:.17e}"));
        for a in 0..dim {
            text.push_str(&format!(",{:.17e}", p[a]));
        }
        match boundary {
            Some(b) => text.push_str(&format!(",{:.17e}\n", b.signed_distance(p))),
            None => text.push_str(",\n"),
        }
    }
    text
}
