use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dgs_cli::dsl;
use dgs_cli::run::{error_json, run, Command, Failure};

/// Exact computations with semi-free dg algebras over ℚ.
///
/// Exit status: 0 pass, 1 mathematical failure, 2 input error.
/// `DGS_THREADS` caps the number of worker threads.
#[derive(Parser, Debug)]
#[command(name = "dgs", version)]
struct Cli {
    /// Emit the structured report as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Parse and validate a manifest; checks gluing data for strictness.
    Check { manifest: String },
    /// h^n as modules over h^0 on a window.
    Cohomology {
        manifest: String,
        algebra: String,
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
    },
    /// Relations presenting h^0.
    Truncate { manifest: String, algebra: String },
    /// h_l of the derivation complex of C->B along a map out of B.
    Tangent {
        manifest: String,
        arrow: String,
        #[arg(long)]
        at: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        level: Option<i32>,
    },
    /// Homotopy groups of the mapping space at a point.
    Pi {
        manifest: String,
        arrow: String,
        #[arg(long)]
        at: String,
        #[arg(long, allow_hyphen_values = true)]
        level: i32,
    },
    /// Whether C->B is étale.
    Etale { manifest: String, arrow: String },
    /// Whether C->B is the open immersion inverting the witness.
    OpenImmersion {
        manifest: String,
        arrow: String,
        #[arg(long)]
        witness: String,
    },
    /// B ⊗_A C.
    Tensor {
        manifest: String,
        left: String,
        right: String,
        #[arg(long)]
        over: String,
    },
    /// Regularity of the sequence defining a Koszul algebra.
    Koszul { manifest: String, algebra: String },
    /// Čech cohomology of a module on a cover.
    Cech {
        manifest: String,
        cover: String,
        module: String,
        #[arg(long, allow_hyphen_values = true)]
        p: i32,
    },
    /// Descent for maps out of B along a cover of the target.
    DescentCheck {
        manifest: String,
        arrow: String,
        cover: String,
        #[arg(long)]
        at: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        level: Option<i32>,
    },
    /// Glue chart algebras stage by stage.
    Glue {
        manifest: String,
        cover: String,
        gluing: String,
        #[arg(long, allow_hyphen_values = true)]
        budget: i32,
        /// Also certify that the glued h^n is not free.
        #[arg(long, allow_hyphen_values = true)]
        nonfree: Option<i32>,
    },
    /// Amplitude of the reduced cotangent complex.
    Amplitude { manifest: String, arrow: String },
    /// Two-term obstruction data.
    Obstruction { manifest: String, arrow: String },
}

impl Cmd {
    fn split(self) -> (String, Command) {
        match self {
            Cmd::Check { manifest } => (manifest, Command::Check),
            Cmd::Cohomology { manifest, algebra, window } => (manifest, Command::Cohomology { algebra, window }),
            Cmd::Truncate { manifest, algebra } => (manifest, Command::Truncate { algebra }),
            Cmd::Tangent { manifest, arrow, at, level } => (manifest, Command::Tangent { arrow, at, level }),
            Cmd::Pi { manifest, arrow, at, level } => (manifest, Command::Pi { arrow, at, level }),
            Cmd::Etale { manifest, arrow } => (manifest, Command::Etale { arrow }),
            Cmd::OpenImmersion { manifest, arrow, witness } => (manifest, Command::OpenImmersion { arrow, witness }),
            Cmd::Tensor { manifest, left, right, over } => (manifest, Command::Tensor { left, right, over }),
            Cmd::Koszul { manifest, algebra } => (manifest, Command::Koszul { algebra }),
            Cmd::Cech { manifest, cover, module, p } => (manifest, Command::Cech { cover, module, p }),
            Cmd::DescentCheck { manifest, arrow, cover, at, level } => {
                (manifest, Command::DescentCheck { arrow, cover, at, level })
            }
            Cmd::Glue { manifest, cover, gluing, budget, nonfree } => {
                (manifest, Command::Glue { cover, gluing, budget, nonfree })
            }
            Cmd::Amplitude { manifest, arrow } => (manifest, Command::Amplitude { arrow }),
            Cmd::Obstruction { manifest, arrow } => (manifest, Command::Obstruction { arrow }),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let json = cli.json;
    let (path, cmd) = cli.cmd.split();
    let name = cmd.name();
    let inputs = vec![path.clone()];
    let outcome = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Input(format!("{}: {}", path, e)))
        .and_then(|src| dsl::parse(&src).map_err(|e| Failure::Input(format!("{}:{}", path, e))))
        .and_then(|m| run(&m, &cmd));
    match outcome {
        Ok(mut r) => {
            r.inputs.insert(0, path);
            if json {
                println!("{}", serde_json::to_string_pretty(&r.to_json()).unwrap());
            } else {
                print!("{}", r.to_text());
            }
            ExitCode::from(r.exit_code() as u8)
        }
        Err(f) => {
            let code = match f {
                Failure::Input(_) => 2,
                Failure::Math(_) => 1,
            };
            if json {
                println!("{}", serde_json::to_string_pretty(&error_json(name, &inputs, &f)).unwrap());
            }
            match &f {
                Failure::Input(m) => eprintln!("input error: {}", m),
                Failure::Math(m) => eprintln!("failure: {}", m),
            }
            ExitCode::from(code)
        }
    }
}
