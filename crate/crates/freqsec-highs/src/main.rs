//! Thin command-line wrapper around the HiGHS solver.
//!
//! Usage: `freqsec-highs MODEL.mps --out SOLUTION.txt [--time-limit SECS]
//! [--mip-gap FRAC]`
//!
//! Reads a (free or fixed) MPS file, solves it single-threaded with logging
//! off, and writes a flat solution file:
//!
//! ```text
//! status optimal
//! rows 3
//! cols 2
//! nonzeros 5
//! objective 2.800000000000e1
//! x1 7.000000000000e0
//! ...
//! ```
//!
//! `rows/cols/nonzeros` describe the model as parsed (before presolve), so
//! callers can cross-check their export. `status feasible` means the time
//! limit was hit with an incumbent available; its values are still printed.
//!
//! Exit code 0 whenever a status could be determined (including infeasible —
//! the caller reads the status line); 1 on usage or solver-setup errors.

use std::ffi::{CStr, CString};
use std::fmt::Write as _;
use std::process::ExitCode;

use highs_sys::*;

struct Args {
    model: String,
    out: String,
    time_limit: Option<f64>,
    mip_gap: Option<f64>,
}

fn parse_args() -> Result<Args, String> {
    let mut model = None;
    let mut out = None;
    let mut time_limit = None;
    let mut mip_gap = None;
    let mut argv = std::env::args().skip(1);
    while let Some(arg) = argv.next() {
        match arg.as_str() {
            "--out" => out = Some(argv.next().ok_or("--out needs a path")?),
            "--time-limit" => {
                let v = argv.next().ok_or("--time-limit needs a value")?;
                time_limit = Some(v.parse().map_err(|_| format!("bad --time-limit '{v}'"))?);
            }
            "--mip-gap" => {
                let v = argv.next().ok_or("--mip-gap needs a value")?;
                mip_gap = Some(v.parse().map_err(|_| format!("bad --mip-gap '{v}'"))?);
            }
            other if other.starts_with("--") => return Err(format!("unknown flag '{other}'")),
            other => {
                if model.replace(other.to_string()).is_some() {
                    return Err("more than one model path given".into());
                }
            }
        }
    }
    Ok(Args {
        model: model.ok_or("usage: freqsec-highs MODEL.mps --out SOLUTION.txt")?,
        out: out.ok_or("--out SOLUTION.txt is required")?,
        time_limit,
        mip_gap,
    })
}

fn status_word(model_status: HighsInt) -> &'static str {
    match model_status {
        // An empty model is trivially optimal with objective 0.
        MODEL_STATUS_OPTIMAL | MODEL_STATUS_MODEL_EMPTY => "optimal",
        MODEL_STATUS_INFEASIBLE => "infeasible",
        MODEL_STATUS_UNBOUNDED | MODEL_STATUS_UNBOUNDED_OR_INFEASIBLE => "unbounded",
        MODEL_STATUS_REACHED_TIME_LIMIT => "time-limit",
        _ => "unknown",
    }
}

fn main() -> ExitCode {
    let args = match parse_args() {
        Ok(args) => args,
        Err(msg) => {
            eprintln!("freqsec-highs: {msg}");
            return ExitCode::FAILURE;
        }
    };

    // SAFETY: standard HiGHS C API call sequence on a single handle; every
    // CString outlives the call it is passed to, and buffers handed to HiGHS
    // are sized per the API contract (kHighsMaximumStringLength for names).
    unsafe {
        let highs = Highs_create();
        let set_bool = |h, name: &str, v: HighsInt| {
            let name = CString::new(name).unwrap();
            Highs_setBoolOptionValue(h, name.as_ptr(), v)
        };
        let set_int = |h, name: &str, v: HighsInt| {
            let name = CString::new(name).unwrap();
            Highs_setIntOptionValue(h, name.as_ptr(), v)
        };
        let set_double = |h, name: &str, v: f64| {
            let name = CString::new(name).unwrap();
            Highs_setDoubleOptionValue(h, name.as_ptr(), v)
        };
        // FREQSEC_HIGHS_LOG=1 keeps HiGHS logging on (reader/solver
        // diagnostics); off by default so the solution file is the interface.
        let log = std::env::var_os("FREQSEC_HIGHS_LOG").is_some_and(|v| v == "1");
        set_bool(highs, "output_flag", HighsInt::from(log));
        set_int(highs, "threads", 1);
        if let Some(t) = args.time_limit {
            set_double(highs, "time_limit", t);
        }
        if let Some(g) = args.mip_gap {
            set_double(highs, "mip_rel_gap", g);
        }

        let path = match CString::new(args.model.as_str()) {
            Ok(p) => p,
            Err(_) => {
                eprintln!("freqsec-highs: model path contains a NUL byte");
                Highs_destroy(highs);
                return ExitCode::FAILURE;
            }
        };
        // The reader returns a warning (not OK) when it drops coefficients
        // below its tolerance; only a hard error means the model is unusable.
        if Highs_readModel(highs, path.as_ptr()) == STATUS_ERROR {
            eprintln!("freqsec-highs: cannot read model '{}'", args.model);
            Highs_destroy(highs);
            return ExitCode::FAILURE;
        }
        // Input dimensions, captured before the run so they describe the
        // model as parsed rather than the presolved one.
        let in_rows = Highs_getNumRow(highs);
        let in_cols = Highs_getNumCol(highs);
        let in_nz = Highs_getNumNz(highs);
        let run_status = Highs_run(highs);
        if run_status == STATUS_ERROR {
            eprintln!("freqsec-highs: solve failed");
            Highs_destroy(highs);
            return ExitCode::FAILURE;
        }
        let model_status = Highs_getModelStatus(highs);
        let mut word = status_word(model_status);
        if word == "time-limit" {
            let mut primal_status: HighsInt = SOLUTION_STATUS_NONE;
            let info = CString::new("primal_solution_status").unwrap();
            Highs_getIntInfoValue(highs, info.as_ptr(), &mut primal_status);
            if primal_status == SOLUTION_STATUS_FEASIBLE {
                word = "feasible";
            }
        }

        let mut report = String::new();
        let _ = writeln!(report, "status {word}");
        let _ = writeln!(report, "rows {in_rows}");
        let _ = writeln!(report, "cols {in_cols}");
        let _ = writeln!(report, "nonzeros {in_nz}");
        if word == "optimal" || word == "feasible" {
            let mut objective = 0.0;
            let info = CString::new("objective_function_value").unwrap();
            Highs_getDoubleInfoValue(highs, info.as_ptr(), &mut objective);
            let _ = writeln!(report, "objective {objective:.12e}");

            let num_col = Highs_getNumCol(highs);
            let mut values = vec![0.0f64; num_col as usize];
            Highs_getSolution(
                highs,
                values.as_mut_ptr(),
                std::ptr::null_mut(),
                std::ptr::null_mut(),
                std::ptr::null_mut(),
            );
            let mut name_buf = vec![0i8; 512];
            for (col, value) in values.iter().enumerate() {
                if Highs_getColName(highs, col as HighsInt, name_buf.as_mut_ptr() as *mut _)
                    != STATUS_OK
                {
                    eprintln!("freqsec-highs: cannot read name of column {col}");
                    Highs_destroy(highs);
                    return ExitCode::FAILURE;
                }
                let name = CStr::from_ptr(name_buf.as_ptr() as *const _).to_string_lossy();
                let _ = writeln!(report, "{name} {value:.12e}");
            }
        }
        Highs_destroy(highs);

        if let Err(err) = std::fs::write(&args.out, report) {
            eprintln!("freqsec-highs: cannot write '{}': {err}", args.out);
            return ExitCode::FAILURE;
        }
    }
    ExitCode::SUCCESS
}
