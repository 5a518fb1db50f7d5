//! Minimal external codec speaking the subprocess protocol, for tests and
//! as a template.
//!
//! `tomkit-scale-codec [--factor F] encode <in.pfm> <out.lat>` writes the
//! image in planar layout multiplied by `F`; `decode <in.lat> <out.pfm>`
//! divides it back out.

use std::process::ExitCode;

use tomkit::core::fusion::{Codec, IdentityCodec, Latent};
use tomkit::lat::{read_lat, write_lat};
use tomkit::pfm::{read_pfm, write_pfm};

fn run(args: &[String]) -> Result<(), String> {
    let (factor, rest) = match args {
        [flag, value, rest @ ..] if flag == "--factor" => {
            let f: f32 = value.parse().map_err(|_| format!("bad factor {value:?}"))?;
            if !(f.is_finite() && f != 0.0) {
                return Err("factor must be finite and non-zero".into());
            }
            (f, rest)
        }
        rest => (2.0, rest),
    };
    let [mode, input, output] = rest else {
        return Err("usage: tomkit-scale-codec [--factor F] encode|decode <in> <out>".into());
    };
    match mode.as_str() {
        "encode" => {
            let image = read_pfm(input).map_err(|e| e.to_string())?;
            let latent = IdentityCodec.encode(&image).map_err(|e| e.to_string())?;
            let scaled = latent.data().iter().map(|v| v * factor).collect();
            let latent = Latent::new(latent.dims(), scaled).map_err(|e| e.to_string())?;
            write_lat(&latent, output).map_err(|e| e.to_string())
        }
        "decode" => {
            let latent = read_lat(input).map_err(|e| e.to_string())?;
            let scaled = latent.data().iter().map(|v| v / factor).collect();
            let latent = Latent::new(latent.dims(), scaled).map_err(|e| e.to_string())?;
            let image = IdentityCodec.decode(&latent).map_err(|e| e.to_string())?;
            write_pfm(&image, output).map_err(|e| e.to_string())
        }
        other => Err(format!("unknown mode {other:?}")),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tomkit-scale-codec: {e}");
            ExitCode::FAILURE
        }
    }
}
