//! Codec selection and the external-process codec.
//!
//! An external codec is any executable invoked as
//! `<command> [fixed args] encode <in.pfm> <out.lat>` and
//! `<command> [fixed args] decode <in.lat> <out.pfm>`, exiting 0 on success.
//! Every call gets its own temporary directory inside the work directory, so
//! concurrent encodes never share files.

use std::path::{Path, PathBuf};
use std::process::Command;

use tomkit_core::fusion::{Codec, IdentityCodec, Latent};
use tomkit_core::{Error as CoreError, Grid};

use crate::lat::{read_lat, write_lat};
use crate::pfm::{read_pfm, write_pfm};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodecSpec {
    Identity,
    External { command: Vec<String>, workdir: PathBuf },
}

impl CodecSpec {
    /// `identity`, or a whitespace-separated command line.
    pub fn parse(spec: &str, workdir: impl Into<PathBuf>) -> Result<Self, String> {
        let spec = spec.trim();
        if spec == "identity" {
            return Ok(CodecSpec::Identity);
        }
        let command: Vec<String> = spec.split_whitespace().map(str::to_owned).collect();
        if command.is_empty() {
            return Err("external codec command is empty".into());
        }
        Ok(CodecSpec::External {
            command,
            workdir: workdir.into(),
        })
    }

    pub fn build(&self) -> Box<dyn Codec + Send + Sync> {
        match self {
            CodecSpec::Identity => Box::new(IdentityCodec),
            CodecSpec::External { command, workdir } => Box::new(ExternalCodec {
                program: command[0].clone(),
                args: command[1..].to_vec(),
                workdir: workdir.clone(),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExternalCodec {
    program: String,
    args: Vec<String>,
    workdir: PathBuf,
}

impl ExternalCodec {
    pub fn new(program: impl Into<String>, args: Vec<String>, workdir: impl Into<PathBuf>) -> Self {
        Self {
            program: program.into(),
            args,
            workdir: workdir.into(),
        }
    }

    fn run(&self, mode: &str, input: &Path, output: &Path) -> Result<(), CoreError> {
        let status = Command::new(&self.program)
            .args(&self.args)
            .arg(mode)
            .arg(input)
            .arg(output)
            .status()
            .map_err(|e| CoreError::Codec(format!("cannot start {}: {e}", self.program)))?;
        if status.success() {
            Ok(())
        } else {
            Err(CoreError::Codec(format!("{} {mode} exited with {status}", self.program)))
        }
    }

    fn scratch(&self) -> Result<tempfile::TempDir, CoreError> {
        tempfile::Builder::new()
            .prefix("tomkit-codec-")
            .tempdir_in(&self.workdir)
            .map_err(|e| CoreError::Codec(format!("{}: {e}", self.workdir.display())))
    }
}

fn codec_err(e: crate::Error) -> CoreError {
    CoreError::Codec(e.to_string())
}

impl Codec for ExternalCodec {
    fn encode(&self, image: &Grid<f32>) -> Result<Latent, CoreError> {
        let dir = self.scratch()?;
        let input = dir.path().join("in.pfm");
        let output = dir.path().join("out.lat");
        write_pfm(image, &input).map_err(codec_err)?;
        self.run("encode", &input, &output)?;
        read_lat(&output).map_err(codec_err)
    }

    fn decode(&self, latent: &Latent) -> Result<Grid<f32>, CoreError> {
        let dir = self.scratch()?;
        let input = dir.path().join("in.lat");
        let output = dir.path().join("out.pfm");
        write_lat(latent, &input).map_err(codec_err)?;
        self.run("decode", &input, &output)?;
        read_pfm(&output).map_err(codec_err)
    }
}
