//! Run directories: every artifact is written to a temporary file and renamed
//! into place, and the manifest records a hash of each one.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use cmi_core::demod::{calibrate_zero_baseline, frame_time};
use cmi_core::imaging::{dift_with, local_maxima, peak, sidecar, to_csv, to_pgm_ascii, DiftOptions};
use cmi_core::oracle::{compare, correlator_bank};
use cmi_core::pipeline::run_cmi;
use cmi_core::rfchain::write_stream_dump;

use crate::config::ExperimentConfig;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))
}

/// Collects files for a run directory and hashes them for the manifest.
pub struct Bundle {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl Bundle {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    pub fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.files.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

#[derive(Serialize)]
struct Manifest {
    run: RunInfo,
    results: Results,
    files: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct RunInfo {
    name: String,
    version: String,
    seed: u64,
    config_sha256: String,
    geometry_digest: String,
    params_digest: String,
    acquisition: String,
    runs: usize,
    code_length: usize,
    frame_time: f64,
    walsh_indices: Vec<usize>,
}

#[derive(Serialize)]
struct Results {
    peak_bin: [i32; 2],
    peak_lm: [f64; 2],
    maxima: Vec<[i32; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_rms_rel_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_max_rel_error: Option<f64>,
}

pub struct Summary {
    pub dir: PathBuf,
    pub peak: (i32, i32),
    pub maxima: Vec<(i32, i32)>,
    pub oracle: Option<(f64, f64)>,
}

pub fn default_out_dir(cfg: &ExperimentConfig) -> PathBuf {
    match &cfg.output.dir {
        Some(d) => d.clone(),
        None => PathBuf::from("runs").join(format!("{}-seed{}", cfg.display_name(), cfg.sim.seed)),
    }
}

pub fn simulate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Summary> {
    let r = cfg.resolve()?;
    let config_text = cfg.to_toml()?;
    let config_hash = sha256_hex(config_text.as_bytes());
    log::info!(
        "{}: {} elements, {} codes of length {}, {}",
        cfg.display_name(),
        r.geometry.len(),
        r.codes.len(),
        r.params.code_length,
        r.acquisition
    );
    let out = run_cmi(&r.scene, &r.geometry, &r.params, r.acquisition, &r.codes)?;
    let runs = out.powers.len();
    let vis = if cfg.calibration.zero_baseline {
        calibrate_zero_baseline(&out.visibility)
    } else {
        out.visibility.clone()
    };
    let opts = DiftOptions {
        normalized: cfg.output.normalized,
        ..DiftOptions::default()
    };
    let map = dift_with(&vis, &r.geometry, opts)?;
    let pk = peak(&map)?;
    let maxima = local_maxima(&map, 0.5);

    let header = vec![
        ("name", cfg.display_name()),
        ("seed", r.params.seed.to_string()),
        ("config_sha256", config_hash.clone()),
        ("geometry", format!("{:016x}", r.geometry.digest())),
        ("acquisition", r.acquisition.to_string()),
        ("calibrated", cfg.calibration.zero_baseline.to_string()),
    ];
    let mut bundle = Bundle::create(out_dir)?;
    bundle.put("config.toml", config_text.as_bytes())?;
    bundle.put("visibility.txt", vis.to_dump(&header).as_bytes())?;
    bundle.put("image.csv", to_csv(&map).as_bytes())?;
    bundle.put("image.pgm", to_pgm_ascii(&map).as_bytes())?;
    bundle.put("image.axes.toml", sidecar(&map).as_bytes())?;

    let mut oracle = None;
    if cfg.output.oracle {
        let reference = correlator_bank(&out.streams, &r.geometry);
        let reference = if cfg.calibration.zero_baseline {
            calibrate_zero_baseline(&reference)
        } else {
            reference
        };
        let report = compare(&reference, &vis)?;
        oracle = Some((report.rms_rel_error, report.max_rel_error));
        bundle.put("oracle_visibility.txt", reference.to_dump(&header).as_bytes())?;
    }
    if cfg.output.dump_streams {
        let mut buf = Vec::new();
        write_stream_dump(&mut buf, &out.streams, r.params.digest())?;
        bundle.put("streams.bin", &buf)?;
    }

    let (l, m) = map.lm(pk.0, pk.1);
    let manifest = Manifest {
        run: RunInfo {
            name: cfg.display_name(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: r.params.seed,
            config_sha256: config_hash,
            geometry_digest: format!("{:016x}", r.geometry.digest()),
            params_digest: format!("{:016x}", r.params.digest()),
            acquisition: r.acquisition.to_string(),
            runs,
            code_length: r.params.code_length,
            frame_time: frame_time(runs, r.params.code_length, r.params.chip_rate()),
            walsh_indices: r.walsh_indices.clone(),
        },
        results: Results {
            peak_bin: [pk.0, pk.1],
            peak_lm: [l, m],
            maxima: maxima.iter().map(|&(i, j)| [i, j]).collect(),
            oracle_rms_rel_error: oracle.map(|o| o.0),
            oracle_max_rel_error: oracle.map(|o| o.1),
        },
        files: bundle.files.clone(),
    };
    write_atomic(&bundle.dir.join("manifest.toml"), toml::to_string(&manifest)?.as_bytes())?;
    Ok(Summary {
        dir: bundle.dir().to_path_buf(),
        peak: pk,
        maxima,
        oracle,
    })
}
