//! Self-check against reference tables shipped with the binary.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use cmi_core::codegen::{bits_to_string, code_product, gen_gold, gen_msequence, gen_rademacher, gen_walsh, Code, LfsrSpec};
use cmi_core::geometry::{baselines, builtin, pixels_t_config, pixels_y_config, t_config};
use cmi_core::sensitivity::delta_t_vis;

const EMBEDDED: &[(&str, &str)] = &[
    ("walsh8.txt", include_str!("../golden/walsh8.txt")),
    ("rademacher8.txt", include_str!("../golden/rademacher8.txt")),
    ("gold.txt", include_str!("../golden/gold.txt")),
    ("pixels.txt", include_str!("../golden/pixels.txt")),
    ("sensitivity.txt", include_str!("../golden/sensitivity.txt")),
];

pub struct Check {
    pub name: &'static str,
    pub result: Result<String>,
}

fn load(dir: Option<&Path>, file: &str) -> Result<String> {
    match dir {
        Some(d) => {
            let p = d.join(file);
            std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))
        }
        None => Ok(EMBEDDED.iter().find(|(n, _)| *n == file).expect("embedded golden").1.to_string()),
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn keyed(text: &str) -> Result<Vec<(String, String)>> {
    data_lines(text)
        .map(|l| {
            l.split_once(char::is_whitespace)
                .map(|(k, v)| (k.to_string(), v.trim().to_string()))
                .ok_or_else(|| anyhow!("malformed line '{l}'"))
        })
        .collect()
}

fn matrix_check(text: &str, computed: &[Code]) -> Result<String> {
    let rows: Vec<Vec<i8>> = data_lines(text)
        .map(|l| l.split_whitespace().map(|v| v.parse::<i8>().map_err(|e| anyhow!("'{v}': {e}"))).collect())
        .collect::<Result<_>>()?;
    if rows.len() != computed.len() {
        bail!("{} rows in golden, {} computed", rows.len(), computed.len());
    }
    for (i, (g, c)) in rows.iter().zip(computed).enumerate() {
        if g.as_slice() != c.chips() {
            bail!("row {i}: golden {g:?}, computed {:?}", c.chips());
        }
    }
    Ok(format!("{} rows match", rows.len()))
}

fn walsh(dir: Option<&Path>) -> Result<String> {
    let w = gen_walsh(8)?;
    let msg = matrix_check(&load(dir, "walsh8.txt")?, &w)?;
    // Numbered from one, W_2 W_3 = W_4.
    if code_product(&w[1], &w[2])? != w[3] {
        bail!("W_2 W_3 != W_4");
    }
    Ok(format!("{msg}, W_2 W_3 = W_4"))
}

fn rademacher(dir: Option<&Path>) -> Result<String> {
    matrix_check(&load(dir, "rademacher8.txt")?, &gen_rademacher(8)?)
}

fn gold(dir: Option<&Path>) -> Result<String> {
    let s1 = LfsrSpec::with_ones(5, &[5, 3])?;
    let s2 = LfsrSpec::with_ones(5, &[5, 4, 3, 2])?;
    let entries = keyed(&load(dir, "gold.txt")?)?;
    for (key, want) in &entries {
        let got = match key.as_str() {
            "seq1" => bits_to_string(&gen_msequence(&s1).bits),
            "seq2" => bits_to_string(&gen_msequence(&s2).bits),
            k => {
                let shift: usize = k
                    .strip_prefix("shift")
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| anyhow!("unknown key '{k}'"))?;
                bits_to_string(&gen_gold(&s1, &s2, shift)?)
            }
        };
        if &got != want {
            bail!("{key}: golden {want}, computed {got}");
        }
    }
    Ok(format!("{} sequences match", entries.len()))
}

fn pixel_count(key: &str) -> Result<usize> {
    if let Some(n) = key.strip_prefix("y-config-") {
        return Ok(pixels_y_config(n.parse()?));
    }
    if let Some(n) = key.strip_prefix("t-config-") {
        let n: usize = n.parse()?;
        let h = n as i32;
        let covered = baselines(&t_config(n, 1.0)?).within(h, h);
        if covered != pixels_t_config(n) {
            bail!("T({n}) layout covers {covered}, formula gives {}", pixels_t_config(n));
        }
        return Ok(covered);
    }
    Ok(baselines(&builtin(key)?).distinct())
}

fn pixels(dir: Option<&Path>) -> Result<String> {
    let entries = keyed(&load(dir, "pixels.txt")?)?;
    for (key, want) in &entries {
        let want: usize = want.parse().with_context(|| format!("{key}: bad count"))?;
        let got = pixel_count(key).with_context(|| key.clone())?;
        if got != want {
            bail!("{key}: golden {want}, computed {got}");
        }
    }
    Ok(format!("{} layouts match", entries.len()))
}

fn sensitivity(dir: Option<&Path>) -> Result<String> {
    let entries = keyed(&load(dir, "sensitivity.txt")?)?;
    let mut shown = Vec::new();
    for (key, want) in &entries {
        let want: f64 = want.parse().with_context(|| format!("{key}: bad value"))?;
        let bw = match key.as_str() {
            "vis-6ghz" => 6e9,
            "vis-1ghz" => 1e9,
            k => bail!("unknown key '{k}'"),
        };
        let got = delta_t_vis(1.0, 1200.0, bw, 1.0 / 30.0)?;
        if (got / want - 1.0).abs() > 0.005 {
            bail!("{key}: golden {want}, computed {got:.4}");
        }
        shown.push(format!("{got:.4} K"));
    }
    Ok(shown.join(", "))
}

pub fn run(dir: Option<&Path>) -> Vec<Check> {
    vec![
        Check {
            name: "walsh-8",
            result: walsh(dir),
        },
        Check {
            name: "rademacher-8",
            result: rademacher(dir),
        },
        Check {
            name: "gold-table",
            result: gold(dir),
        },
        Check {
            name: "pixel-counts",
            result: pixels(dir),
        },
        Check {
            name: "sensitivity",
            result: sensitivity(dir),
        },
    ]
}
