//! CSV ingestion and emission.
//!
//! Curves: headered long format `id,t,x[,noise_sd]`. Labels: `id,class[,score]`.
//! Ground truth: `id,class[,beta]`. Floats are written in shortest
//! round-trip form, so emitted files re-ingest bit-exactly.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use fermat_fda::{Dataset, DiscreteCurve, Grid, SmoothCurve};

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

fn required(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    column(headers, name).ok_or_else(|| anyhow!("{}: missing required column {name:?}", path.display()))
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn parse_f64(rec: &csv::StringRecord, idx: usize, name: &str, path: &Path) -> Result<f64> {
    let raw = rec.get(idx).unwrap_or("").trim();
    raw.parse::<f64>()
        .map_err(|_| anyhow!("{}:{}: cannot parse {name} value {raw:?}", path.display(), line_of(rec)))
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

/// Reads curves grouped by id in order of first appearance, each sorted by `t`.
pub fn ingest_curves(path: &Path) -> Result<Vec<DiscreteCurve>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let (ci, ct, cx) = (
        required(&headers, "id", path)?,
        required(&headers, "t", path)?,
        required(&headers, "x", path)?,
    );
    let cs = column(&headers, "noise_sd");

    struct Acc {
        id: String,
        obs: Vec<(f64, f64)>,
        noise_sd: Option<f64>,
    }
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<Acc> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.with_context(|| format!("{}: malformed row", path.display()))?;
        let id = rec.get(ci).unwrap_or("").to_string();
        if id.is_empty() {
            bail!("{}:{}: empty id", path.display(), line_of(&rec));
        }
        let t = parse_f64(&rec, ct, "t", path)?;
        let x = parse_f64(&rec, cx, "x", path)?;
        let sd = match cs {
            Some(c) if !rec.get(c).unwrap_or("").is_empty() => Some(parse_f64(&rec, c, "noise_sd", path)?),
            _ => None,
        };
        let slot = *index.entry(id.clone()).or_insert_with(|| {
            groups.push(Acc {
                id,
                obs: Vec::new(),
                noise_sd: None,
            });
            groups.len() - 1
        });
        let g = &mut groups[slot];
        if let Some(sd) = sd {
            match g.noise_sd {
                Some(prev) if prev != sd => {
                    bail!("{}:{}: conflicting noise_sd for curve {}", path.display(), line_of(&rec), g.id)
                }
                _ => g.noise_sd = Some(sd),
            }
        }
        g.obs.push((t, x));
    }
    groups
        .into_iter()
        .map(|mut g| {
            g.obs.sort_by(|a, b| a.0.total_cmp(&b.0));
            if let Some(w) = g.obs.windows(2).find(|w| w[0].0 == w[1].0) {
                bail!("{}: curve {} has duplicate t = {}", path.display(), g.id, w[0].0);
            }
            DiscreteCurve::new(g.id.clone(), g.obs, g.noise_sd).with_context(|| format!("{}: curve {}", path.display(), g.id))
        })
        .collect()
}

pub fn write_curves(path: &Path, curves: &[DiscreteCurve]) -> Result<()> {
    let mut w = create(path)?;
    let with_sd = curves.iter().any(|c| c.noise_sd().is_some());
    writeln!(w, "{}", if with_sd { "id,t,x,noise_sd" } else { "id,t,x" })?;
    for c in curves {
        for (t, x) in c.times().iter().zip(c.values()) {
            match (with_sd, c.noise_sd()) {
                (true, Some(sd)) => writeln!(w, "{},{t},{x},{sd}", c.id())?,
                (true, None) => writeln!(w, "{},{t},{x},", c.id())?,
                _ => writeln!(w, "{},{t},{x}", c.id())?,
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_smooth_curves(path: &Path, curves: &[SmoothCurve], grid: &Grid) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "id,t,x")?;
    for c in curves {
        for (t, x) in grid.points().iter().zip(&c.values) {
            writeln!(w, "{},{t},{x}", c.id)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn create(path: &Path) -> Result<std::io::BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(std::io::BufWriter::new(f))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelEntry {
    pub id: String,
    /// `None` once thresholding has dropped the row to unlabeled.
    pub class: Option<usize>,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelTable {
    /// Class names; position is the class index.
    pub classes: Vec<String>,
    pub entries: Vec<LabelEntry>,
}

impl LabelTable {
    pub fn n_labeled(&self) -> usize {
        self.entries.iter().filter(|e| e.class.is_some()).count()
    }
}

/// Reads a label file. Class names map to indices by first appearance unless
/// `classes` fixes the order. With `threshold`, rows whose score is not
/// strictly above it become unlabeled.
pub fn ingest_labels(path: &Path, threshold: Option<f64>, classes: Option<&[String]>) -> Result<LabelTable> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Ok(LabelTable {
            classes: classes.map(<[String]>::to_vec).unwrap_or_default(),
            entries: Vec::new(),
        });
    }
    let ci = required(&headers, "id", path)?;
    let cc = required(&headers, "class", path)?;
    let cs = column(&headers, "score");
    let mut names: Vec<String> = classes.map(<[String]>::to_vec).unwrap_or_default();
    let fixed = classes.is_some();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut entries = Vec::new();
    for rec in rdr.records() {
        let rec = rec.with_context(|| format!("{}: malformed row", path.display()))?;
        let id = rec.get(ci).unwrap_or("").to_string();
        let name = rec.get(cc).unwrap_or("").to_string();
        if id.is_empty() || name.is_empty() {
            bail!("{}:{}: empty id or class", path.display(), line_of(&rec));
        }
        if seen.insert(id.clone(), entries.len()).is_some() {
            bail!("{}:{}: duplicate label for {id}", path.display(), line_of(&rec));
        }
        let class = match names.iter().position(|c| *c == name) {
            Some(k) => k,
            None if fixed => bail!("{}:{}: class {name:?} not in the class list", path.display(), line_of(&rec)),
            None => {
                names.push(name);
                names.len() - 1
            }
        };
        let score = match cs {
            Some(c) if !rec.get(c).unwrap_or("").is_empty() => Some(parse_f64(&rec, c, "score", path)?),
            _ => None,
        };
        let keep = match (threshold, score) {
            (Some(th), Some(s)) => s > th,
            _ => true,
        };
        entries.push(LabelEntry {
            id,
            class: keep.then_some(class),
            score,
        });
    }
    Ok(LabelTable { classes: names, entries })
}

pub fn write_labels(path: &Path, rows: &[(String, String, Option<f64>)]) -> Result<()> {
    let mut w = create(path)?;
    let with_score = rows.iter().any(|r| r.2.is_some());
    writeln!(w, "{}", if with_score { "id,class,score" } else { "id,class" })?;
    for (id, class, score) in rows {
        match score {
            Some(s) => writeln!(w, "{id},{class},{s}")?,
            None if with_score => writeln!(w, "{id},{class},")?,
            None => writeln!(w, "{id},{class}")?,
        }
    }
    w.flush()?;
    Ok(())
}

/// Class names keyed by id, and warp parameters in file order.
pub type Truth = (HashMap<String, String>, Vec<(String, Option<f64>)>);

/// Reads `id,class[,beta]`.
pub fn ingest_truth(path: &Path) -> Result<Truth> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let ci = required(&headers, "id", path)?;
    let cc = required(&headers, "class", path)?;
    let cb = column(&headers, "beta");
    let mut classes = HashMap::new();
    let mut betas = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let id = rec.get(ci).unwrap_or("").to_string();
        classes.insert(id.clone(), rec.get(cc).unwrap_or("").to_string());
        let beta = match cb {
            Some(c) if !rec.get(c).unwrap_or("").is_empty() => Some(parse_f64(&rec, c, "beta", path)?),
            _ => None,
        };
        betas.push((id, beta));
    }
    Ok((classes, betas))
}

/// Curves joined with labels: labeled curves first, in curve-file order.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub dataset: Dataset,
    pub classes: Vec<String>,
    /// Ids in dataset order.
    pub ids: Vec<String>,
}

pub fn assemble(curves: Vec<DiscreteCurve>, labels: &LabelTable) -> Result<Assembled> {
    let known: HashMap<&str, usize> = curves.iter().enumerate().map(|(i, c)| (c.id(), i)).collect();
    let mut class_of: Vec<Option<usize>> = vec![None; curves.len()];
    for e in &labels.entries {
        let &i = known
            .get(e.id.as_str())
            .ok_or_else(|| anyhow!("label file references unknown curve id {:?}", e.id))?;
        class_of[i] = e.class;
    }
    let (mut labeled, mut unlabeled): (Vec<_>, Vec<_>) =
        curves.into_iter().zip(class_of).partition(|(_, c)| c.is_some());
    labeled.append(&mut unlabeled);
    let ids = labeled.iter().map(|(c, _)| c.id().to_string()).collect();
    let (curves, labs): (Vec<_>, Vec<_>) = labeled.into_iter().unzip();
    let dataset = Dataset::new(curves, labs, labels.classes.len().max(1))?;
    Ok(Assembled {
        dataset,
        classes: labels.classes.clone(),
        ids,
    })
}
