//! Dataset loading and the sweep artifact files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use bnbtune::erm::{display_hi, past_one, Piece, PiecewiseCost};
use bnbtune::MilpInstance;

use crate::Failure;

pub const INSTANCES: &str = "instances.csv";
pub const META: &str = "sweep.txt";

/// Instance files of a dataset: a single file or every `.milp` file in a directory, by name.
pub fn files(path: &Path) -> Result<Vec<PathBuf>, Failure> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.is_dir() {
        return Err(Failure::Usage(format!("dataset {} does not exist", path.display())));
    }
    let mut out: Vec<PathBuf> = fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "milp"))
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(Failure::Usage(format!("no .milp files in {}", path.display())));
    }
    Ok(out)
}

pub fn instance_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Instance id with the parsed instance or the parse error.
pub type Loaded = Vec<(String, Result<MilpInstance, String>)>;

/// Loads every file; parse failures are kept per instance.
pub fn load(path: &Path) -> Result<Loaded, Failure> {
    Ok(files(path)?
        .iter()
        .map(|p| (instance_id(p), MilpInstance::read(p).map_err(|e| format!("{}: {e}", p.display()))))
        .collect())
}

pub fn write_instances(dir: &Path, costs: &[(String, PiecewiseCost)]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(dir.join(INSTANCES))?;
    w.write_record(["instance_id", "lo", "hi", "cost", "fingerprint"])?;
    for (id, pc) in costs {
        for p in &pc.pieces {
            w.write_record([id.clone(), p.lo.to_string(), display_hi(p.hi).to_string(), p.cost.to_string(), p.fingerprint.clone()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads `instances.csv` back into per-instance costs, in file order.
pub fn read_instances(dir: &Path) -> Result<Vec<(String, PiecewiseCost)>, Failure> {
    let path = dir.join(INSTANCES);
    if !path.is_file() {
        return Err(Failure::Usage(format!("missing sweep artifact {}", path.display())));
    }
    let mut r = csv::Reader::from_path(&path)?;
    let mut order: Vec<String> = Vec::new();
    let mut by_id: BTreeMap<String, Vec<Piece>> = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |k: usize| rec.get(k).ok_or_else(|| anyhow::anyhow!("{}: short row", path.display()));
        let num = |k: usize| -> Result<f64, Failure> {
            let s = field(k)?;
            s.parse::<f64>().map_err(|e| Failure::Runtime(anyhow::anyhow!("{}: {s}: {e}", path.display())))
        };
        let id = field(0)?.to_string();
        if !by_id.contains_key(&id) {
            order.push(id.clone());
        }
        let piece = Piece { lo: num(1)?, hi: num(2)?, cost: num(3)?, fingerprint: field(4)?.to_string() };
        by_id.entry(id).or_default().push(piece);
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let mut pieces = by_id.remove(&id).unwrap_or_default();
            if let Some(last) = pieces.last_mut() {
                last.hi = past_one();
            }
            (id, PiecewiseCost { pieces })
        })
        .collect())
}

/// Reads the flat `key=value` sweep summary.
pub fn read_meta(dir: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let path = dir.join(META);
    let text = fs::read_to_string(&path)
        .map_err(|e| Failure::Usage(format!("missing sweep artifact {}: {e}", path.display())))?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect())
}
