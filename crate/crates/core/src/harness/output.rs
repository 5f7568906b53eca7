//! Output files: column-text time series, the TOML manifest, binary field
//! dumps and plot-ready data.
//!
//! Field dump layout (little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 8 | magic `QHDFIELD` |
//! | 4 | format version `u32` (= 1) |
//! | 4 | dimension `u32` |
//! | 8 | points per axis `u64` |
//! | 8 | box length `f64` |
//! | 8 | time `f64` |
//! | 8 | ħ `f64` |
//! | 8 | value count `u64` |
//! | 16·count | `(re, im)` pairs of `f64`, row-major |

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::QhdError;
use crate::field::ComplexField;
use crate::grid::make_grid;
use crate::polar::{default_vacuum_threshold, hydrodynamic_fields, irrotationality_residual, null_form_residual};
use crate::spectral::solve_poisson;
use crate::stepper::{mass, schrodinger_energy, WaveState};
use crate::verification::qhd_energy;

use super::experiment::{Experiment, RunManifest, ENERGY_EQUIVALENCE_LIMIT};
use super::HarnessError;

const MAGIC: &[u8; 8] = b"QHDFIELD";
const VERSION: u32 = 1;

pub const TIMESERIES_FILE: &str = "timeseries.tsv";
pub const SUBSTEPS_FILE: &str = "substeps.tsv";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const FIELDS_DIR: &str = "fields";
pub const PLOTS_DIR: &str = "plots";

#[derive(Clone, Copy, Debug, Default)]
pub struct ExportOptions {
    pub overwrite: bool,
    pub dump_fields: bool,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_field_dump(path: &Path, state: &WaveState) -> Result<(), HarnessError> {
    let grid = state.psi.grid();
    let mut buf = Vec::with_capacity(56 + 16 * grid.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.points_per_axis() as u64).to_le_bytes());
    buf.extend_from_slice(&grid.box_length().to_le_bytes());
    buf.extend_from_slice(&state.t.to_le_bytes());
    buf.extend_from_slice(&state.hbar.to_le_bytes());
    buf.extend_from_slice(&(grid.len() as u64).to_le_bytes());
    for z in state.psi.values() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(&buf).map_err(io_err(path))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], QhdError> {
        let end = self.pos + N;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| QhdError::Format(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(slice.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32, QhdError> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64, QhdError> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64, QhdError> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn read_field_dump(path: &Path) -> Result<WaveState, HarnessError> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err(path))?;
    Ok(decode_field_dump(&bytes)?)
}

pub fn decode_field_dump(bytes: &[u8]) -> Result<WaveState, QhdError> {
    let mut c = Cursor { bytes, pos: 0 };
    if &c.take::<8>()? != MAGIC {
        return Err(QhdError::Format("bad magic".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(QhdError::Format(format!("unsupported version {version}")));
    }
    let dim = c.u32()? as usize;
    let n = c.u64()? as usize;
    let length = c.f64()?;
    let t = c.f64()?;
    let hbar = c.f64()?;
    let count = c.u64()? as usize;
    let grid = make_grid(dim, n, length)?;
    if count != grid.len() {
        return Err(QhdError::Format(format!("value count {count} does not match grid size {}", grid.len())));
    }
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let re = c.f64()?;
        let im = c.f64()?;
        values.push(Complex64::new(re, im));
    }
    if c.pos != bytes.len() {
        return Err(QhdError::Format(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    WaveState::new(ComplexField::new(&grid, values)?, t, hbar)
}

fn timeseries_text(exp: &Experiment) -> String {
    let mut s = String::from("strip\ttime\tmass\tenergy_minus\tenergy_plus\tlambda_l2_minus\tjump\tbound\tcut_proximity\n");
    for r in &exp.manifest.strip_rows {
        let _ = writeln!(
            s,
            "{}\t{:.17e}\t{:.17e}\t{:.17e}\t{:.17e}\t{:.17e}\t{:.17e}\t{:.17e}\t{:.6e}",
            r.k, r.time, r.mass, r.energy_minus, r.energy_plus, r.lambda_l2_minus, r.jump, r.bound, r.cut_proximity
        );
    }
    s
}

fn substeps_text(exp: &Experiment) -> String {
    let t = &exp.trajectory;
    let mut s = String::from("time\tmass\tenergy\n");
    for ((time, m), e) in t.substep_times.iter().zip(&t.substep_masses).zip(&t.substep_energies) {
        let _ = writeln!(s, "{time:.17e}\t{m:.17e}\t{e:.17e}");
    }
    s
}

/// Writes every output file of a run into `dir`. Refuses a non-empty `dir`
/// unless `overwrite` is set.
pub fn export_outputs(exp: &Experiment, dir: &Path, opts: ExportOptions) -> Result<Vec<PathBuf>, HarnessError> {
    if dir.exists() {
        let non_empty = fs::read_dir(dir).map_err(io_err(dir))?.next().is_some();
        if non_empty && !opts.overwrite {
            return Err(HarnessError::OutputExists(dir.to_path_buf()));
        }
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for (name, text) in [
        (TIMESERIES_FILE, timeseries_text(exp)),
        (SUBSTEPS_FILE, substeps_text(exp)),
        (MANIFEST_FILE, exp.manifest.to_toml()),
    ] {
        let p = dir.join(name);
        write_text(&p, &text)?;
        written.push(p);
    }
    if opts.dump_fields {
        let fields = dir.join(FIELDS_DIR);
        fs::create_dir_all(&fields).map_err(io_err(&fields))?;
        for r in &exp.trajectory.records {
            let p = fields.join(format!("psi_{:05}.bin", r.index));
            write_field_dump(&p, &r.psi_plus)?;
            written.push(p);
        }
    }
    written.extend(export_plot_data(dir)?);
    Ok(written)
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| HarnessError::Manifest(format!("{} is empty", path.display())))?
        .split('\t')
        .map(str::to_string)
        .collect();
    let rows = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split('\t')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| HarnessError::Manifest(format!("{}: {e}", path.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((header, rows))
}

fn column(header: &[String], name: &str) -> Result<usize, HarnessError> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| HarnessError::Manifest(format!("missing column {name}")))
}

/// Regenerates `plots/*.dat` (whitespace-separated, `#` header) from the
/// time series of a run directory.
pub fn export_plot_data(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let plots = dir.join(PLOTS_DIR);
    fs::create_dir_all(&plots).map_err(io_err(&plots))?;
    let (h, rows) = read_table(&dir.join(TIMESERIES_FILE))?;
    let (t, em, ep, jump, bound, k) = (
        column(&h, "time")?,
        column(&h, "energy_minus")?,
        column(&h, "energy_plus")?,
        column(&h, "jump")?,
        column(&h, "bound")?,
        column(&h, "strip")?,
    );
    let mut energy = String::from("# time energy_minus energy_plus\n");
    let mut ledger = String::from("# strip jump bound\n");
    for r in &rows {
        let _ = writeln!(energy, "{:.10e} {:.10e} {:.10e}", r[t], r[em], r[ep]);
        let _ = writeln!(ledger, "{} {:.10e} {:.10e}", r[k], r[jump], r[bound]);
    }
    let (sh, srows) = read_table(&dir.join(SUBSTEPS_FILE))?;
    let (st, sm, se) = (column(&sh, "time")?, column(&sh, "mass")?, column(&sh, "energy")?);
    let m0 = srows.first().map_or(0.0, |r| r[sm]);
    let scale = if m0 != 0.0 { m0 } else { 1.0 };
    let mut drift = String::from("# time relative_mass_drift energy\n");
    for r in &srows {
        let _ = writeln!(drift, "{:.10e} {:.10e} {:.10e}", r[st], (r[sm] - m0) / scale, r[se]);
    }
    let mut out = Vec::new();
    for (name, text) in [("energy.dat", energy), ("ledger.dat", ledger), ("mass_energy.dat", drift)] {
        let p = plots.join(name);
        write_text(&p, &text)?;
        out.push(p);
    }
    Ok(out)
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest, HarnessError> {
    let p = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&p).map_err(io_err(&p))?;
    toml::from_str(&text).map_err(|e| HarnessError::Manifest(e.to_string()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DumpCheck {
    pub file: PathBuf,
    pub time: f64,
    pub mass: f64,
    pub energy_gap: f64,
    pub null_form: f64,
    pub irrotationality: f64,
    pub current_consistency: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<DumpCheck>,
    pub passed: bool,
}

/// Recomputes the pointwise diagnostics on every field dump of a run directory.
pub fn verify_dumps(dir: &Path) -> Result<VerifyReport, HarnessError> {
    let manifest = read_manifest(dir)?;
    let fields = dir.join(FIELDS_DIR);
    let mut files: Vec<PathBuf> = fs::read_dir(&fields)
        .map_err(io_err(&fields))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "bin"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(HarnessError::Manifest(format!("no field dumps in {}", fields.display())));
    }
    let mut checks = Vec::new();
    let mut params = None;
    for file in files {
        let state = read_field_dump(&file)?;
        let params = match &params {
            Some(p) => p,
            None => params.insert(manifest.config.physics_params(state.psi.grid())?),
        };
        let delta = default_vacuum_threshold(&state.psi);
        let h = hydrodynamic_fields(&state.psi, state.hbar, delta);
        let v = solve_poisson(&h.rho, params.doping.as_ref());
        let e_h = qhd_energy(&h, &v, params.p);
        let e_s = schrodinger_energy(&state, params);
        let scale = e_h.abs().max(e_s.abs());
        checks.push(DumpCheck {
            time: state.t,
            mass: mass(&state),
            energy_gap: if scale > 0.0 { (e_h - e_s).abs() / scale } else { 0.0 },
            null_form: null_form_residual(&state.psi, state.hbar, delta),
            irrotationality: irrotationality_residual(&h),
            current_consistency: h.current_consistency(),
            file,
        });
    }
    let passed = checks.iter().all(|c| c.energy_gap <= ENERGY_EQUIVALENCE_LIMIT);
    Ok(VerifyReport { checks, passed })
}
