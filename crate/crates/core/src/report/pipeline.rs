use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use super::config::AnalysisConfig;
use super::corpus::InstrumentRecord;
use crate::alignment::{
    align_single_plate, align_to_symmetry_plane, angle_report, pca_align, AngleHistograms,
    AngleRecord, HistogramKind, PlateSide,
};
use crate::channel::{channel_points, filter_arching_outliers};
use crate::contours::{contour_lines, render_contours_svg};
use crate::elevation::{resample_grid, write_raster};
use crate::error::{Error, Result};
use crate::mesh::{apply_rigid_transform, load_mesh, MeshFormat, RigidTransform, TriangleMesh};
use crate::size_class::{InstrumentSize, SizeClass};

/// Version of the JSON report layout; bumped on incompatible changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Load,
    Pca,
    Align,
    Contours,
    Grid,
    Channel,
    Render,
    Write,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Status {
    Ok,
    MissingPlate,
    Failed { stage: Stage, message: String },
}

impl Status {
    /// Ok and missing-plate both count as a completed analysis.
    pub fn is_success(&self) -> bool {
        !matches!(self, Status::Failed { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::MissingPlate => "missing_plate",
            Status::Failed { .. } => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlateReport {
    pub side: PlateSide,
    /// RMS distance of the outline to its fitted plane (mm).
    pub contour_residual_mm: f64,
    pub z_min_mm: f64,
    pub z_max_mm: f64,
    pub contour_levels: usize,
    pub contour_polylines: usize,
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub grid_valid_nodes: usize,
    pub channel_candidates: usize,
    pub channel_points: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstrumentReport {
    pub instrument_id: String,
    pub size: InstrumentSize,
    pub size_class: SizeClass,
    pub attribution: Option<String>,
    pub date: Option<String>,
    pub status: Status,
    pub angles: Option<AngleRecord>,
    pub plates: Vec<PlateReport>,
    /// Files written for this instrument, relative to the output directory.
    pub artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<StageTiming>>,
    /// Stage timings, always collected; serialized only on request.
    #[serde(skip)]
    pub stage_timings: Vec<StageTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub schema_version: u32,
    pub config: AnalysisConfig,
    pub instruments: Vec<InstrumentReport>,
    pub histograms: AngleHistograms,
    /// Corpus-level files, relative to the output directory.
    pub artifacts: Vec<String>,
}

impl CorpusReport {
    pub fn all_succeeded(&self) -> bool {
        self.instruments.iter().all(|r| r.status.is_success())
    }
}

/// File-system-safe form of an inventory id.
fn safe_name(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

struct Outputs<'a> {
    root: Option<&'a Path>,
    dir: String,
    artifacts: Vec<String>,
}

impl Outputs<'_> {
    /// Creates `name` under the instrument directory and records it.
    fn write(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let Some(root) = self.root else {
            return Ok(());
        };
        let rel = format!("{}/{}", self.dir, name);
        let path = root.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.artifacts.push(rel);
        Ok(())
    }
}

struct Timer {
    timings: Vec<StageTiming>,
}

impl Timer {
    fn run<T>(&mut self, stage: Stage, f: impl FnOnce() -> Result<T>) -> std::result::Result<T, (Stage, Error)> {
        let t0 = Instant::now();
        let out = f();
        let seconds = t0.elapsed().as_secs_f64();
        match self.timings.iter_mut().find(|t| t.stage == stage) {
            Some(t) => t.seconds += seconds,
            None => self.timings.push(StageTiming { stage, seconds }),
        }
        out.map_err(|e| (stage, e))
    }
}

type StageResult<T> = std::result::Result<T, (Stage, Error)>;

fn load(path: &Path, config: &AnalysisConfig) -> Result<TriangleMesh> {
    let format = MeshFormat::detect(path)?;
    Ok(load_mesh(path, format, config.unit_scale)?.mesh)
}

/// Contours, grid and channel of one aligned plate.
fn process_plate(
    plate: &TriangleMesh,
    side: PlateSide,
    residual: f64,
    class: SizeClass,
    config: &AnalysisConfig,
    out: &mut Outputs,
    timer: &mut Timer,
) -> StageResult<PlateReport> {
    let contours = timer.run(Stage::Contours, || {
        contour_lines(plate, side, config.contour_spacing_mm)
    })?;
    let grid = timer.run(Stage::Grid, || resample_grid(plate, side, config.grid_step_mm))?;
    let params = config.channel_params(class);
    let (raw, channel) = timer.run(Stage::Channel, || {
        let raw = channel_points(plate.name(), &grid, &params)?;
        let filtered = filter_arching_outliers(&raw, &grid);
        Ok((raw, filtered))
    })?;
    let doc = timer.run(Stage::Render, || {
        Ok(render_contours_svg(&contours, Some(&channel), config.colour_scale(class)))
    })?;
    let mut warnings = channel.warnings.clone();
    warnings.extend(doc.warnings.iter().cloned());

    let emit = config.emit;
    let name = side.as_str();
    timer.run(Stage::Write, || {
        if emit.svg {
            out.write(&format!("{name}.svg"), |w| {
                w.write_all(doc.text.as_bytes()).map_err(|e| Error::io("<svg>", e))
            })?;
        }
        if emit.csv {
            out.write(&format!("{name}_contours.csv"), |w| contours.write_csv(w))?;
            out.write(&format!("{name}_channel.csv"), |w| channel.write_csv(w))?;
        }
        if emit.raster {
            out.write(&format!("{name}_grid.raster"), |w| {
                write_raster(&grid, w).map_err(|e| Error::io("<raster>", e))
            })?;
        }
        Ok(())
    })?;

    Ok(PlateReport {
        side,
        contour_residual_mm: residual,
        z_min_mm: contours.z_min,
        z_max_mm: contours.z_max,
        contour_levels: contours.levels.len(),
        contour_polylines: contours.polyline_count(),
        grid_nx: grid.nx(),
        grid_ny: grid.ny(),
        grid_valid_nodes: grid.valid_count(),
        channel_candidates: raw.points.len(),
        channel_points: channel.points.len(),
        warnings,
    })
}

struct Analysis {
    status: Status,
    angles: Option<AngleRecord>,
    plates: Vec<PlateReport>,
}

fn analyse(
    record: &InstrumentRecord,
    config: &AnalysisConfig,
    out: &mut Outputs,
    timer: &mut Timer,
    plates: &mut Vec<PlateReport>,
) -> StageResult<(Status, Option<AngleRecord>)> {
    let id = &record.inventory_id;
    let load_one = |p: &Option<PathBuf>, side: PlateSide| -> Result<Option<TriangleMesh>> {
        p.as_ref()
            .map(|p| load(p, config).map(|m| m.with_name(format!("{id}_{side}"))))
            .transpose()
    };
    let (sb, back, body) = timer.run(Stage::Load, || {
        let sb = load_one(&record.sound_board_path, PlateSide::SoundBoard)?;
        let back = load_one(&record.back_path, PlateSide::Back)?;
        let body = record.body_path.as_ref().map(|p| load(p, config)).transpose()?;
        if sb.is_none() && back.is_none() {
            return Err(Error::InvalidParameter("no plate mesh given".into()));
        }
        Ok((sb, back, body))
    })?;

    // optional coarse pre-alignment on the body's principal axes
    let pre = match &body {
        Some(body) => timer.run(Stage::Pca, || pca_align(body).map(|(_, t)| t))?,
        None => RigidTransform::identity(),
    };
    let pre_apply = |m: Option<TriangleMesh>| m.map(|m| apply_rigid_transform(&m, &pre));
    let (sb, back) = (pre_apply(sb), pre_apply(back));
    let neck = {
        let d = pre.apply_vector(&Vector3::new(record.neck_direction.x, record.neck_direction.y, 0.0));
        let flat = Vector2::new(d.x, d.y);
        if flat.norm() > 0.0 {
            flat.normalize()
        } else {
            Vector2::x()
        }
    };

    let class = record.size_class;
    match (sb, back) {
        (Some(sb), Some(back)) => {
            let pair = timer.run(Stage::Align, || align_to_symmetry_plane(&sb, &back))?;
            let angles = AngleRecord::from_aligned(id.clone(), &pair, &neck);
            for (plate, side, residual) in [
                (&pair.sound_board, PlateSide::SoundBoard, pair.sound_board_residual),
                (&pair.back, PlateSide::Back, pair.back_residual),
            ] {
                plates.push(process_plate(plate, side, residual, class, config, out, timer)?);
            }
            Ok((Status::Ok, Some(angles)))
        }
        (one_sb, one_back) => {
            let (plate, side) = match (one_sb, one_back) {
                (Some(p), None) => (p, PlateSide::SoundBoard),
                (None, Some(p)) => (p, PlateSide::Back),
                _ => unreachable!("checked at load"),
            };
            let aligned = timer.run(Stage::Align, || align_single_plate(&plate, side))?;
            plates.push(process_plate(&aligned.plate, side, aligned.residual, class, config, out, timer)?);
            Ok((Status::MissingPlate, None))
        }
    }
}

/// Runs the full analysis of one instrument. Failures are captured in the
/// returned status.
///
/// With `out_dir`, artifacts are written to `<out_dir>/<id>/`.
pub fn run_instrument(
    record: &InstrumentRecord,
    config: &AnalysisConfig,
    out_dir: Option<&Path>,
) -> InstrumentReport {
    let mut out = Outputs {
        root: out_dir,
        dir: safe_name(&record.inventory_id),
        artifacts: Vec::new(),
    };
    let mut timer = Timer { timings: Vec::new() };
    let mut plates = Vec::new();
    let analysis = match analyse(record, config, &mut out, &mut timer, &mut plates) {
        Ok((status, angles)) => Analysis { status, angles, plates },
        Err((stage, e)) => {
            log::error!("{}: {stage:?} failed: {e}", record.inventory_id);
            Analysis {
                status: Status::Failed {
                    stage,
                    message: e.to_string(),
                },
                angles: None,
                plates,
            }
        }
    };
    InstrumentReport {
        instrument_id: record.inventory_id.clone(),
        size: record.size,
        size_class: record.size_class,
        attribution: record.attribution.clone(),
        date: record.date.clone(),
        status: analysis.status,
        angles: analysis.angles,
        plates: analysis.plates,
        artifacts: out.artifacts,
        timings: config.record_timings.then(|| timer.timings.clone()),
        stage_timings: timer.timings,
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn write_summary_csv<W: Write>(reports: &[InstrumentReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "inventory_id",
        "size",
        "size_class",
        "status",
        "failed_stage",
        "message",
        "sb_back_signed_deg",
        "sym_horizontal_deg",
        "sb_horizontal_deg",
        "back_horizontal_deg",
        "sound_board_residual_mm",
        "back_residual_mm",
        "sound_board_channel_points",
        "back_channel_points",
    ])?;
    for r in reports {
        let (stage, message) = match &r.status {
            Status::Failed { stage, message } => (
                serde_json::to_value(stage)?.as_str().unwrap_or("").to_string(),
                message.clone(),
            ),
            _ => (String::new(), String::new()),
        };
        let plate = |side: PlateSide| r.plates.iter().find(|p| p.side == side);
        let a = r.angles.as_ref();
        w.write_record([
            r.instrument_id.clone(),
            r.size.as_str().to_string(),
            r.size_class.as_str().to_string(),
            r.status.label().to_string(),
            stage,
            message,
            fmt_opt(a.map(|a| a.sb_back_signed)),
            fmt_opt(a.map(|a| a.sym_horizontal)),
            fmt_opt(a.map(|a| a.sb_horizontal)),
            fmt_opt(a.map(|a| a.back_horizontal)),
            fmt_opt(plate(PlateSide::SoundBoard).map(|p| p.contour_residual_mm)),
            fmt_opt(plate(PlateSide::Back).map(|p| p.contour_residual_mm)),
            plate(PlateSide::SoundBoard).map(|p| p.channel_points.to_string()).unwrap_or_default(),
            plate(PlateSide::Back).map(|p| p.channel_points.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

fn write_file(root: &Path, name: &str, artifacts: &mut Vec<String>, bytes: &[u8]) -> Result<()> {
    let path = root.join(name);
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    artifacts.push(name.to_string());
    Ok(())
}

/// Analyses every instrument on a pool of `jobs` threads, then aggregates
/// the angle histograms over the complete pairs.
///
/// Reports are sorted by inventory id, so the outputs do not depend on
/// scheduling.
pub fn run_corpus(
    records: &[InstrumentRecord],
    config: &AnalysisConfig,
    jobs: usize,
    out_dir: Option<&Path>,
) -> Result<CorpusReport> {
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    config.validate()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let mut instruments: Vec<InstrumentReport> = pool.install(|| {
        records
            .par_iter()
            .map(|r| run_instrument(r, config, out_dir))
            .collect()
    });
    instruments.sort_by(|a, b| a.instrument_id.cmp(&b.instrument_id));

    let angles: Vec<AngleRecord> = instruments
        .iter()
        .filter(|r| r.status == Status::Ok)
        .filter_map(|r| r.angles.clone())
        .collect();
    let histograms = angle_report(&angles, config.histogram_bin_deg)?;

    let mut report = CorpusReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        instruments,
        histograms,
        artifacts: Vec::new(),
    };
    if let Some(dir) = out_dir {
        let mut artifacts = Vec::new();
        write_file(dir, "config.toml", &mut artifacts, config.to_toml().as_bytes())?;
        if config.emit.csv {
            let mut buf = Vec::new();
            write_summary_csv(&report.instruments, &mut buf)?;
            write_file(dir, "summary.csv", &mut artifacts, &buf)?;
            let mut buf = Vec::new();
            report.histograms.write_csv(&mut buf)?;
            write_file(dir, "angles.csv", &mut artifacts, &buf)?;
        }
        if config.emit.svg {
            for kind in HistogramKind::ALL {
                let name = format!("angles_{}.svg", kind.as_str());
                write_file(dir, &name, &mut artifacts, report.histograms.to_svg(kind).as_bytes())?;
            }
        }
        report.artifacts = artifacts;
        if config.emit.json {
            let mut text = serde_json::to_string_pretty(&report)?;
            text.push('\n');
            let path = dir.join("summary.json");
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(report)
}
