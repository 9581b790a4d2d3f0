//! Offline/online pipeline orchestration.
//!
//! Offline stages run in a fixed order, each skipped when the manifest
//! shows its inputs unchanged and its outputs intact:
//! mesh -> lifting -> full-order run -> POD -> supremizers -> operators.
//! The online and compare commands only read offline artifacts (plus the
//! reduced operators), so they need no manifest of their own.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use lesrom_core::fom::run_fom;
use lesrom_core::mesh::{generate_cylinder_mesh, load_mesh, save_mesh};
use lesrom_core::pod::{compute_basis, correlation_matrix, ModeSelection, PodBasis};
use lesrom_core::postproc::{coefficient_errors, error_series, CoefficientSeries, ErrorSeries};
use lesrom_core::rom::io::{load_operators, save_operators, write_trajectory_csv};
use lesrom_core::rom::assembly::assemble;
use lesrom_core::rom::run_rom;
use lesrom_core::snapshots::{
    homogenize_set, load_lifting, load_snapshots, save_lifting, save_snapshots, LiftingFunction,
    SnapshotSet,
};
use lesrom_core::supremizer::{enrich, solve_supremizers, SpaceVariant};
use lesrom_core::{CaseBcs, EnrichedSpace, Mesh, RomSpaces, StabilizationMode};

use crate::config::{ConfigError, MeshConfig, RunConfig};
use crate::manifest::{digest_bytes, digest_file, DirLock, Manifest};
use crate::tables;

pub const MESH_FILE: &str = "mesh.txt";
pub const LIFTING_FILE: &str = "lifting.bin";
pub const STEPS_FILE: &str = "fom_steps.csv";
pub const FOM_META_FILE: &str = "fom_meta.json";
pub const ENERGY_TABLE_FILE: &str = "energy_table.csv";
pub const ERROR_TABLE_FILE: &str = "error_table.csv";
pub const COEFFICIENT_TABLE_FILE: &str = "coefficient_table.csv";
pub const TIMINGS_FILE: &str = "timings.json";

pub fn snapshot_file(field: &str) -> String {
    format!("fom_{field}.snap")
}

pub fn basis_file(field: &str) -> String {
    format!("basis_{field}.snap")
}

pub fn spectrum_file(field: &str) -> String {
    format!("spectrum_{field}.csv")
}

pub fn operators_file(mode: StabilizationMode) -> String {
    format!("operators_{}.bin", mode.tag())
}

pub fn rom_dir(mode: StabilizationMode) -> String {
    format!("rom_{}", mode.tag())
}

/// Wall-clock record of the full-order stage (sidecar, never hashed into
/// comparisons).
#[derive(Debug, Serialize, Deserialize)]
pub struct FomMeta {
    pub wall_seconds: f64,
    pub n_steps: usize,
    pub n_samples: usize,
}

/// Wall-clock record of one online run.
#[derive(Debug, Serialize, Deserialize)]
pub struct OnlineTiming {
    pub online_seconds: f64,
    pub wall_seconds: f64,
    pub diverged_at: Option<f64>,
}

/// Per-mode entry of the compare command's timing report.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModeTiming {
    pub online_seconds: f64,
    pub speedup: f64,
    pub diverged_at: Option<f64>,
}

/// The compare command's timing report.
#[derive(Debug, Serialize, Deserialize)]
pub struct Timings {
    pub fom_seconds: f64,
    pub modes: BTreeMap<String, ModeTiming>,
}

fn require(dir: &Path, name: &str) -> anyhow::Result<PathBuf> {
    let path = dir.join(name);
    if !path.exists() {
        bail!(
            "missing artifact `{}`; run `lesrom offline` for this config first",
            path.display()
        );
    }
    Ok(path)
}

fn stage_inputs(parts: &[String]) -> String {
    digest_bytes(parts.join("\n").as_bytes())
}

fn run_stage(
    dir: &Path,
    manifest: &mut Manifest,
    name: &str,
    inputs: String,
    outputs: &[String],
    run: impl FnOnce() -> anyhow::Result<String>,
) -> anyhow::Result<()> {
    if manifest.up_to_date(dir, name, &inputs) {
        println!("stage {name}: up to date");
        return Ok(());
    }
    let started = Instant::now();
    let note = run().with_context(|| format!("stage `{name}` failed"))?;
    manifest.record(dir, name, inputs, outputs)?;
    println!(
        "stage {name}: {note} ({:.1}s)",
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

/// Run every offline stage that is out of date.
pub fn cmd_offline(cfg: &RunConfig) -> anyhow::Result<()> {
    let dir = cfg.output.dir.clone();
    let _lock = DirLock::acquire(&dir)?;
    let mut manifest = Manifest::load(&dir)?;
    let core_cfg = cfg.physics.to_core();
    let params = cfg.solver.to_core();
    let solver_toml = toml::to_string(&cfg.solver)?;

    // Mesh.
    let inputs = stage_inputs(&["mesh".into(), toml::to_string(&cfg.mesh)?]);
    run_stage(&dir, &mut manifest, "mesh", inputs, &[MESH_FILE.into()], || {
        let mesh = match &cfg.mesh {
            MeshConfig::Generate {
                target_cells,
                refinement_bias,
            } => generate_cylinder_mesh(*target_cells, *refinement_bias)?,
            MeshConfig::File { path } => load_mesh(path)?,
        };
        save_mesh(&mesh, dir.join(MESH_FILE))?;
        Ok(format!("{} cells", mesh.n_cells()))
    })?;
    let mesh = load_mesh(dir.join(MESH_FILE))?;
    let case = CaseBcs::channel_cylinder(&mesh);

    // Lifting.
    let inputs = stage_inputs(&[
        "lifting".into(),
        digest_file(&dir.join(MESH_FILE))?,
        solver_toml.clone(),
    ]);
    run_stage(
        &dir,
        &mut manifest,
        "lifting",
        inputs,
        &[LIFTING_FILE.into()],
        || {
            let lifting = LiftingFunction::build(&mesh, &params)?;
            save_lifting(&lifting, dir.join(LIFTING_FILE))?;
            Ok(format!(
                "max normalized divergence {:.2e}",
                lifting.max_divergence(&mesh)
            ))
        },
    )?;

    // Full-order run.
    let fields = ["v", "u", "q", "q_bar"];
    let inputs = stage_inputs(&[
        "fom".into(),
        digest_file(&dir.join(MESH_FILE))?,
        toml::to_string(&cfg.physics)?,
        toml::to_string(&cfg.sampling)?,
        solver_toml.clone(),
    ]);
    let mut outputs: Vec<String> = fields.iter().map(|f| snapshot_file(f)).collect();
    outputs.push(STEPS_FILE.into());
    outputs.push(FOM_META_FILE.into());
    run_stage(&dir, &mut manifest, "fom", inputs, &outputs, || {
        let n_steps = core_cfg.n_steps()?;
        let every = (n_steps / 10).max(1);
        let mut count = 0usize;
        let started = Instant::now();
        let run = run_fom(&mesh, &core_cfg, &params, &case, Some(cfg.schedule()), |r| {
            count += 1;
            if count % every == 0 {
                println!(
                    "  t = {:6.3}  c_d = {:9.4}  max|u| = {:6.3}",
                    r.t, r.coefficients.cd, r.max_u
                );
            }
        })?;
        let wall_seconds = started.elapsed().as_secs_f64();
        save_snapshots(&run.snapshots.v, dir.join(snapshot_file("v")))?;
        save_snapshots(&run.snapshots.u, dir.join(snapshot_file("u")))?;
        save_snapshots(&run.snapshots.q, dir.join(snapshot_file("q")))?;
        save_snapshots(&run.snapshots.q_bar, dir.join(snapshot_file("q_bar")))?;
        tables::write_steps_csv(&dir.join(STEPS_FILE), &run.records)?;
        let meta = FomMeta {
            wall_seconds,
            n_steps,
            n_samples: run.snapshots.n_snapshots(),
        };
        std::fs::write(
            dir.join(FOM_META_FILE),
            serde_json::to_string_pretty(&meta)?,
        )?;
        Ok(format!(
            "{} steps, {} snapshots per field",
            n_steps, meta.n_samples
        ))
    })?;

    // POD bases of the four snapshot families.
    let mut parts = vec!["pod".into(), format!("energy = {}", tables::fmt(cfg.pod.energy))];
    parts.push(toml::to_string(&cfg.pod.counts)?);
    for f in fields {
        parts.push(digest_file(&dir.join(snapshot_file(f)))?);
    }
    parts.push(digest_file(&dir.join(LIFTING_FILE))?);
    let inputs = stage_inputs(&parts);
    let mut outputs = Vec::new();
    for f in fields {
        outputs.push(basis_file(f));
        outputs.push(spectrum_file(f));
    }
    run_stage(&dir, &mut manifest, "pod", inputs, &outputs, || {
        let lifting = load_lifting(dir.join(LIFTING_FILE), &mesh)?;
        let overrides = [
            ("v", cfg.pod.counts.v),
            ("u", cfg.pod.counts.u),
            ("q", cfg.pod.counts.q),
            ("q_bar", cfg.pod.counts.q_bar),
        ];
        let mut note = String::new();
        for (field, count) in overrides {
            let raw = load_snapshots(dir.join(snapshot_file(field)))?;
            let set = if raw.components == 2 {
                homogenize_set(&raw, &lifting)?
            } else {
                raw
            };
            let selection = match count {
                Some(k) => ModeSelection::Count(k),
                None => ModeSelection::Energy(cfg.pod.energy),
            };
            let basis = compute_basis(&correlation_matrix(&set)?, &set, selection)?;
            save_snapshots(&basis.modes, dir.join(basis_file(field)))?;
            tables::write_spectrum_csv(
                &dir.join(spectrum_file(field)),
                &basis.eigenvalues,
                &basis.cumulative,
            )?;
            let captured = basis.cumulative[basis.n_modes() - 1];
            note.push_str(&format!("{field}:{} ({captured:.6})  ", basis.n_modes()));
        }
        Ok(note.trim_end().to_string())
    })?;

    // Supremizer solves, their PODs, and the energy table.
    let n_s = cfg.pod.sup1.s.max(cfg.pod.sup2.s);
    let n_s_bar = cfg.pod.sup1.s_bar.max(cfg.pod.sup2.s_bar);
    let mut parts = vec![
        "supremizers".into(),
        format!("s = {n_s}"),
        format!("s_bar = {n_s_bar}"),
        solver_toml.clone(),
    ];
    for f in ["q", "q_bar"] {
        parts.push(digest_file(&dir.join(snapshot_file(f)))?);
    }
    for f in fields {
        parts.push(digest_file(&dir.join(spectrum_file(f)))?);
    }
    let inputs = stage_inputs(&parts);
    let outputs = vec![
        "sup_s.snap".to_string(),
        "sup_s_bar.snap".to_string(),
        basis_file("s"),
        basis_file("s_bar"),
        spectrum_file("s"),
        spectrum_file("s_bar"),
        ENERGY_TABLE_FILE.to_string(),
    ];
    run_stage(&dir, &mut manifest, "supremizers", inputs, &outputs, || {
        let mut cumulative = Vec::new();
        for (pressure_field, sup_file, count) in
            [("q", "sup_s.snap", n_s), ("q_bar", "sup_s_bar.snap", n_s_bar)]
        {
            let pressures = load_snapshots(dir.join(snapshot_file(pressure_field)))?;
            let sup = solve_supremizers(&mesh, &pressures, &case.pressure, &params)?;
            save_snapshots(&sup, dir.join(sup_file))?;
            let basis =
                compute_basis(&correlation_matrix(&sup)?, &sup, ModeSelection::Count(count))?;
            let field = sup.field.clone();
            save_snapshots(&basis.modes, dir.join(basis_file(&field)))?;
            tables::write_spectrum_csv(
                &dir.join(spectrum_file(&field)),
                &basis.eigenvalues,
                &basis.cumulative,
            )?;
            cumulative.push(basis.cumulative);
        }
        let mut columns: Vec<(&str, Vec<f64>)> = Vec::new();
        for f in ["v", "q", "u", "q_bar"] {
            columns.push((f, tables::read_spectrum_cumulative(&dir.join(spectrum_file(f)))?));
        }
        columns.push(("s", cumulative[0].clone()));
        columns.push(("s_bar", cumulative[1].clone()));
        let borrowed: Vec<(&str, &[f64])> =
            columns.iter().map(|(n, c)| (*n, c.as_slice())).collect();
        tables::write_energy_table(&dir.join(ENERGY_TABLE_FILE), &borrowed)?;
        Ok(format!("s:{n_s} s_bar:{n_s_bar} modes"))
    })?;

    // Reduced operators, one container per closure.
    for mode in cfg.stabilization_modes() {
        let tag = mode.tag();
        let mut parts = vec!["operators".into(), tag.to_string()];
        for f in ["v", "u", "q", "q_bar", "s", "s_bar"] {
            parts.push(digest_file(&dir.join(basis_file(f)))?);
        }
        parts.push(digest_file(&dir.join(LIFTING_FILE))?);
        parts.push(digest_file(&dir.join(MESH_FILE))?);
        match mode {
            StabilizationMode::Sup1 => parts.push(toml::to_string(&cfg.pod.sup1)?),
            StabilizationMode::Sup2 => parts.push(toml::to_string(&cfg.pod.sup2)?),
            _ => {}
        }
        let inputs = stage_inputs(&parts);
        let stage = format!("operators:{tag}");
        run_stage(
            &dir,
            &mut manifest,
            &stage,
            inputs,
            &[operators_file(mode)],
            || {
                let spaces = build_spaces(cfg, &mesh, mode, &dir)?;
                let ops = assemble(&mesh, &spaces, &case)?;
                save_operators(&ops, dir.join(operators_file(mode)))?;
                Ok(format!(
                    "n_v={} n_q={} n_u={} n_q_bar={}",
                    ops.n_evolve(),
                    ops.n_pressure(),
                    ops.n_filter(),
                    ops.n_pressure_bar()
                ))
            },
        )?;
    }
    println!("offline artifacts in `{}`", dir.display());
    Ok(())
}

fn load_basis(dir: &Path, field: &str) -> anyhow::Result<PodBasis> {
    let path = require(dir, &basis_file(field))?;
    Ok(PodBasis::from_modes(load_snapshots(path)?))
}

/// Rebuild the reduced spaces a closure was assembled with from the
/// offline artifacts.
pub fn build_spaces(
    cfg: &RunConfig,
    mesh: &Mesh,
    mode: StabilizationMode,
    dir: &Path,
) -> anyhow::Result<RomSpaces> {
    let lifting = load_lifting(require(dir, LIFTING_FILE)?, mesh)?;
    let v = load_basis(dir, "v")?;
    let u = load_basis(dir, "u")?;
    let q = load_basis(dir, "q")?;
    let q_bar = load_basis(dir, "q_bar")?;
    let (v_space, u_space) = match mode {
        StabilizationMode::Nos | StabilizationMode::Ppe => {
            (EnrichedSpace::from_basis(&v), EnrichedSpace::from_basis(&u))
        }
        StabilizationMode::Sup1 => {
            let s = load_basis(dir, "s")?.truncated(cfg.pod.sup1.s)?;
            let s_bar = load_basis(dir, "s_bar")?.truncated(cfg.pod.sup1.s_bar)?;
            (
                enrich(&v, &[&s], SpaceVariant::Sup1)?,
                enrich(&u, &[&s_bar], SpaceVariant::Sup1)?,
            )
        }
        StabilizationMode::Sup2 => {
            let s = load_basis(dir, "s")?.truncated(cfg.pod.sup2.s)?;
            let s_bar = load_basis(dir, "s_bar")?.truncated(cfg.pod.sup2.s_bar)?;
            (
                enrich(&v, &[&s, &s_bar], SpaceVariant::Sup2)?,
                enrich(&u, &[&s_bar, &s], SpaceVariant::Sup2)?,
            )
        }
    };
    Ok(RomSpaces::build(mode, v_space, u_space, q, q_bar, lifting, mesh)?)
}

/// What one online run produced, for the caller's exit decision.
pub struct OnlineOutcome {
    pub diverged_at: Option<f64>,
    pub rows: usize,
    pub online_seconds: f64,
}

/// Time-step one closure and write its trajectory, reconstructions,
/// coefficient history, and timing sidecar under `rom_<mode>/`.
pub fn cmd_online(cfg: &RunConfig, mode: StabilizationMode) -> anyhow::Result<OnlineOutcome> {
    let dir = cfg.output.dir.clone();
    let _lock = DirLock::acquire(&dir)?;
    let mesh = load_mesh(require(&dir, MESH_FILE)?)?;
    let spaces = build_spaces(cfg, &mesh, mode, &dir)?;
    let ops = load_operators(require(&dir, &operators_file(mode))?)?;
    let case = CaseBcs::channel_cylinder(&mesh);
    let core_cfg = cfg.physics.to_core();
    let patch = mesh.patch_id("cylinder").map(|_| "cylinder");

    let wall = Instant::now();
    let run = run_rom(
        &mesh,
        &ops,
        &spaces,
        &case,
        &core_cfg,
        Some(cfg.schedule()),
        patch,
    )?;
    let wall_seconds = wall.elapsed().as_secs_f64();

    let sub = dir.join(rom_dir(mode));
    std::fs::create_dir_all(&sub)?;
    let mut buf = Vec::new();
    write_trajectory_csv(&run.trajectory, &mut buf)?;
    std::fs::write(sub.join("trajectory.csv"), buf)?;
    tables::write_coefficients_csv(&sub.join("coefficients.csv"), &run.coefficients)?;
    for (name, set) in [
        ("v", &run.snapshots.v),
        ("u", &run.snapshots.u),
        ("q", &run.snapshots.q),
        ("q_bar", &run.snapshots.q_bar),
    ] {
        save_snapshots(set, sub.join(format!("{name}.snap")))?;
    }
    let timing = OnlineTiming {
        online_seconds: run.online_seconds,
        wall_seconds,
        diverged_at: run.diverged_at,
    };
    std::fs::write(sub.join("timing.json"), serde_json::to_string_pretty(&timing)?)?;

    match run.diverged_at {
        Some(t) => println!(
            "{}: diverged at t = {t:.4} after {} rows; artifacts in `{}`",
            mode.tag(),
            run.trajectory.rows.len(),
            sub.display()
        ),
        None => println!(
            "{}: {} rows, online loop {:.3}s; artifacts in `{}`",
            mode.tag(),
            run.trajectory.rows.len(),
            run.online_seconds,
            sub.display()
        ),
    }
    Ok(OnlineOutcome {
        diverged_at: run.diverged_at,
        rows: run.trajectory.rows.len(),
        online_seconds: run.online_seconds,
    })
}

fn truncate_set(set: &SnapshotSet, n: usize) -> SnapshotSet {
    let mut out = SnapshotSet::like(set, &set.field);
    for i in 0..n.min(set.n_snapshots()) {
        out.push_column(set.column(i), set.times[i]);
    }
    out
}

fn truncate_series(series: &CoefficientSeries, n: usize) -> CoefficientSeries {
    CoefficientSeries {
        times: series.times[..n].to_vec(),
        cd: series.cd[..n].to_vec(),
        cl: series.cl[..n].to_vec(),
        cd_tangent: series.cd_tangent[..n].to_vec(),
        cl_normal: series.cl_normal[..n].to_vec(),
    }
}

/// Run every configured closure and tabulate field errors, coefficient
/// errors, and speed-ups against the stored full-order run.
pub fn cmd_compare(cfg: &RunConfig) -> anyhow::Result<()> {
    let dir = cfg.output.dir.clone();
    let _lock = DirLock::acquire(&dir)?;
    let mesh = load_mesh(require(&dir, MESH_FILE)?)?;
    let case = CaseBcs::channel_cylinder(&mesh);
    let core_cfg = cfg.physics.to_core();
    let patch = mesh.patch_id("cylinder").map(|_| "cylinder");

    let reference: Vec<SnapshotSet> = ["v", "u", "q", "q_bar"]
        .iter()
        .map(|f| Ok(load_snapshots(require(&dir, &snapshot_file(f))?)?))
        .collect::<anyhow::Result<_>>()?;
    let fom_series = tables::read_steps_series(&require(&dir, STEPS_FILE)?)?;
    let meta: FomMeta =
        serde_json::from_str(&std::fs::read_to_string(require(&dir, FOM_META_FILE)?)?)?;

    let mut error_rows = Vec::new();
    let mut coefficient_rows = Vec::new();
    let mut timings = Timings {
        fom_seconds: meta.wall_seconds,
        modes: BTreeMap::new(),
    };

    println!("mode    E_v(avg)   E_u(avg)   E_q(avg)   E_qb(avg)  E_cd     E_cl     speedup");
    for mode in cfg.stabilization_modes() {
        let tag = mode.tag();
        let spaces = build_spaces(cfg, &mesh, mode, &dir)?;
        let ops = load_operators(require(&dir, &operators_file(mode))?)?;
        let run = run_rom(
            &mesh,
            &ops,
            &spaces,
            &case,
            &core_cfg,
            Some(cfg.schedule()),
            patch,
        )?;

        let candidates = [
            &run.snapshots.v,
            &run.snapshots.u,
            &run.snapshots.q,
            &run.snapshots.q_bar,
        ];
        let n = run.snapshots.n_snapshots();
        let series: Vec<ErrorSeries> = reference
            .iter()
            .zip(candidates)
            .map(|(r, c)| Ok(error_series(&truncate_set(r, n), c)?))
            .collect::<anyhow::Result<_>>()?;
        let refs: [&ErrorSeries; 4] = [&series[0], &series[1], &series[2], &series[3]];
        error_rows.extend(tables::error_table_rows(tag, &refs, run.diverged_at));
        tables::write_error_series_csv(&dir.join(format!("error_series_{tag}.csv")), &refs)?;

        let m = run.coefficients.len();
        let coeff = if patch.is_some() && m > 0 {
            Some(coefficient_errors(
                &truncate_series(&fom_series, m),
                &run.coefficients,
            )?)
        } else {
            None
        };
        coefficient_rows.push(match coeff {
            Some(c) => vec![
                tag.to_string(),
                tables::fmt(c.e_cd),
                tables::fmt(c.e_cl),
                tables::fmt(c.e_cd_tangent),
                tables::fmt(c.e_cl_normal),
            ],
            None => vec![tag.to_string(), String::new(), String::new(), String::new(), String::new()],
        });

        let speedup = meta.wall_seconds / run.online_seconds.max(1e-12);
        timings.modes.insert(
            tag.to_string(),
            ModeTiming {
                online_seconds: run.online_seconds,
                speedup,
                diverged_at: run.diverged_at,
            },
        );

        let avg = |s: &ErrorSeries| {
            if s.errors.is_empty() {
                "   --   ".to_string()
            } else {
                format!("{:.2e}", s.avg())
            }
        };
        let (cd_txt, cl_txt) = match coeff {
            Some(c) => (format!("{:.3}", c.e_cd), format!("{:.3}", c.e_cl)),
            None => ("  --  ".into(), "  --  ".into()),
        };
        println!(
            "{tag:<7} {:<10} {:<10} {:<10} {:<10} {cd_txt:<8} {cl_txt:<8} {speedup:<8.0}{}",
            avg(&series[0]),
            avg(&series[1]),
            avg(&series[2]),
            avg(&series[3]),
            match run.diverged_at {
                Some(t) => format!("  diverged at t = {t:.4}"),
                None => String::new(),
            }
        );
    }

    tables::write_csv(
        &dir.join(ERROR_TABLE_FILE),
        &tables::ERROR_TABLE_HEADER,
        &error_rows,
    )?;
    tables::write_csv(
        &dir.join(COEFFICIENT_TABLE_FILE),
        &tables::COEFFICIENT_TABLE_HEADER,
        &coefficient_rows,
    )?;
    std::fs::write(
        dir.join(TIMINGS_FILE),
        serde_json::to_string_pretty(&timings)?,
    )?;
    println!(
        "tables in `{}`: {ERROR_TABLE_FILE}, {COEFFICIENT_TABLE_FILE}, {TIMINGS_FILE}",
        dir.display()
    );
    Ok(())
}

/// Generate the benchmark mesh and save it in the text format.
pub fn cmd_mesh_gen(target_cells: usize, refinement_bias: f64, out: &Path) -> anyhow::Result<()> {
    let mesh = generate_cylinder_mesh(target_cells, refinement_bias).map_err(|e| match e {
        lesrom_core::CoreError::MeshGeneration(msg) => anyhow::Error::new(ConfigError(msg)),
        other => anyhow::Error::new(other),
    })?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    save_mesh(&mesh, out)?;
    let q = mesh.quality();
    println!(
        "wrote `{}`: {} cells, {} faces, {} patches",
        out.display(),
        mesh.n_cells(),
        mesh.n_faces(),
        mesh.patches.len()
    );
    println!(
        "quality: max non-orthogonality {:.1} deg, max skewness {:.3}, max aspect ratio {:.1}",
        q.max_non_orthogonality_deg, q.max_skewness, q.max_aspect_ratio
    );
    Ok(())
}
