use std::path::{Path, PathBuf};

use featurekit::bench::{increments, run_bench};
use featurekit::compute::{run_analytical_with, CompileError, ComputeError, ComputeProgram};
use featurekit::ingest::{
    extract_layers, parse_csv_points, parse_geojson, parse_geotiff, parse_overpass, CsvOptions,
    GeoJsonOptions, Layer, LayerConfig, LayerSet, RasterGrid,
};
use featurekit::mesh::{
    apply_thematic, build_layer_mesh_with, export_mesh, mesh_sidecar, ColorScale, LayerStyle,
    MeshError, Rgba, ScaleKind,
};
use featurekit::spatial::{
    filter_what, filter_where, raster_join_with, spatial_join_with, AggregateFn, AggregateSpec,
    Comparison, JoinPredicate, Region, SpatialError,
};
use featurekit::{BoundingBox, ExecMode};
use serde_json::json;

use crate::failure::{Classify, CmdResult, Failure};
use crate::io::{self, floats};
use crate::{overpass, BenchArgs, ComputeArgs, IngestArgs, MeshArgs, Predicate, QueryArgs, Source};

fn mode(sequential: bool) -> ExecMode {
    if sequential {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    }
}

fn bbox_arg(text: &str, what: &str) -> CmdResult<BoundingBox> {
    let v = floats(text, 4, what)?;
    if v[0] >= v[2] || v[1] >= v[3] {
        return Err(Failure::usage(format!(
            "{what} must be min_x,min_y,max_x,max_y with min < max"
        )));
    }
    Ok(BoundingBox::new(v[0], v[1], v[2], v[3]))
}

fn input(args: &IngestArgs) -> CmdResult<&Path> {
    args.input
        .as_deref()
        .ok_or_else(|| Failure::usage("--input is required for this source"))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "collection".into())
}

pub fn ingest(args: &IngestArgs) -> CmdResult {
    let area = args
        .bbox
        .as_deref()
        .map(|b| bbox_arg(b, "--bbox"))
        .transpose()?;
    match args.source {
        Source::OverpassFile => {
            let path = input(args)?;
            ingest_overpass(args, &io::read(path)?, path, area)
        }
        Source::OverpassFetch => {
            let area =
                area.ok_or_else(|| Failure::usage("--bbox is required for overpass-fetch"))?;
            let url = overpass::endpoint();
            let raw = overpass::fetch(&url, &overpass::bbox_query(&area))?;
            let saved = args.out_dir.join(format!(
                "overpass_{}_{}_{}_{}.json",
                area.min_x, area.min_y, area.max_x, area.max_y
            ));
            io::write(&saved, &raw)?;
            println!("saved raw response to {}", saved.display());
            ingest_overpass(args, &io::read(&saved)?, &saved, Some(area))
        }
        Source::Geojson => {
            let path = input(args)?;
            let name = args.name.clone().unwrap_or_else(|| stem(path));
            let opts = GeoJsonOptions {
                name: Some(name.clone()),
                project: !args.geographic,
            };
            let c = parse_geojson(&io::read(path)?, &opts).data_ctx(path.display())?;
            let out = args.out_dir.join(format!("{name}.json"));
            io::write_collection(&out, &c)?;
            println!("{name}: {} features -> {}", c.len(), out.display());
            Ok(())
        }
        Source::Csv => {
            let path = input(args)?;
            let mut opts = CsvOptions::new(&args.lon_column, &args.lat_column);
            opts.name = args.name.clone().unwrap_or_else(|| stem(path));
            opts.project = !args.geographic;
            let parsed = parse_csv_points(&io::read(path)?, &opts).data_ctx(path.display())?;
            let out = args.out_dir.join(format!("{}.json", opts.name));
            io::write_collection(&out, &parsed.collection)?;
            println!(
                "{}: {} points -> {}",
                opts.name,
                parsed.collection.len(),
                out.display()
            );
            if parsed.skipped_rows > 0 {
                eprintln!(
                    "warning: skipped {} row(s) with unusable coordinates",
                    parsed.skipped_rows
                );
            }
            Ok(())
        }
        Source::Geotiff => {
            let path = input(args)?;
            let grid = parse_geotiff(&io::read(path)?).data_ctx(path.display())?;
            let name = args.name.clone().unwrap_or_else(|| stem(path));
            let manifest = raster_manifest(&grid, path);
            let out = args.out_dir.join(format!("{name}.raster.json"));
            io::write(
                &out,
                &serde_json::to_vec_pretty(&manifest).expect("manifest serializes"),
            )?;
            println!(
                "{name}: {}x{} pixels, {} band(s), {}",
                grid.width,
                grid.height,
                grid.band_count(),
                grid.crs
            );
            for (b, s) in band_summaries(&grid).iter().enumerate() {
                match s {
                    Some((lo, hi, mean, n)) => {
                        println!("  band {b}: min {lo} max {hi} mean {mean:.6} valid {n}")
                    }
                    None => println!("  band {b}: no valid pixels"),
                }
            }
            Ok(())
        }
    }
}

fn ingest_overpass(
    args: &IngestArgs,
    bytes: &[u8],
    path: &Path,
    area: Option<BoundingBox>,
) -> CmdResult {
    let doc = parse_overpass(bytes).data_ctx(path.display())?;
    let layers: Vec<Layer> = match &args.layers {
        Some(list) => list
            .split(',')
            .map(|s| s.trim().parse::<Layer>())
            .collect::<Result<_, _>>()
            .map_err(Failure::usage)?,
        None if area.is_some() => Layer::ALL.to_vec(),
        None => Layer::ALL
            .into_iter()
            .filter(|l| *l != Layer::Surface)
            .collect(),
    };
    let set = LayerSet::new(layers).ok_or_else(|| Failure::usage("--layers is empty"))?;
    if set.contains(Layer::Surface) && area.is_none() {
        return Err(Failure::usage("the surface layer needs --bbox"));
    }
    let area = area.unwrap_or(BoundingBox::new(-180.0, -80.0, 180.0, 80.0));
    let extraction =
        extract_layers(&doc, &set, &area, &LayerConfig::default()).data_ctx(path.display())?;
    for (layer, c) in &extraction.layers {
        let out = args.out_dir.join(format!("{layer}.json"));
        io::write_collection(&out, c)?;
        println!("{layer}: {} features -> {}", c.len(), out.display());
    }
    if doc.dropped_ways > 0 {
        eprintln!(
            "warning: dropped {} way(s) with missing nodes",
            doc.dropped_ways
        );
    }
    if extraction.dropped_relations > 0 {
        eprintln!(
            "warning: dropped {} multipolygon relation(s) with open rings",
            extraction.dropped_relations
        );
    }
    if extraction.id_collisions > 0 {
        eprintln!(
            "warning: skipped {} relation(s) whose id collides with a way",
            extraction.id_collisions
        );
    }
    Ok(())
}

/// (min, max, mean, valid count) per band over non-nodata pixels.
fn band_summaries(grid: &RasterGrid) -> Vec<Option<(f64, f64, f64, usize)>> {
    grid.bands
        .iter()
        .map(|band| {
            let valid: Vec<f64> = band
                .iter()
                .copied()
                .filter(|v| !grid.is_nodata(*v) && !v.is_nan())
                .collect();
            if valid.is_empty() {
                return None;
            }
            let lo = valid.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = valid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Some((
                lo,
                hi,
                valid.iter().sum::<f64>() / valid.len() as f64,
                valid.len(),
            ))
        })
        .collect()
}

fn raster_manifest(grid: &RasterGrid, source: &Path) -> serde_json::Value {
    let bands: Vec<serde_json::Value> = band_summaries(grid)
        .into_iter()
        .map(|s| match s {
            Some((lo, hi, mean, n)) => json!({"min": lo, "max": hi, "mean": mean, "valid": n}),
            None => json!({"min": null, "max": null, "mean": null, "valid": 0}),
        })
        .collect();
    json!({
        "source": source.display().to_string(),
        "width": grid.width,
        "height": grid.height,
        "crs-tag": grid.crs.tag(),
        "pixel_scale": [grid.pixel_scale.0, grid.pixel_scale.1],
        "tiepoint": {"i": grid.tiepoint.i, "j": grid.tiepoint.j, "x": grid.tiepoint.x, "y": grid.tiepoint.y},
        "nodata": grid.nodata,
        "bands": bands,
    })
}

fn aggregate_arg(text: &str) -> CmdResult<AggregateSpec> {
    let (func, rest) = text.split_once(':').ok_or_else(|| {
        Failure::usage(format!(
            "--agg '{text}' must look like function:column[=field]"
        ))
    })?;
    let func: AggregateFn = func.parse().map_err(Failure::usage)?;
    let (column, field) = rest.split_once('=').unwrap_or((rest, rest));
    if column.is_empty() || field.is_empty() {
        return Err(Failure::usage(format!(
            "--agg '{text}' has an empty column or field"
        )));
    }
    Ok(if func == AggregateFn::Count {
        AggregateSpec::count(field)
    } else {
        AggregateSpec::new(func, column, field)
    })
}

fn spatial_failure(e: SpatialError) -> Failure {
    match e {
        SpatialError::MissingRadius
        | SpatialError::InvalidRadius(_)
        | SpatialError::InvalidRange => Failure::Usage(e.into()),
        other => Failure::Data(other.into()),
    }
}

pub fn query(args: &QueryArgs) -> CmdResult {
    let exec = mode(args.sequential);
    let mut c = io::read_collection(&args.root)?;
    if let Some(b) = &args.where_bbox {
        let region = Region::Box {
            crs: c.crs(),
            bbox: bbox_arg(b, "--where-bbox")?,
        };
        c = filter_where(&c, &region).map_err(spatial_failure)?;
    }
    if !args.what.is_empty() {
        let tests: Vec<Comparison> = args
            .what
            .iter()
            .map(|w| Comparison::parse(w))
            .collect::<Result<_, _>>()
            .map_err(Failure::usage)?;
        c = filter_what(&c, &tests);
    }
    if let Some(join_path) = &args.join {
        let predicate = match args.predicate {
            Predicate::Join => JoinPredicate::join(),
            Predicate::Nearest => {
                let r = args
                    .radius
                    .ok_or_else(|| Failure::usage("--predicate nearest needs --radius"))?;
                JoinPredicate::nearest(r)
            }
        };
        let aggs: Vec<AggregateSpec> = args
            .aggregates
            .iter()
            .map(|a| aggregate_arg(a))
            .collect::<Result<_, _>>()?;
        let join = io::read_collection(join_path)?;
        c = spatial_join_with(exec, &c, &join, predicate, &aggs).map_err(spatial_failure)?;
    } else if !args.aggregates.is_empty() {
        return Err(Failure::usage("--agg needs --join"));
    }
    if let Some(raster_path) = &args.raster {
        let grid = parse_geotiff(&io::read(raster_path)?).data_ctx(raster_path.display())?;
        c = raster_join_with(exec, &c, &grid, &args.raster_field).map_err(spatial_failure)?;
    }
    io::write_collection(&args.out, &c)?;
    println!(
        "{}: {} features -> {}",
        c.name(),
        c.len(),
        args.out.display()
    );
    Ok(())
}

/// The expression with a caret under character `position`.
fn caret(source: &str, position: usize) -> String {
    format!(
        "  {source}\n  {}^",
        " ".repeat(position.min(source.chars().count()))
    )
}

fn compute_failure(e: ComputeError, source: &str) -> Failure {
    match e {
        ComputeError::Compile(CompileError::Syntax {
            position,
            ref message,
        }) => Failure::Usage(anyhow::anyhow!(
            "syntax error at position {position}: {message}\n{}",
            caret(source, position)
        )),
        ComputeError::TypeMismatch { .. } | ComputeError::Model(_) => Failure::Data(e.into()),
        other => Failure::Usage(other.into()),
    }
}

pub fn compute(args: &ComputeArgs) -> CmdResult {
    let mut mapping = Vec::with_capacity(args.mapping.len());
    for m in &args.mapping {
        let (var, attr) = m
            .split_once('=')
            .filter(|(v, a)| !v.trim().is_empty() && !a.trim().is_empty())
            .ok_or_else(|| {
                Failure::usage(format!("--map '{m}' must look like variable=attribute"))
            })?;
        mapping.push((var.trim(), attr.trim()));
    }
    let fields: Vec<&str> = args.out_fields.split(',').map(str::trim).collect();
    let program = ComputeProgram::new(&args.expr, mapping, fields)
        .map_err(|e| compute_failure(e, &args.expr))?;
    let c = io::read_collection(&args.input)?;
    let run = run_analytical_with(mode(args.sequential), &c, &program)
        .map_err(|e| compute_failure(e, &args.expr))?;
    io::write_collection(&args.out, &run.collection)?;
    println!(
        "{}: {} features -> {}",
        run.collection.name(),
        run.collection.len(),
        args.out.display()
    );
    if run.missing_inputs > 0 {
        eprintln!(
            "warning: {} feature(s) had a missing or NaN input; results set to null",
            run.missing_inputs
        );
    }
    if run.non_finite_outputs > 0 {
        eprintln!(
            "warning: {} result value(s) were not finite and were written as null",
            run.non_finite_outputs
        );
    }
    Ok(())
}

fn hex_color(text: &str) -> CmdResult<Rgba> {
    let h = text.trim().trim_start_matches('#');
    let byte = |i: usize| u8::from_str_radix(&h[i..i + 2], 16);
    let parsed = match h.len() {
        6 => (|| Ok::<_, std::num::ParseIntError>([byte(0)?, byte(2)?, byte(4)?, 255]))(),
        8 => (|| Ok::<_, std::num::ParseIntError>([byte(0)?, byte(2)?, byte(4)?, byte(6)?]))(),
        _ => {
            return Err(Failure::usage(format!(
                "color '{text}' must be #rrggbb or #rrggbbaa"
            )))
        }
    };
    parsed.map_err(|_| Failure::usage(format!("color '{text}' is not hexadecimal")))
}

fn mesh_failure(e: MeshError) -> Failure {
    match e {
        MeshError::StyleMismatch(_) | MeshError::NonPositiveWidth(_) => Failure::Usage(e.into()),
        other => Failure::Data(other.into()),
    }
}

pub fn mesh(args: &MeshArgs) -> CmdResult {
    let mut style = LayerStyle {
        extrude_by: args.extrude_by.clone(),
        stroke_width: args.stroke_width,
        point_size: args.point_size,
        ..LayerStyle::default()
    };
    if let Some(color) = &args.color {
        let v = floats(color, 4, "--color")?;
        if v.iter()
            .any(|c| !(0.0..=255.0).contains(c) || c.fract() != 0.0)
        {
            return Err(Failure::usage(
                "--color channels must be integers in 0..=255",
            ));
        }
        style.base_color = [v[0] as u8, v[1] as u8, v[2] as u8, v[3] as u8];
    }
    let scale = match (&args.thematic, &args.domain, &args.stops) {
        (None, None, None) => None,
        (Some(_), Some(domain), Some(stops)) => {
            let domain: Vec<f64> = domain
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .usage()?;
            let stops: Vec<Rgba> = stops.split(',').map(hex_color).collect::<Result<_, _>>()?;
            let kind = if domain.len() == 3 {
                ScaleKind::Diverging
            } else {
                ScaleKind::Sequential
            };
            Some(ColorScale::new(kind, domain, stops).map_err(Failure::usage)?)
        }
        _ => {
            return Err(Failure::usage(
                "--thematic, --domain and --stops go together",
            ))
        }
    };
    let c = io::read_collection(&args.input)?;
    let mut mesh =
        build_layer_mesh_with(mode(args.sequential), &c, &style).map_err(mesh_failure)?;
    if let (Some(path), Some(scale)) = (&args.thematic, &scale) {
        let themed = apply_thematic(&mesh, &c, path, scale);
        if themed.missing_values > 0 {
            eprintln!(
                "warning: {} feature(s) lack a numeric '{path}'; colored neutral",
                themed.missing_values
            );
        }
        mesh = themed.mesh;
    }
    let sidecar: PathBuf = args.sidecar.clone().unwrap_or_else(|| {
        let mut s = args.out.clone().into_os_string();
        s.push(".json");
        s.into()
    });
    io::write(&args.out, &export_mesh(&mesh))?;
    io::write(&sidecar, &mesh_sidecar(&mesh))?;
    println!(
        "{}: {} vertices, {} triangles -> {} (+ {})",
        mesh.layer,
        mesh.vertex_count(),
        mesh.triangle_count(),
        args.out.display(),
        sidecar.display()
    );
    Ok(())
}

pub fn bench(args: &BenchArgs) -> CmdResult {
    let sizes: Vec<usize> = match (&args.sizes, args.max) {
        (Some(list), _) => list
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .usage()?,
        (None, Some(max)) => increments(max, args.steps),
        (None, None) => return Err(Failure::usage("give --sizes or --max")),
    };
    let report = run_bench(
        args.scenario,
        &sizes,
        args.reps,
        mode(args.sequential),
        args.seed,
    )
    .usage()?;
    for w in report.warnings() {
        eprintln!("warning: {w}");
    }
    print!("{}", report.to_table());
    if let Some(path) = &args.csv {
        io::write(path, report.to_csv().as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_flags() {
        assert_eq!(
            aggregate_arg("count:n").unwrap().output_path(),
            "sjoin.count.n"
        );
        assert_eq!(
            aggregate_arg("avg:value=mean_value").unwrap().output_path(),
            "sjoin.avg.mean_value"
        );
        assert!(aggregate_arg("median:x").is_err());
    }

    #[test]
    fn colors_and_caret() {
        assert_eq!(hex_color("#ff8000").unwrap(), [255, 128, 0, 255]);
        assert!(hex_color("#ff80").is_err());
        assert_eq!(caret("x * * y", 4), "  x * * y\n      ^");
    }
}
