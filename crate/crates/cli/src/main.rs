//! `featurekit` command-line driver.
//!
//! Exit codes: 0 success, 1 data error, 2 usage error.

mod commands;
mod failure;
mod io;
mod overpass;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "featurekit",
    version,
    about = "Feature-centric urban data engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a raw source and write interchange collections.
    Ingest(IngestArgs),
    /// Filter a collection and enrich it by spatial or raster joins.
    Query(QueryArgs),
    /// Evaluate an expression per feature and write the results back.
    Compute(ComputeArgs),
    /// Build a triangle mesh file and its JSON sidecar.
    Mesh(MeshArgs),
    /// Time a scenario at several input sizes and fit the scaling slope.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Source {
    OverpassFile,
    OverpassFetch,
    Geojson,
    Csv,
    Geotiff,
}

#[derive(Args)]
pub struct IngestArgs {
    #[arg(long, value_enum)]
    pub source: Source,
    /// Input file; not used with overpass-fetch.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Geographic box min_lon,min_lat,max_lon,max_lat. Required for
    /// overpass-fetch and for the surface layer.
    #[arg(long, allow_hyphen_values = true)]
    pub bbox: Option<String>,
    /// Comma-separated OSM layers (surface, parks, water, roads, buildings).
    #[arg(long)]
    pub layers: Option<String>,
    /// Collection name for GeoJSON and CSV sources.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value = "lon")]
    pub lon_column: String,
    #[arg(long, default_value = "lat")]
    pub lat_column: String,
    /// Keep GeoJSON and CSV coordinates in degrees.
    #[arg(long)]
    pub geographic: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Predicate {
    Join,
    Nearest,
}

#[derive(Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub root: PathBuf,
    #[arg(long)]
    pub join: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "join")]
    pub predicate: Predicate,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Aggregate as function:column[=field], e.g. count:n or avg:value=mean_value.
    #[arg(long = "agg")]
    pub aggregates: Vec<String>,
    /// Keep root features whose representative point is in x0,y0,x1,y1.
    #[arg(long, allow_hyphen_values = true)]
    pub where_bbox: Option<String>,
    /// Attribute test such as "height>=20" or "kind in a,b"; repeatable.
    #[arg(long = "what")]
    pub what: Vec<String>,
    /// GeoTIFF sampled at every vertex of each root feature.
    #[arg(long)]
    pub raster: Option<PathBuf>,
    #[arg(long, default_value = "raster")]
    pub raster_field: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Run single-threaded.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args)]
pub struct ComputeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Variable binding var=attribute.path; repeatable.
    #[arg(long = "map")]
    pub mapping: Vec<String>,
    #[arg(long)]
    pub expr: String,
    /// Comma-separated result attribute names.
    #[arg(long)]
    pub out_fields: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args)]
pub struct MeshArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Sidecar path; defaults to the output path with ".json" appended.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    #[arg(long)]
    pub extrude_by: Option<String>,
    #[arg(long)]
    pub stroke_width: Option<f64>,
    #[arg(long, default_value_t = 4.0)]
    pub point_size: f64,
    /// Base color r,g,b,a.
    #[arg(long)]
    pub color: Option<String>,
    /// Attribute path colored through the scale given by --domain/--stops.
    #[arg(long)]
    pub thematic: Option<String>,
    /// min,max or min,mid,max (the latter makes a diverging scale).
    #[arg(long, allow_hyphen_values = true)]
    pub domain: Option<String>,
    /// Comma-separated #rrggbb or #rrggbbaa colors.
    #[arg(long)]
    pub stops: Option<String>,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, value_parser = clap::value_parser!(featurekit::bench::Scenario))]
    pub scenario: featurekit::bench::Scenario,
    /// Explicit comma-separated sizes.
    #[arg(long, conflicts_with_all = ["max", "steps"])]
    pub sizes: Option<String>,
    /// Largest size, split into --steps equal increments.
    #[arg(long)]
    pub max: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Also write the per-run CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(&a),
        Command::Query(a) => commands::query(&a),
        Command::Compute(a) => commands::compute(&a),
        Command::Mesh(a) => commands::mesh(&a),
        Command::Bench(a) => commands::bench(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
