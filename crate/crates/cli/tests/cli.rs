use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::thread;

use featurekit::ingest::project_forward;
use featurekit::interchange;
use featurekit::model::{get_path, AttributeValue, Attributes};
use featurekit::{Crs, FeatureCollection, Geometry, Polygon, RawFeature};
use tempfile::TempDir;

const ONE_BUILDING: &str = r#"{"version":0.6,"elements":[
    {"type":"node","id":1,"lat":40.7,"lon":-74.0},
    {"type":"node","id":2,"lat":40.7,"lon":-73.999},
    {"type":"node","id":3,"lat":40.701,"lon":-73.999},
    {"type":"node","id":4,"lat":40.701,"lon":-74.0},
    {"type":"way","id":10,"nodes":[1,2,3,4,1],"tags":{"building":"yes","height":"42"}}
]}"#;

fn featurekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_featurekit"))
        .args(args)
        .env_remove("FEATUREKIT_OVERPASS_URL")
        .output()
        .expect("binary runs")
}

fn text(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: Output) -> Output {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        o.status.code(),
        stdout(&o),
        stderr(&o)
    );
    o
}

fn read(p: &Path) -> FeatureCollection {
    interchange::from_bytes(&fs::read(p).unwrap()).unwrap()
}

fn save(dir: &Path, name: &str, c: &FeatureCollection) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, interchange::to_bytes_pretty(c)).unwrap();
    p
}

fn number(v: f64) -> AttributeValue {
    AttributeValue::Number(v)
}

fn square(x0: f64, side: f64) -> Polygon {
    Polygon::from_xy(&[(x0, 0.0), (x0 + side, 0.0), (x0 + side, side), (x0, side)])
}

/// Two unit squares, three points in the first and two outside both.
fn squares_and_points(dir: &Path) -> (PathBuf, PathBuf) {
    let squares = (0..2)
        .map(|i| {
            let mut a = Attributes::new();
            a.insert("height".into(), number(10.0 * (i + 1) as f64));
            RawFeature::new(
                Geometry::polygon(Crs::Mercator, square(10.0 * i as f64, 1.0)),
                a,
            )
            .with_id(i as u64 + 1)
        })
        .collect();
    let points = [
        (0.2, 0.2, 1.0),
        (0.5, 0.5, 2.0),
        (0.9, 0.1, 3.0),
        (5.0, 5.0, 9.0),
        (-3.0, 0.5, 9.0),
    ]
    .iter()
    .map(|&(x, y, v)| {
        let mut a = Attributes::new();
        a.insert("v".into(), number(v));
        RawFeature::new(Geometry::point(Crs::Mercator, x, y), a)
    })
    .collect();
    (
        save(
            dir,
            "squares.json",
            &FeatureCollection::new("blocks", Crs::Mercator, squares).unwrap(),
        ),
        save(
            dir,
            "points.json",
            &FeatureCollection::new("noise", Crs::Mercator, points).unwrap(),
        ),
    )
}

fn geotiff(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures/geotiff")
        .join(name)
}

#[test]
fn ingest_overpass_file_with_one_building() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("raw.json");
    fs::write(&input, ONE_BUILDING).unwrap();
    let out = dir.path().join("layers");
    ok(featurekit(&[
        "ingest",
        "--source",
        "overpass-file",
        "--input",
        text(&input),
        "--out-dir",
        text(&out),
        "--layers",
        "buildings",
    ]));
    let c = read(&out.join("buildings.json"));
    assert_eq!(c.len(), 1);
    let f = &c.features()[0];
    assert_eq!(f.id.0, 10);
    assert_eq!(f.attributes["height"], number(42.0));
    assert_eq!(c.crs(), Crs::Mercator);
}

#[test]
fn ingest_csv_points_are_projected() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("stations.csv");
    fs::write(&input, "lon,lat,name\n-74.0,40.7,a\n-73.95,40.75,b\n").unwrap();
    let o = ok(featurekit(&[
        "ingest",
        "--source",
        "csv",
        "--input",
        text(&input),
        "--out-dir",
        text(dir.path()),
    ]));
    assert!(stdout(&o).contains("stations: 2 points"));
    let c = read(&dir.path().join("stations.json"));
    let (x, y) = project_forward(-74.0, 40.7).unwrap();
    let p = c.features()[0].geometry.representative_point();
    assert_eq!((p.x, p.y), (x, y));
}

#[test]
fn ingest_geotiff_prints_band_summary() {
    let dir = TempDir::new().unwrap();
    let o = ok(featurekit(&[
        "ingest",
        "--source",
        "geotiff",
        "--input",
        text(&geotiff("u8_2x2.tif")),
        "--out-dir",
        text(dir.path()),
    ]));
    let s = stdout(&o);
    assert!(s.contains("2x2 pixels, 1 band(s)"), "{s}");
    assert!(
        s.contains("band 0: min 1 max 4 mean 2.500000 valid 4"),
        "{s}"
    );
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("u8_2x2.raster.json")).unwrap()).unwrap();
    assert_eq!(manifest["width"], 2);
}

#[test]
fn ingest_reports_data_errors_with_exit_one() {
    let dir = TempDir::new().unwrap();
    let o = featurekit(&[
        "ingest",
        "--source",
        "geotiff",
        "--input",
        text(&geotiff("lzw_u16.tif")),
        "--out-dir",
        text(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("lzw_u16.tif"), "{}", stderr(&o));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"elements\": [").unwrap();
    let o = featurekit(&[
        "ingest",
        "--source",
        "overpass-file",
        "--input",
        text(&bad),
        "--out-dir",
        text(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

/// Serves one 429 and then the building document, one connection each.
fn throttling_server() -> (String, thread::JoinHandle<usize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/api/interpreter", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let mut served = 0;
        for stream in listener.incoming().take(2) {
            let mut stream = stream.unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                if line == "\r\n" || line.is_empty() {
                    break;
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            assert!(String::from_utf8(body).unwrap().starts_with("data="));
            let reply = if served == 0 {
                "HTTP/1.1 429 Too Many Requests\r\nRetry-After: 0\r\nContent-Length: 0\r\nConnection: close\r\n\r\n".to_owned()
            } else {
                format!(
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    ONE_BUILDING.len(),
                    ONE_BUILDING
                )
            };
            stream.write_all(reply.as_bytes()).unwrap();
            served += 1;
        }
        served
    });
    (url, handle)
}

#[test]
fn overpass_fetch_retries_and_keeps_raw_response() {
    let dir = TempDir::new().unwrap();
    let (url, server) = throttling_server();
    let o = Command::new(env!("CARGO_BIN_EXE_featurekit"))
        .args([
            "ingest",
            "--source",
            "overpass-fetch",
            "--bbox",
            "-74.01,40.69,-73.99,40.71",
            "--layers",
            "buildings",
        ])
        .args(["--out-dir", text(dir.path())])
        .env("FEATUREKIT_OVERPASS_URL", &url)
        .output()
        .unwrap();
    let o = ok(o);
    assert_eq!(server.join().unwrap(), 2);
    assert!(stderr(&o).contains("HTTP 429"));
    let raw: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("overpass_"))
        .collect();
    assert_eq!(raw.len(), 1);
    assert_eq!(fs::read_to_string(raw[0].path()).unwrap(), ONE_BUILDING);
    assert_eq!(read(&dir.path().join("buildings.json")).len(), 1);
}

#[test]
fn query_counts_points_per_square_deterministically() {
    let dir = TempDir::new().unwrap();
    let (squares, points) = squares_and_points(dir.path());
    let mut outputs = Vec::new();
    for (run, extra) in [(0, None), (1, None), (2, Some("--sequential"))] {
        let out = dir.path().join(format!("joined{run}.json"));
        let mut args = vec![
            "query",
            "--root",
            text(&squares),
            "--join",
            text(&points),
            "--agg",
            "count:n",
            "--agg",
            "avg:v=mean_v",
            "--out",
            text(&out),
        ];
        args.extend(extra);
        ok(featurekit(&args));
        outputs.push(fs::read(&out).unwrap());
    }
    assert!(
        outputs.windows(2).all(|w| w[0] == w[1]),
        "output differs between runs"
    );
    let c = read(&dir.path().join("joined0.json"));
    let counts: Vec<_> = c
        .features()
        .iter()
        .map(|f| get_path(&f.attributes, "sjoin.count.n").cloned())
        .collect();
    assert_eq!(counts, vec![Some(number(3.0)), Some(number(0.0))]);
    assert_eq!(
        get_path(&c.features()[0].attributes, "sjoin.avg.mean_v"),
        Some(&number(2.0))
    );
    assert_eq!(
        get_path(&c.features()[1].attributes, "sjoin.avg.mean_v"),
        Some(&AttributeValue::Null)
    );
}

#[test]
fn query_filters_and_usage_errors() {
    let dir = TempDir::new().unwrap();
    let (squares, points) = squares_and_points(dir.path());
    let out = dir.path().join("kept.json");
    ok(featurekit(&[
        "query",
        "--root",
        text(&squares),
        "--where-bbox",
        "5,-1,20,2",
        "--out",
        text(&out),
    ]));
    assert_eq!(read(&out).ids().map(|i| i.0).collect::<Vec<_>>(), vec![2]);
    ok(featurekit(&[
        "query",
        "--root",
        text(&squares),
        "--what",
        "height>=15",
        "--out",
        text(&out),
    ]));
    assert_eq!(read(&out).ids().map(|i| i.0).collect::<Vec<_>>(), vec![2]);

    let o = featurekit(&[
        "query",
        "--root",
        text(&points),
        "--join",
        text(&squares),
        "--predicate",
        "nearest",
        "--out",
        text(&out),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = featurekit(&[
        "query",
        "--root",
        text(&squares),
        "--join",
        text(&points),
        "--agg",
        "median:v",
        "--out",
        text(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = featurekit(&[
        "query",
        "--root",
        text(&points),
        "--join",
        text(&squares),
        "--out",
        text(&out),
    ]);
    assert_eq!(o.status.code(), Some(1), "points cannot be join roots");
}

#[test]
fn compute_volume_and_syntax_errors() {
    let dir = TempDir::new().unwrap();
    let (squares, _) = squares_and_points(dir.path());
    let out = dir.path().join("volume.json");
    let o = featurekit(&[
        "compute",
        "--input",
        text(&squares),
        "--map",
        "x=height",
        "--map",
        "y=height",
        "--expr",
        "x * y",
        "--out-fields",
        "volume",
        "--out",
        text(&out),
    ]);
    ok(o);
    let c = read(&out);
    assert_eq!(c.features()[0].attributes["volume"], number(100.0));
    assert_eq!(c.features()[1].attributes["volume"], number(400.0));

    let o = featurekit(&[
        "compute",
        "--input",
        text(&squares),
        "--map",
        "x=height",
        "--expr",
        "x * * 2",
        "--out-fields",
        "v",
        "--out",
        text(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    let lines: Vec<&str> = err.lines().collect();
    let src = lines
        .iter()
        .position(|l| l.trim_end() == "  x * * 2")
        .expect("source line echoed");
    assert_eq!(lines[src + 1], "      ^", "{err}");
}

#[test]
fn linfit_over_raster_joined_roads_matches_least_squares() {
    let dir = TempDir::new().unwrap();
    let hours: Vec<f64> = (0..24).map(f64::from).collect();
    let roads: Vec<RawFeature> = [(-8241955.0, 4961955.0), (-8240000.0, 4960500.0)]
        .iter()
        .map(|&(x, y)| {
            let mut a = Attributes::new();
            a.insert("hours".into(), AttributeValue::Array(hours.clone()));
            RawFeature::new(
                Geometry::polyline(Crs::Mercator, &[(x, y), (x + 500.0, y - 300.0)]),
                a,
            )
        })
        .collect();
    let roads = save(
        dir.path(),
        "roads.json",
        &FeatureCollection::new("roads", Crs::Mercator, roads).unwrap(),
    );
    let sampled = dir.path().join("sampled.json");
    let heat = geotiff("heat_24band_f32.tif");
    ok(featurekit(&[
        "query",
        "--root",
        text(&roads),
        "--raster",
        text(&heat),
        "--raster-field",
        "lst",
        "--out",
        text(&sampled),
    ]));
    let trend = dir.path().join("trend.json");
    ok(featurekit(&[
        "compute",
        "--input",
        text(&sampled),
        "--map",
        "xs=hours",
        "--map",
        "ys=lst",
        "--expr",
        "linfit(xs, ys)",
        "--out-fields",
        "trend.slope,trend.intercept",
        "--out",
        text(&trend),
    ]));

    let expected: serde_json::Value =
        serde_json::from_slice(&fs::read(geotiff("expected.json")).unwrap()).unwrap();
    let heat_ref = &expected["heat_24band_f32.tif"];
    let width = heat_ref["width"].as_u64().unwrap() as usize;
    let band = |b: usize, col: usize, row: usize| {
        heat_ref["bands"][b][row * width + col].as_f64().unwrap()
    };
    for f in read(&trend).features() {
        // Raster means recomputed from the reference decoding: each vertex
        // falls in the pixel below-right of the tie point.
        let verts: Vec<(usize, usize)> = match &f.geometry.shape {
            featurekit::Shape::Polyline(ps) => ps
                .iter()
                .map(|p| {
                    (
                        ((p.x + 8242000.0) / 90.0).floor() as usize,
                        ((4962000.0 - p.y) / 90.0).floor() as usize,
                    )
                })
                .collect(),
            _ => unreachable!(),
        };
        let usable: Vec<_> = verts
            .iter()
            .filter(|&&(c, r)| (0..24).all(|b| band(b, c, r) != -9999.0))
            .collect();
        let ys: Vec<f64> = (0..24)
            .map(|b| usable.iter().map(|&&(c, r)| band(b, c, r)).sum::<f64>() / usable.len() as f64)
            .collect();
        let n = 24.0;
        let (mx, my) = (hours.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = hours
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum();
        let sxx: f64 = hours.iter().map(|x| (x - mx) * (x - mx)).sum();
        let (slope, intercept) = (sxy / sxx, my - sxy / sxx * mx);
        let got_s = get_path(&f.attributes, "trend.slope")
            .and_then(AttributeValue::as_f64)
            .unwrap();
        let got_i = get_path(&f.attributes, "trend.intercept")
            .and_then(AttributeValue::as_f64)
            .unwrap();
        assert!(
            (got_s - slope).abs() <= 1e-9 * slope.abs().max(1.0),
            "{got_s} vs {slope}"
        );
        assert!(
            (got_i - intercept).abs() <= 1e-9 * intercept.abs().max(1.0),
            "{got_i} vs {intercept}"
        );
    }
}

/// (vertices, triangles, lines) from an FKMESH01 header.
fn mesh_counts(bytes: &[u8]) -> (u32, u32, u32) {
    assert_eq!(&bytes[..8], b"FKMESH01");
    let name_len = u32::from_le_bytes(bytes[24..28].try_into().unwrap()) as usize;
    let at = 28 + name_len;
    let word = |k: usize| u32::from_le_bytes(bytes[at + 4 * k..at + 4 * k + 4].try_into().unwrap());
    (word(0), word(1), word(2))
}

#[test]
fn mesh_flat_extruded_and_mismatched_styles() {
    let dir = TempDir::new().unwrap();
    let (squares, points) = squares_and_points(dir.path());
    let flat = dir.path().join("flat.fkmesh");
    ok(featurekit(&[
        "mesh",
        "--input",
        text(&squares),
        "--out",
        text(&flat),
    ]));
    let bytes = fs::read(&flat).unwrap();
    assert_eq!(mesh_counts(&bytes).1, 4);
    let mesh = featurekit::mesh::import_mesh(&bytes).unwrap();
    let side = fs::read(dir.path().join("flat.fkmesh.json")).unwrap();
    assert_eq!(featurekit::mesh::mesh_from_sidecar(&side).unwrap(), mesh);

    let tall = dir.path().join("tall.fkmesh");
    ok(featurekit(&[
        "mesh",
        "--input",
        text(&squares),
        "--out",
        text(&tall),
        "--extrude-by",
        "height",
        "--sidecar",
        text(&dir.path().join("tall.json")),
    ]));
    // Two roof triangles and eight wall triangles per square.
    let (v, t, _) = mesh_counts(&fs::read(&tall).unwrap());
    assert_eq!(t, 20);
    assert!(v >= 8);

    let o = featurekit(&[
        "mesh",
        "--input",
        text(&points),
        "--out",
        text(&flat),
        "--extrude-by",
        "v",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = featurekit(&[
        "mesh",
        "--input",
        text(&squares),
        "--out",
        text(&flat),
        "--thematic",
        "height",
        "--domain",
        "0,20",
        "--stops",
        "#000000,#ffffff",
    ]);
    ok(o);
    let themed = featurekit::mesh::import_mesh(&fs::read(&flat).unwrap()).unwrap();
    let colors: Vec<_> = themed.colors.iter().map(|c| c.1).collect();
    assert_eq!(colors, vec![[128, 128, 128, 255], [255, 255, 255, 255]]);
}

#[test]
fn bench_warns_on_single_repetition() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("runs.csv");
    let o = ok(featurekit(&[
        "bench",
        "--scenario",
        "compute",
        "--sizes",
        "1000,2000",
        "--reps",
        "1",
        "--csv",
        text(&csv),
    ]));
    let err = stderr(&o);
    assert!(err.contains("variance is unreported"), "{err}");
    assert!(err.contains("only 2 sizes"), "{err}");
    assert!(stdout(&o).contains("log-log slope"));
    let rows = fs::read_to_string(&csv).unwrap();
    assert!(rows.starts_with("scenario,n,rep,wall_ms\n"));
    assert_eq!(rows.lines().count(), 3);
    let o = featurekit(&["bench", "--scenario", "render", "--sizes", "1,2"]);
    assert_eq!(o.status.code(), Some(2));
}
