// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use dspm::cache::FeatureCache;
use dspm::config::MatchOptions;
use dspm::error::{Error, Result};
use dspm::library::{base_dir, Entry, Manifest};
use dspm::output::{self, Metrics};
use dspm::pipeline::{self, Prepared};
use dspm::sweep::{self, DoubleDecomposition, Matcher};
use dspm::{io, matches, viz};
use dspm_core::decomp::Decomposition;
use dspm_core::label::{evaluate, paint, GroundTruth};
use dspm_core::search::match_exhaustive;
use dspm_core::slic::{generate_slic, SlicParams};
use dspm_core::synth::{self, TextureParams};

#[derive(Parser)]
#[command(name = "dspm", version, about = "Dual superpatch matching and exemplar-based labeling")]
struct Cli {
    /// Log progress to stderr
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Over-segment an image into SLIC superpixels
    Decompose(DecomposeArgs),
    /// Compute descriptors and store them in a cache file
    Features(FeaturesArgs),
    /// Match the superpixels of an image against a library
    Match(MatchArgs),
    /// Fuse the labels of matched library superpixels
    Label(LabelArgs),
    /// Score a label map against ground truth
    Eval(EvalArgs),
    /// Render match displacements or label overlays
    #[command(subcommand)]
    Viz(VizCommand),
    /// Write synthetic test data
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Run a parameter sweep and write a CSV table
    #[command(subcommand)]
    Sweep(SweepCommand),
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    image: PathBuf,
    /// Target number of superpixels
    #[arg(long, default_value_t = 250)]
    k: usize,
    #[arg(long, default_value_t = 10.0)]
    compactness: f64,
    #[arg(long, default_value_t = 10)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// 16-bit label map to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[command(flatten)]
    options: MatchOptions,
    /// Cache file to update
    #[arg(long)]
    cache: PathBuf,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Library manifest (TOML)
    #[arg(long)]
    library: PathBuf,
    #[command(flatten)]
    options: MatchOptions,
    /// TOML file with defaults for the matching options
    #[arg(long)]
    config: Option<PathBuf>,
    /// Descriptor cache, read and updated
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Worker threads, 0 for one per core
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Exact search over every library superpatch instead of the randomized one
    #[arg(long)]
    exhaustive: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LabelArgs {
    /// Label map of the query image
    #[arg(long)]
    labels: PathBuf,
    /// Library manifest with class maps
    #[arg(long)]
    library: PathBuf,
    #[arg(long)]
    matches: PathBuf,
    /// Number of runs fused per superpixel
    #[arg(long, default_value_t = 50)]
    k: usize,
    /// Class count when the manifest names none
    #[arg(long)]
    classes: Option<usize>,
    /// Query ground truth; accuracies are printed when given
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Class map to write, with a JSON sidecar of class names
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
}

#[derive(Subcommand)]
enum VizCommand {
    /// Color-coded displacement of each superpixel's best match
    Flow {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        library: PathBuf,
        #[arg(long)]
        matches: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Class colors over the image, annotated with accuracy when truth is given
    Overlay {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, requires = "gt")]
        labels: Option<PathBuf>,
        #[arg(long, requires = "labels")]
        gt: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Two mosaics of the same 16 oriented textures with ground-truth partitions
    Textures {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 64)]
        tile: usize,
        /// Gaussian noise variance added to both mosaics
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Labeled portrait-like scenes with SLIC decompositions and a manifest
    Scenes {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 250)]
        size: usize,
        #[arg(long, default_value_t = 250)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Randomly down- or up-scaled copies of a library
    Rescale {
        #[arg(long)]
        library: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Candidate factors, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 2.0 / 3.0, 1.5, 2.0])]
        factors: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct SuiteArgs {
    /// Manifest of images; each is decomposed twice with different seeds
    #[arg(long)]
    images: PathBuf,
    #[arg(long, default_value_t = 250)]
    k: usize,
    /// Exact matching instead of the randomized search
    #[arg(long)]
    exhaustive: bool,
    #[command(flatten)]
    options: MatchOptions,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum SweepCommand {
    /// Match displacement against the radius for each model variant
    Radius {
        #[command(flatten)]
        suite: SuiteArgs,
        #[arg(long, value_delimiter = ',', default_values_t = vec![10.0, 25.0, 50.0, 75.0, 100.0])]
        radii: Vec<f64>,
    },
    /// Match displacement against alpha
    Alpha {
        #[command(flatten)]
        suite: SuiteArgs,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.25, 0.5, 0.75, 1.0])]
        alphas: Vec<f64>,
    },
    /// Labeling accuracy per library radius set, with and without rescaling
    Scales {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Radius sets separated by ';', radii within a set by ','
        #[arg(long, default_value = "25;33;50;75;100;25,33,50,75,100;75,100")]
        sets: String,
        #[arg(long, default_value_t = 50)]
        k: usize,
        #[command(flatten)]
        options: MatchOptions,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Decompose(a) => decompose(a),
        Command::Features(a) => features(a),
        Command::Match(a) => match_cmd(a),
        Command::Label(a) => label(a),
        Command::Eval(a) => eval(a),
        Command::Viz(v) => viz_cmd(v),
        Command::Synth(s) => synth_cmd(s),
        Command::Sweep(s) => sweep_cmd(s),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn read_records(path: &Path) -> Result<Vec<dspm_core::MatchRecord>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    matches::read_matches(BufReader::new(f)).map_err(|m| Error::format(path, m))
}

fn load_library(path: &Path) -> Result<(Manifest, Vec<dspm::library::LibraryImage>)> {
    let m = Manifest::load(path)?;
    let images = m.read_images(&base_dir(path))?;
    Ok((m, images))
}

fn decompose(a: DecomposeArgs) -> Result<()> {
    let img = io::load_rgb(&a.image)?;
    let params = SlicParams { k_target: a.k, compactness: a.compactness, iterations: a.iterations, seed: a.seed };
    let d = generate_slic(&img, &params)?;
    log::info!("{} superpixels", d.len());
    io::save_label_map(&a.out, d.width(), d.height(), d.labels())
}

fn features(a: FeaturesArgs) -> Result<()> {
    let params = a.options.resolve()?;
    let img = io::load_rgb(&a.image)?;
    let d = io::load_decomposition(&a.labels, &img)?;
    let mut cache = FeatureCache::load(&a.cache)?;
    let t = cache.get_or_compute(&img, &d, &params.features)?;
    log::info!("{} regions, {} interfaces", t.region_count(), t.interface_count());
    cache.save(&a.cache)
}

fn match_cmd(a: MatchArgs) -> Result<()> {
    let file = match &a.config {
        Some(p) => MatchOptions::from_toml_file(p)?,
        None => MatchOptions::default(),
    };
    let params = a.options.or(file).resolve()?;
    let pool = pipeline::thread_pool(a.threads)?;
    let img = io::load_rgb(&a.image)?;
    let d = io::load_decomposition(&a.labels, &img)?;
    let (_, lib) = load_library(&a.library)?;

    let mut cache = a.cache.as_deref().map(FeatureCache::load).transpose()?;
    let mut items = vec![(img, d, None)];
    items.extend(lib.into_iter().map(|l| (l.image, l.decomp, None)));
    let mut prepared = pipeline::prepare_all(items, 1, &params.features, cache.as_mut(), &pool)?;
    if let (Some(c), Some(p)) = (&cache, &a.cache) {
        c.save(p)?;
    }
    let library = prepared.split_off(1);
    let query = &prepared[0];
    let refs = pipeline::library_refs(&library);
    let records = if a.exhaustive {
        match_exhaustive(query.image_ref(), &refs, &params.search)?
    } else {
        pipeline::search(query.image_ref(), &refs, &params.search, &pool)?
    };
    let mut out = create(&a.out)?;
    matches::write_matches(&mut out, &records).map_err(|e| Error::format(&a.out, e.to_string()))
}

fn label(a: LabelArgs) -> Result<()> {
    let (w, h, sp) = io::load_label_map(&a.labels)?;
    let d = Decomposition::from_labels(w, h, sp, dspm_core::LabelPolicy::Remap)
        .map_err(|e| Error::format(&a.labels, e.to_string()))?;
    let (manifest, lib) = load_library(&a.library)?;
    let n_classes = if manifest.classes.is_empty() {
        a.classes.ok_or_else(|| Error::Parameter("the manifest names no classes; pass --classes".into()))?
    } else {
        manifest.classes.len()
    };
    if n_classes == 0 || n_classes > 256 {
        return Err(Error::Parameter(format!("class count {n_classes} outside 1..=256")));
    }
    let names: Vec<String> = if manifest.classes.is_empty() {
        (0..n_classes).map(|i| format!("class{i}")).collect()
    } else {
        manifest.classes.clone()
    };
    let library = lib
        .into_iter()
        .map(|l| {
            let truth = l.classes.map(|c| GroundTruth::new(&l.decomp, c, n_classes)).transpose()?;
            let table = dspm_core::DescriptorTable::from_parts(
                0,
                Vec::new(),
                Vec::new(),
                Vec::new(),
                0,
                Vec::new(),
                Vec::new(),
            )
            .expect("empty table is consistent");
            Ok(Prepared { image: l.image, decomp: l.decomp, table, truth })
        })
        .collect::<Result<Vec<_>>>()?;
    let records = read_records(&a.matches)?;
    if let Some(r) = records.iter().find(|r| r.src_superpixel >= d.len()) {
        return Err(Error::format(&a.matches, format!("superpixel {} is not in the query", r.src_superpixel)));
    }
    let mut scales: Vec<f64> = records.iter().map(|r| r.scale).collect();
    scales.sort_by(f64::total_cmp);
    scales.dedup();
    let (pred, _) = pipeline::label_from_matches(&records, d.len(), &library, n_classes, &scales, a.k)?;
    let painted = paint(&pred, &d);
    output::write_labels(&a.out, w, h, &painted, &names)?;
    if let Some(gt) = &a.gt {
        let truth = GroundTruth::new(&d, io::load_class_map(gt, w, h)?, n_classes)?;
        println!("{}", Metrics::from(evaluate(&pred, &truth, &d)?).to_json());
    }
    Ok(())
}

/// Per-superpixel prediction and ground truth from painted class maps.
fn score(labels: &Path, pred: &Path, gt: &Path) -> Result<(Decomposition, Metrics)> {
    let (w, h, sp) = io::load_label_map(labels)?;
    let d = Decomposition::from_labels(w, h, sp, dspm_core::LabelPolicy::Remap)
        .map_err(|e| Error::format(labels, e.to_string()))?;
    let p = io::load_class_map(pred, w, h)?;
    let g = io::load_class_map(gt, w, h)?;
    let n = p.iter().chain(&g).copied().max().unwrap_or(0) as usize + 1;
    let pred_sp = GroundTruth::new(&d, p, n)?.majorities().to_vec();
    let truth = GroundTruth::new(&d, g, n)?;
    Ok((d.clone(), evaluate(&pred_sp, &truth, &d)?.into()))
}

fn eval(a: EvalArgs) -> Result<()> {
    let (_, m) = score(&a.labels, &a.pred, &a.gt)?;
    println!("{}", m.to_json());
    Ok(())
}

fn viz_cmd(v: VizCommand) -> Result<()> {
    match v {
        VizCommand::Flow { labels, library, matches, out } => {
            let (w, h, sp) = io::load_label_map(&labels)?;
            let d = Decomposition::from_labels(w, h, sp, dspm_core::LabelPolicy::Remap)
                .map_err(|e| Error::format(&labels, e.to_string()))?;
            let (_, lib) = load_library(&library)?;
            let records = read_records(&matches)?;
            let bad = records.iter().find(|r| {
                r.src_superpixel >= d.len() || lib.get(r.lib_image).is_none_or(|l| r.lib_superpixel >= l.decomp.len())
            });
            if let Some(r) = bad {
                return Err(Error::format(&matches, format!("record {r:?} does not fit the inputs")));
            }
            let decomps: Vec<&Decomposition> = lib.iter().map(|l| &l.decomp).collect();
            io::save_rgb(&out, &viz::displacement_map(&d, &decomps, &records))
        }
        VizCommand::Overlay { image, pred, labels, gt, out } => {
            let img = io::load_rgb(&image)?;
            let classes = io::load_class_map(&pred, img.width(), img.height())?;
            let caption = match (labels, gt) {
                (Some(l), Some(g)) => {
                    let (_, m) = score(&l, &pred, &g)?;
                    viz::accuracy_caption(m.superpixel_accuracy, m.pixel_accuracy)
                }
                _ => String::new(),
            };
            io::save_rgb(&out, &viz::label_overlay(&img, &classes, &caption))
        }
    }
}

fn synth_cmd(s: SynthCommand) -> Result<()> {
    match s {
        SynthCommand::Textures { out_dir, tile, noise, seed } => {
            if tile < 2 || !(noise >= 0.0) {
                return Err(Error::Parameter("tile must be at least 2 and noise non-negative".into()));
            }
            create_dir(&out_dir)?;
            let pair = synth::gen_textures(&TextureParams { tile, seed, ..TextureParams::default() });
            for i in 0..2 {
                let img = synth::add_noise(&pair.images[i], noise, seed.wrapping_add(i as u64));
                io::save_rgb(&out_dir.join(format!("texture_{i}.png")), &img)?;
                let d = &pair.decomps[i];
                io::save_label_map(&out_dir.join(format!("texture_{i}_sp.png")), d.width(), d.height(), d.labels())?;
                let cls: Vec<u16> = d.labels().iter().map(|&l| pair.texture_of[i][l as usize] as u16).collect();
                io::save_class_map(&out_dir.join(format!("texture_{i}_gt.png")), d.width(), d.height(), &cls)?;
            }
            Ok(())
        }
        SynthCommand::Scenes { out_dir, count, size, k, seed } => {
            if size < 8 || k == 0 {
                return Err(Error::Parameter("size must be at least 8 and k positive".into()));
            }
            create_dir(&out_dir)?;
            let mut manifest =
                Manifest { classes: synth::SCENE_CLASSES.iter().map(|s| s.to_string()).collect(), images: Vec::new() };
            for i in 0..count {
                let s = seed.wrapping_add(i as u64);
                let (img, cls) = synth::gen_labeled_scene(size, size, s);
                let img = synth::blur(&img, 1.0);
                let d = generate_slic(&img, &SlicParams { k_target: k, seed: s, ..SlicParams::default() })?;
                let entry = Entry {
                    image: format!("scene_{i:04}.png").into(),
                    labels: format!("scene_{i:04}_sp.png").into(),
                    classes: Some(format!("scene_{i:04}_gt.png").into()),
                };
                io::save_rgb(&out_dir.join(&entry.image), &img)?;
                io::save_label_map(&out_dir.join(&entry.labels), size, size, d.labels())?;
                io::save_class_map(&out_dir.join(entry.classes.as_ref().expect("set above")), size, size, &cls)?;
                manifest.images.push(entry);
            }
            manifest.save(&out_dir.join("manifest.toml"))
        }
        SynthCommand::Rescale { library, out_dir, factors, seed } => {
            if factors.is_empty() || factors.iter().any(|f| !(*f > 0.0)) {
                return Err(Error::Parameter("factors must be positive".into()));
            }
            let (m, lib) = load_library(&library)?;
            create_dir(&out_dir)?;
            let items: Vec<_> = lib.into_iter().map(|l| (l.image, l.decomp, l.classes)).collect();
            let scaled = synth::gen_scaled_library(&items, &factors, seed)?;
            let mut out = Manifest { classes: m.classes.clone(), images: Vec::new() };
            for (i, r) in scaled.iter().enumerate() {
                let entry = Entry {
                    image: format!("scaled_{i:04}.png").into(),
                    labels: format!("scaled_{i:04}_sp.png").into(),
                    classes: r.classes.as_ref().map(|_| format!("scaled_{i:04}_gt.png").into()),
                };
                let (w, h) = (r.image.width(), r.image.height());
                io::save_rgb(&out_dir.join(&entry.image), &r.image)?;
                io::save_label_map(&out_dir.join(&entry.labels), w, h, r.decomp.labels())?;
                if let (Some(c), Some(p)) = (&r.classes, &entry.classes) {
                    io::save_class_map(&out_dir.join(p), w, h, c)?;
                }
                out.images.push(entry);
            }
            out.save(&out_dir.join("manifest.toml"))
        }
    }
}

fn load_suite(a: &SuiteArgs) -> Result<Vec<DoubleDecomposition>> {
    let (_, lib) = load_library(&a.images)?;
    lib.into_iter()
        .map(|l| {
            let slic = |seed| generate_slic(&l.image, &SlicParams { k_target: a.k, seed, ..SlicParams::default() });
            let (query, reference) = (slic(1)?, slic(2)?);
            Ok(DoubleDecomposition { image: l.image, query, reference })
        })
        .collect()
}

fn parse_sets(s: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';')
        .map(|set| {
            set.split(',')
                .map(|r| r.trim().parse::<f64>().ok().filter(|v| *v > 0.0))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| Error::Parameter(format!("bad radius set {set:?}")))
        })
        .collect()
}

fn sweep_cmd(s: SweepCommand) -> Result<()> {
    match s {
        SweepCommand::Radius { suite, radii } => {
            let params = suite.options.resolve()?;
            let pool = pipeline::thread_pool(suite.threads)?;
            let matcher = if suite.exhaustive { Matcher::Exhaustive } else { Matcher::Randomized };
            let rows =
                sweep::radius_sweep(&load_suite(&suite)?, &radii, &params.search, &params.features, matcher, &pool)?;
            sweep::write_csv(create(&suite.out)?, &rows).map_err(|e| Error::format(&suite.out, e.to_string()))
        }
        SweepCommand::Alpha { suite, alphas } => {
            if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                return Err(Error::Parameter(format!("alpha {a} outside [0, 1]")));
            }
            let params = suite.options.resolve()?;
            let pool = pipeline::thread_pool(suite.threads)?;
            let matcher = if suite.exhaustive { Matcher::Exhaustive } else { Matcher::Randomized };
            let rows =
                sweep::alpha_sweep(&load_suite(&suite)?, &alphas, &params.search, &params.features, matcher, &pool)?;
            sweep::write_csv(create(&suite.out)?, &rows).map_err(|e| Error::format(&suite.out, e.to_string()))
        }
        SweepCommand::Scales { train, test, sets, k, options, threads, out } => {
            let params = options.resolve()?;
            let sets = parse_sets(&sets)?;
            let pool = pipeline::thread_pool(threads)?;
            let (m, train_imgs) = load_library(&train)?;
            let (_, test_imgs) = load_library(&test)?;
            let n_classes = m.classes.len().max(1);
            let prep = |imgs: Vec<dspm::library::LibraryImage>| {
                let items = imgs.into_iter().map(|l| (l.image, l.decomp, l.classes)).collect();
                pipeline::prepare_all(items, n_classes, &params.features, None, &pool)
            };
            let (train_p, test_p) = (prep(train_imgs)?, prep(test_imgs)?);
            let rows = sweep::scale_grid(&test_p, &train_p, n_classes, &sets, &params.search, k, &pool)?;
            sweep::write_csv(create(&out)?, &rows).map_err(|e| Error::format(&out, e.to_string()))
        }
    }
}
