use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use sha2::{Digest, Sha256};

use typimpute::eval::{evaluate_systems, EvaluationOptions, MissingPolicy, SystemOutput};
use typimpute::impute::{impute_dataset, ImputerConfig, LanguageVectors};
use typimpute::kb::{
    filter_dataset, parse_dataset, parse_dataset_with_gold, serialize_dataset, serialize_gold, Dataset,
    FilterThresholds,
};
use typimpute::kv::KeyValues;
use typimpute::split::{blank_with_ratios, build_controlled_split, random_split, SplitSpec};
use typimpute::{Error, Result};

/// Typological feature imputation: filtering, controlled splits, imputation
/// and evaluation.
#[derive(Parser, Debug)]
#[command(name = "typimpute", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Drop sparse languages and features until both thresholds hold.
    Filter(FilterArgs),
    /// Build train/test files with held-out genera and an exclusion radius.
    Split(SplitArgs),
    /// Blank a share of each language's observed cells.
    Blank(BlankArgs),
    /// Fill the open cells of a test file.
    Impute(ImputeArgs),
    /// Score filled test files against gold.
    Evaluate(EvaluateArgs),
    /// Render evaluation tables as a single markdown report.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct FilterArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 4)]
    min_features: usize,
    #[arg(long, default_value_t = 10)]
    min_languages: usize,
}

#[derive(Args, Debug)]
struct SplitArgs {
    #[arg(long)]
    input: PathBuf,
    /// Split spec (`key=value`); defaults apply to absent keys.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    radius_km: Option<f64>,
    /// Seeded 90/5/5 train/dev/test split instead of the controlled one.
    #[arg(long)]
    random: bool,
}

#[derive(Args, Debug)]
struct BlankArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct ImputeArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    imputer_config: Option<PathBuf>,
    /// Filled test file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Areal radius for prior features.
    #[arg(long)]
    areal_km: Option<f64>,
    /// Areal radius for the statistical back-off chain.
    #[arg(long)]
    radius_km: Option<f64>,
    #[arg(long)]
    vectors: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Gold companion file.
    #[arg(long)]
    gold: PathBuf,
    /// Blinded test file the systems were given.
    #[arg(long)]
    test: PathBuf,
    /// Filled test files, one per system; the file stem names the system.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Split spec whose held-out genera get their own rows.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 5000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Drop unanswered cells instead of scoring them as wrong.
    #[arg(long)]
    exclude_missing: bool,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Directory written by `evaluate`.
    #[arg(long)]
    input: PathBuf,
    /// Markdown file.
    #[arg(long)]
    out: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Records how an output was produced: the command, the effective
/// configuration and its hash, the seed and a digest of every input.
struct Manifest {
    command: &'static str,
    config: KeyValues,
    inputs: Vec<(String, PathBuf)>,
}

impl Manifest {
    fn new(command: &'static str) -> Self {
        Manifest {
            command,
            config: KeyValues::new(),
            inputs: Vec::new(),
        }
    }

    fn input(&mut self, name: impl Into<String>, path: &Path) -> &mut Self {
        self.inputs.push((name.into(), path.to_path_buf()));
        self
    }

    fn config_hash(&self) -> String {
        sha256(format!("command={}\n{}", self.command, self.config.to_text()).as_bytes())
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut kv = KeyValues::new();
        kv.set("command", self.command);
        kv.set("version", env!("CARGO_PKG_VERSION"));
        kv.set("config_hash", self.config_hash());
        for k in self.config.keys() {
            kv.set(&format!("config.{k}"), self.config.get(k).unwrap_or_default());
        }
        for (name, p) in &self.inputs {
            kv.set(&format!("input.{name}"), sha256(&fs::read(p)?));
        }
        write(path, &kv.to_text())
    }
}

fn load_spec(path: Option<&Path>) -> Result<SplitSpec> {
    match path {
        Some(p) => SplitSpec::parse(&read(p)?),
        None => Ok(SplitSpec::default()),
    }
}

fn cmd_filter(a: FilterArgs) -> Result<()> {
    let d = parse_dataset(&read(&a.input)?)?;
    let t = FilterThresholds {
        min_feats_per_lang: a.min_features,
        min_langs_per_feat: a.min_languages,
    };
    let f = filter_dataset(&d, t);
    eprintln!(
        "removed {} of {} languages and {} of {} features",
        d.len() - f.len(),
        d.len(),
        d.catalog().len() - f.catalog().len(),
        d.catalog().len()
    );
    write(&a.out, &serialize_dataset(&f, None)?)?;
    let mut m = Manifest::new("filter");
    m.config.set("min_features", a.min_features);
    m.config.set("min_languages", a.min_languages);
    m.input("input", &a.input).write(&manifest_beside(&a.out))
}

fn manifest_beside(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    out.with_file_name(name)
}

fn write_blinded(dir: &Path, stem: &str, d: &Dataset) -> Result<()> {
    write(&dir.join(format!("{stem}.tsv")), &serialize_dataset(d, None)?)?;
    write(&dir.join(format!("{stem}_gold.tsv")), &serialize_gold(d))
}

fn cmd_split(a: SplitArgs) -> Result<()> {
    let mut spec = load_spec(a.spec.as_deref())?;
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(r) = a.radius_km {
        spec.exclusion_radius_km = r;
    }
    spec.validate()?;
    let d = parse_dataset(&read(&a.input)?)?;
    let mut m = Manifest::new("split");
    m.config = spec.to_kv();
    m.config.set("random", a.random);
    m.input("input", &a.input);
    if let Some(p) = &a.spec {
        m.input("spec", p);
    }

    if a.random {
        let (train, dev, test) = random_split(&d, [0.9, 0.05, 0.05], spec.seed)?;
        let (dev, _) = blank_with_ratios(&dev, &spec)?;
        let (test, _) = blank_with_ratios(&test, &spec)?;
        eprintln!("train {}  dev {}  test {}", train.len(), dev.len(), test.len());
        write(&a.out.join("train.tsv"), &serialize_dataset(&train, None)?)?;
        write_blinded(&a.out, "dev", &dev)?;
        write_blinded(&a.out, "test", &test)?;
    } else {
        let r = build_controlled_split(&d, &spec)?;
        if r.test.is_empty() {
            warn!("test set is empty");
        }
        eprintln!(
            "train {}  test {}  excluded {}",
            r.train.len(),
            r.test.len(),
            d.len() - r.train.len() - r.test.len()
        );
        write(&a.out.join("train.tsv"), &serialize_dataset(&r.train, None)?)?;
        write_blinded(&a.out, "test", &r.test)?;
        write(&a.out.join("provenance.csv"), &r.provenance_csv()?)?;
    }
    m.write(&a.out.join("manifest.txt"))
}

fn cmd_blank(a: BlankArgs) -> Result<()> {
    let mut spec = load_spec(a.spec.as_deref())?;
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let d = parse_dataset(&read(&a.input)?)?;
    let (blanked, ratios) = blank_with_ratios(&d, &spec)?;
    write_blinded(&a.out, "test", &blanked)?;
    let mut csv = String::from("code,ratio\n");
    for (code, r) in &ratios {
        let _ = writeln!(csv, "{code},{r}");
    }
    write(&a.out.join("ratios.csv"), &csv)?;
    let mut m = Manifest::new("blank");
    m.config = spec.to_kv();
    m.input("input", &a.input);
    if let Some(p) = &a.spec {
        m.input("spec", p);
    }
    m.write(&a.out.join("manifest.txt"))
}

fn cmd_impute(a: ImputeArgs) -> Result<()> {
    let mut config = match &a.imputer_config {
        Some(p) => ImputerConfig::parse(&read(p)?)?,
        None => ImputerConfig::default(),
    };
    if let Some(k) = a.k {
        config.k = k;
    }
    if let Some(l) = a.lambda {
        config.lambda = l;
    }
    if let Some(r) = a.areal_km {
        config.areal_km = r;
    }
    if let Some(r) = a.radius_km {
        config.near_km = r;
    }
    if let Some(v) = &a.vectors {
        config.vectors = Some(v.display().to_string());
    }
    config.validate()?;

    let train = parse_dataset(&read(&a.train)?)?;
    let test = parse_dataset(&read(&a.test)?)?;
    let vectors_path = config.vectors.as_ref().map(PathBuf::from);
    let vectors = match &vectors_path {
        Some(p) => Some(LanguageVectors::parse(&read(p)?)?),
        None => None,
    };
    let imputer = config.build(&train, Some(&test), vectors.as_ref())?;
    let result = impute_dataset(imputer.as_ref(), &test);
    for ((l, f), e) in &result.failures {
        warn!("({l}, {f}) left unfilled: {e}");
    }
    info!(
        "{}: filled {} cells, {} unfilled",
        imputer.name(),
        result.predictions.len(),
        result.failures.len()
    );
    write(&a.out, &serialize_dataset(&test, Some(&result.values()))?)?;

    let mut m = Manifest::new("impute");
    m.config = config.to_kv();
    m.input("train", &a.train).input("test", &a.test);
    if let Some(p) = &a.imputer_config {
        m.input("imputer_config", p);
    }
    if let Some(p) = &vectors_path {
        m.input("vectors", p);
    }
    m.write(&manifest_beside(&a.out))
}

fn system_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let spec = load_spec(a.spec.as_deref())?;
    let gold = parse_dataset_with_gold(&read(&a.test)?, &read(&a.gold)?)?;
    let outputs = a
        .input
        .iter()
        .map(|p| Ok(SystemOutput::from_filled(system_name(p), &gold, &parse_dataset(&read(p)?)?)))
        .collect::<Result<Vec<_>>>()?;

    let mut m = Manifest::new("evaluate");
    m.config.set("samples", a.samples);
    m.config.set("seed", a.seed);
    m.config.set("exclude_missing", a.exclude_missing);
    m.config.set("held_out_genera", spec.held_out_genera.join(","));
    m.input("gold", &a.gold).input("test", &a.test);
    for p in &a.input {
        m.input(format!("system.{}", system_name(p)), p);
    }
    let options = EvaluationOptions {
        missing: if a.exclude_missing {
            MissingPolicy::Exclude
        } else {
            MissingPolicy::CountAsWrong
        },
        samples: a.samples,
        seed: a.seed,
        genera: spec.held_out_genera.clone(),
        config_hash: m.config_hash(),
    };
    let e = evaluate_systems(&gold, &outputs, options)?;
    for r in &e.reports {
        for w in &r.warnings {
            warn!("{}: {w}", r.system);
        }
    }
    for (name, contents) in e.tables() {
        write(&a.out.join(name), &contents)?;
    }
    m.write(&a.out.join("manifest.txt"))
}

type Table = Vec<BTreeMap<String, String>>;

fn read_table(path: &Path) -> Result<Table> {
    let text = read(path)?;
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    r.records()
        .map(|rec| Ok(headers.iter().map(str::to_string).zip(rec?.iter().map(str::to_string)).collect()))
        .collect()
}

fn num(row: &BTreeMap<String, String>, key: &str) -> String {
    match row.get(key).map(|s| s.parse::<f64>()) {
        Some(Ok(v)) => format!("{v:.3}"),
        _ => row.get(key).cloned().unwrap_or_default(),
    }
}

fn stamp(path: &Path) -> Result<String> {
    Ok(read(path)?
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .unwrap_or_default()
        .to_string())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let dir = &a.input;
    let systems = read_table(&dir.join("systems.csv"))?;
    let groups = read_table(&dir.join("groups.csv"))?;
    let features = read_table(&dir.join("features.csv"))?;
    let significance = read_table(&dir.join("significance.csv"))?;
    let names: Vec<&str> = systems.iter().map(|r| r["system"].as_str()).collect();

    let mut s = String::from("# Evaluation report\n\n");
    let _ = writeln!(s, "{}\n", stamp(&dir.join("systems.csv"))?);
    s.push_str("## Systems\n\n| system | macro | micro | missing | blanking r |\n|---|---|---|---|---|\n");
    for r in &systems {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} |",
            r["system"],
            num(r, "macro_accuracy"),
            num(r, "micro_accuracy"),
            r["missing"],
            num(r, "blanking_r")
        );
    }

    s.push_str("\n## Accuracy by group\n\n| group |");
    for n in &names {
        let _ = write!(s, " {n} |");
    }
    s.push_str("\n|---|");
    s.push_str(&"---|".repeat(names.len()));
    s.push('\n');
    let mut order: Vec<&str> = Vec::new();
    for r in &groups {
        if !order.contains(&r["group"].as_str()) {
            order.push(&r["group"]);
        }
    }
    for g in order {
        let _ = write!(s, "| {g} |");
        for n in &names {
            let cell = groups
                .iter()
                .find(|r| r["group"] == g && r["system"] == *n)
                .map(|r| num(r, "accuracy"))
                .unwrap_or_default();
            let _ = write!(s, " {cell} |");
        }
        s.push('\n');
    }

    let feature_rows = |rows: &mut dyn Iterator<Item = &BTreeMap<String, String>>, s: &mut String| {
        s.push_str("| feature | languages | mean | std |\n|---|---|---|---|\n");
        for r in rows {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} |",
                r["feature"],
                r["languages"],
                num(r, "mean_accuracy"),
                num(r, "std_dev")
            );
        }
    };
    s.push_str("\n## Easiest features\n\n");
    feature_rows(&mut features.iter().rev().take(5), &mut s);
    s.push_str("\n## Hardest features\n\n");
    feature_rows(&mut features.iter().take(5), &mut s);

    if !significance.is_empty() {
        s.push_str("\n## Pairwise significance\n\n| a | b | difference | p |\n|---|---|---|---|\n");
        for r in &significance {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} |",
                r["system_a"],
                r["system_b"],
                num(r, "difference"),
                num(r, "p_value")
            );
        }
    }
    write(&a.out, &s)?;
    let mut m = Manifest::new("report");
    for name in ["systems.csv", "groups.csv", "features.csv", "significance.csv"] {
        m.input(name.trim_end_matches(".csv"), &dir.join(name));
    }
    m.write(&manifest_beside(&a.out))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Filter(a) => cmd_filter(a),
        Command::Split(a) => cmd_split(a),
        Command::Blank(a) => cmd_blank(a),
        Command::Impute(a) => cmd_impute(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
