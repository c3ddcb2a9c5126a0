use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use ia_core::author_metrics::{author_report, AuthorParams, ContemporaryParams};
use ia_core::corpus::{load_corpus, load_corpus_dir, Corpus};
use ia_core::field_metrics::{co_citation_count, field_constants, hb_index, hf_index, top_cocited_pairs};
use ia_core::journal_metrics::{
    aggregate_impact_factor, article_influence, build_flow_matrix, cited_half_life, eigenfactor, immediacy, jif,
    EigenfactorParams, DEFAULT_EIGENFACTOR_WINDOW, DEFAULT_JIF_WINDOW,
};
use ia_core::ranking::{league_classify, rank_candidates, LeagueThresholds, ScoreMatrix, ScoreMode, WeightVector};
use ia_core::rating::{AnomalyParams, RatingConfig, RatingStore, ReputationParams};
use ia_core::recommender::{
    alert_match, coaccess_similarity, download_popularity, randomized_display, tag_similarity, Subscription,
};
use ia_core::review::{ReviewBoard, ReviewConfig};
use ia_core::MetricError;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ConfigFile;
use crate::output::{Format, Report};
use crate::{
    AggregateArgs, AlertArgs, AnomalyArgs, Cli, CliError, Command, DisplayArgs, LedgerArgs, MetricsCmd, RankArgs,
    RankMode, RecommendArgs, RecommendBy, ReputationArgs, ReviewArgs,
};

type Result<T> = std::result::Result<T, CliError>;

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

fn in_file<E: std::fmt::Display>(path: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

struct Ctx {
    cfg: ConfigFile,
    strict: bool,
    now_year: Option<i32>,
    seed: u64,
    corpus: Option<PathBuf>,
}

impl Ctx {
    fn load_corpus_at(&self, paths: &[PathBuf]) -> Result<Corpus> {
        match paths {
            [] => Err(CliError::Usage("no corpus given (use --corpus or IA_CORPUS)".into())),
            [dir] if dir.is_dir() => load_corpus_dir(dir, self.strict).map_err(data),
            files => load_corpus(files, self.strict).map_err(data),
        }
    }

    fn corpus(&self) -> Result<Corpus> {
        let paths: Vec<PathBuf> = self.corpus.iter().cloned().collect();
        self.load_corpus_at(&paths)
    }

    fn now_year(&self, corpus: &Corpus) -> Result<i32> {
        self.now_year
            .or_else(|| corpus.papers().map(|p| p.year).max())
            .ok_or_else(|| CliError::Usage("corpus is empty; give --now-year".into()))
    }

    fn rating_config(&self) -> Result<RatingConfig> {
        let d = RatingConfig::default();
        let dimensions = match self.cfg.raw("dimensions") {
            Some(list) => list
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
            None => d.dimensions,
        };
        let config = RatingConfig {
            scale_min: self.cfg.pick(None, "scale_min", d.scale_min)?,
            scale_max: self.cfg.pick(None, "scale_max", d.scale_max)?,
            dimensions,
            monthly_budget: self.cfg.pick(None, "monthly_budget", d.monthly_budget)?,
            saturation_count: self.cfg.pick(None, "saturation_count", d.saturation_count)?,
            venue_weights: self.cfg.venue_weights()?,
        };
        config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }

    fn rating_store(&self, ledger: &LedgerArgs) -> Result<(RatingStore, i64)> {
        let path = &ledger.ratings;
        let file = File::open(path).map_err(in_file(path))?;
        let store = RatingStore::replay(self.rating_config()?, BufReader::new(file)).map_err(in_file(path))?;
        let at = ledger.at.unwrap_or_else(|| {
            store
                .items()
                .flat_map(|i| store.ratings_for(i))
                .map(|r| r.event.timestamp)
                .max()
                .unwrap_or(0)
        });
        Ok((store, at))
    }
}

pub fn run(cli: Cli) -> Result<String> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let format = cfg.pick(cli.format, "format", Format::Json)?;
    let corpus = match cli.corpus {
        Some(p) => Some(p),
        None => cfg.get::<PathBuf>("corpus")?,
    };
    let ctx = Ctx {
        strict: cfg.pick(cli.strict, "strict", false)?,
        now_year: match cli.now_year {
            Some(y) => Some(y),
            None => cfg.get("now_year")?,
        },
        seed: cfg.pick(cli.seed, "seed", 0)?,
        corpus,
        cfg,
    };
    let report = match cli.command {
        Command::Ingest { paths } => ingest(&ctx, paths)?,
        Command::Metrics { which } => metrics(&ctx, which)?,
        Command::Rank(args) => rank(&ctx, args)?,
        Command::Reputation(args) => reputation(&ctx, args)?,
        Command::Aggregate(args) => aggregate(&ctx, args)?,
        Command::Anomalies(args) => anomalies(&ctx, args)?,
        Command::Review(args) => review(&ctx, args)?,
        Command::Recommend(args) => recommend(&ctx, args)?,
        Command::DisplayOrder(args) => display_order(&ctx, args)?,
        Command::Alerts(args) => alerts(&ctx, args)?,
    };
    Ok(report.render(format))
}

fn ingest(ctx: &Ctx, paths: Vec<PathBuf>) -> Result<Report> {
    let corpus = if paths.is_empty() {
        ctx.corpus()?
    } else {
        ctx.load_corpus_at(&paths)?
    };
    let years: Vec<i32> = corpus.papers().map(|p| p.year).collect();
    Ok(Report::doc(json!({
        "papers": corpus.paper_count(),
        "authors": corpus.author_ids().len(),
        "journals": corpus.journals().count(),
        "downloads": corpus.downloads().len(),
        "citation_edges": corpus.edge_count(),
        "dangling_references": corpus.dangling_refs().len(),
        "dangling_occurrences": corpus.dangling_occurrences(),
        "unknown_keys": corpus.warnings().unknown_keys,
        "skipped_downloads": corpus.warnings().skipped_downloads,
        "first_year": years.iter().min(),
        "last_year": years.iter().max(),
        "strict": ctx.strict,
    })))
}

fn metrics(ctx: &Ctx, which: MetricsCmd) -> Result<Report> {
    let corpus = ctx.corpus()?;
    let now_year = ctx.now_year(&corpus)?;
    let cfg = &ctx.cfg;
    match which {
        MetricsCmd::Author {
            id,
            gamma,
            delta,
            hm_floor,
        } => {
            let d = ContemporaryParams::default();
            let params = AuthorParams {
                contemporary: ContemporaryParams {
                    gamma: cfg.pick(gamma, "gamma", d.gamma)?,
                    delta: cfg.pick(delta, "delta", d.delta)?,
                },
                hm_floor: cfg.pick(hm_floor, "hm_floor", false)?,
            };
            let m = author_report(&corpus, &id, now_year, params).map_err(data)?;
            Ok(Report::doc(to_value(&m)))
        }
        MetricsCmd::Paper { id, year } => {
            let p = corpus.paper(&id).map_err(data)?;
            let mut doc = json!({
                "paper_id": id,
                "year": p.year,
                "citations": corpus.citation_count(&id).map_err(data)?,
                "age": p.age(now_year).map_err(data)?,
                "now_year": now_year,
            });
            if let Some(y) = year {
                doc["citations_in_year"] =
                    json!({ "year": y, "count": corpus.citations_in_year(&id, y).map_err(data)? });
            }
            Ok(Report::doc(doc))
        }
        MetricsCmd::Journal { id, year, window } => {
            let year = year.unwrap_or(now_year);
            let window = cfg.pick(window, "jif_window", DEFAULT_JIF_WINDOW)?;
            let impact = jif(&corpus, &id, year, window).map_err(data)?;
            let imm = immediacy(&corpus, &id, year).map_err(data)?;
            let half_life = match cited_half_life(&corpus, &id, year) {
                Ok(v) => Some(v),
                Err(MetricError::NoCitations { .. }) => None,
                Err(e) => return Err(data(e)),
            };
            Ok(Report::doc(json!({
                "journal_id": id,
                "ref_year": year,
                "window": window,
                "jif": impact,
                "immediacy": imm,
                "cited_half_life": half_life,
            })))
        }
        MetricsCmd::Eigenfactor {
            year,
            window,
            damping,
            tol,
            max_iter,
        } => {
            let year = year.unwrap_or(now_year);
            let window = cfg.pick(window, "eigenfactor_window", DEFAULT_EIGENFACTOR_WINDOW)?;
            let d = EigenfactorParams::default();
            let params = EigenfactorParams {
                damping: cfg.pick(damping, "damping", d.damping)?,
                tol: cfg.pick(tol, "tol", d.tol)?,
                max_iter: cfg.pick(max_iter, "max_iter", d.max_iter)?,
            };
            let build = build_flow_matrix(&corpus, year, window, ctx.strict).map_err(data)?;
            let ef = eigenfactor(&build.flow, params).map_err(data)?;
            let ai = article_influence(&ef.scores, &build.article_counts).map_err(data)?;
            let rows: Vec<Value> = ef
                .scores
                .iter()
                .map(|(j, s)| {
                    json!({
                        "journal_id": j,
                        "eigenfactor": s,
                        "article_influence": ai[j],
                        "articles": build.article_counts[j],
                    })
                })
                .collect();
            let doc = json!({
                "ref_year": year,
                "window": window,
                "iterations": ef.iterations,
                "skipped_papers": build.skipped_papers,
                "journals": rows,
            });
            Ok(Report::table(doc, rows))
        }
        MetricsCmd::Topic { tag } => {
            let t = hb_index(&corpus, &tag, now_year).map_err(data)?;
            Ok(Report::doc(to_value(&t)))
        }
        MetricsCmd::Field {
            id,
            year,
            window,
            author,
        } => {
            let year = year.unwrap_or(now_year);
            let window = cfg.pick(window, "jif_window", DEFAULT_JIF_WINDOW)?;
            let constants = field_constants(&corpus, &id).map_err(data)?;
            let aggregate = aggregate_impact_factor(&corpus, &id, year, window).map_err(data)?;
            let mut doc = json!({
                "field_id": id,
                "c0": constants.c0,
                "r0": constants.r0,
                "ref_year": year,
                "window": window,
                "aggregate_impact_factor": aggregate,
            });
            if let Some(a) = author {
                let citations: Vec<u64> = corpus
                    .author_papers(&a)
                    .map_err(data)?
                    .into_iter()
                    .filter(|(p, _)| corpus.paper_field(p) == Some(id.as_str()))
                    .map(|(_, c)| c)
                    .collect();
                doc["author"] = json!({
                    "author_id": a,
                    "papers_in_field": citations.len(),
                    "h_f": hf_index(&citations, &constants),
                });
            }
            Ok(Report::doc(doc))
        }
        MetricsCmd::Cocitation { a, b } => {
            let n = co_citation_count(&corpus, &a, &b).map_err(data)?;
            Ok(Report::doc(json!({ "a": a, "b": b, "count": n })))
        }
        MetricsCmd::Cocited { k } => {
            let k = cfg.pick(k, "k", 10)?;
            let rows: Vec<Value> = top_cocited_pairs(&corpus, k)
                .map_err(data)?
                .into_iter()
                .map(|((a, b), n)| json!({ "a": a, "b": b, "count": n }))
                .collect();
            Ok(Report::table(Value::Array(rows.clone()), rows))
        }
    }
}

fn parse_weights(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|w| {
            w.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("bad weight `{w}`: {e}")))
        })
        .collect()
}

fn rank(ctx: &Ctx, args: RankArgs) -> Result<Report> {
    let path = &args.matrix;
    let file = File::open(path).map_err(in_file(path))?;
    let matrix = ScoreMatrix::from_csv(BufReader::new(file)).map_err(in_file(path))?;
    if args.mode == RankMode::League {
        let d = LeagueThresholds::default();
        let y_a = ctx.cfg.pick(args.y_a, "y_a", d.y_a)?;
        let thresholds = LeagueThresholds {
            y_a,
            y_b: ctx.cfg.pick(args.y_b, "y_b", d.y_b)?,
            y_c: ctx.cfg.pick(args.y_c, "y_c", d.y_c)?,
        };
        let leagues = league_classify(&matrix, thresholds).map_err(data)?;
        let rows: Vec<Value> = leagues.iter().map(to_value).collect();
        return Ok(Report::table(
            json!({ "thresholds": thresholds, "leagues": rows }),
            rows,
        ));
    }
    let weights = match &args.weights {
        Some(w) => parse_weights(w)?,
        None => {
            return Err(CliError::Usage(
                "--weights is required for weighted and talent modes".into(),
            ))
        }
    };
    let weights = WeightVector::new(weights).map_err(|e| CliError::Usage(e.to_string()))?;
    let mode = match args.mode {
        RankMode::Talent => ScoreMode::Talent,
        _ => ScoreMode::Weighted,
    };
    let ranked = rank_candidates(&matrix, &weights, mode).map_err(data)?;
    let rows: Vec<Value> = ranked.iter().map(to_value).collect();
    Ok(Report::table(
        json!({ "mode": mode, "weights": weights.as_slice(), "ranking": rows }),
        rows,
    ))
}

fn authored_items(ctx: &Ctx, path: Option<&Path>) -> Result<BTreeMap<String, Vec<String>>> {
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(in_file(path))?;
        return serde_json::from_str(&text).map_err(in_file(path));
    }
    if ctx.corpus.is_none() {
        return Ok(BTreeMap::new());
    }
    let corpus = ctx.corpus()?;
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for p in corpus.papers() {
        for a in &p.author_ids {
            out.entry(a.clone()).or_default().push(p.id.clone());
        }
    }
    Ok(out)
}

fn reputation(ctx: &Ctx, args: ReputationArgs) -> Result<Report> {
    let (store, at) = ctx.rating_store(&args.ledger)?;
    let authored = authored_items(ctx, args.authored.as_deref())?;
    let d = ReputationParams::default();
    let params = ReputationParams {
        damping: ctx.cfg.pick(args.damping, "reputation_damping", d.damping)?,
        tol: ctx.cfg.pick(args.tol, "reputation_tol", d.tol)?,
        max_iter: ctx.cfg.pick(args.max_iter, "reputation_max_iter", d.max_iter)?,
    };
    let run = store.compute_reputation(&authored, params, at).map_err(data)?;
    let rows: Vec<Value> = run
        .reputations
        .iter()
        .map(|(u, r)| json!({ "user_id": u, "reputation": r }))
        .collect();
    Ok(Report::table(
        json!({ "at": at, "iterations": run.iterations, "max_change": run.max_change, "reputations": run.reputations }),
        rows,
    ))
}

fn aggregate(ctx: &Ctx, args: AggregateArgs) -> Result<Report> {
    let (store, at) = ctx.rating_store(&args.ledger)?;
    let weights = match &args.venue {
        Some(v) => store
            .config()
            .venue_weights
            .get(v)
            .cloned()
            .ok_or_else(|| CliError::Usage(format!("no weights configured for venue `{v}`")))?,
        None => store.config().uniform_weights(),
    };
    let agg = store.aggregate_item(&args.item, &weights, at).map_err(data)?;
    let rows: Vec<Value> = agg
        .per_dimension
        .iter()
        .map(|(dim, a)| {
            let mut v = to_value(a);
            v["dimension"] = json!(dim);
            v
        })
        .collect();
    let mut doc = to_value(&agg);
    doc["at"] = json!(at);
    Ok(Report::table(doc, rows))
}

fn anomalies(ctx: &Ctx, args: AnomalyArgs) -> Result<Report> {
    let (store, _) = ctx.rating_store(&args.ledger)?;
    let d = AnomalyParams::default();
    let params = AnomalyParams {
        min_overlap: ctx.cfg.pick(args.min_overlap, "min_overlap", d.min_overlap)?,
        z_threshold: ctx.cfg.pick(args.z_threshold, "z_threshold", d.z_threshold)?,
    };
    let rows: Vec<Value> = store.detect_anomalies(params).iter().map(to_value).collect();
    Ok(Report::table(Value::Array(rows.clone()), rows))
}

fn review(ctx: &Ctx, args: ReviewArgs) -> Result<Report> {
    let d = ReviewConfig::default();
    let config = ReviewConfig {
        round_size: ctx.cfg.pick(args.round_size, "round_size", d.round_size)?,
        reputation_threshold: ctx
            .cfg
            .pick(args.threshold, "review_threshold", d.reputation_threshold)?,
        allow_repeat_rounds: ctx
            .cfg
            .pick(args.allow_repeat_rounds, "allow_repeat_rounds", d.allow_repeat_rounds)?,
    };
    let path = &args.log;
    let file = File::open(path).map_err(in_file(path))?;
    let board = ReviewBoard::replay(config, BufReader::new(file)).map_err(in_file(path))?;
    if let Some(out) = &args.audit_out {
        let f = File::create(out).map_err(in_file(out))?;
        board
            .write_audit_jsonl(std::io::BufWriter::new(f))
            .map_err(in_file(out))?;
    }
    let manuscripts: Vec<Value> = board.manuscripts().map(to_value).collect();
    let rows: Vec<Value> = board
        .manuscripts()
        .map(|m| {
            json!({
                "manuscript_id": m.manuscript_id,
                "state": m.state,
                "round": m.round,
                "reader_comments": m.reader_comments.len(),
            })
        })
        .collect();
    Ok(Report::table(
        json!({ "manuscripts": manuscripts, "audit": board.audit() }),
        rows,
    ))
}

fn recommend(ctx: &Ctx, args: RecommendArgs) -> Result<Report> {
    let corpus = ctx.corpus()?;
    let k = ctx.cfg.pick(args.k, "k", 10)?;
    let recs = match args.by {
        RecommendBy::Tags => tag_similarity(&corpus, &args.paper, k),
        RecommendBy::Coaccess => coaccess_similarity(&corpus, &args.paper, k),
    }
    .map_err(data)?;
    let rows: Vec<Value> = recs.iter().map(to_value).collect();
    Ok(Report::table(Value::Array(rows.clone()), rows))
}

fn read_items(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(in_file(path))?;
    let mut items = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(in_file(path))?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |reason: String| CliError::Data(format!("{}:{line}: {reason}", path.display()));
        let id = rec.get(0).ok_or_else(|| bad("missing id".into()))?.trim().to_string();
        let pop = rec.get(1).ok_or_else(|| bad("missing popularity".into()))?;
        let pop: f64 = pop.trim().parse().map_err(|e| bad(format!("`{pop}`: {e}")))?;
        items.push((id, pop));
    }
    Ok(items)
}

fn display_order(ctx: &Ctx, args: DisplayArgs) -> Result<Report> {
    let items = match &args.items {
        Some(path) => read_items(path)?,
        None => download_popularity(&ctx.corpus()?)
            .into_iter()
            .map(|(id, n)| (id, n as f64))
            .collect(),
    };
    let temperature = ctx.cfg.pick(args.temperature, "temperature", 1.0)?;
    let order = randomized_display(&items, temperature, ctx.seed).map_err(data)?;
    let rows: Vec<Value> = order
        .item_ids
        .iter()
        .enumerate()
        .map(|(i, id)| json!({ "position": i + 1, "item_id": id }))
        .collect();
    Ok(Report::table(to_value(&order), rows))
}

fn alerts(ctx: &Ctx, args: AlertArgs) -> Result<Report> {
    let corpus = ctx.corpus()?;
    let path = &args.subscriptions;
    let text = std::fs::read_to_string(path).map_err(in_file(path))?;
    let mut out = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| CliError::Data(format!("{}:{}: {reason}", path.display(), i + 1));
        let sub: Subscription = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        sub.validate().map_err(|e| bad(e.to_string()))?;
        let papers: Vec<&str> = corpus
            .papers()
            .filter(|p| args.since_year.is_none_or(|y| p.year >= y))
            .filter(|p| alert_match(&sub, p))
            .map(|p| p.id.as_str())
            .collect();
        rows.extend(papers.iter().map(|p| json!({ "user_id": sub.user_id, "paper_id": p })));
        out.push(json!({ "user_id": sub.user_id, "paper_ids": papers }));
    }
    Ok(Report::table(Value::Array(out), rows))
}
