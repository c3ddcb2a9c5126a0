//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;

use ia_core::author_metrics::{
    author_report, contemporary_h, e_index, g_index, h_index, hm_index, individual_h, AuthorPaperView, AuthorParams,
    ContemporaryParams,
};
use ia_core::corpus::{Corpus, CorpusRecords, DownloadEvent, JournalRecord, PaperRecord};
use ia_core::field_metrics::{co_citation_count, field_constants, hf_index, top_cocited_pairs};
use ia_core::journal_metrics::{
    article_influence, cited_half_life, eigenfactor, jif, EigenfactorParams, JournalFlowMatrix,
};
use ia_core::ranking::{league_classify, talent_score, weighted_score, LeagueThresholds, ScoreMatrix, WeightVector};
use ia_core::rating::{AnomalyParams, RatingConfig, RatingError, RatingEvent, RatingStore, ReputationParams};
use ia_core::recommender::{coaccess_similarity, randomized_display};
use ia_core::review::{ManuscriptState, ManuscriptWorkflow, RefereeReport, ReviewConfig, Verdict};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(detail.into())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn paper(id: &str, year: i32, authors: &[String], journal: Option<&str>, refs: Vec<String>) -> PaperRecord {
    PaperRecord {
        id: id.to_string(),
        title: String::new(),
        author_ids: authors.to_vec(),
        journal_id: journal.map(String::from),
        field_id: None,
        year,
        tags: BTreeSet::new(),
        references: refs,
    }
}

fn build(papers: Vec<PaperRecord>, journals: Vec<JournalRecord>, downloads: Vec<DownloadEvent>) -> Corpus {
    Corpus::from_records(
        CorpusRecords {
            papers,
            journals,
            downloads,
            ..Default::default()
        },
        true,
    )
    .expect("generated corpus is valid")
}

fn journal(id: &str, field: Option<&str>) -> JournalRecord {
    JournalRecord {
        id: id.into(),
        name: id.into(),
        field_id: field.map(String::from),
    }
}

// ---------------------------------------------------------------------------
// straight-loop oracles

fn oracle_h(c: &[u64]) -> u64 {
    (0..=c.len() as u64)
        .rev()
        .find(|&h| c.iter().filter(|&&x| x >= h).count() as u64 >= h)
        .unwrap()
}

fn desc(c: &[u64]) -> Vec<u64> {
    let mut v = c.to_vec();
    v.sort_by(|a, b| b.cmp(a));
    v
}

fn oracle_g(c: &[u64]) -> u64 {
    let d = desc(c);
    (0..=d.len())
        .rev()
        .find(|&g| d[..g].iter().sum::<u64>() >= (g * g) as u64)
        .unwrap() as u64
}

fn oracle_e(c: &[u64]) -> f64 {
    let h = oracle_h(c) as usize;
    let core: u64 = desc(c)[..h].iter().sum();
    ((core - (h * h) as u64) as f64).sqrt()
}

fn oracle_contemporary(v: &[AuthorPaperView], now: i32) -> u64 {
    let s: Vec<f64> = v
        .iter()
        .map(|p| 4.0 / (now - p.year + 1) as f64 * p.citations as f64)
        .collect();
    (0..=s.len())
        .rev()
        .find(|&h| s.iter().filter(|&&x| x >= h as f64).count() >= h)
        .unwrap() as u64
}

/// `v` must already be ranked (citations desc, year asc, id asc).
fn oracle_hm(v: &[AuthorPaperView]) -> f64 {
    let mut best = 0.0;
    for i in 0..v.len() {
        let r: f64 = v[..=i].iter().map(|p| 1.0 / p.n_authors as f64).sum();
        if v[i].citations as f64 >= r && r > best {
            best = r;
        }
    }
    best
}

fn oracle_cosine(downloads: &[(String, String)], a: &str, b: &str) -> f64 {
    let users = |p: &str| -> BTreeSet<&str> { downloads.iter().filter(|d| d.1 == p).map(|d| d.0.as_str()).collect() };
    let (ua, ub) = (users(a), users(b));
    if ua.is_empty() || ub.is_empty() {
        return 0.0;
    }
    let mut common = 0;
    for u in &ua {
        if ub.contains(u) {
            common += 1;
        }
    }
    common as f64 / ((ua.len() * ub.len()) as f64).sqrt()
}

// ---------------------------------------------------------------------------

fn random_views(rng: &mut ChaCha8Rng, now: i32) -> Vec<AuthorPaperView> {
    let n = rng.random_range(0..40);
    (0..n)
        .map(|_| AuthorPaperView {
            citations: if rng.random_bool(0.1) {
                0
            } else {
                rng.random_range(0..200)
            },
            year: rng.random_range(now - 30..=now),
            n_authors: rng.random_range(1..8),
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let now = 2020;
    let mut violations = Vec::new();
    for case in 0..1000 {
        let views = random_views(&mut rng, now);
        let c: Vec<u64> = views.iter().map(|v| v.citations).collect();
        let (h, g, e) = (h_index(&c), g_index(&c), e_index(&c));
        let top_h: u64 = desc(&c)[..h as usize].iter().sum();
        let total: u64 = c.iter().sum();
        let hm = hm_index(&views);
        let hi = individual_h(&views);
        if h > g {
            violations.push(format!("case {case}: h {h} > g {g}"));
        }
        if !close(e * e + (h * h) as f64, top_h as f64, 1e-9 * top_h.max(1) as f64) {
            violations.push(format!("case {case}: e^2 + h^2 != top-h sum"));
        }
        if h as f64 > (total as f64).sqrt() + 1e-12 {
            violations.push(format!("case {case}: h > sqrt(total)"));
        }
        if hm > h as f64 + 1e-12 || hi > h as f64 + 1e-12 {
            violations.push(format!("case {case}: h_m {hm} or individual h {hi} exceeds h {h}"));
        }
    }
    check(violations.is_empty(), violations.join("; "))?;
    Ok("1000 lists, 0 violations".into())
}

struct RandomCorpus {
    corpus: Corpus,
    papers: Vec<PaperRecord>,
    journals: Vec<JournalRecord>,
    downloads: Vec<(String, String)>,
}

fn random_corpus(rng: &mut ChaCha8Rng) -> RandomCorpus {
    let n = rng.random_range(1..=200);
    let authors: Vec<String> = (0..25).map(|i| format!("A{i:02}")).collect();
    let journals = vec![
        journal("J0", Some("F0")),
        journal("J1", Some("F0")),
        journal("J2", Some("F1")),
        journal("J3", None),
    ];
    let mut papers = Vec::new();
    for i in 0..n {
        let k = rng.random_range(1..=4);
        let au: Vec<String> = authors.choose_multiple(rng, k).cloned().collect();
        let mut refs: Vec<String> = (0..i).map(|j| format!("P{j:03}")).collect();
        refs.shuffle(rng);
        refs.truncate(rng.random_range(0..=8.min(i)));
        let jid = format!("J{}", rng.random_range(0..4));
        let mut p = paper(
            &format!("P{i:03}"),
            1990 + (i as i32 * 20) / n as i32,
            &au,
            Some(&jid),
            refs,
        );
        if rng.random_bool(0.15) {
            p.field_id = Some(if rng.random_bool(0.5) { "F0" } else { "F1" }.into());
        }
        papers.push(p);
    }
    let mut downloads = Vec::new();
    for _ in 0..rng.random_range(0..400) {
        let u = format!("u{}", rng.random_range(0..20));
        let p = format!("P{:03}", rng.random_range(0..n));
        downloads.push((u, p));
    }
    let events = downloads
        .iter()
        .enumerate()
        .map(|(t, (u, p))| DownloadEvent {
            user_id: u.clone(),
            paper_id: p.clone(),
            timestamp: t as i64,
        })
        .collect();
    RandomCorpus {
        corpus: build(papers.clone(), journals.clone(), events),
        papers,
        journals,
        downloads,
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut compared = 0usize;
    for round in 0..25 {
        let rc = random_corpus(&mut rng);
        let now = 2010;
        let cites = |id: &str| {
            rc.papers
                .iter()
                .filter(|p| p.references.iter().any(|r| r == id))
                .count() as u64
        };
        let field_of = |p: &PaperRecord| -> Option<String> {
            p.field_id.clone().or_else(|| {
                let j = p.journal_id.as_deref()?;
                rc.journals.iter().find(|x| x.id == j)?.field_id.clone()
            })
        };

        let all_authors: BTreeSet<&String> = rc.papers.iter().flat_map(|p| &p.author_ids).collect();
        for a in all_authors {
            let mut mine: Vec<(&PaperRecord, u64)> = rc
                .papers
                .iter()
                .filter(|p| p.author_ids.contains(a))
                .map(|p| (p, cites(&p.id)))
                .collect();
            mine.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.year.cmp(&y.0.year)).then(x.0.id.cmp(&y.0.id)));
            let c: Vec<u64> = mine.iter().map(|m| m.1).collect();
            let views: Vec<AuthorPaperView> = mine
                .iter()
                .map(|(p, k)| AuthorPaperView {
                    citations: *k,
                    year: p.year,
                    n_authors: p.author_ids.len() as u32,
                })
                .collect();
            let m = author_report(&rc.corpus, a, now, AuthorParams::default()).map_err(|e| e.to_string())?;
            let tag = format!("round {round} author {a}");
            check(m.h == oracle_h(&c), format!("{tag}: h"))?;
            check(m.g == oracle_g(&c), format!("{tag}: g"))?;
            check(close(m.e, oracle_e(&c), 1e-9), format!("{tag}: e"))?;
            check(
                m.h_contemporary == oracle_contemporary(&views, now),
                format!("{tag}: contemporary h"),
            )?;
            check(
                contemporary_h(&views, now, ContemporaryParams::default()).unwrap() == m.h_contemporary,
                format!("{tag}: contemporary h via views"),
            )?;
            check(close(m.h_m, oracle_hm(&views), 1e-9), format!("{tag}: h_m"))?;

            for field in ["F0", "F1"] {
                let in_field: Vec<&PaperRecord> = rc
                    .papers
                    .iter()
                    .filter(|p| field_of(p).as_deref() == Some(field))
                    .collect();
                let Ok(constants) = field_constants(&rc.corpus, field) else {
                    continue;
                };
                let total: u64 = in_field.iter().map(|p| cites(&p.id)).sum();
                let c0 = total as f64 / in_field.len() as f64;
                let mut per_author: BTreeMap<&String, u64> = BTreeMap::new();
                for p in &in_field {
                    for x in &p.author_ids {
                        *per_author.entry(x).or_default() += 1;
                    }
                }
                let r0 = per_author.values().sum::<u64>() as f64 / per_author.len() as f64;
                check(
                    close(constants.c0, c0, 1e-9) && close(constants.r0, r0, 1e-9),
                    format!("{tag}: {field} constants"),
                )?;
                let fc: Vec<u64> = desc(
                    &mine
                        .iter()
                        .filter(|(p, _)| field_of(p).as_deref() == Some(field))
                        .map(|m| m.1)
                        .collect::<Vec<_>>(),
                );
                let mut best: f64 = 0.0;
                for (i, x) in fc.iter().enumerate() {
                    let v = (*x as f64 / c0).min((i + 1) as f64 / r0);
                    if v > best {
                        best = v;
                    }
                }
                check(
                    close(hf_index(&fc, &constants), best, 1e-9),
                    format!("{tag}: h_f in {field}"),
                )?;
            }
            compared += 1;
        }

        // co-citation pairs
        let ids: Vec<&String> = rc.papers.iter().map(|p| &p.id).collect();
        let mut expected = Vec::new();
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                let n = rc
                    .papers
                    .iter()
                    .filter(|p| p.references.contains(a) && p.references.contains(b))
                    .count() as u64;
                if n > 0 {
                    expected.push((((*a).clone(), (*b).clone()), n));
                }
            }
        }
        expected.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
        let got = top_cocited_pairs(&rc.corpus, usize::MAX).map_err(|e| e.to_string())?;
        check(got == expected, format!("round {round}: co-cited pairs differ"))?;
        for ((a, b), n) in expected.iter().take(20) {
            check(
                co_citation_count(&rc.corpus, b, a).unwrap() == *n,
                format!("round {round}: co_citation_count({b},{a})"),
            )?;
        }

        // co-access similarity
        for a in ids.iter().take(60) {
            let got = coaccess_similarity(&rc.corpus, a, ids.len()).map_err(|e| e.to_string())?;
            let mut want: Vec<(String, f64)> = ids
                .iter()
                .filter(|b| *b != a)
                .map(|b| ((*b).clone(), oracle_cosine(&rc.downloads, a, b)))
                .filter(|(_, s)| *s > 0.0)
                .collect();
            want.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
            check(
                got.len() == want.len(),
                format!("round {round}: coaccess length for {a}"),
            )?;
            for (g, (id, s)) in got.iter().zip(&want) {
                check(
                    &g.paper_id == id && close(g.score, *s, 1e-9),
                    format!("round {round}: coaccess {a}/{id}"),
                )?;
            }
        }
    }
    Ok(format!(
        "25 corpora, {compared} author reports, pairs and similarities agree"
    ))
}

fn criterion_3() -> Outcome {
    let authors = vec!["A".to_string()];
    let mut papers = Vec::new();
    for i in 0..10 {
        papers.push(paper(&format!("J{i}"), 2008 + i % 2, &authors, Some("J"), vec![]));
    }
    // outside the window, cited too: must not count
    papers.push(paper("OLD", 2007, &authors, Some("J"), vec![]));
    let mut c = 0;
    for k in 0..25 {
        let refs = vec![format!("J{}", k % 10), "OLD".to_string()];
        papers.push(paper(&format!("C{k}"), 2010, &authors, Some("K"), refs));
        c += 1;
    }
    papers.push(paper("EARLY", 2009, &authors, Some("K"), vec!["J0".into()]));
    let corpus = build(papers, vec![journal("J", None), journal("K", None)], vec![]);
    let r = jif(&corpus, "J", 2010, 2).map_err(|e| e.to_string())?;
    let shown = format!("{:.6}", r.value);
    check(
        r.numerator == c && r.denominator == 10 && r.value == 2.5 && shown == "2.500000",
        format!("got {}/{} = {shown}", r.numerator, r.denominator),
    )?;
    Ok(format!("{}/{} = {shown}", r.numerator, r.denominator))
}

fn criterion_4() -> Outcome {
    // citations made in 2005, by age 1 (2005) .. 9 (1997); 2001-2005 hold half
    let by_age = [4u64, 2, 3, 1, 2, 5, 3, 2, 2];
    let authors = vec!["A".to_string()];
    let mut papers = Vec::new();
    let mut k = 0;
    for (i, &n) in by_age.iter().enumerate() {
        let year = 2005 - i as i32;
        let id = format!("J{year}");
        papers.push(paper(&id, year, &authors, Some("J"), vec![]));
        for _ in 0..n {
            papers.push(paper(&format!("C{k}"), 2005, &authors, Some("K"), vec![id.clone()]));
            k += 1;
        }
    }
    // citations from another year do not enter the 2005 profile
    papers.push(paper("LATE", 2006, &authors, Some("K"), vec!["J1997".into()]));
    let first5: u64 = by_age[..5].iter().sum();
    let total: u64 = by_age.iter().sum();
    check(2 * first5 == total, "fixture shape")?;
    let corpus = build(papers, vec![journal("J", None), journal("K", None)], vec![]);
    let hl = cited_half_life(&corpus, "J", 2005).map_err(|e| e.to_string())?;
    check(close(hl, 5.0, 1e-9), format!("half-life {hl}"))?;
    Ok(format!("half-life {hl}"))
}

fn random_flow(rng: &mut ChaCha8Rng) -> (JournalFlowMatrix, BTreeMap<String, u64>) {
    let n = rng.random_range(2..=12);
    let ids: Vec<String> = (0..n).map(|i| format!("j{i:02}")).collect();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    if rng.random_bool(0.4) {
                        0.0
                    } else {
                        rng.random_range(0..50) as f64
                    }
                })
                .collect()
        })
        .collect();
    m[0][1] += 1.0;
    let counts: Vec<u64> = (0..n).map(|_| rng.random_range(1..100)).collect();
    let total: u64 = counts.iter().sum();
    let fractions = counts.iter().map(|c| *c as f64 / total as f64).collect();
    let art = ids.iter().cloned().zip(counts).collect();
    (JournalFlowMatrix::new(ids, m, fractions).unwrap(), art)
}

fn criterion_5() -> Outcome {
    let sym = JournalFlowMatrix::new(
        vec!["a".into(), "b".into()],
        vec![vec![0.0, 7.0], vec![7.0, 0.0]],
        vec![0.5, 0.5],
    )
    .unwrap();
    let r = eigenfactor(&sym, EigenfactorParams::default()).map_err(|e| e.to_string())?;
    check(
        close(r.scores["a"], 50.0, 1e-9) && close(r.scores["b"], 50.0, 1e-9),
        format!("symmetric case {:?}", r.scores),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut max_iter = 0;
    let mut worst_sum: f64 = 0.0;
    let mut worst_ai: f64 = 0.0;
    for case in 0..100 {
        let (flow, counts) = random_flow(&mut rng);
        let r = eigenfactor(&flow, EigenfactorParams::default()).map_err(|e| format!("case {case}: {e}"))?;
        check(
            r.iterations <= 10_000,
            format!("case {case}: {} iterations", r.iterations),
        )?;
        max_iter = max_iter.max(r.iterations);
        let sum: f64 = r.scores.values().sum();
        worst_sum = worst_sum.max((sum - 100.0).abs());
        check(close(sum, 100.0, 1e-9), format!("case {case}: sum {sum}"))?;
        let ai = article_influence(&r.scores, &counts).map_err(|e| e.to_string())?;
        let total: u64 = counts.values().sum();
        let mean: f64 = ai
            .iter()
            .map(|(j, v)| counts[j] as f64 / total as f64 * v.unwrap())
            .sum();
        worst_ai = worst_ai.max((mean - 100.0).abs());
        check(
            close(mean, 100.0, 1e-6),
            format!("case {case}: weighted AI mean {mean}"),
        )?;
    }
    Ok(format!(
        "(50,50) ok; 100 matrices, max {max_iter} iterations, |sum-100| <= {worst_sum:.1e}, |AI mean-100| <= {worst_ai:.1e}"
    ))
}

fn criterion_6() -> Outcome {
    let w = WeightVector::new(vec![0.35, 0.25, 0.25, 0.15]).map_err(|e| e.to_string())?;
    let x = [2.0, 1.0, 1.0, 0.0];
    let ws = weighted_score(&x, &w).map_err(|e| e.to_string())?;
    let ts = talent_score(&x, &w).map_err(|e| e.to_string())?;
    check(
        close(ws, 1.2, 1e-12) && close(ts, 1.4, 1e-12),
        format!("weighted {ws}, talent {ts}"),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..10_000 {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..10.0)).collect();
        let (a, b) = (weighted_score(&x, &w).unwrap(), talent_score(&x, &w).unwrap());
        check(b >= a - 1e-12, format!("draw {i}: talent {b} < weighted {a}"))?;
    }

    for i in 0..1000 {
        let n = rng.random_range(3..30);
        let k = rng.random_range(3..6);
        let ids: Vec<String> = (0..n).map(|c| format!("c{c:02}")).collect();
        let crit: Vec<String> = (0..k).map(|c| format!("k{c}")).collect();
        let vals: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..k).map(|_| rng.random_range(0..20) as f64).collect())
            .collect();
        let mut m = ScoreMatrix::new(ids, crit, vals).map_err(|e| e.to_string())?;
        let t = LeagueThresholds::from_a(rng.random_range(5.0..34.0));
        let before = league_classify(&m, t).map_err(|e| e.to_string())?;
        let (c, j) = (rng.random_range(0..n), rng.random_range(0..k));
        let v = m.row(c)[j] + rng.random_range(1..10) as f64;
        m.set(c, j, v);
        let after = league_classify(&m, t).map_err(|e| e.to_string())?;
        check(
            after[c].league <= before[c].league,
            format!(
                "case {i}: {} fell from {} to {}",
                before[c].candidate_id, before[c].league, after[c].league
            ),
        )?;
    }
    Ok(format!(
        "weighted {ws}, talent {ts}; 10000 draws and 1000 increases clean"
    ))
}

const JAN: i64 = 1_704_067_200;
const FEB: i64 = 1_706_745_600;

fn rating_config() -> RatingConfig {
    RatingConfig {
        dimensions: ["novelty", "quality"].into_iter().map(String::from).collect(),
        ..Default::default()
    }
}

fn ev(user: &str, item: &str, scores: &[(&str, i32)], ts: i64) -> RatingEvent {
    RatingEvent {
        user_id: user.into(),
        item_id: item.into(),
        scores: scores.iter().map(|(d, s)| (d.to_string(), *s)).collect(),
        timestamp: ts,
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // uniform reputations: weighted mean is the plain mean
    for case in 0..200 {
        let mut s = RatingStore::new(rating_config()).unwrap();
        let users: Vec<String> = (0..rng.random_range(1..12)).map(|i| format!("u{i}")).collect();
        let rep = rng.random_range(0.05..1.0);
        let mut scores = Vec::new();
        for u in &users {
            s.register_user(u);
            s.set_reputation(u, rep).unwrap();
            let q = rng.random_range(1..=5);
            scores.push(q as f64);
            s.submit_rating(ev(u, "item", &[("quality", q)], JAN)).unwrap();
        }
        let agg = s
            .aggregate_item("item", &s.config().uniform_weights(), JAN)
            .map_err(|e| e.to_string())?;
        let got = agg.per_dimension["quality"].weighted_mean.unwrap();
        let plain = scores.iter().sum::<f64>() / scores.len() as f64;
        check(close(got, plain, 1e-12), format!("case {case}: {got} vs {plain}"))?;
    }

    // budget conservation
    let mut s = RatingStore::new(rating_config()).unwrap();
    let users: Vec<String> = (0..6).map(|i| format!("u{i}")).collect();
    for u in &users {
        s.register_user(u);
    }
    let mut rated: BTreeSet<(String, String)> = BTreeSet::new();
    let mut spent: BTreeMap<(String, &str), u32> = BTreeMap::new();
    for i in 0..10_000 {
        let u = users[rng.random_range(0..users.len())].clone();
        let item = format!("i{}", rng.random_range(0..90));
        let (ts, month) = if rng.random_bool(0.5) {
            (JAN, "2024-01")
        } else {
            (FEB, "2024-02")
        };
        let key = (u.clone(), month);
        let is_new = !rated.contains(&(u.clone(), item.clone()));
        let used = spent.get(&key).copied().unwrap_or(0);
        let result = s.submit_rating(ev(&u, &item, &[("quality", 3)], ts));
        match result {
            Ok(out) => {
                check(out.replaced == !is_new, format!("submission {i}: replaced flag"))?;
                if is_new {
                    check(used < 30, format!("submission {i}: accepted beyond budget"))?;
                    rated.insert((u.clone(), item));
                    spent.insert(key.clone(), used + 1);
                }
            }
            Err(RatingError::BudgetExhausted { .. }) => {
                check(
                    is_new && used == 30,
                    format!("submission {i}: refused with {used} spent"),
                )?;
            }
            Err(e) => return Err(format!("submission {i}: {e}")),
        }
        check(
            s.spent(&u, month) == spent.get(&key).copied().unwrap_or(0),
            format!("submission {i}: ledger"),
        )?;
    }
    let total_spent: u32 = spent.values().sum();
    check(
        total_spent as usize == rated.len(),
        "points spent differ from distinct ratings",
    )?;

    // fixed point convergence on random stores
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let mut s = RatingStore::new(rating_config()).unwrap();
        let n = rng.random_range(2..10);
        let users: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
        for u in &users {
            s.register_user(u);
        }
        let mut authored: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for it in 0..rng.random_range(1..25) {
            let item = format!("it{it}");
            authored
                .entry(users[rng.random_range(0..n)].clone())
                .or_default()
                .push(item.clone());
            for u in &users {
                if rng.random_bool(0.5) {
                    let sc = [
                        ("quality", rng.random_range(1..=5)),
                        ("novelty", rng.random_range(1..=5)),
                    ];
                    s.submit_rating(ev(u, &item, &sc, JAN)).unwrap();
                }
            }
        }
        let run = s
            .compute_reputation(&authored, ReputationParams::default(), JAN)
            .map_err(|e| format!("store {case}: {e}"))?;
        worst = worst.max(run.max_change);
        check(
            run.max_change < 1e-9,
            format!("store {case}: max change {}", run.max_change),
        )?;
    }

    // symmetric mid-scale store
    let mut s = RatingStore::new(rating_config()).unwrap();
    let names = ["a", "b", "c", "d"];
    for u in names {
        s.register_user(u);
    }
    for author in names {
        for rater in names {
            s.submit_rating(ev(
                rater,
                &format!("by-{author}"),
                &[("quality", 3), ("novelty", 3)],
                JAN,
            ))
            .unwrap();
        }
    }
    let authored = names.iter().map(|u| (u.to_string(), vec![format!("by-{u}")])).collect();
    let run = s
        .compute_reputation(&authored, ReputationParams::default(), JAN)
        .map_err(|e| e.to_string())?;
    check(
        run.reputations.values().all(|v| close(*v, 0.5, 1e-9)),
        format!("mid-scale {:?}", run.reputations),
    )?;

    // planted deviant
    let mut s = RatingStore::new(rating_config()).unwrap();
    let honest: Vec<String> = (0..20).map(|i| format!("h{i:02}")).collect();
    for u in honest.iter().map(String::as_str).chain(["deviant"]) {
        s.register_user(u);
    }
    for it in 0..25 {
        let item = format!("i{it}");
        // honest raters score low, the deviant always gives scale_max
        for u in &honest {
            let q = rng.random_range(1..=2);
            s.submit_rating(ev(u, &item, &[("quality", q)], JAN)).unwrap();
        }
        s.submit_rating(ev("deviant", &item, &[("quality", 5)], JAN)).unwrap();
    }
    let flagged = s.detect_anomalies(AnomalyParams::default());
    let ids: Vec<&str> = flagged.iter().map(|a| a.user_id.as_str()).collect();
    check(ids == ["deviant"], format!("flagged {ids:?}"))?;
    let z = flagged[0].z_score;
    check(z.abs() > 3.0, format!("deviant z {z}"))?;
    Ok(format!(
        "uniform mean, 10000 budget checks, 100 stores (max change {worst:.1e}), mid-scale 0.5, deviant z={z:.2}"
    ))
}

#[derive(Debug, Clone)]
enum Op {
    Select,
    Report(&'static str, Verdict),
    Evaluate,
    Revise,
    Decide(bool),
    Comment,
}

fn apply(wf: &mut ManuscriptWorkflow, op: &Op, reps: &BTreeMap<String, f64>, cfg: &ReviewConfig) -> bool {
    match op {
        Op::Select => wf.select_for_review(cfg).is_ok(),
        Op::Report(r, v) => wf
            .record_report(
                RefereeReport {
                    referee_id: r.to_string(),
                    verdict: *v,
                    text: String::new(),
                    timestamp: 0,
                },
                cfg,
            )
            .is_ok(),
        Op::Evaluate => wf.evaluate_reports(reps, cfg.reputation_threshold, cfg).is_ok(),
        Op::Revise => wf.submit_revision(None).is_ok(),
        Op::Decide(a) => wf.editorial_decision(*a).is_ok(),
        Op::Comment => {
            wf.add_reader_comment(ia_core::review::ReaderComment {
                reader_id: "reader".into(),
                text: String::new(),
                timestamp: 0,
            });
            true
        }
    }
}

struct Enumeration {
    sequences: u64,
    published: u64,
    bad: Vec<String>,
}

fn explore(
    wf: &ManuscriptWorkflow,
    trail: &mut Vec<(Op, ManuscriptState)>,
    ops: &[Op],
    reps: &BTreeMap<String, f64>,
    cfg: &ReviewConfig,
    out: &mut Enumeration,
) {
    out.sequences += 1;
    if wf.state == ManuscriptState::Published {
        out.published += 1;
        use ManuscriptState::*;
        let mut states: Vec<ManuscriptState> = vec![Archived];
        for (_, s) in trail.iter() {
            if states.last() != Some(s) {
                states.push(*s);
            }
        }
        let canonical = states == [Archived, UnderReview, RevisionRequested, Revised, Published];
        let qualifying = wf.past_rounds.last().is_some_and(|round| {
            round.len() == 3
                && round
                    .iter()
                    .any(|r| r.verdict == Verdict::Positive && reps[&r.referee_id] >= cfg.reputation_threshold)
        });
        if !(canonical && qualifying) && out.bad.len() < 5 {
            out.bad
                .push(format!("{:?}", trail.iter().map(|t| &t.0).collect::<Vec<_>>()));
        }
    }
    if trail.len() == 8 {
        return;
    }
    for op in ops {
        let mut next = wf.clone();
        if apply(&mut next, op, reps, cfg) {
            trail.push((op.clone(), next.state));
            explore(&next, trail, ops, reps, cfg, out);
            trail.pop();
        }
    }
}

fn criterion_8() -> Outcome {
    let cfg = ReviewConfig::default();
    let reps: BTreeMap<String, f64> = [("hi", 0.9), ("lo", 0.1), ("mid", 0.5)]
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    let mut ops = vec![
        Op::Select,
        Op::Evaluate,
        Op::Revise,
        Op::Decide(true),
        Op::Decide(false),
        Op::Comment,
    ];
    for r in ["hi", "lo", "mid"] {
        ops.push(Op::Report(r, Verdict::Positive));
        ops.push(Op::Report(r, Verdict::Negative));
    }
    let mut out = Enumeration {
        sequences: 0,
        published: 0,
        bad: Vec::new(),
    };
    explore(
        &ManuscriptWorkflow::new("m"),
        &mut Vec::new(),
        &ops,
        &reps,
        &cfg,
        &mut out,
    );
    check(out.published > 0, "Published never reached")?;
    check(
        out.bad.is_empty(),
        format!("non-canonical paths to Published: {:?}", out.bad),
    )?;

    let run = |verdicts: [(&'static str, Verdict); 3]| {
        let mut wf = ManuscriptWorkflow::new("m");
        apply(&mut wf, &Op::Select, &reps, &cfg);
        for (r, v) in verdicts {
            apply(&mut wf, &Op::Report(r, v), &reps, &cfg);
        }
        apply(&mut wf, &Op::Evaluate, &reps, &cfg);
        wf.state
    };
    use Verdict::*;
    let nnn = run([("hi", Negative), ("lo", Negative), ("mid", Negative)]);
    let weak = run([("lo", Positive), ("hi", Negative), ("mid", Negative)]);
    let good = run([("lo", Negative), ("hi", Positive), ("mid", Negative)]);
    check(
        nnn == ManuscriptState::ArchivedRejected,
        format!("neg/neg/neg -> {nnn:?}"),
    )?;
    check(
        weak == ManuscriptState::ArchivedRejected,
        format!("weak positive -> {weak:?}"),
    )?;
    check(
        good == ManuscriptState::RevisionRequested,
        format!("qualifying positive -> {good:?}"),
    )?;
    Ok(format!(
        "{} sequences, {} reach Published, all canonical; fixtures ok",
        out.sequences, out.published
    ))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for case in 0..1000 {
        let n = rng.random_range(0..30);
        let mut items: Vec<(String, f64)> = (0..n)
            .map(|i| (format!("x{i:02}"), rng.random_range(0..6) as f64))
            .collect();
        items.shuffle(&mut rng);
        let got = randomized_display(&items, 0.0, rng.random()).map_err(|e| e.to_string())?;
        let mut want = items.clone();
        want.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let want: Vec<String> = want.into_iter().map(|(id, _)| id).collect();
        check(got.item_ids == want, format!("case {case}: temperature 0 order"))?;
        let t = rng.random_range(0.1..3.0);
        let seed = rng.random();
        check(
            randomized_display(&items, t, seed).unwrap() == randomized_display(&items, t, seed).unwrap(),
            format!("case {case}: seed {seed} not reproducible"),
        )?;
    }
    let items = vec![("top".to_string(), 8.0), ("b".to_string(), 1.0), ("c".to_string(), 1.0)];
    let draws = 100_000u64;
    let hits = (0..draws)
        .filter(|s| randomized_display(&items, 1.0, *s).unwrap().item_ids[0] == "top")
        .count();
    let freq = hits as f64 / draws as f64;
    check(close(freq, 0.8, 0.01), format!("first-position frequency {freq}"))?;
    Ok(format!("1000 sorts and replays exact; P(top first) = {freq:.4}"))
}

fn criterion_10() -> Outcome {
    let fx = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let p = |n: &str| fx.join(n).display().to_string();
    let (corpus, conf) = (p("corpus"), p("ia.conf"));
    let base = ["--corpus", corpus.as_str(), "--config", conf.as_str()];
    let commands: Vec<Vec<String>> = vec![
        vec!["ingest".into()],
        vec!["metrics".into(), "author".into(), "A1".into()],
        vec!["metrics".into(), "eigenfactor".into()],
        vec!["metrics".into(), "cocited".into()],
        vec!["display-order".into()],
        vec!["display-order".into(), "--format".into(), "csv".into()],
        vec!["recommend".into(), "--by".into(), "coaccess".into(), "P1".into()],
        vec!["reputation".into(), p("ratings.jsonl")],
        vec!["review".into(), p("review.jsonl")],
        vec!["rank".into(), p("matrix.csv"), "--mode".into(), "league".into()],
    ];
    let run = |args: &[String]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_ia"));
        for (k, _) in std::env::vars() {
            if k.starts_with("IA_") {
                cmd.env_remove(k);
            }
        }
        cmd.args(base).args(args).output().expect("ia runs")
    };
    for args in &commands {
        let (a, b) = (run(args), run(args));
        check(
            a.status.success(),
            format!("{args:?}: {}", String::from_utf8_lossy(&a.stderr)),
        )?;
        check(
            a.stdout == b.stdout && !a.stdout.is_empty(),
            format!("{args:?}: outputs differ"),
        )?;
    }
    Ok(format!("{} commands byte-identical across two runs", commands.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("index identities", criterion_1),
        ("brute-force oracle equivalence", criterion_2),
        ("journal impact factor fixture", criterion_3),
        ("cited half-life fixture", criterion_4),
        ("eigenfactor", criterion_5),
        ("weighted, talent and league scores", criterion_6),
        ("rating and reputation", criterion_7),
        ("review workflow", criterion_8),
        ("randomized display", criterion_9),
        ("CLI determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let started = std::time::Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {:>2} {name}: {detail} ({secs:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name}: {why} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
