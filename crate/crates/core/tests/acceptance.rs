//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{anyhow, ensure, Result};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sara::assemble::{
    parse_request, render_request, serialize_request, Assembler, BudgetPolicy, BudgetStatus,
    GenerationRequest, PromptTemplate, Segment,
};
use sara::embed::{EmbedBackend, EmbedError, EmbeddingVector, HashStub};
use sara::evalkit::{rouge_l, rouge_l_tokens, token_f1};
use sara::pipeline::{chunk_corpus, BudgetModeName, Engine, RunConfig};
use sara::proxylm::{csi_score, train_ngram};
use sara::retrieval::{build_index, load_index, persist_index, ChunkRef, Index};
use sara::select::{select_evidence, Candidate, EvidenceSet, SelectionBackends, SelectionConfig, Strategy};
use sara::textcore::{chunk_document, count_tokens, Chunk};

const WORDS: &[&str] = &[
    "river", "delta", "star", "light", "salt", "trade", "bread", "code", "flood", "orbit",
];

fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn words(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> String {
    let n = rng.random_range(lo..=hi);
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// A corpus of one-chunk documents; about a third repeat an earlier text so
/// exact embedding ties occur.
fn random_corpus(rng: &mut ChaCha8Rng, max_docs: usize) -> Index {
    let m = rng.random_range(1..=max_docs);
    let mut texts: Vec<String> = Vec::new();
    for _ in 0..m {
        if !texts.is_empty() && rng.random_bool(0.35) {
            let t = texts.choose(rng).unwrap().clone();
            texts.push(t);
        } else {
            texts.push(words(rng, 1, 6));
        }
    }
    let chunks: Vec<Chunk> = texts
        .iter()
        .enumerate()
        .flat_map(|(i, t)| chunk_document(&format!("d{i}"), t, 256).unwrap())
        .collect();
    build_index(&chunks).unwrap()
}

fn candidates(index: &Index, query: &str, n: usize) -> Vec<Candidate> {
    let retrieved = index.retrieve_top_n(query, n).unwrap();
    Candidate::resolve(index, &retrieved).unwrap()
}

fn embed_all(backend: &dyn EmbedBackend, texts: &[&str]) -> Vec<Vec<f32>> {
    backend
        .embed_batch(texts)
        .unwrap()
        .into_iter()
        .map(EmbeddingVector::into_values)
        .collect()
}

struct OracleRun {
    order: Vec<ChunkRef>,
    scores: Vec<f64>,
    tie_steps: usize,
}

/// Re-scores every remaining candidate at every step from the raw vectors.
fn oracle_emb(query: &str, cands: &[Candidate], k_sel: usize, backend: &dyn EmbedBackend) -> OracleRun {
    let q = &embed_all(backend, &[query])[0];
    let texts: Vec<&str> = cands.iter().map(|c| c.text.as_str()).collect();
    let vs = embed_all(backend, &texts);
    let dim = q.len();
    let v_q: Vec<f32> = (0..dim)
        .map(|i| ((f64::from(q[i]) + f64::from(vs[0][i])) / 2.0) as f32)
        .collect();
    let dist = |set: &[usize]| -> f64 {
        let mut total = 0.0f64;
        for i in 0..dim {
            let mut s = 0.0f64;
            for &j in set {
                s += f64::from(vs[j][i]);
            }
            let d = f64::from(v_q[i]) - s / set.len() as f64;
            total += d * d;
        }
        total.sqrt()
    };
    let mut chosen = vec![0usize];
    let mut scores = vec![dist(&chosen)];
    let mut tie_steps = 0;
    while chosen.len() < k_sel.min(cands.len()) {
        let scored: Vec<(usize, f64)> = (0..cands.len())
            .filter(|j| !chosen.contains(j))
            .map(|j| {
                let mut set = chosen.clone();
                set.push(j);
                (j, dist(&set))
            })
            .collect();
        let best = scored.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let tied: Vec<&(usize, f64)> = scored
            .iter()
            .filter(|s| (s.1 - best).abs() <= 1e-6 * s.1.abs().max(best.abs()))
            .collect();
        if tied.len() > 1 {
            tie_steps += 1;
        }
        let winner = tied.iter().min_by_key(|s| cands[s.0].rank).unwrap();
        chosen.push(winner.0);
        scores.push(winner.1);
    }
    OracleRun {
        order: chosen.iter().map(|&j| cands[j].chunk_ref.clone()).collect(),
        scores,
        tie_steps,
    }
}

fn run_emb(query: &str, cands: &[Candidate], n: usize, k_sel: usize, backend: &dyn EmbedBackend) -> EvidenceSet {
    let config = SelectionConfig::new(Strategy::Emb, n, k_sel);
    let backends = SelectionBackends {
        embed: Some(backend),
        proxy: None,
    };
    select_evidence(query, cands, &config, backends).unwrap()
}

fn criterion_1() -> Result<String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut tie_instances = 0;
    for instance in 0..200 {
        let index = random_corpus(&mut rng, 8);
        let query = words(&mut rng, 1, 4);
        let k_sel = rng.random_range(1..=4);
        let dim = *[2usize, 4, 8, 16].choose(&mut rng).unwrap();
        let stub = HashStub::new(dim)?;
        let cands = candidates(&index, &query, 8);
        let got = run_emb(&query, &cands, 8, k_sel, &stub);
        let want = oracle_emb(&query, &cands, k_sel, &stub);
        let got_order: Vec<ChunkRef> = got.chunk_refs().into_iter().cloned().collect();
        ensure!(got_order == want.order, "instance {instance}: {got_order:?} vs oracle {:?}", want.order);
        for (s, w) in got.selected.iter().zip(&want.scores) {
            ensure!((s.step_score - w).abs() <= 1e-12, "instance {instance}: score {} vs {w}", s.step_score);
        }
        if want.tie_steps > 0 {
            tie_instances += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure!(tie_instances > 0, "no instance exercised a tie");
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("200 instances match, {tie_instances} with ties, {elapsed:.2?}"))
}

fn criterion_2() -> Result<String> {
    let unigram = train_ngram(&["a a b"], 1, 1.0)?;
    let value = csi_score(&unigram, "a b", &[])?.value;
    let hand = (-(3.0f64 / 6.0).ln() - (2.0f64 / 6.0).ln()) / 2.0;
    ensure!((value - 0.8959).abs() <= 1e-4, "csi {value}");
    ensure!((value - hand).abs() <= 1e-12, "csi {value} vs hand {hand}");

    let trained = "the tide carries salt into the delta every spring";
    let unseen = "quartz zebra violin";
    let bigram = train_ngram(&[trained], 2, 0.1)?;
    let redundant = csi_score(&bigram, trained, &[trained])?.value;
    let novel = csi_score(&bigram, unseen, &[trained])?.value;
    ensure!(redundant < novel, "redundant {redundant} >= novel {novel}");
    Ok(format!("csi {value:.6}, redundant {redundant:.4} < unseen {novel:.4}"))
}

/// Hash-stub outputs multiplied by a constant.
struct Scaled {
    inner: HashStub,
    c: f32,
}

impl EmbedBackend for Scaled {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        self.inner
            .embed_batch(texts)?
            .into_iter()
            .map(|v| EmbeddingVector::new(v.values().iter().map(|x| x * self.c).collect()))
            .collect()
    }
}

fn criterion_3() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for instance in 0..50 {
        let index = random_corpus(&mut rng, 10);
        let query = words(&mut rng, 1, 4);
        let k_sel = rng.random_range(1..=5);
        let dim = *[4usize, 8, 32].choose(&mut rng).unwrap();
        let cands = candidates(&index, &query, 10);
        let base = Scaled { inner: HashStub::new(dim)?, c: 1.0 };
        let reference: Vec<ChunkRef> = run_emb(&query, &cands, 10, k_sel, &base).chunk_refs().into_iter().cloned().collect();
        for c in [0.1f32, 3.0, 100.0] {
            let scaled = Scaled { inner: HashStub::new(dim)?, c };
            let order: Vec<ChunkRef> = run_emb(&query, &cands, 10, k_sel, &scaled).chunk_refs().into_iter().cloned().collect();
            ensure!(order == reference, "instance {instance}, c = {c}: {order:?} vs {reference:?}");
        }
    }
    Ok("50 instances, c in {0.1, 3, 100}, identical orders".into())
}

fn random_contexts(rng: &mut ChaCha8Rng) -> Vec<Chunk> {
    let count = rng.random_range(1..=10);
    (0..count)
        .map(|i| {
            let sentences = rng.random_range(1..=12);
            let text = (0..sentences)
                .map(|_| {
                    let mut s = words(rng, 1, 30);
                    s.push('.');
                    s
                })
                .collect::<Vec<_>>()
                .join(" ");
            chunk_document(&format!("r{i}"), &text, 100_000).unwrap().remove(0)
        })
        .collect()
}

fn recount(req: &GenerationRequest, cost: usize) -> usize {
    let text: usize = req.text_contents().map(count_tokens).sum();
    text + cost * req.vector_count()
}

fn criterion_4() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let assembler = Assembler::new(Arc::new(HashStub::new(16)?));
    let mut emitted = 0;
    for instance in 0..500 {
        let contexts = random_contexts(&mut rng);
        let budget = rng.random_range(128..=2048);
        let question = words(&mut rng, 1, 12);
        match assembler.assemble(&question, &contexts, &BudgetPolicy::budget_fit(budget)) {
            Ok(out) => {
                let used = recount(&out.request, 1);
                ensure!(used <= budget, "instance {instance}: {used} > {budget}");
                ensure!(used == out.usage.total_tokens, "instance {instance}: recount {used} vs {}", out.usage.total_tokens);
                emitted += 1;
            }
            Err(sara::assemble::AssembleError::BudgetInfeasible { .. }) => {}
            Err(e) => return Err(anyhow!("instance {instance}: {e}")),
        }
    }

    let mut fixed_rng = ChaCha8Rng::seed_from_u64(40);
    let contexts = loop {
        let c = random_contexts(&mut fixed_rng);
        if c.len() >= 6 {
            break c;
        }
    };
    let mut last: Option<usize> = None;
    let mut ks = Vec::new();
    for budget in (128..=2048).step_by(8) {
        let k = assembler.partition("what happened?", &contexts, &BudgetPolicy::budget_fit(budget)).ok().map(|p| p.k);
        if let (Some(prev), cur) = (last, k) {
            ensure!(cur.is_some_and(|k| k >= prev), "k fell from {prev} to {cur:?} at budget {budget}");
        }
        if k.is_some() {
            last = k;
        }
        ks.push(k);
    }
    ensure!(ks.iter().flatten().collect::<std::collections::BTreeSet<_>>().len() > 2, "fixture does not exercise k");
    Ok(format!("{emitted}/500 emitted, all within budget; k monotone over 241 budgets"))
}

fn criterion_5() -> Result<String> {
    let chunks: Vec<Chunk> = [("c1", "a b a"), ("c2", "b c"), ("c3", "c c c")]
        .iter()
        .flat_map(|(id, t)| chunk_document(id, t, 256).unwrap())
        .collect();
    let index = build_index(&chunks)?;
    let score = index.bm25_score(&["a".to_string()], &ChunkRef::from("c1#0"))?;
    let (k1, b, avg, tf, len) = (1.2f64, 0.75f64, 8.0f64 / 3.0, 2.0f64, 3.0f64);
    let idf = ((3.0 - 1.0 + 0.5) / (1.0 + 0.5) + 1.0f64).ln();
    let hand = idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / avg));
    ensure!((score - 1.3028).abs() <= 1e-3, "score {score}");
    ensure!((score - hand).abs() <= 1e-12, "score {score} vs hand {hand}");

    let n = 12;
    let mut previous = f64::INFINITY;
    for df in 0..=n {
        let chunks: Vec<Chunk> = (0..n)
            .flat_map(|i| {
                let text = if i < df { "z filler" } else { "filler" };
                chunk_document(&format!("d{i:02}"), text, 256).unwrap()
            })
            .collect();
        let idf = build_index(&chunks)?.idf("z");
        ensure!(idf < previous && idf > 0.0, "idf {idf} at df {df} not below {previous}");
        previous = idf;
    }
    Ok(format!("score(c1, a) = {score:.4}; idf strictly decreasing for df 0..={n}"))
}

/// Every sequence of length 0..=8 over {0, 1, 2}, parents before children.
fn all_sequences() -> (Vec<Vec<u8>>, Vec<usize>) {
    let mut seqs = vec![Vec::new()];
    let mut parent = vec![usize::MAX];
    let mut i = 0;
    while i < seqs.len() {
        if seqs[i].len() < 8 {
            for sym in 0..3u8 {
                let mut s = seqs[i].clone();
                s.push(sym);
                seqs.push(s);
                parent.push(i);
            }
        }
        i += 1;
    }
    (seqs, parent)
}

fn criterion_6() -> Result<String> {
    let f1 = token_f1("the cat sat", "cat sat down");
    let rl = rouge_l("a b c d", "a c d");
    ensure!((f1 - 0.6667).abs() <= 1e-4, "f1 {f1}");
    ensure!((rl - 0.8571).abs() <= 1e-4, "rouge-l {rl}");

    let start = Instant::now();
    let (seqs, parent) = all_sequences();
    // rows[a][j] = LCS(a, b[..j]), built from the parent's row.
    let mut rows = vec![[0u8; 9]; seqs.len()];
    let mut checked = 0u64;
    for b in &seqs {
        for a in 1..seqs.len() {
            let p = parent[a];
            let last = *seqs[a].last().unwrap();
            let mut row = [0u8; 9];
            for j in 1..=b.len() {
                row[j] = if b[j - 1] == last {
                    rows[p][j - 1] + 1
                } else {
                    rows[p][j].max(row[j - 1])
                };
            }
            rows[a] = row;
        }
        for (a, seq) in seqs.iter().enumerate() {
            let lcs = f64::from(rows[a][b.len()]);
            let (la, lb) = (seq.len() as f64, b.len() as f64);
            let want = match (seq.len(), b.len()) {
                (0, 0) => 1.0,
                (0, _) | (_, 0) => 0.0,
                _ => 2.0 * lcs / (la + lb),
            };
            let got = rouge_l_tokens(seq, b);
            if (got - want).abs() > 1e-12 {
                return Err(anyhow!("rouge_l({seq:?}, {b:?}) = {got}, oracle {want}"));
            }
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "exhaustive check took {elapsed:?}");

    let names = ["x", "y", "z"];
    let short: Vec<&Vec<u8>> = seqs.iter().filter(|s| s.len() <= 4).collect();
    for a in &short {
        for b in &short {
            let sa = a.iter().map(|&t| names[t as usize]).collect::<Vec<_>>().join(" ");
            let sb = b.iter().map(|&t| names[t as usize]).collect::<Vec<_>>().join(" ");
            ensure!(rouge_l(&sa, &sb) == rouge_l_tokens(a, b), "string form differs on {sa:?} / {sb:?}");
        }
    }
    Ok(format!("f1 {f1:.4}, rouge-l {rl:.4}; {checked} pairs match LCS oracle in {elapsed:.2?}"))
}

fn criterion_7() -> Result<String> {
    let (_, chunks) = chunk_corpus(fixture("corpus50.jsonl"), 256)?;
    let index = build_index(&chunks)?;
    let dir = tempfile::tempdir()?;
    persist_index(&index, dir.path())?;
    let loaded = load_index(dir.path())?;
    let vocab: Vec<String> = index.chunks().iter().flat_map(|c| c.text.split_whitespace().map(str::to_string)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for q in 0..100 {
        let n = rng.random_range(1..=4);
        let query = (0..n).map(|_| vocab.choose(&mut rng).unwrap().as_str()).collect::<Vec<_>>().join(" ");
        let a = index.retrieve_top_n(&query, 10)?;
        let b = loaded.retrieve_top_n(&query, 10)?;
        ensure!(a.len() == b.len(), "query {q}: lengths differ");
        for (x, y) in a.iter().zip(&b) {
            ensure!(
                x.chunk_ref == y.chunk_ref && x.rank == y.rank && x.retrieval_score.to_bits() == y.retrieval_score.to_bits(),
                "query {q} ({query:?}): {x:?} vs {y:?}"
            );
        }
    }

    let template = PromptTemplate::inference_v1();
    for r in 0..100 {
        let dim = rng.random_range(1..=16);
        let natural: Vec<String> = (0..rng.random_range(0..=3)).map(|_| words(&mut rng, 1, 20)).collect();
        let compressed: Vec<(ChunkRef, Vec<EmbeddingVector>)> = (0..rng.random_range(0..=4))
            .map(|i| {
                let count = rng.random_range(1..=8);
                let vectors = (0..count)
                    .map(|_| {
                        let values = (0..dim)
                            .map(|_| loop {
                                let f = f32::from_bits(rng.random());
                                if f.is_finite() {
                                    break f;
                                }
                            })
                            .collect();
                        EmbeddingVector::new(values).unwrap()
                    })
                    .collect();
                (ChunkRef(format!("doc{r}#{i}")), vectors)
            })
            .collect();
        let natural_refs: Vec<&str> = natural.iter().map(String::as_str).collect();
        let question = format!("{}? \"quoted\" \\ \u{e9}", words(&mut rng, 1, 8));
        let req = render_request(&question, &natural_refs, &compressed, &template);
        let back = parse_request(&serialize_request(&req))?;
        ensure!(back == req, "request {r} changed on round trip");
        for (x, y) in back.segments.iter().zip(&req.segments) {
            if let (Segment::Vectors { vectors: vx, .. }, Segment::Vectors { vectors: vy, .. }) = (x, y) {
                for (a, b) in vx.iter().zip(vy) {
                    let bits_a: Vec<u32> = a.values().iter().map(|f| f.to_bits()).collect();
                    let bits_b: Vec<u32> = b.values().iter().map(|f| f.to_bits()).collect();
                    ensure!(bits_a == bits_b, "request {r}: vector bits differ");
                }
            }
        }
    }
    Ok("100 queries rank identically after reload; 100 requests round-trip bit-exact".into())
}

fn check_evidence(evidence: &EvidenceSet, cands: &[Candidate], k_sel: usize) -> Result<()> {
    ensure!(evidence.selected[0].chunk_ref == cands[0].chunk_ref, "first pick is not rank 1");
    ensure!(evidence.len() == k_sel.min(cands.len()), "wrong selection size");
    let refs = evidence.chunk_refs();
    let unique: std::collections::HashSet<_> = refs.iter().collect();
    ensure!(unique.len() == refs.len(), "duplicate selection");
    ensure!(refs.iter().all(|r| cands.iter().any(|c| &c.chunk_ref == *r)), "selection outside candidates");
    Ok(())
}

fn criterion_8() -> Result<String> {
    let start = Instant::now();
    let (docs, chunks) = chunk_corpus(fixture("corpus50.jsonl"), 256)?;
    ensure!(docs == 50, "fixture has {docs} documents");
    ensure!(chunks.iter().all(|c| c.token_count <= 256 || c.sentences.len() == 1), "chunk over size");
    let index = build_index(&chunks)?;
    let mut config = RunConfig::default();
    config.selection.n = 10;
    config.selection.k_sel = 5;
    config.total_contexts = Some(10);
    config.budget_tokens = 512;
    config.budget_mode = BudgetModeName::BudgetFit;
    let engine = Engine::new(index, config.clone())?;

    let queries = [
        "sediment load of the Danube",
        "hydrogen absorption lines of Vega",
        "fermentation of kimchi",
        "latency of caches",
        "trade routes of Timbuktu",
        "walls rebuilt after sieges",
    ];
    let mut requests = 0;
    for query in queries {
        let cands = {
            let retrieved = engine.retrieve(query, 10)?;
            Candidate::resolve(engine.index(), &retrieved)?
        };
        for strategy in [Strategy::Emb, Strategy::Csi] {
            let selection = SelectionConfig::new(strategy, 10, 5);
            let evidence = engine.select_with(query, &selection)?;
            check_evidence(&evidence, &cands, 5)?;
        }
        let (evidence, contexts) = engine.assembly_contexts(query)?;
        check_evidence(&evidence, &cands, 10)?;
        for policy in [BudgetPolicy::budget_fit(512), BudgetPolicy::fixed_k(512, 5)] {
            let out = engine.assembler().assemble(query, &contexts, &policy)?;
            if policy == BudgetPolicy::budget_fit(512) {
                ensure!(recount(&out.request, 1) <= 512, "{query}: budget-fit request over budget");
            } else {
                ensure!(out.natural.len() == 5 && out.compressed.len() == 5, "{query}: fixed-k split");
            }
            ensure!(recount(&out.request, 1) == out.usage.total_tokens, "{query}: usage mismatch");
            let origins: Vec<&ChunkRef> = out.origins();
            ensure!(origins == evidence.chunk_refs(), "{query}: order not preserved");
            let vector_segments: Vec<&Segment> = out
                .request
                .segments
                .iter()
                .filter(|s| matches!(s, Segment::Vectors { .. }))
                .collect();
            ensure!(vector_segments.len() == out.compressed.len(), "{query}: vector segment count");
            for (seg, chunk) in vector_segments.iter().zip(&contexts[out.k..]) {
                if let Segment::Vectors { origin, vectors } = seg {
                    ensure!(origin.as_str() == chunk.id, "{query}: vector origin");
                    ensure!(vectors.len() == chunk.sentences.len().min(8), "{query}: vector count");
                }
            }
            let back = parse_request(&serialize_request(&out.request))?;
            ensure!(back == out.request, "{query}: request round trip");
            requests += 1;
        }
    }

    let sweep = engine.sweep(queries[0])?;
    ensure!(sweep.len() == 11, "sweep emitted {}", sweep.len());
    let mut within = 0;
    for (k, entry) in sweep.iter().enumerate() {
        ensure!(entry.k == k && entry.prompt.natural.len() == k, "sweep entry {k} misnumbered");
        entry.prompt.request.validate()?;
        ensure!(parse_request(&serialize_request(&entry.prompt.request))? == entry.prompt.request, "sweep {k} round trip");
        let used = recount(&entry.prompt.request, 1);
        let status_ok = match entry.status {
            BudgetStatus::WithinBudget => used <= 512,
            BudgetStatus::Infeasible => used > 512,
        };
        ensure!(status_ok, "sweep {k}: status {:?} with {used} tokens", entry.status);
        if entry.status == BudgetStatus::WithinBudget {
            within += 1;
        }
    }
    ensure!(
        sweep.windows(2).all(|w| w[0].prompt.usage.natural_tokens <= w[1].prompt.usage.natural_tokens),
        "natural tokens decrease along the sweep"
    );
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!(
        "{} queries, {requests} requests, sweep 11 requests ({within} within budget, rest marked infeasible), {elapsed:.2?}",
        queries.len()
    ))
}

fn main() {
    let criteria: [(u8, &str, fn() -> Result<String>); 8] = [
        (1, "EMB selection matches exhaustive oracle", criterion_1),
        (2, "CSI unigram value and redundancy", criterion_2),
        (3, "argmin invariant under scaling", criterion_3),
        (4, "budget safety and monotone k", criterion_4),
        (5, "BM25 hand value and IDF monotonicity", criterion_5),
        (6, "F1 / ROUGE-L oracles", criterion_6),
        (7, "index and request round-trips", criterion_7),
        (8, "default-configuration pipeline smoke test", criterion_8),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(anyhow!("panicked: {:?}", p.downcast_ref::<String>().map(String::as_str).or(p.downcast_ref::<&str>().copied()))));
        match outcome {
            Ok(detail) => println!("PASS criterion {id}: {name} ({detail})"),
            Err(e) => {
                failed += 1;
                println!("FAIL criterion {id}: {name} ({e:#})");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
