//! Brute-force metric oracles, written independently of the library
//! implementations: plain positional scans and dense vectors instead of
//! hash-based counting, full enumeration instead of pruned search.

/// All n-grams of order n as position slices.
fn grams(tokens: &[String], n: usize) -> Vec<&[String]> {
    if tokens.len() < n || n == 0 {
        return Vec::new();
    }
    (0..=tokens.len() - n).map(|i| &tokens[i..i + n]).collect()
}

fn count_occurrences(haystack: &[&[String]], needle: &[String]) -> usize {
    haystack.iter().filter(|g| ***g == *needle).count()
}

/// Sentence-level BLEU-4 with add-epsilon smoothing of zero precisions,
/// closest-reference brevity penalty (ties to the shorter reference).
pub fn bleu4_oracle(candidate: &[String], references: &[Vec<String>]) -> f64 {
    let mut log_sum = 0.0;
    for n in 1..=4usize {
        let cand_grams = grams(candidate, n);
        let total = cand_grams.len();
        let mut matched = 0usize;
        let mut seen: Vec<&[String]> = Vec::new();
        for g in &cand_grams {
            if seen.contains(g) {
                continue;
            }
            seen.push(g);
            let in_cand = count_occurrences(&cand_grams, g);
            let mut best_ref = 0usize;
            for r in references {
                let rg = grams(r, n);
                best_ref = best_ref.max(count_occurrences(&rg, g));
            }
            matched += in_cand.min(best_ref);
        }
        let p = if total == 0 || matched == 0 {
            1e-9
        } else {
            matched as f64 / total as f64
        };
        log_sum += p.ln();
    }
    let geo = (log_sum / 4.0).exp();

    let c = candidate.len();
    let mut r_len = references[0].len();
    for r in &references[1..] {
        let d_new = (r.len() as i64 - c as i64).abs();
        let d_old = (r_len as i64 - c as i64).abs();
        if d_new < d_old || (d_new == d_old && r.len() < r_len) {
            r_len = r.len();
        }
    }
    let bp = if c >= r_len {
        1.0
    } else {
        (1.0 - r_len as f64 / c as f64).exp()
    };
    bp * geo
}

/// Full-table LCS.
fn lcs_table(a: &[String], b: &[String]) -> usize {
    let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            table[i][j] = if a[i - 1] == b[j - 1] {
                table[i - 1][j - 1] + 1
            } else {
                table[i - 1][j].max(table[i][j - 1])
            };
        }
    }
    table[a.len()][b.len()]
}

pub fn rouge_l_oracle(candidate: &[String], references: &[Vec<String>]) -> f64 {
    let beta2 = 1.2f64 * 1.2;
    let mut best = 0.0f64;
    for r in references {
        let l = lcs_table(candidate, r) as f64;
        if l == 0.0 {
            continue;
        }
        let p = l / candidate.len() as f64;
        let rec = l / r.len() as f64;
        best = best.max((1.0 + beta2) * rec * p / (rec + beta2 * p));
    }
    best
}

/// Exhaustive alignment enumeration: every injective mapping from
/// candidate positions to equal-word reference positions is visited.
fn enumerate_alignments(
    cand: &[String],
    reference: &[String],
    pos: usize,
    used: &mut Vec<bool>,
    pairs: &mut Vec<(usize, usize)>,
    best: &mut (usize, usize),
) {
    if pos == cand.len() {
        let matches = pairs.len();
        let mut chunks = 0usize;
        for (idx, (i, j)) in pairs.iter().enumerate() {
            let contiguous =
                idx > 0 && pairs[idx - 1].0 + 1 == *i && pairs[idx - 1].1 + 1 == *j;
            if !contiguous {
                chunks += 1;
            }
        }
        if matches > best.0 || (matches == best.0 && chunks < best.1) {
            *best = (matches, chunks);
        }
        return;
    }
    enumerate_alignments(cand, reference, pos + 1, used, pairs, best);
    for j in 0..reference.len() {
        if !used[j] && reference[j] == cand[pos] {
            used[j] = true;
            pairs.push((pos, j));
            enumerate_alignments(cand, reference, pos + 1, used, pairs, best);
            pairs.pop();
            used[j] = false;
        }
    }
}

pub fn meteor_oracle(candidate: &[String], references: &[Vec<String>]) -> f64 {
    let mut best_score = 0.0f64;
    for r in references {
        let mut best = (0usize, usize::MAX);
        let mut used = vec![false; r.len()];
        let mut pairs = Vec::new();
        enumerate_alignments(candidate, r, 0, &mut used, &mut pairs, &mut best);
        let (m, chunks) = best;
        if m == 0 {
            continue;
        }
        let p = m as f64 / candidate.len() as f64;
        let rec = m as f64 / r.len() as f64;
        let f = p * rec / (0.9 * p + 0.1 * rec);
        let penalty = 0.5 * (chunks as f64 / m as f64).powf(3.0);
        best_score = best_score.max(f * (1.0 - penalty));
    }
    best_score
}

/// Dense-vector CIDEr-D over an explicit corpus of per-image reference
/// lists. `refs` must be one of the corpus entries.
pub fn cider_d_oracle(
    candidate: &[String],
    references: &[Vec<String>],
    corpus: &[Vec<Vec<String>>],
) -> f64 {
    let n_docs = corpus.len() as f64;
    let mut total = 0.0f64;
    for n in 1..=4usize {
        // global gram list for this order
        let mut vocabulary: Vec<Vec<String>> = Vec::new();
        let mut add = |tokens: &[String]| {
            for g in grams(tokens, n) {
                if !vocabulary.iter().any(|v| v.as_slice() == g) {
                    vocabulary.push(g.to_vec());
                }
            }
        };
        add(candidate);
        for r in references {
            add(r);
        }

        let df: Vec<f64> = vocabulary
            .iter()
            .map(|g| {
                corpus
                    .iter()
                    .filter(|doc| {
                        doc.iter()
                            .any(|sent| count_occurrences(&grams(sent, n), g) > 0)
                    })
                    .count() as f64
            })
            .collect();
        let weight = |tokens: &[String]| -> Vec<f64> {
            vocabulary
                .iter()
                .zip(df.iter())
                .map(|(g, d)| {
                    let tf = count_occurrences(&grams(tokens, n), g) as f64;
                    tf * (n_docs.ln() - d.max(1.0).ln())
                })
                .collect()
        };

        let hv = weight(candidate);
        let h_norm = hv.iter().map(|v| v * v).sum::<f64>().sqrt();
        for r in references {
            let rv = weight(r);
            let r_norm = rv.iter().map(|v| v * v).sum::<f64>().sqrt();
            if h_norm == 0.0 || r_norm == 0.0 {
                continue;
            }
            let mut sim = 0.0;
            for (h, rw) in hv.iter().zip(rv.iter()) {
                sim += h.min(*rw) * rw;
            }
            sim /= h_norm * r_norm;
            let delta = candidate.len() as f64 - r.len() as f64;
            sim *= (-delta * delta / (2.0 * 6.0 * 6.0)).exp();
            total += sim;
        }
    }
    10.0 * (total / 4.0) / references.len() as f64
}

/// 30 hand pairs, at most 6 tokens each: identities, disjoint pairs,
/// repetition, permutations, length extremes, and multi-reference cases.
pub fn hand_corpus() -> Vec<(Vec<String>, Vec<Vec<String>>)> {
    let t = |s: &str| -> Vec<String> { s.split_whitespace().map(String::from).collect() };
    vec![
        (t("a red circle above a square"), vec![t("a red circle above a square")]),
        (t("the big star holding a ring"), vec![t("the big star holding a ring")]),
        (t("alpha beta gamma delta"), vec![t("one two three four")]),
        (t("the the the"), vec![t("the cat sat")]),
        (t("a b c"), vec![t("a x b y")]),
        (t("red circle"), vec![t("a red circle above a square")]),
        (t("a red circle above a square"), vec![t("red circle")]),
        (t("square a above circle red a"), vec![t("a red circle above a square")]),
        (t("a"), vec![t("a")]),
        (t("a"), vec![t("b")]),
        (t("a a a a a a"), vec![t("a a a a a a")]),
        (t("a a a"), vec![t("a b a b a")]),
        (t("x y z"), vec![t("x y z w"), t("z y x")]),
        (t("one two three"), vec![t("one two"), t("two three"), t("three one")]),
        (t("big blue square"), vec![t("big blue square"), t("small red circle")]),
        (t("cat sat on mat"), vec![t("the cat sat on the mat")]),
        (t("the quick brown fox"), vec![t("the slow brown dog")]),
        (t("green ring beside star"), vec![t("green ring beside star"), t("a green ring")]),
        (t("holding holding holding"), vec![t("star holding ring")]),
        (t("b a"), vec![t("a b")]),
        (t("a b a b"), vec![t("b a b a")]),
        (t("red red blue blue"), vec![t("red blue red blue")]),
        (t("tiny star"), vec![t("a very big yellow star here")]),
        (t("a very big yellow star here"), vec![t("tiny star")]),
        (t("circle above square above ring"), vec![t("circle above square"), t("square above ring")]),
        (t("purple triangle leftof orange ring"), vec![t("purple triangle leftof orange ring")]),
        (t("one one two two three"), vec![t("one two three"), t("three two one")]),
        (t("x"), vec![t("x y z w v u")]),
        (t("u v w x y z"), vec![t("z")]),
        (t("mixed bag of words here"), vec![t("bag of mixed words"), t("words here mixed")]),
    ]
}
