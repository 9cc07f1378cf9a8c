//! Brute-force references, written without reusing the library's decoders.

use rand::Rng;
use transproj_core::{Tag, TaggedSentence};

/// Every tag over `labels`: `O`, then `B-x`, `I-x` per label.
pub fn alphabet(labels: &[&str]) -> Vec<Tag> {
    let mut out = vec![Tag::Outside];
    for l in labels {
        out.push(Tag::begin(*l));
        out.push(Tag::inside(*l));
    }
    out
}

/// All sequences of length `n` over `alphabet`.
pub fn sequences(alphabet: &[Tag], n: usize) -> Vec<Vec<Tag>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                alphabet.iter().map(move |t| {
                    let mut next = prefix.clone();
                    next.push(t.clone());
                    next
                })
            })
            .collect();
    }
    out
}

/// Grammar `(O | B-x I-x*)*`, by recursive descent with backtracking.
pub fn iob2_accepts(tags: &[Tag]) -> bool {
    match tags.first() {
        None => true,
        Some(Tag::Outside) => iob2_accepts(&tags[1..]),
        Some(Tag::Inside(_)) => false,
        Some(Tag::Begin(label)) => {
            // try every run length of I-label after the B
            let mut k = 1;
            loop {
                if iob2_accepts(&tags[k..]) {
                    return true;
                }
                match tags.get(k) {
                    Some(Tag::Inside(l)) if l == label => k += 1,
                    _ => return false,
                }
            }
        }
    }
}

/// A labelled `[start, end)` segment.
pub type Segment = (usize, usize, String);

/// Every set of non-overlapping labelled segments over `n` positions, sorted by start.
pub fn segmentations(n: usize, labels: &[&str]) -> Vec<Vec<Segment>> {
    fn go(pos: usize, n: usize, labels: &[&str], acc: &mut Vec<Segment>, out: &mut Vec<Vec<Segment>>) {
        if pos == n {
            out.push(acc.clone());
            return;
        }
        // position left outside
        go(pos + 1, n, labels, acc, out);
        for end in pos + 1..=n {
            for l in labels {
                acc.push((pos, end, l.to_string()));
                go(end, n, labels, acc, out);
                acc.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(0, n, labels, &mut Vec::new(), &mut out);
    out
}

/// Naive renderer: B at each segment start, I inside, O elsewhere.
pub fn render(segments: &[Segment], n: usize) -> Vec<Tag> {
    (0..n)
        .map(|i| {
            segments
                .iter()
                .find(|(s, e, _)| (*s..*e).contains(&i))
                .map_or(
                    Tag::Outside,
                    |(s, _, l)| if *s == i { Tag::begin(l) } else { Tag::inside(l) },
                )
        })
        .collect()
}

/// A random, valid IOB2 sentence: 1..=12 tokens, at most 4 entities over `labels`.
pub fn random_sentence<R: Rng>(rng: &mut R, labels: &[String], origin: usize) -> TaggedSentence {
    let n = rng.gen_range(1..=12);
    let mut tokens = Vec::with_capacity(n);
    let mut tags = Vec::with_capacity(n);
    let mut entities = 0;
    let mut i = 0;
    while i < n {
        if entities < 4 && rng.gen_bool(0.3) {
            let len = rng.gen_range(1..=3).min(n - i);
            let label = &labels[rng.gen_range(0..labels.len())];
            for k in 0..len {
                tokens.push(format!("e{}x{}", entities, k));
                tags.push(if k == 0 { Tag::begin(label) } else { Tag::inside(label) });
            }
            entities += 1;
            i += len;
        } else {
            tokens.push(format!("w{i}"));
            tags.push(Tag::Outside);
            i += 1;
        }
    }
    let tokens = tokens
        .into_iter()
        .map(|t| transproj_core::Token::new(t).unwrap())
        .collect();
    TaggedSentence::new(tokens, tags, origin).unwrap()
}

/// Entities as `(label, words)` read straight off the tags.
pub fn entities_of(sentence: &TaggedSentence) -> Vec<(String, Vec<String>)> {
    let mut out: Vec<(String, Vec<String>)> = Vec::new();
    for (token, tag) in sentence.tokens().iter().zip(sentence.tags()) {
        match tag {
            Tag::Begin(l) => out.push((l.clone(), vec![token.to_string()])),
            Tag::Inside(_) => out.last_mut().unwrap().1.push(token.to_string()),
            Tag::Outside => {}
        }
    }
    out
}
