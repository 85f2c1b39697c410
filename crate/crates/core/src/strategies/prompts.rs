//! Prompt templates. Placeholders are brace-delimited names such as `{query}`.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const GENERATION: &str = "Answer the following question based ONLY on
the provided context.
If the answer is a number, provide just the
number. If you cannot answer from the
context, say \"UNANSWERABLE\".

Context:
{context}

Question: {question}

Answer:";

pub const HYDE: &str = "Given the following question about financial
data, write a short passage that would
contain the answer. Include specific numbers
and financial terms.
Question: {query}
Passage:";

pub const HYDE_FALLBACK: &str = "Please write a short passage that directly
answers the following question. The passage
should be factual, detailed, and roughly
the length of a typical encyclopedia
paragraph.

Question: {query}

Passage:";

pub const MULTI_QUERY: &str = "You are a helpful assistant that generates
alternative search queries. Given the
following question, generate {n} alternative
phrasings that capture the same information
need but use different wording or
perspectives. Return each query on its own
line, numbered (e.g. 1. ... 2. ...).
Do not include any other text.

Original question: {query}

Alternative queries:";

pub const CRAG_EVAL: &str = "You are a relevance evaluator. Given a
question and a retrieved document, classify
the document's relevance to answering the
question.

Question: {query}
Document: {document}

Respond with exactly one of:
- RELEVANT: The document contains
  information that directly helps answer
  the question.
- AMBIGUOUS: The document is partially
  relevant or tangentially related but
  may not fully answer the question.
- IRRELEVANT: The document does not
  contain useful information for
  answering the question.

Classification:";

pub const CRAG_REWRITE: &str = "The following question was used to search a
financial document corpus, but the retrieved
results were not sufficiently relevant.

Original question: {query}

Please rewrite this question to be more
specific and likely to retrieve the correct
financial document. Focus on including
specific financial terms, company names,
time periods, or metric names that would
appear in the target document.

Rewritten question:";

pub const CONTEXTUAL_CHUNK: &str = "Here is the full document:
<document>
{document}
</document>

Here is a chunk from that document:
<chunk>
{chunk}
</chunk>

Please give a short, succinct context
(2-3 sentences) to situate this chunk
within the overall document for the
purposes of improving search retrieval
of the chunk. Answer only with the
context, nothing else.";

pub const CONTEXTUAL_WHOLE: &str = "Here is a document:
<document>
{document}
</document>

Please provide a concise summary context
(2-3 sentences) that captures the key
topics and entities in this document, for
the purpose of improving search retrieval.
Answer only with the context, nothing else.";

/// Substitutes `{name}` placeholders in one pass; substituted text is not
/// rescanned, so values containing braces are inserted verbatim.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + vars.iter().map(|(_, v)| v.len()).sum::<usize>());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                let name = &after[..close];
                match vars.iter().find(|(n, _)| *n == name) {
                    Some((_, v)) => out.push_str(v),
                    None => {
                        out.push('{');
                        out.push_str(name);
                        out.push('}');
                    }
                }
                rest = &after[close + 1..];
            }
            None => {
                out.push_str(&rest[open..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptLibrary {
    pub generation: String,
    pub hyde: String,
    pub hyde_fallback: String,
    pub multi_query: String,
    pub crag_eval: String,
    pub crag_rewrite: String,
    pub contextual_chunk: String,
    pub contextual_whole: String,
}

impl Default for PromptLibrary {
    fn default() -> Self {
        Self {
            generation: GENERATION.into(),
            hyde: HYDE.into(),
            hyde_fallback: HYDE_FALLBACK.into(),
            multi_query: MULTI_QUERY.into(),
            crag_eval: CRAG_EVAL.into(),
            crag_rewrite: CRAG_REWRITE.into(),
            contextual_chunk: CONTEXTUAL_CHUNK.into(),
            contextual_whole: CONTEXTUAL_WHOLE.into(),
        }
    }
}

const REQUIRED: [(&str, &[&str]); 8] = [
    ("generation", &["context", "question"]),
    ("hyde", &["query"]),
    ("hyde_fallback", &["query"]),
    ("multi_query", &["n", "query"]),
    ("crag_eval", &["query", "document"]),
    ("crag_rewrite", &["query"]),
    ("contextual_chunk", &["document", "chunk"]),
    ("contextual_whole", &["document"]),
];

impl PromptLibrary {
    fn slot_mut(&mut self, name: &str) -> Option<&mut String> {
        Some(match name {
            "generation" => &mut self.generation,
            "hyde" => &mut self.hyde,
            "hyde_fallback" => &mut self.hyde_fallback,
            "multi_query" => &mut self.multi_query,
            "crag_eval" => &mut self.crag_eval,
            "crag_rewrite" => &mut self.crag_rewrite,
            "contextual_chunk" => &mut self.contextual_chunk,
            "contextual_whole" => &mut self.contextual_whole,
            _ => return None,
        })
    }

    /// Checks every template still references the placeholders its caller fills.
    pub fn validate(&self) -> Result<()> {
        let mut copy = self.clone();
        for (name, needed) in REQUIRED {
            let t = copy.slot_mut(name).expect("known template");
            for p in needed {
                if !t.contains(&format!("{{{p}}}")) {
                    return Err(Error::InvalidParam(format!("template `{name}` lacks placeholder {{{p}}}")));
                }
            }
        }
        Ok(())
    }

    /// Starts from the defaults and replaces any template that has a
    /// `<name>.txt` file in `dir`. A single trailing newline is dropped.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let mut lib = Self::default();
        let mut overrides = HashMap::new();
        for (name, _) in REQUIRED {
            let path = dir.as_ref().join(format!("{name}.txt"));
            if path.exists() {
                let mut text = fs::read_to_string(&path)?;
                if text.ends_with('\n') {
                    text.pop();
                }
                overrides.insert(name, text);
            }
        }
        for (name, text) in overrides {
            *lib.slot_mut(name).expect("known template") = text;
        }
        lib.validate()?;
        Ok(lib)
    }
}
