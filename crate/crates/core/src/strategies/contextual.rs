use rayon::prelude::*;

use super::prompts::render;
use super::{PromptLibrary, StrategyConfig};
use crate::corpus::{whitespace_token_count, Corpus, Document};
use crate::error::{Error, Result};
use crate::providers::CompletionProvider;

/// Placed between the generated summary and the original text.
pub const CONTEXT_SEPARATOR: &str = "\n\n";

/// Prepends an LLM summary to every document (whole-document mode).
///
/// All documents succeed or the call fails; a corpus that was already
/// contextualized is rejected. Indexes must be rebuilt from the result.
pub fn contextualize_corpus(
    corpus: &Corpus,
    completion: &dyn CompletionProvider,
    cfg: &StrategyConfig,
    prompts: &PromptLibrary,
) -> Result<Corpus> {
    if corpus.is_contextualized() {
        return Err(Error::AlreadyContextualized);
    }
    let docs: Vec<Document> = corpus
        .documents()
        .par_iter()
        .map(|doc| {
            let prompt = render(&prompts.contextual_whole, &[("document", &doc.text)]);
            let summary = completion.complete(&prompt, cfg.contextual_temperature, cfg.contextual_max_tokens)?;
            let summary = summary.trim();
            let text =
                if summary.is_empty() { doc.text.clone() } else { format!("{summary}{CONTEXT_SEPARATOR}{}", doc.text) };
            Ok(Document { token_count: whitespace_token_count(&text), text, contextualized: true, ..doc.clone() })
        })
        .collect::<Result<_>>()?;
    Corpus::from_documents(docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Subset;
    use crate::lexical::{LexicalIndex, TokenizerConfig};
    use crate::providers::ScriptedCompletion;

    fn corpus() -> Corpus {
        Corpus::from_documents(vec![
            Document::new("a", "Revenue table 2019", Subset::FinQA),
            Document::new("b", "Pension note", Subset::FinQA),
            Document::new("c", "Lease schedule", Subset::TATDQA),
        ])
        .unwrap()
    }

    #[test]
    fn prefix_and_separator() {
        let llm = ScriptedCompletion::new("llm").rule("<document>", "ACME 2019 annual report.");
        let out = contextualize_corpus(&corpus(), &llm, &StrategyConfig::default(), &PromptLibrary::default()).unwrap();
        let first = &out.documents()[0];
        assert_eq!(first.text, "ACME 2019 annual report.\n\nRevenue table 2019");
        assert!(first.contextualized);
        assert_eq!(first.token_count, 7);
        assert_eq!(out.len(), 3);
        let ids: Vec<_> = out.documents().iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }

    #[test]
    fn second_application_is_rejected() {
        let llm = ScriptedCompletion::new("llm").rule("<document>", "Summary.");
        let once =
            contextualize_corpus(&corpus(), &llm, &StrategyConfig::default(), &PromptLibrary::default()).unwrap();
        let err = contextualize_corpus(&once, &llm, &StrategyConfig::default(), &PromptLibrary::default()).unwrap_err();
        assert!(matches!(err, Error::AlreadyContextualized));
    }

    #[test]
    fn any_failure_aborts_everything() {
        let llm = ScriptedCompletion::new("llm").rule("Revenue|Pension", "ok");
        assert!(contextualize_corpus(&corpus(), &llm, &StrategyConfig::default(), &PromptLibrary::default()).is_err());
    }

    #[test]
    fn summary_terms_enter_document_frequency() {
        // "zeta" only ever comes from summaries, for documents a and c
        let llm = ScriptedCompletion::new("llm")
            .rule("Pension", "Plain summary.")
            .rule("<document>", "Zeta holdings filing.");
        let out = contextualize_corpus(&corpus(), &llm, &StrategyConfig::default(), &PromptLibrary::default()).unwrap();
        let summaries_with_term = out.documents().iter().filter(|d| d.text.starts_with("Zeta")).count();
        let idx = LexicalIndex::build(&out, TokenizerConfig::default()).unwrap();
        assert_eq!(idx.df("zeta"), summaries_with_term);
        assert_eq!(idx.df("zeta"), 2);
    }
}
