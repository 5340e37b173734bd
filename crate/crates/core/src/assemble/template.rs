use super::AssembleError;

/// Prompt wording and layout. Layouts are versioned by `id` so rendered
/// requests stay reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: &'static str,
    pub instruction: &'static str,
    pub context_header: &'static str,
    pub additional_header: &'static str,
    pub question_label: &'static str,
    pub answer_cue: &'static str,
}

pub const DEFAULT_TEMPLATE_ID: &str = "sara-inference-v1";

impl PromptTemplate {
    pub fn inference_v1() -> Self {
        Self {
            id: DEFAULT_TEMPLATE_ID,
            instruction: "Using the context and additional context, answer the following question:",
            context_header: "Context:",
            additional_header: "Additional Context:",
            question_label: "Question:",
            answer_cue: "Your Answer:",
        }
    }

    pub fn by_id(id: &str) -> Result<Self, AssembleError> {
        match id {
            DEFAULT_TEMPLATE_ID => Ok(Self::inference_v1()),
            other => Err(AssembleError::UnknownTemplate(other.to_string())),
        }
    }

    /// Lays out the prompt as text pieces and vector slots.
    ///
    /// ```text
    /// {instruction} {question}
    /// Context:
    /// 1. {passage}
    /// Additional Context:
    /// 1. <slot>;
    /// Question: {question}
    /// Your Answer:
    /// ```
    ///
    /// The context block is omitted without natural passages and the
    /// additional block without compressed contexts. Adjacent text pieces are
    /// merged, so the result alternates text and slots.
    pub(crate) fn layout(&self, question: &str, natural: &[&str], compressed: usize) -> Vec<Piece> {
        let mut out = Vec::new();
        let mut text = format!("{} {}\n", self.instruction, question);
        if !natural.is_empty() {
            text.push_str(self.context_header);
            text.push('\n');
            for (i, passage) in natural.iter().enumerate() {
                text.push_str(&format!("{}. {}\n", i + 1, passage));
            }
        }
        if compressed > 0 {
            text.push_str(self.additional_header);
            text.push('\n');
            for slot in 0..compressed {
                text.push_str(&format!("{}. ", slot + 1));
                out.push(Piece::Text(std::mem::take(&mut text)));
                out.push(Piece::Slot(slot));
                text.push_str(";\n");
            }
        }
        text.push_str(&format!("{} {}\n{}", self.question_label, question, self.answer_cue));
        out.push(Piece::Text(text));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Piece {
    Text(String),
    Slot(usize),
}
