//! Prompt assembly from the versioned template assets under `templates/`.
//!
//! Every prompt opens with the fixed task instruction; the formal,
//! conclusion and distill templates append their respective reasoning
//! directions. Few-shot demonstrations and the query input are substituted
//! in a fixed layout so identical specs always render identical bytes.

use serde::{Deserialize, Serialize};

const INSTRUCTION: &str = include_str!("../templates/instruction.txt");
const FORMAL: &str = include_str!("../templates/formal.txt");
const CONCLUSION: &str = include_str!("../templates/conclusion.txt");
const DISTILL: &str = include_str!("../templates/distill.txt");

/// Which prompt template to render. `Instruction` is the bare task
/// statement; the other three add style-specific reasoning directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateId {
    Instruction,
    Formal,
    Conclusion,
    Distill,
}

impl std::str::FromStr for TemplateId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "instruction" => Ok(TemplateId::Instruction),
            "formal" => Ok(TemplateId::Formal),
            "conclusion" => Ok(TemplateId::Conclusion),
            "distill" => Ok(TemplateId::Distill),
            other => Err(format!(
                "unknown template '{other}' (expected instruction, formal, conclusion or distill)"
            )),
        }
    }
}

/// One few-shot demonstration: an input pair and its serialized answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub sentence: String,
    #[serde(default = "default_image_placeholder")]
    pub image_placeholder: String,
    pub answer_text: String,
}

fn default_image_placeholder() -> String {
    "<image>".to_string()
}

/// Everything needed to render one prompt. Shots are usually empty or three.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptSpec {
    pub template_id: TemplateId,
    pub sentence: String,
    pub image_placeholder: String,
    pub shots: Vec<Shot>,
}

impl PromptSpec {
    pub fn new(template_id: TemplateId, sentence: impl Into<String>) -> Self {
        Self {
            template_id,
            sentence: sentence.into(),
            image_placeholder: default_image_placeholder(),
            shots: Vec::new(),
        }
    }

    pub fn with_shots(mut self, shots: Vec<Shot>) -> Self {
        self.shots = shots;
        self
    }
}

/// Render the prompt: instruction, optional style directions, optional
/// demonstrations, then the query input. Byte-stable for identical specs.
pub fn render_prompt(spec: &PromptSpec) -> String {
    let mut out = String::new();
    out.push_str(INSTRUCTION);
    let style_text = match spec.template_id {
        TemplateId::Instruction => None,
        TemplateId::Formal => Some(FORMAL),
        TemplateId::Conclusion => Some(CONCLUSION),
        TemplateId::Distill => Some(DISTILL),
    };
    if let Some(text) = style_text {
        out.push_str("\n\n");
        out.push_str(text);
    }
    for shot in &spec.shots {
        out.push_str("\n\nText: ");
        out.push_str(&shot.sentence);
        out.push_str("\nImage: ");
        out.push_str(&shot.image_placeholder);
        out.push_str("\nAnswer:\n");
        out.push_str(&shot.answer_text);
    }
    out.push_str("\n\nText: ");
    out.push_str(&spec.sentence);
    out.push_str("\nImage: ");
    out.push_str(&spec.image_placeholder);
    out
}
