use crate::codemetrics::effective_line_count;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::{fs, io};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("{kind:?} prompt needs {expected} parent(s), got {got}")]
    ParentCount {
        kind: PromptKind,
        expected: usize,
        got: usize,
    },
    #[error("reading prompt asset {path}: {source}")]
    Asset { path: String, source: io::Error },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Init,
    Mutation,
    Crossover,
}

/// How parent scores are shown in crossover prompts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreFeedback {
    /// Per-dataset scores, e.g. `[0.912, 0.455]`.
    #[default]
    Vector,
    /// Mean score only.
    Scalar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptConfig {
    pub length_target: usize,
    pub domain_knowledge: bool,
    pub score_feedback: ScoreFeedback,
    pub goal: String,
    pub goals: String,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            length_target: 30,
            domain_knowledge: true,
            score_feedback: ScoreFeedback::Vector,
            goal: "selection operator".into(),
            goals: "selection operators".into(),
        }
    }
}

/// Template texts. Embedded copies are used unless a directory overrides them.
#[derive(Clone, Debug, PartialEq)]
pub struct PromptAssets {
    pub system: String,
    pub init_mutation: String,
    pub inspiration: String,
    pub crossover: String,
    pub properties: String,
    pub template: String,
    pub template_no_knowledge: String,
}

const ASSET_FILES: [&str; 7] = [
    "system.txt",
    "init_mutation.txt",
    "inspiration.txt",
    "crossover.txt",
    "properties.txt",
    "template.py",
    "template_no_knowledge.py",
];

impl Default for PromptAssets {
    fn default() -> Self {
        Self {
            system: include_str!("../../assets/prompts/system.txt").into(),
            init_mutation: include_str!("../../assets/prompts/init_mutation.txt").into(),
            inspiration: include_str!("../../assets/prompts/inspiration.txt").into(),
            crossover: include_str!("../../assets/prompts/crossover.txt").into(),
            properties: include_str!("../../assets/prompts/properties.txt").into(),
            template: include_str!("../../assets/prompts/template.py").into(),
            template_no_knowledge: include_str!("../../assets/prompts/template_no_knowledge.py")
                .into(),
        }
    }
}

impl PromptAssets {
    /// Embedded assets with any file present in `dir` taking precedence.
    pub fn with_overrides(dir: &Path) -> Result<Self, PromptError> {
        let mut assets = Self::default();
        for name in ASSET_FILES {
            let path = dir.join(name);
            if !path.exists() {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(|source| PromptError::Asset {
                path: path.display().to_string(),
                source,
            })?;
            let slot = match name {
                "system.txt" => &mut assets.system,
                "init_mutation.txt" => &mut assets.init_mutation,
                "inspiration.txt" => &mut assets.inspiration,
                "crossover.txt" => &mut assets.crossover,
                "properties.txt" => &mut assets.properties,
                "template.py" => &mut assets.template,
                _ => &mut assets.template_no_knowledge,
            };
            *slot = text;
        }
        Ok(assets)
    }
}

/// A parent shown to the model.
#[derive(Clone, Copy, Debug)]
pub struct PromptParent<'a> {
    pub id: u64,
    pub source: &'a str,
    pub scores: &'a [f64],
}

impl PromptParent<'_> {
    fn fitness(&self) -> f64 {
        if self.scores.is_empty() {
            0.0
        } else {
            self.scores.iter().sum::<f64>() / self.scores.len() as f64
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PromptMetadata {
    pub candidate_ids: Vec<u64>,
    pub scores: Vec<Vec<f64>>,
    pub line_counts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub kind: PromptKind,
    pub system: String,
    pub user: String,
    pub metadata: PromptMetadata,
}

pub fn format_score(value: f64) -> String {
    format!("{value:.3}")
}

fn render_scores(parent: &PromptParent<'_>, mode: ScoreFeedback) -> String {
    match mode {
        ScoreFeedback::Scalar => format_score(parent.fitness()),
        ScoreFeedback::Vector => {
            let parts: Vec<String> = parent.scores.iter().map(|s| format_score(*s)).collect();
            format!("[{}]", parts.join(", "))
        }
    }
}

/// Single-pass `{key}` substitution; inserted values are never rescanned.
fn fill(template: &str, pairs: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open + 1..];
        let hit = pairs.iter().find(|(key, _)| {
            tail.starts_with(key) && tail[key.len()..].starts_with('}')
        });
        match hit {
            Some((key, value)) => {
                out.push_str(value);
                rest = &tail[key.len() + 1..];
            }
            None => {
                out.push('{');
                rest = tail;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Assembles the system and user prompts. Init takes no parents, mutation
/// takes one (shown as a reference), crossover takes two.
pub fn build_prompt(
    kind: PromptKind,
    parents: &[PromptParent<'_>],
    config: &PromptConfig,
    assets: &PromptAssets,
) -> Result<PromptBundle, PromptError> {
    let expected = match kind {
        PromptKind::Init => 0,
        PromptKind::Mutation => 1,
        PromptKind::Crossover => 2,
    };
    if parents.len() != expected {
        return Err(PromptError::ParentCount {
            kind,
            expected,
            got: parents.len(),
        });
    }
    let system = fill(
        assets.system.trim_end(),
        &[("max_code_lines", &config.length_target.to_string())],
    );
    let (properties, template) = if config.domain_knowledge {
        (assets.properties.trim_end(), assets.template.trim_end())
    } else {
        ("", assets.template_no_knowledge.trim_end())
    };
    let common = [
        ("goal", config.goal.as_str()),
        ("goals", config.goals.as_str()),
        ("properties", properties),
        ("template", template),
    ];
    let user = match kind {
        PromptKind::Init | PromptKind::Mutation => {
            let baseline = match parents.first() {
                Some(p) => fill(
                    assets.inspiration.trim_end(),
                    &[("code", p.source.trim_end()), ("goal", config.goal.as_str())],
                ),
                None => String::new(),
            };
            let mut pairs = common.to_vec();
            pairs.insert(0, ("baseline", baseline.as_str()));
            fill(&assets.init_mutation, &pairs)
        }
        PromptKind::Crossover => {
            let (a, b) = (&parents[0], &parents[1]);
            let score_a = render_scores(a, config.score_feedback);
            let score_b = render_scores(b, config.score_feedback);
            let lines_a = effective_line_count(a.source).to_string();
            let lines_b = effective_line_count(b.source).to_string();
            let mut pairs = vec![
                ("code_a", a.source.trim_end()),
                ("code_b", b.source.trim_end()),
                ("score_a", score_a.as_str()),
                ("score_b", score_b.as_str()),
                ("lines_a", lines_a.as_str()),
                ("lines_b", lines_b.as_str()),
            ];
            pairs.extend(common);
            fill(&assets.crossover, &pairs)
        }
    };
    Ok(PromptBundle {
        kind,
        system,
        user,
        metadata: PromptMetadata {
            candidate_ids: parents.iter().map(|p| p.id).collect(),
            scores: parents.iter().map(|p| p.scores.to_vec()).collect(),
            line_counts: parents.iter().map(|p| effective_line_count(p.source)).collect(),
        },
    })
}

/// First fenced code block; failing that, the whole reply if it looks like a
/// bare function definition.
pub fn extract_code(response: &str) -> Option<String> {
    let mut lines = response.lines();
    while let Some(line) = lines.next() {
        if line.trim_start().starts_with("```") {
            let body: Vec<&str> = lines
                .by_ref()
                .take_while(|l| !l.trim_start().starts_with("```"))
                .collect();
            let code = body.join("\n");
            return (!code.trim().is_empty()).then(|| format!("{}\n", code.trim_end()));
        }
    }
    looks_like_code(response).then(|| format!("{}\n", response.trim()))
}

fn looks_like_code(text: &str) -> bool {
    let has_def = text.lines().any(|l| {
        let l = l.trim_end();
        l.starts_with("def ") && l.contains('(') && l.ends_with(':')
    });
    has_def
        && text.lines().filter(|l| !l.trim().is_empty()).all(|l| {
            l.starts_with(char::is_whitespace)
                || ["def ", "import ", "from ", "#", "@", ")", "]"]
                    .iter()
                    .any(|p| l.starts_with(p))
                || l.contains(" = ")
        })
}
