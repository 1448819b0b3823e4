mod engine;
mod property;
mod query;
mod render;
mod templates;

pub use engine::{
    compare_actions, exp_gen, focus_labels, handle_queries, improvement_pct, ExplainEnv, ExplainError, Explanation,
    FormulaOutcome, NodeViolation, QueryContext, ScoreComparison, SummaryView, Verdict,
};
pub use property::{query_to_formulas, timing_entry, PropertyBundle, PropertyEntry, PropertyKind};
pub use query::{instantiate_query, Direction, Query, QueryBindings, QueryError, QuerySubmission, QueryType};
pub use render::{render_explanation, RenderRequest, Rendered};
pub use templates::{format_clock, slot_names, TemplateError, Templates};
