#pragma once

#include <optional>
#include <vector>

#include "blm/taxonomy.hpp"
#include "blm/vocab.hpp"

namespace blm {

// Span of a tagged region, as token indices of the opening and closing tag
// (both inclusive). Interior tokens are (open, close) exclusive.
struct TokenSpan {
    int open = -1;
    int close = -1;
};

struct StructuredOutput {
    std::vector<int> raw_tokens;
    std::optional<TokenSpan> think_span;
    std::optional<TokenSpan> answer_span;
    std::optional<RiskLabel> parsed_answer;

    std::vector<int> think_interior() const;
    std::vector<int> answer_interior() const;
};

// Total parse: never throws, malformation shows up as absent spans/answer.
// First <think>...</think> pair, then the first <answer>...</answer> pair
// after it (anywhere, if no think pair exists). Answer fields are read as
// `scene= <id> type= <id> severity= <id>` marker/value pairs and validated
// against the schema; anything invalid leaves parsed_answer absent.
StructuredOutput parse_output(const std::vector<int>& tokens, const Vocabulary& vocab,
                              const PolicySchema& schema);

// Soft token-level rule prior: mass (1-smoothing) uniform over the label's
// keyword tokens, mass smoothing uniform over the rest of the vocabulary.
// Throws std::domain_error for no-risk labels.
std::vector<double> keyword_prior(const RiskLabel& label, const PolicySchema& schema,
                                  const Vocabulary& vocab, double smoothing);

}  // namespace blm
