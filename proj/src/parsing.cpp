#include "blm/parsing.hpp"

#include <stdexcept>

#include "blm/errors.hpp"

namespace blm {

std::vector<int> StructuredOutput::think_interior() const {
    if (!think_span) return {};
    return std::vector<int>(raw_tokens.begin() + think_span->open + 1,
                            raw_tokens.begin() + think_span->close);
}

std::vector<int> StructuredOutput::answer_interior() const {
    if (!answer_span) return {};
    return std::vector<int>(raw_tokens.begin() + answer_span->open + 1,
                            raw_tokens.begin() + answer_span->close);
}

namespace {

int find_token(const std::vector<int>& tokens, int tok, int from) {
    for (int i = from; i < static_cast<int>(tokens.size()); ++i)
        if (tokens[i] == tok) return i;
    return -1;
}

std::optional<TokenSpan> find_pair(const std::vector<int>& tokens, int open_tok, int close_tok,
                                   int from) {
    int open = find_token(tokens, open_tok, from);
    if (open < 0) return std::nullopt;
    int close = find_token(tokens, close_tok, open + 1);
    if (close < 0) return std::nullopt;
    return TokenSpan{open, close};
}

// marker/value scan over the answer interior; last occurrence of a marker
// wins is avoided by taking the first complete triple left to right.
std::optional<RiskLabel> parse_answer_fields(const std::vector<int>& interior,
                                             const Vocabulary& vocab, const PolicySchema& schema) {
    std::optional<std::string> scene, type, sev;
    for (std::size_t i = 0; i + 1 < interior.size(); ++i) {
        int marker = interior[i];
        const std::string& value = vocab.text(interior[i + 1]);
        if (marker == vocab.scene_marker && !scene) scene = value;
        else if (marker == vocab.type_marker && !type) type = value;
        else if (marker == vocab.severity_marker && !sev) sev = value;
    }
    if (!scene || !type || !sev) return std::nullopt;
    auto severity = severity_from_name(*sev);
    if (!severity) return std::nullopt;
    RiskLabel label{*severity, *scene, *type};
    if (!schema.valid_label(label)) return std::nullopt;
    return label;
}

}  // namespace

StructuredOutput parse_output(const std::vector<int>& tokens, const Vocabulary& vocab,
                              const PolicySchema& schema) {
    StructuredOutput out;
    out.raw_tokens = tokens;
    out.think_span = find_pair(tokens, vocab.think_open, vocab.think_close, 0);
    int answer_from = out.think_span ? out.think_span->close + 1 : 0;
    out.answer_span = find_pair(tokens, vocab.answer_open, vocab.answer_close, answer_from);
    if (out.answer_span)
        out.parsed_answer = parse_answer_fields(out.answer_interior(), vocab, schema);
    return out;
}

std::vector<double> keyword_prior(const RiskLabel& label, const PolicySchema& schema,
                                  const Vocabulary& vocab, double smoothing) {
    if (label.is_no_risk())
        throw std::domain_error("keyword_prior is undefined for no-risk labels");
    if (smoothing < 0.0 || smoothing > 0.5)
        throw std::domain_error("smoothing must lie in [0, 0.5]");

    std::vector<std::string> keywords = schema.label_keywords(label);
    std::vector<char> is_keyword(static_cast<std::size_t>(vocab.size()), 0);
    int nk = 0;
    for (const auto& kw : keywords) {
        int id = vocab.require(kw);
        if (!is_keyword[static_cast<std::size_t>(id)]) {
            is_keyword[static_cast<std::size_t>(id)] = 1;
            ++nk;
        }
    }
    int rest = vocab.size() - nk;
    std::vector<double> prior(static_cast<std::size_t>(vocab.size()), 0.0);
    double kw_mass = (rest == 0) ? 1.0 : 1.0 - smoothing;
    for (int i = 0; i < vocab.size(); ++i)
        prior[static_cast<std::size_t>(i)] =
            is_keyword[static_cast<std::size_t>(i)] ? kw_mass / nk
            : (rest > 0 ? smoothing / rest : 0.0);
    return prior;
}

}  // namespace blm
