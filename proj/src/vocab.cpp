#include "blm/vocab.hpp"

#include <sstream>

#include "blm/errors.hpp"

namespace blm {

int Vocabulary::id(const std::string& tok) const {
    auto it = index.find(tok);
    return it == index.end() ? -1 : it->second;
}

int Vocabulary::require(const std::string& tok) const {
    int i = id(tok);
    if (i < 0) throw DataError("token not in vocabulary: " + tok);
    return i;
}

int Vocabulary::frame_token(int frame_index) const {
    return require("frame_" + std::to_string(frame_index));
}

std::string Vocabulary::detokenize(std::span<const int> ids) const {
    std::ostringstream os;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) os << ' ';
        os << text(ids[i]);
    }
    return os.str();
}

std::uint64_t Vocabulary::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& tok : tokens) {
        for (char c : tok) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
        h ^= 0xff;
        h *= 1099511628211ULL;
    }
    return h;
}

Vocabulary build_vocabulary(const PolicySchema& schema, int num_frames, int filler_count) {
    Vocabulary v;
    v.num_frames = num_frames;
    auto add = [&v](const std::string& tok) {
        if (v.index.count(tok)) return v.index[tok];
        int id = static_cast<int>(v.tokens.size());
        v.tokens.push_back(tok);
        v.index[tok] = id;
        return id;
    };

    v.bos = add("<bos>");
    v.think_open = add("<think>");
    v.think_close = add("</think>");
    v.answer_open = add("<answer>");
    v.answer_close = add("</answer>");
    v.sep = add("<sep>");
    v.mismatch_marker = add("modality_inconsistent");
    v.scene_marker = add("scene=");
    v.type_marker = add("type=");
    v.severity_marker = add("severity=");
    for (const char* s : {"high", "medium", "low", "none"}) add(s);

    for (const auto& s : schema.scenarios) {
        add(s.id);
        for (const auto& kw : s.keywords) add(kw);
        for (const auto& t : s.types) {
            add(t.id);
            for (const auto& kw : t.keywords) add(kw);
        }
    }
    for (int i = 0; i < num_frames; ++i) add("frame_" + std::to_string(i));
    for (int i = 0; i < filler_count; ++i) {
        std::ostringstream os;
        os << "filler_" << (i < 10 ? "0" : "") << i;
        add(os.str());
    }
    return v;
}

}  // namespace blm
