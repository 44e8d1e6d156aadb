#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "blm/taxonomy.hpp"

namespace blm {

// Shared token table: reserved tags, field markers, taxonomy identifiers,
// keyword tokens, frame citations, filler tokens. Built deterministically
// from the schema so token ids are stable across processes.
struct Vocabulary {
    std::vector<std::string> tokens;
    std::unordered_map<std::string, int> index;

    int bos = -1;
    int think_open = -1, think_close = -1;
    int answer_open = -1, answer_close = -1;
    int sep = -1, mismatch_marker = -1;
    int scene_marker = -1, type_marker = -1, severity_marker = -1;
    int num_frames = 0;

    int size() const { return static_cast<int>(tokens.size()); }
    int id(const std::string& tok) const;        // -1 if absent
    int require(const std::string& tok) const;   // throws DataError if absent
    int frame_token(int frame_index) const;
    const std::string& text(int id) const { return tokens.at(static_cast<std::size_t>(id)); }

    std::string detokenize(std::span<const int> ids) const;
    std::uint64_t hash() const;  // FNV-1a over token strings
};

Vocabulary build_vocabulary(const PolicySchema& schema, int num_frames, int filler_count);

}  // namespace blm
