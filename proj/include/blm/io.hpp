#pragma once

#include <string>
#include <vector>

#include "blm/config.hpp"
#include "blm/keyframe.hpp"
#include "blm/synth.hpp"
#include "blm/vocab.hpp"

namespace blm {

// Line-delimited record files: a header object on line 1 (version, vocab
// hash, dims, prompt bank), one record per following line. Numbers are
// serialized with round-trip precision so fixed-seed runs are byte-stable.

inline constexpr const char* kFileFormatVersion = "1";

struct DatasetFile {
    std::string schema_version;
    std::uint64_t vocab_hash = 0;
    GeneratorConfig generator;
    RiskPromptBank bank;
    std::vector<VideoSample> samples;
};

std::string dataset_to_string(const DatasetFile& file);
DatasetFile dataset_from_string(const std::string& text);
void save_dataset(const DatasetFile& file, const std::string& path);
DatasetFile load_dataset(const std::string& path);

struct ClueFileRecord {
    std::string id;
    ClueSet clue;
};

std::string clues_to_string(const std::vector<ClueFileRecord>& records, std::uint64_t vocab_hash);
std::vector<ClueFileRecord> clues_from_string(const std::string& text);
void save_clues(const std::vector<ClueFileRecord>& records, std::uint64_t vocab_hash,
                const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace blm
