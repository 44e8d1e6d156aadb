#include "blm/io.hpp"

#include <fstream>
#include <sstream>

#include "blm/errors.hpp"

namespace blm {

namespace {

nlohmann::json label_to_json(const RiskLabel& label) {
    return {{"severity", severity_name(label.severity)},
            {"scenario", label.scenario},
            {"type", label.violation_type}};
}

RiskLabel label_from_json(const nlohmann::json& doc) {
    RiskLabel label;
    auto sev = severity_from_name(doc.at("severity").get<std::string>());
    if (!sev) throw SchemaError("unknown severity in record: " + doc.at("severity").get<std::string>());
    label.severity = *sev;
    label.scenario = doc.at("scenario").get<std::string>();
    label.violation_type = doc.at("type").get<std::string>();
    return label;
}

nlohmann::json generator_to_json(const GeneratorConfig& g) {
    return {{"per_scenario_count", g.per_scenario_count},
            {"no_risk_count", g.no_risk_count},
            {"n_frames", g.n_frames},
            {"dim", g.dim},
            {"patches", g.patches},
            {"signal_strength", g.signal_strength},
            {"mismatch_rate", g.mismatch_rate},
            {"noise_scale", g.noise_scale},
            {"asr_len", g.asr_len}};
}

GeneratorConfig generator_from_json(const nlohmann::json& doc) {
    GeneratorConfig g;
    g.per_scenario_count = doc.at("per_scenario_count").get<int>();
    g.no_risk_count = doc.at("no_risk_count").get<int>();
    g.n_frames = doc.at("n_frames").get<int>();
    g.dim = doc.at("dim").get<int>();
    g.patches = doc.at("patches").get<int>();
    g.signal_strength = doc.at("signal_strength").get<double>();
    g.mismatch_rate = doc.at("mismatch_rate").get<double>();
    g.noise_scale = doc.at("noise_scale").get<double>();
    g.asr_len = doc.at("asr_len").get<int>();
    return g;
}

nlohmann::json bank_to_json(const RiskPromptBank& bank) {
    nlohmann::json prompts = nlohmann::json::array();
    for (const auto& p : bank.prompts) prompts.push_back({{"scenario", p.scenario}, {"vec", p.vec}});
    return {{"dim", bank.dim}, {"prompts", prompts}, {"benign", bank.benign}};
}

RiskPromptBank bank_from_json(const nlohmann::json& doc) {
    RiskPromptBank bank;
    bank.dim = doc.at("dim").get<int>();
    for (const auto& p : doc.at("prompts")) {
        RiskPrompt prompt;
        prompt.scenario = p.at("scenario").get<std::string>();
        prompt.vec = p.at("vec").get<std::vector<double>>();
        if (static_cast<int>(prompt.vec.size()) != bank.dim)
            throw DataError("prompt vector length disagrees with bank dim");
        bank.prompts.push_back(std::move(prompt));
    }
    bank.benign = doc.at("benign").get<std::vector<double>>();
    if (static_cast<int>(bank.benign.size()) != bank.dim)
        throw DataError("benign direction length disagrees with bank dim");
    return bank;
}

nlohmann::json sample_to_json(const VideoSample& s) {
    return {{"id", s.id},
            {"n_frames", s.frames.n_frames},
            {"dim", s.frames.dim},
            {"patches", s.frames.patches},
            {"frames", s.frames.frames},
            {"patch_grids", s.frames.patch_grids},
            {"asr_tokens", s.asr_tokens},
            {"label", label_to_json(s.label)},
            {"provenance", provenance_name(s.provenance)},
            {"planted_frames", s.planted_frames},
            {"mismatch", s.mismatch},
            {"origin", s.origin}};
}

VideoSample sample_from_json(const nlohmann::json& doc) {
    VideoSample s;
    s.id = doc.at("id").get<std::string>();
    s.frames.n_frames = doc.at("n_frames").get<int>();
    s.frames.dim = doc.at("dim").get<int>();
    s.frames.patches = doc.at("patches").get<int>();
    s.frames.frames = doc.at("frames").get<std::vector<double>>();
    s.frames.patch_grids = doc.at("patch_grids").get<std::vector<double>>();
    s.frames.validate();
    s.asr_tokens = doc.at("asr_tokens").get<std::vector<int>>();
    s.label = label_from_json(doc.at("label"));
    s.provenance = provenance_from_name(doc.at("provenance").get<std::string>());
    s.planted_frames = doc.at("planted_frames").get<std::vector<int>>();
    s.mismatch = doc.at("mismatch").get<bool>();
    s.origin = doc.at("origin").get<std::string>();
    return s;
}

nlohmann::json parse_line(const std::string& line, int lineno) {
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("line " + std::to_string(lineno) + " is not valid JSON: " + e.what());
    }
}

}  // namespace

std::string dataset_to_string(const DatasetFile& file) {
    std::ostringstream out;
    nlohmann::json header = {{"format", "blm-dataset"},
                             {"version", kFileFormatVersion},
                             {"schema_version", file.schema_version},
                             {"vocab_hash", file.vocab_hash},
                             {"generator", generator_to_json(file.generator)},
                             {"bank", bank_to_json(file.bank)},
                             {"count", file.samples.size()}};
    out << header.dump() << '\n';
    for (const auto& s : file.samples) out << sample_to_json(s).dump() << '\n';
    return out.str();
}

DatasetFile dataset_from_string(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("dataset file is empty");
    nlohmann::json header = parse_line(line, 1);
    try {
        if (header.at("format").get<std::string>() != "blm-dataset")
            throw DataError("not a dataset file (format tag mismatch)");
        if (header.at("version").get<std::string>() != kFileFormatVersion)
            throw DataError("unsupported dataset file version");
        DatasetFile file;
        file.schema_version = header.at("schema_version").get<std::string>();
        file.vocab_hash = header.at("vocab_hash").get<std::uint64_t>();
        file.generator = generator_from_json(header.at("generator"));
        file.bank = bank_from_json(header.at("bank"));
        std::size_t declared = header.at("count").get<std::size_t>();
        int lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            file.samples.push_back(sample_from_json(parse_line(line, lineno)));
        }
        if (file.samples.size() != declared)
            throw DataError("dataset record count disagrees with header");
        return file;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed dataset file: ") + e.what());
    }
}

void save_dataset(const DatasetFile& file, const std::string& path) {
    write_file(path, dataset_to_string(file));
}

DatasetFile load_dataset(const std::string& path) { return dataset_from_string(read_file(path)); }

std::string clues_to_string(const std::vector<ClueFileRecord>& records, std::uint64_t vocab_hash) {
    std::ostringstream out;
    nlohmann::json header = {{"format", "blm-clues"},
                             {"version", kFileFormatVersion},
                             {"vocab_hash", vocab_hash},
                             {"count", records.size()}};
    out << header.dump() << '\n';
    for (const auto& r : records) {
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& e : r.clue.entries)
            entries.push_back({{"frame", e.frame_index},
                               {"patch", e.patch_index},
                               {"frame_score", e.frame_score},
                               {"patch_score", e.patch_score}});
        out << nlohmann::json{{"id", r.id}, {"entries", entries}}.dump() << '\n';
    }
    return out.str();
}

std::vector<ClueFileRecord> clues_from_string(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("clue file is empty");
    nlohmann::json header = parse_line(line, 1);
    try {
        if (header.at("format").get<std::string>() != "blm-clues")
            throw DataError("not a clue file (format tag mismatch)");
        if (header.at("version").get<std::string>() != kFileFormatVersion)
            throw DataError("unsupported clue file version");
        std::vector<ClueFileRecord> records;
        int lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            nlohmann::json doc = parse_line(line, lineno);
            ClueFileRecord record;
            record.id = doc.at("id").get<std::string>();
            for (const auto& e : doc.at("entries")) {
                ClueEntry entry;
                entry.frame_index = e.at("frame").get<int>();
                entry.patch_index = e.at("patch").get<int>();
                entry.frame_score = e.at("frame_score").get<double>();
                entry.patch_score = e.at("patch_score").get<double>();
                record.clue.entries.push_back(entry);
            }
            records.push_back(std::move(record));
        }
        if (records.size() != header.at("count").get<std::size_t>())
            throw DataError("clue record count disagrees with header");
        return records;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed clue file: ") + e.what());
    }
}

void save_clues(const std::vector<ClueFileRecord>& records, std::uint64_t vocab_hash,
                const std::string& path) {
    write_file(path, clues_to_string(records, vocab_hash));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open file for writing: " + path);
    out << content;
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace blm
