#include "sip/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace sip {

namespace {

using nlohmann::json;

[[noreturn]] void line_error(const std::string& path, std::size_t line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

json meta_to_json(const MetaMap& meta) {
    json j = json::object();
    for (const auto& [key, value] : meta) {
        if (std::holds_alternative<double>(value)) {
            j[key] = std::get<double>(value);
        } else if (std::holds_alternative<bool>(value)) {
            j[key] = std::get<bool>(value);
        } else {
            j[key] = std::get<std::vector<std::string>>(value);
        }
    }
    return j;
}

MetaMap meta_from_json(const json& j, const std::string& path, std::size_t line) {
    MetaMap meta;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const json& v = it.value();
        if (v.is_boolean()) {
            meta[it.key()] = v.get<bool>();
        } else if (v.is_number()) {
            meta[it.key()] = v.get<double>();
        } else if (v.is_array()) {
            meta[it.key()] = v.get<std::vector<std::string>>();
        } else {
            line_error(path, line, "meta value for '" + it.key() + "' must be number, bool, or string array");
        }
    }
    return meta;
}

std::vector<std::string> apply_merge(std::vector<std::string> tokens) {
    std::vector<std::string> out;
    for (auto& t : tokens) {
        if (out.empty() || out.back() != t) out.push_back(std::move(t));
    }
    return out;
}

struct RawRecord {
    std::string id;
    std::vector<std::string> tokens;
    MetaMap meta;
};

// Metadata keys must keep one value kind across the whole file.
void check_meta_kinds(const MetaMap& meta, std::map<std::string, std::size_t>& kinds,
                      const std::string& path, std::size_t line_no) {
    for (const auto& [key, value] : meta) {
        const std::size_t kind = value.index();
        auto [it, inserted] = kinds.emplace(key, kind);
        if (!inserted && it->second != kind)
            line_error(path, line_no,
                       "metadata key '" + key + "' changes type across records");
    }
}

std::vector<RawRecord> read_jsonl(const std::string& path, std::istream& in) {
    std::vector<RawRecord> records;
    std::map<std::string, std::size_t> meta_kinds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            line_error(path, line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j.contains("actions"))
            line_error(path, line_no, "record must be an object with 'id' and 'actions'");
        RawRecord rec;
        rec.id = j["id"].get<std::string>();
        if (!j["actions"].is_array())
            line_error(path, line_no, "'actions' must be an array of strings");
        for (const auto& a : j["actions"]) {
            if (!a.is_string()) line_error(path, line_no, "'actions' must contain only strings");
            rec.tokens.push_back(a.get<std::string>());
        }
        if (rec.tokens.empty()) line_error(path, line_no, "empty action array");
        if (j.contains("meta")) {
            rec.meta = meta_from_json(j["meta"], path, line_no);
            check_meta_kinds(rec.meta, meta_kinds, path, line_no);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

// Minimal CSV with double-quote escaping; fields containing the column
// separator, quotes, or newlines must be quoted.
std::vector<std::string> split_csv_line(const std::string& line, const std::string& path,
                                        std::size_t line_no) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            if (!field.empty()) line_error(path, line_no, "unexpected quote inside unquoted field");
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    if (quoted) line_error(path, line_no, "unterminated quoted field");
    fields.push_back(std::move(field));
    return fields;
}

std::string csv_escape(const std::string& s) {
    // The reader is line-based, so embedded newlines cannot round-trip.
    if (s.find('\n') != std::string::npos)
        throw std::invalid_argument("CSV output: field contains a newline: '" + s + "'");
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string part;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(part);
            part.clear();
        } else {
            part += c;
        }
    }
    parts.push_back(part);
    return parts;
}

std::vector<RawRecord> read_csv(const std::string& path, std::istream& in, char seq_separator) {
    std::vector<RawRecord> records;
    std::map<std::string, std::size_t> meta_kinds;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) return records;
    ++line_no;
    auto header = split_csv_line(line, path, line_no);
    if (header.size() < 2 || header[0] != "id" || header[1] != "seq")
        line_error(path, line_no, "CSV header must start with 'id,seq'");

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(line, path, line_no);
        if (fields.size() != header.size())
            line_error(path, line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                          std::to_string(fields.size()));
        RawRecord rec;
        rec.id = fields[0];
        if (fields[1].empty()) line_error(path, line_no, "empty action array");
        rec.tokens = split_on(fields[1], seq_separator);
        for (std::size_t c = 2; c < header.size(); ++c) {
            const std::string& cell = fields[c];
            if (cell.empty()) continue;  // missing value
            if (cell == "true" || cell == "false") {
                rec.meta[header[c]] = (cell == "true");
            } else {
                try {
                    std::size_t pos = 0;
                    double v = std::stod(cell, &pos);
                    if (pos != cell.size()) throw std::invalid_argument(cell);
                    rec.meta[header[c]] = v;
                } catch (const std::exception&) {
                    line_error(path, line_no, "metadata column '" + header[c] +
                                                  "' must be numeric or boolean, got '" + cell + "'");
                }
            }
        }
        check_meta_kinds(rec.meta, meta_kinds, path, line_no);
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace

ProcessDataset read_process_file(const std::string& path, const ReadOptions& options,
                                 ReadReport* report) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open process file: " + path);

    std::vector<RawRecord> records = options.format == ProcessFileFormat::Jsonl
                                         ? read_jsonl(path, in)
                                         : read_csv(path, in, options.seq_separator);
    if (records.empty()) throw std::runtime_error(path + ": empty process file");

    const int effective_min = std::max(options.min_length, 2);
    ProcessDataset dataset;
    ReadReport local;
    for (auto& rec : records) {
        auto tokens = options.merge_consecutive ? apply_merge(std::move(rec.tokens))
                                                : std::move(rec.tokens);
        if (static_cast<int>(tokens.size()) < effective_min) {
            ++local.dropped_short;
            continue;
        }
        ResponseProcess proc;
        proc.id = std::move(rec.id);
        proc.meta = std::move(rec.meta);
        proc.actions.reserve(tokens.size());
        for (const auto& t : tokens) proc.actions.push_back(dataset.alphabet.intern(t));
        dataset.processes.push_back(std::move(proc));
        ++local.kept;
    }
    if (dataset.alphabet.size() < 2)
        throw std::runtime_error(path + ": alphabet has fewer than 2 distinct actions");
    if (report) *report = local;
    return dataset;
}

void write_process_file(const std::string& path, const ProcessDataset& dataset,
                        ProcessFileFormat format, char seq_separator) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write process file: " + path);

    if (format == ProcessFileFormat::Jsonl) {
        for (const auto& proc : dataset.processes) {
            json j;
            j["id"] = proc.id;
            j["actions"] = decode(proc.actions, dataset.alphabet);
            if (!proc.meta.empty()) j["meta"] = meta_to_json(proc.meta);
            out << j.dump() << '\n';
        }
        return;
    }

    // Collect the union of metadata keys for the header.
    std::vector<std::string> meta_keys;
    for (const auto& proc : dataset.processes) {
        for (const auto& [key, value] : proc.meta) {
            if (std::holds_alternative<std::vector<std::string>>(value)) continue;  // arrays are JSONL-only
            if (std::find(meta_keys.begin(), meta_keys.end(), key) == meta_keys.end())
                meta_keys.push_back(key);
        }
    }
    out << "id,seq";
    for (const auto& k : meta_keys) out << ',' << csv_escape(k);
    out << '\n';
    for (const auto& proc : dataset.processes) {
        auto tokens = decode(proc.actions, dataset.alphabet);
        std::string seq;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i) seq += seq_separator;
            seq += tokens[i];
        }
        out << csv_escape(proc.id) << ',' << csv_escape(seq);
        for (const auto& k : meta_keys) {
            out << ',';
            auto it = proc.meta.find(k);
            if (it == proc.meta.end()) continue;
            if (std::holds_alternative<double>(it->second)) {
                out << json(std::get<double>(it->second)).dump();
            } else if (std::holds_alternative<bool>(it->second)) {
                out << (std::get<bool>(it->second) ? "true" : "false");
            }
        }
        out << '\n';
    }
}

void write_split_manifest(const std::string& path, const DatasetSplit& split,
                          const ProcessDataset& dataset) {
    auto ids_of = [&](const std::vector<std::size_t>& idx) {
        std::vector<std::string> ids;
        ids.reserve(idx.size());
        for (auto i : idx) ids.push_back(dataset.processes.at(i).id);
        return ids;
    };
    json j;
    j["train"] = ids_of(split.train);
    j["valid"] = ids_of(split.valid);
    j["test"] = ids_of(split.test);
    j["seed"] = split.seed;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write split manifest: " + path);
    out << j.dump(2) << '\n';
}

DatasetSplit read_split_manifest(const std::string& path, const ProcessDataset& dataset) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open split manifest: " + path);
    json j;
    in >> j;

    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < dataset.processes.size(); ++i)
        by_id.emplace(dataset.processes[i].id, i);

    auto resolve = [&](const json& arr) {
        std::vector<std::size_t> idx;
        idx.reserve(arr.size());
        for (const auto& id : arr) {
            auto it = by_id.find(id.get<std::string>());
            if (it == by_id.end())
                throw std::runtime_error(path + ": id '" + id.get<std::string>() +
                                         "' not present in dataset");
            idx.push_back(it->second);
        }
        return idx;
    };
    DatasetSplit split;
    split.train = resolve(j.at("train"));
    split.valid = resolve(j.at("valid"));
    split.test = resolve(j.at("test"));
    split.seed = j.value("seed", std::uint64_t{0});
    return split;
}

}  // namespace sip
