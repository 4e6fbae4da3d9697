#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "bon/pipeline.hpp"
#include "bon/util.hpp"

namespace bon {

// ---------------------------------------------------------------------------
// schema validation (the subset the summary schema uses)

/// Validates `inst` against a JSON-schema subset: type (string or list),
/// properties, required, items, enum. On failure writes a message naming the
/// offending path into `err`.
inline bool validate_schema(const ordered_json& schema, const ordered_json& inst,
                            std::string& err, const std::string& path = "$") {
    const auto type_matches = [&inst](const std::string& t) {
        if (t == "object") return inst.is_object();
        if (t == "array") return inst.is_array();
        if (t == "string") return inst.is_string();
        if (t == "integer") return inst.is_number_integer();
        if (t == "number") return inst.is_number();
        if (t == "boolean") return inst.is_boolean();
        if (t == "null") return inst.is_null();
        return false;
    };
    if (schema.contains("type")) {
        const auto& t = schema.at("type");
        bool ok = false;
        if (t.is_array()) {
            for (const auto& one : t) ok = ok || type_matches(one.get<std::string>());
        } else {
            ok = type_matches(t.get<std::string>());
        }
        if (!ok) {
            err = path + ": expected type " + t.dump() + ", got " + std::string(inst.type_name());
            return false;
        }
    }
    if (schema.contains("enum")) {
        bool ok = false;
        for (const auto& v : schema.at("enum")) ok = ok || v == inst;
        if (!ok) {
            err = path + ": value " + inst.dump() + " not in enum " + schema.at("enum").dump();
            return false;
        }
    }
    if (inst.is_object() && schema.contains("required")) {
        for (const auto& key : schema.at("required")) {
            if (!inst.contains(key.get<std::string>())) {
                err = path + ": missing required key '" + key.get<std::string>() + "'";
                return false;
            }
        }
    }
    if (inst.is_object() && schema.contains("properties")) {
        for (const auto& [key, sub] : schema.at("properties").items()) {
            if (inst.contains(key) &&
                !validate_schema(sub, inst.at(key), err, path + "." + key)) {
                return false;
            }
        }
    }
    if (inst.is_array() && schema.contains("items")) {
        for (size_t i = 0; i < inst.size(); ++i) {
            if (!validate_schema(schema.at("items"), inst[i], err,
                                 path + "[" + std::to_string(i) + "]")) {
                return false;
            }
        }
    }
    return true;
}

/// The shipped schema for summary.json; schemas/summary.schema.json holds
/// the same text and a test pins the two together.
inline const char* summary_schema_text() {
    return R"({
  "type": "object",
  "required": ["schema_version", "tool_version", "runs"],
  "properties": {
    "schema_version": {"type": "integer"},
    "tool_version": {"type": "string"},
    "runs": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["language", "model", "n", "seed", "vocab_hash", "config", "diagnostics",
                     "train", "bleu", "norms", "probes"],
        "properties": {
          "language": {"type": "string"},
          "model": {"type": "string", "enum": ["bag", "rnn"]},
          "n": {"type": "integer"},
          "seed": {"type": "integer"},
          "vocab_hash": {"type": ["string", "null"]},
          "config": {"type": "object"},
          "diagnostics": {"type": ["object", "null"]},
          "train": {"type": ["object", "null"]},
          "bleu": {"type": ["object", "null"]},
          "norms": {"type": ["object", "null"]},
          "probes": {
            "type": "object",
            "required": ["length", "word_content", "phrase_content", "word_order"],
            "properties": {
              "length": {"type": ["object", "null"]},
              "word_content": {"type": ["object", "null"]},
              "phrase_content": {"type": ["object", "null"]},
              "word_order": {"type": ["object", "null"]}
            }
          }
        }
      }
    }
  }
}
)";
}

// ---------------------------------------------------------------------------
// summary assembly

namespace detail {

inline ordered_json read_json_or_null(const std::string& path) {
    if (!std::filesystem::exists(path)) return nullptr;
    return ordered_json::parse(read_file(path));
}

/// Epoch losses distilled from the training log; wallclock stays out so the
/// summary is byte-stable across identical re-runs.
inline ordered_json train_digest(const std::string& log_path) {
    if (!std::filesystem::exists(log_path)) return nullptr;
    ordered_json digest;
    ordered_json losses = ordered_json::array();
    std::istringstream in(read_file(log_path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        losses.push_back(ordered_json::parse(line).at("mean_loss"));
    }
    digest["epochs"] = losses.size();
    digest["final_mean_loss"] = losses.empty() ? ordered_json(nullptr) : losses.back();
    digest["epoch_losses"] = std::move(losses);
    return digest;
}

}  // namespace detail

/// One summary entry per run directory under `runs_root` (any directory
/// holding a manifest.json). Stage outputs that were never produced appear
/// as nulls. Entries sort by (language, model, n, seed), so the summary is
/// independent of directory enumeration order.
inline ordered_json build_summary(const std::string& runs_root) {
    std::vector<std::filesystem::path> dirs;
    for (const auto& entry : std::filesystem::directory_iterator(runs_root)) {
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "manifest.json")) {
            dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());

    ordered_json runs = ordered_json::array();
    for (const auto& dir : dirs) {
        const RunPaths paths(dir.string());
        const ordered_json manifest = ordered_json::parse(read_file(paths.manifest()));
        ordered_json config = manifest.at("config");
        config.erase("out");  // a location, not an experiment parameter

        ordered_json run;
        run["language"] = config.at("data").at("language");
        run["model"] = config.at("model").at("variant");
        run["n"] = config.at("model").at("variant") == "rnn"
                       ? 0
                       : config.at("model").at("n").get<int>();
        run["seed"] = config.at("model").at("seed");
        const auto& stages = manifest.contains("stages") ? manifest.at("stages")
                                                         : ordered_json::object();
        run["vocab_hash"] = stages.contains("prepare") ? stages.at("prepare").at("vocab_hash")
                                                       : ordered_json(nullptr);
        run["config"] = std::move(config);
        run["diagnostics"] = detail::read_json_or_null(paths.diagnostics());
        run["train"] = detail::train_digest(paths.train_log());
        run["bleu"] = detail::read_json_or_null(paths.bleu_json());
        run["norms"] = detail::read_json_or_null(paths.norms_json());
        ordered_json probes;
        for (const ProbeTask task : all_probe_tasks()) {
            probes[probe_task_name(task)] = detail::read_json_or_null(paths.probe_json(task));
        }
        run["probes"] = std::move(probes);
        runs.push_back(std::move(run));
    }

    std::sort(runs.begin(), runs.end(), [](const ordered_json& a, const ordered_json& b) {
        const auto key = [](const ordered_json& r) {
            return std::make_tuple(r.at("language").get<std::string>(),
                                   r.at("model").get<std::string>(), r.at("n").get<int>(),
                                   r.at("seed").get<uint64_t>());
        };
        return key(a) < key(b);
    });

    ordered_json summary;
    summary["schema_version"] = 1;
    summary["tool_version"] = kToolVersion;
    summary["runs"] = std::move(runs);
    return summary;
}

// ---------------------------------------------------------------------------
// merged tables

/// language,model,n,group,count,mean_bleu
inline std::string reconstruction_table(const ordered_json& summary) {
    std::string csv = "language,model,n,group,count,mean_bleu\n";
    for (const auto& run : summary.at("runs")) {
        if (run.at("bleu").is_null()) continue;
        const std::string head = run.at("language").get<std::string>() + "," +
                                 run.at("model").get<std::string>() + "," +
                                 std::to_string(run.at("n").get<int>()) + ",";
        for (const char* group : {"overall", "short", "long"}) {
            const auto& g = run.at("bleu").at(group);
            csv += head + group + "," + std::to_string(g.at("count").get<int>()) + "," +
                   fmt_double(g.at("mean").get<double>()) + "\n";
        }
    }
    return csv;
}

/// language,model,n,task,bucket,bucket_count,accuracy
inline std::string probes_table(const ordered_json& summary) {
    std::string csv = "language,model,n,task,bucket,bucket_count,accuracy\n";
    for (const auto& run : summary.at("runs")) {
        const std::string head = run.at("language").get<std::string>() + "," +
                                 run.at("model").get<std::string>() + "," +
                                 std::to_string(run.at("n").get<int>()) + ",";
        for (const ProbeTask task : all_probe_tasks()) {
            const auto& report = run.at("probes").at(probe_task_name(task));
            if (report.is_null()) continue;
            csv += head + std::string(probe_task_name(task)) + ",overall," +
                   std::to_string(report.at("count").get<int>()) + "," +
                   fmt_double(report.at("accuracy").get<double>()) + "\n";
            for (const auto& b : report.at("buckets")) {
                csv += head + std::string(probe_task_name(task)) + "," +
                       csv_field(b.at("bucket").get<std::string>()) + "," +
                       std::to_string(b.at("count").get<int>()) + "," +
                       fmt_double(b.at("accuracy").get<double>()) + "\n";
            }
        }
    }
    return csv;
}

/// language,model,n,bin,count,mean_norm
inline std::string norms_table(const ordered_json& summary) {
    std::string csv = "language,model,n,bin,count,mean_norm\n";
    for (const auto& run : summary.at("runs")) {
        if (run.at("norms").is_null()) continue;
        const std::string head = run.at("language").get<std::string>() + "," +
                                 run.at("model").get<std::string>() + "," +
                                 std::to_string(run.at("n").get<int>()) + ",";
        for (const auto& b : run.at("norms").at("bins")) {
            csv += head + b.at("bin").get<std::string>() + "," +
                   std::to_string(b.at("count").get<int>()) + "," +
                   fmt_double(b.at("mean_norm").get<double>()) + "\n";
        }
    }
    return csv;
}

/// Builds and validates the summary, then writes summary.json and the merged
/// CSV tables under `runs_root`.
inline void run_report(const std::string& runs_root) {
    if (!std::filesystem::is_directory(runs_root)) {
        throw config_error("report: not a directory: " + runs_root);
    }
    const ordered_json summary = build_summary(runs_root);
    std::string err;
    if (!validate_schema(ordered_json::parse(summary_schema_text()), summary, err)) {
        throw std::runtime_error("summary does not validate against its schema: " + err);
    }
    const std::filesystem::path root(runs_root);
    std::filesystem::create_directories(root / "tables");
    write_file((root / "summary.json").string(), summary.dump(2) + "\n");
    write_file((root / "tables" / "reconstruction.csv").string(), reconstruction_table(summary));
    write_file((root / "tables" / "probes.csv").string(), probes_table(summary));
    write_file((root / "tables" / "norms.csv").string(), norms_table(summary));
}

}  // namespace bon
