#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bon/model.hpp"
#include "bon/util.hpp"

namespace bon {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian float32");

inline constexpr int kCheckpointVersion = 1;

/// Layout: one compact JSON header line, '\n', then the concatenated
/// float32 parameter payload. Offsets in the manifest are element counts
/// into the payload, in params() order, so the file is self-describing.
template <typename T>
void save_checkpoint(const std::string& path, ReconstructionModel<T>& model,
                     const std::string& vocab_hash, const TrainConfig& cfg) {
    const std::vector<Param<T>*> params = model.params();

    ordered_json header;
    header["format_version"] = kCheckpointVersion;
    header["variant"] = variant_name(model.variant);
    header["n"] = model.n;
    header["hidden"] = model.hidden;
    header["vocab_hash"] = vocab_hash;
    header["seed"] = cfg.seed;
    header["config"] = train_config_to_json(cfg);
    ordered_json manifest = ordered_json::array();
    size_t offset = 0;
    for (const Param<T>* p : params) {
        ordered_json e;
        e["name"] = p->name;
        e["rows"] = p->v.rows();
        e["cols"] = p->v.cols();
        e["offset"] = offset;
        e["dtype"] = "f32";
        manifest.push_back(std::move(e));
        offset += p->v.size();
    }
    header["params"] = std::move(manifest);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << header.dump() << '\n';
    std::vector<float> buf;
    for (const Param<T>* p : params) {
        buf.resize(p->v.size());
        for (size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(p->v.data()[i]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("short write on checkpoint: " + path);
}

template <typename T>
ReconstructionModel<T> load_checkpoint(const std::string& path,
                                       std::string* vocab_hash = nullptr,
                                       TrainConfig* cfg_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("checkpoint missing header: " + path);
    const ordered_json header = ordered_json::parse(line);
    if (header.at("format_version").get<int>() != kCheckpointVersion) {
        throw std::runtime_error("unsupported checkpoint version in " + path);
    }
    const TrainConfig cfg = train_config_from_json(header.at("config"));
    if (vocab_hash) *vocab_hash = header.at("vocab_hash").get<std::string>();
    if (cfg_out) *cfg_out = cfg;

    // Table heights come from the manifest; everything else from the config.
    int table_rows = -1, word_vocab = -1;
    for (const auto& e : header.at("params")) {
        const std::string name = e.at("name").get<std::string>();
        if (name == "embedder.table" || name == "encoder.embedding") {
            table_rows = e.at("rows").get<int>();
        } else if (name == "decoder.out.w") {
            word_vocab = e.at("rows").get<int>();
        }
    }
    if (table_rows < 0 || word_vocab < 0) {
        throw std::runtime_error("checkpoint manifest missing core tables: " + path);
    }

    ReconstructionModel<T> model =
        ReconstructionModel<T>::allocate(cfg, table_rows, word_vocab);
    const std::vector<Param<T>*> params = model.params();
    const auto& manifest = header.at("params");
    if (manifest.size() != params.size()) {
        throw std::runtime_error("checkpoint parameter count mismatch: " + path);
    }
    std::vector<float> buf;
    for (size_t k = 0; k < params.size(); ++k) {
        const auto& e = manifest[k];
        Param<T>* p = params[k];
        if (e.at("name").get<std::string>() != p->name ||
            e.at("rows").get<int>() != p->v.rows() || e.at("cols").get<int>() != p->v.cols() ||
            e.at("dtype").get<std::string>() != "f32") {
            throw std::runtime_error("checkpoint manifest entry " + std::to_string(k) +
                                     " does not match parameter " + p->name + ": " + path);
        }
        buf.resize(p->v.size());
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float))) {
            throw std::runtime_error("checkpoint payload truncated at " + p->name + ": " + path);
        }
        for (size_t i = 0; i < buf.size(); ++i) p->v.data()[i] = static_cast<T>(buf[i]);
    }
    return model;
}

}  // namespace bon
