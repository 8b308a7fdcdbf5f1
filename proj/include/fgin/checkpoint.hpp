#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgin/model.hpp"
#include "fgin/train.hpp"

namespace fgin {

// Checkpoint file: 8-byte magic, u32 version, u64 header length, JSON header
// (model config, training meta, tensor table), then a raw little-endian f32
// payload. Includes Adam moments and BN running statistics, so a resumed run
// replays the uninterrupted one.

constexpr char kCheckpointMagic[8] = {'F', 'G', 'I', 'N', 'C', 'K', 'P', 'T'};
constexpr uint32_t kCheckpointVersion = 1;

namespace detail {

struct TensorEntry {
    std::string name;
    std::vector<int> shape;
    uint64_t offset = 0;
};

inline void append_tensor(std::vector<float>& payload, nlohmann::json& table,
                          const std::string& name, const Tensor<float>& t) {
    table.push_back({{"name", name}, {"shape", t.shape}, {"offset", payload.size()}});
    payload.insert(payload.end(), t.data.begin(), t.data.end());
}

inline Tensor<float> take_tensor(const std::vector<float>& payload, const nlohmann::json& entry) {
    std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    const uint64_t off = entry.at("offset").get<uint64_t>();
    Tensor<float> t(shape);
    if (off + static_cast<uint64_t>(t.numel()) > payload.size())
        throw data_error("checkpoint: tensor " + entry.at("name").get<std::string>() +
                         " exceeds payload");
    std::copy(payload.begin() + static_cast<ptrdiff_t>(off),
              payload.begin() + static_cast<ptrdiff_t>(off + t.numel()), t.data.begin());
    return t;
}

}  // namespace detail

inline void save_checkpoint(const TrainState& st, const std::string& path) {
    const FginModel<float>& m = st.model;
    nlohmann::json hdr;
    hdr["config"] = m.cfg;
    hdr["meta"] = {{"adam_steps", st.adam_steps},
                   {"next_epoch", st.next_epoch},
                   {"best_epoch", st.best_epoch},
                   {"best_val_mpsnr", st.best_epoch >= 0 ? st.best_val_mpsnr : 0.0},
                   {"evals_since_improve", st.evals_since_improve},
                   {"has_best", st.best_epoch >= 0}};

    std::vector<float> payload;
    nlohmann::json table = nlohmann::json::array();
    auto dump_model = [&](const FginModel<float>& mm, const std::string& prefix) {
        for (const auto& p : mm.params.items()) {
            detail::append_tensor(payload, table, prefix + "param/" + p.name + "/value", p.value);
            detail::append_tensor(payload, table, prefix + "param/" + p.name + "/m", p.m);
            detail::append_tensor(payload, table, prefix + "param/" + p.name + "/v", p.v);
        }
        for (size_t i = 0; i < mm.bn_names.size(); ++i) {
            detail::append_tensor(payload, table, prefix + "bn/" + mm.bn_names[i] + "/mean",
                                  mm.bn_stats[i].running_mean);
            detail::append_tensor(payload, table, prefix + "bn/" + mm.bn_names[i] + "/var",
                                  mm.bn_stats[i].running_var);
        }
    };
    dump_model(m, "");
    if (st.best_epoch >= 0) dump_model(st.best_model, "best/");
    nlohmann::json bn_init = nlohmann::json::array();
    for (const auto& s : m.bn_stats) bn_init.push_back(s.initialized);
    hdr["bn_initialized"] = bn_init;
    hdr["tensors"] = table;

    const std::string hjs = hdr.dump();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw data_error("save_checkpoint: cannot open " + path);
    f.write(kCheckpointMagic, 8);
    f.write(reinterpret_cast<const char*>(&kCheckpointVersion), 4);
    const uint64_t hlen = hjs.size();
    f.write(reinterpret_cast<const char*>(&hlen), 8);
    f.write(hjs.data(), static_cast<std::streamsize>(hjs.size()));
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
}

inline void save_checkpoint(const FginModel<float>& model, const std::string& path) {
    TrainState st;
    st.model = model;
    st.best_epoch = -1;
    save_checkpoint(st, path);
}

inline TrainState load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw data_error("load_checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw data_error("load_checkpoint: bad magic in " + path);
    uint32_t version = 0;
    uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    f.read(reinterpret_cast<char*>(&hlen), 8);
    if (version != kCheckpointVersion)
        throw data_error("load_checkpoint: unsupported version " + std::to_string(version));
    std::string hjs(hlen, '\0');
    f.read(hjs.data(), static_cast<std::streamsize>(hlen));
    nlohmann::json hdr;
    try {
        hdr = nlohmann::json::parse(hjs);
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("load_checkpoint: malformed header: ") + e.what());
    }
    std::vector<float> payload;
    {
        const auto pos = f.tellg();
        f.seekg(0, std::ios::end);
        const auto end = f.tellg();
        f.seekg(pos);
        payload.resize(static_cast<size_t>(end - pos) / sizeof(float));
        f.read(reinterpret_cast<char*>(payload.data()),
               static_cast<std::streamsize>(payload.size() * sizeof(float)));
    }

    ModelConfig cfg = hdr.at("config").get<ModelConfig>();
    TrainState st;
    st.model = FginModel<float>(cfg, 0);
    st.adam_steps = hdr.at("meta").at("adam_steps").get<int64_t>();
    st.next_epoch = hdr.at("meta").at("next_epoch").get<int>();
    st.best_epoch = hdr.at("meta").at("best_epoch").get<int>();
    st.evals_since_improve = hdr.at("meta").at("evals_since_improve").get<int>();
    st.best_val_mpsnr = hdr.at("meta").at("has_best").get<bool>()
                            ? hdr.at("meta").at("best_val_mpsnr").get<double>()
                            : -std::numeric_limits<double>::infinity();

    std::unordered_map<std::string, nlohmann::json> entries;
    for (const auto& e : hdr.at("tensors")) entries[e.at("name").get<std::string>()] = e;
    auto load_model = [&](FginModel<float>& mm, const std::string& prefix) {
        for (auto& p : mm.params.items()) {
            auto fetch = [&](const char* kind) {
                auto it = entries.find(prefix + "param/" + p.name + "/" + kind);
                if (it == entries.end())
                    throw data_error("load_checkpoint: missing tensor for parameter " + p.name);
                Tensor<float> t = detail::take_tensor(payload, it->second);
                if (t.shape != p.value.shape)
                    throw data_error("load_checkpoint: shape mismatch on " + p.name);
                return t;
            };
            p.value = fetch("value");
            p.m = fetch("m");
            p.v = fetch("v");
        }
        for (size_t i = 0; i < mm.bn_names.size(); ++i) {
            auto fetch = [&](const char* kind) {
                auto it = entries.find(prefix + "bn/" + mm.bn_names[i] + "/" + kind);
                if (it == entries.end())
                    throw data_error("load_checkpoint: missing BN stats for " + mm.bn_names[i]);
                return detail::take_tensor(payload, it->second);
            };
            mm.bn_stats[i].running_mean = fetch("mean");
            mm.bn_stats[i].running_var = fetch("var");
            mm.bn_stats[i].initialized = hdr.at("bn_initialized").at(i).get<bool>();
        }
    };
    load_model(st.model, "");
    if (st.best_epoch >= 0) {
        st.best_model = FginModel<float>(cfg, 0);
        load_model(st.best_model, "best/");
    } else {
        st.best_model = st.model;
    }
    return st;
}

}  // namespace fgin
