#include "rectflow/pairs.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace rectflow {

static_assert(std::endian::native == std::endian::little,
              "pair files are little-endian; add byte swapping for this platform");

namespace {

constexpr char kMagic[4] = {'R', 'F', 'P', 'D'};
constexpr std::uint32_t kVersion = 1;

nlohmann::json meta_to_json_obj(const PairDatasetMeta& m) {
    return nlohmann::json{
        {"stage_id", m.stage_id},   {"stage_k", m.stage_k},
        {"stage_role", m.stage_role}, {"weights_hash", m.weights_hash},
        {"config_hash", m.config_hash}, {"steps", m.steps},
        {"alpha", m.alpha},         {"seed", m.seed},
        {"count", m.count},         {"state_dim", m.state_dim},
        {"vocab_size", m.vocab_size},
    };
}

PairDatasetMeta meta_from_json_obj(const nlohmann::json& j) {
    PairDatasetMeta m;
    m.stage_id = j.at("stage_id").get<std::string>();
    m.stage_k = j.at("stage_k").get<int>();
    m.stage_role = j.at("stage_role").get<std::string>();
    m.weights_hash = j.at("weights_hash").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.steps = j.at("steps").get<int>();
    m.alpha = j.at("alpha").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.count = j.at("count").get<int>();
    m.state_dim = j.at("state_dim").get<int>();
    m.vocab_size = j.at("vocab_size").get<int>();
    return m;
}

void write_bytes(std::ofstream& os, const void* data, std::size_t len) {
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
}

void read_bytes(std::ifstream& is, void* data, std::size_t len, const std::string& path) {
    is.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
    if (!is) throw IoError("pairs: truncated file " + path);
}

PairDatasetMeta read_header(std::ifstream& is, const std::string& path) {
    char magic[4];
    read_bytes(is, magic, 4, path);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("pairs: bad magic in " + path);
    }
    std::uint32_t version = 0;
    read_bytes(is, &version, sizeof(version), path);
    if (version != kVersion) {
        throw IoError("pairs: unsupported version " + std::to_string(version) + " in " + path);
    }
    std::uint64_t json_len = 0;
    read_bytes(is, &json_len, sizeof(json_len), path);
    if (json_len > (1u << 20)) throw IoError("pairs: oversized header in " + path);
    std::string text(json_len, '\0');
    read_bytes(is, text.data(), json_len, path);
    try {
        return meta_from_json_obj(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("pairs: bad header JSON in " + path + ": " + e.what());
    }
}

}  // namespace

PairBatch PairDataset::gather(std::span<const int> indices) const {
    PairBatch batch;
    batch.resize(meta.state_dim, static_cast<int>(indices.size()));
    const int d = meta.state_dim;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const int src = indices[i];
        std::memcpy(batch.x0.data() + i * d, x0.data() + static_cast<std::size_t>(src) * d,
                    static_cast<std::size_t>(d) * sizeof(double));
        std::memcpy(batch.x1.data() + i * d, x1.data() + static_cast<std::size_t>(src) * d,
                    static_cast<std::size_t>(d) * sizeof(double));
        batch.conditions[i] = conditions[src];
    }
    return batch;
}

std::string pairs_meta_to_json(const PairDatasetMeta& meta) {
    return meta_to_json_obj(meta).dump(2);
}

void save_pairs(const std::string& path, const PairDataset& dataset) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("pairs: cannot open " + path + " for writing");
    write_bytes(os, kMagic, 4);
    write_bytes(os, &kVersion, sizeof(kVersion));
    const std::string header = meta_to_json_obj(dataset.meta).dump();
    const std::uint64_t json_len = header.size();
    write_bytes(os, &json_len, sizeof(json_len));
    write_bytes(os, header.data(), header.size());

    const int d = dataset.meta.state_dim;
    for (int i = 0; i < dataset.meta.count; ++i) {
        write_bytes(os, dataset.x0.data() + static_cast<std::size_t>(i) * d,
                    static_cast<std::size_t>(d) * sizeof(double));
        write_bytes(os, dataset.x1.data() + static_cast<std::size_t>(i) * d,
                    static_cast<std::size_t>(d) * sizeof(double));
    }
    std::vector<std::uint32_t> conds(dataset.conditions.begin(), dataset.conditions.end());
    write_bytes(os, conds.data(), conds.size() * sizeof(std::uint32_t));
    if (!os) throw IoError("pairs: write failed for " + path);
}

PairDataset load_pairs(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("pairs: cannot open " + path);
    PairDataset ds;
    ds.meta = read_header(is, path);
    const int d = ds.meta.state_dim;
    const int n = ds.meta.count;
    if (d < 1 || n < 0) throw IoError("pairs: invalid dimensions in " + path);
    ds.x0.resize(static_cast<std::size_t>(n) * d);
    ds.x1.resize(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < n; ++i) {
        read_bytes(is, ds.x0.data() + static_cast<std::size_t>(i) * d,
                   static_cast<std::size_t>(d) * sizeof(double), path);
        read_bytes(is, ds.x1.data() + static_cast<std::size_t>(i) * d,
                   static_cast<std::size_t>(d) * sizeof(double), path);
    }
    std::vector<std::uint32_t> conds(static_cast<std::size_t>(n));
    read_bytes(is, conds.data(), conds.size() * sizeof(std::uint32_t), path);
    ds.conditions.assign(conds.begin(), conds.end());
    return ds;
}

PairDatasetMeta load_pairs_meta(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("pairs: cannot open " + path);
    return read_header(is, path);
}

}  // namespace rectflow
