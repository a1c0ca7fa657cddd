#include "kisgmm/approx/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "kisgmm/common/errors.hpp"

namespace kisgmm::approx {

namespace {

const char kMagic[4] = {'K', 'G', 'C', 'K'};
constexpr uint32_t kVersion = 1;

nlohmann::json layer_to_json(const LayerSpec& layer) {
    nlohmann::json j;
    if (const auto* d = std::get_if<DenseSpec>(&layer)) {
        j["kind"] = "dense";
        j["in"] = d->in;
        j["out"] = d->out;
        j["act"] = static_cast<int>(d->act);
    } else if (const auto* c = std::get_if<ConvSpec>(&layer)) {
        j["kind"] = "conv";
        j["in_ch"] = c->in_ch;
        j["out_ch"] = c->out_ch;
        j["kernel"] = c->kernel;
        j["stride"] = c->stride;
        j["act"] = static_cast<int>(c->act);
    } else {
        j["kind"] = "flatten";
    }
    return j;
}

LayerSpec layer_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind");
    if (kind == "dense")
        return DenseSpec{j.at("in"), j.at("out"), static_cast<Activation>(j.at("act").get<int>())};
    if (kind == "conv")
        return ConvSpec{j.at("in_ch"), j.at("out_ch"), j.at("kernel"), j.at("stride"),
                        static_cast<Activation>(j.at("act").get<int>())};
    if (kind == "flatten") return FlattenSpec{};
    throw ConfigError("checkpoint: unknown layer kind '" + kind + "'");
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw ConfigError("checkpoint: truncated file");
    return v;
}

}  // namespace

nlohmann::json network_spec_to_json(const NetworkSpec& spec) {
    nlohmann::json j;
    j["seed"] = spec.seed;
    j["input_height"] = spec.input_height;
    j["input_width"] = spec.input_width;
    j["layers"] = nlohmann::json::array();
    for (const auto& layer : spec.layers) j["layers"].push_back(layer_to_json(layer));
    return j;
}

NetworkSpec network_spec_from_json(const nlohmann::json& j) {
    NetworkSpec spec;
    spec.seed = j.at("seed").get<uint64_t>();
    spec.input_height = j.value("input_height", 0);
    spec.input_width = j.value("input_width", 0);
    for (const auto& lj : j.at("layers")) spec.layers.push_back(layer_from_json(lj));
    return spec;
}

void Checkpoint::add_network(const std::string& name, const Network& net) {
    specs_[name] = network_spec_to_json(net.spec());
    for (const auto& p : net.params())
        records_[name + "/" + p.name] = Record{p.shape, p.values};
}

void Checkpoint::add_raw(const std::string& name, std::vector<int> shape,
                         std::vector<double> data) {
    records_[name] = Record{std::move(shape), std::move(data)};
}

bool Checkpoint::has_network(const std::string& name) const { return specs_.count(name) > 0; }
bool Checkpoint::has_raw(const std::string& name) const { return records_.count(name) > 0; }

Network Checkpoint::network(const std::string& name) const {
    auto it = specs_.find(name);
    if (it == specs_.end()) throw ConfigError("checkpoint: no network named '" + name + "'");
    Network net(network_spec_from_json(it->second));
    for (auto& p : net.params()) {
        auto rit = records_.find(name + "/" + p.name);
        if (rit == records_.end())
            throw ConfigError("checkpoint: missing tensor '" + p.name + "' for '" + name + "'");
        if (rit->second.data.size() != p.values.size())
            throw ConfigError("checkpoint: tensor size mismatch for '" + p.name + "'");
        p.values = rit->second.data;
    }
    return net;
}

const std::vector<double>& Checkpoint::raw(const std::string& name) const {
    auto it = records_.find(name);
    if (it == records_.end()) throw ConfigError("checkpoint: no record named '" + name + "'");
    return it->second.data;
}

void Checkpoint::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("checkpoint: cannot open '" + path + "' for writing");

    nlohmann::json header;
    header["meta"] = meta;
    header["networks"] = nlohmann::json::object();
    for (const auto& [name, spec] : specs_) header["networks"][name] = spec;
    const std::string header_str = header.dump();

    os.write(kMagic, 4);
    write_pod(os, kVersion);
    write_pod(os, static_cast<uint64_t>(header_str.size()));
    os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    write_pod(os, static_cast<uint32_t>(records_.size()));
    for (const auto& [name, rec] : records_) {
        write_pod(os, static_cast<uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(os, static_cast<uint32_t>(rec.shape.size()));
        for (int d : rec.shape) write_pod(os, static_cast<uint32_t>(d));
        os.write(reinterpret_cast<const char*>(rec.data.data()),
                 static_cast<std::streamsize>(rec.data.size() * sizeof(double)));
    }
    if (!os) throw ConfigError("checkpoint: write failed for '" + path + "'");
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("checkpoint: cannot open '" + path + "'");

    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw ConfigError("checkpoint: bad magic in '" + path + "'");
    const auto version = read_pod<uint32_t>(is);
    if (version != kVersion) throw ConfigError("checkpoint: unsupported version");

    const auto header_len = read_pod<uint64_t>(is);
    std::string header_str(header_len, '\0');
    is.read(header_str.data(), static_cast<std::streamsize>(header_len));
    if (!is) throw ConfigError("checkpoint: truncated header");
    const auto header = nlohmann::json::parse(header_str);

    Checkpoint ck;
    ck.meta = header.value("meta", nlohmann::json::object());
    for (auto it = header.at("networks").begin(); it != header.at("networks").end(); ++it)
        ck.specs_[it.key()] = it.value();

    const auto n = read_pod<uint32_t>(is);
    for (uint32_t i = 0; i < n; ++i) {
        const auto name_len = read_pod<uint32_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const auto ndims = read_pod<uint32_t>(is);
        Record rec;
        size_t count = 1;
        for (uint32_t d = 0; d < ndims; ++d) {
            rec.shape.push_back(static_cast<int>(read_pod<uint32_t>(is)));
            count *= static_cast<size_t>(rec.shape.back());
        }
        rec.data.resize(count);
        is.read(reinterpret_cast<char*>(rec.data.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
        if (!is) throw ConfigError("checkpoint: truncated tensor data");
        ck.records_[name] = std::move(rec);
    }
    return ck;
}

}  // namespace kisgmm::approx
