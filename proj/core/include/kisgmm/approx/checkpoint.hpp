#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kisgmm/approx/network.hpp"

namespace kisgmm::approx {

nlohmann::json network_spec_to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const nlohmann::json& j);

// Binary parameter container: a JSON header (metadata + network specs)
// followed by named (shape, f64 data) records. Round-trips exactly.
class Checkpoint {
public:
    nlohmann::json meta;

    void add_network(const std::string& name, const Network& net);
    void add_raw(const std::string& name, std::vector<int> shape, std::vector<double> data);

    Network network(const std::string& name) const;
    bool has_network(const std::string& name) const;

    const std::vector<double>& raw(const std::string& name) const;
    bool has_raw(const std::string& name) const;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

private:
    struct Record {
        std::vector<int> shape;
        std::vector<double> data;
    };
    std::map<std::string, nlohmann::json> specs_;
    std::map<std::string, Record> records_;
};

}  // namespace kisgmm::approx
