#ifndef SCL_SERIALIZE_HPP
#define SCL_SERIALIZE_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "scl/relu_net.hpp"

namespace scl {

/// Doubles are printed with 17 significant digits so that parsing the
/// document reproduces the stored values bit for bit.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// JSON document {input_dim, output_dim, layers:[{rows, cols,
/// triplets:[[i,j,v],...], bias:[...]}]}.
inline std::string to_json(const ReluNet& net) {
    std::ostringstream os;
    os << "{\n";
    os << "  \"input_dim\": " << net.input_dim() << ",\n";
    os << "  \"output_dim\": " << net.output_dim() << ",\n";
    os << "  \"layers\": [\n";
    for (int k = 0; k < net.depth(); ++k) {
        const AffineLayer& l = net.layers()[k];
        os << "    {\"rows\": " << l.rows << ", \"cols\": " << l.cols << ",\n";
        os << "     \"triplets\": [";
        for (std::size_t i = 0; i < l.weights.size(); ++i) {
            const Triplet& t = l.weights[i];
            if (i) os << ",";
            os << "[" << t.row << "," << t.col << "," << format_double(t.value) << "]";
        }
        os << "],\n";
        os << "     \"bias\": [";
        for (int r = 0; r < l.rows; ++r) {
            if (r) os << ",";
            os << format_double(l.bias[r]);
        }
        os << "]}";
        os << (k + 1 < net.depth() ? ",\n" : "\n");
    }
    os << "  ]\n}\n";
    return os.str();
}

inline ReluNet net_from_json(const std::string& text) {
    const nlohmann::json doc = nlohmann::json::parse(text);
    std::vector<AffineLayer> layers;
    for (const auto& jl : doc.at("layers")) {
        AffineLayer l(jl.at("rows").get<int>(), jl.at("cols").get<int>());
        for (const auto& t : jl.at("triplets")) {
            l.add(t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<double>());
        }
        const auto& bias = jl.at("bias");
        for (int r = 0; r < l.rows; ++r) l.set_bias(r, bias.at(r).get<double>());
        layers.push_back(std::move(l));
    }
    ReluNet net(std::move(layers));
    if (net.input_dim() != doc.at("input_dim").get<int>() ||
        net.output_dim() != doc.at("output_dim").get<int>()) {
        throw std::runtime_error("net_from_json: declared dims do not match layers");
    }
    return net;
}

inline void save_net(const ReluNet& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_net: cannot open " + path);
    out << to_json(net);
}

inline ReluNet load_net(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_net: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return net_from_json(ss.str());
}

} // namespace scl

#endif // SCL_SERIALIZE_HPP
