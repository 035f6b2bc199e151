#include "krn/kernel_json.hpp"

#include <cstdio>
#include <istream>
#include <sstream>

#include <json.hpp>

namespace krn {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void append_string_array(std::string& out, const std::vector<std::string>& v) {
    out += "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += nlohmann::json(v[i]).dump();
    }
    out += "]";
}

void append_number_array(std::string& out, const Vec& v) {
    out += "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += fmt(v(i));
    }
    out += "]";
}

KernelMorphism from_parsed(const nlohmann::json& j) {
    const auto labels_in = j.at("labels_in").get<std::vector<std::string>>();
    const auto labels_out = j.at("labels_out").get<std::vector<std::string>>();
    const auto mu = j.at("mu").get<std::vector<double>>();
    const auto& rows = j.at("matrix");
    if (!rows.is_array())
        throw InvalidArgument("kernel JSON: 'matrix' must be an array of rows");
    Vec muv(static_cast<Eigen::Index>(mu.size()));
    for (std::size_t i = 0; i < mu.size(); ++i)
        muv(static_cast<Eigen::Index>(i)) = mu[i];
    Mat m(static_cast<Eigen::Index>(rows.size()),
          static_cast<Eigen::Index>(labels_out.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto row = rows[k].get<std::vector<double>>();
        if (row.size() != labels_out.size())
            throw InvalidArgument("kernel JSON: row " + std::to_string(k) +
                                  " has " + std::to_string(row.size()) +
                                  " entries, expected " +
                                  std::to_string(labels_out.size()));
        for (std::size_t l = 0; l < row.size(); ++l)
            m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = row[l];
    }
    return KernelMorphism(MeasuredSpace(labels_in, std::move(muv)), labels_out,
                          std::move(m));
}

}  // namespace

std::string kernel_to_json(const KernelMorphism& f) {
    std::string out = "{\"labels_in\":";
    append_string_array(out, f.source().labels());
    out += ",\"labels_out\":";
    append_string_array(out, f.target().labels());
    out += ",\"mu\":";
    append_number_array(out, f.source().mu());
    out += ",\"matrix\":[";
    for (Eigen::Index k = 0; k < f.matrix().rows(); ++k) {
        if (k) out += ",";
        append_number_array(out, f.matrix().row(k));
    }
    out += "]}";
    return out;
}

KernelMorphism kernel_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("kernel JSON: ") + e.what());
    }
    try {
        return from_parsed(j);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("kernel JSON: ") + e.what());
    }
}

KernelMorphism kernel_from_json_stream(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return kernel_from_json(ss.str());
}

}  // namespace krn
