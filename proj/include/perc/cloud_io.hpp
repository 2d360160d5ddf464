#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "perc/cloud.hpp"
#include "perc/errors.hpp"

namespace perc {

enum class CloudFormat { csv, binary };

// ".csv" -> csv, anything else (".pgc", ".bin", ...) -> binary.
inline CloudFormat format_from_path(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? CloudFormat::csv : CloudFormat::binary;
}

namespace detail {

inline constexpr char kMagic[4] = {'P', 'G', 'C', '1'};

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

inline std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
    return v;
}

inline void put_f64(std::string& out, double x) {
    put_u64(out, std::bit_cast<std::uint64_t>(x));
}

inline double get_f64(const unsigned char* p) {
    return std::bit_cast<double>(get_u64(p));
}

// Shortest decimal form that round-trips the double exactly.
inline std::string format_double(double x) {
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, end);
}

inline double parse_field(std::string_view field, std::size_t row) {
    // trim surrounding whitespace
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
        field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' ||
                              field.back() == '\r'))
        field.remove_suffix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw data_error("non-numeric field '" + std::string(field) + "' at row " +
                         std::to_string(row));
    return value;
}

} // namespace detail

inline void save_cloud_csv(const PointCloud& cloud, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
    std::string line;
    for (std::size_t r = 0; r < cloud.points.rows; ++r) {
        line.clear();
        for (std::size_t c = 0; c < cloud.points.cols; ++c) {
            if (c) line.push_back(',');
            line += detail::format_double(cloud.points(r, c));
        }
        line.push_back('\n');
        out << line;
    }
    if (!out) throw io_error("write failure on '" + path.string() + "'");
}

inline void save_cloud_binary(const PointCloud& cloud, const std::filesystem::path& path) {
    std::string buf;
    buf.reserve(32 + cloud.points.data.size() * 8);
    buf.append(detail::kMagic, 4);
    detail::put_u64(buf, cloud.points.rows);
    detail::put_u64(buf, cloud.points.cols);
    for (double x : cloud.points.data) detail::put_f64(buf, x);

    nlohmann::json meta;
    if (!cloud.label.empty()) meta["label"] = cloud.label;
    if (cloud.seed) meta["seed"] = *cloud.seed;
    if (!cloud.meta.empty()) meta["meta"] = cloud.meta;
    std::string meta_str = meta.dump();
    detail::put_u64(buf, meta_str.size());
    buf += meta_str;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw io_error("write failure on '" + path.string() + "'");
}

inline void save_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                       CloudFormat format) {
    if (format == CloudFormat::csv)
        save_cloud_csv(cloud, path);
    else
        save_cloud_binary(cloud, path);
}

inline PointCloud load_cloud_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path.string() + "'");
    PointCloud cloud;
    std::string line;
    std::size_t row = 0;
    std::size_t cols = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::size_t ncols = 0;
        std::string_view rest(line);
        for (;;) {
            std::size_t comma = rest.find(',');
            std::string_view field = rest.substr(0, comma);
            cloud.points.data.push_back(detail::parse_field(field, row));
            ++ncols;
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (cols == 0)
            cols = ncols;
        else if (ncols != cols)
            throw data_error("row " + std::to_string(row) + " has " + std::to_string(ncols) +
                             " fields, expected " + std::to_string(cols));
        ++cloud.points.rows;
    }
    if (cloud.points.rows == 0) throw data_error("empty cloud file '" + path.string() + "'");
    cloud.points.cols = cols;
    validate_cloud(cloud);
    return cloud;
}

inline PointCloud load_cloud_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string buf = ss.str();
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());

    if (buf.size() < 20 || std::memcmp(buf.data(), detail::kMagic, 4) != 0)
        throw data_error("'" + path.string() + "' is not a PGC1 cloud file");
    std::uint64_t n = detail::get_u64(p + 4);
    std::uint64_t d = detail::get_u64(p + 12);
    if (n == 0 || d == 0 || n > buf.size() || d > buf.size())
        throw data_error("truncated or empty cloud file '" + path.string() + "'");
    std::size_t need = 20 + n * d * 8;
    if (buf.size() < need)
        throw data_error("truncated or empty cloud file '" + path.string() + "'");

    PointCloud cloud;
    cloud.points.rows = n;
    cloud.points.cols = d;
    cloud.points.data.resize(n * d);
    for (std::size_t k = 0; k < n * d; ++k)
        cloud.points.data[k] = detail::get_f64(p + 20 + 8 * k);

    if (buf.size() >= need + 8) {
        std::uint64_t mlen = detail::get_u64(p + need);
        if (buf.size() < need + 8 + mlen)
            throw data_error("truncated metadata block in '" + path.string() + "'");
        auto meta = nlohmann::json::parse(buf.substr(need + 8, mlen), nullptr, false);
        if (meta.is_discarded())
            throw data_error("malformed metadata JSON in '" + path.string() + "'");
        if (meta.contains("label")) cloud.label = meta["label"].get<std::string>();
        if (meta.contains("seed")) cloud.seed = meta["seed"].get<std::uint64_t>();
        if (meta.contains("meta"))
            cloud.meta = meta["meta"].get<std::map<std::string, std::string>>();
    }
    validate_cloud(cloud);
    return cloud;
}

inline PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
    return format == CloudFormat::csv ? load_cloud_csv(path) : load_cloud_binary(path);
}

inline PointCloud load_cloud(const std::filesystem::path& path) {
    return load_cloud(path, format_from_path(path));
}

} // namespace perc
