#include "ddpred/io.hpp"

#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ddpred/errors.hpp"

namespace ddpred::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// SHA-1 (for the git-style config content hash in campaign manifests).

class Sha1 {
public:
    void update(const unsigned char* data, std::size_t len) {
        total_ += len;
        while (len > 0) {
            const std::size_t take = std::min(len, std::size_t(64) - fill_);
            std::copy(data, data + take, block_.begin() + long(fill_));
            fill_ += take;
            data += take;
            len -= take;
            if (fill_ == 64) {
                process();
                fill_ = 0;
            }
        }
    }

    std::string hex_digest() {
        const std::uint64_t bits = total_ * 8;
        const unsigned char pad = 0x80;
        update(&pad, 1);
        const unsigned char zero = 0x00;
        while (fill_ != 56) update(&zero, 1);
        unsigned char len_bytes[8];
        for (int i = 0; i < 8; ++i)
            len_bytes[i] = (unsigned char)(bits >> (56 - 8 * i));
        update(len_bytes, 8);
        std::ostringstream out;
        out << std::hex << std::setfill('0');
        for (std::uint32_t word : h_) out << std::setw(8) << word;
        return out.str();
    }

private:
    static std::uint32_t rol(std::uint32_t v, int bits) {
        return (v << bits) | (v >> (32 - bits));
    }

    void process() {
        std::uint32_t w[80];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(block_[4 * i]) << 24) |
                   (std::uint32_t(block_[4 * i + 1]) << 16) |
                   (std::uint32_t(block_[4 * i + 2]) << 8) |
                   std::uint32_t(block_[4 * i + 3]);
        for (int i = 16; i < 80; ++i)
            w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
        std::uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3], e = h_[4];
        for (int i = 0; i < 80; ++i) {
            std::uint32_t f, k;
            if (i < 20) {
                f = (b & c) | (~b & d);
                k = 0x5A827999u;
            } else if (i < 40) {
                f = b ^ c ^ d;
                k = 0x6ED9EBA1u;
            } else if (i < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8F1BBCDCu;
            } else {
                f = b ^ c ^ d;
                k = 0xCA62C1D6u;
            }
            const std::uint32_t temp = rol(a, 5) + f + e + k + w[i];
            e = d;
            d = c;
            c = rol(b, 30);
            b = a;
            a = temp;
        }
        h_[0] += a;
        h_[1] += b;
        h_[2] += c;
        h_[3] += d;
        h_[4] += e;
    }

    std::array<std::uint32_t, 5> h_{0x67452301u, 0xEFCDAB89u, 0x98BADCFEu,
                                    0x10325476u, 0xC3D2E1F0u};
    std::array<unsigned char, 64> block_{};
    std::size_t fill_ = 0;
    std::uint64_t total_ = 0;
};

// ---------------------------------------------------------------------------
// JSON helpers.

json parse_json(const fs::path& path) {
    const std::string content = read_file(path);
    try {
        return json::parse(content);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void check_format_version(const json& j, const fs::path& path) {
    if (!j.is_object() || !j.contains("format_version") ||
        !j["format_version"].is_number_integer() || j["format_version"] != 1)
        throw FormatError(path.string() + ": missing or unsupported format_version");
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, const std::string& name) {
    if (!j.is_array() || j.empty())
        throw FormatError(name + " must be a nonempty array of rows");
    const Index rows = Index(j.size());
    if (!j[0].is_array()) throw FormatError(name + " rows must be arrays");
    const Index cols = Index(j[0].size());
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const auto& row = j[std::size_t(i)];
        if (!row.is_array() || Index(row.size()) != cols)
            throw FormatError(name + " must be rectangular");
        for (Index k = 0; k < cols; ++k) {
            if (!row[std::size_t(k)].is_number())
                throw FormatError(name + " entries must be numbers");
            m(i, k) = row[std::size_t(k)].get<double>();
        }
    }
    return m;
}

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Vector vector_from_json(const json& j, const std::string& name) {
    if (!j.is_array()) throw FormatError(name + " must be an array");
    Vector v(Index(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw FormatError(name + " entries must be numbers");
        v(Index(i)) = j[i].get<double>();
    }
    return v;
}

// ---------------------------------------------------------------------------
// CSV helpers.

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::vector<std::string> read_csv_lines(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    if (lines.size() < 2 || lines[0] != "# format=1")
        throw FormatError(path.string() + ": expected '# format=1' comment line");
    return lines;
}

// Validates a header of the shape t,u1..u{n_u}[,y1..y{n_y}] and returns the
// channel counts.
std::pair<Index, Index> parse_csv_header(const std::string& header,
                                         const fs::path& path) {
    const auto fields = split_csv_line(header);
    if (fields.empty() || fields[0] != "t")
        throw FormatError(path.string() + ": header must start with 't'");
    Index n_u = 0, n_y = 0;
    std::size_t i = 1;
    while (i < fields.size() && fields[i] == "u" + std::to_string(n_u + 1)) {
        ++n_u;
        ++i;
    }
    while (i < fields.size() && fields[i] == "y" + std::to_string(n_y + 1)) {
        ++n_y;
        ++i;
    }
    if (i != fields.size() || n_u == 0)
        throw FormatError(path.string() + ": header must be t,u1..,y1..");
    return {n_u, n_y};
}

struct CsvBody {
    Matrix inputs;
    Matrix outputs;
};

CsvBody read_csv_body(const fs::path& path, bool outputs_required) {
    const auto lines = read_csv_lines(path);
    const auto [n_u, n_y] = parse_csv_header(lines[1], path);
    if (outputs_required && n_y == 0)
        throw FormatError(path.string() + ": trajectory needs y columns");
    const Index T = Index(lines.size()) - 2;
    if (T < 1) throw FormatError(path.string() + ": no data rows");
    Matrix inputs(n_u, T), outputs(std::max<Index>(n_y, 1), T);
    for (Index t = 0; t < T; ++t) {
        const auto fields = split_csv_line(lines[std::size_t(t) + 2]);
        if (Index(fields.size()) != 1 + n_u + n_y)
            throw FormatError(path.string() + ": row " + std::to_string(t) +
                              " has wrong field count");
        if (fields[0] != std::to_string(t))
            throw FormatError(path.string() + ": time index must ascend from 0");
        for (Index j = 0; j < n_u; ++j)
            inputs(j, t) = parse_double(fields[std::size_t(1 + j)]);
        for (Index j = 0; j < n_y; ++j)
            outputs(j, t) = parse_double(fields[std::size_t(1 + n_u + j)]);
    }
    if (n_y == 0) outputs.resize(0, T);
    return {std::move(inputs), std::move(outputs)};
}

std::string csv_of_columns(const Matrix& inputs, const Matrix* outputs) {
    std::string text = "# format=1\nt";
    for (Index j = 0; j < inputs.rows(); ++j)
        text += ",u" + std::to_string(j + 1);
    if (outputs)
        for (Index j = 0; j < outputs->rows(); ++j)
            text += ",y" + std::to_string(j + 1);
    text += "\n";
    for (Index t = 0; t < inputs.cols(); ++t) {
        text += std::to_string(t);
        for (Index j = 0; j < inputs.rows(); ++j)
            text += "," + format_double(inputs(j, t));
        if (outputs)
            for (Index j = 0; j < outputs->rows(); ++j)
                text += "," + format_double((*outputs)(j, t));
        text += "\n";
    }
    return text;
}

}  // namespace

std::string format_double(double value) {
    char buffer[48];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, result.ptr);
}

double parse_double(std::string_view text) {
    double value = 0.0;
    const char* end = text.data() + text.size();
    const auto result = std::from_chars(text.data(), end, value);
    if (result.ec != std::errc{} || result.ptr != end)
        throw FormatError("not a number: '" + std::string(text) + "'");
    return value;
}

void atomic_write(const fs::path& path, std::string_view content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), std::streamsize(content.size()));
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot rename " + tmp.string() + " to " + path.string());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw IoError("read failed for " + path.string());
    return buffer.str();
}

std::string sha1_blob_hex(std::string_view content) {
    Sha1 hash;
    const std::string header = "blob " + std::to_string(content.size());
    hash.update(reinterpret_cast<const unsigned char*>(header.data()),
                header.size() + 1);  // include the trailing NUL
    hash.update(reinterpret_cast<const unsigned char*>(content.data()),
                content.size());
    return hash.hex_digest();
}

StateSpaceModel read_model(const fs::path& path) {
    const json j = parse_json(path);
    check_format_version(j, path);
    for (const char* key : {"n_x", "n_u", "n_y"})
        if (!j.contains(key) || !j[key].is_number_integer())
            throw FormatError(path.string() + ": missing integer field " + key);
    for (const char* key : {"A", "B", "C", "D"})
        if (!j.contains(key))
            throw FormatError(path.string() + ": missing matrix field " + key);
    const Index n_x = j["n_x"].get<Index>();
    const Index n_u = j["n_u"].get<Index>();
    const Index n_y = j["n_y"].get<Index>();
    Matrix A = matrix_from_json(j["A"], "A");
    Matrix B = matrix_from_json(j["B"], "B");
    Matrix C = matrix_from_json(j["C"], "C");
    Matrix D = matrix_from_json(j["D"], "D");
    if (A.rows() != n_x || B.cols() != n_u || C.rows() != n_y)
        throw FormatError(path.string() + ": matrix shapes disagree with n_x/n_u/n_y");
    try {
        return StateSpaceModel(std::move(A), std::move(B), std::move(C), std::move(D));
    } catch (const Error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_model(const fs::path& path, const StateSpaceModel& model) {
    json j;
    j["format_version"] = 1;
    j["n_x"] = model.n_x();
    j["n_u"] = model.n_u();
    j["n_y"] = model.n_y();
    j["A"] = matrix_to_json(model.A());
    j["B"] = matrix_to_json(model.B());
    j["C"] = matrix_to_json(model.C());
    j["D"] = matrix_to_json(model.D());
    atomic_write(path, j.dump(2) + "\n");
}

Trajectory read_trajectory(const fs::path& path) {
    CsvBody body = read_csv_body(path, /*outputs_required=*/true);
    try {
        return Trajectory(std::move(body.inputs), std::move(body.outputs));
    } catch (const Error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_trajectory(const fs::path& path, const Trajectory& traj) {
    const Matrix& outputs = traj.outputs();
    atomic_write(path, csv_of_columns(traj.inputs(), &outputs));
}

Matrix read_inputs(const fs::path& path) {
    return read_csv_body(path, /*outputs_required=*/false).inputs;
}

void write_inputs(const fs::path& path, const Matrix& inputs) {
    atomic_write(path, csv_of_columns(inputs, nullptr));
}

RegionFile read_region(const fs::path& path) {
    const json j = parse_json(path);
    check_format_version(j, path);
    for (const char* key : {"center", "sigma", "mu_p", "p", "dof"})
        if (!j.contains(key))
            throw FormatError(path.string() + ": missing field " + key);
    RegionFile region;
    region.center = vector_from_json(j["center"], "center");
    region.sigma = matrix_from_json(j["sigma"], "sigma");
    if (!j["mu_p"].is_number() || !j["p"].is_number() ||
        !j["dof"].is_number_integer())
        throw FormatError(path.string() + ": mu_p/p/dof have wrong types");
    region.mu_p = j["mu_p"].get<double>();
    region.p = j["p"].get<double>();
    region.dof = j["dof"].get<int>();
    if (j.contains("boundary")) {
        if (!j["boundary"].is_array())
            throw FormatError(path.string() + ": boundary must be an array");
        std::vector<Eigen::Vector2d> points;
        for (const auto& item : j["boundary"]) {
            if (!item.is_array() || item.size() != 2 || !item[0].is_number() ||
                !item[1].is_number())
                throw FormatError(path.string() + ": boundary entries must be [x, y]");
            points.emplace_back(item[0].get<double>(), item[1].get<double>());
        }
        region.boundary = std::move(points);
    }
    return region;
}

void write_region(const fs::path& path, const RegionFile& region) {
    json j;
    j["format_version"] = 1;
    j["center"] = vector_to_json(region.center);
    j["sigma"] = matrix_to_json(region.sigma);
    j["mu_p"] = region.mu_p;
    j["p"] = region.p;
    j["dof"] = region.dof;
    if (region.boundary) {
        json boundary = json::array();
        for (const auto& point : *region.boundary)
            boundary.push_back(json::array({point.x(), point.y()}));
        j["boundary"] = std::move(boundary);
    }
    atomic_write(path, j.dump(2) + "\n");
}

namespace {

CampaignConfig campaign_config_from_json(const json& j, const fs::path& path) {
    static const std::vector<std::string> known = {
        "format_version", "n_systems", "n_x_range", "n_u", "n_y",
        "L", "L0", "Lp", "M", "sigma2", "p_levels", "predictors",
        "gamma_sources", "seed", "ic_mode", "construction",
        "allow_hankel_noise", "threads"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw FormatError(path.string() + ": unknown config field '" + key + "'");
    }

    CampaignConfig cfg;
    auto require_int = [&](const char* key) -> std::int64_t {
        if (!j.contains(key) || !j[key].is_number_integer())
            throw FormatError(path.string() + ": missing integer field " + key);
        return j[key].get<std::int64_t>();
    };
    cfg.n_systems = int(require_int("n_systems"));
    cfg.L = require_int("L");
    cfg.L0 = require_int("L0");
    cfg.Lp = require_int("Lp");
    cfg.M = require_int("M");
    if (!j.contains("sigma2") || !j["sigma2"].is_number())
        throw FormatError(path.string() + ": missing number field sigma2");
    cfg.sigma2 = j["sigma2"].get<double>();
    if (!j.contains("seed") || !j["seed"].is_number_integer())
        throw FormatError(path.string() + ": missing integer field seed");
    cfg.seed = j["seed"].get<std::uint64_t>();

    if (j.contains("n_x_range")) {
        const auto& r = j["n_x_range"];
        if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() ||
            !r[1].is_number_integer())
            throw FormatError(path.string() + ": n_x_range must be [lo, hi]");
        cfg.n_x_range = {r[0].get<Index>(), r[1].get<Index>()};
    }
    if (j.contains("n_u")) cfg.n_u = j["n_u"].get<Index>();
    if (j.contains("n_y")) cfg.n_y = j["n_y"].get<Index>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    if (j.contains("allow_hankel_noise"))
        cfg.allow_hankel_noise = j["allow_hankel_noise"].get<bool>();
    if (j.contains("p_levels")) {
        cfg.p_levels.clear();
        for (const auto& p : j["p_levels"]) {
            if (!p.is_number())
                throw FormatError(path.string() + ": p_levels must be numbers");
            cfg.p_levels.push_back(p.get<double>());
        }
    }
    if (j.contains("predictors")) {
        cfg.predictors.clear();
        for (const auto& token : j["predictors"]) {
            PredictorId id;
            if (!token.is_string() || !predictor_from_token(token.get<std::string>(), id))
                throw FormatError(path.string() + ": unknown predictor '" +
                                  token.dump() + "'");
            cfg.predictors.push_back(id);
        }
    }
    if (j.contains("gamma_sources")) {
        cfg.gamma_sources.clear();
        for (const auto& token : j["gamma_sources"]) {
            CrSource src;
            if (!token.is_string() || !cr_source_from_token(token.get<std::string>(), src))
                throw FormatError(path.string() + ": unknown gamma source '" +
                                  token.dump() + "'");
            cfg.gamma_sources.push_back(src);
        }
    }
    if (j.contains("ic_mode")) {
        const std::string mode = j["ic_mode"].get<std::string>();
        if (mode == "simulated_prefix")
            cfg.ic_mode = IcMode::SimulatedPrefix;
        else if (mode == "raw_gaussian")
            cfg.ic_mode = IcMode::RawGaussian;
        else
            throw FormatError(path.string() + ": unknown ic_mode '" + mode + "'");
    }
    if (j.contains("construction")) {
        const std::string c = j["construction"].get<std::string>();
        if (c == "page")
            cfg.construction = Construction::Page;
        else if (c == "hankel")
            cfg.construction = Construction::Hankel;
        else
            throw FormatError(path.string() + ": unknown construction '" + c + "'");
    }
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return cfg;
}

}  // namespace

CampaignConfig read_campaign_config(const fs::path& path) {
    const json j = parse_json(path);
    check_format_version(j, path);
    try {
        return campaign_config_from_json(j, path);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::string campaign_config_json(const CampaignConfig& config) {
    json j;
    j["format_version"] = 1;
    j["n_systems"] = config.n_systems;
    j["n_x_range"] = json::array({config.n_x_range.lo, config.n_x_range.hi});
    j["n_u"] = config.n_u;
    j["n_y"] = config.n_y;
    j["L"] = config.L;
    j["L0"] = config.L0;
    j["Lp"] = config.Lp;
    j["M"] = config.M;
    j["sigma2"] = config.sigma2;
    j["p_levels"] = config.p_levels;
    json predictors = json::array();
    for (PredictorId id : config.predictors) predictors.push_back(predictor_token(id));
    j["predictors"] = std::move(predictors);
    json sources = json::array();
    for (CrSource src : config.gamma_sources) sources.push_back(cr_source_token(src));
    j["gamma_sources"] = std::move(sources);
    j["seed"] = config.seed;
    j["ic_mode"] = config.ic_mode == IcMode::SimulatedPrefix ? "simulated_prefix"
                                                             : "raw_gaussian";
    j["construction"] =
        config.construction == Construction::Hankel ? "hankel" : "page";
    j["allow_hankel_noise"] = config.allow_hankel_noise;
    j["threads"] = config.threads;
    return j.dump();
}

void write_table_csv(const fs::path& path, const SummaryTable& table) {
    std::string text = "# format=1\n" + table.row_header;
    for (const auto& label : table.col_labels) text += "," + label;
    text += "\n";
    for (std::size_t r = 0; r < table.row_labels.size(); ++r) {
        text += table.row_labels[r];
        for (double value : table.cells[r]) text += "," + format_double(value);
        text += "\n";
    }
    atomic_write(path, text);
}

void write_campaign_outputs(const fs::path& dir, const CampaignReport& report) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string());

    const CampaignSummary summary = summarize(report);
    write_table_csv(dir / "coverage.csv", summary.coverage);
    write_table_csv(dir / "mse_comparison.csv", summary.mse_comparison);
    write_table_csv(dir / "predictor_mse.csv", summary.predictor_mse);

    const std::string config_text = campaign_config_json(report.config);
    json manifest;
    manifest["format_version"] = 1;
    manifest["seed"] = report.config.seed;
    manifest["config"] = json::parse(config_text);
    manifest["config_hash"] = sha1_blob_hex(config_text);
    manifest["regions_degenerate"] = report.regions_degenerate;
    atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace ddpred::io
